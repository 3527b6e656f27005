//! Exact Dirichlet Green's function of a lattice box via the discrete sine
//! transform.
//!
//! The box of radius `N` has interior `{-(N-1), ..., N-1}^d` and absorbing
//! boundary at `|x_a| = N`. Its Laplacian is diagonalized by the sine modes
//! `sin(π m k / 2N)` with `m = x + N`, so each column of `G` is one DST-I per
//! axis. FFT lengths are `4N`, so `N` with small prime factors is fastest.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Columns `G_box(·, y)` of the box Green's function for a few sources `y`.
#[derive(Clone, Debug)]
pub struct BoxGreen {
    d: usize,
    radius: i64,
    side: usize,
    columns: Vec<Vec<f64>>,
}

impl BoxGreen {
    /// Solves for every source in `sources` on the box of radius `radius`.
    pub fn solve(d: usize, radius: usize, sources: &[Vec<i64>]) -> Result<BoxGreen> {
        if radius < 2 {
            return Err(Error::InvalidConfig("box radius must be at least 2".into()));
        }
        let side = 2 * radius - 1;
        let total = side
            .checked_pow(d as u32)
            .filter(|&t| t <= 1 << 28)
            .ok_or_else(|| Error::InvalidConfig(format!("box of radius {radius} too large in d = {d}")))?;
        let period = 2 * radius;
        let sin_table: Vec<f64> = (0..2 * period)
            .map(|t| (std::f64::consts::PI * t as f64 / period as f64).sin())
            .collect();
        let sine = |m: usize, k: usize| sin_table[(m * k) % (2 * period)];
        let cos_k: Vec<f64> = (0..=side)
            .map(|k| (std::f64::consts::PI * k as f64 / period as f64).cos())
            .collect();

        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(2 * period);
        let norm = (2.0 / period as f64).powi(d as i32);

        let mut columns = Vec::with_capacity(sources.len());
        for y in sources {
            if y.len() != d || y.iter().any(|&c| c.abs() >= radius as i64) {
                return Err(Error::InvalidConfig(format!(
                    "source {y:?} is not inside the box of radius {radius}"
                )));
            }
            let m: Vec<usize> = y.iter().map(|&c| (c + radius as i64) as usize).collect();
            let mut data = vec![0.0; total];
            let mut k = vec![0usize; d];
            for (flat, slot) in data.iter_mut().enumerate() {
                let mut rem = flat;
                for a in (0..d).rev() {
                    k[a] = rem % side + 1;
                    rem /= side;
                }
                let mut num = norm;
                let mut lambda = 0.0;
                for a in 0..d {
                    num *= sine(m[a], k[a]);
                    lambda += 1.0 - cos_k[k[a]];
                }
                *slot = num / (lambda / d as f64);
            }
            for axis in 0..d {
                dst1_axis(&mut data, side, d, axis, fft.as_ref());
            }
            columns.push(data);
        }
        Ok(BoxGreen {
            d,
            radius: radius as i64,
            side,
            columns,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius as usize
    }

    /// `G_box(x, sources[s])`, zero outside the box interior.
    pub fn value(&self, s: usize, x: &[i64]) -> f64 {
        let mut flat = 0usize;
        for &c in x.iter().take(self.d) {
            if c.abs() >= self.radius {
                return 0.0;
            }
            flat = flat * self.side + (c + self.radius - 1) as usize;
        }
        self.columns[s][flat]
    }
}

/// Unnormalized DST-I `y_m = Σ_k c_k sin(π m k / (n+1))` along one axis of an
/// `n^d` row-major array, through an FFT of length `2(n+1)`.
fn dst1_axis(data: &mut [f64], n: usize, d: usize, axis: usize, fft: &dyn rustfft::Fft<f64>) {
    let len = 2 * (n + 1);
    let stride = n.pow((d - 1 - axis) as u32);
    let outer = data.len() / (n * stride);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * n * stride + inner;
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for k in 0..n {
                let v = data[base + k * stride];
                buf[k + 1].re = v;
                buf[len - k - 1].re = -v;
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for mm in 0..n {
                data[base + mm * stride] = -0.5 * buf[mm + 1].im;
            }
        }
    }
}
