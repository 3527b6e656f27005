//! Continuum reference objects: Dirichlet Green's functions of the unit disk
//! (closed form) and unit square (sine series) with their mixed second
//! derivatives, Möbius automorphisms of the disk, and smooth bump test
//! functions with tensor quadrature.
//!
//! Green's functions use the convention `ΔG(·, y) = -δ_y`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::DomainSpec;
use crate::quadrature::{composite, uniform_breaks};

fn to_complex(x: &[f64]) -> Complex64 {
    Complex64::new(x[0], x[1])
}

fn check_disk_pair(x: &[f64], y: &[f64]) -> Result<(Complex64, Complex64)> {
    for p in [x, y] {
        if p.len() != 2 || p[0] * p[0] + p[1] * p[1] >= 1.0 {
            return Err(Error::OutsideDomain { point: p.to_vec() });
        }
    }
    if x == y {
        return Err(Error::CoincidentPoints);
    }
    Ok((to_complex(x), to_complex(y)))
}

/// `G(x,y) = (1/2π) ln(|1 - x ȳ| / |x - y|)` on the unit disk.
pub fn green_disk(x: &[f64], y: &[f64]) -> Result<f64> {
    let (x, y) = check_disk_pair(x, y)?;
    Ok((1.0 - x * y.conj()).norm().ln() / (2.0 * PI) - (x - y).norm().ln() / (2.0 * PI))
}

const ALPHA: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];

/// `∂_a^{(1)} ∂_b^{(2)} G(x,y)` on the unit disk (0-based directions):
/// `-(1/2π) Re[α_a ᾱ_b / (1 - x ȳ)^2 + α_a α_b / (x - y)^2]`, `α = (1, i)`.
pub fn green_disk_dd(x: &[f64], y: &[f64], a: usize, b: usize) -> Result<f64> {
    let (x, y) = check_disk_pair(x, y)?;
    let r = 1.0 - x * y.conj();
    let q = x - y;
    let v = ALPHA[a] * ALPHA[b].conj() / (r * r) + ALPHA[a] * ALPHA[b] / (q * q);
    Ok(-v.re / (2.0 * PI))
}

/// All four mixed derivatives on the disk, row-major `[a][b]`.
pub fn green_disk_dd_matrix(x: &[f64], y: &[f64]) -> Result<[f64; 4]> {
    let (x, y) = check_disk_pair(x, y)?;
    let r = 1.0 - x * y.conj();
    let q = x - y;
    let (r2, q2) = (r * r, q * q);
    let mut out = [0.0; 4];
    for a in 0..2 {
        for b in 0..2 {
            let v = ALPHA[a] * ALPHA[b].conj() / r2 + ALPHA[a] * ALPHA[b] / q2;
            out[a * 2 + b] = -v.re / (2.0 * PI);
        }
    }
    Ok(out)
}

/// `sinh(t) e^{-t}` and `cosh(t) e^{-t}` without overflow.
fn sh(t: f64) -> f64 {
    -0.5 * (-2.0 * t).exp_m1()
}

fn ch(t: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * t).exp())
}

/// Series for the unit square: expands in `sin(mπ x_p)` along axis `p` and
/// solves the 1D problem along the other axis `q`, whose separation controls
/// the exponential decay. `order = (n_xp, n_yp, n_xq, n_yq)` counts the
/// derivatives taken in each variable (each 0 or 1).
fn square_series(x: &[f64], y: &[f64], p: usize, order: [u8; 4]) -> f64 {
    let q = 1 - p;
    let (s, t) = (x[q], y[q]);
    let sep = (s - t).abs();
    // both q-derivatives at once contribute a delta on the diagonal, which
    // never occurs since sep > 0 whenever this axis is chosen
    let m_max = ((45.0 / (PI * sep.max(1e-3))).ceil() as usize).clamp(20, 200_000);
    let swap = s > t;
    let (lo, hi) = if swap { (t, s) } else { (s, t) };
    // derivative orders for the smaller/larger of (s, t)
    let (d_lo, d_hi) = if swap {
        (order[3], order[2])
    } else {
        (order[2], order[3])
    };
    let mut sum = 0.0;
    for m in 1..=m_max {
        let k = m as f64 * PI;
        let (sx, sy) = ((k * x[p]).sin(), (k * y[p]).sin());
        let fx = if order[0] == 1 { k * (k * x[p]).cos() } else { sx };
        let fy = if order[1] == 1 { k * (k * y[p]).cos() } else { sy };
        let a = k * lo;
        let bb = k * (1.0 - hi);
        // d/d(lo) sinh(k lo) = k cosh(k lo); d/d(hi) sinh(k(1-hi)) = -k cosh(k(1-hi))
        let fa = if d_lo == 1 { k * ch(a) } else { sh(a) };
        let fb = if d_hi == 1 { -k * ch(bb) } else { sh(bb) };
        let decay = (a + bb - k).exp();
        sum += 2.0 * fx * fy * decay * fa * fb / (k * sh(k));
        // stop on the envelope, not the term: sine factors can vanish
        if m > 20 && decay * k * k < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn check_square_pair(x: &[f64], y: &[f64]) -> Result<()> {
    for p in [x, y] {
        if p.len() != 2 || p.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
            return Err(Error::OutsideDomain { point: p.to_vec() });
        }
    }
    if x == y {
        return Err(Error::CoincidentPoints);
    }
    Ok(())
}

fn series_axis(x: &[f64], y: &[f64]) -> usize {
    // expand along the axis of smaller separation
    if (x[1] - y[1]).abs() >= (x[0] - y[0]).abs() {
        0
    } else {
        1
    }
}

/// Dirichlet Green's function of the unit square `(0,1)^2`.
pub fn green_square(x: &[f64], y: &[f64]) -> Result<f64> {
    check_square_pair(x, y)?;
    Ok(square_series(x, y, series_axis(x, y), [0; 4]))
}

/// `∂_a^{(1)} ∂_b^{(2)} G(x,y)` on the unit square (0-based directions).
pub fn green_square_dd(x: &[f64], y: &[f64], a: usize, b: usize) -> Result<f64> {
    check_square_pair(x, y)?;
    let p = series_axis(x, y);
    let mut order = [0u8; 4];
    order[if a == p { 0 } else { 2 }] = 1;
    order[if b == p { 1 } else { 3 }] = 1;
    Ok(square_series(x, y, p, order))
}

/// Domains with a continuum Green's function available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuumGreen {
    UnitDisk,
    UnitSquare,
}

impl ContinuumGreen {
    pub fn for_domain(spec: &DomainSpec) -> Result<Self> {
        match (spec.name(), spec.dim()) {
            ("unit_disk", 2) => Ok(ContinuumGreen::UnitDisk),
            ("unit_square", 2) => Ok(ContinuumGreen::UnitSquare),
            _ => Err(Error::InvalidDomain(format!(
                "no continuum Green's function for {} in d = {}",
                spec.name(),
                spec.dim()
            ))),
        }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            ContinuumGreen::UnitDisk => green_disk(x, y),
            ContinuumGreen::UnitSquare => green_square(x, y),
        }
    }

    pub fn dd(&self, x: &[f64], y: &[f64], a: usize, b: usize) -> Result<f64> {
        match self {
            ContinuumGreen::UnitDisk => green_disk_dd(x, y, a, b),
            ContinuumGreen::UnitSquare => green_square_dd(x, y, a, b),
        }
    }

    /// Row-major `[a][b]` matrix of mixed derivatives.
    pub fn dd_matrix(&self, x: &[f64], y: &[f64]) -> Result<[f64; 4]> {
        match self {
            ContinuumGreen::UnitDisk => green_disk_dd_matrix(x, y),
            ContinuumGreen::UnitSquare => {
                let mut out = [0.0; 4];
                for a in 0..2 {
                    for b in 0..2 {
                        out[a * 2 + b] = green_square_dd(x, y, a, b)?;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Disk automorphism `h(z) = (z - a) / (1 - ā z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: [f64; 2],
}

impl MobiusMap {
    pub fn new(a: [f64; 2]) -> Result<Self> {
        if a[0] * a[0] + a[1] * a[1] >= 1.0 {
            return Err(Error::OutsideDisk { re: a[0], im: a[1] });
        }
        Ok(MobiusMap { a })
    }

    fn param(&self) -> Complex64 {
        Complex64::new(self.a[0], self.a[1])
    }

    fn check(z: &[f64]) -> Result<Complex64> {
        if z[0] * z[0] + z[1] * z[1] >= 1.0 {
            return Err(Error::OutsideDisk { re: z[0], im: z[1] });
        }
        Ok(to_complex(z))
    }

    pub fn apply(&self, z: &[f64]) -> Result<[f64; 2]> {
        let z = Self::check(z)?;
        let a = self.param();
        let w = (z - a) / (1.0 - a.conj() * z);
        Ok([w.re, w.im])
    }

    /// `h'(z) = (1 - |a|^2) / (1 - ā z)^2`.
    pub fn derivative(&self, z: &[f64]) -> Result<Complex64> {
        let z = Self::check(z)?;
        let a = self.param();
        let den = 1.0 - a.conj() * z;
        Ok((1.0 - a.norm_sqr()) / (den * den))
    }
}

/// `exp(-1/(1 - r^2))` for `r < 1`, zero otherwise.
pub fn bump_profile(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Smooth compactly supported test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// Radial bump `exp(-1/(1 - |x-c|^2/r^2))`.
    Bump { center: Vec<f64>, radius: f64 },
    /// `Π_a exp(-1/(1 - (x_a-c_a)^2/r_a^2))`.
    ProductBump { center: Vec<f64>, radii: Vec<f64> },
    /// Radial bump times `p(x) = constant + Σ_a linear[a] (x_a - c_a) / r`.
    PolynomialBump {
        center: Vec<f64>,
        radius: f64,
        constant: f64,
        linear: Vec<f64>,
    },
}

impl TestFunction {
    pub fn bump(center: Vec<f64>, radius: f64) -> Self {
        TestFunction::Bump { center, radius }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            TestFunction::Bump { center, .. }
            | TestFunction::ProductBump { center, .. }
            | TestFunction::PolynomialBump { center, .. } => center,
        }
    }

    pub fn dim(&self) -> usize {
        self.center().len()
    }

    /// Radius of a ball about [`center`](Self::center) containing the support.
    pub fn support_radius(&self) -> f64 {
        match self {
            TestFunction::Bump { radius, .. } | TestFunction::PolynomialBump { radius, .. } => {
                *radius
            }
            TestFunction::ProductBump { radii, .. } => {
                radii.iter().map(|r| r * r).sum::<f64>().sqrt()
            }
        }
    }

    /// Half-widths of an axis-aligned box containing the support.
    pub fn support_half_widths(&self) -> Vec<f64> {
        match self {
            TestFunction::ProductBump { radii, .. } => radii.clone(),
            _ => vec![self.support_radius(); self.dim()],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Bump { center, radius } => {
                let r2 = dist2(x, center) / (radius * radius);
                bump_profile(r2)
            }
            TestFunction::ProductBump { center, radii } => x
                .iter()
                .zip(center)
                .zip(radii)
                .map(|((&xa, &ca), &ra)| bump_profile(((xa - ca) / ra).powi(2)))
                .product(),
            TestFunction::PolynomialBump {
                center,
                radius,
                constant,
                linear,
            } => {
                let r2 = dist2(x, center) / (radius * radius);
                if r2 >= 1.0 {
                    return 0.0;
                }
                let p: f64 = constant
                    + linear
                        .iter()
                        .zip(x.iter().zip(center))
                        .map(|(l, (xa, ca))| l * (xa - ca) / radius)
                        .sum::<f64>();
                p * bump_profile(r2)
            }
        }
    }

    /// Distance from the support ball to the complement of `U`.
    pub fn margin(&self, spec: &DomainSpec) -> f64 {
        spec.boundary_distance(self.center()) - self.support_radius()
    }

    /// Errors unless the support lies in `U` with margin strictly above
    /// `required`.
    pub fn check_support(&self, spec: &DomainSpec, required: f64) -> Result<()> {
        if self.dim() != spec.dim() {
            return Err(Error::InvalidConfig(
                "test function dimension differs from the domain".into(),
            ));
        }
        let margin = self.margin(spec);
        if margin > required {
            Ok(())
        } else {
            Err(Error::SupportTooClose { margin, required })
        }
    }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum()
}

const L2_TOL: f64 = 1e-10;

/// `∫_U f g dx` by tensor Gauss–Legendre over the intersection of the support
/// boxes, doubling the panel count until successive values agree to `1e-10`.
pub fn l2_inner(f: &TestFunction, g: &TestFunction, spec: &DomainSpec) -> Result<f64> {
    f.check_support(spec, 0.0)?;
    g.check_support(spec, 0.0)?;
    let d = spec.dim();
    let (fw, gw) = (f.support_half_widths(), g.support_half_widths());
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for a in 0..d {
        lo[a] = (f.center()[a] - fw[a]).max(g.center()[a] - gw[a]);
        hi[a] = (f.center()[a] + fw[a]).min(g.center()[a] + gw[a]);
        if lo[a] >= hi[a] {
            return Ok(0.0);
        }
    }
    let integrand = |x: &[f64]| f.eval(x) * g.eval(x);
    let mut prev = tensor_integrate(&integrand, &lo, &hi, 4);
    let mut diff = f64::INFINITY;
    for panels in [8, 16, 32, 64] {
        let cur = tensor_integrate(&integrand, &lo, &hi, panels);
        diff = (cur - prev).abs();
        if diff < L2_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { diff, tol: L2_TOL })
}

/// Tensor composite Gauss–Legendre with `panels` panels of 8 nodes per axis.
pub fn tensor_integrate(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], panels: usize) -> f64 {
    let d = lo.len();
    let rules: Vec<_> = (0..d)
        .map(|a| {
            let h = (hi[a] - lo[a]) / panels as f64;
            composite(&uniform_breaks(lo[a], hi[a], h * (1.0 + 1e-12)), 8)
        })
        .collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut sum = 0.0;
    loop {
        let mut w = 1.0;
        for a in 0..d {
            x[a] = rules[a].nodes[idx[a]];
            w *= rules[a].weights[idx[a]];
        }
        sum += w * f(&x);
        let mut a = d;
        loop {
            if a == 0 {
                return sum;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < rules[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIRS: [([f64; 2], [f64; 2]); 4] = [
        ([0.1, 0.2], [-0.3, 0.4]),
        ([0.5, -0.1], [0.2, 0.6]),
        ([-0.7, 0.1], [0.0, -0.2]),
        ([0.05, 0.0], [0.0, 0.05]),
    ];

    #[test]
    fn disk_green_symmetry_and_boundary() {
        for (x, y) in PAIRS {
            let a = green_disk(&x, &y).unwrap();
            let b = green_disk(&y, &x).unwrap();
            assert!((a - b).abs() < 1e-15);
            assert!(a > 0.0);
        }
        let x = [0.2, 0.1];
        let near = green_disk(&x, &[0.0, 1.0 - 1e-9]).unwrap();
        assert!(near.abs() < 1e-8);
        assert!(matches!(green_disk(&x, &x), Err(Error::CoincidentPoints)));
        assert!(matches!(
            green_disk(&x, &[1.0, 0.0]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn disk_green_is_harmonic() {
        let y = [0.1, -0.2];
        let x = [0.4, -0.2];
        let h = 1e-3;
        let g = |p: [f64; 2]| green_disk(&p, &y).unwrap();
        let lap = (g([x[0] + h, x[1]]) + g([x[0] - h, x[1]]) + g([x[0], x[1] + h])
            + g([x[0], x[1] - h])
            - 4.0 * g(x))
            / (h * h);
        assert!(lap.abs() < 1e-4, "{lap}");
    }

    fn fd_dd(g: impl Fn(&[f64], &[f64]) -> f64, x: [f64; 2], y: [f64; 2], a: usize, b: usize) -> f64 {
        // step scaled to the separation keeps the truncation error relative
        let sep = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        let h = 2e-4 * sep.min(1.0);
        let mut acc = 0.0;
        for (sx, sy, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
            let mut xp = x;
            let mut yp = y;
            xp[a] += sx * h;
            yp[b] += sy * h;
            acc += w * g(&xp, &yp);
        }
        acc / (4.0 * h * h)
    }

    #[test]
    fn disk_dd_matches_finite_differences() {
        for (x, y) in PAIRS {
            for a in 0..2 {
                for b in 0..2 {
                    let exact = green_disk_dd(&x, &y, a, b).unwrap();
                    let fd = fd_dd(|p, q| green_disk(p, q).unwrap(), x, y, a, b);
                    let scale = 1.0 / (2.0 * PI * dist2(&x, &y));
                    assert!(
                        (exact - fd).abs() <= 1e-6 * scale,
                        "{x:?} {y:?} {a}{b}: {exact} vs {fd}"
                    );
                    let swapped = green_disk_dd(&y, &x, b, a).unwrap();
                    assert!((exact - swapped).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn disk_dd_rotation_equivariance() {
        // rotation by π/2: (x1, x2) -> (-x2, x1), so ∂_1 -> ∂_2 and ∂_2 -> -∂_1
        let rot = |p: [f64; 2]| [-p[1], p[0]];
        for (x, y) in PAIRS {
            let m = green_disk_dd_matrix(&x, &y).unwrap();
            let r = green_disk_dd_matrix(&rot(x), &rot(y)).unwrap();
            assert!((r[3] - m[0]).abs() < 1e-12);
            assert!((r[0] - m[3]).abs() < 1e-12);
            assert!((r[1] + m[2]).abs() < 1e-12);
            assert!((r[2] + m[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn square_green_checks() {
        let pts = [
            ([0.3, 0.4], [0.6, 0.5]),
            ([0.2, 0.7], [0.2, 0.3]),
            ([0.5, 0.5], [0.8, 0.5]),
            ([0.45, 0.3], [0.55, 0.35]),
        ];
        for (x, y) in pts {
            let a = green_square(&x, &y).unwrap();
            assert!((a - green_square(&y, &x).unwrap()).abs() < 1e-13);
            for da in 0..2 {
                for db in 0..2 {
                    let exact = green_square_dd(&x, &y, da, db).unwrap();
                    let fd = fd_dd(|p, q| green_square(p, q).unwrap(), x, y, da, db);
                    assert!(
                        (exact - fd).abs() <= 1e-6 * exact.abs().max(1e-2),
                        "{x:?} {y:?} {da}{db}: {exact} vs {fd}"
                    );
                }
            }
        }
        // near the centre the square and disk (radius 1/2) kernels have the
        // same logarithmic singularity
        let x = [0.5, 0.5];
        let y = [0.5 + 1e-4, 0.5];
        let expect = -(1e-4f64).ln() / (2.0 * PI);
        assert!((green_square(&x, &y).unwrap() - expect).abs() < 0.2);
        let h = 1e-3;
        let yy = [0.3, 0.6];
        let xx = [0.6, 0.45];
        let g = |p: [f64; 2]| green_square(&p, &yy).unwrap();
        let lap = (g([xx[0] + h, xx[1]]) + g([xx[0] - h, xx[1]]) + g([xx[0], xx[1] + h])
            + g([xx[0], xx[1] - h])
            - 4.0 * g(xx))
            / (h * h);
        assert!(lap.abs() < 1e-4, "{lap}");
    }

    #[test]
    fn mobius_basics() {
        let id = MobiusMap::new([0.0, 0.0]).unwrap();
        let z = [0.3, -0.4];
        assert_eq!(id.apply(&z).unwrap(), z);
        assert!((id.derivative(&z).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let h = MobiusMap::new([0.3, 0.2]).unwrap();
        let w = h.apply(&[0.3, 0.2]).unwrap();
        assert!(w[0].abs() < 1e-15 && w[1].abs() < 1e-15);
        assert!((h.derivative(&[0.0, 0.0]).unwrap().norm() - (1.0 - 0.13)).abs() < 1e-15);
        assert!(MobiusMap::new([1.0, 0.0]).is_err());
        assert!(matches!(h.apply(&[1.0, 0.5]), Err(Error::OutsideDisk { .. })));
    }

    #[test]
    fn conformal_invariance_of_disk_green() {
        for a in [[0.2, 0.0], [0.0, 0.4], [-0.3, 0.25]] {
            let h = MobiusMap::new(a).unwrap();
            for (x, y) in PAIRS {
                let (hx, hy) = (h.apply(&x).unwrap(), h.apply(&y).unwrap());
                let g = green_disk(&x, &y).unwrap();
                let gh = green_disk(&hx, &hy).unwrap();
                assert!((g - gh).abs() < 1e-10);
                let s = |m: [f64; 4]| m.iter().map(|v| v * v).sum::<f64>();
                let lhs = s(green_disk_dd_matrix(&hx, &hy).unwrap())
                    * h.derivative(&x).unwrap().norm_sqr()
                    * h.derivative(&y).unwrap().norm_sqr();
                let rhs = s(green_disk_dd_matrix(&x, &y).unwrap());
                assert!((lhs - rhs).abs() < 1e-8 * rhs.max(1.0));
            }
        }
    }

    #[test]
    fn l2_inner_products() {
        let disk = DomainSpec::unit_disk(2).unwrap();
        let f = TestFunction::bump(vec![0.0, 0.0], 0.5);
        let v = l2_inner(&f, &f, &disk).unwrap();
        // radial: ∫ exp(-2/(1-r^2)) 2πr dr scaled by 0.25
        let radial = composite(&uniform_breaks(0.0, 1.0, 1.0 / 64.0), 12)
            .integrate(|r| (-2.0 / (1.0 - r * r)).exp() * 2.0 * PI * r);
        assert!((v - 0.25 * radial).abs() < 1e-10, "{v}");
        let g = TestFunction::bump(vec![0.6, 0.0], 0.3);
        let h = TestFunction::bump(vec![-0.5, 0.0], 0.3);
        assert_eq!(l2_inner(&g, &h, &disk).unwrap(), 0.0);
        let p = TestFunction::PolynomialBump {
            center: vec![0.1, 0.0],
            radius: 0.4,
            constant: 1.0,
            linear: vec![0.5, -0.2],
        };
        let a = l2_inner(&f, &p, &disk).unwrap();
        let b = l2_inner(&p, &f, &disk).unwrap();
        assert!((a - b).abs() < 1e-14);
        let far = TestFunction::bump(vec![0.9, 0.0], 0.3);
        assert!(matches!(
            l2_inner(&far, &f, &disk),
            Err(Error::SupportTooClose { .. })
        ));
    }

    #[test]
    fn test_function_json() {
        let f: TestFunction =
            serde_json::from_str(r#"{"kind":"bump","center":[0.5,0.5],"radius":0.25}"#).unwrap();
        assert_eq!(f, TestFunction::bump(vec![0.5, 0.5], 0.25));
        assert_eq!(f.eval(&[0.5, 0.5]), (-1.0f64).exp());
        assert_eq!(f.eval(&[0.76, 0.5]), 0.0);
        let pb = TestFunction::ProductBump {
            center: vec![0.5, 0.5],
            radii: vec![0.2, 0.1],
        };
        assert!((pb.support_radius() - 0.05f64.sqrt()).abs() < 1e-15);
        assert_eq!(pb.eval(&[0.5, 0.61]), 0.0);
    }
}
