//! Monte Carlo sampling of the zero-boundary DGFF and of the gradient-squared
//! field, pairings with test functions, and k-statistic cumulant estimates.
//!
//! Samples use the precision factor: with `-Δ_V = L Lᵀ` (the factor already
//! held by the [`GreenTable`]), `Γ = L^{-T} z` has covariance `G` and costs
//! one envelope back-substitution. Replicate `r` draws its normals from a
//! ChaCha8 stream `(seed, r)` in vertex order, so results do not depend on
//! the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::continuum::TestFunction;
use crate::error::{Error, Result};
use crate::greens::{solve_green, GreenTable};
use crate::lattice::{discretize, DomainSpec, LatticeDomain};
use crate::quadrature::composite;

/// Minimum replicate count accepted by [`mc_cumulants`].
pub const MIN_REPLICATES: usize = 100;

/// One field realization; `phi` is empty until [`phi_field`] fills it.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub gamma: Vec<f64>,
    pub phi: Vec<f64>,
    /// Vertices with at least one forward neighbour outside the domain,
    /// where the gradient uses the exterior value `Γ = 0`.
    pub boundary: Vec<bool>,
}

fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn draw_gamma(green: &GreenTable, seed: u64, replicate: u64) -> Vec<f64> {
    let mut rng = replicate_rng(seed, replicate);
    let mut z: Vec<f64> = (0..green.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    green.cholesky().backward(&mut z);
    z
}

fn boundary_flags(domain: &LatticeDomain) -> Vec<bool> {
    (0..domain.len())
        .map(|x| (0..domain.dim()).any(|i| domain.neighbor(x, i, 1).is_none()))
        .collect()
}

/// `Γ` for replicate 0 of `seed`.
pub fn sample_dgff(green: &GreenTable, seed: u64) -> Result<FieldSample> {
    sample_dgff_replicate(green, seed, 0)
}

pub fn sample_dgff_replicate(green: &GreenTable, seed: u64, replicate: u64) -> Result<FieldSample> {
    if green.is_empty() {
        return Err(Error::FactorizationFailed { row: 0 });
    }
    Ok(FieldSample {
        gamma: draw_gamma(green, seed, replicate),
        phi: Vec::new(),
        boundary: boundary_flags(green.domain()),
    })
}

/// Exact Wick subtraction `∇_i^{(1)}∇_i^{(2)} G(x,x)` per vertex and
/// direction, with the neighbour table used to form gradients.
#[derive(Clone, Debug)]
pub struct WickField {
    d: usize,
    diag: Vec<f64>,
    next: Vec<Option<usize>>,
}

impl WickField {
    pub fn new(green: &GreenTable) -> Self {
        let dom = green.domain();
        let d = dom.dim();
        let n = dom.len();
        let all: Vec<usize> = (0..n).collect();
        let cols: Vec<usize> = all.iter().flat_map(|&w| green.stencil_columns(w)).collect();
        green.prefetch(&cols);
        let mut diag = Vec::with_capacity(n * d);
        let mut next = Vec::with_capacity(n * d);
        for x in 0..n {
            let b = green.grad_block(x, x);
            for i in 0..d {
                diag.push(b[i * d + i]);
                next.push(dom.neighbor(x, i, 1));
            }
        }
        WickField { d, diag, next }
    }

    /// `Φ(x) = Σ_i ((Γ(x+e_i) - Γ(x))² - ∇_i∇_i G(x,x))`.
    pub fn phi(&self, gamma: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..gamma.len())
            .map(|x| {
                (0..d)
                    .map(|i| {
                        let up = self.next[x * d + i].map_or(0.0, |y| gamma[y]);
                        (up - gamma[x]).powi(2) - self.diag[x * d + i]
                    })
                    .sum()
            })
            .collect()
    }
}

/// Fills `sample.phi`. For many replicates build one [`WickField`] instead.
pub fn phi_field(mut sample: FieldSample, green: &GreenTable) -> FieldSample {
    sample.phi = WickField::new(green).phi(&sample.gamma);
    sample
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    /// `∫_U Φ(⌊x/ε⌋) f(x) dx`.
    Integral,
    /// `Σ_v f(εv) Φ(v)`.
    Sum,
}

/// Sparse weights `w_v` with `⟨Φ, f⟩ = Σ_v w_v Φ(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingWeights {
    pub index: Vec<usize>,
    pub weight: Vec<f64>,
}

impl PairingWeights {
    pub fn new(domain: &LatticeDomain, f: &TestFunction, mode: PairingMode) -> Result<Self> {
        let eps = domain.eps();
        let d = domain.dim();
        f.check_support(domain.spec(), eps * (d as f64).sqrt())?;
        // cell A_v = ε(v + [0,1)^d); 4 Gauss nodes per axis
        let rule = composite(&[0.0, 1.0], 4);
        let mut index = Vec::new();
        let mut weight = Vec::new();
        let mut x = vec![0.0; d];
        for v in 0..domain.len() {
            let corner = domain.position(v);
            let w = match mode {
                PairingMode::Sum => f.eval(&corner),
                PairingMode::Integral => {
                    let mut acc = 0.0;
                    let m = rule.len();
                    for flat in 0..m.pow(d as u32) {
                        let mut rem = flat;
                        let mut wt = eps.powi(d as i32);
                        for a in 0..d {
                            let q = rem % m;
                            rem /= m;
                            x[a] = corner[a] + eps * rule.nodes[q];
                            wt *= rule.weights[q];
                        }
                        acc += wt * f.eval(&x);
                    }
                    acc
                }
            };
            if w != 0.0 {
                index.push(v);
                weight.push(w);
            }
        }
        Ok(PairingWeights { index, weight })
    }

    pub fn apply(&self, phi: &[f64]) -> f64 {
        self.index.iter().zip(&self.weight).map(|(&v, &w)| w * phi[v]).sum()
    }
}

/// `⟨Φ, f⟩` in the integral or sum sense for one sample with `phi` filled.
pub fn pair_with_test_function(
    sample: &FieldSample,
    domain: &LatticeDomain,
    f: &TestFunction,
    mode: PairingMode,
) -> Result<f64> {
    if sample.phi.len() != domain.len() {
        return Err(Error::InvalidConfig("sample has no phi values for this domain".into()));
    }
    Ok(PairingWeights::new(domain, f, mode)?.apply(&sample.phi))
}

/// Pairings of `replicates` independent samples with every weight set,
/// returned replicate-major (`out[r][f]`). Order is fixed regardless of the
/// thread count.
pub fn sample_pairings(
    green: &GreenTable,
    weights: &[PairingWeights],
    replicates: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let wick = WickField::new(green);
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let phi = wick.phi(&draw_gamma(green, seed, r));
            weights.iter().map(|w| w.apply(&phi)).collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub statistic: String,
    pub value: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// Sample mean with standard error `s / √N`.
pub fn mean_estimate(name: &str, xs: &[f64], seed: u64) -> Result<McEstimate> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientReplicates { n, min: 2 });
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(McEstimate {
        statistic: name.to_string(),
        value: mean,
        std_error: (var / n as f64).sqrt(),
        replicates: n,
        seed,
    })
}

/// Unbiased k-statistic of order 1..=4 from the power sums `s[r] = Σ x^r`
/// of `n` values.
fn k_statistic(order: usize, n: f64, s: &[f64; 5]) -> f64 {
    let (s1, s2, s3, s4) = (s[1], s[2], s[3], s[4]);
    match order {
        1 => s1 / n,
        2 => (n * s2 - s1 * s1) / (n * (n - 1.0)),
        3 => (2.0 * s1.powi(3) - 3.0 * n * s1 * s2 + n * n * s3) / (n * (n - 1.0) * (n - 2.0)),
        4 => {
            (-6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2 - 3.0 * n * (n - 1.0) * s2 * s2
                - 4.0 * n * (n + 1.0) * s1 * s3
                + n * n * (n + 1.0) * s4)
                / (n * (n - 1.0) * (n - 2.0) * (n - 3.0))
        }
        _ => unreachable!("orders above 4 are rejected earlier"),
    }
}

fn jackknife_se(full_leave_one_out: impl Iterator<Item = f64>, n: usize) -> f64 {
    let vals: Vec<f64> = full_leave_one_out.collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let ss: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum();
    ((n - 1) as f64 / n as f64 * ss).sqrt()
}

/// k-statistics of orders `1..=max_order` with jackknife standard errors.
pub fn k_statistics(name: &str, xs: &[f64], max_order: usize, seed: u64) -> Result<Vec<McEstimate>> {
    let n = xs.len();
    if !(1..=4).contains(&max_order) {
        return Err(Error::InvalidConfig("cumulant orders must lie in 1..=4".into()));
    }
    if n < max_order.max(2) + 1 {
        return Err(Error::InsufficientReplicates { n, min: max_order.max(2) + 1 });
    }
    // k_2..k_4 are shift invariant; centring keeps the power sums well scaled
    let shift = xs.iter().sum::<f64>() / n as f64;
    let mut s = [0.0; 5];
    for &x in xs {
        let c = x - shift;
        let mut p = 1.0;
        for slot in s.iter_mut() {
            *slot += p;
            p *= c;
        }
    }
    let nf = n as f64;
    Ok((1..=max_order)
        .map(|order| {
            let offset = if order == 1 { shift } else { 0.0 };
            let value = k_statistic(order, nf, &s) + offset;
            let loo = xs.iter().map(|&x| {
                let c = x - shift;
                let mut t = s;
                let mut p = 1.0;
                for slot in t.iter_mut() {
                    *slot -= p;
                    p *= c;
                }
                k_statistic(order, nf - 1.0, &t) + offset
            });
            McEstimate {
                statistic: format!("{name}.k{order}"),
                value,
                std_error: jackknife_se(loo, n),
                replicates: n,
                seed,
            }
        })
        .collect())
}

/// Unbiased sample covariance with a jackknife standard error.
pub fn covariance_estimate(name: &str, xs: &[f64], ys: &[f64], seed: u64) -> Result<McEstimate> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(Error::InsufficientReplicates { n, min: 3 });
    }
    let (mx, my) = (
        xs.iter().sum::<f64>() / n as f64,
        ys.iter().sum::<f64>() / n as f64,
    );
    let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sx += x - mx;
        sy += y - my;
        sxy += (x - mx) * (y - my);
    }
    let cov = |m: f64, sx: f64, sy: f64, sxy: f64| (sxy - sx * sy / m) / (m - 1.0);
    let nf = n as f64;
    let loo = xs.iter().zip(ys).map(|(&x, &y)| {
        let (cx, cy) = (x - mx, y - my);
        cov(nf - 1.0, sx - cx, sy - cy, sxy - cx * cy)
    });
    Ok(McEstimate {
        statistic: name.to_string(),
        value: cov(nf, sx, sy, sxy),
        std_error: jackknife_se(loo, n),
        replicates: n,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub domain: DomainSpec,
    pub eps: f64,
    pub functions: Vec<TestFunction>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_orders")]
    pub max_order: usize,
}

fn default_orders() -> usize {
    4
}

/// Per-replicate values of `ε^{d/2}⟨Φ_ε, f⟩_S` for each configured function.
pub fn mc_pairings(config: &McConfig) -> Result<Vec<Vec<f64>>> {
    if config.replicates < MIN_REPLICATES {
        return Err(Error::InsufficientReplicates {
            n: config.replicates,
            min: MIN_REPLICATES,
        });
    }
    let domain = discretize(&config.domain, config.eps)?;
    let green = solve_green(&domain)?;
    let scale = config.eps.powf(domain.dim() as f64 / 2.0);
    let weights = config
        .functions
        .iter()
        .map(|f| {
            let mut w = PairingWeights::new(&domain, f, PairingMode::Sum)?;
            w.weight.iter_mut().for_each(|x| *x *= scale);
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sample_pairings(&green, &weights, config.replicates, config.seed))
}

/// k-statistics of `ε^{d/2}⟨Φ_ε, f⟩_S` up to `max_order` for every function,
/// named `f{id}.k{order}`.
pub fn mc_cumulants(config: &McConfig) -> Result<Vec<McEstimate>> {
    let values = mc_pairings(config)?;
    let mut out = Vec::new();
    for f in 0..config.functions.len() {
        let xs: Vec<f64> = values.iter().map(|row| row[f]).collect();
        out.extend(k_statistics(&format!("f{f}"), &xs, config.max_order, config.seed)?);
    }
    Ok(out)
}

/// Writes `replicate,f_id,value` rows.
pub fn write_pairings_csv(path: &Path, values: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["replicate", "f_id", "value"])?;
    for (r, row) in values.iter().enumerate() {
        for (f, v) in row.iter().enumerate() {
            w.write_record([r.to_string(), f.to_string(), format!("{v:.16e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}
