//! Exact k-point moments and joint cumulants of the gradient-squared field,
//! their continuum limits, two brute-force Gaussian oracles, cumulants of
//! test-function pairings, and the sandpile cumulant map.
//!
//! Writing `D(x,y)[i][j] = ∇_i^{(1)} ∇_j^{(2)} G(x,y)`, the moment is
//!
//! ```text
//! E[Π_j Φ(x_j)] = Σ_{π singleton-free} Π_{B∈π} 2^{|B|-1} Σ_{σ full cycle of B}
//!                 Σ_{η: B→[d]} Π_{j∈B} D(x_j, x_σ(j))[η(j)][η(σ(j))]
//! ```
//!
//! and the joint cumulant is the single-block term.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use twofloat::TwoFloat;

use crate::combinatorics::{
    direction_assignments, full_cycles_no_fixed, intra_group, partitions_no_singletons,
    perfect_matchings, Matching,
};
use crate::continuum::ContinuumGreen;
use crate::error::{Error, Result};
use crate::greens::GreenTable;
use crate::lattice::{floor_point, LatticePoint};

/// Default largest `k` accepted by the exact evaluators.
pub const DEFAULT_MAX_K: usize = 7;
/// Largest `k` for the Feynman-diagram oracle.
pub const FEYNMAN_MAX_K: usize = 6;
/// Largest `k` for the subset-expansion oracle.
pub const SUBSET_MAX_K: usize = 5;

/// `C = 2/π - 4/π²` of the height-one field correspondence.
pub const SANDPILE_C: f64 = 2.0 / PI - 4.0 / (PI * PI);

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

fn csum(iter: impl IntoIterator<Item = f64>) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Moment,
    Cumulant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Discrete,
    ContinuumLimit,
}

/// Points are continuum coordinates (mapped by `floor(x/eps)` on the
/// discrete side) unless `lattice` is set, in which case they are integer
/// lattice coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRequest {
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub lattice: bool,
    pub mode: Mode,
    pub side: Side,
}

/// One summand of a correlation value: a partition (moment) or a cycle
/// (cumulant), as 0-based point labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: Vec<Vec<usize>>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub k: usize,
    pub eps: Option<f64>,
    pub domain: String,
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub value: f64,
    pub decomposition: Option<Vec<Term>>,
    pub metadata: Metadata,
}

/// Source of the `d x d` blocks `D(x_p, x_q)` for a fixed list of points.
struct Blocks {
    d: usize,
    k: usize,
    data: Vec<f64>,
}

impl Blocks {
    fn get(&self, p: usize, q: usize) -> &[f64] {
        let dd = self.d * self.d;
        let at = (p * self.k + q) * dd;
        &self.data[at..at + dd]
    }

    fn discrete(green: &GreenTable, points: &[LatticePoint]) -> Result<Blocks> {
        let idx = resolve(green, points)?;
        let d = green.dim();
        let k = idx.len();
        let cols: Vec<usize> = idx.iter().flat_map(|&w| green.stencil_columns(w)).collect();
        green.prefetch(&cols);
        let mut data = Vec::with_capacity(k * k * d * d);
        for &p in &idx {
            for &q in &idx {
                data.extend(green.grad_block(p, q));
            }
        }
        Ok(Blocks { d, k, data })
    }

    /// Continuum blocks; diagonal blocks are never used and left at zero.
    fn continuum(green: ContinuumGreen, points: &[Vec<f64>]) -> Result<Blocks> {
        let k = points.len();
        for p in 0..k {
            for q in 0..p {
                if points[p] == points[q] {
                    return Err(Error::CoincidentPoints);
                }
            }
        }
        let mut data = vec![0.0; k * k * 4];
        for p in 0..k {
            for q in 0..k {
                if p != q {
                    let m = green.dd_matrix(&points[p], &points[q])?;
                    data[(p * k + q) * 4..(p * k + q + 1) * 4].copy_from_slice(&m);
                }
            }
        }
        Ok(Blocks { d: 2, k, data })
    }
}

fn resolve(green: &GreenTable, points: &[LatticePoint]) -> Result<Vec<usize>> {
    points
        .iter()
        .map(|p| {
            green
                .domain()
                .index_of(&p.0)
                .ok_or_else(|| Error::PointOutsideDomain { point: p.0.clone() })
        })
        .collect()
}

fn check_budget(k: usize, max: usize) -> Result<()> {
    if k > max {
        Err(Error::ComplexityBudgetExceeded { k, max })
    } else {
        Ok(())
    }
}

/// `Σ_η Π_{j∈B} D(x_j, x_σ(j))[η(j)][η(σ(j))]` for one cycle, enumerating
/// the direction maps literally.
fn cycle_value(blocks: &Blocks, cycle: &[usize]) -> f64 {
    let d = blocks.d;
    let n = cycle.len();
    csum(direction_assignments(n, d).map(|eta| {
        let mut prod = 1.0;
        for p in 0..n {
            let q = (p + 1) % n;
            prod *= blocks.get(cycle[p], cycle[q])[eta.eta[p] * d + eta.eta[q]];
        }
        prod
    }))
}

/// `2^{|B|-1} Σ_σ Σ_η Π ...` for a block, with the per-cycle terms.
fn block_cumulant(blocks: &Blocks, block: &[usize]) -> (f64, Vec<Term>) {
    let weight = 2f64.powi(block.len() as i32 - 1);
    let terms: Vec<Term> = full_cycles_no_fixed(block)
        .map(|c| Term {
            value: weight * cycle_value(blocks, &c.cycle),
            label: vec![c.cycle],
        })
        .collect();
    (csum(terms.iter().map(|t| t.value)), terms)
}

fn moment_from_blocks(blocks: &Blocks) -> (f64, Vec<Term>) {
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let terms: Vec<Term> = partitions_no_singletons(blocks.k)
        .map(|p| {
            let mut prod = 1.0;
            for b in &p.blocks {
                let v = *cache
                    .entry(b.clone())
                    .or_insert_with(|| block_cumulant(blocks, b).0);
                prod *= v;
            }
            Term {
                label: p.blocks,
                value: prod,
            }
        })
        .collect();
    (csum(terms.iter().map(|t| t.value)), terms)
}

fn metadata(green: &GreenTable, k: usize, method: &str) -> Metadata {
    Metadata {
        k,
        eps: Some(green.domain().eps()),
        domain: green.domain().spec().name().to_string(),
        method: method.to_string(),
    }
}

/// `E[Π_j Φ(x_j)]` by the partition / cycle / direction sum, with
/// [`DEFAULT_MAX_K`] as complexity budget.
pub fn kpoint_exact(green: &GreenTable, points: &[LatticePoint]) -> Result<CorrelationResult> {
    kpoint_exact_with_budget(green, points, DEFAULT_MAX_K)
}

pub fn kpoint_exact_with_budget(
    green: &GreenTable,
    points: &[LatticePoint],
    max_k: usize,
) -> Result<CorrelationResult> {
    check_budget(points.len(), max_k)?;
    let blocks = Blocks::discrete(green, points)?;
    let (value, terms) = moment_from_blocks(&blocks);
    Ok(CorrelationResult {
        value,
        decomposition: Some(terms),
        metadata: metadata(green, points.len(), "partition_cycle_sum"),
    })
}

/// Joint cumulant `κ(Φ(x_1), ..., Φ(x_l))`: the single-block term.
pub fn joint_cumulant_exact(green: &GreenTable, points: &[LatticePoint]) -> Result<CorrelationResult> {
    joint_cumulant_exact_with_budget(green, points, DEFAULT_MAX_K)
}

pub fn joint_cumulant_exact_with_budget(
    green: &GreenTable,
    points: &[LatticePoint],
    max_k: usize,
) -> Result<CorrelationResult> {
    check_budget(points.len(), max_k)?;
    let blocks = Blocks::discrete(green, points)?;
    let all: Vec<usize> = (0..points.len()).collect();
    let (value, terms) = block_cumulant(&blocks, &all);
    Ok(CorrelationResult {
        value,
        decomposition: Some(terms),
        metadata: metadata(green, points.len(), "cycle_sum"),
    })
}

/// Oracle: for each direction tuple, sums products of gradient covariances
/// over all perfect matchings of the `2k` factors with no pair inside one
/// point (complete Feynman diagrams of Wick-ordered squares).
pub fn kpoint_oracle_feynman(green: &GreenTable, points: &[LatticePoint]) -> Result<f64> {
    let k = points.len();
    check_budget(k, FEYNMAN_MAX_K)?;
    let blocks = Blocks::discrete(green, points)?;
    let d = blocks.d;
    let group: Vec<usize> = (0..2 * k).map(|e| e / 2).collect();
    let matchings: Vec<Matching> = perfect_matchings(2 * k, intra_group(group))?.collect();
    Ok(csum(direction_assignments(k, d).map(|dirs| {
        let cov = |a: usize, b: usize| {
            let (p, q) = (a / 2, b / 2);
            blocks.get(p, q)[dirs.eta[p] * d + dirs.eta[q]]
        };
        csum(
            matchings
                .iter()
                .map(|m| m.pairs.iter().map(|&(a, b)| cov(a, b)).product::<f64>()),
        )
    })))
}

/// Hafnian of the symmetric matrix `cov` restricted to `elems`.
fn hafnian(elems: &mut Vec<usize>, cov: &dyn Fn(usize, usize) -> TwoFloat) -> TwoFloat {
    if elems.is_empty() {
        return TwoFloat::from(1.0);
    }
    let first = elems.remove(0);
    let mut total = TwoFloat::from(0.0);
    for p in 0..elems.len() {
        let partner = elems.remove(p);
        total += cov(first, partner) * hafnian(elems, cov);
        elems.insert(p, partner);
    }
    elems.insert(0, first);
    total
}

/// Oracle: `E[Π_p (X_p² - σ_p²)]` expanded over subsets, each raw moment
/// `E[Π_{p∈S} X_p²]` evaluated by unrestricted Isserlis pairings.
///
/// The subset terms are orders of magnitude larger than their alternating
/// sum, so the expansion runs in double-double arithmetic.
pub fn kpoint_oracle_subset(green: &GreenTable, points: &[LatticePoint]) -> Result<f64> {
    let k = points.len();
    check_budget(k, SUBSET_MAX_K)?;
    let blocks = Blocks::discrete(green, points)?;
    let d = blocks.d;
    let mut total = TwoFloat::from(0.0);
    for dirs in direction_assignments(k, d) {
        let cov = |a: usize, b: usize| {
            let (p, q) = (a / 2, b / 2);
            TwoFloat::from(blocks.get(p, q)[dirs.eta[p] * d + dirs.eta[q]])
        };
        let var: Vec<TwoFloat> = (0..k).map(|p| cov(2 * p, 2 * p)).collect();
        for mask in 0u32..1 << k {
            let mut sign_part = TwoFloat::from(1.0);
            let mut elems = Vec::new();
            for p in 0..k {
                if mask & (1 << p) != 0 {
                    elems.push(2 * p);
                    elems.push(2 * p + 1);
                } else {
                    sign_part = -(sign_part * var[p]);
                }
            }
            total += sign_part * hafnian(&mut elems, &cov);
        }
    }
    Ok(f64::from(total))
}

fn check_distinct_interior(points: &[Vec<f64>]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidConfig("at least one point is required".into()));
    }
    Ok(())
}

/// `lim ε^{-dk} E[Π Φ_ε(⌊x_j/ε⌋)]` up to the lattice normalization constant,
/// i.e. the partition sum with `∂_a ∂_b G_U` of the unit disk.
pub fn kpoint_limit_continuum(points: &[Vec<f64>]) -> Result<f64> {
    kpoint_limit_in(ContinuumGreen::UnitDisk, points)
}

pub fn kpoint_limit_in(green: ContinuumGreen, points: &[Vec<f64>]) -> Result<f64> {
    check_distinct_interior(points)?;
    check_budget(points.len(), DEFAULT_MAX_K)?;
    let blocks = Blocks::continuum(green, points)?;
    Ok(moment_from_blocks(&blocks).0)
}

/// Limiting joint cumulant on the unit disk (single-cycle formula).
pub fn cumulant_limit_continuum(points: &[Vec<f64>]) -> Result<f64> {
    cumulant_limit_in(ContinuumGreen::UnitDisk, points)
}

pub fn cumulant_limit_in(green: ContinuumGreen, points: &[Vec<f64>]) -> Result<f64> {
    check_distinct_interior(points)?;
    check_budget(points.len(), DEFAULT_MAX_K)?;
    let blocks = Blocks::continuum(green, points)?;
    let all: Vec<usize> = (0..points.len()).collect();
    Ok(block_cumulant(&blocks, &all).0)
}

/// Predicted limiting height-one cumulant `-2 (C/2)^l κ`.
pub fn sandpile_cumulant_map(kappa_phi_limit: f64, ell: usize) -> Result<f64> {
    if ell < 2 {
        return Err(Error::InvalidConfig("sandpile map needs l >= 2".into()));
    }
    Ok(-2.0 * (SANDPILE_C / 2.0).powi(ell as i32) * kappa_phi_limit)
}

/// Evaluates a request. The discrete side needs `green`; the continuum side
/// uses `continuum`.
pub fn evaluate_request(
    req: &CorrelationRequest,
    green: Option<&GreenTable>,
    continuum: ContinuumGreen,
) -> Result<CorrelationResult> {
    let k = req.points.len();
    match req.side {
        Side::Discrete => {
            let green = green.ok_or_else(|| {
                Error::InvalidConfig("the discrete side needs a domain and eps".into())
            })?;
            let eps = green.domain().eps();
            let pts: Vec<LatticePoint> = req
                .points
                .iter()
                .map(|x| {
                    if req.lattice {
                        LatticePoint(x.iter().map(|&c| c.round() as i64).collect())
                    } else {
                        floor_point(x, eps)
                    }
                })
                .collect();
            match req.mode {
                Mode::Moment => kpoint_exact(green, &pts),
                Mode::Cumulant => joint_cumulant_exact(green, &pts),
            }
        }
        Side::ContinuumLimit => {
            if req.lattice {
                return Err(Error::InvalidConfig(
                    "continuum-limit requests take continuum points".into(),
                ));
            }
            let value = match req.mode {
                Mode::Moment => kpoint_limit_in(continuum, &req.points)?,
                Mode::Cumulant => cumulant_limit_in(continuum, &req.points)?,
            };
            Ok(CorrelationResult {
                value,
                decomposition: None,
                metadata: Metadata {
                    k,
                    eps: None,
                    domain: match continuum {
                        ContinuumGreen::UnitDisk => "unit_disk",
                        ContinuumGreen::UnitSquare => "unit_square",
                    }
                    .to_string(),
                    method: "continuum_partition_cycle_sum".into(),
                },
            })
        }
    }
}

/// Vertices where a weight function is nonzero, with the weights.
pub fn weighted_support(green: &GreenTable, f: &dyn Fn(&[f64]) -> f64) -> (Vec<usize>, Vec<f64>) {
    let dom = green.domain();
    let mut idx = Vec::new();
    let mut w = Vec::new();
    for i in 0..dom.len() {
        let v = f(&dom.position(i));
        if v != 0.0 {
            idx.push(i);
            w.push(v);
        }
    }
    (idx, w)
}

/// `(F 𝔇)` where `𝔇` is the gradient covariance over `idx` and `F` scales
/// the rows of vertex `p` by `w[p]`.
fn weighted_gradient_matrix(green: &GreenTable, idx: &[usize], w: &[f64]) -> Array2<f64> {
    let d = green.dim();
    let mut m = green.grad_covariance(idx);
    for (p, &wp) in w.iter().enumerate() {
        for i in 0..d {
            m.row_mut(p * d + i).mapv_inplace(|x| x * wp);
        }
    }
    m
}

fn trace_power(b: &Array2<f64>, n: usize) -> f64 {
    match n {
        0 => b.nrows() as f64,
        1 => b.diag().sum(),
        _ => {
            let half = n / 2;
            let mut p = b.clone();
            for _ in 1..half {
                p = p.dot(b);
            }
            // tr(B^n) = Σ_ij (B^h)_ij (B^{n-h})_ji
            let q = if n - half == half { p.clone() } else { p.dot(b) };
            csum(
                p.indexed_iter()
                    .map(|((i, j), &x)| x * q[[j, i]]),
            )
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// Exact `κ_n(Σ_v f(εv) Φ(v))` for `n ≥ 1` via
/// `κ_n = 2^{n-1} (n-1)! tr((F𝔇)^n)` (every full cycle contributes the same
/// trace). Multiply by `ε^{nd/2}` for the rescaled pairing.
pub fn pairing_cumulant_exact(green: &GreenTable, f: &dyn Fn(&[f64]) -> f64, n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let (idx, w) = weighted_support(green, f);
    if idx.is_empty() {
        return 0.0;
    }
    let b = weighted_gradient_matrix(green, &idx, &w);
    2f64.powi(n as i32 - 1) * factorial(n - 1) * trace_power(&b, n)
}

/// Exact cumulants of orders `2..=max_n` from one gradient-covariance matrix.
pub fn pairing_cumulants_exact(
    green: &GreenTable,
    f: &dyn Fn(&[f64]) -> f64,
    max_n: usize,
) -> Vec<f64> {
    let (idx, w) = weighted_support(green, f);
    let mut out = vec![0.0; max_n + 1];
    if idx.is_empty() {
        return out;
    }
    let b = weighted_gradient_matrix(green, &idx, &w);
    for (n, slot) in out.iter_mut().enumerate().skip(2) {
        *slot = 2f64.powi(n as i32 - 1) * factorial(n - 1) * trace_power(&b, n);
    }
    out
}

/// Exact `Cov(Σ f(εv) Φ(v), Σ g(εv) Φ(v)) = 2 tr(F𝔇 G𝔇)`.
pub fn pairing_covariance_exact(
    green: &GreenTable,
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
) -> f64 {
    let dom = green.domain();
    let mut idx = Vec::new();
    let mut wf = Vec::new();
    let mut wg = Vec::new();
    for i in 0..dom.len() {
        let x = dom.position(i);
        let (a, b) = (f(&x), g(&x));
        if a != 0.0 || b != 0.0 {
            idx.push(i);
            wf.push(a);
            wg.push(b);
        }
    }
    if idx.is_empty() {
        return 0.0;
    }
    let d = green.dim();
    let cov = green.grad_covariance(&idx);
    let mut bf = cov.clone();
    let mut bg = cov;
    for p in 0..idx.len() {
        for i in 0..d {
            bf.row_mut(p * d + i).mapv_inplace(|x| x * wf[p]);
            bg.row_mut(p * d + i).mapv_inplace(|x| x * wg[p]);
        }
    }
    2.0 * csum(bf.indexed_iter().map(|((i, j), &x)| x * bg[[j, i]]))
}

/// Brute-force `κ_n` of the pairing: sums [`joint_cumulant_exact`] over all
/// `n`-tuples of support vertices. Only for small domains.
pub fn pairing_cumulant_bruteforce(
    green: &GreenTable,
    f: &dyn Fn(&[f64]) -> f64,
    n: usize,
) -> Result<f64> {
    let (idx, w) = weighted_support(green, f);
    let m = idx.len();
    let dom = green.domain();
    let mut acc = CompensatedSum::default();
    let mut tuple = vec![0usize; n];
    if m == 0 {
        return Ok(0.0);
    }
    loop {
        let pts: Vec<LatticePoint> = tuple.iter().map(|&t| dom.vertex(idx[t]).clone()).collect();
        let weight: f64 = tuple.iter().map(|&t| w[t]).product();
        acc.add(weight * joint_cumulant_exact(green, &pts)?.value);
        let mut a = n;
        loop {
            if a == 0 {
                return Ok(acc.value());
            }
            a -= 1;
            tuple[a] += 1;
            if tuple[a] < m {
                break;
            }
            tuple[a] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::solve_green;
    use crate::lattice::{discretize, DomainSpec};

    fn square_green(eps: f64) -> GreenTable {
        solve_green(&discretize(&DomainSpec::unit_square(2).unwrap(), eps).unwrap()).unwrap()
    }

    fn lp(v: &[i64]) -> LatticePoint {
        LatticePoint(v.to_vec())
    }

    #[test]
    fn trivial_values() {
        let g = square_green(0.5);
        let v = lp(&[1, 1]);
        assert_eq!(kpoint_exact(&g, &[v.clone()]).unwrap().value, 0.0);
        let two = kpoint_exact(&g, &[v.clone(), v.clone()]).unwrap();
        assert!((two.value - 8.0).abs() < 1e-14);
        assert_eq!(joint_cumulant_exact(&g, &[v.clone()]).unwrap().value, 0.0);
        assert!(matches!(
            kpoint_exact(&g, &vec![v.clone(); 8]),
            Err(Error::ComplexityBudgetExceeded { k: 8, max: 7 })
        ));
        assert!(matches!(
            kpoint_exact(&g, &[lp(&[0, 1])]),
            Err(Error::PointOutsideDomain { .. })
        ));
    }

    #[test]
    fn decomposition_sums_to_value() {
        let g = square_green(0.25);
        let pts = [lp(&[1, 1]), lp(&[2, 3]), lp(&[3, 2]), lp(&[2, 2])];
        let r = kpoint_exact(&g, &pts).unwrap();
        let terms = r.decomposition.unwrap();
        assert_eq!(terms.len(), 4);
        let s: f64 = terms.iter().map(|t| t.value).sum();
        assert!((s - r.value).abs() <= 1e-12 * r.value.abs());
    }

    #[test]
    fn three_evaluators_agree_on_small_tuples() {
        let g = square_green(0.25);
        let pts = [lp(&[1, 1]), lp(&[2, 3]), lp(&[1, 1]), lp(&[3, 2])];
        for k in 1..=4 {
            let a = kpoint_exact(&g, &pts[..k]).unwrap().value;
            let b = kpoint_oracle_feynman(&g, &pts[..k]).unwrap();
            let c = kpoint_oracle_subset(&g, &pts[..k]).unwrap();
            let scale = a.abs().max(1e-12);
            assert!((a - b).abs() <= 1e-10 * scale, "k={k}: {a} {b}");
            assert!((a - c).abs() <= 1e-10 * scale, "k={k}: {a} {c}");
        }
    }

    #[test]
    fn sandpile_constant() {
        assert!((SANDPILE_C - 0.231_335).abs() < 1e-6);
        let out = sandpile_cumulant_map(3.0, 2).unwrap();
        assert!((out + 2.0 * (SANDPILE_C / 2.0).powi(2) * 3.0).abs() < 1e-15);
        assert!(out < 0.0);
        assert_eq!(sandpile_cumulant_map(0.0, 3).unwrap(), 0.0);
        assert!(sandpile_cumulant_map(1.0, 1).is_err());
    }

    #[test]
    fn continuum_two_point_and_rotation() {
        let x = vec![0.2, 0.1];
        let y = vec![-0.3, 0.25];
        let v = kpoint_limit_continuum(&[x.clone(), y.clone()]).unwrap();
        let m = crate::continuum::green_disk_dd_matrix(&x, &y).unwrap();
        let expect = 2.0 * m.iter().map(|t| t * t).sum::<f64>();
        assert!((v - expect).abs() < 1e-14 * expect);
        assert!((cumulant_limit_continuum(&[x.clone(), y.clone()]).unwrap() - v).abs() < 1e-14);
        let z = vec![0.0, -0.4];
        let base = kpoint_limit_continuum(&[x.clone(), y.clone(), z.clone()]).unwrap();
        let t = 0.7f64;
        let rot = |p: &Vec<f64>| vec![t.cos() * p[0] - t.sin() * p[1], t.sin() * p[0] + t.cos() * p[1]];
        let turned = kpoint_limit_continuum(&[rot(&x), rot(&y), rot(&z)]).unwrap();
        assert!((base - turned).abs() < 1e-10 * base.abs());
        assert!(matches!(
            kpoint_limit_continuum(&[x.clone(), x.clone()]),
            Err(Error::CoincidentPoints)
        ));
    }

    #[test]
    fn trace_formula_matches_bruteforce() {
        let g = square_green(1.0 / 6.0);
        let f = |x: &[f64]| crate::continuum::bump_profile(((x[0] - 0.5).powi(2) + (x[1] - 0.45).powi(2)) / 0.16);
        for n in 2..=3 {
            let exact = pairing_cumulant_exact(&g, &f, n);
            let brute = pairing_cumulant_bruteforce(&g, &f, n).unwrap();
            assert!((exact - brute).abs() <= 1e-10 * brute.abs(), "n={n}: {exact} {brute}");
        }
        let all = pairing_cumulants_exact(&g, &f, 4);
        assert!((all[3] - pairing_cumulant_exact(&g, &f, 3)).abs() < 1e-12 * all[3].abs());
        let cov = pairing_covariance_exact(&g, &f, &f);
        assert!((cov - all[2]).abs() < 1e-12 * cov);
    }
}
