//! Infinite-volume double differences `M(v)[i][j] = ∇_i^{(1)} ∇_j^{(2)} G_0(0, v)`,
//! the two-point kernel `κ_0(0,v) = 2 Σ_{ij} M(v)[i][j]^2`, and `χ = Σ_v κ_0(0,v)`.
//!
//! Two independent routes are provided.
//!
//! *Fourier.* Only differences of `G_0` enter, so everything is expressed
//! through the potential kernel `a(u) = G_0(0,0) - G_0(0,u)`, which is finite
//! in every `d ≥ 2`:
//!
//! ```text
//! M(v)[i][j] = -a(v + e_j - e_i) + a(v + e_j) + a(v - e_i) - a(v)
//! ```
//!
//! Integrating the last Fourier variable in closed form
//! (`(1/2π) ∫ e^{inθ} / (c - cos θ) dθ = z^{|n|} / s`, `s = sqrt(c² - 1)`,
//! `z = c - s`) leaves
//!
//! ```text
//! a(u) = d / π^{d-1} ∫_{[0,π]^{d-1}} (1 - Π_{a<d} cos(θ_a u_a) z^{|u_d|}) / s dθ
//! ```
//!
//! with `c = 1 + Σ_{a<d} (1 - cos θ_a)`. For `d = 2` the integrand is analytic
//! on `[0, π]`, so composite Gauss–Legendre converges exponentially; for `d = 3`
//! the cone singularity at the origin is resolved by geometric grading.
//!
//! *Bigbox.* Exact Dirichlet box solutions at radii `N` and `2N` (see
//! [`BoxGreen`]) combined by Richardson extrapolation, the finite-box error
//! being `O(N^{-d})`.
//!
//! Parseval's identity gives `Σ_v Σ_{ij} M(v)[i][j]^2 = 4d²` and hence
//! `χ = 8d²` exactly; [`chi_closed_form`] is used as an independent check.

use ndarray::{linalg::general_mat_mul, Array2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use super::dst::BoxGreen;
use crate::error::{Error, Result};
use crate::quadrature::{composite, graded_breaks, uniform_breaks, Rule};

/// How the infinite-volume kernel is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    Fourier,
    Bigbox,
}

const QUAD_TOL: f64 = 1e-9;
const NODES_2D: usize = 20;
const NODES_3D: usize = 16;
const GRADING_RATIO: f64 = 0.15;

fn check_dim(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::DimensionUnsupported {
            d,
            reason: "the infinite-volume kernel is implemented for d = 2 and d = 3",
        })
    }
}

/// Panel width resolving oscillations up to frequency `umax`.
fn panel_width(umax: usize) -> f64 {
    (12.0 / (umax as f64 + 1.0)).min(0.25)
}

/// Quantities of the closed-form inner integral at a node: `(1/s, z)`.
/// `cm1 = c - 1 ≥ 0` is passed separately to avoid cancellation.
#[inline]
fn inner(cm1: f64) -> (f64, f64) {
    let s = (cm1 * (cm1 + 2.0)).sqrt();
    (1.0 / s, 1.0 / (1.0 + cm1 + s))
}

#[inline]
fn one_minus_cos(t: f64) -> f64 {
    let h = (0.5 * t).sin();
    2.0 * h * h
}

fn rule_2d(umax: usize, nodes: usize) -> Rule {
    composite(&uniform_breaks(0.0, PI, panel_width(umax)), nodes)
}

fn rule_3d(umax: usize, nodes: usize, levels: usize) -> Rule {
    composite(&graded_breaks(PI, panel_width(umax), levels, GRADING_RATIO), nodes)
}

fn eval_2d(u: [u64; 2], rule: &Rule) -> f64 {
    let mut sum = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (inv_s, z) = inner(one_minus_cos(t));
        sum += w * (1.0 - (t * u[0] as f64).cos() * z.powi(u[1] as i32)) * inv_s;
    }
    2.0 / PI * sum
}

fn eval_3d(u: [u64; 3], rule: &Rule) -> f64 {
    let cos0: Vec<f64> = rule.nodes.iter().map(|&t| (t * u[0] as f64).cos()).collect();
    let cos1: Vec<f64> = rule.nodes.iter().map(|&t| (t * u[1] as f64).cos()).collect();
    let omc: Vec<f64> = rule.nodes.iter().map(|&t| one_minus_cos(t)).collect();
    let mut sum = 0.0;
    for k1 in 0..rule.len() {
        let mut row = 0.0;
        for k2 in 0..rule.len() {
            let (inv_s, z) = inner(omc[k1] + omc[k2]);
            row += rule.weights[k2] * (1.0 - cos0[k1] * cos1[k2] * z.powi(u[2] as i32)) * inv_s;
        }
        sum += rule.weights[k1] * row;
    }
    3.0 / (PI * PI) * sum
}

/// Potential kernel `a(u) = G_0(0,0) - G_0(0,u)` for `d = u.len() ∈ {2, 3}`,
/// checked against a refined rule.
pub fn potential_kernel(u: &[i64]) -> Result<f64> {
    let d = u.len();
    check_dim(d)?;
    let abs: Vec<u64> = u.iter().map(|c| c.unsigned_abs()).collect();
    let umax = *abs.iter().max().unwrap() as usize;
    let (coarse, fine) = if d == 2 {
        let a = [abs[0], abs[1]];
        (eval_2d(a, &rule_2d(umax, NODES_2D)), eval_2d(a, &rule_2d(umax, NODES_2D + 10)))
    } else {
        let a = [abs[0], abs[1], abs[2]];
        (
            eval_3d(a, &rule_3d(umax, NODES_3D, 14)),
            eval_3d(a, &rule_3d(umax, NODES_3D + 6, 20)),
        )
    };
    let diff = (fine - coarse).abs();
    if diff > QUAD_TOL {
        return Err(Error::QuadratureNotConverged { diff, tol: QUAD_TOL });
    }
    Ok(fine)
}

/// `a(u)` on the cube `[0, ext]^2`, row-major, by a node-chunked matrix product.
fn potential_table_2d(ext: usize) -> Vec<f64> {
    let rule = rule_2d(ext, NODES_2D);
    let m = ext + 1;
    let mut acc = Array2::<f64>::zeros((m, m));
    let mut s0 = 0.0;
    const CHUNK: usize = 1024;
    for start in (0..rule.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(rule.len());
        let kc = end - start;
        let mut c = Array2::<f64>::zeros((m, kc));
        let mut zp = Array2::<f64>::zeros((m, kc));
        for (col, k) in (start..end).enumerate() {
            let t = rule.nodes[k];
            let (inv_s, z) = inner(one_minus_cos(t));
            let ws = rule.weights[k] * inv_s;
            s0 += ws;
            let mut p = 1.0;
            for u in 0..m {
                c[[u, col]] = ws * (t * u as f64).cos();
                zp[[u, col]] = p;
                p *= z;
            }
        }
        general_mat_mul(1.0, &c, &zp.t(), 1.0, &mut acc);
    }
    let mut table = vec![0.0; m * m];
    for u0 in 0..m {
        for u1 in 0..m {
            table[u0 * m + u1] = 2.0 / PI * (s0 - acc[[u0, u1]]);
        }
    }
    symmetrize(&mut table, m, 2);
    table
}

/// `a(u)` on the cube `[0, ext]^3`, row-major.
fn potential_table_3d(ext: usize) -> Vec<f64> {
    let rule = rule_3d(ext, NODES_3D, 14);
    let m = ext + 1;
    let k = rule.len();
    let mut c = Array2::<f64>::zeros((m, k));
    for (col, &t) in rule.nodes.iter().enumerate() {
        for u in 0..m {
            c[[u, col]] = (t * u as f64).cos();
        }
    }
    let omc: Vec<f64> = rule.nodes.iter().map(|&t| one_minus_cos(t)).collect();
    let mut f = Array2::<f64>::zeros((k, k));
    let mut z = Array2::<f64>::zeros((k, k));
    let mut s0 = 0.0;
    for k1 in 0..k {
        for k2 in 0..k {
            let (inv_s, zz) = inner(omc[k1] + omc[k2]);
            let ws = rule.weights[k1] * rule.weights[k2] * inv_s;
            f[[k1, k2]] = ws;
            z[[k1, k2]] = zz;
            s0 += ws;
        }
    }
    let mut table = vec![0.0; m * m * m];
    let mut cf = Array2::<f64>::zeros((m, k));
    let mut out = Array2::<f64>::zeros((m, m));
    for u2 in 0..m {
        general_mat_mul(1.0, &c, &f, 0.0, &mut cf);
        general_mat_mul(1.0, &cf, &c.t(), 0.0, &mut out);
        for u0 in 0..m {
            for u1 in 0..m {
                table[(u0 * m + u1) * m + u2] = 3.0 / (PI * PI) * (s0 - out[[u0, u1]]);
            }
        }
        f.zip_mut_with(&z, |a, &b| *a *= b);
    }
    symmetrize(&mut table, m, 3);
    table
}

/// Averages the table over coordinate permutations so that `a` is exactly
/// symmetric (the quadrature singles out the last axis).
fn symmetrize(table: &mut [f64], m: usize, d: usize) {
    if d == 2 {
        for u0 in 0..m {
            for u1 in (u0 + 1)..m {
                let s = 0.5 * (table[u0 * m + u1] + table[u1 * m + u0]);
                table[u0 * m + u1] = s;
                table[u1 * m + u0] = s;
            }
        }
        return;
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for u0 in 0..m {
        for u1 in u0..m {
            for u2 in u1..m {
                let u = [u0, u1, u2];
                let idx = |p: &[usize; 3]| (u[p[0]] * m + u[p[1]]) * m + u[p[2]];
                // fixed summation order keeps the result bit-reproducible
                let mean = PERMS.iter().map(|p| table[idx(p)]).sum::<f64>() / 6.0;
                for p in &PERMS {
                    table[idx(p)] = mean;
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Store {
    /// `a(|u_1|, ..., |u_d|)` on `[0, ext]^d`.
    Potential { ext: usize, a: Vec<f64> },
    /// `M(v)` on `[-r, r]^d`, `d²` entries per offset.
    Direct { r: usize, m: Vec<f64> },
}

/// Table of `M(v)` for `|v|_∞ ≤ radius`.
#[derive(Clone, Debug)]
pub struct InfiniteKernel {
    d: usize,
    radius: usize,
    method: KernelMethod,
    box_radius: Option<usize>,
    store: Store,
}

impl InfiniteKernel {
    /// Fourier route: tabulates the potential kernel on `[0, radius+1]^d`.
    pub fn fourier(d: usize, radius: usize) -> Result<Self> {
        check_dim(d)?;
        let ext = radius + 1;
        let a = if d == 2 {
            potential_table_2d(ext)
        } else {
            potential_table_3d(ext)
        };
        // the anchor a(e_1) = 1 doubles as a convergence check of the rule
        let anchor = a[1 * (ext + 1).pow(d as u32 - 1)];
        let diff = (anchor - 1.0).abs();
        if diff > QUAD_TOL {
            return Err(Error::QuadratureNotConverged { diff, tol: QUAD_TOL });
        }
        Ok(InfiniteKernel {
            d,
            radius,
            method: KernelMethod::Fourier,
            box_radius: None,
            store: Store::Potential { ext, a },
        })
    }

    /// Bigbox route with box radius `N ≥ 4 (radius + 1)` rounded up to a
    /// multiple of 32 (at least 256 in `d = 2` and 32 in `d = 3`), extrapolated
    /// from `N` and `2N`.
    pub fn bigbox(d: usize, radius: usize) -> Result<Self> {
        check_dim(d)?;
        let floor = if d == 2 { 256 } else { 32 };
        let n = (4 * radius + 4).div_ceil(32).max(1) * 32;
        let n = n.max(floor);
        Self::bigbox_with_box(d, radius, n)
    }

    /// Bigbox route with an explicit base box radius `box_radius`.
    pub fn bigbox_with_box(d: usize, radius: usize, box_radius: usize) -> Result<Self> {
        check_dim(d)?;
        if box_radius < 2 * (radius + 2) {
            return Err(Error::InvalidConfig(format!(
                "box radius {box_radius} too small for kernel radius {radius}"
            )));
        }
        let mut sources = vec![vec![0i64; d]];
        for i in 0..d {
            let mut e = vec![0i64; d];
            e[i] = 1;
            sources.push(e);
        }
        let coarse = direct_table(d, radius, &BoxGreen::solve(d, box_radius, &sources)?);
        let fine = direct_table(d, radius, &BoxGreen::solve(d, 2 * box_radius, &sources)?);
        let w = (1u32 << d) as f64;
        let m: Vec<f64> = fine
            .iter()
            .zip(&coarse)
            .map(|(&f, &c)| (w * f - c) / (w - 1.0))
            .collect();
        Ok(InfiniteKernel {
            d,
            radius,
            method: KernelMethod::Bigbox,
            box_radius: Some(box_radius),
            store: Store::Direct { r: radius, m },
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    /// Base box radius of the bigbox route.
    pub fn box_radius(&self) -> Option<usize> {
        self.box_radius
    }

    fn a(&self, ext: usize, table: &[f64], u: &[i64]) -> f64 {
        let m = ext + 1;
        let mut flat = 0usize;
        for &c in u {
            flat = flat * m + c.unsigned_abs() as usize;
        }
        table[flat]
    }

    /// `M(v)` as a row-major `d x d` matrix, `None` outside the table.
    pub fn matrix(&self, v: &[i64]) -> Option<Vec<f64>> {
        let d = self.d;
        if v.len() != d || v.iter().any(|c| c.unsigned_abs() as usize > self.radius) {
            return None;
        }
        match &self.store {
            Store::Potential { ext, a } => {
                let mut out = vec![0.0; d * d];
                let mut u = v.to_vec();
                let av = self.a(*ext, a, &u);
                for i in 0..d {
                    u[i] -= 1;
                    let a_mi = self.a(*ext, a, &u);
                    for j in 0..d {
                        u[j] += 1;
                        let a_pj_mi = self.a(*ext, a, &u);
                        u[i] += 1;
                        let a_pj = self.a(*ext, a, &u);
                        u[i] -= 1;
                        u[j] -= 1;
                        out[i * d + j] = -a_pj_mi + a_pj + a_mi - av;
                    }
                    u[i] += 1;
                }
                Some(out)
            }
            Store::Direct { r, m } => {
                let side = 2 * r + 1;
                let mut flat = 0usize;
                for &c in v {
                    flat = flat * side + (c + *r as i64) as usize;
                }
                Some(m[flat * d * d..(flat + 1) * d * d].to_vec())
            }
        }
    }

    /// `κ_0(0, v) = 2 Σ_{ij} M(v)[i][j]^2`.
    pub fn kappa0(&self, v: &[i64]) -> Option<f64> {
        self.matrix(v)
            .map(|m| 2.0 * m.iter().map(|x| x * x).sum::<f64>())
    }

    /// Visits all `v` with Euclidean norm at most `r` in lexicographic order.
    fn for_ball(&self, r: f64, mut f: impl FnMut(&[i64], f64)) {
        let d = self.d;
        let lim = (r.floor() as i64).min(self.radius as i64);
        let mut v = vec![-lim; d];
        loop {
            let n2: i64 = v.iter().map(|c| c * c).sum();
            if (n2 as f64) <= r * r {
                f(&v, (n2 as f64).sqrt());
            }
            let mut a = d;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                if v[a] < lim {
                    v[a] += 1;
                    break;
                }
                v[a] = -lim;
            }
        }
    }

    /// `Σ_{|v| ≤ r} κ_0(0, v)`.
    pub fn chi_partial(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        self.for_ball(r, |v, _| acc += self.kappa0(v).unwrap());
        acc
    }

    /// Partial sums of `κ_0` over balls of increasing radius in one pass.
    pub fn chi_partial_sums(&self, radii: &[f64]) -> Vec<f64> {
        let rmax = radii.iter().cloned().fold(0.0, f64::max);
        let mut shells: Vec<(f64, f64)> = Vec::new();
        self.for_ball(rmax, |v, n| shells.push((n, self.kappa0(v).unwrap())));
        radii
            .iter()
            .map(|&r| shells.iter().filter(|s| s.0 <= r).map(|s| s.1).sum())
            .collect()
    }

    /// Least-squares slope of `ln κ_0` against `ln |v|` over
    /// `rmin ≤ |v| ≤ rmax`, and the envelope constant
    /// `c = max κ_0 |v|^{2d}` over the same range.
    pub fn fit_decay(&self, rmin: f64, rmax: f64) -> (f64, f64) {
        let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut c: f64 = 0.0;
        let p = 2 * self.d as i32;
        self.for_ball(rmax, |v, norm| {
            if norm < rmin {
                return;
            }
            let k = self.kappa0(v).unwrap();
            c = c.max(k * norm.powi(p));
            if k > 0.0 {
                let (x, y) = (norm.ln(), k.ln());
                n += 1.0;
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
        });
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        (slope, c)
    }

    /// Writes `v_1..v_d, i, j, value` rows (1-based directions) for
    /// `|v|_∞ ≤ max_radius`.
    pub fn write_csv(&self, path: &Path, max_radius: usize) -> Result<()> {
        let d = self.d;
        let r = max_radius.min(self.radius) as i64;
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=d).map(|a| format!("v{a}")).collect();
        header.extend(["i", "j", "value"].map(String::from));
        w.write_record(&header)?;
        let mut v = vec![-r; d];
        loop {
            let m = self.matrix(&v).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let mut rec: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                    rec.push((i + 1).to_string());
                    rec.push((j + 1).to_string());
                    rec.push(format!("{:.16e}", m[i * d + j]));
                    w.write_record(&rec)?;
                }
            }
            let mut a = d;
            loop {
                if a == 0 {
                    w.flush()?;
                    return Ok(());
                }
                a -= 1;
                if v[a] < r {
                    v[a] += 1;
                    break;
                }
                v[a] = -r;
            }
        }
    }
}

fn direct_table(d: usize, r: usize, bg: &BoxGreen) -> Vec<f64> {
    let side = 2 * r + 1;
    let total = side.pow(d as u32);
    let mut out = vec![0.0; total * d * d];
    let mut v = vec![0i64; d];
    for flat in 0..total {
        let mut rem = flat;
        for a in (0..d).rev() {
            v[a] = (rem % side) as i64 - r as i64;
            rem /= side;
        }
        for j in 0..d {
            let mut vj = v.clone();
            vj[j] += 1;
            for i in 0..d {
                // sources: 0 is the origin, 1 + i is e_i
                let val = bg.value(1 + i, &vj) - bg.value(0, &vj) - bg.value(1 + i, &v)
                    + bg.value(0, &v);
                out[flat * d * d + i * d + j] = val;
            }
        }
    }
    out
}

/// `∇_i^{(1)} ∇_j^{(2)} G_0(0, v)` (0-based directions) by either route.
pub fn infinite_double_diff(
    v: &[i64],
    i: usize,
    j: usize,
    d: usize,
    method: KernelMethod,
) -> Result<f64> {
    check_dim(d)?;
    if v.len() != d || i >= d || j >= d {
        return Err(Error::InvalidConfig(format!(
            "offset and directions must match d = {d}"
        )));
    }
    match method {
        KernelMethod::Fourier => {
            let mut u = v.to_vec();
            let av = potential_kernel(&u)?;
            u[i] -= 1;
            let a_mi = potential_kernel(&u)?;
            u[j] += 1;
            let a_pj_mi = potential_kernel(&u)?;
            u[i] += 1;
            let a_pj = potential_kernel(&u)?;
            Ok(-a_pj_mi + a_pj + a_mi - av)
        }
        KernelMethod::Bigbox => {
            let r = v.iter().map(|c| c.unsigned_abs() as usize).max().unwrap();
            let kernel = InfiniteKernel::bigbox(d, r)?;
            Ok(kernel.matrix(v).unwrap()[i * d + j])
        }
    }
}

/// `κ_0(0, v)` through the Fourier route.
pub fn kappa0(v: &[i64], d: usize) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let m = infinite_double_diff(v, i, j, d, KernelMethod::Fourier)?;
            acc += m * m;
        }
    }
    Ok(2.0 * acc)
}

/// The closed form `χ = 8d²` from Parseval's identity.
pub fn chi_closed_form(d: usize) -> f64 {
    8.0 * (d * d) as f64
}

/// Numerically computed `χ` and its truncation data.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChiResult {
    pub d: usize,
    pub method: KernelMethod,
    /// `Σ_{|v| ≤ radius} κ_0(0, v)`.
    pub value: f64,
    pub radius: usize,
    /// Bound on the omitted tail `Σ_{|v| > radius} κ_0(0, v)`.
    pub tail_estimate: f64,
    pub tail_constant: f64,
    pub fitted_slope: f64,
}

fn sphere_area(d: usize) -> f64 {
    match d {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked by caller"),
    }
}

/// Bound on `c Σ_{|v| > R} |v|^{-2d}` by comparison with an integral (each
/// lattice point owns a unit cell within `√d / 2` of it).
pub fn tail_bound(c: f64, radius: f64, d: usize) -> f64 {
    let half_diag = (d as f64).sqrt() / 2.0;
    let inner = radius - half_diag;
    let cell = (1.0 + half_diag / radius).powi(2 * d as i32);
    c * cell * sphere_area(d) / (d as f64 * inner.powi(d as i32))
}

const PILOT_RADIUS: usize = 64;
const FIT_RMIN: f64 = 4.0;

fn check_slope(slope: f64, d: usize) -> Result<()> {
    let max_slope = -2.0 * d as f64 + 0.2;
    if slope.is_finite() && slope <= max_slope {
        Ok(())
    } else {
        Err(Error::TailBoundUnavailable { slope, max_slope })
    }
}

/// `χ` truncated at the smallest radius whose tail bound is below `tol`.
/// The decay constant comes from a pilot table and is refitted on the final
/// one.
pub fn chi(d: usize, tol: f64) -> Result<ChiResult> {
    check_dim(d)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("chi tolerance must be positive".into()));
    }
    let pilot = InfiniteKernel::fourier(d, PILOT_RADIUS)?;
    let (slope, c) = pilot.fit_decay(FIT_RMIN, PILOT_RADIUS as f64 / 2.0);
    check_slope(slope, d)?;
    let mut radius = radius_for(c, tol, d);
    if radius <= PILOT_RADIUS {
        return Ok(chi_from_kernel_with(&pilot, radius, slope, c));
    }
    for _ in 0..5 {
        let kernel = InfiniteKernel::fourier(d, radius)?;
        let (slope, c) = kernel.fit_decay(FIT_RMIN, radius as f64 / 2.0);
        check_slope(slope, d)?;
        if tail_bound(c, radius as f64, d) < tol {
            return Ok(chi_from_kernel_with(&kernel, radius, slope, c));
        }
        radius = radius_for(c, tol, d).max(radius + radius / 10 + 1);
    }
    Err(Error::TailBoundUnavailable {
        slope,
        max_slope: -2.0 * d as f64 + 0.2,
    })
}

fn radius_for(c: f64, tol: f64, d: usize) -> usize {
    let mut r = 8usize;
    // grow geometrically, then bisect down to the smallest admissible radius
    while tail_bound(c, r as f64, d) >= tol {
        r *= 2;
    }
    let (mut lo, mut hi) = (r / 2, r);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if tail_bound(c, mid as f64, d) < tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.max(8)
}

fn chi_from_kernel_with(kernel: &InfiniteKernel, radius: usize, slope: f64, c: f64) -> ChiResult {
    ChiResult {
        d: kernel.dim(),
        method: kernel.method(),
        value: kernel.chi_partial(radius as f64),
        radius,
        tail_estimate: tail_bound(c, radius as f64, kernel.dim()),
        tail_constant: c,
        fitted_slope: slope,
    }
}

/// `χ` truncated at `radius` from an existing table (which must cover it),
/// with the decay fit taken on that table.
pub fn chi_from_kernel(kernel: &InfiniteKernel, radius: usize) -> Result<ChiResult> {
    if radius > kernel.radius() {
        return Err(Error::InvalidConfig(format!(
            "truncation radius {radius} exceeds kernel radius {}",
            kernel.radius()
        )));
    }
    let rmax = (radius as f64 / 2.0).max(2.0 * FIT_RMIN);
    let (slope, c) = kernel.fit_decay(FIT_RMIN, rmax);
    check_slope(slope, kernel.dim())?;
    Ok(chi_from_kernel_with(kernel, radius, slope, c))
}
