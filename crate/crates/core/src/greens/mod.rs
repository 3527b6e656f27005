//! Dirichlet Green's function of the normalized Laplacian on `U_eps`, its
//! double differences (transfer currents), and the infinite-volume kernel.
//!
//! With `Δf(x) = (1/2d) Σ_{y~x} (f(y) - f(x))` the matrix `-Δ_V` has unit
//! diagonal, so a single isolated vertex has `G(x,x) = 1`. Values at points
//! outside `U_eps` are zero.

mod cholesky;
mod dst;
mod kernel;

pub use cholesky::EnvelopeCholesky;
pub use dst::BoxGreen;
pub use kernel::{
    chi, chi_closed_form, chi_from_kernel, infinite_double_diff, kappa0, potential_kernel, ChiResult,
    InfiniteKernel, KernelMethod,
};

use ndarray::Array2;
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::Write;
use std::ops::Deref;
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::lattice::{Edge, LatticeDomain, LatticePoint};

/// Largest `|V|` for which the full matrix is materialized (8 bytes x |V|^2).
pub const DEFAULT_DENSE_LIMIT: usize = 8_000;

enum Storage {
    Dense(Vec<f64>),
    Lazy(Mutex<HashMap<usize, Arc<Vec<f64>>>>),
}

/// `G_{U_eps}` together with the factorization of `-Δ_V`.
pub struct GreenTable {
    domain: LatticeDomain,
    chol: EnvelopeCholesky,
    storage: Storage,
}

/// A borrowed or shared column of `G`.
pub enum Column<'a> {
    Borrowed(&'a [f64]),
    Shared(Arc<Vec<f64>>),
}

impl Deref for Column<'_> {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        match self {
            Column::Borrowed(s) => s,
            Column::Shared(v) => v,
        }
    }
}

/// Solves `G = (-Δ_V)^{-1}`, materializing it when `|V|` is at most
/// [`DEFAULT_DENSE_LIMIT`].
pub fn solve_green(domain: &LatticeDomain) -> Result<GreenTable> {
    solve_green_with_limit(domain, DEFAULT_DENSE_LIMIT)
}

/// As [`solve_green`] with an explicit dense-storage limit. Above the limit
/// columns are solved on demand and cached.
pub fn solve_green_with_limit(domain: &LatticeDomain, dense_limit: usize) -> Result<GreenTable> {
    let chol = EnvelopeCholesky::laplacian(domain)?;
    let n = domain.len();
    let storage = if n <= dense_limit {
        let mut g = vec![0.0; n * n];
        g.par_chunks_mut(n).enumerate().for_each(|(y, col)| {
            col.copy_from_slice(&chol.inverse_column(y));
        });
        // exact symmetry makes downstream sums independent of argument order
        for x in 0..n {
            for y in (x + 1)..n {
                let s = 0.5 * (g[x * n + y] + g[y * n + x]);
                g[x * n + y] = s;
                g[y * n + x] = s;
            }
        }
        Storage::Dense(g)
    } else {
        Storage::Lazy(Mutex::new(HashMap::new()))
    };
    Ok(GreenTable {
        domain: domain.clone(),
        chol,
        storage,
    })
}

impl GreenTable {
    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn cholesky(&self) -> &EnvelopeCholesky {
        &self.chol
    }

    /// Column `y` of `G` (equal to row `y` by symmetry).
    pub fn column(&self, y: usize) -> Column<'_> {
        match &self.storage {
            Storage::Dense(g) => {
                let n = self.len();
                Column::Borrowed(&g[y * n..(y + 1) * n])
            }
            Storage::Lazy(cache) => {
                if let Some(col) = cache.lock().unwrap().get(&y) {
                    return Column::Shared(col.clone());
                }
                let col = Arc::new(self.chol.inverse_column(y));
                cache.lock().unwrap().insert(y, col.clone());
                Column::Shared(col)
            }
        }
    }

    /// Solves the columns `ys` (in parallel) so later lookups hit the cache.
    pub fn prefetch(&self, ys: &[usize]) {
        if let Storage::Lazy(cache) = &self.storage {
            let missing: Vec<usize> = {
                let c = cache.lock().unwrap();
                let mut m: Vec<usize> = ys.iter().copied().filter(|y| !c.contains_key(y)).collect();
                m.sort_unstable();
                m.dedup();
                m
            };
            let cols: Vec<(usize, Vec<f64>)> = missing
                .par_iter()
                .map(|&y| (y, self.chol.inverse_column(y)))
                .collect();
            let mut c = cache.lock().unwrap();
            for (y, col) in cols {
                c.insert(y, Arc::new(col));
            }
        }
    }

    /// `G(x,y)` by vertex index.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        match &self.storage {
            Storage::Dense(g) => g[x * self.len() + y],
            Storage::Lazy(_) => self.column(y)[x],
        }
    }

    /// `G(x,y)` for arbitrary lattice points, zero when either lies outside.
    pub fn at(&self, x: &[i64], y: &[i64]) -> f64 {
        match (self.domain.index_of(x), self.domain.index_of(y)) {
            (Some(i), Some(j)) => self.get(i, j),
            _ => 0.0,
        }
    }

    fn index(&self, p: &LatticePoint) -> Result<usize> {
        self.domain
            .index_of(&p.0)
            .ok_or_else(|| Error::PointOutsideDomain { point: p.0.clone() })
    }

    /// Vertices `w` and `w + e_j` for every direction, needed by the double
    /// differences at second argument `w`.
    pub fn stencil_columns(&self, w: usize) -> Vec<usize> {
        let mut ys = vec![w];
        for j in 0..self.dim() {
            if let Some(y) = self.domain.neighbor(w, j, 1) {
                ys.push(y);
            }
        }
        ys
    }

    /// The `d x d` block `D[i][j] = ∇_i^{(1)} ∇_j^{(2)} G(v, w)` (row-major)
    /// for vertex indices `v`, `w`.
    pub fn grad_block(&self, v: usize, w: usize) -> Vec<f64> {
        let d = self.dim();
        let vp: Vec<Option<usize>> = (0..d).map(|i| self.domain.neighbor(v, i, 1)).collect();
        let col_w = self.column(w);
        let mut out = vec![0.0; d * d];
        for j in 0..d {
            let col_wj = self.domain.neighbor(w, j, 1).map(|y| self.column(y));
            for i in 0..d {
                let mut s = col_w[v];
                if let Some(x) = vp[i] {
                    s -= col_w[x];
                }
                if let Some(c) = &col_wj {
                    s -= c[v];
                    if let Some(x) = vp[i] {
                        s += c[x];
                    }
                }
                out[i * d + j] = s;
            }
        }
        out
    }

    /// `G(v+e_i, w+e_j) - G(v, w+e_j) - G(v+e_i, w) + G(v, w)` with 0-based
    /// directions; shifted points may leave the domain (zero extension).
    pub fn double_diff(&self, v: &LatticePoint, w: &LatticePoint, i: usize, j: usize) -> Result<f64> {
        let vi = self.index(v)?;
        let wi = self.index(w)?;
        let d = self.dim();
        if i >= d || j >= d {
            return Err(Error::InvalidConfig(format!(
                "direction out of range for d = {d}"
            )));
        }
        let vs = v.shifted(i, 1);
        let ws = w.shifted(j, 1);
        let g = |a: &LatticePoint, b: &LatticePoint| self.at(&a.0, &b.0);
        Ok(g(&vs, &ws) - g(v, &ws) - g(&vs, w) + self.get(vi, wi))
    }

    /// Transfer current `T(e,f) = E[∇_e Γ ∇_f Γ]`.
    pub fn transfer_current(&self, e: &Edge, f: &Edge) -> Result<f64> {
        self.double_diff(&e.tail, &f.tail, e.dir, f.dir)
    }

    /// Covariance matrix of the gradients `(∇_i Γ(v_p))` over the given
    /// vertices, indexed by `p * d + i`.
    pub fn grad_covariance(&self, vertices: &[usize]) -> Array2<f64> {
        let d = self.dim();
        let m = vertices.len();
        let needed: Vec<usize> = vertices
            .iter()
            .flat_map(|&w| self.stencil_columns(w))
            .collect();
        self.prefetch(&needed);
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|q| {
                let mut out = vec![0.0; m * d * d];
                for p in 0..m {
                    let b = self.grad_block(vertices[p], vertices[q]);
                    out[p * d * d..(p + 1) * d * d].copy_from_slice(&b);
                }
                out
            })
            .collect();
        let mut cov = Array2::zeros((m * d, m * d));
        for (q, row) in rows.iter().enumerate() {
            for p in 0..m {
                for i in 0..d {
                    for j in 0..d {
                        cov[[p * d + i, q * d + j]] = row[p * d * d + i * d + j];
                    }
                }
            }
        }
        cov
    }

    /// `max_x |ΔG(·,y)(x) + δ_y(x)|` for column `y`.
    pub fn laplacian_residual(&self, y: usize) -> f64 {
        let d = self.dim();
        let col = self.column(y);
        let mut worst: f64 = 0.0;
        for x in 0..self.len() {
            let mut lap = 0.0;
            for dir in 0..d {
                for step in [-1, 1] {
                    let gz = self.domain.neighbor(x, dir, step).map_or(0.0, |z| col[z]);
                    lap += gz - col[x];
                }
            }
            lap /= (2 * d) as f64;
            let delta = if x == y { 1.0 } else { 0.0 };
            worst = worst.max((lap + delta).abs());
        }
        worst
    }

    /// Writes a one-line JSON header (`d`, `eps`, `shape`, `n`) followed by
    /// the row-major matrix as little-endian `f64`.
    pub fn export_binary(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        let header = serde_json::json!({
            "d": self.dim(),
            "eps": self.domain.eps(),
            "shape": self.domain.spec().name(),
            "n": self.len(),
        });
        writeln!(out, "{header}")?;
        for x in 0..self.len() {
            let row = self.column(x);
            for &v in row.iter() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads a matrix written by [`GreenTable::export_binary`].
pub fn read_binary(path: &Path) -> Result<(serde_json::Value, Vec<f64>)> {
    let bytes = std::fs::read(path)?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::InvalidConfig("missing header line".into()))?;
    let header: serde_json::Value = serde_json::from_slice(&bytes[..split])?;
    let body = &bytes[split + 1..];
    if body.len() % 8 != 0 {
        return Err(Error::InvalidConfig("truncated matrix body".into()));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{discretize, DomainSpec};

    fn square(eps: f64) -> LatticeDomain {
        discretize(&DomainSpec::unit_square(2).unwrap(), eps).unwrap()
    }

    #[test]
    fn single_vertex_is_one() {
        for d in [2, 3] {
            let dom = discretize(&DomainSpec::unit_square(d).unwrap(), 0.5).unwrap();
            let g = solve_green(&dom).unwrap();
            assert_eq!(g.len(), 1);
            assert!((g.get(0, 0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_vertex_double_diff() {
        let g = solve_green(&square(0.5)).unwrap();
        let v = LatticePoint(vec![1, 1]);
        assert!((g.double_diff(&v, &v, 0, 0).unwrap() - 1.0).abs() < 1e-15);
        let e = Edge::new(v.clone(), 0).unwrap();
        assert!((g.transfer_current(&e, &e).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            g.double_diff(&LatticePoint(vec![0, 0]), &v, 0, 0),
            Err(Error::PointOutsideDomain { .. })
        ));
    }

    #[test]
    fn lazy_and_dense_agree() {
        let dom = discretize(&DomainSpec::unit_disk(2).unwrap(), 0.1).unwrap();
        let dense = solve_green(&dom).unwrap();
        let lazy = solve_green_with_limit(&dom, 0).unwrap();
        assert!(!lazy.is_dense());
        for (x, y) in [(0, 5), (17, 40), (100, 100)] {
            assert!((dense.get(x, y) - lazy.get(x, y)).abs() < 1e-13);
            let a = dense.grad_block(x, y);
            let b = lazy.grad_block(x, y);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-13);
            }
        }
        assert!(lazy.laplacian_residual(33) < 1e-12);
    }

    #[test]
    fn grad_block_matches_double_diff() {
        let g = solve_green(&square(1.0 / 7.0)).unwrap();
        let dom = g.domain();
        for (v, w) in [(0, 0), (3, 20), (35, 7)] {
            let blk = g.grad_block(v, w);
            for i in 0..2 {
                for j in 0..2 {
                    let dd = g
                        .double_diff(dom.vertex(v), dom.vertex(w), i, j)
                        .unwrap();
                    assert!((blk[i * 2 + j] - dd).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn binary_export_round_trip() {
        let g = solve_green(&square(0.25)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        g.export_binary(&path).unwrap();
        let (header, values) = read_binary(&path).unwrap();
        assert_eq!(header["n"], 9);
        assert_eq!(header["shape"], "unit_square");
        assert_eq!(values.len(), 81);
        assert_eq!(values[4 * 9 + 4], g.get(4, 4));
    }
}
