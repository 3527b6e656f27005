use super::convergence::check_interior;
use super::{ExperimentConfig, ExperimentReport, Relation, Table};
use crate::continuum::MobiusMap;
use crate::correlation::{kpoint_exact, kpoint_limit_continuum};
use crate::error::{Error, Result};
use crate::greens::solve_green;
use crate::lattice::{discretize, floor_point, DomainSpec, LatticePoint, Shape};

/// Conformal covariance of the k-point functions under disk automorphisms,
/// in the continuum limit and on disk discretizations.
pub fn run_conformal(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let spec = match &cfg.domain {
        Some(s) if !(matches!(s.shape(), Shape::UnitDisk) && s.dim() == 2) => {
            return Err(Error::InvalidConfig("conformal runs on the unit disk in d = 2".into()))
        }
        Some(s) => s.clone(),
        None => DomainSpec::unit_disk(2)?,
    };
    let ks = if cfg.orders.is_empty() {
        vec![2, 3]
    } else {
        cfg.orders.clone()
    };
    if ks.iter().any(|&k| k < 2 || k > cfg.points.len()) {
        return Err(Error::InvalidConfig(format!(
            "each k must lie in 2..={} (the number of points)",
            cfg.points.len()
        )));
    }
    check_interior(&spec, &cfg.points)?;
    let mobius = if cfg.mobius.is_empty() {
        vec![[0.2, 0.0], [0.4, 0.0]]
    } else {
        cfg.mobius.clone()
    };
    if mobius.iter().any(|a| a[0].hypot(a[1]) > 0.5) {
        return Err(Error::InvalidConfig("Möbius parameters need |a| <= 0.5".into()));
    }

    let mut rep = ExperimentReport::new(cfg);
    rep.tol(cfg, "continuum_tol", 1e-6);

    // (k, a, points, images, Π|h'|²)
    let mut cases = Vec::new();
    for &k in &ks {
        for a in &mobius {
            let h = MobiusMap::new(*a)?;
            let pts = cfg.points[..k].to_vec();
            let img = pts
                .iter()
                .map(|p| h.apply(p).map(|z| z.to_vec()))
                .collect::<Result<Vec<_>>>()?;
            let factor = pts
                .iter()
                .map(|p| h.derivative(p).map(|z| z.norm_sqr()))
                .product::<Result<f64>>()?;
            cases.push((k, *a, pts, img, factor));
        }
    }

    let mut table = Table::new(&["k", "a_re", "a_im", "lhs", "rhs", "relative_error"]);
    for (k, a, pts, img, factor) in &cases {
        let lhs = kpoint_limit_continuum(pts)?;
        let rhs = factor * kpoint_limit_continuum(img)?;
        let rel = (lhs - rhs).abs() / lhs.abs();
        table.push(vec![*k as f64, a[0], a[1], lhs, rhs, rel]);
        rep.check(format!("continuum[k={k},a=({},{})]", a[0], a[1]), rel, Relation::AtMost, "continuum_tol");
    }
    rep.tables.insert("continuum".into(), table);

    if !cfg.eps.is_empty() {
        rep.tol(cfg, "discrete_tol", 0.1);
        let mut table = Table::new(&["eps", "k", "a_re", "a_im", "ratio", "target", "ratio_over_target"]);
        let mut finest = Vec::new();
        for &eps in &cfg.eps {
            let green = solve_green(&discretize(&spec, eps)?)?;
            let snap = |ps: &[Vec<f64>]| ps.iter().map(|p| floor_point(p, eps)).collect::<Vec<LatticePoint>>();
            finest.clear();
            for (k, a, pts, img, factor) in &cases {
                let num = kpoint_exact(&green, &snap(pts))?.value;
                let den = kpoint_exact(&green, &snap(img))?.value;
                let ratio = num / den;
                table.push(vec![eps, *k as f64, a[0], a[1], ratio, *factor, ratio / factor]);
                finest.push((*k, *a, ratio / factor));
            }
        }
        for (k, a, r) in finest {
            rep.check(
                format!("discrete[k={k},a=({},{})]", a[0], a[1]),
                (r - 1.0).abs(),
                Relation::AtMost,
                "discrete_tol",
            );
        }
        rep.tables.insert("discrete".into(), table);
        rep.notes.push("discrete criteria are evaluated at the finest eps".into());
    }
    Ok(rep)
}
