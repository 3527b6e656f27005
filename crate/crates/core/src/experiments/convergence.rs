use super::{frobenius, ExperimentConfig, ExperimentReport, Relation, Table};
use crate::continuum::ContinuumGreen;
use crate::error::{Error, Result};
use crate::greens::solve_green;
use crate::lattice::{discretize, floor_point};

/// Convergence of `ε^{-d} ∇_a∇_b G_{U_ε}(⌊v/ε⌋, ⌊w/ε⌋)` to a multiple of
/// `∂_a∂_b G_U(v, w)`.
pub fn run_green_convergence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.min_levels(3)?;
    let spec = cfg.domain_spec()?;
    let cont = ContinuumGreen::for_domain(spec)?;
    let d = spec.dim();
    if cfg.points.len() != 2 || cfg.points[0] == cfg.points[1] {
        return Err(Error::InvalidConfig(
            "green-convergence needs two distinct points".into(),
        ));
    }
    let (v, w) = (&cfg.points[0], &cfg.points[1]);
    check_interior(spec, &cfg.points)?;

    let mut rep = ExperimentReport::new(cfg);
    rep.tol(cfg, "residual_tol", 0.02);
    rep.tol(cfg, "cauchy_tol", 0.03);
    rep.tol(cfg, "swap_tol", 1e-10);

    let k = cont.dd_matrix(v, w)?;
    let dd = d * d;
    let mut levels = Table::new(&["eps", "a", "b", "value", "continuum"]);
    let mut mats: Vec<Vec<f64>> = Vec::new();
    let mut swapped: Vec<Vec<f64>> = Vec::new();
    for &eps in &cfg.eps {
        let green = solve_green(&discretize(spec, eps)?)?;
        let (pv, pw) = (floor_point(v, eps), floor_point(w, eps));
        let scale = eps.powi(-(d as i32));
        let mut m = vec![0.0; dd];
        let mut s = vec![0.0; dd];
        for a in 0..d {
            for b in 0..d {
                m[a * d + b] = scale * green.double_diff(&pv, &pw, a, b)?;
                s[a * d + b] = scale * green.double_diff(&pw, &pv, b, a)?;
                levels.push(vec![eps, a as f64, b as f64, m[a * d + b], k[a * d + b]]);
            }
        }
        mats.push(m);
        swapped.push(s);
    }
    rep.tables.insert("levels".into(), levels);

    let n = mats.len();
    let diff = |i: usize| -> f64 {
        frobenius(&mats[i].iter().zip(&mats[i - 1]).map(|(a, b)| a - b).collect::<Vec<_>>())
    };
    let mut cauchy = Table::new(&["eps", "relative_change", "max_entry_ratio_deviation"]);
    for i in 1..n {
        let rel = diff(i) / frobenius(&mats[i]);
        let entry = mats[i]
            .iter()
            .zip(&mats[i - 1])
            .map(|(a, b)| (a / b - 1.0).abs())
            .fold(0.0, f64::max);
        cauchy.push(vec![cfg.eps[i], rel, entry]);
    }
    rep.tables.insert("cauchy".into(), cauchy);
    if diff(n - 1) >= diff(n - 2) {
        return Err(Error::ExtrapolationUnstable(format!(
            "successive differences do not contract: {} then {}",
            diff(n - 2),
            diff(n - 1)
        )));
    }

    // first-order Richardson on the two finest levels: the floor snapping
    // error is O(ε)
    let ratio = cfg.eps[n - 2] / cfg.eps[n - 1];
    let extrap = |ms: &[Vec<f64>]| -> Vec<f64> {
        ms[n - 1]
            .iter()
            .zip(&ms[n - 2])
            .map(|(f, c)| (ratio * f - c) / (ratio - 1.0))
            .collect()
    };
    let m0 = extrap(&mats);
    let s0 = extrap(&swapped);
    let kk: f64 = k.iter().map(|x| x * x).sum();
    let c = m0.iter().zip(&k).map(|(a, b)| a * b).sum::<f64>() / kk;
    let fit: Vec<f64> = k.iter().map(|x| c * x).collect();
    let residual =
        frobenius(&m0.iter().zip(&fit).map(|(a, b)| a - b).collect::<Vec<_>>()) / frobenius(&fit);
    let mut ex = Table::new(&["a", "b", "extrapolated", "fitted_continuum"]);
    for a in 0..d {
        for b in 0..d {
            ex.push(vec![a as f64, b as f64, m0[a * d + b], fit[a * d + b]]);
        }
    }
    rep.tables.insert("extrapolated".into(), ex);
    rep.fitted.insert("constant".into(), c);
    rep.fitted.insert("constant_over_2d".into(), c / (2 * d) as f64);
    rep.fitted.insert("residual".into(), residual);

    rep.check("residual", residual, Relation::Below, "residual_tol");
    rep.check(
        "cauchy",
        diff(n - 1) / frobenius(&mats[n - 1]),
        Relation::AtMost,
        "cauchy_tol",
    );
    let swap_err = frobenius(&m0.iter().zip(&s0).map(|(a, b)| a - b).collect::<Vec<_>>())
        / frobenius(&m0);
    rep.check("swap_symmetry", swap_err, Relation::AtMost, "swap_tol");
    rep.notes.push(format!(
        "the fitted constant is {c:.6}; the normalized Laplacian predicts 2d = {}",
        2 * d
    ));
    Ok(rep)
}

/// Points must keep a quarter of the domain diameter from the boundary.
pub(super) fn check_interior(spec: &crate::lattice::DomainSpec, points: &[Vec<f64>]) -> Result<()> {
    let diameter = match spec.shape() {
        crate::lattice::Shape::UnitDisk => 2.0,
        _ => {
            // box diagonal: exact for boxes, an upper bound for masks
            let (lo, hi) = spec.bounding_box();
            lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt()
        }
    };
    for p in points {
        let dist = spec.boundary_distance(p);
        if dist < diameter / 4.0 - 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "point {p:?} is closer than a quarter diameter to the boundary"
            )));
        }
    }
    Ok(())
}
