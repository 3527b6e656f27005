use super::{ExperimentConfig, ExperimentReport, Relation, Table};
use crate::error::{Error, Result};
use crate::greens::{chi, chi_closed_form, chi_from_kernel, infinite_double_diff, kappa0, InfiniteKernel, KernelMethod};

/// `χ` by both kernel routes, with truncation and tail diagnostics.
pub fn run_chi(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let d = cfg.d.or(cfg.domain.as_ref().map(|s| s.dim())).unwrap_or(2);
    if !(2..=3).contains(&d) {
        return Err(Error::DimensionUnsupported {
            d,
            reason: "the infinite-volume kernel is provided for d = 2 and d = 3",
        });
    }
    let tols = if cfg.chi_tolerances.is_empty() {
        vec![1e-4, 1e-6]
    } else {
        cfg.chi_tolerances.clone()
    };
    if tols.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidConfig("chi tolerances must be positive".into()));
    }

    let mut rep = ExperimentReport::new(cfg);
    rep.tol(cfg, "agreement_tol", 1e-4);
    rep.tol(cfg, "truncation_tol", 2e-4);
    rep.tol(cfg, "lower_bound", 16.0);
    rep.tol(cfg, "monotone_slack", 0.0);
    rep.tol(cfg, "anchor_tol", 1e-8);

    let mut table = Table::new(&["tol", "method", "radius", "value", "tail_estimate", "fitted_slope"]);
    let mut fourier = Vec::new();
    for &tol in &tols {
        let r = chi(d, tol)?;
        table.push(vec![tol, 0.0, r.radius as f64, r.value, r.tail_estimate, r.fitted_slope]);
        fourier.push(r);
    }
    // the box route is checked at the coarsest tolerance, whose radius keeps
    // the box within memory
    let first = &fourier[0];
    let bigbox = InfiniteKernel::bigbox(d, first.radius)?;
    let b = chi_from_kernel(&bigbox, first.radius)?;
    table.push(vec![tols[0], 1.0, b.radius as f64, b.value, b.tail_estimate, b.fitted_slope]);
    rep.tables.insert("chi".into(), table);

    let best = fourier.last().unwrap();
    rep.fitted.insert("chi_fourier".into(), best.value);
    rep.fitted.insert("chi_bigbox".into(), b.value);
    rep.fitted.insert("truncation_radius".into(), best.radius as f64);
    rep.fitted.insert("tail_estimate".into(), best.tail_estimate);
    rep.fitted.insert("closed_form".into(), chi_closed_form(d));
    rep.fitted.insert("kappa0_origin".into(), kappa0(&vec![0; d], d)?);

    rep.check("agreement", (first.value - b.value).abs() / first.value, Relation::AtMost, "agreement_tol");
    if fourier.len() > 1 {
        let spread = (fourier[0].value - best.value).abs() / best.value;
        rep.check("truncation_consistency", spread, Relation::AtMost, "truncation_tol");
    }
    rep.check("lower_bound", best.value, Relation::Above, "lower_bound");

    let kernel = InfiniteKernel::fourier(d, first.radius)?;
    let radii: Vec<f64> = (0..=first.radius).map(|r| r as f64).collect();
    let sums = kernel.chi_partial_sums(&radii);
    let mut partial = Table::new(&["radius", "partial_sum"]);
    for (r, s) in radii.iter().zip(&sums) {
        partial.push(vec![*r, *s]);
    }
    rep.tables.insert("partial_sums".into(), partial);
    let worst_drop = sums.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    rep.check("partial_sums_nondecreasing", worst_drop, Relation::AtMost, "monotone_slack");

    let anchor = infinite_double_diff(&vec![0; d], 0, 0, d, KernelMethod::Fourier)?;
    rep.fitted.insert("anchor".into(), anchor);
    rep.check("anchor", (anchor - 2.0).abs(), Relation::AtMost, "anchor_tol");
    Ok(rep)
}
