use super::{loglog_slope, ExperimentConfig, ExperimentReport, Relation, Table};
use crate::correlation::pairing_cumulants_exact;
use crate::error::{Error, Result};
use crate::greens::solve_green;
use crate::lattice::discretize;

/// Exact `κ_n(ε^{d/2}⟨Φ_ε, f⟩_S)` across the schedule with log-log slopes
/// compared against `(d-1)(n-2)/2`.
pub fn run_cumulant_decay(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.min_levels(3)?;
    let spec = cfg.domain_spec()?;
    let d = spec.dim();
    let f = cfg
        .functions
        .first()
        .ok_or_else(|| Error::InvalidConfig("cumulant decay needs a test function".into()))?;
    let orders = if cfg.orders.is_empty() {
        vec![3, 4]
    } else {
        cfg.orders.clone()
    };
    if orders.iter().any(|&n| !(2..=8).contains(&n)) {
        return Err(Error::InvalidConfig("cumulant orders must lie in 2..=8".into()));
    }
    let max_n = *orders.iter().max().unwrap();

    let mut rep = ExperimentReport::new(cfg);
    rep.tol(cfg, "slope_factor", 0.8);
    rep.tol(cfg, "decrease_ratio", 1.0);

    let mut table = Table::new(&["eps", "n", "kappa"]);
    let mut series = vec![Vec::new(); max_n + 1];
    for &eps in &cfg.eps {
        let green = solve_green(&discretize(spec, eps)?)?;
        let ks = pairing_cumulants_exact(&green, &|x| f.eval(x), max_n);
        for n in 2..=max_n {
            let k = ks[n] * eps.powf((n * d) as f64 / 2.0);
            table.push(vec![eps, n as f64, k]);
            series[n].push(k);
        }
    }
    rep.tables.insert("cumulants".into(), table);

    for &n in &orders {
        let ks = &series[n];
        let worst = ks
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        if n >= 3 {
            rep.check(format!("decreasing[{n}]"), worst, Relation::Below, "decrease_ratio");
            let theory = (d - 1) as f64 * (n - 2) as f64 / 2.0;
            let slope = if ks.iter().all(|&k| k > 0.0) {
                loglog_slope(&cfg.eps, ks)
            } else {
                f64::NAN
            };
            rep.fitted.insert(format!("slope[{n}]"), slope);
            rep.fitted.insert(format!("theory_slope[{n}]"), theory);
            let ratio = if slope.is_nan() { f64::NEG_INFINITY } else { slope / theory };
            rep.check(format!("slope[{n}]"), ratio, Relation::AtLeast, "slope_factor");
        }
    }
    rep.notes.push(
        "cumulants are exact sums over all support tuples via the trace identity; no cutoff tail"
            .into(),
    );
    Ok(rep)
}
