use super::{ExperimentConfig, ExperimentReport, Relation, Table};
use crate::continuum::{l2_inner, TestFunction};
use crate::correlation::{pairing_covariance_exact, pairing_cumulants_exact};
use crate::error::{Error, Result};
use crate::greens::{chi_closed_form, solve_green};
use crate::lattice::discretize;
use crate::sampler::{covariance_estimate, k_statistics, sample_pairings, PairingMode, PairingWeights};

/// Covariance structure of `ε^{d/2}⟨Φ_ε, f⟩_S` against `χ ∫ f_p f_q`,
/// exactly over the eps schedule and by Monte Carlo at the finest level.
pub fn run_whitenoise(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.min_levels(3)?;
    let spec = cfg.domain_spec()?;
    let d = spec.dim();
    if !(2..=3).contains(&d) {
        return Err(Error::DimensionUnsupported {
            d,
            reason: "white-noise presets cover d = 2 and d = 3",
        });
    }
    let fs = &cfg.functions;
    if fs.is_empty() {
        return Err(Error::InvalidConfig("whitenoise needs test functions".into()));
    }
    let mut rep = ExperimentReport::new(cfg);
    rep.tol(cfg, "covariance_rel_tol", 0.15);
    rep.tol(cfg, "disjoint_tol", 0.05);
    rep.tol(cfg, "improvement_margin", 0.0);
    let chi = chi_closed_form(d);
    rep.fitted.insert("chi".into(), chi);

    let m = fs.len();
    let mut l2 = vec![vec![0.0; m]; m];
    for p in 0..m {
        for q in p..m {
            l2[p][q] = l2_inner(&fs[p], &fs[q], spec)?;
            l2[q][p] = l2[p][q];
        }
    }

    let mut table = Table::new(&["eps", "p", "q", "exact", "target", "normalized_error"]);
    let mut errors = vec![vec![Vec::new(); m]; m];
    let mut finest_exact = vec![vec![0.0; m]; m];
    let mut finest_green = None;
    for &eps in &cfg.eps {
        let green = solve_green(&discretize(spec, eps)?)?;
        let scale = eps.powi(d as i32);
        for p in 0..m {
            for q in p..m {
                let (fp, fq) = (&fs[p], &fs[q]);
                let cov = scale * pairing_covariance_exact(&green, &|x| fp.eval(x), &|x| fq.eval(x));
                let target = chi * l2[p][q];
                let err = (cov - target).abs() / (chi * (l2[p][p] * l2[q][q]).sqrt());
                table.push(vec![eps, p as f64, q as f64, cov, target, err]);
                errors[p][q].push(err);
                finest_exact[p][q] = cov;
            }
        }
        finest_green = Some(green);
    }
    rep.tables.insert("covariance".into(), table);

    for p in 0..m {
        for q in p..m {
            let errs = &errors[p][q];
            let key = if l2[p][q] == 0.0 {
                "disjoint_tol"
            } else {
                "covariance_rel_tol"
            };
            rep.check(format!("covariance[{p},{q}]"), *errs.last().unwrap(), Relation::AtMost, key);
            if p == q {
                rep.check(
                    format!("improvement[{p}]"),
                    errs.last().unwrap() - errs[0],
                    Relation::Below,
                    "improvement_margin",
                );
                let worst_step = errs
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::NEG_INFINITY, f64::max);
                rep.check(format!("monotone[{p}]"), worst_step, Relation::Below, "improvement_margin");
            }
        }
    }

    if cfg.replicates > 0 {
        let green = finest_green.expect("at least three levels");
        monte_carlo(cfg, &mut rep, &green, fs, &finest_exact)?;
    }
    rep.notes.push(
        "exact covariances use the trace identity over the support, without distance cutoff"
            .into(),
    );
    Ok(rep)
}

fn monte_carlo(
    cfg: &ExperimentConfig,
    rep: &mut ExperimentReport,
    green: &crate::greens::GreenTable,
    fs: &[TestFunction],
    exact: &[Vec<f64>],
) -> Result<()> {
    rep.tol(cfg, "mc_z", 4.0);
    rep.tol(cfg, "skewness_tol", 0.1);
    rep.tol(cfg, "kurtosis_tol", 0.2);
    let domain = green.domain();
    let eps = domain.eps();
    let d = domain.dim();
    let scale = eps.powf(d as f64 / 2.0);
    let weights = fs
        .iter()
        .map(|f| {
            let mut w = PairingWeights::new(domain, f, PairingMode::Sum)?;
            w.weight.iter_mut().for_each(|x| *x *= scale);
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    let values = sample_pairings(green, &weights, cfg.replicates, cfg.seed);
    let column = |p: usize| values.iter().map(|r| r[p]).collect::<Vec<f64>>();
    let m = fs.len();

    let mut table = Table::new(&["eps", "p", "q", "mc", "std_error", "exact", "z"]);
    for p in 0..m {
        for q in p..m {
            let est = covariance_estimate(&format!("cov[{p},{q}]"), &column(p), &column(q), cfg.seed)?;
            let z = (est.value - exact[p][q]).abs() / est.std_error;
            table.push(vec![eps, p as f64, q as f64, est.value, est.std_error, exact[p][q], z]);
            rep.check(format!("mc_covariance[{p},{q}]"), z, Relation::AtMost, "mc_z");
        }
    }
    rep.tables.insert("mc_covariance".into(), table);

    let mut normal = Table::new(&[
        "p",
        "mc_k3",
        "mc_k3_std_error",
        "exact_k3",
        "mc_skewness",
        "mc_excess_kurtosis",
        "exact_skewness",
        "exact_excess_kurtosis",
    ]);
    for (p, f) in fs.iter().enumerate() {
        let ks = k_statistics(&format!("f{p}"), &column(p), 4, cfg.seed)?;
        let ex = pairing_cumulants_exact(green, &|x| f.eval(x), 4);
        let ex: Vec<f64> = (0..=4).map(|n| ex[n] * scale.powi(n as i32)).collect();
        let skew = ks[2].value / ks[1].value.powf(1.5);
        let kurt = ks[3].value / ks[1].value.powi(2);
        normal.push(vec![
            p as f64,
            ks[2].value,
            ks[2].std_error,
            ex[3],
            skew,
            kurt,
            ex[3] / ex[2].powf(1.5),
            ex[4] / ex[2].powi(2),
        ]);
        rep.check(
            format!("mc_third_cumulant[{p}]"),
            (ks[2].value - ex[3]).abs() / ks[2].std_error,
            Relation::AtMost,
            "mc_z",
        );
        rep.check(format!("normality_skewness[{p}]"), skew.abs(), Relation::Below, "skewness_tol");
        rep.check(format!("normality_kurtosis[{p}]"), kurt.abs(), Relation::Below, "kurtosis_tol");
    }
    rep.tables.insert("normality".into(), normal);
    rep.fitted.insert("mc_replicates".into(), cfg.replicates as f64);
    Ok(())
}
