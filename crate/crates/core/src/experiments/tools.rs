use super::{ExperimentConfig, ExperimentReport, Relation, Table};
use crate::continuum::ContinuumGreen;
use crate::correlation::{evaluate_request, pairing_cumulants_exact, Side};
use crate::error::{Error, Result};
use crate::greens::solve_green;
use crate::lattice::{discretize, floor_point};
use crate::sampler::{k_statistics, mc_pairings, McConfig};

/// Solves the Green's function on each level and checks the solve.
pub fn run_green(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let spec = cfg.domain_spec()?;
    if cfg.eps.is_empty() {
        return Err(Error::InvalidConfig("green needs at least one eps".into()));
    }
    let mut rep = ExperimentReport::new(cfg);
    rep.tol(cfg, "residual_tol", 1e-10);
    rep.tol(cfg, "symmetry_tol", 1e-10);
    let mut solve = Table::new(&["eps", "vertices", "envelope", "dense", "max_residual", "max_asymmetry"]);
    let mut values = Table::new(&["eps", "pair", "value"]);
    let (mut worst_res, mut worst_sym) = (0.0f64, 0.0f64);
    for &eps in &cfg.eps {
        let green = solve_green(&discretize(spec, eps)?)?;
        let n = green.len();
        // a fixed spread of probe columns
        let probes: Vec<usize> = (0..16.min(n)).map(|t| t * n / 16.min(n)).collect();
        let res = probes.iter().map(|&y| green.laplacian_residual(y)).fold(0.0, f64::max);
        let mut sym: f64 = 0.0;
        for &x in &probes {
            for &y in &probes {
                sym = sym.max((green.get(x, y) - green.get(y, x)).abs());
            }
        }
        solve.push(vec![
            eps,
            n as f64,
            green.cholesky().envelope_size() as f64,
            if green.is_dense() { 1.0 } else { 0.0 },
            res,
            sym,
        ]);
        worst_res = worst_res.max(res);
        worst_sym = worst_sym.max(sym);
        for (pair, pq) in cfg.points.chunks(2).enumerate() {
            if let [p, q] = pq {
                let (a, b) = (floor_point(p, eps), floor_point(q, eps));
                values.push(vec![eps, pair as f64, green.at(&a.0, &b.0)]);
            }
        }
    }
    rep.tables.insert("solve".into(), solve);
    if !values.rows.is_empty() {
        rep.tables.insert("values".into(), values);
    }
    rep.check("laplacian_residual", worst_res, Relation::AtMost, "residual_tol");
    rep.check("symmetry", worst_sym, Relation::AtMost, "symmetry_tol");
    Ok(rep)
}

/// Evaluates one correlation request.
pub fn run_kpoint(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let req = cfg
        .request
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("kpoint needs a request".into()))?;
    let mut rep = ExperimentReport::new(cfg);
    rep.tol(cfg, "decomposition_tol", 1e-12);
    let result = match req.side {
        Side::Discrete => {
            let eps = *cfg
                .eps
                .first()
                .ok_or_else(|| Error::InvalidConfig("the discrete side needs eps".into()))?;
            let green = solve_green(&discretize(cfg.domain_spec()?, eps)?)?;
            evaluate_request(req, Some(&green), ContinuumGreen::UnitDisk)?
        }
        Side::ContinuumLimit => {
            let cont = match &cfg.domain {
                Some(s) => ContinuumGreen::for_domain(s)?,
                None => ContinuumGreen::UnitDisk,
            };
            evaluate_request(req, None, cont)?
        }
    };
    rep.fitted.insert("value".into(), result.value);
    rep.fitted.insert("k".into(), result.metadata.k as f64);
    rep.notes.push(format!("method: {}", result.metadata.method));
    rep.notes.push(format!("domain: {}", result.metadata.domain));
    if let Some(terms) = &result.decomposition {
        let mut table = Table::new(&["term", "value"]);
        for (t, term) in terms.iter().enumerate() {
            table.push(vec![t as f64, term.value]);
            rep.notes.push(format!("term {t}: {:?}", term.label));
        }
        rep.tables.insert("terms".into(), table);
        let sum: f64 = terms.iter().map(|t| t.value).sum();
        let scale = result.value.abs().max(f64::MIN_POSITIVE);
        rep.check("decomposition", (sum - result.value).abs() / scale, Relation::AtMost, "decomposition_tol");
    }
    Ok(rep)
}

/// Monte Carlo k-statistics of the rescaled sum pairings, compared with the
/// exact cumulants.
pub fn run_sample(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let spec = cfg.domain_spec()?.clone();
    let eps = *cfg
        .eps
        .first()
        .ok_or_else(|| Error::InvalidConfig("sample needs eps".into()))?;
    let max_order = cfg.orders.iter().copied().max().unwrap_or(4);
    let mc = McConfig {
        domain: spec.clone(),
        eps,
        functions: cfg.functions.clone(),
        replicates: cfg.replicates,
        seed: cfg.seed,
        max_order,
    };
    let values = mc_pairings(&mc)?;
    let mut rep = ExperimentReport::new(cfg);
    rep.tol(cfg, "mc_z", 4.0);

    let green = solve_green(&discretize(&spec, eps)?)?;
    let d = spec.dim();
    let scale = eps.powf(d as f64 / 2.0);
    let mut table = Table::new(&["f_id", "order", "value", "std_error", "exact", "z"]);
    for (fi, f) in cfg.functions.iter().enumerate() {
        let xs: Vec<f64> = values.iter().map(|r| r[fi]).collect();
        let ks = k_statistics(&format!("f{fi}"), &xs, max_order, cfg.seed)?;
        let exact = pairing_cumulants_exact(&green, &|x| f.eval(x), max_order);
        for (o, est) in ks.iter().enumerate() {
            let n = o + 1;
            let ex = exact.get(n).copied().unwrap_or(0.0) * scale.powi(n as i32);
            let z = (est.value - ex).abs() / est.std_error;
            table.push(vec![fi as f64, n as f64, est.value, est.std_error, ex, z]);
            rep.check(format!("cumulant[f={fi},n={n}]"), z, Relation::AtMost, "mc_z");
        }
    }
    rep.tables.insert("estimates".into(), table);
    let mut dump = Table::new(&["replicate", "f_id", "value"]);
    for (r, row) in values.iter().enumerate() {
        for (fi, v) in row.iter().enumerate() {
            dump.push(vec![r as f64, fi as f64, *v]);
        }
    }
    rep.dumps.insert("replicates".into(), dump);
    Ok(rep)
}
