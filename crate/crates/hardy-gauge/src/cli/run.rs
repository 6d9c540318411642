//! Turns a parsed run configuration into report rows.
//!
//! One row per scenario x epsilon.  Epsilon-independent quantities (the
//! shifted-anchor value, the endpoint-supremum condition, the non-convex
//! integral condition, the best-constant estimate) are computed once per
//! scenario and repeated on each of its rows.  A cell is absent when the
//! quantity does not apply to the scenario's regime or was not requested,
//! and failed when its evaluation hit a numerical error; failures never
//! abort the run, they surface in the report and in the process exit code.

use std::sync::Arc;

use rayon::prelude::*;

use crate::conditions::{
    a_eps, a_ps, b1_b2_identity_residual, b1_eps, b2_eps, default_epsilons, mazya_rosin,
    muckenhoupt, ConditionError, ConditionValue, Scenario,
};
use crate::estimator::{
    estimate_best_constant, hardy_ratio, witness_convex, witness_indices, witness_nonconvex,
    EstimatorError,
};
use crate::quadrature::{Grid, SampledFunction};
use crate::weights::{Exponents, Interval, Regime, VProfile};

use super::config::{ConditionChoice, EpsilonSpec, GridSpec, RunConfig, ScenarioSpec};
use super::report::{Cell, ReportRow};

fn condition_cell(res: Result<ConditionValue, ConditionError>) -> Cell {
    match res {
        Ok(cv) => Cell::from_value(cv.value),
        Err(_) => Cell::Failed,
    }
}

/// Builds the runtime scenario and grid for a parsed spec.  Specs that
/// came out of [`parse_config`](super::config::parse_config) were already
/// dry-run through these constructors, so this cannot fail for them.
pub fn materialize(spec: &ScenarioSpec, grid_spec: &GridSpec) -> (Scenario, Arc<Grid>) {
    let interval = Interval::new(spec.a, spec.b).expect("validated at parse");
    let exp = Exponents::new(spec.p, spec.q).expect("validated at parse");
    let scen = Scenario::new(interval, spec.v.clone(), spec.w.clone(), exp)
        .expect("validated at parse");
    let grid = Arc::new(grid_spec.build(&interval).expect("validated at parse"));
    (scen, grid)
}

/// The sorted, deduplicated epsilon sweep for a scenario with exponent `p`.
pub fn resolve_epsilons(spec: &EpsilonSpec, p: f64) -> Vec<f64> {
    let mut eps = match spec {
        EpsilonSpec::Default => default_epsilons(p),
        EpsilonSpec::List(list) => list.clone(),
    };
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    eps
}

/// Best witness ratio for one scenario x epsilon, or why there is none.
///
/// `Absent` covers the cases with no witness family: the divergent-profile
/// sentinel and constructions the library declines (for example the
/// non-convex family at p = 1).  Anything else that errors is a failure.
pub fn witness_cell(scen: &Scenario, grid: &Arc<Grid>, eps: f64, sentinel: bool) -> Cell {
    if sentinel {
        return Cell::Absent;
    }
    let mut candidates: Vec<SampledFunction> = Vec::new();
    let mut failed = false;
    match scen.exp.regime() {
        Regime::Convex => {
            for idx in witness_indices(grid.len()) {
                match witness_convex(scen, eps, grid, idx) {
                    Ok(wf) => candidates.push(wf),
                    Err(EstimatorError::Unsupported(_)) => {}
                    Err(_) => failed = true,
                }
            }
        }
        Regime::NonConvex => match witness_nonconvex(scen, eps, grid) {
            Ok(wf) => candidates.push(wf),
            Err(EstimatorError::Unsupported(_)) => {}
            Err(_) => failed = true,
        },
    }
    let mut best: Option<f64> = None;
    for wf in &candidates {
        match hardy_ratio(scen, wf) {
            Ok(r) => best = Some(best.map_or(r, |b| b.max(r))),
            Err(_) => failed = true,
        }
    }
    match (best, failed) {
        (Some(r), _) => Cell::from_value(r),
        (None, true) => Cell::Failed,
        (None, false) => Cell::Absent,
    }
}

/// Evaluates every scenario in the config across its epsilon sweep.
///
/// Rows come back sorted by (scenario id, epsilon).  Construction of the
/// scenarios and grids cannot fail here: the config parser already
/// dry-ran it.
pub fn run_analyze(cfg: &RunConfig) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = Vec::new();
    for spec in &cfg.scenarios {
        let (scen, grid) = materialize(spec, &cfg.grid);
        let eps = resolve_epsilons(&cfg.epsilons, spec.p);
        let chosen = |c: ConditionChoice| spec.conditions.contains(&c);

        let mut opts = cfg.estimator.clone();
        opts.witness_eps = Some(eps.clone());
        let c_hat = match estimate_best_constant(&scen, &grid, &opts) {
            Ok(est) => Cell::from_value(est.value),
            Err(_) => Cell::Failed,
        };

        let a_ps_cell = if chosen(ConditionChoice::APs) {
            condition_cell(a_ps(&scen, &grid))
        } else {
            Cell::Absent
        };
        let muck_cell = if chosen(ConditionChoice::Muckenhoupt) {
            condition_cell(muckenhoupt(&scen, &grid))
        } else {
            Cell::Absent
        };
        let mr_cell = if chosen(ConditionChoice::MazyaRosin) {
            condition_cell(mazya_rosin(&scen, &grid))
        } else {
            Cell::Absent
        };

        let sentinel = VProfile::build(&spec.v, spec.p, &grid)
            .map(|prof| prof.is_infinite_sentinel())
            .unwrap_or(false);

        let scen_rows: Vec<ReportRow> = eps
            .par_iter()
            .map(|&e| {
                let a_cell = if chosen(ConditionChoice::AEps) {
                    condition_cell(a_eps(&scen, e, &grid))
                } else {
                    Cell::Absent
                };
                let b1_cell = if chosen(ConditionChoice::B1Eps) {
                    condition_cell(b1_eps(&scen, e, &grid))
                } else {
                    Cell::Absent
                };
                let b2_cell = if chosen(ConditionChoice::B2Eps) {
                    condition_cell(b2_eps(&scen, e, &grid))
                } else {
                    Cell::Absent
                };
                let residual = if chosen(ConditionChoice::B1Eps) && chosen(ConditionChoice::B2Eps)
                {
                    match b1_b2_identity_residual(&scen, e, &grid) {
                        Ok(r) => Cell::from_value(r),
                        Err(_) => Cell::Failed,
                    }
                } else {
                    Cell::Absent
                };
                ReportRow {
                    scenario_id: spec.name.clone(),
                    p: spec.p,
                    q: spec.q,
                    epsilon: e,
                    a_eps: a_cell,
                    b1_eps: b1_cell,
                    b2_eps: b2_cell,
                    a_ps: a_ps_cell,
                    muckenhoupt: muck_cell,
                    mazya_rosin: mr_cell,
                    c_hat,
                    witness_lb: witness_cell(&scen, &grid, e, sentinel),
                    residual_b1b2: residual,
                    grid_n: grid.len(),
                }
            })
            .collect();
        rows.extend(scen_rows);
    }
    rows.sort_by(|x, y| {
        x.scenario_id
            .cmp(&y.scenario_id)
            .then(x.epsilon.total_cmp(&y.epsilon))
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    const NONCONVEX: &str = "\
[scenario.anchor]
p = 2
q = 1
a = 0
b = 1
v = power 1 0
w = power 1 0

[grid]
n = 256

[epsilons]
values = 1, 3

[estimator]
max_iters = 400
restarts = 2
";

    #[test]
    fn nonconvex_rows_have_expected_shape() {
        let cfg = parse_config(NONCONVEX).unwrap();
        let rows = run_analyze(&cfg);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].epsilon, 1.0);
        assert_eq!(rows[1].epsilon, 3.0);
        for row in &rows {
            assert_eq!(row.scenario_id, "anchor");
            assert_eq!(row.grid_n, 256);
            assert_eq!(row.a_eps, Cell::Absent);
            assert_eq!(row.muckenhoupt, Cell::Absent);
            assert!(matches!(row.b1_eps, Cell::Value(x) if x.is_finite()));
            assert!(matches!(row.b2_eps, Cell::Value(x) if x.is_finite()));
            assert!(matches!(row.mazya_rosin, Cell::Value(x) if x.is_finite()));
            assert!(matches!(row.residual_b1b2, Cell::Value(x) if x < 1e-2));
            assert!(!row.any_failed());
        }
        // both rows repeat the per-scenario cells
        assert_eq!(rows[0].c_hat, rows[1].c_hat);
        assert_eq!(rows[0].mazya_rosin, rows[1].mazya_rosin);
        // the estimate dominates the witness lower bound
        let (c, lb) = match (rows[0].c_hat, rows[0].witness_lb) {
            (Cell::Value(c), Cell::Value(lb)) => (c, lb),
            other => panic!("unexpected cells {other:?}"),
        };
        assert!(lb <= c + 1e-9, "witness {lb} above estimate {c}");
        assert!(lb >= 0.25 * c);
    }

    #[test]
    fn convex_rows_leave_nonconvex_columns_empty() {
        let text = NONCONVEX.replace("q = 1", "q = 2");
        let cfg = parse_config(&text).unwrap();
        let rows = run_analyze(&cfg);
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(matches!(row.a_eps, Cell::Value(_)));
            assert!(matches!(row.muckenhoupt, Cell::Value(_)));
            assert_eq!(row.b1_eps, Cell::Absent);
            assert_eq!(row.b2_eps, Cell::Absent);
            assert_eq!(row.mazya_rosin, Cell::Absent);
            assert_eq!(row.residual_b1b2, Cell::Absent);
            assert!(!row.any_failed());
        }
    }

    #[test]
    fn divergent_profile_reports_inf_without_failing() {
        // v(t) = t on (0,1) with p = 2 makes the profile integral diverge
        // at the left endpoint, so conditions carry the inf sentinel.
        let text = NONCONVEX
            .replace("q = 1", "q = 2")
            .replace("v = power 1 0", "v = power 1 1");
        let cfg = parse_config(&text).unwrap();
        let rows = run_analyze(&cfg);
        for row in &rows {
            assert_eq!(row.a_eps, Cell::Value(f64::INFINITY));
            assert_eq!(row.witness_lb, Cell::Absent);
            assert!(!row.any_failed());
        }
    }

    #[test]
    fn runtime_weight_failure_marks_cells() {
        // tabulated weight defined only from t = 0.5 upward: grid nodes
        // below it fail pointwise evaluation, so the ratio estimate dies,
        // while profile-based conditions absorb the uncovered head into
        // their error estimate and still produce values.
        let text = NONCONVEX.replace(
            "v = power 1 0",
            "v = tabulated 0.5,0.75 1.0,1.0",
        );
        let cfg = parse_config(&text).unwrap();
        let rows = run_analyze(&cfg);
        assert!(!rows.is_empty());
        for row in &rows {
            assert!(row.any_failed());
            assert_eq!(row.c_hat, Cell::Failed);
            // profile-based conditions still evaluate (possibly to the
            // divergence sentinel where the vanished head is raised to a
            // negative power)
            assert!(matches!(row.b1_eps, Cell::Value(_)));
        }
        assert!(matches!(rows[0].b1_eps, Cell::Value(x) if x.is_finite()));
    }
}
