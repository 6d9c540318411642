//! Independent estimation of the least admissible constant.
//!
//! The constant `C` in
//!
//! ```text
//! ( int_a^b ( int_a^t f )^q w dt )^(1/q)  <=  C ( int_a^b f^p v dt )^(1/p)
//! ```
//!
//! is the supremum of the ratio of the two sides over nonnegative `f`.  This
//! module evaluates that ratio on grid samples ([`hardy_ratio`]), maximizes
//! it by projected gradient ascent from many starts
//! ([`estimate_best_constant`]), and builds the explicit near-extremal test
//! functions that the condition theory suggests ([`witness_convex`],
//! [`witness_nonconvex`]).  The witnesses both provide certified lower
//! bounds (any sampled function gives one) and warm-start the ascent, so the
//! returned estimate dominates every witness ratio by construction.  When
//! `p = q = 2` the discrete problem is a symmetric eigenvalue problem and a
//! power iteration provides an optimizer-free crosscheck.
//!
//! [`gm_transform`] evaluates the limiting geometric-mean operator
//! `exp( (1/t) int_0^t ln f )` on the same grids.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::conditions::{default_epsilons, inner_cum, ConditionError, Scenario};
use crate::quadrature::{cumulative_weighted, Grid, GridError, SampledFunction};
use crate::weights::{ParamError, Regime, VProfile, Weight, WeightError};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("test function interval does not match the scenario")]
    IntervalMismatch,
    #[error("invalid test function: {0}")]
    BadFunction(String),
    #[error("epsilon must be a finite positive real, got {0}")]
    BadEpsilon(f64),
    #[error("unsupported construction: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
}

/// Knobs for [`estimate_best_constant`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    /// Iteration cap per start.
    pub max_iters: usize,
    /// Number of seeded random starts (witness and constant starts are
    /// always added on top).
    pub restarts: usize,
    /// Initial relative step along the normalized ascent direction.
    pub step_init: f64,
    /// Convergence threshold on the relative change of the ratio over a
    /// ten-iteration lag.
    pub tol: f64,
    /// Seed for the random starts; fixed seed, fixed output.
    pub rng_seed: u64,
    /// Epsilon values whose witnesses warm-start the ascent; `None` uses
    /// the default sweep for the scenario's `p`.
    pub witness_eps: Option<Vec<f64>>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            max_iters: 4000,
            restarts: 8,
            step_init: 0.25,
            tol: 1e-10,
            rng_seed: 42,
            witness_eps: None,
        }
    }
}

/// Result of the ratio maximization.
#[derive(Debug, Clone)]
pub struct BestConstantEstimate {
    /// The best ratio found; equals `hardy_ratio` of `maximizer` exactly.
    pub value: f64,
    pub maximizer: SampledFunction,
    /// Total ascent iterations spent across all starts.
    pub iterations: usize,
    /// Number of starts actually optimized.
    pub restarts_used: usize,
    /// Ten-iteration relative change of the winning run at termination.
    pub residual: f64,
    /// Square root of the largest eigenvalue of the discrete quadratic
    /// problem; present exactly when `p = q = 2`.
    pub spectral_crosscheck: Option<f64>,
}

fn pw(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else {
        x.powf(e)
    }
}

/// Weight samples fused with quadrature weights; everything the ratio and
/// its gradient need.
struct RatioCtx<'g> {
    grid: &'g Grid,
    v_omega: Vec<f64>,
    w_omega: Vec<f64>,
    p: f64,
    q: f64,
}

impl<'g> RatioCtx<'g> {
    fn new(scen: &Scenario, grid: &'g Grid) -> Result<Self, EstimatorError> {
        let mut v_omega = Vec::with_capacity(grid.len());
        let mut w_omega = Vec::with_capacity(grid.len());
        for (t, omega) in grid.nodes.iter().zip(&grid.cell_weights) {
            v_omega.push(scen.v.eval(*t)? * omega);
            w_omega.push(scen.w.eval(*t)? * omega);
        }
        Ok(RatioCtx {
            grid,
            v_omega,
            w_omega,
            p: scen.exp.p,
            q: scen.exp.q,
        })
    }

    /// Numerator and denominator norms plus the cumulative transform of `f`.
    fn parts(&self, f: &[f64]) -> (f64, f64, Vec<f64>) {
        let cum = cumulative_weighted(self.grid, f);
        let mut nq = 0.0;
        for (wo, big_f) in self.w_omega.iter().zip(&cum) {
            nq += wo * pw(*big_f, self.q);
        }
        let mut dp = 0.0;
        for (vo, fi) in self.v_omega.iter().zip(f) {
            dp += vo * pw(*fi, self.p);
        }
        (pw(nq, 1.0 / self.q), pw(dp, 1.0 / self.p), cum)
    }

    #[cfg(test)]
    fn ratio(&self, f: &[f64]) -> f64 {
        let (num, den, _) = self.parts(f);
        num / den
    }

    /// Gradient of the ratio at `f`, given the parts already computed.
    fn gradient(&self, f: &[f64], cum: &[f64], num: f64, den: f64) -> Vec<f64> {
        let n = f.len();
        let r = num / den;
        // y = w omega F^(q-1), with the zero-prefix guard for q < 1
        let y: Vec<f64> = self
            .w_omega
            .iter()
            .zip(cum)
            .map(|(wo, big_f)| {
                if self.q < 1.0 && *big_f == 0.0 {
                    0.0
                } else {
                    wo * pw(*big_f, self.q - 1.0)
                }
            })
            .collect();
        let kty = kt_apply(self.grid, &y);
        let nf = pw(num, 1.0 - self.q);
        let df = pw(den, 1.0 - self.p);
        let mut g = Vec::with_capacity(n);
        for s in 0..n {
            let gn = nf * kty[s];
            let gd = df * self.v_omega[s] * pw(f[s], self.p - 1.0);
            g.push((gn - r * gd) / den);
        }
        g
    }
}

/// Adjoint of the cumulative transform: `(K^T y)_s = omega_s sum_{i>s} y_i
/// + headweight_s y_s`.
fn kt_apply(grid: &Grid, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let hw = grid.head_weights();
    let mut out = vec![0.0; n];
    let mut suffix = 0.0;
    for s in (0..n).rev() {
        out[s] = grid.cell_weights[s] * suffix + hw[s] * y[s];
        suffix += y[s];
    }
    out
}

/// The two-sided ratio of the inequality at a sampled test function: the
/// `q`-norm of the cumulative transform against `w` over the `p`-norm of
/// `f` against `v`.  Requires a finite, not identically zero sample on a
/// grid over the scenario's interval.
pub fn hardy_ratio(scen: &Scenario, f: &SampledFunction) -> Result<f64, EstimatorError> {
    if f.grid.interval != scen.interval {
        return Err(EstimatorError::IntervalMismatch);
    }
    if f.values.iter().any(|x| !x.is_finite()) {
        return Err(EstimatorError::BadFunction(
            "samples must be finite".into(),
        ));
    }
    let ctx = RatioCtx::new(scen, &f.grid)?;
    let (num, den, _) = ctx.parts(&f.values);
    if !(den > 0.0) {
        return Err(EstimatorError::BadFunction(
            "the weighted p-norm of the sample vanishes".into(),
        ));
    }
    Ok(num / den)
}

/// Gradient of [`hardy_ratio`] with respect to the sample values at `f`:
/// the ascent direction the optimizer follows.  Same preconditions as
/// `hardy_ratio`.
pub fn ratio_gradient(scen: &Scenario, f: &SampledFunction) -> Result<Vec<f64>, EstimatorError> {
    if f.grid.interval != scen.interval {
        return Err(EstimatorError::IntervalMismatch);
    }
    if f.values.iter().any(|x| !x.is_finite()) {
        return Err(EstimatorError::BadFunction(
            "samples must be finite".into(),
        ));
    }
    let ctx = RatioCtx::new(scen, &f.grid)?;
    let (num, den, cum) = ctx.parts(&f.values);
    if !(den > 0.0) {
        return Err(EstimatorError::BadFunction(
            "the weighted p-norm of the sample vanishes".into(),
        ));
    }
    Ok(ctx.gradient(&f.values, &cum, num, den))
}

struct RunOutcome {
    value: f64,
    f: Vec<f64>,
    iters: usize,
    residual: f64,
}

fn ascend(ctx: &RatioCtx, f0: &[f64], opts: &OptimizerOptions) -> Option<RunOutcome> {
    let (_, den0, _) = ctx.parts(f0);
    if !den0.is_finite() || !(den0 > 0.0) {
        return None;
    }
    let mut f: Vec<f64> = f0.iter().map(|x| x / den0).collect();
    let (mut num, mut den, mut cum) = ctx.parts(&f);
    if !num.is_finite() {
        return None;
    }
    let mut value = num / den;
    let mut step = opts.step_init;
    let mut history = Vec::with_capacity(opts.max_iters.min(1 << 16) + 1);
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    for it in 0..opts.max_iters {
        iters = it + 1;
        let g = ctx.gradient(&f, &cum, num, den);
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm == 0.0 || !gnorm.is_finite() {
            residual = 0.0;
            break;
        }
        let fnorm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = step * fnorm / gnorm;
        let cand: Vec<f64> = f
            .iter()
            .zip(&g)
            .map(|(fi, gi)| (fi + scale * gi).max(0.0))
            .collect();
        let (cnum, cden, _) = ctx.parts(&cand);
        if cden > 0.0 && cnum.is_finite() && cnum / cden > value {
            f = cand.iter().map(|x| x / cden).collect();
            let p = ctx.parts(&f);
            num = p.0;
            den = p.1;
            cum = p.2;
            value = num / den;
            step = (step * 1.3).min(1e6);
        } else {
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        history.push(value);
        if history.len() > 10 {
            let past = history[history.len() - 11];
            residual = (value - past).abs() / value.abs().max(f64::MIN_POSITIVE);
            if residual <= opts.tol {
                break;
            }
        }
    }
    Some(RunOutcome {
        value,
        f,
        iters,
        residual,
    })
}

/// Truncation indices at which convex witnesses are planted: the full
/// window plus a few dyadic fractions of it.
pub(crate) fn witness_indices(n: usize) -> Vec<usize> {
    let mut idxs = vec![n - 1, (3 * n) / 4, n / 2, n / 4, n / 8];
    idxs.sort_unstable();
    idxs.dedup();
    idxs
}

/// Maximizes the discrete ratio over nonnegative grid samples: projected
/// gradient ascent with backtracking, warm-started from the constant
/// function and from every witness for the epsilon sweep, plus seeded
/// random starts.  Fixed options give bitwise-identical results regardless
/// of thread count.
pub fn estimate_best_constant(
    scen: &Scenario,
    grid: &Arc<Grid>,
    opts: &OptimizerOptions,
) -> Result<BestConstantEstimate, EstimatorError> {
    let n = grid.len();
    let ctx = RatioCtx::new(scen, grid)?;
    let eps_list = match &opts.witness_eps {
        Some(list) => list.clone(),
        None => default_epsilons(scen.exp.p),
    };

    // for p = q = 2 the spectral solve runs first: it both supplies the
    // crosscheck and warm-starts the ascent at the top eigenfunction, whose
    // ratio equals the spectral value by construction
    let spectral = if scen.exp.p == 2.0 && scen.exp.q == 2.0 {
        Some(spectral_largest(&ctx))
    } else {
        None
    };

    let mut starts: Vec<Vec<f64>> = vec![vec![1.0; n]];
    if let Some((_, eigf)) = &spectral {
        starts.push(eigf.clone());
    }
    match scen.exp.regime() {
        Regime::Convex => {
            let idxs = witness_indices(n);
            for eps in &eps_list {
                for idx in &idxs {
                    if let Ok(wf) = witness_convex(scen, *eps, grid, *idx) {
                        starts.push(wf.values);
                    }
                }
            }
        }
        Regime::NonConvex => {
            for eps in &eps_list {
                if let Ok(wf) = witness_nonconvex(scen, *eps, grid) {
                    starts.push(wf.values);
                }
            }
        }
    }
    for k in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed.wrapping_add(k as u64));
        let vals: Vec<f64> = (0..n)
            .map(|_| (3.0 * (rng.gen::<f64>() - 0.5)).exp())
            .collect();
        starts.push(vals);
    }

    let outcomes: Vec<Option<RunOutcome>> = starts
        .par_iter()
        .map(|f0| ascend(&ctx, f0, opts))
        .collect();

    let mut iterations = 0;
    let mut restarts_used = 0;
    let mut best: Option<RunOutcome> = None;
    for oc in outcomes.into_iter().flatten() {
        iterations += oc.iters;
        restarts_used += 1;
        let better = match &best {
            None => true,
            Some(b) => oc.value > b.value,
        };
        if better {
            best = Some(oc);
        }
    }
    let win = best.ok_or_else(|| {
        EstimatorError::BadFunction("no start produced a usable test function".into())
    })?;

    let maximizer = SampledFunction::new(Arc::clone(grid), win.f)?;
    let value = hardy_ratio(scen, &maximizer)?;
    Ok(BestConstantEstimate {
        value,
        maximizer,
        iterations,
        restarts_used,
        residual: win.residual,
        spectral_crosscheck: spectral.map(|(lam, _)| lam),
    })
}

/// Largest singular value of the weighted discrete cumulative transform:
/// power iteration on the symmetrized quadratic form, all-ones start,
/// stopping on a settled Rayleigh quotient.
/// Power iteration on the symmetrized normal equations of the cumulative
/// operator.  Returns the square root of the largest eigenvalue (the
/// p = q = 2 best constant on this grid) together with the corresponding
/// test function; the kernel is entrywise nonnegative, so the iterates
/// stay nonnegative and the returned function is feasible for the
/// optimizer.
fn spectral_largest(ctx: &RatioCtx) -> (f64, Vec<f64>) {
    let n = ctx.v_omega.len();
    let sqrt_b: Vec<f64> = ctx.v_omega.iter().map(|x| x.sqrt()).collect();
    let matvec = |y: &[f64]| -> Vec<f64> {
        let x: Vec<f64> = y.iter().zip(&sqrt_b).map(|(yi, sb)| yi / sb).collect();
        let cum = cumulative_weighted(ctx.grid, &x);
        let z: Vec<f64> = ctx.w_omega.iter().zip(&cum).map(|(wo, c)| wo * c).collect();
        let kt = kt_apply(ctx.grid, &z);
        kt.iter().zip(&sqrt_b).map(|(k, sb)| k / sb).collect()
    };
    let mut y = vec![1.0 / (n as f64).sqrt(); n];
    let mut lam_prev = 0.0;
    let mut lam = 0.0;
    let mut streak = 0;
    for _ in 0..300_000 {
        let sy = matvec(&y);
        lam = y.iter().zip(&sy).map(|(a, b)| a * b).sum::<f64>();
        let norm = sy.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (0.0, vec![1.0; n]);
        }
        y = sy.iter().map(|x| x / norm).collect();
        if (lam - lam_prev).abs() <= 1e-15 * lam.abs().max(f64::MIN_POSITIVE) {
            streak += 1;
            if streak >= 3 {
                break;
            }
        } else {
            streak = 0;
        }
        lam_prev = lam;
    }
    let f = y
        .iter()
        .zip(&sqrt_b)
        .map(|(yi, sb)| (yi / sb).max(0.0))
        .collect();
    (lam.max(0.0).sqrt(), f)
}

fn check_eps(eps: f64) -> Result<(), EstimatorError> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(EstimatorError::BadEpsilon(eps));
    }
    Ok(())
}

fn sample(w: &Weight, grid: &Grid) -> Result<Vec<f64>, EstimatorError> {
    grid.nodes
        .iter()
        .map(|t| w.eval(*t).map_err(EstimatorError::from))
        .collect()
}

/// Near-extremal test function for the convex regime, truncated at node
/// `t_idx`.  For `p > 1` it is `V^{1+eps-p'} v^{1-p'}` on the initial
/// segment; for `p = 1` it concentrates unit `v`-mass bumps at the nodes
/// where the profile first crosses each dyadic level, modulated by `V^eps`.
pub fn witness_convex(
    scen: &Scenario,
    eps: f64,
    grid: &Arc<Grid>,
    t_idx: usize,
) -> Result<SampledFunction, EstimatorError> {
    check_eps(eps)?;
    let n = grid.len();
    if t_idx >= n {
        return Err(EstimatorError::Grid(GridError::IndexRange {
            from: t_idx,
            to: t_idx,
            n,
        }));
    }
    let p = scen.exp.p;
    let prof = VProfile::build(&scen.v, p, grid)?;
    if prof.is_infinite_sentinel() {
        return Err(EstimatorError::Unsupported(
            "the cumulative profile diverges on every initial segment".into(),
        ));
    }
    let vv = sample(&scen.v, grid)?;
    let mut vals = vec![0.0; n];
    if p > 1.0 {
        let pc = scen.exp.p_conj;
        let e1 = 1.0 + eps - pc;
        for i in 0..=t_idx {
            vals[i] = prof.values[i].powf(e1) * vv[i].powf(1.0 - pc);
        }
    } else {
        // dyadic profile classes
        let vmax = prof.values[t_idx];
        let mut k = prof.values[0].log2().floor() as i64;
        let mut i = 0usize;
        let mut placed = false;
        while (k as f64).exp2() <= vmax {
            let level = (k as f64).exp2();
            while i <= t_idx && prof.values[i] < level {
                i += 1;
            }
            if i > t_idx {
                break;
            }
            vals[i] += prof.values[i].powf(eps) / (vv[i] * grid.cell_weights[i]);
            placed = true;
            k += 1;
        }
        if !placed {
            vals[t_idx] = 1.0 / (vv[t_idx] * grid.cell_weights[t_idx]);
        }
    }
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(EstimatorError::Unsupported(
            "witness values overflow on this grid".into(),
        ));
    }
    Ok(SampledFunction {
        grid: Arc::clone(grid),
        values: vals,
    })
}

/// Near-extremal test function for the non-convex regime (`p > 1`): the
/// suffix Stieltjes integral of `G^{r/q} V^{-p'}` against the profile
/// measure, raised to `1/p`, times `v^{1-p'}`.
pub fn witness_nonconvex(
    scen: &Scenario,
    eps: f64,
    grid: &Arc<Grid>,
) -> Result<SampledFunction, EstimatorError> {
    check_eps(eps)?;
    let r = scen.exp.r.ok_or_else(|| {
        EstimatorError::Unsupported("this witness requires the non-convex regime q < p".into())
    })?;
    if scen.exp.p == 1.0 {
        return Err(EstimatorError::Unsupported(
            "this witness is stated for p > 1".into(),
        ));
    }
    let Some(ctx) = inner_cum(scen, eps, grid)? else {
        return Err(EstimatorError::Unsupported(
            "the cumulative profile diverges on every initial segment".into(),
        ));
    };
    let (q, pc) = (scen.exp.q, scen.exp.p_conj);
    let s = eps * r;
    let n = grid.len();
    let vprof = &ctx.prof.values;
    let vv = sample(&scen.v, grid)?;

    // suffix Stieltjes sums of G^{r/q} V^{-p'} against d[-V^{-s}]
    let integrand: Vec<f64> = (0..n)
        .map(|j| ctx.g_cum[j].powf(r / q) * vprof[j].powf(-pc))
        .collect();
    let vb = ctx.prof.v_at_b;
    let vb_pow = if vb.is_infinite() { 0.0 } else { vb.powf(-s) };
    let mut suffix = vec![0.0; n];
    let tail_mass = (vprof[n - 1].powf(-s) - vb_pow).max(0.0);
    suffix[n - 1] = integrand[n - 1] * tail_mass;
    for j in (0..n - 1).rev() {
        let mass = (vprof[j].powf(-s) - vprof[j + 1].powf(-s)).max(0.0);
        suffix[j] = suffix[j + 1] + integrand[j] * mass;
    }

    let vals: Vec<f64> = (0..n)
        .map(|i| suffix[i].powf(1.0 / scen.exp.p) * vv[i].powf(1.0 - pc))
        .collect();
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(EstimatorError::Unsupported(
            "witness values overflow on this grid".into(),
        ));
    }
    Ok(SampledFunction {
        grid: Arc::clone(grid),
        values: vals,
    })
}

/// The limiting geometric-mean operator `exp( (1/t) int_0^t ln f )`,
/// truncated at the grid head: mass below the truncation window is treated
/// as `ln 1 = 0`.  Requires strictly positive finite samples on positive
/// coordinates.
pub fn gm_transform(f: &SampledFunction) -> Result<SampledFunction, EstimatorError> {
    let grid = &f.grid;
    if grid.nodes[0] <= 0.0 {
        return Err(EstimatorError::Unsupported(
            "the geometric mean needs strictly positive coordinates".into(),
        ));
    }
    if f.values.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(EstimatorError::BadFunction(
            "samples must be finite and strictly positive".into(),
        ));
    }
    let lnf: Vec<f64> = f.values.iter().map(|x| x.ln()).collect();
    let cum = cumulative_weighted(grid, &lnf);
    let vals: Vec<f64> = cum
        .iter()
        .zip(&grid.nodes)
        .map(|(c, t)| (c / t).exp())
        .collect();
    Ok(SampledFunction {
        grid: Arc::clone(grid),
        values: vals,
    })
}
