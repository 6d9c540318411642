//! Condition functionals controlling the two-weight cumulative-averaging
//! inequality
//!
//! ```text
//! ( int_a^b ( int_a^t f )^q w dt )^(1/q)  <=  C ( int_a^b f^p v dt )^(1/p)
//! ```
//!
//! on its epsilon scale, together with the classical supremum and integral
//! conditions used as cross-checks.  With `V` the cumulative weight profile
//! of `v` (see [`crate::weights::VProfile`]):
//!
//! * convex regime `1 <= p <= q`:
//!   `A_eps = sup_t V(t)^-eps ( int_a^t V^{q(eps+1)} w )^(1/q)`,
//! * non-convex regime `0 < q < p`, `r = pq/(p-q)`:
//!   `B1_eps = ( int_a^b ( int_a^t V^{q(eps+1)} w )^{r/p} V^{q(eps+1)-eps r} w dt )^(1/r)`,
//!   `B2_eps = ( int_a^b ( int_a^t V^{q(eps+1)} w )^{r/q} d[-V^{-eps r}] )^(1/r)
//!             + V(b)^-eps ( int_a^b V^{q(eps+1)} w )^(1/q)`,
//! * `A_PS` is the shared specialization `eps = p' - 1` of `A_eps` (convex)
//!   or `B1_eps` (non-convex),
//! * the classical supremum condition `sup_t (int_t^b w)^{1/q} V(t)` covers
//!   `1 <= p <= q` (with the `p = 1` profile branch), and the classical
//!   integral condition
//!   `int_a^b (int_t^b w)^{r/q} (int_a^t v^{1-p'})^{r/q'} v^{1-p'} dt`
//!   covers `1 <= q < p`, `p > 1` (reported as the raw integral).
//!
//! Every value is a grid under-estimate by construction: supremum conditions
//! scan grid nodes, integrals use the composite rule, and Stieltjes sums are
//! left-node lower sums.  Divergence is detected analytically where the
//! representations allow it (power-law pairs on intervals starting at 0,
//! exact step-weight tails) and propagates as the `inf` sentinel: a condition
//! value is infinite exactly when some subexpression diverges under that
//! analysis.  Anything the grid cannot see is surfaced through
//! `err_estimate`, which may itself be infinite when a truncated tail is
//! genuinely indeterminate.

use std::sync::Arc;

use thiserror::Error;

use crate::quadrature::{
    cumulative_weighted, stieltjes_cells, Grid, GridError, SampledFunction, StieltjesEval,
};
use crate::weights::{Exponents, Interval, ParamError, Regime, VProfile, Weight, WeightError};

/// A fully specified inequality instance: interval, weight pair, exponents.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub interval: Interval,
    pub v: Weight,
    pub w: Weight,
    pub exp: Exponents,
}

impl Scenario {
    pub fn new(
        interval: Interval,
        v: Weight,
        w: Weight,
        exp: Exponents,
    ) -> Result<Self, ConditionError> {
        for weight in [&v, &w] {
            match weight {
                Weight::Power { .. } => {
                    if interval.a < 0.0 {
                        return Err(ConditionError::Invalid(
                            "power weights are only valid on subintervals of (0, inf)".into(),
                        ));
                    }
                }
                Weight::PiecewiseConstant { breaks, .. } => {
                    if breaks.iter().any(|b| !interval.contains(*b)) {
                        return Err(ConditionError::Invalid(
                            "piecewise breakpoints must lie inside the interval".into(),
                        ));
                    }
                }
                Weight::Tabulated { nodes, .. } => {
                    if nodes.iter().any(|x| !interval.contains(*x)) {
                        return Err(ConditionError::Invalid(
                            "tabulation nodes must lie inside the interval".into(),
                        ));
                    }
                }
            }
        }
        Ok(Scenario {
            interval,
            v,
            w,
            exp,
        })
    }
}

/// Which functional a [`ConditionValue`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    AEps,
    B1Eps,
    B2Eps,
    APs,
    Muckenhoupt,
    MuckenhouptP1,
    MazyaRosin,
}

/// A computed condition value with its resolution diagnostics.
#[derive(Debug, Clone)]
pub struct ConditionValue {
    pub kind: ConditionKind,
    pub epsilon: Option<f64>,
    /// The grid estimate; `f64::INFINITY` is the divergence sentinel.
    pub value: f64,
    /// Scale of what the grid may have missed (adjacent-node modulus for
    /// sups, coarsening gaps for integrals, upper-lower gaps and truncated
    /// head mass for Stieltjes sums).  Infinite when a truncated tail is
    /// indeterminate.
    pub err_estimate: f64,
    pub grid_n: usize,
}

#[derive(Debug, Error)]
pub enum ConditionError {
    #[error("{condition} requires {requirement}, got p={p}, q={q}")]
    WrongRegime {
        condition: &'static str,
        requirement: &'static str,
        p: f64,
        q: f64,
    },
    #[error("unsupported variant: {0}")]
    Unsupported(String),
    #[error("epsilon must be a finite positive real, got {0}")]
    BadEpsilon(f64),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// The default epsilon sweep: `{1/4, 1/2, 1, 2, 4}` plus `p' - 1` when
/// `p > 1`, sorted with duplicates removed.
pub fn default_epsilons(p: f64) -> Vec<f64> {
    let mut eps = vec![0.25, 0.5, 1.0, 2.0, 4.0];
    if p > 1.0 {
        eps.push(1.0 / (p - 1.0));
    }
    eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eps.dedup();
    eps
}

fn check_epsilon(eps: f64) -> Result<(), ConditionError> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(ConditionError::BadEpsilon(eps));
    }
    Ok(())
}

fn sample_weight(w: &Weight, grid: &Grid) -> Result<Vec<f64>, ConditionError> {
    grid.nodes
        .iter()
        .map(|t| w.eval(*t).map_err(ConditionError::from))
        .collect()
}

/// Exact power-law shape of the profile when both weights are power laws on
/// an interval starting at 0: there `V(t) = kv * t^gamma` globally, so the
/// integrands below are global power laws with closed-form heads and tails.
struct PowerShape {
    kv: f64,
    gamma: f64,
    w_c: f64,
    w_alpha: f64,
}

impl PowerShape {
    fn detect(scen: &Scenario) -> Option<PowerShape> {
        if scen.interval.a != 0.0 {
            return None;
        }
        let (vc, va) = match scen.v {
            Weight::Power { c, alpha } => (c, alpha),
            _ => return None,
        };
        let (wc, wa) = match scen.w {
            Weight::Power { c, alpha } => (c, alpha),
            _ => return None,
        };
        let p = scen.exp.p;
        if p > 1.0 {
            let pc = scen.exp.p_conj;
            let m = va * (1.0 - pc);
            if m <= -1.0 {
                return None; // profile is the infinite sentinel
            }
            Some(PowerShape {
                kv: (vc.powf(1.0 - pc) / (m + 1.0)).powf(1.0 / pc),
                gamma: (m + 1.0) / pc,
                w_c: wc,
                w_alpha: wa,
            })
        } else {
            if va > 0.0 {
                return None; // 1/v blows up at 0: sentinel
            }
            Some(PowerShape {
                kv: 1.0 / vc,
                gamma: -va,
                w_c: wc,
                w_alpha: wa,
            })
        }
    }

    /// Exponent of the inner integrand `V^{q(eps+1)} w ~ t^eta`.
    fn inner_exp(&self, q: f64, eps: f64) -> f64 {
        self.gamma * q * (eps + 1.0) + self.w_alpha
    }

    fn inner_coef(&self, q: f64, eps: f64) -> f64 {
        self.kv.powf(q * (eps + 1.0)) * self.w_c
    }
}

/// How the stretch between `a` and the truncation edge was handled when
/// accumulating the inner integral.
enum HeadInfo {
    /// Nothing omitted (edge coincides with `a`).
    Complete,
    /// Closed-form head value, already added to the cumulative.
    Analytic(f64),
    /// The inner integral diverges on every initial segment.
    Divergent,
    /// Head skipped; the scale of the first resolved cell as a marker.
    Omitted(f64),
}

/// Shared state for the non-convex functionals and the identity residual.
pub(crate) struct InnerCum {
    pub(crate) prof: VProfile,
    /// `w` at nodes.
    wv: Vec<f64>,
    /// Cumulative inner integral `G(t_i)`, head included.
    pub(crate) g_cum: Vec<f64>,
    /// `G(b)`: head + all cells + tail (infinite when divergent).
    pub(crate) g_total: f64,
    /// Error markers accumulated for `G(b)` (possibly infinite).
    g_total_err: f64,
    head: HeadInfo,
    shape: Option<PowerShape>,
}

pub(crate) fn inner_cum(
    scen: &Scenario,
    eps: f64,
    grid: &Arc<Grid>,
) -> Result<Option<InnerCum>, ConditionError> {
    let q = scen.exp.q;
    let prof = VProfile::build(&scen.v, scen.exp.p, grid)?;
    if prof.is_infinite_sentinel() {
        return Ok(None);
    }
    let wv = sample_weight(&scen.w, grid)?;
    let qe = q * (eps + 1.0);
    let phi: Vec<f64> = prof
        .values
        .iter()
        .zip(&wv)
        .map(|(v, w)| v.powf(qe) * w)
        .collect();
    let shape = PowerShape::detect(scen);
    let a = scen.interval.a;
    let lo = grid.trunc_lo;

    let head = if let Some(sh) = &shape {
        let eta = sh.inner_exp(q, eps);
        if eta <= -1.0 {
            HeadInfo::Divergent
        } else if lo > 0.0 {
            HeadInfo::Analytic(sh.inner_coef(q, eps) * lo.powf(eta + 1.0) / (eta + 1.0))
        } else {
            HeadInfo::Complete
        }
    } else if lo > a {
        HeadInfo::Omitted(phi[0] * grid.cell_weights[0])
    } else {
        HeadInfo::Complete
    };

    let mut g_cum = cumulative_weighted(grid, &phi);
    match &head {
        HeadInfo::Analytic(h) => {
            for g in &mut g_cum {
                *g += h;
            }
        }
        HeadInfo::Divergent => {
            g_cum.fill(f64::INFINITY);
        }
        _ => {}
    }

    // G(b): cells, plus head, plus the stretch beyond the window.
    let n = grid.len();
    let b = scen.interval.b;
    let hi = grid.trunc_hi;
    let mut g_total: f64 = phi
        .iter()
        .zip(&grid.cell_weights)
        .map(|(p, w)| p * w)
        .sum();
    let mut g_total_err = 0.0;
    match &head {
        HeadInfo::Analytic(h) => g_total += h,
        HeadInfo::Divergent => g_total = f64::INFINITY,
        HeadInfo::Omitted(m) => g_total_err += m,
        HeadInfo::Complete => {}
    }
    if b > hi && g_total.is_finite() {
        if let Some(sh) = &shape {
            let eta = sh.inner_exp(q, eps);
            if b.is_infinite() {
                if eta >= -1.0 {
                    g_total = f64::INFINITY;
                } else {
                    g_total += sh.inner_coef(q, eps) * hi.powf(eta + 1.0) / (-(eta + 1.0));
                }
            } else {
                g_total +=
                    sh.inner_coef(q, eps) * (b.powf(eta + 1.0) - hi.powf(eta + 1.0)) / (eta + 1.0);
            }
        } else {
            let w_tail = scen.w.int_pow(hi, b, 1.0).value;
            let last_v = prof.values[n - 1].powf(qe);
            if last_v * w_tail == f64::INFINITY {
                // lower bound already infinite: certain divergence
                g_total = f64::INFINITY;
            } else if prof.v_at_b.is_finite() {
                g_total_err += prof.v_at_b.powf(qe) * w_tail;
            } else {
                g_total_err = f64::INFINITY;
            }
        }
    }

    Ok(Some(InnerCum {
        prof,
        wv,
        g_cum,
        g_total,
        g_total_err,
        head,
        shape,
    }))
}

/// The epsilon-scale supremum condition for the convex regime `1 <= p <= q`.
pub fn a_eps(scen: &Scenario, eps: f64, grid: &Arc<Grid>) -> Result<ConditionValue, ConditionError> {
    let (p, q) = (scen.exp.p, scen.exp.q);
    if scen.exp.regime() != Regime::Convex {
        return Err(ConditionError::WrongRegime {
            condition: "a_eps",
            requirement: "the convex regime 1 <= p <= q",
            p,
            q,
        });
    }
    check_epsilon(eps)?;
    let done = |value: f64, err: f64| ConditionValue {
        kind: ConditionKind::AEps,
        epsilon: Some(eps),
        value,
        err_estimate: err,
        grid_n: grid.len(),
    };
    let Some(ctx) = inner_cum(scen, eps, grid)? else {
        return Ok(done(f64::INFINITY, 0.0));
    };
    if matches!(ctx.head, HeadInfo::Divergent) {
        return Ok(done(f64::INFINITY, 0.0));
    }
    // where the profile still vanishes the inner mass is exactly zero and
    // the objective's limit is 0, so those nodes never carry the sup
    let obj: Vec<f64> = ctx
        .prof
        .values
        .iter()
        .zip(&ctx.g_cum)
        .map(|(v, g)| if *v == 0.0 { 0.0 } else { v.powf(-eps) * g.powf(1.0 / q) })
        .collect();
    let (mut best, mut best_i) = (f64::NEG_INFINITY, 0usize);
    for (i, o) in obj.iter().enumerate() {
        if *o > best {
            best = *o;
            best_i = i;
        }
    }
    let mut err = obj
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0f64, f64::max);
    if let HeadInfo::Omitted(m) = ctx.head {
        let g = ctx.g_cum[best_i];
        err += ctx.prof.values[best_i].powf(-eps) * ((g + m).powf(1.0 / q) - g.powf(1.0 / q));
    }
    Ok(done(best, err))
}

fn require_nonconvex(
    scen: &Scenario,
    condition: &'static str,
) -> Result<f64, ConditionError> {
    match scen.exp.r {
        Some(r) => Ok(r),
        None => Err(ConditionError::WrongRegime {
            condition,
            requirement: "the non-convex regime 0 < q < p",
            p: scen.exp.p,
            q: scen.exp.q,
        }),
    }
}

/// Raw outer integral of the first non-convex functional (before the `1/r`
/// root), with its error markers.  `None` marks the profile sentinel.
fn b1_raw(
    scen: &Scenario,
    eps: f64,
    grid: &Arc<Grid>,
    ctx: &InnerCum,
    r: f64,
) -> (f64, f64) {
    let (p, q) = (scen.exp.p, scen.exp.q);
    let x2 = q * (eps + 1.0) - eps * r;
    // nodes where the profile still vanishes hold exactly zero inner mass,
    // so their integrand is 0 even when x2 < 0 would make V^x2 blow up
    let psi: Vec<f64> = (0..grid.len())
        .map(|i| {
            if ctx.prof.values[i] == 0.0 {
                0.0
            } else {
                ctx.g_cum[i].powf(r / p) * ctx.prof.values[i].powf(x2) * ctx.wv[i]
            }
        })
        .collect();
    let sf = SampledFunction {
        grid: Arc::clone(grid),
        values: psi,
    };
    let (mut integral, mut err) = crate::quadrature::integrate_with_estimate(&sf);
    let psi_vals = &sf.values;

    let lo = grid.trunc_lo;
    let hi = grid.trunc_hi;
    let b = scen.interval.b;
    if let Some(sh) = &ctx.shape {
        let eta = sh.inner_exp(q, eps);
        if eta <= -1.0 {
            return (f64::INFINITY, 0.0);
        }
        let kg = sh.inner_coef(q, eps) / (eta + 1.0);
        let xi = (eta + 1.0) * r / p + sh.gamma * x2 + sh.w_alpha;
        let kpsi = kg.powf(r / p) * sh.kv.powf(x2) * sh.w_c;
        if xi <= -1.0 {
            return (f64::INFINITY, 0.0);
        }
        if lo > 0.0 {
            integral += kpsi * lo.powf(xi + 1.0) / (xi + 1.0);
        }
        if b > hi {
            if b.is_infinite() {
                if xi >= -1.0 {
                    return (f64::INFINITY, 0.0);
                }
                integral += kpsi * hi.powf(xi + 1.0) / (-(xi + 1.0));
            } else {
                integral += kpsi * (b.powf(xi + 1.0) - hi.powf(xi + 1.0)) / (xi + 1.0);
            }
        }
    } else {
        if let HeadInfo::Omitted(_) = ctx.head {
            err += psi_vals[0] * grid.cell_weights[0];
        }
        if b > hi {
            if b.is_infinite() {
                err = f64::INFINITY;
            } else {
                err += psi_vals[grid.len() - 1] * (b - hi);
            }
        }
    }
    (integral, err)
}

/// The first epsilon-scale integral condition for `0 < q < p`.
pub fn b1_eps(scen: &Scenario, eps: f64, grid: &Arc<Grid>) -> Result<ConditionValue, ConditionError> {
    let r = require_nonconvex(scen, "b1_eps")?;
    check_epsilon(eps)?;
    let done = |value: f64, err: f64| ConditionValue {
        kind: ConditionKind::B1Eps,
        epsilon: Some(eps),
        value,
        err_estimate: err,
        grid_n: grid.len(),
    };
    let Some(ctx) = inner_cum(scen, eps, grid)? else {
        return Ok(done(f64::INFINITY, 0.0));
    };
    let (integral, ierr) = b1_raw(scen, eps, grid, &ctx, r);
    if integral.is_infinite() {
        return Ok(done(f64::INFINITY, 0.0));
    }
    let value = integral.powf(1.0 / r);
    let err = if ierr.is_finite() {
        (integral + ierr).powf(1.0 / r) - value
    } else {
        f64::INFINITY
    };
    Ok(done(value, err))
}

/// Stieltjes leg of the second non-convex functional: cells over the window,
/// an analytic or marker head, and the mass between the last node and `b`.
struct StieltjesLeg {
    value: f64,
    gap: f64,
    head_err: f64,
}

fn x_leg(
    scen: &Scenario,
    eps: f64,
    grid: &Grid,
    ctx: &InnerCum,
    r: f64,
    eval: StieltjesEval,
) -> StieltjesLeg {
    let q = scen.exp.q;
    let s = eps * r;
    let n = grid.len();
    let g: Vec<f64> = ctx.g_cum.iter().map(|x| x.powf(r / q)).collect();
    let vvals = &ctx.prof.values;
    let mut value = stieltjes_cells(&g, vvals, s, 0, n - 1, eval);
    // upper-minus-lower gap of the cell sums
    let upper = {
        let mut acc = 0.0;
        for i in 0..n - 1 {
            if vvals[i] == 0.0 {
                continue;
            }
            let mass = vvals[i].powf(-s) - vvals[i + 1].powf(-s);
            if mass > 0.0 {
                acc += g[i + 1] * mass;
            }
        }
        acc
    };
    let lower = stieltjes_cells(&g, vvals, s, 0, n - 1, StieltjesEval::Left);
    let mut gap = (upper - lower).max(0.0);

    // mass between the last node and b
    let vb = ctx.prof.v_at_b;
    let vb_pow = if vb.is_infinite() { 0.0 } else { vb.powf(-s) };
    if vvals[n - 1] > 0.0 {
        let mass = vvals[n - 1].powf(-s) - vb_pow;
        if mass > 0.0 {
            let g_b = if ctx.g_total.is_finite() {
                ctx.g_total.powf(r / q)
            } else {
                f64::INFINITY
            };
            let gval = match eval {
                StieltjesEval::Trapezoid if g_b.is_finite() && !vb.is_infinite() => {
                    0.5 * (g[n - 1] + g_b)
                }
                _ => g[n - 1],
            };
            value += gval * mass;
            if g_b.is_finite() {
                gap += (g_b - g[n - 1]).max(0.0) * mass;
            } else {
                gap = f64::INFINITY;
            }
        }
    }

    // head: mass below the first node
    let mut head_err = 0.0;
    match &ctx.shape {
        Some(sh) if sh.gamma > 0.0 => {
            let eta = sh.inner_exp(q, eps);
            if eta <= -1.0 {
                value = f64::INFINITY;
            } else {
                let kg = sh.inner_coef(q, eps) / (eta + 1.0);
                let zeta = (eta + 1.0) * r / q - sh.gamma * s - 1.0;
                let kx = kg.powf(r / q) * s * sh.gamma * sh.kv.powf(-s);
                if zeta <= -1.0 {
                    value = f64::INFINITY;
                } else {
                    value += kx * grid.nodes[0].powf(zeta + 1.0) / (zeta + 1.0);
                }
            }
        }
        Some(_) => {} // constant profile: the measure has no head mass
        None => {
            if vvals[0] > 0.0 {
                head_err = g[0] * vvals[0].powf(-s);
            } else {
                head_err = f64::INFINITY;
            }
        }
    }
    StieltjesLeg {
        value,
        gap,
        head_err,
    }
}

/// The second epsilon-scale functional for `0 < q < p`: Stieltjes leg plus
/// the endpoint term `V(b)^-eps (int_a^b V^{q(eps+1)} w)^(1/q)` (zero when
/// `V(b)` is infinite).
pub fn b2_eps(scen: &Scenario, eps: f64, grid: &Arc<Grid>) -> Result<ConditionValue, ConditionError> {
    let r = require_nonconvex(scen, "b2_eps")?;
    check_epsilon(eps)?;
    let q = scen.exp.q;
    let done = |value: f64, err: f64| ConditionValue {
        kind: ConditionKind::B2Eps,
        epsilon: Some(eps),
        value,
        err_estimate: err,
        grid_n: grid.len(),
    };
    let Some(ctx) = inner_cum(scen, eps, grid)? else {
        return Ok(done(f64::INFINITY, 0.0));
    };
    if matches!(ctx.head, HeadInfo::Divergent) {
        return Ok(done(f64::INFINITY, 0.0));
    }
    let leg = x_leg(scen, eps, grid, &ctx, r, StieltjesEval::Left);
    if leg.value.is_infinite() {
        return Ok(done(f64::INFINITY, 0.0));
    }
    let term1 = leg.value.powf(1.0 / r);
    let vb = ctx.prof.v_at_b;
    let term2 = if vb.is_infinite() {
        0.0
    } else {
        vb.powf(-eps) * ctx.g_total.powf(1.0 / q)
    };
    let value = term1 + term2;
    let err = if leg.gap.is_finite() && leg.head_err.is_finite() && ctx.g_total_err.is_finite() {
        let t1_hi = (leg.value + leg.gap + leg.head_err).powf(1.0 / r);
        let t2_err = if vb.is_infinite() || ctx.g_total_err == 0.0 {
            0.0
        } else {
            vb.powf(-eps)
                * ((ctx.g_total + ctx.g_total_err).powf(1.0 / q) - ctx.g_total.powf(1.0 / q))
        };
        (t1_hi - term1) + t2_err
    } else {
        f64::INFINITY
    };
    Ok(done(value, err))
}

/// Relative defect of the integration-by-parts identity linking the two
/// non-convex functionals:
///
/// ```text
/// B1^r = (q/r) * ( int_a^b G^{r/q} d[-V^{-eps r}] + V(b)^{-eps r} G(b)^{r/q} ),
/// ```
///
/// with `G(t) = int_a^t V^{q(eps+1)} w`.  The identity is exact in the
/// continuum, so the residual measures pure discretization error.  Both
/// sides infinite gives 0; exactly one infinite gives 1.  The Stieltjes leg
/// is evaluated at cell-endpoint averages here (second order) so the residual
/// shrinks at the quadrature rate rather than at the lower-sum rate.
pub fn b1_b2_identity_residual(
    scen: &Scenario,
    eps: f64,
    grid: &Arc<Grid>,
) -> Result<f64, ConditionError> {
    let r = require_nonconvex(scen, "b1_b2_identity_residual")?;
    check_epsilon(eps)?;
    let q = scen.exp.q;
    let s = eps * r;
    let Some(ctx) = inner_cum(scen, eps, grid)? else {
        return Ok(0.0); // both sides are the divergence sentinel
    };
    let (b1r, _) = b1_raw(scen, eps, grid, &ctx, r);
    let leg = x_leg(scen, eps, grid, &ctx, r, StieltjesEval::Trapezoid);
    let vb = ctx.prof.v_at_b;
    let y = if vb.is_infinite() {
        match &ctx.shape {
            Some(sh) if sh.gamma > 0.0 => {
                let eta = sh.inner_exp(q, eps);
                let kg = sh.inner_coef(q, eps) / (eta + 1.0);
                let lim_exp = (eta + 1.0) * r / q - sh.gamma * s;
                if lim_exp < 0.0 {
                    0.0
                } else if lim_exp == 0.0 {
                    kg.powf(r / q) * sh.kv.powf(-s)
                } else {
                    f64::INFINITY
                }
            }
            _ => 0.0,
        }
    } else {
        vb.powf(-s) * ctx.g_total.powf(r / q)
    };
    let rhs = (q / r) * (leg.value + y);
    if b1r.is_infinite() && rhs.is_infinite() {
        return Ok(0.0);
    }
    if b1r.is_infinite() != rhs.is_infinite() {
        return Ok(1.0);
    }
    let denom = b1r.abs().max(rhs.abs());
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((b1r - rhs).abs() / denom)
}

/// The shared classical specialization `eps = p' - 1` of the epsilon scale:
/// the supremum condition in the convex regime, the first integral condition
/// otherwise.  Requires `p > 1`.
pub fn a_ps(scen: &Scenario, grid: &Arc<Grid>) -> Result<ConditionValue, ConditionError> {
    let (p, q) = (scen.exp.p, scen.exp.q);
    if p <= 1.0 {
        return Err(ConditionError::WrongRegime {
            condition: "a_ps",
            requirement: "p > 1",
            p,
            q,
        });
    }
    let eps = scen.exp.p_conj - 1.0;
    let inner = if scen.exp.regime() == Regime::Convex {
        a_eps(scen, eps, grid)?
    } else {
        b1_eps(scen, eps, grid)?
    };
    Ok(ConditionValue {
        kind: ConditionKind::APs,
        epsilon: None,
        ..inner
    })
}

/// The classical supremum condition `sup_t (int_t^b w)^{1/q} V(t)` for
/// `1 <= p <= q`, using the `p = 1` profile branch when `p = 1`.
pub fn muckenhoupt(scen: &Scenario, grid: &Arc<Grid>) -> Result<ConditionValue, ConditionError> {
    let (p, q) = (scen.exp.p, scen.exp.q);
    if scen.exp.regime() != Regime::Convex {
        return Err(ConditionError::WrongRegime {
            condition: "muckenhoupt",
            requirement: "the convex regime 1 <= p <= q",
            p,
            q,
        });
    }
    let kind = if p == 1.0 {
        ConditionKind::MuckenhouptP1
    } else {
        ConditionKind::Muckenhoupt
    };
    let prof = VProfile::build(&scen.v, p, grid)?;
    let done = |value: f64, err: f64| ConditionValue {
        kind,
        epsilon: None,
        value,
        err_estimate: err,
        grid_n: grid.len(),
    };
    if prof.is_infinite_sentinel() {
        return Ok(done(f64::INFINITY, 0.0));
    }
    let b = scen.interval.b;
    let mut defect = 0.0;
    let obj: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&prof.values)
        .map(|(t, v)| {
            let tail = scen.w.int_pow(*t, b, 1.0);
            defect += tail.defect;
            tail.value.powf(1.0 / q) * v
        })
        .collect();
    let best = obj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if best.is_infinite() {
        return Ok(done(f64::INFINITY, 0.0));
    }
    let mut err = obj
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0f64, f64::max);
    if defect > 0.0 {
        err += defect;
    }
    Ok(done(best, err))
}

/// The classical integral condition for the non-convex regime, restricted to
/// `1 <= q < p`, `p > 1`:
///
/// ```text
/// int_a^b ( int_t^b w )^{r/q} ( int_a^t v^{1-p'} )^{r/q'} v(t)^{1-p'} dt,
/// ```
///
/// reported as the raw integral (take its `1/r` root for a constant-scale
/// figure).  `q = 1` makes `q' = inf` and the middle factor 1.
pub fn mazya_rosin(scen: &Scenario, grid: &Arc<Grid>) -> Result<ConditionValue, ConditionError> {
    let (p, q) = (scen.exp.p, scen.exp.q);
    if q >= p {
        return Err(ConditionError::WrongRegime {
            condition: "mazya_rosin",
            requirement: "the non-convex regime q < p",
            p,
            q,
        });
    }
    if p == 1.0 {
        return Err(ConditionError::Unsupported(
            "the classical integral condition is stated for p > 1".into(),
        ));
    }
    if q < 1.0 {
        return Err(ConditionError::Unsupported(
            "the classical integral condition is stated for q >= 1".into(),
        ));
    }
    let r = scen.exp.r.expect("q < p implies r is defined");
    let pc = scen.exp.p_conj;
    let mid_exp = if q == 1.0 { 0.0 } else { r * (q - 1.0) / q };
    let prof = VProfile::build(&scen.v, p, grid)?;
    let done = |value: f64, err: f64| ConditionValue {
        kind: ConditionKind::MazyaRosin,
        epsilon: None,
        value,
        err_estimate: err,
        grid_n: grid.len(),
    };
    if prof.is_infinite_sentinel() {
        return Ok(done(f64::INFINITY, 0.0));
    }
    let b = scen.interval.b;
    let hi = grid.trunc_hi;
    let vv = sample_weight(&scen.v, grid)?;
    let vals: Vec<f64> = (0..grid.len())
        .map(|i| {
            let t = grid.nodes[i];
            let w_tail = scen.w.int_pow(t, b, 1.0).value;
            let mid = if mid_exp == 0.0 {
                1.0
            } else {
                prof.values[i].powf(pc * mid_exp)
            };
            w_tail.powf(r / q) * mid * vv[i].powf(1.0 - pc)
        })
        .collect();
    if vals.iter().any(|x| x.is_infinite()) {
        return Ok(done(f64::INFINITY, 0.0));
    }
    let sf = SampledFunction {
        grid: Arc::clone(grid),
        values: vals,
    };
    let (mut integral, mut err) = crate::quadrature::integrate_with_estimate(&sf);
    if grid.trunc_lo > scen.interval.a {
        err += sf.values[0] * grid.cell_weights[0];
    }
    if b > hi {
        match (&scen.v, &scen.w) {
            (Weight::Power { c: vc, alpha: va }, Weight::Power { c: wc, alpha: wa })
                if b.is_infinite() =>
            {
                // both tails are global power laws beyond the window
                let mv = va * (1.0 - pc);
                if *wa >= -1.0 || mv <= -1.0 {
                    // w tail or the profile diverges: integrand was infinite
                    // already unless the integrand vanishes; mark instead.
                    err = f64::INFINITY;
                } else {
                    let kw = wc / (-(wa + 1.0));
                    let kv = vc.powf(1.0 - pc) / (mv + 1.0);
                    let exp_t =
                        (wa + 1.0) * r / q + (mv + 1.0) * mid_exp + mv;
                    let coef = kw.powf(r / q) * kv.powf(mid_exp) * vc.powf(1.0 - pc);
                    if exp_t >= -1.0 {
                        integral = f64::INFINITY;
                    } else {
                        integral += coef * hi.powf(exp_t + 1.0) / (-(exp_t + 1.0));
                    }
                }
            }
            _ => {
                if b.is_infinite() {
                    err = f64::INFINITY;
                } else {
                    err += sf.values[grid.len() - 1] * (b - hi);
                }
            }
        }
    }
    if integral.is_infinite() {
        return Ok(done(f64::INFINITY, 0.0));
    }
    Ok(done(integral, err))
}
