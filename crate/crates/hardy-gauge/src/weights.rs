//! Weight representations and the cumulative weight profile.
//!
//! A weight is a strictly positive function on a subinterval of the real
//! line, restricted to three closed-form representations: power laws
//! `c * t^alpha` on subintervals of `(0, inf)`, piecewise-constant functions
//! given by breakpoints, and tabulated samples interpreted as a
//! right-continuous step function.  Keeping the representation symbolic lets
//! integrals of `v^e` over arbitrary subintervals be evaluated exactly, which
//! is what the profile
//!
//! ```text
//! V(t) = ( int_a^t v^(1-p') )^(1/p')      for p > 1,
//! V(t) = ess sup_{s in (a,t)} 1/v(s)      for p = 1,
//! ```
//!
//! is built from.  `V` is nondecreasing by construction; its limit at the
//! right endpoint is kept separately and may be infinite.  When the defining
//! integral already diverges on every initial segment the profile collapses
//! to the infinite sentinel and downstream condition values propagate it.

use std::sync::Arc;

use thiserror::Error;

use crate::quadrature::Grid;

/// Errors from weight construction and evaluation.
#[derive(Debug, Error)]
pub enum WeightError {
    #[error("evaluation point {t} outside the weight's domain of validity")]
    Domain { t: f64 },
    #[error("invalid weight data: {0}")]
    Invalid(String),
}

/// Errors from exponent or interval construction.
#[derive(Debug, Error)]
pub enum ParamError {
    #[error("interval endpoints must satisfy a < b, got ({a}, {b})")]
    BadInterval { a: f64, b: f64 },
    #[error("exponents must satisfy 1 <= p < inf and 0 < q < inf, got p={p}, q={q}")]
    BadExponents { p: f64, q: f64 },
}

/// An open interval `(a, b)` with extended-real endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, ParamError> {
        if a.is_nan() || b.is_nan() || !(a < b) {
            return Err(ParamError::BadInterval { a, b });
        }
        Ok(Interval { a, b })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.a < t && t < self.b
    }
}

/// Integrability regime of an exponent pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `1 <= p <= q < inf`.
    Convex,
    /// `0 < q < p < inf`.
    NonConvex,
}

/// The exponent pair `(p, q)` with derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    /// Conjugate exponent `p' = p/(p-1)`; infinite when `p = 1`.
    pub p_conj: f64,
    /// `r = pq/(p-q)`, defined only when `q < p`.
    pub r: Option<f64>,
}

impl Exponents {
    pub fn new(p: f64, q: f64) -> Result<Self, ParamError> {
        if !(p >= 1.0) || !p.is_finite() || !(q > 0.0) || !q.is_finite() {
            return Err(ParamError::BadExponents { p, q });
        }
        let p_conj = if p > 1.0 { p / (p - 1.0) } else { f64::INFINITY };
        let r = if q < p { Some(p * q / (p - q)) } else { None };
        Ok(Exponents { p, q, p_conj, r })
    }

    pub fn regime(&self) -> Regime {
        if self.p <= self.q {
            Regime::Convex
        } else {
            Regime::NonConvex
        }
    }
}

/// Result of an exact weight-power integral: the computed value plus a
/// defect term for any part of the range the representation does not cover
/// (only tabulated weights have such a region, below their first node).
#[derive(Debug, Clone, Copy)]
pub struct IntPart {
    pub value: f64,
    pub defect: f64,
}

/// A strictly positive weight in one of three closed-form representations.
///
/// All representations are evaluated right-continuously.  `Power` is valid on
/// subintervals of `(0, inf)`; the step representations are valid wherever
/// their pieces reach (a tabulated weight is undefined below its first node).
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Power { c: f64, alpha: f64 },
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
}

fn check_positive_values(values: &[f64]) -> Result<(), WeightError> {
    if values.is_empty() {
        return Err(WeightError::Invalid("empty value list".into()));
    }
    if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(WeightError::Invalid(
            "weight values must be finite and strictly positive".into(),
        ));
    }
    Ok(())
}

fn check_strictly_increasing(xs: &[f64], what: &str) -> Result<(), WeightError> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(WeightError::Invalid(format!("{what} must be finite")));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(WeightError::Invalid(format!(
            "{what} must be strictly increasing"
        )));
    }
    Ok(())
}

impl Weight {
    pub fn power(c: f64, alpha: f64) -> Result<Self, WeightError> {
        if !c.is_finite() || c <= 0.0 || !alpha.is_finite() {
            return Err(WeightError::Invalid(format!(
                "power weight needs finite c > 0 and finite alpha, got c={c}, alpha={alpha}"
            )));
        }
        Ok(Weight::Power { c, alpha })
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self, WeightError> {
        check_positive_values(&values)?;
        check_strictly_increasing(&breaks, "breakpoints")?;
        if values.len() != breaks.len() + 1 {
            return Err(WeightError::Invalid(format!(
                "piecewise weight needs one more value than breakpoints, got {} values for {} breakpoints",
                values.len(),
                breaks.len()
            )));
        }
        Ok(Weight::PiecewiseConstant { breaks, values })
    }

    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self, WeightError> {
        check_positive_values(&values)?;
        check_strictly_increasing(&nodes, "tabulation nodes")?;
        if nodes.len() != values.len() {
            return Err(WeightError::Invalid(format!(
                "tabulated weight needs matching node/value counts, got {}/{}",
                nodes.len(),
                values.len()
            )));
        }
        Ok(Weight::Tabulated { nodes, values })
    }

    /// Evaluates the weight at `t` (right-continuous for step forms).
    pub fn eval(&self, t: f64) -> Result<f64, WeightError> {
        match self {
            Weight::Power { c, alpha } => {
                if !(t > 0.0) || !t.is_finite() {
                    return Err(WeightError::Domain { t });
                }
                Ok(c * t.powf(*alpha))
            }
            Weight::PiecewiseConstant { breaks, values } => {
                if t.is_nan() {
                    return Err(WeightError::Domain { t });
                }
                let idx = breaks.partition_point(|b| *b <= t);
                Ok(values[idx])
            }
            Weight::Tabulated { nodes, values } => {
                if t.is_nan() || t < nodes[0] {
                    return Err(WeightError::Domain { t });
                }
                let idx = nodes.partition_point(|x| *x <= t) - 1;
                Ok(values[idx])
            }
        }
    }

    /// Returns the weight scaled by `lambda > 0`, exactly in the
    /// representation (so `scale(1)` is the identity).
    pub fn scale(&self, lambda: f64) -> Result<Self, WeightError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(WeightError::Invalid(format!(
                "scale factor must be finite and positive, got {lambda}"
            )));
        }
        Ok(match self {
            Weight::Power { c, alpha } => Weight::Power {
                c: c * lambda,
                alpha: *alpha,
            },
            Weight::PiecewiseConstant { breaks, values } => Weight::PiecewiseConstant {
                breaks: breaks.clone(),
                values: values.iter().map(|v| v * lambda).collect(),
            },
            Weight::Tabulated { nodes, values } => Weight::Tabulated {
                nodes: nodes.clone(),
                values: values.iter().map(|v| v * lambda).collect(),
            },
        })
    }

    /// Exact `int_lo^hi w(t)^e dt` for `0 <= lo <= hi <= inf`.
    ///
    /// Divergent integrals return an infinite value rather than an error.
    /// For tabulated weights the stretch below the first node is not covered
    /// by the representation; it contributes zero to `value` and a scale
    /// estimate (first tabulated value extended leftward) to `defect`.
    pub fn int_pow(&self, lo: f64, hi: f64, e: f64) -> IntPart {
        debug_assert!(!lo.is_nan() && !hi.is_nan());
        if !(lo < hi) {
            return IntPart {
                value: 0.0,
                defect: 0.0,
            };
        }
        match self {
            Weight::Power { c, alpha } => IntPart {
                value: power_int(*c, *alpha, e, lo, hi),
                defect: 0.0,
            },
            Weight::PiecewiseConstant { breaks, values } => {
                let mut total = 0.0;
                for (seg_lo, seg_hi, val) in StepSegments::new(breaks, values) {
                    total += seg_pow_len(val, e, seg_lo.max(lo), seg_hi.min(hi));
                    if total.is_infinite() {
                        break;
                    }
                }
                IntPart {
                    value: total,
                    defect: 0.0,
                }
            }
            Weight::Tabulated { nodes, values } => {
                let mut total = 0.0;
                for (i, val) in values.iter().enumerate() {
                    let seg_lo = nodes[i];
                    let seg_hi = if i + 1 < nodes.len() {
                        nodes[i + 1]
                    } else {
                        f64::INFINITY
                    };
                    total += seg_pow_len(*val, e, seg_lo.max(lo), seg_hi.min(hi));
                    if total.is_infinite() {
                        break;
                    }
                }
                let uncovered = (hi.min(nodes[0]) - lo).max(0.0);
                let defect = if uncovered > 0.0 {
                    seg_pow_len(values[0], e, 0.0, uncovered)
                } else {
                    0.0
                };
                IntPart {
                    value: total,
                    defect,
                }
            }
        }
    }

    /// Exact `sup_{t in (lo, hi)} 1/w(t)` where the representation covers the
    /// range; tabulated weights ignore the uncovered stretch below their
    /// first node.
    pub fn sup_recip(&self, lo: f64, hi: f64) -> f64 {
        debug_assert!(!lo.is_nan() && !hi.is_nan());
        if !(lo < hi) {
            return 0.0;
        }
        match self {
            Weight::Power { c, alpha } => {
                // 1/(c t^alpha) is monotone, so the sup sits at an endpoint.
                if *alpha == 0.0 {
                    1.0 / c
                } else if *alpha > 0.0 {
                    // decreasing weight reciprocal? 1/(c t^a) decreases in t, sup at lo
                    if lo == 0.0 {
                        f64::INFINITY
                    } else {
                        1.0 / (c * lo.powf(*alpha))
                    }
                } else if hi.is_infinite() {
                    f64::INFINITY
                } else {
                    1.0 / (c * hi.powf(*alpha))
                }
            }
            Weight::PiecewiseConstant { breaks, values } => {
                let mut best = 0.0f64;
                for (seg_lo, seg_hi, val) in StepSegments::new(breaks, values) {
                    if seg_lo.max(lo) < seg_hi.min(hi) {
                        best = best.max(1.0 / val);
                    }
                }
                best
            }
            Weight::Tabulated { nodes, values } => {
                let mut best = 0.0f64;
                for (i, val) in values.iter().enumerate() {
                    let seg_lo = nodes[i];
                    let seg_hi = if i + 1 < nodes.len() {
                        nodes[i + 1]
                    } else {
                        f64::INFINITY
                    };
                    if seg_lo.max(lo) < seg_hi.min(hi) {
                        best = best.max(1.0 / val);
                    }
                }
                best
            }
        }
    }
}

/// Iterator over the segments of a piecewise-constant weight, including the
/// unbounded first and last pieces.
struct StepSegments<'a> {
    breaks: &'a [f64],
    values: &'a [f64],
    idx: usize,
}

impl<'a> StepSegments<'a> {
    fn new(breaks: &'a [f64], values: &'a [f64]) -> Self {
        StepSegments {
            breaks,
            values,
            idx: 0,
        }
    }
}

impl Iterator for StepSegments<'_> {
    type Item = (f64, f64, f64);

    fn next(&mut self) -> Option<(f64, f64, f64)> {
        if self.idx >= self.values.len() {
            return None;
        }
        let lo = if self.idx == 0 {
            f64::NEG_INFINITY
        } else {
            self.breaks[self.idx - 1]
        };
        let hi = if self.idx < self.breaks.len() {
            self.breaks[self.idx]
        } else {
            f64::INFINITY
        };
        let val = self.values[self.idx];
        self.idx += 1;
        Some((lo, hi, val))
    }
}

/// `val^e * (hi - lo)` guarded for infinite length.
fn seg_pow_len(val: f64, e: f64, lo: f64, hi: f64) -> f64 {
    if !(lo < hi) {
        return 0.0;
    }
    let ve = val.powf(e);
    if hi.is_infinite() || lo == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        ve * (hi - lo)
    }
}

/// Closed-form `int_lo^hi (c t^alpha)^e dt` on `0 <= lo < hi <= inf`.
fn power_int(c: f64, alpha: f64, e: f64, lo: f64, hi: f64) -> f64 {
    let ce = c.powf(e);
    let m = alpha * e;
    let k = m + 1.0;
    if hi.is_infinite() && k >= 0.0 {
        return f64::INFINITY;
    }
    if k == 0.0 {
        // int t^-1 = ln(hi/lo)
        return if lo == 0.0 {
            f64::INFINITY
        } else {
            ce * (hi / lo).ln()
        };
    }
    let lo_term = if lo == 0.0 {
        if k > 0.0 {
            0.0
        } else {
            return f64::INFINITY;
        }
    } else {
        lo.powf(k)
    };
    let hi_term = if hi.is_infinite() { 0.0 } else { hi.powf(k) };
    ce * (hi_term - lo_term) / k
}

/// The nondecreasing profile `V` sampled on a grid, with its right-endpoint
/// limit.  `values` may be the all-infinite sentinel when the defining
/// integral (or sup) diverges on every initial segment.
#[derive(Debug, Clone)]
pub struct VProfile {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub p: f64,
    /// Monotone limit of `V` at the right endpoint `b`; may be infinite.
    pub v_at_b: f64,
    /// Scale of any head segment the representation could not cover
    /// (nonzero only for tabulated weights starting above `a`).
    pub head_defect: f64,
}

impl VProfile {
    /// Builds the profile of `v` for exponent `p` on `grid`.
    ///
    /// For `p > 1` each grid cell contributes the exact representation-level
    /// integral of `v^(1-p')`, with an analytic head from the interval's left
    /// endpoint to the truncation edge and an analytic tail through `b`.
    /// For `p = 1` the running essential sup of `1/v` is taken over exact
    /// cell sups (power / piecewise) or tabulation nodes (tabulated).
    pub fn build(v: &Weight, p: f64, grid: &Arc<Grid>) -> Result<VProfile, ParamError> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(ParamError::BadExponents { p, q: f64::NAN });
        }
        if p == 1.0 {
            return Ok(Self::build_sup(v, grid));
        }
        let p_conj = p / (p - 1.0);
        let e = 1.0 - p_conj;
        let a = grid.interval.a;
        let b = grid.interval.b;
        let bounds = grid.boundaries();
        let n = grid.len();

        let head = v.int_pow(a, bounds[0], e);
        let mut head_defect = head.defect;
        if head.value.is_infinite() {
            // Divergent on every initial segment: the infinite sentinel.
            return Ok(VProfile {
                grid: Arc::clone(grid),
                values: vec![f64::INFINITY; n],
                p,
                v_at_b: f64::INFINITY,
                head_defect,
            });
        }
        let mut values = Vec::with_capacity(n);
        let mut acc = head.value;
        for i in 0..n {
            let part = v.int_pow(bounds[i], grid.nodes[i], e);
            head_defect += part.defect;
            values.push((acc + part.value).powf(1.0 / p_conj));
            let full = v.int_pow(bounds[i], bounds[i + 1], e);
            acc += full.value;
        }
        let tail = v.int_pow(bounds[n], b, e);
        let v_at_b = (acc + tail.value).powf(1.0 / p_conj);
        Ok(VProfile {
            grid: Arc::clone(grid),
            values,
            p,
            v_at_b,
            head_defect,
        })
    }

    fn build_sup(v: &Weight, grid: &Arc<Grid>) -> VProfile {
        let a = grid.interval.a;
        let b = grid.interval.b;
        let bounds = grid.boundaries();
        let n = grid.len();
        let mut values = Vec::with_capacity(n);
        match v {
            Weight::Tabulated { .. } => {
                // Node rule: running max of 1/v over grid nodes; the stretch
                // below the first tabulation node stays uncovered.
                let mut run = 0.0f64;
                for i in 0..n {
                    if let Ok(val) = v.eval(grid.nodes[i]) {
                        run = run.max(1.0 / val);
                    }
                    values.push(run);
                }
                let v_at_b = run.max(v.sup_recip(bounds[n], b));
                VProfile {
                    grid: Arc::clone(grid),
                    values,
                    p: 1.0,
                    v_at_b,
                    head_defect: 0.0,
                }
            }
            _ => {
                let mut run = v.sup_recip(a, bounds[0]);
                for i in 0..n {
                    // sup over (a, t_i]: previous full cells plus this cell
                    // clipped at the node.
                    let here = run.max(v.sup_recip(bounds[i], grid.nodes[i]));
                    values.push(here);
                    run = run.max(v.sup_recip(bounds[i], bounds[i + 1]));
                }
                let v_at_b = run.max(v.sup_recip(bounds[n], b));
                VProfile {
                    grid: Arc::clone(grid),
                    values,
                    p: 1.0,
                    v_at_b,
                    head_defect: 0.0,
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when the profile collapsed to the infinite sentinel.
    pub fn is_infinite_sentinel(&self) -> bool {
        self.values.first().is_some_and(|v| v.is_infinite())
    }
}
