//! Public evaluation API: dispatch across the series, quadrature and
//! asymptotic routes, the primary-function policy (compute whichever of F
//! and 1-F is smaller, never subtract), reflection for negative arguments,
//! and uniform result reporting.

use crate::asymp_delta::{cdf_large_delta_elem, cdf_large_delta_gamma, r_leading_estimate, GammaForm};
use crate::asymp_n::{bounded_impl, r_large_n, uniform_impl};
use crate::kernels::{half_erfc, inc_beta, inv_half_erfc};
use crate::quadrature::{cdf_trapezoid, pdf_quadrature, r_laplace};
use crate::series::{g_series, pq_series, r_series, start_index, Params};
use crate::{Error, Result};

/// Evaluation route identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Series,
    Trapezoid,
    LargeDeltaElem,
    LargeDeltaGamma,
    LargeNBounded,
    LargeNUniform,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Trapezoid => "trapezoid",
            Method::LargeDeltaElem => "large_delta_elem",
            Method::LargeDeltaGamma => "large_delta_gamma",
            Method::LargeNBounded => "large_n_bounded",
            Method::LargeNUniform => "large_n_uniform",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(Method::Series),
            "trapezoid" => Ok(Method::Trapezoid),
            "large_delta_elem" => Ok(Method::LargeDeltaElem),
            "large_delta_gamma" => Ok(Method::LargeDeltaGamma),
            "large_n_bounded" => Ok(Method::LargeNBounded),
            "large_n_uniform" => Ok(Method::LargeNUniform),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Which tail was computed directly (the primary function).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    /// F was computed directly; the complement is 1 - F.
    Lower,
    /// 1 - F was computed directly.
    Upper,
}

/// An evaluation result: the CDF value, its complement held losslessly, the
/// route taken and a truthful relative-error estimate.
#[derive(Debug, Clone, Copy)]
pub struct TailValue {
    pub value: f64,
    pub complement: f64,
    pub est_rel_err: f64,
    pub method: Method,
    pub terms_used: usize,
    /// True when the correction term R was folded into an asymptotic route
    /// (or is itself the computed object).
    pub r_term_included: bool,
    /// True when the true value lies below the double-precision range and 0
    /// was returned for the primary side.
    pub underflow: bool,
    /// Side computed directly.
    pub primary: TailSide,
}

impl TailValue {
    pub(crate) fn from_primary(
        primary: TailSide,
        p: f64,
        est: f64,
        method: Method,
        terms_used: usize,
        underflow: bool,
    ) -> TailValue {
        let p = p.clamp(0.0, 1.0);
        let (value, complement) = match primary {
            TailSide::Lower => (p, 1.0 - p),
            TailSide::Upper => (1.0 - p, p),
        };
        TailValue {
            value,
            complement,
            est_rel_err: est,
            method,
            terms_used,
            r_term_included: false,
            underflow,
            primary,
        }
    }

    /// The directly computed side.
    pub fn primary_value(&self) -> f64 {
        match self.primary {
            TailSide::Lower => self.value,
            TailSide::Upper => self.complement,
        }
    }

    /// Reflection: the result describes the mirrored argument, so value and
    /// complement swap and the directly-computed tail changes side.
    pub fn flipped(self) -> TailValue {
        TailValue {
            value: self.complement,
            complement: self.value,
            primary: match self.primary {
                TailSide::Lower => TailSide::Upper,
                TailSide::Upper => TailSide::Lower,
            },
            ..self
        }
    }

    /// Survival-function view: the same evaluation reported with the upper
    /// tail in `value`; which tail was computed directly does not change.
    pub fn swapped(self) -> TailValue {
        TailValue {
            value: self.complement,
            complement: self.value,
            ..self
        }
    }

    fn adjust_primary(&mut self, delta: f64) {
        let p = (self.primary_value() + delta).clamp(0.0, 1.0);
        match self.primary {
            TailSide::Lower => {
                self.value = p;
                self.complement = 1.0 - p;
            }
            TailSide::Upper => {
                self.complement = p;
                self.value = 1.0 - p;
            }
        }
    }
}

/// Tolerances, region thresholds and term caps steering the dispatch.
#[derive(Debug, Clone)]
pub struct MethodConfig {
    /// Target relative error.
    pub tol: f64,
    /// Large-delta threshold on zeta; `None` means max(30, 2n).
    pub zeta_min: Option<f64>,
    pub n_min_uniform: f64,
    pub n_min_bounded: f64,
    /// Bounded-route validity box is |x|, |delta| <= x_cap_factor sqrt(n).
    pub x_cap_factor: f64,
    /// Below this |eta| the uniform route takes the power-series coefficient
    /// path.
    pub eta_switch: f64,
    pub max_terms: usize,
    /// Bypass dispatch and run one route.
    pub force_method: Option<Method>,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            tol: 1e-13,
            zeta_min: None,
            n_min_uniform: 30.0,
            n_min_bounded: 50.0,
            x_cap_factor: 0.15,
            eta_switch: 0.1,
            max_terms: 1_000_000,
            force_method: None,
        }
    }
}

impl MethodConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 1e-16 && self.tol < 1e-2) {
            return Err(Error::InvalidArgument(format!(
                "config: tol must lie in (1e-16, 1e-2), got {}",
                self.tol
            )));
        }
        if self.n_min_uniform <= 0.0
            || self.n_min_bounded <= 0.0
            || self.x_cap_factor <= 0.0
            || self.eta_switch <= 0.0
            || self.zeta_min.map_or(false, |z| z <= 0.0)
        {
            return Err(Error::InvalidArgument("config: thresholds must be positive".into()));
        }
        Ok(())
    }

    fn zeta_min_for(&self, n: f64) -> f64 {
        self.zeta_min.unwrap_or((2.0 * n).max(30.0))
    }

    fn series_eps(&self) -> f64 {
        (0.01 * self.tol).clamp(1.000001e-16, 1e-3)
    }
}

// ---------------------------------------------------------------------------
// routes (delta > 0, x > 0 section of the dispatch)
// ---------------------------------------------------------------------------

/// R by the cheapest adequate evaluator: series at small noncentrality,
/// Laplace integral otherwise.
fn r_route(params: &Params, cfg: &MethodConfig) -> Result<TailValue> {
    if params.delta <= 2.5 {
        if let Ok(rs) = r_series(params, cfg.series_eps()) {
            if rs.truncation_bound <= cfg.tol {
                let mut tv = TailValue::from_primary(
                    TailSide::Lower,
                    rs.value,
                    rs.truncation_bound.max(f64::EPSILON),
                    Method::Series,
                    rs.terms_used,
                    false,
                );
                tv.r_term_included = true;
                return Ok(tv);
            }
        }
    }
    r_laplace(params, (0.1 * cfg.tol).max(1e-15))
}

fn series_route(params: &Params, cfg: &MethodConfig) -> Result<TailValue> {
    let eps = cfg.series_eps();
    if params.delta >= params.x {
        let (p, q) = pq_series(params, eps)?;
        let f = half_erfc(params.delta) + p.value + q.value;
        let est = p
            .truncation_bound
            .max(q.truncation_bound)
            .max(4.0 * f64::EPSILON);
        Ok(TailValue::from_primary(
            TailSide::Lower,
            f,
            est,
            Method::Series,
            p.terms_used.max(q.terms_used),
            false,
        ))
    } else {
        let g = g_series(params, eps)?;
        Ok(TailValue::from_primary(
            TailSide::Upper,
            g.value,
            g.truncation_bound.max(4.0 * f64::EPSILON),
            Method::Series,
            g.terms_used,
            false,
        ))
    }
}

/// Elementary large-delta expansion with optimal truncation (smallest term).
fn elem_auto(params: &Params, cap: usize) -> Result<TailValue> {
    let mut best: Option<TailValue> = None;
    let mut prev_est = f64::INFINITY;
    // the term magnitudes are monotone until the asymptotic tail turns;
    // grow kmax until the last-term estimate rises
    for kmax in [2usize, 4, 6, 8, 12, 16, 24, 32].iter().copied().filter(|&k| k <= cap) {
        let t = cdf_large_delta_elem(params, kmax)?;
        if t.est_rel_err >= prev_est {
            break;
        }
        prev_est = t.est_rel_err;
        best = Some(t);
    }
    best.ok_or_else(|| Error::Reroute("elem expansion: no usable truncation".into()))
}

/// Applies the R-term policy to an asymptotic route result.
///
/// `toward` is the sign with which R enters the lower tail: -1 for the
/// 2H-based large-delta expansions (F = 2H - R), +1 for the uniform
/// expansion (F = 2P + R). The uncertainty of the folded-in R joins the
/// error estimate so it stays a truthful upper bound.
fn apply_r_term(mut tv: TailValue, params: &Params, cfg: &MethodConfig, toward: f64) -> TailValue {
    let est = r_leading_estimate(params);
    let include = est > cfg.tol * tv.value.max(f64::MIN_POSITIVE);
    tv.r_term_included = include;
    if include {
        let (r, r_unc) = match r_route(params, cfg) {
            Ok(t) => {
                let v = t.primary_value();
                (v, 2.0 * v * t.est_rel_err)
            }
            Err(_) => match (r_large_n(params, 1), r_large_n(params, 0)) {
                (Ok(r1), Ok(r0)) => (r1, 2.0 * (r1 - r0).abs()),
                _ => (0.0, est.min(1.0)),
            },
        };
        let shift = match tv.primary {
            TailSide::Lower => toward * r,
            TailSide::Upper => -toward * r,
        };
        tv.adjust_primary(shift);
        tv.est_rel_err += r_unc / tv.primary_value().max(f64::MIN_POSITIVE);
    }
    tv
}

fn eval_route(method: Method, params: &Params, cfg: &MethodConfig) -> Result<TailValue> {
    match method {
        Method::LargeDeltaGamma => {
            let tv = cdf_large_delta_gamma(params, None, GammaForm::Auto)?;
            let mut tv = apply_r_term(tv, params, cfg, -1.0);
            tv.est_rel_err *= 10.0;
            Ok(tv)
        }
        Method::LargeDeltaElem => {
            let tv = elem_auto(params, 32)?;
            let mut tv = apply_r_term(tv, params, cfg, -1.0);
            tv.est_rel_err *= 10.0;
            Ok(tv)
        }
        Method::LargeNUniform => {
            let tv = uniform_impl(params, 3, cfg.n_min_uniform, cfg.eta_switch)?;
            let mut tv = apply_r_term(tv, params, cfg, 1.0);
            tv.est_rel_err *= 10.0;
            Ok(tv)
        }
        Method::LargeNBounded => {
            let mut tv = bounded_impl(
                params,
                6,
                cfg.x_cap_factor * params.n.sqrt(),
                cfg.n_min_bounded,
            )?;
            tv.est_rel_err *= 10.0;
            Ok(tv)
        }
        Method::Series => series_route(params, cfg),
        Method::Trapezoid => cdf_trapezoid(params, None),
    }
}

fn dispatch_positive_delta(params: &Params, cfg: &MethodConfig) -> Result<TailValue> {
    let mut candidates: Vec<Method> = Vec::with_capacity(5);
    if params.zeta >= cfg.zeta_min_for(params.n) {
        candidates.push(Method::LargeDeltaGamma);
    }
    // the uniform route needs the saddle mass away from the origin;
    // delta^2 y < 1 belongs to the bounded and series regimes
    if params.n >= cfg.n_min_uniform
        && params.z_scaled > 0.0
        && params.delta * params.delta * params.y >= 1.0
    {
        candidates.push(Method::LargeNUniform);
    }
    if params.n >= cfg.n_min_bounded {
        let cap = cfg.x_cap_factor * params.n.sqrt();
        if params.x <= cap && params.delta.abs() <= cap {
            candidates.push(Method::LargeNBounded);
        }
    }
    let z = 0.5 * params.delta * params.delta;
    if start_index(z, cfg.series_eps()).map_or(false, |j| j <= cfg.max_terms) {
        candidates.push(Method::Series);
    }
    candidates.push(Method::Trapezoid);

    let mut best: Option<TailValue> = None;
    let mut last_err: Option<Error> = None;
    for m in candidates {
        match eval_route(m, params, cfg) {
            Ok(tv) => {
                if tv.est_rel_err <= cfg.tol {
                    return Ok(tv);
                }
                let better = best
                    .as_ref()
                    .map_or(true, |b| tv.est_rel_err < b.est_rel_err);
                if better {
                    best = Some(tv);
                }
            }
            Err(Error::Reroute(e)) | Err(Error::UnsupportedRange(e)) => {
                last_err = Some(Error::Reroute(e));
            }
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| {
        Error::EvaluationFailure(format!(
            "all routes declined at x={}, delta={}, n={} (last: {:?})",
            params.x, params.delta, params.n, last_err
        ))
    })
}

fn cdf_impl(x: f64, delta: f64, n: f64, cfg: &MethodConfig) -> Result<TailValue> {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        // y = 0 kills both series: F = erfc(delta/sqrt2)/2
        let (side, p) = if delta >= 0.0 {
            (TailSide::Lower, half_erfc(delta))
        } else {
            (TailSide::Upper, half_erfc(-delta))
        };
        return Ok(TailValue::from_primary(side, p, 1e-15, Method::Series, 1, false));
    }
    if delta == 0.0 {
        // central Student t: G = I_{1-y}(n/2, 1/2) / 2 for x >= 0
        let params = Params::new(x, 0.0, n)?;
        let g = 0.5 * inc_beta(params.one_minus_y(), 0.5 * n, 0.5)?;
        return Ok(TailValue::from_primary(
            TailSide::Upper,
            g,
            1e-13,
            Method::Series,
            1,
            false,
        ));
    }
    let params = Params::new(x, delta, n)?;
    if let Some(m) = cfg.force_method {
        if delta < 0.0 {
            return Err(Error::InvalidArgument(
                "force_method with delta < 0 is not supported; the engine uses the R-route there"
                    .into(),
            ));
        }
        return eval_route(m, &params, cfg);
    }
    if delta < 0.0 {
        // F(x; -|delta|) = 1 - R(x; |delta|); R is the primary function here
        let pabs = Params::new(x, -delta, n)?;
        let r = r_route(&pabs, cfg)?;
        let mut tv = TailValue::from_primary(
            TailSide::Upper,
            r.primary_value(),
            r.est_rel_err,
            r.method,
            r.terms_used,
            r.underflow,
        );
        tv.r_term_included = true;
        return Ok(tv);
    }
    dispatch_positive_delta(&params, cfg)
}

/// Cumulative distribution function F_n(x; delta).
pub fn cdf(x: f64, delta: f64, n: f64, cfg: &MethodConfig) -> Result<TailValue> {
    cfg.validate()?;
    if x.is_nan() || delta.is_nan() || n.is_nan() {
        return Err(Error::InvalidArgument("cdf: NaN argument".into()));
    }
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!("cdf: need finite n > 0, got {n}")));
    }
    if !x.is_finite() || !delta.is_finite() {
        return Err(Error::InvalidArgument("cdf: x and delta must be finite".into()));
    }
    if x < 0.0 {
        // reflection rule; the inner call computes its own primary function
        return Ok(cdf_impl(-x, -delta, n, cfg)?.flipped());
    }
    cdf_impl(x, delta, n, cfg)
}

/// Survival function G_n = 1 - F_n, with the complement computed as the
/// primary function whenever it is the smaller one.
pub fn sf(x: f64, delta: f64, n: f64, cfg: &MethodConfig) -> Result<TailValue> {
    Ok(cdf(x, delta, n, cfg)?.swapped())
}

/// Density dF/dx, by quadrature; pdf(x; delta) = pdf(-x; -delta).
pub fn pdf(x: f64, delta: f64, n: f64, cfg: &MethodConfig) -> Result<f64> {
    cfg.validate()?;
    if x.is_nan() || delta.is_nan() || !(n > 0.0) {
        return Err(Error::InvalidArgument("pdf: invalid arguments".into()));
    }
    let (xx, dd) = if x < 0.0 { (-x, -delta) } else { (x, delta) };
    let params = Params::new(xx, dd, n)?;
    pdf_quadrature(&params)
}

/// Approximate quantile: the x with cdf(x) = p, found by safeguarded Newton
/// on the log of the primary tail from an erfc-based initial guess.
pub fn quantile(p: f64, delta: f64, n: f64, cfg: &MethodConfig) -> Result<f64> {
    cfg.validate()?;
    if !(p > 1e-300 && p < 1.0 - 1e-16) {
        return Err(Error::InvalidArgument(format!(
            "quantile: need p in (1e-300, 1 - 1e-16), got {p}"
        )));
    }
    if !delta.is_finite() || !(n > 0.0) {
        return Err(Error::InvalidArgument("quantile: invalid delta or n".into()));
    }
    let w = inv_half_erfc(p);
    let mut x0 = delta - w;
    // refine through the saddle geometry where the uniform regime holds
    if n >= cfg.n_min_uniform && delta > 0.0 && p < 0.6 {
        if let Some(xs) = invert_eta(w / n.sqrt(), delta, n) {
            x0 = xs;
        }
    }

    let lower = p <= 0.5;
    let ln_target = if lower { p.ln() } else { (1.0 - p).ln() };
    let residual = |x: f64| -> Result<(f64, f64)> {
        let tv = cdf(x, delta, n, cfg)?;
        let side = if lower { tv.value } else { tv.complement };
        Ok((side, tv.value))
    };

    // bracket the root
    let (mut s0, _) = residual(x0)?;
    let mut lo;
    let mut hi;
    let going_up = if lower { s0 < p } else { s0 > 1.0 - p };
    let mut step = 0.5 * (1.0 + x0.abs());
    if going_up {
        lo = x0;
        hi = x0;
        for _ in 0..200 {
            hi += step;
            step *= 1.7;
            let (s, _) = residual(hi)?;
            s0 = s;
            if if lower { s0 >= p } else { s0 <= 1.0 - p } {
                break;
            }
            lo = hi;
        }
    } else {
        hi = x0;
        lo = x0;
        for _ in 0..200 {
            lo -= step;
            step *= 1.7;
            let (s, _) = residual(lo)?;
            s0 = s;
            if if lower { s0 <= p } else { s0 >= 1.0 - p } {
                break;
            }
            hi = lo;
        }
    }

    let mut x = x0.clamp(lo, hi);
    for _ in 0..100 {
        let tv = cdf(x, delta, n, cfg)?;
        let side = if lower { tv.value } else { tv.complement };
        if side > 0.0 {
            let r = side.ln() - ln_target;
            if r.abs() <= 5.0 * cfg.tol {
                return Ok(x);
            }
            // maintain the bracket: side is increasing in x on the lower
            // tail and decreasing on the upper one
            let too_low = if lower { side < p } else { side > 1.0 - p };
            if too_low {
                lo = x;
            } else {
                hi = x;
            }
            let f = pdf(x, delta, n, cfg)?;
            let deriv = if lower { f / side } else { -f / side };
            let mut next = x - r / deriv;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < 1e-16 * (1.0 + x.abs()) {
                return Ok(next);
            }
            x = next;
        } else {
            // underflowed side: step towards the bulk
            if lower {
                lo = x;
            } else {
                hi = x;
            }
            x = 0.5 * (lo + hi);
        }
        if (hi - lo) < 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::EvaluationFailure(format!(
        "quantile: no convergence after 100 iterations; bracket [{lo}, {hi}]"
    )))
}

/// Solves eta(x) = target for x > 0 by bisection (eta decreases in x).
fn invert_eta(target: f64, delta: f64, n: f64) -> Option<f64> {
    let eta_of = |x: f64| -> Option<f64> {
        let params = Params::new(x, delta, n).ok()?;
        if !(params.z_scaled > 0.0) {
            return None;
        }
        crate::asymp_n::saddle_eta(&params).ok().map(|s| s.eta_u)
    };
    let mut lo = 1e-8 * (1.0 + delta.abs());
    let mut hi = (delta.abs() + 1.0) * 2.0;
    let elo = eta_of(lo)?;
    if elo < target {
        return None; // target above the x -> 0 limit
    }
    let mut k = 0;
    while eta_of(hi)? > target {
        hi *= 2.0;
        k += 1;
        if k > 60 {
            return None;
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        match eta_of(mid) {
            Some(e) if e > target => lo = mid,
            Some(_) => hi = mid,
            None => return None,
        }
    }
    Some(0.5 * (lo + hi))
}
