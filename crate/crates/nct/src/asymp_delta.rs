//! Large-noncentrality expansions: the elementary-coefficient expansion, the
//! incomplete-gamma expansions with automatic form selection, and the cheap
//! leading estimate of the correction term `R` used for negligibility
//! decisions.
//!
//! Both expansions approximate `2H = F + R`; the engine subtracts `R` when
//! its leading estimate matters at the requested tolerance.

use crate::engine::{Method, TailSide, TailValue};
use crate::kernels::{lgamma, lgamma_sign, reg_gamma};
use crate::series::Params;
use crate::{Error, Kahan, Result};

/// Coefficients of the elementary large-delta expansion.
#[derive(Debug, Clone)]
pub struct ElemCoeffs {
    /// c_k from (1+t)^{n/2-1/2} / (1 - y(1+t)) = sum c_k t^k.
    pub c: Vec<f64>,
    /// Binomial coefficients a_k of (1+t)^{n/2-1/2}.
    pub a: Vec<f64>,
    pub y_at_build: f64,
    pub n_at_build: f64,
}

/// Builds c_0..c_kmax and a_0..a_kmax by their recursions.
///
/// The coefficients blow up as y -> 1; beyond y = 1 - 1e-3 the elementary
/// form is refused (the incomplete-gamma form covers that corner).
pub fn elem_coeffs(n: f64, yv: f64, kmax: usize) -> Result<ElemCoeffs> {
    if !(yv > 0.0 && yv < 1.0) {
        return Err(Error::InvalidArgument(format!("elem_coeffs: need 0 < y < 1, got {yv}")));
    }
    if yv > 1.0 - 1e-3 {
        return Err(Error::UnsupportedRange(format!(
            "elem_coeffs: y = {yv} too close to 1"
        )));
    }
    let omy = 1.0 - yv;
    let mut a = Vec::with_capacity(kmax + 1);
    let mut c = Vec::with_capacity(kmax + 1);
    a.push(1.0);
    c.push(1.0 / omy);
    for k in 1..=kmax {
        let ak = a[k - 1] * (0.5 * n + 0.5 - k as f64) / k as f64;
        a.push(ak);
        c.push((ak + yv * c[k - 1]) / omy);
    }
    Ok(ElemCoeffs {
        c,
        a,
        y_at_build: yv,
        n_at_build: n,
    })
}

/// CDF by the elementary expansion with `kmax + 1` terms.
///
/// For even integer `n = 2m` the Pochhammer factor kills every term with
/// `k >= m`, so the sum is exact apart from the neglected `R`.
pub fn cdf_large_delta_elem(params: &Params, kmax: usize) -> Result<TailValue> {
    if !(params.delta > 0.0) || !(params.x > 0.0) {
        return Err(Error::Reroute("elem expansion: need delta > 0, x > 0".into()));
    }
    let co = match elem_coeffs(params.n, params.y, kmax) {
        Ok(c) => c,
        Err(Error::UnsupportedRange(m)) => return Err(Error::Reroute(m)),
        Err(e) => return Err(e),
    };
    let zeta = params.zeta;
    let n = params.n;
    let log_pre = -0.5 * params.delta * params.delta * params.one_minus_y()
        + 0.5 * params.y.ln()
        + 0.5 * n * params.ln_one_minus_y()
        + (0.5 * n - 1.0) * zeta.ln()
        - lgamma(0.5 * n);
    let mut sum = Kahan::new();
    let mut poch = 1.0; // (1 - n/2)_k
    let mut zpow = 1.0;
    let mut last = 0.0;
    let mut terms = 0usize;
    for (k, &ck) in co.c.iter().enumerate() {
        if k > 0 {
            poch *= 1.0 - 0.5 * n + (k as f64 - 1.0);
            zpow /= zeta;
        }
        let term = if k % 2 == 0 { 1.0 } else { -1.0 } * poch * ck * zpow;
        if term == 0.0 {
            break; // even-n truncation
        }
        sum.add(term);
        last = term;
        terms = k + 1;
    }
    let s = sum.value();
    if !(s > 0.0) {
        return Err(Error::Reroute("elem expansion: sum not positive".into()));
    }
    let log_value = log_pre + s.ln();
    let est = (last / s).abs().max(f64::EPSILON);
    if log_value < -745.0 {
        return Ok(TailValue::from_primary(
            TailSide::Lower,
            0.0,
            1.0,
            Method::LargeDeltaElem,
            terms,
            true,
        ));
    }
    Ok(TailValue::from_primary(
        TailSide::Lower,
        log_value.exp(),
        est,
        Method::LargeDeltaElem,
        terms,
        false,
    ))
}

/// Which of the two incomplete-gamma expansions to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaForm {
    /// Pick the Q-form iff x <= delta (smallest-first-term rule).
    Auto,
    QForm,
    PForm,
}

/// Cached pieces of the incomplete-gamma expansion.
#[derive(Debug, Clone)]
pub struct GammaExpTerms {
    pub binom: Vec<f64>,
    pub eta_pow: Vec<f64>,
    /// Q(n/2 - k, eta zeta), by downward recurrence in the first argument.
    pub q_vals: Vec<f64>,
    /// P(n/2 - k, eta zeta) by the complementary (all-additions) recurrence.
    pub p_vals: Vec<f64>,
}

fn gamma_exp_terms(params: &Params, count: usize) -> Result<GammaExpTerms> {
    let n = params.n;
    let eta = params.eta_gamma;
    let w = 0.5 * params.delta * params.delta * params.one_minus_y(); // eta * zeta
    let pair = reg_gamma(0.5 * n, w)?;
    let mut binom = Vec::with_capacity(count);
    let mut eta_pow = Vec::with_capacity(count);
    let mut q_vals = Vec::with_capacity(count);
    let mut p_vals = Vec::with_capacity(count);
    binom.push(1.0);
    eta_pow.push(1.0);
    q_vals.push(pair.q);
    p_vals.push(pair.p);
    let lnw = w.ln();
    for k in 1..count {
        binom.push(binom[k - 1] * (0.5 * n + 0.5 - k as f64) / k as f64);
        eta_pow.push(eta_pow[k - 1] * eta);
        let a = 0.5 * n - k as f64; // new first argument
        // recurrence step uses Gamma(a + 1)
        let (lg, sg) = lgamma_sign(a + 1.0);
        let step = if sg == 0.0 {
            0.0
        } else {
            sg * (a * lnw - w - lg).exp()
        };
        let q = if a <= 0.0 && a == a.floor() {
            0.0
        } else {
            q_vals[k - 1] - step
        };
        q_vals.push(q);
        p_vals.push(p_vals[k - 1] + step);
    }
    Ok(GammaExpTerms {
        binom,
        eta_pow,
        q_vals,
        p_vals,
    })
}

/// CDF by the incomplete-gamma expansion.
///
/// `kmax = Some(m)` sums exactly m terms (the tables' configuration);
/// `None` stops at the smallest term. For odd integer `n` the binomials
/// terminate and for even integer `n` the Q-values do, making the Q-form sum
/// exactly `2H`.
pub fn cdf_large_delta_gamma(params: &Params, kmax: Option<usize>, form: GammaForm) -> Result<TailValue> {
    if !(params.delta > 0.0) || !(params.x > 0.0) {
        return Err(Error::Reroute("gamma expansion: need delta > 0, x > 0".into()));
    }
    let use_q = match form {
        GammaForm::QForm => true,
        GammaForm::PForm => false,
        GammaForm::Auto => params.x <= params.delta,
    };
    let m = kmax.unwrap_or(120);
    let cache = gamma_exp_terms(params, m + 1)?;
    let vals = if use_q { &cache.q_vals } else { &cache.p_vals };
    let mut sum = Kahan::new();
    let mut terms = 0usize;
    let mut prev_mag = f64::INFINITY;
    let mut next_mag = 0.0;
    for k in 0..=m {
        let term = cache.binom[k] * cache.eta_pow[k] * vals[k];
        let mag = term.abs();
        if k == m {
            next_mag = mag; // first omitted term
            break;
        }
        if kmax.is_none() && k > 0 && (mag > prev_mag || mag == 0.0) {
            // optimal truncation at the smallest term
            next_mag = mag;
            break;
        }
        sum.add(term);
        terms = k + 1;
        prev_mag = mag;
    }
    let s = sum.value();
    if !(s > 0.0) {
        return Err(Error::Reroute("gamma expansion: sum not positive".into()));
    }
    let est = (next_mag / s).max(f64::EPSILON);
    let log_tail = 0.5 * (params.n - 1.0) * params.y.ln() + s.ln();
    if use_q {
        if log_tail < -745.0 {
            return Ok(TailValue::from_primary(
                TailSide::Lower,
                0.0,
                1.0,
                Method::LargeDeltaGamma,
                terms,
                true,
            ));
        }
        Ok(TailValue::from_primary(
            TailSide::Lower,
            log_tail.exp(),
            est,
            Method::LargeDeltaGamma,
            terms,
            false,
        ))
    } else {
        // P-form: the sum is the upper tail G
        Ok(TailValue::from_primary(
            TailSide::Upper,
            log_tail.exp().min(1.0),
            est,
            Method::LargeDeltaGamma,
            terms,
            false,
        ))
    }
}

/// Leading estimate of `R_n` (Watson's lemma applied to its Laplace
/// integral); log-safe, conservative for small zeta.
pub fn r_leading_estimate(params: &Params) -> f64 {
    if !(params.delta > 0.0) || !(params.zeta > 0.0) {
        return f64::INFINITY;
    }
    let n = params.n;
    let le = -0.5 * params.delta * params.delta + 0.5 * params.y.ln()
        + 0.5 * n * params.ln_one_minus_y()
        + lgamma(0.5 * n + 0.5)
        - (2.0 * std::f64::consts::PI).ln()
        - (0.5 * n + 0.5) * params.zeta.ln();
    if le > 700.0 {
        f64::INFINITY
    } else {
        le.exp()
    }
}
