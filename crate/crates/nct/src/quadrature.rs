//! Direct numerical-integration routes. All integrands are mapped to the
//! whole real line by `t = e^s`, evaluated in log space, rescaled by the peak
//! and summed by compensated trapezoidal rules with step halving. One engine
//! serves the CDF, the correction term `R`, and the density.
//!
//! Node evaluations are independent; with the `parallel` feature they run on
//! the rayon pool. Summation order is fixed by node index either way, so the
//! two builds produce identical bits.

use crate::engine::{Method, TailSide, TailValue};
use crate::kernels::{self, erf_raw, kummer_1f1, ln_beta, ln_erfc_raw, ln_gamma_star};
use crate::series::Params;
use crate::{Error, Kahan, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many nodes a parallel dispatch costs more than it saves.
#[cfg(feature = "parallel")]
const PAR_MIN_NODES: usize = 512;

const LN_TINY: f64 = -745.0; // exp() underflows past this

/// Integration grid on the transformed axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub step: f64,
    pub nodes: usize,
}

impl QuadratureSpec {
    pub fn new(s_min: f64, s_max: f64, step: f64) -> Result<Self> {
        if !(s_min < s_max) || !(step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "quadrature spec: need s_min < s_max and step > 0, got [{s_min}, {s_max}] step {step}"
            )));
        }
        let nodes = ((s_max - s_min) / step).floor() as usize + 1;
        if nodes > 1_000_000 {
            return Err(Error::Capacity(format!("quadrature spec: {nodes} nodes")));
        }
        Ok(QuadratureSpec {
            s_min,
            s_max,
            step,
            nodes,
        })
    }
}

/// The normalization constant (n/2)^{n/2} / Gamma(n/2), kept as a logarithm.
#[derive(Debug, Clone, Copy)]
pub struct NormConst {
    pub log_an: f64,
}

impl NormConst {
    pub fn new(n: f64) -> Self {
        NormConst {
            log_an: 0.5 * n + Self::log_an_minus_half_n(n),
        }
    }

    /// log A_n - n/2 = ln(n / 4 pi) / 2 - ln Gamma*(n/2); this is the piece
    /// that survives once the integrand maximum e^{-n/2} is factored out.
    pub(crate) fn log_an_minus_half_n(n: f64) -> f64 {
        0.5 * (n / (4.0 * std::f64::consts::PI)).ln() - ln_gamma_star(0.5 * n)
    }
}

// ---------------------------------------------------------------------------
// generic transformed-trapezoid machinery
// ---------------------------------------------------------------------------

fn map_nodes<F>(xs: &[f64], f: &F, force_seq: bool) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if !force_seq && xs.len() >= PAR_MIN_NODES {
            return xs.par_iter().map(|&x| f(x)).collect();
        }
    }
    let _ = force_seq;
    xs.iter().map(|&x| f(x)).collect()
}

/// Climb to a local maximum of `logf` starting at `seed`.
fn local_peak<F: Fn(f64) -> f64>(logf: &F, seed: f64) -> (f64, f64) {
    let mut s = seed;
    let mut v = logf(s);
    let mut step = 0.5;
    while step > 1e-4 {
        let vl = logf(s - step);
        let vr = logf(s + step);
        if vr > v && vr >= vl {
            s += step;
            v = vr;
        } else if vl > v {
            s -= step;
            v = vl;
        } else {
            step *= 0.5;
        }
    }
    (s, v)
}

struct Ranged {
    s_min: f64,
    s_max: f64,
    log_peak: f64,
}

/// Peak location and an interval outside which the integrand is below
/// peak * eps * e^{-pad}, widened by a further 25% on each side.
fn find_range<F: Fn(f64) -> f64>(logf: &F, seeds: &[f64], eps: f64) -> Ranged {
    let mut peak = f64::NEG_INFINITY;
    let mut s_peak = 0.0;
    for &sd in seeds {
        let (s, v) = local_peak(logf, sd);
        if v > peak {
            peak = v;
            s_peak = s;
        }
    }
    let threshold = peak + eps.ln() - 4.0;
    let walk = |dir: f64| {
        let mut s = s_peak;
        for _ in 0..2000 {
            s += dir * 0.25;
            if logf(s) < threshold {
                break;
            }
        }
        s
    };
    let mut lo = walk(-1.0);
    let mut hi = walk(1.0);
    // cover every seed, then widen
    for &sd in seeds {
        lo = lo.min(sd - 0.25);
        hi = hi.max(sd + 0.25);
    }
    let wl = s_peak - lo;
    let wr = hi - s_peak;
    lo -= 0.25 * wl;
    hi += 0.25 * wr;
    Ranged {
        s_min: lo,
        s_max: hi,
        log_peak: peak,
    }
}

struct Segment {
    a: f64,
    b: f64,
    h: f64,
    sum: f64, // current trapezoid estimate of the scaled integral
}

fn seed_segment<F>(logf: &F, scale: f64, a: f64, b: f64, h_target: f64, force_seq: bool, nodes: &mut usize) -> Segment
where
    F: Fn(f64) -> f64 + Sync,
{
    let count = (((b - a) / h_target).ceil() as usize).max(8);
    let h = (b - a) / count as f64;
    let xs: Vec<f64> = (0..=count).map(|k| a + k as f64 * h).collect();
    *nodes += xs.len();
    let vals = map_nodes(&xs, &|s| (logf(s) - scale).exp(), force_seq);
    let mut acc = Kahan::new();
    acc.add(0.5 * vals[0]);
    for &v in &vals[1..count] {
        acc.add(v);
    }
    acc.add(0.5 * vals[count]);
    Segment {
        a,
        b,
        h,
        sum: acc.value() * h,
    }
}

fn refine_segment<F>(logf: &F, scale: f64, seg: &mut Segment, force_seq: bool, nodes: &mut usize)
where
    F: Fn(f64) -> f64 + Sync,
{
    let h2 = 0.5 * seg.h;
    let count = ((seg.b - seg.a) / seg.h).round() as usize;
    let xs: Vec<f64> = (0..count).map(|k| seg.a + (2 * k + 1) as f64 * h2).collect();
    *nodes += xs.len();
    let vals = map_nodes(&xs, &|s| (logf(s) - scale).exp(), force_seq);
    let mut acc = Kahan::new();
    for &v in &vals {
        acc.add(v);
    }
    seg.sum = 0.5 * seg.sum + h2 * acc.value();
    seg.h = h2;
}

struct TrapOutcome {
    /// integral of exp(logf - log_scale)
    total: f64,
    log_scale: f64,
    est_rel: f64,
    nodes: usize,
    step: f64,
}

/// Composite trapezoid over `pieces` with step halving until the change is
/// below `eps` in relative terms.
fn integrate_pieces<F>(
    logf: &F,
    scale: f64,
    pieces: &[(f64, f64)],
    h0: f64,
    eps: f64,
    min_levels: usize,
    force_seq: bool,
) -> TrapOutcome
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut nodes = 0usize;
    let mut segs: Vec<Segment> = pieces
        .iter()
        .map(|&(a, b)| seed_segment(logf, scale, a, b, h0, force_seq, &mut nodes))
        .collect();
    let mut total: f64 = segs.iter().map(|s| s.sum).sum();
    let mut est = 1.0_f64;
    for level in 0..14 {
        for seg in segs.iter_mut() {
            refine_segment(logf, scale, seg, force_seq, &mut nodes);
        }
        let new_total: f64 = segs.iter().map(|s| s.sum).sum();
        est = if new_total != 0.0 {
            ((new_total - total) / new_total).abs()
        } else {
            0.0
        };
        total = new_total;
        if level + 1 >= min_levels && est <= eps {
            break;
        }
        if nodes > 2_000_000 {
            break;
        }
    }
    TrapOutcome {
        total,
        log_scale: scale,
        est_rel: est.max(2.0 * f64::EPSILON),
        nodes,
        step: segs.first().map(|s| s.h).unwrap_or(h0),
    }
}

// ---------------------------------------------------------------------------
// the CDF integrand and its public entry points
// ---------------------------------------------------------------------------

/// Exponent kernel n(s - (e^{2s} - 1)/2), exact near the peak at s = 0.
#[inline]
fn radial_log_kernel(n: f64, s: f64) -> f64 {
    let e = (2.0 * s).exp_m1();
    if e.is_infinite() {
        return f64::NEG_INFINITY;
    }
    n * (s - 0.5 * e)
}

/// Log-integrand of the CDF integral (lower tail when `upper` is false).
fn cdf_log_integrand(params: &Params, upper: bool, s: f64) -> f64 {
    let arg = if upper {
        (params.x * s.exp() - params.delta) / kernels::SQRT_2
    } else {
        (params.delta - params.x * s.exp()) / kernels::SQRT_2
    };
    ln_erfc_raw(arg) + radial_log_kernel(params.n, s)
}

/// Chooses the transformed integration range and step for the CDF integrand.
///
/// The interval holds everything above peak * eps (with padding), keeps the
/// erfc transition point ln(delta/x) interior when delta > 0, and the step is
/// the one at which halving changed the result by less than eps.
pub fn auto_range(params: &Params, eps: f64) -> Result<QuadratureSpec> {
    if !(params.x > 0.0) {
        return Err(Error::InvalidArgument("auto_range: need x > 0".into()));
    }
    let upper = params.delta < params.x;
    let logf = |s: f64| cdf_log_integrand(params, upper, s);
    let mut seeds = vec![0.0];
    let transition = if params.delta > 0.0 {
        let sp = (params.delta / params.x).ln();
        seeds.push(sp);
        Some(sp)
    } else {
        None
    };
    let mut r = find_range(&logf, &seeds, eps);
    if let Some(sp) = transition {
        // forced interior: the steep erfc flank must be resolved, not cut off
        if sp <= r.s_min {
            r.s_min = sp - 0.5;
        }
        if sp >= r.s_max {
            r.s_max = sp + 0.5;
        }
    }
    let out = integrate_pieces(
        &logf,
        r.log_peak,
        &[(r.s_min, r.s_max)],
        (r.s_max - r.s_min) / 64.0,
        eps,
        2,
        false,
    );
    QuadratureSpec::new(r.s_min, r.s_max, out.step)
}

fn assemble_tail(primary: TailSide, p: f64, est: f64, method: Method, terms: usize, underflow: bool) -> TailValue {
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
        terms_used: terms,
        r_term_included: false,
        underflow,
        primary,
    }
}

fn cdf_trapezoid_impl(params: &Params, spec: Option<&QuadratureSpec>, force_seq: bool) -> Result<TailValue> {
    if !(params.x > 0.0) {
        return Err(Error::InvalidArgument("cdf_trapezoid: need x > 0".into()));
    }
    let eps = 1e-15;
    let upper = params.delta < params.x;
    let side = if upper { TailSide::Upper } else { TailSide::Lower };
    let logf = |s: f64| cdf_log_integrand(params, upper, s);
    let log_pre = NormConst::log_an_minus_half_n(params.n);

    let transition = if params.delta > 0.0 {
        Some((params.delta / params.x).ln())
    } else {
        None
    };

    let out = match spec {
        Some(sp) => {
            // value at the requested step; one halving for the error estimate
            let mut nodes = 0usize;
            let scale = {
                let mut m = f64::NEG_INFINITY;
                let mut s = sp.s_min;
                while s <= sp.s_max {
                    m = m.max(logf(s));
                    s += sp.step.max((sp.s_max - sp.s_min) / 256.0);
                }
                m
            };
            let mut seg = seed_segment(&logf, scale, sp.s_min, sp.s_max, sp.step, force_seq, &mut nodes);
            let t0 = seg.sum;
            refine_segment(&logf, scale, &mut seg, force_seq, &mut nodes);
            let t1 = seg.sum;
            TrapOutcome {
                total: t0,
                log_scale: scale,
                est_rel: if t1 != 0.0 { ((t0 - t1) / t1).abs().max(2.0 * f64::EPSILON) } else { 0.0 },
                nodes,
                step: sp.step,
            }
        }
        None => {
            let mut seeds = vec![0.0];
            if let Some(sp) = transition {
                seeds.push(sp);
            }
            let mut r = find_range(&logf, &seeds, eps);
            if let Some(sp) = transition {
                if sp <= r.s_min {
                    r.s_min = sp - 0.5;
                }
                if sp >= r.s_max {
                    r.s_max = sp + 0.5;
                }
            }
            integrate_pieces(
                &logf,
                r.log_peak,
                &[(r.s_min, r.s_max)],
                (r.s_max - r.s_min) / 64.0,
                eps,
                2,
                force_seq,
            )
        }
    };

    let log_value = log_pre + out.log_scale + out.total.max(0.0).ln();
    if log_value < LN_TINY {
        return Err(Error::Reroute(format!(
            "trapezoid: integrand underflows (log value {log_value:.1})"
        )));
    }
    let p = log_value.exp();
    Ok(assemble_tail(side, p, out.est_rel, Method::Trapezoid, out.nodes, false))
}

/// CDF by the transformed trapezoidal rule. `spec = None` picks the range and
/// step automatically; the primary tail follows the sign of `delta - x`.
pub fn cdf_trapezoid(params: &Params, spec: Option<&QuadratureSpec>) -> Result<TailValue> {
    cdf_trapezoid_impl(params, spec, false)
}

/// Sequential variant of [`cdf_trapezoid`] (same algorithm, never uses the
/// thread pool); kept public for the benchmark suite.
pub fn cdf_trapezoid_seq(params: &Params, spec: Option<&QuadratureSpec>) -> Result<TailValue> {
    cdf_trapezoid_impl(params, spec, true)
}

// ---------------------------------------------------------------------------
// R_n by its Laplace integral
// ---------------------------------------------------------------------------

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Correction term `R_n(x; delta)` by adaptive trapezoid on the transformed
/// Laplace integral; requires `delta > 0`, `x > 0`.
///
/// When the prefactor pushes the value below the double range the result is
/// 0 with the underflow flag set.
pub fn r_laplace(params: &Params, eps: f64) -> Result<TailValue> {
    if !(params.delta > 0.0) || !(params.x > 0.0) {
        return Err(Error::InvalidArgument("r_laplace: need delta > 0 and x > 0".into()));
    }
    let zeta = params.zeta;
    let n = params.n;
    let y = params.y;
    let log_pre = -0.5 * params.delta * params.delta + 0.5 * y.ln()
        + 0.5 * n * params.ln_one_minus_y()
        - (2.0 * std::f64::consts::PI).ln();
    let logf = move |u: f64| {
        let t = u.exp();
        if !t.is_finite() {
            return f64::NEG_INFINITY;
        }
        -zeta * t + (0.5 * n + 0.5) * u - 0.5 * n * softplus(u) - (y * t).ln_1p()
    };
    let seed = ((0.5 * n + 0.5) / (zeta + 1.0)).max(1e-8).ln();
    let r = find_range(&logf, &[seed], eps);
    let out = integrate_pieces(&logf, r.log_peak, &[(r.s_min, r.s_max)], (r.s_max - r.s_min) / 64.0, eps, 2, false);
    let log_value = log_pre + out.log_scale + out.total.max(0.0).ln();
    let (value, underflow) = if log_value < (1e-300_f64).ln() {
        (0.0, true)
    } else {
        (log_value.exp(), false)
    };
    Ok(TailValue {
        value,
        complement: 1.0 - value,
        est_rel_err: out.est_rel,
        method: Method::Trapezoid,
        terms_used: out.nodes,
        r_term_included: true,
        underflow,
        primary: TailSide::Lower,
    })
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

/// Density dF/dx >= 0 by the same transformed trapezoid machinery; the
/// caller reflects negative x.
pub fn pdf_quadrature(params: &Params) -> Result<f64> {
    let eps = 1e-14;
    let n = params.n;
    let x = params.x;
    let delta = params.delta;
    let log_pre = NormConst::log_an_minus_half_n(n) + 0.5 * (2.0 / std::f64::consts::PI).ln();
    let logf = move |s: f64| {
        let t = s.exp();
        if !t.is_finite() {
            return f64::NEG_INFINITY;
        }
        let d = delta - x * t;
        -0.5 * d * d + s + radial_log_kernel(n, s)
    };
    let mut seeds = vec![0.0];
    if delta > 0.0 && x > 0.0 {
        seeds.push((delta / x).ln());
    }
    let r = find_range(&logf, &seeds, eps);
    let out = integrate_pieces(&logf, r.log_peak, &[(r.s_min, r.s_max)], (r.s_max - r.s_min) / 64.0, eps, 2, false);
    let log_value = log_pre + out.log_scale + out.total.max(0.0).ln();
    if log_value < LN_TINY {
        return Ok(0.0);
    }
    Ok(log_value.exp())
}

// ---------------------------------------------------------------------------
// Kummer-integrand cross-checks
// ---------------------------------------------------------------------------

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

fn kummer_check_guard(params: &Params) -> Result<(f64, f64)> {
    let z = 0.5 * params.delta * params.delta;
    if params.delta * params.delta * params.y > 500.0 || params.n > 500.0 || z > 400.0 {
        return Err(Error::UnsupportedRange(format!(
            "pq_kummer_check: delta^2 y = {}, n = {} outside the cross-check range",
            params.delta * params.delta * params.y,
            params.n
        )));
    }
    Ok((z, (-z).exp()))
}

/// `(P_n, Q_n)` by adaptive quadrature of the Kummer-integrand forms over
/// `[0, y]`; a slow cross-validation surface for the series route.
pub fn pq_kummer_check(params: &Params) -> Result<(f64, f64)> {
    let (z, emz) = kummer_check_guard(params)?;
    let n = params.n;
    let y = params.y;
    if y == 0.0 {
        return Ok((0.0, 0.0));
    }
    // P: substitute t = u^2 to remove the endpoint singularity
    let f1 = |u: f64| -> f64 {
        let t = u * u;
        (1.0 - t).powf(0.5 * n - 1.0) * kummer_1f1(0.5 * n + 0.5, 0.5, z * t).unwrap_or(f64::NAN)
    };
    let p = emz / ln_beta(0.5, 0.5 * n).exp() * adaptive_simpson(&f1, 0.0, y.sqrt(), 1e-13);
    let f2 = |t: f64| -> f64 {
        (1.0 - t).powf(0.5 * n - 1.0) * kummer_1f1(0.5 * n + 1.0, 1.5, z * t).unwrap_or(f64::NAN)
    };
    let q = 0.5 * params.delta * n * emz / (2.0 * std::f64::consts::PI).sqrt()
        * adaptive_simpson(&f2, 0.0, y, 1e-13);
    Ok((p, q))
}

/// Same pair through the complementary integrals over `[0, 1-y]`.
pub fn pq_kummer_check_complement(params: &Params) -> Result<(f64, f64)> {
    let (z, emz) = kummer_check_guard(params)?;
    let n = params.n;
    let omy = params.one_minus_y();
    // endpoint power t^{n/2-1}: substitute t = omy * v^m with m n/2 >= 1
    let m = if n >= 2.0 { 1.0 } else { (2.0 / n).ceil() };
    let jac = |v: f64| -> (f64, f64) {
        let t = omy * v.powf(m);
        // t^{n/2-1} dt = omy^{n/2} m v^{m n/2 - 1} dv
        let w = omy.powf(0.5 * n) * m * v.powf(0.5 * m * n - 1.0);
        (t, w)
    };
    let f1 = |v: f64| -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let (t, w) = jac(v);
        w / (1.0 - t).sqrt() * kummer_1f1(0.5 * n + 0.5, 0.5, z * (1.0 - t)).unwrap_or(f64::NAN)
    };
    let p = 0.5 - 0.5 * emz / ln_beta(0.5, 0.5 * n).exp() * adaptive_simpson(&f1, 0.0, 1.0, 1e-13);
    let f2 = |v: f64| -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let (t, w) = jac(v);
        w * kummer_1f1(0.5 * n + 1.0, 1.5, z * (1.0 - t)).unwrap_or(f64::NAN)
    };
    let q = 0.5 * erf_raw(params.delta / kernels::SQRT_2)
        - params.delta * n * emz / (2.0 * (2.0 * std::f64::consts::PI).sqrt())
            * adaptive_simpson(&f2, 0.0, 1.0, 1e-13);
    Ok((p, q))
}
