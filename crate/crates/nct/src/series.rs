//! The defining series route: the lower-tail split `F = erfc(delta/sqrt2)/2 +
//! P + Q` summed with stable incomplete-beta ladders, the complementary
//! series for `G = 1 - F`, and the alternating variant that yields the
//! correction term `R`.
//!
//! This is the reference route for small-to-moderate noncentrality and the
//! oracle backbone for the asymptotic routes.

use crate::kernels::{self, inc_beta, ln_beta, ln_gamma_star, LN_2PI};
use crate::{Error, Kahan, Result};

/// Validated evaluation point plus the derived scales every route consumes.
///
/// Construction assumes `x >= 0`; the engine folds negative `x` through the
/// reflection rule before building `Params`.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    /// Abscissa (nonnegative here).
    pub x: f64,
    /// Noncentrality parameter.
    pub delta: f64,
    /// Degrees of freedom, any positive real.
    pub n: f64,
    /// y = x^2 / (n + x^2), in [0, 1).
    pub y: f64,
    /// zeta = delta^2 y / 2.
    pub zeta: f64,
    /// (1 - y) / y = n / x^2.
    pub eta_gamma: f64,
    /// x / sqrt(n).
    pub xi: f64,
    /// delta / sqrt(n).
    pub sigma: f64,
    /// z = y sigma^2.
    pub z_scaled: f64,
    /// 1 / y.
    pub rho: f64,
}

impl Params {
    pub fn new(x: f64, delta: f64, n: f64) -> Result<Self> {
        if !x.is_finite() || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "params: x and delta must be finite, got x={x}, delta={delta}"
            )));
        }
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument(format!("params: need n > 0, got {n}")));
        }
        if x < 0.0 {
            return Err(Error::InvalidArgument(
                "params: negative x must be reflected by the caller".into(),
            ));
        }
        let eta_gamma = n / (x * x); // infinite at x = 0, used only for x > 0
        let y = if x > 1.0 {
            1.0 / (1.0 + eta_gamma)
        } else {
            x * x / (n + x * x)
        };
        let sigma = delta / n.sqrt();
        Ok(Params {
            x,
            delta,
            n,
            y,
            zeta: 0.5 * delta * delta * y,
            eta_gamma,
            xi: x / n.sqrt(),
            sigma,
            z_scaled: y * sigma * sigma,
            rho: 1.0 / y,
        })
    }

    /// 1 - y computed as n / (n + x^2), exact to rounding even as y -> 1.
    pub(crate) fn one_minus_y(&self) -> f64 {
        self.n / (self.n + self.x * self.x)
    }

    /// ln(1 - y), safe for y close to 1.
    pub(crate) fn ln_one_minus_y(&self) -> f64 {
        self.one_minus_y().ln()
    }
}

/// Result of one series evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    /// Bound on the neglected tail relative to the partial sum.
    pub truncation_bound: f64,
}

/// Smallest integer `j > zv` with `e^{-zv} zv^j / (e^{-j} j^j) <= eps`.
///
/// This bounds the Poisson-weight tail of the series and serves as the
/// a-priori cap and backward-recurrence start.
pub fn start_index(zv: f64, eps: f64) -> Result<usize> {
    if !(zv > 0.0) || !zv.is_finite() {
        return Err(Error::InvalidArgument(format!("start_index: need zv > 0, got {zv}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "start_index: need 0 < eps < 1, got {eps}"
        )));
    }
    let target = eps.ln();
    let h = |j: f64| -zv + j * (zv.ln() + 1.0 - j.ln());
    // h is 0 at j = zv and strictly decreasing beyond; bracket and bisect.
    let lo0 = zv.max(1e-12);
    let mut hi = 2.0 * zv + 20.0;
    while h(hi) > target {
        hi = hi * 1.6 + 10.0;
    }
    let mut lo = lo0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // smallest integer j > zv with h(j) <= target
    let mut j = hi.floor().max((zv + 1.0).floor());
    while j - 1.0 > zv && h(j - 1.0) <= target {
        j -= 1.0;
    }
    while h(j) > target || j <= zv {
        j += 1.0;
    }
    Ok(j as usize)
}

/// `f_j = I_yv(p + j, q)` for `j = 0..=jmax` by backward recurrence.
///
/// The recursion starts a small guard zone above `jmax`, seeded with two
/// directly computed values so the unwanted (forward-dominant) solution never
/// enters: seed errors along it only damp on the way down, and errors along
/// the wanted solution stay relative because the ladder is nonincreasing.
/// The result is still normalized against a directly computed `f_0`, which
/// removes the residual drift of the seeds.
pub fn inc_beta_backward(yv: f64, p: f64, q: f64, jmax: usize) -> Result<Vec<f64>> {
    if !(yv > 0.0 && yv < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "inc_beta_backward: need 0 < y < 1, got {yv}"
        )));
    }
    if jmax < 1 || jmax > 1_000_000 {
        return Err(Error::Capacity(format!(
            "inc_beta_backward: jmax = {jmax} outside 1..=1e6"
        )));
    }
    let guard = 8usize;
    let top = jmax + guard;
    let mut f = vec![0.0_f64; top + 2];
    f[top + 1] = inc_beta(yv, p + (top + 1) as f64, q)?;
    f[top] = inc_beta(yv, p + top as f64, q)?;
    for j in (1..=top).rev() {
        let a = p + j as f64;
        let b = a + q - 1.0;
        f[j - 1] = ((a + b * yv) * f[j] - a * f[j + 1]) / (b * yv);
    }
    let f0 = inc_beta(yv, p, q)?;
    let scale = if f[0] != 0.0 { f0 / f[0] } else { 0.0 };
    f.truncate(jmax + 1);
    for v in f.iter_mut() {
        *v = (*v * scale).clamp(0.0, 1.0);
    }
    Ok(f)
}

/// ln( z^j0 e^{-z} / Gamma(j0 + 1 + offset) ) assembled so that the large
/// pieces cancel analytically, not in floating point. A naive
/// `j0 ln z - z - lgamma(...)` subtracts three numbers of size ~z and leaves
/// an absolute error ~eps z, which would bias every weight by the same
/// factor (an error of ~1e-12 at z ~ 3000).
fn ln_poisson_anchor(z: f64, j0: usize, offset: f64) -> f64 {
    let m = j0 as f64 + 1.0 + offset;
    let w = (z - m) / m;
    -0.5 * LN_2PI - ln_gamma_star(m) + j0 as f64 * w.ln_1p() - (offset + 0.5) * m.ln()
        + (m - z)
}

/// Poisson-style weights `e^{-z} z^j / Gamma(j + 1 + offset)` built outward
/// from the peak so no intermediate under- or overflows.
fn scaled_weights(z: f64, jmax: usize, offset: f64) -> Vec<f64> {
    let mut w = vec![0.0_f64; jmax + 1];
    let j0 = (z.floor() as usize).min(jmax);
    w[j0] = ln_poisson_anchor(z, j0, offset).exp();
    for j in j0 + 1..=jmax {
        w[j] = w[j - 1] * z / (j as f64 + offset);
    }
    for j in (0..j0).rev() {
        w[j] = w[j + 1] * (j as f64 + 1.0 + offset) / z;
    }
    w
}

/// Rounding-noise bound for a ladder-driven sum. The three-term recurrence
/// has near-equal characteristic roots around the index a* = (q-1) y/(1-y)
/// (where the beta mode crosses the argument); across a zone of half-width
/// ~sqrt(q a*) there per-step errors grow linearly instead of damping, so the
/// noise scales like eps times the square of the number of steps spent inside
/// the zone (measured ~1e-8 at z ~ 5e5, q = 500, against 90-digit values).
fn ladder_noise(z: f64, q: f64, y: f64) -> f64 {
    let a_star = (q - 1.0).max(0.0) * y / (1.0 - y).max(f64::MIN_POSITIVE);
    let half = (q.max(1.0) * a_star).sqrt();
    let top = z + 40.0 * z.sqrt() + 50.0; // indices the sum actually visits
    let eff = (a_star + half).min(top) - (a_star - half).max(0.0);
    // z/2: slow per-step drift over the O(z)-length sums (measured ~3e-13 at
    // z ~ 3e3 and ~7e-13 at z ~ 3e4 with y -> 1)
    f64::EPSILON * (1.0 + z.sqrt() + 0.5 * z + 0.5 * eff.max(0.0).powi(2))
}

struct SumOutcome {
    sum: f64,
    terms: usize,
    last_ratio: f64,
}

/// Accumulates `coef[j] * ladder[j]`, stopping after the term-to-partial-sum
/// ratio stays at or below `eps` for two consecutive terms past the weight
/// peak.
fn sum_with_stop(coef: &[f64], ladder: &[f64], peak: f64, eps: f64) -> SumOutcome {
    let mut sum = Kahan::new();
    let mut prev_ok = false;
    let mut terms = coef.len();
    let mut last_ratio = 0.0;
    for (j, (&w, &f)) in coef.iter().zip(ladder.iter()).enumerate() {
        let term = w * f;
        sum.add(term);
        let s = sum.value().abs();
        let ratio = if s > 0.0 { term.abs() / s } else { 1.0 };
        last_ratio = ratio;
        if (j as f64) > peak && j > 1 {
            let ok = ratio <= eps;
            if ok && prev_ok {
                terms = j + 1;
                break;
            }
            prev_ok = ok;
        }
    }
    SumOutcome {
        sum: sum.value(),
        terms,
        last_ratio,
    }
}

/// The two defining series `P_n` and `Q_n`; `Q_n` carries the sign of delta.
pub fn pq_series(params: &Params, eps: f64) -> Result<(SeriesResult, SeriesResult)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("pq_series: bad eps {eps}")));
    }
    let ad = params.delta.abs();
    let z = 0.5 * ad * ad;
    let trivial = |value: f64| SeriesResult {
        value,
        terms_used: 1,
        truncation_bound: 0.0,
    };
    if params.x == 0.0 || params.y == 0.0 {
        return Ok((trivial(0.0), trivial(0.0)));
    }
    if z == 0.0 {
        // only the j = 0 term of P survives
        let p0 = 0.5 * inc_beta(params.y, 0.5, 0.5 * params.n)?;
        return Ok((trivial(p0), trivial(0.0)));
    }
    let jmax = start_index(z, eps)?;
    if jmax > 1_000_000 {
        return Err(Error::Capacity(format!("pq_series: {jmax} terms required")));
    }
    let half_n = 0.5 * params.n;
    let fp = inc_beta_backward(params.y, 0.5, half_n, jmax)?;
    let fq = inc_beta_backward(params.y, 1.0, half_n, jmax)?;
    let wp = scaled_weights(z, jmax, 0.0);
    let wq = scaled_weights(z, jmax, 0.5);

    let op = sum_with_stop(&wp, &fp, z, eps);
    let oq = sum_with_stop(&wq, &fq, z, eps);
    let noise = ladder_noise(z, half_n, params.y);
    let p = SeriesResult {
        value: 0.5 * op.sum,
        terms_used: op.terms,
        truncation_bound: (2.0 * op.last_ratio).max(noise),
    };
    let qmag = 0.5 * (ad / kernels::SQRT_2) * oq.sum;
    let q = SeriesResult {
        value: if params.delta >= 0.0 { qmag } else { -qmag },
        terms_used: oq.terms,
        truncation_bound: (2.0 * oq.last_ratio).max(noise),
    };
    Ok((p, q))
}

/// Shared core of the complementary series: with `s = +1` it sums `G_n`,
/// with `s = -1` the alternating series for `R_n`.
fn complementary_series(params: &Params, s: f64, eps: f64) -> Result<SeriesResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("series: bad eps {eps}")));
    }
    let ad = params.delta.abs();
    let z = 0.5 * ad * ad;
    let omy = params.one_minus_y();
    let half_n = 0.5 * params.n;
    if params.x == 0.0 {
        // I_1(.,.) = 1 throughout: G = (1 + s*erf(ad/sqrt2))/2
        let v = 0.5 * (1.0 + s * kernels::erf_raw(ad / kernels::SQRT_2));
        return Ok(SeriesResult {
            value: v,
            terms_used: 1,
            truncation_bound: 0.0,
        });
    }
    if z == 0.0 {
        let v = 0.5 * inc_beta(omy, half_n, 0.5)?;
        return Ok(SeriesResult {
            value: v,
            terms_used: 1,
            truncation_bound: 0.0,
        });
    }
    let mcap = start_index(z, eps)?;
    // first-order chains in the second argument of I_{1-y}(n/2, b):
    // I_x(a, b+1) = I_x(a, b) + x^a (1-x)^b / (b B(a, b))
    let even = beta_b_chain(omy, params.y, half_n, 0.5, mcap + 1)?;
    let odd = beta_b_chain(omy, params.y, half_n, 1.0, mcap + 1)?;
    let wp = scaled_weights(z, mcap, 0.0);
    let wq = scaled_weights(z, mcap, 0.5);
    let qfac = s * ad / kernels::SQRT_2;

    let mut sum = Kahan::new();
    let mut sum_abs = Kahan::new();
    let mut terms = 0usize;
    let mut prev_ok = false;
    let mut last_ratio = 1.0;
    for m in 0..=mcap {
        let te = wp[m] * even[m];
        let to = qfac * wq[m] * odd[m];
        sum.add(te);
        sum.add(to);
        sum_abs.add(te.abs());
        sum_abs.add(to.abs());
        terms = 2 * (m + 1);
        let sabs = sum.value().abs();
        let ratio = if sabs > 0.0 {
            (te.abs() + to.abs()) / sabs
        } else {
            1.0
        };
        last_ratio = ratio;
        if (m as f64) > z && m > 1 {
            let ok = ratio <= eps;
            if ok && prev_ok {
                break;
            }
            prev_ok = ok;
        }
    }
    let v = 0.5 * sum.value();
    // the ladder values carry ~1e-14 relative error; alternation amplifies it
    let cancel = 1e-14 * sum_abs.value() / sum.value().abs().max(f64::MIN_POSITIVE);
    if s < 0.0 && cancel > 1e-8 {
        return Err(Error::Reroute(format!(
            "alternating series cancellation {cancel:.2e} beyond tolerance"
        )));
    }
    // per-step drift of the first-order chains over O(z) steps
    let drift = f64::EPSILON * (1.0 + 0.25 * terms as f64);
    Ok(SeriesResult {
        value: v,
        terms_used: terms,
        truncation_bound: (2.0 * last_ratio).max(cancel).max(drift),
    })
}

/// Values `I_x(a, b0 + m)` for `m = 0..count` by the stable first-order
/// recurrence (all increments positive, the sequence is increasing).
fn beta_b_chain(x: f64, one_minus_x: f64, a: f64, b0: f64, count: usize) -> Result<Vec<f64>> {
    let mut w = inc_beta(x, a, b0)?;
    // T_b = x^a (1-x)^b / (b B(a, b)); ln(1-x) must come from the caller's
    // exact complement to survive x -> 1
    let mut t = (a * x.ln() + b0 * one_minus_x.ln() - b0.ln() - ln_beta(a, b0)).exp();
    let mut b = b0;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(w);
        w = (w + t).min(1.0);
        t *= one_minus_x * (a + b) / (b + 1.0);
        b += 1.0;
    }
    Ok(out)
}

/// Complement `G_n = 1 - F_n` by direct summation; value in [0, 1].
pub fn g_series(params: &Params, eps: f64) -> Result<SeriesResult> {
    complementary_series(params, 1.0, eps)
}

/// Correction term `R_n` by its alternating series; requires `delta >= 0`.
///
/// Severe cancellation (noncentrality beyond a few units) reroutes to the
/// Laplace-integral evaluation.
pub fn r_series(params: &Params, eps: f64) -> Result<SeriesResult> {
    if params.delta < 0.0 {
        return Err(Error::InvalidArgument("r_series: need delta >= 0".into()));
    }
    complementary_series(params, -1.0, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::erfc_raw;

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    #[test]
    fn params_invariants() {
        let p = Params::new(5.0, 7.5, 10.0).unwrap();
        assert!(rel(p.y * (p.n + p.x * p.x), p.x * p.x) < 1e-14);
        assert!(rel(p.eta_gamma * p.y, p.one_minus_y()) < 1e-14);
        assert!(p.zeta >= 0.0);
        assert!(Params::new(1.0, f64::NAN, 2.0).is_err());
        assert!(Params::new(1.0, 0.0, 0.0).is_err());
        assert!(Params::new(-1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn start_index_values() {
        assert_eq!(start_index(28.125, 1e-16).unwrap(), 85);
        let j2 = start_index(153.125, 1e-16).unwrap();
        assert!((270..=273).contains(&j2), "got {j2}");
        let j3 = start_index(0.5, 1e-16).unwrap();
        assert!(j3 <= 20, "got {j3}");
        // direct tail-summation oracle: e^{-z} sum_{j > j3} z^j / j! <= eps
        let z: f64 = 0.5;
        let mut term = (-z).exp();
        for j in 1..=j3 {
            term *= z / j as f64;
        }
        let mut tail = 0.0;
        let mut t = term;
        for j in j3 + 1..j3 + 200 {
            t *= z / j as f64;
            tail += t;
        }
        assert!(tail <= 1e-16, "tail {tail}");
        assert!(start_index(0.0, 1e-16).is_err());
        assert!(start_index(1.0, 2.0).is_err());
    }

    #[test]
    fn backward_recurrence_closed_form() {
        // I_y(m, 1) = y^m
        let f = inc_beta_backward(0.5, 1.0, 1.0, 2).unwrap();
        assert!(rel(f[0], 0.5) < 1e-14);
        assert!(rel(f[1], 0.25) < 1e-13);
        assert!(rel(f[2], 0.125) < 1e-13);
        assert!(inc_beta_backward(0.5, 1.0, 1.0, 0).is_err());
        assert!(inc_beta_backward(0.5, 1.0, 1.0, 2_000_000).is_err());
    }

    #[test]
    fn backward_recurrence_vs_per_term_kernel() {
        // Table-geometry ladder: y from x = 5, n = 10.3
        let y = 25.0 / 35.3;
        let f = inc_beta_backward(y, 0.5, 5.15, 254).unwrap();
        for (j, &v) in f.iter().enumerate() {
            let direct = inc_beta(y, 0.5 + j as f64, 5.15).unwrap();
            let tol = 1e-12 * direct.max(1e-280);
            assert!((v - direct).abs() <= tol, "j={j}: {v} vs {direct}");
        }
        // nonincreasing
        for j in 1..f.len() {
            assert!(f[j] <= f[j - 1] + 1e-15);
        }
    }

    #[test]
    fn forward_recurrence_loses_digits() {
        let (y, p, q, jmax) = (0.97, 0.5, 5.15, 300usize);
        let back = inc_beta_backward(y, p, q, jmax).unwrap();
        // forward recursion from exact f_0, f_1
        let mut fwd = vec![0.0_f64; jmax + 1];
        fwd[0] = inc_beta(y, p, q).unwrap();
        fwd[1] = inc_beta(y, p + 1.0, q).unwrap();
        for j in 1..jmax {
            let a = p + j as f64;
            let b = a + q - 1.0;
            fwd[j + 1] = ((a + b * y) * fwd[j] - b * y * fwd[j - 1]) / a;
        }
        let mut worst_fwd: f64 = 0.0;
        let mut worst_back: f64 = 0.0;
        for j in (250..=300).step_by(10) {
            let direct = inc_beta(y, p + j as f64, q).unwrap();
            worst_fwd = worst_fwd.max(rel(fwd[j], direct));
            worst_back = worst_back.max(rel(back[j], direct));
        }
        // the forward pass must have lost at least four digits relative
        // to the backward one
        assert!(
            worst_fwd > 1e4 * worst_back.max(1e-16),
            "fwd {worst_fwd} back {worst_back}"
        );
    }

    #[test]
    fn pq_series_term_count_and_values() {
        let params = Params::new(5.0, 7.5, 10.0).unwrap();
        let (p, q) = pq_series(&params, 1e-16).unwrap();
        assert_eq!(p.terms_used, 73);
        // 40-digit oracle for P and Q at this point
        assert!(rel(p.value, 0.02091901563043245449974) < 1e-13);
        assert!(rel(q.value, 0.02091901563040054558317) < 1e-13);
    }

    #[test]
    fn pq_series_x_zero() {
        let params = Params::new(0.0, 3.0, 7.0).unwrap();
        let (p, q) = pq_series(&params, 1e-15).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn pq_series_assembles_table_value() {
        // large-n spot where the series is still the reference
        let params = Params::new(10.0, 10.0, 1000.0).unwrap();
        let (p, q) = pq_series(&params, 1e-16).unwrap();
        let f = 0.5 * erfc_raw(10.0 / kernels::SQRT_2) + p.value + q.value;
        assert!(rel(f, 0.4990113438204065094904) < 1e-13, "f={f}");
    }

    #[test]
    fn pq_series_negative_delta_parity() {
        let pp = Params::new(5.0, 3.0, 10.0).unwrap();
        let pm = Params::new(5.0, -3.0, 10.0).unwrap();
        let (p1, q1) = pq_series(&pp, 1e-15).unwrap();
        let (p2, q2) = pq_series(&pm, 1e-15).unwrap();
        assert_eq!(p1.value, p2.value);
        assert_eq!(q1.value, -q2.value);
    }

    #[test]
    fn pq_series_survives_large_delta() {
        // prefactor alone would underflow; scaled weights must not
        let params = Params::new(50.0, 75.0, 100.0).unwrap();
        let (p, q) = pq_series(&params, 1e-16).unwrap();
        let f = 0.5 * erfc_raw(75.0 / kernels::SQRT_2) + p.value + q.value;
        assert!(rel(f, 4.996150603382719163158e-11) < 1e-12, "f={f}");
    }

    #[test]
    fn beta_b_chain_matches_kernel() {
        let y: f64 = 25.0 / 125.0; // x=5, n=100 geometry
        let omy = 1.0 - y;
        let chain = beta_b_chain(omy, y, 50.0, 0.5, 40).unwrap();
        for (m, &v) in chain.iter().enumerate() {
            let direct = inc_beta(omy, 50.0, 0.5 + m as f64).unwrap();
            assert!(
                (v - direct).abs() <= 1e-12 * direct.max(1e-250),
                "m={m}: {v} vs {direct}"
            );
        }
        // increasing
        for m in 1..chain.len() {
            assert!(chain[m] >= chain[m - 1]);
        }
    }

    #[test]
    fn g_series_complements_f() {
        // x=1, n=10, delta=5: G = 1 - F with F the trapezoid spot value
        let params = Params::new(1.0, 5.0, 10.0).unwrap();
        let g = g_series(&params, 1e-16).unwrap();
        assert!(rel(g.value, 1.0 - 0.00004347252856505909) < 1e-12);

        // complementarity against the assembled series at delta = 20
        let params = Params::new(5.0, 20.0, 10.3).unwrap();
        let g = g_series(&params, 1e-16).unwrap();
        let (p, q) = pq_series(&params, 1e-16).unwrap();
        let f = 0.5 * erfc_raw(20.0 / kernels::SQRT_2) + p.value + q.value;
        assert!((f + g.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn g_series_central_case() {
        // delta = 0 reduces to the central distribution,
        // F = 1/2 + I_y(1/2, n/2) / 2 for x >= 0
        let params = Params::new(1.0, 0.0, 7.0).unwrap();
        let g = g_series(&params, 1e-15).unwrap();
        let f_central = 0.5 + 0.5 * inc_beta(params.y, 0.5, 3.5).unwrap();
        assert!(rel(1.0 - g.value, f_central) < 1e-13);
    }

    #[test]
    fn r_series_identity_small_delta() {
        // R = erfc(delta/sqrt2)/2 + Q - P, compared at the natural absolute
        // scale of the identity's inputs (the subtraction is ill-conditioned)
        let params = Params::new(5.0, 2.0, 10.0).unwrap();
        let r = r_series(&params, 1e-16).unwrap();
        let (p, q) = pq_series(&params, 1e-16).unwrap();
        let identity = 0.5 * erfc_raw(2.0 / kernels::SQRT_2) + q.value - p.value;
        let scale = 0.5 * erfc_raw(2.0 / kernels::SQRT_2) + q.value + p.value;
        assert!((r.value - identity).abs() <= 1e-12 * scale);
        // 40-digit oracle
        assert!(rel(r.value, 2.518846276895844453873e-7) < 1e-9);
    }

    #[test]
    fn r_series_reroutes_on_cancellation() {
        let params = Params::new(20.0, 10.0, 30.0).unwrap();
        match r_series(&params, 1e-13) {
            Err(Error::Reroute(_)) => {}
            other => panic!("expected reroute, got {other:?}"),
        }
    }
}
