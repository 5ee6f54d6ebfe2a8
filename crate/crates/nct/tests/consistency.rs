//! Cross-route consistency and engine invariants on randomized grids, plus
//! a few property-based kernel checks.

use nct::asymp_delta::{cdf_large_delta_gamma, r_leading_estimate, GammaForm};
use nct::series::g_series;
use nct::{cdf, kernels, sf, Method, MethodConfig, Params, TailSide};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// Route consistency over a random grid: every applicable route pair agrees
/// within the sum of the claimed estimates, and the dispatcher's choice
/// tracks the series-or-trapezoid reference.
#[test]
fn route_consistency_grid() {
    let cfg = MethodConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let methods = [
        Method::LargeDeltaGamma,
        Method::LargeDeltaElem,
        Method::LargeNUniform,
        Method::LargeNBounded,
        Method::Series,
        Method::Trapezoid,
    ];
    let mut checked_pairs = 0usize;
    let mut checked_ref = 0usize;
    for _ in 0..500 {
        let n = 0.5 * (1e4_f64 / 0.5).powf(rng.gen::<f64>());
        let delta: f64 = rng.gen_range(-50.0..300.0);
        let x: f64 = rng.gen_range(-100.0..1000.0);

        let chosen = cdf(x, delta, n, &cfg).expect("dispatch");
        // collect per-route values at the same point
        let mut route_vals: Vec<(Method, f64, f64)> = Vec::new();
        for m in methods {
            let mut c = cfg.clone();
            c.force_method = Some(m);
            if let Ok(t) = cdf(x, delta, n, &c) {
                if !t.underflow {
                    route_vals.push((m, t.value, t.est_rel_err));
                }
            }
        }
        for i in 0..route_vals.len() {
            for j in i + 1..route_vals.len() {
                let (ma, va, ea) = route_vals[i];
                let (mb, vb, eb) = route_vals[j];
                // estimates above ~1 carry no information
                if ea > 0.5 || eb > 0.5 {
                    continue;
                }
                let tol = (ea + eb + 4.0 * f64::EPSILON) * va.abs().max(vb.abs()).max(1e-300);
                checked_pairs += 1;
                assert!(
                    (va - vb).abs() <= tol.max(1e-15 * va.abs().max(vb.abs())),
                    "routes {ma} vs {mb} disagree at x={x}, delta={delta}, n={n}: {va:e} vs {vb:e} (tol {tol:e})"
                );
            }
        }
        // dispatcher vs reference route
        let reference = route_vals
            .iter()
            .filter(|(m, _, e)| (*m == Method::Series || *m == Method::Trapezoid) && *e <= cfg.tol)
            .min_by(|a, b| a.2.total_cmp(&b.2));
        if let Some(&(_, rv, re)) = reference {
            if chosen.est_rel_err <= cfg.tol && !chosen.underflow && rv > 1e-280 {
                checked_ref += 1;
                assert!(
                    (chosen.value - rv).abs() <= (10.0 * cfg.tol + re) * rv.max(chosen.value),
                    "dispatch at x={x}, delta={delta}, n={n}: {} ({}) vs reference {rv}",
                    chosen.value,
                    chosen.method,
                );
            }
        }
    }
    assert!(checked_pairs > 300, "only {checked_pairs} route pairs exercised");
    assert!(checked_ref > 200, "only {checked_ref} reference checks exercised");
}

/// The assembled series complement: F + G = 1 to 1e-12 and both in [0, 1]
/// across a structured grid.
#[test]
fn series_complement_grid() {
    let cfg = MethodConfig::default();
    for i in 0..12 {
        let x = 30.0 * i as f64 / 11.0;
        for j in 0..12 {
            let delta = -20.0 + 40.0 * j as f64 / 11.0;
            for &n in &[0.5, 2.0, 10.3, 55.0, 500.0] {
                let f = cdf(x, delta, n, &cfg).unwrap();
                assert!((0.0..=1.0).contains(&f.value));
                if x > 0.0 {
                    let params = Params::new(x, delta, n).unwrap();
                    let g = g_series(&params, 1e-15).unwrap();
                    assert!(
                        (f.value + g.value - 1.0).abs() <= 1e-12,
                        "x={x} delta={delta} n={n}: F={} G={}",
                        f.value,
                        g.value
                    );
                }
            }
        }
    }
}

/// Primary-function policy: for x >= 0 the engine computes F directly when
/// delta >= x and the complement otherwise.
#[test]
fn primary_function_policy() {
    let cfg = MethodConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let x: f64 = rng.gen_range(0.001..40.0);
        let delta: f64 = rng.gen_range(0.001..40.0);
        let n: f64 = rng.gen_range(0.5..2000.0);
        let t = cdf(x, delta, n, &cfg).unwrap();
        let want = if delta >= x {
            TailSide::Lower
        } else {
            TailSide::Upper
        };
        assert_eq!(
            t.primary, want,
            "x={x} delta={delta} n={n} method={}",
            t.method
        );
        // the survival-function view must preserve the trace
        let s = sf(x, delta, n, &cfg).unwrap();
        assert_eq!(s.primary, want);
    }
}

/// r_term_included mirrors the negligibility rule for asymptotic routes.
#[test]
fn r_inclusion_rule() {
    let cfg = MethodConfig::default();
    let pts = [
        (5.0, 20.0, 10.3),
        (20.0, 20.0, 10.3),
        (9.0, 12.0, 4.0),
        (3.0, 9.0, 2.0),
        (52.0, 70.0, 4.0),
    ];
    for &(x, delta, n) in &pts {
        let mut c = cfg.clone();
        c.force_method = Some(Method::LargeDeltaGamma);
        let t = cdf(x, delta, n, &c).unwrap();
        let params = Params::new(x, delta, n).unwrap();
        let expect = r_leading_estimate(&params) > cfg.tol * t.value.max(f64::MIN_POSITIVE);
        assert_eq!(t.r_term_included, expect, "at ({x},{delta},{n})");
    }
}

/// Large-n agreement: bounded and uniform expansions land on the same values
/// within their combined estimates where both genuinely apply (inside the
/// bounded validity box and above the uniform route's delta^2 y floor).
#[test]
fn bounded_uniform_agreement() {
    let cfg = MethodConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut tested = 0;
    for _ in 0..120 {
        let n: f64 = rng.gen_range(2500.0..20000.0);
        let cap = 0.15 * n.sqrt();
        let x: f64 = rng.gen_range(0.75 * cap..cap);
        let delta: f64 = rng.gen_range(0.75 * cap..cap);
        if delta * delta * x * x / (n + x * x) < 1.0 {
            continue;
        }
        let mut cb = cfg.clone();
        cb.force_method = Some(Method::LargeNBounded);
        let mut cu = cfg.clone();
        cu.force_method = Some(Method::LargeNUniform);
        let (b, u) = match (cdf(x, delta, n, &cb), cdf(x, delta, n, &cu)) {
            (Ok(b), Ok(u)) => (b, u),
            _ => continue,
        };
        if b.underflow || u.underflow {
            continue;
        }
        tested += 1;
        // 1e-12 floor: both coefficient generators carry polynomial
        // conditioning in x, delta that the last-term heuristics cannot see
        let tol = (b.est_rel_err + u.est_rel_err + 1e-12) * b.value.max(u.value);
        assert!(
            (b.value - u.value).abs() <= tol,
            "n={n} x={x} delta={delta}: {} vs {}",
            b.value,
            u.value
        );
    }
    assert!(tested > 20, "only {tested} agreement points");
}

/// Q-form and P-form of the incomplete-gamma expansion agree within their
/// claimed estimates whenever both converge.
#[test]
fn gamma_form_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut tested = 0;
    for _ in 0..100 {
        let n: f64 = rng.gen_range(1.0..30.0);
        let x: f64 = rng.gen_range(3.0..40.0);
        let ratio: f64 = rng.gen_range(0.7..1.4);
        let delta = x * ratio;
        let params = Params::new(x, delta, n).unwrap();
        if params.zeta < (2.0 * n).max(30.0) {
            continue;
        }
        let q = match cdf_large_delta_gamma(&params, None, GammaForm::QForm) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let p = match cdf_large_delta_gamma(&params, None, GammaForm::PForm) {
            Ok(t) => t,
            Err(_) => continue,
        };
        tested += 1;
        let tol = (q.est_rel_err + p.est_rel_err + 1e-13) * q.value.max(p.value).max(1e-300)
            + 4.0 * f64::EPSILON;
        assert!(
            (q.value - p.value).abs() <= tol,
            "x={x} delta={delta} n={n}: {} vs {}",
            q.value,
            p.value
        );
    }
    assert!(tested > 30, "only {tested} form-agreement points");
}

/// Elementary-expansion coefficients grow like (1-y)^{-(k+1)}: the scaled
/// magnitudes stay polynomially bounded in k.
#[test]
fn elem_coefficient_growth() {
    for &y in &[0.3, 0.5, 0.7, 0.9, 0.95] {
        let co = nct::asymp_delta::elem_coeffs(10.3, y, 30).unwrap();
        for (k, &c) in co.c.iter().enumerate() {
            let scaled = c.abs() * (1.0 - y).powi(k as i32 + 1);
            assert!(
                scaled <= 1.0 + (k as f64 + 1.0).powi(3),
                "y={y} k={k}: scaled coefficient {scaled}"
            );
        }
    }
}

/// Trapezoid route against the series route on a random moderate grid.
#[test]
fn trapezoid_vs_series_grid() {
    let cfg = MethodConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..100 {
        let x: f64 = rng.gen_range(0.1..40.0);
        let delta: f64 = rng.gen_range(-30.0..30.0);
        let n: f64 = rng.gen_range(0.5..800.0);
        let mut ct = cfg.clone();
        ct.force_method = Some(Method::Trapezoid);
        let mut cs = cfg.clone();
        cs.force_method = Some(Method::Series);
        let (t, s) = match (cdf(x, delta, n, &ct), cdf(x, delta, n, &cs)) {
            (Ok(t), Ok(s)) => (t, s),
            _ => continue,
        };
        if t.underflow || s.underflow {
            continue;
        }
        let tol = (1e-12_f64).max(10.0 * (t.est_rel_err + s.est_rel_err)) * t.value.max(s.value).max(1e-300);
        assert!(
            (t.value - s.value).abs() <= tol,
            "x={x} delta={delta} n={n}: trap {} vs series {}",
            t.value,
            s.value
        );
    }
}

/// Reflection through the engine equals direct evaluation at mirrored
/// arguments.
#[test]
fn engine_reflection() {
    let cfg = MethodConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let x: f64 = rng.gen_range(-25.0..25.0);
        let delta: f64 = rng.gen_range(-12.0..12.0);
        let n: f64 = rng.gen_range(0.5..400.0);
        let a = cdf(x, delta, n, &cfg).unwrap();
        let b = cdf(-x, -delta, n, &cfg).unwrap();
        assert!(
            (a.value - b.complement).abs() <= 1e-12 * a.value.max(b.complement).max(1e-6),
            "x={x} delta={delta} n={n}"
        );
    }
}

/// pdf normalization: trapezoid over x of the density integrates to one.
#[test]
fn pdf_normalizes() {
    let cfg = MethodConfig::default();
    let h = 0.01;
    let half = 50.0; // the tail beyond 40 still carries ~1e-8 of mass
    let steps = (2.0 * half / h) as usize;
    let mut acc = 0.0;
    for k in 0..=steps {
        let x = -half + k as f64 * h;
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        acc += w * nct::pdf(x, 2.0, 8.0, &cfg).unwrap();
    }
    let integral = acc * h;
    assert!(
        (integral - 1.0).abs() < 1e-8,
        "pdf integral {integral}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// erfc reflection holds across magnitudes.
    #[test]
    fn prop_erfc_reflection(z in -20.0f64..20.0) {
        let s = kernels::erfc(z).unwrap() + kernels::erfc(-z).unwrap();
        prop_assert!((s - 2.0).abs() < 1e-14);
    }

    /// Incomplete-beta complement identity on arbitrary parameters.
    #[test]
    fn prop_inc_beta_complement(y in 1e-6f64..1.0, a in 0.1f64..300.0, b in 0.1f64..300.0) {
        let lhs = kernels::inc_beta(y, a, b).unwrap();
        let rhs = 1.0 - kernels::inc_beta(1.0 - y, b, a).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-13);
    }

    /// The regularized gamma pair stays a partition of unity as returned.
    #[test]
    fn prop_reg_gamma_partition(a in 0.01f64..500.0, z in 0.0f64..800.0) {
        let g = kernels::reg_gamma(a, z).unwrap();
        prop_assert_eq!(g.p + g.q, 1.0);
        prop_assert!(g.p >= 0.0 && g.p <= 1.0);
    }

    /// Engine complementarity on arbitrary well-posed inputs.
    #[test]
    fn prop_cdf_sf_partition(x in -20.0f64..20.0, d in -8.0f64..8.0, n in 0.5f64..200.0) {
        let cfg = MethodConfig::default();
        let a = cdf(x, d, n, &cfg).unwrap();
        let b = sf(x, d, n, &cfg).unwrap();
        prop_assert!((a.value + b.value - 1.0).abs() <= 2.0 * f64::EPSILON);
        prop_assert!(rel(a.complement, b.value) < 1e-15 || (a.complement - b.value).abs() < 1e-15);
    }
}
