//! Truncated power-series arithmetic over `f64` coefficients, used to
//! generate saddle-point expansion coefficients (series reversion and
//! composition).

/// c = a * b truncated at degree `k`.
pub(crate) fn mul(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let mut c = vec![0.0; k + 1];
    for (i, &ai) in a.iter().enumerate().take(k + 1) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(k + 1 - i) {
            c[i + j] += ai * bj;
        }
    }
    c
}

/// 1 / a truncated at degree `k`; requires a[0] != 0.
pub(crate) fn inv(a: &[f64], k: usize) -> Vec<f64> {
    debug_assert!(a[0] != 0.0);
    let mut out = vec![0.0; k + 1];
    out[0] = 1.0 / a[0];
    for m in 1..=k {
        let mut s = 0.0;
        for j in 1..=m.min(a.len() - 1) {
            s += a[j] * out[m - j];
        }
        out[m] = -s / a[0];
    }
    out
}

/// sqrt(a) truncated at degree `k`; requires a[0] = 1.
pub(crate) fn sqrt1(a: &[f64], k: usize) -> Vec<f64> {
    debug_assert!(a[0] == 1.0);
    let mut out = vec![0.0; k + 1];
    out[0] = 1.0;
    for m in 1..=k {
        let mut s = 0.0;
        for j in 1..m {
            s += out[j] * out[m - j];
        }
        let am = if m < a.len() { a[m] } else { 0.0 };
        out[m] = 0.5 * (am - s);
    }
    out
}

/// Composition (outer ∘ inner) truncated at degree `k`; requires inner[0] = 0.
pub(crate) fn compose(outer: &[f64], inner: &[f64], k: usize) -> Vec<f64> {
    debug_assert!(inner.is_empty() || inner[0] == 0.0);
    let mut acc = vec![0.0; k + 1];
    if !outer.is_empty() {
        acc[0] = outer[0];
    }
    let mut pw = vec![0.0; k + 1];
    pw[0] = 1.0;
    for &co in outer.iter().skip(1) {
        pw = mul(&pw, inner, k);
        if pw.iter().all(|&v| v == 0.0) {
            break;
        }
        if co != 0.0 {
            for (a, &p) in acc.iter_mut().zip(pw.iter()) {
                *a += co * p;
            }
        }
    }
    acc
}

/// Reversion: given s(v) with s[0] = 0, s[1] != 0, returns v(s) to degree `k`.
pub(crate) fn revert(s: &[f64], k: usize) -> Vec<f64> {
    debug_assert!(s.len() >= 2 && s[0] == 0.0 && s[1] != 0.0);
    let mut v = vec![0.0, 1.0 / s[1]];
    for m in 2..=k {
        v.push(0.0);
        let comp = compose(s, &v, m);
        v[m] = -comp[m] / s[1];
    }
    v
}

/// Termwise derivative: d/ds of a series in s.
pub(crate) fn derivative(a: &[f64]) -> Vec<f64> {
    if a.len() <= 1 {
        return vec![0.0];
    }
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Horner evaluation.
pub(crate) fn eval(a: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in a.iter().rev() {
        acc = acc * x + c;
    }
    acc
}
