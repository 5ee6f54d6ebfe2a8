//! Reference-table reproduction: recomputes each row with the method and
//! term count the table was produced with, compares against an in-process
//! series/trapezoid consensus reference, and gates on the tabulated error
//! levels.

use nct::asymp_delta::{cdf_large_delta_elem, cdf_large_delta_gamma, GammaForm};
use nct::asymp_n::{cdf_large_n_bounded_in_box, cdf_large_n_uniform};
use nct::quadrature::{cdf_trapezoid, QuadratureSpec};
use nct::{cdf, Method, MethodConfig, Params};

pub struct Row {
    pub x: f64,
    pub delta: f64,
    pub n: f64,
    pub computed: f64,
    pub reference: f64,
    pub achieved: f64,
    pub gate: f64,
    pub paper_err: f64,
    /// Deviation from the tabulated digits (informational), or the
    /// reported-but-ungated reference error column.
    pub extra: Option<f64>,
}

fn reference(x: f64, delta: f64, n: f64, cfg: &MethodConfig) -> Result<(f64, f64), nct::Error> {
    let mut c = cfg.clone();
    c.force_method = Some(Method::Trapezoid);
    let trap = cdf(x, delta, n, &c)?;
    c.force_method = Some(Method::Series);
    match cdf(x, delta, n, &c) {
        Ok(ser) => {
            let dev = ((ser.value - trap.value) / trap.value.max(f64::MIN_POSITIVE)).abs();
            // consensus: take whichever side carries the smaller honest
            // estimate, and never claim better than their mutual deviation
            let best = if ser.est_rel_err <= trap.est_rel_err {
                ser
            } else {
                trap
            };
            Ok((best.value, best.est_rel_err.max(0.5 * dev)))
        }
        Err(_) => Ok((trap.value, trap.est_rel_err)),
    }
}

fn relerr(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

const T12_GRID: [f64; 6] = [5.0, 8.0, 11.0, 14.0, 17.0, 20.0];
const T1_VALUES: [f64; 6] = [
    0.7890745035061528e-20,
    0.1902963697413609e-07,
    0.4649258368179092e-03,
    0.2912746016055676e-01,
    0.1858422833307925,
    0.4434882973203470,
];
const T1_ERRS: [f64; 6] = [0.20e-13, 0.40e-12, 0.12e-9, 0.11e-7, 0.41e-6, 0.82e-5];
const T2_VALUES: [f64; 6] = [
    0.7890745035061292e-20,
    0.1902963697414361e-07,
    0.4649258368729340e-03,
    0.2912746047441838e-01,
    0.1858423597361172,
    0.4434919419501216,
];
const T2_ERRS: [f64; 6] = [0.10e-13, 0.32e-14, 0.97e-14, 0.69e-14, 0.70e-14, 0.50e-14];
const T3_GRID: [f64; 6] = [1.0, 2.5, 5.0, 7.5, 10.0, 12.5];
const T3_VALUES: [f64; 6] = [
    0.1149355213382657e-18,
    0.3472666641712521e-13,
    0.3344736497826102e-06,
    0.6806053041739461e-02,
    0.4990113438101769,
    0.9919154834852601,
];
const T3_ERRS: [f64; 6] = [0.78e-14, 0.31e-11, 0.15e-10, 0.17e-11, 0.21e-10, 0.63e-10];
const T4_ROWS: [(f64, f64, f64); 4] = [
    (50.0, 100.0, 75.0),
    (500.0, 100.0, 510.0),
    (100.0, 1000.0, 105.0),
    (1000.0, 1000.0, 1010.0),
];
const T4_ERRS3: [f64; 4] = [1.26e-8, 7.45e-10, 6.94e-13, 2.65e-13];
const T4_ERRS6: [f64; 4] = [6.38e-9, 4.54e-12, 3.00e-15, 3.00e-15];

pub fn run(id: &str, csv: bool, cfg: &MethodConfig) -> Result<bool, nct::Error> {
    let rows: Vec<Row> = match id.to_ascii_uppercase().as_str() {
        "T1" => T12_GRID
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let params = Params::new(x, 20.0, 10.3)?;
                let computed = cdf_large_delta_elem(&params, 10)?.value;
                let (reference, _) = reference(x, 20.0, 10.3, cfg)?;
                Ok(Row {
                    x,
                    delta: 20.0,
                    n: 10.3,
                    computed,
                    reference,
                    achieved: relerr(computed, reference),
                    gate: (10.0 * T1_ERRS[i]).max(1e-12),
                    paper_err: T1_ERRS[i],
                    extra: Some(relerr(computed, T1_VALUES[i])),
                })
            })
            .collect::<Result<_, nct::Error>>()?,
        "T2" => T12_GRID
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let params = Params::new(x, 20.0, 10.3)?;
                let computed = cdf_large_delta_gamma(&params, Some(6), GammaForm::QForm)?.value;
                let (reference, _) = reference(x, 20.0, 10.3, cfg)?;
                Ok(Row {
                    x,
                    delta: 20.0,
                    n: 10.3,
                    computed,
                    reference,
                    achieved: relerr(computed, reference),
                    gate: 1e-12,
                    paper_err: T2_ERRS[i],
                    extra: Some(relerr(computed, T2_VALUES[i])),
                })
            })
            .collect::<Result<_, nct::Error>>()?,
        "T3" => T3_GRID
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let params = Params::new(x, 10.0, 1000.0)?;
                // six expansion terms over the table's own grid, which
                // reaches beyond the dispatcher's default validity box
                let computed = cdf_large_n_bounded_in_box(&params, 6, f64::INFINITY, 0.0)?.value;
                let (reference, _) = reference(x, 10.0, 1000.0, cfg)?;
                Ok(Row {
                    x,
                    delta: 10.0,
                    n: 1000.0,
                    computed,
                    reference,
                    achieved: relerr(computed, reference),
                    gate: (10.0 * T3_ERRS[i]).max(1e-12),
                    paper_err: T3_ERRS[i],
                    extra: Some(relerr(computed, T3_VALUES[i])),
                })
            })
            .collect::<Result<_, nct::Error>>()?,
        "T4" => T4_ROWS
            .iter()
            .enumerate()
            .map(|(i, &(x, n, delta))| {
                let params = Params::new(x, delta, n)?;
                // three expansion terms (c0, c1, c2); the tabulated 6-term
                // errors are reported but not gated
                let computed = cdf_large_n_uniform(&params, 2)?.value;
                let (reference, _) = reference(x, delta, n, cfg)?;
                Ok(Row {
                    x,
                    delta,
                    n,
                    computed,
                    reference,
                    achieved: relerr(computed, reference),
                    gate: 10.0 * T4_ERRS3[i],
                    paper_err: T4_ERRS3[i],
                    extra: Some(T4_ERRS6[i]),
                })
            })
            .collect::<Result<_, nct::Error>>()?,
        "EX1" => {
            let points = [(1000.0, 1000.0, 1010.0, 5e-7), (500.0, 100.0, 510.0, 2e-5)];
            points
                .iter()
                .map(|&(x, n, delta, gate)| {
                    let params = Params::new(x, delta, n)?;
                    let computed = cdf_large_n_uniform(&params, 0)?.value;
                    let (reference, _) = reference(x, delta, n, cfg)?;
                    Ok(Row {
                        x,
                        delta,
                        n,
                        computed,
                        reference,
                        achieved: relerr(computed, reference),
                        gate,
                        paper_err: gate / 10.0,
                        extra: None,
                    })
                })
                .collect::<Result<_, nct::Error>>()?
        }
        "TRAP" => {
            let params = Params::new(1.0, 5.0, 10.0)?;
            let spec = QuadratureSpec::new(-3.975, 1.35, 0.075)?;
            let computed = cdf_trapezoid(&params, Some(&spec))?.value;
            let reference = 0.00004347252856505909;
            vec![Row {
                x: 1.0,
                delta: 5.0,
                n: 10.0,
                computed,
                reference,
                achieved: relerr(computed, reference),
                gate: 5e-14,
                paper_err: 2.0e-15,
                extra: None,
            }]
        }
        other => {
            return Err(nct::Error::InvalidArgument(format!(
                "unknown table id '{other}' (expected T1, T2, T3, T4, EX1 or TRAP)"
            )))
        }
    };

    let mut all_ok = true;
    let aux_label = if id.eq_ignore_ascii_case("T4") {
        "6-term"
    } else {
        "vs-digits"
    };
    if csv {
        println!("x,delta,n,computed,reference,achieved_rel_err,gate,paper_rel_err,{aux_label},ok");
    } else {
        println!(
            "{:>8} {:>8} {:>8} {:>24} {:>24} {:>12} {:>10} {:>10} {:>10}  ok",
            "x", "delta", "n", "computed", "reference", "achieved", "gate", "paper", aux_label
        );
    }
    for r in &rows {
        let ok = r.achieved <= r.gate;
        all_ok &= ok;
        let aux = r
            .extra
            .map(|v| format!("{v:.2e}"))
            .unwrap_or_else(|| "-".into());
        if csv {
            println!(
                "{},{},{},{:.16e},{:.16e},{:.3e},{:.1e},{:.2e},{aux},{}",
                r.x, r.delta, r.n, r.computed, r.reference, r.achieved, r.gate, r.paper_err, ok
            );
        } else {
            println!(
                "{:>8} {:>8} {:>8} {:>24.16e} {:>24.16e} {:>12.3e} {:>10.1e} {:>10.2e} {:>10}  {}",
                r.x,
                r.delta,
                r.n,
                r.computed,
                r.reference,
                r.achieved,
                r.gate,
                r.paper_err,
                aux,
                if ok { "pass" } else { "FAIL" }
            );
        }
    }
    Ok(all_ok)
}
