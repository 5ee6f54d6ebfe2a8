use nct::series::{pq_series, Params};

fn main() {
    // j_max column of the n=10.3, delta=20 reference table:
    // 254, 294, 310, 317, 321, 323
    let want = [254usize, 294, 310, 317, 321, 323];
    for (i, &x) in [5.0f64, 8.0, 11.0, 14.0, 17.0, 20.0].iter().enumerate() {
        let params = Params::new(x, 20.0, 10.3).unwrap();
        let (p, _) = pq_series(&params, 1e-16).unwrap();
        println!("x={x:4}: terms_used={} want={}", p.terms_used, want[i]);
    }
    // and the n=1000, delta=10 table: 23, 39, 60, 80, 97, 110
    let want3 = [23usize, 39, 60, 80, 97, 110];
    for (i, &x) in [1.0f64, 2.5, 5.0, 7.5, 10.0, 12.5].iter().enumerate() {
        let params = Params::new(x, 10.0, 1000.0).unwrap();
        let (p, _) = pq_series(&params, 1e-16).unwrap();
        println!("x={x:4}: terms_used={} want={}", p.terms_used, want3[i]);
    }
}
