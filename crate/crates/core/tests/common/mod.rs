#![allow(dead_code)]

use selfcont::VectorField;

/// Classical fourth-order Runge-Kutta from `x0` at `times[0]`, reporting the
/// state at every entry of `times`. Each interval is split into equal substeps
/// no longer than `h_max`.
pub fn rk4<F: VectorField + ?Sized>(f: &F, x0: &[f64], times: &[f64], h_max: f64) -> Vec<Vec<f64>> {
    let eval = |x: &[f64]| f.eval(x).expect("reference field defined along the orbit");
    let axpy = |x: &[f64], a: f64, k: &[f64]| -> Vec<f64> {
        x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
    };
    let mut out = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let n = (span / h_max).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            let k1 = eval(&x);
            let k2 = eval(&axpy(&x, h / 2.0, &k1));
            let k3 = eval(&axpy(&x, h / 2.0, &k2));
            let k4 = eval(&axpy(&x, h, &k3));
            for i in 0..x.len() {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        out.push(x.clone());
    }
    out
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}
