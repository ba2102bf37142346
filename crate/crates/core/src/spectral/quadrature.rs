/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integral of samples at arbitrary increasing abscissae.
///
/// Composite Simpson on pairs of equal-width panels, trapezoid for any
/// leftover panel or where neighbouring spacings differ.
pub fn integrate_samples(t: &[f64], f: &[f64]) -> f64 {
    assert_eq!(t.len(), f.len());
    let mut total = 0.0;
    let mut i = 0;
    while i + 1 < t.len() {
        if i + 2 < t.len() {
            let h1 = t[i + 1] - t[i];
            let h2 = t[i + 2] - t[i + 1];
            if (h1 - h2).abs() <= 1e-9 * h1.abs().max(h2.abs()) {
                total += (h1 + h2) / 6.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
                i += 2;
                continue;
            }
        }
        total += 0.5 * (t[i + 1] - t[i]) * (f[i] + f[i + 1]);
        i += 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is the exactness limit for 8 nodes
        let val: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((val - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let f: Vec<f64> = t.iter().map(|t| t * t * t).collect();
        assert!((integrate_samples(&t, &f) - 0.25).abs() < 1e-14);
    }
}
