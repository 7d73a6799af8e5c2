//! Numerical integration used to cross-check closed forms.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule: `panels` equal panels of `order` nodes each.
pub fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, order: usize, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let half = 0.5 * width;
        let mid = lo + half;
        let s: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * f(mid + half * xi)).sum();
        total += half * s;
    }
    total
}

/// Tanh–sinh (double exponential) quadrature on `[a, b]`; tolerates integrable
/// endpoint singularities and infinite endpoint derivatives.
pub fn integrate_tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let step = 1.0 / 64.0;
    let mut total = 0.0;
    let mut k: i64 = -(6.5 / step) as i64;
    let kmax = (6.5 / step) as i64;
    while k <= kmax {
        let t = k as f64 * step;
        let u = 0.5 * PI * t.sinh();
        let x = u.tanh();
        let cosh_u = u.cosh();
        let w = 0.5 * PI * t.cosh() / (cosh_u * cosh_u);
        // 1 - |x| computed without cancellation
        let gap = 1.0 / (u.abs().exp() * cosh_u);
        if gap > 0.0 && w > 0.0 {
            let xx = if x >= 0.0 { b - half * gap } else { a + half * gap };
            if xx > a && xx < b {
                total += w * f(xx);
            } else if x.abs() < 1.0 {
                total += w * f(mid + half * x);
            }
        }
        k += 1;
    }
    total * half * step
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m14: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(14)).sum();
        assert!((m14 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_sqrt_singularity() {
        let v = integrate_tanh_sinh(|x| 1.0 / x.sqrt(), 0.0, 1.0);
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        let v = integrate_tanh_sinh(|x| (1.0 - x * x).sqrt(), -1.0, 1.0);
        assert!((v - PI / 2.0).abs() < 1e-13, "{v}");
        let v = integrate_tanh_sinh(|x| x.exp(), 0.0, 1.0);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
    }
}
