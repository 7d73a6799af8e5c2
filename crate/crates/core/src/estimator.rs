//! The kernel density estimator `f(x) = (1/nh) sum_i K((x - X_i)/h)`, its
//! derivatives, and an exact piecewise-polynomial form for polynomial kernels.

use std::ops::Range;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::kernels::{KernelSpec, MAX_POLY_THETA};
use crate::poly::horner;

/// Observations sorted ascending. Duplicates are accepted and flagged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    points: Vec<f64>,
    has_duplicates: bool,
}

impl Sample {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return domain("sample must contain at least one observation");
        }
        if let Some(bad) = points.iter().find(|v| !v.is_finite()) {
            return domain(format!("non-finite observation {bad}"));
        }
        points.sort_by(f64::total_cmp);
        let has_duplicates = points.windows(2).any(|w| w[0] == w[1]);
        Ok(Self { points, has_duplicates })
    }

    /// Parse one number per line; blank lines and `#` comments are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v = line
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {}: '{}' is not a number", i + 1, line)))?;
            points.push(v);
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn has_duplicates(&self) -> bool {
        self.has_duplicates
    }

    /// All observations equal.
    pub fn is_degenerate(&self) -> bool {
        self.range() == 0.0
    }

    /// Gaps between consecutive order statistics.
    pub fn spacings(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Smallest spacing; `None` for a single observation.
    pub fn min_spacing(&self) -> Option<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance (divisor n).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.points.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.len() as f64
    }

    /// The sample `scale * X + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        Self::new(self.points.iter().map(|v| scale * v + shift).collect())
    }

    /// Indices of observations in the open interval `(lo, hi)`.
    pub fn indices_within(&self, lo: f64, hi: f64) -> Range<usize> {
        let a = self.points.partition_point(|&v| v <= lo);
        let b = self.points.partition_point(|&v| v < hi);
        a..b.max(a)
    }
}

/// A kernel density estimate: a sample, a kernel and a bandwidth.
#[derive(Debug, Clone, Copy)]
pub struct DensityEstimate<'a> {
    sample: &'a Sample,
    kernel: &'a KernelSpec,
    bandwidth: f64,
}

impl<'a> DensityEstimate<'a> {
    pub fn new(sample: &'a Sample, kernel: &'a KernelSpec, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return domain(format!("bandwidth must be positive, got {bandwidth}"));
        }
        Ok(Self {
            sample,
            kernel,
            bandwidth,
        })
    }

    pub fn sample(&self) -> &'a Sample {
        self.sample
    }

    pub fn kernel(&self) -> &'a KernelSpec {
        self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Interval outside which the estimate and its derivatives vanish
    /// (numerically, for the Gaussian).
    pub fn support(&self) -> (f64, f64) {
        let r = self.kernel.numerical_radius() * self.bandwidth;
        (self.sample.min() - r, self.sample.max() + r)
    }

    /// Derivative of the given order at `x`.
    pub fn evaluate(&self, x: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(self.eval(order, x))
    }

    /// `(1 / (n h^(1+order))) sum_i K^(order)((x - X_i) / h)` over the
    /// observations whose kernel reaches `x`.
    #[inline]
    pub fn eval(&self, order: u8, x: f64) -> f64 {
        let h = self.bandwidth;
        let r = self.kernel.numerical_radius() * h;
        let pts = self.sample.points();
        let window = self.sample.indices_within(x - r, x + r);
        let s: f64 = pts[window]
            .iter()
            .map(|&xi| self.kernel.eval_unchecked(order, (x - xi) / h))
            .sum();
        s / (pts.len() as f64 * h.powi(1 + order as i32))
    }

    /// Exact piecewise-polynomial form of the `order`-th derivative over the
    /// whole support `[X_(1) - h, X_(n) + h]`.
    pub fn to_piecewise_poly(&self, order: u8) -> Result<PiecewisePoly> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        let h = self.bandwidth;
        build_piecewise(self, order, self.sample.min() - h, self.sample.max() + h)
    }
}

/// One polynomial piece, stored in the local variable `s = (x - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Piece {
    pub center: f64,
    pub scale: f64,
    pub coeffs: Vec<f64>,
}

impl Piece {
    #[inline]
    pub fn local(&self, x: f64) -> f64 {
        (x - self.center) / self.scale
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, self.local(x))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

/// A piecewise polynomial on sorted breakpoints, zero outside them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePoly {
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
    degree: usize,
}

impl PiecewisePoly {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `(left, right)` of piece `i`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        if self.pieces.is_empty() || x < bp[0] || x > bp[bp.len() - 1] {
            return 0.0;
        }
        let i = bp.partition_point(|&b| b <= x).saturating_sub(1);
        self.pieces[i.min(self.pieces.len() - 1)].eval(x)
    }
}

const MAX_DEGREE: usize = 2 * MAX_POLY_THETA as usize + 1;
/// Highest degree for which moments are updated incrementally between pieces.
const SLIDING_MAX_DEGREE: usize = 6;
/// Incremental moments are recomputed from scratch this often.
const SLIDING_REFRESH: usize = 32;

fn pascal() -> &'static Vec<Vec<f64>> {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![vec![1.0]];
        for n in 1..=MAX_DEGREE {
            let prev = &t[n - 1];
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = prev[k - 1] + prev[k];
            }
            t.push(row);
        }
        t
    })
}

/// Sorted breakpoints: `lo`, `hi` and every knot `X_i +- h` strictly between,
/// with knots closer than `1e-12 * max(range, h)` merged.
pub(crate) fn breakpoints(sample: &Sample, h: f64, lo: f64, hi: f64) -> Vec<f64> {
    let pts = sample.points();
    let mut knots = Vec::with_capacity(2 * pts.len() + 2);
    knots.push(lo);
    knots.extend(pts.iter().map(|&x| x - h).filter(|&k| k > lo && k < hi));
    knots.extend(pts.iter().map(|&x| x + h).filter(|&k| k > lo && k < hi));
    knots.push(hi);
    knots.sort_by(f64::total_cmp);
    let tol = 1e-12 * sample.range().max(h);
    let mut merged: Vec<f64> = Vec::with_capacity(knots.len());
    for k in knots {
        match merged.last() {
            Some(&last) if k - last <= tol => {}
            _ => merged.push(k),
        }
    }
    if merged.len() >= 2 {
        let n = merged.len();
        if merged[n - 1] != hi {
            merged[n - 1] = hi;
        }
    }
    merged
}

/// Piecewise-polynomial form of the `order`-th derivative on `[lo, hi]`.
///
/// On each piece the active observations contribute `K^(order)(s + a_i)` with
/// `s = (x - mid)/h` and `a_i = (mid - X_i)/h`; expanding gives coefficients in
/// terms of the power moments `sum a_i^j`, which slide from piece to piece by
/// a binomial shift plus the entering and leaving observations.
pub(crate) fn build_piecewise(e: &DensityEstimate, order: u8, lo: f64, hi: f64) -> Result<PiecewisePoly> {
    let kernel = e.kernel();
    if kernel.polynomial_degree_theta().is_none() {
        return Err(Error::RepresentationUnavailable(kernel.name()));
    }
    let kc = kernel.poly_coefficients(order).expect("polynomial kernel");
    let d = kc.len() - 1;
    let h = e.bandwidth();
    let pts = e.sample().points();
    let n = pts.len();
    let norm = 1.0 / (n as f64 * h.powi(1 + order as i32));
    let binom = pascal();

    let bps = if hi > lo {
        breakpoints(e.sample(), h, lo, hi)
    } else {
        Vec::new()
    };
    let mut pieces = Vec::with_capacity(bps.len().saturating_sub(1));
    let mut moments = vec![0.0; d + 1];
    let mut center = f64::NAN;
    let (mut wa, mut wb) = (0usize, 0usize);
    let mut since_refresh = usize::MAX;

    for w in bps.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let mut na = wa;
        while na < n && pts[na] <= mid - h {
            na += 1;
        }
        let mut nb = wb.max(na);
        while nb < n && pts[nb] < mid + h {
            nb += 1;
        }
        if na >= nb {
            pieces.push(Piece {
                center: mid,
                scale: h,
                coeffs: vec![0.0; d + 1],
            });
            wa = na;
            wb = nb;
            since_refresh = usize::MAX;
            continue;
        }
        let delta = (mid - center) / h;
        let slide =
            d <= SLIDING_MAX_DEGREE && since_refresh < SLIDING_REFRESH && wa < wb && na < wb && delta.abs() <= 2.0;
        if slide {
            // binomial shift of the moments to the new center
            for j in (1..=d).rev() {
                let mut acc = 0.0;
                let mut dp = 1.0;
                for k in (0..=j).rev() {
                    acc += binom[j][k] * dp * moments[k];
                    dp *= delta;
                }
                moments[j] = acc;
            }
            for &xi in &pts[wa..na] {
                let a = (mid - xi) / h;
                let mut p = 1.0;
                for m in moments.iter_mut() {
                    *m -= p;
                    p *= a;
                }
            }
            for &xi in &pts[wb..nb] {
                let a = (mid - xi) / h;
                let mut p = 1.0;
                for m in moments.iter_mut() {
                    *m += p;
                    p *= a;
                }
            }
            // the zeroth moment is the active count
            moments[0] = (nb - na) as f64;
            since_refresh += 1;
        } else {
            moments.iter_mut().for_each(|m| *m = 0.0);
            for &xi in &pts[na..nb] {
                let a = (mid - xi) / h;
                let mut p = 1.0;
                for m in moments.iter_mut() {
                    *m += p;
                    p *= a;
                }
            }
            since_refresh = 0;
        }
        center = mid;
        wa = na;
        wb = nb;

        let mut coeffs = vec![0.0; d + 1];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in j..=d {
                if kc[k] != 0.0 {
                    acc += kc[k] * binom[k][j] * moments[k - j];
                }
            }
            *c = norm * acc;
        }
        pieces.push(Piece {
            center: mid,
            scale: h,
            coeffs,
        });
    }
    Ok(PiecewisePoly {
        breakpoints: bps,
        pieces,
        degree: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_gl, integrate_tanh_sinh};

    fn direct_sum(pts: &[f64], k: &KernelSpec, h: f64, order: u8, x: f64) -> f64 {
        // independent oracle: plain loop over every observation
        let mut s = 0.0;
        for &xi in pts {
            s += k.eval(order, (x - xi) / h).unwrap();
        }
        s / (pts.len() as f64 * h.powi(1 + order as i32))
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
        let s = Sample::new(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.points(), &[1.0, 2.0, 2.0, 3.0]);
        assert!(s.has_duplicates());
        assert_eq!(s.min_spacing(), Some(0.0));
        let t = Sample::parse_text("1.5\n\n# comment\n-2 \n").unwrap();
        assert_eq!(t.points(), &[-2.0, 1.5]);
        assert!(Sample::parse_text("1\nabc\n").is_err());
    }

    #[test]
    fn single_point_value() {
        let s = Sample::new(vec![0.0]).unwrap();
        for k in [KernelSpec::biweight(), KernelSpec::gaussian(0.5).unwrap()] {
            let e = DensityEstimate::new(&s, &k, 0.3).unwrap();
            assert!((e.evaluate(0.0, 0).unwrap() - k.value(0.0) / 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn evaluate_examples() {
        let s = Sample::new(vec![-1.0, 0.0, 1.0]).unwrap();
        let k = KernelSpec::biweight();
        let e = DensityEstimate::new(&s, &k, 0.4).unwrap();
        assert_eq!(e.evaluate(5.0, 0).unwrap(), 0.0);
        assert!(DensityEstimate::new(&s, &k, 0.0).is_err());
        assert!(DensityEstimate::new(&s, &k, -1.0).is_err());

        let s = Sample::new(vec![0.0, 1.0]).unwrap();
        let k = KernelSpec::epanechnikov();
        let e = DensityEstimate::new(&s, &k, 0.75).unwrap();
        let oracle = direct_sum(s.points(), &k, 0.75, 0, 0.5);
        let closed = 2.0 * 0.75 * (1.0 - (0.5f64 / 0.75).powi(2)) / (2.0 * 0.75);
        assert!((oracle - closed).abs() < 1e-15);
        assert!((e.evaluate(0.5, 0).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn integrates_to_one() {
        let s = Sample::new(vec![-0.3, 0.1, 0.15, 1.2, 2.0]).unwrap();
        for k in [
            KernelSpec::epanechnikov(),
            KernelSpec::triweight(),
            KernelSpec::multiweight(0.6).unwrap(),
        ] {
            let h = 0.45;
            let e = DensityEstimate::new(&s, &k, h).unwrap();
            let (a, b) = e.support();
            let knots = breakpoints(&s, h, a, b);
            let v: f64 = knots
                .windows(2)
                .map(|w| integrate_tanh_sinh(|x| e.eval(0, x), w[0], w[1]))
                .sum();
            assert!((v - 1.0).abs() < 1e-8, "{k}: {v}");
        }
        let g = KernelSpec::gaussian(0.7).unwrap();
        let e = DensityEstimate::new(&s, &g, 0.3).unwrap();
        let v = integrate_gl(|x| e.eval(0, x), -3.0, 4.5, 32, 200);
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn piecewise_matches_direct_sum() {
        let s = Sample::new(vec![-0.81, -0.2, 0.05, 0.7, 1.33]).unwrap();
        for theta in 1..=4 {
            let k = KernelSpec::multiweight(theta as f64).unwrap();
            for &h in &[0.13, 0.5, 1.7] {
                let e = DensityEstimate::new(&s, &k, h).unwrap();
                for order in 0..3u8 {
                    let pp = e.to_piecewise_poly(order).unwrap();
                    assert_eq!(pp.degree(), 2 * theta - order as usize);
                    let (a, b) = e.support();
                    for i in 0..=100 {
                        let x = a + (b - a) * (i as f64 + 0.37) / 101.0;
                        let want = direct_sum(s.points(), &k, h, order, x);
                        let got = pp.evaluate(x);
                        let scale = 1.0 / h.powi(1 + order as i32);
                        assert!(
                            (got - want).abs() <= 1e-9 * scale,
                            "theta={theta} h={h} order={order} x={x}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn piecewise_unavailable_for_gaussian_and_fractional() {
        let s = Sample::new(vec![0.0, 1.0]).unwrap();
        let g = KernelSpec::gaussian(1.0).unwrap();
        let f = KernelSpec::multiweight(2.5).unwrap();
        for k in [&g, &f] {
            let e = DensityEstimate::new(&s, k, 1.0).unwrap();
            assert!(matches!(
                e.to_piecewise_poly(1),
                Err(Error::RepresentationUnavailable(_))
            ));
        }
    }

    #[test]
    fn symmetric_knots_are_merged() {
        let s = Sample::new(vec![-1.0, 0.0, 1.0]).unwrap();
        let k = KernelSpec::biweight();
        let e = DensityEstimate::new(&s, &k, 1.0).unwrap();
        let pp = e.to_piecewise_poly(0).unwrap();
        // knots -2, -1, 0, 1, 2 after merging coincident ones
        assert_eq!(pp.breakpoints(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!(pp.pieces().iter().all(|p| !p.is_zero()));
    }

    #[test]
    fn single_point_epanechnikov_derivative_is_linear() {
        let s = Sample::new(vec![0.0]).unwrap();
        let k = KernelSpec::epanechnikov();
        let e = DensityEstimate::new(&s, &k, 1.0).unwrap();
        let pp = e.to_piecewise_poly(1).unwrap();
        assert_eq!(pp.degree(), 1);
        assert_eq!(pp.pieces().len(), 1);
        assert!((pp.evaluate(0.5) + 0.75).abs() < 1e-15);
    }

    #[test]
    fn two_point_epanechnikov_derivative_sign_changes() {
        let s = Sample::new(vec![0.0, 1.0]).unwrap();
        let k = KernelSpec::epanechnikov();
        let e = DensityEstimate::new(&s, &k, 0.75).unwrap();
        let pp = e.to_piecewise_poly(1).unwrap();
        // dense-grid oracle on the direct sum, inside the data range
        let mut signs = Vec::new();
        for i in 0..=100_000 {
            let x = i as f64 / 100_000.0;
            let v = direct_sum(s.points(), &k, 0.75, 1, x);
            if v != 0.0 {
                signs.push(v > 0.0);
            }
        }
        let oracle = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(oracle, 3);
        let mut pp_signs = Vec::new();
        for i in 0..=100_000 {
            let v = pp.evaluate(i as f64 / 100_000.0);
            if v != 0.0 {
                pp_signs.push(v > 0.0);
            }
        }
        assert_eq!(pp_signs.windows(2).filter(|w| w[0] != w[1]).count(), 3);
    }
}
