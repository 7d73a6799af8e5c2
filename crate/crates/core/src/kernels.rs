//! Kernels: the multiweight family `K(x) = C (1 - x^2)^theta` on `[-1, 1]` and
//! the Gaussian density with an explicit scale.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, gamma::ln_gamma};

use crate::error::{domain, Error, Result};
use crate::quadrature::integrate_tanh_sinh;
use crate::rng::RandomState;

/// Tolerance of the inverse-CDF root finder used by [`KernelSpec::sample`].
pub const SAMPLE_TOLERANCE: f64 = 1e-12;

/// Largest integer exponent for which the polynomial form is tabulated.
pub const MAX_POLY_THETA: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    Multiweight { theta: f64 },
    Gaussian { scale: f64 },
}

/// A kernel with its cached normalizing constant.
///
/// Values are immutable after construction and can be shared freely across
/// threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct KernelSpec {
    family: KernelFamily,
    normalizer: f64,
    int_theta: Option<u32>,
    /// Power-basis coefficients (in `u`) of `K`, `K'` and `K''` for integer theta.
    poly: Option<[Vec<f64>; 3]>,
}

/// Normalizing constant `C` with `C * integral (1 - x^2)^theta dx = 1` over `[-1, 1]`.
///
/// Closed form `Gamma(theta + 3/2) / (sqrt(pi) Gamma(theta + 1))`; debug builds
/// cross-check it against tanh–sinh quadrature.
pub fn normalizer(theta: f64) -> Result<f64> {
    if !theta.is_finite() || theta < 0.0 {
        return domain(format!("multiweight exponent must be >= 0, got {theta}"));
    }
    let c = match integer_exponent(theta) {
        Some(k) => (1..=k).fold(0.5, |acc, j| acc * (2 * j + 1) as f64 / (2 * j) as f64),
        None => (ln_gamma(theta + 1.5) - ln_gamma(theta + 1.0)).exp() / PI.sqrt(),
    };
    if cfg!(debug_assertions) {
        let area = integrate_tanh_sinh(|x| (1.0 - x * x).max(0.0).powf(theta), -1.0, 1.0);
        debug_assert!(
            (c * area - 1.0).abs() < 1e-9,
            "normalizer mismatch for theta={theta}: {c} * {area}"
        );
    }
    Ok(c)
}

fn integer_exponent(theta: f64) -> Option<u32> {
    if theta.fract() == 0.0 && (0.0..=MAX_POLY_THETA as f64).contains(&theta) {
        Some(theta as u32)
    } else {
        None
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn differentiate(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &v)| k as f64 * v).collect()
}

impl KernelSpec {
    pub fn multiweight(theta: f64) -> Result<Self> {
        let normalizer = normalizer(theta)?;
        let int_theta = integer_exponent(theta);
        let poly = int_theta.filter(|&k| k >= 1).map(|k| {
            let mut k0 = vec![0.0; 2 * k as usize + 1];
            for j in 0..=k {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                k0[2 * j as usize] = normalizer * sign * binomial(k, j);
            }
            let k1 = differentiate(&k0);
            let k2 = differentiate(&k1);
            [k0, k1, k2]
        });
        Ok(Self {
            family: KernelFamily::Multiweight { theta },
            normalizer,
            int_theta,
            poly,
        })
    }

    pub fn epanechnikov() -> Self {
        Self::multiweight(1.0).expect("theta = 1 is valid")
    }

    pub fn biweight() -> Self {
        Self::multiweight(2.0).expect("theta = 2 is valid")
    }

    pub fn triweight() -> Self {
        Self::multiweight(3.0).expect("theta = 3 is valid")
    }

    pub fn gaussian(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return domain(format!("gaussian scale must be positive, got {scale}"));
        }
        Ok(Self {
            family: KernelFamily::Gaussian { scale },
            normalizer: 1.0 / (scale * (2.0 * PI).sqrt()),
            int_theta: None,
            poly: None,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Multiweight exponent, `None` for the Gaussian.
    pub fn theta(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Multiweight { theta } => Some(theta),
            KernelFamily::Gaussian { .. } => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, KernelFamily::Gaussian { .. })
    }

    pub fn gaussian_scale(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Gaussian { scale } => Some(scale),
            KernelFamily::Multiweight { .. } => None,
        }
    }

    /// Integer exponent `theta >= 1` when the kernel is a polynomial on its support.
    pub fn polynomial_degree_theta(&self) -> Option<u32> {
        self.int_theta.filter(|&k| k >= 1)
    }

    /// Power-basis coefficients of `K^(order)(u)` on `[-1, 1]`, integer theta only.
    pub fn poly_coefficients(&self, order: u8) -> Option<&[f64]> {
        self.poly.as_ref().map(|p| p[order as usize].as_slice())
    }

    /// Half-width of the support, `None` when unbounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Multiweight { .. } => Some(1.0),
            KernelFamily::Gaussian { .. } => None,
        }
    }

    /// Radius outside which the kernel and its derivatives are exactly zero in
    /// double precision (the Gaussian underflows beyond ~38.6 scale units).
    pub fn numerical_radius(&self) -> f64 {
        match self.family {
            KernelFamily::Multiweight { .. } => 1.0,
            KernelFamily::Gaussian { scale } => 40.0 * scale,
        }
    }

    /// Variance of the kernel viewed as a density.
    pub fn variance(&self) -> f64 {
        match self.family {
            KernelFamily::Multiweight { theta } => 1.0 / (2.0 * theta + 3.0),
            KernelFamily::Gaussian { scale } => scale * scale,
        }
    }

    #[inline]
    fn pow_w(&self, w: f64, e: f64) -> f64 {
        match self.int_theta {
            Some(_) => w.powi(e as i32),
            None => w.powf(e),
        }
    }

    /// `K(x)`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Multiweight { theta } => {
                let w = 1.0 - x * x;
                if w <= 0.0 {
                    0.0
                } else if theta == 0.0 {
                    self.normalizer
                } else {
                    self.normalizer * self.pow_w(w, theta)
                }
            }
            KernelFamily::Gaussian { scale } => {
                let z = x / scale;
                self.normalizer * (-0.5 * z * z).exp()
            }
        }
    }

    /// `K'(x)`; at `x = +-1` the one-sided interior limit when finite, else 0.
    #[inline]
    pub fn deriv1(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Multiweight { theta } => {
                let w = 1.0 - x * x;
                if theta == 0.0 || w < 0.0 {
                    0.0
                } else if w == 0.0 {
                    if theta == 1.0 {
                        -2.0 * self.normalizer * x
                    } else {
                        0.0
                    }
                } else {
                    -2.0 * theta * self.normalizer * x * self.pow_w(w, theta - 1.0)
                }
            }
            KernelFamily::Gaussian { scale } => {
                let z = x / scale;
                -z / scale * self.normalizer * (-0.5 * z * z).exp()
            }
        }
    }

    /// `K''(x)`; same boundary convention as [`KernelSpec::deriv1`].
    #[inline]
    pub fn deriv2(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Multiweight { theta } => {
                let w = 1.0 - x * x;
                let c = self.normalizer;
                if theta == 0.0 || w < 0.0 {
                    0.0
                } else if w == 0.0 {
                    if theta == 1.0 {
                        -2.0 * c
                    } else if theta == 2.0 {
                        8.0 * c
                    } else {
                        0.0
                    }
                } else if theta == 1.0 {
                    -2.0 * c
                } else {
                    -2.0 * theta * c * self.pow_w(w, theta - 2.0) * (1.0 - (2.0 * theta - 1.0) * x * x)
                }
            }
            KernelFamily::Gaussian { scale } => {
                let z = x / scale;
                (z * z - 1.0) / (scale * scale) * self.normalizer * (-0.5 * z * z).exp()
            }
        }
    }

    /// Derivative of the given order (0, 1 or 2) at `x`.
    pub fn eval(&self, order: u8, x: f64) -> Result<f64> {
        match order {
            0 => Ok(self.value(x)),
            1 => Ok(self.deriv1(x)),
            2 => Ok(self.deriv2(x)),
            _ => Err(Error::UnsupportedOrder(order)),
        }
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, order: u8, x: f64) -> f64 {
        match order {
            0 => self.value(x),
            1 => self.deriv1(x),
            _ => self.deriv2(x),
        }
    }

    /// `(K'(x), K''(x))` sharing one power or exponential.
    #[inline]
    pub(crate) fn deriv12(&self, x: f64) -> (f64, f64) {
        match self.family {
            KernelFamily::Multiweight { theta } => {
                let w = 1.0 - x * x;
                if theta == 0.0 || w <= 0.0 || theta == 1.0 {
                    return (self.deriv1(x), self.deriv2(x));
                }
                let c = -2.0 * theta * self.normalizer;
                let p = self.pow_w(w, theta - 2.0);
                (c * x * p * w, c * p * (1.0 - (2.0 * theta - 1.0) * x * x))
            }
            KernelFamily::Gaussian { scale } => {
                let z = x / scale;
                let g = self.normalizer * (-0.5 * z * z).exp();
                (-z / scale * g, (z * z - 1.0) / (scale * scale) * g)
            }
        }
    }

    /// Distribution function of the kernel.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Multiweight { theta } => {
                if x <= -1.0 {
                    return 0.0;
                }
                if x >= 1.0 {
                    return 1.0;
                }
                if theta == 0.0 {
                    return 0.5 * (x + 1.0);
                }
                match self.int_theta {
                    Some(k) => {
                        // 1/2 + C * sum_j binom(k, j) (-1)^j x^(2j+1) / (2j+1)
                        let x2 = x * x;
                        let mut acc = 0.0;
                        for j in (0..=k).rev() {
                            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                            acc = acc * x2 + sign * binomial(k, j) / (2 * j + 1) as f64;
                        }
                        0.5 + self.normalizer * x * acc
                    }
                    None => {
                        let half = 0.5 * beta_reg(0.5, theta + 1.0, x * x);
                        if x >= 0.0 {
                            0.5 + half
                        } else {
                            0.5 - half
                        }
                    }
                }
            }
            KernelFamily::Gaussian { scale } => 0.5 * libm::erfc(-x / (scale * std::f64::consts::SQRT_2)),
        }
    }

    /// Draw one variate with density `K`.
    ///
    /// Multiweight kernels invert the CDF with a safeguarded Newton iteration
    /// bracketed in `[-1, 1]`, stopping at [`SAMPLE_TOLERANCE`].
    pub fn sample(&self, rng: &mut RandomState) -> f64 {
        match self.family {
            KernelFamily::Gaussian { scale } => {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            }
            KernelFamily::Multiweight { .. } => {
                let u = rng.uniform_open();
                self.inverse_cdf(u)
            }
        }
    }

    /// Quantile function of a multiweight kernel.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        debug_assert!(!self.is_gaussian());
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        let mut x = (u - 0.5) / self.normalizer;
        if !(x > lo && x < hi) {
            x = 0.0;
        }
        for _ in 0..200 {
            let g = self.cdf(x) - u;
            if g == 0.0 {
                return x;
            }
            if g < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let pdf = self.value(x);
            let mut next = if pdf > 0.0 { x - g / pdf } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= SAMPLE_TOLERANCE || hi - lo <= SAMPLE_TOLERANCE {
                return next;
            }
            x = next;
        }
        x
    }

    /// Short name used in file names and on the command line.
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            KernelFamily::Multiweight { theta } if theta == 1.0 => write!(f, "epan"),
            KernelFamily::Multiweight { theta } if theta == 2.0 => write!(f, "biweight"),
            KernelFamily::Multiweight { theta } if theta == 3.0 => write!(f, "triweight"),
            KernelFamily::Multiweight { theta } => write!(f, "multiweight:{theta}"),
            KernelFamily::Gaussian { scale } => write!(f, "gaussian:{scale}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let parse_num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("invalid kernel parameter '{v}'")))
        };
        match s.as_str() {
            "epan" | "epanechnikov" | "uniweight" => Ok(Self::epanechnikov()),
            "biweight" => Ok(Self::biweight()),
            "triweight" => Ok(Self::triweight()),
            "gaussian" | "normal" => Self::gaussian(1.0),
            other => {
                if let Some(v) = other.strip_prefix("multiweight:") {
                    Self::multiweight(parse_num(v)?)
                } else if let Some(v) = other.strip_prefix("gaussian:") {
                    Self::gaussian(parse_num(v)?)
                } else {
                    Err(Error::Parse(format!("unknown kernel '{other}'")))
                }
            }
        }
    }
}

impl TryFrom<String> for KernelSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KernelSpec> for String {
    fn from(k: KernelSpec) -> String {
        k.to_string()
    }
}

/// Whether the multiweight kernel with exponent `theta` has `K'' < 0` somewhere
/// in `(1/2, 1)` on top of the structural requirements (symmetric, strictly
/// unimodal density supported on `[-1, 1]`, continuous on the line), which every
/// multiweight kernel with `theta > 0` meets. Kernels passing this check have a
/// mode count that is nonmonotone in the bandwidth for almost every sample of
/// size two or more.
///
/// The curvature clause is decided numerically: `K''` is scanned on a grid over
/// the open interval and the smallest value is polished by golden-section search.
pub fn nonmonotonicity_condition(theta: f64) -> bool {
    let Ok(k) = KernelSpec::multiweight(theta) else {
        return false;
    };
    if theta <= 0.0 {
        return false;
    }
    const CELLS: usize = 4096;
    let (a, b) = (0.5, 1.0);
    let step = (b - a) / CELLS as f64;
    let mut best = (f64::INFINITY, a);
    for i in 0..=CELLS {
        let x = (a + i as f64 * step).clamp(a + 1e-12, b - 1e-12);
        let v = k.deriv2(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    if best.0 < 0.0 {
        return true;
    }
    let lo = (best.1 - step).max(a + 1e-15);
    let hi = (best.1 + step).min(b - 1e-15);
    let (x, v) = golden_min(|x| k.deriv2(x), lo, hi, 1e-15);
    v < 0.0 && x > a && x < b
}

/// `kappa(x) = K(xi + x) + K(xi - x) + K(x)` and its curvature terms at the
/// points probed by [`three_point_condition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePointCurvature {
    /// `kappa''(0)`
    pub curvature_at_zero: f64,
    /// `kappa'(eta)`
    pub slope_at_eta: f64,
    /// `kappa''(eta)`
    pub curvature_at_eta: f64,
}

pub fn three_point_curvature(theta: f64, xi: f64, eta: f64) -> Result<ThreePointCurvature> {
    let k = KernelSpec::multiweight(theta)?;
    let d1 = |x: f64| k.deriv1(x);
    let d2 = |x: f64| k.deriv2(x);
    Ok(ThreePointCurvature {
        curvature_at_zero: d2(xi) + d2(xi) + d2(0.0),
        slope_at_eta: d1(xi + eta) - d1(xi - eta) + d1(eta),
        curvature_at_eta: d2(xi + eta) + d2(xi - eta) + d2(eta),
    })
}

/// Tolerance under which `kappa'(eta)` counts as zero.
pub const THREE_POINT_SLOPE_TOLERANCE: f64 = 1e-9;

/// Whether `kappa''(0) > 0`, `kappa'(eta) = 0` and `kappa''(eta) > 0` for the
/// multiweight kernel with exponent `theta`. This configuration lets three
/// data points produce a nonmonotone mode count with positive probability even
/// when two-point samples cannot.
pub fn three_point_condition(theta: f64, xi: f64, eta: f64) -> bool {
    if !(theta > 0.0 && xi > 0.0 && xi < 1.0 && eta > 0.0 && eta < 1.0) {
        return false;
    }
    match three_point_curvature(theta, xi, eta) {
        Ok(c) => {
            c.curvature_at_zero > 0.0 && c.slope_at_eta.abs() <= THREE_POINT_SLOPE_TOLERANCE && c.curvature_at_eta > 0.0
        }
        Err(_) => false,
    }
}

/// Search `(xi, eta)` pairs satisfying [`three_point_condition`].
///
/// `xi` runs over `resolution` interior grid points; for each, roots of
/// `kappa'` on `(0, 1)` are bracketed on the same grid and bisected.
pub fn find_three_point_witness(theta: f64, resolution: usize) -> Option<(f64, f64)> {
    let k = KernelSpec::multiweight(theta).ok()?;
    let n = resolution.max(8);
    for i in 1..n {
        let xi = i as f64 / n as f64;
        let slope = |x: f64| k.deriv1(xi + x) - k.deriv1(xi - x) + k.deriv1(x);
        let mut prev = (1.0 / n as f64, slope(1.0 / n as f64));
        for j in 2..n {
            let x = j as f64 / n as f64;
            let v = slope(x);
            if prev.1 == 0.0 || prev.1.signum() != v.signum() {
                let (mut lo, mut hi) = (prev.0, x);
                if prev.1 != 0.0 {
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if slope(mid).signum() == prev.1.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                }
                let eta = if prev.1 == 0.0 { prev.0 } else { 0.5 * (lo + hi) };
                if three_point_condition(theta, xi, eta) {
                    return Some((xi, eta));
                }
            }
            prev = (x, v);
        }
    }
    None
}

pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_gl;

    #[test]
    fn normalizer_closed_values() {
        assert_eq!(normalizer(0.0).unwrap(), 0.5);
        assert_eq!(normalizer(1.0).unwrap(), 0.75);
        assert_eq!(normalizer(2.0).unwrap(), 0.9375);
        assert_eq!(normalizer(3.0).unwrap(), 1.09375);
        assert!(normalizer(-0.5).is_err());
    }

    #[test]
    fn normalizer_quadrature_oracle() {
        // Independent route: integrate (1-x^2)^theta after x = sin(phi).
        for &theta in &[0.025, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 7.25, 12.0] {
            let area = integrate_gl(|p: f64| p.cos().powf(2.0 * theta + 1.0), -PI / 2.0, PI / 2.0, 64, 8);
            let c = normalizer(theta).unwrap();
            assert!((c * area - 1.0).abs() < 1e-10, "theta={theta}: {}", c * area);
        }
    }

    #[test]
    fn closed_form_examples() {
        let bi = KernelSpec::biweight();
        assert_eq!(bi.eval(0, 0.0).unwrap(), 0.9375);
        assert!((bi.eval(2, 0.5).unwrap() + 0.9375).abs() < 1e-15);
        assert_eq!(KernelSpec::epanechnikov().eval(0, 1.2).unwrap(), 0.0);
        let g = KernelSpec::gaussian(1.0 / 3.0).unwrap();
        assert!((g.eval(0, 0.0).unwrap() - 1.196_826_841_204_298_5).abs() < 1e-12);
        assert_eq!(bi.eval(3, 0.0), Err(Error::UnsupportedOrder(3)));
    }

    #[test]
    fn boundary_convention() {
        let e = KernelSpec::epanechnikov();
        assert_eq!(e.deriv1(1.0), -1.5);
        assert_eq!(e.deriv1(-1.0), 1.5);
        assert_eq!(e.deriv1(1.0 + 1e-12), 0.0);
        assert_eq!(e.deriv2(1.0), -1.5);
        let b = KernelSpec::biweight();
        assert_eq!(b.deriv1(1.0), 0.0);
        assert_eq!(b.deriv2(1.0), 7.5);
        let half = KernelSpec::multiweight(0.5).unwrap();
        assert_eq!(half.deriv1(1.0), 0.0);
        assert_eq!(half.value(1.0), 0.0);
    }

    #[test]
    fn polynomial_coefficients_match_closed_form() {
        for theta in 1..=6u32 {
            let k = KernelSpec::multiweight(theta as f64).unwrap();
            for order in 0..3u8 {
                let c = k.poly_coefficients(order).unwrap();
                for i in 0..41 {
                    let x = -0.99 + i as f64 * 0.0495;
                    let p = c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
                    let direct = k.eval(order, x).unwrap();
                    assert!((p - direct).abs() < 1e-11 * (1.0 + direct.abs()));
                }
            }
        }
    }

    #[test]
    fn cdf_quadrature_oracle() {
        for k in [
            KernelSpec::epanechnikov(),
            KernelSpec::triweight(),
            KernelSpec::multiweight(2.5).unwrap(),
            KernelSpec::multiweight(0.3).unwrap(),
        ] {
            for &x in &[-0.9, -0.3, 0.0, 0.41, 0.97] {
                let q = integrate_tanh_sinh(|t| k.value(t), -1.0, x);
                assert!((k.cdf(x) - q).abs() < 1e-10, "{k} at {x}");
            }
        }
        let g = KernelSpec::gaussian(2.0).unwrap();
        assert!((g.cdf(2.0) - 0.841_344_746_068_542_9).abs() < 1e-12, "{}", g.cdf(2.0));
    }

    #[test]
    fn inverse_cdf_roundtrip() {
        for k in [KernelSpec::biweight(), KernelSpec::multiweight(0.7).unwrap()] {
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let x = k.inverse_cdf(u);
                assert!((k.cdf(x) - u).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let k = KernelSpec::biweight();
        let mut a = RandomState::new(9);
        let mut b = RandomState::new(9);
        let xa: Vec<f64> = (0..50).map(|_| k.sample(&mut a)).collect();
        let xb: Vec<f64> = (0..50).map(|_| k.sample(&mut b)).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn nonmonotonicity_condition_examples() {
        assert!(nonmonotonicity_condition(1.0));
        assert!(nonmonotonicity_condition(2.0));
        assert!(!nonmonotonicity_condition(3.0));
        assert!(!nonmonotonicity_condition(2.5));
        assert!(nonmonotonicity_condition(2.499));
        assert!(!nonmonotonicity_condition(0.0));
    }

    #[test]
    fn three_point_triweight() {
        let c = three_point_curvature(3.0, 0.9, 0.45).unwrap();
        assert_eq!(c.slope_at_eta, 0.0);
        // 2 K''(0.9) + K''(0) with K''(x) = -(105/16)(1-x^2)(1-5x^2)
        let closed = -2.0 * 105.0 / 16.0 * 0.19 * (1.0 - 4.05) - 105.0 / 16.0;
        assert!((c.curvature_at_zero - closed).abs() < 1e-12);
        assert!((c.curvature_at_zero - 1.043).abs() < 1e-3);
        assert!(three_point_condition(3.0, 0.9, 0.45));
        assert!(!three_point_condition(3.0, 0.9, 0.3));
    }

    #[test]
    fn witness_search_finds_triweight_pair() {
        let (xi, eta) = find_three_point_witness(3.0, 200).unwrap();
        assert!(three_point_condition(3.0, xi, eta));
        assert!(find_three_point_witness(4.0, 100).is_some());
    }

    #[test]
    fn parse_and_display() {
        for s in ["epan", "biweight", "triweight", "multiweight:2.5", "gaussian:0.5"] {
            let k: KernelSpec = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert_eq!("multiweight:1".parse::<KernelSpec>().unwrap().to_string(), "epan");
        assert!("cosine".parse::<KernelSpec>().is_err());
        assert!("gaussian:-1".parse::<KernelSpec>().is_err());
    }
}
