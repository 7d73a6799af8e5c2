//! Densities that experiments draw samples from.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{domain, Error, Result};
use crate::estimator::Sample;
use crate::kernels::KernelSpec;
use crate::rng::RandomState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SamplingDensity {
    /// Beta(a, b) on `[0, 1]`.
    Beta { a: f64, b: f64 },
    /// `center + scale * E` where `E` has the Epanechnikov density on `[-1, 1]`.
    Epanechnikov { center: f64, scale: f64 },
    /// Weighted components. A sample of size `n` takes a fixed number of
    /// points from each component (largest-remainder rounding of `w * n`).
    Mixture(Vec<(f64, SamplingDensity)>),
}

impl SamplingDensity {
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return domain(format!("beta parameters must be positive, got ({a}, {b})"));
        }
        Ok(SamplingDensity::Beta { a, b })
    }

    pub fn epanechnikov(center: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && center.is_finite()) {
            return domain(format!("invalid epanechnikov density ({center}, {scale})"));
        }
        Ok(SamplingDensity::Epanechnikov { center, scale })
    }

    pub fn mixture(components: Vec<(f64, SamplingDensity)>) -> Result<Self> {
        if components.is_empty() || components.iter().any(|(w, _)| !(*w > 0.0 && w.is_finite())) {
            return domain("mixture needs at least one component with positive weight");
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        Ok(SamplingDensity::Mixture(
            components.into_iter().map(|(w, d)| (w / total, d)).collect(),
        ))
    }

    /// Two equal Epanechnikov clusters of unit scale `separation` apart.
    pub fn two_clusters(separation: f64) -> Result<Self> {
        Self::mixture(vec![
            (0.5, Self::epanechnikov(0.0, 1.0)?),
            (0.5, Self::epanechnikov(separation, 1.0)?),
        ])
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            SamplingDensity::Beta { a, b } => {
                if x <= 0.0 || x >= 1.0 {
                    return 0.0;
                }
                ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(*a, *b)).exp()
            }
            SamplingDensity::Epanechnikov { center, scale } => {
                KernelSpec::epanechnikov().value((x - center) / scale) / scale
            }
            SamplingDensity::Mixture(c) => c.iter().map(|(w, d)| w * d.pdf(x)).sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            SamplingDensity::Beta { a, b } => a / (a + b),
            SamplingDensity::Epanechnikov { center, .. } => *center,
            SamplingDensity::Mixture(c) => c.iter().map(|(w, d)| w * d.mean()).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            SamplingDensity::Beta { a, b } => a * b / ((a + b) * (a + b) * (a + b + 1.0)),
            SamplingDensity::Epanechnikov { scale, .. } => scale * scale / 5.0,
            SamplingDensity::Mixture(c) => {
                let m = self.mean();
                c.iter().map(|(w, d)| w * (d.variance() + (d.mean() - m).powi(2))).sum()
            }
        }
    }

    /// One draw (mixtures pick a component at random).
    pub fn draw(&self, rng: &mut RandomState) -> f64 {
        match self {
            SamplingDensity::Beta { a, b } => {
                let x: f64 = Gamma::new(*a, 1.0).expect("validated").sample(rng);
                let y: f64 = Gamma::new(*b, 1.0).expect("validated").sample(rng);
                x / (x + y)
            }
            SamplingDensity::Epanechnikov { center, scale } => center + scale * KernelSpec::epanechnikov().sample(rng),
            SamplingDensity::Mixture(c) => {
                let u = rng.uniform_open();
                let mut acc = 0.0;
                for (w, d) in c {
                    acc += w;
                    if u < acc {
                        return d.draw(rng);
                    }
                }
                c.last().expect("nonempty").1.draw(rng)
            }
        }
    }

    /// A sample of size `n`.
    pub fn sample(&self, n: usize, rng: &mut RandomState) -> Result<Sample> {
        if n == 0 {
            return domain("sample size must be positive");
        }
        let points = match self {
            SamplingDensity::Mixture(c) => {
                let sizes = allocate(c.iter().map(|(w, _)| *w), n);
                let mut pts = Vec::with_capacity(n);
                for ((_, d), &m) in c.iter().zip(&sizes) {
                    for _ in 0..m {
                        pts.push(d.draw(rng));
                    }
                }
                pts
            }
            _ => (0..n).map(|_| self.draw(rng)).collect(),
        };
        Sample::new(points)
    }
}

/// Largest-remainder split of `n` by weights summing to one.
fn allocate(weights: impl Iterator<Item = f64>, n: usize) -> Vec<usize> {
    let w: Vec<f64> = weights.collect();
    let mut sizes: Vec<usize> = w.iter().map(|w| (w * n as f64).floor() as usize).collect();
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = w[i] * n as f64 - sizes[i] as f64;
        let rj = w[j] * n as f64 - sizes[j] as f64;
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for i in order {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

impl fmt::Display for SamplingDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingDensity::Beta { a, b } => write!(f, "beta:{a}:{b}"),
            SamplingDensity::Epanechnikov { center, scale } => write!(f, "epan:{center}:{scale}"),
            SamplingDensity::Mixture(c) => {
                for (i, (w, d)) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{w}*{d}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for SamplingDensity {
    type Err = Error;

    /// `beta:<a>:<b>`, `epan:<center>:<scale>`, or components
    /// `<w>*<density>` joined by `+`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unknown density '{s}'"));
        if s.contains('+') || s.contains('*') {
            let mut comps = Vec::new();
            for part in s.split('+') {
                let (w, d) = part.split_once('*').ok_or_else(bad)?;
                comps.push((w.trim().parse::<f64>().map_err(|_| bad())?, d.parse()?));
            }
            return Self::mixture(comps);
        }
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> { parts.get(i).ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad()) };
        match (parts[0].to_ascii_lowercase().as_str(), parts.len()) {
            ("beta", 3) => Self::beta(num(1)?, num(2)?),
            ("epan" | "epanechnikov", 1) => Self::epanechnikov(0.0, 1.0),
            ("epan" | "epanechnikov", 3) => Self::epanechnikov(num(1)?, num(2)?),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for SamplingDensity {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SamplingDensity> for String {
    fn from(d: SamplingDensity) -> String {
        d.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_tanh_sinh;

    #[test]
    fn beta_moments_match_quadrature() {
        let d = SamplingDensity::beta(3.0, 4.0).unwrap();
        let area = integrate_tanh_sinh(|x| d.pdf(x), 0.0, 1.0);
        let mean = integrate_tanh_sinh(|x| x * d.pdf(x), 0.0, 1.0);
        assert!((area - 1.0).abs() < 1e-12);
        assert!((mean - d.mean()).abs() < 1e-12);
        let mut rng = RandomState::new(5);
        let n = 200_000;
        let s = d.sample(n, &mut rng).unwrap();
        let se = (d.variance() / n as f64).sqrt();
        assert!((s.mean() - 3.0 / 7.0).abs() < 4.0 * se);
        assert!(s.min() > 0.0 && s.max() < 1.0);
    }

    #[test]
    fn epanechnikov_density_moments() {
        let d = SamplingDensity::epanechnikov(2.0, 0.5).unwrap();
        let mut rng = RandomState::new(9);
        let n = 100_000;
        let s = d.sample(n, &mut rng).unwrap();
        assert!((s.mean() - 2.0).abs() < 4.0 * (d.variance() / n as f64).sqrt());
        assert!((d.variance() - 0.05).abs() < 1e-15);
        assert!(s.min() >= 1.5 && s.max() <= 2.5);
    }

    #[test]
    fn mixture_sizes_are_fixed() {
        let d = SamplingDensity::two_clusters(10.0).unwrap();
        let s = d.sample(200, &mut RandomState::new(1)).unwrap();
        assert_eq!(s.points().iter().filter(|&&x| x < 5.0).count(), 100);
        assert_eq!(allocate([0.5, 0.3, 0.2].into_iter(), 7), vec![4, 2, 1]);
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["beta:3:4", "epan:0:1", "0.5*epan:0:1+0.5*epan:10:1"] {
            let d: SamplingDensity = s.parse().unwrap();
            assert_eq!(d.to_string().parse::<SamplingDensity>().unwrap(), d);
        }
        assert!("beta:3".parse::<SamplingDensity>().is_err());
        assert!("beta:-1:2".parse::<SamplingDensity>().is_err());
    }
}
