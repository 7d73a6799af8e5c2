//! Silverman's bootstrap test for unimodality and the Monte Carlo
//! experiments built on it.
//!
//! A resample is drawn from the estimate at the critical bandwidth,
//! `X*_i = X_{I_i} + h_crit * e_i` with `I_i` uniform and `e_i` from the
//! kernel, and `h*_crit` is recomputed on it with the same kernel. The test
//! rejects unimodality at level `alpha` when the share of resamples with
//! `h*_crit <= h_crit` reaches `1 - alpha`.
//!
//! Random streams: replicate `r` of an experiment seeded with `s` uses
//! `RandomState::new(s).derive(r)`; inside a test, stream `0` draws the data
//! (experiments only) and stream `1 + b` draws bootstrap resample `b`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::{critical_and_first_drop, critical_bandwidth_value};
use crate::density::SamplingDensity;
use crate::error::{domain, Error, Result};
use crate::estimator::Sample;
use crate::kernels::KernelSpec;
use crate::modecount::CountMethod;
use crate::rng::RandomState;

/// Slack in the rejection rule so decimal levels such as 0.05 compare as
/// intended against proportions such as 190/200.
pub const DECISION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap resamples `B`.
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Counting method for kernels without an exact representation, and for
    /// all kernels when `prefer_exact` is false.
    pub method: CountMethod,
    pub prefer_exact: bool,
    /// Points per decade of the bandwidth search grid.
    pub grid_density: u32,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 200,
            alpha: 0.05,
            seed: 0,
            method: CountMethod::default(),
            prefer_exact: true,
            grid_density: 64,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 {
            return domain("need at least one bootstrap resample");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return domain(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        self.method.validate()
    }

    /// The counting method actually used for `kernel`.
    pub fn method_for(&self, kernel: &KernelSpec) -> CountMethod {
        if self.prefer_exact {
            CountMethod::best_for(kernel, self.method)
        } else {
            self.method
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub h_crit: f64,
    /// `#{b : h*_crit,b <= h_crit} / B`.
    pub exceedance: f64,
    pub alpha: f64,
    pub reject: bool,
    pub per_replicate_hstar: Vec<f64>,
}

/// The decision rule: reject when `exceedance >= 1 - alpha`.
pub fn rejects(exceedance: f64, alpha: f64) -> bool {
    exceedance + DECISION_SLACK >= 1.0 - alpha
}

pub fn exceedance(hstar: &[f64], h_crit: f64) -> f64 {
    hstar.iter().filter(|&&h| h <= h_crit).count() as f64 / hstar.len() as f64
}

/// Draw `n` points from the kernel estimate at bandwidth `h_crit`, sorted.
pub fn resample_from_fcrit(sample: &Sample, kernel: &KernelSpec, h_crit: f64, rng: &mut RandomState) -> Result<Sample> {
    if !(h_crit >= 0.0 && h_crit.is_finite()) {
        return domain(format!("h_crit must be nonnegative, got {h_crit}"));
    }
    let pts = sample.points();
    let out = (0..pts.len())
        .map(|_| {
            let x = pts[rng.index(pts.len())];
            let e = kernel.sample(rng);
            x + h_crit * e
        })
        .collect();
    Sample::new(out)
}

fn check_testable(sample: &Sample) -> Result<()> {
    if sample.len() < 2 {
        return domain("the test needs at least two observations");
    }
    if sample.is_degenerate() {
        return Err(Error::DegenerateSample(sample.len()));
    }
    Ok(())
}

/// `h*_crit` for each of the `B` resamples, in resample order.
pub fn bootstrap_hstar(sample: &Sample, kernel: &KernelSpec, h_crit: f64, cfg: &BootstrapConfig) -> Result<Vec<f64>> {
    let parent = RandomState::new(cfg.seed);
    let method = cfg.method_for(kernel);
    (0..cfg.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = parent.derive(1 + b as u64);
            let star = resample_from_fcrit(sample, kernel, h_crit, &mut rng)?;
            critical_bandwidth_value(&star, kernel, &method, cfg.grid_density)
        })
        .collect()
}

/// Silverman's test of the hypothesis that the density of `sample` is unimodal.
pub fn silverman_test(sample: &Sample, kernel: &KernelSpec, cfg: &BootstrapConfig) -> Result<TestResult> {
    cfg.validate()?;
    check_testable(sample)?;
    let h_crit = critical_bandwidth_value(sample, kernel, &cfg.method_for(kernel), cfg.grid_density)?;
    let hstar = bootstrap_hstar(sample, kernel, h_crit, cfg)?;
    let exceedance = exceedance(&hstar, h_crit);
    Ok(TestResult {
        h_crit,
        exceedance,
        alpha: cfg.alpha,
        reject: rejects(exceedance, cfg.alpha),
        per_replicate_hstar: hstar,
    })
}

/// Estimated rejection probability at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPoint {
    pub alpha: f64,
    pub pi_hat: f64,
    pub std_err: f64,
}

/// Exceedance of every replicate test on fresh samples of size `n` from `density`.
pub fn replicate_exceedances(
    density: &SamplingDensity,
    n: usize,
    kernel: &KernelSpec,
    replicates: usize,
    cfg: &BootstrapConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let root = RandomState::new(cfg.seed);
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let stream = root.derive(r as u64);
            let sample = density.sample(n, &mut stream.derive(0))?;
            let sub = BootstrapConfig {
                seed: stream.seed(),
                ..*cfg
            };
            Ok(silverman_test(&sample, kernel, &sub)?.exceedance)
        })
        .collect()
}

/// Rejection frequencies at each level with binomial standard errors; one
/// set of `B` resamples per replicate serves every level.
pub fn level_curve(
    density: &SamplingDensity,
    n: usize,
    kernel: &KernelSpec,
    alphas: &[f64],
    replicates: usize,
    cfg: &BootstrapConfig,
) -> Result<Vec<LevelPoint>> {
    if replicates < 2 {
        return domain("a level curve needs at least two replicates");
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return domain(format!("alpha must lie in [0, 1], got {a}"));
    }
    let ex = replicate_exceedances(density, n, kernel, replicates, cfg)?;
    Ok(level_points(&ex, alphas))
}

/// Rejection frequencies from per-replicate exceedances.
pub fn level_points(exceedances: &[f64], alphas: &[f64]) -> Vec<LevelPoint> {
    let r = exceedances.len() as f64;
    alphas
        .iter()
        .map(|&alpha| {
            let k = exceedances.iter().filter(|&&e| rejects(e, alpha)).count() as f64;
            let pi_hat = k / r;
            LevelPoint {
                alpha,
                pi_hat,
                std_err: (pi_hat * (1.0 - pi_hat) / r).sqrt(),
            }
        })
        .collect()
}

/// Centered moving average of `pi_hat` over `window` neighbouring levels
/// (odd; truncated at the ends). Standard errors are left as they are.
pub fn smooth_level_curve(points: &[LevelPoint], window: usize) -> Vec<LevelPoint> {
    let half = window / 2;
    (0..points.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(points.len());
            let mean = points[lo..hi].iter().map(|p| p.pi_hat).sum::<f64>() / (hi - lo) as f64;
            LevelPoint {
                pi_hat: mean,
                ..points[i]
            }
        })
        .collect()
}

/// `log(h_crit / h_nonm)` for `replicates` samples of size `n` from the
/// Epanechnikov density; `None` where the count profile below `h_crit` is
/// monotone.
pub fn log_ratio_experiment(
    n: usize,
    kernel: &KernelSpec,
    replicates: usize,
    cfg: &BootstrapConfig,
) -> Result<Vec<Option<f64>>> {
    log_ratio_experiment_from(&SamplingDensity::epanechnikov(0.0, 1.0)?, n, kernel, replicates, cfg)
}

pub fn log_ratio_experiment_from(
    density: &SamplingDensity,
    n: usize,
    kernel: &KernelSpec,
    replicates: usize,
    cfg: &BootstrapConfig,
) -> Result<Vec<Option<f64>>> {
    if replicates == 0 {
        return domain("need at least one replicate");
    }
    cfg.validate()?;
    let root = RandomState::new(cfg.seed);
    let method = cfg.method_for(kernel);
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let sample = density.sample(n, &mut root.derive(r as u64).derive(0))?;
            let (h_crit, h_nonm) = critical_and_first_drop(&sample, kernel, &method, cfg.grid_density)?;
            Ok(h_nonm.map(|h| (h_crit / h).ln()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub sizes: Vec<usize>,
    /// `h_crit` of every replicate, per sample size.
    pub h_crit: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    /// Least-squares slope of `log(median h_crit)` on `log n`.
    pub slope: f64,
    pub intercept: f64,
    /// Percentile bootstrap interval for the slope (replicates resampled
    /// within each size).
    pub slope_ci: (f64, f64),
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

/// Least-squares `(slope, intercept)` of `y` on `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// How `h_crit` shrinks with sample size.
pub fn scaling_experiment(
    density: &SamplingDensity,
    kernel: &KernelSpec,
    sizes: &[usize],
    replicates: usize,
    cfg: &BootstrapConfig,
    ci_resamples: usize,
) -> Result<ScalingResult> {
    let mut distinct = sizes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return domain("the scaling fit needs at least two distinct sample sizes");
    }
    if replicates == 0 || ci_resamples == 0 {
        return domain("need at least one replicate and one interval resample");
    }
    cfg.validate()?;
    let method = cfg.method_for(kernel);
    let root = RandomState::new(cfg.seed);
    let mut h_crit = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let size_stream = root.derive(i as u64);
        let hs = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let sample = density.sample(n, &mut size_stream.derive(r as u64))?;
                critical_bandwidth_value(&sample, kernel, &method, cfg.grid_density)
            })
            .collect::<Result<Vec<_>>>()?;
        h_crit.push(hs);
    }
    let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let medians: Vec<f64> = h_crit.iter().map(|v| median(v)).collect();
    let y: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let (slope, intercept) = least_squares(&x, &y);

    let ci_stream = root.derive(u64::MAX);
    let mut slopes: Vec<f64> = (0..ci_resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ci_stream.derive(b as u64);
            let y: Vec<f64> = h_crit
                .iter()
                .map(|v| {
                    let re: Vec<f64> = (0..v.len()).map(|_| v[rng.index(v.len())]).collect();
                    median(&re).ln()
                })
                .collect();
            least_squares(&x, &y).0
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((p * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
    Ok(ScalingResult {
        sizes: sizes.to_vec(),
        h_crit,
        medians,
        slope,
        intercept,
        slope_ci: (q(0.025), q(0.975)),
    })
}
