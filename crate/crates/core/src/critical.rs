//! Critical bandwidth `h_crit = inf{h1 > 0 : f_h is unimodal for all h > h1}`
//! and the nonmonotonicity bandwidth `h_nonm` below it.
//!
//! The search starts from an upper cap `H` verified to give one mode
//! (doubling until it does) and walks a log-spaced grid downward. Because
//! compactly supported kernels can regain modes as `h` grows, unimodality at
//! one bandwidth says nothing about larger ones; only the first grid point
//! from the top with two or more modes matters.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimator::{DensityEstimate, Sample};
use crate::kernels::KernelSpec;
use crate::modecount::{
    mode_count, refine_transitions, touch_point, CountMethod, CountRun, ModeCountProfile, Transition, PROFILE_REL_TOL,
};

/// Relative width of the final bracket around `h_crit`.
pub const CRITICAL_REL_TOL: f64 = 1e-7;
/// Smallest accepted grid density (points per decade of `h`).
pub const MIN_GRID_DENSITY: u32 = 64;
/// For the Gaussian the profile stops this far below `h_crit` at the latest.
pub const GAUSSIAN_PROFILE_DEPTH: f64 = 1e-3;
/// Grid points counted per batch while scanning.
const BATCH: usize = 16;
const MAX_DOUBLINGS: u32 = 200;

/// Which bandwidth below `h_crit` is reported as the onset of nonmonotonicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NonmonotonicityReading {
    /// Walking down from `h_crit`, the upper end of the first stretch whose
    /// count is below a count already seen: `sup{h < h_crit : count(h) <
    /// count(h') for some h' in (h, h_crit)}`.
    #[default]
    FirstDrop,
    /// The smallest bandwidth at which the count rises as `h` increases.
    LowestRise,
}

impl fmt::Display for NonmonotonicityReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NonmonotonicityReading::FirstDrop => "first-drop",
            NonmonotonicityReading::LowestRise => "lowest-rise",
        })
    }
}

impl FromStr for NonmonotonicityReading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "first-drop" => Ok(NonmonotonicityReading::FirstDrop),
            "lowest-rise" => Ok(NonmonotonicityReading::LowestRise),
            _ => Err(Error::Parse(format!("unknown nonmonotonicity reading '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalResult {
    pub h_crit: f64,
    /// Under [`NonmonotonicityReading::FirstDrop`].
    pub h_nonm: Option<f64>,
    /// `h_crit / h_nonm`.
    pub ratio: Option<f64>,
    /// Under [`NonmonotonicityReading::LowestRise`].
    pub h_nonm_lowest_rise: Option<f64>,
    pub profile: ModeCountProfile,
    pub upper_bound_used: f64,
}

impl CriticalResult {
    pub fn log_ratio(&self) -> Option<f64> {
        self.ratio.map(f64::ln)
    }

    pub fn h_nonm_for(&self, reading: NonmonotonicityReading) -> Option<f64> {
        match reading {
            NonmonotonicityReading::FirstDrop => self.h_nonm,
            NonmonotonicityReading::LowestRise => self.h_nonm_lowest_rise,
        }
    }
}

/// `h_nonm` of a computed result under the default reading.
pub fn nonmonotonicity_bandwidth(r: &CriticalResult) -> Option<f64> {
    r.h_nonm
}

/// How far below `h_crit` the downward scan continues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Extent {
    /// Stop once `h_crit` is bracketed.
    Critical,
    /// Stop once the first drop below `h_crit` is located.
    FirstDrop,
    /// Down to the floor.
    Full,
}

struct Search<'a> {
    sample: &'a Sample,
    kernel: &'a KernelSpec,
    method: CountMethod,
    density: u32,
    upper: f64,
    /// Downward grid `upper * 10^(-k/density)` and its counts.
    grid: Vec<f64>,
    counts: Vec<usize>,
    /// Refined transitions per grid cell `(k + 1, k)`.
    cells: HashMap<usize, Vec<Transition>>,
}

impl<'a> Search<'a> {
    fn count(&self, h: f64) -> Result<usize> {
        mode_count(&DensityEstimate::new(self.sample, self.kernel, h)?, &self.method)
    }

    fn grid_point(&self, k: usize) -> f64 {
        self.upper * 10f64.powf(-(k as f64) / self.density as f64)
    }

    /// Extend the downward scan by one batch.
    fn extend(&mut self) -> Result<()> {
        let start = self.grid.len();
        let hs: Vec<f64> = (start..start + BATCH).map(|k| self.grid_point(k)).collect();
        let counts = hs.par_iter().map(|&h| self.count(h)).collect::<Result<Vec<_>>>()?;
        self.grid.extend(hs);
        self.counts.extend(counts);
        Ok(())
    }

    /// Refine every cell with differing end counts among the first `upto` points.
    fn refine_cells(&mut self, upto: usize) -> Result<()> {
        let todo: Vec<usize> = (0..upto.saturating_sub(1))
            .filter(|k| !self.cells.contains_key(k) && self.counts[*k] != self.counts[k + 1])
            .collect();
        let this = &*self;
        let done = todo
            .par_iter()
            .map(|&k| {
                let mut out = Vec::new();
                refine_transitions(
                    &|h| this.count(h),
                    this.grid[k + 1],
                    this.counts[k + 1],
                    this.grid[k],
                    this.counts[k],
                    PROFILE_REL_TOL,
                    &mut out,
                )?;
                Ok((k, out))
            })
            .collect::<Result<Vec<_>>>()?;
        self.cells.extend(done);
        Ok(())
    }

    /// Profile over the first `upto` grid points, increasing in `h`.
    fn profile(&self, upto: usize) -> ModeCountProfile {
        let mut h_grid: Vec<f64> = self.grid[..upto].to_vec();
        let mut counts: Vec<usize> = self.counts[..upto].to_vec();
        h_grid.reverse();
        counts.reverse();
        let mut transitions = Vec::new();
        for k in (0..upto.saturating_sub(1)).rev() {
            if let Some(t) = self.cells.get(&k) {
                transitions.extend_from_slice(t);
            }
        }
        ModeCountProfile::from_parts(h_grid, counts, transitions)
    }
}

fn validate(sample: &Sample, method: &CountMethod, density: u32) -> Result<()> {
    method.validate()?;
    if density < MIN_GRID_DENSITY {
        return domain(format!(
            "grid density must be at least {MIN_GRID_DENSITY} points per decade, got {density}"
        ));
    }
    if sample.is_empty() {
        return domain("empty sample");
    }
    Ok(())
}

/// Runs in increasing `h`; index of the topmost run with two or more modes.
fn top_multimodal(runs: &[CountRun]) -> Option<usize> {
    runs.iter().rposition(|r| r.count >= 2)
}

fn first_drop(runs: &[CountRun]) -> Option<f64> {
    let t = top_multimodal(runs)?;
    let mut seen = runs[t].count;
    for r in runs[..t].iter().rev() {
        if r.count < seen {
            return Some(r.h_hi);
        }
        seen = seen.max(r.count);
    }
    None
}

fn lowest_rise(profile: &ModeCountProfile, h_crit: f64) -> Option<f64> {
    profile
        .transitions()
        .iter()
        .find(|t| t.above > t.below && t.h < h_crit)
        .map(|t| t.h)
}

fn run_search(
    sample: &Sample,
    kernel: &KernelSpec,
    method: &CountMethod,
    density: u32,
    extent: Extent,
) -> Result<CriticalResult> {
    validate(sample, method, density)?;
    let trivial = |upper: f64| CriticalResult {
        h_crit: 0.0,
        h_nonm: None,
        ratio: None,
        h_nonm_lowest_rise: None,
        profile: ModeCountProfile::from_parts(vec![upper], vec![1], Vec::new()),
        upper_bound_used: upper,
    };
    if sample.len() == 1 || sample.is_degenerate() {
        return Ok(trivial(1.0));
    }
    let mut search = Search {
        sample,
        kernel,
        method: *method,
        density,
        upper: 2.0 * sample.range() * (1.0 + f64::EPSILON.sqrt()),
        grid: Vec::new(),
        counts: Vec::new(),
        cells: HashMap::new(),
    };
    let mut doublings = 0;
    while search.count(search.upper)? != 1 {
        search.upper *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return domain("no unimodal bandwidth found below the search cap");
        }
    }

    if extent == Extent::Critical && kernel.is_gaussian() {
        return gaussian_critical(&search);
    }

    // Walk down to the first grid point with two or more modes.
    let floor = profile_floor(sample, kernel);
    let mut star = None;
    let mut scanned = 0;
    while star.is_none() {
        search.extend()?;
        while scanned < search.grid.len() {
            if search.counts[scanned] >= 2 {
                star = Some(scanned);
                break;
            }
            scanned += 1;
        }
        if star.is_none() && search.grid.last().is_some_and(|&h| h < floor.unwrap_or(0.0)) {
            // only reachable with coincident points; the estimate never splits
            return Ok(trivial(search.upper));
        }
    }
    let star = star.unwrap();
    let mut h_crit = if star == 0 {
        search.grid[0]
    } else {
        bisect_critical(&search, search.grid[star], search.grid[star - 1])?
    };
    if let Some(w) = knot_window(&search, star, h_crit)? {
        h_crit = bisect_critical(&search, w.h, w.hi)?;
        if extent != Extent::Critical {
            let count = |h: f64| search.count(h);
            let mut out = Vec::new();
            if w.lo != search.grid[w.cell + 1] {
                // partial bottom cell: its lower end sits just above the old h_crit
                refine_transitions(
                    &count,
                    search.grid[star],
                    search.counts[star],
                    w.lo,
                    1,
                    PROFILE_REL_TOL,
                    &mut out,
                )?;
            }
            refine_transitions(&count, w.lo, 1, w.h, w.count, PROFILE_REL_TOL, &mut out)?;
            refine_transitions(&count, w.h, w.count, w.hi, 1, PROFILE_REL_TOL, &mut out)?;
            search.cells.insert(w.cell, out);
        }
    }

    let mut result = CriticalResult {
        h_crit,
        h_nonm: None,
        ratio: None,
        h_nonm_lowest_rise: None,
        profile: search.profile(star + 1),
        upper_bound_used: search.upper,
    };
    if extent == Extent::Critical {
        return Ok(result);
    }

    // Continue down, refining cells as they arrive.
    let gaussian_stop = if kernel.is_gaussian() {
        h_crit * GAUSSIAN_PROFILE_DEPTH
    } else {
        0.0
    };
    let n_distinct = distinct_count(sample);
    let mut upto = star + 1;
    loop {
        while upto >= search.grid.len() {
            search.extend()?;
        }
        let batch_end = (upto + BATCH).min(search.grid.len());
        let mut stop = false;
        let mut end = upto;
        while end < batch_end {
            let h = search.grid[end];
            let c = search.counts[end];
            end += 1;
            let at_floor = match floor {
                Some(f) => h < f,
                None => h < gaussian_stop || c >= n_distinct,
            };
            if at_floor {
                stop = true;
                break;
            }
        }
        upto = end;
        search.refine_cells(upto)?;
        let profile = search.profile(upto);
        if extent == Extent::FirstDrop {
            if let Some(h) = first_drop(&profile.runs()) {
                result.h_nonm = Some(h);
                result.profile = profile;
                break;
            }
        }
        if stop {
            result.profile = profile;
            break;
        }
    }
    if extent == Extent::Full {
        result.h_nonm = first_drop(&result.profile.runs());
        result.h_nonm_lowest_rise = lowest_rise(&result.profile, h_crit);
    }
    result.ratio = result.h_nonm.map(|h| h_crit / h);
    Ok(result)
}

/// Gaussian counts never increase with `h`, so the first grid point with two
/// or more modes can be found by galloping and bisecting over grid indices
/// instead of scanning; the result is the same grid point.
fn gaussian_critical(search: &Search) -> Result<CriticalResult> {
    let max_index = search.density as usize * 600;
    let (mut lo, mut hi) = (0usize, 1usize);
    let mut c_hi = search.count(search.grid_point(hi))?;
    while c_hi < 2 {
        lo = hi;
        hi *= 2;
        if hi > max_index {
            return domain("the estimate does not split above the smallest representable bandwidth");
        }
        c_hi = search.count(search.grid_point(hi))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let c = search.count(search.grid_point(mid))?;
        if c >= 2 {
            hi = mid;
            c_hi = c;
        } else {
            lo = mid;
        }
    }
    let (h_star, h_above) = (search.grid_point(hi), search.grid_point(hi - 1));
    let h_crit = bisect_critical(search, h_star, h_above)?;
    let (mut h_grid, mut counts) = (vec![h_star, h_above], vec![c_hi, 1]);
    if hi > 1 {
        h_grid.push(search.upper);
        counts.push(1);
    }
    Ok(CriticalResult {
        h_crit,
        h_nonm: None,
        ratio: None,
        h_nonm_lowest_rise: None,
        profile: ModeCountProfile::from_parts(h_grid, counts, Vec::new()),
        upper_bound_used: search.upper,
    })
}

/// Below this bandwidth every count is known: for compact kernels and
/// distinct points, `h <= S_min / 2` gives exactly `n` modes. `None` for the
/// Gaussian.
fn profile_floor(sample: &Sample, kernel: &KernelSpec) -> Option<f64> {
    kernel.support_radius()?;
    let smallest = sample
        .points()
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    Some(if smallest.is_finite() { 0.5 * smallest } else { 0.0 })
}

fn distinct_count(sample: &Sample) -> usize {
    1 + sample.points().windows(2).filter(|w| w[1] > w[0]).count()
}

/// Tolerance for a point's knot landing on the knot being tracked.
const KNOT_MATCH: f64 = 1e-9;
/// Smallest relative offset from a knot crossing probed for a window.
const WINDOW_PROBE_FLOOR: f64 = 1e-12;

/// A multimodal bandwidth inside the unimodal-ended cell `(lo, hi)`.
struct Window {
    /// Grid cell key holding the window.
    cell: usize,
    lo: f64,
    hi: f64,
    h: f64,
    count: usize,
}

/// One-sided derivative of order 1 or 2 (unnormalized) at `x`, from the
/// side `side` (`-1` left, `+1` right), and the sum of absolute terms.
fn one_sided(sample: &Sample, kernel: &KernelSpec, x: f64, h: f64, side: f64, order: u8) -> (f64, f64) {
    let pts = sample.points();
    let reach = h * (1.0 + 2.0 * KNOT_MATCH);
    let (mut sum, mut abs) = (0.0, 0.0);
    for &xi in &pts[sample.indices_within(x - reach, x + reach)] {
        let u = (x - xi) / h;
        let v = if (u.abs() - 1.0).abs() < KNOT_MATCH {
            let edge = u.signum();
            // the interior limit applies only on the side facing the support
            if side * edge < 0.0 {
                if order == 1 {
                    kernel.deriv1(edge)
                } else {
                    kernel.deriv2(edge)
                }
            } else {
                0.0
            }
        } else if order == 1 {
            kernel.deriv1(u)
        } else {
            kernel.deriv2(u)
        };
        sum += v;
        abs += v.abs();
    }
    (sum, abs)
}

/// Mode of a unimodal estimate, by bisection on the sign of `f'`.
fn unimodal_mode(sample: &Sample, kernel: &KernelSpec, h: f64) -> Result<f64> {
    let e = DensityEstimate::new(sample, kernel, h)?;
    let (mut a, mut b) = (sample.min(), sample.max());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if e.eval(1, m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Zero of `g` on `[a, b]` when it changes sign there.
fn crossing(g: impl Fn(f64) -> f64, a: f64, b: f64) -> Option<f64> {
    let (ga, gb) = (g(a), g(b));
    if ga < 0.0 && gb > 0.0 {
        Some(touch_point(&g, a, b, ga, gb))
    } else if ga > 0.0 && gb < 0.0 {
        Some(touch_point(|h| -g(h), a, b, -ga, -gb))
    } else {
        None
    }
}

/// Multimodal bandwidth in `(a, b)` caused by the knot `x_j + sigma h`
/// passing the mode, if one is found.
fn window_at_knot(search: &Search, theta: f64, xj: f64, sigma: f64, a: f64, b: f64) -> Result<Option<(f64, usize)>> {
    let (s, k) = (search.sample, search.kernel);
    let slope = |side: f64, h: f64| one_sided(s, k, xj + sigma * h, h, side, 1).0;
    if theta == 1.0 {
        // f' jumps up across the knot, so between the zeros of the two
        // one-sided slopes the knot is a local minimum
        let (Some(h1), Some(h2)) = (crossing(|h| slope(-1.0, h), a, b), crossing(|h| slope(1.0, h), a, b)) else {
            return Ok(None);
        };
        let h = (h1 * h2).sqrt();
        let c = search.count(h)?;
        return Ok((c >= 2).then_some((h, c)));
    }
    let Some(h0) = crossing(|h| slope(1.0, h), a, b) else {
        return Ok(None);
    };
    if theta >= 2.0 {
        let x = xj + sigma * h0;
        let (left, la) = one_sided(s, k, x, h0, -1.0, 2);
        let (right, ra) = one_sided(s, k, x, h0, 1.0, 2);
        let noise = 1e-9 * la.max(ra);
        if left < -noise && right < -noise {
            return Ok(None);
        }
    }
    let mut delta = b / a - 1.0;
    while delta >= WINDOW_PROBE_FLOOR {
        for h in [h0 * (1.0 + delta), h0 * (1.0 - delta)] {
            if h > a && h < b {
                let c = search.count(h)?;
                if c >= 2 {
                    return Ok(Some((h, c)));
                }
            }
        }
        delta *= 0.5;
    }
    Ok(None)
}

/// With compact kernels a knot `X_j +- h` crossing the mode can open a
/// multimodal window far narrower than a grid cell, so two unimodal grid
/// points do not make the cell between them unimodal. Each cell above the
/// bracketed `h_crit` is checked for knots that change sides of the mode
/// between its ends; the topmost window found is returned.
fn knot_window(search: &Search, star: usize, h_crit: f64) -> Result<Option<Window>> {
    let theta = match search.kernel.theta() {
        Some(t) if t >= 1.0 => t,
        _ => return Ok(None),
    };
    if star == 0 {
        return Ok(None);
    }
    let mut ends: Vec<f64> = search.grid[..star].to_vec();
    let bottom = h_crit * (1.0 + 2.0 * CRITICAL_REL_TOL);
    if bottom < search.grid[star - 1] && search.count(bottom)? == 1 {
        ends.push(bottom);
    }
    let (s, k) = (search.sample, search.kernel);
    let modes = ends
        .par_iter()
        .map(|&h| unimodal_mode(s, k, h))
        .collect::<Result<Vec<_>>>()?;
    let pts = s.points();
    let found = (0..ends.len() - 1)
        .into_par_iter()
        .map(|i| {
            let (hi, lo) = (ends[i], ends[i + 1]);
            let mut best: Option<(f64, usize)> = None;
            for (j, &xj) in pts.iter().enumerate() {
                if j > 0 && pts[j - 1] == xj {
                    continue;
                }
                for sigma in [-1.0, 1.0] {
                    let d_lo = xj + sigma * lo - modes[i + 1];
                    let d_hi = xj + sigma * hi - modes[i];
                    if d_lo * d_hi > 0.0 || (d_lo == 0.0 && d_hi == 0.0) {
                        continue;
                    }
                    if let Some(w) = window_at_knot(search, theta, xj, sigma, lo, hi)? {
                        if best.is_none_or(|b| w.0 > b.0) {
                            best = Some(w);
                        }
                    }
                }
            }
            Ok(best.map(|(h, count)| Window {
                cell: i,
                lo,
                hi,
                h,
                count,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().next())
}

/// Bisect on "two or more modes" between `lo` (multimodal) and `hi` (unimodal).
fn bisect_critical(search: &Search, mut lo: f64, mut hi: f64) -> Result<f64> {
    while hi / lo - 1.0 > CRITICAL_REL_TOL {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if search.count(mid)? >= 2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Critical bandwidth with the count profile down to the floor and both
/// readings of `h_nonm`.
pub fn critical_bandwidth(
    sample: &Sample,
    kernel: &KernelSpec,
    method: &CountMethod,
    grid_density: u32,
) -> Result<CriticalResult> {
    run_search(sample, kernel, method, grid_density, Extent::Full)
}

/// `h_crit` alone; identical to [`critical_bandwidth`]'s value.
pub fn critical_bandwidth_value(
    sample: &Sample,
    kernel: &KernelSpec,
    method: &CountMethod,
    grid_density: u32,
) -> Result<f64> {
    Ok(run_search(sample, kernel, method, grid_density, Extent::Critical)?.h_crit)
}

/// `h_crit` and the default-reading `h_nonm`, scanning only as far down as
/// needed; identical to the values from [`critical_bandwidth`].
pub fn critical_and_first_drop(
    sample: &Sample,
    kernel: &KernelSpec,
    method: &CountMethod,
    grid_density: u32,
) -> Result<(f64, Option<f64>)> {
    let r = run_search(sample, kernel, method, grid_density, Extent::FirstDrop)?;
    Ok((r.h_crit, r.h_nonm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_point_is_zero() {
        let r = critical_bandwidth(&sample(&[3.0]), &KernelSpec::biweight(), &CountMethod::Exact, 64).unwrap();
        assert_eq!(r.h_crit, 0.0);
        assert!(r.h_nonm.is_none());
        let r = critical_bandwidth(&sample(&[2.0, 2.0]), &KernelSpec::biweight(), &CountMethod::Exact, 64).unwrap();
        assert_eq!(r.h_crit, 0.0);
    }

    #[test]
    fn epanechnikov_pair() {
        let s = sample(&[0.0, 1.0]);
        let r = critical_bandwidth(&s, &KernelSpec::epanechnikov(), &CountMethod::Exact, 64).unwrap();
        assert!((r.h_crit - 1.0).abs() < 1e-5, "{}", r.h_crit);
        let hn = r.h_nonm.unwrap();
        assert!((hn - 0.5).abs() < 1e-5, "{hn}");
        assert!((r.log_ratio().unwrap() - 2f64.ln()).abs() < 1e-4);
        assert_eq!(r.h_nonm_lowest_rise.map(|h| (h - 0.5).abs() < 1e-5), Some(true));
        let fast = critical_and_first_drop(&s, &KernelSpec::epanechnikov(), &CountMethod::Exact, 64).unwrap();
        assert_eq!(fast, (r.h_crit, r.h_nonm));
        assert_eq!(
            critical_bandwidth_value(&s, &KernelSpec::epanechnikov(), &CountMethod::Exact, 64).unwrap(),
            r.h_crit
        );
    }

    #[test]
    fn result_invariants() {
        let s = sample(&[-1.0, 0.0, 1.0]);
        for k in [
            KernelSpec::epanechnikov(),
            KernelSpec::biweight(),
            KernelSpec::triweight(),
        ] {
            let r = critical_bandwidth(&s, &k, &CountMethod::Exact, 128).unwrap();
            let count = |h: f64| mode_count(&DensityEstimate::new(&s, &k, h).unwrap(), &CountMethod::Exact).unwrap();
            assert_eq!(count(r.h_crit * (1.0 + 1e-6)), 1);
            assert!(count(r.h_crit * (1.0 - 1e-6)) >= 2);
            assert!(r
                .profile
                .h_grid()
                .iter()
                .filter(|&&h| h > r.h_crit)
                .all(|&h| count(h) == 1));
            if let Some(hn) = r.h_nonm {
                assert!(hn < r.h_crit && r.ratio.unwrap() >= 1.0);
            }
        }
    }

    #[test]
    fn triweight_three_points_matches_last_transition() {
        let s = sample(&[-1.0, 0.0, 1.0]);
        let r = critical_bandwidth(&s, &KernelSpec::triweight(), &CountMethod::Exact, 64).unwrap();
        assert_eq!(r.profile.compressed(), vec![3, 4, 2, 1]);
        let last = r.profile.transitions().last().unwrap();
        assert_eq!((last.below, last.above), (2, 1));
        assert!((last.h / r.h_crit - 1.0).abs() < 2e-6);
    }

    #[test]
    fn readings_differ_for_biweight() {
        let s = sample(&[-1.0, 0.0, 1.0]);
        let r = critical_bandwidth(&s, &KernelSpec::biweight(), &CountMethod::Exact, 64).unwrap();
        // ascending [3, 5, 2, 3, 1]
        let t: Vec<f64> = r.profile.transitions().iter().map(|t| t.h).collect();
        assert_eq!(t.len(), 4);
        assert!((r.h_nonm.unwrap() - t[2]).abs() < 1e-12);
        assert!((r.h_nonm_lowest_rise.unwrap() - t[0]).abs() < 1e-12);
    }

    #[test]
    fn gaussian_has_no_nonmonotonicity() {
        let s = sample(&[-1.0, 0.0, 0.3, 1.0, 2.5]);
        let k = KernelSpec::gaussian(1.0).unwrap();
        let r = critical_bandwidth(&s, &k, &CountMethod::grid(64, 1e-10).unwrap(), 64).unwrap();
        assert!(r.h_crit > 0.0);
        assert!(r.h_nonm.is_none() && r.h_nonm_lowest_rise.is_none());
        assert!(r.profile.is_nonincreasing());
    }

    #[test]
    fn gaussian_shortcut_agrees_with_full_scan() {
        let s = sample(&[-2.0, -1.1, -0.2, 0.3, 1.9, 2.2, 4.0]);
        let k = KernelSpec::gaussian(1.0).unwrap();
        let m = CountMethod::grid(32, 1e-10).unwrap();
        let full = critical_bandwidth(&s, &k, &m, 64).unwrap();
        assert_eq!(critical_bandwidth_value(&s, &k, &m, 64).unwrap(), full.h_crit);
    }

    #[test]
    fn narrow_knot_windows_set_h_crit() {
        // both once gave a grid-density dependent h_crit
        for (pts, want) in [(&[0.26, 0.82, 1.12][..], 0.71), (&[0.08, 1.48, 1.82][..], 1.57)] {
            let s = sample(pts);
            for d in [64, 1024] {
                let h = critical_bandwidth_value(&s, &KernelSpec::biweight(), &CountMethod::Exact, d).unwrap();
                assert!((h / want - 1.0).abs() < 1e-5, "{pts:?} at {d}: {h}");
            }
        }
    }

    #[test]
    fn validates_inputs() {
        let s = sample(&[0.0, 1.0]);
        assert!(critical_bandwidth(&s, &KernelSpec::biweight(), &CountMethod::Exact, 10).is_err());
        assert!("first-drop".parse::<NonmonotonicityReading>().is_ok());
        assert!("middle".parse::<NonmonotonicityReading>().is_err());
    }
}
