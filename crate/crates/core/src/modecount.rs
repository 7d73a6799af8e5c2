//! Counting and locating the modes of a density estimate, and mode counts as
//! a function of bandwidth.
//!
//! Modes are read off the sign pattern of `f'` on `[X_(1), X_(n)]`. Outside
//! that hull `f'` is positive to the left and negative to the right for any
//! symmetric unimodal kernel, so the hull is bracketed by an implicit rising
//! run and an implicit falling run. A mode is a rising run followed by a
//! falling one, possibly with a flat stretch between them.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimator::{build_piecewise, DensityEstimate, Sample};
use crate::kernels::KernelSpec;
use crate::poly::{horner, sign_changing_roots};

/// Smallest accepted grid resolution (points per bandwidth).
pub const MIN_POINTS_PER_BANDWIDTH: u32 = 32;
/// Relative width to which count transitions are localized by [`count_profile`].
pub const PROFILE_REL_TOL: f64 = 1e-6;
/// Offset (in bandwidths) from a knot at which one-sided signs are read.
pub const KNOT_OFFSET: f64 = 1e-9;
/// `|f'|` below this fraction of `sum |terms|` counts as numerically zero.
pub const FLAT_REL_TOL: f64 = 1e-14;

/// How modes are located.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CountMethod {
    /// Root isolation on the piecewise-polynomial derivative (integer theta only).
    Exact,
    /// Derivative signs on a grid with `points_per_bandwidth` points per `h`,
    /// brackets bisected to `refine_tolerance * h`.
    Grid {
        points_per_bandwidth: u32,
        refine_tolerance: f64,
    },
}

impl Default for CountMethod {
    fn default() -> Self {
        CountMethod::Grid {
            points_per_bandwidth: 1024,
            refine_tolerance: 1e-10,
        }
    }
}

impl CountMethod {
    pub fn grid(points_per_bandwidth: u32, refine_tolerance: f64) -> Result<Self> {
        let m = CountMethod::Grid {
            points_per_bandwidth,
            refine_tolerance,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if let CountMethod::Grid {
            points_per_bandwidth,
            refine_tolerance,
        } = *self
        {
            if points_per_bandwidth < MIN_POINTS_PER_BANDWIDTH {
                return domain(format!(
                    "grid needs at least {MIN_POINTS_PER_BANDWIDTH} points per bandwidth, got {points_per_bandwidth}"
                ));
            }
            if !(refine_tolerance.is_finite() && refine_tolerance > 0.0) {
                return domain(format!("refine tolerance must be positive, got {refine_tolerance}"));
            }
        }
        Ok(())
    }

    /// Exact when the kernel allows it, otherwise `fallback`.
    pub fn best_for(kernel: &KernelSpec, fallback: CountMethod) -> CountMethod {
        if kernel.polynomial_degree_theta().is_some() {
            CountMethod::Exact
        } else {
            fallback
        }
    }
}

impl fmt::Display for CountMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountMethod::Exact => write!(f, "exact"),
            CountMethod::Grid {
                points_per_bandwidth,
                refine_tolerance,
            } => write!(f, "grid:{points_per_bandwidth}:{refine_tolerance:e}"),
        }
    }
}

impl FromStr for CountMethod {
    type Err = Error;

    /// `exact`, `grid`, `grid:<ppb>` or `grid:<ppb>:<tol>`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let head = parts.next().unwrap_or("").to_ascii_lowercase();
        let bad = || Error::Parse(format!("unknown count method '{s}'"));
        match head.as_str() {
            "exact" if parts.next().is_none() => Ok(CountMethod::Exact),
            "grid" => {
                let CountMethod::Grid {
                    mut points_per_bandwidth,
                    mut refine_tolerance,
                } = CountMethod::default()
                else {
                    unreachable!()
                };
                if let Some(p) = parts.next() {
                    points_per_bandwidth = p.parse().map_err(|_| bad())?;
                }
                if let Some(t) = parts.next() {
                    refine_tolerance = t.parse().map_err(|_| bad())?;
                }
                if parts.next().is_some() {
                    return Err(bad());
                }
                CountMethod::grid(points_per_bandwidth, refine_tolerance)
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub location: f64,
    pub height: f64,
}

/// The strict local maxima of an estimate, ascending by location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    modes: Vec<Mode>,
    /// `f'` vanished on an interval somewhere inside the data hull.
    degenerate: bool,
}

impl ModeSet {
    pub fn count(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn locations(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.location).collect()
    }

    pub fn degenerate(&self) -> bool {
        self.degenerate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    Pos,
    Neg,
    /// `f'` exactly zero because no kernel reaches this stretch.
    Gap,
    /// `f'` numerically zero over an interval with kernels present.
    Flat,
}

#[derive(Debug, Clone, Copy)]
struct Run {
    sign: Sign,
    first: f64,
    last: f64,
}

/// Accumulates sign runs left to right, dropping gaps and merging repeats.
struct Runs(Vec<Run>);

impl Runs {
    fn new(start: f64) -> Self {
        Runs(vec![Run {
            sign: Sign::Pos,
            first: start,
            last: start,
        }])
    }

    fn push(&mut self, sign: Sign, first: f64, last: f64) {
        if sign == Sign::Gap {
            return;
        }
        match self.0.last_mut() {
            Some(r) if r.sign == sign => r.last = last,
            _ => self.0.push(Run { sign, first, last }),
        }
    }

    fn finish(mut self, end: f64) -> Vec<Run> {
        self.push(Sign::Neg, end, end);
        self.0
    }
}

/// Where a mode sits: at a run boundary, inside a bracket, or mid-plateau.
enum ModeSite {
    Bracket(f64, f64),
    Flat(f64),
}

fn mode_sites(runs: &[Run]) -> (Vec<ModeSite>, bool) {
    let mut sites = Vec::new();
    let degenerate = runs.iter().any(|r| r.sign == Sign::Flat);
    for (i, r) in runs.iter().enumerate() {
        if r.sign != Sign::Pos {
            continue;
        }
        match runs.get(i + 1) {
            Some(n) if n.sign == Sign::Neg => sites.push(ModeSite::Bracket(r.last, n.first)),
            Some(f) if f.sign == Sign::Flat => {
                if runs.get(i + 2).is_some_and(|n| n.sign == Sign::Neg) {
                    sites.push(ModeSite::Flat(0.5 * (f.first + f.last)));
                }
            }
            _ => {}
        }
    }
    (sites, degenerate)
}

/// Locate and count the modes of `e`.
pub fn count_modes(e: &DensityEstimate, method: &CountMethod) -> Result<ModeSet> {
    method.validate()?;
    let sample = e.sample();
    if sample.is_degenerate() {
        let x = sample.min();
        return Ok(ModeSet {
            modes: vec![Mode {
                location: x,
                height: e.eval(0, x),
            }],
            degenerate: false,
        });
    }
    let (sites, degenerate) = match *method {
        CountMethod::Exact => exact_sites(e)?,
        CountMethod::Grid {
            points_per_bandwidth,
            refine_tolerance,
        } => grid_sites(e, points_per_bandwidth, refine_tolerance),
    };
    let tol = match *method {
        CountMethod::Exact => 1e-12,
        CountMethod::Grid { refine_tolerance, .. } => refine_tolerance,
    } * e.bandwidth();
    let modes = sites
        .into_iter()
        .map(|s| {
            let location = match s {
                ModeSite::Bracket(a, b) if a == b => a,
                ModeSite::Bracket(a, b) => bisect_down_crossing(e, a, b, tol),
                ModeSite::Flat(x) => x,
            };
            Mode {
                location,
                height: e.eval(0, location),
            }
        })
        .collect();
    Ok(ModeSet { modes, degenerate })
}

/// Number of modes only.
pub fn mode_count(e: &DensityEstimate, method: &CountMethod) -> Result<usize> {
    method.validate()?;
    if e.sample().is_degenerate() {
        return Ok(1);
    }
    let (sites, _) = match *method {
        CountMethod::Exact => exact_sites(e)?,
        CountMethod::Grid {
            points_per_bandwidth,
            refine_tolerance,
        } => grid_sites(e, points_per_bandwidth, refine_tolerance),
    };
    Ok(sites.len())
}

/// Shrink `[a, b]` with `f'(a) > 0 > f'(b)` onto the crossing.
fn bisect_down_crossing(e: &DensityEstimate, mut a: f64, mut b: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let v = e.eval(1, m);
        if v > 0.0 {
            a = m;
        } else if v < 0.0 {
            b = m;
        } else {
            return m;
        }
    }
    0.5 * (a + b)
}

/// `true` when the constant term dominates the rest on `|s| <= r`, so the
/// polynomial has no root there.
fn clearly_rootless(c: &[f64], r: f64) -> bool {
    let mut tail = 0.0;
    let mut p = r;
    for &ck in &c[1..] {
        tail += ck.abs() * p;
        p *= r;
    }
    c[0].abs() > tail * (1.0 + 1e-12)
}

fn exact_sites(e: &DensityEstimate) -> Result<(Vec<ModeSite>, bool)> {
    let sample = e.sample();
    let (lo, hi) = (sample.min(), sample.max());
    let h = e.bandwidth();
    let pp = build_piecewise(e, 1, lo, hi)?;
    // Magnitude scale of each piece: active count times sum |coefficients of K'|.
    let kc = e.kernel().poly_coefficients(1).expect("polynomial kernel");
    let kabs: f64 = kc.iter().map(|v| v.abs()).sum();
    let norm = 1.0 / (sample.len() as f64 * h * h);
    let piece_scale: Vec<f64> = pp
        .pieces()
        .iter()
        .map(|p| {
            let mid = p.center;
            sample.indices_within(mid - h, mid + h).len() as f64 * kabs * norm
        })
        .collect();
    let noise_floor = 1e-12;
    let mut runs = Runs::new(lo);
    let mut roots: Vec<f64> = Vec::new();
    for (i, piece) in pp.pieces().iter().enumerate() {
        let (l, r) = pp.interval(i);
        if piece.is_zero() {
            runs.push(Sign::Gap, l, r);
            continue;
        }
        let c = &piece.coeffs;
        let (sl, sr) = (piece.local(l), piece.local(r));
        if clearly_rootless(c, sl.abs().max(sr.abs())) {
            let sign = if c[0] > 0.0 { Sign::Pos } else { Sign::Neg };
            runs.push(sign, l, r);
            continue;
        }
        roots.clear();
        if sr - sl > 2.0 * KNOT_OFFSET {
            roots.extend(sign_changing_roots(c, sl, sr, 1e-12));
        }
        // Signs are read at subinterval midpoints; values within roundoff
        // of zero in the expanded basis fall back to a direct sum.
        let bound = noise_floor * piece_scale[i];
        let mut prev = sl;
        for (k, &end) in roots.iter().chain(std::iter::once(&sr)).enumerate() {
            let s_mid = 0.5 * (prev + end);
            let v = horner(c, s_mid);
            let sign = if v.abs() > bound {
                Some(if v > 0.0 { Sign::Pos } else { Sign::Neg })
            } else {
                direct_sign(e, piece.center + h * s_mid)
            };
            let first = if k == 0 { l } else { piece.center + h * prev };
            let last = if k == roots.len() { r } else { piece.center + h * end };
            if let Some(sign) = sign {
                runs.push(sign, first, last);
            }
            prev = end;
        }
    }
    let runs = runs.finish(hi);
    // Brackets collapse to points except across stretches left unsigned.
    let (sites, degenerate) = mode_sites(&runs);
    Ok((sites, degenerate))
}

/// `f'`, `f''` and `sum |terms of f'|` at each sorted `x`.
fn derivative_samples(e: &DensityEstimate, xs: &[f64]) -> Vec<(f64, f64, f64)> {
    let pts = e.sample().points();
    let kernel = e.kernel();
    let h = e.bandwidth();
    let r = kernel.numerical_radius() * h;
    let n = pts.len();
    let c1 = 1.0 / (n as f64 * h * h);
    let c2 = c1 / h;
    let (mut a, mut b) = (0usize, 0usize);
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        while a < n && pts[a] <= x - r {
            a += 1;
        }
        if b < a {
            b = a;
        }
        while b < n && pts[b] < x + r {
            b += 1;
        }
        let (mut d1, mut d2, mut abs1) = (0.0, 0.0, 0.0);
        for &xi in &pts[a..b] {
            let (k1, k2) = kernel.deriv12((x - xi) / h);
            d1 += k1;
            d2 += k2;
            abs1 += k1.abs();
        }
        out.push((d1 * c1, d2 * c2, abs1 * c1));
    }
    out
}

/// Iteration cap when locating the extremum of `f'` inside a grid cell.
const TOUCH_ITERATIONS: usize = 100;

/// Zero of an increasing-through-zero `g` on `[a, b]` with `ga < 0 < gb`,
/// by the Illinois variant of false position.
pub(crate) fn touch_point(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> f64 {
    let width = 1e-13 * (b - a);
    let mut m = 0.5 * (a + b);
    let mut side = 0i8;
    for _ in 0..TOUCH_ITERATIONS {
        if b - a <= width {
            return 0.5 * (a + b);
        }
        m = (a * gb - b * ga) / (gb - ga);
        if !(m > a && m < b) {
            m = 0.5 * (a + b);
        }
        let gm = g(m);
        if gm < 0.0 {
            a = m;
            ga = gm;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else if gm > 0.0 {
            b = m;
            gb = gm;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            return m;
        }
    }
    m
}

/// Gaussian terms below `exp(-Z_CUT^2 / 2)` of the peak are dropped by the
/// recurrence (they would be subnormal).
const Z_CUT: f64 = 37.0;
/// Steps between exact restarts of the exponential recurrence.
const RESEED: usize = 16;

/// [`derivative_samples`] for the Gaussian at `x_j = a + j w`, `j < cells`.
/// Along the grid `exp(-z^2/2)` obeys `g_{j+1} = g_j r_j`, `r_{j+1} = r_j q`,
/// so each term costs a few multiplications.
fn gaussian_block_samples(e: &DensityEstimate, scale: f64, a: f64, w: f64, cells: usize) -> Vec<(f64, f64, f64)> {
    let pts = e.sample().points();
    let h = e.bandwidth();
    let hs = h * scale;
    let delta = w / hs;
    let q = (-delta * delta).exp();
    let mut d1 = vec![0.0; cells];
    let mut d2 = vec![0.0; cells];
    let mut ab = vec![0.0; cells];
    let span = Z_CUT * hs;
    for &xi in pts {
        let jlo = ((xi - span - a) / w).ceil().max(0.0);
        let jhi = ((xi + span - a) / w).floor().min(cells as f64 - 1.0);
        if jhi < jlo {
            continue;
        }
        let (jlo, jhi) = (jlo as usize, jhi as usize);
        let mut j = jlo;
        while j <= jhi {
            let z0 = (a + j as f64 * w - xi) / hs;
            let mut g = (-0.5 * z0 * z0).exp();
            let mut r = (-(z0 * delta + 0.5 * delta * delta)).exp();
            let end = (j + RESEED).min(jhi + 1);
            let mut z = z0;
            for ((s1, s2), sa) in d1[j..end].iter_mut().zip(&mut d2[j..end]).zip(&mut ab[j..end]) {
                let k1 = -z * g;
                *s1 += k1;
                *s2 += (z * z - 1.0) * g;
                *sa += k1.abs();
                g *= r;
                r *= q;
                z += delta;
            }
            j = end;
        }
    }
    let norm = e.kernel().normalizer() / (pts.len() as f64 * h * h);
    let c1 = norm / scale;
    let c2 = norm / (scale * scale * h);
    (0..cells).map(|j| (d1[j] * c1, d2[j] * c2, ab[j] * c1)).collect()
}

/// Sign of `f'(x)` from a direct sum, `None` when within roundoff of zero.
fn direct_sign(e: &DensityEstimate, x: f64) -> Option<Sign> {
    let (v, _, abs) = derivative_samples(e, &[x])[0];
    if abs == 0.0 {
        Some(Sign::Gap)
    } else if v.abs() > FLAT_REL_TOL * abs {
        Some(if v > 0.0 { Sign::Pos } else { Sign::Neg })
    } else {
        None
    }
}

fn grid_sites(e: &DensityEstimate, ppb: u32, tol: f64) -> (Vec<ModeSite>, bool) {
    let sample = e.sample();
    let (lo, hi) = (sample.min(), sample.max());
    let h = e.bandwidth();
    // Sample only where some kernel reaches: f' is exactly zero elsewhere.
    let step = (h / ppb as f64).min((hi - lo) / 64.0);
    let reach = e.kernel().numerical_radius() * h;
    let mut xs: Vec<f64> = Vec::new();
    // cells straddling a knot or a gap get no touch test
    let mut skip_cells: Vec<f64> = Vec::new();
    let mut blocks: Vec<(f64, f64, usize, f64)> = Vec::new();
    let pts = sample.points();
    let mut i = 0;
    while i < pts.len() {
        let a = (pts[i] - reach).max(lo);
        let mut b = pts[i] + reach;
        while i + 1 < pts.len() && pts[i + 1] - reach <= b {
            i += 1;
            b = pts[i] + reach;
        }
        let b = b.min(hi);
        let cells = ((b - a) / step).ceil().max(1.0) as usize;
        let w = (b - a) / cells as f64;
        xs.extend((0..cells).map(|j| a + j as f64 * w));
        xs.push(b);
        skip_cells.push(b);
        blocks.push((a, w, cells, b));
        i += 1;
    }
    // Compact kernels: read one-sided signs next to every knot.
    if kernel_is_compact(e.kernel()) {
        let d = KNOT_OFFSET * h;
        for &p in pts {
            for k in [p - h, p + h] {
                if k - d > lo && k + d < hi {
                    xs.push(k - d);
                    xs.push(k + d);
                    skip_cells.push(k - d);
                }
            }
        }
    }
    skip_cells.sort_by(f64::total_cmp);
    let vals = if let Some(scale) = e.kernel().gaussian_scale() {
        // blocks are disjoint and already in order
        let mut vals = Vec::with_capacity(xs.len());
        for &(a, w, cells, b) in &blocks {
            vals.extend(gaussian_block_samples(e, scale, a, w, cells));
            vals.extend(derivative_samples(e, &[b]));
        }
        vals
    } else {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        derivative_samples(e, &xs)
    };

    let sign_of = |v: f64, abs: f64| -> Option<Sign> {
        if abs == 0.0 {
            Some(Sign::Gap)
        } else if v > 0.0 {
            Some(Sign::Pos)
        } else if v < 0.0 {
            Some(Sign::Neg)
        } else {
            None
        }
    };
    let m = xs.len();
    // numerically flat stretches of at least three samples
    let mut flat = vec![false; m];
    let mut j = 0;
    while j < m {
        let tiny = |k: usize| vals[k].2 > 0.0 && vals[k].0.abs() <= FLAT_REL_TOL * vals[k].2;
        if tiny(j) {
            let start = j;
            while j < m && tiny(j) {
                j += 1;
            }
            if j - start >= 3 {
                flat[start..j].iter_mut().for_each(|f| *f = true);
            }
        } else {
            j += 1;
        }
    }

    let mut samples: Vec<(f64, Option<Sign>)> = Vec::with_capacity(m + 8);
    let mut next_skip = 0usize;
    for k in 0..m {
        let (v, d2, abs) = vals[k];
        let s = if flat[k] { Some(Sign::Flat) } else { sign_of(v, abs) };
        samples.push((xs[k], s));
        if k + 1 == m {
            break;
        }
        while next_skip < skip_cells.len() && skip_cells[next_skip] < xs[k] {
            next_skip += 1;
        }
        if next_skip < skip_cells.len() && skip_cells[next_skip] == xs[k] {
            continue;
        }
        // f' may touch zero between two same-signed samples: |f'| has an
        // interior minimum when s * f'' goes from negative to positive.
        let (v1, d21, abs1) = vals[k + 1];
        let (s0, s1) = (sign_of(v, abs), sign_of(v1, abs1));
        if flat[k] || flat[k + 1] || s0 != s1 || !matches!(s0, Some(Sign::Pos) | Some(Sign::Neg)) {
            continue;
        }
        let sg = if v > 0.0 { 1.0 } else { -1.0 };
        if !(sg * d2 < 0.0 && sg * d21 > 0.0) {
            continue;
        }
        let xm = touch_point(|x| sg * e.eval(2, x), xs[k], xs[k + 1], sg * d2, sg * d21);
        let vm = e.eval(1, xm);
        if sg * vm < 0.0 {
            samples.push((xm, sign_of(vm, 1.0)));
        }
    }

    let mut runs = Runs::new(lo);
    for &(x, s) in &samples {
        if let Some(s) = s {
            runs.push(s, x, x);
        }
    }
    let _ = tol;
    mode_sites(&runs.finish(hi))
}

fn kernel_is_compact(k: &KernelSpec) -> bool {
    k.support_radius().is_some()
}

/// A maximal bandwidth interval with constant mode count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRun {
    pub h_lo: f64,
    pub h_hi: f64,
    pub count: usize,
}

/// A localized change of mode count: `below` just under `h`, `above` just over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Geometric centre of the final bracket.
    pub h: f64,
    pub bracket: (f64, f64),
    pub below: usize,
    pub above: usize,
}

/// Mode counts over an increasing bandwidth grid, with every count change
/// between adjacent grid points localized by bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCountProfile {
    h_grid: Vec<f64>,
    counts: Vec<usize>,
    transitions: Vec<Transition>,
}

impl ModeCountProfile {
    pub(crate) fn from_parts(h_grid: Vec<f64>, counts: Vec<usize>, transitions: Vec<Transition>) -> Self {
        Self {
            h_grid,
            counts,
            transitions,
        }
    }

    pub fn h_grid(&self) -> &[f64] {
        &self.h_grid
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Refined transitions in increasing `h`.
    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Constant-count runs in increasing `h`, bounded by refined transitions.
    pub fn runs(&self) -> Vec<CountRun> {
        let mut runs = Vec::with_capacity(self.transitions.len() + 1);
        let Some(&first) = self.counts.first() else {
            return runs;
        };
        let mut h_lo = self.h_grid[0];
        let mut count = first;
        for t in &self.transitions {
            runs.push(CountRun { h_lo, h_hi: t.h, count });
            h_lo = t.h;
            count = t.above;
        }
        runs.push(CountRun {
            h_lo,
            h_hi: *self.h_grid.last().unwrap(),
            count,
        });
        runs
    }

    /// Run-length compressed counts in increasing `h`.
    pub fn compressed(&self) -> Vec<usize> {
        self.runs().iter().map(|r| r.count).collect()
    }

    /// No count ever rises with `h`.
    pub fn is_nonincreasing(&self) -> bool {
        self.compressed().windows(2).all(|w| w[0] >= w[1])
    }

    /// Count on the run containing `h` (grid range only).
    pub fn count_at(&self, h: f64) -> Option<usize> {
        self.runs()
            .into_iter()
            .find(|r| h >= r.h_lo && h <= r.h_hi)
            .map(|r| r.count)
    }
}

/// Localize every count change inside `[lo, hi]` (counts `clo != chi`) to a
/// bracket of relative width `rel_tol`, appending in increasing `h`.
pub(crate) fn refine_transitions<F>(
    count: &F,
    lo: f64,
    clo: usize,
    hi: f64,
    chi: usize,
    rel_tol: f64,
    out: &mut Vec<Transition>,
) -> Result<()>
where
    F: Fn(f64) -> Result<usize>,
{
    let mid = (lo * hi).sqrt();
    if hi / lo - 1.0 <= rel_tol || mid <= lo || mid >= hi {
        out.push(Transition {
            h: mid,
            bracket: (lo, hi),
            below: clo,
            above: chi,
        });
        return Ok(());
    }
    let cm = count(mid)?;
    if cm != clo {
        refine_transitions(count, lo, clo, mid, cm, rel_tol, out)?;
    }
    if cm != chi {
        refine_transitions(count, mid, cm, hi, chi, rel_tol, out)?;
    }
    Ok(())
}

pub(crate) fn validate_grid(h_grid: &[f64]) -> Result<()> {
    if h_grid.is_empty() {
        return domain("bandwidth grid is empty");
    }
    if h_grid.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return domain("bandwidths must be positive and finite");
    }
    if h_grid.windows(2).any(|w| w[0] >= w[1]) {
        return domain("bandwidth grid must be strictly increasing");
    }
    Ok(())
}

/// Count profile over an increasing grid with transitions refined to
/// relative [`PROFILE_REL_TOL`].
pub fn count_profile(
    sample: &Sample,
    kernel: &KernelSpec,
    h_grid: &[f64],
    method: &CountMethod,
) -> Result<ModeCountProfile> {
    count_profile_with_tol(sample, kernel, h_grid, method, PROFILE_REL_TOL)
}

pub(crate) fn count_profile_with_tol(
    sample: &Sample,
    kernel: &KernelSpec,
    h_grid: &[f64],
    method: &CountMethod,
    rel_tol: f64,
) -> Result<ModeCountProfile> {
    validate_grid(h_grid)?;
    method.validate()?;
    let count = |h: f64| -> Result<usize> { mode_count(&DensityEstimate::new(sample, kernel, h)?, method) };
    let counts = h_grid.par_iter().map(|&h| count(h)).collect::<Result<Vec<_>>>()?;
    let pieces = (0..h_grid.len().saturating_sub(1))
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            if counts[i] != counts[i + 1] {
                refine_transitions(
                    &count,
                    h_grid[i],
                    counts[i],
                    h_grid[i + 1],
                    counts[i + 1],
                    rel_tol,
                    &mut out,
                )?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeCountProfile {
        h_grid: h_grid.to_vec(),
        counts,
        transitions: pieces.into_iter().flatten().collect(),
    })
}

/// `count` points log-spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// `count` points equally spaced from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    fn grid() -> CountMethod {
        CountMethod::grid(4096, 1e-10).unwrap()
    }

    #[test]
    fn gaussian_recurrence_matches_direct_sums() {
        let s = sample(&[-3.0, -1.2, -1.1, 0.0, 0.4, 2.0, 7.5]);
        for scale in [1.0, 1.0 / 3.0] {
            let k = KernelSpec::gaussian(scale).unwrap();
            for h in [0.05, 0.4, 2.0] {
                let e = DensityEstimate::new(&s, &k, h).unwrap();
                let (a, w, cells) = (-4.0, 0.013, 1000);
                let fast = gaussian_block_samples(&e, scale, a, w, cells);
                let xs: Vec<f64> = (0..cells).map(|j| a + j as f64 * w).collect();
                let slow = derivative_samples(&e, &xs);
                // terms past the truncation are below 1e-290 of the peak
                let floor = 1e-250 * slow.iter().map(|d| d.2).fold(0.0, f64::max);
                for (f, d) in fast.iter().zip(&slow) {
                    assert!((f.0 - d.0).abs() <= 1e-9 * d.2 + floor, "h {h}: {f:?} vs {d:?}");
                    assert!(
                        (f.1 - d.1).abs() <= 1e-9 * (d.1.abs() + d.2 / h) + floor / h,
                        "h {h}: {f:?} vs {d:?}"
                    );
                }
            }
        }
    }

    /// Independent oracle: sign changes of a direct-sum derivative on a
    /// dense grid over the data hull, with exact zeros skipped.
    fn dense_oracle(s: &Sample, k: &KernelSpec, h: f64, points: usize) -> Vec<f64> {
        let (lo, hi) = (s.min(), s.max());
        let fp = |x: f64| s.points().iter().map(|&xi| k.deriv1((x - xi) / h)).sum::<f64>();
        let mut prev = 1.0f64;
        let mut prev_x = lo - 1e-9 * h;
        let mut modes = Vec::new();
        for i in 0..=points {
            let x = lo + (hi - lo) * i as f64 / points as f64;
            let v = fp(x);
            if v == 0.0 {
                continue;
            }
            if prev > 0.0 && v < 0.0 {
                modes.push(0.5 * (prev_x + x));
            }
            prev = v;
            prev_x = x;
        }
        if prev > 0.0 {
            modes.push(hi);
        }
        modes
    }

    #[test]
    fn method_parse_roundtrip() {
        for m in [
            CountMethod::Exact,
            CountMethod::default(),
            CountMethod::grid(64, 1e-8).unwrap(),
        ] {
            assert_eq!(m.to_string().parse::<CountMethod>().unwrap(), m);
        }
        assert!("grid:8".parse::<CountMethod>().is_err());
        assert!("fft".parse::<CountMethod>().is_err());
        assert_eq!("grid".parse::<CountMethod>().unwrap(), CountMethod::default());
    }

    #[test]
    fn spacing_regime_three_points() {
        let s = sample(&[-1.0, 0.0, 1.0]);
        let k = KernelSpec::biweight();
        let e = DensityEstimate::new(&s, &k, 0.4).unwrap();
        for m in [CountMethod::Exact, grid()] {
            let ms = count_modes(&e, &m).unwrap();
            assert_eq!(ms.count(), 3);
            for (got, want) in ms.locations().iter().zip([-1.0, 0.0, 1.0]) {
                assert!((got - want).abs() < 1e-9, "{got} vs {want}");
            }
            assert!(ms.modes().iter().all(|m| m.height > 0.0));
        }
    }

    #[test]
    fn isolated_bumps_high_theta() {
        // Every piece of f' is a lone kernel derivative with roots of
        // multiplicity theta - 1 at both ends.
        let s = sample(&[-1.0, 0.0, 1.0]);
        for theta in 1..=12 {
            let k = KernelSpec::multiweight(theta as f64).unwrap();
            for h in [0.3, 0.45, 0.5] {
                let e = DensityEstimate::new(&s, &k, h).unwrap();
                for m in [CountMethod::Exact, grid()] {
                    let ms = count_modes(&e, &m).unwrap();
                    assert_eq!(ms.count(), 3, "theta={theta} h={h} {m}");
                }
            }
        }
    }

    #[test]
    fn single_point_any_kernel() {
        let s = sample(&[0.0]);
        for k in [
            KernelSpec::epanechnikov(),
            KernelSpec::multiweight(0.3).unwrap(),
            KernelSpec::gaussian(1.0).unwrap(),
        ] {
            for h in [0.01, 1.0, 50.0] {
                let e = DensityEstimate::new(&s, &k, h).unwrap();
                let ms = count_modes(&e, &CountMethod::default()).unwrap();
                assert_eq!(ms.count(), 1);
                assert_eq!(ms.locations(), vec![0.0]);
            }
        }
    }

    #[test]
    fn epanechnikov_false_modes_at_halves() {
        let s = sample(&[-1.0, 0.0, 1.0]);
        let k = KernelSpec::epanechnikov();
        let e = DensityEstimate::new(&s, &k, 0.75).unwrap();
        let oracle = dense_oracle(&s, &k, 0.75, 100_000);
        assert_eq!(oracle.len(), 5);
        for m in [CountMethod::Exact, grid()] {
            let ms = count_modes(&e, &m).unwrap();
            assert_eq!(ms.count(), 5, "{m}");
            for (got, want) in ms.locations().iter().zip([-1.0, -0.5, 0.0, 0.5, 1.0]) {
                assert!((got - want).abs() < 1e-4, "{got} vs {want}");
            }
            for (got, want) in ms.locations().iter().zip(&oracle) {
                assert!((got - want).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn two_points_below_half_spacing() {
        let s = sample(&[0.0, 1.0]);
        let k = KernelSpec::triweight();
        let e = DensityEstimate::new(&s, &k, 0.45).unwrap();
        assert_eq!(count_modes(&e, &CountMethod::Exact).unwrap().count(), 2);
        assert_eq!(count_modes(&e, &grid()).unwrap().count(), 2);
    }

    #[test]
    fn exact_requires_polynomial_kernel() {
        let s = sample(&[0.0, 1.0]);
        let k = KernelSpec::gaussian(1.0).unwrap();
        let e = DensityEstimate::new(&s, &k, 0.5).unwrap();
        assert!(matches!(
            count_modes(&e, &CountMethod::Exact),
            Err(Error::RepresentationUnavailable(_))
        ));
        let bad = CountMethod::Grid {
            points_per_bandwidth: 8,
            refine_tolerance: 1e-10,
        };
        assert!(count_modes(&e, &bad).is_err());
    }

    #[test]
    fn exact_and_grid_agree_with_oracle_on_fixed_cases() {
        let cases: &[(&[f64], u32, f64)] = &[
            (&[-1.0, 0.0, 1.0], 2, 0.9),
            (&[-1.0, 0.0, 1.0], 2, 1.2),
            (&[-1.0, 0.0, 1.0], 3, 1.1),
            (&[0.1, 0.35, 0.4, 1.3, 2.0], 1, 0.3),
            (&[0.1, 0.35, 0.4, 1.3, 2.0], 3, 0.41),
        ];
        for &(pts, theta, h) in cases {
            let s = sample(pts);
            let k = KernelSpec::multiweight(theta as f64).unwrap();
            let e = DensityEstimate::new(&s, &k, h).unwrap();
            let oracle = dense_oracle(&s, &k, h, 200_000).len();
            assert_eq!(
                count_modes(&e, &CountMethod::Exact).unwrap().count(),
                oracle,
                "{pts:?} {theta} {h}"
            );
            assert_eq!(count_modes(&e, &grid()).unwrap().count(), oracle, "{pts:?} {theta} {h}");
        }
    }

    #[test]
    fn six_modes_fractional_theta() {
        let s = sample(&[-1.0, 0.0, 1.0]);
        let k = KernelSpec::multiweight(2.5).unwrap();
        let e = DensityEstimate::new(&s, &k, 1.02).unwrap();
        let ms = count_modes(&e, &CountMethod::grid(8192, 1e-12).unwrap()).unwrap();
        assert_eq!(ms.count(), 6);
        assert!(!ms.degenerate());
    }

    #[test]
    fn profiles_of_three_points() {
        let s = sample(&[-1.0, 0.0, 1.0]);
        let g = log_grid(0.05, 3.0, 256);
        let want: [(KernelSpec, Vec<usize>); 3] = [
            (KernelSpec::epanechnikov(), vec![3, 5, 3, 1]),
            (KernelSpec::biweight(), vec![3, 5, 2, 3, 1]),
            (KernelSpec::triweight(), vec![3, 4, 2, 1]),
        ];
        for (k, seq) in want {
            let p = count_profile(&s, &k, &g, &CountMethod::Exact).unwrap();
            assert_eq!(p.compressed(), seq, "{k}");
        }
        let gk = KernelSpec::gaussian(1.0 / 3.0).unwrap();
        let p = count_profile(&s, &gk, &g, &CountMethod::default()).unwrap();
        assert!(p.is_nonincreasing(), "{:?}", p.compressed());
        assert_eq!(p.compressed().first(), Some(&3));
        assert_eq!(p.compressed().last(), Some(&1));
    }

    #[test]
    fn epanechnikov_pair_transitions() {
        let s = sample(&[0.0, 1.0]);
        let p = count_profile(
            &s,
            &KernelSpec::epanechnikov(),
            &log_grid(0.1, 4.0, 64),
            &CountMethod::Exact,
        )
        .unwrap();
        assert_eq!(p.compressed(), vec![2, 3, 1]);
        let t = p.transitions();
        assert!((t[0].h - 0.5).abs() < 1e-6);
        assert!((t[1].h - 1.0).abs() < 1e-6);
        assert!(t.iter().all(|t| t.bracket.1 / t.bracket.0 - 1.0 <= PROFILE_REL_TOL));
    }

    #[test]
    fn profile_validates_grid() {
        let s = sample(&[0.0, 1.0]);
        let k = KernelSpec::biweight();
        assert!(count_profile(&s, &k, &[], &CountMethod::Exact).is_err());
        assert!(count_profile(&s, &k, &[1.0, 0.5], &CountMethod::Exact).is_err());
        assert!(count_profile(&s, &k, &[0.0, 0.5], &CountMethod::Exact).is_err());
    }

    #[test]
    fn grids() {
        let g = log_grid(0.1, 10.0, 3);
        assert!((g[1] - 1.0).abs() < 1e-15 && g[2] == 10.0);
        assert_eq!(linear_grid(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
