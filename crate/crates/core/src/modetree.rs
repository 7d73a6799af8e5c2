//! Mode trees (mode locations tracked across a decreasing bandwidth grid)
//! and the mode-count matrix over `(theta, h)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::estimator::{DensityEstimate, Sample};
use crate::kernels::KernelSpec;
use crate::modecount::{count_modes, mode_count, CountMethod};

/// One mode followed from the bandwidth where it appears down to the
/// bandwidth where it is last seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTrack {
    pub id: usize,
    pub parent: Option<usize>,
    /// Largest grid bandwidth at which the track is live.
    pub birth: f64,
    /// Smallest grid bandwidth at which the track is live.
    pub death: f64,
    /// `(h, location)` in grid order.
    pub path: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTree {
    tracks: Vec<ModeTrack>,
    /// Strictly decreasing.
    h_grid: Vec<f64>,
}

impl ModeTree {
    pub fn tracks(&self) -> &[ModeTrack] {
        &self.tracks
    }

    pub fn h_grid(&self) -> &[f64] {
        &self.h_grid
    }

    /// Number of live tracks at each grid bandwidth.
    pub fn live_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.h_grid.len()];
        for t in &self.tracks {
            for (k, &h) in self.h_grid.iter().enumerate() {
                if h <= t.birth && h >= t.death {
                    c[k] += 1;
                }
            }
        }
        c
    }

    /// Tracks that start below the top of the grid and end above its
    /// bottom, i.e. open and close again as `h` increases.
    pub fn transient_tracks(&self) -> Vec<&ModeTrack> {
        let (top, bottom) = (self.h_grid[0], *self.h_grid.last().expect("nonempty grid"));
        self.tracks
            .iter()
            .filter(|t| t.death > bottom && t.birth < top)
            .collect()
    }
}

/// Matching radius for a mode at `x` given the neighbouring modes.
fn threshold(x: f64, prev: &[f64], cur: &[f64], dh: f64, fallback: f64) -> f64 {
    let spacing = prev
        .iter()
        .chain(cur)
        .map(|&y| (y - x).abs())
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let spacing = if spacing.is_finite() { spacing } else { fallback };
    1.5 * (dh + spacing)
}

pub fn build_mode_tree(sample: &Sample, kernel: &KernelSpec, h_grid: &[f64], method: &CountMethod) -> Result<ModeTree> {
    if h_grid.len() < 2 {
        return domain("a mode tree needs at least two bandwidths");
    }
    if h_grid.windows(2).any(|w| !(w[1] < w[0])) || !(h_grid[h_grid.len() - 1] > 0.0) {
        return domain("mode-tree bandwidths must be positive and strictly decreasing");
    }
    let locations = h_grid
        .par_iter()
        .map(|&h| Ok(count_modes(&DensityEstimate::new(sample, kernel, h)?, method)?.locations()))
        .collect::<Result<Vec<_>>>()?;

    let fallback = sample.range().max(h_grid[0]);
    let mut tracks: Vec<ModeTrack> = Vec::new();
    // track id of each mode at the previous bandwidth
    let mut live: Vec<usize> = Vec::new();
    for (k, (&h, cur)) in h_grid.iter().zip(&locations).enumerate() {
        let mut owner: Vec<Option<usize>> = vec![None; cur.len()];
        if k > 0 {
            let prev = &locations[k - 1];
            let dh = h_grid[k - 1] - h;
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (i, &p) in prev.iter().enumerate() {
                let r = threshold(p, prev, cur, dh, fallback);
                for (j, &c) in cur.iter().enumerate() {
                    let d = (c - p).abs();
                    if d < r {
                        pairs.push((d, i, j));
                    }
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut used = vec![false; prev.len()];
            for (_, i, j) in pairs {
                if !used[i] && owner[j].is_none() {
                    used[i] = true;
                    owner[j] = Some(live[i]);
                }
            }
        }
        let matched: Vec<(f64, usize)> = cur.iter().zip(&owner).filter_map(|(&x, o)| o.map(|t| (x, t))).collect();
        let mut next = Vec::with_capacity(cur.len());
        for (j, &x) in cur.iter().enumerate() {
            let id = match owner[j] {
                Some(id) => id,
                None => {
                    let parent = if k == 0 {
                        None
                    } else {
                        let pool: Vec<(f64, usize)> = if matched.is_empty() {
                            locations[k - 1].iter().copied().zip(live.iter().copied()).collect()
                        } else {
                            matched.clone()
                        };
                        pool.iter()
                            .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
                            .map(|&(_, t)| t)
                    };
                    tracks.push(ModeTrack {
                        id: tracks.len(),
                        parent,
                        birth: h,
                        death: h,
                        path: Vec::new(),
                    });
                    tracks.len() - 1
                }
            };
            tracks[id].path.push((h, x));
            tracks[id].death = h;
            next.push(id);
        }
        live = next;
    }
    Ok(ModeTree {
        tracks,
        h_grid: h_grid.to_vec(),
    })
}

/// Mode counts over a `(theta, h)` grid; rows follow `h_grid`, columns
/// follow `theta_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpaceMatrix {
    pub theta_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    pub counts: Vec<Vec<usize>>,
}

impl ModeSpaceMatrix {
    pub fn get(&self, h_index: usize, theta_index: usize) -> usize {
        self.counts[h_index][theta_index]
    }

    /// Counts down the column for `theta_grid[theta_index]`, in `h_grid` order.
    pub fn column(&self, theta_index: usize) -> Vec<usize> {
        self.counts.iter().map(|row| row[theta_index]).collect()
    }

    /// Index of the grid value closest to `theta`.
    pub fn nearest_theta(&self, theta: f64) -> usize {
        (0..self.theta_grid.len())
            .min_by(|&a, &b| {
                (self.theta_grid[a] - theta)
                    .abs()
                    .total_cmp(&(self.theta_grid[b] - theta).abs())
            })
            .expect("nonempty grid")
    }

    /// Cells `(h, theta, count)` inside the box.
    pub fn cells_within(&self, theta: (f64, f64), h: (f64, f64)) -> Vec<(f64, f64, usize)> {
        let mut out = Vec::new();
        for (i, &hv) in self.h_grid.iter().enumerate() {
            if hv < h.0 || hv > h.1 {
                continue;
            }
            for (j, &t) in self.theta_grid.iter().enumerate() {
                if t >= theta.0 && t <= theta.1 {
                    out.push((hv, t, self.counts[i][j]));
                }
            }
        }
        out
    }
}

fn sorted_positive(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return domain(format!("empty {what} grid"));
    }
    if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) || v.windows(2).any(|w| !(w[0] < w[1])) {
        return domain(format!("{what} grid must be positive and strictly increasing"));
    }
    Ok(())
}

/// Mode counts for the multiweight kernels `theta_grid` at bandwidths
/// `h_grid`. Integer `theta` columns are counted exactly; the rest use
/// `method`.
pub fn mode_space(
    sample: &Sample,
    theta_grid: &[f64],
    h_grid: &[f64],
    method: &CountMethod,
) -> Result<ModeSpaceMatrix> {
    sorted_positive(theta_grid, "theta")?;
    sorted_positive(h_grid, "bandwidth")?;
    method.validate()?;
    let kernels = theta_grid
        .iter()
        .map(|&t| {
            let k = KernelSpec::multiweight(t)?;
            let m = CountMethod::best_for(&k, *method);
            Ok((k, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = theta_grid.len();
    let flat = (0..h_grid.len() * cols)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / cols, idx % cols);
            let (k, m) = &kernels[j];
            mode_count(&DensityEstimate::new(sample, k, h_grid[i])?, m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeSpaceMatrix {
        theta_grid: theta_grid.to_vec(),
        h_grid: h_grid.to_vec(),
        counts: flat.chunks(cols).map(<[usize]>::to_vec).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modecount::{linear_grid, log_grid};

    fn three() -> Sample {
        Sample::new(vec![-1.0, 0.0, 1.0]).unwrap()
    }

    fn descending(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mut g = log_grid(lo, hi, n);
        g.reverse();
        g
    }

    #[test]
    fn single_point_single_track() {
        let s = Sample::new(vec![0.3]).unwrap();
        for k in [KernelSpec::biweight(), KernelSpec::gaussian(1.0).unwrap()] {
            let t = build_mode_tree(&s, &k, &descending(0.1, 2.0, 30), &CountMethod::default()).unwrap();
            assert_eq!(t.tracks().len(), 1);
            assert_eq!(t.tracks()[0].path.len(), 30);
        }
    }

    #[test]
    fn live_tracks_match_counts() {
        let grid = descending(0.05, 3.0, 160);
        for k in [
            KernelSpec::epanechnikov(),
            KernelSpec::biweight(),
            KernelSpec::triweight(),
        ] {
            let t = build_mode_tree(&three(), &k, &grid, &CountMethod::Exact).unwrap();
            let want: Vec<usize> = grid
                .iter()
                .map(|&h| mode_count(&DensityEstimate::new(&three(), &k, h).unwrap(), &CountMethod::Exact).unwrap())
                .collect();
            assert_eq!(t.live_counts(), want, "{}", k.name());
        }
    }

    #[test]
    fn biweight_false_modes_near_halves() {
        let grid = descending(0.05, 3.0, 400);
        let t = build_mode_tree(&three(), &KernelSpec::biweight(), &grid, &CountMethod::Exact).unwrap();
        let born_near = |x: f64| {
            t.tracks()
                .iter()
                .any(|tr| tr.parent.is_some() && (tr.path[0].1 - x).abs() < 0.1)
        };
        assert!(born_near(0.5) && born_near(-0.5));
    }

    #[test]
    fn gaussian_tracks_only_merge() {
        let grid = descending(0.05, 3.0, 200);
        let k = KernelSpec::gaussian(1.0 / 3.0).unwrap();
        let t = build_mode_tree(&three(), &k, &grid, &CountMethod::default()).unwrap();
        assert!(t.transient_tracks().is_empty());
        assert!(t.live_counts().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_bad_grids() {
        let k = KernelSpec::biweight();
        assert!(build_mode_tree(&three(), &k, &[1.0], &CountMethod::Exact).is_err());
        assert!(build_mode_tree(&three(), &k, &[1.0, 2.0], &CountMethod::Exact).is_err());
        assert!(mode_space(&three(), &[0.0, 1.0], &[1.0], &CountMethod::Exact).is_err());
        assert!(mode_space(&three(), &[1.0], &[2.0, 1.0], &CountMethod::Exact).is_err());
    }

    #[test]
    fn small_mode_space() {
        let thetas = [1.0, 2.0, 2.5, 3.0];
        let hs = linear_grid(0.02, 3.0, 120);
        let m = mode_space(&three(), &thetas, &hs, &CountMethod::grid(1024, 1e-10).unwrap()).unwrap();
        for (i, &h) in hs.iter().enumerate() {
            if h <= 0.5 {
                assert!(m.counts[i].iter().all(|&c| c == 3));
            }
        }
        let mut col = m.column(0);
        col.reverse();
        col.dedup();
        assert_eq!(col, vec![1, 3, 5, 3]);
    }
}
