//! Subcommand implementations. Each returns the files it would write and the
//! checks it evaluated; nothing touches the filesystem here except reading
//! `--input`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use critband::export::{self, csv, curve_csv, real};
use critband::modecount::{linear_grid, mode_count};
use critband::rng::derive_seed;
use critband::silverman::{level_points, median, replicate_exceedances, scaling_experiment, smooth_level_curve};
use critband::{
    build_mode_tree, count_modes, count_profile, critical_bandwidth, log_grid, mode_space, silverman_test,
    BootstrapConfig, CountMethod, DensityEstimate, KernelSpec, LevelPoint, Sample, SamplingDensity,
};
use serde::Serialize;

use crate::config::{Command, DataArgs, Format, HGridArgs, RunConfig};

/// Grid resolution for Gaussian critical-bandwidth searches in experiments.
pub const EXPERIMENT_POINTS_PER_BANDWIDTH: u32 = 32;
/// Levels at which the bootstrap test is scored: 0.01, 0.02, ..., 1.
pub const LEVEL_COUNT: usize = 100;
/// Levels at which test conservatism is checked.
pub const CHECK_LEVELS: [f64; 3] = [0.05, 0.1, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// `(file name, contents)`
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub summary: Vec<String>,
}

impl Outcome {
    fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_str())
    }

    /// Write the files whose extension is among `formats` into `dir`.
    pub fn write(&self, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let keep = formats.iter().any(|f| name.ends_with(&format!(".{}", f.extension())));
            if keep {
                let path = dir.join(name);
                fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

fn load(d: &DataArgs, default: Option<&[f64]>) -> Result<Sample> {
    let mut points = d.data.clone();
    if let Some(p) = &d.input {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        points.extend_from_slice(Sample::parse_text(&text)?.points());
    }
    if points.is_empty() {
        match default {
            Some(v) => points = v.to_vec(),
            None => bail!("no data: pass --input <file> or --data <x1,x2,...>"),
        }
    }
    Ok(Sample::new(points)?)
}

/// Counting method for one kernel: `--method` when given, else exact for
/// integer theta and `fallback` otherwise.
fn method_for(cfg: &RunConfig, k: &KernelSpec, fallback: CountMethod) -> CountMethod {
    cfg.method.unwrap_or_else(|| CountMethod::best_for(k, fallback))
}

fn experiment_grid() -> CountMethod {
    CountMethod::grid(EXPERIMENT_POINTS_PER_BANDWIDTH, 1e-10).expect("valid grid")
}

fn bootstrap_config(cfg: &RunConfig, resamples: usize, alpha: f64, seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        resamples,
        alpha,
        seed,
        method: cfg.method.unwrap_or_else(experiment_grid),
        prefer_exact: cfg.method.is_none(),
        grid_density: cfg.grid_density,
    }
}

/// File-name friendly kernel label.
pub fn label(k: &KernelSpec) -> String {
    k.to_string().replace(':', "-")
}

fn kernel_or(cfg: &RunConfig, default: KernelSpec) -> KernelSpec {
    cfg.kernel.clone().unwrap_or(default)
}

fn standard_kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::epanechnikov(),
        KernelSpec::biweight(),
        KernelSpec::triweight(),
        KernelSpec::gaussian(1.0).expect("valid scale"),
    ]
}

fn ascending_grid(g: &HGridArgs) -> Result<Vec<f64>> {
    if !(g.h_min > 0.0 && g.h_max > g.h_min && g.h_count >= 2) {
        bail!("bandwidth grid needs 0 < h-min < h-max and at least two points");
    }
    Ok(log_grid(g.h_min, g.h_max, g.h_count))
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match &cfg.command {
        Command::Modes { data, bandwidth } => run_modes(cfg, &load(data, None)?, *bandwidth),
        Command::Profile { data, grid } => run_profile(cfg, &load(data, None)?, grid),
        Command::Tree { data, grid } => run_tree(cfg, &load(data, None)?, grid),
        Command::Modespace {
            data,
            theta_min,
            theta_max,
            theta_count,
            h_min,
            h_max,
            h_count,
        } => {
            if *theta_count < 1 || *h_count < 1 {
                bail!("grids need at least one point");
            }
            let thetas = linear_grid(*theta_min, *theta_max, *theta_count);
            let hs = linear_grid(*h_min, *h_max, *h_count);
            run_modespace(cfg, &load(data, None)?, &thetas, &hs, "modespace")
        }
        Command::Critical { data } => run_critical(cfg, &load(data, None)?),
        Command::Test { data, resamples, alpha } => run_test(cfg, &load(data, None)?, *resamples, *alpha),
        Command::Fig1 { data, grid } => run_fig1(cfg, &load(data, Some(&[-1.0, 0.0, 1.0]))?, grid),
        Command::Fig2 {
            theta_count,
            h_min,
            h_max,
            h_count,
        } => run_fig2(cfg, *theta_count, *h_min, *h_max, *h_count),
        Command::Fig3 { theta, bandwidth } => run_fig3(cfg, *theta, *bandwidth),
        Command::Fig4 { sizes, replicates } => run_fig4(cfg, sizes, *replicates),
        Command::Fig5 {
            n,
            replicates,
            resamples,
            smooth,
            power_n,
            power_replicates,
            power_separation,
        } => run_fig5(
            cfg,
            &Fig5Plan {
                n: *n,
                replicates: *replicates,
                resamples: *resamples,
                smooth: *smooth,
                power_n: *power_n,
                power_replicates: *power_replicates,
                power_separation: *power_separation,
            },
        ),
        Command::Scaling {
            sizes,
            replicates,
            density,
            ci_resamples,
        } => run_scaling(cfg, sizes, *replicates, density, *ci_resamples),
    }
}

fn run_modes(cfg: &RunConfig, s: &Sample, h: f64) -> Result<Outcome> {
    let k = kernel_or(cfg, KernelSpec::epanechnikov());
    let e = DensityEstimate::new(s, &k, h)?;
    let m = count_modes(&e, &method_for(cfg, &k, CountMethod::default()))?;
    let mut out = Outcome::default();
    out.file(
        "modes.csv",
        csv(
            &["location", "height"],
            m.modes().iter().map(|md| vec![real(md.location), real(md.height)]),
        ),
    );
    out.file("modes.json", export::json(&m)?);
    out.note(format!("{} modes at h = {h} ({k})", m.count()));
    Ok(out)
}

fn profile_svg(p: &critband::ModeCountProfile, title: &str) -> String {
    let pts: Vec<(f64, f64)> = p
        .h_grid()
        .iter()
        .zip(p.counts())
        .map(|(&h, &c)| (h.ln(), c as f64))
        .collect();
    export::curves_svg(&[("mode count".to_string(), pts)], title, "log h", "modes", false)
}

fn run_profile(cfg: &RunConfig, s: &Sample, g: &HGridArgs) -> Result<Outcome> {
    let k = kernel_or(cfg, KernelSpec::epanechnikov());
    let p = count_profile(s, &k, &ascending_grid(g)?, &method_for(cfg, &k, CountMethod::default()))?;
    let mut out = Outcome::default();
    out.file("profile.csv", export::profile_csv(&p));
    out.file("transitions.csv", export::transitions_csv(&p));
    out.file("profile.json", export::json(&p)?);
    out.file("profile.svg", profile_svg(&p, &format!("mode count, {k}")));
    out.note(format!("compressed profile (increasing h): {:?}", p.compressed()));
    Ok(out)
}

fn run_tree(cfg: &RunConfig, s: &Sample, g: &HGridArgs) -> Result<Outcome> {
    let k = kernel_or(cfg, KernelSpec::epanechnikov());
    let mut grid = ascending_grid(g)?;
    grid.reverse();
    let t = build_mode_tree(s, &k, &grid, &method_for(cfg, &k, CountMethod::default()))?;
    let mut out = Outcome::default();
    out.file("tree_edges.csv", export::mode_tree_edges_csv(&t));
    out.file("tree_paths.csv", export::mode_tree_paths_csv(&t));
    out.file("tree.json", export::json(&t)?);
    out.file("tree.svg", export::mode_tree_svg(&t, &format!("mode tree, {k}")));
    out.note(format!("{} tracks", t.tracks().len()));
    Ok(out)
}

fn run_modespace(cfg: &RunConfig, s: &Sample, thetas: &[f64], hs: &[f64], stem: &str) -> Result<Outcome> {
    let m = mode_space(s, thetas, hs, &cfg.method.unwrap_or_default())?;
    let mut out = Outcome::default();
    out.file(format!("{stem}.csv"), export::mode_space_csv(&m));
    out.file(format!("{stem}.json"), export::json(&m)?);
    out.file(format!("{stem}.svg"), export::mode_space_svg(&m, "mode space"));
    let max = m.counts.iter().flatten().max().copied().unwrap_or(0);
    out.note(format!("{} x {} cells, largest count {max}", hs.len(), thetas.len()));
    Ok(out)
}

fn run_critical(cfg: &RunConfig, s: &Sample) -> Result<Outcome> {
    let k = kernel_or(cfg, KernelSpec::epanechnikov());
    let r = critical_bandwidth(s, &k, &method_for(cfg, &k, experiment_grid()), cfg.grid_density)?;
    let mut out = Outcome::default();
    out.file("critical.json", export::json(&r)?);
    out.file("critical_profile.csv", export::profile_csv(&r.profile));
    out.file("critical_transitions.csv", export::transitions_csv(&r.profile));
    out.file(
        "critical_profile.svg",
        profile_svg(&r.profile, &format!("mode count, {k}")),
    );
    out.note(format!(
        "h_crit = {}, h_nonm = {}, log R = {}",
        real(r.h_crit),
        export::opt_real(r.h_nonm),
        export::opt_real(r.log_ratio())
    ));
    Ok(out)
}

fn run_test(cfg: &RunConfig, s: &Sample, resamples: usize, alpha: f64) -> Result<Outcome> {
    let k = kernel_or(cfg, KernelSpec::epanechnikov());
    let r = silverman_test(s, &k, &bootstrap_config(cfg, resamples, alpha, cfg.seed))?;
    let mut out = Outcome::default();
    out.file("test.json", export::json(&r)?);
    out.file(
        "test_hstar.csv",
        csv(
            &["resample", "h_star"],
            r.per_replicate_hstar
                .iter()
                .enumerate()
                .map(|(i, &h)| vec![i.to_string(), real(h)]),
        ),
    );
    out.note(format!(
        "h_crit = {}, exceedance = {}, {} unimodality at level {alpha}",
        real(r.h_crit),
        r.exceedance,
        if r.reject { "reject" } else { "do not reject" }
    ));
    Ok(out)
}

/// Count profiles of {-1, 0, 1} as `h` increases.
pub const FIG1_PROFILES: [(&str, &[usize]); 3] = [
    ("epan", &[3, 5, 3, 1]),
    ("biweight", &[3, 5, 2, 3, 1]),
    ("triweight", &[3, 4, 2, 1]),
];

fn run_fig1(cfg: &RunConfig, s: &Sample, g: &HGridArgs) -> Result<Outcome> {
    let kernels = match cfg.kernel.clone() {
        Some(k) => vec![k],
        None => vec![
            KernelSpec::epanechnikov(),
            KernelSpec::biweight(),
            KernelSpec::triweight(),
            KernelSpec::gaussian(1.0 / 3.0)?,
        ],
    };
    let grid = ascending_grid(g)?;
    let mut desc = grid.clone();
    desc.reverse();
    let is_default = s.points() == [-1.0, 0.0, 1.0];
    let mut out = Outcome::default();
    let mut summary = Vec::new();
    for k in &kernels {
        let name = if k.is_gaussian() {
            "gaussian".to_string()
        } else {
            label(k)
        };
        let m = method_for(cfg, k, CountMethod::default());
        let p = count_profile(s, k, &grid, &m)?;
        let t = build_mode_tree(s, k, &desc, &m)?;
        let mut live = t.live_counts();
        live.reverse();
        out.check(format!("fig1 {name}: tree tracks match counts"), live == p.counts(), "");
        if k.is_gaussian() {
            out.check(
                format!("fig1 {name}: profile nonincreasing"),
                p.is_nonincreasing(),
                format!("{:?}", p.compressed()),
            );
            out.check(
                format!("fig1 {name}: no track opens and closes"),
                t.transient_tracks().is_empty(),
                "",
            );
        } else if let Some((_, want)) = FIG1_PROFILES.iter().find(|(l, _)| *l == name) {
            if is_default {
                out.check(
                    format!("fig1 {name}: profile {want:?}"),
                    p.compressed() == *want,
                    format!("got {:?}", p.compressed()),
                );
            }
        }
        out.file(format!("fig1_{name}_profile.csv"), export::profile_csv(&p));
        out.file(format!("fig1_{name}_transitions.csv"), export::transitions_csv(&p));
        out.file(format!("fig1_{name}_edges.csv"), export::mode_tree_edges_csv(&t));
        out.file(format!("fig1_{name}_paths.csv"), export::mode_tree_paths_csv(&t));
        out.file(
            format!("fig1_{name}.svg"),
            export::mode_tree_svg(&t, &format!("mode tree, {k}")),
        );
        out.note(format!("{name}: {:?}", p.compressed()));
        summary.push(
            serde_json::json!({ "kernel": k.to_string(), "profile": p.compressed(), "tracks": t.tracks().len() }),
        );
    }
    out.file("fig1.json", serde_json::to_string_pretty(&summary)? + "\n");
    Ok(out)
}

/// `theta_max * k / count` for `k = 1..=count`; integer values come out exact.
pub fn theta_grid(theta_max: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| theta_max * k as f64 / count as f64).collect()
}

fn compress(v: &[usize]) -> Vec<usize> {
    let mut c = v.to_vec();
    c.dedup();
    c
}

fn run_fig2(cfg: &RunConfig, theta_count: usize, h_min: f64, h_max: f64, h_count: usize) -> Result<Outcome> {
    if theta_count < 1 || h_count < 2 || !(h_min > 0.0 && h_max > h_min) {
        bail!("fig2 needs a nonempty theta grid and 0 < h-min < h-max with two or more bandwidths");
    }
    let s = Sample::new(vec![-1.0, 0.0, 1.0])?;
    let thetas = theta_grid(12.0, theta_count);
    let hs = linear_grid(h_min, h_max, h_count);
    let m = mode_space(&s, &thetas, &hs, &cfg.method.unwrap_or_default())?;
    let mut out = Outcome::default();
    out.check(
        "fig2: matrix dimensions",
        m.counts.len() == h_count && m.counts.iter().all(|r| r.len() == theta_count),
        format!("{} x {}", m.counts.len(), m.counts.first().map_or(0, Vec::len)),
    );
    let pocket = m.cells_within((2.3, 2.7), (0.95, 1.10));
    let six = pocket.iter().filter(|c| c.2 == 6).count();
    out.check("fig2: six-mode cell near (2.5, 1.02)", six > 0, format!("{six} cells"));
    let j12 = m.nearest_theta(12.0);
    let col12 = m.column(j12);
    out.check(
        "fig2: theta = 12 column nonincreasing in h",
        col12.windows(2).all(|w| w[1] <= w[0]),
        format!("{:?}", compress(&col12)),
    );
    let j1 = m.nearest_theta(1.0);
    if m.theta_grid[j1] == 1.0 {
        let mut col1 = m.column(j1);
        col1.reverse();
        let c = compress(&col1);
        out.check(
            "fig2: theta = 1 column reads [1, 3, 5, 3] downward",
            c == [1, 3, 5, 3],
            format!("{c:?}"),
        );
    }
    let low_rows_ok = hs
        .iter()
        .zip(&m.counts)
        .filter(|(&h, _)| h <= 0.5)
        .all(|(_, row)| row.iter().all(|&c| c == 3));
    out.check("fig2: three modes for h <= 1/2", low_rows_ok, "");
    out.file("fig2_modespace.csv", export::mode_space_csv(&m));
    out.file("fig2_modespace.json", export::json(&m)?);
    out.file(
        "fig2_modespace.svg",
        export::mode_space_svg(&m, "mode space of {-1, 0, 1}"),
    );
    out.note(format!(
        "{h_count} x {theta_count} cells; {six} six-mode cells in the pocket"
    ));
    Ok(out)
}

/// Height above the higher of the neighbouring minima (zero beyond the
/// outermost modes).
fn prominences(e: &DensityEstimate, locations: &[f64]) -> Vec<f64> {
    let dip = |a: f64, b: f64| {
        (0..=4000)
            .map(|i| e.eval(0, a + (b - a) * i as f64 / 4000.0))
            .fold(f64::INFINITY, f64::min)
    };
    let dips: Vec<f64> = locations.windows(2).map(|w| dip(w[0], w[1])).collect();
    locations
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let left = if i == 0 { 0.0 } else { dips[i - 1] };
            let right = if i + 1 == locations.len() { 0.0 } else { dips[i] };
            e.eval(0, x) - left.max(right)
        })
        .collect()
}

fn run_fig3(cfg: &RunConfig, theta: f64, h: f64) -> Result<Outcome> {
    let s = Sample::new(vec![-1.0, 0.0, 1.0])?;
    let k = KernelSpec::multiweight(theta)?;
    let method = cfg.method.unwrap_or(CountMethod::grid(8192, 1e-12)?);
    let e = DensityEstimate::new(&s, &k, h)?;
    let modes = count_modes(&e, &method)?;
    let locs = modes.locations();
    let prom = prominences(&e, &locs);
    let mut out = Outcome::default();
    let is_default = theta == 2.5 && h == 1.02;
    if is_default {
        out.check(
            "fig3: six modes",
            modes.count() == 6,
            format!("{} modes", modes.count()),
        );
        let (lo, hi) = prom
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &p| (a.min(p), b.max(p)));
        out.check(
            "fig3: mode prominences span more than an order of magnitude",
            lo > 0.0 && hi / lo >= 10.0,
            format!("{} to {}", real(lo), real(hi)),
        );
    }
    let half = 1.0 + h;
    let curve: Vec<(f64, f64)> = (0..=2000)
        .map(|i| {
            let x = -half + 2.0 * half * i as f64 / 2000.0;
            (x, e.eval(0, x))
        })
        .collect();
    out.check("fig3: estimate nonnegative", curve.iter().all(|p| p.1 >= 0.0), "");
    out.file(
        "fig3_modes.csv",
        csv(
            &["location", "height", "prominence"],
            modes
                .modes()
                .iter()
                .zip(&prom)
                .map(|(m, &p)| vec![real(m.location), real(m.height), real(p)]),
        ),
    );
    out.file("fig3_curve.csv", curve_csv("x", "density", &curve));
    out.file(
        "fig3_curve.svg",
        export::curves_svg(
            &[(format!("{k}, h = {h}"), curve)],
            "six-mode estimate",
            "x",
            "density",
            false,
        ),
    );
    let mut grid = log_grid(0.93 * h, 1.08 * h, 150);
    grid.reverse();
    let t = build_mode_tree(&s, &k, &grid, &method)?;
    out.file("fig3_tree_edges.csv", export::mode_tree_edges_csv(&t));
    out.file("fig3_tree_paths.csv", export::mode_tree_paths_csv(&t));
    out.file(
        "fig3_tree.svg",
        export::mode_tree_svg(&t, &format!("mode tree detail, {k}")),
    );
    out.file("fig3_modes.json", export::json(&modes)?);
    out.note(format!("{} modes at theta = {theta}, h = {h}", modes.count()));
    Ok(out)
}

/// Normal-reference bandwidth `1.06 sd m^(-1/5)` for display smoothing.
pub fn normal_reference_bandwidth(v: &[f64]) -> f64 {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0)).sqrt();
    1.06 * sd.max(1e-3) * m.powf(-0.2)
}

/// Gaussian display density of `v` on 400 points.
fn display_density(v: &[f64]) -> Result<Vec<(f64, f64)>> {
    let s = Sample::new(v.to_vec())?;
    let h = normal_reference_bandwidth(v);
    let g = KernelSpec::gaussian(1.0)?;
    let e = DensityEstimate::new(&s, &g, h)?;
    let (a, b) = (s.min() - 3.0 * h, s.max() + 3.0 * h);
    Ok((0..400)
        .map(|i| {
            let x = a + (b - a) * i as f64 / 399.0;
            (x, e.eval(0, x))
        })
        .collect())
}

fn run_fig4(cfg: &RunConfig, sizes: &[usize], replicates: usize) -> Result<Outcome> {
    if sizes.is_empty() || replicates == 0 {
        bail!("fig4 needs at least one sample size and one replicate");
    }
    let kernels = match cfg.kernel.clone() {
        Some(k) => vec![k],
        None => vec![
            KernelSpec::epanechnikov(),
            KernelSpec::biweight(),
            KernelSpec::triweight(),
        ],
    };
    let mut out = Outcome::default();
    let mut summary = Vec::new();
    for k in &kernels {
        let name = label(k);
        let mut curves = Vec::new();
        for &n in sizes {
            let bcfg = bootstrap_config(cfg, 1, 0.05, derive_seed(cfg.seed, n as u64));
            let v = critband::silverman::log_ratio_experiment(n, k, replicates, &bcfg)?;
            let present: Vec<f64> = v.iter().flatten().copied().collect();
            out.check(
                format!("fig4 {name} n={n}: log R >= 0"),
                present.iter().all(|&x| x >= 0.0),
                "",
            );
            if k.is_gaussian() {
                out.check(
                    format!("fig4 {name} n={n}: no nonmonotonicity"),
                    present.is_empty(),
                    format!("{} present", present.len()),
                );
            }
            let med = (!present.is_empty()).then(|| median(&present));
            if k.polynomial_degree_theta() == Some(1) {
                out.check(
                    format!("fig4 {name} n={n}: nonmonotonicity close to h_crit"),
                    med.is_some_and(|m| m < 1.25f64.ln()),
                    format!("median log R {}", export::opt_real(med)),
                );
            }
            summary.push(vec![
                name.clone(),
                n.to_string(),
                replicates.to_string(),
                present.len().to_string(),
                export::opt_real(med),
            ]);
            out.file(format!("fig4_{name}_n{n}.csv"), export::log_ratio_csv(&v));
            if present.len() >= 2 {
                curves.push((format!("n = {n}"), display_density(&present)?));
            }
        }
        out.file(
            format!("fig4_{name}.svg"),
            export::curves_svg(&curves, &format!("density of log R, {k}"), "log R", "density", false),
        );
    }
    out.file(
        "fig4_summary.csv",
        csv(&["kernel", "n", "replicates", "present", "median_log_ratio"], summary),
    );
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig5Plan {
    pub n: usize,
    pub replicates: usize,
    pub resamples: usize,
    pub smooth: Option<usize>,
    pub power_n: usize,
    pub power_replicates: usize,
    pub power_separation: f64,
}

pub fn levels() -> Vec<f64> {
    (1..=LEVEL_COUNT).map(|i| i as f64 / LEVEL_COUNT as f64).collect()
}

fn run_fig5(cfg: &RunConfig, plan: &Fig5Plan) -> Result<Outcome> {
    if plan.replicates < 2 {
        bail!("fig5 needs at least two replicates");
    }
    let kernels = match cfg.kernel.clone() {
        Some(k) => vec![k],
        None => standard_kernels(),
    };
    let density = SamplingDensity::beta(3.0, 4.0)?;
    let alphas = levels();
    // every kernel sees the same samples
    let bcfg = bootstrap_config(cfg, plan.resamples, 0.05, cfg.seed);
    let mut out = Outcome::default();
    let mut curves: Vec<(String, Vec<LevelPoint>)> = Vec::new();
    let mut exceed_cols = Vec::new();
    for k in &kernels {
        let ex = replicate_exceedances(&density, plan.n, k, plan.replicates, &bcfg)?;
        let pts = level_points(&ex, &alphas);
        for &a in &CHECK_LEVELS {
            let p = pts
                .iter()
                .find(|p| (p.alpha - a).abs() < 1e-12)
                .expect("checked level on grid");
            out.check(
                format!("fig5 {k}: pi({a}) <= {a} + 2 SE"),
                p.pi_hat <= a + 2.0 * p.std_err,
                format!("pi = {}, SE = {}", p.pi_hat, p.std_err),
            );
        }
        let last = pts.last().expect("levels");
        out.check(
            format!("fig5 {k}: pi(1) = 1"),
            last.pi_hat == 1.0,
            format!("{}", last.pi_hat),
        );
        exceed_cols.push(ex);
        curves.push((label(k), pts));
    }
    if cfg.kernel.is_none() {
        out.check(
            "fig5: four kernel curves",
            curves.len() == 4,
            format!("{}", curves.len()),
        );
    }
    out.file("fig5_levels.csv", export::level_curve_csv(&curves));
    let mut header = vec!["replicate".to_string()];
    header.extend(curves.iter().map(|c| c.0.clone()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.file(
        "fig5_exceedances.csv",
        csv(
            &header,
            (0..plan.replicates).map(|r| {
                std::iter::once(r.to_string())
                    .chain(exceed_cols.iter().map(|c| real(c[r])))
                    .collect::<Vec<_>>()
            }),
        ),
    );
    let shown: Vec<(String, Vec<LevelPoint>)> = match plan.smooth {
        Some(w) => {
            let sm: Vec<_> = curves
                .iter()
                .map(|(l, p)| (l.clone(), smooth_level_curve(p, w)))
                .collect();
            out.file("fig5_levels_smoothed.csv", export::level_curve_csv(&sm));
            sm
        }
        None => curves.clone(),
    };
    let series: Vec<(String, Vec<(f64, f64)>)> = shown
        .iter()
        .map(|(l, p)| (l.clone(), p.iter().map(|q| (q.alpha, q.pi_hat)).collect()))
        .collect();
    out.file(
        "fig5.svg",
        export::curves_svg(
            &series,
            &format!("level accuracy, Beta(3, 4), n = {}", plan.n),
            "alpha",
            "pi(alpha)",
            true,
        ),
    );

    if plan.power_replicates > 0 {
        // Epanechnikov h_crit is set by knot windows near the mode and never rejects here
        let k = kernel_or(cfg, KernelSpec::biweight());
        let clusters = SamplingDensity::two_clusters(plan.power_separation)?;
        let pcfg = BootstrapConfig {
            seed: derive_seed(cfg.seed, u64::MAX),
            ..bcfg
        };
        let ex = replicate_exceedances(&clusters, plan.power_n, &k, plan.power_replicates, &pcfg)?;
        let rejections: Vec<bool> = ex.iter().map(|&e| critband::silverman::rejects(e, 0.05)).collect();
        let rate = rejections.iter().filter(|&&r| r).count() as f64 / ex.len() as f64;
        out.check(
            format!(
                "fig5 power: {k}, two clusters {} apart, n = {}",
                plan.power_separation, plan.power_n
            ),
            rate >= 0.9,
            format!("rejection rate {rate}"),
        );
        out.file(
            "fig5_power.csv",
            csv(
                &["replicate", "exceedance", "reject"],
                ex.iter()
                    .zip(&rejections)
                    .enumerate()
                    .map(|(i, (&e, &r))| vec![i.to_string(), real(e), r.to_string()]),
            ),
        );
        out.note(format!("power at alpha = 0.05: {rate}"));
    }
    let summary: Vec<_> = curves
        .iter()
        .map(|(l, p)| {
            let at: Vec<_> = CHECK_LEVELS
                .iter()
                .map(|&a| p.iter().find(|q| (q.alpha - a).abs() < 1e-12).copied())
                .collect();
            serde_json::json!({ "kernel": l, "levels": at })
        })
        .collect();
    out.file("fig5.json", serde_json::to_string_pretty(&summary)? + "\n");
    for (l, p) in &curves {
        let at: Vec<String> = CHECK_LEVELS
            .iter()
            .filter_map(|&a| p.iter().find(|q| (q.alpha - a).abs() < 1e-12))
            .map(|q| format!("pi({}) = {}", q.alpha, q.pi_hat))
            .collect();
        out.note(format!("{l}: {}", at.join(", ")));
    }
    Ok(out)
}

fn run_scaling(
    cfg: &RunConfig,
    sizes: &[usize],
    replicates: usize,
    density: &SamplingDensity,
    ci: usize,
) -> Result<Outcome> {
    let k = kernel_or(cfg, KernelSpec::biweight());
    let bcfg = bootstrap_config(cfg, 1, 0.05, cfg.seed);
    let r = scaling_experiment(density, &k, sizes, replicates, &bcfg, ci)?;
    let mut out = Outcome::default();
    out.check(
        "scaling: slope in [-0.30, -0.10]",
        (-0.30..=-0.10).contains(&r.slope),
        format!("slope {} (95% interval {} to {})", r.slope, r.slope_ci.0, r.slope_ci.1),
    );
    out.file(
        "scaling_hcrit.csv",
        csv(
            &["n", "replicate", "h_crit"],
            r.sizes.iter().zip(&r.h_crit).flat_map(|(&n, hs)| {
                hs.iter()
                    .enumerate()
                    .map(move |(i, &h)| vec![n.to_string(), i.to_string(), real(h)])
            }),
        ),
    );
    out.file(
        "scaling_medians.csv",
        csv(
            &["n", "median_h_crit"],
            r.sizes
                .iter()
                .zip(&r.medians)
                .map(|(&n, &m)| vec![n.to_string(), real(m)]),
        ),
    );
    out.file(
        "scaling_fit.csv",
        csv(
            &["slope", "intercept", "ci_low", "ci_high"],
            [vec![
                real(r.slope),
                real(r.intercept),
                real(r.slope_ci.0),
                real(r.slope_ci.1),
            ]],
        ),
    );
    out.file("scaling.json", export::json(&r)?);
    let pts: Vec<(f64, f64)> = r
        .sizes
        .iter()
        .zip(&r.medians)
        .map(|(&n, &m)| ((n as f64).ln(), m.ln()))
        .collect();
    let fit: Vec<(f64, f64)> = pts.iter().map(|&(x, _)| (x, r.intercept + r.slope * x)).collect();
    out.file(
        "scaling.svg",
        export::curves_svg(
            &[
                ("median h_crit".to_string(), pts),
                (format!("slope {:.3}", r.slope), fit),
            ],
            &format!("h_crit against n, {k}"),
            "log n",
            "log median h_crit",
            false,
        ),
    );
    out.note(format!(
        "slope {} (95% interval {} to {})",
        r.slope, r.slope_ci.0, r.slope_ci.1
    ));
    Ok(out)
}

/// Mode count of one estimate, for quick checks.
pub fn count_at(s: &Sample, k: &KernelSpec, h: f64, m: &CountMethod) -> Result<usize> {
    Ok(mode_count(&DensityEstimate::new(s, k, h)?, m)?)
}
