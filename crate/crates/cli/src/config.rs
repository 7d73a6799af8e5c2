//! Command-line configuration. A parsed [`RunConfig`] prints back to an
//! equivalent argument string (`Display`) and parses from one (`FromStr`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use critband::{CountMethod, KernelSpec, SamplingDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

impl fmt::Display for Threads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threads::Auto => f.write_str("auto"),
            Threads::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "auto" => Ok(Threads::Auto),
            v => match v.parse::<usize>() {
                Ok(n) if n > 0 => Ok(Threads::Count(n)),
                _ => Err(format!("threads must be a positive integer or 'auto', got '{v}'")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "critband",
    version,
    about = "Mode counting, critical bandwidths and the bootstrap test for unimodality"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// epan | biweight | triweight | multiweight:<theta> | gaussian:<scale>
    #[arg(long, global = true)]
    pub kernel: Option<KernelSpec>,

    /// exact | grid[:<points per bandwidth>[:<relative tolerance>]]
    /// (default: exact for integer theta, grid otherwise)
    #[arg(long, global = true)]
    pub method: Option<CountMethod>,

    /// Points per decade of the critical-bandwidth search grid.
    #[arg(long = "grid-density", global = true, default_value_t = 64)]
    pub grid_density: u32,

    #[arg(long, global = true, default_value_t = 20240611)]
    pub seed: u64,

    /// Worker threads, or auto.
    #[arg(long, global = true, default_value_t = Threads::Auto)]
    pub threads: Threads,

    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Output formats, comma separated.
    #[arg(long, global = true, value_delimiter = ',', default_value = "csv,json,svg")]
    pub format: Vec<Format>,

    /// Verify the expected results and exit nonzero on any failure.
    #[arg(long, global = true)]
    pub check: bool,
}

/// Observations from `--input <file>` (one number per line) or `--data a,b,c`.
#[derive(Debug, Clone, PartialEq, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub data: Vec<f64>,
}

/// Bandwidth grid, log spaced.
#[derive(Debug, Clone, PartialEq, Args)]
pub struct HGridArgs {
    #[arg(long = "h-min", default_value_t = 0.05)]
    pub h_min: f64,
    #[arg(long = "h-max", default_value_t = 3.0)]
    pub h_max: f64,
    #[arg(long = "h-count", default_value_t = 400)]
    pub h_count: usize,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Modes of one estimate.
    Modes {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        bandwidth: f64,
    },
    /// Mode count over a bandwidth grid with refined transitions.
    Profile {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        grid: HGridArgs,
    },
    /// Mode tree over a bandwidth grid.
    Tree {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        grid: HGridArgs,
    },
    /// Mode counts over a (theta, h) grid, both linearly spaced.
    Modespace {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long = "theta-min", default_value_t = 0.025)]
        theta_min: f64,
        #[arg(long = "theta-max", default_value_t = 12.0)]
        theta_max: f64,
        #[arg(long = "theta-count", default_value_t = 480)]
        theta_count: usize,
        #[arg(long = "h-min", default_value_t = 0.02)]
        h_min: f64,
        #[arg(long = "h-max", default_value_t = 3.0)]
        h_max: f64,
        #[arg(long = "h-count", default_value_t = 500)]
        h_count: usize,
    },
    /// Critical and nonmonotonicity bandwidths.
    Critical {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Bootstrap test of unimodality.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 200)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Mode trees of a small sample for four kernels (default {-1, 0, 1}).
    Fig1 {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        grid: HGridArgs,
    },
    /// Mode space of {-1, 0, 1}: theta on [0.025, 12], h on [h-min, h-max].
    Fig2 {
        #[arg(long = "theta-count", default_value_t = 480)]
        theta_count: usize,
        #[arg(long = "h-min", default_value_t = 0.02)]
        h_min: f64,
        #[arg(long = "h-max", default_value_t = 3.0)]
        h_max: f64,
        #[arg(long = "h-count", default_value_t = 500)]
        h_count: usize,
    },
    /// The six-mode estimate of {-1, 0, 1}.
    Fig3 {
        #[arg(long, default_value_t = 2.5)]
        theta: f64,
        #[arg(long, default_value_t = 1.02)]
        bandwidth: f64,
    },
    /// Distribution of log(h_crit / h_nonm) for Epanechnikov-density samples.
    Fig4 {
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 100, 1000])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
    },
    /// Level accuracy of the bootstrap test on Beta(3, 4) data, plus power
    /// against two separated clusters.
    Fig5 {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        #[arg(long, default_value_t = 200)]
        resamples: usize,
        /// Moving-average window for an extra smoothed curve file (odd; off when absent).
        #[arg(long)]
        smooth: Option<usize>,
        #[arg(long = "power-n", default_value_t = 200)]
        power_n: usize,
        #[arg(long = "power-replicates", default_value_t = 20)]
        power_replicates: usize,
        #[arg(long = "power-separation", default_value_t = 10.0)]
        power_separation: f64,
    },
    /// Slope of log median h_crit against log n.
    Scaling {
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 400, 1600])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        replicates: usize,
        #[arg(long, default_value = "beta:3:4")]
        density: SamplingDensity,
        #[arg(long = "ci-resamples", default_value_t = 1000)]
        ci_resamples: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Modes { .. } => "modes",
            Command::Profile { .. } => "profile",
            Command::Tree { .. } => "tree",
            Command::Modespace { .. } => "modespace",
            Command::Critical { .. } => "critical",
            Command::Test { .. } => "test",
            Command::Fig1 { .. } => "fig1",
            Command::Fig2 { .. } => "fig2",
            Command::Fig3 { .. } => "fig3",
            Command::Fig4 { .. } => "fig4",
            Command::Fig5 { .. } => "fig5",
            Command::Scaling { .. } => "scaling",
        }
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn data_args(d: &DataArgs) -> Vec<String> {
    let mut a = Vec::new();
    if let Some(p) = &d.input {
        a.push(format!("--input={}", p.display()));
    }
    if !d.data.is_empty() {
        a.push(format!("--data={}", join(&d.data)));
    }
    a
}

fn grid_args(g: &HGridArgs) -> Vec<String> {
    vec![
        format!("--h-min={}", g.h_min),
        format!("--h-max={}", g.h_max),
        format!("--h-count={}", g.h_count),
    ]
}

impl RunConfig {
    /// Argument vector (without the program name) that parses back to `self`.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec![self.command.name().to_string()];
        match &self.command {
            Command::Modes { data, bandwidth } => {
                a.extend(data_args(data));
                a.push(format!("--bandwidth={bandwidth}"));
            }
            Command::Profile { data, grid } | Command::Tree { data, grid } | Command::Fig1 { data, grid } => {
                a.extend(data_args(data));
                a.extend(grid_args(grid));
            }
            Command::Modespace {
                data,
                theta_min,
                theta_max,
                theta_count,
                h_min,
                h_max,
                h_count,
            } => {
                a.extend(data_args(data));
                a.push(format!("--theta-min={theta_min}"));
                a.push(format!("--theta-max={theta_max}"));
                a.push(format!("--theta-count={theta_count}"));
                a.push(format!("--h-min={h_min}"));
                a.push(format!("--h-max={h_max}"));
                a.push(format!("--h-count={h_count}"));
            }
            Command::Critical { data } => a.extend(data_args(data)),
            Command::Test { data, resamples, alpha } => {
                a.extend(data_args(data));
                a.push(format!("--resamples={resamples}"));
                a.push(format!("--alpha={alpha}"));
            }
            Command::Fig2 {
                theta_count,
                h_min,
                h_max,
                h_count,
            } => {
                a.push(format!("--theta-count={theta_count}"));
                a.push(format!("--h-min={h_min}"));
                a.push(format!("--h-max={h_max}"));
                a.push(format!("--h-count={h_count}"));
            }
            Command::Fig3 { theta, bandwidth } => {
                a.push(format!("--theta={theta}"));
                a.push(format!("--bandwidth={bandwidth}"));
            }
            Command::Fig4 { sizes, replicates } => {
                a.push(format!("--sizes={}", join(sizes)));
                a.push(format!("--replicates={replicates}"));
            }
            Command::Fig5 {
                n,
                replicates,
                resamples,
                smooth,
                power_n,
                power_replicates,
                power_separation,
            } => {
                a.push(format!("--n={n}"));
                a.push(format!("--replicates={replicates}"));
                a.push(format!("--resamples={resamples}"));
                if let Some(w) = smooth {
                    a.push(format!("--smooth={w}"));
                }
                a.push(format!("--power-n={power_n}"));
                a.push(format!("--power-replicates={power_replicates}"));
                a.push(format!("--power-separation={power_separation}"));
            }
            Command::Scaling {
                sizes,
                replicates,
                density,
                ci_resamples,
            } => {
                a.push(format!("--sizes={}", join(sizes)));
                a.push(format!("--replicates={replicates}"));
                a.push(format!("--density={density}"));
                a.push(format!("--ci-resamples={ci_resamples}"));
            }
        }
        if let Some(k) = &self.kernel {
            a.push(format!("--kernel={k}"));
        }
        if let Some(m) = &self.method {
            a.push(format!("--method={m}"));
        }
        a.push(format!("--grid-density={}", self.grid_density));
        a.push(format!("--seed={}", self.seed));
        a.push(format!("--threads={}", self.threads));
        a.push(format!("--out={}", self.out.display()));
        let formats: Vec<&str> = self.format.iter().map(|f| f.extension()).collect();
        a.push(format!("--format={}", formats.join(",")));
        if self.check {
            a.push("--check".to_string());
        }
        a
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_args().join(" "))
    }
}

impl FromStr for RunConfig {
    type Err = clap::Error;

    /// Whitespace-separated arguments; paths must not contain spaces.
    fn from_str(s: &str) -> Result<Self, clap::Error> {
        RunConfig::try_parse_from(std::iter::once("critband").chain(s.split_whitespace()))
    }
}
