//! Mode counting and critical bandwidths for kernel density estimates.
//!
//! The crate computes kernel density estimates built from the multiweight
//! family `K(x) = C (1 - x^2)^theta` on `[-1, 1]` (Epanechnikov, biweight,
//! triweight and every real `theta > 0`) or from a scaled Gaussian, and
//! answers questions about their modes:
//!
//! * how many modes an estimate has, located exactly for integer `theta`
//!   by Sturm-sequence root isolation of the piecewise-polynomial derivative
//!   ([`modecount`]),
//! * how the count evolves with bandwidth, including the nonmonotone
//!   behaviour of compactly supported kernels ([`modecount::count_profile`],
//!   [`modetree`]),
//! * the critical bandwidth above which the estimate stays unimodal and the
//!   largest bandwidth below it where the count misbehaves ([`critical`]),
//! * Silverman's smoothed-bootstrap test for unimodality and the Monte Carlo
//!   experiments built on it ([`silverman`]).
//!
//! ```
//! use critband::{KernelSpec, Sample, DensityEstimate, CountMethod, count_modes};
//!
//! let sample = Sample::new(vec![-1.0, 0.0, 1.0]).unwrap();
//! let kernel = KernelSpec::epanechnikov();
//! let estimate = DensityEstimate::new(&sample, &kernel, 0.75).unwrap();
//! let modes = count_modes(&estimate, &CountMethod::Exact).unwrap();
//! assert_eq!(modes.count(), 5);
//! ```

pub mod critical;
pub mod density;
pub mod error;
pub mod estimator;
pub mod export;
pub mod kernels;
pub mod modecount;
pub mod modetree;
pub mod poly;
pub mod quadrature;
pub mod rng;
pub mod silverman;

pub use critical::{
    critical_and_first_drop, critical_bandwidth, critical_bandwidth_value, nonmonotonicity_bandwidth, CriticalResult,
    NonmonotonicityReading,
};
pub use density::SamplingDensity;
pub use error::{Error, Result};
pub use estimator::{DensityEstimate, PiecewisePoly, Sample};
pub use kernels::{KernelFamily, KernelSpec};
pub use modecount::{
    count_modes, count_profile, log_grid, CountMethod, CountRun, Mode, ModeCountProfile, ModeSet, Transition,
};
pub use modetree::{build_mode_tree, mode_space, ModeSpaceMatrix, ModeTrack, ModeTree};
pub use rng::RandomState;
pub use silverman::{silverman_test, BootstrapConfig, LevelPoint, TestResult};
