//! Split twin-Fock states and a separability witness for two atomic clouds.
//!
//! The crate models a twin-Fock state of spin-1 atoms in the `m = ±1` levels,
//! split by a balanced beam splitter into two spatial clouds `a` and `b`, and
//! provides everything needed to test entanglement between the clouds:
//!
//! * [`fock`]: exact Fock-space states, the beam splitter, spin rotations and
//!   the `d^j_{m,0}(π/2)` coefficients of a rotated twin-Fock state.
//! * [`observables`]: collective spin moments and the separability bound.
//! * [`sampler`] and [`noise`]: synthetic measurement shots in the `z` and
//!   transverse bases, with detection noise and splitting fluctuations.
//! * [`analysis`]: binning, estimators, detection-noise fit and bootstrap.
//! * [`oracle`]: brute-force checks of every inequality that the bound rests on.
//! * [`sweep`]: scans noise parameters to reproduce a target noise budget.
//! * [`io`]: the CSV and JSON file formats.

pub mod analysis;
pub mod fock;
pub mod io;
pub mod math;
pub mod noise;
pub mod observables;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod sweep;


pub use fock::{FockState, SqueezedSourceParams, TwoModeState};
pub use analysis::{BinEstimates, BootstrapReport, DetectionNoiseFit};
pub use noise::NoiseModel;
pub use observables::{CriterionResult, SpinMoments};
pub use sampler::{Basis, SamplerConfig, ShotRecord, Source};



