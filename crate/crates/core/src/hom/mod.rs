//! Hong-Ou-Mandel interference of the frequency-entangled photons.
//!
//! Three independent descriptions of the same coincidence signal live here:
//! the analytic fringe model ([`fringe_model_prob`]), a first-principles
//! quadrature over a joint spectral amplitude ([`coincidence_prob_numeric`]),
//! and the two-outcome bunching/anti-bunching POVM ([`hom_povm_prob`]).
//!
//! Units: delays in ps, angular frequencies in rad/ps.

mod fringe;
mod jsa;
mod povm;
mod sampling;
mod scan;
mod spatial;

pub(crate) use fringe::golden_min;
pub use fringe::{first_dip_delay, fringe_envelope, fringe_model_prob, FringeModelParams};
pub use jsa::{
    bin_profile, coincidence_curve, coincidence_prob_numeric, sinc_bandwidth, sinc_coherence_time,
    two_bin_jsa, BinShape, Correlation, GridSpec, HomQuadrature, JointSpectralAmplitude, JsaSpec,
    Symmetry,
};
pub use povm::{hom_povm_prob, povm_extrema, povm_extrema_closed_form, PovmExtrema};
pub use sampling::{sample_scan, sample_scan_with, substream_rng, CountModel, SampleOptions};
pub use scan::{FringeScan, ScanPoint, CSV_HEADER};
pub use spatial::{spatial_mode_stats, SpatialModeStats};
