//! Parameter estimation from HOM scans and single-photon spectra, the
//! energy-conserving frequency state and the subspace fidelity bounds.

mod bounds;
mod fit;
mod restricted;
mod spectra;

pub use bounds::{
    concurrence_bound, concurrence_bound_delta, polarization_fidelity_bound,
    polarization_fidelity_delta, visibility_fidelity_bound, Bounded,
};
pub use fit::{
    fit_fringe, fit_fringe_with, raw_visibility, FitOptions, FringeFit, ParamErrors, PARAM_NAMES,
};
pub use restricted::{restricted_rho, RestrictedState};
pub use spectra::{
    balance_from_spectra, default_windows, BinWindow, Spectrum, SpectrumHistogram, SPECTRA_HEADER,
};
