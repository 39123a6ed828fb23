//! Signals, measurement ensembles, observations, noise and the
//! phase-invariant distance.

mod ensemble;
pub mod image;
pub(crate) mod signal;

pub use ensemble::{
    add_noise, sample_cdp, sample_gaussian_complex, sample_gaussian_real, EnsembleKind, EnsembleRecord,
    MeasurementEnsemble, NoiseSpec,
};
pub use signal::{distance, random_unit, sample_signal, ScalarKind, Signal};
