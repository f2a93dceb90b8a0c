//! Observation operators and nudging terms.

pub mod interpolate;
pub mod nudging;
pub mod observation;

pub use interpolate::{interpolate, InterpolantKind, Interpolator};
pub use nudging::{
    cda_tendency, na_tendency, nudge_provider, Mechanism, NudgeProvider, NudgeSpec, Nudger,
    ObservationSource, Preset,
};
pub use observation::{
    extract_observations, perturb_observations, CoarseSamples, HoldMode, Lattice, NoiseModel,
    ObservationPolicy, ObservationSet, ObservedVariable, Variables,
};
