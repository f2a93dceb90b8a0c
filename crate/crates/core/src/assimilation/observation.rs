use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Location, State};

/// Which prognostic variables are observed (velocity means both `u` and `v`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variables {
    pub temperature: bool,
    pub velocity: bool,
}

impl Variables {
    pub const TEMPERATURE: Variables = Variables { temperature: true, velocity: false };
    pub const VELOCITY: Variables = Variables { temperature: false, velocity: true };
    pub const BOTH: Variables = Variables { temperature: true, velocity: true };

    pub fn is_empty(&self) -> bool {
        !(self.temperature || self.velocity)
    }

    /// Short tag used in scenario names: `t`, `v` or `tv`.
    pub fn tag(&self) -> &'static str {
        match (self.temperature, self.velocity) {
            (true, true) => "tv",
            (true, false) => "t",
            (false, true) => "v",
            (false, false) => "none",
        }
    }
}

/// Whether the last observation keeps forcing the model between arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HoldMode {
    /// Relax toward the most recent observation at every step.
    HoldLast,
    /// Relax only on the steps at which fresh observations arrive.
    OnlyAtArrival,
}

/// Coarse sampling of the reference trajectory in space and time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationPolicy {
    /// Every `stride`-th native location in each direction is observed.
    pub stride: usize,
    /// Observations arrive every `time_every` steps, starting at step 0.
    pub time_every: usize,
    pub variables: Variables,
    pub hold: HoldMode,
}

impl ObservationPolicy {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if self.stride == 0 || grid.nx % self.stride != 0 || grid.ny % self.stride != 0 {
            return Err(Error::config(format!(
                "stride {} must divide both nx = {} and ny = {}",
                self.stride, grid.nx, grid.ny
            )));
        }
        if self.time_every == 0 {
            return Err(Error::config("time_every must be at least 1"));
        }
        if self.variables.is_empty() {
            return Err(Error::config("at least one variable must be observed"));
        }
        Ok(())
    }

    pub fn arrives_at(&self, step: usize) -> bool {
        step % self.time_every == 0
    }
}

/// Native indices of the coarse observation lattice of one variable.
///
/// Along each direction the observed indices are those congruent to
/// `stride / 2` modulo `stride`, so the lattice sits in the middle of the
/// `stride`-wide index blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    pub loc: Location,
    pub stride: usize,
    /// Fine (native) extent in `x` and `y`.
    pub fine: (usize, usize),
    pub cols: Vec<usize>,
    pub rows: Vec<usize>,
}

impl Lattice {
    pub fn new(grid: &GridSpec, loc: Location, stride: usize) -> Result<Self> {
        if stride == 0 || grid.nx % stride != 0 || grid.ny % stride != 0 {
            return Err(Error::config(format!(
                "stride {stride} must divide nx = {} and ny = {}",
                grid.nx, grid.ny
            )));
        }
        let fine = grid.shape(loc);
        let offset = stride / 2;
        let pick = |n: usize| (offset..n).step_by(stride).collect::<Vec<_>>();
        Ok(Self { loc, stride, fine, cols: pick(fine.0), rows: pick(fine.1) })
    }

    pub fn offset(&self) -> usize {
        self.stride / 2
    }

    pub fn len(&self) -> usize {
        self.cols.len() * self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Native `(i, j)` of every lattice point, row-major.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().flat_map(move |&j| self.cols.iter().map(move |&i| (i, j)))
    }

    /// Values of `field` on the lattice, row-major.
    pub fn sample(&self, field: &Field) -> Vec<f64> {
        self.points().map(|(i, j)| field[(i, j)]).collect()
    }
}

/// Coarse samples of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseSamples {
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

impl CoarseSamples {
    pub fn from_field(field: &Field, lattice: &Lattice) -> Self {
        Self { lattice: lattice.clone(), values: lattice.sample(field) }
    }
}

/// Observed variable names as written to observation dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservedVariable {
    Theta,
    U,
    V,
}

impl ObservedVariable {
    pub fn location(self) -> Location {
        match self {
            ObservedVariable::Theta => Location::Center,
            ObservedVariable::U => Location::UFace,
            ObservedVariable::V => Location::VFace,
        }
    }

    fn stream(self) -> u64 {
        match self {
            ObservedVariable::Theta => 1,
            ObservedVariable::U => 2,
            ObservedVariable::V => 3,
        }
    }
}

impl fmt::Display for ObservedVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObservedVariable::Theta => "theta",
            ObservedVariable::U => "u",
            ObservedVariable::V => "v",
        })
    }
}

/// Coarse samples of the observed variables at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub step: usize,
    pub t: f64,
    pub stride: usize,
    pub theta: Option<CoarseSamples>,
    pub u: Option<CoarseSamples>,
    pub v: Option<CoarseSamples>,
}

impl ObservationSet {
    pub fn get(&self, var: ObservedVariable) -> Option<&CoarseSamples> {
        match var {
            ObservedVariable::Theta => self.theta.as_ref(),
            ObservedVariable::U => self.u.as_ref(),
            ObservedVariable::V => self.v.as_ref(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObservedVariable, &CoarseSamples)> {
        [
            (ObservedVariable::Theta, self.theta.as_ref()),
            (ObservedVariable::U, self.u.as_ref()),
            (ObservedVariable::V, self.v.as_ref()),
        ]
        .into_iter()
        .filter_map(|(var, s)| s.map(|s| (var, s)))
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = (ObservedVariable, &mut CoarseSamples)> {
        [
            (ObservedVariable::Theta, self.theta.as_mut()),
            (ObservedVariable::U, self.u.as_mut()),
            (ObservedVariable::V, self.v.as_mut()),
        ]
        .into_iter()
        .filter_map(|(var, s)| s.map(|s| (var, s)))
    }

    pub fn sample_count(&self) -> usize {
        self.iter().map(|(_, s)| s.values.len()).sum()
    }
}

/// Subsample the requested variables of `state` on their native lattices.
pub fn extract_observations(
    state: &State,
    grid: &GridSpec,
    policy: &ObservationPolicy,
    step: usize,
) -> Result<ObservationSet> {
    policy.validate(grid)?;
    state.check_matches(grid)?;
    let take = |field: &Field, loc| -> Result<CoarseSamples> {
        Ok(CoarseSamples::from_field(field, &Lattice::new(grid, loc, policy.stride)?))
    };
    let vars = policy.variables;
    Ok(ObservationSet {
        step,
        t: state.t,
        stride: policy.stride,
        theta: vars.temperature.then(|| take(&state.theta, Location::Center)).transpose()?,
        u: vars.velocity.then(|| take(&state.u, Location::UFace)).transpose()?,
        v: vars.velocity.then(|| take(&state.v, Location::VFace)).transpose()?,
    })
}

/// Multiplicative observation noise, uniform on `[1 − ε, 1 + ε]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseModel {
    epsilon_bits: u64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::config(format!("noise epsilon must lie in [0, 1), got {epsilon}")));
        }
        Ok(Self { epsilon_bits: epsilon.to_bits(), seed })
    }

    pub fn none() -> Self {
        Self { epsilon_bits: 0f64.to_bits(), seed: 0 }
    }

    pub fn epsilon(&self) -> f64 {
        f64::from_bits(self.epsilon_bits)
    }

    pub fn is_disabled(&self) -> bool {
        self.epsilon() == 0.0
    }

    /// Multiplier applied to sample `index` of `var` in the observation taken
    /// at `step`.
    pub fn multiplier(&self, step: usize, var: ObservedVariable, index: usize) -> f64 {
        let u = counter_uniform(self.seed, step as u64, var.stream(), index as u64);
        1.0 + self.epsilon() * (2.0 * u - 1.0)
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based uniform draw in `[0, 1)`.
///
/// `key = mix64(mix64(seed ^ stream·γ) + step·γ)`, then the draw for
/// `index` is `mix64(key + (index + 1)·γ) >> 11` scaled by `2⁻⁵³`, with
/// `γ = 0x9E3779B97F4A7C15`. Each draw depends only on its coordinates.
pub fn counter_uniform(seed: u64, step: u64, stream: u64, index: u64) -> f64 {
    let key = mix64(
        mix64(seed ^ stream.wrapping_mul(GOLDEN_GAMMA)).wrapping_add(step.wrapping_mul(GOLDEN_GAMMA)),
    );
    let bits = mix64(key.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)));
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Multiply every sample by an independent draw from `[1 − ε, 1 + ε]`.
pub fn perturb_observations(obs: &ObservationSet, noise: &NoiseModel) -> ObservationSet {
    let mut out = obs.clone();
    if noise.is_disabled() {
        return out;
    }
    let step = obs.step;
    for (var, samples) in out.iter_mut() {
        for (k, x) in samples.values.iter_mut().enumerate() {
            *x *= noise.multiplier(step, var, k);
        }
    }
    out
}
