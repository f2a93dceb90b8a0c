use std::fmt;
use std::str::FromStr;

use super::interpolate::{InterpolantKind, Interpolator};
use super::observation::{
    perturb_observations, CoarseSamples, HoldMode, NoiseModel, ObservationPolicy, ObservationSet,
    ObservedVariable, Variables,
};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, State};
use crate::solver::NudgeTendency;

/// Relaxation strength presets shared by both mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Small,
    Medium,
    Large,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Small, Preset::Medium, Preset::Large];

    /// Interpolant relaxation rate `μ`.
    pub fn cda_rate(self) -> f64 {
        match self {
            Preset::Small => 0.1,
            Preset::Medium => 0.5,
            Preset::Large => 1.0,
        }
    }

    /// Point nudging coefficient `α`.
    pub fn na_rate(self) -> f64 {
        match self {
            Preset::Small => 1.5,
            Preset::Medium => 2.5,
            Preset::Large => 3.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Small => "small",
            Preset::Medium => "medium",
            Preset::Large => "large",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown preset `{s}` (expected small, medium or large)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    /// Interpolant-based continuous data assimilation.
    Cda,
    /// Point-to-point nudging at observed locations.
    Na,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Cda => "cda",
            Mechanism::Na => "na",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cda" => Ok(Mechanism::Cda),
            "na" => Ok(Mechanism::Na),
            _ => Err(format!("unknown mechanism `{s}` (expected cda or na)")),
        }
    }
}

/// Coefficients of the nudging term. Only the pair matching `mechanism` is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NudgeSpec {
    pub mechanism: Mechanism,
    pub mu_theta: f64,
    pub mu_u: f64,
    pub alpha_theta: f64,
    pub alpha_u: f64,
    pub interpolant: InterpolantKind,
}

impl NudgeSpec {
    /// Preset coefficients on the variables in `vars`, zero elsewhere.
    pub fn from_preset(
        mechanism: Mechanism,
        preset: Preset,
        vars: Variables,
        interpolant: InterpolantKind,
    ) -> Self {
        let on = |b: bool, x: f64| if b { x } else { 0.0 };
        Self {
            mechanism,
            mu_theta: on(vars.temperature, preset.cda_rate()),
            mu_u: on(vars.velocity, preset.cda_rate()),
            alpha_theta: on(vars.temperature, preset.na_rate()),
            alpha_u: on(vars.velocity, preset.na_rate()),
            interpolant,
        }
    }

    pub fn disabled(mechanism: Mechanism) -> Self {
        Self {
            mechanism,
            mu_theta: 0.0,
            mu_u: 0.0,
            alpha_theta: 0.0,
            alpha_u: 0.0,
            interpolant: InterpolantKind::PiecewiseConstant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("mu_theta", self.mu_theta),
            ("mu_u", self.mu_u),
            ("alpha_theta", self.alpha_theta),
            ("alpha_u", self.alpha_u),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and >= 0, got {x}")));
            }
        }
        Ok(())
    }

    /// Active coefficient for `var` under the selected mechanism.
    pub fn coefficient(&self, var: ObservedVariable) -> f64 {
        match (self.mechanism, var) {
            (Mechanism::Cda, ObservedVariable::Theta) => self.mu_theta,
            (Mechanism::Cda, _) => self.mu_u,
            (Mechanism::Na, ObservedVariable::Theta) => self.alpha_theta,
            (Mechanism::Na, _) => self.alpha_u,
        }
    }

    pub fn is_disabled(&self) -> bool {
        [ObservedVariable::Theta, ObservedVariable::U].iter().all(|&v| self.coefficient(v) == 0.0)
    }
}

fn model_field(state: &State, var: ObservedVariable) -> &Field {
    match var {
        ObservedVariable::Theta => &state.theta,
        ObservedVariable::U => &state.u,
        ObservedVariable::V => &state.v,
    }
}

fn slot(t: &mut NudgeTendency, var: ObservedVariable) -> &mut Field {
    match var {
        ObservedVariable::Theta => &mut t.theta,
        ObservedVariable::U => &mut t.u,
        ObservedVariable::V => &mut t.v,
    }
}

fn innovation(samples: &CoarseSamples, model: &Field) -> Vec<f64> {
    samples.values.iter().zip(samples.lattice.sample(model)).map(|(o, m)| o - m).collect()
}

fn zero_wall_rows(t: &mut NudgeTendency, grid: &GridSpec) {
    t.v.row_mut(0).fill(0.0);
    t.v.row_mut(grid.ny).fill(0.0);
}

/// Builds nudging tendencies, caching one interpolator per observed variable.
#[derive(Debug, Clone)]
pub struct Nudger {
    spec: NudgeSpec,
    grid: GridSpec,
    cache: [Option<Interpolator>; 3],
}

impl Nudger {
    pub fn new(spec: NudgeSpec, grid: &GridSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, grid: *grid, cache: [None, None, None] })
    }

    pub fn spec(&self) -> &NudgeSpec {
        &self.spec
    }

    fn interpolator(&mut self, var: ObservedVariable, samples: &CoarseSamples) -> Result<&Interpolator> {
        let idx = var as usize;
        let stale = match &self.cache[idx] {
            Some(ip) => ip.lattice() != &samples.lattice,
            None => true,
        };
        if stale {
            self.cache[idx] = Some(Interpolator::new(self.spec.interpolant, &samples.lattice, &self.grid)?);
        }
        Ok(self.cache[idx].as_ref().expect("interpolator cached above"))
    }

    /// Nudging tendency of `state` toward `obs`.
    pub fn tendency(&mut self, state: &State, obs: &ObservationSet) -> Result<NudgeTendency> {
        state.check_matches(&self.grid)?;
        let mut out = NudgeTendency::zeros(&self.grid);
        for (var, samples) in obs.iter() {
            let c = self.spec.coefficient(var);
            if c == 0.0 {
                continue;
            }
            let model = model_field(state, var);
            let diff = innovation(samples, model);
            match self.spec.mechanism {
                Mechanism::Cda => {
                    let mut f = self.interpolator(var, samples)?.apply(&diff)?;
                    f.scale(c);
                    *slot(&mut out, var) = f;
                }
                Mechanism::Na => {
                    let dst = slot(&mut out, var);
                    for ((i, j), d) in samples.lattice.points().zip(diff) {
                        dst[(i, j)] = c * d;
                    }
                }
            }
        }
        zero_wall_rows(&mut out, &self.grid);
        Ok(out)
    }
}

/// `μ_q · I_h(q_obs − q_model|lattice)` for every nudged variable.
pub fn cda_tendency(
    state: &State,
    obs: &ObservationSet,
    spec: &NudgeSpec,
    grid: &GridSpec,
) -> Result<NudgeTendency> {
    if spec.mechanism != Mechanism::Cda {
        return Err(Error::config("cda_tendency called with a point-nudging spec"));
    }
    Nudger::new(*spec, grid)?.tendency(state, obs)
}

/// `α_q · (q_obs − q_model)` at observed points, zero elsewhere.
pub fn na_tendency(
    state: &State,
    obs: &ObservationSet,
    spec: &NudgeSpec,
    grid: &GridSpec,
) -> Result<NudgeTendency> {
    if spec.mechanism != Mechanism::Na {
        return Err(Error::config("na_tendency called with an interpolant spec"));
    }
    Nudger::new(*spec, grid)?.tendency(state, obs)
}

/// Supplies observations on arrival steps.
pub trait ObservationSource {
    fn observe(&mut self, step: usize) -> Result<ObservationSet>;
}

/// Precomputed observations, looked up by step.
impl ObservationSource for Vec<ObservationSet> {
    fn observe(&mut self, step: usize) -> Result<ObservationSet> {
        self.iter()
            .find(|o| o.step == step)
            .cloned()
            .ok_or_else(|| Error::config(format!("no stored observation for step {step}")))
    }
}

/// Tracks the latest (noisy) observation and turns it into forcing.
#[derive(Debug, Clone)]
pub struct NudgeProvider {
    policy: ObservationPolicy,
    noise: NoiseModel,
    nudger: Nudger,
    latest: Option<ObservationSet>,
}

impl NudgeProvider {
    pub fn new(policy: ObservationPolicy, spec: NudgeSpec, noise: NoiseModel, grid: &GridSpec) -> Result<Self> {
        policy.validate(grid)?;
        Ok(Self { policy, noise, nudger: Nudger::new(spec, grid)?, latest: None })
    }

    pub fn policy(&self) -> &ObservationPolicy {
        &self.policy
    }

    pub fn latest(&self) -> Option<&ObservationSet> {
        self.latest.as_ref()
    }

    /// Forcing for step `step`. `fresh` must be `Some` exactly on arrival steps.
    /// `None` stands for a zero tendency.
    pub fn tendency(
        &mut self,
        step: usize,
        state: &State,
        fresh: Option<&ObservationSet>,
    ) -> Result<Option<NudgeTendency>> {
        let arrived = self.policy.arrives_at(step);
        if let Some(obs) = fresh {
            self.latest = Some(perturb_observations(obs, &self.noise));
        }
        if self.nudger.spec().is_disabled() {
            return Ok(None);
        }
        if self.policy.hold == HoldMode::OnlyAtArrival && !arrived {
            return Ok(None);
        }
        match &self.latest {
            Some(obs) => self.nudger.tendency(state, obs).map(Some),
            None => Ok(None),
        }
    }
}

/// Callback for [`crate::solver::simulate`] pulling observations from `source`.
pub fn nudge_provider<S: ObservationSource>(
    policy: ObservationPolicy,
    spec: NudgeSpec,
    noise: NoiseModel,
    grid: &GridSpec,
    mut source: S,
) -> Result<impl FnMut(usize, &State) -> Result<Option<NudgeTendency>>> {
    let mut provider = NudgeProvider::new(policy, spec, noise, grid)?;
    Ok(move |step: usize, state: &State| {
        let fresh = if policy.arrives_at(step) { Some(source.observe(step)?) } else { None };
        provider.tendency(step, state, fresh.as_ref())
    })
}
