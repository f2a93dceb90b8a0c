use std::time::{Duration, Instant};

use crate::assimilation::{
    extract_observations, perturb_observations, NoiseModel, NudgeProvider, NudgeSpec, ObservationPolicy,
    ObservationSet,
};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, State};
use crate::solver::{SolverParams, Stepper, StepperMemory};

use super::ic::InitialCondition;
use super::metrics::{fit_decay_rate, fit_log_linear, rrmse, DecayFit, RrmseRecord, RrmseSeries};

/// Default decay-fit window `[t_a, t_b]`.
pub const DEFAULT_DECAY_WINDOW: (f64, f64) = (2.0, 20.0);

/// Everything needed to run one twin experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridSpec,
    pub params: SolverParams,
    pub reference_ic: InitialCondition,
    pub assimilated_ic: InitialCondition,
    pub policy: ObservationPolicy,
    pub spec: NudgeSpec,
    pub noise: NoiseModel,
    pub nsteps: usize,
    /// Step counts at which both states are kept (0 is the initial state).
    pub snapshot_steps: Vec<usize>,
    pub decay_window: (f64, f64),
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nsteps == 0 {
            return Err(Error::config("nsteps must be at least 1"));
        }
        self.policy.validate(&self.grid)?;
        self.spec.validate()?;
        self.reference_ic.validate()?;
        self.assimilated_ic.validate()?;
        if let Some(&s) = self.snapshot_steps.iter().find(|&&s| s > self.nsteps) {
            return Err(Error::config(format!("snapshot step {s} is beyond nsteps = {}", self.nsteps)));
        }
        Ok(())
    }

    pub fn final_time(&self) -> f64 {
        self.nsteps as f64 * self.params.dt
    }

    /// Whether `other` can share this scenario's reference trajectory.
    pub fn shares_reference(&self, other: &ScenarioConfig) -> bool {
        self.grid == other.grid && self.params == other.params && self.reference_ic == other.reference_ic
    }

    fn wrap(&self, e: Error) -> Error {
        match e {
            e @ Error::Scenario { .. } => e,
            e => Error::Scenario { scenario: self.name.clone(), source: Box::new(e) },
        }
    }
}

/// Pair of states kept at a snapshot step.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub reference: State,
    pub assimilated: State,
}

/// Outcome of one twin experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinResult {
    pub name: String,
    pub series: RrmseSeries,
    /// `None` when the decay window does not fit inside the run.
    pub fit: Option<DecayFit>,
    pub snapshots: Vec<Snapshot>,
    /// Largest scaled divergence of either run after any step.
    pub max_divergence: f64,
    /// Wall-clock time of this run, including an equal share of the
    /// reference run it shared.
    pub compute_time: Duration,
}

/// Free reference run with its observation stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRun {
    pub observations: Vec<ObservationSet>,
    pub snapshots: Vec<(usize, State)>,
    pub final_state: State,
    pub max_divergence: f64,
}

/// Integrate the reference trajectory, storing the (noisy) observations it
/// would deliver and the requested snapshots.
pub fn run_reference(config: &ScenarioConfig) -> Result<ReferenceRun> {
    let go = || -> Result<ReferenceRun> {
        config.validate()?;
        let grid = config.grid;
        let mut stepper = Stepper::new(&grid, &config.params);
        let mut state = config.reference_ic.build(&grid)?;
        let mut memory = StepperMemory::default();
        let mut observations = Vec::new();
        let mut snapshots = Vec::new();
        let mut max_divergence = state.scaled_divergence(&grid);
        for n in 0..=config.nsteps {
            if config.snapshot_steps.contains(&n) {
                snapshots.push((n, state.clone()));
            }
            if n < config.nsteps && config.policy.arrives_at(n) {
                let obs = extract_observations(&state, &grid, &config.policy, n)?;
                observations.push(perturb_observations(&obs, &config.noise));
            }
            if n == config.nsteps {
                break;
            }
            stepper.step(&mut state, &mut memory, None, n)?;
            max_divergence = max_divergence.max(state.scaled_divergence(&grid));
        }
        Ok(ReferenceRun { observations, snapshots, final_state: state, max_divergence })
    };
    go().map_err(|e| config.wrap(e))
}

struct Member<'a> {
    config: &'a ScenarioConfig,
    provider: NudgeProvider,
    state: State,
    memory: StepperMemory,
    initial: RrmseRecord,
    records: Vec<RrmseRecord>,
    snapshots: Vec<Snapshot>,
    max_divergence: f64,
    elapsed: Duration,
    failed: Option<Error>,
}

/// Twin experiment: reference and assimilated runs advanced in lockstep.
pub fn run_twin(config: &ScenarioConfig) -> Result<TwinResult> {
    run_twins(std::slice::from_ref(config)).pop().expect("one result per config")
}

/// Run several twin experiments, one shared reference per group of configs
/// that agree on grid, parameters and reference initial condition. Results
/// come back in input order.
pub fn run_twins(configs: &[ScenarioConfig]) -> Vec<Result<TwinResult>> {
    let mut out: Vec<Option<Result<TwinResult>>> = configs.iter().map(|_| None).collect();
    for group in reference_groups(configs) {
        let members: Vec<&ScenarioConfig> = group.iter().map(|&i| &configs[i]).collect();
        for (i, r) in group.iter().zip(run_group(&members)) {
            out[*i] = Some(r);
        }
    }
    out.into_iter().map(|r| r.expect("every config belongs to a group")).collect()
}

/// Partition config indices into groups sharing a reference trajectory.
pub fn reference_groups(configs: &[ScenarioConfig]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, c) in configs.iter().enumerate() {
        match groups.iter_mut().find(|g| configs[g[0]].shares_reference(c)) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

fn run_group(configs: &[&ScenarioConfig]) -> Vec<Result<TwinResult>> {
    let lead = configs[0];
    let grid = lead.grid;
    let reference_ic = match lead.reference_ic.build(&grid) {
        Ok(s) => s,
        Err(e) => return configs.iter().map(|c| Err(c.wrap(clone_error(&e)))).collect(),
    };

    let mut members: Vec<Member> = Vec::with_capacity(configs.len());
    let mut results: Vec<Option<Result<TwinResult>>> = configs.iter().map(|_| None).collect();
    for (k, c) in configs.iter().enumerate() {
        let setup = || -> Result<Member> {
            c.validate()?;
            let provider = NudgeProvider::new(c.policy, c.spec, c.noise, &grid)?;
            let state = c.assimilated_ic.build(&grid)?;
            let initial = rrmse(&state, &reference_ic, &grid)?;
            let mut snapshots = Vec::new();
            if c.snapshot_steps.contains(&0) {
                snapshots.push(Snapshot { step: 0, reference: reference_ic.clone(), assimilated: state.clone() });
            }
            Ok(Member {
                config: c,
                provider,
                max_divergence: state.scaled_divergence(&grid),
                state,
                memory: StepperMemory::default(),
                initial,
                records: Vec::with_capacity(c.nsteps),
                snapshots,
                elapsed: Duration::ZERO,
                failed: None,
            })
        };
        match setup() {
            Ok(m) => members.push(m),
            Err(e) => results[k] = Some(Err(c.wrap(e))),
        }
    }

    let horizon = members.iter().map(|m| m.config.nsteps).max().unwrap_or(0);
    let mut stepper = Stepper::new(&grid, &lead.params);
    let mut reference = reference_ic;
    let mut ref_memory = StepperMemory::default();
    let mut ref_divergence = reference.scaled_divergence(&grid);
    let mut ref_elapsed = Duration::ZERO;

    for n in 0..horizon {
        for m in members.iter_mut().filter(|m| m.failed.is_none() && n < m.config.nsteps) {
            let advance = |m: &mut Member, stepper: &mut Stepper| -> Result<()> {
                let policy = m.config.policy;
                let fresh = if policy.arrives_at(n) {
                    Some(extract_observations(&reference, &grid, &policy, n)?)
                } else {
                    None
                };
                let forcing = m.provider.tendency(n, &m.state, fresh.as_ref())?;
                stepper.step(&mut m.state, &mut m.memory, forcing.as_ref(), n)
            };
            let clock = Instant::now();
            if let Err(e) = advance(m, &mut stepper) {
                m.failed = Some(e);
            }
            m.elapsed += clock.elapsed();
        }
        let clock = Instant::now();
        if let Err(e) = stepper.step(&mut reference, &mut ref_memory, None, n) {
            for m in members.iter_mut().filter(|m| m.failed.is_none()) {
                m.failed = Some(clone_error(&e));
            }
            break;
        }
        ref_divergence = ref_divergence.max(reference.scaled_divergence(&grid));
        ref_elapsed += clock.elapsed();
        for m in members.iter_mut().filter(|m| m.failed.is_none() && n < m.config.nsteps) {
            match rrmse(&m.state, &reference, &grid) {
                Ok(r) => m.records.push(r),
                Err(e) => {
                    m.failed = Some(e);
                    continue;
                }
            }
            m.max_divergence = m.max_divergence.max(m.state.scaled_divergence(&grid));
            if m.config.snapshot_steps.contains(&(n + 1)) {
                m.snapshots.push(Snapshot {
                    step: n + 1,
                    reference: reference.clone(),
                    assimilated: m.state.clone(),
                });
            }
        }
    }

    let share = ref_elapsed / members.len().max(1) as u32;
    let mut done = members.into_iter();
    for slot in results.iter_mut().filter(|r| r.is_none()) {
        let m = done.next().expect("one member per unset slot");
        *slot = Some(match m.failed {
            Some(e) => Err(m.config.wrap(e)),
            None => {
                let series = RrmseSeries { initial: m.initial, records: m.records };
                let fit = fit_decay_rate(&series, m.config.decay_window).ok();
                Ok(TwinResult {
                    name: m.config.name.clone(),
                    series,
                    fit,
                    snapshots: m.snapshots,
                    max_divergence: m.max_divergence.max(ref_divergence),
                    compute_time: m.elapsed + share,
                })
            }
        });
    }
    results.into_iter().map(|r| r.expect("all slots filled")).collect()
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Config(s) => Error::Config(s.clone()),
        Error::Parse { line, key, message } => Error::Parse { line: *line, key: key.clone(), message: message.clone() },
        Error::Incompatible { mean, tolerance } => Error::Incompatible { mean: *mean, tolerance: *tolerance },
        Error::BlowUp { stage, step } => Error::BlowUp { stage: *stage, step: *step },
        Error::Scenario { scenario, source } => {
            Error::Scenario { scenario: scenario.clone(), source: Box::new(clone_error(source)) }
        }
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), io.to_string())),
    }
}

/// Free forecast launched from the assimilated state at `t1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub t1: f64,
    pub horizon: f64,
    /// Errors at `t1, t1 + dt, …, t1 + horizon`.
    pub errors: Vec<RrmseRecord>,
    /// Fitted exponential growth rate on `[t1, t1 + horizon]`; `None` for a zero horizon.
    pub growth_rate: Option<[f64; 3]>,
}

impl ForecastResult {
    pub fn final_error(&self) -> [f64; 3] {
        self.errors.last().map_or([f64::NAN; 3], |r| r.values)
    }
}

/// Assimilate on `[0, t1]`, then switch nudging off and run to `t1 + horizon`.
pub fn run_forecast(config: &ScenarioConfig, t1: f64, horizon: f64) -> Result<ForecastResult> {
    run_forecasts(config, &[t1], horizon).map(|mut v| v.remove(0))
}

/// Several forecasts of one scenario sharing a single assimilated run.
pub fn run_forecasts(config: &ScenarioConfig, t1s: &[f64], horizon: f64) -> Result<Vec<ForecastResult>> {
    let go = || -> Result<Vec<ForecastResult>> {
        config.validate()?;
        let dt = config.params.dt;
        let to_steps = |t: f64| -> Result<usize> {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::config(format!("forecast time {t} must be finite and >= 0")));
            }
            Ok((t / dt).round() as usize)
        };
        let nt = to_steps(horizon)?;
        let starts = t1s.iter().map(|&t| to_steps(t)).collect::<Result<Vec<_>>>()?;
        let end = starts.iter().map(|s| s + nt).max().unwrap_or(0);
        if end > config.nsteps {
            return Err(Error::config(format!(
                "forecast ends at step {end}, beyond the run length {}",
                config.nsteps
            )));
        }
        let grid = config.grid;
        let mut stepper = Stepper::new(&grid, &config.params);
        let mut reference = config.reference_ic.build(&grid)?;
        let mut ref_memory = StepperMemory::default();
        let mut state = config.assimilated_ic.build(&grid)?;
        let mut memory = StepperMemory::default();
        let mut provider = NudgeProvider::new(config.policy, config.spec, config.noise, &grid)?;
        let last_start = starts.iter().copied().max().unwrap_or(0);

        struct Branch {
            start: usize,
            state: State,
            memory: StepperMemory,
            errors: Vec<RrmseRecord>,
        }
        let mut branches: Vec<Branch> = Vec::new();
        let spawn = |n: usize, state: &State, memory: &StepperMemory, reference: &State| -> Result<Vec<Branch>> {
            let mut out = Vec::new();
            for _ in starts.iter().filter(|&&s| s == n) {
                out.push(Branch {
                    start: n,
                    state: state.clone(),
                    memory: memory.clone(),
                    errors: vec![rrmse(state, reference, &grid)?],
                });
            }
            Ok(out)
        };

        for n in 0..=end {
            branches.extend(spawn(n, &state, &memory, &reference)?);
            if n == end {
                break;
            }
            if n < last_start {
                let fresh = if config.policy.arrives_at(n) {
                    Some(extract_observations(&reference, &grid, &config.policy, n)?)
                } else {
                    None
                };
                let forcing = provider.tendency(n, &state, fresh.as_ref())?;
                stepper.step(&mut state, &mut memory, forcing.as_ref(), n)?;
            }
            for b in branches.iter_mut().filter(|b| n < b.start + nt) {
                stepper.step(&mut b.state, &mut b.memory, None, n)?;
            }
            stepper.step(&mut reference, &mut ref_memory, None, n)?;
            for b in branches.iter_mut().filter(|b| n < b.start + nt) {
                b.errors.push(rrmse(&b.state, &reference, &grid)?);
            }
        }

        let mut results = Vec::with_capacity(starts.len());
        for &s in &starts {
            let idx = branches.iter().position(|b| b.start == s).expect("branch spawned for every start");
            let b = branches.remove(idx);
            let growth_rate = if nt == 0 {
                None
            } else {
                let t: Vec<f64> = b.errors.iter().map(|r| r.t).collect();
                let mut rate = [0.0; 3];
                for (k, g) in rate.iter_mut().enumerate() {
                    let y: Vec<f64> = b.errors.iter().map(|r| r.values[k]).collect();
                    *g = -fit_log_linear(&t, &y)?.1;
                }
                Some(rate)
            };
            results.push(ForecastResult { t1: s as f64 * dt, horizon: nt as f64 * dt, errors: b.errors, growth_rate });
        }
        Ok(results)
    };
    go().map_err(|e| config.wrap(e))
}
