//! Named scenarios reproducing the published twin-experiment figures.
//!
//! Names follow `fig<N>-<panel>-<variant>`, where the panel is `left`,
//! `middle` or `right` for strides 20, 10 and 5 (figures 8 and 9 have only
//! `left` and `right`, for strides 20 and 10).

use crate::assimilation::{
    HoldMode, InterpolantKind, Mechanism, NoiseModel, NudgeSpec, ObservationPolicy, Preset, Variables,
};
use crate::grid::GridSpec;
use crate::solver::SolverParams;

use super::ic::{InitialCondition, ShearParams};
use super::twin::{ScenarioConfig, DEFAULT_DECAY_WINDOW};

pub const PAPER_STEPS: usize = 3000;
pub const NOISE_EPSILON: f64 = 0.05;
pub const NOISE_SEED: u64 = 0x5EED_2019;
/// Interpolant used wherever a figure does not vary it.
pub const DEFAULT_INTERPOLANT: InterpolantKind = InterpolantKind::PiecewiseConstant;
/// Interpolants compared in figures 10 and 11.
pub const SMOOTHER_INTERPOLANTS: [InterpolantKind; 4] = [
    InterpolantKind::Nearest,
    InterpolantKind::Linear,
    InterpolantKind::Cubic,
    InterpolantKind::Spline,
];

const PANELS: [(&str, usize); 3] = [("left", 20), ("middle", 10), ("right", 5)];
const TIME_PANELS: [(&str, usize); 2] = [("left", 20), ("right", 10)];
const VARIABLE_SETS: [Variables; 3] = [Variables::TEMPERATURE, Variables::VELOCITY, Variables::BOTH];

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    /// Panel the scenario is plotted in, e.g. `fig2-left`.
    pub group: String,
    pub config: ScenarioConfig,
}

/// Paper-scale defaults: 200×100 grid, Ra = 10⁴, Pr = 0.71, dt = 0.01,
/// 3000 steps, assimilation from rest, dense-in-time observations.
pub fn base_config(name: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_owned(),
        grid: GridSpec::paper(),
        params: SolverParams { ra: 1e4, pr: 0.71, dt: 0.01 },
        reference_ic: InitialCondition::Reference,
        assimilated_ic: InitialCondition::Zero,
        policy: ObservationPolicy {
            stride: 10,
            time_every: 1,
            variables: Variables::BOTH,
            hold: HoldMode::HoldLast,
        },
        spec: NudgeSpec::from_preset(Mechanism::Cda, Preset::Medium, Variables::BOTH, DEFAULT_INTERPOLANT),
        noise: NoiseModel::none(),
        nsteps: PAPER_STEPS,
        snapshot_steps: vec![PAPER_STEPS],
        decay_window: DEFAULT_DECAY_WINDOW,
    }
}

struct Variant {
    mechanism: Mechanism,
    preset: Preset,
    vars: Variables,
    stride: usize,
    time_every: usize,
    hold: HoldMode,
    interpolant: InterpolantKind,
}

impl Variant {
    fn new(mechanism: Mechanism, preset: Preset, vars: Variables, stride: usize) -> Self {
        Self {
            mechanism,
            preset,
            vars,
            stride,
            time_every: 1,
            hold: HoldMode::HoldLast,
            interpolant: DEFAULT_INTERPOLANT,
        }
    }

    fn build(&self, name: String, group: &str) -> CatalogEntry {
        let mut config = base_config(&name);
        config.policy = ObservationPolicy {
            stride: self.stride,
            time_every: self.time_every,
            variables: self.vars,
            hold: self.hold,
        };
        config.spec = NudgeSpec::from_preset(self.mechanism, self.preset, self.vars, self.interpolant);
        CatalogEntry { name, group: group.to_owned(), config }
    }
}

fn with_noise(mut e: CatalogEntry) -> CatalogEntry {
    e.config.noise = NoiseModel::new(NOISE_EPSILON, NOISE_SEED).expect("valid epsilon");
    e
}

fn with_shear(mut e: CatalogEntry) -> CatalogEntry {
    e.config.reference_ic = InitialCondition::Shear(ShearParams::default());
    e
}

/// Panels of stride × variables × mechanism at one preset.
fn resolution_figure(fig: u32, preset: Preset) -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for (panel, stride) in PANELS {
        let group = format!("fig{fig}-{panel}");
        for vars in VARIABLE_SETS {
            for mechanism in [Mechanism::Cda, Mechanism::Na] {
                let name = format!("{group}-{mechanism}-{}", vars.tag());
                out.push(Variant::new(mechanism, preset, vars, stride).build(name, &group));
            }
        }
    }
    out
}

/// NA, NA-Time, CDA and CDA-Time with observations every `k` steps.
fn time_figure(fig: u32, k: usize) -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for (panel, stride) in TIME_PANELS {
        let group = format!("fig{fig}-{panel}");
        for mechanism in [Mechanism::Na, Mechanism::Cda] {
            for (suffix, hold) in [("", HoldMode::HoldLast), ("-time", HoldMode::OnlyAtArrival)] {
                let mut v = Variant::new(mechanism, Preset::Medium, Variables::BOTH, stride);
                v.time_every = k;
                v.hold = hold;
                out.push(v.build(format!("{group}-{mechanism}{suffix}"), &group));
            }
        }
    }
    out
}

fn interpolant_figure() -> Vec<CatalogEntry> {
    SMOOTHER_INTERPOLANTS
        .into_iter()
        .map(|kind| {
            let mut v = Variant::new(Mechanism::Cda, Preset::Medium, Variables::BOTH, 10);
            v.time_every = 10;
            v.interpolant = kind;
            v.build(format!("fig10-{kind}"), "fig10")
        })
        .collect()
}

fn cost_figure() -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for k in [1, 10] {
        let group = format!("fig11-k{k}");
        for kind in SMOOTHER_INTERPOLANTS {
            let mut v = Variant::new(Mechanism::Cda, Preset::Medium, Variables::BOTH, 10);
            v.time_every = k;
            v.interpolant = kind;
            out.push(v.build(format!("{group}-{kind}"), &group));
        }
        let mut v = Variant::new(Mechanism::Na, Preset::Medium, Variables::BOTH, 10);
        v.time_every = k;
        out.push(v.build(format!("{group}-na"), &group));
    }
    out
}

fn noise_figure(fig: u32, preset: Preset) -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for (panel, stride) in PANELS {
        let group = format!("fig{fig}-{panel}");
        for mechanism in [Mechanism::Cda, Mechanism::Na] {
            let v = Variant::new(mechanism, preset, Variables::BOTH, stride);
            out.push(with_noise(v.build(format!("{group}-{mechanism}"), &group)));
        }
    }
    out
}

fn shear_figure(fig: u32, preset: Preset) -> Vec<CatalogEntry> {
    resolution_figure(fig, preset).into_iter().map(with_shear).collect()
}

/// Every catalogued scenario, in figure order.
pub fn scenario_catalog() -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    out.extend(resolution_figure(2, Preset::Small));
    out.extend(resolution_figure(3, Preset::Medium));
    out.extend(resolution_figure(4, Preset::Large));
    out.extend(time_figure(8, 10));
    out.extend(time_figure(9, 20));
    out.extend(interpolant_figure());
    out.extend(cost_figure());
    out.extend(noise_figure(12, Preset::Small));
    out.extend(noise_figure(13, Preset::Large));
    out.extend(shear_figure(17, Preset::Small));
    out.extend(shear_figure(18, Preset::Large));
    out
}

pub fn find_scenario(name: &str) -> Option<CatalogEntry> {
    scenario_catalog().into_iter().find(|e| e.name == name)
}
