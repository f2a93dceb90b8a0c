mod common;

use benard_cda::assimilation::{
    cda_tendency, extract_observations, interpolate, na_tendency, perturb_observations, CoarseSamples, HoldMode,
    InterpolantKind, Lattice, Mechanism, NoiseModel, NudgeProvider, NudgeSpec, ObservationPolicy, ObservedVariable,
    Preset, Variables,
};
use benard_cda::grid::{Field, GridSpec, Location, State};
use common::noise_field;
use proptest::prelude::*;

fn grid() -> GridSpec {
    GridSpec::new(40, 20, 2.0, 1.0).unwrap()
}

fn busy(g: &GridSpec, seed: u64) -> State {
    let mut s = State::zeros(g);
    s.u = noise_field(g, Location::UFace, seed);
    s.v = noise_field(g, Location::VFace, seed + 1);
    s.v.row_mut(0).fill(0.0);
    s.v.row_mut(g.ny).fill(0.0);
    s.theta = noise_field(g, Location::Center, seed + 2);
    s
}

fn policy(stride: usize, time_every: usize, hold: HoldMode) -> ObservationPolicy {
    ObservationPolicy { stride, time_every, variables: Variables::BOTH, hold }
}

fn kind_strategy() -> impl Strategy<Value = InterpolantKind> {
    prop::sample::select(InterpolantKind::ALL.to_vec())
}

fn loc_strategy() -> impl Strategy<Value = Location> {
    prop::sample::select(vec![Location::Center, Location::UFace, Location::VFace])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn interpolants_reproduce_constants(kind in kind_strategy(), loc in loc_strategy(), c in -5.0f64..5.0, stride in prop::sample::select(vec![2usize, 4, 5])) {
        let g = grid();
        let lattice = Lattice::new(&g, loc, stride).unwrap();
        let samples = CoarseSamples { values: vec![c; lattice.len()], lattice };
        let f = interpolate(&samples, kind, &g).unwrap();
        for x in f.interior() {
            prop_assert!((x - c).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }

    #[test]
    fn interpolants_are_linear(kind in kind_strategy(), loc in loc_strategy(), seed in 1u64..100_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = grid();
        let lattice = Lattice::new(&g, loc, 5).unwrap();
        let s1 = lattice.sample(&noise_field(&g, loc, seed));
        let s2 = lattice.sample(&noise_field(&g, loc, seed + 1));
        let mix: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| a * x + b * y).collect();
        let run = |v: Vec<f64>| interpolate(&CoarseSamples { lattice: lattice.clone(), values: v }, kind, &g).unwrap();
        let (f, f1, f2) = (run(mix), run(s1), run(s2));
        for ((x, y), z) in f.interior().zip(f1.interior()).zip(f2.interior()) {
            prop_assert!((x - (a * y + b * z)).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()) * 4.0);
        }
    }

    #[test]
    fn perfect_observations_give_zero_forcing(kind in kind_strategy(), seed in 1u64..100_000, stride in prop::sample::select(vec![2usize, 4, 5])) {
        let g = grid();
        let s = busy(&g, seed);
        let obs = extract_observations(&s, &g, &policy(stride, 1, HoldMode::HoldLast), 0).unwrap();
        for mech in [Mechanism::Cda, Mechanism::Na] {
            let spec = NudgeSpec::from_preset(mech, Preset::Large, Variables::BOTH, kind);
            let t = match mech {
                Mechanism::Cda => cda_tendency(&s, &obs, &spec, &g).unwrap(),
                Mechanism::Na => na_tendency(&s, &obs, &spec, &g).unwrap(),
            };
            prop_assert_eq!(t.max_abs(), 0.0);
        }
    }

    #[test]
    fn point_nudging_is_supported_on_the_lattice(seed in 1u64..100_000, stride in prop::sample::select(vec![2usize, 4, 5, 10])) {
        let g = grid();
        let truth = busy(&g, seed);
        let model = busy(&g, seed + 100);
        let obs = extract_observations(&truth, &g, &policy(stride, 1, HoldMode::HoldLast), 0).unwrap();
        let spec = NudgeSpec::from_preset(Mechanism::Na, Preset::Medium, Variables::BOTH, InterpolantKind::PiecewiseConstant);
        let t = na_tendency(&model, &obs, &spec, &g).unwrap();
        for (field, var) in [(&t.theta, ObservedVariable::Theta), (&t.u, ObservedVariable::U), (&t.v, ObservedVariable::V)] {
            let lattice = Lattice::new(&g, var.location(), stride).unwrap();
            let on: std::collections::HashSet<(usize, usize)> = lattice.points().collect();
            let (cols, rows) = field.shape();
            for j in 0..rows {
                for i in 0..cols {
                    if !on.contains(&(i, j)) {
                        prop_assert_eq!(field[(i, j)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn noise_is_reproducible_and_bounded(seed in any::<u64>(), step in 0usize..10_000, eps in 0.0f64..0.5) {
        let g = grid();
        let s = busy(&g, 9);
        let mut obs = extract_observations(&s, &g, &policy(5, 1, HoldMode::HoldLast), 0).unwrap();
        obs.step = step;
        let noise = NoiseModel::new(eps, seed).unwrap();
        let a = perturb_observations(&obs, &noise);
        let b = perturb_observations(&obs, &noise);
        prop_assert_eq!(&a, &b);
        for ((_, orig), (_, pert)) in obs.iter().zip(a.iter()) {
            for (x, y) in orig.values.iter().zip(&pert.values) {
                let (lo, hi) = ((1.0 - eps) * x, (1.0 + eps) * x);
                prop_assert!(*y >= lo.min(hi) && *y <= lo.max(hi));
            }
        }
    }
}

#[test]
fn multiplier_mean_matches_uniform_moments() {
    let eps = 0.05;
    let noise = NoiseModel::new(eps, 0x5EED_2019).unwrap();
    let n = 100_000;
    let mean = (0..n).map(|k| noise.multiplier(k / 50, ObservedVariable::Theta, k % 50)).sum::<f64>() / n as f64;
    let band = 3.0 * eps / (3.0 * n as f64).sqrt();
    assert!((mean - 1.0).abs() <= band, "mean {mean}, band {band}");
}

#[test]
fn zero_epsilon_leaves_observations_alone() {
    let g = grid();
    let obs = extract_observations(&busy(&g, 4), &g, &policy(4, 1, HoldMode::HoldLast), 3).unwrap();
    assert_eq!(perturb_observations(&obs, &NoiseModel::new(0.0, 77).unwrap()), obs);
}

fn provider_pattern(time_every: usize, hold: HoldMode, steps: usize) -> Vec<bool> {
    let g = grid();
    let p = policy(5, time_every, hold);
    let spec = NudgeSpec::from_preset(Mechanism::Cda, Preset::Medium, Variables::BOTH, InterpolantKind::Linear);
    let mut provider = NudgeProvider::new(p, spec, NoiseModel::none(), &g).unwrap();
    let truth = busy(&g, 1);
    let model = State::zeros(&g);
    (0..steps)
        .map(|n| {
            let fresh = p.arrives_at(n).then(|| extract_observations(&truth, &g, &p, n).unwrap());
            provider.tendency(n, &model, fresh.as_ref()).unwrap().is_some_and(|t| t.max_abs() > 0.0)
        })
        .collect()
}

#[test]
fn hold_modes_coincide_for_every_step_observations() {
    let g = grid();
    let p_hold = policy(5, 1, HoldMode::HoldLast);
    let p_arr = policy(5, 1, HoldMode::OnlyAtArrival);
    let spec = NudgeSpec::from_preset(Mechanism::Na, Preset::Small, Variables::BOTH, InterpolantKind::PiecewiseConstant);
    let mut a = NudgeProvider::new(p_hold, spec, NoiseModel::none(), &g).unwrap();
    let mut b = NudgeProvider::new(p_arr, spec, NoiseModel::none(), &g).unwrap();
    let model = busy(&g, 2);
    for n in 0..5 {
        let obs = extract_observations(&busy(&g, 10 + n as u64), &g, &p_hold, n).unwrap();
        assert_eq!(a.tendency(n, &model, Some(&obs)).unwrap(), b.tendency(n, &model, Some(&obs)).unwrap());
    }
}

#[test]
fn arrival_only_forcing_is_silent_nine_steps_in_ten() {
    let pattern = provider_pattern(10, HoldMode::OnlyAtArrival, 40);
    for (n, on) in pattern.iter().enumerate() {
        assert_eq!(*on, n % 10 == 0, "step {n}");
    }
    assert!(provider_pattern(10, HoldMode::HoldLast, 40).iter().all(|&on| on));
}

#[test]
fn no_forcing_before_the_first_observation() {
    let g = grid();
    let p = policy(5, 1, HoldMode::HoldLast);
    let spec = NudgeSpec::from_preset(Mechanism::Cda, Preset::Large, Variables::BOTH, InterpolantKind::PiecewiseConstant);
    let mut provider = NudgeProvider::new(p, spec, NoiseModel::none(), &g).unwrap();
    assert!(provider.tendency(0, &busy(&g, 3), None).unwrap().is_none());
}

#[test]
fn stride_twenty_on_the_paper_grid_is_ten_by_five() {
    let g = GridSpec::paper();
    let l = Lattice::new(&g, Location::Center, 20).unwrap();
    assert_eq!((l.cols.len(), l.rows.len()), (10, 5));
    let f = Field::from_fn(&g, Location::Center, |i, j| (i * 1000 + j) as f64);
    let samples = l.sample(&f);
    for ((i, j), x) in l.points().zip(samples) {
        assert_eq!(x, (i * 1000 + j) as f64);
    }
}
