use crate::error::{Error, Result};
use crate::grid::{GridSpec, State};

/// Values below this are clipped before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-14;

/// Column labels in `[theta, u, v]` order.
pub const COMPONENTS: [&str; 3] = ["theta", "u", "v"];

/// Flag bits marking components whose reference norm vanished.
pub const FLAG_THETA: u8 = 1;
pub const FLAG_U: u8 = 2;
pub const FLAG_V: u8 = 4;

/// Relative errors at one instant, `[theta, u, v]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrmseRecord {
    pub t: f64,
    pub values: [f64; 3],
    /// Bit `k` set when component `k` is an absolute norm.
    pub flags: u8,
}

impl RrmseRecord {
    pub fn theta(&self) -> f64 {
        self.values[0]
    }

    pub fn u(&self) -> f64 {
        self.values[1]
    }

    pub fn v(&self) -> f64 {
        self.values[2]
    }
}

/// `‖est − ref‖₂ / ‖ref‖₂` per variable, or `‖est − ref‖₂` where `‖ref‖₂ = 0`.
pub fn rrmse(estimate: &State, reference: &State, grid: &GridSpec) -> Result<RrmseRecord> {
    estimate.check_matches(grid)?;
    reference.check_matches(grid)?;
    let pairs = [
        (&estimate.theta, &reference.theta),
        (&estimate.u, &reference.u),
        (&estimate.v, &reference.v),
    ];
    let mut values = [0.0; 3];
    let mut flags = 0;
    for (k, (e, r)) in pairs.into_iter().enumerate() {
        let diff = e.distance2(r);
        let denom = r.norm2();
        if denom == 0.0 {
            values[k] = diff;
            flags |= 1 << k;
        } else {
            values[k] = diff / denom;
        }
    }
    Ok(RrmseRecord { t: estimate.t, values, flags })
}

/// Error history of one assimilated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RrmseSeries {
    /// Error of the initial states, before any step.
    pub initial: RrmseRecord,
    /// One record after every step.
    pub records: Vec<RrmseRecord>,
}

impl RrmseSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn component(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(move |r| r.values[k])
    }

    /// Mean over the last tenth of the records (at least one).
    pub fn terminal(&self) -> [f64; 3] {
        let n = self.records.len();
        let tail = n.div_ceil(10).max(1).min(n);
        let mut out = [0.0; 3];
        if n == 0 {
            return out;
        }
        for r in &self.records[n - tail..] {
            for (o, v) in out.iter_mut().zip(r.values) {
                *o += v;
            }
        }
        out.map(|x| x / tail as f64)
    }

    /// First time component `k` drops below `threshold`.
    pub fn first_below(&self, k: usize, threshold: f64) -> Option<f64> {
        self.records.iter().find(|r| r.values[k] < threshold).map(|r| r.t)
    }

    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(self.initial.t, |r| r.t)
    }
}

/// Fitted `C·exp(−β t)` per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub amplitude: [f64; 3],
    pub rate: [f64; 3],
}

/// Least-squares fit of `log y = log C − β t`; returns `(C, β)`.
pub fn fit_log_linear(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(Error::config("decay fit needs at least two matching points"));
    }
    let n = t.len() as f64;
    let logs: Vec<f64> = y.iter().map(|&v| v.max(LOG_FLOOR).ln()).collect();
    let tm = t.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&ti, &li) in t.iter().zip(&logs) {
        sxy += (ti - tm) * (li - lm);
        sxx += (ti - tm) * (ti - tm);
    }
    if sxx == 0.0 {
        return Err(Error::config("decay fit window contains a single instant"));
    }
    let slope = sxy / sxx;
    Ok(((lm - slope * tm).exp(), -slope))
}

/// Fit the records with `t_a ≤ t ≤ t_b`.
pub fn fit_decay_rate(series: &RrmseSeries, window: (f64, f64)) -> Result<DecayFit> {
    let (ta, tb) = window;
    let first = series.records.first().map_or(f64::NAN, |r| r.t);
    let last = series.final_time();
    let slack = 1e-9 * last.abs().max(1.0);
    if !(ta < tb) || ta < first - slack || tb > last + slack {
        return Err(Error::config(format!(
            "decay window [{ta}, {tb}] is not inside the series range [{first}, {last}]"
        )));
    }
    let picked: Vec<&RrmseRecord> =
        series.records.iter().filter(|r| r.t >= ta - slack && r.t <= tb + slack).collect();
    let t: Vec<f64> = picked.iter().map(|r| r.t).collect();
    let mut fit = DecayFit { amplitude: [0.0; 3], rate: [0.0; 3] };
    for k in 0..3 {
        let y: Vec<f64> = picked.iter().map(|r| r.values[k]).collect();
        let (c, b) = fit_log_linear(&t, &y)?;
        fit.amplitude[k] = c;
        fit.rate[k] = b;
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Field;

    fn busy(g: &GridSpec) -> State {
        let mut s = State::zeros(g);
        s.theta = Field::from_fn(g, s.theta.location(), |i, j| (i as f64 * 0.3).sin() + j as f64);
        s.u = Field::from_fn(g, s.u.location(), |i, j| (i * j) as f64 - 3.0);
        s.v = Field::from_fn(g, s.v.location(), |i, j| 1.0 + (i + j) as f64);
        s
    }

    fn series(f: impl Fn(f64) -> f64, n: usize, dt: f64) -> RrmseSeries {
        let rec = |t: f64| RrmseRecord { t, values: [f(t); 3], flags: 0 };
        RrmseSeries { initial: rec(0.0), records: (1..=n).map(|k| rec(k as f64 * dt)).collect() }
    }

    #[test]
    fn identical_states_have_zero_error() {
        let g = GridSpec::new(8, 4, 2.0, 1.0).unwrap();
        let s = busy(&g);
        let r = rrmse(&s, &s, &g).unwrap();
        assert_eq!(r.values, [0.0; 3]);
        assert_eq!(r.flags, 0);
    }

    #[test]
    fn zero_and_doubled_estimates_give_one() {
        let g = GridSpec::new(8, 4, 2.0, 1.0).unwrap();
        let s = busy(&g);
        let zero = rrmse(&State::zeros(&g), &s, &g).unwrap();
        let mut twice = s.clone();
        for f in [&mut twice.theta, &mut twice.u, &mut twice.v] {
            f.scale(2.0);
        }
        let doubled = rrmse(&twice, &s, &g).unwrap();
        for k in 0..3 {
            assert!((zero.values[k] - 1.0).abs() < 1e-15);
            assert!((doubled.values[k] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn vanishing_reference_is_flagged() {
        let g = GridSpec::new(8, 4, 2.0, 1.0).unwrap();
        let mut r = busy(&g);
        r.v.fill(0.0);
        let mut e = State::zeros(&g);
        e.v.fill(0.5);
        let rec = rrmse(&e, &r, &g).unwrap();
        assert_eq!(rec.flags, FLAG_V);
        assert!((rec.v() - e.v.norm2()).abs() < 1e-15);
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let s = series(|t| 0.7 * (-0.35 * t).exp(), 3000, 0.01);
        let fit = fit_decay_rate(&s, (2.0, 20.0)).unwrap();
        for k in 0..3 {
            assert!((fit.rate[k] - 0.35).abs() / 0.35 <= 1e-8);
            assert!((fit.amplitude[k] - 0.7).abs() / 0.7 <= 1e-8);
        }
    }

    #[test]
    fn constant_series_has_zero_rate() {
        let s = series(|_| 0.25, 100, 0.1);
        let fit = fit_decay_rate(&s, (1.0, 9.0)).unwrap();
        assert!(fit.rate.iter().all(|b| b.abs() < 1e-14));
    }

    #[test]
    fn window_outside_range_is_rejected() {
        let s = series(|_| 1.0, 100, 0.1);
        assert!(fit_decay_rate(&s, (2.0, 20.0)).is_err());
        assert!(fit_decay_rate(&s, (5.0, 5.0)).is_err());
    }

    #[test]
    fn terminal_mean_uses_last_tenth() {
        let s = series(|t| if t > 9.0 + 1e-9 { 1.0 } else { 5.0 }, 100, 0.1);
        assert_eq!(s.terminal(), [1.0; 3]);
        assert_eq!(s.first_below(0, 2.0).map(|t| (t * 10.0).round()), Some(91.0));
    }
}
