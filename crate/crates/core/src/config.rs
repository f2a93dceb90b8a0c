//! Scenario files: line-oriented `key = value` pairs grouped under
//! `[section]` headers. `#` starts a comment. Keys may appear once.
//!
//! | section        | key                | default                         |
//! |----------------|--------------------|---------------------------------|
//! | `scenario`     | `name`             | `run`                           |
//! | `grid`         | `nx`, `ny`         | 200, 100                        |
//! |                | `lx`, `ly`         | 2.0, 1.0                        |
//! | `solver`       | `ra`, `pr`, `dt`   | required                        |
//! |                | `nsteps`           | required                        |
//! | `initial`      | `reference`        | `reference`                     |
//! |                | `assimilated`      | `zero`                          |
//! |                | `shear_amplitude`  | 0.5                             |
//! |                | `shear_wavelength` | 20                              |
//! |                | `shear_y_min`      | 0.4                             |
//! |                | `shear_y_max`      | 0.6                             |
//! | `observations` | `stride`           | required                        |
//! |                | `time_every`       | 1                               |
//! |                | `variables`        | `tv` (`t`, `v` or `tv`)         |
//! |                | `hold`             | `last` (`last` or `arrival`)    |
//! | `nudging`      | `mechanism`        | required (`cda` or `na`)        |
//! |                | `preset`           | none (`small`, `medium`, `large`) |
//! |                | `mu_theta`, `mu_u` | from preset                     |
//! |                | `alpha_theta`, `alpha_u` | from preset               |
//! |                | `interpolant`      | `piecewise_constant`            |
//! | `noise`        | `epsilon`          | 0                               |
//! |                | `seed`             | 0                               |
//! | `output`       | `snapshot_steps`   | `nsteps`                        |
//! |                | `decay_window`     | `2, 20`                         |
//!
//! A preset sets the coefficients of the observed variables; explicit
//! coefficients override it. Without a preset, the coefficients of the
//! active mechanism must be given explicitly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::assimilation::{
    HoldMode, InterpolantKind, Mechanism, NoiseModel, NudgeSpec, ObservationPolicy, Preset, Variables,
};
use crate::error::{Error, Result};
use crate::experiments::{InitialCondition, ScenarioConfig, ShearParams, DEFAULT_DECAY_WINDOW};
use crate::grid::GridSpec;
use crate::solver::SolverParams;

const KEYS: &[(&str, &[&str])] = &[
    ("scenario", &["name"]),
    ("grid", &["nx", "ny", "lx", "ly"]),
    ("solver", &["ra", "pr", "dt", "nsteps"]),
    (
        "initial",
        &["reference", "assimilated", "shear_amplitude", "shear_wavelength", "shear_y_min", "shear_y_max"],
    ),
    ("observations", &["stride", "time_every", "variables", "hold"]),
    ("nudging", &["mechanism", "preset", "mu_theta", "mu_u", "alpha_theta", "alpha_u", "interpolant"]),
    ("noise", &["epsilon", "seed"]),
    ("output", &["snapshot_steps", "decay_window"]),
];

#[derive(Debug)]
struct Entry {
    line: usize,
    value: String,
}

struct Document {
    entries: BTreeMap<(String, String), Entry>,
    last_line: usize,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<&'static str> = None;
        let mut last_line = 0;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            last_line = line;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(line, None, "unterminated section header"))?
                    .trim();
                let known = KEYS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .ok_or_else(|| Error::parse(line, None, format!("unknown section `[{name}]`")))?;
                section = Some(known.0);
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::parse(line, None, format!("expected `key = value`, found `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| {
                Error::parse(line, Some(key), format!("`{key}` appears before any section header"))
            })?;
            let allowed = KEYS.iter().find(|(s, _)| *s == sec).map_or(&[][..], |(_, k)| k);
            if !allowed.contains(&key) {
                return Err(Error::parse(line, Some(key), format!("unknown key `{key}` in section `[{sec}]`")));
            }
            if value.is_empty() {
                return Err(Error::parse(line, Some(key), format!("`{key}` has no value")));
            }
            let slot = (sec.to_owned(), key.to_owned());
            if let Some(prev) = entries.get(&slot) {
                let Entry { line: first, .. } = prev;
                return Err(Error::parse(line, Some(key), format!("`{key}` already set on line {first}")));
            }
            entries.insert(slot, Entry { line, value: value.to_owned() });
        }
        Ok(Self { entries, last_line })
    }

    fn raw(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_owned(), key.to_owned()))
    }

    fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<(T, usize)>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(|v| Some((v, e.line)))
                .map_err(|err| Error::parse(e.line, Some(key), format!("invalid `{key}` = `{}`: {err}", e.value))),
        }
    }

    fn or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(section, key)?.map_or(default, |(v, _)| v))
    }

    fn required<T: FromStr>(&self, section: &str, key: &str) -> Result<(T, usize)>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)?.ok_or_else(|| {
            Error::parse(self.last_line, Some(key), format!("missing required `{key}` in section `[{section}]`"))
        })
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.raw(section, key).map_or(self.last_line, |e| e.line)
    }

    fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.raw(section, key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|err| Error::parse(e.line, Some(key), format!("invalid `{key}` item `{s}`: {err}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}

fn parse_variables(s: &str) -> std::result::Result<Variables, String> {
    match s {
        "t" | "temperature" => Ok(Variables::TEMPERATURE),
        "v" | "velocity" => Ok(Variables::VELOCITY),
        "tv" | "both" => Ok(Variables::BOTH),
        _ => Err(format!("unknown variables `{s}` (expected t, v or tv)")),
    }
}

fn parse_hold(s: &str) -> std::result::Result<HoldMode, String> {
    match s {
        "last" => Ok(HoldMode::HoldLast),
        "arrival" => Ok(HoldMode::OnlyAtArrival),
        _ => Err(format!("unknown hold mode `{s}` (expected last or arrival)")),
    }
}

fn parse_ic(s: &str, shear: ShearParams) -> std::result::Result<InitialCondition, String> {
    match s {
        "reference" => Ok(InitialCondition::Reference),
        "zero" => Ok(InitialCondition::Zero),
        "shear" => Ok(InitialCondition::Shear(shear)),
        _ => Err(format!("unknown initial condition `{s}` (expected reference, zero or shear)")),
    }
}

fn with_line<T>(r: std::result::Result<T, String>, line: usize, key: &str) -> Result<T> {
    r.map_err(|m| Error::parse(line, Some(key), m))
}

/// Parse scenario text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let doc = Document::parse(text)?;
    let name = doc.or::<String>("scenario", "name", "run".to_owned())?;

    let paper = GridSpec::paper();
    let nx = doc.or("grid", "nx", paper.nx)?;
    let ny = doc.or("grid", "ny", paper.ny)?;
    let lx = doc.or("grid", "lx", paper.lx)?;
    let ly = doc.or("grid", "ly", paper.ly)?;
    let grid = GridSpec::new(nx, ny, lx, ly)
        .map_err(|e| Error::parse(doc.line_of("grid", "nx"), Some("nx"), e.to_string()))?;

    let (ra, _) = doc.required::<f64>("solver", "ra")?;
    let (pr, _) = doc.required::<f64>("solver", "pr")?;
    let (dt, dt_line) = doc.required::<f64>("solver", "dt")?;
    let (nsteps, nsteps_line) = doc.required::<usize>("solver", "nsteps")?;
    let params = SolverParams::new(ra, pr, dt).map_err(|e| Error::parse(dt_line, Some("dt"), e.to_string()))?;
    if nsteps == 0 {
        return Err(Error::parse(nsteps_line, Some("nsteps"), "`nsteps` must be at least 1"));
    }

    let defaults = ShearParams::default();
    let shear = ShearParams {
        amplitude: doc.or("initial", "shear_amplitude", defaults.amplitude)?,
        wavelength: doc.or("initial", "shear_wavelength", defaults.wavelength)?,
        y_min: doc.or("initial", "shear_y_min", defaults.y_min)?,
        y_max: doc.or("initial", "shear_y_max", defaults.y_max)?,
    };
    let ic = |key: &str, default: &str| -> Result<InitialCondition> {
        let raw = doc.or::<String>("initial", key, default.to_owned())?;
        let line = doc.line_of("initial", key);
        let ic = with_line(parse_ic(&raw, shear), line, key)?;
        ic.validate().map_err(|e| Error::parse(line, Some(key), e.to_string()))?;
        Ok(ic)
    };
    let reference_ic = ic("reference", "reference")?;
    let assimilated_ic = ic("assimilated", "zero")?;

    let (stride, stride_line) = doc.required::<usize>("observations", "stride")?;
    if stride == 0 || grid.nx % stride != 0 || grid.ny % stride != 0 {
        return Err(Error::parse(
            stride_line,
            Some("stride"),
            format!("`stride` = {stride} must divide nx = {} and ny = {}", grid.nx, grid.ny),
        ));
    }
    let time_every = doc.or("observations", "time_every", 1usize)?;
    if time_every == 0 {
        return Err(Error::parse(doc.line_of("observations", "time_every"), Some("time_every"), "`time_every` must be at least 1"));
    }
    let variables = with_line(
        parse_variables(&doc.or::<String>("observations", "variables", "tv".to_owned())?),
        doc.line_of("observations", "variables"),
        "variables",
    )?;
    let hold = with_line(
        parse_hold(&doc.or::<String>("observations", "hold", "last".to_owned())?),
        doc.line_of("observations", "hold"),
        "hold",
    )?;
    let policy = ObservationPolicy { stride, time_every, variables, hold };

    let (mechanism, mech_line) = doc.required::<String>("nudging", "mechanism")?;
    let mechanism: Mechanism = with_line(mechanism.parse(), mech_line, "mechanism")?;
    let interpolant = match doc.get::<String>("nudging", "interpolant")? {
        Some((s, line)) => with_line(s.parse::<InterpolantKind>(), line, "interpolant")?,
        None => InterpolantKind::PiecewiseConstant,
    };
    let preset = match doc.get::<String>("nudging", "preset")? {
        Some((s, line)) => Some(with_line(s.parse::<Preset>(), line, "preset")?),
        None => None,
    };
    let mut spec = match preset {
        Some(p) => NudgeSpec::from_preset(mechanism, p, variables, interpolant),
        None => NudgeSpec { interpolant, ..NudgeSpec::disabled(mechanism) },
    };
    let active: [&str; 2] = match mechanism {
        Mechanism::Cda => ["mu_theta", "mu_u"],
        Mechanism::Na => ["alpha_theta", "alpha_u"],
    };
    if preset.is_none() && active.iter().all(|k| doc.raw("nudging", k).is_none()) {
        return Err(Error::parse(
            doc.line_of("nudging", "mechanism"),
            Some("preset"),
            format!("give either `preset` or `{}`/`{}`", active[0], active[1]),
        ));
    }
    for (key, slot) in [
        ("mu_theta", &mut spec.mu_theta),
        ("mu_u", &mut spec.mu_u),
        ("alpha_theta", &mut spec.alpha_theta),
        ("alpha_u", &mut spec.alpha_u),
    ] {
        if let Some((v, line)) = doc.get::<f64>("nudging", key)? {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::parse(line, Some(key), format!("`{key}` must be finite and >= 0, got {v}")));
            }
            *slot = v;
        }
    }

    let epsilon = doc.or("noise", "epsilon", 0.0f64)?;
    let seed = doc.or("noise", "seed", 0u64)?;
    let noise = NoiseModel::new(epsilon, seed)
        .map_err(|e| Error::parse(doc.line_of("noise", "epsilon"), Some("epsilon"), e.to_string()))?;

    let snapshot_steps = doc.list::<usize>("output", "snapshot_steps")?.unwrap_or_else(|| vec![nsteps]);
    if let Some(&s) = snapshot_steps.iter().find(|&&s| s > nsteps) {
        return Err(Error::parse(
            doc.line_of("output", "snapshot_steps"),
            Some("snapshot_steps"),
            format!("snapshot step {s} is beyond nsteps = {nsteps}"),
        ));
    }
    let decay_window = match doc.list::<f64>("output", "decay_window")? {
        None => DEFAULT_DECAY_WINDOW,
        Some(w) if w.len() == 2 && w[0] < w[1] => (w[0], w[1]),
        Some(_) => {
            return Err(Error::parse(
                doc.line_of("output", "decay_window"),
                Some("decay_window"),
                "`decay_window` needs two increasing times `t_a, t_b`",
            ))
        }
    };

    let config = ScenarioConfig {
        name,
        grid,
        params,
        reference_ic,
        assimilated_ic,
        policy,
        spec,
        noise,
        nsteps,
        snapshot_steps,
        decay_window,
    };
    config.validate().map_err(|e| Error::parse(doc.last_line, None, e.to_string()))?;
    Ok(config)
}

/// Read and parse a scenario file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config_str(&text)
}

/// Render a configuration in the file format; parsing the output gives
/// back an equal configuration.
pub fn render_config(c: &ScenarioConfig) -> String {
    let mut s = String::new();
    let ic = |ic: &InitialCondition| ic.name();
    let shear = [c.reference_ic, c.assimilated_ic]
        .into_iter()
        .find_map(|ic| match ic {
            InitialCondition::Shear(p) => Some(p),
            _ => None,
        });
    let _ = writeln!(s, "[scenario]\nname = {}\n", c.name);
    let _ = writeln!(s, "[grid]\nnx = {}\nny = {}\nlx = {:?}\nly = {:?}\n", c.grid.nx, c.grid.ny, c.grid.lx, c.grid.ly);
    let _ = writeln!(
        s,
        "[solver]\nra = {:?}\npr = {:?}\ndt = {:?}\nnsteps = {}\n",
        c.params.ra, c.params.pr, c.params.dt, c.nsteps
    );
    let _ = writeln!(s, "[initial]\nreference = {}\nassimilated = {}", ic(&c.reference_ic), ic(&c.assimilated_ic));
    if let Some(p) = shear {
        let _ = writeln!(
            s,
            "shear_amplitude = {:?}\nshear_wavelength = {:?}\nshear_y_min = {:?}\nshear_y_max = {:?}",
            p.amplitude, p.wavelength, p.y_min, p.y_max
        );
    }
    let hold = match c.policy.hold {
        HoldMode::HoldLast => "last",
        HoldMode::OnlyAtArrival => "arrival",
    };
    let _ = writeln!(
        s,
        "\n[observations]\nstride = {}\ntime_every = {}\nvariables = {}\nhold = {hold}\n",
        c.policy.stride,
        c.policy.time_every,
        c.policy.variables.tag()
    );
    let _ = writeln!(
        s,
        "[nudging]\nmechanism = {}\nmu_theta = {:?}\nmu_u = {:?}\nalpha_theta = {:?}\nalpha_u = {:?}\ninterpolant = {}\n",
        c.spec.mechanism, c.spec.mu_theta, c.spec.mu_u, c.spec.alpha_theta, c.spec.alpha_u, c.spec.interpolant
    );
    let _ = writeln!(s, "[noise]\nepsilon = {:?}\nseed = {}\n", c.noise.epsilon(), c.noise.seed);
    let steps: Vec<String> = c.snapshot_steps.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(s, "[output]\nsnapshot_steps = {}", steps.join(", "));
    let _ = writeln!(s, "decay_window = {:?}, {:?}", c.decay_window.0, c.decay_window.1);
    s
}
