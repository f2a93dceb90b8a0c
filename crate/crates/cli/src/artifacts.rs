//! Files written for each scenario. Paths are returned relative to the
//! output root so the manifest stays independent of where it was run.

use std::fs;
use std::path::{Path, PathBuf};

use benard_cda::config::render_config;
use benard_cda::experiments::{ReferenceRun, ScenarioConfig, TwinResult};
use benard_cda::grid::State;
use benard_cda::io::{field_to_csv, field_to_pgm, write_observations_csv, write_rrmse_csv};
use benard_cda::Result;

pub const SUMMARY_HEADER: &str =
    "scenario,group,terminal_theta,terminal_u,terminal_v,rate_theta,rate_u,rate_v,max_divergence";
pub const TIMING_HEADER: &str = "scenario,group,seconds";

struct Sink<'a> {
    root: &'a Path,
    dir: PathBuf,
    files: Vec<String>,
}

impl<'a> Sink<'a> {
    fn new(root: &'a Path, name: &str) -> Result<Self> {
        let dir = root.join(name);
        fs::create_dir_all(dir.join("snapshots"))?;
        Ok(Self { root, dir, files: Vec::new() })
    }

    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        fs::write(&path, bytes)?;
        let shown = path.strip_prefix(self.root).unwrap_or(&path);
        self.files.push(shown.to_string_lossy().replace('\\', "/"));
        Ok(())
    }

    fn state(&mut self, step: usize, role: &str, state: &State) -> Result<()> {
        for (var, field) in [("theta", &state.theta), ("u", &state.u), ("v", &state.v)] {
            let stem = format!("snapshots/step{step:06}-{role}-{var}");
            self.put(&format!("{stem}.csv"), field_to_csv(field).as_bytes())?;
            let pgm = field_to_pgm(field);
            self.put(&format!("{stem}.pgm"), &pgm.bytes)?;
            self.put(&format!("{stem}.pgm.txt"), pgm.sidecar(var).as_bytes())?;
        }
        Ok(())
    }
}

/// Config, error history and snapshots of a finished twin experiment.
pub fn write_twin(root: &Path, config: &ScenarioConfig, result: &TwinResult) -> Result<Vec<String>> {
    let mut sink = Sink::new(root, &config.name)?;
    sink.put("config.txt", render_config(config).as_bytes())?;
    let mut rrmse = Vec::new();
    write_rrmse_csv(&result.series, &mut rrmse)?;
    sink.put("rrmse.csv", &rrmse)?;
    for snap in &result.snapshots {
        sink.state(snap.step, "reference", &snap.reference)?;
        sink.state(snap.step, "assimilated", &snap.assimilated)?;
    }
    Ok(sink.files)
}

/// Config, observation stream and snapshots of a reference-only run.
pub fn write_reference(root: &Path, config: &ScenarioConfig, run: &ReferenceRun) -> Result<Vec<String>> {
    let mut sink = Sink::new(root, &config.name)?;
    sink.put("config.txt", render_config(config).as_bytes())?;
    let mut obs = Vec::new();
    write_observations_csv(&run.observations, &mut obs)?;
    sink.put("observations.csv", &obs)?;
    for (step, state) in &run.snapshots {
        sink.state(*step, "reference", state)?;
    }
    Ok(sink.files)
}

/// One summary line; empty rate cells when no decay fit was possible.
pub fn summary_row(group: &str, result: &TwinResult) -> String {
    let t = result.series.terminal();
    let rates = match &result.fit {
        Some(fit) => fit.rate.map(|b| format!("{b:.16e}")),
        None => [String::new(), String::new(), String::new()],
    };
    format!(
        "{},{},{:.16e},{:.16e},{:.16e},{},{},{},{:.16e}",
        result.name, group, t[0], t[1], t[2], rates[0], rates[1], rates[2], result.max_divergence
    )
}
