use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::diagnostics::Diagnostics;
use super::solver::{init_from_config, FieldState, Solver};
use crate::wavetrain::ModelParams;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub index: usize,
    pub step: u64,
    pub t: f64,
    pub u_file: String,
    pub v_file: String,
}

#[derive(Debug, Clone, Serialize)]
struct SnapshotIndex<'a> {
    nx: usize,
    ny: usize,
    rho: f64,
    params: ModelParams,
    dtype: &'static str,
    layout: &'static str,
    snapshots: &'a [SnapshotMeta],
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: FieldState,
    pub diagnostics: Diagnostics,
    pub snapshots: Vec<SnapshotMeta>,
}

fn write_field(path: &Path, data: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * data.len());
    for x in data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

/// Read a snapshot written by [`run`].
pub fn read_field(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn snapshot(dir: &Path, state: &FieldState, list: &mut Vec<SnapshotMeta>) -> Result<()> {
    let index = list.len();
    let u_file = format!("snap_{index:05}_u.bin");
    let v_file = format!("snap_{index:05}_v.bin");
    write_field(&dir.join(&u_file), &state.u)?;
    write_field(&dir.join(&v_file), &state.v)?;
    list.push(SnapshotMeta {
        index,
        step: state.steps,
        t: state.t,
        u_file,
        v_file,
    });
    Ok(())
}

/// Integrate `cfg` from its initial data to `t_end`.
///
/// Diagnostics are recorded at `t = 0` and every `output_every` steps.
/// Snapshots (raw little-endian `f64`, row-major) and a `snapshots.json`
/// index go to `out_dir` when it is given and `snapshot_every > 0`.
pub fn run(cfg: &SimConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let mut state = init_from_config(cfg)?;
    let mut solver = Solver::new(cfg)?;
    let mut diag = Diagnostics::new(2 * cfg.n_fronts);
    let mut snaps = Vec::new();
    let snap_dir: Option<PathBuf> = match out_dir {
        Some(d) if cfg.snapshot_every > 0 => {
            fs::create_dir_all(d)?;
            Some(d.to_path_buf())
        }
        _ => None,
    };
    solver.record(&state, &mut diag)?;
    if let Some(d) = &snap_dir {
        snapshot(d, &state, &mut snaps)?;
    }
    let steps = cfg.steps();
    log::info!("running {steps} steps on a {}x{} grid", cfg.nx, cfg.ny);
    for _ in 0..steps {
        solver.step(&mut state)?;
        if state.steps % cfg.output_every as u64 == 0 {
            solver.record(&state, &mut diag)?;
        }
        if let Some(d) = &snap_dir {
            if state.steps % cfg.snapshot_every as u64 == 0 {
                snapshot(d, &state, &mut snaps)?;
            }
        }
    }
    if let Some(d) = &snap_dir {
        let index = SnapshotIndex {
            nx: cfg.nx,
            ny: cfg.ny,
            rho: cfg.params.rho,
            params: cfg.params,
            dtype: "f64-le",
            layout: "row-major, ny rows of nx",
            snapshots: &snaps,
        };
        fs::write(d.join("snapshots.json"), serde_json::to_string_pretty(&index)?)?;
    }
    Ok(RunOutput {
        state,
        diagnostics: diag,
        snapshots: snaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshots_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimConfig {
            params: ModelParams {
                epsilon: 0.05,
                tau: 1.0,
                theta: -2.0,
                rho: 1.0,
            },
            nx: 64,
            dt: 1e-5,
            t_end: 1e-4,
            output_every: 5,
            snapshot_every: 5,
            ..Default::default()
        };
        let out = run(&cfg, Some(dir.path())).unwrap();
        assert_eq!(out.snapshots.len(), 3);
        assert_eq!(out.diagnostics.records.len(), 3);
        let u = read_field(&dir.path().join(&out.snapshots[2].u_file)).unwrap();
        assert_eq!(u, out.state.u);
        let index: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("snapshots.json")).unwrap()).unwrap();
        assert_eq!(index["snapshots"].as_array().unwrap().len(), 3);
    }
}
