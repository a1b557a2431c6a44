//! `simulate`: build a scenario, evolve it, persist the trajectory
//! directory. `observe`: recompute the diagnostics CSV from a stored run.

use crate::{overrides, EXIT_NUMERICAL};
use anyhow::{Context, Result};
use equiflow::io::{artifact_paths, load_trajectory_dir, persist_trajectory, write_observables_csv};
use equiflow::observables::compute_observable_series;
use equiflow::{estimate_singular_time, evolve, FlowState, ScenarioSpec, Termination};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
struct RunManifest {
    config: Value,
    content_hash: String,
    seed: u64,
    termination: String,
    flow: equiflow::FlowParams,
    record_stride: u32,
    singular_time: Option<equiflow::SingularTimeEstimate>,
    snapshots: Vec<equiflow::io::SnapshotIndexEntry>,
    artifacts: Vec<PathBuf>,
    duration_secs: f64,
}

pub fn run(config_path: &Path, out: Option<&Path>, ov: &[String], seed: u64) -> Result<u8> {
    let started = Instant::now();
    let raw = fs::read(config_path)
        .with_context(|| format!("cannot read config {}", config_path.display()))?;
    let mut doc: Value =
        serde_json::from_slice(&raw).with_context(|| "config is not valid JSON")?;
    overrides::apply(&mut doc, ov)?;
    let spec: ScenarioSpec = serde_json::from_value(doc.clone())
        .with_context(|| "config does not match the scenario schema")?;
    spec.validate()
        .map_err(anyhow::Error::from)
        .context("config validation failed")?;

    let out_dir = out.map(Path::to_path_buf).unwrap_or_else(|| spec.out_dir.clone());
    let created_out_dir = !out_dir.exists();
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;

    let effective_config = doc.clone();
    let hash = {
        let canonical = serde_json::to_vec(&effective_config)?;
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        format!("{:x}", hasher.finalize())
    };

    let result = (|| -> Result<(equiflow::Trajectory, u8)> {
        let curve = spec.build_curve(seed)?;
        let trajectory = evolve(FlowState::new(curve), &spec.flow, spec.record_stride)?;
        let status = if trajectory.termination == Termination::StepFailure {
            EXIT_NUMERICAL
        } else {
            0
        };
        Ok((trajectory, status))
    })();

    let (trajectory, status) = match result {
        Ok(v) => v,
        Err(e) => {
            // no partial outputs on failure
            if created_out_dir {
                let _ = fs::remove_dir_all(&out_dir);
            }
            return Err(e);
        }
    };

    let index = persist_trajectory(&out_dir, &trajectory)?;
    let times: Vec<f64> = trajectory.observables.times();
    let areas: Vec<f64> = trajectory.observables.areas();
    let singular_time = estimate_singular_time(&times, &areas).ok();

    let manifest = RunManifest {
        config: effective_config,
        content_hash: hash,
        seed,
        termination: trajectory.termination.as_str().to_string(),
        flow: spec.flow.clone(),
        record_stride: spec.record_stride,
        singular_time,
        artifacts: artifact_paths(index.len()),
        snapshots: index,
        duration_secs: started.elapsed().as_secs_f64(),
    };
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;

    println!(
        "{}: termination={} snapshots={} out={}",
        if status == 0 { "ok" } else { "step-failure" },
        manifest.termination,
        manifest.snapshots.len(),
        out_dir.display()
    );
    Ok(status)
}

pub fn observe(trajectory_dir: &Path, out: Option<&Path>, angles: Option<&Path>) -> Result<u8> {
    let (manifest, states) = load_trajectory_dir(trajectory_dir)?;
    let n = manifest.flow.as_ref().map(|f| f.n).unwrap_or(2);
    let series = compute_observable_series(&states, n)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| trajectory_dir.join("observables.csv"));
    write_observables_csv(&path, &series)?;
    if let Some(angles_path) = angles {
        #[derive(Serialize)]
        struct AngleRecord {
            time: f64,
            theta: Vec<f64>,
            included: Vec<bool>,
        }
        let mut records = Vec::with_capacity(states.len());
        for s in &states {
            let profile = equiflow::lagrangian_angle(&s.curve, n)?;
            records.push(AngleRecord {
                time: s.time,
                theta: profile.values,
                included: profile.included,
            });
        }
        fs::write(angles_path, serde_json::to_vec_pretty(&records)?)?;
    }
    println!("ok: {} rows -> {}", series.rows.len(), path.display());
    Ok(0)
}
