//! On-disk formats: curve snapshot JSON, trajectory directories and the
//! observables CSV. Floating-point values round-trip at full precision.

use crate::error::{Error, Result};
use crate::flow::{FlowState, Trajectory};
use crate::geometry::{DiscreteCurve, PlanarPoint, Symmetry};
use crate::observables::{ObservableSeries, OBSERVABLE_COLUMNS};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Serialize, Deserialize)]
struct SnapshotJson {
    symmetry: String,
    n_nodes: usize,
    nodes: Vec<[f64; 2]>,
    time: f64,
}

/// Writes one curve snapshot in the frozen JSON layout.
pub fn write_snapshot(path: &Path, state: &FlowState) -> Result<()> {
    let doc = SnapshotJson {
        symmetry: state.curve.symmetry().as_str().to_string(),
        n_nodes: state.curve.n_nodes(),
        nodes: state.curve.nodes().iter().map(|p| [p.x, p.y]).collect(),
        time: state.time,
    };
    fs::write(path, serde_json::to_vec_pretty(&doc)?)?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]; the step counter is not
/// part of the format and comes back as zero.
pub fn read_snapshot(path: &Path) -> Result<FlowState> {
    let doc: SnapshotJson = serde_json::from_slice(&fs::read(path)?)?;
    let symmetry = Symmetry::parse(&doc.symmetry).ok_or_else(|| {
        Error::InvalidParameter(format!("unknown symmetry tag {:?}", doc.symmetry))
    })?;
    if doc.nodes.len() != doc.n_nodes {
        return Err(Error::InvalidParameter(format!(
            "snapshot claims {} nodes but carries {}",
            doc.n_nodes,
            doc.nodes.len()
        )));
    }
    let nodes: Vec<PlanarPoint> = doc
        .nodes
        .iter()
        .map(|[x, y]| PlanarPoint::new(*x, *y))
        .collect();
    Ok(FlowState {
        curve: DiscreteCurve::new(nodes, symmetry)?,
        time: doc.time,
        step_count: 0,
    })
}

/// Entry of the trajectory snapshot index kept in the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotIndexEntry {
    pub file: String,
    pub time: f64,
    pub step: u64,
}

/// Writes `snapshots/NNNNNN.json` plus `observables.csv` under `dir` and
/// returns the snapshot index.
pub fn persist_trajectory(dir: &Path, trajectory: &Trajectory) -> Result<Vec<SnapshotIndexEntry>> {
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    let mut index = Vec::with_capacity(trajectory.snapshots.len());
    for (i, state) in trajectory.snapshots.iter().enumerate() {
        let name = format!("{i:06}.json");
        write_snapshot(&snap_dir.join(&name), state)?;
        index.push(SnapshotIndexEntry {
            file: format!("snapshots/{name}"),
            time: state.time,
            step: state.step_count,
        });
    }
    write_observables_csv(&dir.join("observables.csv"), &trajectory.observables)?;
    Ok(index)
}

/// Loads the recorded states of a trajectory directory given its index.
pub fn load_snapshots(dir: &Path, index: &[SnapshotIndexEntry]) -> Result<Vec<FlowState>> {
    let mut out = Vec::with_capacity(index.len());
    for entry in index {
        let mut state = read_snapshot(&dir.join(&entry.file))?;
        state.step_count = entry.step;
        out.push(state);
    }
    Ok(out)
}

/// Writes the diagnostics CSV in the frozen column order.
pub fn write_observables_csv(path: &Path, series: &ObservableSeries) -> Result<()> {
    let mut out = String::new();
    out.push_str(&OBSERVABLE_COLUMNS.join(","));
    out.push('\n');
    for r in &series.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.time,
            r.area,
            r.area_rate,
            r.max_curvature,
            r.min_seg_len,
            r.gaussian_density,
            r.theta_min,
            r.theta_max,
            r.cone_width
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads back an observables CSV (column order is fixed).
pub fn read_observables_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidParameter("empty observables csv".into()))?;
    if header != OBSERVABLE_COLUMNS.join(",") {
        return Err(Error::InvalidParameter(format!(
            "unexpected csv header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|v| v.parse::<f64>()).collect();
        let vals = vals.map_err(|e| {
            Error::InvalidParameter(format!("csv line {}: {e}", lineno + 2))
        })?;
        if vals.len() != OBSERVABLE_COLUMNS.len() {
            return Err(Error::InvalidParameter(format!(
                "csv line {} has {} fields",
                lineno + 2,
                vals.len()
            )));
        }
        rows.push(vals);
    }
    Ok(rows)
}

/// Minimal view of a run manifest needed to reload a trajectory; extra
/// fields written by the front end are ignored.
#[derive(Debug, Deserialize)]
pub struct ManifestView {
    pub snapshots: Vec<SnapshotIndexEntry>,
    #[serde(default)]
    pub termination: Option<String>,
    #[serde(default)]
    pub flow: Option<crate::flow::FlowParams>,
}

/// Loads `manifest.json` plus every indexed snapshot from a run directory.
pub fn load_trajectory_dir(dir: &Path) -> Result<(ManifestView, Vec<FlowState>)> {
    let manifest_path = dir.join("manifest.json");
    let manifest: ManifestView = serde_json::from_slice(&fs::read(&manifest_path)?)?;
    let states = load_snapshots(dir, &manifest.snapshots)?;
    Ok((manifest, states))
}

/// Root-relative artifact paths produced by a simulation run.
pub fn artifact_paths(index_len: usize) -> Vec<PathBuf> {
    let mut v = vec![PathBuf::from("manifest.json"), PathBuf::from("observables.csv")];
    for i in 0..index_len {
        v.push(PathBuf::from(format!("snapshots/{i:06}.json")));
    }
    v
}
