//! `rescale`: central tangent-flow rescalings (area-normalized or dyadic
//! schedule) with line-pair fits, annulus regularity and multiplicity, plus
//! an optional Type-II point-picking section.

use anyhow::{anyhow, bail, Context, Result};
use equiflow::io::load_trajectory_dir;
use equiflow::observables::enclosed_area;
use equiflow::rescale::RescaleEntry;
use equiflow::{
    analyze_rescaled, estimate_singular_time, type2_rescale, ObservableSeries, Symmetry,
    Termination, Trajectory,
};
use serde::Serialize;
use std::fs;
use std::path::Path;

/// Reference parabolic time for the dyadic schedule: level j is measured at
/// the snapshot closest to `t_est - s0 / 4^j`.
const DYADIC_S0: f64 = 1.0 / (2.0 * std::f64::consts::PI);

#[derive(Serialize)]
struct Type2Entry {
    k: u32,
    lambda: f64,
    pick_time: f64,
    center: [f64; 2],
    lambda_z_norm: f64,
}

#[derive(Serialize)]
struct RescaleReport {
    schedule: String,
    t_est: f64,
    t_lo: f64,
    t_hi: f64,
    annulus: [f64; 2],
    entries: Vec<RescaleEntry>,
    type2: Vec<Type2Entry>,
}

pub fn run(
    dir: &Path,
    schedule: &str,
    count: u32,
    annulus: &str,
    type2_grid: Option<&str>,
    out: Option<&Path>,
) -> Result<u8> {
    if count == 0 {
        bail!("schedule needs at least one entry");
    }
    let (r_in, r_out) = parse_annulus(annulus)?;
    let (manifest, states) = load_trajectory_dir(dir)?;
    if states.len() < 8 {
        bail!(
            "trajectory has only {} snapshots; rescaling needs at least 8 near termination",
            states.len()
        );
    }
    let first = states
        .first()
        .ok_or_else(|| anyhow!("trajectory is empty"))?;
    if first.curve.symmetry() != Symmetry::FigureEight {
        bail!(
            "rescale analysis applies to figure-eight trajectories, got {:?}",
            first.curve.symmetry()
        );
    }
    let n = manifest.flow.as_ref().map(|f| f.n).unwrap_or(2);

    let mut times = Vec::with_capacity(states.len());
    let mut areas = Vec::with_capacity(states.len());
    for s in &states {
        times.push(s.time);
        areas.push(enclosed_area(&s.curve)?);
    }
    let est = estimate_singular_time(&times, &areas)?;

    let picks: Vec<usize> = match schedule {
        "area-normalized" => area_normalized_picks(&areas, &times, est.t_est, count as usize),
        "dyadic" => dyadic_picks(&times, est.t_est, count as usize),
        other => bail!("unknown schedule {other:?}"),
    };
    if picks.is_empty() {
        bail!("no usable snapshots before the singular-time estimate");
    }

    let mut entries = Vec::with_capacity(picks.len());
    for &i in &picks {
        let lambda = match schedule {
            "area-normalized" => 1.0 / areas[i].sqrt(),
            _ => {
                // dyadic: lambda = 2^j with j recovered from the pick order
                let j = entries.len() as i32;
                2f64.powi(j)
            }
        };
        entries.push(analyze_rescaled(&states[i], est.t_est, lambda, n, r_in, r_out)?);
    }

    let mut type2 = Vec::new();
    if let Some(grid) = type2_grid {
        let trajectory = Trajectory {
            snapshots: states.clone(),
            observables: ObservableSeries::default(),
            termination: manifest
                .termination
                .as_deref()
                .and_then(termination_from_str)
                .unwrap_or(Termination::ReachedTMax),
        };
        for tok in grid.split(',') {
            let k: u32 = tok
                .trim()
                .parse()
                .with_context(|| format!("bad type2 grid entry {tok:?}"))?;
            let r = type2_rescale(&trajectory, k, est.t_est)?;
            type2.push(Type2Entry {
                k,
                lambda: r.lambda,
                pick_time: r.pick_time,
                center: [r.center.x, r.center.y],
                lambda_z_norm: r.lambda_z_norm,
            });
        }
    }

    let report = RescaleReport {
        schedule: schedule.to_string(),
        t_est: est.t_est,
        t_lo: est.t_lo,
        t_hi: est.t_hi,
        annulus: [r_in, r_out],
        entries,
        type2,
    };
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("rescale_report.json"));
    fs::write(&path, serde_json::to_vec_pretty(&report)?)?;
    println!(
        "ok: {} rescalings, {} type2 entries -> {}",
        report.entries.len(),
        report.type2.len(),
        path.display()
    );
    Ok(0)
}

fn parse_annulus(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("annulus must be r_in,r_out"))?;
    let r_in: f64 = a.trim().parse()?;
    let r_out: f64 = b.trim().parse()?;
    if !(0.0 < r_in && r_in < r_out) {
        bail!("annulus requires 0 < r_in < r_out");
    }
    Ok((r_in, r_out))
}

fn termination_from_str(s: &str) -> Option<Termination> {
    Some(match s {
        "reached_t_max" => Termination::ReachedTMax,
        "curvature_blowup" => Termination::CurvatureBlowup,
        "area_collapse" => Termination::AreaCollapse,
        "diameter_collapse" => Termination::DiameterCollapse,
        "step_failure" => Termination::StepFailure,
        _ => return None,
    })
}

/// Snapshot indices whose areas are closest to a geometric ladder from the
/// initial to the final recorded area, deduplicated and time-ordered.
fn area_normalized_picks(areas: &[f64], times: &[f64], t_est: f64, count: usize) -> Vec<usize> {
    let usable: Vec<usize> = (0..areas.len()).filter(|&i| times[i] < t_est).collect();
    if usable.is_empty() {
        return Vec::new();
    }
    let a_first = areas[usable[0]];
    let a_last = areas[*usable.last().unwrap()];
    let mut picks = Vec::new();
    for j in 0..count {
        let f = if count == 1 {
            1.0
        } else {
            j as f64 / (count - 1) as f64
        };
        let target = a_first * (a_last / a_first).powf(f);
        let best = usable
            .iter()
            .copied()
            .min_by(|&x, &y| {
                let dx = (areas[x].ln() - target.ln()).abs();
                let dy = (areas[y].ln() - target.ln()).abs();
                dx.partial_cmp(&dy).unwrap()
            })
            .unwrap();
        picks.push(best);
    }
    picks.dedup();
    picks
}

/// Snapshot indices closest to `t_est - s0 / 4^j` for levels j = 0..count.
fn dyadic_picks(times: &[f64], t_est: f64, count: usize) -> Vec<usize> {
    let usable: Vec<usize> = (0..times.len()).filter(|&i| times[i] < t_est).collect();
    if usable.is_empty() {
        return Vec::new();
    }
    let mut picks = Vec::new();
    for j in 0..count {
        let target = t_est - DYADIC_S0 / 4f64.powi(j as i32);
        let best = usable
            .iter()
            .copied()
            .min_by(|&x, &y| {
                let dx = (times[x] - target).abs();
                let dy = (times[y] - target).abs();
                dx.partial_cmp(&dy).unwrap()
            })
            .unwrap();
        picks.push(best);
    }
    picks.dedup();
    picks
}
