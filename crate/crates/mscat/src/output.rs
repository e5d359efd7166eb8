//! CSV histories, JSON metadata and debug dumps.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mscat_core::kirchhoff::{BeamSum, KirchhoffOperator};
use serde_json::json;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::experiment::{History, Setup};

pub const CSV_HEADER: [&str; 3] = ["iteration_or_reflection", "log10_l2_error", "wall_seconds"];

/// 17 significant digits, enough to round-trip an `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Csv { path: path.display().to_string(), source: e })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Csv { path: path.display().to_string(), source: e }
}

/// Writes one history; `deterministic` zeroes the wall-clock column.
pub fn write_history(dir: &Path, h: &History, deterministic: bool) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{}.csv", h.label));
    let mut w = csv_writer(&path)?;
    w.write_record(CSV_HEADER).map_err(csv_err(&path))?;
    for r in &h.rows {
        let wall = if deterministic { 0.0 } else { r.wall_seconds };
        w.write_record([r.index.to_string(), format_float(r.log10_error), format_float(wall)])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// `git rev-parse HEAD` of the working directory, or `unknown`.
pub fn commit_hash() -> String {
    Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

pub fn write_metadata(
    dir: &Path,
    config: &ScenarioConfig,
    setup: &Setup,
    histories: &[History],
    deterministic: bool,
) -> Result<PathBuf, CliError> {
    let path = dir.join("metadata.json");
    let time = |s: f64| if deterministic { 0.0 } else { s };
    let methods: Vec<_> = histories
        .iter()
        .map(|h| {
            json!({
                "label": h.label,
                "method": h.method,
                "rows": h.rows.len(),
                "final_log10_error": h.rows.last().map(|r| r.log10_error),
                "first_below_tol": h.first_below(config.tol),
                "seconds": time(h.seconds),
                "note": h.note,
            })
        })
        .collect();
    let prediction = crate::experiment::predict_rate(&setup.scene, config.tol).ok();
    let doc = json!({
        "scenario": config.name,
        "config": config,
        "nodes": setup.problem.node_counts(),
        "unknowns": setup.problem.unknowns(),
        "commit": commit_hash(),
        "version": env!("CARGO_PKG_VERSION"),
        "rate_prediction": prediction,
        "timings": {
            "assembly_seconds": time(setup.assembly_seconds),
            "reference_seconds": time(setup.reference_seconds),
        },
        "methods": methods,
    });
    let text = serde_json::to_string_pretty(&doc).expect("metadata serializes");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Phase fields for depths `0 ..= depth` and the beams of `K^ℓ g`, one CSV per
/// depth and obstacle under `dir/phases` and `dir/beams`.
pub fn write_debug_dump(dir: &Path, setup: &Setup, depth: usize) -> Result<(), CliError> {
    if setup.problem.grids.len() != 2 {
        return Err(CliError::Config("debug dumps need a two-obstacle scene".into()));
    }
    let phases = dir.join("phases");
    let beams = dir.join("beams");
    for d in [&phases, &beams] {
        fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
    }
    let mut kop = KirchhoffOperator::new(&setup.problem, depth.max(1))?;
    kop.ensure_depth(depth.max(1))?;
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    for q in 0..=depth {
        for j in 0..2 {
            let field = kop.book.field(q, j)?;
            let path = phases.join(format!("phase_q{q}_obstacle{j}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record([
                "node",
                "param",
                "phase",
                "region",
                "launch_param",
                "source_param",
                "leg_length",
                "phase_second_derivative",
                "specular_residual",
            ])
            .map_err(csv_err(&path))?;
            for i in 0..field.len() {
                let ray = field.rays[i].as_ref();
                w.write_record([
                    i.to_string(),
                    format_float(field.params[i]),
                    format_float(field.phase[i]),
                    field.region[i].label().to_string(),
                    opt(ray.map(|r| r.launch_param)),
                    opt(ray.map(|r| r.source_param)),
                    opt(ray.map(|r| r.leg_length)),
                    opt(ray.map(|r| r.phase_second_derivative)),
                    opt(ray.map(|r| r.specular_residual)),
                ])
                .map_err(csv_err(&path))?;
            }
            w.flush().map_err(|e| CliError::io(&path, e))?;
        }
    }
    let g = kop.relabel(0, &setup.problem.initial_iterate())?;
    let mut term = BeamSum::single(0, g);
    for l in 0..=depth {
        for j in 0..2 {
            let beam = kop.beam(&term, l, j)?;
            let params = &kop.grids()[j].params;
            let path = beams.join(format!("beam_l{l}_obstacle{j}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record(["node", "param", "phase", "amplitude_re", "amplitude_im", "mask"])
                .map_err(csv_err(&path))?;
            for i in 0..beam.phase.len() {
                w.write_record([
                    i.to_string(),
                    format_float(params[i]),
                    format_float(beam.phase[i]),
                    format_float(beam.amplitude[i].re),
                    format_float(beam.amplitude[i].im),
                    u8::from(beam.mask[i]).to_string(),
                ])
                .map_err(csv_err(&path))?;
            }
            w.flush().map_err(|e| CliError::io(&path, e))?;
        }
        if l < depth {
            term = kop.apply(&term)?;
        }
    }
    Ok(())
}
