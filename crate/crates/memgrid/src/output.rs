//! File emission: plain-text matrix maps, CSV series, path report, run
//! metadata and the per-directory manifest.
//!
//! All numeric formatting uses the shortest round-tripping decimal form, so
//! identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::{RunArtifacts, SweepArtifacts, UnitMaps};

pub const SCHEMA_VERSION: u32 = 1;

/// One emitted file: name plus its dimension line for the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    /// "RxC+RxC" for unit maps, sample/line count for series and reports.
    pub dims: String,
}

/// Index of everything emitted into one directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = format!(
            "schema {}\nconfig {}\n",
            self.schema_version, self.config_hash
        );
        for e in &self.entries {
            let _ = writeln!(s, "{} {}", e.name, e.dims);
        }
        s
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{}", v)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io { path, source: e })
}

fn render_unit_maps(maps: &UnitMaps) -> String {
    let mut s = String::new();
    for row in &maps.horizontal {
        let line: Vec<String> = row.iter().map(|&v| fmt_value(v)).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s.push('\n');
    for row in &maps.vertical {
        let line: Vec<String> = row.iter().map(|&v| fmt_value(v)).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

fn map_dims(maps: &UnitMaps) -> String {
    format!(
        "{}x{}+{}x{}",
        maps.horizontal.len(),
        maps.horizontal.first().map_or(0, |r| r.len()),
        maps.vertical.len(),
        maps.vertical.first().map_or(0, |r| r.len())
    )
}

fn render_path_report(art: &RunArtifacts) -> String {
    let report = &art.path_report;
    let mut s = String::new();
    match &report.path {
        Some(path) => {
            let nodes: Vec<String> = path.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(s, "path {}", nodes.join(" "));
        }
        None => {
            let _ = writeln!(s, "path none");
        }
    }
    let _ = writeln!(s, "path_length {}", report.path_length);
    let _ = writeln!(s, "extra_on_count {}", report.extra_on_count);
    let _ = writeln!(s, "on_unit_count {}", report.on_units.len());
    for (a, b) in &report.on_units {
        let _ = writeln!(s, "on_unit {}-{}", a, b);
    }
    s
}

fn render_meta(art: &RunArtifacts) -> String {
    format!(
        "schema {}\nsteady {}\nsteps {}\nsim_seconds {}\n",
        SCHEMA_VERSION,
        art.meta.steady,
        art.meta.steps,
        fmt_value(art.meta.sim_seconds)
    )
}

fn render_entropy_csv(series: &crate::analysis::EntropySeries) -> String {
    let mut s = String::from("t_seconds,t_normalized,sigma\n");
    for sample in &series.samples {
        let _ = writeln!(
            s,
            "{},{},{}",
            fmt_value(sample.t_seconds),
            fmt_value(sample.t_normalized),
            fmt_value(sample.sigma)
        );
    }
    s
}

fn render_switching_csv(art: &RunArtifacts, series: &[crate::analysis::RateSeries]) -> String {
    let mut header = String::from("t_mid_seconds,t_mid_normalized");
    for rs in series {
        let _ = write!(
            header,
            ",r{}c{}-r{}c{}",
            rs.unit.0.row, rs.unit.0.col, rs.unit.1.row, rs.unit.1.col
        );
    }
    let mut s = header;
    s.push('\n');
    let t_final = art.meta.sim_seconds;
    let n = series.first().map_or(0, |rs| rs.samples.len());
    for i in 0..n {
        let t = series[0].samples[i].0;
        let norm = if t_final > 0.0 { t / t_final } else { 0.0 };
        let _ = write!(s, "{},{}", fmt_value(t), fmt_value(norm));
        for rs in series {
            let _ = write!(s, ",{}", fmt_value(rs.samples[i].1));
        }
        s.push('\n');
    }
    s
}

/// Write one run's artifact files plus `manifest.txt` into `dir`, creating
/// it if needed. Returns the manifest.
pub fn emit_outputs(art: &RunArtifacts, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut entries = Vec::new();
    let maps = [
        ("resistance_initial.txt", &art.resistance_initial),
        ("resistance_final.txt", &art.resistance_final),
        ("current_initial.txt", &art.current_initial),
        ("current_final.txt", &art.current_final),
    ];
    for (name, m) in maps {
        write_file(dir, name, &render_unit_maps(m))?;
        entries.push(ManifestEntry {
            name: name.into(),
            dims: map_dims(m),
        });
    }
    write_file(dir, "path_report.txt", &render_path_report(art))?;
    entries.push(ManifestEntry {
        name: "path_report.txt".into(),
        dims: format!("{}", art.path_report.path_length),
    });
    write_file(dir, "run_meta.txt", &render_meta(art))?;
    entries.push(ManifestEntry {
        name: "run_meta.txt".into(),
        dims: format!("{}", art.meta.steps),
    });

    if let Some(series) = &art.entropy {
        write_file(dir, "entropy.csv", &render_entropy_csv(series))?;
        entries.push(ManifestEntry {
            name: "entropy.csv".into(),
            dims: format!("{}", series.samples.len()),
        });
    }
    if let Some(series) = &art.switching {
        write_file(
            dir,
            "switching_rates.csv",
            &render_switching_csv(art, series),
        )?;
        entries.push(ManifestEntry {
            name: "switching_rates.csv".into(),
            dims: format!("{}", series.first().map_or(0, |rs| rs.samples.len())),
        });
    }

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config_hash: art.config.hash(),
        entries,
    };
    write_file(dir, "manifest.txt", &manifest.render())?;
    Ok(manifest)
}

/// File-safe label for a memory-content ratio: `20`, `1.25`, ...
fn ratio_label(ratio: f64) -> String {
    format!("{}", ratio)
}

/// Write one entropy CSV per sweep entry plus a summary and manifest.
pub fn emit_sweep_outputs(sweep: &SweepArtifacts, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut entries = Vec::new();
    let mut summary = String::from("ratio,r_on,amplitude,sigma_initial,sigma_final,status\n");
    for (&(r_on, amplitude), result) in sweep.pairs.iter().zip(&sweep.series) {
        let ratio = sweep.config.device.r_off / r_on;
        match result {
            Ok(series) => {
                let name = format!("entropy_ratio_{}.csv", ratio_label(series.ratio));
                write_file(dir, &name, &render_entropy_csv(series))?;
                entries.push(ManifestEntry {
                    name,
                    dims: format!("{}", series.samples.len()),
                });
                let _ = writeln!(
                    summary,
                    "{},{},{},{},{},ok",
                    fmt_value(ratio),
                    fmt_value(r_on),
                    fmt_value(amplitude),
                    fmt_value(series.initial_sigma()),
                    fmt_value(series.final_sigma())
                );
            }
            Err(e) => {
                let _ = writeln!(
                    summary,
                    "{},{},{},,,error: {}",
                    fmt_value(ratio),
                    fmt_value(r_on),
                    fmt_value(amplitude),
                    e
                );
            }
        }
    }
    write_file(dir, "sweep_summary.csv", &summary)?;
    entries.push(ManifestEntry {
        name: "sweep_summary.csv".into(),
        dims: format!("{}", sweep.pairs.len()),
    });
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config_hash: sweep.config.hash(),
        entries,
    };
    write_file(dir, "manifest.txt", &manifest.render())?;
    Ok(manifest)
}

/// The two phases of a damage-and-heal run, in `initial/` and `healed/`
/// subdirectories.
pub fn emit_heal_outputs(
    phase1: &RunArtifacts,
    phase2: &RunArtifacts,
    dir: &Path,
) -> Result<(Manifest, Manifest)> {
    let m1 = emit_outputs(phase1, &dir.join("initial"))?;
    let m2 = emit_outputs(phase2, &dir.join("healed"))?;
    Ok((m1, m2))
}

/// Directory listing of emitted artifact files (excluding the manifest),
/// used by tests.
pub fn artifact_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let rd = fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    for entry in rd {
        let entry = entry.map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        if entry.path().is_file() && entry.file_name() != "manifest.txt" {
            out.push(entry.path());
        }
    }
    out.sort();
    Ok(out)
}
