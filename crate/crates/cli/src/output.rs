//! Result files: CSV tables, a tab-separated plot table, an optional SVG
//! chart and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, ExperimentKind, MANIFEST_TABLE};
use crate::error::CliError;
use crate::experiment::{Outcome, ResultRow};
use crate::svg::{Chart, Series, Style};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const FITS_FILE: &str = "rates.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const SPECTRUM_SUMMARY_FILE: &str = "spectrum_summary.csv";
pub const ENERGY_FILE: &str = "energy.csv";
pub const AUDIT_FILE: &str = "energy_audit.csv";
pub const SVG_FILE: &str = "plot.svg";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_owned(), source: e.into() }
}

/// Writes `rows` with the fixed result header, comma- or tab-separated.
pub fn write_rows(path: &Path, rows: &[ResultRow], delimiter: u8) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_path(path).map_err(csv_err(path))?;
    if rows.is_empty() {
        w.write_record(crate::experiment::RESULT_COLUMNS).map_err(csv_err(path))?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_table(path: &Path, header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in records {
        w.write_record(&r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes every artifact of `outcome` into `dir` and returns the paths.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    outcome: &Outcome,
    dir: &Path,
    command: &str,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();

    if outcome.kind != ExperimentKind::Spectrum {
        let csv_path = dir.join(&cfg.output.csv);
        write_rows(&csv_path, &outcome.rows, b',')?;
        files.push(csv_path);
        let tsv_path = dir.join(&cfg.output.plot);
        write_rows(&tsv_path, &outcome.rows, b'\t')?;
        files.push(tsv_path);
    }

    if !outcome.fits.is_empty() {
        let path = dir.join(FITS_FILE);
        let header = [
            "p",
            "kind",
            "slope",
            "intercept",
            "max_residual",
            "residual_ratio",
            "samples_used",
            "excluded_x",
            "excluded_error",
        ];
        write_table(
            &path,
            &header,
            outcome.fits.iter().map(|s| {
                let f = &s.fit;
                vec![
                    s.p.map(|p| p.to_string()).unwrap_or_default(),
                    format!("{:?}", f.kind).to_lowercase(),
                    f.slope.to_string(),
                    f.intercept.to_string(),
                    f.max_residual.to_string(),
                    f.residual_ratio.to_string(),
                    f.used.len().to_string(),
                    opt(f.excluded.map(|e| e.0)),
                    opt(f.excluded.map(|e| e.1)),
                ]
            }),
        )?;
        files.push(path);
    }

    if !outcome.spectra.is_empty() {
        let path = dir.join(SPECTRUM_FILE);
        write_table(
            &path,
            &["p", "index", "re", "im", "modulus"],
            outcome.spectra.iter().flat_map(|s| {
                s.eigenvalues.iter().enumerate().map(move |(i, &(re, im))| {
                    vec![s.p.to_string(), i.to_string(), re.to_string(), im.to_string(), re.hypot(im).to_string()]
                })
            }),
        )?;
        files.push(path);
        let path = dir.join(SPECTRUM_SUMMARY_FILE);
        write_table(
            &path,
            &["p", "n_dofs", "spectral_radius", "condition_number"],
            outcome.spectra.iter().map(|s| {
                vec![
                    s.p.to_string(),
                    s.n_dofs.to_string(),
                    s.spectral_radius.to_string(),
                    s.condition_number.to_string(),
                ]
            }),
        )?;
        files.push(path);
    }

    if let Some(e) = &outcome.energy {
        let path = dir.join(ENERGY_FILE);
        write_table(&path, &["t", "energy"], e.history.iter().map(|(t, v)| vec![t.to_string(), v.to_string()]))?;
        files.push(path);
        let a = &e.audit;
        let path = dir.join(AUDIT_FILE);
        write_table(
            &path,
            &["initial", "final", "mismatch", "horizontal", "vertical", "lateral", "residual"],
            [[a.initial, a.final_energy, a.mismatch, a.horizontal, a.vertical, a.lateral, a.residual]
                .iter()
                .map(f64::to_string)
                .collect()],
        )?;
        files.push(path);
    }

    if cfg.output.svg {
        if let Some(chart) = chart_for(outcome) {
            let path = dir.join(SVG_FILE);
            fs::write(&path, chart.render()).map_err(io_err(&path))?;
            files.push(path);
        }
    }

    let path = dir.join(MANIFEST_FILE);
    write_manifest(&path, cfg, command, &files)?;
    files.push(path);
    Ok(files)
}

/// The resolved configuration followed by a metadata table. Reading the
/// file back as a configuration reproduces the run.
pub fn write_manifest(path: &Path, cfg: &ExperimentConfig, command: &str, files: &[PathBuf]) -> Result<(), CliError> {
    let mut meta = toml::Table::new();
    meta.insert("command".into(), command.into());
    meta.insert("trefftz_cli".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("trefftz_core".into(), trefftz_core::VERSION.into());
    let names: Vec<toml::Value> = files
        .iter()
        .filter_map(|f| f.file_name())
        .map(|n| toml::Value::String(n.to_string_lossy().into_owned()))
        .collect();
    meta.insert("outputs".into(), toml::Value::Array(names));
    let mut wrapper = toml::Table::new();
    wrapper.insert(MANIFEST_TABLE.into(), toml::Value::Table(meta));
    let text = format!(
        "# Resolved configuration of a trefftz run.\n# Re-run with: trefftz run {}\n\n{}\n{}",
        path.display(),
        cfg.to_toml(),
        toml::to_string(&wrapper).expect("manifest metadata serializes"),
    );
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

fn chart_for(outcome: &Outcome) -> Option<Chart> {
    let rows = &outcome.rows;
    match outcome.kind {
        ExperimentKind::SweepH => {
            let mut degrees: Vec<usize> = rows.iter().map(|r| r.p).collect();
            degrees.dedup();
            let series = degrees
                .iter()
                .map(|&p| Series {
                    label: format!("p = {p}"),
                    points: rows.iter().filter(|r| r.p == p).filter_map(|r| r.eps_q.map(|e| (r.h_x, e))).collect(),
                    style: Style::Line,
                })
                .collect();
            Some(Chart {
                title: "h-convergence".into(),
                x_label: "h".into(),
                y_label: "eps_Q".into(),
                log_x: true,
                log_y: true,
                series,
            })
        }
        ExperimentKind::SweepP => Some(Chart {
            title: "p-convergence".into(),
            x_label: "p".into(),
            y_label: "eps_Q".into(),
            log_x: false,
            log_y: true,
            series: vec![Series {
                label: rows.first().map(|r| r.family.clone()).unwrap_or_default(),
                points: rows.iter().filter_map(|r| r.eps_q.map(|e| (r.p as f64, e))).collect(),
                style: Style::Line,
            }],
        }),
        ExperimentKind::Energy => outcome.energy.as_ref().map(|e| Chart {
            title: "discrete energy".into(),
            x_label: "t".into(),
            y_label: "E_hp(t)".into(),
            log_x: false,
            log_y: false,
            series: vec![Series { label: "energy".into(), points: e.history.clone(), style: Style::Line }],
        }),
        ExperimentKind::Spectrum => Some(Chart {
            title: "eigenvalues of the update matrix".into(),
            x_label: "Re".into(),
            y_label: "Im".into(),
            log_x: false,
            log_y: false,
            series: outcome
                .spectra
                .iter()
                .map(|s| Series { label: format!("p = {}", s.p), points: s.eigenvalues.clone(), style: Style::Points })
                .collect(),
        }),
        ExperimentKind::Run | ExperimentKind::SweepFlux => None,
    }
}
