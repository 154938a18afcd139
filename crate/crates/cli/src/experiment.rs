//! Experiment drivers. Everything here is pure computation; writing files is
//! left to [`crate::output`].

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use trefftz_core::analysis::{
    dg_error, discrete_energy, energy_budget, fit_rates, l2_relative_error, slab_energies, EnergyAudit, FitKind,
    RateFit,
};
use trefftz_core::assembly::FluxParams;
use trefftz_core::basis::DiscreteSpace;
use trefftz_core::mesh::Mesh;
use trefftz_core::reference::CharacteristicProfile;
use trefftz_core::solver::{march, spectrum, update_matrix, SolutionField};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;

/// One line of the result table. Column names and order are part of the
/// output format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub h_x: f64,
    pub h_t: f64,
    pub p: usize,
    pub family: String,
    pub alpha: f64,
    pub beta: f64,
    pub eps_q: Option<f64>,
    pub dg_error: Option<f64>,
    pub energy_t: f64,
    pub rate: Option<f64>,
}

pub const RESULT_COLUMNS: [&str; 11] =
    ["experiment", "h_x", "h_t", "p", "family", "alpha", "beta", "eps_q", "dg_error", "energy_t", "rate"];

#[derive(Debug, Clone)]
pub struct SeriesFit {
    /// Degree of an h-series; `None` for a p-series.
    pub p: Option<usize>,
    pub fit: RateFit,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub p: usize,
    pub n_dofs: usize,
    pub spectral_radius: f64,
    pub condition_number: f64,
    pub eigenvalues: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct EnergyResult {
    /// `(t, energy)`: the data energy at `t = 0`, then `E_hp(t_j^-)`.
    pub history: Vec<(f64, f64)>,
    pub audit: EnergyAudit,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub rows: Vec<ResultRow>,
    pub fits: Vec<SeriesFit>,
    pub spectra: Vec<SpectrumResult>,
    pub energy: Option<EnergyResult>,
}

impl Outcome {
    fn new(kind: ExperimentKind) -> Self {
        Self { kind, rows: Vec::new(), fits: Vec::new(), spectra: Vec::new(), energy: None }
    }
}

/// A single solve with its errors.
pub struct Point {
    pub solution: SolutionField,
    pub row: ResultRow,
}

fn mesh_sizes(mesh: &Mesh) -> (f64, f64) {
    let ht = mesh.slabs.iter().map(|s| s.height()).fold(0.0, f64::max);
    (mesh.max_hx(), ht)
}

/// Solves one configuration point. `degree` replaces the configured degrees.
pub fn solve_point(
    cfg: &ExperimentConfig,
    mesh: Arc<Mesh>,
    degree: Option<usize>,
    flux: FluxParams,
) -> Result<Point, CliError> {
    let spec = cfg.basis_spec(degree);
    let label = match degree {
        Some(p) => format!("p = {p}"),
        None => "configured degrees".to_owned(),
    };
    let (h_x, h_t) = mesh_sizes(&mesh);
    let context = format!("{} basis, {label}, h = {h_x}", cfg.basis.family);
    let space = Arc::new(DiscreteSpace::new(mesh.clone(), spec).map_err(CliError::numerical(&context))?);
    let problem = cfg.problem(flux);
    let solution = march(space.clone(), &problem).map_err(CliError::numerical(&context))?;

    // Errors are only reported when a closed-form reference exists.
    let (eps_q, dg) = match CharacteristicProfile::for_problem(&mesh, &problem) {
        Ok(exact) => {
            let eps_q =
                l2_relative_error(&solution, &exact, cfg.quadrature.error).map_err(CliError::numerical(&context))?;
            let dg = dg_error(&solution, &exact, &flux, &problem.bc, cfg.quadrature.error)
                .map_err(CliError::numerical(&context))?;
            (Some(eps_q), Some(dg))
        }
        Err(_) => (None, None),
    };
    let energy_t = discrete_energy(&solution, cfg.domain.t_final, None).map_err(CliError::numerical(&context))?;
    let row = ResultRow {
        experiment: cfg.experiment.id.clone(),
        h_x,
        h_t,
        p: degree.unwrap_or_else(|| space.max_degree()),
        family: cfg.basis.family.to_string(),
        alpha: flux.alpha,
        beta: flux.beta,
        eps_q,
        dg_error: dg,
        energy_t,
        rate: None,
    };
    Ok(Point { solution, row })
}

/// Least-squares rate of a series, `None` when errors are unavailable or
/// the fit is impossible.
fn fit_series(rows: &[ResultRow], abscissa: impl Fn(&ResultRow) -> f64, kind: FitKind) -> Option<RateFit> {
    let pairs: Option<Vec<(f64, f64)>> = rows.iter().map(|r| r.eps_q.map(|e| (abscissa(r), e))).collect();
    fit_rates(&pairs?, kind).ok()
}

/// Runs the experiment selected by `cfg.experiment.kind`. Configurations
/// must have passed [`ExperimentConfig::validate`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let kind = cfg.experiment.kind;
    let mut out = Outcome::new(kind);
    let flux = cfg.flux_params();
    let base_mesh = || cfg.build_mesh(None).map(Arc::new).map_err(CliError::numerical("building the mesh"));
    match kind {
        ExperimentKind::Run => {
            out.rows.push(solve_point(cfg, base_mesh()?, None, flux)?.row);
        }
        ExperimentKind::Energy => {
            let point = solve_point(cfg, base_mesh()?, None, flux)?;
            let problem = cfg.problem(flux);
            let audit = energy_budget(&point.solution, &problem).map_err(CliError::numerical("energy audit"))?;
            let energies =
                slab_energies(&point.solution, &problem.initial).map_err(CliError::numerical("slab energies"))?;
            let times = std::iter::once(0.0).chain(point.solution.space().mesh.slabs.iter().map(|s| s.t1));
            out.energy = Some(EnergyResult { history: times.zip(energies).collect(), audit });
            out.rows.push(point.row);
        }
        ExperimentKind::SweepH => {
            let degrees = cfg.experiment.resolved_degrees(cfg.basis.degree);
            let grid: Vec<(usize, f64)> =
                degrees.iter().flat_map(|&p| cfg.experiment.h_values.iter().map(move |&h| (p, h))).collect();
            let rows: Vec<ResultRow> = grid
                .par_iter()
                .map(|&(p, h)| {
                    let mesh = cfg.build_mesh(Some(h)).map_err(CliError::numerical(format!("mesh with h = {h}")))?;
                    Ok(solve_point(cfg, Arc::new(mesh), Some(p), flux)?.row)
                })
                .collect::<Result<_, CliError>>()?;
            for (k, &p) in degrees.iter().enumerate() {
                let n = cfg.experiment.h_values.len();
                let series = &rows[k * n..(k + 1) * n];
                if let Some(fit) = fit_series(series, |r| r.h_x, FitKind::LogLog) {
                    out.fits.push(SeriesFit { p: Some(p), fit });
                }
            }
            out.rows = rows;
            for row in &mut out.rows {
                row.rate = out.fits.iter().find(|f| f.p == Some(row.p)).map(|f| f.fit.slope);
            }
        }
        ExperimentKind::SweepP => {
            let mesh = base_mesh()?;
            let degrees = cfg.experiment.resolved_degrees(cfg.basis.degree);
            out.rows = degrees
                .par_iter()
                .map(|&p| Ok(solve_point(cfg, mesh.clone(), Some(p), flux)?.row))
                .collect::<Result<_, CliError>>()?;
            if let Some(fit) = fit_series(&out.rows, |r| r.p as f64, FitKind::SemiLog) {
                for row in &mut out.rows {
                    row.rate = Some(fit.slope);
                }
                out.fits.push(SeriesFit { p: None, fit });
            }
        }
        ExperimentKind::SweepFlux => {
            let mesh = base_mesh()?;
            let values = &cfg.experiment.flux_values;
            let grid: Vec<(f64, f64)> = values.iter().flat_map(|&a| values.iter().map(move |&b| (a, b))).collect();
            out.rows = grid
                .par_iter()
                .map(|&(alpha, beta)| {
                    let f = FluxParams { alpha, beta, ..flux };
                    Ok(solve_point(cfg, mesh.clone(), None, f)?.row)
                })
                .collect::<Result<_, CliError>>()?;
        }
        ExperimentKind::Spectrum => {
            let mesh = base_mesh()?;
            let problem = cfg.problem(flux);
            let degrees = cfg.experiment.resolved_degrees(cfg.basis.degree);
            out.spectra = degrees
                .par_iter()
                .map(|&p| {
                    let context = format!("spectrum of the update matrix, p = {p}");
                    let space = DiscreteSpace::new(mesh.clone(), cfg.basis_spec(Some(p)))
                        .map_err(CliError::numerical(&context))?;
                    let u = update_matrix(&space, &flux, &problem.bc, problem.quadrature)
                        .map_err(CliError::numerical(&context))?;
                    let s = spectrum(&u).map_err(CliError::numerical(&context))?;
                    Ok(SpectrumResult {
                        p,
                        n_dofs: u.nrows(),
                        spectral_radius: s.spectral_radius,
                        condition_number: s.condition_number,
                        eigenvalues: s.eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
                    })
                })
                .collect::<Result<_, CliError>>()?;
        }
    }
    Ok(out)
}
