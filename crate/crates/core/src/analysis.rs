//! Error norms, discrete energies and convergence-rate fits.

use rayon::prelude::*;

use crate::assembly::{BoundaryCondition, FluxParams, Problem};
use crate::data::InitialData;
use crate::error::{Error, Result};
use crate::mesh::{Adjacency, FaceKind, Mesh};
use crate::quadrature::{data_points, error_points, face_points, gauss_points, QuadratureRule};
use crate::reference::CharacteristicProfile;
use crate::solver::{Side, SolutionField};

/// `(∬ |exact - sol|^2, ∬ |exact|^2)` with `|(E, H)|^2 = E^2 + H^2`.
///
/// `points` overrides the default of `p_K + 6` points per direction.
pub fn l2_error_parts(
    sol: &SolutionField,
    exact: &(impl Fn(f64, f64) -> (f64, f64) + Sync),
    points: Option<usize>,
) -> Result<(f64, f64)> {
    let space = sol.space();
    let parts: Vec<(f64, f64)> = space
        .mesh
        .elements
        .par_iter()
        .map(|el| -> Result<(f64, f64)> {
            let n = points.unwrap_or_else(|| error_points(space.basis(el.id).degree()));
            let rule = gauss_points(n)?;
            let mut s = Vec::new();
            let (mut err, mut norm) = (0.0, 0.0);
            for (x, t, w) in rule.tensor(&rule, el.x0, el.x1, el.t0, el.t1)? {
                let (e, h) = exact(x, t);
                let (eh, hh) = sol.eval_element(el.id, x, t, &mut s);
                err += w * ((e - eh).powi(2) + (h - hh).powi(2));
                norm += w * (e * e + h * h);
            }
            Ok((err, norm))
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().fold((0.0, 0.0), |(a, b), (e, n)| (a + e, b + n)))
}

fn relative(err2: f64, norm2: f64) -> f64 {
    if norm2 > 0.0 {
        (err2 / norm2).sqrt()
    } else if err2 == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Relative L²(Q) error against an exact solution.
pub fn l2_relative_error(sol: &SolutionField, exact: &CharacteristicProfile, points: Option<usize>) -> Result<f64> {
    check_materials(&sol.space().mesh, exact)?;
    let (e, n) = l2_error_parts(sol, &|x, t| exact.exact_field(x, t), points)?;
    Ok(relative(e, n))
}

fn check_materials(mesh: &Mesh, exact: &CharacteristicProfile) -> Result<()> {
    if mesh.elements.iter().any(|el| el.eps != exact.eps || el.mu != exact.mu) {
        return Err(Error::NonconstantMaterial);
    }
    Ok(())
}

/// `|||v|||_DG^2` of a broken field given element by element.
///
/// `field(k, x, t)` is the restriction of `v` to element `k`, evaluated
/// anywhere in its closure.
pub fn dg_norm_squared(
    mesh: &Mesh,
    flux: &FluxParams,
    bc: &BoundaryCondition,
    field: &(impl Fn(usize, f64, f64) -> (f64, f64) + Sync),
    rule: &QuadratureRule,
) -> Result<f64> {
    let h_max = mesh.max_hx();
    let terms: Vec<f64> = mesh
        .faces
        .par_iter()
        .map(|face| -> Result<f64> {
            let mut total = 0.0;
            match (face.kind, face.adjacency) {
                (FaceKind::Bottom | FaceKind::Top, Adjacency::Boundary(e)) => {
                    let el = &mesh.elements[e];
                    for (x, w) in rule.map_to_segment(face.start.0, face.end.0)? {
                        let (ve, vh) = field(e, x, face.start.1);
                        total += 0.5 * w * (el.eps * ve * ve + el.mu * vh * vh);
                    }
                }
                (FaceKind::HorInternal, Adjacency::Horizontal { lower, upper }) => {
                    let el = &mesh.elements[upper];
                    for (x, w) in rule.map_to_segment(face.start.0, face.end.0)? {
                        let (le, lh) = field(lower, x, face.start.1);
                        let (ue, uh) = field(upper, x, face.start.1);
                        total += 0.5 * w * (el.eps * (le - ue).powi(2) + el.mu * (lh - uh).powi(2));
                    }
                }
                (FaceKind::VerInternal, Adjacency::Vertical { left, right }) => {
                    let (alpha, beta) = flux.on_vertical(h_max, &mesh.elements[left], &mesh.elements[right]);
                    for (t, w) in rule.map_to_segment(face.start.1, face.end.1)? {
                        let (le, lh) = field(left, face.start.0, t);
                        let (re, rh) = field(right, face.start.0, t);
                        total += w * (alpha * (le - re).powi(2) + beta * (lh - rh).powi(2));
                    }
                }
                (FaceKind::Left | FaceKind::Right, Adjacency::Boundary(e)) => {
                    let el = &mesh.elements[e];
                    let (we, wh) = bc.norm_weights(el, flux.on_boundary(h_max, el), flux.delta);
                    for (t, w) in rule.map_to_segment(face.start.1, face.end.1)? {
                        let (ve, vh) = field(e, face.start.0, t);
                        total += w * (we * ve * ve + wh * vh * vh);
                    }
                }
                (kind, adj) => unreachable!("face {kind:?} with adjacency {adj:?}"),
            }
            Ok(total)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// DG-norm error `|||(E - E_hp, H - H_hp)|||_DG`.
pub fn dg_error(
    sol: &SolutionField,
    exact: &CharacteristicProfile,
    flux: &FluxParams,
    bc: &BoundaryCondition,
    points: Option<usize>,
) -> Result<f64> {
    check_materials(&sol.space().mesh, exact)?;
    let n = points.unwrap_or_else(|| error_points(sol.space().max_degree()));
    let rule = gauss_points(n)?;
    let field = |k: usize, x: f64, t: f64| {
        let (e, h) = exact.exact_field(x, t);
        let (eh, hh) = sol.eval_element(k, x, t, &mut Vec::new());
        (e - eh, h - hh)
    };
    Ok(dg_norm_squared(&sol.space().mesh, flux, bc, &field, &rule)?.sqrt())
}

/// `½ ∫ (eps E^2 + mu H^2) dx` of the discrete field at time `t`.
///
/// On an interior slab interface the trace side must be given. `t = 0` and
/// `t = T` are one-sided and need none.
pub fn discrete_energy(sol: &SolutionField, t: f64, side: Option<Side>) -> Result<f64> {
    let mesh = &sol.space().mesh;
    let slab = match (mesh.interface_at(t), side) {
        (Some(0), _) => 0,
        (Some(j), _) if j == mesh.n_slabs() => j - 1,
        (Some(j), Some(Side::Below)) => j - 1,
        (Some(j), Some(Side::Above)) => j,
        (Some(_), _) => return Err(Error::AmbiguousTrace { t }),
        (None, _) => {
            let e = mesh
                .locate(mesh.domain.x_l, t)
                .ok_or_else(|| Error::InvalidParameter(format!("t = {t} lies outside (0, T)")))?;
            mesh.elements[e].slab
        }
    };
    let rule = gauss_points(face_points(sol.space().max_degree()))?;
    let mut s = Vec::new();
    let mut total = 0.0;
    for el in mesh.slab_elements(slab) {
        for (x, w) in rule.map_to_segment(el.x0, el.x1)? {
            let (e, h) = sol.eval_element(el.id, x, t, &mut s);
            total += 0.5 * w * (el.eps * e * e + el.mu * h * h);
        }
    }
    Ok(total)
}

/// `½ ∫ (eps E0^2 + mu H0^2) dx` of the initial data.
pub fn initial_energy(mesh: &Mesh, initial: &InitialData, points: usize) -> Result<f64> {
    let rule = gauss_points(points)?;
    let mut total = 0.0;
    for el in mesh.slab_elements(0) {
        for (x, w) in rule.map_to_segment(el.x0, el.x1)? {
            let (e, h) = (initial.e0.value(x), initial.h0.value(x));
            total += 0.5 * w * (el.eps * e * e + el.mu * h * h);
        }
    }
    Ok(total)
}

/// Energy of the initial data followed by `E_hp(t_j^-)` at every slab top.
pub fn slab_energies(sol: &SolutionField, initial: &InitialData) -> Result<Vec<f64>> {
    let mesh = &sol.space().mesh;
    let mut out = vec![initial_energy(mesh, initial, data_points(sol.space().max_degree()))?];
    for s in &mesh.slabs {
        out.push(discrete_energy(sol, s.t1, Some(Side::Below))?);
    }
    Ok(out)
}

/// Terms of the discrete energy identity
/// `final = initial - mismatch - horizontal - vertical - lateral`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyAudit {
    pub initial: f64,
    pub final_energy: f64,
    /// `½ ∫_{t=0} eps (E_hp - E0)^2 + mu (H_hp - H0)^2`.
    pub mismatch: f64,
    /// `½ ∫ eps [E]_t^2 + mu [H]_t^2` over slab interfaces.
    pub horizontal: f64,
    /// `∫ alpha [E]_x^2 + beta [H]_x^2` over vertical faces.
    pub vertical: f64,
    /// Dissipation on the lateral boundary.
    pub lateral: f64,
    /// `|lhs - rhs|`, relative to `initial` when it is positive.
    pub residual: f64,
}

impl EnergyAudit {
    pub fn dissipation_terms(&self) -> [f64; 4] {
        [self.mismatch, self.horizontal, self.vertical, self.lateral]
    }
}

/// Evaluates every term of the discrete energy identity for a solution of
/// `problem` without lateral data or sources.
pub fn energy_budget(sol: &SolutionField, problem: &Problem) -> Result<EnergyAudit> {
    if !problem.bc.is_homogeneous() {
        return Err(Error::UnsupportedBc("energy audit needs homogeneous lateral data".into()));
    }
    if problem.source.is_some() {
        return Err(Error::InvalidParameter("energy audit needs a source-free problem".into()));
    }
    let space = sol.space();
    let mesh = &space.mesh;
    let flux = &problem.flux;
    let p = space.max_degree();
    let poly = gauss_points(face_points(p))?;
    let data = gauss_points(data_points(p))?;
    let h_max = mesh.max_hx();
    let mut s = Vec::new();
    let mut f = |k: usize, x: f64, t: f64| sol.eval_element(k, x, t, &mut s);

    let initial = initial_energy(mesh, &problem.initial, data.len())?;
    let (mut final_energy, mut mismatch, mut horizontal, mut vertical, mut lateral) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for face in &mesh.faces {
        match (face.kind, face.adjacency) {
            (FaceKind::Bottom, Adjacency::Boundary(e)) => {
                let el = &mesh.elements[e];
                for (x, w) in data.map_to_segment(face.start.0, face.end.0)? {
                    let (eh, hh) = f(e, x, face.start.1);
                    let (e0, h0) = (problem.initial.e0.value(x), problem.initial.h0.value(x));
                    mismatch += 0.5 * w * (el.eps * (eh - e0).powi(2) + el.mu * (hh - h0).powi(2));
                }
            }
            (FaceKind::Top, Adjacency::Boundary(e)) => {
                let el = &mesh.elements[e];
                for (x, w) in poly.map_to_segment(face.start.0, face.end.0)? {
                    let (eh, hh) = f(e, x, face.start.1);
                    final_energy += 0.5 * w * (el.eps * eh * eh + el.mu * hh * hh);
                }
            }
            (FaceKind::HorInternal, Adjacency::Horizontal { lower, upper }) => {
                let el = &mesh.elements[upper];
                for (x, w) in poly.map_to_segment(face.start.0, face.end.0)? {
                    let (le, lh) = f(lower, x, face.start.1);
                    let (ue, uh) = f(upper, x, face.start.1);
                    horizontal += 0.5 * w * (el.eps * (le - ue).powi(2) + el.mu * (lh - uh).powi(2));
                }
            }
            (FaceKind::VerInternal, Adjacency::Vertical { left, right }) => {
                let (alpha, beta) = flux.on_vertical(h_max, &mesh.elements[left], &mesh.elements[right]);
                for (t, w) in poly.map_to_segment(face.start.1, face.end.1)? {
                    let (le, lh) = f(left, face.start.0, t);
                    let (re, rh) = f(right, face.start.0, t);
                    vertical += w * (alpha * (le - re).powi(2) + beta * (lh - rh).powi(2));
                }
            }
            (FaceKind::Left | FaceKind::Right, Adjacency::Boundary(e)) => {
                let el = &mesh.elements[e];
                let (we, wh) = problem.bc.norm_weights(el, flux.on_boundary(h_max, el), flux.delta);
                for (t, w) in poly.map_to_segment(face.start.1, face.end.1)? {
                    let (eh, hh) = f(e, face.start.0, t);
                    lateral += w * (we * eh * eh + wh * hh * hh);
                }
            }
            (kind, adj) => unreachable!("face {kind:?} with adjacency {adj:?}"),
        }
    }
    let gap = (final_energy - (initial - mismatch - horizontal - vertical - lateral)).abs();
    let residual = if initial > 0.0 { gap / initial } else { gap };
    Ok(EnergyAudit { initial, final_energy, mismatch, horizontal, vertical, lateral, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    /// `log e = slope * log h + b`; the coarsest sample has the largest `h`.
    LogLog,
    /// `log e = slope * p + b`; the coarsest sample has the smallest `p`.
    SemiLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub kind: FitKind,
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual of `log e` about the fitted line.
    pub max_residual: f64,
    /// `max_residual` relative to the spread of `log e` over the fitted samples.
    pub residual_ratio: f64,
    /// Samples used, in input order.
    pub used: Vec<(f64, f64)>,
    /// The coarsest sample, if it was dropped as pre-asymptotic.
    pub excluded: Option<(f64, f64)>,
}

/// Error above which the coarsest sample is considered pre-asymptotic.
pub const PRE_ASYMPTOTIC_ERROR: f64 = 0.5;

/// Least-squares convergence rate.
///
/// The coarsest sample is dropped when its error exceeds
/// [`PRE_ASYMPTOTIC_ERROR`] and at least three samples remain.
pub fn fit_rates(pairs: &[(f64, f64)], kind: FitKind) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: pairs.len() });
    }
    if let Some(&(_, e)) = pairs.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::NonpositiveError(e));
    }
    let coarsest = match kind {
        FitKind::LogLog => pairs.iter().enumerate().max_by(|a, b| a.1 .0.total_cmp(&b.1 .0)),
        FitKind::SemiLog => pairs.iter().enumerate().min_by(|a, b| a.1 .0.total_cmp(&b.1 .0)),
    }
    .map(|(i, _)| i)
    .unwrap();
    let mut used: Vec<(f64, f64)> = pairs.to_vec();
    let mut excluded = None;
    if pairs[coarsest].1 > PRE_ASYMPTOTIC_ERROR && pairs.len() > 3 {
        excluded = Some(used.remove(coarsest));
    }
    let xs: Vec<f64> = used
        .iter()
        .map(|(a, _)| match kind {
            FitKind::LogLog => a.ln(),
            FitKind::SemiLog => *a,
        })
        .collect();
    let ys: Vec<f64> = used.iter().map(|(_, e)| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).abs()).fold(0.0, f64::max);
    let spread =
        ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ys.iter().copied().fold(f64::INFINITY, f64::min);
    let residual_ratio = if spread > 0.0 { max_residual / spread } else { 0.0 };
    Ok(RateFit { kind, slope, intercept, max_residual, residual_ratio, used, excluded })
}

/// Summary of one solve against its exact reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub eps_q: f64,
    pub dg_error: f64,
    /// Initial-data energy, then `E_hp` at the top of every slab.
    pub slab_energies: Vec<f64>,
    pub rate: Option<RateFit>,
}

impl ErrorReport {
    pub fn compute(sol: &SolutionField, exact: &CharacteristicProfile, problem: &Problem) -> Result<Self> {
        Ok(Self {
            eps_q: l2_relative_error(sol, exact, None)?,
            dg_error: dg_error(sol, exact, &problem.flux, &problem.bc, None)?,
            slab_energies: slab_energies(sol, &problem.initial)?,
            rate: None,
        })
    }

    pub fn final_energy(&self) -> f64 {
        *self.slab_energies.last().unwrap_or(&0.0)
    }
}
