//! Slab marching, the discrete solution and the slab update operator.

use std::io::Write;
use std::sync::Arc;

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::Mat;

use crate::assembly::{assemble_load, assemble_operator, BoundaryCondition, FluxParams, Problem, QuadratureOptions};
use crate::basis::{BasisValue, DiscreteSpace};
use crate::error::{Error, Result};

pub use faer::c64;

/// Which trace to take at a point on the skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// From the slab below a slab interface.
    Below,
    /// From the slab above a slab interface.
    Above,
    /// From the element left of a vertical face.
    Left,
    /// From the element right of a vertical face.
    Right,
}

/// Discrete `(E_hp, H_hp)`: one coefficient vector over all slabs.
#[derive(Debug, Clone)]
pub struct SolutionField {
    space: Arc<DiscreteSpace>,
    coeffs: Vec<f64>,
}

impl SolutionField {
    pub fn new(space: Arc<DiscreteSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::DimensionMismatch { expected: space.n_dofs(), got: coeffs.len() });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zero(space: Arc<DiscreteSpace>) -> Self {
        let n = space.n_dofs();
        Self { space, coeffs: vec![0.0; n] }
    }

    pub fn space(&self) -> &Arc<DiscreteSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn slab_coefficients(&self, slab: usize) -> &[f64] {
        &self.coeffs[self.space.slab_dofs(slab)]
    }

    pub fn element_coefficients(&self, element: usize) -> &[f64] {
        &self.coeffs[self.space.element_dofs(element)]
    }

    /// Field at `(x, t)`; points on the skeleton resolve to the element
    /// with the smaller index. `None` outside the domain.
    pub fn evaluate(&self, x: f64, t: f64) -> Option<(f64, f64)> {
        let e = self.space.mesh.locate(x, t)?;
        Some(self.eval_element(e, x, t, &mut Vec::new()))
    }

    /// Field of element `element` at `(x, t)`, which must lie in its closure.
    pub fn evaluate_in(&self, element: usize, x: f64, t: f64) -> Result<(f64, f64)> {
        if !self.space.mesh.elements[element].contains(x, t) {
            return Err(Error::PointOutsideElement { element, x, t });
        }
        Ok(self.eval_element(element, x, t, &mut Vec::new()))
    }

    /// Polynomial of `element` evaluated at `(x, t)` without a containment check.
    pub fn eval_element(&self, element: usize, x: f64, t: f64, scratch: &mut Vec<BasisValue>) -> (f64, f64) {
        self.space.basis(element).eval_field(self.element_coefficients(element), x, t, scratch)
    }

    /// Values and derivatives of the polynomial of `element` at `(x, t)`.
    pub fn eval_element_full(&self, element: usize, x: f64, t: f64, scratch: &mut Vec<BasisValue>) -> BasisValue {
        self.space.basis(element).combine(self.element_coefficients(element), x, t, scratch)
    }

    /// Element whose trace on the requested side is taken at `(x, t)`.
    pub fn trace_element(&self, x: f64, t: f64, side: Side) -> Result<usize> {
        let mesh = &self.space.mesh;
        let tol = mesh.domain.tolerance();
        let outside = || Error::InvalidParameter(format!("({x}, {t}) has no {side:?} trace in the domain"));
        let located = mesh.elements[mesh.locate(x, t).ok_or_else(outside)?].slab;
        let slab = match (side, mesh.interface_at(t)) {
            (Side::Below, Some(0)) => return Err(outside()),
            (Side::Below, Some(j)) => j - 1,
            (Side::Above, Some(j)) if j == mesh.n_slabs() => return Err(outside()),
            (Side::Above, Some(j)) => j,
            _ => located,
        };
        let s = &mesh.slabs[slab];
        let n = s.n_cells();
        let interior = &s.partition[1..n];
        let cell = match side {
            Side::Right => interior.partition_point(|b| *b <= x + tol),
            Side::Left => interior.partition_point(|b| *b < x - tol),
            _ => s.locate_cell(x),
        };
        if (side == Side::Left && cell == 0 && (x - s.partition[0]).abs() <= tol)
            || (side == Side::Right && cell == n - 1 && (x - s.partition[n]).abs() <= tol)
        {
            return Err(outside());
        }
        Ok(s.first_element + cell.min(n - 1))
    }

    /// One-sided trace at a skeleton point.
    pub fn trace(&self, x: f64, t: f64, side: Side) -> Result<(f64, f64)> {
        let e = self.trace_element(x, t, side)?;
        Ok(self.eval_element(e, x, t, &mut Vec::new()))
    }

    /// Writes `slab,element,basis,value` rows.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "slab,element,basis,value")?;
        for el in &self.space.mesh.elements {
            for (i, v) in self.element_coefficients(el.id).iter().enumerate() {
                writeln!(out, "{},{},{},{:e}", el.slab, el.id, i, v)?;
            }
        }
        Ok(())
    }
}

/// True when slabs `a` and `b` carry identical local problems, so that the
/// same `A` can be reused.
fn equivalent_slabs(space: &DiscreteSpace, a: usize, b: usize) -> bool {
    let mesh = &space.mesh;
    let (ea, eb) = (mesh.slab_elements(a), mesh.slab_elements(b));
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs());
    ea.len() == eb.len()
        && ea.iter().zip(eb).all(|(p, q)| {
            close(p.x0, q.x0)
                && close(p.x1, q.x1)
                && close(p.ht(), q.ht())
                && p.eps == q.eps
                && p.mu == q.mu
                && space.basis(p.id).degree() == space.basis(q.id).degree()
        })
}

/// Factorises `a`, rejecting numerically singular matrices.
pub fn factorize(a: &Mat<f64>, slab: usize) -> Result<PartialPivLu<f64>> {
    let lu = a.partial_piv_lu();
    let diag = lu.U().diagonal().column_vector();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..diag.nrows() {
        let d = diag[i].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(ratio > f64::EPSILON * a.nrows() as f64) {
        return Err(Error::SingularSlabMatrix { slab, pivot_ratio: ratio });
    }
    Ok(lu)
}

/// Solves the slab problems one after the other.
///
/// `A` and its factorisation are reused while consecutive slabs are
/// equivalent, and `R` while the slab below is also unchanged.
pub fn march(space: Arc<DiscreteSpace>, problem: &Problem) -> Result<SolutionField> {
    problem.check(&space)?;
    let mut coeffs = vec![0.0; space.n_dofs()];
    let mut lu: Option<PartialPivLu<f64>> = None;
    let mut r: Option<Mat<f64>> = None;
    for j in 0..space.mesh.n_slabs() {
        let same_a = j > 0 && equivalent_slabs(&space, j, j - 1);
        let same_r = same_a && j > 1 && equivalent_slabs(&space, j - 1, j - 2);
        if !same_a || !same_r {
            let (a, rj) = assemble_operator(&space, j, &problem.flux, &problem.bc, problem.quadrature)?;
            if !same_a {
                lu = Some(factorize(&a, j)?);
            }
            r = rj;
        }
        let b = assemble_load(&space, j, problem)?;
        let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        if let Some(r) = &r {
            let prev = space.slab_dofs(j - 1);
            let f = Mat::from_fn(prev.len(), 1, |i, _| coeffs[prev.start + i]);
            rhs += r * &f;
        }
        let x = lu.as_ref().expect("factorisation of the first slab").solve(&rhs);
        for (k, c) in space.slab_dofs(j).enumerate() {
            coeffs[c] = x[(k, 0)];
        }
    }
    SolutionField::new(space, coeffs)
}

/// Update matrix `U = A^{-1} R` of a time-homogeneous mesh.
pub fn update_matrix(
    space: &DiscreteSpace,
    flux: &FluxParams,
    bc: &BoundaryCondition,
    quadrature: QuadratureOptions,
) -> Result<Mat<f64>> {
    let mesh = &space.mesh;
    if mesh.n_slabs() < 2 {
        return Err(Error::InhomogeneousSlabs("at least two slabs are needed".into()));
    }
    if !mesh.is_time_homogeneous() || !(1..mesh.n_slabs()).all(|j| equivalent_slabs(space, j, 0)) {
        return Err(Error::InhomogeneousSlabs("slabs differ in height, partition or degree".into()));
    }
    let (a, r) = assemble_operator(space, 1, flux, bc, quadrature)?;
    let lu = factorize(&a, 1)?;
    Ok(lu.solve(r.expect("slab 1 has a predecessor")))
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<c64>,
    pub spectral_radius: f64,
    /// Ratio of the extreme singular values; infinite for singular input.
    pub condition_number: f64,
}

pub fn spectrum(u: &Mat<f64>) -> Result<Spectrum> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), got: u.ncols() });
    }
    let eigenvalues = u.eigenvalues().map_err(|e| Error::EigensolverFailure(format!("{e:?}")))?;
    let sv = u.singular_values().map_err(|e| Error::EigensolverFailure(format!("{e:?}")))?;
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let s_max = sv.iter().copied().fold(0.0, f64::max);
    let s_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition_number = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    Ok(Spectrum { eigenvalues, spectral_radius, condition_number })
}
