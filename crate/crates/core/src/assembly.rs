//! Slab-wise assembly of the space–time DG form.
//!
//! For slab `j` the discrete problem reads `A_j f_j = R_j f_{j-1} + b_j`.
//! `A_j` collects every term whose trial and test functions both live in the
//! slab: top-face upwind terms, centred-plus-penalty terms on vertical faces,
//! lateral boundary terms and, for the full-polynomial family, the volume
//! terms. `R_j` carries the upwind traces of the previous slab on the lower
//! interface. `b_j` holds initial, lateral and source data.
//!
//! Jump conventions: `[v]_x = v_left - v_right` on vertical faces and
//! `[v]_t = v_lower - v_upper` on horizontal faces.

use std::io::Write;
use std::ops::Range;

use faer::Mat;
use rayon::prelude::*;

use crate::basis::{BasisFamily, BasisValue, DiscreteSpace, ElementBasis};
use crate::data::{InitialData, ScalarFn, Source};
use crate::error::{Error, Result};
use crate::mesh::{union_interface, Adjacency, Element, FaceKind, Mesh};
use crate::quadrature::{data_points, face_points, gauss_points, QuadratureRule};

/// Penalty parameters of the numerical fluxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxParams {
    /// Penalty on `[E]_x`, used on vertical faces and Dirichlet boundaries.
    pub alpha: f64,
    /// Penalty on `[H]_x`, used on vertical faces.
    pub beta: f64,
    /// Robin splitting parameter in `(0, 1)`.
    pub delta: f64,
    /// Scale the penalties per face by `(h_max / h_f) * eps_f` (resp. `mu_f`).
    pub per_face_scaling: bool,
}

impl Default for FluxParams {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 0.5, delta: 0.5, per_face_scaling: false }
    }
}

impl FluxParams {
    pub fn new(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        let f = Self { alpha, beta, delta, per_face_scaling: false };
        f.validate()?;
        Ok(f)
    }

    /// Rejects negative penalties and `delta` outside `(0, 1)`.
    ///
    /// Zero penalties are accepted; see [`FluxParams::is_centred`].
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha = {} must be non-negative", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta = {} must be non-negative", self.beta)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        Ok(())
    }

    /// True when a penalty vanishes. The scheme is still well defined, but
    /// the coercivity theory no longer covers it.
    pub fn is_centred(&self) -> bool {
        self.alpha == 0.0 || self.beta == 0.0
    }

    /// `(alpha, beta)` on the vertical face between `left` and `right`.
    pub fn on_vertical(&self, h_max: f64, left: &Element, right: &Element) -> (f64, f64) {
        if !self.per_face_scaling {
            return (self.alpha, self.beta);
        }
        let ratio = h_max / left.hx().min(right.hx());
        (self.alpha * ratio * left.eps.max(right.eps), self.beta * ratio * left.mu.max(right.mu))
    }

    /// `alpha` on a lateral boundary face of `element`.
    pub fn on_boundary(&self, h_max: f64, element: &Element) -> f64 {
        if !self.per_face_scaling {
            return self.alpha;
        }
        self.alpha * h_max / element.hx() * element.eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LateralSide {
    Left,
    Right,
}

/// Lateral boundary conditions. Data are functions of time.
#[derive(Debug, Clone)]
pub enum BoundaryCondition {
    /// `E = 0` on both sides.
    Pec,
    /// `E = left(t)` at `x_l`, `E = right(t)` at `x_r`.
    Dirichlet { left: ScalarFn, right: ScalarFn },
    /// `sqrt(eps) E + sqrt(mu) H = left(t)` at `x_l` and
    /// `sqrt(eps) E - sqrt(mu) H = right(t)` at `x_r`.
    Robin { left: ScalarFn, right: ScalarFn },
}

/// Lateral contribution `vE (m00 E + m01 H) + vH (m10 E + m11 H)` to the
/// form and `g (load[0] vE + load[1] vH)` to the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralForm {
    pub m: [[f64; 2]; 2],
    pub load: [f64; 2],
}

impl BoundaryCondition {
    pub fn robin_homogeneous() -> Self {
        BoundaryCondition::Robin { left: ScalarFn::Zero, right: ScalarFn::Zero }
    }

    pub fn is_robin(&self) -> bool {
        matches!(self, BoundaryCondition::Robin { .. })
    }

    /// True when no lateral data enter the right-hand side.
    pub fn is_homogeneous(&self) -> bool {
        match self {
            BoundaryCondition::Pec => true,
            BoundaryCondition::Dirichlet { left, right } | BoundaryCondition::Robin { left, right } => {
                left.is_zero() && right.is_zero()
            }
        }
    }

    pub fn data(&self, side: LateralSide, t: f64) -> f64 {
        match self {
            BoundaryCondition::Pec => 0.0,
            BoundaryCondition::Dirichlet { left, right } | BoundaryCondition::Robin { left, right } => match side {
                LateralSide::Left => left.value(t),
                LateralSide::Right => right.value(t),
            },
        }
    }

    pub fn lateral_form(&self, side: LateralSide, element: &Element, alpha: f64, delta: f64) -> LateralForm {
        let sign = match side {
            LateralSide::Left => -1.0,
            LateralSide::Right => 1.0,
        };
        match self {
            BoundaryCondition::Pec | BoundaryCondition::Dirichlet { .. } => {
                LateralForm { m: [[alpha, sign], [0.0, 0.0]], load: [alpha, -sign] }
            }
            BoundaryCondition::Robin { .. } => {
                let r = (element.mu / element.eps).sqrt();
                LateralForm {
                    m: [[(1.0 - delta) / r, sign * delta], [sign * (1.0 - delta), delta * r]],
                    load: [(1.0 - delta) / element.mu.sqrt(), -sign * delta / element.eps.sqrt()],
                }
            }
        }
    }

    /// Weights `(w_E, w_H)` of `w_E vE^2 + w_H vH^2` in the DG norm.
    pub fn norm_weights(&self, element: &Element, alpha: f64, delta: f64) -> (f64, f64) {
        match self {
            BoundaryCondition::Pec | BoundaryCondition::Dirichlet { .. } => (alpha, 0.0),
            BoundaryCondition::Robin { .. } => {
                let r = (element.mu / element.eps).sqrt();
                ((1.0 - delta) / r, delta * r)
            }
        }
    }
}

/// Overrides of the default quadrature sizes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuadratureOptions {
    /// Points on faces and in volumes for polynomial integrands.
    pub face: Option<usize>,
    /// Points for integrals involving data.
    pub data: Option<usize>,
}

/// Resolved rules used by the assembly.
#[derive(Debug, Clone)]
pub struct QuadraturePlan {
    pub face: QuadratureRule,
    pub data: QuadratureRule,
}

impl QuadraturePlan {
    pub fn new(p_max: usize, options: QuadratureOptions) -> Result<Self> {
        let face = options.face.unwrap_or(face_points(p_max));
        let data = options.data.unwrap_or(data_points(p_max));
        for n in [face, data] {
            if n < p_max + 1 {
                return Err(Error::QuadratureOrderTooLow { points: n, degree: 2 * p_max });
            }
        }
        Ok(Self { face: gauss_points(face)?, data: gauss_points(data)? })
    }
}

/// Everything besides the discrete space that defines a discrete problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub flux: FluxParams,
    pub bc: BoundaryCondition,
    pub initial: InitialData,
    pub source: Option<Source>,
    pub quadrature: QuadratureOptions,
}

impl Problem {
    pub fn new(flux: FluxParams, bc: BoundaryCondition, initial: InitialData) -> Self {
        Self { flux, bc, initial, source: None, quadrature: QuadratureOptions::default() }
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = Some(source);
        self
    }

    /// Checks the problem against the discrete space it will be solved in.
    pub fn check(&self, space: &DiscreteSpace) -> Result<()> {
        self.flux.validate()?;
        if self.source.is_some() && space.spec.family == BasisFamily::TrefftzTransport {
            return Err(Error::TrefftzWithSource);
        }
        QuadraturePlan::new(space.max_degree(), self.quadrature)?;
        Ok(())
    }
}

/// Assembled system of one slab.
#[derive(Debug, Clone)]
pub struct SlabSystem {
    pub slab: usize,
    pub a: Mat<f64>,
    /// Coupling to the previous slab's coefficients; `None` for slab 0.
    pub r: Option<Mat<f64>>,
    pub b: Vec<f64>,
    /// Slab-local dof range of every element of the slab.
    pub dofs: Vec<Range<usize>>,
}

impl SlabSystem {
    pub fn write_triplets(&self, out: &mut impl Write) -> std::io::Result<()> {
        write_triplets(&self.a, out)
    }
}

/// Writes the nonzero entries of `m` as `row col value` lines.
pub fn write_triplets(m: &Mat<f64>, out: &mut impl Write) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                writeln!(out, "{i} {j} {v:e}")?;
            }
        }
    }
    Ok(())
}

/// Dense block destined for `rows x cols` of a slab matrix.
struct Block {
    rows: Range<usize>,
    cols: Range<usize>,
    data: Vec<f64>,
}

impl Block {
    fn new(rows: Range<usize>, cols: Range<usize>) -> Self {
        let data = vec![0.0; rows.len() * cols.len()];
        Self { rows, cols, data }
    }

    /// Adds `w * (vE (m00 E + m01 H) + vH (m10 E + m11 H))` for all test `v`
    /// and trial `(E, H)` pairs.
    fn add(&mut self, w: f64, test: &[BasisValue], trial: &[BasisValue], m: &[[f64; 2]; 2]) {
        let n = self.cols.len();
        for (i, v) in test.iter().enumerate() {
            let ce = w * (m[0][0] * v.e + m[1][0] * v.h);
            let ch = w * (m[0][1] * v.e + m[1][1] * v.h);
            if ce == 0.0 && ch == 0.0 {
                continue;
            }
            for (r, u) in self.data[i * n..(i + 1) * n].iter_mut().zip(trial) {
                *r += ce * u.e + ch * u.h;
            }
        }
    }

    fn scatter(&self, m: &mut Mat<f64>) {
        let n = self.cols.len();
        for (i, row) in self.rows.clone().enumerate() {
            for (k, col) in self.cols.clone().enumerate() {
                m[(row, col)] += self.data[i * n + k];
            }
        }
    }
}

fn material(el: &Element) -> [[f64; 2]; 2] {
    [[el.eps, 0.0], [0.0, el.mu]]
}

/// Per-element part of `A`: top face, lateral faces and volume terms.
fn element_block(
    space: &DiscreteSpace,
    el: &Element,
    flux: &FluxParams,
    bc: &BoundaryCondition,
    plan: &QuadraturePlan,
    h_max: f64,
) -> Result<Block> {
    let basis = space.basis(el.id);
    let dofs = space.local_dofs(el.id);
    let mut block = Block::new(dofs.clone(), dofs);
    let mut vals = Vec::new();

    for (x, w) in plan.face.map_to_segment(el.x0, el.x1)? {
        basis.eval_all(x, el.t1, &mut vals);
        block.add(w, &vals, &vals, &material(el));
    }

    let slab = &space.mesh.slabs[el.slab];
    let mut sides = Vec::new();
    if el.cell == 0 {
        sides.push((LateralSide::Left, el.x0));
    }
    if el.cell + 1 == slab.n_cells() {
        sides.push((LateralSide::Right, el.x1));
    }
    for (side, x) in sides {
        let form = bc.lateral_form(side, el, flux.on_boundary(h_max, el), flux.delta);
        for (t, w) in plan.face.map_to_segment(el.t0, el.t1)? {
            basis.eval_all(x, t, &mut vals);
            block.add(w, &vals, &vals, &form.m);
        }
    }

    if basis.family() == BasisFamily::FullPolynomial {
        add_volume_terms(&mut block, basis, el, &plan.face)?;
    }
    Ok(block)
}

/// `-(E dx vH + mu H dt vH + H dx vE + eps E dt vE)` over the element.
fn add_volume_terms(block: &mut Block, basis: &ElementBasis, el: &Element, rule: &QuadratureRule) -> Result<()> {
    let n = block.cols.len();
    let mut vals = Vec::new();
    for (x, t, w) in rule.tensor(rule, el.x0, el.x1, el.t0, el.t1)? {
        basis.eval_all(x, t, &mut vals);
        for (i, v) in vals.iter().enumerate() {
            let ce = -w * (v.dx_h + el.eps * v.dt_e);
            let ch = -w * (el.mu * v.dt_h + v.dx_e);
            for (r, u) in block.data[i * n..(i + 1) * n].iter_mut().zip(vals.iter()) {
                *r += ce * u.e + ch * u.h;
            }
        }
    }
    Ok(())
}

/// The four blocks of the vertical face between `left` and `right`.
fn vertical_blocks(
    space: &DiscreteSpace,
    left: &Element,
    right: &Element,
    flux: &FluxParams,
    plan: &QuadraturePlan,
    h_max: f64,
) -> Result<[Block; 4]> {
    let (alpha, beta) = flux.on_vertical(h_max, left, right);
    let x = left.x1;
    let ids = [left.id, right.id];
    let signs = [1.0, -1.0];
    let mut blocks =
        [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(i, k)| Block::new(space.local_dofs(ids[i]), space.local_dofs(ids[k])));
    let mut vals = [Vec::new(), Vec::new()];
    for (t, w) in plan.face.map_to_segment(left.t0, left.t1)? {
        space.basis(left.id).eval_all(x, t, &mut vals[0]);
        space.basis(right.id).eval_all(x, t, &mut vals[1]);
        for (b, (i, k)) in blocks.iter_mut().zip([(0, 0), (0, 1), (1, 0), (1, 1)]) {
            let (si, sk) = (signs[i], signs[k]);
            let m = [[alpha * si * sk, 0.5 * si], [0.5 * si, beta * si * sk]];
            b.add(w, &vals[i], &vals[k], &m);
        }
    }
    Ok(blocks)
}

/// Assembles `A` and (for `slab > 0`) `R` of one slab.
pub fn assemble_operator(
    space: &DiscreteSpace,
    slab: usize,
    flux: &FluxParams,
    bc: &BoundaryCondition,
    quadrature: QuadratureOptions,
) -> Result<(Mat<f64>, Option<Mat<f64>>)> {
    flux.validate()?;
    let mesh: &Mesh = &space.mesh;
    let plan = QuadraturePlan::new(space.max_degree(), quadrature)?;
    let h_max = mesh.max_hx();
    let elements = mesh.slab_elements(slab);
    let n = space.slab_dofs(slab).len();
    let mut a = Mat::<f64>::zeros(n, n);

    let blocks: Vec<Block> =
        elements.par_iter().map(|el| element_block(space, el, flux, bc, &plan, h_max)).collect::<Result<_>>()?;
    for b in &blocks {
        b.scatter(&mut a);
    }
    let faces: Vec<[Block; 4]> = elements
        .par_windows(2)
        .map(|pair| vertical_blocks(space, &pair[0], &pair[1], flux, &plan, h_max))
        .collect::<Result<_>>()?;
    for b in faces.iter().flatten() {
        b.scatter(&mut a);
    }

    let r = if slab == 0 { None } else { Some(coupling_matrix(space, slab, &plan)?) };
    Ok((a, r))
}

/// `R` of slab `slab`: upwind traces of slab `slab - 1` on the shared interface.
fn coupling_matrix(space: &DiscreteSpace, slab: usize, plan: &QuadraturePlan) -> Result<Mat<f64>> {
    let mesh = &space.mesh;
    let (prev, cur) = (&mesh.slabs[slab - 1], &mesh.slabs[slab]);
    let mut r = Mat::<f64>::zeros(space.slab_dofs(slab).len(), space.slab_dofs(slab - 1).len());
    let t = cur.t0;
    let mut lower_vals = Vec::new();
    let mut upper_vals = Vec::new();
    for (a, b) in union_interface(&prev.partition, &cur.partition)? {
        let mid = 0.5 * (a + b);
        let lower = &mesh.elements[prev.first_element + prev.locate_cell(mid)];
        let upper = &mesh.elements[cur.first_element + cur.locate_cell(mid)];
        let mut block = Block::new(space.local_dofs(upper.id), space.local_dofs(lower.id));
        for (x, w) in plan.face.map_to_segment(a, b)? {
            space.basis(lower.id).eval_all(x, t, &mut lower_vals);
            space.basis(upper.id).eval_all(x, t, &mut upper_vals);
            block.add(w, &upper_vals, &lower_vals, &material(upper));
        }
        block.scatter(&mut r);
    }
    Ok(r)
}

/// Right-hand side of one slab from initial, lateral and source data.
pub fn assemble_load(space: &DiscreteSpace, slab: usize, problem: &Problem) -> Result<Vec<f64>> {
    let mesh = &space.mesh;
    let plan = QuadraturePlan::new(space.max_degree(), problem.quadrature)?;
    let h_max = mesh.max_hx();
    let n = space.slab_dofs(slab).len();
    let n_cells = mesh.slabs[slab].n_cells();
    let mut b = vec![0.0; n];
    let mut vals = Vec::new();
    for el in mesh.slab_elements(slab) {
        let basis = space.basis(el.id);
        let dofs = space.local_dofs(el.id);
        let out = &mut b[dofs];
        if slab == 0 && !problem.initial.is_zero() {
            for (x, w) in plan.data.map_to_segment(el.x0, el.x1)? {
                let ce = w * el.eps * problem.initial.e0.value(x);
                let ch = w * el.mu * problem.initial.h0.value(x);
                basis.eval_all(x, el.t0, &mut vals);
                for (o, v) in out.iter_mut().zip(&vals) {
                    *o += ce * v.e + ch * v.h;
                }
            }
        }
        if !problem.bc.is_homogeneous() {
            let mut sides = Vec::new();
            if el.cell == 0 {
                sides.push((LateralSide::Left, el.x0));
            }
            if el.cell + 1 == n_cells {
                sides.push((LateralSide::Right, el.x1));
            }
            for (side, x) in sides {
                let form = problem.bc.lateral_form(side, el, problem.flux.on_boundary(h_max, el), problem.flux.delta);
                for (t, w) in plan.data.map_to_segment(el.t0, el.t1)? {
                    let g = w * problem.bc.data(side, t);
                    basis.eval_all(x, t, &mut vals);
                    for (o, v) in out.iter_mut().zip(&vals) {
                        *o += g * (form.load[0] * v.e + form.load[1] * v.h);
                    }
                }
            }
        }
        if let Some(source) = &problem.source {
            for (x, t, w) in plan.data.tensor(&plan.data, el.x0, el.x1, el.t0, el.t1)? {
                let j = w * source.value(x, t);
                basis.eval_all(x, t, &mut vals);
                for (o, v) in out.iter_mut().zip(&vals) {
                    *o += j * v.e;
                }
            }
        }
    }
    Ok(b)
}

/// Assembles the complete system of one slab.
pub fn assemble_slab(space: &DiscreteSpace, slab: usize, problem: &Problem) -> Result<SlabSystem> {
    problem.check(space)?;
    let (a, r) = assemble_operator(space, slab, &problem.flux, &problem.bc, problem.quadrature)?;
    let b = assemble_load(space, slab, problem)?;
    let dofs = space.mesh.slabs[slab].elements().map(|e| space.local_dofs(e)).collect();
    Ok(SlabSystem { slab, a, r, b, dofs })
}

/// `a(u; v)` over the whole mesh, evaluated face by face from the fields
/// themselves rather than from assembled matrices.
pub fn apply_bilinear_global(
    space: &DiscreteSpace,
    flux: &FluxParams,
    bc: &BoundaryCondition,
    u: &[f64],
    v: &[f64],
) -> Result<f64> {
    let n = space.n_dofs();
    for len in [u.len(), v.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mesh = &space.mesh;
    let rule = gauss_points(face_points(space.max_degree()))?;
    let h_max = mesh.max_hx();
    let field = |c: &[f64], e: usize, x: f64, t: f64, s: &mut Vec<BasisValue>| {
        space.basis(e).combine(&c[space.element_dofs(e)], x, t, s)
    };

    let face_terms: Vec<f64> = mesh
        .faces
        .par_iter()
        .map(|face| -> Result<f64> {
            let mut s = Vec::new();
            let mut total = 0.0;
            match (face.kind, face.adjacency) {
                (FaceKind::Bottom, _) => {}
                (FaceKind::Top, Adjacency::Boundary(e)) => {
                    let el = &mesh.elements[e];
                    let t = face.start.1;
                    for (x, w) in rule.map_to_segment(face.start.0, face.end.0)? {
                        let (a, b) = (field(u, e, x, t, &mut s), field(v, e, x, t, &mut s));
                        total += w * (el.eps * a.e * b.e + el.mu * a.h * b.h);
                    }
                }
                (FaceKind::HorInternal, Adjacency::Horizontal { lower, upper }) => {
                    let el = &mesh.elements[upper];
                    let t = face.start.1;
                    for (x, w) in rule.map_to_segment(face.start.0, face.end.0)? {
                        let a = field(u, lower, x, t, &mut s);
                        let (vl, vu) = (field(v, lower, x, t, &mut s), field(v, upper, x, t, &mut s));
                        total += w * (el.eps * a.e * (vl.e - vu.e) + el.mu * a.h * (vl.h - vu.h));
                    }
                }
                (FaceKind::VerInternal, Adjacency::Vertical { left, right }) => {
                    let (alpha, beta) = flux.on_vertical(h_max, &mesh.elements[left], &mesh.elements[right]);
                    let x = face.start.0;
                    for (t, w) in rule.map_to_segment(face.start.1, face.end.1)? {
                        let (ul, ur) = (field(u, left, x, t, &mut s), field(u, right, x, t, &mut s));
                        let (vl, vr) = (field(v, left, x, t, &mut s), field(v, right, x, t, &mut s));
                        let (je, jh) = (vl.e - vr.e, vl.h - vr.h);
                        total += w
                            * (0.5 * (ul.e + ur.e) * jh
                                + 0.5 * (ul.h + ur.h) * je
                                + alpha * (ul.e - ur.e) * je
                                + beta * (ul.h - ur.h) * jh);
                    }
                }
                (FaceKind::Left | FaceKind::Right, Adjacency::Boundary(e)) => {
                    let el = &mesh.elements[e];
                    let side = if face.kind == FaceKind::Left { LateralSide::Left } else { LateralSide::Right };
                    let m = bc.lateral_form(side, el, flux.on_boundary(h_max, el), flux.delta).m;
                    let x = face.start.0;
                    for (t, w) in rule.map_to_segment(face.start.1, face.end.1)? {
                        let (a, b) = (field(u, e, x, t, &mut s), field(v, e, x, t, &mut s));
                        total += w * (b.e * (m[0][0] * a.e + m[0][1] * a.h) + b.h * (m[1][0] * a.e + m[1][1] * a.h));
                    }
                }
                (kind, adj) => unreachable!("face {kind:?} with adjacency {adj:?}"),
            }
            Ok(total)
        })
        .collect::<Result<_>>()?;

    let mut volume = 0.0;
    if space.spec.family == BasisFamily::FullPolynomial {
        let mut s = Vec::new();
        for el in &mesh.elements {
            for (x, t, w) in rule.tensor(&rule, el.x0, el.x1, el.t0, el.t1)? {
                let (a, b) = (field(u, el.id, x, t, &mut s), field(v, el.id, x, t, &mut s));
                volume -= w * (a.e * b.dx_h + el.mu * a.h * b.dt_h + a.h * b.dx_e + el.eps * a.e * b.dt_e);
            }
        }
    }
    Ok(face_terms.iter().sum::<f64>() + volume)
}
