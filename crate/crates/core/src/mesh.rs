//! Slab-structured Cartesian space-time meshes.
//!
//! The space-time cylinder `(x_l, x_r) x (0, t_final)` is cut into time slabs,
//! each holding exactly one row of rectangular elements. Neighbouring slabs may
//! use different x-partitions; the horizontal interface between them is then
//! split on the union of both partitions so that every face piece sees exactly
//! one element on each side.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeDomain {
    pub x_l: f64,
    pub x_r: f64,
    pub t_final: f64,
}

impl SpaceTimeDomain {
    pub fn new(x_l: f64, x_r: f64, t_final: f64) -> Result<Self> {
        if !(x_l < x_r) {
            return Err(Error::NegativeExtent(format!("x_l = {x_l} must be below x_r = {x_r}")));
        }
        if !(t_final > 0.0) {
            return Err(Error::NegativeExtent(format!("t_final = {t_final} must be positive")));
        }
        Ok(Self { x_l, x_r, t_final })
    }

    pub fn length(&self) -> f64 {
        self.x_r - self.x_l
    }

    pub fn area(&self) -> f64 {
        self.length() * self.t_final
    }

    /// Absolute tolerance used when comparing coordinates.
    pub fn tolerance(&self) -> f64 {
        1e-12 * self.x_l.abs().max(self.x_r.abs()).max(self.length()).max(self.t_final)
    }
}

/// Piecewise-constant permittivity and permeability on the space interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialLayout {
    breakpoints: Vec<f64>,
    eps: Vec<f64>,
    mu: Vec<f64>,
}

impl MaterialLayout {
    pub fn new(breakpoints: Vec<f64>, eps: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if eps.len() != breakpoints.len() + 1 || mu.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} material breakpoints need {} eps and mu values (got {} and {})",
                breakpoints.len(),
                breakpoints.len() + 1,
                eps.len(),
                mu.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("material breakpoints must be strictly increasing".into()));
        }
        if let Some(v) = eps.iter().chain(mu.iter()).find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("material coefficient {v} must be positive")));
        }
        Ok(Self { breakpoints, eps, mu })
    }

    pub fn uniform(eps: f64, mu: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![eps], vec![mu])
    }

    pub fn vacuum() -> Self {
        Self { breakpoints: Vec::new(), eps: vec![1.0], mu: vec![1.0] }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_constant(&self) -> bool {
        self.eps.iter().all(|e| *e == self.eps[0]) && self.mu.iter().all(|m| *m == self.mu[0])
    }

    /// Index of the material interval containing `x`; points on a breakpoint
    /// belong to the interval on their right.
    pub fn interval_at(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|b| *b <= x)
    }

    pub fn eps_at(&self, x: f64) -> f64 {
        self.eps[self.interval_at(x)]
    }

    pub fn mu_at(&self, x: f64) -> f64 {
        self.mu[self.interval_at(x)]
    }

    pub fn wave_speed_at(&self, x: f64) -> f64 {
        (self.eps_at(x) * self.mu_at(x)).sqrt().recip()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub id: usize,
    pub slab: usize,
    /// Position of the element inside its slab, counted from the left.
    pub cell: usize,
    pub x0: f64,
    pub x1: f64,
    pub t0: f64,
    pub t1: f64,
    pub eps: f64,
    pub mu: f64,
    pub c: f64,
}

impl Element {
    pub fn hx(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn ht(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn area(&self) -> f64 {
        self.hx() * self.ht()
    }

    pub fn x_center(&self) -> f64 {
        0.5 * (self.x0 + self.x1)
    }

    pub fn t_center(&self) -> f64 {
        0.5 * (self.t0 + self.t1)
    }

    /// Closed-rectangle membership with a small relative slack.
    pub fn contains(&self, x: f64, t: f64) -> bool {
        let sx = 1e-12 * self.hx().max(self.x0.abs()).max(self.x1.abs());
        let st = 1e-12 * self.ht().max(self.t0.abs()).max(self.t1.abs());
        x >= self.x0 - sx && x <= self.x1 + sx && t >= self.t0 - st && t <= self.t1 + st
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceKind {
    HorInternal,
    VerInternal,
    Bottom,
    Top,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjacency {
    /// Horizontal face piece between two slabs.
    Horizontal {
        lower: usize,
        upper: usize,
    },
    /// Vertical face inside a slab.
    Vertical {
        left: usize,
        right: usize,
    },
    Boundary(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub kind: FaceKind,
    /// Segment endpoints `(x, t)`.
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub adjacency: Adjacency,
}

impl Face {
    pub fn length(&self) -> f64 {
        (self.end.0 - self.start.0).abs() + (self.end.1 - self.start.1).abs()
    }

    pub fn elements(&self) -> Vec<usize> {
        match self.adjacency {
            Adjacency::Horizontal { lower, upper } => vec![lower, upper],
            Adjacency::Vertical { left, right } => vec![left, right],
            Adjacency::Boundary(e) => vec![e],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    pub t0: f64,
    pub t1: f64,
    /// Sorted x-breakpoints, first `x_l` and last `x_r`.
    pub partition: Vec<f64>,
    pub first_element: usize,
}

impl Slab {
    pub fn height(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn n_cells(&self) -> usize {
        self.partition.len() - 1
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        self.first_element..self.first_element + self.n_cells()
    }

    /// Cell containing `x`; ties on a breakpoint go to the left cell.
    pub fn locate_cell(&self, x: f64) -> usize {
        let n = self.n_cells();
        let k = self.partition[1..n].partition_point(|b| *b < x);
        k.min(n - 1)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: SpaceTimeDomain,
    pub materials: MaterialLayout,
    pub slabs: Vec<Slab>,
    pub elements: Vec<Element>,
    pub faces: Vec<Face>,
}

/// Builds a mesh from explicit slab heights and per-slab x-partitions.
///
/// Each partition lists the interior breakpoints or the full breakpoint list
/// including the end points; both forms are accepted.
pub fn build_mesh(
    domain: SpaceTimeDomain,
    materials: MaterialLayout,
    slab_heights: &[f64],
    x_partitions: &[Vec<f64>],
) -> Result<Mesh> {
    let tol = domain.tolerance();
    if slab_heights.is_empty() {
        return Err(Error::NegativeExtent("at least one slab is required".into()));
    }
    if let Some(h) = slab_heights.iter().find(|h| !(**h > 0.0)) {
        return Err(Error::NegativeExtent(format!("slab height {h} must be positive")));
    }
    let total: f64 = slab_heights.iter().sum();
    if (total - domain.t_final).abs() > 1e-10 * domain.t_final {
        return Err(Error::NegativeExtent(format!(
            "slab heights sum to {total}, expected t_final = {}",
            domain.t_final
        )));
    }
    if x_partitions.len() != slab_heights.len() {
        return Err(Error::DimensionMismatch { expected: slab_heights.len(), got: x_partitions.len() });
    }
    for b in materials.breakpoints() {
        if !(*b > domain.x_l + tol && *b < domain.x_r - tol) {
            return Err(Error::InvalidParameter(format!(
                "material breakpoint {b} must lie strictly inside ({}, {})",
                domain.x_l, domain.x_r
            )));
        }
    }

    let mut slabs = Vec::with_capacity(slab_heights.len());
    let mut elements = Vec::new();
    let mut t0 = 0.0;
    for (j, (height, raw)) in slab_heights.iter().zip(x_partitions).enumerate() {
        let partition = normalize_partition(&domain, raw, j)?;
        for b in materials.breakpoints() {
            if !partition.iter().any(|p| (p - b).abs() <= tol) {
                return Err(Error::NonconformingMaterial { slab: j, breakpoint: *b });
            }
        }
        let t1 = if j + 1 == slab_heights.len() { domain.t_final } else { t0 + height };
        let first_element = elements.len();
        for (cell, w) in partition.windows(2).enumerate() {
            let xm = 0.5 * (w[0] + w[1]);
            let (eps, mu) = (materials.eps_at(xm), materials.mu_at(xm));
            elements.push(Element {
                id: elements.len(),
                slab: j,
                cell,
                x0: w[0],
                x1: w[1],
                t0,
                t1,
                eps,
                mu,
                c: (eps * mu).sqrt().recip(),
            });
        }
        slabs.push(Slab { t0, t1, partition, first_element });
        t0 = t1;
    }

    let faces = enumerate_faces(&domain, &slabs)?;
    Ok(Mesh { domain, materials, slabs, elements, faces })
}

fn normalize_partition(domain: &SpaceTimeDomain, raw: &[f64], slab: usize) -> Result<Vec<f64>> {
    let tol = domain.tolerance();
    let mut points: Vec<f64> = Vec::with_capacity(raw.len() + 2);
    points.push(domain.x_l);
    for x in raw {
        if *x < domain.x_l - tol || *x > domain.x_r + tol {
            return Err(Error::InvalidParameter(format!(
                "breakpoint {x} of slab {slab} lies outside ({}, {})",
                domain.x_l, domain.x_r
            )));
        }
        if (*x - domain.x_l).abs() > tol && (*x - domain.x_r).abs() > tol {
            points.push(*x);
        }
    }
    points.push(domain.x_r);
    points.sort_by(|a, b| a.total_cmp(b));
    for w in points.windows(2) {
        if !(w[1] - w[0] > tol) {
            return Err(Error::NegativeExtent(format!("slab {slab} has a cell of width {}", w[1] - w[0])));
        }
    }
    if points.len() < 2 {
        return Err(Error::EmptyPartition { slab });
    }
    Ok(points)
}

fn enumerate_faces(domain: &SpaceTimeDomain, slabs: &[Slab]) -> Result<Vec<Face>> {
    let mut faces = Vec::new();
    for (j, slab) in slabs.iter().enumerate() {
        if j == 0 {
            for (cell, w) in slab.partition.windows(2).enumerate() {
                faces.push(Face {
                    kind: FaceKind::Bottom,
                    start: (w[0], slab.t0),
                    end: (w[1], slab.t0),
                    adjacency: Adjacency::Boundary(slab.first_element + cell),
                });
            }
        } else {
            let below = &slabs[j - 1];
            for (a, b) in union_interface_with_tol(&below.partition, &slab.partition, domain.tolerance())? {
                let xm = 0.5 * (a + b);
                faces.push(Face {
                    kind: FaceKind::HorInternal,
                    start: (a, slab.t0),
                    end: (b, slab.t0),
                    adjacency: Adjacency::Horizontal {
                        lower: below.first_element + below.locate_cell(xm),
                        upper: slab.first_element + slab.locate_cell(xm),
                    },
                });
            }
        }

        let n = slab.n_cells();
        faces.push(Face {
            kind: FaceKind::Left,
            start: (domain.x_l, slab.t0),
            end: (domain.x_l, slab.t1),
            adjacency: Adjacency::Boundary(slab.first_element),
        });
        for cell in 1..n {
            let x = slab.partition[cell];
            faces.push(Face {
                kind: FaceKind::VerInternal,
                start: (x, slab.t0),
                end: (x, slab.t1),
                adjacency: Adjacency::Vertical {
                    left: slab.first_element + cell - 1,
                    right: slab.first_element + cell,
                },
            });
        }
        faces.push(Face {
            kind: FaceKind::Right,
            start: (domain.x_r, slab.t0),
            end: (domain.x_r, slab.t1),
            adjacency: Adjacency::Boundary(slab.first_element + n - 1),
        });
    }
    let last = slabs.last().expect("at least one slab");
    for (cell, w) in last.partition.windows(2).enumerate() {
        faces.push(Face {
            kind: FaceKind::Top,
            start: (w[0], last.t1),
            end: (w[1], last.t1),
            adjacency: Adjacency::Boundary(last.first_element + cell),
        });
    }
    Ok(faces)
}

/// Splits the common interval of two partitions on the union of their
/// breakpoints. Every returned piece lies inside exactly one cell of each.
pub fn union_interface(partition_a: &[f64], partition_b: &[f64]) -> Result<Vec<(f64, f64)>> {
    let scale = partition_a.iter().chain(partition_b).fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
    union_interface_with_tol(partition_a, partition_b, 1e-12 * scale)
}

fn union_interface_with_tol(a: &[f64], b: &[f64], tol: f64) -> Result<Vec<(f64, f64)>> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::EmptyPartition { slab: usize::MAX });
    }
    let (a0, a1, b0, b1) = (a[0], a[a.len() - 1], b[0], b[b.len() - 1]);
    if (a0 - b0).abs() > tol || (a1 - b1).abs() > tol {
        return Err(Error::MismatchedDomain { a0, a1, b0, b1 });
    }
    let mut merged = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut k) = (0, 0);
    while i < a.len() || k < b.len() {
        let next = match (a.get(i), b.get(k)) {
            (Some(x), Some(y)) if x <= y => {
                i += 1;
                *x
            }
            (Some(_), Some(y)) => {
                k += 1;
                *y
            }
            (Some(x), None) => {
                i += 1;
                *x
            }
            (None, Some(y)) => {
                k += 1;
                *y
            }
            (None, None) => unreachable!(),
        };
        if merged.last().is_none_or(|last: &f64| next - *last > tol) {
            merged.push(next);
        }
    }
    Ok(merged.windows(2).map(|w| (w[0], w[1])).collect())
}

impl Mesh {
    /// Uniform mesh with square-ish cells of size `hx` by `ht`.
    pub fn uniform(domain: SpaceTimeDomain, materials: MaterialLayout, hx: f64, ht: f64) -> Result<Self> {
        let nx = cell_count(domain.length(), hx, "hx")?;
        let nt = cell_count(domain.t_final, ht, "ht")?;
        let dx = domain.length() / nx as f64;
        let partition: Vec<f64> = (0..=nx).map(|i| domain.x_l + i as f64 * dx).collect();
        let heights = vec![domain.t_final / nt as f64; nt];
        build_mesh(domain, materials, &heights, &vec![partition; nt])
    }

    pub fn n_slabs(&self) -> usize {
        self.slabs.len()
    }

    pub fn slab_elements(&self, slab: usize) -> &[Element] {
        &self.elements[self.slabs[slab].elements()]
    }

    /// Largest horizontal element size over the mesh.
    pub fn max_hx(&self) -> f64 {
        self.elements.iter().map(Element::hx).fold(0.0, f64::max)
    }

    /// Element containing `(x, t)`; ties go to the element with smaller index.
    pub fn locate(&self, x: f64, t: f64) -> Option<usize> {
        let tol = self.domain.tolerance();
        if x < self.domain.x_l - tol || x > self.domain.x_r + tol || t < -tol || t > self.domain.t_final + tol {
            return None;
        }
        let j = self.slabs[1..].partition_point(|s| s.t0 < t);
        let slab = &self.slabs[j];
        Some(slab.first_element + slab.locate_cell(x))
    }

    /// Slab index whose lower interface is at `t`, if any (0 for `t = 0`).
    pub fn interface_at(&self, t: f64) -> Option<usize> {
        let tol = self.domain.tolerance();
        if (t - self.domain.t_final).abs() <= tol {
            return Some(self.slabs.len());
        }
        self.slabs.iter().position(|s| (s.t0 - t).abs() <= tol)
    }

    /// True when every slab has the same height and x-partition.
    pub fn is_time_homogeneous(&self) -> bool {
        let first = &self.slabs[0];
        self.slabs.iter().all(|s| {
            (s.height() - first.height()).abs() <= 1e-12 * first.height()
                && s.partition.len() == first.partition.len()
                && s.partition.iter().zip(&first.partition).all(|(a, b)| a == b)
        })
    }

    pub fn faces_of_kind(&self, kind: FaceKind) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(move |f| f.kind == kind)
    }
}

fn cell_count(length: f64, h: f64, name: &str) -> Result<usize> {
    if !(h > 0.0) {
        return Err(Error::NegativeExtent(format!("{name} = {h} must be positive")));
    }
    let n = (length / h).round();
    if n < 1.0 || ((n * h - length).abs() > 1e-9 * length) {
        return Err(Error::InvalidParameter(format!("{name} = {h} does not divide the extent {length}")));
    }
    Ok(n as usize)
}
