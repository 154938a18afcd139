//! Per-element discrete spaces for the `(E, H)` pair.
//!
//! Two families are provided. The transport family spans `2p + 2` exact local
//! solutions: Legendre polynomials of the right- and left-moving
//! characteristic variables, scaled so that each variable sweeps `[-1, 1]`
//! over the element. The full-polynomial family is the complete space of
//! total degree `p` in element-local coordinates, once for `E` and once for
//! `H`, giving `(p + 1)(p + 2)` functions.

use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Element, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisFamily {
    TrefftzTransport,
    FullPolynomial,
}

impl BasisFamily {
    pub fn dimension(self, p: usize) -> usize {
        match self {
            BasisFamily::TrefftzTransport => 2 * p + 2,
            BasisFamily::FullPolynomial => (p + 1) * (p + 2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisFamily::TrefftzTransport => "trefftz",
            BasisFamily::FullPolynomial => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegreeSpec {
    Uniform(usize),
    PerElement(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub degrees: DegreeSpec,
}

impl BasisSpec {
    pub fn uniform(family: BasisFamily, p: usize) -> Self {
        Self { family, degrees: DegreeSpec::Uniform(p) }
    }

    pub fn trefftz(p: usize) -> Self {
        Self::uniform(BasisFamily::TrefftzTransport, p)
    }

    pub fn full(p: usize) -> Self {
        Self::uniform(BasisFamily::FullPolynomial, p)
    }

    pub fn degree_of(&self, element: usize) -> usize {
        match &self.degrees {
            DegreeSpec::Uniform(p) => *p,
            DegreeSpec::PerElement(ps) => ps[element],
        }
    }

    pub fn max_degree(&self) -> usize {
        match &self.degrees {
            DegreeSpec::Uniform(p) => *p,
            DegreeSpec::PerElement(ps) => ps.iter().copied().max().unwrap_or(0),
        }
    }
}

/// Values and first derivatives of one basis function at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BasisValue {
    pub e: f64,
    pub h: f64,
    pub dx_e: f64,
    pub dt_e: f64,
    pub dx_h: f64,
    pub dt_h: f64,
}

/// Legendre polynomials `P_0..=P_p` and their derivatives at `s`.
pub fn legendre(p: usize, s: f64, values: &mut [f64], derivs: &mut [f64]) {
    values[0] = 1.0;
    derivs[0] = 0.0;
    if p == 0 {
        return;
    }
    values[1] = s;
    derivs[1] = 1.0;
    for k in 1..p {
        let kf = k as f64;
        values[k + 1] = ((2.0 * kf + 1.0) * s * values[k] - kf * values[k - 1]) / (kf + 1.0);
        derivs[k + 1] = derivs[k - 1] + (2.0 * kf + 1.0) * values[k];
    }
}

#[derive(Debug, Clone)]
pub struct ElementBasis {
    family: BasisFamily,
    degree: usize,
    element: Element,
    /// Half-length of the characteristic intervals (transport family).
    half_width: f64,
}

pub fn trefftz_basis(element: &Element, p: usize) -> ElementBasis {
    ElementBasis {
        family: BasisFamily::TrefftzTransport,
        degree: p,
        element: *element,
        half_width: 0.5 * (element.hx() + element.c * element.ht()),
    }
}

pub fn full_basis(element: &Element, p: usize) -> ElementBasis {
    ElementBasis { family: BasisFamily::FullPolynomial, degree: p, element: *element, half_width: 0.0 }
}

impl ElementBasis {
    pub fn new(family: BasisFamily, element: &Element, p: usize) -> Self {
        match family {
            BasisFamily::TrefftzTransport => trefftz_basis(element, p),
            BasisFamily::FullPolynomial => full_basis(element, p),
        }
    }

    pub fn len(&self) -> usize {
        self.family.dimension(self.degree)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn element(&self) -> &Element {
        &self.element
    }

    /// Evaluates every basis function at `(x, t)` into `out`.
    pub fn eval_all(&self, x: f64, t: f64, out: &mut Vec<BasisValue>) {
        out.clear();
        let p = self.degree;
        let el = &self.element;
        let mut va = [0.0; 64];
        let mut da = [0.0; 64];
        let mut vb = [0.0; 64];
        let mut db = [0.0; 64];
        assert!(p < 64, "polynomial degree {p} is not supported");
        let dx = x - el.x_center();
        let dt = t - el.t_center();
        match self.family {
            BasisFamily::TrefftzTransport => {
                let c = el.c;
                let inv = 1.0 / self.half_width;
                legendre(p, (dx - c * dt) * inv, &mut va, &mut da);
                legendre(p, (dx + c * dt) * inv, &mut vb, &mut db);
                let se = el.eps.sqrt().recip();
                let sm = el.mu.sqrt().recip();
                for j in 0..=p {
                    let (v, d) = (va[j], da[j] * inv);
                    out.push(BasisValue {
                        e: se * v,
                        h: sm * v,
                        dx_e: se * d,
                        dt_e: -c * se * d,
                        dx_h: sm * d,
                        dt_h: -c * sm * d,
                    });
                }
                for j in 0..=p {
                    let (v, d) = (vb[j], db[j] * inv);
                    out.push(BasisValue {
                        e: se * v,
                        h: -sm * v,
                        dx_e: se * d,
                        dt_e: c * se * d,
                        dx_h: -sm * d,
                        dt_h: -c * sm * d,
                    });
                }
            }
            BasisFamily::FullPolynomial => {
                let sx = 2.0 / el.hx();
                let st = 2.0 / el.ht();
                legendre(p, dx * sx, &mut va, &mut da);
                legendre(p, dt * st, &mut vb, &mut db);
                let n_scalar = (p + 1) * (p + 2) / 2;
                out.resize(2 * n_scalar, BasisValue::default());
                let mut k = 0;
                for d in 0..=p {
                    for jt in 0..=d {
                        let jx = d - jt;
                        let v = va[jx] * vb[jt];
                        let ddx = da[jx] * sx * vb[jt];
                        let ddt = va[jx] * db[jt] * st;
                        out[k] = BasisValue { e: v, dx_e: ddx, dt_e: ddt, ..Default::default() };
                        out[k + n_scalar] = BasisValue { h: v, dx_h: ddx, dt_h: ddt, ..Default::default() };
                        k += 1;
                    }
                }
            }
        }
    }

    pub fn eval(&self, i: usize, x: f64, t: f64) -> BasisValue {
        let mut out = Vec::with_capacity(self.len());
        self.eval_all(x, t, &mut out);
        out[i]
    }

    /// `(E, H)` of the combination with coefficients `coeffs`.
    pub fn eval_field(&self, coeffs: &[f64], x: f64, t: f64, scratch: &mut Vec<BasisValue>) -> (f64, f64) {
        self.eval_all(x, t, scratch);
        scratch.iter().zip(coeffs).fold((0.0, 0.0), |(e, h), (v, c)| (e + c * v.e, h + c * v.h))
    }

    /// Values and derivatives of the combination with coefficients `coeffs`.
    pub fn combine(&self, coeffs: &[f64], x: f64, t: f64, scratch: &mut Vec<BasisValue>) -> BasisValue {
        self.eval_all(x, t, scratch);
        let mut s = BasisValue::default();
        for (v, c) in scratch.iter().zip(coeffs) {
            s.e += c * v.e;
            s.h += c * v.h;
            s.dx_e += c * v.dx_e;
            s.dt_e += c * v.dt_e;
            s.dx_h += c * v.dx_h;
            s.dt_h += c * v.dt_h;
        }
        s
    }
}

/// Largest magnitude of either Maxwell residual of basis function `index`
/// over `points`.
pub fn pde_residual(basis: &ElementBasis, index: usize, points: &[(f64, f64)]) -> Result<f64> {
    let el = basis.element();
    let mut out = Vec::new();
    let mut worst = 0.0_f64;
    for &(x, t) in points {
        if !el.contains(x, t) {
            return Err(Error::PointOutsideElement { element: el.id, x, t });
        }
        basis.eval_all(x, t, &mut out);
        let v = out[index];
        let r1 = v.dx_e + el.mu * v.dt_h;
        let r2 = v.dx_h + el.eps * v.dt_e;
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    Ok(worst)
}

/// Mesh together with a basis on every element and the global dof layout.
///
/// Dofs are numbered slab by slab, elements left to right, basis functions in
/// constructor order.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    pub mesh: Arc<Mesh>,
    pub spec: BasisSpec,
    bases: Vec<ElementBasis>,
    offsets: Vec<usize>,
    slab_offsets: Vec<usize>,
}

impl DiscreteSpace {
    pub fn new(mesh: Arc<Mesh>, spec: BasisSpec) -> Result<Self> {
        if let DegreeSpec::PerElement(ps) = &spec.degrees {
            if ps.len() != mesh.elements.len() {
                return Err(Error::DimensionMismatch { expected: mesh.elements.len(), got: ps.len() });
            }
        }
        let bases: Vec<ElementBasis> =
            mesh.elements.iter().map(|e| ElementBasis::new(spec.family, e, spec.degree_of(e.id))).collect();
        let mut offsets = Vec::with_capacity(bases.len() + 1);
        let mut n = 0;
        for b in &bases {
            offsets.push(n);
            n += b.len();
        }
        offsets.push(n);
        let slab_offsets = mesh.slabs.iter().map(|s| offsets[s.first_element]).chain(std::iter::once(n)).collect();
        Ok(Self { mesh, spec, bases, offsets, slab_offsets })
    }

    pub fn basis(&self, element: usize) -> &ElementBasis {
        &self.bases[element]
    }

    pub fn n_dofs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Global dof range of an element.
    pub fn element_dofs(&self, element: usize) -> Range<usize> {
        self.offsets[element]..self.offsets[element + 1]
    }

    pub fn slab_dofs(&self, slab: usize) -> Range<usize> {
        self.slab_offsets[slab]..self.slab_offsets[slab + 1]
    }

    /// Dof range of an element relative to the start of its slab.
    pub fn local_dofs(&self, element: usize) -> Range<usize> {
        let base = self.slab_offsets[self.mesh.elements[element].slab];
        self.offsets[element] - base..self.offsets[element + 1] - base
    }

    pub fn max_degree(&self) -> usize {
        self.spec.max_degree()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn element(x0: f64, x1: f64, t0: f64, t1: f64, eps: f64, mu: f64) -> Element {
        Element { id: 0, slab: 0, cell: 0, x0, x1, t0, t1, eps, mu, c: (eps * mu).sqrt().recip() }
    }

    fn random_element(rng: &mut ChaCha8Rng) -> Element {
        let x0 = rng.gen_range(-5.0..5.0);
        let t0 = rng.gen_range(0.0..5.0);
        element(
            x0,
            x0 + rng.gen_range(0.05..3.0),
            t0,
            t0 + rng.gen_range(0.05..3.0),
            rng.gen_range(0.2..5.0),
            rng.gen_range(0.2..5.0),
        )
    }

    fn interior_points(el: &Element, n: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
        (0..n).map(|_| (rng.gen_range(el.x0..el.x1), rng.gen_range(el.t0..el.t1))).collect()
    }

    #[test]
    fn dimensions() {
        let el = element(0.0, 1.0, 0.0, 1.0, 1.0, 1.0);
        assert_eq!(trefftz_basis(&el, 0).len(), 2);
        assert_eq!(trefftz_basis(&el, 3).len(), 8);
        assert_eq!(full_basis(&el, 0).len(), 2);
        assert_eq!(full_basis(&el, 2).len(), 12);
        let mut out = Vec::new();
        for p in 0..=10 {
            trefftz_basis(&el, p).eval_all(0.3, 0.2, &mut out);
            assert_eq!(out.len(), 2 * p + 2);
            full_basis(&el, p).eval_all(0.3, 0.2, &mut out);
            assert_eq!(out.len(), (p + 1) * (p + 2));
        }
    }

    #[test]
    fn transport_functions_solve_maxwell() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let el = random_element(&mut rng);
            let p = rng.gen_range(0..=6);
            let basis = trefftz_basis(&el, p);
            let pts = interior_points(&el, 25, &mut rng);
            let mut out = Vec::new();
            for i in 0..basis.len() {
                let scale = pts
                    .iter()
                    .map(|&(x, t)| {
                        basis.eval_all(x, t, &mut out);
                        let v = out[i];
                        v.dx_e.abs().max((el.mu * v.dt_h).abs()).max(v.dx_h.abs()).max((el.eps * v.dt_e).abs())
                    })
                    .fold(1.0, f64::max);
                let r = pde_residual(&basis, i, &pts).unwrap();
                assert!(r <= 1e-12 * scale, "p = {p}, i = {i}: residual {r} vs scale {scale}");
            }
        }
    }

    #[test]
    fn residual_of_non_trefftz_function() {
        let el = element(0.0, 2.0, 0.0, 1.0, 1.0, 1.0);
        let basis = full_basis(&el, 1);
        // ordering: d = 0 -> L0L0; d = 1 -> (jx=1,jt=0), (jx=0,jt=1)
        let pts = [(0.3, 0.2), (1.7, 0.9)];
        let r = pde_residual(&basis, 1, &pts).unwrap();
        // E = L1(xi) = x - 1, so dE/dx = 1 and the H-residual vanishes
        assert!((r - 1.0).abs() < 1e-14);
        assert_eq!(pde_residual(&basis, 0, &pts).unwrap(), 0.0);
        assert!(matches!(pde_residual(&basis, 0, &[(2.5, 0.5)]), Err(Error::PointOutsideElement { .. })));
    }

    #[test]
    fn full_basis_gram_is_diagonal() {
        let el = element(1.0, 1.5, 2.0, 2.25, 1.0, 1.0);
        let p = 4;
        let basis = full_basis(&el, p);
        let rule = crate::quadrature::gauss_points(p + 2).unwrap();
        let pts = rule.tensor(&rule, el.x0, el.x1, el.t0, el.t1).unwrap();
        let n = basis.len();
        let mut gram = vec![0.0; n * n];
        let mut out = Vec::new();
        for &(x, t, w) in &pts {
            basis.eval_all(x, t, &mut out);
            for i in 0..n {
                for k in 0..n {
                    gram[i * n + k] += w * (out[i].e * out[k].e + out[i].h * out[k].h);
                }
            }
        }
        // analytic value: |K| / ((2 jx + 1)(2 jt + 1)) on the diagonal
        let mut expected = Vec::new();
        for d in 0..=p {
            for jt in 0..=d {
                let jx = d - jt;
                expected.push(el.area() / ((2 * jx + 1) as f64 * (2 * jt + 1) as f64));
            }
        }
        let n_scalar = expected.len();
        for i in 0..n {
            for k in 0..n {
                let want = if i == k { expected[i % n_scalar] } else { 0.0 };
                assert!((gram[i * n + k] - want).abs() < 1e-12, "({i},{k}) {} vs {want}", gram[i * n + k]);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut out = Vec::new();
        for _ in 0..40 {
            let el = random_element(&mut rng);
            let p = rng.gen_range(0..=5);
            for family in [BasisFamily::TrefftzTransport, BasisFamily::FullPolynomial] {
                let basis = ElementBasis::new(family, &el, p);
                let (x, t) = interior_points(&el, 1, &mut rng)[0];
                let hx = 1e-6 * el.hx();
                let ht = 1e-6 * el.ht();
                basis.eval_all(x, t, &mut out);
                let at = out.clone();
                let mut fd = |dx: f64, dt: f64| {
                    basis.eval_all(x + dx, t + dt, &mut out);
                    out.clone()
                };
                let (xp, xm, tp, tm) = (fd(hx, 0.0), fd(-hx, 0.0), fd(0.0, ht), fd(0.0, -ht));
                for i in 0..basis.len() {
                    let checks = [
                        (at[i].dx_e, (xp[i].e - xm[i].e) / (2.0 * hx)),
                        (at[i].dx_h, (xp[i].h - xm[i].h) / (2.0 * hx)),
                        (at[i].dt_e, (tp[i].e - tm[i].e) / (2.0 * ht)),
                        (at[i].dt_h, (tp[i].h - tm[i].h) / (2.0 * ht)),
                    ];
                    let scale = checks.iter().map(|c| c.0.abs()).fold(0.0, f64::max)
                        + at[i].e.abs().max(at[i].h.abs()) / el.hx().min(el.ht());
                    for (exact, approx) in checks {
                        assert!((exact - approx).abs() <= 1e-6 * scale, "{family:?} p={p} i={i}: {exact} vs {approx}");
                    }
                }
            }
        }
    }

    #[test]
    fn transport_gram_has_full_rank() {
        let el = element(0.0, 1.0, 0.0, 1.0, 2.0, 0.5);
        for p in 0..=8 {
            let basis = trefftz_basis(&el, p);
            let rule = crate::quadrature::gauss_points(p + 3).unwrap();
            let pts = rule.tensor(&rule, el.x0, el.x1, el.t0, el.t1).unwrap();
            let n = basis.len();
            let mut out = Vec::new();
            let gram = faer::Mat::<f64>::from_fn(n, n, |i, k| {
                pts.iter()
                    .map(|&(x, t, w)| {
                        basis.eval_all(x, t, &mut out);
                        w * (out[i].e * out[k].e + out[i].h * out[k].h)
                    })
                    .sum()
            });
            let sv = gram.singular_values().unwrap();
            let ratio = sv.iter().copied().fold(f64::INFINITY, f64::min) / sv[0];
            assert!(ratio > 1e-10, "p = {p}: ratio {ratio}");
        }
    }
}
