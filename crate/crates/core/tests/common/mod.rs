#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trefftz_core::basis::{BasisFamily, BasisSpec, DegreeSpec, DiscreteSpace};
use trefftz_core::mesh::{build_mesh, MaterialLayout, Mesh, SpaceTimeDomain};

/// Mesh with 1-3 slabs of random heights, independent random x-partitions
/// per slab (hanging nodes) and up to two material interfaces.
pub fn random_mesh(rng: &mut ChaCha8Rng) -> Mesh {
    let x_l = rng.gen_range(-2.0..2.0);
    let x_r = x_l + rng.gen_range(1.0..4.0);
    let n_slabs = rng.gen_range(1..=3);
    let heights: Vec<f64> = (0..n_slabs).map(|_| rng.gen_range(0.2..1.5)).collect();
    let t_final: f64 = heights.iter().sum();
    let domain = SpaceTimeDomain::new(x_l, x_r, t_final).unwrap();

    let n_mat = rng.gen_range(0..=2);
    let mut breaks: Vec<f64> =
        (0..n_mat).map(|k| x_l + (x_r - x_l) * (k as f64 + 1.0) / (n_mat as f64 + 1.0)).collect();
    breaks.sort_by(f64::total_cmp);
    let eps: Vec<f64> = (0..=n_mat).map(|_| rng.gen_range(0.5..3.0)).collect();
    let mu: Vec<f64> = (0..=n_mat).map(|_| rng.gen_range(0.5..3.0)).collect();
    let materials = MaterialLayout::new(breaks.clone(), eps, mu).unwrap();

    let partitions: Vec<Vec<f64>> = (0..n_slabs)
        .map(|_| {
            let mut pts = breaks.clone();
            for _ in 0..rng.gen_range(0..=3) {
                let x = rng.gen_range(x_l..x_r);
                if pts.iter().chain([x_l, x_r].iter()).all(|p| (p - x).abs() > 0.05) {
                    pts.push(x);
                }
            }
            pts.sort_by(f64::total_cmp);
            pts
        })
        .collect();
    // The last slab's height absorbs rounding in the sum.
    let mut hs = heights.clone();
    let last = hs.len() - 1;
    hs[last] = t_final - heights[..last].iter().sum::<f64>();
    build_mesh(domain, materials, &hs, &partitions).unwrap()
}

pub fn random_space(rng: &mut ChaCha8Rng, mesh: Mesh, family: BasisFamily, p_max: usize) -> Arc<DiscreteSpace> {
    let degrees: Vec<usize> = (0..mesh.elements.len()).map(|_| rng.gen_range(0..=p_max)).collect();
    let spec = BasisSpec { family, degrees: DegreeSpec::PerElement(degrees) };
    Arc::new(DiscreteSpace::new(Arc::new(mesh), spec).unwrap())
}

pub fn uniform_space(x_r: f64, t_final: f64, h: f64, spec: BasisSpec) -> Arc<DiscreteSpace> {
    let domain = SpaceTimeDomain::new(0.0, x_r, t_final).unwrap();
    let mesh = Mesh::uniform(domain, MaterialLayout::vacuum(), h, h).unwrap();
    Arc::new(DiscreteSpace::new(Arc::new(mesh), spec).unwrap())
}

pub fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `(E, H)` of the restriction of the coefficient vector to element `k`.
pub fn field_of<'a>(space: &'a DiscreteSpace, coeffs: &'a [f64]) -> impl Fn(usize, f64, f64) -> (f64, f64) + Sync + 'a {
    move |k, x, t| space.basis(k).eval_field(&coeffs[space.element_dofs(k)], x, t, &mut Vec::new())
}

pub fn gaussian_setup() -> (trefftz_core::data::ScalarFn, f64) {
    (trefftz_core::data::ScalarFn::gaussian(10.0, 10.0, 1.0), (5.0 * std::f64::consts::PI).sqrt())
}

/// Element-wise L² projection of `f` onto the discrete space.
pub fn project(space: &DiscreteSpace, f: impl Fn(f64, f64) -> (f64, f64)) -> Vec<f64> {
    use faer::prelude::*;
    let mut coeffs = vec![0.0; space.n_dofs()];
    let mut vals = Vec::new();
    for el in &space.mesh.elements {
        let basis = space.basis(el.id);
        let n = basis.len();
        let rule = trefftz_core::quadrature::gauss_points(basis.degree() + 4).unwrap();
        let pts = rule.tensor(&rule, el.x0, el.x1, el.t0, el.t1).unwrap();
        let mut gram = faer::Mat::<f64>::zeros(n, n);
        let mut rhs = faer::Mat::<f64>::zeros(n, 1);
        for &(x, t, w) in &pts {
            basis.eval_all(x, t, &mut vals);
            let (e, h) = f(x, t);
            for i in 0..n {
                rhs[(i, 0)] += w * (vals[i].e * e + vals[i].h * h);
                for k in 0..n {
                    gram[(i, k)] += w * (vals[i].e * vals[k].e + vals[i].h * vals[k].h);
                }
            }
        }
        let sol = gram.partial_piv_lu().solve(&rhs);
        for (i, d) in space.element_dofs(el.id).enumerate() {
            coeffs[d] = sol[(i, 0)];
        }
    }
    coeffs
}
