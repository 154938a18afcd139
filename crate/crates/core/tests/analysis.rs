mod common;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trefftz_core::analysis::*;
use trefftz_core::assembly::*;
use trefftz_core::basis::{BasisFamily, BasisSpec, DiscreteSpace};
use trefftz_core::data::{InitialData, ScalarFn};
use trefftz_core::mesh::{MaterialLayout, Mesh, SpaceTimeDomain};
use trefftz_core::reference::{CharacteristicProfile, Extension};
use trefftz_core::solver::{march, Side, SolutionField};
use trefftz_core::Error;

use common::*;

#[test]
fn relative_error_of_trivial_fields() {
    let space = uniform_space(4.0, 2.0, 1.0, BasisSpec::trefftz(1));
    let data = InitialData::new(ScalarFn::Constant(1.0), ScalarFn::Constant(0.5));
    let problem = Problem::new(
        FluxParams::default(),
        BoundaryCondition::Robin { left: ScalarFn::Constant(1.5), right: ScalarFn::Constant(0.5) },
        data.clone(),
    );
    let exact = CharacteristicProfile::for_problem(&space.mesh, &problem).unwrap();
    let sol = march(space.clone(), &problem).unwrap();
    assert!(l2_relative_error(&sol, &exact, None).unwrap() <= 1e-11);
    let zero = SolutionField::zero(space);
    assert!((l2_relative_error(&zero, &exact, None).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn gaussian_initial_energy() {
    let (g, expected) = gaussian_setup();
    let domain = SpaceTimeDomain::new(0.0, 60.0, 60.0).unwrap();
    let mesh = Mesh::uniform(domain, MaterialLayout::vacuum(), 1.0, 1.0).unwrap();
    let e = initial_energy(&mesh, &InitialData::new(g.clone(), g), 12).unwrap();
    // the tail of the pulse left of x = 0 carries about 5e-10
    assert!((e - expected).abs() < 1e-9, "{e} vs {expected}");
    assert!((e - 3.963327).abs() < 1e-6);
}

#[test]
fn dg_error_is_the_form_of_the_error() {
    // Exact solution cubic along characteristics, discrete solution of
    // degree 1: the error lives in the degree-3 space, where a(e; e) is
    // the squared DG norm.
    let domain = SpaceTimeDomain::new(0.0, 2.0, 1.0).unwrap();
    let mesh = Arc::new(Mesh::uniform(domain, MaterialLayout::uniform(2.0, 0.5).unwrap(), 0.5, 0.25).unwrap());
    let data =
        InitialData::new(ScalarFn::Polynomial(vec![0.1, 0.5, -0.3, 0.2]), ScalarFn::Polynomial(vec![0.0, 0.2, 0.4]));
    let exact = CharacteristicProfile::new(&mesh, data.clone(), Extension::FreeSpace).unwrap();
    let big = DiscreteSpace::new(mesh.clone(), BasisSpec::trefftz(3)).unwrap();
    let small = Arc::new(DiscreteSpace::new(mesh.clone(), BasisSpec::trefftz(1)).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sol = SolutionField::new(small.clone(), random_coeffs(&mut rng, small.n_dofs())).unwrap();
    let lifted = project(&big, |x, t| sol.evaluate(x, t).unwrap());
    let exact_c = project(&big, |x, t| exact.exact_field(x, t));
    let e: Vec<f64> = exact_c.iter().zip(&lifted).map(|(a, b)| a - b).collect();
    for bc in [BoundaryCondition::Pec, BoundaryCondition::robin_homogeneous()] {
        let flux = FluxParams { alpha: 0.3, beta: 1.2, delta: 0.3, per_face_scaling: false };
        let form = apply_bilinear_global(&big, &flux, &bc, &e, &e).unwrap();
        let d = dg_error(&sol, &exact, &flux, &bc, None).unwrap();
        assert!((d - form.sqrt()).abs() <= 1e-8 * d, "{d} vs {}", form.sqrt());
    }
    let exact_sol = SolutionField::new(Arc::new(big), exact_c).unwrap();
    let d = dg_error(&exact_sol, &exact, &FluxParams::default(), &BoundaryCondition::Pec, None).unwrap();
    assert!(d < 1e-12, "{d}");
}

#[test]
fn energy_identity_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for family in [BasisFamily::TrefftzTransport, BasisFamily::FullPolynomial] {
        for _ in 0..8 {
            let mesh = random_mesh(&mut rng);
            let (x_l, x_r) = (mesh.domain.x_l, mesh.domain.x_r);
            let space = random_space(&mut rng, mesh, family, 3);
            let center = rng.gen_range(x_l..x_r);
            let bc = if rng.gen_bool(0.5) { BoundaryCondition::Pec } else { BoundaryCondition::robin_homogeneous() };
            let flux = FluxParams {
                alpha: rng.gen_range(0.0..1.0),
                beta: rng.gen_range(0.0..1.0),
                delta: rng.gen_range(0.1..0.9),
                per_face_scaling: rng.gen_bool(0.5),
            };
            let problem = Problem::new(
                flux,
                bc,
                InitialData::new(ScalarFn::gaussian(center, 0.3, 1.0), ScalarFn::gaussian(center, 0.5, -0.4)),
            );
            let sol = march(space, &problem).unwrap();
            let audit = energy_budget(&sol, &problem).unwrap();
            assert!(audit.residual <= 1e-9, "{audit:?}");
            assert!(audit.dissipation_terms().iter().all(|d| *d >= -1e-12), "{audit:?}");
            assert!(audit.final_energy <= audit.initial * (1.0 + 1e-9));
        }
    }
}

#[test]
fn energy_audit_rejects_data_and_sources() {
    let space = uniform_space(1.0, 1.0, 0.5, BasisSpec::full(1));
    let sol = SolutionField::zero(space);
    let g = ScalarFn::Constant(1.0);
    let problem = Problem::new(
        FluxParams::default(),
        BoundaryCondition::Robin { left: g.clone(), right: g },
        InitialData::zero(),
    );
    assert!(matches!(energy_budget(&sol, &problem), Err(Error::UnsupportedBc(_))));
}

#[test]
fn relative_error_is_scale_invariant() {
    let (g, _) = gaussian_setup();
    let domain = SpaceTimeDomain::new(0.0, 60.0, 10.0).unwrap();
    let mesh = Arc::new(Mesh::uniform(domain, MaterialLayout::vacuum(), 2.0, 2.0).unwrap());
    let space = Arc::new(DiscreteSpace::new(mesh.clone(), BasisSpec::trefftz(2)).unwrap());
    let errs: Vec<f64> = [1.0, 1e-3, 250.0]
        .iter()
        .map(|&s| {
            let problem =
                Problem::new(FluxParams::default(), BoundaryCondition::Pec, InitialData::new(g.scaled(s), g.scaled(s)));
            let exact = CharacteristicProfile::for_problem(&mesh, &problem).unwrap();
            l2_relative_error(&march(space.clone(), &problem).unwrap(), &exact, None).unwrap()
        })
        .collect();
    assert!(errs.iter().all(|e| (e - errs[0]).abs() <= 1e-10 * errs[0]), "{errs:?}");
}

#[test]
fn energies_at_interfaces() {
    let space = uniform_space(2.0, 2.0, 1.0, BasisSpec::trefftz(1));
    let problem = Problem::new(
        FluxParams::default(),
        BoundaryCondition::Pec,
        InitialData::new(ScalarFn::Polynomial(vec![0.0, 1.0]), ScalarFn::Constant(0.3)),
    );
    let sol = march(space, &problem).unwrap();
    assert_eq!(discrete_energy(&sol, 1.0, None), Err(Error::AmbiguousTrace { t: 1.0 }));
    let below = discrete_energy(&sol, 1.0, Some(Side::Below)).unwrap();
    let above = discrete_energy(&sol, 1.0, Some(Side::Above)).unwrap();
    assert!(below > 0.0 && above > 0.0);
    assert!(discrete_energy(&sol, 0.0, None).is_ok());
    assert!(discrete_energy(&sol, 2.0, None).is_ok());
    assert!(discrete_energy(&sol, 3.0, None).is_err());
    let energies = slab_energies(&sol, &problem.initial).unwrap();
    assert_eq!(energies.len(), 3);
    assert_eq!(energies[1], below);
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}
