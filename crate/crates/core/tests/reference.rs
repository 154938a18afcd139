use trefftz_core::data::{InitialData, ScalarFn};
use trefftz_core::mesh::{MaterialLayout, Mesh, SpaceTimeDomain};
use trefftz_core::reference::*;
use trefftz_core::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mesh(x_r: f64, t_final: f64, h: f64, eps: f64, mu: f64) -> Mesh {
    let domain = SpaceTimeDomain::new(0.0, x_r, t_final).unwrap();
    Mesh::uniform(domain, MaterialLayout::uniform(eps, mu).unwrap(), h, h).unwrap()
}

fn pulse() -> InitialData {
    InitialData::new(ScalarFn::gaussian(5.0, 0.5, 1.0), ScalarFn::gaussian(4.0, 0.4, -0.3))
}

#[test]
fn initial_time_reproduces_data() {
    let m = mesh(10.0, 4.0, 1.0, 2.0, 0.5);
    let data = pulse();
    let g = ScalarFn::Polynomial(vec![0.2, 0.1]);
    for ext in [
        Extension::PeriodicOddEven,
        Extension::FreeSpace,
        Extension::RobinIngoing { g_left: g.clone(), g_right: g.clone() },
    ] {
        let prof = CharacteristicProfile::new(&m, data.clone(), ext).unwrap();
        for k in 0..=50 {
            let x = 0.2 * k as f64;
            let (e, h) = prof.exact_field(x, 0.0);
            assert!((e - data.e0.value(x)).abs() < 1e-14 && (h - data.h0.value(x)).abs() < 1e-14);
        }
    }
}

#[test]
fn pec_walls_are_perfect_conductors() {
    let m = mesh(10.0, 30.0, 1.0, 2.0, 0.5);
    let prof = CharacteristicProfile::new(&m, pulse(), Extension::PeriodicOddEven).unwrap();
    for k in 0..=300 {
        let t = 0.1 * k as f64;
        assert!(prof.exact_field(0.0, t).0.abs() < 1e-14);
        assert!(prof.exact_field(10.0, t).0.abs() < 1e-14);
    }
}

#[test]
fn free_transport_before_boundary_contact() {
    let m = mesh(60.0, 20.0, 1.0, 1.0, 1.0);
    let g = ScalarFn::gaussian(10.0, 10.0, 1.0);
    let prof = CharacteristicProfile::new(&m, InitialData::new(g.clone(), g.clone()), Extension::FreeSpace).unwrap();
    for k in 0..100 {
        let (x, t) = (0.6 * k as f64, 0.2 * k as f64);
        let (e, h) = prof.exact_field(x, t);
        assert!((e - g.value(x - t)).abs() < 1e-14 && (h - g.value(x - t)).abs() < 1e-14);
    }
}

#[test]
fn exact_field_solves_the_equations() {
    let (eps, mu) = (2.0, 0.5);
    let m = mesh(10.0, 30.0, 1.0, eps, mu);
    let g = ScalarFn::custom(|t| (0.3 * t).sin() * (-0.01 * t * t).exp());
    for ext in [Extension::PeriodicOddEven, Extension::RobinIngoing { g_left: g.clone(), g_right: g.scaled(0.5) }] {
        let prof = CharacteristicProfile::new(&m, pulse(), ext).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = 1e-5;
        let mut worst = 0.0_f64;
        for _ in 0..200 {
            let (x, t) = (rng.gen_range(0.5..9.5), rng.gen_range(0.5..29.5));
            let f = |x, t| prof.exact_field(x, t);
            let dx = |i: usize| {
                let (a, b) = (f(x + d, t), f(x - d, t));
                if i == 0 {
                    (a.0 - b.0) / (2.0 * d)
                } else {
                    (a.1 - b.1) / (2.0 * d)
                }
            };
            let dt = |i: usize| {
                let (a, b) = (f(x, t + d), f(x, t - d));
                if i == 0 {
                    (a.0 - b.0) / (2.0 * d)
                } else {
                    (a.1 - b.1) / (2.0 * d)
                }
            };
            worst = worst.max((dx(0) + mu * dt(1)).abs()).max((dx(1) + eps * dt(0)).abs());
        }
        assert!(worst < 1e-6, "residual {worst}");
    }
}

#[test]
fn mirrored_data_give_mirrored_solution() {
    // x -> L - x maps (E, H) to (E, -H).
    let m = mesh(10.0, 25.0, 1.0, 1.0, 1.0);
    let data = pulse();
    let (e0, h0) = (data.e0.clone(), data.h0.clone());
    let mirrored =
        InitialData::new(ScalarFn::custom(move |x| e0.value(10.0 - x)), ScalarFn::custom(move |x| -h0.value(10.0 - x)));
    let a = CharacteristicProfile::new(&m, data, Extension::PeriodicOddEven).unwrap();
    let b = CharacteristicProfile::new(&m, mirrored, Extension::PeriodicOddEven).unwrap();
    for k in 0..100 {
        let (x, t) = (0.1 * k as f64, 0.25 * k as f64);
        let (ea, ha) = a.exact_field(x, t);
        let (eb, hb) = b.exact_field(10.0 - x, t);
        assert!((ea - eb).abs() < 1e-13 && (ha + hb).abs() < 1e-13);
    }
}

#[test]
fn polynomial_data_are_approximated_exactly() {
    let m = mesh(3.0, 2.0, 0.5, 2.0, 0.5);
    let data = InitialData::new(ScalarFn::Polynomial(vec![1.0, -0.5, 0.2]), ScalarFn::Polynomial(vec![0.3, 0.0, -0.1]));
    let prof = CharacteristicProfile::new(&m, data, Extension::FreeSpace).unwrap();
    for norm in [ApproxNorm::L2, ApproxNorm::H1c] {
        assert!(best_approximation_global(&prof, &m, 2, norm).unwrap() < 1e-12);
        assert!(best_approximation_global(&prof, &m, 1, norm).unwrap() > 1e-3);
    }
}

#[test]
fn best_approximation_rates() {
    let data = InitialData::new(ScalarFn::gaussian(5.0, 2.0, 1.0), ScalarFn::gaussian(5.0, 2.0, 1.0));
    for p in 0..=3 {
        let errs: Vec<(f64, f64)> = [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|&h| {
                let m = mesh(10.0, 2.0, h, 1.0, 1.0);
                let prof = CharacteristicProfile::new(&m, data.clone(), Extension::FreeSpace).unwrap();
                (h, best_approximation_global(&prof, &m, p, ApproxNorm::L2).unwrap())
            })
            .collect();
        let w = &errs[2..];
        let rate = (w[0].1 / w[1].1).ln() / 2f64.ln();
        assert!(rate >= p as f64 + 0.9, "p = {p}: {errs:?}");
    }
    let m = mesh(10.0, 2.0, 1.0, 1.0, 1.0);
    let prof = CharacteristicProfile::new(&m, data, Extension::FreeSpace).unwrap();
    let errs: Vec<f64> = (0..=10).map(|p| best_approximation_global(&prof, &m, p, ApproxNorm::H1c).unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
    assert!(errs[10] < 1e-4 * errs[0], "{errs:?}");
}

#[test]
fn constructor_errors() {
    let domain = SpaceTimeDomain::new(0.0, 2.0, 1.0).unwrap();
    let layered = MaterialLayout::new(vec![1.0], vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
    let m = Mesh::uniform(domain, layered, 0.5, 0.5).unwrap();
    assert!(matches!(
        CharacteristicProfile::new(&m, InitialData::zero(), Extension::FreeSpace),
        Err(Error::NonconstantMaterial)
    ));
}
