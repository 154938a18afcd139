//! Exact solutions for constant coefficients.
//!
//! With `u = sqrt(eps) E + sqrt(mu) H` and `w = sqrt(eps) E - sqrt(mu) H`
//! the homogeneous system decouples into two transport equations,
//! `u(x, t) = u0(x - c t)` and `w(x, t) = w0(x + c t)`. Boundary conditions
//! are encoded by extending `u0` to the left of `x_l` and `w0` to the right
//! of `x_r`:
//!
//! * PEC: `(E0, H0)` is extended `2L`-periodically, `E0` odd and `H0` even
//!   about `x_l` (the method of images);
//! * free space: the data functions are used as given on the whole line;
//! * ingoing Robin data: `u0(y) = g_l((x_l - y) / c)` for `y < x_l` and
//!   `w0(y) = g_r((y - x_r) / c)` for `y > x_r`.

use crate::assembly::{BoundaryCondition, Problem};
use crate::data::{InitialData, ScalarFn};
use crate::error::{Error, Result};
use crate::mesh::{Element, Mesh};
use crate::quadrature::gauss_points;

#[derive(Debug, Clone)]
pub enum Extension {
    PeriodicOddEven,
    FreeSpace,
    RobinIngoing { g_left: ScalarFn, g_right: ScalarFn },
}

#[derive(Debug, Clone)]
pub struct CharacteristicProfile {
    pub initial: InitialData,
    pub extension: Extension,
    pub x_l: f64,
    pub x_r: f64,
    pub eps: f64,
    pub mu: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxNorm {
    L2,
    /// `h^{-1} |e|^2 + h (|d_x e|^2 + |c^{-1} d_t e|^2)` with `h = h_x + c h_t`.
    H1c,
}

impl CharacteristicProfile {
    pub fn new(mesh: &Mesh, initial: InitialData, extension: Extension) -> Result<Self> {
        if !mesh.materials.is_constant() {
            return Err(Error::NonconstantMaterial);
        }
        let eps = mesh.materials.eps_at(mesh.domain.x_l);
        let mu = mesh.materials.mu_at(mesh.domain.x_l);
        Ok(Self {
            initial,
            extension,
            x_l: mesh.domain.x_l,
            x_r: mesh.domain.x_r,
            eps,
            mu,
            c: (eps * mu).sqrt().recip(),
        })
    }

    /// Reference solution matching the boundary conditions of `problem`.
    pub fn for_problem(mesh: &Mesh, problem: &Problem) -> Result<Self> {
        if problem.source.is_some() {
            return Err(Error::InvalidParameter("exact reference is only available without source".into()));
        }
        let extension = match &problem.bc {
            BoundaryCondition::Pec => Extension::PeriodicOddEven,
            BoundaryCondition::Dirichlet { left, right } if left.is_zero() && right.is_zero() => {
                Extension::PeriodicOddEven
            }
            BoundaryCondition::Dirichlet { .. } => {
                return Err(Error::UnsupportedBc("exact reference for inhomogeneous Dirichlet data".into()))
            }
            BoundaryCondition::Robin { left, right } => {
                Extension::RobinIngoing { g_left: left.clone(), g_right: right.clone() }
            }
        };
        Self::new(mesh, problem.initial.clone(), extension)
    }

    fn length(&self) -> f64 {
        self.x_r - self.x_l
    }

    /// Extended `(E0, H0)` and their derivatives at `y` (PEC and free space).
    fn extended_data(&self, y: f64) -> [f64; 4] {
        let (e0, h0) = (&self.initial.e0, &self.initial.h0);
        match self.extension {
            Extension::PeriodicOddEven => {
                let l = self.length();
                let r = (y - self.x_l).rem_euclid(2.0 * l);
                if r < l {
                    let z = self.x_l + r;
                    [e0.value(z), h0.value(z), e0.derivative(z), h0.derivative(z)]
                } else {
                    let z = self.x_l + 2.0 * l - r;
                    [-e0.value(z), h0.value(z), e0.derivative(z), -h0.derivative(z)]
                }
            }
            _ => [e0.value(y), h0.value(y), e0.derivative(y), h0.derivative(y)],
        }
    }

    /// Extended right-moving profile and its derivative.
    pub fn u_tilde(&self, y: f64) -> (f64, f64) {
        if let Extension::RobinIngoing { g_left, .. } = &self.extension {
            if y < self.x_l {
                let s = (self.x_l - y) / self.c;
                return (g_left.value(s), -g_left.derivative(s) / self.c);
            }
        }
        let [e, h, de, dh] = self.extended_data(y);
        let (se, sm) = (self.eps.sqrt(), self.mu.sqrt());
        (se * e + sm * h, se * de + sm * dh)
    }

    /// Extended left-moving profile and its derivative.
    pub fn w_tilde(&self, y: f64) -> (f64, f64) {
        if let Extension::RobinIngoing { g_right, .. } = &self.extension {
            if y > self.x_r {
                let s = (y - self.x_r) / self.c;
                return (g_right.value(s), g_right.derivative(s) / self.c);
            }
        }
        let [e, h, de, dh] = self.extended_data(y);
        let (se, sm) = (self.eps.sqrt(), self.mu.sqrt());
        (se * e - sm * h, se * de - sm * dh)
    }

    /// Points where the extended profiles may jump, inside `(a, b)`.
    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = Vec::new();
        match self.extension {
            Extension::PeriodicOddEven => {
                let l = self.length();
                let k0 = ((a - self.x_l) / l).floor() as i64;
                let k1 = ((b - self.x_l) / l).ceil() as i64;
                for k in k0..=k1 {
                    pts.push(self.x_l + k as f64 * l);
                }
            }
            Extension::RobinIngoing { .. } => pts.extend([self.x_l, self.x_r]),
            Extension::FreeSpace => {}
        }
        pts.retain(|p| *p > a && *p < b);
        pts
    }

    pub fn exact_field(&self, x: f64, t: f64) -> (f64, f64) {
        let u = self.u_tilde(x - self.c * t).0;
        let w = self.w_tilde(x + self.c * t).0;
        ((u + w) / (2.0 * self.eps.sqrt()), (u - w) / (2.0 * self.mu.sqrt()))
    }

    /// Local best-approximation error of the exact solution in the Trefftz
    /// space of degree `p` on `element`.
    ///
    /// `u0` and `w0` are L²-projected onto degree-`p` polynomials over the
    /// intervals swept by the two families of characteristics crossing the
    /// element; the resulting error is measured in the energy-weighted norm
    /// `eps E^2 + mu H^2`, in which the two families decouple.
    pub fn best_approximation_error(&self, element: &Element, p: usize, norm: ApproxNorm) -> Result<f64> {
        if element.eps != self.eps || element.mu != self.mu {
            return Err(Error::NonconstantMaterial);
        }
        let c = self.c;
        let (x0, x1, t0, t1) = (element.x0, element.x1, element.t0, element.t1);
        let minus = [x0 - c * t1, x0 - c * t0, x1 - c * t1, x1 - c * t0];
        let plus = [x0 + c * t0, x0 + c * t1, x1 + c * t0, x1 + c * t1];
        let eu = self.projection_error(|y| self.u_tilde(y), minus, p, -c, element)?;
        let ew = self.projection_error(|y| self.w_tilde(y), plus, p, c, element)?;
        let l2 = 0.5 * (eu.0 + ew.0);
        Ok(match norm {
            ApproxNorm::L2 => l2.sqrt(),
            ApproxNorm::H1c => {
                let h = element.hx() + c * element.ht();
                (l2 / h + h * (eu.1 + ew.1)).sqrt()
            }
        })
    }

    /// `(∬ e^2, ∬ e'^2)` over the element for the projection error `e` of one
    /// profile, with `e` evaluated along `y = x + speed * t`.
    fn projection_error(
        &self,
        f: impl Fn(f64) -> (f64, f64),
        corners: [f64; 4],
        p: usize,
        speed: f64,
        el: &Element,
    ) -> Result<(f64, f64)> {
        let mut knots = corners;
        knots.sort_by(f64::total_cmp);
        let (a, b) = (knots[0], knots[3]);
        let mut cuts: Vec<f64> = knots.to_vec();
        cuts.extend(self.breakpoints(a, b));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (b - a));
        let rule = gauss_points((p + 8).max(20))?;
        let mut pts = Vec::new();
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                pts.extend(rule.map_to_segment(w[0], w[1])?);
            }
        }

        // projection coefficients in Legendre polynomials of the interval
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut lv = vec![0.0; p + 1];
        let mut ld = vec![0.0; p + 1];
        let mut coef = vec![0.0; p + 1];
        for &(y, w) in &pts {
            crate::basis::legendre(p, (y - mid) / half, &mut lv, &mut ld);
            let fy = f(y).0;
            for j in 0..=p {
                coef[j] += w * fy * lv[j];
            }
        }
        for (j, cj) in coef.iter_mut().enumerate() {
            *cj *= (2 * j + 1) as f64 / (b - a);
        }

        // ∬_K F(x - speed t) dx dt = ∫ F(y) len(y) dy, len = measure of the
        // t-section of the element along the characteristic through y.
        // With y = x + speed t, the section is speed t in (y - x1, y - x0).
        let len = |y: f64| {
            let (ta, tb) = ((y - el.x1) / speed, (y - el.x0) / speed);
            (ta.max(tb).min(el.t1) - ta.min(tb).max(el.t0)).max(0.0)
        };
        let (mut e2, mut d2) = (0.0, 0.0);
        for &(y, w) in &pts {
            crate::basis::legendre(p, (y - mid) / half, &mut lv, &mut ld);
            let (fy, dfy) = f(y);
            let (mut proj, mut dproj) = (0.0, 0.0);
            for j in 0..=p {
                proj += coef[j] * lv[j];
                dproj += coef[j] * ld[j] / half;
            }
            let l = len(y);
            e2 += w * l * (fy - proj).powi(2);
            d2 += w * l * (dfy - dproj).powi(2);
        }
        Ok((e2, d2))
    }
}

/// Exact `(E, H)` at `(x, t)`.
pub fn exact_field(profile: &CharacteristicProfile, x: f64, t: f64) -> (f64, f64) {
    profile.exact_field(x, t)
}

/// Global best-approximation error `sqrt(sum_K err_K^2)` over a mesh.
pub fn best_approximation_global(
    profile: &CharacteristicProfile,
    mesh: &Mesh,
    p: usize,
    norm: ApproxNorm,
) -> Result<f64> {
    use rayon::prelude::*;
    let parts: Vec<f64> = mesh
        .elements
        .par_iter()
        .map(|el| profile.best_approximation_error(el, p, norm).map(|e| e * e))
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum::<f64>().sqrt())
}
