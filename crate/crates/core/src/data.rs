//! Scalar data functions for initial, boundary and source data.

use std::fmt;
use std::sync::Arc;

type Func1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Func2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Function of one variable with a derivative.
#[derive(Clone)]
pub enum ScalarFn {
    Zero,
    Constant(f64),
    /// `amplitude * exp(-(x - center)^2 / width)`.
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// Coefficients in ascending powers.
    Polynomial(Vec<f64>),
    /// Piecewise-linear interpolation of sorted `(x, y)` samples, constant
    /// beyond the first and last sample.
    Table(Vec<(f64, f64)>),
    /// Arbitrary closure; the derivative falls back to central differences.
    Custom {
        f: Func1,
        df: Option<Func1>,
    },
}

impl ScalarFn {
    pub fn gaussian(center: f64, width: f64, amplitude: f64) -> Self {
        ScalarFn::Gaussian { center, width, amplitude }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn::Custom { f: Arc::new(f), df: None }
    }

    pub fn custom_with_derivative(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFn::Custom { f: Arc::new(f), df: Some(Arc::new(df)) }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Zero => 0.0,
            ScalarFn::Constant(c) => *c,
            ScalarFn::Gaussian { center, width, amplitude } => {
                let d = x - center;
                amplitude * (-d * d / width).exp()
            }
            ScalarFn::Polynomial(c) => c.iter().rev().fold(0.0, |acc, a| acc * x + a),
            ScalarFn::Table(pts) => table_lookup(pts, x).0,
            ScalarFn::Custom { f, .. } => f(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Zero | ScalarFn::Constant(_) => 0.0,
            ScalarFn::Gaussian { center, width, .. } => -2.0 * (x - center) / width * self.value(x),
            ScalarFn::Polynomial(c) => {
                c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, a)| acc * x + k as f64 * a)
            }
            ScalarFn::Table(pts) => table_lookup(pts, x).1,
            ScalarFn::Custom { f, df } => match df {
                Some(df) => df(x),
                None => {
                    let h = 1e-6 * (1.0 + x.abs());
                    (f(x + h) - f(x - h)) / (2.0 * h)
                }
            },
        }
    }

    /// True only for functions that are identically zero by construction.
    pub fn is_zero(&self) -> bool {
        match self {
            ScalarFn::Zero => true,
            ScalarFn::Constant(c) => *c == 0.0,
            ScalarFn::Gaussian { amplitude, .. } => *amplitude == 0.0,
            ScalarFn::Polynomial(c) => c.iter().all(|a| *a == 0.0),
            ScalarFn::Table(pts) => pts.iter().all(|p| p.1 == 0.0),
            ScalarFn::Custom { .. } => false,
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        match self {
            ScalarFn::Zero => ScalarFn::Zero,
            ScalarFn::Constant(c) => ScalarFn::Constant(lambda * c),
            ScalarFn::Gaussian { center, width, amplitude } => {
                ScalarFn::Gaussian { center: *center, width: *width, amplitude: lambda * amplitude }
            }
            ScalarFn::Polynomial(c) => ScalarFn::Polynomial(c.iter().map(|a| lambda * a).collect()),
            ScalarFn::Table(pts) => ScalarFn::Table(pts.iter().map(|&(x, y)| (x, lambda * y)).collect()),
            ScalarFn::Custom { f, df } => {
                let f = f.clone();
                let df = df.clone();
                ScalarFn::Custom {
                    f: Arc::new(move |x| lambda * f(x)),
                    df: df.map(|df| Arc::new(move |x| lambda * df(x)) as Func1),
                }
            }
        }
    }
}

fn table_lookup(pts: &[(f64, f64)], x: f64) -> (f64, f64) {
    match pts.len() {
        0 => return (0.0, 0.0),
        1 => return (pts[0].1, 0.0),
        _ => {}
    }
    if x <= pts[0].0 {
        return (pts[0].1, 0.0);
    }
    if x >= pts[pts.len() - 1].0 {
        return (pts[pts.len() - 1].1, 0.0);
    }
    let k = pts.partition_point(|p| p.0 <= x).max(1);
    let (x0, y0) = pts[k - 1];
    let (x1, y1) = pts[k];
    let slope = (y1 - y0) / (x1 - x0);
    (y0 + slope * (x - x0), slope)
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Zero => write!(f, "Zero"),
            ScalarFn::Constant(c) => write!(f, "Constant({c})"),
            ScalarFn::Gaussian { center, width, amplitude } => {
                write!(f, "Gaussian {{ center: {center}, width: {width}, amplitude: {amplitude} }}")
            }
            ScalarFn::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            ScalarFn::Table(p) => write!(f, "Table({} points)", p.len()),
            ScalarFn::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Source term `J(x, t)`.
#[derive(Clone)]
pub struct Source(Func2);

impl Source {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Source(Arc::new(f))
    }

    pub fn constant(j: f64) -> Self {
        Source::new(move |_, _| j)
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        (self.0)(x, t)
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Source")
    }
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub e0: ScalarFn,
    pub h0: ScalarFn,
}

impl InitialData {
    pub fn new(e0: ScalarFn, h0: ScalarFn) -> Self {
        Self { e0, h0 }
    }

    pub fn zero() -> Self {
        Self::new(ScalarFn::Zero, ScalarFn::Zero)
    }

    pub fn is_zero(&self) -> bool {
        self.e0.is_zero() && self.h0.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_derivatives_match_differences() {
        let fns = [
            ScalarFn::gaussian(1.0, 3.0, 2.0),
            ScalarFn::Polynomial(vec![1.0, -2.0, 0.5, 0.25]),
            ScalarFn::Table(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)]),
            ScalarFn::custom(|x: f64| x.sin()),
        ];
        for f in &fns {
            for x in [-0.3, 0.4, 1.3, 1.7] {
                let h = 1e-6;
                let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
                assert!((f.derivative(x) - fd).abs() < 1e-6, "{f:?} at {x}");
            }
        }
    }

    #[test]
    fn table_is_clamped() {
        let t = ScalarFn::Table(vec![(0.0, 1.0), (1.0, 3.0)]);
        assert_eq!(t.value(-1.0), 1.0);
        assert_eq!(t.value(0.5), 2.0);
        assert_eq!(t.value(4.0), 3.0);
    }

    #[test]
    fn scaling() {
        let g = ScalarFn::gaussian(0.0, 1.0, 1.0).scaled(3.0);
        assert!((g.value(0.0) - 3.0).abs() < 1e-15);
        let c = ScalarFn::custom(|x| x).scaled(2.0);
        assert_eq!(c.value(2.0), 4.0);
        assert!(ScalarFn::Zero.is_zero() && !c.is_zero());
    }
}
