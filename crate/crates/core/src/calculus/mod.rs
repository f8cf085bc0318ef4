//! Directional increments, mixed directional derivatives, and base-pointed
//! antiderivatives of sampled profiles.

mod grid;
mod profile;
pub mod stencil;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{self, Expr, ExprError};
use crate::geometry::{Mat2, Rect, Vec2};

pub use grid::{ingest_samples, IngestError, SampleGrid, MIN_GRID_NODES};
pub use profile::{antiderivative, profile_eval, Interpolation, RidgeSum, SampledProfile};

/// Smoothness hint meaning "infinitely differentiable".
pub const SMOOTH: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("point ({x}, {y}) is outside the function's domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("argument {t} is outside the profile range [{t_min}, {t_max}]")]
    OutOfRange { t: f64, t_min: f64, t_max: f64 },
    #[error("derivative of order {order} exceeds the smoothness hint {hint}")]
    OrderExceedsSmoothness { order: usize, hint: u32 },
    #[error("finite differences of order {order} on sampled data are disabled (limit 2)")]
    HighOrderOnSamples { order: usize },
    #[error("no finite-difference stencil of step {step:e} fits the domain at ({x}, {y})")]
    InsufficientMargin { x: f64, y: f64, step: f64 },
    #[error("symbolic differentiation needs an expression-backed function")]
    SymbolicNeedsExpression,
    #[error("expression uses variables other than x and y: {0}")]
    ForeignVariables(String),
    #[error("antiderivative scale {0} is degenerate")]
    ZeroScale(f64),
    #[error("profile needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}

/// How derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Symbolic,
    Numeric,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Symbolic => "symbolic",
            Method::Numeric => "numeric",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "symbolic" => Ok(Method::Symbolic),
            "numeric" => Ok(Method::Numeric),
            other => Err(format!("unknown method '{other}' (expected symbolic or numeric)")),
        }
    }
}

enum Repr {
    Expr(Expr),
    Grid(SampleGrid),
    /// `inner(map * p)`
    Mapped { inner: BivariateFunction, map: Mat2 },
    /// `inner(p + delta*dir) - inner(p)`
    Increment { inner: BivariateFunction, dir: Vec2, delta: f64 },
    /// Five-point first derivative along `dir` with spacing `step`; the
    /// stencil slides off-center when the domain boundary is close.
    Derivative { inner: BivariateFunction, dir: Vec2, step: f64, weights: [[f64; 5]; 5] },
    RidgeSum(RidgeSum),
    /// `sum_i coefs[i] * g_i^(order)(d_i . p)` over the terms of a ridge sum.
    RidgeDerivative { sum: RidgeSum, order: usize, coefs: Vec<f64> },
    Difference(BivariateFunction, BivariateFunction),
}

/// An evaluable `F(x, y)` backed by an expression, samples, or a
/// composition of those.
#[derive(Clone)]
pub struct BivariateFunction {
    repr: Arc<Repr>,
    smoothness_hint: u32,
    /// Characteristic length used to size finite-difference steps.
    scale: f64,
    /// Relative noise floor of evaluations (roundoff or interpolation error).
    noise: f64,
}

impl fmt::Debug for BivariateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &*self.repr {
            Repr::Expr(e) => return write!(f, "BivariateFunction::Expr({e})"),
            Repr::Grid(g) => return write!(f, "BivariateFunction::Grid({:?})", g.shape()),
            Repr::Mapped { .. } => "Mapped",
            Repr::Increment { .. } => "Increment",
            Repr::Derivative { .. } => "Derivative",
            Repr::RidgeSum(_) => "RidgeSum",
            Repr::RidgeDerivative { .. } => "RidgeDerivative",
            Repr::Difference(..) => "Difference",
        };
        write!(f, "BivariateFunction::{kind}")
    }
}

impl BivariateFunction {
    fn wrap(repr: Repr, smoothness_hint: u32, scale: f64, noise: f64) -> Self {
        BivariateFunction {
            repr: Arc::new(repr),
            smoothness_hint,
            scale,
            noise,
        }
    }

    /// Wraps an expression over `x` and `y`.
    pub fn from_expr(e: Expr) -> Result<Self, CalculusError> {
        let foreign: Vec<String> = e.variables().into_iter().filter(|v| v != "x" && v != "y").collect();
        if !foreign.is_empty() {
            return Err(CalculusError::ForeignVariables(foreign.join(", ")));
        }
        let hint = if e.is_smooth() { SMOOTH } else { 0 };
        Ok(Self::wrap(Repr::Expr(e), hint, 1.0, f64::EPSILON))
    }

    /// Parses `text` as an expression over `x` and `y`.
    pub fn parse(text: &str) -> Result<Self, CalculusError> {
        Self::from_expr(expr::parse(text, &["x", "y"])?)
    }

    /// Wraps sample data. The default smoothness hint is 2, matching what
    /// bilinear interpolation can support. The noise floor follows the
    /// `h^2` bilinear interpolation error; its constant was calibrated on
    /// smooth test surfaces.
    pub fn from_grid(grid: SampleGrid) -> Self {
        let rect = grid.rect();
        let (hx, hy) = grid.spacing();
        let rel = hx.max(hy) / rect.max_side();
        let noise = (rel * rel / 32.0).max(f64::EPSILON);
        Self::wrap(Repr::Grid(grid), 2, rect.max_side(), noise)
    }

    pub fn ridge_sum(sum: RidgeSum) -> Self {
        Self::wrap(Repr::RidgeSum(sum), SMOOTH, 1.0, f64::EPSILON)
    }

    /// `sum_i coefs[i] * g_i^(order)(d_i . p)` for the terms `(d_i, g_i)` of
    /// `sum`, with derivatives taken from the samples.
    pub fn ridge_derivative(sum: RidgeSum, order: usize, coefs: Vec<f64>) -> Self {
        assert_eq!(sum.terms.len(), coefs.len(), "one coefficient per ridge term");
        Self::wrap(Repr::RidgeDerivative { sum, order, coefs }, SMOOTH, 1.0, f64::EPSILON)
    }

    pub fn as_ridge_sum(&self) -> Option<&RidgeSum> {
        match &*self.repr {
            Repr::RidgeSum(s) => Some(s),
            _ => None,
        }
    }

    pub fn with_smoothness(mut self, k: u32) -> Self {
        self.smoothness_hint = k;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn smoothness_hint(&self) -> u32 {
        self.smoothness_hint
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &*self.repr {
            Repr::Expr(e) => Some(e),
            _ => None,
        }
    }

    pub fn grid(&self) -> Option<&SampleGrid> {
        match &*self.repr {
            Repr::Grid(g) => Some(g),
            _ => None,
        }
    }

    /// True when some leaf of the composition is sample data.
    pub fn is_sample_backed(&self) -> bool {
        match &*self.repr {
            Repr::Expr(_) | Repr::RidgeSum(_) | Repr::RidgeDerivative { .. } => false,
            Repr::Grid(_) => true,
            Repr::Mapped { inner, .. } | Repr::Increment { inner, .. } | Repr::Derivative { inner, .. } => {
                inner.is_sample_backed()
            }
            Repr::Difference(a, b) => a.is_sample_backed() || b.is_sample_backed(),
        }
    }

    /// True when the function can be evaluated anywhere in the plane,
    /// barring expression domain errors.
    pub fn is_global(&self) -> bool {
        match &*self.repr {
            Repr::Expr(_) => true,
            Repr::Grid(_) | Repr::RidgeSum(_) | Repr::RidgeDerivative { .. } => false,
            Repr::Mapped { inner, .. } | Repr::Increment { inner, .. } | Repr::Derivative { inner, .. } => {
                inner.is_global()
            }
            Repr::Difference(a, b) => a.is_global() && b.is_global(),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, CalculusError> {
        self.eval_at([x, y])
    }

    pub fn eval_at(&self, p: Vec2) -> Result<f64, CalculusError> {
        match &*self.repr {
            Repr::Expr(e) => Ok(e.eval_xy(p[0], p[1])?),
            Repr::Grid(g) => g.eval(p).ok_or(CalculusError::OutOfDomain { x: p[0], y: p[1] }),
            Repr::Mapped { inner, map } => inner.eval_at(map.apply(p)),
            Repr::Increment { inner, dir, delta } => {
                let q = [p[0] + delta * dir[0], p[1] + delta * dir[1]];
                Ok(inner.eval_at(q)? - inner.eval_at(p)?)
            }
            Repr::Derivative { inner, dir, step, weights } => {
                if let Some(v) = stencil_derivative(inner, p, *dir, *step, weights) {
                    return v;
                }
                // At a corner no stencil along `dir` may fit; split `dir`
                // along the domain edges, where one-sided stencils always do.
                let margin = CalculusError::InsufficientMargin {
                    x: p[0],
                    y: p[1],
                    step: *step,
                };
                let [u, v] = inner.edge_axes().ok_or(margin.clone())?;
                let coef = Mat2([[u[0], v[0]], [u[1], v[1]]]).inverse().map_err(|_| margin.clone())?.apply(*dir);
                let mut acc = 0.0;
                for (c, axis) in coef.into_iter().zip([u, v]) {
                    if c != 0.0 {
                        acc += c * stencil_derivative(inner, p, axis, *step, weights).ok_or(margin.clone())??;
                    }
                }
                Ok(acc)
            }
            Repr::RidgeSum(s) => s.eval(p),
            Repr::RidgeDerivative { sum, order, coefs } => {
                let mut acc = 0.0;
                for ((d, prof), &c) in sum.terms.iter().zip(coefs) {
                    let t = d.argument(p);
                    if !prof.covers(t) {
                        return Err(CalculusError::OutOfDomain { x: p[0], y: p[1] });
                    }
                    if c != 0.0 {
                        acc += c * prof.derivative(t, *order)?;
                    }
                }
                Ok(acc)
            }
            Repr::Difference(a, b) => Ok(a.eval_at(p)? - b.eval_at(p)?),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match &*self.repr {
            Repr::Expr(_) => true,
            Repr::Grid(g) => g.rect().contains(p),
            Repr::Mapped { inner, map } => inner.contains(map.apply(p)),
            Repr::Increment { inner, dir, delta } => {
                inner.contains(p) && inner.contains([p[0] + delta * dir[0], p[1] + delta * dir[1]])
            }
            Repr::Derivative { inner, .. } => inner.contains(p),
            Repr::RidgeSum(s) | Repr::RidgeDerivative { sum: s, .. } => s.contains(p),
            Repr::Difference(a, b) => a.contains(p) && b.contains(p),
        }
    }

    /// `{s : p + s*dir is in the domain}` as a closed interval (possibly
    /// unbounded), or `None` when the line misses the domain.
    pub fn line_interval(&self, p: Vec2, dir: Vec2) -> Option<(f64, f64)> {
        let all = Some((f64::NEG_INFINITY, f64::INFINITY));
        match &*self.repr {
            Repr::Expr(_) => all,
            Repr::Grid(g) => g.rect().line_interval(p, dir),
            Repr::Mapped { inner, map } => inner.line_interval(map.apply(p), map.apply(dir)),
            Repr::Increment { inner, dir: l, delta } => {
                let a = inner.line_interval(p, dir)?;
                let b = inner.line_interval([p[0] + delta * l[0], p[1] + delta * l[1]], dir)?;
                intersect(a, b)
            }
            Repr::Derivative { inner, .. } => inner.line_interval(p, dir),
            Repr::RidgeSum(s) | Repr::RidgeDerivative { sum: s, .. } => s.line_interval(p, dir),
            Repr::Difference(a, b) => intersect(a.line_interval(p, dir)?, b.line_interval(p, dir)?),
        }
    }

    /// Unit edge directions of a parallelogram domain, when there is one.
    fn edge_axes(&self) -> Option<[Vec2; 2]> {
        match &*self.repr {
            Repr::Expr(_) | Repr::RidgeSum(_) | Repr::RidgeDerivative { .. } => None,
            Repr::Grid(_) => Some([[1.0, 0.0], [0.0, 1.0]]),
            Repr::Mapped { inner, map } => {
                let inv = map.inverse().ok()?;
                let [a, b] = inner.edge_axes()?;
                let unit = |v: Vec2| {
                    let w = inv.apply(v);
                    let n = w[0].hypot(w[1]);
                    [w[0] / n, w[1] / n]
                };
                Some([unit(a), unit(b)])
            }
            Repr::Increment { inner, .. } | Repr::Derivative { inner, .. } => inner.edge_axes(),
            Repr::Difference(a, b) => a.edge_axes().or_else(|| b.edge_axes()),
        }
    }

    /// `self(M p)`. Expressions are transformed symbolically.
    pub fn mapped(&self, map: Mat2) -> BivariateFunction {
        if let Repr::Expr(e) = &*self.repr {
            let m = map.0;
            let lin = |a: f64, b: f64| {
                expr::add(
                    expr::mul(Expr::Const(a), Expr::var("x")),
                    expr::mul(Expr::Const(b), Expr::var("y")),
                )
            };
            let (sx, sy) = (lin(m[0][0], m[0][1]), lin(m[1][0], m[1][1]));
            let out = e.substitute_all(&[("x", &sx), ("y", &sy)]);
            return Self::wrap(Repr::Expr(out), self.smoothness_hint, self.scale, self.noise);
        }
        Self::wrap(
            Repr::Mapped {
                inner: self.clone(),
                map,
            },
            self.smoothness_hint,
            self.scale,
            self.noise,
        )
    }

    /// `self - other`, symbolic when both sides are expressions.
    pub fn minus(&self, other: &BivariateFunction) -> BivariateFunction {
        let hint = self.smoothness_hint.min(other.smoothness_hint);
        let noise = self.noise.max(other.noise);
        if let (Repr::Expr(a), Repr::Expr(b)) = (&*self.repr, &*other.repr) {
            return Self::wrap(Repr::Expr(expr::sub(a.clone(), b.clone())), hint, self.scale, noise);
        }
        Self::wrap(Repr::Difference(self.clone(), other.clone()), hint, self.scale, noise)
    }

    /// Evaluates at many points in parallel.
    pub fn eval_many(&self, points: &[Vec2]) -> Result<Vec<f64>, CalculusError> {
        points.par_iter().map(|&p| self.eval_at(p)).collect()
    }

    /// `max |self|` over `points`.
    pub fn sup_over(&self, points: &[Vec2]) -> Result<f64, CalculusError> {
        Ok(self.eval_many(points)?.into_iter().fold(0.0, |m, v| m.max(v.abs())))
    }
}

/// Five-point derivative along `dir`, sliding the stencil off-center as far
/// as two nodes; `None` when no placement fits the domain.
fn stencil_derivative(
    inner: &BivariateFunction,
    p: Vec2,
    dir: Vec2,
    step: f64,
    weights: &[[f64; 5]; 5],
) -> Option<Result<f64, CalculusError>> {
    let at = |k: i32| [p[0] + k as f64 * step * dir[0], p[1] + k as f64 * step * dir[1]];
    let shift = [0, -1, 1, -2, 2]
        .into_iter()
        .find(|&s| (-2..=2).all(|o| inner.contains(at(s + o))))?;
    let w = &weights[(shift + 2) as usize];
    let mut acc = 0.0;
    for (o, wk) in (-2..=2).zip(w) {
        if *wk != 0.0 {
            match inner.eval_at(at(shift + o)) {
                Ok(v) => acc += wk * v,
                Err(e) => return Some(Err(e)),
            }
        }
    }
    Some(Ok(acc / step))
}

fn intersect(a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo <= hi).then_some((lo, hi))
}

/// `f(p + delta*l) - f(p)`.
pub fn increment(f: &BivariateFunction, l: Vec2, delta: f64) -> BivariateFunction {
    if let Repr::Expr(e) = &*f.repr {
        let sx = expr::add(Expr::var("x"), Expr::Const(delta * l[0]));
        let sy = expr::add(Expr::var("y"), Expr::Const(delta * l[1]));
        let shifted = e.substitute_all(&[("x", &sx), ("y", &sy)]);
        return BivariateFunction::wrap(
            Repr::Expr(expr::sub(shifted, e.clone())),
            f.smoothness_hint,
            f.scale,
            f.noise,
        );
    }
    BivariateFunction::wrap(
        Repr::Increment {
            inner: f.clone(),
            dir: l,
            delta,
        },
        f.smoothness_hint,
        f.scale,
        f.noise,
    )
}

/// Options for [`mixed_directional_derivative_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct DiffOptions {
    /// Permit finite-difference orders above 2 on sample-backed functions.
    pub allow_high_order_on_samples: bool,
}

/// Finite-difference spacing for a mixed derivative of total order `order`:
/// `noise^(1/(order+4)) * scale`, balancing the fourth-order truncation
/// error of the five-point stencils against amplified evaluation noise.
pub fn numeric_step(f: &BivariateFunction, order: usize) -> f64 {
    f.noise.powf(1.0 / (order as f64 + 4.0)) * f.scale
}

/// `d^m f / dl_1 ... dl_m` for the given unit directions.
pub fn mixed_directional_derivative(
    f: &BivariateFunction,
    dirs: &[Vec2],
    method: Method,
) -> Result<BivariateFunction, CalculusError> {
    mixed_directional_derivative_with(f, dirs, method, DiffOptions::default())
}

pub fn mixed_directional_derivative_with(
    f: &BivariateFunction,
    dirs: &[Vec2],
    method: Method,
    opts: DiffOptions,
) -> Result<BivariateFunction, CalculusError> {
    let order = dirs.len();
    let hint = f.smoothness_hint.saturating_sub(order as u32);
    match method {
        Method::Symbolic => {
            let Repr::Expr(e) = &*f.repr else {
                return Err(CalculusError::SymbolicNeedsExpression);
            };
            let d = dirs.iter().fold(e.clone(), |acc, l| acc.directional_diff(l[0], l[1]));
            Ok(BivariateFunction::wrap(Repr::Expr(d), hint, f.scale, f.noise))
        }
        Method::Numeric => {
            if order as u64 > u64::from(f.smoothness_hint) {
                return Err(CalculusError::OrderExceedsSmoothness {
                    order,
                    hint: f.smoothness_hint,
                });
            }
            if order > 2 && f.is_sample_backed() && !opts.allow_high_order_on_samples {
                return Err(CalculusError::HighOrderOnSamples { order });
            }
            let step = numeric_step(f, order);
            let weights = stencil::five_point_first_derivative();
            let mut out = f.clone();
            for &dir in dirs.iter().rev() {
                out = BivariateFunction::wrap(
                    Repr::Derivative {
                        inner: out,
                        dir,
                        step,
                        weights,
                    },
                    hint,
                    f.scale,
                    f.noise,
                );
            }
            Ok(out)
        }
    }
}

/// Convenience used by tests and the pipeline: a rectangle's grid evaluated
/// through `f`, returning `max |f|`.
pub fn sup_on_rect(f: &BivariateFunction, rect: &Rect, n: usize) -> Result<f64, CalculusError> {
    f.sup_over(&rect.grid(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{perpendicular_unit, Direction};

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn f(s: &str) -> BivariateFunction {
        BivariateFunction::parse(s).unwrap()
    }

    fn unit_square() -> Rect {
        Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap()
    }

    #[test]
    fn increment_of_ridge_along_perpendicular_vanishes() {
        let g = increment(&f("x^2"), [0.0, 1.0], 0.7);
        assert_eq!(sup_on_rect(&g, &unit_square(), 21).unwrap(), 0.0);
        let g = increment(&f("sin(x+y)"), [-S, S], 0.5);
        assert!(sup_on_rect(&g, &unit_square(), 21).unwrap() <= 1e-15);
    }

    #[test]
    fn increment_of_linear_is_constant() {
        let g = increment(&f("x"), [1.0, 0.0], 0.25);
        for p in unit_square().grid(7) {
            assert_eq!(g.eval_at(p).unwrap(), 0.25);
        }
    }

    #[test]
    fn increment_leaving_sampled_domain_errors() {
        let grid = SampleGrid::from_fn(unit_square(), 33, 33, |x, y| x + y);
        let g = increment(&BivariateFunction::from_grid(grid), [1.0, 0.0], 0.5);
        assert!(g.eval(0.0, 0.0).is_ok());
        assert!(matches!(g.eval(0.9, 0.0), Err(CalculusError::OutOfDomain { .. })));
    }

    #[test]
    fn mixed_derivative_examples() {
        let d = mixed_directional_derivative(&f("x*y"), &[[1.0, 0.0], [0.0, 1.0]], Method::Symbolic).unwrap();
        assert_eq!(d.eval(0.3, 0.9).unwrap(), 1.0);

        let d = mixed_directional_derivative(&f("sin(x+y)"), &[[-S, S]], Method::Numeric).unwrap();
        assert!(sup_on_rect(&d, &unit_square(), 21).unwrap() <= 1e-10);

        let g = f("exp(2*x+3*y)");
        let sym = mixed_directional_derivative(&g, &[[1.0, 0.0], [1.0, 0.0]], Method::Symbolic).unwrap();
        assert_eq!(sym.eval(0.0, 0.0).unwrap(), 4.0);
        let num = mixed_directional_derivative(&g, &[[1.0, 0.0], [1.0, 0.0]], Method::Numeric).unwrap();
        assert!((num.eval(0.0, 0.0).unwrap() - 4.0).abs() < 1e-8);
    }

    #[test]
    fn symbolic_needs_expression() {
        let grid = SampleGrid::from_fn(unit_square(), 33, 33, |x, y| x * y);
        let g = BivariateFunction::from_grid(grid);
        assert_eq!(
            mixed_directional_derivative(&g, &[[1.0, 0.0]], Method::Symbolic).unwrap_err(),
            CalculusError::SymbolicNeedsExpression
        );
    }

    #[test]
    fn order_limits_on_samples() {
        let grid = SampleGrid::from_fn(unit_square(), 65, 65, |x, y| x * y);
        let g = BivariateFunction::from_grid(grid);
        let three = [[1.0, 0.0]; 3];
        assert!(matches!(
            mixed_directional_derivative(&g, &three, Method::Numeric),
            Err(CalculusError::OrderExceedsSmoothness { order: 3, hint: 2 })
        ));
        let g = g.with_smoothness(5);
        assert!(matches!(
            mixed_directional_derivative(&g, &three, Method::Numeric),
            Err(CalculusError::HighOrderOnSamples { order: 3 })
        ));
        let opts = DiffOptions {
            allow_high_order_on_samples: true,
        };
        assert!(mixed_directional_derivative_with(&g, &three, Method::Numeric, opts).is_ok());
    }

    #[test]
    fn stencils_slide_at_sampled_boundaries() {
        let grid = SampleGrid::from_fn(unit_square(), 129, 129, |x, y| 3.0 * x - 2.0 * y);
        let g = BivariateFunction::from_grid(grid);
        let d = mixed_directional_derivative(&g, &[[1.0, 0.0]], Method::Numeric).unwrap();
        for p in [[-1.0, 0.0], [1.0, 1.0], [0.0, -1.0], [0.99, 0.5]] {
            assert!((d.eval_at(p).unwrap() - 3.0).abs() < 1e-10, "{p:?}");
        }
    }

    #[test]
    fn thin_domain_has_no_margin() {
        let rect = Rect::new(-1.0, 1.0, 0.0, 0.01).unwrap();
        let grid = SampleGrid::from_fn(rect, 33, 33, |x, y| x + y);
        let g = BivariateFunction::from_grid(grid);
        let d = mixed_directional_derivative(&g, &[[0.0, 1.0]], Method::Numeric).unwrap();
        assert!(matches!(d.eval(0.0, 0.005), Err(CalculusError::InsufficientMargin { .. })));
    }

    #[test]
    fn mapped_expression_stays_symbolic() {
        let g = f("x + 2*y").mapped(Mat2([[1.0, 1.0], [1.0, -1.0]]));
        assert!(g.expr().is_some());
        assert_eq!(g.eval(1.0, 2.0).unwrap(), 3.0 + 2.0 * -1.0);
    }

    #[test]
    fn perpendicular_increment_annihilates_ridges() {
        let d = Direction::new(2.0, -1.0);
        let l = perpendicular_unit(d);
        let g = f("cos(2*x - y) + (2*x - y)^3");
        for delta in [0.1, 0.5, 1.0] {
            let inc = increment(&g, l, delta);
            assert!(sup_on_rect(&inc, &unit_square(), 21).unwrap() <= 1e-12 * 28.0);
        }
    }
}
