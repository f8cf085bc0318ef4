//! Plane waves for factored operators `prod_k (alpha_k d/dx + beta_k d/dy)`.
//!
//! Every factor annihilates functions of `beta_k x - alpha_k y`, so sums of
//! such plane waves solve the homogeneous equation. Conversely a smooth
//! solution of that form can be split into smooth plane waves with
//! [`decompose`], and the split can be checked against the operator.

use serde::Serialize;
use thiserror::Error;

use crate::calculus::{
    mixed_directional_derivative_with, BivariateFunction, CalculusError, DiffOptions, Method,
};
use crate::decompose::{decompose, DecomposeError, DecomposeOptions, Decomposition};
use crate::expr::{self, Expr};
use crate::geometry::{validate_directions, Direction, DirectionSet, GeometryError, Rect, DEFAULT_TOL_INDEP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("invalid operator: {0}")]
    Operator(GeometryError),
    #[error("expected {expected} profiles (one per factor), got {got}")]
    ProfileCount { expected: usize, got: usize },
    #[error("profile {index} uses variables other than t")]
    ProfileVariables { index: usize },
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

/// `prod_k (alpha_k d/dx + beta_k d/dy)` with nonzero, pairwise independent
/// factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveOperator {
    factors: Vec<(f64, f64)>,
}

impl PlaneWaveOperator {
    pub fn new(factors: Vec<(f64, f64)>) -> Result<Self, PdeError> {
        Self::with_tol(factors, DEFAULT_TOL_INDEP)
    }

    pub fn with_tol(factors: Vec<(f64, f64)>, tol_indep: f64) -> Result<Self, PdeError> {
        let as_dirs: Vec<Direction> = factors.iter().map(|&(a, b)| Direction::new(a, b)).collect();
        validate_directions(&as_dirs, tol_indep).map_err(PdeError::Operator)?;
        Ok(PlaneWaveOperator { factors })
    }

    /// Parses `"alpha,beta;alpha,beta;..."`.
    pub fn parse(text: &str) -> Result<Self, PdeError> {
        let pairs = crate::geometry::parse_pair_list(text).map_err(PdeError::Operator)?;
        Self::new(pairs.into_iter().map(|p| (p[0], p[1])).collect())
    }

    pub fn factors(&self) -> &[(f64, f64)] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    /// Same operator with the factors reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        PlaneWaveOperator {
            factors: perm.iter().map(|&i| self.factors[i]).collect(),
        }
    }

    /// `prod_k (alpha_k a + beta_k b)`: the operator applied to a plane wave
    /// along `(a, b)` multiplies its `r`-th derivative by this.
    pub fn symbol(&self, d: Direction) -> f64 {
        self.factors.iter().map(|&(al, be)| al * d.a + be * d.b).product()
    }
}

/// Ridge directions `(beta_k, -alpha_k)` of the plane waves each factor
/// annihilates.
pub fn wave_directions(op: &PlaneWaveOperator) -> DirectionSet {
    let dirs: Vec<Direction> = op.factors.iter().map(|&(al, be)| Direction::new(be, -al)).collect();
    validate_directions(&dirs, 0.0).expect("rotated factors stay pairwise independent")
}

/// `u(x, y) = sum_k v_k(beta_k x - alpha_k y)` for profiles written in `t`.
pub fn plane_wave_solution(op: &PlaneWaveOperator, profiles: &[Expr]) -> Result<BivariateFunction, PdeError> {
    if profiles.len() != op.order() {
        return Err(PdeError::ProfileCount {
            expected: op.order(),
            got: profiles.len(),
        });
    }
    let mut u = Expr::constant(0.0);
    for (index, (v, &(al, be))) in profiles.iter().zip(&op.factors).enumerate() {
        if v.variables().iter().any(|name| name != "t") {
            return Err(PdeError::ProfileVariables { index });
        }
        let arg = expr::sub(
            expr::mul(Expr::constant(be), Expr::var("x")),
            expr::mul(Expr::constant(al), Expr::var("y")),
        );
        u = expr::add(u, v.substitute("t", &arg));
    }
    Ok(BivariateFunction::from_expr(u)?)
}

/// Parses `"v1;v2;..."` profile expressions in `t`.
pub fn parse_profiles(text: &str) -> Result<Vec<Expr>, PdeError> {
    text.split(';')
        .map(|part| expr::parse(part.trim(), &["t"]).map_err(|e| PdeError::Calculus(e.into())))
        .collect()
}

/// Applies the factors left to right. Ridge sums of sampled profiles are
/// handled term by term through [`PlaneWaveOperator::symbol`], whichever
/// method is requested.
pub fn apply_operator(
    op: &PlaneWaveOperator,
    u: &BivariateFunction,
    method: Method,
) -> Result<BivariateFunction, PdeError> {
    apply_operator_with(op, u, method, DiffOptions::default())
}

pub fn apply_operator_with(
    op: &PlaneWaveOperator,
    u: &BivariateFunction,
    method: Method,
    diff: DiffOptions,
) -> Result<BivariateFunction, PdeError> {
    if let Some(sum) = u.as_ridge_sum() {
        let coefs = sum.terms.iter().map(|(d, _)| op.symbol(*d)).collect();
        return Ok(BivariateFunction::ridge_derivative(sum.clone(), op.order(), coefs));
    }
    match method {
        Method::Symbolic => {
            let e = u.expr().ok_or(CalculusError::SymbolicNeedsExpression)?;
            let d = op.factors.iter().fold(e.clone(), |acc, &(al, be)| acc.directional_diff(al, be));
            Ok(BivariateFunction::from_expr(d)?.with_scale(u.scale()))
        }
        Method::Numeric => {
            // Unnormalized factors give `alpha d/dx + beta d/dy` directly.
            let dirs: Vec<[f64; 2]> = op.factors.iter().map(|&(al, be)| [al, be]).collect();
            Ok(mixed_directional_derivative_with(u, &dirs, Method::Numeric, diff)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub max_residual: f64,
    pub max_abs_u: f64,
    /// Absolute threshold `tol * (1 + max|u|)`.
    pub threshold: f64,
    pub passed: bool,
}

/// `max |L u|` over an `n x n` grid of `domain` against `tol * (1 + max|u|)`.
pub fn verify_solution(
    op: &PlaneWaveOperator,
    u: &BivariateFunction,
    domain: &Rect,
    grid_n: usize,
    tol: f64,
    method: Method,
) -> Result<VerifyReport, PdeError> {
    let residual = apply_operator(op, u, method)?;
    let points = domain.grid(grid_n);
    let max_residual = residual.sup_over(&points)?;
    let max_abs_u = u.sup_over(&points)?;
    let threshold = tol * (1.0 + max_abs_u);
    Ok(VerifyReport {
        max_residual,
        max_abs_u,
        threshold,
        passed: max_residual <= threshold,
    })
}

#[derive(Debug, Clone)]
pub struct CorollaryReport {
    pub decomposition: Decomposition,
    pub verification: VerifyReport,
    /// Set when the smoothness hint of `u` is below the operator order.
    pub smoothness_warning: Option<String>,
}

/// Splits `u` into smooth plane waves along the operator's wave directions
/// and applies the operator to the reconstructed sum.
pub fn corollary_check(
    op: &PlaneWaveOperator,
    u: &BivariateFunction,
    domain: &Rect,
    opts: &DecomposeOptions,
    tol: f64,
) -> Result<CorollaryReport, PdeError> {
    let smoothness_warning = (u.smoothness_hint() < op.order() as u32).then(|| {
        format!(
            "smoothness hint {} is below the operator order {}; the residual check assumes u is C^{}",
            u.smoothness_hint(),
            op.order(),
            op.order()
        )
    });
    let dirs = wave_directions(op);
    let decomposition = decompose(u, &dirs, domain, opts)?;
    let verification = verify_solution(op, &decomposition.as_function(), domain, opts.verify_n, tol, opts.method)?;
    Ok(CorollaryReport {
        decomposition,
        verification,
        smoothness_warning,
    })
}
