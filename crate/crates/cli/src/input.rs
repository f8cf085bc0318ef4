use std::path::Path;

use ridgesplit::calculus::ingest_samples;
use ridgesplit::geometry::{parse_directions, parse_rect, validate_directions};
use ridgesplit::{BivariateFunction, DirectionSet, Method, Rect};

use crate::report::CliError;

pub fn default_square() -> Rect {
    Rect::new(-1.0, 1.0, -1.0, 1.0).expect("valid square")
}

/// Loads F from exactly one of an expression or a samples file.
pub fn load_function(expr: Option<&str>, samples: Option<&Path>) -> Result<BivariateFunction, CliError> {
    match (expr, samples) {
        (Some(text), None) => BivariateFunction::parse(text).map_err(|e| CliError::input(format!("--f: {e}"))),
        (None, Some(path)) => Ok(BivariateFunction::from_grid(ingest_samples(path)?)),
        _ => Err(CliError::input("give exactly one of an expression or --samples")),
    }
}

/// The explicit `--domain`, else the sample extent, else `[-1,1]^2`.
pub fn domain_for(text: Option<&str>, f: &BivariateFunction) -> Result<Rect, CliError> {
    match text {
        Some(t) => Ok(parse_rect(t)?),
        None => Ok(f.grid().map(|g| g.rect()).unwrap_or_else(default_square)),
    }
}

pub fn method_for(requested: Option<Method>, f: &BivariateFunction) -> Result<Method, CliError> {
    let method = requested.unwrap_or(if f.is_sample_backed() {
        Method::Numeric
    } else {
        Method::Symbolic
    });
    if method == Method::Symbolic && f.is_sample_backed() {
        return Err(CliError::input("the symbolic method needs an expression; use --method numeric with --samples"));
    }
    Ok(method)
}

pub fn directions(text: &str, tol_indep: f64) -> Result<DirectionSet, CliError> {
    Ok(validate_directions(&parse_directions(text)?, tol_indep)?)
}

/// Parses `"d1,d2,..."`.
pub fn number_list(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::input(format!("{flag}: '{}' is not a number", s.trim())))
        })
        .collect()
}

pub fn axis_pair(text: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [i, j] => match (i.parse(), j.parse()) {
            (Ok(i), Ok(j)) => Ok((i, j)),
            _ => Err(CliError::input(format!("--axis-pair: '{text}' is not of the form i,j"))),
        },
        _ => Err(CliError::input(format!("--axis-pair: '{text}' is not of the form i,j"))),
    }
}

pub fn check_grid(flag: &str, n: usize, min: usize) -> Result<(), CliError> {
    if n < min {
        return Err(CliError::input(format!("{flag} must be at least {min}, got {n}")));
    }
    Ok(())
}
