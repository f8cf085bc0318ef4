//! Shared fixtures for the criterion benches.

use ridgesplit::calculus::SampledProfile;
use ridgesplit::geometry::{parse_directions, validate_directions};
use ridgesplit::{BivariateFunction, DirectionSet, Rect};

/// The three-direction ridge sum used throughout the examples.
pub const RIDGE_SUM_3: &str = "sin(x) + exp(y) + (x+y)^2";

pub fn unit_square() -> Rect {
    Rect::new(-1.0, 1.0, -1.0, 1.0).expect("valid square")
}

pub fn ridge_sum_3() -> (BivariateFunction, DirectionSet) {
    let f = BivariateFunction::parse(RIDGE_SUM_3).expect("fixture parses");
    let ds = validate_directions(&parse_directions("1,0;0,1;1,1").expect("fixture parses"), 1e-12)
        .expect("independent directions");
    (f, ds)
}

/// `cos(3t)` sampled on `[-2, 2]`, anchored at 0.
pub fn cosine_profile(n: usize) -> SampledProfile {
    SampledProfile::from_fn(-2.0, 2.0, n, 0.0, |t| Ok((3.0 * t).cos())).expect("valid profile")
}
