#![allow(dead_code)]

use ridgesplit::geometry::{parse_directions, validate_directions};
use ridgesplit::{DirectionSet, Rect};

pub fn square() -> Rect {
    Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap()
}

pub fn dirs(text: &str) -> DirectionSet {
    validate_directions(&parse_directions(text).unwrap(), 1e-12).unwrap()
}

/// Factor lists of orders 1 to 4 with matching smooth profiles in `t`.
pub const OPERATORS: &[(&str, &str)] = &[
    ("1,0", "exp(t)"),
    ("2,-1", "sin(3*t) + t^2"),
    ("1,1;1,-1", "t^3;sin(t)"),
    ("1,0;0,1", "cos(t);exp(t/2)"),
    ("1,2;3,-1", "1/(2+t^2);t^4 - t"),
    ("1,0;0,1;1,1", "sin(t);cos(2*t);t^5"),
    ("2,1;-1,3;1,-1", "exp(-t^2);sin(t)*t;log(3+t)"),
    ("1,0;0,1;1,1;1,-2", "t^3;sin(t);exp(t/3);cos(t)"),
    ("1,1;1,-1;2,1;1,3", "sqrt(4+t);t^2*cos(t);exp(t)-t;sin(2*t)"),
];

/// Explicit ridge sums with the directions they are built from.
pub const RIDGE_SUMS: &[(&str, &str)] = &[
    ("sin(x) + exp(y) + (x+y)^2", "1,0;0,1;1,1"),
    ("sin(x) + cos(y) + (x+y)^3 + exp(x-y)", "1,0;0,1;1,1;1,-1"),
    ("exp(2*x-y) + (x+3*y)^2 - sin(x+y)", "2,-1;1,3;1,1"),
    ("cos(x) + y^3 + sin(x+2*y) + exp((x-y)/2) + (2*x+y)^2", "1,0;0,1;1,2;1,-1;2,1"),
];

/// Iterated-increment oracle: the alternating sum of `f` over all subset
/// shifts `p + sum_{i in S} delta_i l_i`.
pub fn inclusion_exclusion(f: impl Fn(f64, f64) -> f64, p: [f64; 2], shifts: &[[f64; 2]]) -> f64 {
    let n = shifts.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let mut q = p;
        for (i, s) in shifts.iter().enumerate() {
            if mask & (1 << i) != 0 {
                q[0] += s[0];
                q[1] += s[1];
            }
        }
        let sign = if (n as u32 - mask.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * f(q[0], q[1]);
    }
    total
}
