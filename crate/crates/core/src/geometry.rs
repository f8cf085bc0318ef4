//! Ridge directions, domain rectangles, and the linear change of coordinates
//! that sends two chosen directions onto the coordinate axes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default threshold on the normalized cross product below which two
/// directions count as parallel.
pub const DEFAULT_TOL_INDEP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("direction {index} is the zero vector")]
    ZeroVector { index: usize },
    #[error("directions {i} and {j} are linearly dependent (normalized cross product {cross:e})")]
    DependentPair { i: usize, j: usize, cross: f64 },
    #[error("normalization needs at least 3 directions, got {0}")]
    TooFewDirections(usize),
    #[error("axis pair ({0}, {1}) is not a pair of distinct valid indices")]
    InvalidAxisPair(usize, usize),
    #[error("coordinate map is singular (det = {0:e})")]
    Singular(f64),
    #[error("invalid rectangle: {0}")]
    InvalidRect(String),
    #[error("cannot parse '{text}': {message}")]
    Encoding { text: String, message: String },
}

pub type Vec2 = [f64; 2];

pub fn dot(u: Vec2, v: Vec2) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// A ridge direction `(a, b)`: the ridge argument is `a*x + b*y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub a: f64,
    pub b: f64,
}

impl Direction {
    pub const fn new(a: f64, b: f64) -> Self {
        Direction { a, b }
    }

    pub fn as_vec(self) -> Vec2 {
        [self.a, self.b]
    }

    pub fn norm(self) -> f64 {
        norm(self.as_vec())
    }

    pub fn is_zero(self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }

    /// Ridge argument `a*x + b*y` at `p`.
    pub fn argument(self, p: Vec2) -> f64 {
        self.a * p[0] + self.b * p[1]
    }

    /// `|a_i b_j - a_j b_i| / (|d_i| |d_j|)`, the sine of the angle between
    /// the two lines.
    pub fn normalized_cross(self, other: Direction) -> f64 {
        (self.a * other.b - other.a * self.b).abs() / (self.norm() * other.norm())
    }
}

/// Unit vector obtained by rotating `d` by +90 degrees: `(-b, a)/|d|`.
pub fn perpendicular_unit(d: Direction) -> Vec2 {
    let n = d.norm();
    [-d.b / n, d.a / n]
}

/// Pairwise linearly independent, nonzero directions.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dirs: Vec<Direction>,
    tol_indep: f64,
}

impl DirectionSet {
    pub fn directions(&self) -> &[Direction] {
        &self.dirs
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn get(&self, i: usize) -> Direction {
        self.dirs[i]
    }

    pub fn tol_indep(&self) -> f64 {
        self.tol_indep
    }

    /// Normalized cross product for every pair `i < j`.
    pub fn pair_crosses(&self) -> Vec<(usize, usize, f64)> {
        pair_crosses(&self.dirs)
    }
}

fn pair_crosses(dirs: &[Direction]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            out.push((i, j, dirs[i].normalized_cross(dirs[j])));
        }
    }
    out
}

/// Checks that every direction is nonzero and every pair is independent.
pub fn validate_directions(dirs: &[Direction], tol_indep: f64) -> Result<DirectionSet, GeometryError> {
    if let Some(index) = dirs
        .iter()
        .position(|d| d.is_zero() || !d.a.is_finite() || !d.b.is_finite())
    {
        return Err(GeometryError::ZeroVector { index });
    }
    for (i, j, cross) in pair_crosses(dirs) {
        if !(cross > tol_indep) {
            return Err(GeometryError::DependentPair { i, j, cross });
        }
    }
    Ok(DirectionSet {
        dirs: dirs.to_vec(),
        tol_indep,
    })
}

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn from_rows(r0: Vec2, r1: Vec2) -> Mat2 {
        Mat2([r0, r1])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * p[0] + m[0][1] * p[1], m[1][0] * p[0] + m[1][1] * p[1]]
    }

    /// Row vector times matrix: `v^T M`.
    pub fn left_apply(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        [v[0] * m[0][0] + v[1] * m[1][0], v[0] * m[0][1] + v[1] * m[1][1]]
    }

    pub fn inverse(&self) -> Result<Mat2, GeometryError> {
        let det = self.det();
        let m = &self.0;
        let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if det == 0.0 || !det.is_finite() || det.abs() <= f64::EPSILON * scale * scale {
            return Err(GeometryError::Singular(det));
        }
        Ok(Mat2([
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ]))
    }
}

/// The problem re-expressed in coordinates `(x', y') = M (x, y)` in which the
/// chosen axis pair becomes `(1,0)` and `(0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedProblem {
    pub m: Mat2,
    pub m_inv: Mat2,
    /// `perm[k]` is the original index of normalized direction `k`. The
    /// axis pair occupies the last two slots.
    pub perm: Vec<usize>,
    pub dirs_normalized: DirectionSet,
    /// Unit perpendiculars to the first `n - 2` normalized directions.
    pub perps: Vec<Vec2>,
}

impl NormalizedProblem {
    pub fn axis_pair(&self) -> (usize, usize) {
        let n = self.perm.len();
        (self.perm[n - 2], self.perm[n - 1])
    }

    /// Reverses the orientation of perpendicular `j`.
    pub fn flip_perpendicular(&mut self, j: usize) {
        self.perps[j] = [-self.perps[j][0], -self.perps[j][1]];
    }

    pub fn to_normalized(&self, p: Vec2) -> Vec2 {
        self.m.apply(p)
    }

    pub fn to_original(&self, q: Vec2) -> Vec2 {
        self.m_inv.apply(q)
    }
}

/// The pair with the largest normalized cross product; earlier pairs win ties.
pub fn select_axis_pair(ds: &DirectionSet) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_cross = f64::NEG_INFINITY;
    for (i, j, c) in ds.pair_crosses() {
        if c > best_cross {
            best = (i, j);
            best_cross = c;
        }
    }
    best
}

pub fn normalize(ds: &DirectionSet, axis_pair: Option<(usize, usize)>) -> Result<NormalizedProblem, GeometryError> {
    let n = ds.len();
    if n < 3 {
        return Err(GeometryError::TooFewDirections(n));
    }
    let (p, q) = axis_pair.unwrap_or_else(|| select_axis_pair(ds));
    if p == q || p >= n || q >= n {
        return Err(GeometryError::InvalidAxisPair(p, q));
    }
    let m = Mat2::from_rows(ds.get(p).as_vec(), ds.get(q).as_vec());
    let m_inv = m.inverse()?;

    let mut perm: Vec<usize> = (0..n).filter(|&i| i != p && i != q).collect();
    perm.extend([p, q]);
    let mut dirs: Vec<Direction> = perm[..n - 2]
        .iter()
        .map(|&i| {
            let v = m_inv.left_apply(ds.get(i).as_vec());
            Direction::new(v[0], v[1])
        })
        .collect();
    dirs.push(Direction::new(1.0, 0.0));
    dirs.push(Direction::new(0.0, 1.0));
    let perps = dirs[..n - 2].iter().map(|&d| perpendicular_unit(d)).collect();
    let dirs_normalized = validate_directions(&dirs, ds.tol_indep())?;
    Ok(NormalizedProblem {
        m,
        m_inv,
        perm,
        dirs_normalized,
        perps,
    })
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Rect, GeometryError> {
        if ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidRect("bounds must be finite".into()));
        }
        if !(x0 < x1 && y0 < y1) {
            return Err(GeometryError::InvalidRect(format!(
                "need x0 < x1 and y0 < y1, got [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    pub fn center(&self) -> Vec2 {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn max_side(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            [self.x0, self.y0],
            [self.x1, self.y0],
            [self.x0, self.y1],
            [self.x1, self.y1],
        ]
    }

    /// Slack used by containment tests to absorb rounding at the boundary.
    pub fn slack(&self) -> f64 {
        1e-12 * (self.max_side() + self.center()[0].abs().max(self.center()[1].abs()))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let s = self.slack();
        p[0] >= self.x0 - s && p[0] <= self.x1 + s && p[1] >= self.y0 - s && p[1] <= self.y1 + s
    }

    /// Range of the ridge argument `d . p` over the rectangle.
    pub fn image(&self, d: Direction) -> (f64, f64) {
        self.corners()
            .iter()
            .map(|&c| d.argument(c))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// `n x n` uniform grid of points, row by row in `y`.
    pub fn grid(&self, n: usize) -> Vec<Vec2> {
        let n = n.max(2);
        let xs = linspace(self.x0, self.x1, n);
        let ys = linspace(self.y0, self.y1, n);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| [x, y]))
            .collect()
    }

    /// Parameter interval `{s : p + s*dir in rect}`, or `None` if the line
    /// misses the rectangle.
    pub fn line_interval(&self, p: Vec2, dir: Vec2) -> Option<(f64, f64)> {
        let s = self.slack();
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (pc, dc, a, b) in [
            (p[0], dir[0], self.x0 - s, self.x1 + s),
            (p[1], dir[1], self.y0 - s, self.y1 + s),
        ] {
            if dc == 0.0 {
                if pc < a || pc > b {
                    return None;
                }
            } else {
                let (t0, t1) = ((a - pc) / dc, (b - pc) / dc);
                lo = lo.max(t0.min(t1));
                hi = hi.min(t0.max(t1));
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Shrinks by `dx` on both sides in x and `dy` in y.
    pub fn shrink(&self, dx: f64, dy: f64) -> Option<Rect> {
        Rect::new(self.x0 + dx, self.x1 - dx, self.y0 + dy, self.y1 - dy).ok()
    }
}

/// `n` equally spaced values from `a` to `b` inclusive; the endpoints are exact.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + i as f64 * h })
        .collect()
}

/// Parses `"a,b;a,b;..."` into pairs.
pub fn parse_pair_list(text: &str) -> Result<Vec<Vec2>, GeometryError> {
    let err = |message: String| GeometryError::Encoding {
        text: text.to_string(),
        message,
    };
    if text.trim().is_empty() {
        return Err(err("empty list".into()));
    }
    text.split(';')
        .enumerate()
        .map(|(k, item)| {
            let parts: Vec<&str> = item.split(',').map(str::trim).collect();
            if parts.len() != 2 || parts.iter().any(|s| s.is_empty()) {
                return Err(err(format!("entry {k} ('{item}') is not of the form a,b")));
            }
            let a: f64 = parts[0]
                .parse()
                .map_err(|_| err(format!("entry {k}: '{}' is not a number", parts[0])))?;
            let b: f64 = parts[1]
                .parse()
                .map_err(|_| err(format!("entry {k}: '{}' is not a number", parts[1])))?;
            Ok([a, b])
        })
        .collect()
}

pub fn parse_directions(text: &str) -> Result<Vec<Direction>, GeometryError> {
    Ok(parse_pair_list(text)?
        .into_iter()
        .map(|[a, b]| Direction::new(a, b))
        .collect())
}

/// Parses `"x0,x1,y0,y1"`.
pub fn parse_rect(text: &str) -> Result<Rect, GeometryError> {
    let vals: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == 4 => Rect::new(v[0], v[1], v[2], v[3]),
        _ => Err(GeometryError::Encoding {
            text: text.to_string(),
            message: "expected four comma-separated numbers x0,x1,y0,y1".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirs(v: &[(f64, f64)]) -> Vec<Direction> {
        v.iter().map(|&(a, b)| Direction::new(a, b)).collect()
    }

    #[test]
    fn cauchy_directions_are_valid() {
        let ds = validate_directions(&dirs(&[(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]), 1e-12).unwrap();
        assert_eq!(ds.len(), 3);
    }

    #[test]
    fn parallel_pair_rejected() {
        let err = validate_directions(&dirs(&[(1.0, 2.0), (2.0, 4.0)]), 1e-12).unwrap_err();
        assert!(matches!(err, GeometryError::DependentPair { i: 0, j: 1, .. }));
    }

    #[test]
    fn zero_vector_rejected() {
        let err = validate_directions(&dirs(&[(0.0, 0.0), (1.0, 0.0)]), 1e-12).unwrap_err();
        assert_eq!(err, GeometryError::ZeroVector { index: 0 });
    }

    #[test]
    fn perpendiculars() {
        assert_eq!(perpendicular_unit(Direction::new(1.0, 0.0)), [-0.0, 1.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = perpendicular_unit(Direction::new(1.0, 1.0));
        assert!((p[0] + s).abs() < 1e-15 && (p[1] - s).abs() < 1e-15);
        let p = perpendicular_unit(Direction::new(3.0, 4.0));
        assert!((p[0] + 0.8).abs() < 1e-15 && (p[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn normalize_diagonal_axes() {
        let ds = validate_directions(&dirs(&[(1.0, 1.0), (1.0, -1.0), (1.0, 0.0)]), 1e-12).unwrap();
        let np = normalize(&ds, Some((0, 1))).unwrap();
        assert_eq!(np.m, Mat2([[1.0, 1.0], [1.0, -1.0]]));
        assert_eq!(np.perm, vec![2, 0, 1]);
        let d = np.dirs_normalized.get(0);
        assert!((d.a - 0.5).abs() < 1e-15 && (d.b - 0.5).abs() < 1e-15);
        assert_eq!(np.dirs_normalized.get(1), Direction::new(1.0, 0.0));
        assert_eq!(np.dirs_normalized.get(2), Direction::new(0.0, 1.0));
    }

    #[test]
    fn normalize_identity_axes() {
        let ds = validate_directions(&dirs(&[(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]), 1e-12).unwrap();
        let np = normalize(&ds, None).unwrap();
        assert_eq!(np.m, Mat2::IDENTITY);
        assert_eq!(np.dirs_normalized.get(0), Direction::new(1.0, 1.0));
        assert_eq!(np.axis_pair(), (0, 1));
    }

    #[test]
    fn normalize_needs_three() {
        let ds = validate_directions(&dirs(&[(1.0, 0.0), (0.0, 1.0)]), 1e-12).unwrap();
        assert_eq!(normalize(&ds, None), Err(GeometryError::TooFewDirections(2)));
    }

    #[test]
    fn line_interval_through_square() {
        let r = Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let (lo, hi) = r.line_interval([0.0, 0.0], [1.0, 1.0]).unwrap();
        assert!((lo + 1.0).abs() < 1e-11 && (hi - 1.0).abs() < 1e-11);
        assert!(r.line_interval([5.0, 0.0], [0.0, 1.0]).is_none());
    }

    #[test]
    fn pair_list_encoding() {
        assert_eq!(parse_pair_list("1,0; 0,1;1,-1").unwrap(), vec![[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]]);
        assert!(parse_pair_list("1,0;;0,1").is_err());
        assert!(parse_pair_list("1,0,2").is_err());
        assert!(parse_pair_list("a,b").is_err());
        assert_eq!(parse_rect("-1,1,-2,2").unwrap(), Rect::new(-1.0, 1.0, -2.0, 2.0).unwrap());
        assert!(parse_rect("1,-1,0,1").is_err());
    }
}
