//! Smooth ridge decomposition of `F = sum_i g_i(a_i x + b_i y)`.
//!
//! For `n >= 3` directions the two best-conditioned directions are mapped to
//! the coordinate axes. The mixed derivative of `F` along the perpendiculars
//! to the remaining `n - 2` directions then separates as `h1(x') + h2(y')`.
//! Each stage integrates every current profile once along the next
//! perpendicular (with the matching cosine scale), subtracts the result from
//! the next lower-order derivative of `F`, and reads the new ridge profile
//! off the remainder. After `n - 2` stages the remainder is `F` itself.
//!
//! All profiles are sampled, anchored at the image of the domain center, and
//! checked: the separation and ridge-constancy defects, and the per-stage
//! residual, must stay under the stage tolerance or the run aborts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{
    antiderivative, mixed_directional_derivative_with, BivariateFunction, CalculusError, DiffOptions,
    Interpolation, Method, RidgeSum, SampledProfile,
};
use crate::geometry::{
    dot, normalize, perpendicular_unit, Direction, DirectionSet, GeometryError, Mat2, Rect, Vec2,
};

/// Default profile sample count.
pub const DEFAULT_GRID_N: usize = 1025;
/// Default verification grid size per axis.
pub const DEFAULT_VERIFY_N: usize = 101;
/// Relative padding of profile ranges beyond the exact image of the domain.
pub const RANGE_PADDING: f64 = 0.05;

/// Stage tolerance relative to `1 + max|G_j|`.
pub fn default_stage_tol(method: Method) -> f64 {
    match method {
        Method::Symbolic => 1e-8,
        Method::Numeric => 1e-4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    /// `G(x,y) - G(x,y0) - G(x0,y) + G(x0,y0)` on the top derivative.
    Separation,
    /// Variation of a stage remainder along its level lines.
    RidgeConstancy,
    /// Stage identity residual.
    StageResidual,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecomposeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("F is not a ridge sum along these directions: {kind:?} defect {defect:e} exceeds tolerance {tolerance:e} (stage {stage})")]
    NotRepresentable {
        kind: DefectKind,
        stage: usize,
        defect: f64,
        tolerance: f64,
    },
    #[error("smoothness hint {hint} is below n - 2 = {needed}")]
    InsufficientSmoothness { hint: u32, needed: u32 },
    #[error("the domain cannot be sampled along direction {index}: need t in [{need_lo}, {need_hi}], reachable [{got_lo}, {got_hi}]")]
    RangeNotCovered {
        index: usize,
        need_lo: f64,
        need_hi: f64,
        got_lo: f64,
        got_hi: f64,
    },
    #[error("need at least one direction")]
    NoDirections,
    #[error("profile grid needs at least 5 nodes, got {0}")]
    GridTooSmall(usize),
    #[error("expected {expected} increments, got {got}")]
    DeltaCount { expected: usize, got: usize },
    #[error("domain is too small for increments of this size")]
    DomainTooSmall,
}

impl DecomposeError {
    /// True for the errors that signal `F` is not a ridge sum.
    pub fn is_representability_defect(&self) -> bool {
        matches!(self, DecomposeError::NotRepresentable { .. })
    }
}

#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    pub method: Method,
    pub grid_n: usize,
    pub axis_pair: Option<(usize, usize)>,
    pub verify_n: usize,
    /// Size of the working grid used by the stage checks.
    pub check_n: usize,
    /// Overrides [`default_stage_tol`].
    pub stage_tol: Option<f64>,
    pub interpolation: Interpolation,
    /// Indices of normalized perpendiculars whose orientation is reversed.
    pub flip_perpendiculars: Vec<usize>,
    pub diff: DiffOptions,
}

impl DecomposeOptions {
    pub fn new(method: Method, grid_n: usize) -> Self {
        DecomposeOptions {
            method,
            grid_n,
            axis_pair: None,
            verify_n: DEFAULT_VERIFY_N,
            check_n: 65,
            stage_tol: None,
            interpolation: Interpolation::Cubic,
            flip_perpendiculars: Vec::new(),
            diff: DiffOptions::default(),
        }
    }

    fn stage_tol(&self) -> f64 {
        self.stage_tol.unwrap_or_else(|| default_stage_tol(self.method))
    }
}

/// Diagnostics for one cascade stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    /// `sup |G_j - stage sum|` on the working grid.
    pub residual_sup: f64,
    pub constancy_defect: f64,
    pub tolerance: f64,
}

/// Intermediate state after stage `j`: the current target and its profiles.
#[derive(Debug, Clone)]
pub struct StageState {
    pub stage: usize,
    pub target: BivariateFunction,
    /// Profile of `x'` (first axis direction).
    pub h1: SampledProfile,
    /// Profile of `y'` (second axis direction).
    pub h2: SampledProfile,
    /// Ridge profiles extracted so far with their normalized directions.
    pub ridges: Vec<(Direction, SampledProfile)>,
}

impl StageState {
    fn sum(&self, interpolation: Interpolation) -> RidgeSum {
        let mut terms = vec![
            (Direction::new(1.0, 0.0), self.h1.clone()),
            (Direction::new(0.0, 1.0), self.h2.clone()),
        ];
        terms.extend(self.ridges.iter().cloned());
        RidgeSum::new(terms, interpolation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionMetadata {
    pub grid_n: usize,
    pub verify_n: usize,
    pub check_n: usize,
    /// Profile sample spacing, in original direction order.
    pub steps: Vec<f64>,
    /// Original indices mapped to the coordinate axes (n >= 3 only).
    pub axis_pair: Option<(usize, usize)>,
    /// Finite-difference spacing per derivative order (numeric path).
    pub fd_steps: Vec<f64>,
    pub stages: Vec<StageReport>,
}

/// Sampled smooth profiles with `F ~ sum_i profiles[i](a_i x + b_i y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub directions: Vec<Direction>,
    pub profiles: Vec<SampledProfile>,
    pub domain: Rect,
    pub method: Method,
    pub interpolation: Interpolation,
    pub reconstruction_sup_error: f64,
    pub separation_defect: f64,
    pub metadata: DecompositionMetadata,
    pub source_expression: Option<String>,
}

impl Decomposition {
    pub fn ridge_sum(&self) -> RidgeSum {
        RidgeSum::new(
            self.directions.iter().copied().zip(self.profiles.iter().cloned()).collect(),
            self.interpolation,
        )
    }

    pub fn as_function(&self) -> BivariateFunction {
        BivariateFunction::ridge_sum(self.ridge_sum())
    }

    /// `sup |F - reconstruction|` on an `n x n` grid over the domain.
    pub fn sup_error_against(&self, f: &BivariateFunction, n: usize) -> Result<f64, DecomposeError> {
        let sum = self.ridge_sum();
        let errs: Result<Vec<f64>, CalculusError> = self
            .domain
            .grid(n)
            .par_iter()
            .map(|&p| Ok((f.eval_at(p)? - sum.eval(p)?).abs()))
            .collect();
        Ok(errs?.into_iter().fold(0.0, f64::max))
    }
}

/// `sum_i profiles[i](a_i x + b_i y)` at a point of the domain.
pub fn reconstruct(dec: &Decomposition, x: f64, y: f64) -> Result<f64, DecomposeError> {
    if !dec.domain.contains([x, y]) {
        return Err(CalculusError::OutOfDomain { x, y }.into());
    }
    Ok(dec.ridge_sum().eval([x, y])?)
}

/// The domain rectangle viewed through a linear change of coordinates
/// `q = M p`. Points handed to and returned from this type are in the
/// local (`q`) coordinates.
#[derive(Debug, Clone, Copy)]
pub struct WorkingRegion {
    pub rect: Rect,
    pub to_local: Mat2,
    pub to_rect: Mat2,
}

impl WorkingRegion {
    pub fn from_rect(rect: Rect) -> Self {
        WorkingRegion {
            rect,
            to_local: Mat2::IDENTITY,
            to_rect: Mat2::IDENTITY,
        }
    }

    pub fn mapped(rect: Rect, to_local: Mat2, to_rect: Mat2) -> Self {
        WorkingRegion { rect, to_local, to_rect }
    }

    pub fn center(&self) -> Vec2 {
        self.to_local.apply(self.rect.center())
    }

    pub fn points(&self, n: usize) -> Vec<Vec2> {
        self.rect.grid(n).into_iter().map(|p| self.to_local.apply(p)).collect()
    }

    pub fn line_interval(&self, q: Vec2, dir: Vec2) -> Option<(f64, f64)> {
        self.rect.line_interval(self.to_rect.apply(q), self.to_rect.apply(dir))
    }

    /// Largest side of the bounding box in local coordinates.
    pub fn extent(&self) -> f64 {
        let pts: Vec<Vec2> = self.rect.corners().iter().map(|&c| self.to_local.apply(c)).collect();
        let span = |k: usize| {
            let (lo, hi) = pts
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
            hi - lo
        };
        span(0).max(span(1))
    }

    /// Image of the region under the ridge argument of local direction `d`.
    pub fn image(&self, d: Direction) -> (f64, f64) {
        let v = self.to_local.left_apply(d.as_vec());
        self.rect.image(Direction::new(v[0], v[1]))
    }
}

/// Uniform profile grid: `n` nodes on `[t_min, t_max]`, anchored at `base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
    pub base: f64,
}

impl TGrid {
    /// Grid over the image `[lo, hi]` widened by `padding` on each side,
    /// centered on the image midpoint.
    pub fn padded(lo: f64, hi: f64, padding: f64, n: usize) -> TGrid {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo) * (1.0 + padding);
        TGrid {
            t_min: mid - half,
            t_max: mid + half,
            n,
            base: mid,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RidgeExtraction {
    pub profile: SampledProfile,
    pub constancy_defect: f64,
}

fn midpoint(iv: (f64, f64)) -> f64 {
    match (iv.0.is_finite(), iv.1.is_finite()) {
        (true, true) => 0.5 * (iv.0 + iv.1),
        (true, false) => iv.0,
        (false, true) => iv.1,
        (false, false) => 0.0,
    }
}

/// Reads the ridge profile of `r` along `d`: `phi(t) = r(p(t))` where `p(t)`
/// lies on the level line `d . p = t`. The trace point
/// `c + (t - d.c) d/|d|^2` through the region center `c` is used when `r` can
/// be evaluated there; otherwise the midpoint of the evaluable chord of the
/// level line. The constancy defect is measured on probe points of the
/// region and must not exceed `tol`.
pub fn extract_ridge_profile(
    r: &BivariateFunction,
    d: Direction,
    grid: TGrid,
    region: &WorkingRegion,
    tol: f64,
) -> Result<RidgeExtraction, DecomposeError> {
    let c = region.center();
    let dv = d.as_vec();
    let nn = dot(dv, dv);
    let l = perpendicular_unit(d);
    let tc = d.argument(c);

    let sample_point = |t: f64| -> Result<Vec2, DecomposeError> {
        let p = [c[0] + (t - tc) * dv[0] / nn, c[1] + (t - tc) * dv[1] / nn];
        let feasible = r.line_interval(p, l).ok_or(DecomposeError::RangeNotCovered {
            index: 0,
            need_lo: grid.t_min,
            need_hi: grid.t_max,
            got_lo: t,
            got_hi: t,
        })?;
        let s = if feasible.0 <= 0.0 && 0.0 <= feasible.1 {
            0.0
        } else {
            match region.line_interval(p, l) {
                Some(iv) if iv.0.max(feasible.0) <= iv.1.min(feasible.1) => {
                    midpoint((iv.0.max(feasible.0), iv.1.min(feasible.1)))
                }
                _ => midpoint(feasible),
            }
        };
        Ok([p[0] + s * l[0], p[1] + s * l[1]])
    };

    let nodes = crate::geometry::linspace(grid.t_min, grid.t_max, grid.n);
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|&t| Ok(r.eval_at(sample_point(t)?)?))
        .collect::<Result<_, DecomposeError>>()?;
    let profile = SampledProfile::new(grid.t_min, grid.t_max, values, grid.base)?;

    let defect = constancy_defect(r, l, region)?;
    if defect > tol {
        return Err(DecomposeError::NotRepresentable {
            kind: DefectKind::RidgeConstancy,
            stage: 0,
            defect,
            tolerance: tol,
        });
    }
    Ok(RidgeExtraction {
        profile,
        constancy_defect: defect,
    })
}

/// `max |r(p + s l) - r(p)|` over probe points `p` of the region and offsets
/// `s`, skipping pairs that leave the domain of `r`.
pub fn constancy_defect(r: &BivariateFunction, l: Vec2, region: &WorkingRegion) -> Result<f64, DecomposeError> {
    let ext = region.extent();
    let offsets = [-0.3, -0.15, -0.05, 0.05, 0.15, 0.3].map(|s| s * ext);
    let probes = region.points(17);
    let per_probe: Result<Vec<f64>, CalculusError> = probes
        .par_iter()
        .map(|&p| {
            if !r.contains(p) {
                return Ok(0.0);
            }
            let base = r.eval_at(p)?;
            let mut worst = 0.0f64;
            for s in offsets {
                let q = [p[0] + s * l[0], p[1] + s * l[1]];
                if region.line_interval(q, l).is_some_and(|iv| iv.0 <= 0.0 && 0.0 <= iv.1) && r.contains(q) {
                    worst = worst.max((r.eval_at(q)? - base).abs());
                }
            }
            Ok(worst)
        })
        .collect();
    Ok(per_probe?.into_iter().fold(0.0, f64::max))
}

/// `max |G(x,y) - G(x,y0) - G(x0,y) + G(x0,y0)|` over an `n x n` grid of
/// `domain`, with `base = (x0, y0)`.
pub fn separation_defect(g: &BivariateFunction, base: Vec2, domain: &Rect, grid_n: usize) -> Result<f64, DecomposeError> {
    separation_defect_at(g, base, &domain.grid(grid_n))
}

pub fn separation_defect_at(g: &BivariateFunction, base: Vec2, points: &[Vec2]) -> Result<f64, DecomposeError> {
    let g00 = g.eval_at(base)?;
    let vals: Result<Vec<f64>, CalculusError> = points
        .par_iter()
        .map(|&p| {
            let s = g.eval_at(p)? - g.eval_at([p[0], base[1]])? - g.eval_at([base[0], p[1]])? + g00;
            Ok(s.abs())
        })
        .collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

/// `sup |Delta_{l_1}^{delta_1} ... Delta_{l_n}^{delta_n} F|` over a grid of the
/// domain, with `l_i` the unit perpendicular to direction `i`. Zero is
/// necessary for `F` to be a ridge sum along `ds`.
///
/// For sample-backed `F` the grid is shrunk so every shifted point stays in
/// the domain.
pub fn representability_defect(
    f: &BivariateFunction,
    ds: &DirectionSet,
    deltas: &[f64],
    domain: &Rect,
    grid_n: usize,
) -> Result<f64, DecomposeError> {
    if deltas.len() != ds.len() {
        return Err(DecomposeError::DeltaCount {
            expected: ds.len(),
            got: deltas.len(),
        });
    }
    let perps: Vec<Vec2> = ds.directions().iter().map(|&d| perpendicular_unit(d)).collect();
    let mut g = f.clone();
    for (l, &delta) in perps.iter().zip(deltas) {
        g = crate::calculus::increment(&g, *l, delta);
    }
    let rect = if f.is_global() {
        *domain
    } else {
        let extent = |k: usize| {
            perps.iter().zip(deltas).fold((0.0, 0.0), |(lo, hi): (f64, f64), (l, &d)| {
                let s = d * l[k];
                (lo + s.min(0.0), hi + s.max(0.0))
            })
        };
        let (xl, xh) = extent(0);
        let (yl, yh) = extent(1);
        Rect::new(domain.x0 - xl, domain.x1 - xh, domain.y0 - yl, domain.y1 - yh)
            .map_err(|_| DecomposeError::DomainTooSmall)?
    };
    Ok(g.sup_over(&rect.grid(grid_n))?)
}

fn padding_for(f: &BivariateFunction) -> f64 {
    if f.is_global() {
        RANGE_PADDING
    } else {
        0.0
    }
}

fn sup_abs(f: &BivariateFunction, points: &[Vec2]) -> Result<f64, DecomposeError> {
    Ok(f.sup_over(points)?)
}

/// Samples `f` along `p0 + (t - t0) * w` for `t` on `grid`; `index` names
/// the direction in errors.
fn sample_line(
    f: &BivariateFunction,
    p0: Vec2,
    t0: f64,
    w: Vec2,
    grid: TGrid,
    index: usize,
    shift: f64,
) -> Result<SampledProfile, DecomposeError> {
    let point = |t: f64| [p0[0] + (t - t0) * w[0], p0[1] + (t - t0) * w[1]];
    for t in [grid.t_min, grid.t_max] {
        if !f.contains(point(t)) {
            let (lo, hi) = f.line_interval(p0, w).unwrap_or((0.0, 0.0));
            return Err(DecomposeError::RangeNotCovered {
                index,
                need_lo: grid.t_min,
                need_hi: grid.t_max,
                got_lo: t0 + lo.max(grid.t_min - t0),
                got_hi: t0 + hi.min(grid.t_max - t0),
            });
        }
    }
    Ok(SampledProfile::from_fn(grid.t_min, grid.t_max, grid.n, grid.base, |t| {
        Ok(f.eval_at(point(t))? - shift)
    })?)
}

/// Direct formulas for one or two directions.
///
/// `n = 1`: `f(t) = F(p(t))` along the trace line through the domain center.
/// `n = 2`: with `(u, v) = (d_1 . p, d_2 . p)` and `(u0, v0)` the image of the
/// center, `f_1(u) = F(u, v0) - F(c)/2` and `f_2(v) = F(u0, v) - F(c)/2`.
pub fn decompose_small_n(
    f: &BivariateFunction,
    ds: &DirectionSet,
    domain: &Rect,
    opts: &DecomposeOptions,
) -> Result<Decomposition, DecomposeError> {
    let n = ds.len();
    assert!(n == 1 || n == 2, "decompose_small_n handles one or two directions");
    let tol_rel = opts.stage_tol();
    let pad = padding_for(f);
    let check = domain.grid(opts.check_n);
    let fmax = sup_abs(f, &check)?;
    let tol = tol_rel * (1.0 + fmax);
    let c = domain.center();

    let (profiles, defect) = if n == 1 {
        let d = ds.get(0);
        let (lo, hi) = domain.image(d);
        let ext = extract_ridge_profile(
            f,
            d,
            TGrid::padded(lo, hi, pad, opts.grid_n),
            &WorkingRegion::from_rect(*domain),
            tol,
        )
        .map_err(|e| match e {
            DecomposeError::RangeNotCovered { need_lo, need_hi, got_lo, got_hi, .. } => {
                DecomposeError::RangeNotCovered {
                    index: 0,
                    need_lo,
                    need_hi,
                    got_lo,
                    got_hi,
                }
            }
            other => other,
        })?;
        (vec![ext.profile], ext.constancy_defect)
    } else {
        let m = Mat2::from_rows(ds.get(0).as_vec(), ds.get(1).as_vec());
        let m_inv = m.inverse()?;
        let (u0, v0) = (ds.get(0).argument(c), ds.get(1).argument(c));
        let g = f.mapped(m_inv);
        let region = WorkingRegion::mapped(*domain, m, m_inv);
        let half = 0.5 * f.eval_at(c)?;
        let w1 = [m_inv.0[0][0], m_inv.0[1][0]];
        let w2 = [m_inv.0[0][1], m_inv.0[1][1]];
        let (lo1, hi1) = domain.image(ds.get(0));
        let (lo2, hi2) = domain.image(ds.get(1));
        let g1 = TGrid::padded(lo1, hi1, pad, opts.grid_n);
        let g2 = TGrid::padded(lo2, hi2, pad, opts.grid_n);
        let f1 = sample_line(f, c, g1.base, w1, g1, 0, half)?;
        let f2 = sample_line(f, c, g2.base, w2, g2, 1, half)?;
        let defect = separation_defect_at(&g, [u0, v0], &region.points(opts.check_n))?;
        if defect > tol {
            return Err(DecomposeError::NotRepresentable {
                kind: DefectKind::Separation,
                stage: 0,
                defect,
                tolerance: tol,
            });
        }
        (vec![f1, f2], defect)
    };

    finish(f, ds, domain, opts, profiles, defect, None, Vec::new(), Vec::new())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    f: &BivariateFunction,
    ds: &DirectionSet,
    domain: &Rect,
    opts: &DecomposeOptions,
    profiles: Vec<SampledProfile>,
    separation_defect: f64,
    axis_pair: Option<(usize, usize)>,
    fd_steps: Vec<f64>,
    stages: Vec<StageReport>,
) -> Result<Decomposition, DecomposeError> {
    let mut dec = Decomposition {
        directions: ds.directions().to_vec(),
        metadata: DecompositionMetadata {
            grid_n: opts.grid_n,
            verify_n: opts.verify_n,
            check_n: opts.check_n,
            steps: profiles.iter().map(SampledProfile::step).collect(),
            axis_pair,
            fd_steps,
            stages,
        },
        profiles,
        domain: *domain,
        method: opts.method,
        interpolation: opts.interpolation,
        reconstruction_sup_error: 0.0,
        separation_defect,
        source_expression: f.expr().map(|e| e.to_string()),
    };
    dec.reconstruction_sup_error = dec.sup_error_against(f, opts.verify_n)?;
    Ok(dec)
}

/// Decomposes `f` over `domain` into smooth profiles along `ds`.
pub fn decompose(
    f: &BivariateFunction,
    ds: &DirectionSet,
    domain: &Rect,
    opts: &DecomposeOptions,
) -> Result<Decomposition, DecomposeError> {
    let n = ds.len();
    if n == 0 {
        return Err(DecomposeError::NoDirections);
    }
    if opts.grid_n < 5 {
        return Err(DecomposeError::GridTooSmall(opts.grid_n));
    }
    let needed = n.saturating_sub(2) as u32;
    if f.smoothness_hint() < needed {
        return Err(DecomposeError::InsufficientSmoothness {
            hint: f.smoothness_hint(),
            needed,
        });
    }
    if n <= 2 {
        return decompose_small_n(f, ds, domain, opts);
    }

    let mut np = normalize(ds, opts.axis_pair)?;
    for &j in &opts.flip_perpendiculars {
        np.flip_perpendicular(j);
    }
    let r = n - 2;
    let region = WorkingRegion::mapped(*domain, np.m, np.m_inv);
    let f_local = f.mapped(np.m_inv).with_scale(region.extent());
    let pad = padding_for(f);
    let tol_rel = opts.stage_tol();
    let work = region.points(opts.check_n);
    let base = region.center();

    // targets[j] = d^{r-j} F' / dl_{j+1} ... dl_r; targets[r] = F'.
    let mut targets = Vec::with_capacity(r + 1);
    let mut fd_steps = Vec::new();
    for j in 0..=r {
        let dirs = &np.perps[j..];
        targets.push(mixed_directional_derivative_with(&f_local, dirs, opts.method, opts.diff)?);
        if opts.method == Method::Numeric {
            fd_steps.push(crate::calculus::numeric_step(&f_local, dirs.len()));
        }
    }

    let g0 = &targets[0];
    let tol0 = tol_rel * (1.0 + sup_abs(g0, &work)?);

    let tgrid = |d: Direction| {
        let (lo, hi) = region.image(d);
        TGrid::padded(lo, hi, pad, opts.grid_n)
    };
    let (p, q) = np.axis_pair();
    let e1 = Direction::new(1.0, 0.0);
    let e2 = Direction::new(0.0, 1.0);
    let g00 = g0.eval_at(base)?;
    let mut state = StageState {
        stage: 0,
        target: g0.clone(),
        h1: sample_line(g0, base, base[0], [1.0, 0.0], tgrid(e1), p, 0.0)?,
        h2: sample_line(g0, base, base[1], [0.0, 1.0], tgrid(e2), q, g00)?,
        ridges: Vec::new(),
    };
    let sep = separation_defect_at(g0, base, &work)?;
    if sep > tol0 {
        return Err(DecomposeError::NotRepresentable {
            kind: DefectKind::Separation,
            stage: 0,
            defect: sep,
            tolerance: tol0,
        });
    }
    let mut stages = vec![StageReport {
        stage: 0,
        residual_sup: sep,
        constancy_defect: 0.0,
        tolerance: tol0,
    }];

    for j in 1..=r {
        let l = np.perps[j - 1];
        state.h1 = antiderivative(&state.h1, 1.0 / dot(l, e1.as_vec()))?;
        state.h2 = antiderivative(&state.h2, 1.0 / dot(l, e2.as_vec()))?;
        for (d, prof) in state.ridges.iter_mut() {
            *prof = antiderivative(prof, 1.0 / dot(d.as_vec(), l))?;
        }
        let target = &targets[j];
        let tol = tol_rel * (1.0 + sup_abs(target, &work)?);
        let residual = target.minus(&BivariateFunction::ridge_sum(state.sum(opts.interpolation)));
        let dj = np.dirs_normalized.get(j - 1);
        let ext = extract_ridge_profile(&residual, dj, tgrid(dj), &region, tol).map_err(|e| match e {
            DecomposeError::NotRepresentable { kind, defect, tolerance, .. } => DecomposeError::NotRepresentable {
                kind,
                stage: j,
                defect,
                tolerance,
            },
            DecomposeError::RangeNotCovered { need_lo, need_hi, got_lo, got_hi, .. } => {
                DecomposeError::RangeNotCovered {
                    index: np.perm[j - 1],
                    need_lo,
                    need_hi,
                    got_lo,
                    got_hi,
                }
            }
            other => other,
        })?;
        state.ridges.push((dj, ext.profile));
        state.stage = j;
        state.target = target.clone();

        let stage_sum = BivariateFunction::ridge_sum(state.sum(opts.interpolation));
        let residual_sup = sup_abs(&target.minus(&stage_sum), &work)?;
        stages.push(StageReport {
            stage: j,
            residual_sup,
            constancy_defect: ext.constancy_defect,
            tolerance: tol,
        });
        if residual_sup > tol {
            return Err(DecomposeError::NotRepresentable {
                kind: DefectKind::StageResidual,
                stage: j,
                defect: residual_sup,
                tolerance: tol,
            });
        }
    }

    // Ridge arguments are preserved by the coordinate map, so each profile
    // transfers to its original direction unchanged.
    let mut profiles: Vec<Option<SampledProfile>> = vec![None; n];
    for (k, (_, prof)) in state.ridges.into_iter().enumerate() {
        profiles[np.perm[k]] = Some(prof);
    }
    profiles[p] = Some(state.h1);
    profiles[q] = Some(state.h2);
    let profiles = profiles.into_iter().map(|p| p.expect("every direction assigned")).collect();

    finish(f, ds, domain, opts, profiles, sep, Some((p, q)), fd_steps, stages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_directions;

    fn dirs(v: &[(f64, f64)]) -> DirectionSet {
        let d: Vec<Direction> = v.iter().map(|&(a, b)| Direction::new(a, b)).collect();
        validate_directions(&d, 1e-12).unwrap()
    }

    fn square() -> Rect {
        Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap()
    }

    fn f(s: &str) -> BivariateFunction {
        BivariateFunction::parse(s).unwrap()
    }

    #[test]
    fn separation_examples() {
        let g = f("x^2 + sin(y)");
        assert!(separation_defect(&g, [0.0, 0.0], &square(), 41).unwrap() <= 1e-15);
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        // brute force: |xy - 0 - 0 + 0| peaks at the far corner
        assert_eq!(separation_defect(&f("x*y"), [0.0, 0.0], &unit, 11).unwrap(), 1.0);
        assert_eq!(separation_defect(&f("3"), [0.2, 0.1], &square(), 11).unwrap(), 0.0);
    }

    #[test]
    fn extract_cube_along_diagonal() {
        let region = WorkingRegion::from_rect(square());
        let grid = TGrid::padded(-2.0, 2.0, 0.0, 257);
        let ext = extract_ridge_profile(&f("(x+y)^3"), Direction::new(1.0, 1.0), grid, &region, 1e-10).unwrap();
        for (t, v) in ext.profile.nodes().zip(ext.profile.values()) {
            assert!((v - t * t * t).abs() <= 1e-12 * (1.0 + t.abs().powi(3)), "{t}: {v}");
        }
        let ext = extract_ridge_profile(&f("5"), Direction::new(2.0, -1.0), grid, &region, 1e-12).unwrap();
        assert!(ext.profile.values().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn extract_rejects_non_ridge() {
        let region = WorkingRegion::from_rect(square());
        let grid = TGrid::padded(-2.0, 2.0, 0.0, 65);
        let err = extract_ridge_profile(&f("x*y"), Direction::new(1.0, 1.0), grid, &region, 1e-8).unwrap_err();
        assert!(matches!(
            err,
            DecomposeError::NotRepresentable {
                kind: DefectKind::RidgeConstancy,
                ..
            }
        ));
    }

    #[test]
    fn zero_increment_annihilates_everything() {
        let ds = dirs(&[(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        let d = representability_defect(&f("exp(x*y)"), &ds, &[0.5, 0.0, 0.5], &square(), 21).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn small_n_constant() {
        let ds = dirs(&[(1.0, 1.0)]);
        let dec = decompose(&f("7"), &ds, &square(), &DecomposeOptions::new(Method::Symbolic, 65)).unwrap();
        assert!(dec.profiles[0].values().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn small_n_line_leaving_sampled_domain() {
        use crate::calculus::SampleGrid;
        // the dual line for x + y runs along (0,1) and covers only half of
        // the range [-2, 2]
        let grid = SampleGrid::from_fn(square(), 65, 65, |x, y| x + y * y);
        let g = BivariateFunction::from_grid(grid);
        let ds = dirs(&[(1.0, 0.0), (1.0, 1.0)]);
        let err = decompose(&g, &ds, &square(), &DecomposeOptions::new(Method::Numeric, 65)).unwrap_err();
        assert!(matches!(err, DecomposeError::RangeNotCovered { index: 1, .. }), "{err:?}");
    }

    #[test]
    fn smoothness_hint_is_enforced() {
        let ds = dirs(&[(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)]);
        let g = f("abs(x) + y");
        assert!(matches!(
            decompose(&g, &ds, &square(), &DecomposeOptions::new(Method::Symbolic, 65)),
            Err(DecomposeError::InsufficientSmoothness { hint: 0, needed: 2 })
        ));
    }

    #[test]
    fn reconstruct_outside_domain_errors() {
        let ds = dirs(&[(1.0, 0.0), (0.0, 1.0)]);
        let dec = decompose(&f("x + y^2"), &ds, &square(), &DecomposeOptions::new(Method::Symbolic, 129)).unwrap();
        assert!(reconstruct(&dec, 0.3, -0.2).is_ok());
        assert!(reconstruct(&dec, 1.5, 0.0).is_err());
    }
}
