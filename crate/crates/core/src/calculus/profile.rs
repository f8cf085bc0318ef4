use serde::{Deserialize, Serialize};

use super::stencil::fd_weights;
use super::CalculusError;
use crate::geometry::{dot, Direction, Vec2};

/// How a profile is read between its grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    /// Four-point Lagrange interpolation on the nearest nodes.
    #[default]
    Cubic,
}

/// A univariate function sampled on the uniform grid `t_min + m*step`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    t_min: f64,
    t_max: f64,
    step: f64,
    values: Vec<f64>,
    base_point: f64,
}

impl SampledProfile {
    /// Builds a profile whose step is implied by the range and sample count.
    pub fn new(t_min: f64, t_max: f64, values: Vec<f64>, base_point: f64) -> Result<Self, CalculusError> {
        if values.len() < 2 {
            return Err(CalculusError::TooFewSamples(values.len()));
        }
        let step = (t_max - t_min) / (values.len() - 1) as f64;
        Self::with_step(t_min, t_max, step, values, base_point)
    }

    /// Builds a profile from explicit fields, checking that they agree.
    pub fn with_step(
        t_min: f64,
        t_max: f64,
        step: f64,
        values: Vec<f64>,
        base_point: f64,
    ) -> Result<Self, CalculusError> {
        let bad = |msg: String| Err(CalculusError::InvalidProfile(msg));
        if ![t_min, t_max, step, base_point].iter().all(|v| v.is_finite()) {
            return bad("non-finite profile field".into());
        }
        if !(t_max > t_min) || !(step > 0.0) {
            return bad(format!("need t_min < t_max and step > 0, got [{t_min}, {t_max}] step {step}"));
        }
        let expected = ((t_max - t_min) / step).round() as usize + 1;
        if values.len() != expected {
            return bad(format!(
                "range [{t_min}, {t_max}] with step {step} needs {expected} values, found {}",
                values.len()
            ));
        }
        let implied = (t_max - t_min) / (expected - 1) as f64;
        if (implied - step).abs() > 1e-9 * step {
            return bad(format!("step {step} does not divide the range uniformly"));
        }
        let slack = 1e-12 * (t_max - t_min);
        if base_point < t_min - slack || base_point > t_max + slack {
            return bad(format!("base point {base_point} outside [{t_min}, {t_max}]"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return bad(format!("value {i} is not finite"));
        }
        Ok(SampledProfile {
            t_min,
            t_max,
            step,
            values,
            base_point,
        })
    }

    /// Samples `f` at `n` uniform nodes on `[t_min, t_max]`.
    pub fn from_fn<F>(t_min: f64, t_max: f64, n: usize, base_point: f64, f: F) -> Result<Self, CalculusError>
    where
        F: Fn(f64) -> Result<f64, CalculusError> + Sync,
    {
        use rayon::prelude::*;
        let nodes = crate::geometry::linspace(t_min, t_max, n);
        let values = nodes.par_iter().map(|&t| f(t)).collect::<Result<Vec<_>, _>>()?;
        Self::new(t_min, t_max, values, base_point)
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.values.len() {
            self.t_max
        } else {
            self.t_min + i as f64 * self.step
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.node(i))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn slack(&self) -> f64 {
        1e-12 * (self.t_max - self.t_min + self.t_min.abs().max(self.t_max.abs()))
    }

    pub fn covers(&self, t: f64) -> bool {
        let s = self.slack();
        t >= self.t_min - s && t <= self.t_max + s
    }

    fn check_range(&self, t: f64) -> Result<(), CalculusError> {
        if self.covers(t) {
            Ok(())
        } else {
            Err(CalculusError::OutOfRange {
                t,
                t_min: self.t_min,
                t_max: self.t_max,
            })
        }
    }

    /// Index of the node equal to `t`, if any.
    fn exact_node(&self, t: f64) -> Option<usize> {
        let i = ((t - self.t_min) / self.step).round();
        if i < 0.0 || i as usize >= self.values.len() {
            return None;
        }
        let i = i as usize;
        (self.node(i) == t).then_some(i)
    }

    pub fn eval(&self, t: f64, interp: Interpolation) -> Result<f64, CalculusError> {
        self.check_range(t)?;
        if let Some(i) = self.exact_node(t) {
            return Ok(self.values[i]);
        }
        let n = self.values.len();
        let u = ((t - self.t_min) / self.step).clamp(0.0, (n - 1) as f64);
        match interp {
            Interpolation::Cubic if n >= 4 => {
                let i = (u.floor() as usize).min(n - 2);
                let j0 = i.saturating_sub(1).min(n - 4);
                let s = u - j0 as f64;
                let v = &self.values[j0..j0 + 4];
                let w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
                let w1 = s * (s - 2.0) * (s - 3.0) / 2.0;
                let w2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
                let w3 = s * (s - 1.0) * (s - 2.0) / 6.0;
                Ok(w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3])
            }
            _ => {
                let i = (u.floor() as usize).min(n - 2);
                let frac = u - i as f64;
                Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
            }
        }
    }

    /// `order`-th derivative at `t` from a local stencil of `order + 4`
    /// nearest nodes.
    pub fn derivative(&self, t: f64, order: usize) -> Result<f64, CalculusError> {
        self.check_range(t)?;
        let n = self.values.len();
        let width = (order + 4).min(n);
        if width <= order {
            return Err(CalculusError::TooFewSamples(n));
        }
        let u = ((t - self.t_min) / self.step).clamp(0.0, (n - 1) as f64);
        let start = (u.round() as isize - (width as isize) / 2).clamp(0, (n - width) as isize) as usize;
        let nodes: Vec<f64> = (start..start + width).map(|i| i as f64).collect();
        let w = fd_weights(u, &nodes, order);
        let d: f64 = w.iter().zip(&self.values[start..start + width]).map(|(w, v)| w * v).sum();
        Ok(d / self.step.powi(order as i32))
    }
}

/// Linear interpolation between the two bracketing samples; exact at nodes.
pub fn profile_eval(p: &SampledProfile, t: f64) -> Result<f64, CalculusError> {
    p.eval(t, Interpolation::Linear)
}

/// Integral of the quadratic through three consecutive samples (nodes at
/// -1, 0, 1 in step units) from `ua` to `ub`, in step units.
fn quadratic_integral(fm: f64, f0: f64, fp: f64, ua: f64, ub: f64) -> f64 {
    let q = |u: f64| f0 * u + (fp - fm) / 4.0 * u * u + (fp - 2.0 * f0 + fm) / 6.0 * u * u * u;
    q(ub) - q(ua)
}

/// Integral from node `k` to every node, in step units.
fn cumulative_from(f: &[f64], k: usize) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    forward(f, k, &mut out);
    let rev: Vec<f64> = f.iter().rev().copied().collect();
    let mut back = vec![0.0; n];
    forward(&rev, n - 1 - k, &mut back);
    for m in 0..k {
        out[m] = -back[n - 1 - m];
    }
    out
}

/// Composite Simpson from `k` forward; nodes at an odd distance get a
/// one-interval quadratic correction, so the order stays at four.
fn forward(f: &[f64], k: usize, out: &mut [f64]) {
    let last = f.len() - 1;
    for m in k + 1..=last {
        out[m] = if (m - k) % 2 == 0 {
            out[m - 2] + (f[m - 2] + 4.0 * f[m - 1] + f[m]) / 3.0
        } else if m < last {
            out[m - 1] + (5.0 * f[m - 1] + 8.0 * f[m] - f[m + 1]) / 12.0
        } else {
            out[m - 1] + (-f[m - 2] + 8.0 * f[m - 1] + 5.0 * f[m]) / 12.0
        };
    }
}

/// `H(t) = scale * integral of h from base_point to t`, on h's own grid.
pub fn antiderivative(h: &SampledProfile, scale: f64) -> Result<SampledProfile, CalculusError> {
    if scale == 0.0 || !scale.is_finite() {
        return Err(CalculusError::ZeroScale(scale));
    }
    let n = h.values.len();
    if n < 3 {
        return Err(CalculusError::TooFewSamples(n));
    }
    let u_base = (h.base_point - h.t_min) / h.step;
    let k = (u_base.round() as usize).min(n - 1);
    let mut cum = cumulative_from(&h.values, k);
    let offset = u_base - k as f64;
    if offset != 0.0 {
        let c = k.clamp(1, n - 2);
        let (fm, f0, fp) = (h.values[c - 1], h.values[c], h.values[c + 1]);
        let correction = quadratic_integral(fm, f0, fp, k as f64 - c as f64, u_base - c as f64);
        for v in &mut cum {
            *v -= correction;
        }
    }
    let values = cum.into_iter().map(|v| scale * h.step * v).collect();
    SampledProfile::with_step(h.t_min, h.t_max, h.step, values, h.base_point)
}

/// `sum_i profile_i(d_i . p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSum {
    pub terms: Vec<(Direction, SampledProfile)>,
    pub interpolation: Interpolation,
}

impl RidgeSum {
    pub fn new(terms: Vec<(Direction, SampledProfile)>, interpolation: Interpolation) -> Self {
        RidgeSum { terms, interpolation }
    }

    pub fn eval(&self, p: Vec2) -> Result<f64, CalculusError> {
        self.terms
            .iter()
            .map(|(d, prof)| prof.eval(d.argument(p), self.interpolation))
            .sum()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.terms.iter().all(|(d, prof)| prof.covers(d.argument(p)))
    }

    /// `{s : p + s*dir lies in every profile's slab}`.
    pub fn line_interval(&self, p: Vec2, dir: Vec2) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (d, prof) in &self.terms {
            let t0 = d.argument(p);
            let rate = dot(d.as_vec(), dir);
            let s = prof.slack();
            let (a, b) = (prof.t_min - s, prof.t_max + s);
            if rate == 0.0 {
                if t0 < a || t0 > b {
                    return None;
                }
            } else {
                let (s0, s1) = ((a - t0) / rate, (b - t0) / rate);
                lo = lo.max(s0.min(s1));
                hi = hi.min(s0.max(s1));
            }
        }
        (lo <= hi).then_some((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(f: impl Fn(f64) -> f64 + Sync, a: f64, b: f64, n: usize, base: f64) -> SampledProfile {
        SampledProfile::from_fn(a, b, n, base, |t| Ok(f(t))).unwrap()
    }

    #[test]
    fn linear_interpolation_examples() {
        let p = sampled(|t| t * t, -1.0, 1.0, 5, 0.0);
        assert_eq!(profile_eval(&p, 0.5).unwrap(), 0.25);
        assert_eq!(profile_eval(&p, 0.25).unwrap(), 0.125);
        assert!(matches!(profile_eval(&p, 2.0), Err(CalculusError::OutOfRange { .. })));
    }

    #[test]
    fn cubic_reproduces_cubics() {
        let f = |t: f64| t * t * t - 2.0 * t + 1.0;
        let p = sampled(f, -1.0, 1.0, 9, 0.0);
        for t in [-0.99, -0.3, 0.01, 0.77, 0.999] {
            assert!((p.eval(t, Interpolation::Cubic).unwrap() - f(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn antiderivative_of_linear_is_square() {
        let h = sampled(|t| 2.0 * t, -1.0, 1.0, 101, 0.0);
        let big_h = antiderivative(&h, 1.0).unwrap();
        assert_eq!(big_h.eval(0.0, Interpolation::Linear).unwrap(), 0.0);
        for (t, v) in big_h.nodes().zip(big_h.values()) {
            assert!((v - t * t).abs() < 1e-14, "{t}: {v}");
        }
    }

    #[test]
    fn antiderivative_of_zero() {
        let h = sampled(|_| 0.0, -1.0, 1.0, 11, 0.0);
        assert_eq!(antiderivative(&h, 2.0).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn antiderivative_zero_scale_rejected() {
        let h = sampled(|t| t, -1.0, 1.0, 11, 0.0);
        assert!(matches!(antiderivative(&h, 0.0), Err(CalculusError::ZeroScale(_))));
    }

    #[test]
    fn off_node_base_point() {
        // even node count: base 0 falls between nodes
        let h = sampled(|t| t.cos(), -2.0, 2.0, 1000, 0.0);
        let big_h = antiderivative(&h, 1.0).unwrap();
        let err = big_h
            .nodes()
            .zip(big_h.values())
            .map(|(t, v)| (v - t.sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn base_point_at_an_end() {
        let h = sampled(|t| t.exp(), 0.0, 1.0, 201, 1.0);
        let big_h = antiderivative(&h, 1.0).unwrap();
        let err = big_h
            .nodes()
            .zip(big_h.values())
            .map(|(t, v)| (v - (t.exp() - 1f64.exp())).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn derivative_of_samples() {
        let p = sampled(|t| t.sin(), -1.0, 1.0, 401, 0.0);
        for t in [-1.0, -0.5, 0.1234, 1.0] {
            assert!((p.derivative(t, 1).unwrap() - t.cos()).abs() < 1e-8);
            assert!((p.derivative(t, 2).unwrap() + t.sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn field_consistency_checked() {
        assert!(SampledProfile::with_step(0.0, 1.0, 0.25, vec![0.0; 4], 0.0).is_err());
        assert!(SampledProfile::with_step(0.0, 1.0, 0.25, vec![0.0; 5], 2.0).is_err());
        assert!(SampledProfile::with_step(0.0, 1.0, 0.25, vec![0.0; 5], 0.5).is_ok());
    }
}
