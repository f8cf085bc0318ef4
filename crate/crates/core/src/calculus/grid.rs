use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{Rect, Vec2};

/// Smallest accepted sample grid per axis.
pub const MIN_GRID_NODES: usize = 33;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read samples: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed samples table: {0}")]
    Csv(#[from] csv::Error),
    #[error("expected header 'x,y,f', found '{0}'")]
    Header(String),
    #[error("line {line}: field '{field}' is not a finite number")]
    NonNumeric { line: u64, field: String },
    #[error("line {line}: expected 3 fields, found {found}")]
    FieldCount { line: u64, found: usize },
    #[error("duplicate sample at ({x}, {y})")]
    Duplicate { x: f64, y: f64 },
    #[error("grid is incomplete: missing sample at ({x}, {y})")]
    Missing { x: f64, y: f64 },
    #[error("{axis} spacing is not uniform (relative deviation {deviation:e})")]
    NonUniform { axis: char, deviation: f64 },
    #[error("grid of {nx}x{ny} nodes is below the {MIN_GRID_NODES}x{MIN_GRID_NODES} minimum")]
    TooSmall { nx: usize, ny: usize },
}

/// Complete uniform grid of samples with bilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major: `values[j * nx + i]` is the sample at `(xs[i], ys[j])`.
    values: Vec<f64>,
    rect: Rect,
}

fn check_uniform(axis: char, v: &[f64]) -> Result<f64, IngestError> {
    let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    let deviation = v
        .windows(2)
        .map(|w| ((w[1] - w[0]) - h).abs() / h)
        .fold(0.0, f64::max);
    if deviation > 1e-9 {
        return Err(IngestError::NonUniform { axis, deviation });
    }
    Ok(h)
}

impl SampleGrid {
    /// Samples `f` on an `nx x ny` grid over `rect`.
    pub fn from_fn<F>(rect: Rect, nx: usize, ny: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64,
    {
        let xs = crate::geometry::linspace(rect.x0, rect.x1, nx);
        let ys = crate::geometry::linspace(rect.y0, rect.y1, ny);
        let values = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).map(|(x, y)| f(x, y)).collect();
        SampleGrid { xs, ys, values, rect }
    }

    /// Assembles a grid from scattered `(x, y, f)` rows in any order.
    pub fn from_points(points: &[(f64, f64, f64)]) -> Result<Self, IngestError> {
        let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let mut ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        for v in [&mut xs, &mut ys] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let (nx, ny) = (xs.len(), ys.len());
        if nx < MIN_GRID_NODES || ny < MIN_GRID_NODES {
            return Err(IngestError::TooSmall { nx, ny });
        }
        check_uniform('x', &xs)?;
        check_uniform('y', &ys)?;
        let xi: HashMap<u64, usize> = xs.iter().enumerate().map(|(i, v)| (v.to_bits(), i)).collect();
        let yi: HashMap<u64, usize> = ys.iter().enumerate().map(|(i, v)| (v.to_bits(), i)).collect();
        let mut values = vec![f64::NAN; nx * ny];
        for &(x, y, f) in points {
            let k = yi[&y.to_bits()] * nx + xi[&x.to_bits()];
            if !values[k].is_nan() {
                return Err(IngestError::Duplicate { x, y });
            }
            values[k] = f;
        }
        if let Some(k) = values.iter().position(|v| v.is_nan()) {
            return Err(IngestError::Missing {
                x: xs[k % nx],
                y: ys[k / nx],
            });
        }
        let rect = Rect::new(xs[0], xs[nx - 1], ys[0], ys[ny - 1]).expect("sorted distinct nodes");
        Ok(SampleGrid { xs, ys, values, rect })
    }

    /// Reads a table with header `x,y,f`, one sample per line.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != ["x", "y", "f"] {
            return Err(IngestError::Header(header.join(",")));
        }
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 3 {
                return Err(IngestError::FieldCount { line, found: rec.len() });
            }
            let mut vals = [0.0; 3];
            for (slot, field) in vals.iter_mut().zip(rec.iter()) {
                *slot = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| IngestError::NonNumeric {
                        line,
                        field: field.to_string(),
                    })?;
            }
            points.push((vals[0], vals[1], vals[2]));
        }
        Self::from_points(&points)
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.xs.len(), self.ys.len())
    }

    pub fn spacing(&self) -> (f64, f64) {
        (
            self.rect.width() / (self.xs.len() - 1) as f64,
            self.rect.height() / (self.ys.len() - 1) as f64,
        )
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.xs.len() + i]
    }

    /// Cell index and fractional offset along one axis; exact nodes give a
    /// zero fraction.
    fn locate(nodes: &[f64], v: f64) -> (usize, f64) {
        let n = nodes.len();
        let h = (nodes[n - 1] - nodes[0]) / (n - 1) as f64;
        let u = ((v - nodes[0]) / h).clamp(0.0, (n - 1) as f64);
        let r = u.round() as usize;
        if nodes[r] == v {
            return if r == n - 1 { (n - 2, 1.0) } else { (r, 0.0) };
        }
        let i = (u.floor() as usize).min(n - 2);
        (i, ((v - nodes[i]) / (nodes[i + 1] - nodes[i])).clamp(0.0, 1.0))
    }

    /// Bilinear interpolation; `None` outside the grid rectangle.
    pub fn eval(&self, p: Vec2) -> Option<f64> {
        if !self.rect.contains(p) {
            return None;
        }
        let (i, fx) = Self::locate(&self.xs, p[0]);
        let (j, fy) = Self::locate(&self.ys, p[1]);
        if fx == 0.0 && fy == 0.0 {
            return Some(self.value(i, j));
        }
        let v00 = self.value(i, j);
        let v10 = self.value(i + 1, j);
        let v01 = self.value(i, j + 1);
        let v11 = self.value(i + 1, j + 1);
        Some((1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11))
    }

    /// Writes the `x,y,f` table read by [`SampleGrid::from_reader`].
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,f")?;
        for (j, &y) in self.ys.iter().enumerate() {
            for (i, &x) in self.xs.iter().enumerate() {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", x, y, self.value(i, j))?;
            }
        }
        Ok(())
    }
}

/// Reads a complete uniform sample grid from a file.
pub fn ingest_samples(path: &Path) -> Result<SampleGrid, IngestError> {
    let file = std::fs::File::open(path)?;
    SampleGrid::from_reader(std::io::BufReader::new(file))
}
