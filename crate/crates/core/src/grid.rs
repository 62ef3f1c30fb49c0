//! Rectangular lattices of exponential coordinates and sampled scalar fields.
//!
//! Nodes are ordered row-major by coordinate index (first coordinate slowest),
//! so flat indices are deterministic. The boundary mask marks exactly the
//! nodes on the box faces.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::group::{CarnotGroup, Point};
use serde::{Deserialize, Serialize};

/// Axis-aligned box with a fixed node count per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    pub intervals: Vec<(f64, f64)>,
    pub nodes: Vec<usize>,
}

impl GridDomain {
    pub fn new(intervals: Vec<(f64, f64)>, nodes: Vec<usize>) -> Result<Self> {
        if intervals.len() != nodes.len() {
            return Err(Error::InvalidInput(format!(
                "{} intervals but {} node counts",
                intervals.len(),
                nodes.len()
            )));
        }
        if intervals.is_empty() {
            return Err(Error::InvalidInput("domain must have at least one axis".into()));
        }
        for (k, &(a, b)) in intervals.iter().enumerate() {
            if b <= a || a.is_nan() || b.is_nan() {
                return Err(Error::InvalidInput(format!(
                    "axis {} interval [{a}, {b}] is empty",
                    k + 1
                )));
            }
        }
        if nodes.iter().any(|&c| c < 3) {
            return Err(Error::InvalidInput("every axis needs at least 3 nodes".into()));
        }
        Ok(GridDomain { intervals, nodes })
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let (a, b) = self.intervals[axis];
        (b - a) / (self.nodes[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).fold(0.0, f64::max)
    }

    /// Multi-index of a flat node index (row-major, axis 0 slowest).
    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for axis in (0..self.dim()).rev() {
            out[axis] = flat % self.nodes[axis];
            flat /= self.nodes[axis];
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut flat = 0;
        for axis in 0..self.dim() {
            flat = flat * self.nodes[axis] + multi[axis];
        }
        flat
    }

    pub fn axis_coord(&self, axis: usize, idx: usize) -> f64 {
        let (a, b) = self.intervals[axis];
        if idx == self.nodes[axis] - 1 {
            b
        } else {
            a + self.spacing(axis) * idx as f64
        }
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut multi = vec![0usize; self.dim()];
        self.multi_index(flat, &mut multi);
        multi.iter().enumerate().map(|(axis, &i)| self.axis_coord(axis, i)).collect()
    }

    pub fn is_boundary_multi(&self, multi: &[usize]) -> bool {
        multi
            .iter()
            .zip(&self.nodes)
            .any(|(&i, &c)| i == 0 || i == c - 1)
    }
}

/// Scalar samples on a [`GridDomain`] plus the boundary-face mask.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub domain: GridDomain,
    pub values: Vec<f64>,
    pub boundary: Vec<bool>,
}

impl GridField {
    pub fn new(domain: GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} samples but the grid has {} nodes",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite sample {} at node {i}",
                values[i]
            )));
        }
        let boundary = boundary_mask(&domain);
        Ok(GridField { domain, values, boundary })
    }

    pub fn constant(domain: GridDomain, c: f64) -> Result<Self> {
        let len = domain.len();
        Self::new(domain, vec![c; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Multilinear interpolation at an off-node coordinate. Coordinates must
    /// lie inside the box (a tiny tolerance absorbs round-off at the faces).
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        let dom = &self.domain;
        let n = dom.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0f64; n];
        for axis in 0..n {
            let (a, b) = dom.intervals[axis];
            let h = dom.spacing(axis);
            let tol = 1e-9 * (1.0 + h);
            if x[axis] < a - tol || x[axis] > b + tol {
                return Err(Error::Boundary(format!(
                    "coordinate {} outside [{a}, {b}] on axis {}",
                    x[axis],
                    axis + 1
                )));
            }
            let t = ((x[axis] - a) / h).clamp(0.0, (dom.nodes[axis] - 1) as f64);
            let i = (t.floor() as usize).min(dom.nodes[axis] - 2);
            base[axis] = i;
            frac[axis] = (t - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        let corners = 1usize << n;
        let mut multi = vec![0usize; n];
        for corner in 0..corners {
            let mut w = 1.0;
            for axis in 0..n {
                if corner >> axis & 1 == 1 {
                    multi[axis] = base[axis] + 1;
                    w *= frac[axis];
                } else {
                    multi[axis] = base[axis];
                    w *= 1.0 - frac[axis];
                }
            }
            if w != 0.0 {
                acc += w * self.values[dom.flat_index(&multi)];
            }
        }
        Ok(acc)
    }
}

fn boundary_mask(domain: &GridDomain) -> Vec<bool> {
    let mut mask = vec![false; domain.len()];
    let mut multi = vec![0usize; domain.dim()];
    for (flat, m) in mask.iter_mut().enumerate() {
        domain.multi_index(flat, &mut multi);
        *m = domain.is_boundary_multi(&multi);
    }
    mask
}

/// Samples an expression node-wise over a grid; evaluation errors are
/// reported with the offending node.
pub fn sample(e: &Expr, group: &CarnotGroup, domain: &GridDomain) -> Result<GridField> {
    if domain.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: domain.dim() });
    }
    e.check_dimension(group.dim())?;
    let mut values = Vec::with_capacity(domain.len());
    for flat in 0..domain.len() {
        let coords = domain.coords(flat);
        let v = e.evaluate(&coords).map_err(|err| {
            Error::Domain(format!("at node {flat} {coords:?}: {err}"))
        })?;
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite value {v} at node {flat} {coords:?}"
            )));
        }
        values.push(v);
    }
    GridField::new(domain.clone(), values)
}

/// Node coordinates as a [`Point`] of the ambient group.
pub fn node_point(domain: &GridDomain, flat: usize) -> Point {
    Point::new(domain.coords(flat))
}
