//! Carnot groups of step ≤ 3 in exponential coordinates.
//!
//! A group is described by its stratified Lie algebra: layer dimensions
//! `[m1..mr]` and the brackets of horizontal generators against the rest of
//! the basis. The group product is the Baker–Campbell–Hausdorff formula
//! truncated after the triple bracket,
//!
//! ```text
//! p · q = p + q + 1/2 [p,q] + 1/12 ([p,[p,q]] + [q,[q,p]])
//! ```
//!
//! which is exact for nilpotency step ≤ 3. The product polynomials, the
//! coefficient polynomials of the horizontal vector fields, and all their
//! partial derivatives are generated symbolically once per group, so nothing
//! is hand-transcribed per group.

use crate::error::{Error, Result};
use crate::poly::Poly;
use serde::{Deserialize, Serialize};

/// Group element in exponential coordinates, flattened in layer order.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point { coords }
    }
}

/// Euclidean norm of a point (all layers, unweighted).
pub fn euclidean_norm(p: &Point) -> f64 {
    p.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Bracket rule: `[basis_i, basis_j] = out`, flat 0-based indices, `out` a
/// full-length coefficient vector over the basis.
#[derive(Clone, Debug)]
pub struct BracketRule {
    pub i: usize,
    pub j: usize,
    pub out: Vec<f64>,
}

/// JSON form of a group spec. Indices are 1-based to match the `x1..xn`
/// naming of coordinates in field expressions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSpecJson {
    pub name: String,
    pub layer_dims: Vec<usize>,
    #[serde(default)]
    pub brackets: Vec<BracketJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BracketJson {
    pub i: usize,
    pub j: usize,
    pub out: Vec<f64>,
}

/// A validated Carnot group with its derived polynomial tables.
///
/// Everything is immutable after construction; all operations are pure, so
/// values can be shared freely across threads.
#[derive(Clone, Debug)]
pub struct CarnotGroup {
    name: String,
    layer_dims: Vec<usize>,
    layer_offsets: Vec<usize>,
    layer_of: Vec<usize>,
    dim: usize,
    horizontal_dim: usize,
    step: usize,
    /// bracket[a][b] = coefficient vector of [X_a, X_b]; exactly antisymmetric.
    bracket: Vec<Vec<Vec<f64>>>,
    /// Product polynomials in 2n variables: 0..n are the left factor,
    /// n..2n the right factor.
    product: Vec<Poly>,
    /// Coefficient polynomials a[l][k](x) of X_l = sum_k a_lk d/dx_k (n vars).
    coeff: Vec<Vec<Poly>>,
    /// coeff_dx[l][k][j] = d a_lk / d x_j.
    coeff_dx: Vec<Vec<Vec<Poly>>>,
    /// product_dx[c][a] = d(product_c)/d(left_a), 2n vars.
    product_dx: Vec<Vec<Poly>>,
    /// product_dxx[c][a][b] = d2(product_c)/d(left_a)d(left_b), 2n vars.
    product_dxx: Vec<Vec<Vec<Poly>>>,
    /// Per-layer exponents r!/i of the gauge kernel.
    gauge_exp: Vec<u32>,
}

fn factorial(r: usize) -> usize {
    (1..=r).product::<usize>().max(1)
}

impl CarnotGroup {
    // -- construction --------------------------------------------------------

    /// Abelian group on `R^n` (step 1).
    pub fn euclidean(n: usize) -> Self {
        Self::from_brackets(&format!("euclidean:{n}"), &[n], &[]).unwrap()
    }

    /// Heisenberg group H^n: layers (2n, 1), `[X_i, X_{n+i}] = X_{2n+1}`.
    pub fn heisenberg(n: usize) -> Self {
        let dim = 2 * n + 1;
        let mut rules = Vec::new();
        for i in 0..n {
            let mut out = vec![0.0; dim];
            out[2 * n] = 1.0;
            rules.push(BracketRule { i, j: n + i, out });
        }
        Self::from_brackets(&format!("heisenberg:{n}"), &[2 * n, 1], &rules).unwrap()
    }

    /// Engel group: layers (2, 1, 1), `[X1,X2] = X3`, `[X1,X3] = X4`.
    pub fn engel() -> Self {
        let rules = vec![
            BracketRule { i: 0, j: 1, out: vec![0.0, 0.0, 1.0, 0.0] },
            BracketRule { i: 0, j: 2, out: vec![0.0, 0.0, 0.0, 1.0] },
        ];
        Self::from_brackets("engel", &[2, 1, 1], &rules).unwrap()
    }

    /// Resolves built-in names: `euclidean:n`, `heisenberg:n`, `engel`.
    pub fn by_name(name: &str) -> Result<Self> {
        let parse_arg = |arg: &str, what: &str| -> Result<usize> {
            let v: usize = arg
                .parse()
                .map_err(|_| Error::InvalidGroup(format!("bad {what} dimension `{arg}`")))?;
            if v == 0 {
                return Err(Error::InvalidGroup(format!("{what} dimension must be >= 1")));
            }
            Ok(v)
        };
        if let Some(arg) = name.strip_prefix("euclidean:") {
            return Ok(Self::euclidean(parse_arg(arg, "euclidean")?));
        }
        if let Some(arg) = name.strip_prefix("heisenberg:") {
            return Ok(Self::heisenberg(parse_arg(arg, "heisenberg")?));
        }
        if name == "engel" {
            return Ok(Self::engel());
        }
        Err(Error::InvalidGroup(format!("unknown group `{name}`")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GroupSpecJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidGroup(format!("bad JSON: {e}")))?;
        Self::from_spec(&spec)
    }

    pub fn from_spec(spec: &GroupSpecJson) -> Result<Self> {
        let n: usize = spec.layer_dims.iter().sum();
        let mut rules = Vec::new();
        for b in &spec.brackets {
            if b.i == 0 || b.j == 0 || b.i > n || b.j > n {
                return Err(Error::InvalidGroup(format!(
                    "bracket index out of range: i={}, j={} (1..={n})",
                    b.i, b.j
                )));
            }
            rules.push(BracketRule { i: b.i - 1, j: b.j - 1, out: b.out.clone() });
        }
        Self::from_brackets(&spec.name, &spec.layer_dims, &rules)
    }

    pub fn to_spec(&self) -> GroupSpecJson {
        let mut brackets = Vec::new();
        for a in 0..self.horizontal_dim {
            for b in (a + 1)..self.dim {
                if self.bracket[a][b].iter().any(|&c| c != 0.0) {
                    brackets.push(BracketJson { i: a + 1, j: b + 1, out: self.bracket[a][b].clone() });
                }
            }
        }
        GroupSpecJson { name: self.name.clone(), layer_dims: self.layer_dims.clone(), brackets }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).unwrap()
    }

    /// Builds and validates a group from layer dimensions and bracket rules
    /// (flat 0-based indices; the first index of each rule must be a
    /// horizontal generator).
    pub fn from_brackets(name: &str, layer_dims: &[usize], rules: &[BracketRule]) -> Result<Self> {
        let step = layer_dims.len();
        if step == 0 {
            return Err(Error::InvalidGroup("at least one layer is required".into()));
        }
        if step > 3 {
            return Err(Error::InvalidGroup(format!("step {step} > 3 is not supported")));
        }
        if layer_dims.contains(&0) {
            return Err(Error::InvalidGroup("layer dimensions must be >= 1".into()));
        }
        let dim: usize = layer_dims.iter().sum();
        let horizontal_dim = layer_dims[0];
        let mut layer_offsets = Vec::with_capacity(step);
        let mut layer_of = vec![0usize; dim];
        let mut off = 0;
        for (li, &m) in layer_dims.iter().enumerate() {
            layer_offsets.push(off);
            for k in 0..m {
                layer_of[off + k] = li + 1;
            }
            off += m;
        }

        // Assemble the antisymmetric bracket table.
        let mut bracket = vec![vec![vec![0.0; dim]; dim]; dim];
        let mut seen = vec![vec![false; dim]; dim];
        for rule in rules {
            if rule.i >= dim || rule.j >= dim {
                return Err(Error::InvalidGroup(format!(
                    "bracket index out of range: [{}, {}]",
                    rule.i, rule.j
                )));
            }
            if rule.out.len() != dim {
                return Err(Error::InvalidGroup(format!(
                    "bracket output must have {dim} entries, got {}",
                    rule.out.len()
                )));
            }
            if layer_of[rule.i] != 1 {
                return Err(Error::InvalidGroup(format!(
                    "bracket rules must pair a horizontal generator first: index {} is in layer {}",
                    rule.i, layer_of[rule.i]
                )));
            }
            if rule.i == rule.j {
                if rule.out.iter().any(|&c| c != 0.0) {
                    return Err(Error::InvalidGroup("[X, X] must vanish".into()));
                }
                continue;
            }
            let target_layer = layer_of[rule.j] + 1;
            for (k, &c) in rule.out.iter().enumerate() {
                if c != 0.0 && layer_of[k] != target_layer {
                    return Err(Error::InvalidGroup(format!(
                        "bracket [{}, {}] must land in layer {target_layer}, \
                         found support at index {k} (layer {})",
                        rule.i, rule.j, layer_of[k]
                    )));
                }
            }
            if target_layer > step && rule.out.iter().any(|&c| c != 0.0) {
                return Err(Error::InvalidGroup(format!(
                    "bracket [{}, {}] exceeds the top layer and must vanish",
                    rule.i, rule.j
                )));
            }
            if seen[rule.i][rule.j] {
                return Err(Error::InvalidGroup(format!(
                    "duplicate bracket rule [{}, {}]",
                    rule.i, rule.j
                )));
            }
            if seen[rule.j][rule.i] {
                // Both orientations supplied: require exact antisymmetry.
                for k in 0..dim {
                    if bracket[rule.j][rule.i][k] != -rule.out[k] {
                        return Err(Error::InvalidGroup(format!(
                            "bracket rules [{}, {}] and [{}, {}] are not antisymmetric",
                            rule.i, rule.j, rule.j, rule.i
                        )));
                    }
                }
            }
            seen[rule.i][rule.j] = true;
            for k in 0..dim {
                bracket[rule.i][rule.j][k] = rule.out[k];
                bracket[rule.j][rule.i][k] = -rule.out[k];
            }
        }

        let group = CarnotGroup {
            name: name.to_string(),
            layer_dims: layer_dims.to_vec(),
            layer_offsets,
            layer_of,
            dim,
            horizontal_dim,
            step,
            bracket,
            product: Vec::new(),
            coeff: Vec::new(),
            coeff_dx: Vec::new(),
            product_dx: Vec::new(),
            product_dxx: Vec::new(),
            gauge_exp: (1..=step).map(|i| (factorial(step) / i) as u32).collect(),
        };
        group.check_jacobi()?;
        group.finish()
    }

    fn check_jacobi(&self) -> Result<()> {
        let n = self.dim;
        let scale = self
            .bracket
            .iter()
            .flatten()
            .flatten()
            .fold(0.0f64, |m, &c| m.max(c.abs()));
        let tol = 1e-12 * (1.0 + scale * scale);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut jac = vec![0.0; n];
                    self.bracket_into(a, &self.bracket[b][c], &mut jac);
                    let mut t = vec![0.0; n];
                    self.bracket_into(b, &self.bracket[c][a], &mut t);
                    for k in 0..n {
                        jac[k] += t[k];
                    }
                    t.iter_mut().for_each(|v| *v = 0.0);
                    self.bracket_into(c, &self.bracket[a][b], &mut t);
                    for k in 0..n {
                        jac[k] += t[k];
                    }
                    if jac.iter().any(|&v| v.abs() > tol) {
                        return Err(Error::InvalidGroup(format!(
                            "Jacobi identity fails on basis triple ({}, {}, {})",
                            a + 1,
                            b + 1,
                            c + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `out += [X_a, v]` for a coefficient vector `v`.
    fn bracket_into(&self, a: usize, v: &[f64], out: &mut [f64]) {
        for (d, &vd) in v.iter().enumerate() {
            if vd != 0.0 {
                for k in 0..self.dim {
                    out[k] += vd * self.bracket[a][d][k];
                }
            }
        }
    }

    /// Lie bracket of two vectors of polynomials over the same variable set.
    fn poly_bracket(&self, a: &[Poly], b: &[Poly], nvars: usize) -> Vec<Poly> {
        let n = self.dim;
        let mut out = vec![Poly::zero(nvars); n];
        for i in 0..n {
            for j in 0..n {
                let cij = &self.bracket[i][j];
                if cij.iter().all(|&c| c == 0.0) || a[i].is_zero() || b[j].is_zero() {
                    continue;
                }
                let prod = a[i].mul(&b[j]);
                for (k, &c) in cij.iter().enumerate() {
                    if c != 0.0 {
                        out[k] = out[k].add(&prod.scale(c));
                    }
                }
            }
        }
        out
    }

    fn finish(mut self) -> Result<Self> {
        let n = self.dim;
        let nv = 2 * n;
        let p: Vec<Poly> = (0..n).map(|i| Poly::var(nv, i)).collect();
        let q: Vec<Poly> = (0..n).map(|i| Poly::var(nv, n + i)).collect();

        // Truncated BCH: p + q + 1/2 [p,q] + 1/12 ([p,[p,q]] + [q,[q,p]]).
        let pq = self.poly_bracket(&p, &q, nv);
        let qp: Vec<Poly> = pq.iter().map(|t| t.scale(-1.0)).collect();
        let ppq = self.poly_bracket(&p, &pq, nv);
        let qqp = self.poly_bracket(&q, &qp, nv);
        let mut product = Vec::with_capacity(n);
        for c in 0..n {
            let poly = p[c]
                .add(&q[c])
                .add(&pq[c].scale(0.5))
                .add(&ppq[c].add(&qqp[c]).scale(1.0 / 12.0));
            product.push(poly);
        }

        // Weighted homogeneity: every monomial of (p.q)_c must carry the
        // layer weight of coordinate c.
        for (c, poly) in product.iter().enumerate() {
            let want = self.layer_of[c];
            for term in &poly.terms {
                let w: usize = term.vars.iter().map(|&v| self.layer_of[v as usize % n]).sum();
                if w != want {
                    return Err(Error::InvalidGroup(format!(
                        "product polynomial of coordinate {} is not weighted-homogeneous",
                        c + 1
                    )));
                }
            }
        }

        // Coefficient polynomials: a_lk(x) = d(x.q)_k/dq_l at q = 0.
        let mut coeff = Vec::with_capacity(self.horizontal_dim);
        for l in 0..self.horizontal_dim {
            let mut row = Vec::with_capacity(n);
            for k in 0..n {
                let d = product[k].derivative(n + l).without_vars(n, nv);
                row.push(d.rename_vars(n, &|v| v));
            }
            coeff.push(row);
        }
        for (l, row) in coeff.iter().enumerate() {
            for (k, a) in row.iter().enumerate().take(self.horizontal_dim) {
                let expected = Poly::constant(n, if l == k { 1.0 } else { 0.0 });
                if *a != expected {
                    return Err(Error::InvalidGroup(
                        "horizontal block of the coefficient matrix is not the identity".into(),
                    ));
                }
            }
        }
        let coeff_dx: Vec<Vec<Vec<Poly>>> = coeff
            .iter()
            .map(|row| {
                row.iter()
                    .map(|a| (0..n).map(|j| a.derivative(j)).collect())
                    .collect()
            })
            .collect();

        let product_dx: Vec<Vec<Poly>> = product
            .iter()
            .map(|pc| (0..n).map(|a| pc.derivative(a)).collect())
            .collect();
        let product_dxx: Vec<Vec<Vec<Poly>>> = product_dx
            .iter()
            .map(|row| {
                row.iter()
                    .map(|pa| (0..n).map(|b| pa.derivative(b)).collect())
                    .collect()
            })
            .collect();

        self.product = product;
        self.coeff = coeff;
        self.coeff_dx = coeff_dx;
        self.product_dx = product_dx;
        self.product_dxx = product_dxx;
        Ok(self)
    }

    // -- accessors ------------------------------------------------------------

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Topological dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Horizontal dimension m.
    pub fn horizontal_dim(&self) -> usize {
        self.horizontal_dim
    }

    /// Nilpotency step r.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Layer number (1-based) of flat coordinate `k`.
    pub fn layer_of(&self, k: usize) -> usize {
        self.layer_of[k]
    }

    pub fn identity(&self) -> Point {
        Point::new(vec![0.0; self.dim])
    }

    pub(crate) fn coeff_polys(&self) -> &[Vec<Poly>] {
        &self.coeff
    }

    pub(crate) fn coeff_dx_polys(&self) -> &[Vec<Vec<Poly>>] {
        &self.coeff_dx
    }

    pub(crate) fn product_polys(&self) -> &[Poly] {
        &self.product
    }

    pub(crate) fn product_dx_polys(&self) -> &[Vec<Poly>] {
        &self.product_dx
    }

    pub(crate) fn product_dxx_polys(&self) -> &[Vec<Vec<Poly>>] {
        &self.product_dxx
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: p.dim() });
        }
        Ok(())
    }

    // -- operations -----------------------------------------------------------

    /// Group product `p . q` by exact polynomial evaluation.
    pub fn multiply(&self, p: &Point, q: &Point) -> Result<Point> {
        self.check_point(p)?;
        self.check_point(q)?;
        let mut xy = Vec::with_capacity(2 * self.dim);
        xy.extend_from_slice(&p.coords);
        xy.extend_from_slice(&q.coords);
        let mut out = vec![0.0; self.dim];
        self.product_eval(&xy, &mut out);
        Ok(Point::new(out))
    }

    /// Low-level product evaluation: `xy` holds both factors concatenated.
    pub fn product_eval(&self, xy: &[f64], out: &mut [f64]) {
        for (c, poly) in self.product.iter().enumerate() {
            out[c] = poly.eval(xy);
        }
    }

    /// Inverse: coordinate negation in exponential coordinates.
    pub fn inverse(&self, p: &Point) -> Result<Point> {
        self.check_point(p)?;
        Ok(Point::new(p.coords.iter().map(|&c| -c).collect()))
    }

    /// Non-isotropic dilation: layer i scaled by `lambda^i`.
    pub fn dilate(&self, lambda: f64, p: &Point) -> Result<Point> {
        if lambda <= 0.0 || lambda.is_nan() {
            return Err(Error::InvalidInput(format!("dilation factor must be > 0, got {lambda}")));
        }
        self.check_point(p)?;
        let mut out = p.coords.clone();
        for k in 0..self.dim {
            out[k] *= lambda.powi(self.layer_of[k] as i32);
        }
        Ok(Point::new(out))
    }

    /// Smooth gauge kernel `N(p)^(2 r!)`: a polynomial in the coordinates.
    pub fn gauge_kernel(&self, coords: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (li, &e) in self.gauge_exp.iter().enumerate() {
            let lo = self.layer_offsets[li];
            let hi = lo + self.layer_dims[li];
            let s: f64 = coords[lo..hi].iter().map(|c| c * c).sum();
            acc += s.powi(e as i32);
        }
        acc
    }

    /// Homogeneous gauge pseudo-norm `N(p)`.
    pub fn gauge_norm(&self, p: &Point) -> Result<f64> {
        self.check_point(p)?;
        let two_r_fact = 2.0 * factorial(self.step) as f64;
        Ok(self.gauge_kernel(&p.coords).powf(1.0 / two_r_fact))
    }

    /// Gauge pseudo-distance `d(p, q) = N(p^-1 . q)`.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        let inv = self.inverse(p)?;
        let rel = self.multiply(&inv, q)?;
        self.gauge_norm(&rel)
    }

    /// Convolution kernel `d(x^-1, y^-1)^(2 r!) = N(x . y^-1)^(2 r!)` on raw
    /// coordinate slices; `scratch` must have length `2n`.
    pub fn kernel_between(&self, x: &[f64], y: &[f64], scratch: &mut [f64], z: &mut [f64]) -> f64 {
        let n = self.dim;
        scratch[..n].copy_from_slice(x);
        for k in 0..n {
            scratch[n + k] = -y[k];
        }
        self.product_eval(scratch, z);
        self.gauge_kernel(z)
    }

    /// Exponent `2 r!` of the gauge kernel.
    pub fn kernel_power(&self) -> u32 {
        2 * factorial(self.step) as u32
    }

    /// Gradient of the gauge kernel at `z` (closed form).
    pub fn gauge_kernel_grad(&self, z: &[f64], out: &mut [f64]) {
        for (li, &e) in self.gauge_exp.iter().enumerate() {
            let lo = self.layer_offsets[li];
            let hi = lo + self.layer_dims[li];
            let s: f64 = z[lo..hi].iter().map(|c| c * c).sum();
            let e = e as i32;
            let spow = if e >= 2 { s.powi(e - 1) } else { 1.0 };
            for k in lo..hi {
                out[k] = (e as f64) * spow * 2.0 * z[k];
            }
        }
    }

    /// Hessian of the gauge kernel at `z` (closed form, layer-block diagonal).
    pub fn gauge_kernel_hess(&self, z: &[f64], out: &mut [Vec<f64>]) {
        for row in out.iter_mut() {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
        for (li, &e) in self.gauge_exp.iter().enumerate() {
            let lo = self.layer_offsets[li];
            let hi = lo + self.layer_dims[li];
            let s: f64 = z[lo..hi].iter().map(|c| c * c).sum();
            let e = e as i32;
            let s1 = if e >= 2 { s.powi(e - 1) } else { 1.0 };
            let s2 = if e >= 3 {
                s.powi(e - 2)
            } else if e == 2 {
                1.0
            } else {
                0.0
            };
            let ef = e as f64;
            for a in lo..hi {
                for b in lo..hi {
                    let mut v = if e >= 2 { ef * (ef - 1.0) * s2 * 4.0 * z[a] * z[b] } else { 0.0 };
                    if a == b {
                        v += ef * s1 * 2.0;
                    }
                    out[a][b] += v;
                }
            }
        }
    }
}
