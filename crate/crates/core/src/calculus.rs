//! Left-invariant horizontal vector fields and horizontal jets.
//!
//! The horizontal frame is `X_l = d/dx_l + sum a_lk(x) d/dx_k` over the
//! vertical coordinates, with coefficient polynomials generated from the
//! group product (the differential of left translation at the identity).
//! Horizontal gradients and Hessians are pushed from Euclidean jets through
//! the frozen-coefficient algebra
//!
//! ```text
//! (grad_h u)_l  = sum_k a_lk du/dx_k
//! (hess_h u)_ij = sym( sum_kl a_ik a_jl d2u/dx_k dx_l
//!                      + sum_kl a_ik (da_jl/dx_k) du/dx_l )
//! ```
//!
//! Euclidean jets come from three sources: exact symbolic differentiation of
//! an expression, centered finite differences on a grid field, or caller-
//! supplied arrays. A second, independent route applies the vector fields by
//! symbolic composition; the two routes agree to rounding and cross-check
//! each other in the tests.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::GridField;
use crate::group::{CarnotGroup, Point};
use nalgebra::{DMatrix, DVector};

/// Value, horizontal gradient, and symmetrized horizontal Hessian at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalJet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl HorizontalJet {
    /// Builds a jet, enforcing exact symmetry of the Hessian.
    pub fn new(value: f64, gradient: DVector<f64>, hessian: DMatrix<f64>) -> Result<Self> {
        let m = gradient.len();
        if hessian.nrows() != m || hessian.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, got: hessian.nrows() });
        }
        let sym = symmetrized(&hessian);
        Ok(HorizontalJet { value, gradient, hessian: sym })
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }
}

fn symmetrized(h: &DMatrix<f64>) -> DMatrix<f64> {
    let m = h.nrows();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        out[(i, i)] = h[(i, i)];
        for j in (i + 1)..m {
            let v = 0.5 * (h[(i, j)] + h[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Coordinate coefficients of the horizontal frame at a point: row `l` holds
/// the coefficients of `X_l`. The leading `m x m` block is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix {
    pub a: DMatrix<f64>,
}

/// Evaluates the coefficient matrix `a_lk(x)` (m rows, n columns).
pub fn coefficient_matrix(group: &CarnotGroup, x: &Point) -> Result<CoefficientMatrix> {
    if x.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: x.dim() });
    }
    let m = group.horizontal_dim();
    let n = group.dim();
    let mut a = DMatrix::zeros(m, n);
    for (l, row) in group.coeff_polys().iter().enumerate() {
        for (k, poly) in row.iter().enumerate() {
            a[(l, k)] = poly.eval(&x.coords);
        }
    }
    Ok(CoefficientMatrix { a })
}

/// Pushes a Euclidean jet at `x` to the horizontal jet at `x`.
///
/// `ehess` must be symmetric (a small tolerance absorbs round-off, after
/// which it is symmetrized exactly).
pub fn horizontal_jet_from_euclidean(
    group: &CarnotGroup,
    x: &Point,
    value: f64,
    egrad: &[f64],
    ehess: &DMatrix<f64>,
) -> Result<HorizontalJet> {
    let n = group.dim();
    let m = group.horizontal_dim();
    if x.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.dim() });
    }
    if egrad.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: egrad.len() });
    }
    if ehess.nrows() != n || ehess.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: ehess.nrows() });
    }
    let scale = ehess.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (ehess[(i, j)] - ehess[(j, i)]).abs() > 1e-9 * (1.0 + scale) {
                return Err(Error::InvalidInput(format!(
                    "Euclidean Hessian is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let ehess = symmetrized(ehess);

    let coeff = group.coeff_polys();
    let coeff_dx = group.coeff_dx_polys();
    let mut a = vec![vec![0.0; n]; m];
    for l in 0..m {
        for k in 0..n {
            a[l][k] = coeff[l][k].eval(&x.coords);
        }
    }

    let mut gradient = DVector::zeros(m);
    for l in 0..m {
        gradient[l] = (0..n).map(|k| a[l][k] * egrad[k]).sum();
    }

    let mut hessian = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for k in 0..n {
                let aik = a[i][k];
                if aik == 0.0 {
                    continue;
                }
                for l in 0..n {
                    acc += aik * a[j][l] * ehess[(k, l)];
                }
                for l in 0..n {
                    let d = &coeff_dx[j][l][k];
                    if !d.is_zero() {
                        acc += aik * d.eval(&x.coords) * egrad[l];
                    }
                }
            }
            hessian[(i, j)] = acc;
        }
    }
    HorizontalJet::new(value, gradient, DMatrix::from(hessian))
}

/// Exact Euclidean jet of an expression: value, gradient, and symmetric
/// Hessian from symbolic differentiation (upper triangle mirrored so the
/// result is symmetric bit-for-bit).
pub fn symbolic_euclidean_jet(
    e: &Expr,
    n: usize,
    x: &[f64],
) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
    e.check_dimension(n)?;
    let value = e.evaluate(x)?;
    let mut grad = vec![0.0; n];
    let mut firsts = Vec::with_capacity(n);
    for k in 0..n {
        let d = e.differentiate(k)?;
        grad[k] = d.evaluate(x)?;
        firsts.push(d);
    }
    let mut hess = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in k..n {
            let v = firsts[k].differentiate(l)?.evaluate(x)?;
            hess[(k, l)] = v;
            hess[(l, k)] = v;
        }
    }
    Ok((value, grad, hess))
}

/// Horizontal jet of a smooth expression via the Euclidean-jet algebra.
pub fn horizontal_jet_from_expr(
    group: &CarnotGroup,
    e: &Expr,
    x: &Point,
) -> Result<HorizontalJet> {
    let (value, grad, hess) = symbolic_euclidean_jet(e, group.dim(), &x.coords)?;
    horizontal_jet_from_euclidean(group, x, value, &grad, &hess)
}

/// Pre-differentiated expression jet, for evaluating exact Euclidean jets at
/// many points without re-deriving the expression each time.
pub struct JetEvaluator {
    n: usize,
    value: Expr,
    firsts: Vec<Expr>,
    /// Upper triangle, row-major by (k, l >= k).
    seconds: Vec<Expr>,
}

impl JetEvaluator {
    pub fn new(e: &Expr, n: usize) -> Result<Self> {
        e.check_dimension(n)?;
        let mut firsts = Vec::with_capacity(n);
        for k in 0..n {
            firsts.push(e.differentiate(k)?);
        }
        let mut seconds = Vec::with_capacity(n * (n + 1) / 2);
        for k in 0..n {
            for l in k..n {
                seconds.push(firsts[k].differentiate(l)?);
            }
        }
        Ok(JetEvaluator { n, value: e.clone(), firsts, seconds })
    }

    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        let value = self.value.evaluate(x)?;
        let mut grad = vec![0.0; self.n];
        for (k, d) in self.firsts.iter().enumerate() {
            grad[k] = d.evaluate(x)?;
        }
        let mut hess = DMatrix::zeros(self.n, self.n);
        let mut idx = 0;
        for k in 0..self.n {
            for l in k..self.n {
                let v = self.seconds[idx].evaluate(x)?;
                hess[(k, l)] = v;
                hess[(l, k)] = v;
                idx += 1;
            }
        }
        Ok((value, grad, hess))
    }

    /// Horizontal jet at a point, through the frozen-coefficient algebra.
    pub fn horizontal_jet(&self, group: &CarnotGroup, x: &Point) -> Result<HorizontalJet> {
        let (value, grad, hess) = self.eval(&x.coords)?;
        horizontal_jet_from_euclidean(group, x, value, &grad, &hess)
    }
}

/// Applies `X_l` to an expression symbolically: `X_l f = sum_k a_lk df/dx_k`
/// with the coefficient polynomials converted to expression trees.
pub fn apply_horizontal_field(group: &CarnotGroup, l: usize, e: &Expr) -> Result<Expr> {
    let n = group.dim();
    let mut acc: Option<Expr> = None;
    for k in 0..n {
        let poly = &group.coeff_polys()[l][k];
        if poly.is_zero() {
            continue;
        }
        let d = e.differentiate(k)?;
        if matches!(d, Expr::Num(c) if c == 0.0) {
            continue;
        }
        let term = Expr::Mul(Box::new(poly.to_expr()), Box::new(d));
        acc = Some(match acc {
            None => term,
            Some(a) => Expr::Add(Box::new(a), Box::new(term)),
        });
    }
    Ok(acc.unwrap_or(Expr::Num(0.0)))
}

/// Composes a field with left translation: the expression of `x -> f(a . x)`,
/// with the group product specialized at the fixed left factor `a`.
pub fn left_translate_expr(group: &CarnotGroup, a: &Point, e: &Expr) -> Result<Expr> {
    let n = group.dim();
    if a.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.dim() });
    }
    e.check_dimension(n)?;
    let subs: Vec<Expr> = group
        .product_polys()
        .iter()
        .map(|poly| poly.eval_prefix(&a.coords).to_expr())
        .collect();
    Ok(e.substitute(&subs))
}

/// Independent route to the horizontal jet: applies the vector fields by
/// symbolic composition, `X_i (X_j f)`, then symmetrizes. Cross-checks the
/// frozen-coefficient algebra of [`horizontal_jet_from_euclidean`].
pub fn horizontal_jet_by_composition(
    group: &CarnotGroup,
    e: &Expr,
    x: &Point,
) -> Result<HorizontalJet> {
    if x.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: x.dim() });
    }
    let m = group.horizontal_dim();
    let value = e.evaluate(&x.coords)?;
    let mut gradient = DVector::zeros(m);
    let mut firsts = Vec::with_capacity(m);
    for l in 0..m {
        let xl = apply_horizontal_field(group, l, e)?;
        gradient[l] = xl.evaluate(&x.coords)?;
        firsts.push(xl);
    }
    let mut hessian = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let xij = apply_horizontal_field(group, i, &firsts[j])?;
            hessian[(i, j)] = xij.evaluate(&x.coords)?;
        }
    }
    HorizontalJet::new(value, gradient, hessian)
}

/// Centered second-order Euclidean jet from grid samples with stencil step
/// `h_steps` nodes per axis. The node must have an `h_steps` margin.
pub fn discrete_euclidean_jet(
    u: &GridField,
    node: usize,
    h_steps: usize,
) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
    if h_steps == 0 {
        return Err(Error::InvalidInput("h_steps must be >= 1".into()));
    }
    let dom = &u.domain;
    let n = dom.dim();
    let mut multi = vec![0usize; n];
    dom.multi_index(node, &mut multi);
    for axis in 0..n {
        if multi[axis] < h_steps || multi[axis] + h_steps >= dom.nodes[axis] {
            return Err(Error::Boundary(format!(
                "node {node} violates the {h_steps}-node stencil margin on axis {}",
                axis + 1
            )));
        }
    }
    let at = |offsets: &[(usize, isize)]| -> f64 {
        let mut m = multi.clone();
        for &(axis, d) in offsets {
            m[axis] = (m[axis] as isize + d) as usize;
        }
        u.values[dom.flat_index(&m)]
    };
    let s = h_steps as isize;
    let value = u.values[node];
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    for k in 0..n {
        let hk = dom.spacing(k) * h_steps as f64;
        let up = at(&[(k, s)]);
        let dn = at(&[(k, -s)]);
        grad[k] = (up - dn) / (2.0 * hk);
        hess[(k, k)] = (up - 2.0 * value + dn) / (hk * hk);
        for l in (k + 1)..n {
            let hl = dom.spacing(l) * h_steps as f64;
            let v = (at(&[(k, s), (l, s)]) - at(&[(k, s), (l, -s)]) - at(&[(k, -s), (l, s)])
                + at(&[(k, -s), (l, -s)]))
                / (4.0 * hk * hl);
            hess[(k, l)] = v;
            hess[(l, k)] = v;
        }
    }
    Ok((value, grad, hess))
}

/// Horizontal jet from grid samples: centered Euclidean differences pushed
/// through the frozen-coefficient algebra. O(h^2)-consistent on C^3 fields.
pub fn discrete_horizontal_jet(
    group: &CarnotGroup,
    u: &GridField,
    node: usize,
    h_steps: usize,
) -> Result<HorizontalJet> {
    if u.domain.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: u.domain.dim() });
    }
    let (value, grad, hess) = discrete_euclidean_jet(u, node, h_steps)?;
    let x = Point::new(u.domain.coords(node));
    horizontal_jet_from_euclidean(group, &x, value, &grad, &hess)
}
