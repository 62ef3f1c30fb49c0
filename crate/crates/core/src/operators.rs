//! Fully nonlinear operators `F(r, p, M)`, sampled structure checks, and the
//! strict-supersolution perturbation.
//!
//! The perturbation adds `delta * alpha_k` with the profile
//! `alpha_k(x) = 1 - exp(-k (x1 + 1 - c1)) / k`, `c1 = inf x1`. Its
//! horizontal Hessian has a single negative eigenvalue, so for a matrix-
//! monotone operator the perturbed field picks up a strictly negative
//! residual margin. The steepness `k` is chosen adaptively: starting from 2
//! it doubles until the certified margin is positive.

use crate::calculus::{discrete_horizontal_jet, HorizontalJet};
use crate::error::{Error, Result};
use crate::expr::{Expr, Func};
use crate::grid::GridField;
use crate::group::CarnotGroup;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Structure properties an operator may declare.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFlags {
    #[serde(default)]
    pub degenerate_subelliptic: bool,
    #[serde(default)]
    pub uniformly_subelliptic: bool,
    #[serde(default)]
    pub nonincreasing: bool,
    #[serde(default)]
    pub decreasing: bool,
}

#[derive(Clone, Debug)]
enum OpKind {
    /// trace(M) - c r
    TraceMinus { c: f64 },
    /// <M p, p> - c r
    InfinitySublap { c: f64 },
    /// Pucci minimal operator - c r
    PucciMinus { lam: f64, lam_big: f64, c: f64 },
    /// Expression over variables (r, p_1..p_m, M_11..M_mm row-major).
    UserExpr { expr: Expr, m: usize },
}

/// A fully nonlinear operator with declared structure constants.
#[derive(Clone, Debug)]
pub struct NonlinearOperator {
    name: String,
    kind: OpKind,
    flags: StructureFlags,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    alpha3: Option<f64>,
}

impl NonlinearOperator {
    pub fn trace_minus(c: f64) -> Result<Self> {
        if c < 0.0 {
            return Err(Error::InvalidInput("coefficient c must be >= 0".into()));
        }
        Ok(NonlinearOperator {
            name: format!("trace_minus_u(c={c})"),
            kind: OpKind::TraceMinus { c },
            flags: StructureFlags {
                degenerate_subelliptic: true,
                uniformly_subelliptic: true,
                nonincreasing: true,
                decreasing: c > 0.0,
            },
            alpha1: Some(1.0),
            alpha2: Some(0.0),
            alpha3: (c > 0.0).then_some(c),
        })
    }

    pub fn infinity_sublap(c: f64) -> Result<Self> {
        if c < 0.0 {
            return Err(Error::InvalidInput("coefficient c must be >= 0".into()));
        }
        Ok(NonlinearOperator {
            name: format!("infinity_sublap(c={c})"),
            kind: OpKind::InfinitySublap { c },
            flags: StructureFlags {
                degenerate_subelliptic: true,
                uniformly_subelliptic: false,
                nonincreasing: true,
                decreasing: c > 0.0,
            },
            alpha1: None,
            alpha2: None,
            alpha3: (c > 0.0).then_some(c),
        })
    }

    pub fn pucci_minus(lam: f64, lam_big: f64, c: f64) -> Result<Self> {
        if lam <= 0.0 || lam.is_nan() || lam_big.is_nan() || lam_big < lam {
            return Err(Error::InvalidInput(format!(
                "Pucci parameters need 0 < lambda <= Lambda, got ({lam}, {lam_big})"
            )));
        }
        if c < 0.0 {
            return Err(Error::InvalidInput("coefficient c must be >= 0".into()));
        }
        Ok(NonlinearOperator {
            name: format!("pucci({lam},{lam_big},c={c})"),
            kind: OpKind::PucciMinus { lam, lam_big, c },
            flags: StructureFlags {
                degenerate_subelliptic: true,
                uniformly_subelliptic: true,
                nonincreasing: true,
                decreasing: c > 0.0,
            },
            alpha1: Some(lam),
            alpha2: Some(0.0),
            alpha3: (c > 0.0).then_some(c),
        })
    }

    /// User operator from an expression over `(r, p_1..p_m, M_11..M_mm)`
    /// flattened to `x1, x2.., x{1+m+m^2}`. Declared flags and constants are
    /// taken on trust here and validated by [`check_structure`].
    pub fn from_expr(
        expr: Expr,
        m: usize,
        flags: StructureFlags,
        alpha1: Option<f64>,
        alpha2: Option<f64>,
        alpha3: Option<f64>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("operator dimension must be >= 1".into()));
        }
        let nvars = 1 + m + m * m;
        expr.check_dimension(nvars)?;
        if flags.uniformly_subelliptic && (alpha1.is_none() || alpha2.is_none()) {
            return Err(Error::InvalidInput(
                "uniformly_subelliptic requires alpha1 and alpha2".into(),
            ));
        }
        if flags.decreasing && alpha3.is_none() {
            return Err(Error::InvalidInput("decreasing requires alpha3".into()));
        }
        Ok(NonlinearOperator {
            name: format!("expr(m={m})"),
            kind: OpKind::UserExpr { expr, m },
            flags,
            alpha1: if flags.uniformly_subelliptic { alpha1 } else { None },
            alpha2: if flags.uniformly_subelliptic { alpha2 } else { None },
            alpha3: if flags.decreasing { alpha3 } else { None },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> StructureFlags {
        self.flags
    }

    pub fn alpha1(&self) -> Option<f64> {
        self.alpha1
    }

    pub fn alpha2(&self) -> Option<f64> {
        self.alpha2
    }

    pub fn alpha3(&self) -> Option<f64> {
        self.alpha3
    }

    /// Fixed horizontal dimension, if the operator has one.
    pub fn fixed_dim(&self) -> Option<usize> {
        match &self.kind {
            OpKind::UserExpr { m, .. } => Some(*m),
            _ => None,
        }
    }

    pub fn evaluate(&self, r: f64, p: &DVector<f64>, m: &DMatrix<f64>) -> Result<f64> {
        let dim = p.len();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: m.nrows() });
        }
        if let Some(want) = self.fixed_dim() {
            if dim != want {
                return Err(Error::DimensionMismatch { expected: want, got: dim });
            }
        }
        Ok(match &self.kind {
            OpKind::TraceMinus { c } => m.trace() - c * r,
            OpKind::InfinitySublap { c } => (m * p).dot(p) - c * r,
            OpKind::PucciMinus { lam, lam_big, c } => {
                let eig = m.clone().symmetric_eigen();
                let mut acc = 0.0;
                for &e in eig.eigenvalues.iter() {
                    acc += if e > 0.0 { lam * e } else { lam_big * e };
                }
                acc - c * r
            }
            OpKind::UserExpr { expr, m: dim_m } => {
                let mut vars = Vec::with_capacity(1 + dim_m + dim_m * dim_m);
                vars.push(r);
                vars.extend(p.iter());
                for i in 0..*dim_m {
                    for j in 0..*dim_m {
                        vars.push(m[(i, j)]);
                    }
                }
                expr.evaluate(&vars)?
            }
        })
    }

    /// Modulus of continuity in the gradient slot over the data range
    /// `|p| <= p_bound`, `||M|| <= m_bound`. Exact for catalog operators,
    /// sampled for user expressions (see [`Self::modulus_is_estimated`]).
    pub fn modulus_p(&self, t: f64, p_bound: f64, m_bound: f64) -> f64 {
        match &self.kind {
            OpKind::TraceMinus { .. } | OpKind::PucciMinus { .. } => 0.0,
            OpKind::InfinitySublap { .. } => m_bound * (2.0 * p_bound * t + t * t),
            OpKind::UserExpr { .. } => self.estimated_p_slope(p_bound, m_bound) * t,
        }
    }

    pub fn modulus_is_estimated(&self) -> bool {
        matches!(self.kind, OpKind::UserExpr { .. })
    }

    fn estimated_p_slope(&self, p_bound: f64, m_bound: f64) -> f64 {
        let m = self.fixed_dim().unwrap_or(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0x0c11);
        let mut slope = 0.0f64;
        for _ in 0..64 {
            let r: f64 = rng.random_range(-1.0..1.0);
            let p = DVector::from_fn(m, |_, _| rng.random_range(-p_bound..=p_bound));
            let mut mat = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let v = rng.random_range(-m_bound..=m_bound);
                    mat[(i, j)] = v;
                    mat[(j, i)] = v;
                }
            }
            let mut w = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            let norm = w.norm();
            if norm == 0.0 {
                continue;
            }
            w /= norm;
            for t in [1e-3, 1e-2, 1e-1] {
                let t = t * (1.0 + p_bound);
                let base = self.evaluate(r, &p, &mat).unwrap_or(0.0);
                let moved = self.evaluate(r, &(&p + &w * t), &mat).unwrap_or(0.0);
                slope = slope.max((moved - base).abs() / t);
            }
        }
        slope
    }
}

/// Applies an operator to a horizontal jet: `F(u, grad_h u, hess_h u)`.
pub fn evaluate_operator(op: &NonlinearOperator, jet: &HorizontalJet) -> Result<f64> {
    op.evaluate(jet.value, &jet.gradient, &jet.hessian)
}

// ---------------------------------------------------------------------------
// Structure checks
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub r: f64,
    pub s: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub m_matrix: Vec<Vec<f64>>,
    pub n_matrix: Vec<Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub declared: bool,
    pub pass: bool,
    pub constants: Vec<(String, f64)>,
    pub constants_estimated: bool,
    pub max_violation: f64,
    pub counterexample: Option<Counterexample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub operator: String,
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    pub properties: Vec<PropertyCheck>,
    /// True when every declared property was confirmed by the sampling.
    pub declared_hold: bool,
}

struct SampleTuple {
    r: f64,
    s: f64,
    p: DVector<f64>,
    q: DVector<f64>,
    /// Base symmetric matrix.
    n: DMatrix<f64>,
    /// PSD bump; the larger matrix is `n + bump`.
    bump: DMatrix<f64>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn random_symmetric(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = rng.random_range(-scale..=scale);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn sample_tuples(m: usize, samples: usize, seed: u64) -> Vec<SampleTuple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples + 4);
    // Planted probes: the degenerate corners random draws are unlikely to hit.
    out.push(SampleTuple {
        r: 0.0,
        s: 0.0,
        p: DVector::zeros(m),
        q: DVector::zeros(m),
        n: DMatrix::zeros(m, m),
        bump: DMatrix::identity(m, m),
    });
    let mut e1 = DMatrix::zeros(m, m);
    e1[(0, 0)] = 1.0;
    out.push(SampleTuple {
        r: 1.0,
        s: 0.0,
        p: DVector::from_element(m, 1.0),
        q: DVector::zeros(m),
        n: DMatrix::zeros(m, m),
        bump: e1,
    });
    out.push(SampleTuple {
        r: 0.5,
        s: -0.5,
        p: DVector::zeros(m),
        q: DVector::zeros(m),
        n: -DMatrix::identity(m, m),
        bump: DMatrix::identity(m, m),
    });
    for _ in 0..samples {
        let a: f64 = rng.random_range(-2.0..2.0);
        let b: f64 = rng.random_range(-2.0..2.0);
        let (r, s) = if a >= b { (a, b) } else { (b, a) };
        let p = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
        let q = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
        let n = random_symmetric(&mut rng, m, 2.0);
        let qm = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        let bump = &qm * qm.transpose();
        out.push(SampleTuple { r, s, p, q, n, bump });
    }
    out
}

/// Samples the four structure properties of Definitions of subellipticity
/// and monotonicity; every FAIL carries a concrete witnessing tuple.
pub fn check_structure(
    op: &NonlinearOperator,
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<StructureReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be >= 1".into()));
    }
    if let Some(want) = op.fixed_dim() {
        if want != m {
            return Err(Error::DimensionMismatch { expected: want, got: m });
        }
    }
    let tuples = sample_tuples(m, samples, seed);
    let tol = |a: f64, b: f64| 1e-9 * (1.0 + a.abs() + b.abs());
    let mut properties = Vec::with_capacity(4);

    // degenerate subelliptic: F(r, p, M) <= F(r, p, N) whenever M <= N.
    {
        let mut worst = 0.0f64;
        let mut cx: Option<Counterexample> = None;
        for t in &tuples {
            let small = &t.n;
            let large = t.n.clone() + &t.bump;
            let lhs = op.evaluate(t.r, &t.p, small)?;
            let rhs = op.evaluate(t.r, &t.p, &large)?;
            let violation = lhs - rhs;
            if violation > worst {
                worst = violation;
                if violation > tol(lhs, rhs) {
                    cx = Some(Counterexample {
                        r: t.r,
                        s: t.r,
                        p: t.p.iter().cloned().collect(),
                        q: t.p.iter().cloned().collect(),
                        m_matrix: matrix_rows(small),
                        n_matrix: matrix_rows(&large),
                        lhs,
                        rhs,
                    });
                }
            }
        }
        properties.push(PropertyCheck {
            name: "degenerate_subelliptic".into(),
            declared: op.flags.degenerate_subelliptic,
            pass: cx.is_none(),
            constants: vec![],
            constants_estimated: false,
            max_violation: worst,
            counterexample: cx,
        });
    }

    // uniformly subelliptic: F(r,p,M) - F(r,q,N) >= a1 trace(M-N) - a2 |p-q|
    // for M >= N.
    {
        let declared = op.alpha1.is_some();
        let (mut a1, mut a2) = (op.alpha1.unwrap_or(f64::INFINITY), op.alpha2.unwrap_or(0.0));
        let mut cx: Option<Counterexample> = None;
        let mut worst = 0.0f64;
        if !declared {
            // Estimate a1 from matrix-only gaps and a2 from gradient-only gaps.
            for t in &tuples {
                let tr = t.bump.trace();
                if tr > 1e-12 {
                    let large = t.n.clone() + &t.bump;
                    let gap = op.evaluate(t.r, &t.p, &large)? - op.evaluate(t.r, &t.p, &t.n)?;
                    let ratio = gap / tr;
                    if ratio < a1 {
                        a1 = ratio;
                        if ratio <= 1e-8 {
                            cx = Some(Counterexample {
                                r: t.r,
                                s: t.r,
                                p: t.p.iter().cloned().collect(),
                                q: t.p.iter().cloned().collect(),
                                m_matrix: matrix_rows(&large),
                                n_matrix: matrix_rows(&t.n),
                                lhs: gap,
                                rhs: tr,
                            });
                        }
                    }
                }
                let dp = (&t.p - &t.q).norm();
                if dp > 1e-12 {
                    let gap =
                        (op.evaluate(t.r, &t.p, &t.n)? - op.evaluate(t.r, &t.q, &t.n)?).abs();
                    a2 = a2.max(gap / dp);
                }
            }
            if a1 == f64::INFINITY {
                a1 = 0.0;
            }
        }
        let a1_ok = a1 > 1e-8;
        if a1_ok {
            for t in &tuples {
                let large = t.n.clone() + &t.bump;
                let lhs = op.evaluate(t.r, &t.p, &large)? - op.evaluate(t.r, &t.q, &t.n)?;
                let rhs = a1 * t.bump.trace() - a2 * (&t.p - &t.q).norm();
                let violation = rhs - lhs;
                if violation > worst {
                    worst = violation;
                    if violation > tol(lhs, rhs) && cx.is_none() {
                        cx = Some(Counterexample {
                            r: t.r,
                            s: t.r,
                            p: t.p.iter().cloned().collect(),
                            q: t.q.iter().cloned().collect(),
                            m_matrix: matrix_rows(&large),
                            n_matrix: matrix_rows(&t.n),
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
        let pass = a1_ok && worst <= 1e-9 * (1.0 + worst.abs()).max(1.0);
        properties.push(PropertyCheck {
            name: "uniformly_subelliptic".into(),
            declared: op.flags.uniformly_subelliptic,
            pass,
            constants: vec![("alpha1".into(), a1), ("alpha2".into(), a2)],
            constants_estimated: !declared,
            max_violation: worst.max(0.0),
            counterexample: cx,
        });
    }

    // nonincreasing: F(r, p, M) <= F(s, p, M) for r >= s.
    {
        let mut worst = 0.0f64;
        let mut cx: Option<Counterexample> = None;
        for t in &tuples {
            if t.r < t.s {
                continue;
            }
            let lhs = op.evaluate(t.r, &t.p, &t.n)?;
            let rhs = op.evaluate(t.s, &t.p, &t.n)?;
            let violation = lhs - rhs;
            if violation > worst {
                worst = violation;
                if violation > tol(lhs, rhs) {
                    cx = Some(Counterexample {
                        r: t.r,
                        s: t.s,
                        p: t.p.iter().cloned().collect(),
                        q: t.p.iter().cloned().collect(),
                        m_matrix: matrix_rows(&t.n),
                        n_matrix: matrix_rows(&t.n),
                        lhs,
                        rhs,
                    });
                }
            }
        }
        properties.push(PropertyCheck {
            name: "nonincreasing".into(),
            declared: op.flags.nonincreasing,
            pass: cx.is_none(),
            constants: vec![],
            constants_estimated: false,
            max_violation: worst,
            counterexample: cx,
        });
    }

    // decreasing: F(r, p, M) - F(s, p, M) <= -a3 (r - s) for r >= s.
    {
        let declared = op.alpha3.is_some();
        let mut a3 = op.alpha3.unwrap_or(f64::INFINITY);
        let mut cx: Option<Counterexample> = None;
        if !declared {
            for t in &tuples {
                if t.r - t.s < 1e-9 {
                    continue;
                }
                let hi = op.evaluate(t.r, &t.p, &t.n)?;
                let lo = op.evaluate(t.s, &t.p, &t.n)?;
                let ratio = (lo - hi) / (t.r - t.s);
                if ratio < a3 {
                    a3 = ratio;
                    if ratio <= 1e-8 {
                        cx = Some(Counterexample {
                            r: t.r,
                            s: t.s,
                            p: t.p.iter().cloned().collect(),
                            q: t.p.iter().cloned().collect(),
                            m_matrix: matrix_rows(&t.n),
                            n_matrix: matrix_rows(&t.n),
                            lhs: hi,
                            rhs: lo,
                        });
                    }
                }
            }
            if a3 == f64::INFINITY {
                a3 = 0.0;
            }
        }
        let mut worst = 0.0f64;
        let a3_ok = a3 > 1e-8;
        if a3_ok {
            for t in &tuples {
                if t.r - t.s < 1e-9 {
                    continue;
                }
                let lhs = op.evaluate(t.r, &t.p, &t.n)?;
                let rhs = op.evaluate(t.s, &t.p, &t.n)?;
                let violation = (lhs - rhs) + a3 * (t.r - t.s);
                if violation > worst {
                    worst = violation;
                    if violation > tol(lhs, rhs) && cx.is_none() {
                        cx = Some(Counterexample {
                            r: t.r,
                            s: t.s,
                            p: t.p.iter().cloned().collect(),
                            q: t.p.iter().cloned().collect(),
                            m_matrix: matrix_rows(&t.n),
                            n_matrix: matrix_rows(&t.n),
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
        let pass = a3_ok && cx.is_none();
        properties.push(PropertyCheck {
            name: "decreasing".into(),
            declared: op.flags.decreasing,
            pass,
            constants: vec![("alpha3".into(), a3)],
            constants_estimated: !declared,
            max_violation: worst,
            counterexample: cx,
        });
    }

    let declared_hold = properties.iter().all(|p| !p.declared || p.pass);
    Ok(StructureReport {
        operator: op.name.clone(),
        m,
        samples,
        seed,
        properties,
        declared_hold,
    })
}

// ---------------------------------------------------------------------------
// Strict-supersolution perturbation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct PerturbationResult {
    pub v_delta: GridField,
    pub alpha_field: GridField,
    pub k: f64,
    pub c_delta: f64,
    pub c1: f64,
    pub delta: f64,
    /// 1 = degenerate subelliptic + decreasing, 2 = uniformly subelliptic +
    /// nonincreasing.
    pub case: u8,
}

/// Closed-form perturbation profile `1 - exp(-k (x1 + 1 - c1)) / k` as an
/// expression, for exact symbolic jets of perturbed fields.
pub fn perturbation_profile_expr(k: f64, c1: f64) -> Expr {
    let shift = Expr::Sub(
        Box::new(Expr::Add(Box::new(Expr::Var(0)), Box::new(Expr::Num(1.0)))),
        Box::new(Expr::Num(c1)),
    );
    let exp = Expr::Call(Func::Exp, vec![Expr::Mul(Box::new(Expr::Num(-k)), Box::new(shift))]);
    Expr::Sub(
        Box::new(Expr::Num(1.0)),
        Box::new(Expr::Mul(Box::new(Expr::Num(1.0 / k)), Box::new(exp))),
    )
}

fn profile_at(k: f64, c1: f64, x1: f64) -> f64 {
    1.0 - (1.0 / k) * (-k * (x1 + 1.0 - c1)).exp()
}

/// Max |grad_h v| and ||hess_h v|| over interior nodes, from discrete jets.
fn jet_bounds(group: &CarnotGroup, v: &GridField) -> (f64, f64) {
    let dom = &v.domain;
    let mut bp = 0.0f64;
    let mut bm = 0.0f64;
    let mut multi = vec![0usize; dom.dim()];
    for flat in 0..dom.len() {
        dom.multi_index(flat, &mut multi);
        if dom.is_boundary_multi(&multi) {
            continue;
        }
        if let Ok(jet) = discrete_horizontal_jet(group, v, flat, 1) {
            bp = bp.max(jet.gradient.norm());
            let eig = jet.hessian.clone().symmetric_eigen();
            bm = bm.max(eig.eigenvalues.iter().fold(0.0f64, |a, &e| a.max(e.abs())));
        }
    }
    (bp, bm)
}

/// Perturbs a supersolution `v` into a strict supersolution `v + delta
/// alpha_k`, choosing `k` adaptively so the certified residual margin
/// `c_delta` is strictly positive. The bounds `v <= v_delta <= v + delta`
/// hold exactly nodewise.
pub fn perturb_supersolution(
    group: &CarnotGroup,
    v: &GridField,
    delta: f64,
    op: &NonlinearOperator,
) -> Result<PerturbationResult> {
    if delta <= 0.0 || delta.is_nan() {
        return Err(Error::InvalidInput(format!("delta must be > 0, got {delta}")));
    }
    if v.domain.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: v.domain.dim() });
    }
    let flags = op.flags();
    let case = if flags.degenerate_subelliptic && flags.decreasing {
        1u8
    } else if flags.uniformly_subelliptic && flags.nonincreasing {
        2u8
    } else {
        return Err(Error::Perturbation(
            "operator declares neither (degenerate subelliptic + decreasing) \
             nor (uniformly subelliptic + nonincreasing)"
                .into(),
        ));
    };

    let dom = &v.domain;
    let c1 = dom.intervals[0].0;
    // x1 extremes over nodes; the profile is monotone in x1.
    let x1_min = c1;
    let x1_max = dom.intervals[0].1;

    // Data range for the gradient modulus: jets of v plus the profile shift.
    let (bp, bm) = if case == 1 && op.modulus_p(1.0, 1.0, 1.0) != 0.0 {
        let (bp, bm) = jet_bounds(group, v);
        (bp + delta, bm)
    } else {
        (0.0, 0.0)
    };

    let mut k = 2.0f64;
    let mut c_delta = f64::NEG_INFINITY;
    let mut found = false;
    for _ in 0..=60 {
        let min_alpha = profile_at(k, c1, x1_min);
        let max_grad = (-k * (x1_min + 1.0 - c1)).exp();
        let margin = match case {
            1 => {
                let a3 = op.alpha3().expect("decreasing flag guarantees alpha3");
                0.5 * a3 * delta * min_alpha - op.modulus_p(delta * max_grad, bp, bm)
            }
            _ => {
                let a1 = op.alpha1().expect("uniform flag guarantees alpha1");
                let a2 = op.alpha2().expect("uniform flag guarantees alpha2");
                let min_exp = (-k * (x1_max + 1.0 - c1)).exp();
                0.5 * delta * min_exp * (a1 * k - a2)
            }
        };
        if margin > 0.0 {
            c_delta = margin;
            found = true;
            break;
        }
        k *= 2.0;
    }
    if !found {
        return Err(Error::Perturbation(format!(
            "no steepness up to k = {k} produced a positive margin; \
             the gradient modulus of `{}` may be pathological",
            op.name()
        )));
    }

    let len = dom.len();
    let mut alpha = Vec::with_capacity(len);
    for flat in 0..len {
        let x1 = dom.coords(flat)[0];
        alpha.push(profile_at(k, c1, x1));
    }
    let v_delta: Vec<f64> = (0..len).map(|i| v.values[i] + delta * alpha[i]).collect();
    let result = PerturbationResult {
        v_delta: GridField::new(dom.clone(), v_delta)?,
        alpha_field: GridField::new(dom.clone(), alpha)?,
        k,
        c_delta,
        c1,
        delta,
        case,
    };
    for i in 0..len {
        debug_assert!(v.values[i] <= result.v_delta.values[i]);
        debug_assert!(result.v_delta.values[i] <= v.values[i] + delta);
    }
    Ok(result)
}
