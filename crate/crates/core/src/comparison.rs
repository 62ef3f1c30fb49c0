//! Comparison-principle verification harness.
//!
//! For a subsolution `u` and a supersolution `v` of `F(w, grad_h w,
//! hess_h w) = 0`, the comparison principle bounds the interior excess of
//! `u - v` by its boundary excess. The harness measures that gap (`delta0`)
//! and, when it is positive, hunts for the contradiction the theory says
//! must exist: it verifies the structural hypotheses by sampling, perturbs
//! `v` into a strict supersolution, regularizes both fields by sup/inf
//! convolution, localizes the interior max, extracts a twice-differentiable
//! witness by local quadratic fits, assembles the frozen-coefficient
//! horizontal Hessians there, and checks which link of the inequality chain
//! breaks numerically.
//!
//! The harness is a diagnostic instrument, not a prover. Inputs satisfying
//! the hypotheses are expected to come back `HOLDS`;
//! `COUNTEREXAMPLE_CANDIDATE` is reserved for runs where every check passes
//! while the gap stays positive, which signals a numerical artifact worth
//! inspecting rather than a disproof.

use crate::calculus::{discrete_euclidean_jet, discrete_horizontal_jet, JetEvaluator};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{GridDomain, GridField};
use crate::group::{CarnotGroup, Point};
use crate::operators::{check_structure, Counterexample, NonlinearOperator};
use crate::transforms::{
    convolve, kernel_constant, semiconvexity_certificate, shrink_domain, CertResult, ConvMode,
};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "HOLDS")]
    Holds,
    #[serde(rename = "HYPOTHESIS_VIOLATION")]
    HypothesisViolation,
    #[serde(rename = "COUNTEREXAMPLE_CANDIDATE")]
    CounterexampleCandidate,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionKind {
    Sub,
    Super,
}

/// Classical (pointwise) classification of a smooth field.
#[derive(Clone, Debug, Serialize)]
pub struct ClassicalReport {
    pub kind: SolutionKind,
    pub pass: bool,
    /// Min residual for subsolutions, max residual for supersolutions.
    pub extreme_residual: f64,
    pub worst_node: usize,
    pub worst_coords: Vec<f64>,
    pub interior_nodes: usize,
}

/// Residuals `F(w, grad_h w, hess_h w)` of a smooth expression at every
/// interior node, from exact symbolic jets.
pub fn classical_residuals(
    group: &CarnotGroup,
    op: &NonlinearOperator,
    w: &Expr,
    dom: &GridDomain,
) -> Result<Vec<(usize, f64)>> {
    if dom.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: dom.dim() });
    }
    let jets = JetEvaluator::new(w, group.dim())
        .map_err(|e| Error::Nonsmooth(format!("classification refused: {e}")))?;
    let mut out = Vec::new();
    let mut multi = vec![0usize; dom.dim()];
    for flat in 0..dom.len() {
        dom.multi_index(flat, &mut multi);
        if dom.is_boundary_multi(&multi) {
            continue;
        }
        let x = Point::new(dom.coords(flat));
        let jet = jets.horizontal_jet(group, &x)?;
        out.push((flat, op.evaluate(jet.value, &jet.gradient, &jet.hessian)?));
    }
    Ok(out)
}

/// Classifies a C^2 expression as a classical sub- or supersolution by the
/// sign of its residual over interior nodes (slack 1e-9). Nonsmooth
/// expressions are refused; sample them and use the grid pipeline instead.
pub fn classify_classical(
    group: &CarnotGroup,
    op: &NonlinearOperator,
    w: &Expr,
    dom: &GridDomain,
    kind: SolutionKind,
) -> Result<ClassicalReport> {
    let residuals = classical_residuals(group, op, w, dom)?;
    if residuals.is_empty() {
        return Err(Error::InvalidInput("no interior nodes to classify on".into()));
    }
    let (worst_node, extreme) = match kind {
        SolutionKind::Sub => residuals
            .iter()
            .fold((residuals[0].0, f64::INFINITY), |acc, &(n, r)| {
                if r < acc.1 { (n, r) } else { acc }
            }),
        SolutionKind::Super => residuals
            .iter()
            .fold((residuals[0].0, f64::NEG_INFINITY), |acc, &(n, r)| {
                if r > acc.1 { (n, r) } else { acc }
            }),
    };
    let pass = match kind {
        SolutionKind::Sub => extreme >= -1e-9,
        SolutionKind::Super => extreme <= 1e-9,
    };
    Ok(ClassicalReport {
        kind,
        pass,
        extreme_residual: extreme,
        worst_node,
        worst_coords: dom.coords(worst_node),
        interior_nodes: residuals.len(),
    })
}

// ---------------------------------------------------------------------------
// Blow-up rescaling
// ---------------------------------------------------------------------------

/// Rescales `u` around the node `x0`:
/// `u_rho(y) = (u(x0 + rho y) - u(x0) - rho <grad, y>) / rho^2`
/// with Euclidean addition, sampled on the rescaled box via multilinear
/// interpolation.
pub fn blow_up(u: &GridField, x0: usize, grad: &[f64], rho: f64) -> Result<GridField> {
    if rho <= 0.0 || rho.is_nan() {
        return Err(Error::InvalidInput(format!("rho must be > 0, got {rho}")));
    }
    let dom = &u.domain;
    let n = dom.dim();
    if grad.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: grad.len() });
    }
    let mut multi = vec![0usize; n];
    dom.multi_index(x0, &mut multi);
    if dom.is_boundary_multi(&multi) {
        return Err(Error::Boundary("blow-up window collapses at a boundary node".into()));
    }
    let center = dom.coords(x0);
    let intervals: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let (a, b) = dom.intervals[k];
            ((a - center[k]) / rho, (b - center[k]) / rho)
        })
        .collect();
    let out_dom = GridDomain::new(intervals, dom.nodes.clone())?;
    let u0 = u.values[x0];
    let mut values = Vec::with_capacity(out_dom.len());
    for flat in 0..out_dom.len() {
        let y = out_dom.coords(flat);
        let x: Vec<f64> = (0..n).map(|k| center[k] + rho * y[k]).collect();
        let uv = u.interpolate(&x)?;
        let lin: f64 = (0..n).map(|k| grad[k] * y[k]).sum();
        values.push((uv - u0 - rho * lin) / (rho * rho));
    }
    GridField::new(out_dom, values)
}

// ---------------------------------------------------------------------------
// Jensen witness search
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub found: bool,
    pub node: usize,
    pub coords: Vec<f64>,
    /// Fitted Euclidean Hessian at the witness.
    pub hessian: Vec<Vec<f64>>,
    pub fit_residual: f64,
    pub max_eigenvalue: f64,
    pub candidates_tried: usize,
}

struct QuadraticFit {
    hessian: DMatrix<f64>,
    residual: f64,
}

/// Least-squares quadratic fit of `w` on the stencil around `node`
/// (offsets -s..s per axis; s = 2 in 1-D so the fit is overdetermined).
fn quadratic_fit(w: &GridField, node: usize) -> Result<QuadraticFit> {
    let dom = &w.domain;
    let n = dom.dim();
    let s: isize = if n == 1 { 2 } else { 1 };
    let mut multi = vec![0usize; n];
    dom.multi_index(node, &mut multi);
    for axis in 0..n {
        let i = multi[axis] as isize;
        if i - s < 0 || i + s >= dom.nodes[axis] as isize {
            return Err(Error::Boundary(format!(
                "fit stencil leaves the grid at node {node} on axis {}",
                axis + 1
            )));
        }
    }
    let center = dom.coords(node);
    let nfeat = 1 + n + n * (n + 1) / 2;
    let width = (2 * s + 1) as usize;
    let npts = width.pow(n as u32);
    if npts < nfeat {
        return Err(Error::InvalidInput(format!(
            "stencil has {npts} points for {nfeat} coefficients"
        )));
    }
    let mut a = DMatrix::zeros(npts, nfeat);
    let mut b = DVector::zeros(npts);
    let mut offsets = vec![0isize; n];
    for row in 0..npts {
        let mut rest = row;
        for axis in 0..n {
            offsets[axis] = (rest % width) as isize - s;
            rest /= width;
        }
        let mut m = multi.clone();
        for axis in 0..n {
            m[axis] = (m[axis] as isize + offsets[axis]) as usize;
        }
        let flat = dom.flat_index(&m);
        let d: Vec<f64> = (0..n).map(|k| dom.axis_coord(k, m[k]) - center[k]).collect();
        a[(row, 0)] = 1.0;
        for k in 0..n {
            a[(row, 1 + k)] = d[k];
        }
        let mut col = 1 + n;
        for k in 0..n {
            for l in k..n {
                a[(row, col)] = if k == l { 0.5 * d[k] * d[k] } else { d[k] * d[l] };
                col += 1;
            }
        }
        b[row] = w.values[flat];
    }
    let svd = a.clone().svd(true, true);
    let coeffs = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidInput(format!("quadratic fit failed: {e}")))?;
    let fitted = &a * &coeffs;
    let residual = (&fitted - &b).amax();

    let mut hessian = DMatrix::zeros(n, n);
    let mut col = 1 + n;
    for k in 0..n {
        for l in k..n {
            hessian[(k, l)] = coeffs[col];
            hessian[(l, k)] = coeffs[col];
            col += 1;
        }
    }
    Ok(QuadraticFit { hessian, residual })
}

/// Searches nodes within `radius` of `x0` for one where a local quadratic
/// fit of `w` has small residual (twice-differentiability proxy) and the
/// fitted Hessian's largest eigenvalue is at most `tol`.
pub fn jensen_witness(
    w: &GridField,
    x0: usize,
    radius: f64,
    tol: f64,
) -> Result<WitnessReport> {
    let h = w.domain.max_spacing();
    let scale = 1.0 + w.max_abs();
    let fit_tol = (1e-7 + 1e-2 * h * h) * scale;
    jensen_witness_with(w, x0, radius, tol, fit_tol)
}

pub fn jensen_witness_with(
    w: &GridField,
    x0: usize,
    radius: f64,
    tol: f64,
    fit_tol: f64,
) -> Result<WitnessReport> {
    if radius <= 0.0 || radius.is_nan() {
        return Err(Error::InvalidInput(format!("radius must be > 0, got {radius}")));
    }
    let dom = &w.domain;
    let n = dom.dim();
    let center = dom.coords(x0);
    let s = if n == 1 { 2usize } else { 1 };
    let mut multi = vec![0usize; n];
    // Candidates sorted by (distance, index); x0 itself comes first.
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for flat in 0..dom.len() {
        dom.multi_index(flat, &mut multi);
        if (0..n).any(|axis| multi[axis] < s || multi[axis] + s >= dom.nodes[axis]) {
            continue;
        }
        let c = dom.coords(flat);
        let d: f64 = (0..n)
            .map(|k| (c[k] - center[k]) * (c[k] - center[k]))
            .sum::<f64>()
            .sqrt();
        if d <= radius {
            candidates.push((d, flat));
        }
    }
    if candidates.is_empty() {
        return Err(Error::InvalidInput(
            "no fit-capable nodes inside the witness radius".into(),
        ));
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut best: Option<WitnessReport> = None;
    for (tried, &(_, flat)) in candidates.iter().enumerate() {
        let fit = quadratic_fit(w, flat)?;
        let eig = fit.hessian.clone().symmetric_eigen();
        let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if fit.residual <= fit_tol && max_eig <= tol {
            return Ok(WitnessReport {
                found: true,
                node: flat,
                coords: dom.coords(flat),
                hessian: (0..n)
                    .map(|i| (0..n).map(|j| fit.hessian[(i, j)]).collect())
                    .collect(),
                fit_residual: fit.residual,
                max_eigenvalue: max_eig,
                candidates_tried: tried + 1,
            });
        }
        if best.is_none() {
            best = Some(WitnessReport {
                found: false,
                node: flat,
                coords: dom.coords(flat),
                hessian: (0..n)
                    .map(|i| (0..n).map(|j| fit.hessian[(i, j)]).collect())
                    .collect(),
                fit_residual: fit.residual,
                max_eigenvalue: max_eig,
                candidates_tried: candidates.len(),
            });
        }
    }
    Ok(best.unwrap())
}

// ---------------------------------------------------------------------------
// The verification pipeline
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub tol: f64,
    pub classify_slack: f64,
    pub gradient_tol: Option<f64>,
    pub certificate_tol: Option<f64>,
    pub witness_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualClassify {
    pub kind: SolutionKind,
    /// "classical" (exact symbolic jets) or "discrete" (centered differences).
    pub method: String,
    pub pass: bool,
    pub extreme_residual: f64,
    pub worst_node: usize,
    pub worst_coords: Vec<f64>,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub structure_declared_hold: bool,
    pub failing_property: Option<String>,
    pub structure_counterexample: Option<Counterexample>,
    pub subsolution: Option<ResidualClassify>,
    pub supersolution: Option<ResidualClassify>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeRef {
    pub index: usize,
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessSummary {
    pub node: NodeRef,
    pub fit_residual: f64,
    pub m1: Vec<Vec<f64>>,
    pub m2: Vec<Vec<f64>>,
    pub max_eigenvalue_m1_minus_m2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainResiduals {
    pub f_at_u: f64,
    pub f_at_v: f64,
    pub c_delta: f64,
    pub omega_slack: f64,
    pub chain_slack: f64,
    pub link_subsolution: bool,
    pub link_supersolution: bool,
    pub link_monotone: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiClassification {
    pub sub: ClassicalReport,
    #[serde(rename = "super")]
    pub supersolution: ClassicalReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub verdict: Verdict,
    pub group: String,
    pub operator: String,
    pub c_plus: f64,
    pub delta0: f64,
    pub delta_used: Option<f64>,
    pub epsilon_used: Option<f64>,
    pub perturbation_k: Option<f64>,
    pub tolerances: Tolerances,
    pub hypothesis: Option<HypothesisReport>,
    pub x0: Option<NodeRef>,
    pub gradient_gap: Option<f64>,
    pub certificate: Option<CertResult>,
    pub jensen_witness: Option<WitnessSummary>,
    pub residuals: Option<ChainResiduals>,
    pub failing_step: Option<String>,
    /// Classical classification of an auxiliary C^2 test field, when the
    /// scenario supplied one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_classification: Option<PhiClassification>,
}

#[derive(Clone, Debug)]
pub struct ComparisonOptions {
    pub delta: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub seed: u64,
    /// Hypothesis-check slack; `None` means 1e-9 for classical residuals and
    /// a spacing/scale-derived slack for discrete ones.
    pub classify_slack: Option<f64>,
    pub structure_samples: usize,
    /// Expressions behind `u` and `v`, when known: the hypothesis checks
    /// then use exact symbolic jets instead of discrete ones (falling back
    /// to discrete jets for nonsmooth expressions).
    pub u_expr: Option<Expr>,
    pub v_expr: Option<Expr>,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            delta: 0.05,
            epsilon: 0.025,
            tol: 1e-9,
            seed: 0,
            classify_slack: None,
            structure_samples: 200,
            u_expr: None,
            v_expr: None,
        }
    }
}

fn positive_part(v: f64) -> f64 {
    v.max(0.0)
}

/// Centered Euclidean gradient of a field at an interior node.
fn discrete_gradient(u: &GridField, node: usize) -> Result<Vec<f64>> {
    let (_, grad, _) = discrete_euclidean_jet(u, node, 1)?;
    Ok(grad)
}

fn spectral_max(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn frozen_hessian(
    a: &DMatrix<f64>,
    da_eval: &[Vec<Vec<f64>>],
    euclid_hess: &DMatrix<f64>,
    euclid_grad: &[f64],
) -> DMatrix<f64> {
    let m = a.nrows();
    let n = a.ncols();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for k in 0..n {
                let aik = a[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for l in 0..n {
                    acc += aik * a[(j, l)] * euclid_hess[(k, l)];
                    acc += aik * da_eval[j][l][k] * euclid_grad[l];
                }
            }
            out[(i, j)] = acc;
        }
    }
    // symmetrize
    let mut sym = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            sym[(i, j)] = 0.5 * (out[(i, j)] + out[(j, i)]);
        }
    }
    sym
}

/// Intermediate fields retained from a pipeline run, for CSV export.
#[derive(Clone, Debug)]
pub struct ComparisonFields {
    pub u_eps: GridField,
    pub u_eps_witnesses: Vec<usize>,
    pub v_delta_eps: GridField,
    pub v_delta_eps_witnesses: Vec<usize>,
    pub difference: GridField,
}

/// Runs the full verification pipeline on sampled fields `u` (subsolution
/// candidate) and `v` (supersolution candidate). See the module docs for the
/// stage list and verdict semantics.
pub fn run_comparison(
    group: &CarnotGroup,
    op: &NonlinearOperator,
    u: &GridField,
    v: &GridField,
    opts: &ComparisonOptions,
) -> Result<ComparisonReport> {
    run_comparison_full(group, op, u, v, opts).map(|(rep, _)| rep)
}

/// As [`run_comparison`], also returning the convolved intermediate fields
/// when the pipeline reached them.
pub fn run_comparison_full(
    group: &CarnotGroup,
    op: &NonlinearOperator,
    u: &GridField,
    v: &GridField,
    opts: &ComparisonOptions,
) -> Result<(ComparisonReport, Option<ComparisonFields>)> {
    if u.domain != v.domain {
        return Err(Error::InvalidInput("u and v must share one grid".into()));
    }
    if u.domain.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: u.domain.dim() });
    }
    if let Some(want) = op.fixed_dim() {
        if want != group.horizontal_dim() {
            return Err(Error::DimensionMismatch {
                expected: group.horizontal_dim(),
                got: want,
            });
        }
    }
    if [opts.delta, opts.epsilon, opts.tol].iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidInput("delta, epsilon, tol must all be > 0".into()));
    }
    let dom = &u.domain;
    let len = dom.len();
    let h_max = dom.max_spacing();
    let scale = 1.0 + u.max_abs().max(v.max_abs());
    let classify_slack = opts
        .classify_slack
        .unwrap_or(1e-6 + 4.0 * h_max * h_max * scale);

    let mut tolerances = Tolerances {
        tol: opts.tol,
        classify_slack,
        gradient_tol: None,
        certificate_tol: None,
        witness_tol: None,
    };

    // Stage 1: boundary excess shift.
    let c_plus = (0..len)
        .filter(|&i| u.boundary[i])
        .map(|i| positive_part(u.values[i] - v.values[i]))
        .fold(0.0f64, f64::max);
    let v_shift = GridField::new(
        dom.clone(),
        v.values.iter().map(|&x| x + c_plus).collect(),
    )?;

    // Stage 2: the gap of the comparison inequality.
    let diff: Vec<f64> = (0..len).map(|i| u.values[i] - v_shift.values[i]).collect();
    let sup_all = diff.iter().cloned().map(positive_part).fold(0.0f64, f64::max);
    let sup_bdry = (0..len)
        .filter(|&i| u.boundary[i])
        .map(|i| positive_part(diff[i]))
        .fold(0.0f64, f64::max);
    let delta0 = sup_all - sup_bdry;

    let base = |verdict: Verdict, tols: &Tolerances| ComparisonReport {
        verdict,
        group: group.name().to_string(),
        operator: op.name().to_string(),
        c_plus,
        delta0,
        delta_used: None,
        epsilon_used: None,
        perturbation_k: None,
        tolerances: tols.clone(),
        hypothesis: None,
        x0: None,
        gradient_gap: None,
        certificate: None,
        jensen_witness: None,
        residuals: None,
        failing_step: None,
        phi_classification: None,
    };

    if delta0 <= opts.tol {
        return Ok((base(Verdict::Holds, &tolerances), None));
    }

    // Stage 3: hypothesis checks. The gap contradicts the theory, so find
    // which assumption broke before hunting numerical artifacts.
    let structure = check_structure(op, group.horizontal_dim(), opts.structure_samples, opts.seed)?;
    let mut hypothesis = HypothesisReport {
        structure_declared_hold: structure.declared_hold,
        failing_property: None,
        structure_counterexample: None,
        subsolution: None,
        supersolution: None,
    };
    if !structure.declared_hold {
        let failing = structure
            .properties
            .iter()
            .find(|p| p.declared && !p.pass)
            .expect("declared_hold is false");
        hypothesis.failing_property = Some(failing.name.clone());
        hypothesis.structure_counterexample = failing.counterexample.clone();
        let mut rep = base(Verdict::HypothesisViolation, &tolerances);
        rep.failing_step = Some(format!("operator_structure:{}", failing.name));
        rep.hypothesis = Some(hypothesis);
        return Ok((rep, None));
    }
    let flags = op.flags();
    let has_case = (flags.degenerate_subelliptic && flags.decreasing)
        || (flags.uniformly_subelliptic && flags.nonincreasing);
    if !has_case {
        let mut rep = base(Verdict::HypothesisViolation, &tolerances);
        rep.failing_step = Some("operator_structure:no_hypothesis_pairing".into());
        rep.hypothesis = Some(hypothesis);
        return Ok((rep, None));
    }

    let outcome_from = |residuals: &[(usize, f64)],
                        kind: SolutionKind,
                        method: &str,
                        slack: f64|
     -> ResidualClassify {
        let mut extreme = match kind {
            SolutionKind::Sub => f64::INFINITY,
            SolutionKind::Super => f64::NEG_INFINITY,
        };
        let mut worst = residuals[0].0;
        for &(flat, r) in residuals {
            let better = match kind {
                SolutionKind::Sub => r < extreme,
                SolutionKind::Super => r > extreme,
            };
            if better {
                extreme = r;
                worst = flat;
            }
        }
        let pass = match kind {
            SolutionKind::Sub => extreme >= -slack,
            SolutionKind::Super => extreme <= slack,
        };
        ResidualClassify {
            kind,
            method: method.into(),
            pass,
            extreme_residual: extreme,
            worst_node: worst,
            worst_coords: dom.coords(worst),
            slack,
        }
    };

    let classify = |field: &GridField,
                    expr: Option<&Expr>,
                    shift: f64,
                    kind: SolutionKind|
     -> Result<ResidualClassify> {
        if let Some(e) = expr {
            let shifted = if shift == 0.0 {
                e.clone()
            } else {
                Expr::Add(Box::new(e.clone()), Box::new(Expr::Num(shift)))
            };
            match classical_residuals(group, op, &shifted, dom) {
                Ok(residuals) => {
                    let slack = opts.classify_slack.unwrap_or(1e-9);
                    return Ok(outcome_from(&residuals, kind, "classical", slack));
                }
                Err(Error::Nonsmooth(_)) => {} // sampled fallback below
                Err(other) => return Err(other),
            }
        }
        let mut residuals = Vec::new();
        let mut multi = vec![0usize; dom.dim()];
        for flat in 0..len {
            dom.multi_index(flat, &mut multi);
            if dom.is_boundary_multi(&multi) {
                continue;
            }
            let jet = discrete_horizontal_jet(group, field, flat, 1)?;
            residuals.push((flat, op.evaluate(jet.value, &jet.gradient, &jet.hessian)?));
        }
        Ok(outcome_from(&residuals, kind, "discrete", classify_slack))
    };

    let sub_check = classify(u, opts.u_expr.as_ref(), 0.0, SolutionKind::Sub)?;
    let sub_pass = sub_check.pass;
    hypothesis.subsolution = Some(sub_check);
    if !sub_pass {
        let mut rep = base(Verdict::HypothesisViolation, &tolerances);
        rep.failing_step = Some("subsolution_check".into());
        rep.hypothesis = Some(hypothesis);
        return Ok((rep, None));
    }
    let super_check = classify(&v_shift, opts.v_expr.as_ref(), c_plus, SolutionKind::Super)?;
    let super_pass = super_check.pass;
    hypothesis.supersolution = Some(super_check);
    if !super_pass {
        let mut rep = base(Verdict::HypothesisViolation, &tolerances);
        rep.failing_step = Some("supersolution_check".into());
        rep.hypothesis = Some(hypothesis);
        return Ok((rep, None));
    }

    // Stage 4: perturb, convolve, restrict.
    let delta_used = opts.delta.min(delta0 / 8.0);
    let epsilon_used = opts.epsilon.min(delta_used / 2.0);
    let perturbed = crate::operators::perturb_supersolution(group, &v_shift, delta_used, op)?;
    let u_eps = convolve(group, u, epsilon_used, ConvMode::Sup)?;
    let v_eps = convolve(group, &perturbed.v_delta, epsilon_used, ConvMode::Inf)?;
    let r0 = u.max_abs().max(perturbed.v_delta.max_abs());
    let mask = shrink_domain(group, dom, 2.0 * r0 * epsilon_used)?;
    if mask.iter().all(|&b| !b) {
        return Err(Error::InvalidInput(format!(
            "the shrunk domain (radius {}) is empty; use a smaller epsilon",
            2.0 * r0 * epsilon_used
        )));
    }

    // Stage 5: interior max of the convolved difference.
    let w = GridField::new(
        dom.clone(),
        (0..len)
            .map(|i| u_eps.field.values[i] - v_eps.field.values[i])
            .collect(),
    )?;
    let fields = ComparisonFields {
        u_eps: u_eps.field.clone(),
        u_eps_witnesses: u_eps.witnesses.clone(),
        v_delta_eps: v_eps.field.clone(),
        v_delta_eps_witnesses: v_eps.witnesses.clone(),
        difference: w.clone(),
    };
    let mut x0 = usize::MAX;
    let mut best = f64::NEG_INFINITY;
    for i in 0..len {
        if mask[i] && w.values[i] > best {
            best = w.values[i];
            x0 = i;
        }
    }
    let x0_ref = NodeRef { index: x0, coords: dom.coords(x0) };

    // Gradient agreement at the max.
    let gu = discrete_gradient(&u_eps.field, x0)?;
    let gv = discrete_gradient(&v_eps.field, x0)?;
    let gradient_gap = gu
        .iter()
        .zip(&gv)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let mut lip = 0.0f64;
    {
        let mut multi = vec![0usize; dom.dim()];
        dom.multi_index(x0, &mut multi);
        for axis in 0..dom.dim() {
            let h = dom.spacing(axis);
            for field in [&u_eps.field, &v_eps.field] {
                let mut up = multi.clone();
                up[axis] += 1;
                let mut dn = multi.clone();
                dn[axis] -= 1;
                let c = field.values[dom.flat_index(&multi)];
                lip = lip.max((field.values[dom.flat_index(&up)] - c).abs() / h);
                lip = lip.max((c - field.values[dom.flat_index(&dn)]).abs() / h);
            }
        }
    }
    let gradient_tol = opts.tol * (1.0 + lip);
    tolerances.gradient_tol = Some(gradient_tol);

    let mut rep = base(Verdict::Inconclusive, &tolerances);
    rep.delta_used = Some(delta_used);
    rep.epsilon_used = Some(epsilon_used);
    rep.perturbation_k = Some(perturbed.k);
    rep.hypothesis = Some(hypothesis);
    rep.x0 = Some(x0_ref);
    rep.gradient_gap = Some(gradient_gap);
    rep.tolerances = tolerances.clone();

    if gradient_gap > gradient_tol {
        rep.failing_step = Some("gradient_agreement".into());
        return Ok((rep, Some(fields)));
    }

    // Semiconvexity of the difference: both convolutions contribute.
    let kc = kernel_constant(group, dom)?;
    let c_semiconvex = kc / epsilon_used;
    let certificate_tol = 1e-8 * (1.0 + c_semiconvex);
    rep.tolerances.certificate_tol = Some(certificate_tol);
    let cert = semiconvexity_certificate(&w, c_semiconvex, certificate_tol)?;
    let cert_pass = cert.passed;
    rep.certificate = Some(cert);
    if !cert_pass {
        rep.failing_step = Some("semiconvexity_certificate".into());
        return Ok((rep, Some(fields)));
    }

    // Stage 6: Jensen witness by local quadratic fits.
    let witness_tol = opts.tol * (1.0 + lip / h_max.max(1e-12));
    rep.tolerances.witness_tol = Some(witness_tol);
    let radius = 3.0 * h_max * (dom.dim() as f64).sqrt();
    let fit_tol = (1e-7 + 1e-2 * h_max * h_max) * (1.0 + w.max_abs());
    let witness = jensen_witness_with(&w, x0, radius, witness_tol, fit_tol)?;
    if !witness.found {
        rep.failing_step = Some("jensen_witness".into());
        return Ok((rep, Some(fields)));
    }

    // Stage 7: frozen-coefficient matrices at the witness.
    let fit_u = quadratic_fit(&u_eps.field, witness.node)?;
    let fit_v = quadratic_fit(&v_eps.field, witness.node)?;
    let x0_point = Point::new(dom.coords(x0));
    let m = group.horizontal_dim();
    let n = group.dim();
    let coeff = crate::calculus::coefficient_matrix(group, &x0_point)?;
    let mut da_eval = vec![vec![vec![0.0; n]; n]; m];
    for (j, row) in group.coeff_dx_polys().iter().enumerate() {
        for (l, per_var) in row.iter().enumerate() {
            for (k, poly) in per_var.iter().enumerate() {
                da_eval[j][l][k] = poly.eval(&x0_point.coords);
            }
        }
    }
    let g_avg: Vec<f64> = gu.iter().zip(&gv).map(|(a, b)| 0.5 * (a + b)).collect();
    let m1 = frozen_hessian(&coeff.a, &da_eval, &fit_u.hessian, &g_avg);
    let m2 = frozen_hessian(&coeff.a, &da_eval, &fit_v.hessian, &g_avg);
    let mut p_h = DVector::zeros(m);
    for l in 0..m {
        p_h[l] = (0..n).map(|k| coeff.a[(l, k)] * g_avg[k]).sum();
    }
    let diff_eig = spectral_max(&(&m1 - &m2));
    rep.jensen_witness = Some(WitnessSummary {
        node: NodeRef { index: witness.node, coords: witness.coords.clone() },
        fit_residual: witness.fit_residual.max(fit_u.residual).max(fit_v.residual),
        m1: (0..m).map(|i| (0..m).map(|j| m1[(i, j)]).collect()).collect(),
        m2: (0..m).map(|i| (0..m).map(|j| m2[(i, j)]).collect()).collect(),
        max_eigenvalue_m1_minus_m2: diff_eig,
    });
    // Stage 8: the inequality chain at the witness.
    let f_at_u = op.evaluate(u_eps.field.values[x0], &p_h, &m1)?;
    let f_at_v = op.evaluate(v_eps.field.values[x0], &p_h, &m2)?;
    let c_delta = perturbed.c_delta;
    let m_scale = m1.amax().max(m2.amax());
    let omega_slack = op.modulus_p(gradient_gap, p_h.norm() + gradient_gap, 1.0 + m_scale);
    let chain_slack = opts.tol * (1.0 + f_at_u.abs() + f_at_v.abs());
    let link_subsolution = f_at_u >= -chain_slack;
    let link_supersolution = f_at_v <= -c_delta + chain_slack;
    let link_monotone = diff_eig <= witness_tol * (1.0 + m_scale)
        && f_at_u <= f_at_v + omega_slack + chain_slack;
    rep.residuals = Some(ChainResiduals {
        f_at_u,
        f_at_v,
        c_delta,
        omega_slack,
        chain_slack,
        link_subsolution,
        link_supersolution,
        link_monotone,
    });
    if link_subsolution && link_supersolution && link_monotone {
        rep.verdict = Verdict::CounterexampleCandidate;
        return Ok((rep, Some(fields)));
    }
    rep.failing_step = Some(if !link_subsolution {
        "chain:subsolution_residual".into()
    } else if !link_supersolution {
        "chain:supersolution_residual".into()
    } else {
        "chain:monotone_comparison".into()
    });
    Ok((rep, Some(fields)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::grid::sample;
    use crate::operators::StructureFlags;

    fn e2_grid() -> GridDomain {
        GridDomain::new(vec![(-1.0, 1.0); 2], vec![21, 21]).unwrap()
    }

    #[test]
    fn classify_classical_examples() {
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        let op = NonlinearOperator::trace_minus(1.0).unwrap();
        // u = -0.5 (1 - x1^2 - x2^2): residual = 2 - u, positive on the box
        // (>= 2 wherever u <= 0, >= 1.69 at the interior corner nodes).
        let u = parse("-0.5*(1 - x1^2 - x2^2)").unwrap();
        let rep = classify_classical(&g, &op, &u, &dom, SolutionKind::Sub).unwrap();
        assert!(rep.pass);
        assert!(rep.extreme_residual >= 1.6);

        let zero = parse("0").unwrap();
        assert!(classify_classical(&g, &op, &zero, &dom, SolutionKind::Sub).unwrap().pass);
        assert!(classify_classical(&g, &op, &zero, &dom, SolutionKind::Super).unwrap().pass);

        // On the Heisenberg group x1 is harmonic for the pure trace operator.
        let h = CarnotGroup::heisenberg(1);
        let dom3 = GridDomain::new(vec![(-1.0, 1.0); 3], vec![7, 7, 7]).unwrap();
        let op0 = NonlinearOperator::trace_minus(0.0).unwrap();
        let x1 = parse("x1").unwrap();
        assert!(classify_classical(&h, &op0, &x1, &dom3, SolutionKind::Sub).unwrap().pass);
        assert!(classify_classical(&h, &op0, &x1, &dom3, SolutionKind::Super).unwrap().pass);

        // Nonsmooth expressions are refused.
        let kink = parse("abs(x1)").unwrap();
        assert!(matches!(
            classify_classical(&g, &op, &kink, &dom, SolutionKind::Sub),
            Err(Error::Nonsmooth(_))
        ));
    }

    #[test]
    fn blow_up_examples() {
        let g = CarnotGroup::euclidean(2);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 2], vec![9, 9]).unwrap();
        let u = sample(&parse("x1^2 + x2^2").unwrap(), &g, &dom).unwrap();
        let center = dom.flat_index(&[4, 4]);
        for rho in [1.0, 0.5, 0.25] {
            let b = blow_up(&u, center, &[0.0, 0.0], rho).unwrap();
            for flat in 0..b.domain.len() {
                let y = b.domain.coords(flat);
                let want = y[0] * y[0] + y[1] * y[1];
                assert!(
                    (b.values[flat] - want).abs() < 1e-9 * (1.0 + want),
                    "rho {rho} node {flat}"
                );
            }
        }
        // linear field with its own gradient removed: identically zero
        let lin = sample(&parse("2*x1 - 3*x2 + 0.5").unwrap(), &g, &dom).unwrap();
        let b = blow_up(&lin, center, &[2.0, -3.0], 0.5).unwrap();
        assert!(b.values.iter().all(|&v| v.abs() < 1e-12));
        // rho = 1, zero gradient: the field minus its center value
        let b = blow_up(&u, center, &[0.0, 0.0], 1.0).unwrap();
        assert!((b.values[center] - 0.0).abs() < 1e-15);
        // boundary node is rejected
        assert!(blow_up(&u, 0, &[0.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn jensen_witness_on_quadratic_max() {
        let g = CarnotGroup::euclidean(2);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 2], vec![21, 21]).unwrap();
        let w = sample(&parse("-(x1^2 + x2^2)").unwrap(), &g, &dom).unwrap();
        let center = dom.flat_index(&[10, 10]);
        let rep = jensen_witness(&w, center, 0.5, 1e-6).unwrap();
        assert!(rep.found);
        assert_eq!(rep.node, center);
        assert!((rep.hessian[0][0] + 2.0).abs() < 1e-8);
        assert!((rep.hessian[1][1] + 2.0).abs() < 1e-8);
        assert!(rep.max_eigenvalue <= 1e-6);
    }

    #[test]
    fn jensen_witness_constant_field() {
        let dom = GridDomain::new(vec![(-1.0, 1.0); 2], vec![9, 9]).unwrap();
        let w = GridField::constant(dom.clone(), 1.0).unwrap();
        let rep = jensen_witness(&w, dom.flat_index(&[4, 4]), 0.6, 1e-8).unwrap();
        assert!(rep.found);
        assert!(rep.hessian.iter().flatten().all(|&v| v.abs() < 1e-10));
    }

    #[test]
    fn jensen_witness_window_underflow() {
        let g = CarnotGroup::euclidean(1);
        let dom = GridDomain::new(vec![(-1.0, 1.0)], vec![9]).unwrap();
        let w = sample(&parse("-x1^2").unwrap(), &g, &dom).unwrap();
        // node 1 cannot host the 5-point stencil and nothing else is in range
        assert!(jensen_witness(&w, 1, 1e-6, 1e-6).is_err());
    }

    #[test]
    fn jensen_witness_avoids_kink() {
        // w = -x^2 + 0.1 |x|: interior maxima at +-0.05, off the kink at 0.
        let g = CarnotGroup::euclidean(1);
        let dom = GridDomain::new(vec![(-1.0, 1.0)], vec![161]).unwrap();
        let w = sample(&parse("-x1^2 + 0.1*abs(x1)").unwrap(), &g, &dom).unwrap();
        let x0 = (0..dom.len())
            .max_by(|&a, &b| w.values[a].partial_cmp(&w.values[b]).unwrap())
            .unwrap();
        let rep = jensen_witness(&w, x0, 0.05, 1e-6).unwrap();
        assert!(rep.found, "residual {} eig {}", rep.fit_residual, rep.max_eigenvalue);
        let coord = rep.coords[0].abs();
        assert!((coord - 0.05).abs() < 0.03, "witness at {coord}");
        assert!((rep.hessian[0][0] + 2.0).abs() < 1e-6);
    }

    fn holds_options() -> ComparisonOptions {
        ComparisonOptions { delta: 0.05, epsilon: 0.02, tol: 1e-6, seed: 42, ..Default::default() }
    }

    #[test]
    fn classical_precheck_used_when_expressions_given() {
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        let op = NonlinearOperator::trace_minus(1.0).unwrap();
        let u_expr = parse("0.5*(1 - x1^2 - x2^2)").unwrap();
        let u = sample(&u_expr, &g, &dom).unwrap();
        let v = GridField::constant(dom.clone(), 0.0).unwrap();
        let opts = ComparisonOptions {
            tol: 1e-6,
            u_expr: Some(u_expr),
            v_expr: Some(parse("0").unwrap()),
            ..holds_options()
        };
        let rep = run_comparison(&g, &op, &u, &v, &opts).unwrap();
        assert_eq!(rep.verdict, Verdict::HypothesisViolation);
        let sub = rep.hypothesis.unwrap().subsolution.unwrap();
        assert_eq!(sub.method, "classical");
        assert_eq!(sub.slack, 1e-9);
        assert!(sub.extreme_residual <= -2.0);
    }

    #[test]
    fn comparison_holds_on_subsolution_pair() {
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        let op = NonlinearOperator::trace_minus(1.0).unwrap();
        let u = sample(&parse("-0.5*(1 - x1^2 - x2^2)").unwrap(), &g, &dom).unwrap();
        let v = GridField::constant(dom.clone(), 0.0).unwrap();
        let rep = run_comparison(&g, &op, &u, &v, &holds_options()).unwrap();
        assert_eq!(rep.verdict, Verdict::Holds);
        assert!(rep.delta0 <= 1e-6);
    }

    #[test]
    fn comparison_holds_when_fields_equal() {
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        let op = NonlinearOperator::trace_minus(0.0).unwrap();
        let u = sample(&parse("x1").unwrap(), &g, &dom).unwrap();
        let rep = run_comparison(&g, &op, &u, &u.clone(), &holds_options()).unwrap();
        assert_eq!(rep.verdict, Verdict::Holds);
        assert_eq!(rep.delta0, 0.0);
    }

    #[test]
    fn comparison_flags_non_subsolution() {
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        let op = NonlinearOperator::trace_minus(1.0).unwrap();
        // positive bump: not a subsolution of trace - r
        let u = sample(&parse("0.5*(1 - x1^2 - x2^2)").unwrap(), &g, &dom).unwrap();
        let v = GridField::constant(dom.clone(), 0.0).unwrap();
        let rep = run_comparison(&g, &op, &u, &v, &holds_options()).unwrap();
        assert_eq!(rep.verdict, Verdict::HypothesisViolation);
        assert_eq!(rep.failing_step.as_deref(), Some("subsolution_check"));
        let hyp = rep.hypothesis.unwrap();
        let sub = hyp.subsolution.unwrap();
        assert!(!sub.pass);
        assert!(sub.extreme_residual < -1.0);
    }

    #[test]
    fn comparison_flags_bad_operator() {
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        // declared degenerate subelliptic + decreasing, actually -trace - r
        let expr = parse("0 - x4 - x7 - x1").unwrap();
        let flags = StructureFlags {
            degenerate_subelliptic: true,
            nonincreasing: true,
            decreasing: true,
            ..Default::default()
        };
        let op =
            NonlinearOperator::from_expr(expr, 2, flags, None, None, Some(1.0)).unwrap();
        let u = sample(&parse("0.5*(1 - x1^2 - x2^2)").unwrap(), &g, &dom).unwrap();
        let v = GridField::constant(dom.clone(), 0.0).unwrap();
        let rep = run_comparison(&g, &op, &u, &v, &holds_options()).unwrap();
        assert_eq!(rep.verdict, Verdict::HypothesisViolation);
        assert_eq!(
            rep.failing_step.as_deref(),
            Some("operator_structure:degenerate_subelliptic")
        );
        let hyp = rep.hypothesis.unwrap();
        assert!(hyp.structure_counterexample.is_some());
    }

    #[test]
    fn deep_pipeline_reports_failing_chain_link() {
        // Bypass the hypothesis pre-check to drive the witness machinery on a
        // pair that violates the conclusion; the chain must break at the
        // subsolution link.
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        let op = NonlinearOperator::trace_minus(1.0).unwrap();
        let u = sample(&parse("0.5*(1 - x1^2 - x2^2)").unwrap(), &g, &dom).unwrap();
        let v = GridField::constant(dom.clone(), 0.0).unwrap();
        let opts = ComparisonOptions {
            delta: 0.05,
            epsilon: 0.02,
            tol: 0.05,
            seed: 42,
            classify_slack: Some(1e9),
            structure_samples: 100,
            ..Default::default()
        };
        let rep = run_comparison(&g, &op, &u, &v, &opts).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert_eq!(rep.failing_step.as_deref(), Some("chain:subsolution_residual"));
        let res = rep.residuals.expect("chain evaluated");
        assert!(res.f_at_u < -1.0, "f_at_u = {}", res.f_at_u);
        assert!(res.link_supersolution);
        let witness = rep.jensen_witness.expect("witness found");
        assert!(witness.max_eigenvalue_m1_minus_m2 <= 1e-6);
        let x0 = rep.x0.unwrap();
        let c = x0.coords;
        assert!(c[0].abs() < 0.2 && c[1].abs() < 0.2, "max near the center, got {c:?}");
    }

    #[test]
    fn deep_pipeline_on_heisenberg() {
        // Same bump counterexample on a step-2 group: the kernel, domain
        // shrinking, and frozen coefficients all leave the abelian case.
        let g = CarnotGroup::heisenberg(1);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 3], vec![11, 11, 11]).unwrap();
        let op = NonlinearOperator::trace_minus(1.0).unwrap();
        // x3 dependence keeps the max off the box faces
        let u = sample(&parse("0.5*(1 - x1^2 - x2^2 - x3^2)").unwrap(), &g, &dom).unwrap();
        let v = GridField::constant(dom.clone(), 0.0).unwrap();
        let opts = ComparisonOptions {
            delta: 0.05,
            epsilon: 0.02,
            tol: 0.05,
            seed: 42,
            classify_slack: Some(1e9),
            structure_samples: 100,
            ..Default::default()
        };
        let (rep, fields) = run_comparison_full(&g, &op, &u, &v, &opts).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert_eq!(rep.failing_step.as_deref(), Some("chain:subsolution_residual"));
        let fields = fields.expect("pipeline reached the convolution stage");
        for i in 0..dom.len() {
            assert!(fields.u_eps.values[i] >= u.values[i]);
            assert!(fields.v_delta_eps.values[i] <= 0.05 + 1e-15);
        }
        let res = rep.residuals.unwrap();
        assert!(res.f_at_u < 0.0);
        assert!(res.link_supersolution, "perturbed field stays a strict supersolution");
    }

    #[test]
    fn shift_invariance_of_verdict() {
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        let op = NonlinearOperator::trace_minus(1.0).unwrap();
        let u = sample(&parse("x1 - 0.1").unwrap(), &g, &dom).unwrap();
        let v = sample(&parse("x1").unwrap(), &g, &dom).unwrap();
        let rep = run_comparison(&g, &op, &u, &v, &holds_options()).unwrap();
        assert_eq!(rep.verdict, Verdict::Holds);
        for c in [1.0, -0.75] {
            let us = GridField::new(dom.clone(), u.values.iter().map(|x| x + c).collect())
                .unwrap();
            let vs = GridField::new(dom.clone(), v.values.iter().map(|x| x + c).collect())
                .unwrap();
            let rep2 = run_comparison(&g, &op, &us, &vs, &holds_options()).unwrap();
            assert_eq!(rep2.verdict, rep.verdict);
            assert!((rep2.delta0 - rep.delta0).abs() <= 1e-12);
        }
    }

    #[test]
    fn boundary_shift_reduction_keeps_verdict() {
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        let op = NonlinearOperator::trace_minus(1.0).unwrap();
        // u exceeds v on the boundary so c_plus > 0.
        let u = sample(&parse("x1 + 0.3").unwrap(), &g, &dom).unwrap();
        let v = sample(&parse("x1").unwrap(), &g, &dom).unwrap();
        let rep = run_comparison(&g, &op, &u, &v, &holds_options()).unwrap();
        assert!(rep.c_plus > 0.0);
        let vs = GridField::new(
            dom.clone(),
            v.values.iter().map(|x| x + rep.c_plus).collect(),
        )
        .unwrap();
        let rep2 = run_comparison(&g, &op, &u, &vs, &holds_options()).unwrap();
        assert_eq!(rep2.verdict, rep.verdict);
    }

    #[test]
    fn reports_are_deterministic() {
        let g = CarnotGroup::euclidean(2);
        let dom = e2_grid();
        let op = NonlinearOperator::trace_minus(1.0).unwrap();
        let u = sample(&parse("0.5*(1 - x1^2 - x2^2)").unwrap(), &g, &dom).unwrap();
        let v = GridField::constant(dom.clone(), 0.0).unwrap();
        let a = run_comparison(&g, &op, &u, &v, &holds_options()).unwrap();
        let b = run_comparison(&g, &op, &u, &v, &holds_options()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
