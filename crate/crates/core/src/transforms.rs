//! Sup/inf convolutions with the gauge kernel and their diagnostics.
//!
//! The sup convolution of a sampled field is the exact discrete optimum
//!
//! ```text
//! u_eps(x) = max_y ( u(y) - d(x^-1, y^-1)^(2 r!) / (2 eps) )
//! ```
//!
//! over all grid nodes y, with the maximizing node recorded as a witness.
//! The kernel `d(x^-1, y^-1)^(2 r!) = N(x . y^-1)^(2 r!)` is a polynomial in
//! the coordinates. The inf convolution is `-sup(-u)` bit for bit. The loop
//! is brute force O(N^2) and embarrassingly parallel; ties resolve to the
//! lowest node index so results are independent of the schedule.

use crate::error::{Error, Result};
use crate::grid::{GridDomain, GridField};
use crate::group::CarnotGroup;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvMode {
    Sup,
    Inf,
}

/// Convolved field plus per-node optimizer witnesses.
#[derive(Clone, Debug)]
pub struct ConvolutionResult {
    pub field: GridField,
    pub witnesses: Vec<usize>,
    pub epsilon: f64,
    /// Sampled estimate of `sup ||hess_x kernel||` over the domain.
    pub kernel_constant: f64,
    pub mode: ConvMode,
}

/// All node coordinates, flattened (`n` per node).
fn all_coords(dom: &GridDomain) -> Vec<f64> {
    let n = dom.dim();
    let mut out = Vec::with_capacity(dom.len() * n);
    for flat in 0..dom.len() {
        out.extend(dom.coords(flat));
    }
    out
}

pub fn convolve(
    group: &CarnotGroup,
    u: &GridField,
    epsilon: f64,
    mode: ConvMode,
) -> Result<ConvolutionResult> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(Error::InvalidInput(format!("epsilon must be > 0, got {epsilon}")));
    }
    if u.domain.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: u.domain.dim() });
    }
    match mode {
        ConvMode::Sup => convolve_sup(group, u, epsilon),
        ConvMode::Inf => {
            let neg = GridField::new(
                u.domain.clone(),
                u.values.iter().map(|v| -v).collect(),
            )?;
            let sup = convolve_sup(group, &neg, epsilon)?;
            let field = GridField::new(
                u.domain.clone(),
                sup.field.values.iter().map(|v| -v).collect(),
            )?;
            Ok(ConvolutionResult {
                field,
                witnesses: sup.witnesses,
                epsilon,
                kernel_constant: sup.kernel_constant,
                mode: ConvMode::Inf,
            })
        }
    }
}

fn convolve_sup(group: &CarnotGroup, u: &GridField, epsilon: f64) -> Result<ConvolutionResult> {
    let dom = &u.domain;
    let n = group.dim();
    let coords = all_coords(dom);
    let two_eps = 2.0 * epsilon;
    let len = dom.len();

    let results: Vec<(f64, usize)> = (0..len)
        .into_par_iter()
        .map_init(
            || (vec![0.0; 2 * n], vec![0.0; n]),
            |(scratch, z), xi| {
                let x = &coords[xi * n..(xi + 1) * n];
                // y = x contributes u(x) with kernel exactly zero.
                let mut best = u.values[xi];
                let mut witness = xi;
                for yi in 0..len {
                    if yi == xi {
                        continue;
                    }
                    let y = &coords[yi * n..(yi + 1) * n];
                    let kernel = group.kernel_between(x, y, scratch, z);
                    let cand = u.values[yi] - kernel / two_eps;
                    if cand > best || (cand == best && yi < witness) {
                        best = cand;
                        witness = yi;
                    }
                }
                (best, witness)
            },
        )
        .collect();

    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let witnesses: Vec<usize> = results.iter().map(|r| r.1).collect();
    let field = GridField::new(dom.clone(), values)?;
    let kernel_constant = kernel_constant(group, dom)?;
    Ok(ConvolutionResult { field, witnesses, epsilon, kernel_constant, mode: ConvMode::Sup })
}

/// Mask of non-boundary nodes whose kernel distance to every boundary-face
/// node is at least `radius`. The boundary faces stand in for the grid
/// complement. An empty mask is allowed.
pub fn shrink_domain(group: &CarnotGroup, dom: &GridDomain, radius: f64) -> Result<Vec<bool>> {
    if radius < 0.0 {
        return Err(Error::InvalidInput(format!("radius must be >= 0, got {radius}")));
    }
    if dom.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: dom.dim() });
    }
    let n = group.dim();
    let len = dom.len();
    let coords = all_coords(dom);
    let mut multi = vec![0usize; n];
    let boundary: Vec<usize> = (0..len)
        .filter(|&flat| {
            dom.multi_index(flat, &mut multi);
            dom.is_boundary_multi(&multi)
        })
        .collect();
    // Compare kernels against radius^(2 r!) to avoid the root in the loop;
    // the relative slack keeps nodes that sit on the radius up to round-off.
    let threshold = (radius * (1.0 - 1e-12)).powi(group.kernel_power() as i32);
    let mask: Vec<bool> = (0..len)
        .into_par_iter()
        .map_init(
            || (vec![0.0; 2 * n], vec![0.0; n], vec![0usize; n]),
            |(scratch, z, multi), flat| {
                dom.multi_index(flat, multi);
                if dom.is_boundary_multi(multi) {
                    return false;
                }
                let x = &coords[flat * n..(flat + 1) * n];
                for &b in &boundary {
                    let y = &coords[b * n..(b + 1) * n];
                    if group.kernel_between(x, y, scratch, z) < threshold {
                        return false;
                    }
                }
                true
            },
        )
        .collect();
    Ok(mask)
}

/// Outcome of the semiconvexity check.
#[derive(Clone, Debug, Serialize)]
pub struct CertResult {
    pub passed: bool,
    pub constant: f64,
    pub worst_node: usize,
    pub worst_eigenvalue: f64,
}

/// Checks that the discrete Euclidean Hessian of `u + C ||x||^2` is positive
/// semidefinite at every interior node, up to `-tol` on the least eigenvalue.
/// This is a necessary condition for convexity of the continuum function,
/// not a proof of it.
pub fn semiconvexity_certificate(u: &GridField, c: f64, tol: f64) -> Result<CertResult> {
    if c < 0.0 {
        return Err(Error::InvalidInput(format!("constant must be >= 0, got {c}")));
    }
    let dom = &u.domain;
    let n = dom.dim();
    let mut worst = f64::INFINITY;
    let mut worst_node = 0;
    let mut multi = vec![0usize; n];
    for flat in 0..dom.len() {
        dom.multi_index(flat, &mut multi);
        if dom.is_boundary_multi(&multi) {
            continue;
        }
        let (_, _, hess) = crate::calculus::discrete_euclidean_jet(u, flat, 1)?;
        // The quadratic C ||x||^2 contributes exactly 2C on the diagonal.
        let mut shifted = hess.clone();
        for k in 0..n {
            shifted[(k, k)] += 2.0 * c;
        }
        let eig = shifted.symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < worst {
            worst = min_eig;
            worst_node = flat;
        }
    }
    if worst == f64::INFINITY {
        worst = 0.0;
    }
    Ok(CertResult { passed: worst >= -tol, constant: c, worst_node, worst_eigenvalue: worst })
}

/// Exact Hessian in `x` of the kernel `N(x . y^-1)^(2 r!)` at one `(x, y)`
/// pair, assembled by the chain rule from the product polynomials and the
/// closed-form gauge-kernel derivatives.
fn kernel_hessian_at(group: &CarnotGroup, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let n = group.dim();
    let mut xy = Vec::with_capacity(2 * n);
    xy.extend_from_slice(x);
    for &c in y {
        xy.push(-c);
    }
    let mut z = vec![0.0; n];
    group.product_eval(&xy, &mut z);

    let mut jac = DMatrix::zeros(n, n); // jac[c][a] = dz_c/dx_a
    for c in 0..n {
        for a in 0..n {
            jac[(c, a)] = group.product_dx_polys()[c][a].eval(&xy);
        }
    }
    let mut gh = vec![vec![0.0; n]; n];
    group.gauge_kernel_hess(&z, &mut gh);
    let mut gg = vec![0.0; n];
    group.gauge_kernel_grad(&z, &mut gg);

    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                let jca = jac[(c, a)];
                if jca != 0.0 {
                    for d in 0..n {
                        acc += jca * gh[c][d] * jac[(d, b)];
                    }
                }
                if gg[c] != 0.0 {
                    acc += gg[c] * group.product_dxx_polys()[c][a][b].eval(&xy);
                }
            }
            out[(a, b)] = acc;
        }
    }
    out
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    let sym = m.clone().symmetric_eigen();
    sym.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Deterministic node subsample: evenly strided flat indices plus all box
/// corners.
fn sample_nodes(dom: &GridDomain, per_side: usize) -> Vec<usize> {
    let len = dom.len();
    let k = per_side.max(2).min(len);
    let mut set: Vec<usize> = (0..k).map(|i| i * (len - 1) / (k - 1)).collect();
    let n = dom.dim();
    for corner in 0..(1usize << n) {
        let multi: Vec<usize> = (0..n)
            .map(|axis| if corner >> axis & 1 == 1 { dom.nodes[axis] - 1 } else { 0 })
            .collect();
        set.push(dom.flat_index(&multi));
    }
    set.sort_unstable();
    set.dedup();
    set
}

/// Lower estimate of `sup ||hess_x kernel||` over the domain, from an exact
/// Hessian maximized over sampled node pairs. Monotone in the sample set.
pub fn kernel_constant(group: &CarnotGroup, dom: &GridDomain) -> Result<f64> {
    kernel_constant_sampled(group, dom, &sample_nodes(dom, 48))
}

pub fn kernel_constant_sampled(
    group: &CarnotGroup,
    dom: &GridDomain,
    nodes: &[usize],
) -> Result<f64> {
    if dom.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: dom.dim() });
    }
    let n = group.dim();
    let coords: Vec<Vec<f64>> = nodes.iter().map(|&f| dom.coords(f)).collect();
    let best = coords
        .par_iter()
        .map(|x| {
            let mut local = 0.0f64;
            for y in &coords {
                let h = kernel_hessian_at(group, x, y);
                local = local.max(spectral_norm(&h));
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    let _ = n;
    Ok(best)
}

/// One row of the convergence table.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub sup_gap: f64,
    pub max_witness_displacement: f64,
    /// Nodewise `u_eps1 >= u_eps2` against the previous (larger) epsilon.
    pub monotone_vs_previous: bool,
    /// Modulus-of-continuity bound evaluated at the displacement estimate.
    pub modulus_bound: f64,
    pub bound_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub mode: ConvMode,
    pub r0: f64,
    pub displacement_constant: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Monotone envelope estimator of the modulus of continuity from node pairs.
struct ModulusEstimator {
    /// (distance, running max |du|), sorted by distance.
    envelope: Vec<(f64, f64)>,
}

impl ModulusEstimator {
    fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut run = 0.0f64;
        for p in &mut pairs {
            run = run.max(p.1);
            p.1 = run;
        }
        ModulusEstimator { envelope: pairs }
    }

    fn eval(&self, t: f64) -> f64 {
        // largest recorded distance <= t
        let mut lo = 0usize;
        let mut hi = self.envelope.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.envelope[mid].0 <= t {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == 0 {
            0.0
        } else {
            self.envelope[lo - 1].1
        }
    }
}

fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs the sup convolution for each epsilon (strictly decreasing) and
/// tabulates uniform gaps, witness displacements, nodewise monotonicity, and
/// the modulus-of-continuity bound on the gap.
pub fn convergence_report(
    group: &CarnotGroup,
    u: &GridField,
    epsilons: &[f64],
) -> Result<ConvergenceReport> {
    if epsilons.is_empty() {
        return Err(Error::InvalidInput("at least one epsilon is required".into()));
    }
    if epsilons.iter().any(|&e| e <= 0.0 || e.is_nan()) {
        return Err(Error::InvalidInput("epsilons must be > 0".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("epsilons must be strictly decreasing".into()));
    }
    let dom = &u.domain;
    let n = dom.dim();
    let len = dom.len();
    let r0 = u.max_abs();
    let step = group.step() as f64;

    let runs: Vec<ConvolutionResult> = epsilons
        .iter()
        .map(|&e| convolve(group, u, e, ConvMode::Sup))
        .collect::<Result<_>>()?;

    // Modulus pairs: a strided sample of node pairs plus every witness pair.
    let coords = all_coords(dom);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let sample = sample_nodes(dom, 64);
    for &i in &sample {
        for &j in &sample {
            if i < j {
                let d = euclid_dist(&coords[i * n..(i + 1) * n], &coords[j * n..(j + 1) * n]);
                pairs.push((d, (u.values[i] - u.values[j]).abs()));
            }
        }
    }
    for run in &runs {
        for (i, &w) in run.witnesses.iter().enumerate() {
            let d = euclid_dist(&coords[i * n..(i + 1) * n], &coords[w * n..(w + 1) * n]);
            pairs.push((d, (u.values[i] - u.values[w]).abs()));
        }
    }
    let modulus = ModulusEstimator::from_pairs(pairs);

    // Displacement scale: max over runs of displacement / (R0 eps)^(1/r).
    let disp_scale = |eps: f64| -> f64 {
        let base = r0 * eps;
        if base <= 0.0 {
            0.0
        } else {
            base.powf(1.0 / step)
        }
    };
    let mut max_disp = vec![0.0f64; runs.len()];
    for (ri, run) in runs.iter().enumerate() {
        for (i, &w) in run.witnesses.iter().enumerate() {
            let d = euclid_dist(&coords[i * n..(i + 1) * n], &coords[w * n..(w + 1) * n]);
            max_disp[ri] = max_disp[ri].max(d);
        }
    }
    let mut c_disp = 0.0f64;
    for (ri, &eps) in epsilons.iter().enumerate() {
        let s = disp_scale(eps);
        if s > 0.0 {
            c_disp = c_disp.max(max_disp[ri] / s);
        }
    }

    let mut rows = Vec::with_capacity(runs.len());
    for (ri, run) in runs.iter().enumerate() {
        let sup_gap = (0..len)
            .map(|i| run.field.values[i] - u.values[i])
            .fold(0.0f64, f64::max);
        let monotone = if ri == 0 {
            true
        } else {
            (0..len).all(|i| runs[ri - 1].field.values[i] >= run.field.values[i])
        };
        let bound = modulus.eval(c_disp * disp_scale(epsilons[ri]));
        rows.push(ConvergenceRow {
            epsilon: epsilons[ri],
            sup_gap,
            max_witness_displacement: max_disp[ri],
            monotone_vs_previous: monotone,
            modulus_bound: bound,
            bound_holds: sup_gap <= bound + 1e-12 * (1.0 + bound),
        });
    }
    Ok(ConvergenceReport { mode: ConvMode::Sup, r0, displacement_constant: c_disp, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::grid::sample;

    fn grid_1d(a: f64, b: f64, nodes: usize) -> GridDomain {
        GridDomain::new(vec![(a, b)], vec![nodes]).unwrap()
    }

    #[test]
    fn constant_field_is_fixed_point() {
        let g = CarnotGroup::euclidean(1);
        let dom = grid_1d(-1.0, 1.0, 21);
        let u = GridField::constant(dom, 4.0).unwrap();
        let r = convolve(&g, &u, 0.5, ConvMode::Sup).unwrap();
        assert!(r.field.values.iter().all(|&v| v == 4.0));
        // kernel >= 0 with equality at y = x, so every witness is its own node
        assert!(r.witnesses.iter().enumerate().all(|(i, &w)| w == i));
    }

    #[test]
    fn sup_convolution_matches_closed_form() {
        // u(y) = -y^2/2, eps = 1: maximizer y = x/2, value -x^2/4.
        let g = CarnotGroup::euclidean(1);
        let dom = grid_1d(-1.0, 1.0, 401);
        let u = sample(&parse("-x1^2/2").unwrap(), &g, &dom).unwrap();
        let r = convolve(&g, &u, 1.0, ConvMode::Sup).unwrap();
        let h = dom.spacing(0);
        for i in 0..dom.len() {
            let x = dom.coords(i)[0];
            assert!(
                (r.field.values[i] + x * x / 4.0).abs() <= 2.0 * h,
                "node {i}: {} vs {}",
                r.field.values[i],
                -x * x / 4.0
            );
        }
    }

    #[test]
    fn sup_dominates_input_exactly() {
        let g = CarnotGroup::heisenberg(1);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 3], vec![7, 7, 7]).unwrap();
        let u = sample(&parse("sin(3*x1)*x2 - x3").unwrap(), &g, &dom).unwrap();
        let r = convolve(&g, &u, 0.3, ConvMode::Sup).unwrap();
        for i in 0..dom.len() {
            assert!(r.field.values[i] >= u.values[i]);
        }
        let ri = convolve(&g, &u, 0.3, ConvMode::Inf).unwrap();
        for i in 0..dom.len() {
            assert!(ri.field.values[i] <= u.values[i]);
        }
    }

    #[test]
    fn duality_is_bit_exact() {
        let g = CarnotGroup::heisenberg(1);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 3], vec![5, 5, 5]).unwrap();
        let v = sample(&parse("x1*x2 + cos(x3)").unwrap(), &g, &dom).unwrap();
        let inf = convolve(&g, &v, 0.2, ConvMode::Inf).unwrap();
        let neg = GridField::new(dom.clone(), v.values.iter().map(|x| -x).collect()).unwrap();
        let sup = convolve(&g, &neg, 0.2, ConvMode::Sup).unwrap();
        for i in 0..dom.len() {
            assert_eq!(inf.field.values[i], -sup.field.values[i]);
            assert_eq!(inf.witnesses[i], sup.witnesses[i]);
        }
    }

    #[test]
    fn epsilon_monotonicity_is_exact() {
        let g = CarnotGroup::euclidean(2);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 2], vec![9, 9]).unwrap();
        let u = sample(&parse("abs(x1) - x2^2").unwrap(), &g, &dom).unwrap();
        let big = convolve(&g, &u, 0.4, ConvMode::Sup).unwrap();
        let small = convolve(&g, &u, 0.1, ConvMode::Sup).unwrap();
        for i in 0..dom.len() {
            assert!(small.field.values[i] <= big.field.values[i]);
        }
    }

    #[test]
    fn oracle_euclidean_brute_force_matches_bitwise() {
        // Independent textbook sup convolution with the squared Euclidean
        // distance; must agree node for node, bit for bit, on step-1 groups.
        let g = CarnotGroup::euclidean(1);
        let dom = grid_1d(-1.0, 1.0, 101);
        let u = sample(&parse("abs(x1) - x1^2").unwrap(), &g, &dom).unwrap();
        let eps = 0.35;
        let r = convolve(&g, &u, eps, ConvMode::Sup).unwrap();
        let xs: Vec<f64> = (0..dom.len()).map(|i| dom.coords(i)[0]).collect();
        for i in 0..dom.len() {
            let mut best = u.values[i];
            let mut wit = i;
            for j in 0..dom.len() {
                if j == i {
                    continue;
                }
                let d = xs[i] - xs[j];
                let cand = u.values[j] - d * d / (2.0 * eps);
                if cand > best || (cand == best && j < wit) {
                    best = cand;
                    wit = j;
                }
            }
            assert_eq!(r.field.values[i], best, "value at node {i}");
            assert_eq!(r.witnesses[i], wit, "witness at node {i}");
        }
    }

    #[test]
    fn shrink_domain_cases() {
        let g = CarnotGroup::euclidean(1);
        let dom = grid_1d(0.0, 1.0, 11);
        // radius 0: all interior nodes
        let mask = shrink_domain(&g, &dom, 0.0).unwrap();
        let kept: Vec<usize> = (0..11).filter(|&i| mask[i]).collect();
        assert_eq!(kept, (1..10).collect::<Vec<_>>());
        // radius 0.2: nodes in [0.2, 0.8]
        let mask = shrink_domain(&g, &dom, 0.2).unwrap();
        let kept: Vec<usize> = (0..11).filter(|&i| mask[i]).collect();
        assert_eq!(kept, (2..9).collect::<Vec<_>>());
        // radius beyond the diameter: empty
        let mask = shrink_domain(&g, &dom, 10.0).unwrap();
        assert!(mask.iter().all(|&b| !b));
    }

    #[test]
    fn certificate_on_quadratics() {
        let g = CarnotGroup::euclidean(2);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 2], vec![9, 9]).unwrap();
        let plus = sample(&parse("x1^2 + x2^2").unwrap(), &g, &dom).unwrap();
        assert!(semiconvexity_certificate(&plus, 0.0, 1e-8).unwrap().passed);
        let minus = sample(&parse("-(x1^2 + x2^2)").unwrap(), &g, &dom).unwrap();
        let fail = semiconvexity_certificate(&minus, 0.0, 1e-8).unwrap();
        assert!(!fail.passed);
        assert!((fail.worst_eigenvalue + 2.0).abs() < 1e-6);
        assert!(semiconvexity_certificate(&minus, 1.0, 1e-8).unwrap().passed);
    }

    #[test]
    fn convolved_field_is_certified_semiconvex() {
        let g = CarnotGroup::euclidean(2);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 2], vec![13, 13]).unwrap();
        let u = sample(&parse("abs(x1) + abs(x2) - x1^2").unwrap(), &g, &dom).unwrap();
        let eps = 0.25;
        let r = convolve(&g, &u, eps, ConvMode::Sup).unwrap();
        let c = r.kernel_constant / (2.0 * eps);
        let cert = semiconvexity_certificate(&r.field, c, 1e-8 * (1.0 + c)).unwrap();
        assert!(cert.passed, "worst eigenvalue {}", cert.worst_eigenvalue);
    }

    #[test]
    fn kernel_constant_euclidean_is_two() {
        let g = CarnotGroup::euclidean(2);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 2], vec![9, 9]).unwrap();
        let c = kernel_constant(&g, &dom).unwrap();
        assert_eq!(c, 2.0);
    }

    #[test]
    fn kernel_constant_monotone_in_samples() {
        let g = CarnotGroup::heisenberg(1);
        let dom = GridDomain::new(vec![(-1.0, 1.0); 3], vec![9, 9, 9]).unwrap();
        let few = sample_nodes(&dom, 8);
        let many: Vec<usize> = {
            let mut v = sample_nodes(&dom, 32);
            v.extend_from_slice(&few);
            v.sort_unstable();
            v.dedup();
            v
        };
        let c_few = kernel_constant_sampled(&g, &dom, &few).unwrap();
        let c_many = kernel_constant_sampled(&g, &dom, &many).unwrap();
        assert!(c_many >= c_few);
        assert!(c_few.is_finite() && c_few > 0.0);
    }

    #[test]
    fn kernel_constant_stable_under_refinement() {
        let g = CarnotGroup::heisenberg(1);
        let coarse = GridDomain::new(vec![(-1.0, 1.0); 3], vec![9, 9, 9]).unwrap();
        let fine = GridDomain::new(vec![(-1.0, 1.0); 3], vec![17, 17, 17]).unwrap();
        let a = kernel_constant(&g, &coarse).unwrap();
        let b = kernel_constant(&g, &fine).unwrap();
        assert!(a.is_finite() && a > 0.0);
        assert!((a - b).abs() <= 0.05 * a.max(b), "coarse {a} vs fine {b}");
    }

    #[test]
    fn degenerate_sample_set_is_harmless() {
        let g = CarnotGroup::euclidean(1);
        let dom = grid_1d(0.0, 1.0, 3);
        let c = kernel_constant_sampled(&g, &dom, &[1]).unwrap();
        assert!(c >= 0.0);
    }

    #[test]
    fn convergence_report_constant_field() {
        let g = CarnotGroup::euclidean(1);
        let dom = grid_1d(-1.0, 1.0, 41);
        let u = GridField::constant(dom, 2.5).unwrap();
        let rep = convergence_report(&g, &u, &[0.1, 0.05, 0.025]).unwrap();
        for row in &rep.rows {
            assert_eq!(row.sup_gap, 0.0);
            assert!(row.monotone_vs_previous);
            assert!(row.bound_holds);
        }
    }

    #[test]
    fn convergence_report_lipschitz_field() {
        let g = CarnotGroup::euclidean(1);
        let dom = grid_1d(-1.0, 1.0, 201);
        let u = sample(&parse("abs(x1)").unwrap(), &g, &dom).unwrap();
        let rep = convergence_report(&g, &u, &[0.1, 0.05, 0.025]).unwrap();
        for w in rep.rows.windows(2) {
            assert!(w[1].sup_gap <= w[0].sup_gap + 1e-15);
        }
        for row in &rep.rows {
            assert!(row.monotone_vs_previous);
            assert!(row.bound_holds, "gap {} bound {}", row.sup_gap, row.modulus_bound);
        }
        assert!(convergence_report(&g, &u, &[0.05, 0.1]).is_err());
    }
}
