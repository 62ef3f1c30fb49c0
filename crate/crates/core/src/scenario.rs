//! JSON scenario configs and the runners behind the CLI subcommands.
//!
//! One config file describes one scenario: a group, a grid, an operator,
//! field expressions, and numeric parameters. The runners return
//! serializable reports plus optional CSV dumps; writing files is left to
//! the front end so the same entry points serve the CLI and the Python
//! bindings. All randomness flows from the config seed, and reports are
//! byte-identical across runs with equal configs.

use crate::comparison::{
    classify_classical, run_comparison_full, ComparisonOptions, ComparisonReport,
    PhiClassification, SolutionKind,
};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::grid::{sample, GridDomain, GridField};
use crate::group::{CarnotGroup, GroupSpecJson, Point};
use crate::operators::{
    check_structure, perturb_supersolution, NonlinearOperator, StructureFlags, StructureReport,
};
use crate::transforms::{convergence_report, convolve, ConvMode, ConvergenceReport};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GroupRef {
    Name(String),
    Inline(GroupSpecJson),
}

impl GroupRef {
    pub fn resolve(&self) -> Result<CarnotGroup> {
        match self {
            GroupRef::Name(name) => CarnotGroup::by_name(name),
            GroupRef::Inline(spec) => CarnotGroup::from_spec(spec),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
pub struct DomainConfig {
    pub intervals: Vec<(f64, f64)>,
    pub nodes: Vec<usize>,
}

impl DomainConfig {
    pub fn build(&self) -> Result<GridDomain> {
        GridDomain::new(self.intervals.clone(), self.nodes.clone())
    }
}

/// Operator reference: `{"op":"trace_minus_u","c":1.0}`,
/// `{"op":"infinity_sublap","c":1.0}`,
/// `{"op":"pucci","lambda":1.0,"Lambda":2.0,"c":1.0}`, or
/// `{"op":"expr","m":2,"expr":"...","declare":{...}}` with the expression
/// over `(r, p_1..p_m, M_11..M_mm)` flattened to `x1..x{1+m+m^2}`.
#[derive(Clone, Debug, Deserialize)]
pub struct OperatorConfig {
    pub op: String,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default, rename = "Lambda")]
    pub lambda_big: Option<f64>,
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub declare: Option<StructureFlags>,
    #[serde(default)]
    pub alpha1: Option<f64>,
    #[serde(default)]
    pub alpha2: Option<f64>,
    #[serde(default)]
    pub alpha3: Option<f64>,
}

impl OperatorConfig {
    pub fn build(&self) -> Result<NonlinearOperator> {
        match self.op.as_str() {
            "trace_minus_u" => NonlinearOperator::trace_minus(self.c.unwrap_or(1.0)),
            "infinity_sublap" => NonlinearOperator::infinity_sublap(self.c.unwrap_or(1.0)),
            "pucci" => NonlinearOperator::pucci_minus(
                self.lambda.unwrap_or(1.0),
                self.lambda_big.unwrap_or(1.0),
                self.c.unwrap_or(1.0),
            ),
            "expr" => {
                let text = self.expr.as_deref().ok_or_else(|| {
                    Error::InvalidInput("operator `expr` requires an `expr` string".into())
                })?;
                let m = self.m.ok_or_else(|| {
                    Error::InvalidInput("operator `expr` requires the dimension `m`".into())
                })?;
                NonlinearOperator::from_expr(
                    parse(text)?,
                    m,
                    self.declare.unwrap_or_default(),
                    self.alpha1,
                    self.alpha2,
                    self.alpha3,
                )
            }
            other => Err(Error::InvalidInput(format!("unknown operator `{other}`"))),
        }
    }
}

/// One scenario: group + domain + operator + fields + parameters.
#[derive(Clone, Debug, Deserialize)]
pub struct ScenarioConfig {
    pub group: GroupRef,
    pub domain: DomainConfig,
    #[serde(default)]
    pub operator: Option<OperatorConfig>,
    #[serde(default)]
    pub u: Option<String>,
    #[serde(default)]
    pub v: Option<String>,
    /// Optional C^2 test field, classified classically against the operator
    /// and attached to compare reports.
    #[serde(default)]
    pub phi: Option<String>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Diagnostic override of the discrete hypothesis-check slack; loosening
    /// it drives violating inputs into the deep pipeline stages.
    #[serde(default)]
    pub classify_slack: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("bad scenario config: {e}")))
    }

    fn field(&self, which: &str) -> Result<Expr> {
        let text = match which {
            "u" => self.u.as_deref(),
            _ => self.v.as_deref(),
        }
        .ok_or_else(|| Error::InvalidInput(format!("scenario is missing field `{which}`")))?;
        parse(text)
    }
}

// ---------------------------------------------------------------------------
// CSV export
// ---------------------------------------------------------------------------

/// CSV dump of a field: header `x1,..,xn,value[,witness]`, one row per node
/// in flat (row-major) order.
pub fn field_to_csv(field: &GridField, witnesses: Option<&[usize]>) -> String {
    let n = field.domain.dim();
    let mut out = String::new();
    for k in 0..n {
        out.push_str(&format!("x{},", k + 1));
    }
    out.push_str("value");
    if witnesses.is_some() {
        out.push_str(",witness");
    }
    out.push('\n');
    for flat in 0..field.domain.len() {
        for c in field.domain.coords(flat) {
            out.push_str(&format!("{c},"));
        }
        out.push_str(&format!("{}", field.values[flat]));
        if let Some(w) = witnesses {
            out.push_str(&format!(",{}", w[flat]));
        }
        out.push('\n');
    }
    out
}

/// Coefficient matrix rows at a point, for debugging exports.
pub fn coefficient_csv(group: &CarnotGroup, x: &Point) -> Result<String> {
    let c = crate::calculus::coefficient_matrix(group, x)?;
    let mut out = String::new();
    for l in 0..c.a.nrows() {
        let row: Vec<String> = (0..c.a.ncols()).map(|k| format!("{}", c.a[(l, k)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// group-check
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct GroupCheck {
    pub name: String,
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupCheckReport {
    pub group: String,
    pub samples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub checks: Vec<GroupCheck>,
    pub pass: bool,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs() + b.abs())
}

fn max_abs_diff(a: &Point, b: &Point) -> f64 {
    a.coords
        .iter()
        .zip(&b.coords)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Point {
    Point::new((0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
}

/// Seeded sampling of the group laws: associativity, the inverse law, left
/// invariance of the distance, and dilation homogeneity.
pub fn run_group_check(group: &CarnotGroup, samples: usize, seed: u64) -> Result<GroupCheckReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be >= 1".into()));
    }
    let threshold = 1e-9;
    let n = group.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assoc = 0.0f64;
    let mut inverse = 0.0f64;
    let mut invariance = 0.0f64;
    let mut homo = [0.0f64; 3];
    let lambdas = [0.5, 2.0, 10.0];
    for _ in 0..samples {
        let p = random_point(&mut rng, n);
        let q = random_point(&mut rng, n);
        let z = random_point(&mut rng, n);

        let pq_z = group.multiply(&group.multiply(&p, &q)?, &z)?;
        let p_qz = group.multiply(&p, &group.multiply(&q, &z)?)?;
        let scale = 1.0
            + pq_z.coords.iter().fold(0.0f64, |m, c| m.max(c.abs()))
            + p_qz.coords.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        assoc = assoc.max(max_abs_diff(&pq_z, &p_qz) / scale);

        let back = group.multiply(&p, &group.inverse(&p)?)?;
        inverse = inverse.max(
            back.coords.iter().fold(0.0f64, |m, c| m.max(c.abs()))
                / (1.0 + p.coords.iter().fold(0.0f64, |m, c| m.max(c.abs()))),
        );

        let d = group.distance(&p, &q)?;
        let dz = group.distance(&group.multiply(&z, &p)?, &group.multiply(&z, &q)?)?;
        invariance = invariance.max(rel_err(d, dz));

        for (i, &lam) in lambdas.iter().enumerate() {
            let dl = group.distance(&group.dilate(lam, &p)?, &group.dilate(lam, &q)?)?;
            homo[i] = homo[i].max(rel_err(dl, lam * d));
        }
    }
    let mut checks = vec![
        GroupCheck { name: "associativity".into(), max_error: assoc, pass: assoc <= threshold },
        GroupCheck { name: "inverse_law".into(), max_error: inverse, pass: inverse <= threshold },
        GroupCheck {
            name: "left_invariance".into(),
            max_error: invariance,
            pass: invariance <= threshold,
        },
    ];
    for (i, &lam) in lambdas.iter().enumerate() {
        checks.push(GroupCheck {
            name: format!("homogeneity_{lam}"),
            max_error: homo[i],
            pass: homo[i] <= threshold,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(GroupCheckReport {
        group: group.name().to_string(),
        samples,
        seed,
        threshold,
        checks,
        pass,
    })
}

// ---------------------------------------------------------------------------
// convolve / perturb / structure-check / compare
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct ConvolveOutput {
    pub report: ConvergenceReport,
    /// (suggested file name, CSV body) per epsilon.
    pub csvs: Vec<(String, String)>,
}

pub fn run_convolve(config: &ScenarioConfig) -> Result<ConvolveOutput> {
    let group = config.group.resolve()?;
    let dom = config.domain.build()?;
    let u_expr = config.field("u")?;
    let u = sample(&u_expr, &group, &dom)?;
    let epsilons: Vec<f64> = match (&config.epsilons, config.epsilon) {
        (Some(list), _) => list.clone(),
        (None, Some(e)) => vec![e],
        (None, None) => {
            return Err(Error::InvalidInput("convolve needs `epsilon` or `epsilons`".into()))
        }
    };
    let mode = match config.mode.as_deref().unwrap_or("sup") {
        "sup" => ConvMode::Sup,
        "inf" => ConvMode::Inf,
        other => return Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
    };
    let report = convergence_report(&group, &u, &epsilons)?;
    let mut csvs = Vec::new();
    for (i, &eps) in epsilons.iter().enumerate() {
        let run = convolve(&group, &u, eps, mode)?;
        csvs.push((
            format!("field_eps{i}.csv"),
            field_to_csv(&run.field, Some(&run.witnesses)),
        ));
    }
    Ok(ConvolveOutput { report, csvs })
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbReport {
    pub group: String,
    pub operator: String,
    pub delta: f64,
    pub k: f64,
    pub c_delta: f64,
    pub c1: f64,
    pub case: u8,
    pub bounds_hold: bool,
}

#[derive(Debug)]
pub struct PerturbOutput {
    pub report: PerturbReport,
    pub csvs: Vec<(String, String)>,
}

pub fn run_perturb(config: &ScenarioConfig) -> Result<PerturbOutput> {
    let group = config.group.resolve()?;
    let dom = config.domain.build()?;
    let v_expr = config.field("v")?;
    let v = sample(&v_expr, &group, &dom)?;
    let op = config
        .operator
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("perturb needs an operator".into()))?
        .build()?;
    let delta = config.delta.unwrap_or(0.1);
    let res = perturb_supersolution(&group, &v, delta, &op)?;
    let bounds_hold = (0..v.len()).all(|i| {
        v.values[i] <= res.v_delta.values[i] && res.v_delta.values[i] <= v.values[i] + delta
    });
    let report = PerturbReport {
        group: group.name().to_string(),
        operator: op.name().to_string(),
        delta,
        k: res.k,
        c_delta: res.c_delta,
        c1: res.c1,
        case: res.case,
        bounds_hold,
    };
    let csvs = vec![
        ("v_delta.csv".to_string(), field_to_csv(&res.v_delta, None)),
        ("alpha.csv".to_string(), field_to_csv(&res.alpha_field, None)),
    ];
    Ok(PerturbOutput { report, csvs })
}

pub fn run_structure_check(config: &ScenarioConfig) -> Result<StructureReport> {
    let group = config.group.resolve()?;
    let op = config
        .operator
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("structure-check needs an operator".into()))?
        .build()?;
    let m = op.fixed_dim().unwrap_or(group.horizontal_dim());
    check_structure(&op, m, config.samples.unwrap_or(200), config.seed.unwrap_or(0))
}

#[derive(Debug)]
pub struct CompareOutput {
    pub report: ComparisonReport,
    pub csvs: Vec<(String, String)>,
}

pub fn run_compare(config: &ScenarioConfig) -> Result<CompareOutput> {
    let group = config.group.resolve()?;
    let dom = config.domain.build()?;
    let op = config
        .operator
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("compare needs an operator".into()))?
        .build()?;
    let u_expr = config.field("u")?;
    let v_expr = config.field("v")?;
    let u = sample(&u_expr, &group, &dom)?;
    let v = sample(&v_expr, &group, &dom)?;
    let delta = config.delta.unwrap_or(0.05);
    let opts = ComparisonOptions {
        delta,
        epsilon: config.epsilon.unwrap_or(delta / 2.0),
        tol: config.tol.unwrap_or(1e-9),
        seed: config.seed.unwrap_or(0),
        classify_slack: config.classify_slack,
        structure_samples: config.samples.unwrap_or(200),
        u_expr: Some(u_expr),
        v_expr: Some(v_expr),
    };
    let (mut report, fields) = run_comparison_full(&group, &op, &u, &v, &opts)?;
    if let Some(phi_text) = &config.phi {
        let phi = parse(phi_text)?;
        report.phi_classification = Some(PhiClassification {
            sub: classify_classical(&group, &op, &phi, &dom, SolutionKind::Sub)?,
            supersolution: classify_classical(&group, &op, &phi, &dom, SolutionKind::Super)?,
        });
    }
    let mut csvs = Vec::new();
    if let Some(f) = fields {
        csvs.push(("u_eps.csv".to_string(), field_to_csv(&f.u_eps, Some(&f.u_eps_witnesses))));
        csvs.push((
            "v_delta_eps.csv".to_string(),
            field_to_csv(&f.v_delta_eps, Some(&f.v_delta_eps_witnesses)),
        ));
        csvs.push(("difference.csv".to_string(), field_to_csv(&f.difference, None)));
    }
    Ok(CompareOutput { report, csvs })
}
