//! Batch experiments driven by a JSON configuration: the engine behind
//! `capcli`. Each run yields a report, CSV rows and an optional plot, all
//! deterministic functions of the configuration.

mod output;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::capacity::{compact_capacity, point_capacity_decay, Exhaustion};
use crate::conformal::{ConformalFactor, ConformalStructure};
use crate::error::{arg_err, CapError, Result};
use crate::ferrand::{classify, continuum_capacity, estimate_mu, triangle_check, PathContinuum, SearchConfig, Verdict};
use crate::mesh::{build_mesh, dist, DomainSpec, NodeSet, SimplicialMesh};
use crate::oracle::{convergence_order, radial_capacity, RadialCondenserSpec};
use crate::solver::{CapacityResult, CapacitySolver, Condenser, SolverConfig};

pub use output::{render_csv, render_svg, write_atomic, Plot, Series};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Experiment kinds, in CLI spelling.
pub const KINDS: [&str; 7] = [
    "capacity",
    "compact_capacity",
    "point_decay",
    "mu",
    "triangle",
    "classify",
    "converge",
];

/// Named primitive shapes selecting mesh vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// Closed ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// `inner <= |x - center| <= outer`.
    Shell { center: Vec<f64>, inner: f64, outer: f64 },
    /// Points within `radius` of the segment `[a, b]`.
    SegmentTube { a: Vec<f64>, b: Vec<f64>, radius: f64 },
    /// Axis-aligned closed box.
    Box { min: Vec<f64>, max: Vec<f64> },
    /// The vertex nearest to `at`.
    Point { at: Vec<f64> },
    /// All boundary vertices of the mesh.
    Boundary,
}

impl Region {
    pub fn select(&self, mesh: &SimplicialMesh) -> NodeSet {
        const SLACK: f64 = 1e-9;
        match self {
            Region::Ball { center, radius } => mesh.select(|p| dist(p, center) <= radius * (1.0 + SLACK)),
            Region::Shell { center, inner, outer } => mesh.select(|p| {
                let r = dist(p, center);
                r >= inner * (1.0 - SLACK) && r <= outer * (1.0 + SLACK)
            }),
            Region::SegmentTube { a, b, radius } => {
                let len = dist(a, b);
                mesh.select(|p| segment_distance(p, a, b) <= radius + SLACK * len.max(*radius))
            }
            Region::Box { min, max } => mesh.select(|p| {
                p.iter()
                    .zip(min.iter().zip(max))
                    .all(|(x, (lo, hi))| *x >= lo - SLACK && *x <= hi + SLACK)
            }),
            Region::Point { at } => std::iter::once(mesh.nearest_vertex(at)).collect(),
            Region::Boundary => mesh.boundary_nodes().clone(),
        }
    }

    /// Points that must lie in the domain for the shape to make sense.
    /// Ball and shell centers may sit in an excised hole.
    fn anchors(&self) -> Vec<&[f64]> {
        match self {
            Region::SegmentTube { a, b, .. } => vec![a, b],
            Region::Point { at } => vec![at],
            Region::Ball { .. } | Region::Shell { .. } | Region::Box { .. } | Region::Boundary => vec![],
        }
    }
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 > 0.0 {
        (ap.iter().zip(&ab).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q: Vec<f64> = a.iter().zip(&ab).map(|(x, v)| x + t * v).collect();
    dist(p, &q)
}

/// Closed-form reference value for a capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    Value {
        value: f64,
    },
    /// Concentric spherical ring in the mesh dimension.
    Radial {
        r_inner: f64,
        r_outer: f64,
    },
}

impl Reference {
    pub fn resolve(&self, n: usize) -> Result<f64> {
        match self {
            Reference::Value { value } => Ok(*value),
            Reference::Radial { r_inner, r_outer } => {
                Ok(radial_capacity(&RadialCondenserSpec::new(n, *r_inner, *r_outer)?))
            }
        }
    }
}

fn default_rel_tolerance() -> f64 {
    0.01
}
fn default_exponent_tolerance() -> f64 {
    0.1
}
fn default_budget() -> usize {
    SearchConfig::default().budget
}
fn default_levels() -> usize {
    3
}
fn default_min_order() -> f64 {
    0.9
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// One condenser on one mesh.
    Capacity {
        domain: DomainSpec,
        plate0: Region,
        plate1: Region,
        #[serde(default)]
        reference: Option<Reference>,
        #[serde(default = "default_rel_tolerance")]
        rel_tolerance: f64,
    },
    /// Capacity of a compact set over an exhaustion by balls.
    CompactCapacity {
        domain: DomainSpec,
        center: Vec<f64>,
        radii: Vec<f64>,
        compact: Region,
    },
    /// Shrinking balls around a point inside a fixed outer sphere.
    PointDecay {
        domain: DomainSpec,
        center: Vec<f64>,
        radii: Vec<f64>,
        outer_radius: f64,
        #[serde(default = "default_exponent_tolerance")]
        exponent_tolerance: f64,
    },
    /// Ferrand estimates for pairs of points (snapped to vertices).
    Mu {
        domain: DomainSpec,
        pairs: Vec<[Vec<f64>; 2]>,
        #[serde(default = "default_budget")]
        budget: usize,
    },
    /// Triangle inequality on seeded random vertex triples.
    Triangle {
        domain: DomainSpec,
        triples: usize,
        #[serde(default)]
        region: Option<Region>,
        #[serde(default = "default_budget")]
        budget: usize,
    },
    /// Class I / II evidence from a probe segment over an exhaustion.
    Classify {
        domain: DomainSpec,
        center: Vec<f64>,
        radii: Vec<f64>,
        probe: [Vec<f64>; 2],
        #[serde(default)]
        expect: Option<Verdict>,
    },
    /// Observed convergence order under halving of the edge length.
    Converge {
        domain: DomainSpec,
        plate0: Region,
        plate1: Region,
        reference: Reference,
        #[serde(default = "default_levels")]
        levels: usize,
        #[serde(default = "default_min_order")]
        min_order: f64,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Capacity { .. } => "capacity",
            Experiment::CompactCapacity { .. } => "compact_capacity",
            Experiment::PointDecay { .. } => "point_decay",
            Experiment::Mu { .. } => "mu",
            Experiment::Triangle { .. } => "triangle",
            Experiment::Classify { .. } => "classify",
            Experiment::Converge { .. } => "converge",
        }
    }

    fn domain(&self) -> &DomainSpec {
        match self {
            Experiment::Capacity { domain, .. }
            | Experiment::CompactCapacity { domain, .. }
            | Experiment::PointDecay { domain, .. }
            | Experiment::Mu { domain, .. }
            | Experiment::Triangle { domain, .. }
            | Experiment::Classify { domain, .. }
            | Experiment::Converge { domain, .. } => domain,
        }
    }

    fn is_stochastic(&self) -> bool {
        matches!(self, Experiment::Mu { .. } | Experiment::Triangle { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Seed of every stochastic component; required for `mu` and `triangle`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub conformal: ConformalFactor,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_true")]
    pub plots: bool,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    /// Parses JSON; errors carry the line and column of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CapError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.experiment.is_stochastic() && self.seed.is_none() {
            return arg_err(format!(
                "experiment `{}` is stochastic and needs a seed (config field `seed` or --seed)",
                self.experiment.kind()
            ));
        }
        let domain = &self.experiment.domain().domain;
        let inside = |what: &str, p: &[f64]| -> Result<()> {
            if domain.contains(p) {
                Ok(())
            } else {
                arg_err(format!("{what}: point {p:?} lies outside the domain"))
            }
        };
        let check_region =
            |what: &str, r: &Region| -> Result<()> { r.anchors().into_iter().try_for_each(|p| inside(what, p)) };
        match &self.experiment {
            Experiment::Capacity { plate0, plate1, .. } | Experiment::Converge { plate0, plate1, .. } => {
                check_region("experiment.plate0", plate0)?;
                check_region("experiment.plate1", plate1)?;
            }
            Experiment::CompactCapacity { compact, .. } => check_region("experiment.compact", compact)?,
            Experiment::PointDecay { center, .. } => inside("experiment.center", center)?,
            Experiment::Mu { pairs, .. } => {
                for pair in pairs {
                    inside("experiment.pairs", &pair[0])?;
                    inside("experiment.pairs", &pair[1])?;
                }
            }
            Experiment::Triangle { region, .. } => {
                if let Some(r) = region {
                    check_region("experiment.region", r)?;
                }
            }
            Experiment::Classify { probe, .. } => {
                inside("experiment.probe", &probe[0])?;
                inside("experiment.probe", &probe[1])?;
            }
        }
        Ok(())
    }
}

/// A named pass/fail property of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// One line of the CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub case: String,
    pub n: usize,
    pub epsilon_final: f64,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub admissible: bool,
}

impl Row {
    fn from_result(case: impl Into<String>, n: usize, r: &CapacityResult) -> Self {
        Row {
            case: case.into(),
            n,
            epsilon_final: r.final_epsilon(),
            value: r.value,
            iterations: r.iterations(),
            grad_norm: r.final_gradient_norm(),
            admissible: r.admissible,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub results: Value,
}

/// Everything a run produces, ready to be rendered.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub rows: Vec<Row>,
    pub plot: Option<Plot>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.passed
    }

    pub fn json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn csv(&self) -> String {
        render_csv(&self.rows)
    }

    pub fn svg(&self) -> Option<String> {
        self.plot.as_ref().map(render_svg)
    }

    /// Writes `<kind>.json`, `<kind>.csv` and, when plotted, `<kind>.svg`.
    pub fn write_to(&self, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let kind = &self.report.kind;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> Result<()> {
            let path = dir.join(name);
            write_atomic(&path, body.as_bytes())?;
            written.push(path);
            Ok(())
        };
        put(format!("{kind}.json"), self.json())?;
        put(format!("{kind}.csv"), self.csv())?;
        if let Some(svg) = self.svg() {
            put(format!("{kind}.svg"), svg)?;
        }
        Ok(written)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn converged_check(results: &[(&str, &CapacityResult)]) -> Check {
    let failed: Vec<String> = results
        .iter()
        .filter(|(_, r)| !r.converged())
        .map(|(case, r)| {
            let stages: Vec<String> = r
                .stages
                .iter()
                .map(|s| {
                    format!(
                        "eps={:e} iterations={} grad_norm={:e} converged={}",
                        s.epsilon, s.iterations, s.final_gradient_norm, s.converged
                    )
                })
                .collect();
            format!("{case}: [{}]", stages.join("; "))
        })
        .collect();
    if failed.is_empty() {
        Check::new("solver_converged", true, format!("{} solves converged", results.len()))
    } else {
        Check::new("solver_converged", false, failed.join(" | "))
    }
}

fn admissible_check(results: &[(&str, &CapacityResult)]) -> Check {
    let bad: Vec<&str> = results.iter().filter(|(_, r)| !r.admissible).map(|(c, _)| *c).collect();
    Check::new(
        "witness_admissible",
        bad.is_empty(),
        if bad.is_empty() {
            "all witnesses admissible".to_string()
        } else {
            format!("inadmissible: {}", bad.join(", "))
        },
    )
}

fn nonempty(set: NodeSet, field: &str) -> Result<NodeSet> {
    if set.is_empty() {
        arg_err(format!("{field} selects no mesh vertices"))
    } else {
        Ok(set)
    }
}

/// Runs the configured experiment. `Err` means the configuration could not
/// be executed; failed properties are reported through `Outcome::passed`.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    let structure = ConformalStructure::from_factor(&config.conformal);
    let solver = &config.solver;
    let seed = config.seed.unwrap_or(0);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut plot = None;

    let results = match &config.experiment {
        Experiment::Capacity {
            domain,
            plate0,
            plate1,
            reference,
            rel_tolerance,
        } => {
            let mesh = build_mesh(domain)?;
            let n = mesh.dim();
            let condenser = Condenser::new(
                nonempty(plate0.select(&mesh), "experiment.plate0")?,
                nonempty(plate1.select(&mesh), "experiment.plate1")?,
            )?;
            let result = CapacitySolver::new(&mesh, &structure, solver)?.solve(&condenser, None)?;
            checks.push(converged_check(&[("capacity", &result)]));
            checks.push(admissible_check(&[("capacity", &result)]));
            let reference_value = reference.as_ref().map(|r| r.resolve(n)).transpose()?;
            if let Some(exact) = reference_value {
                let rel = (result.value - exact).abs() / exact.abs();
                checks.push(Check::new(
                    "reference",
                    rel <= *rel_tolerance,
                    format!(
                        "value {:.10} reference {:.10} relative error {rel:.3e} tolerance {rel_tolerance}",
                        result.value, exact
                    ),
                ));
            }
            rows.push(Row::from_result("capacity", n, &result));
            serde_json::json!({
                "mesh": mesh_summary(&mesh),
                "reference": reference_value,
                "result": to_value(&result),
            })
        }
        Experiment::CompactCapacity {
            domain,
            center,
            radii,
            compact,
        } => {
            let mesh = build_mesh(domain)?;
            let n = mesh.dim();
            let k = nonempty(compact.select(&mesh), "experiment.compact")?;
            let family = Exhaustion::new(mesh, center.clone(), radii.clone())?;
            let report = compact_capacity(&family, &structure, &k, solver)?;
            let named: Vec<(String, &CapacityResult)> = report
                .stages
                .iter()
                .map(|s| (format!("R={}", s.radius), &s.result))
                .collect();
            let refs: Vec<(&str, &CapacityResult)> = named.iter().map(|(c, r)| (c.as_str(), *r)).collect();
            checks.push(converged_check(&refs));
            checks.push(admissible_check(&refs));
            checks.push(Check::new(
                "monotone_decrease",
                report.monotone,
                format!("values {:?}", report.values()),
            ));
            for (case, r) in &named {
                rows.push(Row::from_result(case.clone(), n, r));
            }
            plot = Some(Plot::single(
                "compact-set capacity over the exhaustion",
                "R",
                "capacity",
                true,
                report.samples(),
            ));
            serde_json::json!({
                "base_mesh": mesh_summary(family.base()),
                "report": to_value(&report),
            })
        }
        Experiment::PointDecay {
            domain,
            center,
            radii,
            outer_radius,
            exponent_tolerance,
        } => {
            let mesh = build_mesh(domain)?;
            let n = mesh.dim();
            let report = point_capacity_decay(&mesh, &structure, center, radii, *outer_radius, solver)?;
            let target = -((n - 1) as f64);
            checks.push(Check::new(
                "all_converged",
                report.samples.iter().all(|s| s.converged),
                format!("{} radii", report.samples.len()),
            ));
            checks.push(Check::new(
                "strictly_decreasing",
                report.strictly_decreasing,
                format!(
                    "capacities {:?}",
                    report.samples.iter().map(|s| s.capacity).collect::<Vec<_>>()
                ),
            ));
            checks.push(Check::new(
                "decay_exponent",
                (report.exponent - target).abs() <= exponent_tolerance * target.abs(),
                format!(
                    "exponent {:.6} expected {target} within {exponent_tolerance}",
                    report.exponent
                ),
            ));
            for s in &report.samples {
                rows.push(Row {
                    case: format!("r={}", s.radius),
                    n,
                    epsilon_final: solver.epsilon_schedule.last().copied().unwrap_or(0.0),
                    value: s.capacity,
                    iterations: 0,
                    grad_norm: f64::NAN,
                    admissible: true,
                });
            }
            plot = Some(Plot::single(
                "point capacity of shrinking balls",
                "r",
                "capacity",
                true,
                report.samples.iter().map(|s| (s.radius, s.capacity)).collect(),
            ));
            serde_json::json!({ "mesh": mesh_summary(&mesh), "report": to_value(&report) })
        }
        Experiment::Mu { domain, pairs, budget } => {
            let mesh = build_mesh(domain)?;
            let n = mesh.dim();
            let search = SearchConfig { budget: *budget, seed };
            let mut estimates = Vec::new();
            let mut symmetric = true;
            let mut checkable = true;
            let mut finite = true;
            let mut detail = Vec::new();
            for pair in pairs {
                let x = mesh.nearest_vertex(&pair[0]);
                let y = mesh.nearest_vertex(&pair[1]);
                let xy = estimate_mu(&mesh, &structure, x, y, solver, &search)?;
                let yx = estimate_mu(&mesh, &structure, y, x, solver, &search)?;
                let again = continuum_capacity(&mesh, &structure, &xy.witness, mesh.boundary_nodes(), solver)?;
                finite &= xy.value.is_finite();
                symmetric &= (xy.value - yx.value).abs() <= 2.0 * solver.value_tolerance;
                checkable &= (again.value - xy.value).abs() <= solver.value_tolerance;
                detail.push(format!("mu({x},{y})={:.10}", xy.value));
                rows.push(Row::from_result(format!("mu:{x}-{y}"), n, &xy.capacity_result));
                estimates.push(xy);
            }
            checks.push(Check::new("finite", finite, detail.join(" ")));
            checks.push(Check::new("symmetric", symmetric, "swap within 2*value_tolerance"));
            checks.push(Check::new(
                "witness_checkable",
                checkable,
                "re-solve within value_tolerance",
            ));
            let refs: Vec<(&str, &CapacityResult)> = estimates.iter().map(|e| ("mu", &e.capacity_result)).collect();
            checks.push(converged_check(&refs));
            serde_json::json!({ "mesh": mesh_summary(&mesh), "estimates": to_value(&estimates) })
        }
        Experiment::Triangle {
            domain,
            triples,
            region,
            budget,
        } => {
            let mesh = build_mesh(domain)?;
            let n = mesh.dim();
            let search = SearchConfig { budget: *budget, seed };
            let pool: Vec<usize> = match region {
                Some(r) => r.select(&mesh).iter().collect(),
                None => (0..mesh.num_vertices()).collect(),
            };
            let pool: Vec<usize> = pool
                .into_iter()
                .filter(|&v| !mesh.boundary_nodes().contains(v))
                .collect();
            if pool.len() < 3 {
                return arg_err("experiment.region holds fewer than three interior vertices");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut outcomes = Vec::new();
            let mut failures = Vec::new();
            for t in 0..*triples {
                let picked: Vec<usize> = pool.choose_multiple(&mut rng, 3).copied().collect();
                let (x, y, z) = (picked[0], picked[1], picked[2]);
                let check = triangle_check(&mesh, &structure, (x, y, z), solver, &search)?;
                if !check.holds {
                    failures.push(format!("({x},{y},{z})"));
                }
                rows.push(Row::from_result(format!("t{t}:xy"), n, &check.mu_xy.capacity_result));
                rows.push(Row::from_result(format!("t{t}:yz"), n, &check.mu_yz.capacity_result));
                rows.push(Row::from_result(format!("t{t}:xz"), n, &check.mu_xz.capacity_result));
                outcomes.push(check);
            }
            checks.push(Check::new(
                "triangle_inequality",
                failures.is_empty(),
                if failures.is_empty() {
                    format!("{} triples hold", outcomes.len())
                } else {
                    format!("violated on {}", failures.join(" "))
                },
            ));
            let refs: Vec<(&str, &CapacityResult)> = outcomes
                .iter()
                .flat_map(|c| [&c.mu_xy, &c.mu_yz, &c.mu_xz])
                .map(|e| ("triangle", &e.capacity_result))
                .collect();
            checks.push(converged_check(&refs));
            serde_json::json!({ "mesh": mesh_summary(&mesh), "checks": to_value(&outcomes) })
        }
        Experiment::Classify {
            domain,
            center,
            radii,
            probe,
            expect,
        } => {
            let mesh = build_mesh(domain)?;
            let n = mesh.dim();
            let path = PathContinuum::between_points(&mesh, &probe[0], &probe[1])?;
            let family = Exhaustion::new(mesh, center.clone(), radii.clone())?;
            let report = classify(&family, &structure, &path, solver)?;
            checks.push(Check::new(
                "solver_converged",
                report.converged,
                "all exhaustion stages",
            ));
            if let Some(v) = expect {
                checks.push(Check::new(
                    "verdict",
                    report.verdict == *v,
                    format!("verdict {:?} expected {:?}", report.verdict, v),
                ));
            }
            for &(r, c) in &report.capacity_sequence {
                rows.push(Row {
                    case: format!("R={r}"),
                    n,
                    epsilon_final: solver.epsilon_schedule.last().copied().unwrap_or(0.0),
                    value: c,
                    iterations: 0,
                    grad_norm: f64::NAN,
                    admissible: true,
                });
            }
            let fit = report.fit.clone();
            let fitted: Vec<(f64, f64)> = report
                .capacity_sequence
                .iter()
                .map(|&(r, _)| {
                    (
                        r,
                        fit.limit + fit.amplitude * (r.ln() + fit.offset).powf(1.0 - n as f64),
                    )
                })
                .collect();
            plot = Some(Plot {
                title: "probe capacity over the exhaustion".into(),
                x_label: "R".into(),
                y_label: "capacity".into(),
                log_x: true,
                series: vec![
                    Series {
                        label: "computed".into(),
                        points: report.capacity_sequence.clone(),
                    },
                    Series {
                        label: "decay fit".into(),
                        points: fitted,
                    },
                ],
            });
            serde_json::json!({
                "base_mesh": mesh_summary(family.base()),
                "probe": to_value(&path),
                "report": to_value(&report),
            })
        }
        Experiment::Converge {
            domain,
            plate0,
            plate1,
            reference,
            levels,
            min_order,
        } => {
            if *levels < 3 {
                return arg_err("experiment.levels must be at least 3");
            }
            let mut samples = Vec::new();
            let mut results = Vec::new();
            let mut n = 0;
            for level in 0..*levels {
                let mut spec = domain.clone();
                spec.target_edge_length /= f64::powi(2.0, level as i32);
                let mesh = build_mesh(&spec)?;
                n = mesh.dim();
                let condenser = Condenser::new(
                    nonempty(plate0.select(&mesh), "experiment.plate0")?,
                    nonempty(plate1.select(&mesh), "experiment.plate1")?,
                )?;
                let result = CapacitySolver::new(&mesh, &structure, solver)?.solve(&condenser, None)?;
                rows.push(Row::from_result(format!("h={}", spec.target_edge_length), n, &result));
                samples.push((spec.target_edge_length, result.value));
                results.push((spec.target_edge_length, mesh_summary(&mesh), result));
            }
            let exact = reference.resolve(n)?;
            let fit = convergence_order(&samples, exact)?;
            let named: Vec<(String, &CapacityResult)> = results.iter().map(|(h, _, r)| (format!("h={h}"), r)).collect();
            let refs: Vec<(&str, &CapacityResult)> = named.iter().map(|(c, r)| (c.as_str(), *r)).collect();
            checks.push(converged_check(&refs));
            checks.push(admissible_check(&refs));
            checks.push(Check::new(
                "convergence_order",
                !fit.non_convergent && fit.order >= *min_order,
                format!("order {:.6} required {min_order}", fit.order),
            ));
            plot = Some(Plot::single(
                "error against edge length",
                "h",
                "|value - reference|",
                true,
                samples.iter().map(|&(h, v)| (h, (v - exact).abs())).collect(),
            ));
            let levels_json: Vec<Value> = results
                .iter()
                .map(|(h, m, r)| serde_json::json!({ "h": h, "mesh": m, "result": to_value(r) }))
                .collect();
            serde_json::json!({ "reference": exact, "fit": to_value(&fit), "levels": levels_json })
        }
    };

    if !config.plots {
        plot = None;
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(Outcome {
        report: Report {
            tool: "capcli".into(),
            version: VERSION.into(),
            kind: config.experiment.kind().into(),
            config: config.clone(),
            passed,
            checks,
            results,
        },
        rows,
        plot,
    })
}

fn mesh_summary(mesh: &SimplicialMesh) -> Value {
    serde_json::json!({
        "dim": mesh.dim(),
        "vertices": mesh.num_vertices(),
        "simplices": mesh.num_simplices(),
        "max_edge_length": mesh.max_edge_length(),
    })
}
