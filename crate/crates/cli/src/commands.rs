use std::path::Path;

use serde::Serialize;
use udist::circuit::{
    mub_bases, verify_unitaries, BasisSet, Circuit, Shots, Verdict, VerificationReport,
};
use udist::entangle::{local_distance, local_probe, EntangleResult};
use udist::gates::{cnot, swap};
use udist::grover::{
    lower_bound_check, optimal_iterations, success_probability_closed_form, BoundReport,
    MAX_DOUBLED_N,
};
use udist::properties::{run_metric_suite, SuiteConfig, SuiteReport};
use udist::umetric::{u_distance_bruteforce, DistanceResult, Method, Metric};
use udist::{ComplexMatrix, Error};

use crate::output::{code, csv, num, opt_num, table, Report};

/// Largest `N` accepted in success-only mode.
pub const MAX_SUCCESS_ONLY_N: usize = 1 << 20;

/// A command failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: code::USAGE,
            message: message.into(),
        }
    }
}

/// Default mapping: malformed input is a usage error, rejected operators
/// get their own code, anything else is internal.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionMismatch(_)
            | Error::NotSquare { .. }
            | Error::LengthMismatch { .. }
            | Error::NonFinite(_)
            | Error::ZeroNorm
            | Error::Parse(_)
            | Error::InvalidArgument(_)
            | Error::Precondition(_)
            | Error::Budget(_) => code::USAGE,
            Error::NotUnitary { .. } | Error::DependentBases { .. } => code::REJECTED,
            Error::EigenResidual { .. } | Error::NoConvergence | Error::CrossCheck(_) => {
                code::INTERNAL
            }
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<Report, Failure>;

fn read_json(path: &Path) -> Result<serde_json::Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn parse_error(path: &Path, e: serde_json::Error) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

pub fn load_matrix(path: &Path) -> Result<ComplexMatrix, Failure> {
    serde_json::from_value(read_json(path)?).map_err(|e| parse_error(path, e))
}

/// A circuit file or a bare matrix file.
pub fn load_operator(path: &Path) -> Result<ComplexMatrix, Failure> {
    let value = read_json(path)?;
    if value.get("gates").is_some() {
        let c: Circuit = serde_json::from_value(value).map_err(|e| parse_error(path, e))?;
        Ok(c.unitary()?)
    } else {
        serde_json::from_value(value).map_err(|e| parse_error(path, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum DistMethod {
    Arc,
    Hull,
    Brute,
    All,
}

#[derive(Serialize)]
struct DistBody {
    distance: DistanceResult,
    supnorm: f64,
    half_norm: f64,
    phase: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    methods: Vec<DistanceResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_discrepancy: Option<f64>,
}

pub struct DistArgs<'a> {
    pub u: &'a Path,
    pub v: &'a Path,
    pub method: DistMethod,
    pub samples: usize,
    pub refine: usize,
    pub seed: u64,
    pub tol: f64,
}

pub fn dist(a: &DistArgs) -> CmdResult {
    let u = load_matrix(a.u)?;
    let v = load_matrix(a.v)?;
    if u.rows() != v.rows() || u.cols() != v.cols() {
        return Err(Failure::usage(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    let metric = Metric::new(a.tol);
    let brute = || u_distance_bruteforce(&u, &v, a.samples, a.refine, a.seed);
    let (distance, methods) = match a.method {
        DistMethod::Arc => (metric.u_distance_arc(&u, &v)?, vec![]),
        DistMethod::Hull => (metric.u_distance_hull(&u, &v)?, vec![]),
        DistMethod::Brute => {
            metric.relative_operator(&u, &v)?;
            (brute()?, vec![])
        }
        DistMethod::All => {
            let arc = metric.u_distance_arc(&u, &v)?;
            let all = vec![arc.clone(), metric.u_distance_hull(&u, &v)?, brute()?];
            (arc, all)
        }
    };
    let max_discrepancy = (!methods.is_empty()).then(|| {
        let vals: Vec<f64> = methods.iter().map(|m| m.value).collect();
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    });
    let align = metric.align_phase(&u, &v)?;
    let body = DistBody {
        supnorm: metric.supnorm_distance(&u, &v)?,
        half_norm: align.half_norm,
        phase: align.x,
        distance,
        methods,
        max_discrepancy,
    };

    let witness = body.distance.witness.as_ref().map(|w| {
        w.amplitudes()
            .iter()
            .map(|z| format!("({}, {})", z.re, z.im))
            .collect::<Vec<_>>()
            .join(" ")
    });
    let mut pairs = vec![
        ("distance", num(body.distance.value)),
        ("method", body.distance.method.to_string()),
        ("arc_length", opt_num(body.distance.arc_length)),
        ("supnorm", num(body.supnorm)),
        ("half_norm", num(body.half_norm)),
        ("phase", num(body.phase)),
    ];
    for m in &body.methods {
        let name = match m.method {
            Method::Arc => "arc",
            Method::Hull => "hull",
            Method::BruteForce => "brute_force",
        };
        pairs.push((name, num(m.value)));
    }
    if let Some(d) = body.max_discrepancy {
        pairs.push(("max_discrepancy", num(d)));
    }
    if let Some(w) = &witness {
        pairs.push(("witness", w.clone()));
    }
    let mut rows = vec![vec![
        body.distance.method.to_string(),
        num(body.distance.value),
    ]];
    rows.extend(
        body.methods
            .iter()
            .skip(1)
            .map(|m| vec![m.method.to_string(), num(m.value)]),
    );
    let csv = csv(&["method", "value"], rows);
    Ok(Report::new("dist", &body, csv, table(&pairs), code::OK))
}

pub fn check_metric(dim: usize, trials: usize, seed: u64, inject: bool) -> CmdResult {
    if trials == 0 {
        return Err(Failure::usage("trials must be at least 1"));
    }
    if dim < 2 {
        return Err(Failure::usage("dim must be at least 2"));
    }
    let report: SuiteReport = run_metric_suite(&SuiteConfig {
        dim,
        trials,
        seed,
        inject_reversed_triangle: inject,
    })?;
    let mut t = String::new();
    let width = report
        .properties
        .iter()
        .map(|p| p.name.len())
        .max()
        .unwrap_or(0);
    for p in &report.properties {
        let status = match (p.ok(), p.gating) {
            (true, _) => "ok",
            (false, true) => "VIOLATED",
            (false, false) => "advisory",
        };
        t.push_str(&format!(
            "{:<width$}  {:>6}/{:<6}  worst_slack {:<24}  {status}",
            p.name,
            p.passed,
            p.checked,
            num(p.worst_slack)
        ));
        if let (false, Some(s)) = (p.ok(), p.first_failure_seed) {
            t.push_str(&format!("  reproducer seed {s}"));
        }
        t.push('\n');
    }
    t.push_str(if report.all_passed {
        "all properties hold\n"
    } else {
        "violations found\n"
    });
    let rows = report.properties.iter().map(|p| {
        vec![
            p.name.to_string(),
            p.checked.to_string(),
            p.passed.to_string(),
            num(p.worst_slack),
            num(p.tolerance),
            p.gating.to_string(),
            p.first_failure_seed
                .map(|s| s.to_string())
                .unwrap_or_default(),
        ]
    });
    let csv = csv(
        &[
            "property",
            "checked",
            "passed",
            "worst_slack",
            "tolerance",
            "gating",
            "failure_seed",
        ],
        rows,
    );
    let code = if report.all_passed {
        code::OK
    } else {
        code::FAIL
    };
    if !report.all_passed {
        for p in report.properties.iter().filter(|p| p.gating && !p.ok()) {
            eprintln!(
                "violation: {} (reproducer seed {})",
                p.name,
                p.first_failure_seed.unwrap_or_default()
            );
        }
    }
    Ok(Report::new("check-metric", &report, csv, t, code))
}

/// `auto`, a single count, or an inclusive range `A..=B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Iterations {
    Auto,
    Range(usize, usize),
}

impl std::str::FromStr for Iterations {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Iterations::Auto);
        }
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad count {t:?}: {e}"))
        };
        if let Some((a, b)) = s.split_once("..=") {
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                return Err(format!("empty range {s}"));
            }
            return Ok(Iterations::Range(a, b));
        }
        let k = parse(s)?;
        Ok(Iterations::Range(k, k))
    }
}

#[derive(Serialize)]
struct GroverRow {
    #[serde(rename = "N")]
    n: usize,
    k: usize,
    success_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundReport>,
}

#[derive(Serialize)]
struct GroverBody {
    #[serde(rename = "N")]
    n: usize,
    c: f64,
    success_only: bool,
    rows: Vec<GroverRow>,
}

pub fn grover(n: usize, k: &Iterations, c: f64, success_only: bool) -> CmdResult {
    if n < 2 {
        return Err(Failure::usage("N must be at least 2"));
    }
    let limit = if success_only {
        MAX_SUCCESS_ONLY_N
    } else {
        MAX_DOUBLED_N
    };
    if n > limit {
        return Err(Failure::usage(format!(
            "N = {n} exceeds the budget N <= {limit}{}",
            if success_only {
                ""
            } else {
                " (try --success-only)"
            }
        )));
    }
    let (k0, k1) = match *k {
        Iterations::Auto => {
            let k = optimal_iterations(n);
            (k, k)
        }
        Iterations::Range(a, b) => (a, b),
    };
    let rows: Vec<GroverRow> = (k0..=k1)
        .map(|k| -> Result<GroverRow, Failure> {
            if success_only {
                Ok(GroverRow {
                    n,
                    k,
                    success_min: success_probability_closed_form(n, k),
                    bounds: None,
                })
            } else {
                let r = lower_bound_check(n, k, c)?;
                Ok(GroverRow {
                    n,
                    k,
                    success_min: r.success_min,
                    bounds: Some(r),
                })
            }
        })
        .collect::<Result<_, _>>()?;

    let header = [
        "N",
        "k",
        "success_min",
        "d_phi_sq",
        "upper",
        "lower_V",
        "lower_F",
    ];
    let csv_rows = rows.iter().map(|r| {
        let b = r.bounds.as_ref();
        vec![
            r.n.to_string(),
            r.k.to_string(),
            num(r.success_min),
            opt_num(b.map(|b| b.d_phi_sq)),
            opt_num(b.map(|b| b.upper)),
            opt_num(b.map(|b| b.lower_terms.0)),
            opt_num(b.map(|b| b.lower_terms.1)),
        ]
    });
    let csv = csv(&header, csv_rows);

    let mut t = format!("{:>8} {:>4} {:>20}", "N", "k", "success_min");
    if !success_only {
        t.push_str(&format!(
            " {:>22} {:>8} {:>6} {:>20} {:>20} {:>8}",
            "d_phi_sq", "upper", "holds", "lower_V", "lower_F", "margin"
        ));
    }
    t.push('\n');
    for r in &rows {
        t.push_str(&format!("{:>8} {:>4} {:>20}", r.n, r.k, num(r.success_min)));
        if let Some(b) = &r.bounds {
            let achieved = b.margin.as_ref().is_some_and(|m| m.achieved);
            t.push_str(&format!(
                " {:>22} {:>8} {:>6} {:>20} {:>20} {:>8}",
                num(b.d_phi_sq),
                num(b.upper),
                b.upper_holds && b.chain_holds && b.lower_v_holds,
                num(b.lower_terms.0),
                num(b.lower_terms.1),
                if achieved { "yes" } else { "no" }
            ));
        }
        t.push('\n');
    }
    let body = GroverBody {
        n,
        c,
        success_only,
        rows,
    };
    Ok(Report::new("grover", &body, csv, t, code::OK))
}

#[derive(Serialize)]
struct EntangleBody {
    gate: String,
    #[serde(flatten)]
    result: EntangleResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_min: Option<f64>,
}

pub fn entangle(gate: &str, restarts: usize, iters: usize, probe: usize, seed: u64) -> CmdResult {
    let target = match gate {
        "cnot" => cnot(),
        "swap" => swap(),
        path => load_matrix(Path::new(path))?,
    };
    let result = local_distance(&target, restarts, iters, seed)?;
    let probe_min = if probe > 0 {
        Some(local_probe(&target, probe, seed, true)?)
    } else {
        None
    };
    let angles = result
        .best_element
        .factors
        .iter()
        .map(|f| format!("[{}, {}, {}]", f[0], f[1], f[2]))
        .collect::<Vec<_>>()
        .join(" ");
    let perm = format!("{:?}", result.best_element.permutation);
    let mut pairs = vec![
        ("gate", gate.to_string()),
        ("best_distance", num(result.best_distance)),
        ("converged", result.converged.to_string()),
        ("restarts_used", result.restarts_used.to_string()),
        ("permutation", perm.clone()),
        ("euler_angles", angles.clone()),
    ];
    if let Some(p) = probe_min {
        pairs.push(("probe_min", num(p)));
    }
    let csv = csv(
        &[
            "gate",
            "best_distance",
            "converged",
            "restarts_used",
            "permutation",
            "euler_angles",
            "probe_min",
        ],
        [vec![
            gate.to_string(),
            num(result.best_distance),
            result.converged.to_string(),
            result.restarts_used.to_string(),
            format!("\"{perm}\""),
            format!("\"{angles}\""),
            opt_num(probe_min),
        ]],
    );
    let t = table(&pairs);
    let body = EntangleBody {
        gate: gate.to_string(),
        result,
        probe_min,
    };
    Ok(Report::new("entangle", &body, csv, t, code::OK))
}

/// `exact` or a positive shot count.
pub fn parse_shots(s: &str) -> Result<Shots, String> {
    if s == "exact" {
        return Ok(Shots::Exact);
    }
    match s.parse::<u64>() {
        Ok(0) => Err("shots must be positive".into()),
        Ok(n) => Ok(Shots::Finite(n)),
        Err(e) => Err(format!("expected `exact` or a shot count: {e}")),
    }
}

pub fn verify(u: &Path, v: &Path, bases: &str, epsilon: f64, shots: Shots, seed: u64) -> CmdResult {
    let um = load_operator(u)?;
    let vm = load_operator(v)?;
    if um.rows() != vm.rows() {
        return Err(Failure::usage(format!(
            "dimension mismatch: {} vs {}",
            um.rows(),
            vm.rows()
        )));
    }
    let dim = um.dim()?;
    let bases: BasisSet = if bases == "mub" {
        mub_bases(dim)?
    } else {
        let p = Path::new(bases);
        serde_json::from_value(read_json(p)?).map_err(|e| parse_error(p, e))?
    };
    for m in [&um, &vm] {
        if m.ensure_unitary(udist::DEFAULT_TOL).is_err() {
            return Err(Failure::usage("operator is not unitary"));
        }
    }
    let report: VerificationReport = verify_unitaries(&um, &vm, &bases, epsilon, shots, seed)?;
    let verdict = match report.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inconclusive => "inconclusive",
    };
    let code = match report.verdict {
        Verdict::Pass => code::OK,
        Verdict::Fail => code::FAIL,
        Verdict::Inconclusive => code::INCONCLUSIVE,
    };
    let shots_str = match report.shots {
        Shots::Exact => "exact".to_string(),
        Shots::Finite(n) => n.to_string(),
    };
    let t = table(&[
        ("epsilon", num(report.epsilon)),
        ("shots", shots_str),
        ("states", report.per_state.len().to_string()),
        ("max_estimate", num(report.max_estimate)),
        ("confidence_radius", num(report.confidence_radius)),
        ("verdict", verdict.to_string()),
    ]);
    let csv = csv(
        &["basis", "vector", "probability", "estimate", "radius"],
        report.per_state.iter().map(|s| {
            vec![
                s.basis.to_string(),
                s.vector.to_string(),
                num(s.probability),
                num(s.estimate),
                num(s.radius),
            ]
        }),
    );
    Ok(Report::new("verify", &report, csv, t, code))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_specs() {
        assert!(matches!("auto".parse(), Ok(Iterations::Auto)));
        assert!(matches!("3".parse(), Ok(Iterations::Range(3, 3))));
        assert!(matches!("0..=4".parse(), Ok(Iterations::Range(0, 4))));
        assert!("4..=1".parse::<Iterations>().is_err());
        assert!("x".parse::<Iterations>().is_err());
    }

    #[test]
    fn shot_specs() {
        assert!(matches!(parse_shots("exact"), Ok(Shots::Exact)));
        assert!(matches!(parse_shots("100"), Ok(Shots::Finite(100))));
        assert!(parse_shots("0").is_err());
    }
}
