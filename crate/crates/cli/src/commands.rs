use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use sympkit_core::{
    approx_half_line_m, block_sufficient_condition, boundary_m, deficiency_consistency, is_definite,
    kernel_lambda_independence, linalg, maximal_rank_interval, Certificate, GreenTable, SymplecticSystem, SympError,
    ValidationReport, WeylState,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{complex_pair, matrix_rows, sequence_rows, Check, GreenRow, ReportDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Definiteness,
    Weyl,
    GreenSolve,
    Deficiency,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Definiteness => "definiteness",
            Command::Weyl => "weyl",
            Command::GreenSolve => "green-solve",
            Command::Deficiency => "deficiency",
        }
    }
}

pub struct Outcome {
    pub report: ReportDocument,
    /// Green table entries, filled by `green-solve` only.
    pub green_rows: Vec<GreenRow>,
}

/// Green identities and `ẑ` recursion, in absolute terms.
const GREEN_TOL: f64 = 1e-8;
const ALPHA_TOL: f64 = 1e-10;
const ANGLE_TOL: f64 = 1e-6;

pub fn run(command: Command, config: &RunConfig) -> Result<Outcome, CliError> {
    let sys = config.build_system()?;
    let validation = sys.validate_hypotheses();
    let mut checks = validation_checks(&validation);
    if command == Command::Validate || !validation.passed() {
        let report = ReportDocument::new(command.name(), config, checks, validation_payload(&sys, &validation));
        return Ok(Outcome { report, green_rows: Vec::new() });
    }
    let mut green_rows = Vec::new();
    let payload = match command {
        Command::Validate => unreachable!("handled above"),
        Command::Definiteness => definiteness(&sys, config, &mut checks)?,
        Command::Weyl => weyl(&sys, config, &mut checks)?,
        Command::GreenSolve => green_solve(&sys, config, &mut checks, &mut green_rows)?,
        Command::Deficiency => deficiency(&sys, config, &mut checks)?,
    };
    Ok(Outcome { report: ReportDocument::new(command.name(), config, checks, payload), green_rows })
}

fn validation_checks(v: &ValidationReport) -> Vec<Check> {
    use sympkit_core::Violation::*;
    let kinds = v.violation_kinds();
    let has = |kind| !kinds.contains(&kind);
    vec![
        Check::new("symplectic", has(NotSymplectic)).with_residual(v.max_symplectic_residual()),
        Check::new("weight_hermitian", has(NotHermitian)).with_residual(v.max_hermitian_residual()),
        Check::new("weight_isotropic", has(WeightNotIsotropic)).with_residual(v.max_isotropy_residual()),
        Check::new("weight_semidefinite", has(NotSemiDefinite)).with_residual(v.min_weight_eigenvalue()),
    ]
}

fn validation_payload(sys: &SymplecticSystem, v: &ValidationReport) -> Value {
    let violations: Vec<Value> = v
        .checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| json!({ "k": c.k, "kinds": c.violations.iter().map(|x| x.name()).collect::<Vec<_>>() }))
        .collect();
    json!({
        "n": sys.n(),
        "horizon": sys.horizon(),
        "passed": v.passed(),
        "first_failure": v.first_failure().map(|c| c.k),
        "violations": violations,
    })
}

fn definiteness(sys: &SymplecticSystem, config: &RunConfig, checks: &mut Vec<Check>) -> Result<Value, CliError> {
    let (lo, hi) = config.interval()?;
    let lambdas: Vec<Complex64> = config.lambdas.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    let probe = lambdas.first().copied().unwrap_or(Complex64::new(0.0, 1.0));

    let prefix = maximal_rank_interval(sys, hi)?;
    checks.push(Check::new("prefix_rank_monotone", prefix.monotone));

    let verdict = is_definite(sys, lo..=hi, probe)?;
    checks.push(
        Check::info("definite")
            .with_detail(format!("definite={} rank={} of {}", verdict.definite, verdict.gram.rank, sys.dim())),
    );
    let certificate = match &verdict.certificate {
        Certificate::FullRank { eigenvalues } => json!({ "kind": "full_rank", "eigenvalues": eigenvalues }),
        Certificate::Kernel { xi, semi_norm } => json!({
            "kind": "kernel",
            "xi": xi.iter().map(|z| complex_pair(*z)).collect::<Vec<_>>(),
            "semi_norm": semi_norm,
        }),
    };

    let independence = if lambdas.len() >= 2 {
        let r = kernel_lambda_independence(sys, lo..=hi, &lambdas)?;
        checks.push(Check::bounded("kernel_lambda_independence", r.max_angle, ANGLE_TOL).with_detail(format!(
            "ranks {:?}",
            r.ranks
        )));
        if !r.consistent(ANGLE_TOL) {
            checks.last_mut().expect("pushed").status = crate::report::Status::Fail;
        }
        json!({ "ranks": r.ranks, "max_angle": r.max_angle })
    } else {
        Value::Null
    };

    let mut fired = Vec::new();
    let mut detectable = true;
    let mut consistent = true;
    for l in lo.max(1)..=hi {
        match block_sufficient_condition(sys, l) {
            Ok(true) => {
                fired.push(l);
                consistent &= is_definite(sys, (l - 1)..=l, probe)?.definite;
            }
            Ok(false) => {}
            Err(SympError::Structure(_)) => {
                detectable = false;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    if detectable {
        checks.push(Check::new("block_condition_implies_definite", consistent));
    } else {
        checks.push(Check::info("block_condition_implies_definite").with_detail("weight is not block diagonal"));
    }

    Ok(json!({
        "interval": [lo, hi],
        "lambda_probe": complex_pair(probe),
        "definite": verdict.definite,
        "rank": verdict.gram.rank,
        "gram": matrix_rows(&verdict.gram.value),
        "certificate": certificate,
        "prefix_ranks": prefix.prefix_ranks,
        "maximal_rank_end": prefix.end,
        "maximal_rank": prefix.rank,
        "kernel_independence": independence,
        "block_condition": { "detectable": detectable, "fired_at": fired },
    }))
}

fn weyl(sys: &SymplecticSystem, config: &RunConfig, checks: &mut Vec<Check>) -> Result<Value, CliError> {
    let lambdas = config.nonreal_lambdas()?;
    let alpha = config.alpha(sys.n())?;
    let beta = config.beta(sys.n())?;
    let n_list = config.n_list()?;
    let psd_tol = sys.tolerances().psd_tol;
    let drift_tol = config.drift_tol();
    let front = sys.truncated(n_list[0])?;

    let per_lambda: Vec<Result<(Vec<Check>, Value), CliError>> = lambdas
        .par_iter()
        .map(|&lam| {
            let tag = format!("[{}, {}]", lam.re, lam.im);
            let est = approx_half_line_m(sys, lam, &alpha, &beta, &n_list)?;
            let last_n = est.trace.iter().rev().find(|it| it.m.is_some()).map_or(0, |it| it.n);
            let (m_bar, _) = boundary_m(sys, lam.conj(), &alpha, &beta, last_n)?;
            let symmetry = (est.m_plus.adjoint() - &m_bar).norm();
            let m_scale = est.m_plus.norm().max(1.0);

            let state = WeylState::new(&front, lam, &alpha, &est.m_plus)?;
            let e_max = state.max_eigenvalues();
            let step_min = state
                .ek_trace
                .windows(2)
                .map(|w| linalg::min_eigenvalue(&(&w[1] - &w[0])) / w[1].norm().max(1.0))
                .fold(f64::INFINITY, f64::min);

            let last = est.trace.iter().rev().find(|it| it.m.is_some()).expect("estimate exists");
            let mut local = vec![
                Check::new(format!("in_disk {tag}"), last.in_disk).with_residual(last.e_n_max_eigenvalue),
                Check::new(format!("nevanlinna {tag}"), last.nevanlinna_min >= -psd_tol * m_scale)
                    .with_residual(last.nevanlinna_min),
                Check::bounded(format!("m_symmetry {tag}"), symmetry, 1e-8 * m_scale),
                Check::new(format!("disk_monotone {tag}"), step_min >= -1e-9).with_residual(step_min),
            ];
            match est.last_drift() {
                Some(d) => local.push(Check::bounded(format!("m_drift {tag}"), d, drift_tol)),
                None => local.push(Check::info(format!("m_drift {tag}")).with_detail("single horizon")),
            }
            let trace: Vec<Value> = est
                .trace
                .iter()
                .map(|it| {
                    json!({
                        "n": it.n,
                        "m": it.m.as_ref().map(matrix_rows),
                        "drift": it.drift,
                        "e_n_max_eigenvalue": it.e_n_max_eigenvalue,
                        "nevanlinna_min": it.nevanlinna_min,
                        "in_disk": it.in_disk,
                        "failure": it.failure,
                    })
                })
                .collect();
            let payload = json!({
                "lambda": complex_pair(lam),
                "m_plus": matrix_rows(&est.m_plus),
                "m_plus_conjugate": matrix_rows(&m_bar),
                "symmetry_residual": symmetry,
                "trace": trace,
                "disk_indicator_max_eigenvalues": e_max,
            });
            Ok((local, payload))
        })
        .collect();

    let mut results = Vec::with_capacity(per_lambda.len());
    for (r, &lam) in per_lambda.into_iter().zip(&lambdas) {
        let (local, payload) = recover_boundary(r, lam)?;
        checks.extend(local);
        results.push(payload);
    }
    Ok(json!({ "n_list": n_list, "indicator_horizon": n_list[0], "results": results }))
}

fn green_solve(
    sys: &SymplecticSystem,
    config: &RunConfig,
    checks: &mut Vec<Check>,
    rows: &mut Vec<GreenRow>,
) -> Result<Value, CliError> {
    let lambdas = config.nonreal_lambdas()?;
    let alpha = config.alpha(sys.n())?;
    let beta = config.beta(sys.n())?;
    let v = config.weyl_vector(sys.n())?;
    let grid = config.grid();
    let n_b = sys.horizon();

    type Solved = (Vec<Check>, Value, Vec<GreenRow>);
    let per_lambda: Vec<Result<Solved, CliError>> = lambdas
        .par_iter()
        .map(|&lam| {
            let tag = format!("[{}, {}]", lam.re, lam.im);
            let f = config.forcing(sys.dim(), lam)?;
            let table = GreenTable::with_boundary_condition(sys, lam, &alpha, &beta, n_b)?;
            let props = table.properties(grid)?;
            let zhat = table.zhat(&f)?;
            let mut local = vec![
                Check::bounded(format!("green_adjoint_symmetry {tag}"), props.adjoint_symmetry.abs, GREEN_TOL),
                Check::bounded(format!("green_diagonal_jump {tag}"), props.diagonal_jump.abs, GREEN_TOL),
                Check::bounded(format!("green_diagonal_recursion {tag}"), props.diagonal_recursion.abs, GREEN_TOL),
                Check::bounded(format!("green_off_diagonal_recursion {tag}"), props.off_diagonal_recursion.abs, GREEN_TOL),
                Check::bounded(format!("zhat_recursion {tag}"), zhat.recursion.abs, GREEN_TOL),
                Check::bounded(format!("zhat_alpha {tag}"), zhat.alpha_residual, ALPHA_TOL),
                Check::new(format!("zhat_bound {tag}"), zhat.bound_holds).with_residual(zhat.bound - zhat.norm),
            ];
            let solve_json = |r: &sympkit_core::SolveReport| {
                json!({
                    "solution": sequence_rows(&r.solution),
                    "recursion_abs": r.recursion.abs,
                    "recursion_rel": r.recursion.rel,
                    "alpha_residual": r.alpha_residual,
                    "norm": r.norm,
                    "forcing_norm": r.forcing_norm,
                    "bound": r.bound,
                    "margin": r.bound - r.norm,
                    "bound_holds": r.bound_holds,
                })
            };
            let yhat = match &v {
                Some(v) => {
                    let y = table.yhat(v, &f)?;
                    local.push(Check::bounded(format!("yhat_alpha {tag}"), y.alpha_residual, ALPHA_TOL));
                    local.push(Check::bounded(format!("yhat_recursion {tag}"), y.recursion.abs, GREEN_TOL));
                    local.push(Check::new(format!("yhat_bound {tag}"), y.bound_holds).with_residual(y.bound - y.norm));
                    solve_json(&y)
                }
                None => Value::Null,
            };
            let mut grid_rows = Vec::new();
            let mut entries = Vec::new();
            for (k, l, g) in table.entries(grid)? {
                for i in 0..g.nrows() {
                    for j in 0..g.ncols() {
                        grid_rows.push(GreenRow { lambda: lam, k, l, i, j, value: g[(i, j)] });
                    }
                }
                entries.push(json!({ "k": k, "l": l, "value": matrix_rows(&g) }));
            }
            let payload = json!({
                "lambda": complex_pair(lam),
                "m_plus": matrix_rows(&table.m_plus),
                "m_symmetry_residual": table.m_symmetry_residual(),
                "green_properties": {
                    "adjoint_symmetry": props.adjoint_symmetry.abs,
                    "diagonal_jump": props.diagonal_jump.abs,
                    "off_diagonal_recursion": props.off_diagonal_recursion.abs,
                    "diagonal_recursion": props.diagonal_recursion.abs,
                    "wronskian_identity": props.wronskian_identity.abs,
                },
                "green_entries": entries,
                "zhat": solve_json(&zhat),
                "yhat": yhat,
            });
            Ok((local, payload, grid_rows))
        })
        .collect();

    let mut results = Vec::with_capacity(per_lambda.len());
    for (r, &lam) in per_lambda.into_iter().zip(&lambdas) {
        let (local, payload, grid_rows) = match r {
            Ok(solved) => solved,
            Err(e) => {
                let (local, payload) = recover_boundary(Err(e), lam)?;
                (local, payload, Vec::new())
            }
        };
        checks.extend(local);
        results.push(payload);
        rows.extend(grid_rows);
    }
    Ok(json!({ "n_b": n_b, "grid": grid, "results": results }))
}

/// A two-point problem that is singular at `λ` is an analysis result, not an
/// abort: it becomes a failing check so the rest of the report survives.
fn recover_boundary(r: Result<(Vec<Check>, Value), CliError>, lam: Complex64) -> Result<(Vec<Check>, Value), CliError> {
    match r {
        Err(CliError::Core(e @ SympError::BoundaryCondition(_))) => {
            let tag = format!("[{}, {}]", lam.re, lam.im);
            let check = Check::new(format!("boundary_problem {tag}"), false).with_detail(e.to_string());
            Ok((vec![check], json!({ "lambda": complex_pair(lam), "failure": e.to_string() })))
        }
        other => other,
    }
}

fn deficiency(sys: &SymplecticSystem, config: &RunConfig, checks: &mut Vec<Check>) -> Result<Value, CliError> {
    let lambdas = config.nonreal_lambdas()?;
    let (lo, hi) = config.interval()?;
    let n_list = config.n_list()?;
    let r = deficiency_consistency(sys, &lambdas, lo..=hi, &n_list, config.threshold())?;
    checks.push(Check::new("d_tilde_nonnegative", r.nonnegative));
    checks.push(Check::new("offset_constant", r.offset_constant));
    checks.push(Check::new("half_plane_constant", r.half_plane_constant));
    checks.push(Check::new("definite_consistent", r.definite_consistent));
    checks.push(Check::new("within_bounds", r.within_bounds));
    Ok(json!({
        "interval": [lo, hi],
        "n_list": n_list,
        "growth_ratio_threshold": config.threshold(),
        "n": r.n,
        "lambdas": r.lambda_samples.iter().map(|z| complex_pair(*z)).collect::<Vec<_>>(),
        "d_lambda": r.d_lambda,
        "rank_phi": r.rank_phi,
        "d_tilde": r.d_tilde,
        "warnings": r.warnings,
    }))
}
