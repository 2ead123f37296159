//! Subcommand implementations: compute, persist, summarize.

use serde::Serialize;

use wavebranch::branching::equivalence_check;
use wavebranch::continuation::{continue_branch, Branch, ContinuationOptions};
use wavebranch::linear::{char_values, CharValue};
use wavebranch::operators::{Kernel, PolyNonlinearity, WaveProblem};
use wavebranch::series::{branch_series, SeriesBranch};
use wavebranch::spectral::SineSeries;
use wavebranch::verify::{run_battery, VerifyOptions};

use crate::config::{OutputFormat, ProblemKind, RunConfig};
use crate::document::{fmt_f64, write_csv, ResultDocument};
use crate::CliError;

fn build_problem(cfg: &RunConfig) -> Result<WaveProblem, CliError> {
    let n = cfg.n_modes;
    match cfg.problem {
        ProblemKind::Nekrasov => match (cfg.depth, cfg.wavelength) {
            (Some(h), Some(l)) => Ok(WaveProblem::nekrasov_finite(h, l, n, 0.0)?),
            _ => Ok(WaveProblem::nekrasov_infinite(n, 0.0)),
        },
        ProblemKind::Krasovskii => Ok(WaveProblem::krasovskii(n, 0.0)),
        ProblemKind::Hammerstein => {
            let poly = PolyNonlinearity::new(cfg.hammerstein_coeffs.clone());
            let diag: Vec<f64> = (1..=n).map(|k| 3.0 * k as f64).collect();
            Ok(WaveProblem::hammerstein(Kernel::FourierDiagonal(diag), poly, n, 0.0)?)
        }
    }
}

fn dominant_mode(phi: &SineSeries) -> usize {
    let mut best = 1;
    let mut best_abs = 0.0;
    for (i, c) in phi.coeffs().iter().enumerate() {
        if c.abs() > best_abs {
            best_abs = c.abs();
            best = i + 1;
        }
    }
    best
}

/// Characteristic value whose eigenspace is dominated by `sin(mode * theta)`.
fn char_value_for_mode(problem: &WaveProblem, mode: usize) -> Result<CharValue, CliError> {
    let cvs = char_values(&problem.linearize().b)?;
    cvs.into_iter()
        .find(|cv| dominant_mode(&cv.eigenfunctions[0]) == mode)
        .ok_or_else(|| {
            CliError::Config(format!("no characteristic value found for mode {mode}"))
        })
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cfg.out_dir.display())))
}

// ---------------------------------------------------------------- spectrum

#[derive(Serialize)]
struct SpectrumRow {
    n: usize,
    mu: f64,
    multiplicity: usize,
    guaranteed: bool,
}

#[derive(Serialize)]
struct SpectrumPayload {
    schema: &'static str,
    rows: Vec<SpectrumRow>,
}

/// Characteristic-value table for modes 1..=n (the `--n` flag).
pub fn cmd_spectrum(cfg: RunConfig) -> Result<(), CliError> {
    let problem = build_problem(&cfg)?;
    if cfg.mode > cfg.n_modes {
        return Err(CliError::Config(format!(
            "requested {} spectrum rows but n_modes is {}",
            cfg.mode, cfg.n_modes
        )));
    }
    let cvs = char_values(&problem.linearize().b)?;
    let rows: Vec<SpectrumRow> = cvs
        .iter()
        .take(cfg.mode)
        .enumerate()
        .map(|(i, cv)| SpectrumRow {
            n: i + 1,
            mu: cv.mu_star,
            multiplicity: cv.multiplicity,
            guaranteed: cv.multiplicity % 2 == 1,
        })
        .collect();

    ensure_out_dir(&cfg)?;
    if cfg.wants(OutputFormat::Csv) {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_f64(r.mu),
                    r.multiplicity.to_string(),
                    r.guaranteed.to_string(),
                ]
            })
            .collect();
        write_csv(&cfg.out_dir, "spectrum", &["n", "mu", "multiplicity", "guaranteed"], &table)?;
    }
    let n_rows = rows.len();
    let payload = SpectrumPayload { schema: "wavebranch.spectrum/1", rows };
    if cfg.wants(OutputFormat::Json) {
        ResultDocument::new("spectrum", cfg.clone(), &payload).write_json(&cfg.out_dir)?;
    }
    println!("spectrum: {n_rows} characteristic values written to {}", cfg.out_dir.display());
    Ok(())
}

// ------------------------------------------------------------------ series

#[derive(Serialize)]
struct SweepRow {
    lambda: f64,
    s: f64,
    mu: f64,
    residual: f64,
}

#[derive(Serialize)]
struct SeriesPayload {
    schema: &'static str,
    mu_star: f64,
    exponent: u32,
    direction: f64,
    order: usize,
    /// Eigencomponents c_k fixed by the solvability conditions.
    solvability_constants: Vec<f64>,
    /// Coefficient rows Phi_1..Phi_K.
    terms: Vec<Vec<f64>>,
    residual_sweep: Vec<SweepRow>,
    fitted_slope: f64,
    slope_required: f64,
}

fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.max(1e-300).ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn residual_sweep(problem: &WaveProblem, sb: &SeriesBranch) -> Result<Vec<SweepRow>, CliError> {
    let mut rows = Vec::new();
    for mag in [1e-1f64, 3e-2, 1e-2, 3e-3, 1e-3] {
        let s = mag.powf(1.0 / sb.exponent as f64);
        let (mu, phi) = sb.eval(s);
        let residual = phi.sub(&problem.apply_at(&phi, mu)?).norm();
        rows.push(SweepRow { lambda: sb.direction * mag, s, mu, residual });
    }
    Ok(rows)
}

/// Branch series at the selected mode, with the residual-order sweep.
pub fn cmd_series(cfg: RunConfig) -> Result<(), CliError> {
    let problem = build_problem(&cfg)?;
    let cv = char_value_for_mode(&problem, cfg.mode)?;
    let sb = branch_series(&problem, &cv, cfg.order)?;
    let sweep = residual_sweep(&problem, &sb)?;
    let lambdas: Vec<f64> = sweep.iter().map(|r| r.lambda.abs()).collect();
    let residuals: Vec<f64> = sweep.iter().map(|r| r.residual).collect();
    let fitted_slope = fit_loglog_slope(&lambdas, &residuals) * sb.exponent as f64;

    ensure_out_dir(&cfg)?;
    if cfg.wants(OutputFormat::Csv) {
        let mut coeff_rows = Vec::new();
        for (k, term) in sb.terms.iter().enumerate() {
            for (i, c) in term.coeffs().iter().enumerate() {
                coeff_rows.push(vec![(k + 1).to_string(), (i + 1).to_string(), fmt_f64(*c)]);
            }
        }
        write_csv(&cfg.out_dir, "series_coefficients", &["order", "mode", "value"], &coeff_rows)?;

        let const_rows: Vec<Vec<String>> = sb
            .eigencomponents()
            .iter()
            .enumerate()
            .map(|(k, c)| vec![(k + 1).to_string(), fmt_f64(*c)])
            .collect();
        write_csv(&cfg.out_dir, "series_constants", &["order", "eigencomponent"], &const_rows)?;

        let sweep_rows: Vec<Vec<String>> = sweep
            .iter()
            .map(|r| vec![fmt_f64(r.lambda), fmt_f64(r.s), fmt_f64(r.mu), fmt_f64(r.residual)])
            .collect();
        write_csv(&cfg.out_dir, "series_sweep", &["lambda", "s", "mu", "residual"], &sweep_rows)?;
    }

    let payload = SeriesPayload {
        schema: "wavebranch.series/1",
        mu_star: sb.mu_star,
        exponent: sb.exponent,
        direction: sb.direction,
        order: sb.order,
        solvability_constants: sb.eigencomponents(),
        terms: sb.terms.iter().map(|t| t.coeffs().to_vec()).collect(),
        residual_sweep: sweep,
        fitted_slope,
        slope_required: cfg.order as f64 + cfg.tolerances.slope_margin,
    };
    if cfg.wants(OutputFormat::Json) {
        ResultDocument::new("series", cfg.clone(), &payload).write_json(&cfg.out_dir)?;
    }
    println!(
        "series: mu* = {:.6}, order {}, residual slope {:.3} (required {:.3})",
        sb.mu_star, sb.order, fitted_slope, payload.slope_required
    );
    Ok(())
}

// --------------------------------------------------------------- branching

#[derive(Serialize)]
struct BranchingOrderRow {
    order: usize,
    series: f64,
    fitted: f64,
    rel_discrepancy: f64,
}

#[derive(Serialize)]
struct BranchingPayload {
    schema: &'static str,
    mu_star: f64,
    window: f64,
    guard: usize,
    orders: Vec<BranchingOrderRow>,
    max_rel: f64,
    condition: f64,
    passed: bool,
}

/// Cross-check of the branch series against the reduced branching equation.
pub fn cmd_branching(cfg: RunConfig) -> Result<(), CliError> {
    let problem = build_problem(&cfg)?;
    let cv = char_value_for_mode(&problem, cfg.mode)?;
    let sb = branch_series(&problem, &cv, cfg.order)?;
    let window = cfg.branching.window.expect("resolved");
    let guard = cfg.branching.guard.expect("resolved");
    let report = equivalence_check(&problem, &cv, &sb, window, guard)?;

    let orders: Vec<BranchingOrderRow> = report
        .series
        .iter()
        .zip(&report.fitted)
        .zip(&report.rel_discrepancy)
        .enumerate()
        .map(|(k, ((s, f), r))| BranchingOrderRow {
            order: k + 1,
            series: *s,
            fitted: *f,
            rel_discrepancy: *r,
        })
        .collect();
    let passed = report.max_rel <= cfg.tolerances.equivalence_rel;

    ensure_out_dir(&cfg)?;
    if cfg.wants(OutputFormat::Csv) {
        let rows: Vec<Vec<String>> = orders
            .iter()
            .map(|r| {
                vec![
                    r.order.to_string(),
                    fmt_f64(r.series),
                    fmt_f64(r.fitted),
                    fmt_f64(r.rel_discrepancy),
                ]
            })
            .collect();
        write_csv(
            &cfg.out_dir,
            "branching",
            &["order", "series", "fitted", "rel_discrepancy"],
            &rows,
        )?;
    }

    let payload = BranchingPayload {
        schema: "wavebranch.branching/1",
        mu_star: sb.mu_star,
        window,
        guard,
        orders,
        max_rel: report.max_rel,
        condition: report.condition,
        passed,
    };
    if cfg.wants(OutputFormat::Json) {
        ResultDocument::new("branching", cfg.clone(), &payload).write_json(&cfg.out_dir)?;
    }
    println!(
        "branching: max relative discrepancy {:.3e} through order {} ({})",
        report.max_rel,
        cfg.order,
        if passed { "pass" } else { "FAIL" }
    );
    Ok(())
}

// ---------------------------------------------------------------- continue

#[derive(Serialize)]
struct BranchPointRow {
    step: usize,
    mu: f64,
    amplitude: f64,
    residual: f64,
    max_slope: f64,
    positivity_defect: f64,
    min_denominator: Option<f64>,
    newton_iters: usize,
    /// Sine coefficients of the solution (lossless profile record).
    coeffs: Vec<f64>,
}

#[derive(Serialize)]
struct ContinuePayload {
    schema: &'static str,
    origin: f64,
    termination: String,
    mu_min: f64,
    mu_max: f64,
    points: Vec<BranchPointRow>,
}

fn branch_payload(branch: &Branch) -> ContinuePayload {
    let mut mu_min = f64::INFINITY;
    let mut mu_max = f64::NEG_INFINITY;
    let points: Vec<BranchPointRow> = branch
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            mu_min = mu_min.min(p.mu);
            mu_max = mu_max.max(p.mu);
            BranchPointRow {
                step: i,
                mu: p.mu,
                amplitude: p.amplitude,
                residual: p.residual,
                max_slope: p.diagnostics.max_slope,
                positivity_defect: p.diagnostics.positivity_defect,
                min_denominator: p.diagnostics.min_denominator,
                newton_iters: p.diagnostics.newton_iters,
                coeffs: p.phi.coeffs().to_vec(),
            }
        })
        .collect();
    ContinuePayload {
        schema: "wavebranch.branch/1",
        origin: branch.origin,
        termination: format!("{:?}", branch.termination),
        mu_min,
        mu_max,
        points,
    }
}

/// Pseudo-arclength continuation from the selected bifurcation point.
pub fn cmd_continue(cfg: RunConfig) -> Result<(), CliError> {
    let problem = build_problem(&cfg)?;
    let cv = char_value_for_mode(&problem, cfg.mode)?;
    let sb = branch_series(&problem, &cv, cfg.order.max(2))?;
    let opts = ContinuationOptions {
        steps: cfg.continuation.max_steps,
        ds: cfg.continuation.ds,
        initial_s: cfg.continuation.initial_s,
        ..ContinuationOptions::default()
    };
    let branch = continue_branch(&problem, &sb, &opts)?;
    let payload = branch_payload(&branch);

    ensure_out_dir(&cfg)?;
    if cfg.wants(OutputFormat::Csv) {
        let rows: Vec<Vec<String>> = payload
            .points
            .iter()
            .map(|p| {
                vec![
                    p.step.to_string(),
                    fmt_f64(p.mu),
                    fmt_f64(p.amplitude),
                    fmt_f64(p.residual),
                    fmt_f64(p.max_slope),
                    fmt_f64(p.positivity_defect),
                    p.min_denominator.map(fmt_f64).unwrap_or_default(),
                    p.newton_iters.to_string(),
                ]
            })
            .collect();
        write_csv(
            &cfg.out_dir,
            "branch",
            &[
                "step",
                "mu",
                "amplitude",
                "residual",
                "max_slope",
                "positivity_defect",
                "min_denominator",
                "newton_iters",
            ],
            &rows,
        )?;

        // Plot-ready wave profiles, one block per accepted point.
        let grid = 8 * cfg.n_modes;
        let mut profile_rows = Vec::with_capacity(branch.points.len() * grid);
        for (i, p) in branch.points.iter().enumerate() {
            for j in 0..grid {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / grid as f64;
                profile_rows.push(vec![
                    i.to_string(),
                    fmt_f64(theta),
                    fmt_f64(p.phi.eval(theta)),
                ]);
            }
        }
        write_csv(&cfg.out_dir, "profiles", &["step", "theta", "phi"], &profile_rows)?;
    }
    if cfg.wants(OutputFormat::Json) {
        ResultDocument::new("continue", cfg.clone(), &payload).write_json(&cfg.out_dir)?;
    }
    println!(
        "continue: {} points from mu* = {:.6}, mu in [{:.6}, {:.6}], terminated by {}",
        payload.points.len(),
        payload.origin,
        payload.mu_min,
        payload.mu_max,
        payload.termination
    );
    Ok(())
}

// ------------------------------------------------------------------ verify

#[derive(Serialize)]
struct CheckRow {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyPayload {
    schema: &'static str,
    checks: Vec<CheckRow>,
    all_passed: bool,
}

/// Full cross-check battery; exits nonzero if any check fails.
pub fn cmd_verify(cfg: RunConfig) -> Result<(), CliError> {
    let opts = VerifyOptions {
        n_modes: cfg.n_modes,
        kernel_perturbation: cfg.test_hooks.kernel_perturbation,
        ..VerifyOptions::default()
    };
    let results = run_battery(&opts);
    let checks: Vec<CheckRow> = results
        .iter()
        .map(|c| CheckRow { name: c.name.to_string(), passed: c.passed, detail: c.detail.clone() })
        .collect();
    let failed = checks.iter().filter(|c| !c.passed).count();
    let payload =
        VerifyPayload { schema: "wavebranch.verify/1", checks, all_passed: failed == 0 };

    ensure_out_dir(&cfg)?;
    if cfg.wants(OutputFormat::Csv) {
        let rows: Vec<Vec<String>> = payload
            .checks
            .iter()
            .map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.replace(',', ";")])
            .collect();
        write_csv(&cfg.out_dir, "verify", &["name", "passed", "detail"], &rows)?;
    }
    if cfg.wants(OutputFormat::Json) {
        ResultDocument::new("verify", cfg.clone(), &payload).write_json(&cfg.out_dir)?;
    }
    for c in &payload.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}
