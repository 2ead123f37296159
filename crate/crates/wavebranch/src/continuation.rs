//! Pseudo-arclength continuation of solution branches away from the
//! bifurcation point, with per-point diagnostics (wave slope, denominator
//! margin, positivity defect) and explicit termination reasons.

use crate::error::{Error, Result};
use crate::operators::{Nonlinearity, WaveProblem};
use crate::series::SeriesBranch;
use crate::spectral::SineSeries;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Newton convergence tolerance on the residual norm.
pub const TOL_NEWTON: f64 = 1e-11;
const MAX_NEWTON_ITERS: usize = 30;

/// Why a continuation run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The requested number of steps was taken.
    StepBudget,
    /// The maximal wave slope reached the configured bound.
    SlopeBound,
    /// The integrand denominator degenerated and step reduction ran out.
    DenominatorBreakdown,
    /// The corrector failed to converge even at the minimal step.
    NewtonFailure,
}

/// Pointwise health indicators of a branch point.
#[derive(Debug, Clone, Copy)]
pub struct Diagnostics {
    /// max |phi| on a refined grid: the maximal wave slope angle.
    pub max_slope: f64,
    /// min of phi over [0, pi]; nonnegative for cone (positivity) solutions.
    pub positivity_defect: f64,
    /// Minimum of the denominator w = 1 + mu W, when the operator has one.
    pub min_denominator: Option<f64>,
    pub newton_iters: usize,
}

/// One converged solution along the branch.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub mu: f64,
    pub phi: SineSeries,
    /// Eigendirection amplitude (dominant-mode coefficient).
    pub amplitude: f64,
    pub residual: f64,
    pub diagnostics: Diagnostics,
}

/// A continued branch with its termination reason.
#[derive(Debug, Clone)]
pub struct Branch {
    /// Characteristic value the branch emanates from.
    pub origin: f64,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

/// Continuation controls.
#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    pub steps: usize,
    /// Initial arclength step.
    pub ds: f64,
    pub max_ds: f64,
    pub min_ds: f64,
    /// Series parameter for the first point.
    pub initial_s: f64,
    /// Slope bound triggering termination (default pi/6 minus a margin).
    pub slope_limit: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            steps: 50,
            ds: 0.02,
            max_ds: 0.25,
            min_ds: 1e-8,
            initial_s: 0.02,
            slope_limit: PI / 6.0 - 0.01,
        }
    }
}

fn residual(problem: &WaveProblem, phi: &SineSeries, mu: f64) -> Result<SineSeries> {
    Ok(phi.sub(&problem.apply_at(phi, mu)?))
}

/// Damped Newton for the fixed-parameter system `phi = A(phi, mu)`.
pub fn newton_solve(
    problem: &WaveProblem,
    mu: f64,
    guess: &SineSeries,
) -> Result<(SineSeries, usize)> {
    let n = problem.n_modes;
    let mut phi = guess.clone();
    let mut r = residual(problem, &phi, mu)?;
    for it in 0..MAX_NEWTON_ITERS {
        if r.norm() <= TOL_NEWTON * 1.0f64.max(phi.norm()) {
            return Ok((phi, it));
        }
        let jac = DMatrix::identity(n, n) - problem.jacobian(&phi, mu)?;
        let delta = jac
            .lu()
            .solve(&DVector::from_column_slice(r.coeffs()))
            .ok_or(Error::NewtonDiverged { iters: it, residual: r.norm() })?;
        let delta = SineSeries::new(delta.iter().copied().collect());
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let cand = phi.sub(&delta.scale(step));
            match residual(problem, &cand, mu) {
                Ok(rc) if rc.norm() < r.norm() => {
                    phi = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            return Err(Error::NewtonDiverged { iters: it, residual: r.norm() });
        }
    }
    Err(Error::NewtonDiverged { iters: MAX_NEWTON_ITERS, residual: r.norm() })
}

/// Newton for the amplitude-pinned system: `phi = A(phi, mu)` plus the
/// constraint that the `mode` coefficient equals `amplitude`, with mu free.
/// Robust near bifurcation points where the fixed-parameter Jacobian is
/// nearly singular and plain Newton drifts to the trivial solution.
pub fn newton_solve_pinned(
    problem: &WaveProblem,
    mode: usize,
    amplitude: f64,
    guess: &SineSeries,
    mu_guess: f64,
) -> Result<(SineSeries, f64, usize)> {
    let n = problem.n_modes;
    let mut phi = guess.clone();
    *phi.coeff_mut(mode) = amplitude;
    let mut mu = mu_guess;

    let full_res = |phi: &SineSeries, mu: f64| -> Result<DVector<f64>> {
        let r = residual(problem, phi, mu)?;
        let mut v = DVector::zeros(n + 1);
        for i in 0..n {
            v[i] = r.coeffs()[i];
        }
        v[n] = phi.coeff(mode) - amplitude;
        Ok(v)
    };

    let mut r = full_res(&phi, mu)?;
    for it in 0..MAX_NEWTON_ITERS {
        if r.norm() <= TOL_NEWTON * 1.0f64.max(phi.norm()) {
            return Ok((phi, mu, it));
        }
        let da = problem.jacobian(&phi, mu)?;
        let dmu = problem.mu_derivative(&phi, mu)?;
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = f64::from(i == j) - da[(i, j)];
            }
            jac[(i, n)] = -dmu.coeffs()[i];
        }
        jac[(n, mode - 1)] = 1.0;
        let delta = jac
            .lu()
            .solve(&r)
            .ok_or(Error::NewtonDiverged { iters: it, residual: r.norm() })?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let mut cand = phi.clone();
            for i in 0..n {
                *cand.coeff_mut(i + 1) -= step * delta[i];
            }
            let mu_cand = mu - step * delta[n];
            match full_res(&cand, mu_cand) {
                Ok(rc) if rc.norm() < r.norm() => {
                    phi = cand;
                    mu = mu_cand;
                    r = rc;
                    accepted = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            return Err(Error::NewtonDiverged { iters: it, residual: r.norm() });
        }
    }
    Err(Error::NewtonDiverged { iters: MAX_NEWTON_ITERS, residual: r.norm() })
}

/// Branch-point diagnostics on a refined evaluation grid (at least 8N).
pub fn diagnose(
    problem: &WaveProblem,
    phi: &SineSeries,
    mu: f64,
    newton_iters: usize,
) -> Result<Diagnostics> {
    let m = 8 * problem.n_modes;
    let mut max_slope = 0.0f64;
    let mut positivity_defect = f64::INFINITY;
    for j in 0..m {
        let theta = 2.0 * PI * j as f64 / m as f64;
        let v = phi.eval(theta);
        max_slope = max_slope.max(v.abs());
        if theta <= PI {
            positivity_defect = positivity_defect.min(v);
        }
    }
    // Include the endpoint theta = pi (phi vanishes there identically for
    // odd trig polynomials, keeping the defect <= 0 bounded by symmetry).
    positivity_defect = positivity_defect.min(phi.eval(PI));
    let min_denominator = problem.denominator_min(phi, mu)?;
    Ok(Diagnostics { max_slope, positivity_defect, min_denominator, newton_iters })
}

/// Arclength corrector: solves `phi - A(phi, mu) = 0` together with the
/// hyperplane condition `<tangent, z - z_pred> = 0`.
fn arclength_correct(
    problem: &WaveProblem,
    phi_pred: &SineSeries,
    mu_pred: f64,
    t_phi: &SineSeries,
    t_mu: f64,
) -> Result<(SineSeries, f64, usize)> {
    let n = problem.n_modes;
    let mut phi = phi_pred.clone();
    let mut mu = mu_pred;

    let full_res = |phi: &SineSeries, mu: f64| -> Result<DVector<f64>> {
        let r = residual(problem, phi, mu)?;
        let mut v = DVector::zeros(n + 1);
        for i in 0..n {
            v[i] = r.coeffs()[i];
        }
        let dphi = phi.sub(phi_pred);
        v[n] = dot(&dphi, t_phi) + (mu - mu_pred) * t_mu;
        Ok(v)
    };

    let mut r = full_res(&phi, mu)?;
    for it in 0..MAX_NEWTON_ITERS {
        if r.norm() <= TOL_NEWTON * 1.0f64.max(phi.norm()) {
            return Ok((phi, mu, it));
        }
        let da = problem.jacobian(&phi, mu)?;
        let dmu = problem.mu_derivative(&phi, mu)?;
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = f64::from(i == j) - da[(i, j)];
            }
            jac[(i, n)] = -dmu.coeffs()[i];
            jac[(n, i)] = t_phi.coeffs()[i];
        }
        jac[(n, n)] = t_mu;
        let delta = jac
            .lu()
            .solve(&r)
            .ok_or(Error::NewtonDiverged { iters: it, residual: r.norm() })?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let mut cand = phi.clone();
            for i in 0..n {
                *cand.coeff_mut(i + 1) -= step * delta[i];
            }
            let mu_cand = mu - step * delta[n];
            match full_res(&cand, mu_cand) {
                Ok(rc) if rc.norm() < r.norm() => {
                    phi = cand;
                    mu = mu_cand;
                    r = rc;
                    accepted = true;
                    break;
                }
                Err(e @ Error::DenominatorVanished { .. }) | Err(e @ Error::OverflowGuard { .. })
                    if step <= 1.0 / 128.0 =>
                {
                    return Err(e);
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            return Err(Error::NewtonDiverged { iters: it, residual: r.norm() });
        }
    }
    Err(Error::NewtonDiverged { iters: MAX_NEWTON_ITERS, residual: r.norm() })
}

fn dot(a: &SineSeries, b: &SineSeries) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum()
}

fn dominant_mode(omega: &SineSeries) -> usize {
    omega
        .coeffs()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap()
        .0
        + 1
}

/// Continues the branch described by `series` away from its bifurcation
/// point. The first two points come from series-predicted, amplitude-pinned
/// Newton solves (robust near the singular Jacobian); subsequent points use
/// secant-predicted pseudo-arclength steps with adaptive step control.
pub fn continue_branch(
    problem: &WaveProblem,
    series: &SeriesBranch,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let mode = dominant_mode(&series.omega);
    let mut points: Vec<BranchPoint> = Vec::new();

    // Seed points from the series predictor.
    for &s in &[opts.initial_s, opts.initial_s * 1.5] {
        let (mu_pred, phi_pred) = series.eval(s);
        let amp = phi_pred.coeff(mode);
        let (phi, mu, iters) = newton_solve_pinned(problem, mode, amp, &phi_pred, mu_pred)?;
        let res = residual(problem, &phi, mu)?.norm();
        let diagnostics = diagnose(problem, &phi, mu, iters)?;
        points.push(BranchPoint { mu, phi, amplitude: amp, residual: res, diagnostics });
    }
    // Canonical orientation: positive eigendirection amplitude.
    debug_assert!(points[0].amplitude > 0.0 || series.terms[0].coeff(mode) <= 0.0);

    let mut ds = opts.ds;
    let mut termination = Termination::StepBudget;
    for _ in 0..opts.steps {
        let last = &points[points.len() - 1];
        let prev = &points[points.len() - 2];
        // Secant tangent in (phi, mu), unit weights.
        let mut t_phi = last.phi.sub(&prev.phi);
        let mut t_mu = last.mu - prev.mu;
        let norm = (dot(&t_phi, &t_phi) + t_mu * t_mu).sqrt();
        t_phi = t_phi.scale(1.0 / norm);
        t_mu /= norm;

        // Step, halving on corrector failure.
        let mut step_ok = None;
        loop {
            let phi_pred = last.phi.add(&t_phi.scale(ds));
            let mu_pred = last.mu + t_mu * ds;
            match arclength_correct(problem, &phi_pred, mu_pred, &t_phi, t_mu) {
                Ok(sol) => {
                    step_ok = Some(sol);
                    break;
                }
                Err(Error::DenominatorVanished { .. }) if ds / 2.0 < opts.min_ds => {
                    termination = Termination::DenominatorBreakdown;
                    break;
                }
                Err(_) if ds / 2.0 >= opts.min_ds => ds /= 2.0,
                Err(Error::DenominatorVanished { .. }) => {
                    termination = Termination::DenominatorBreakdown;
                    break;
                }
                Err(_) => {
                    termination = Termination::NewtonFailure;
                    break;
                }
            }
        }
        let Some((phi, mu, iters)) = step_ok else { break };
        let res = residual(problem, &phi, mu)?.norm();
        let diagnostics = diagnose(problem, &phi, mu, iters)?;
        // A corrected point past the slope bound is never accepted: the
        // formulation degrades beyond it, so the branch stops at the last
        // point inside the bound.
        if diagnostics.max_slope >= opts.slope_limit {
            termination = Termination::SlopeBound;
            break;
        }
        let amplitude = phi.coeff(mode);
        points.push(BranchPoint { mu, phi, amplitude, residual: res, diagnostics });
        if let Some(w) = diagnostics.min_denominator {
            if w <= 100.0 * crate::operators::EPS_DEN {
                termination = Termination::DenominatorBreakdown;
                break;
            }
        }
        if iters <= 3 {
            ds = (ds * 1.3).min(opts.max_ds);
        }
    }

    Ok(Branch { origin: series.mu_star, points, termination })
}

/// True when the problem has a denominator that can degenerate.
pub fn has_denominator(problem: &WaveProblem) -> bool {
    matches!(problem.nonlinearity, Nonlinearity::Nekrasov)
}
