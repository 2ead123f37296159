//! Lyapunov-Schmidt reduction at a simple characteristic value and the
//! series-vs-reduction equivalence check.
//!
//! Near mu* the solution is split as `phi = psi + alpha * omega` with omega
//! the kernel direction of `I - mu* B` and `psi` in its complement. The
//! complement equation is solved by Newton for each `(alpha, lambda)`
//! (lambda = mu - mu*), leaving the scalar bifurcation function
//! `F(alpha, lambda) = <phi - A(phi, mu* + lambda), omega>` whose nontrivial
//! zero curve alpha(lambda) is the reduced branch.

use crate::error::{Error, Result};
use crate::linear::CharValue;
use crate::operators::WaveProblem;
use crate::series::SeriesBranch;
use crate::spectral::SineSeries;
use nalgebra::{DMatrix, DVector};

/// Convergence tolerance for the complement Newton iteration (relative to
/// the solution scale).
const TOL_COMPLEMENT: f64 = 1e-12;
const MAX_COMPLEMENT_ITERS: usize = 50;

/// One evaluation of the reduced problem at `(alpha, lambda)`.
#[derive(Debug, Clone)]
pub struct BranchingSample {
    pub alpha: f64,
    pub lambda: f64,
    /// Bifurcation function value F(alpha, lambda).
    pub f_value: f64,
    /// Complement component psi (orthogonal to omega).
    pub psi: SineSeries,
    pub newton_iters: usize,
}

fn dot(a: &SineSeries, b: &SineSeries) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum()
}

fn unit_omega(cv: &CharValue) -> SineSeries {
    let mut omega = cv.eigenfunctions[0].clone();
    let dominant = omega
        .coeffs()
        .iter()
        .cloned()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap();
    if dominant < 0.0 {
        omega = omega.scale(-1.0);
    }
    omega.scale(1.0 / omega.norm())
}

/// Solves the complement equation at fixed `(alpha, lambda)` and returns the
/// reduced sample. `seed` warm-starts the Newton iteration.
pub fn lyapunov_schmidt_reduce(
    problem: &WaveProblem,
    cv: &CharValue,
    alpha: f64,
    lambda: f64,
    seed: Option<&SineSeries>,
) -> Result<BranchingSample> {
    if cv.multiplicity != 1 {
        return Err(Error::Config(format!(
            "reduction needs a simple characteristic value (multiplicity {})",
            cv.multiplicity
        )));
    }
    let omega = unit_omega(cv);
    let n = problem.n_modes;
    let mu = cv.mu_star + lambda;
    // Pinned coordinate: the dominant component of omega. Its Newton row is
    // replaced by the constraint <delta, omega> = 0 so updates stay in the
    // complement.
    let pin = omega
        .coeffs()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap()
        .0;

    let mut psi = match seed {
        Some(s) => s.sub(&omega.scale(dot(s, &omega))),
        None => SineSeries::zeros(n),
    };

    let residual_perp = |psi: &SineSeries| -> Result<(SineSeries, f64)> {
        let phi = psi.add(&omega.scale(alpha));
        let r = phi.sub(&problem.apply_at(&phi, mu)?);
        let f_value = dot(&r, &omega);
        Ok((r.sub(&omega.scale(f_value)), f_value))
    };

    let (mut r_perp, mut f_value) = residual_perp(&psi)?;
    for it in 0..MAX_COMPLEMENT_ITERS {
        let scale = 1.0f64.max(psi.norm() + alpha.abs());
        if r_perp.norm() <= TOL_COMPLEMENT * scale {
            return Ok(BranchingSample { alpha, lambda, f_value, psi, newton_iters: it });
        }
        let phi = psi.add(&omega.scale(alpha));
        let da = problem.jacobian(&phi, mu)?;
        let mut jac = DMatrix::identity(n, n) - da;
        let mut rhs = DVector::from_column_slice(r_perp.coeffs());
        for j in 0..n {
            jac[(pin, j)] = omega.coeff(j + 1);
        }
        rhs[pin] = 0.0;
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::ComplementNewtonDiverged { iters: it, residual: r_perp.norm() })?;
        let delta = SineSeries::new(delta.iter().copied().collect());

        // Damped update: halve until the projected residual decreases.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let candidate = psi.sub(&delta.scale(step));
            match residual_perp(&candidate) {
                Ok((r_new, f_new)) if r_new.norm() < r_perp.norm() => {
                    psi = candidate;
                    r_perp = r_new;
                    f_value = f_new;
                    accepted = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            return Err(Error::ComplementNewtonDiverged { iters: it, residual: r_perp.norm() });
        }
    }
    Err(Error::ComplementNewtonDiverged {
        iters: MAX_COMPLEMENT_ITERS,
        residual: r_perp.norm(),
    })
}

/// The scalar bifurcation function F(alpha, lambda).
pub fn bifurcation_function(
    problem: &WaveProblem,
    cv: &CharValue,
    alpha: f64,
    lambda: f64,
) -> Result<f64> {
    Ok(lyapunov_schmidt_reduce(problem, cv, alpha, lambda, None)?.f_value)
}

/// Finds a nontrivial root of F(., lambda) by scanning G = F / alpha for a
/// sign change over `n_scan` subintervals of `alpha_range` and bisecting.
/// Returns None when no sign change is found.
pub fn nontrivial_root_scan(
    problem: &WaveProblem,
    cv: &CharValue,
    lambda: f64,
    alpha_range: (f64, f64),
    n_scan: usize,
) -> Result<Option<BranchingSample>> {
    let (lo, hi) = alpha_range;
    assert!(lo < hi && n_scan >= 2);
    let trivial_width = 1e-6 * (hi - lo);
    let g = |alpha: f64| -> Result<Option<f64>> {
        // Exclude a neighborhood of the trivial solution: G = F / alpha is
        // numerically meaningless there (0 / 0).
        if alpha.abs() < trivial_width {
            return Ok(None);
        }
        match bifurcation_function(problem, cv, alpha, lambda) {
            Ok(f) => Ok(Some(f / alpha)),
            // Points where the operator itself breaks down (vanishing
            // denominator, overflow) are skipped, not fatal.
            Err(Error::DenominatorVanished { .. }) | Err(Error::OverflowGuard { .. }) => Ok(None),
            Err(Error::ComplementNewtonDiverged { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let h = (hi - lo) / n_scan as f64;
    let mut prev: Option<(f64, f64)> = None;
    for t in 0..=n_scan {
        let alpha = lo + t as f64 * h;
        let val = g(alpha)?;
        if let (Some((a0, g0)), Some(g1)) = (prev, val) {
            if g0 * g1 < 0.0 {
                // Illinois false-position refinement: unlike plain
                // bisection its iterates track the root, so they do not
                // stray into the excluded trivial zone when the bracket
                // straddles alpha = 0.
                let (mut a, mut b, mut ga, mut gb) = (a0, alpha, g0, g1);
                for _ in 0..120 {
                    let x = b - gb * (b - a) / (gb - ga);
                    let gx = match g(x)? {
                        Some(v) => v,
                        None => break,
                    };
                    if gx == 0.0 {
                        b = x;
                        break;
                    }
                    if gx * gb > 0.0 {
                        b = x;
                        gb = gx;
                        ga *= 0.5;
                    } else {
                        a = b;
                        ga = gb;
                        b = x;
                        gb = gx;
                    }
                    if (b - a).abs() <= 1e-14 * (1.0 + b.abs()) {
                        break;
                    }
                }
                return Ok(Some(lyapunov_schmidt_reduce(problem, cv, b, lambda, None)?));
            }
        }
        // Keep the last valid point as bracket end across skipped nodes
        // (alpha = 0 and operator-breakdown points).
        if let Some(v) = val {
            prev = Some((alpha, v));
        }
    }
    Ok(None)
}

/// Refines a root of F(., lambda) from a seed value by the secant method.
pub fn nontrivial_root_near(
    problem: &WaveProblem,
    cv: &CharValue,
    lambda: f64,
    alpha_seed: f64,
) -> Result<BranchingSample> {
    let mut a0 = alpha_seed;
    let mut a1 = alpha_seed * (1.0 + 1e-4) + 1e-12 * alpha_seed.signum();
    let mut f0 = bifurcation_function(problem, cv, a0, lambda)?;
    let mut f1 = bifurcation_function(problem, cv, a1, lambda)?;
    for it in 0..60 {
        if f1.abs() <= 1e-14 * (1.0 + a1.abs()) || (a1 - a0).abs() <= 1e-16 * (1.0 + a1.abs()) {
            return lyapunov_schmidt_reduce(problem, cv, a1, lambda, None);
        }
        if f1 == f0 {
            return Err(Error::NewtonDiverged { iters: it, residual: f1.abs() });
        }
        let a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
        a0 = a1;
        f0 = f1;
        a1 = a2;
        f1 = bifurcation_function(problem, cv, a1, lambda)?;
    }
    if f1.abs() <= 1e-12 * (1.0 + a1.abs()) {
        return lyapunov_schmidt_reduce(problem, cv, a1, lambda, None);
    }
    Err(Error::NewtonDiverged { iters: 60, residual: f1.abs() })
}

/// Comparison of the branch series against the reduced root curve.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// Series eigencomponents c_k = <Phi_k, omega>.
    pub series: Vec<f64>,
    /// Least-squares coefficients of the fitted root curve alpha(s).
    pub fitted: Vec<f64>,
    /// Relative discrepancy per order, 1..=K.
    pub rel_discrepancy: Vec<f64>,
    pub max_rel: f64,
    /// Condition estimate of the fit.
    pub condition: f64,
}

/// Cross-validates the branch series against the Lyapunov-Schmidt root
/// curve: at sample parameters s the root alpha(s) of F is located from the
/// series prediction and the resulting curve is least-squares fitted with
/// `guard` extra basis orders; the fitted coefficients must reproduce the
/// series eigencomponents.
pub fn equivalence_check(
    problem: &WaveProblem,
    cv: &CharValue,
    sb: &SeriesBranch,
    window: f64,
    guard: usize,
) -> Result<EquivalenceReport> {
    assert!(window > 0.0);
    let k = sb.order;
    let basis = k + guard;
    let e = sb.exponent as i32;
    let comps = sb.eigencomponents();

    // Symmetric sample set in the series parameter s; both branch sides.
    let n_half = 2 * basis + 2;
    let mut samples: Vec<(f64, f64)> = Vec::new(); // (s, alpha)
    for t in 0..n_half {
        let mag = window * (0.5 + 0.5 * t as f64 / (n_half - 1) as f64);
        for s in [mag, -mag] {
            let lambda = sb.direction * s.powi(e);
            let alpha_seed: f64 = comps
                .iter()
                .enumerate()
                .map(|(i, c)| c * s.powi(i as i32 + 1))
                .sum();
            let sample = nontrivial_root_near(problem, cv, lambda, alpha_seed)?;
            samples.push((s, sample.alpha));
        }
    }

    // Fit alpha(s) = sum_{j=1..basis} d_j s^j (no constant: alpha(0) = 0).
    // The basis uses the window-normalized variable u = s / window so the
    // least-squares columns stay O(1); raw monomials in s would let the
    // conditioning amplify the root-location noise into the coefficients.
    let rows = samples.len();
    let a = DMatrix::from_fn(rows, basis, |i, j| (samples[i].0 / window).powi(j as i32 + 1));
    let rhs = DVector::from_fn(rows, |i, _| samples[i].1);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > 1e12 {
        return Err(Error::FitIllConditioned { cond: condition });
    }
    let mut d = svd.solve(&rhs, 0.0).expect("svd solve");
    for j in 0..basis {
        d[j] /= window.powi(j as i32 + 1);
    }

    let scale = comps.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
    let mut rel = Vec::with_capacity(k);
    for i in 0..k {
        rel.push((d[i] - comps[i]).abs() / scale);
    }
    let max_rel = rel.iter().fold(0.0f64, |m, r| m.max(*r));
    Ok(EquivalenceReport {
        series: comps,
        fitted: d.iter().take(k).copied().collect(),
        rel_discrepancy: rel,
        max_rel,
        condition,
    })
}
