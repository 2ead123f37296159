//! Independent quadrature oracles for the spectral operator implementations.
//!
//! The infinite-depth operator is evaluated here directly from its defining
//! integral with the log-difference kernel, using singularity subtraction and
//! a dense composite rule; no Fourier-multiplier shortcut. The conjugate
//! -function operator is cross-checked against direct half-interval Simpson
//! projections.

use std::f64::consts::PI;
use wavebranch::operators::WaveProblem;
use wavebranch::spectral::SineSeries;

/// Cumulative Simpson integrals of `f` over [0, 2 pi]: returns `F[j] =
/// int_0^{2 pi j / m} f`, for even-indexed j exact to O(h^4); odd entries
/// are filled with a half-step Simpson using a midpoint refinement.
fn cumulative_simpson(f: &dyn Fn(f64) -> f64, m: usize) -> Vec<f64> {
    assert!(m % 2 == 0);
    let h = 2.0 * PI / m as f64;
    let mut out = vec![0.0; m + 1];
    for j in (2..=m).step_by(2) {
        let x0 = (j - 2) as f64 * h;
        out[j] = out[j - 2] + h / 3.0 * (f(x0) + 4.0 * f(x0 + h) + f(x0 + 2.0 * h));
    }
    for j in (1..m).step_by(2) {
        let x0 = (j - 1) as f64 * h;
        out[j] = out[j - 1] + h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
    }
    out
}

/// Direct evaluation of the infinite-depth operator at angle `theta`:
/// `-(mu / 12 pi) int_0^{2 pi} g(eps) ln |(1 - cos(eps - theta)) /
/// (1 - cos(eps + theta))| d eps`, with `g = sin(phi) / (1 + mu W)`.
///
/// Each log factor is handled by subtracting the first-order Taylor model of
/// g at the singular point; the subtracted part is integrated by a dense
/// periodic trapezoid rule and the model part analytically
/// (`int ln(1 - cos) = -2 pi ln 2`, `int sin * ln(1 - cos) = 0`).
fn oracle_apply(phi: &SineSeries, mu: f64, theta: f64, mq: usize) -> f64 {
    // Dense tables of g and g' at the quadrature nodes.
    let sin_phi = |x: f64| phi.eval(x).sin();
    let w_table = cumulative_simpson(&sin_phi, mq);
    let g_at = |j: usize, x: f64| {
        let w = 1.0 + mu * w_table[j];
        sin_phi(x) / w
    };
    let g_prime_at = |j: usize, x: f64| {
        let w = 1.0 + mu * w_table[j];
        let p = phi.eval(x);
        let phi_prime: f64 = phi
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, a)| a * (i + 1) as f64 * ((i + 1) as f64 * x).cos())
            .sum();
        (p.cos() * phi_prime * w - p.sin() * mu * p.sin()) / (w * w)
    };

    let h = 2.0 * PI / mq as f64;
    // theta must sit on the quadrature grid so the singular node is exact.
    let jt = (theta / h).round() as usize;
    assert!((jt as f64 * h - theta).abs() < 1e-12);
    let jt_m = (mq - jt) % mq; // singular node of the second log factor

    let g_t = g_at(jt, jt as f64 * h);
    let gp_t = g_prime_at(jt, jt as f64 * h);
    let g_mt = g_at(jt_m, jt_m as f64 * h);
    let gp_mt = g_prime_at(jt_m, jt_m as f64 * h);

    let mut i1 = 0.0; // subtracted integral against ln(1 - cos(eps - theta))
    let mut i2 = 0.0; // against ln(1 - cos(eps + theta))
    for j in 0..mq {
        let eps = j as f64 * h;
        let g = g_at(j, eps);
        if j != jt {
            let x = eps - theta;
            let log1 = (1.0 - x.cos()).ln();
            i1 += (g - g_t - gp_t * x.sin()) * log1;
        }
        if j != jt_m {
            let x = eps + theta;
            let log2 = (1.0 - x.cos()).ln();
            i2 += (g - g_mt + gp_mt * x.sin()) * log2;
        }
    }
    i1 *= h;
    i2 *= h;
    i1 += g_t * (-2.0 * PI * std::f64::consts::LN_2);
    i2 += g_mt * (-2.0 * PI * std::f64::consts::LN_2);

    -(mu / (12.0 * PI)) * (i1 - i2)
}

#[test]
fn infinite_depth_operator_matches_direct_singular_quadrature() {
    let n = 24;
    let mu = 2.5;
    let phi = {
        let mut c = vec![0.0; n];
        c[0] = 0.12;
        c[1] = -0.05;
        c[3] = 0.02;
        c[6] = -0.008;
        SineSeries::new(c)
    };
    let p = WaveProblem::nekrasov_infinite(n, mu);
    let out = p.apply(&phi).unwrap();

    let mq = 16384;
    let h = 2.0 * PI / mq as f64;
    for &jt in &[513usize, 1700, 3000, 6100, 7900] {
        let theta = jt as f64 * h;
        let direct = oracle_apply(&phi, mu, theta, mq);
        let spectral = out.eval(theta);
        assert!(
            (direct - spectral).abs() <= 1e-8,
            "theta = {theta}: direct {direct} vs spectral {spectral}"
        );
    }
}

#[test]
fn conjugate_operator_matches_half_interval_projection() {
    // A_n = mu * (2 / (pi n)) * int_0^pi e^{3 Psi} sin(phi) sin(n eps) d eps,
    // with the projection evaluated by composite Simpson, Psi and phi
    // directly from the coefficient definitions.
    let n = 12;
    let mu = 0.8;
    let phi = {
        let mut c = vec![0.0; n];
        c[0] = 0.3;
        c[2] = -0.07;
        c[4] = 0.015;
        SineSeries::new(c)
    };
    let p = WaveProblem::krasovskii(n, mu);
    let out = p.apply(&phi).unwrap();

    let psi = phi.conjugate();
    let g = |x: f64| (3.0 * psi.eval(x)).exp() * phi.eval(x).sin();
    let q = 40_000usize; // Simpson intervals on [0, pi]
    let h = PI / q as f64;
    for k in 1..=n {
        let f = |x: f64| g(x) * (k as f64 * x).sin();
        let mut acc = f(0.0) + f(PI);
        for i in 1..q {
            let x = i as f64 * h;
            acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
        }
        let proj = acc * h / 3.0;
        let direct = mu * 2.0 / (PI * k as f64) * proj;
        assert!(
            (direct - out.coeff(k)).abs() <= 1e-10,
            "mode {k}: direct {direct} vs spectral {}",
            out.coeff(k)
        );
    }
}
