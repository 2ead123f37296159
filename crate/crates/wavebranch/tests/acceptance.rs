//! Acceptance suite: one test per top-level criterion, each printing a
//! single pass/fail line with the measured quantity.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavebranch::branching::equivalence_check;
use wavebranch::continuation::{
    continue_branch, newton_solve, newton_solve_pinned, ContinuationOptions, Termination,
};
use wavebranch::linear::{char_values, detect_bifurcations};
use wavebranch::operators::{Kernel, PolyNonlinearity, WaveProblem};
use wavebranch::series::branch_series;
use wavebranch::spectral::{from_grid_cosine, SineSeries};
use wavebranch::verify::{run_battery, VerifyOptions};

fn report(criterion: &str, passed: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[test]
fn criterion_1_characteristic_values() {
    let start = Instant::now();
    let p = WaveProblem::nekrasov_infinite(64, 0.0);
    let cvs = char_values(&p.linearize().b).unwrap();
    let mut worst = 0.0f64;
    for n in 1..=16usize {
        worst = worst.max((cvs[n - 1].mu_star - 3.0 * n as f64).abs());
    }
    for ratio in [0.1, 0.5, 1.0, 5.0] {
        let p = WaveProblem::nekrasov_finite(ratio, 1.0, 64, 0.0).unwrap();
        let cvs = char_values(&p.linearize().b).unwrap();
        for n in 1..=16usize {
            let expect = 3.0 * n as f64 / (2.0 * PI * n as f64 * ratio).tanh();
            worst = worst.max((cvs[n - 1].mu_star - expect).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1",
        worst <= 1e-12 && elapsed < 5.0,
        &format!("characteristic values off by at most {worst:.3e} in {elapsed:.2}s"),
    );
}

#[test]
fn criterion_2_kernel_identity() {
    let start = Instant::now();
    let kernel = Kernel::LogDifference;
    let n_sum = 10_000usize;
    let grid = 100usize;
    // Off-singular part of a uniform 100x100 grid: both half-angle sines at
    // least 1/2, so the Abel tail bound (1/N)(1/s_a + 1/s_b) stays below
    // 4/N. The irrational offset avoids rational angles where the tail
    // cancels atypically.
    let offset = 0.5f64.sqrt();
    let mut worst = 0.0f64;
    let mut points = 0usize;
    for i in 0..grid {
        let eps = 2.0 * PI * (i as f64 + offset) / grid as f64;
        for j in 0..grid {
            let theta = 2.0 * PI * (j as f64 + 2.0 * offset) / grid as f64;
            if ((eps - theta) / 2.0).sin().abs() < 0.5
                || ((eps + theta) / 2.0).sin().abs() < 0.5
            {
                continue;
            }
            points += 1;
            let exact = kernel.eval(eps, theta).unwrap();
            let (se, ce) = (eps.sin(), eps.cos());
            let (st, ct) = (theta.sin(), theta.cos());
            let (mut sne, mut cne) = (se, ce);
            let (mut snt, mut cnt) = (st, ct);
            let mut acc = 0.0;
            for n in 1..=n_sum {
                acc += sne * snt / n as f64;
                let (s2, c2) = (sne * ce + cne * se, cne * ce - sne * se);
                sne = s2;
                cne = c2;
                let (s2, c2) = (snt * ct + cnt * st, cnt * ct - snt * st);
                snt = s2;
                cnt = c2;
            }
            worst = worst.max((exact + 4.0 * acc).abs());
        }
    }
    let bound = 4.0 / n_sum as f64;
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "2",
        worst <= bound && elapsed < 10.0,
        &format!(
            "kernel vs truncated series: max deviation {worst:.3e} <= {bound:.1e} over {points} grid points in {elapsed:.2}s"
        ),
    );
}

#[test]
fn criterion_3_first_bifurcations_and_no_positive_waves_below() {
    let p = WaveProblem::nekrasov_infinite(64, 0.0);
    let split = p.linearize();
    let found = detect_bifurcations(&split.b, 0.0, 10.0).unwrap();
    let mut ok = found.len() == 3;
    let mut detail = String::new();
    for (cand, expect) in found.iter().zip([3.0, 6.0, 9.0]) {
        ok &= (cand.char_value.mu_star - expect).abs() <= 1e-10 && cand.guaranteed;
    }
    detail.push_str(&format!("{} guaranteed bifurcation points in (0,10)", found.len()));

    // Multistart scan below the first characteristic value. Small
    // nontrivial solutions do exist there (the subcritical side of the
    // first branch, with negative leading coefficient), so the no-waves
    // statement is checked for positive waves: any converged nontrivial
    // solution must leave the positivity cone.
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    let mut cone_hits = 0usize;
    let mut starts = 0usize;
    for mu in [1.5, 2.5] {
        for _ in 0..8 {
            starts += 1;
            let coeffs: Vec<f64> = (0..64).map(|_| 0.05 * rng.gen_range(-1.0..1.0f64)).collect();
            let guess = SineSeries::new(coeffs);
            let Ok((phi, _)) = newton_solve(&p, mu, &guess) else { continue };
            if phi.norm() <= 1e-8 {
                continue;
            }
            let mut defect = f64::INFINITY;
            for j in 0..=512 {
                defect = defect.min(phi.eval(PI * j as f64 / 512.0));
            }
            if defect >= -1e-8 {
                cone_hits += 1;
            }
        }
    }
    detail.push_str(&format!("; {starts} multistarts below mu=3, {cone_hits} positive-wave hits"));
    report("3", ok && cone_hits == 0, &detail);
}

#[test]
fn criterion_4_series_residual_order() {
    let start = Instant::now();
    let p = WaveProblem::nekrasov_infinite(64, 0.0);
    let cv = char_values(&p.linearize().b).unwrap().remove(0);
    let k = 5;
    let sb = branch_series(&p, &cv, k).unwrap();
    let lambdas = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    // The order-6 residual at lambda = 1e-3 sits near 1e-21, two decades
    // below one ulp of the solution coefficients, so the norm is evaluated
    // with the compensated double-double pipeline and cross-checked against
    // the production operator at the largest sample.
    let mut residuals = Vec::new();
    for &lam in &lambdas {
        residuals.push(dd::series_residual_norm(&sb, p.n_modes, lam));
    }
    let (mu, phi) = sb.eval(lambdas[0]);
    let f64_norm = phi.sub(&p.apply_at(&phi, mu).unwrap()).norm();
    let oracle_gap = (residuals[0] - f64_norm).abs() / f64_norm;
    let slope = fit_slope(&lambdas, &residuals);
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "4",
        slope >= (k as f64) + 0.7 && oracle_gap <= 1e-6 && elapsed < 30.0,
        &format!(
            "K={k} residual order {slope:.2} (needs >= {}), evaluator agreement {oracle_gap:.1e}, in {elapsed:.2}s",
            k as f64 + 0.7
        ),
    );
}

#[test]
fn criterion_5_reduction_equivalence() {
    let p = WaveProblem::nekrasov_infinite(32, 0.0);
    let cv = char_values(&p.linearize().b).unwrap().remove(0);
    let sb = branch_series(&p, &cv, 4).unwrap();
    let rep = equivalence_check(&p, &cv, &sb, 0.15, 3).unwrap();
    report(
        "5",
        rep.max_rel <= 1e-6,
        &format!(
            "series vs branching-equation roots: max relative discrepancy {:.3e} through order 4",
            rep.max_rel
        ),
    );
}

#[test]
fn criterion_6a_newton_matches_series() {
    let p = WaveProblem::nekrasov_infinite(32, 0.0);
    let cv = char_values(&p.linearize().b).unwrap().remove(0);
    let k = 4;
    let sb = branch_series(&p, &cv, k).unwrap();
    let lambdas = [0.05, 0.03, 0.02, 0.01, 0.005];
    let mut diffs = Vec::new();
    let mut worst_res = 0.0f64;
    for &lam in &lambdas {
        let (mu, phi_series) = sb.eval(lam);
        let (phi, _) = newton_solve(&p, mu, &phi_series).unwrap();
        worst_res = worst_res.max(phi.sub(&p.apply_at(&phi, mu).unwrap()).norm());
        diffs.push(phi.sub(&phi_series).norm());
    }
    let slope = fit_slope(&lambdas, &diffs);
    report(
        "6a",
        worst_res <= 1e-11 && slope >= (k as f64) + 0.7,
        &format!(
            "Newton residual {worst_res:.2e}, series-vs-Newton gap of order {slope:.2} (needs >= {})",
            k as f64 + 0.7
        ),
    );
}

#[test]
fn criterion_6b_branch_health_over_200_steps() {
    let p = WaveProblem::nekrasov_infinite(32, 0.0);
    let cv = char_values(&p.linearize().b).unwrap().remove(0);
    let sb = branch_series(&p, &cv, 4).unwrap();
    let opts = ContinuationOptions { steps: 200, ..Default::default() };
    let branch = continue_branch(&p, &sb, &opts).unwrap();
    let mut ok = true;
    let mut worst_res = 0.0f64;
    let mut worst_den = f64::INFINITY;
    for pt in &branch.points {
        worst_res = worst_res.max(pt.residual);
        let w = pt.diagnostics.min_denominator.unwrap();
        worst_den = worst_den.min(w);
        ok &= pt.residual <= 1e-10 && w > 1e-10;
    }
    report(
        "6b",
        ok && branch.points.len() >= 10,
        &format!(
            "{} points, max residual {worst_res:.2e}, min denominator {worst_den:.3e}, terminated by {:?}",
            branch.points.len(),
            branch.termination
        ),
    );
}

#[test]
fn criterion_6c_parameter_offset_at_small_amplitude() {
    // The first branch crosses its bifurcation point transversally: the
    // parameter offset grows linearly in the amplitude with slope 9, so at
    // amplitude 1e-3 the offset sits near 9e-3 and the 1e-4 target assumes
    // a quadratic (pitchfork) scaling this branch does not have. The check
    // is kept as stated and fails honestly.
    let p = WaveProblem::nekrasov_infinite(32, 0.0);
    let cv = char_values(&p.linearize().b).unwrap().remove(0);
    let sb = branch_series(&p, &cv, 4).unwrap();
    let amplitude = 1e-3;
    // Series parameter giving that amplitude (leading eigencomponent 1/9).
    let s = amplitude / sb.eigencomponents()[0];
    let (mu_pred, phi_pred) = sb.eval(s);
    let (_, mu, _) = newton_solve_pinned(&p, 1, amplitude, &phi_pred, mu_pred).unwrap();
    let offset = (mu - 3.0).abs();
    report("6c", offset <= 1e-4, &format!("|mu - 3| = {offset:.3e} at amplitude 1e-3"));
}

#[test]
fn criterion_7_cone_monitors_along_the_conjugate_branch() {
    let p = WaveProblem::krasovskii(32, 0.0);
    let cv = char_values(&p.linearize().b).unwrap().remove(0);
    let sb = branch_series(&p, &cv, 4).unwrap();
    let opts = ContinuationOptions { steps: 2000, ..Default::default() };
    let branch = continue_branch(&p, &sb, &opts).unwrap();
    let slope_limit = PI / 6.0 - 0.01;
    let mut ok = branch.termination == Termination::SlopeBound;
    let mut worst_defect = 0.0f64;
    let mut mu_min = f64::INFINITY;
    let mut mu_max = f64::NEG_INFINITY;
    for pt in &branch.points {
        worst_defect = worst_defect.min(pt.diagnostics.positivity_defect);
        ok &= pt.diagnostics.positivity_defect >= -1e-12;
        ok &= pt.diagnostics.max_slope < slope_limit;
        mu_min = mu_min.min(pt.mu);
        mu_max = mu_max.max(pt.mu);
    }
    report(
        "7",
        ok,
        &format!(
            "{} points, positivity defect >= {worst_defect:.2e}, terminated by {:?}, empirical mu interval [{mu_min:.6}, {mu_max:.6}]",
            branch.points.len(),
            branch.termination
        ),
    );
}

#[test]
fn criterion_8_odd_symmetry_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0008);
    let n = 16;
    let problems = [
        WaveProblem::nekrasov_infinite(n, 2.0),
        WaveProblem::krasovskii(n, 0.8),
        WaveProblem::hammerstein(
            Kernel::FourierDiagonal((1..=n).map(|k| 3.0 * k as f64).collect()),
            PolyNonlinearity::new(vec![1.0, 0.0, -1.0]),
            n,
            2.0,
        )
        .unwrap(),
    ];
    let mut worst = 0.0f64;
    for i in 0..100 {
        let p = &problems[i % problems.len()];
        let coeffs: Vec<f64> = (0..n).map(|_| 0.1 * rng.gen_range(-1.0..1.0f64)).collect();
        let phi = SineSeries::new(coeffs);
        let g = p.integrand_grid(&phi, p.mu).unwrap();
        let even = from_grid_cosine(&g, n).unwrap();
        let leak = even.coeffs.iter().fold(even.mean.abs(), |m, c| m.max(c.abs()));
        worst = worst.max(leak);
    }
    report(
        "8",
        worst <= 1e-12,
        &format!("even-projection of 100 random odd-input operator images <= {worst:.3e}"),
    );
}

#[test]
fn criterion_9_verify_battery_deterministic_and_timely() {
    let start = Instant::now();
    let opts = VerifyOptions::default();
    let first = run_battery(&opts);
    let second = run_battery(&opts);
    let elapsed = start.elapsed().as_secs_f64();
    let all_pass = first.iter().all(|c| c.passed);
    let deterministic = first.len() == second.len()
        && first
            .iter()
            .zip(&second)
            .all(|(a, b)| a.name == b.name && a.passed == b.passed && a.detail == b.detail);
    report(
        "9",
        all_pass && deterministic && elapsed < 180.0,
        &format!(
            "{} checks, all passed: {all_pass}, repeat run identical: {deterministic}, two runs in {elapsed:.2}s",
            first.len()
        ),
    );
}

/// Double-double (compensated) re-evaluation of the operator residual.
/// Mirrors the production grid pipeline step by step, but carries roughly
/// 32 significant digits so residuals far below one f64 ulp of the solution
/// coefficients remain measurable.
mod dd {
    use wavebranch::series::SeriesBranch;

    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        hi: f64,
        lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let v = s - a;
        let e = (a - (s - v)) + (b - v);
        Dd { hi: s, lo: e }
    }

    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    impl Dd {
        pub fn from(a: f64) -> Dd {
            Dd { hi: a, lo: 0.0 }
        }

        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }

        pub fn add(self, o: Dd) -> Dd {
            let s = two_sum(self.hi, o.hi);
            quick_two_sum(s.hi, s.lo + self.lo + o.lo)
        }

        pub fn sub(self, o: Dd) -> Dd {
            self.add(o.neg())
        }

        pub fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }

        pub fn mul(self, o: Dd) -> Dd {
            let p = two_prod(self.hi, o.hi);
            quick_two_sum(p.hi, p.lo + self.hi * o.lo + self.lo * o.hi)
        }

        pub fn div(self, o: Dd) -> Dd {
            let q1 = self.hi / o.hi;
            let r = self.sub(Dd::from(q1).mul(o));
            let q2 = r.hi / o.hi;
            let r2 = r.sub(Dd::from(q2).mul(o));
            let q3 = r2.hi / o.hi;
            quick_two_sum(q1, q2).add(Dd::from(q3))
        }

        pub fn scale(self, a: f64) -> Dd {
            self.mul(Dd::from(a))
        }
    }

    /// sin and cos by Taylor series; adequate for |x| <= pi/2.
    fn sin_cos_taylor(x: Dd) -> (Dd, Dd) {
        let x2 = x.mul(x);
        let mut s = Dd::from(0.0);
        let mut c = Dd::from(0.0);
        let mut term_s = x;
        let mut term_c = Dd::from(1.0);
        for i in 0..24u32 {
            s = s.add(term_s);
            c = c.add(term_c);
            let k = (2 * i + 2) as f64;
            term_s = term_s.mul(x2).div(Dd::from(-(k + 1.0) * k));
            term_c = term_c.mul(x2).div(Dd::from(-k * (k - 1.0)));
        }
        (s, c)
    }

    /// sin(2 pi k / m) and cos(2 pi k / m) tables for k = 0..m, m divisible
    /// by 4, via quadrant symmetry (mirrors the production integer-index
    /// trigonometric table).
    struct Trig {
        m: usize,
        sin: Vec<Dd>,
        cos: Vec<Dd>,
    }

    impl Trig {
        fn new(m: usize) -> Trig {
            assert!(m % 4 == 0);
            // 2 pi with an exactly doubled double-double splitting of pi.
            let two_pi = Dd { hi: 2.0 * std::f64::consts::PI, lo: 2.0 * 1.224_646_799_147_353_2e-16 };
            let quarter = m / 4;
            let mut base: Vec<(Dd, Dd)> = Vec::with_capacity(quarter + 1);
            for k in 0..=quarter {
                let x = two_pi.scale(k as f64).div(Dd::from(m as f64));
                base.push(sin_cos_taylor(x));
            }
            let mut sin = Vec::with_capacity(m);
            let mut cos = Vec::with_capacity(m);
            for k in 0..m {
                let q = k / quarter;
                let r = k % quarter;
                let (s, c) = base[r];
                // base[quarter - r] holds (cos x, sin x) for x = 2 pi r / m.
                let (cos_x, sin_x) = base[quarter - r];
                let (sv, cv) = match q {
                    0 => (s, c),
                    1 => (cos_x, sin_x.neg()),
                    2 => (s.neg(), c.neg()),
                    _ => (cos_x.neg(), sin_x),
                };
                sin.push(sv);
                cos.push(cv);
            }
            Trig { m, sin, cos }
        }

        fn sin_at(&self, k: usize) -> Dd {
            self.sin[k % self.m]
        }

        fn cos_at(&self, k: usize) -> Dd {
            self.cos[k % self.m]
        }
    }

    /// `|| phi(lambda) - A(phi(lambda), mu* + lambda) ||` for the deep-water
    /// problem, replicated in double-double arithmetic. The stored f64 series
    /// coefficients are taken as exact inputs.
    pub fn series_residual_norm(sb: &SeriesBranch, n_modes: usize, lambda: f64) -> f64 {
        assert_eq!(sb.exponent, 1, "deep-water first branch expands in mu - mu*");
        let m = 4 * n_modes;
        let trig = Trig::new(m);
        let lam = Dd::from(lambda);
        let mu = Dd::from(sb.mu_star).add(lam.scale(sb.direction));

        // Series coefficients a_n = sum_k Phi_k[n] lambda^k.
        let mut a = vec![Dd::from(0.0); n_modes];
        let mut lam_pow = Dd::from(1.0);
        for term in &sb.terms {
            lam_pow = lam_pow.mul(lam);
            for (i, &c) in term.coeffs().iter().enumerate() {
                a[i] = a[i].add(lam_pow.scale(c));
            }
        }

        // Grid synthesis, pointwise sine, and the analysis at M/2 - 1 modes.
        let mut phi_grid = vec![Dd::from(0.0); m];
        for (i, &an) in a.iter().enumerate() {
            let n = i + 1;
            for (j, v) in phi_grid.iter_mut().enumerate() {
                *v = v.add(an.mul(trig.sin_at(n * j)));
            }
        }
        let sin_phi: Vec<Dd> = phi_grid
            .iter()
            .map(|v| {
                // sin of a small dd argument (|phi| < pi/2 on this branch).
                let (s, _) = sin_cos_taylor(*v);
                s
            })
            .collect();
        let aux = m / 2 - 1;
        let two_over_m = Dd::from(2.0).div(Dd::from(m as f64));
        let mut s_hat = vec![Dd::from(0.0); aux];
        for (i, c) in s_hat.iter_mut().enumerate() {
            let k = i + 1;
            let mut acc = Dd::from(0.0);
            for (j, v) in sin_phi.iter().enumerate() {
                acc = acc.add(v.mul(trig.sin_at(k * j)));
            }
            *c = acc.mul(two_over_m);
        }

        // Cumulative integral 1 + mu * sum s_n/n (1 - cos n theta), then the
        // integrand ratio and the final analysis step.
        let mut g = Vec::with_capacity(m);
        for j in 0..m {
            let mut w = Dd::from(0.0);
            for (i, &sn) in s_hat.iter().enumerate() {
                let n = i + 1;
                let over_n = sn.div(Dd::from(n as f64));
                w = w.add(over_n.sub(over_n.mul(trig.cos_at(n * j))));
            }
            let denom = Dd::from(1.0).add(mu.mul(w));
            g.push(sin_phi[j].div(denom));
        }
        let mut norm_sq = Dd::from(0.0);
        for i in 0..n_modes {
            let k = i + 1;
            let mut acc = Dd::from(0.0);
            for (j, v) in g.iter().enumerate() {
                acc = acc.add(v.mul(trig.sin_at(k * j)));
            }
            let out = mu.mul(acc).mul(two_over_m).div(Dd::from(3.0 * k as f64));
            let r = a[i].sub(out);
            norm_sq = norm_sq.add(r.mul(r));
        }
        norm_sq.to_f64().sqrt()
    }
}
