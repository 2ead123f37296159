//! Small-parameter series for solution branches near a simple characteristic
//! value: mu = mu* + s^e, phi = sum_k s^k Phi_k.
//!
//! The coefficients are built order by order. At each order k the truncated
//! system gives `(I - mu* B) Phi_k = R_k`, with `R_k` depending on lower
//! terms only. Since `I - mu* B` is singular in the bifurcation direction,
//! the eigencomponent of `Phi_j` stays free until the solvability condition
//! `<R_{j+e}, omega> = 0` fixes it. The first constant solves a genuine
//! polynomial equation (its degree is the leading nonlinearity order plus
//! one); later constants solve low-degree polynomial conditions that are
//! usually affine. When the first condition has only the zero root, the
//! parameterization mu = mu* + s is too coarse (the branch leaves
//! quadratically, as for symmetric pitchforks) and the exponent escalates
//! automatically; for even exponents both parameter directions
//! mu = mu* +- s^e are tried, so sub- and supercritical pitchforks are both
//! reachable.

use crate::error::{Error, Result};
use crate::linear::CharValue;
use crate::operators::{LinearMap, Nonlinearity, WaveProblem};
use crate::spectral::{
    cosine_to_grid_with, from_grid_with, GridFunction, SineSeries, TrigTable,
};
use nalgebra::{DMatrix, DVector};

/// Largest exponent tried before giving up on the branch parameterization.
const MAX_EXPONENT: u32 = 3;

/// Acceptable residual of a solvability condition after its constant is
/// fixed, relative to the right-hand-side scale.
const TOL_SOLVABILITY: f64 = 1e-9;

/// Truncated branch series around a simple characteristic value.
#[derive(Debug, Clone)]
pub struct SeriesBranch {
    pub mu_star: f64,
    /// Exponent e in mu = mu* + direction * s^e.
    pub exponent: u32,
    /// Parameter direction: +1.0 (supercritical) or -1.0 (subcritical).
    pub direction: f64,
    /// Truncation order K.
    pub order: usize,
    /// Unit kernel direction omega of I - mu* B.
    pub omega: SineSeries,
    /// Coefficients Phi_1..Phi_K.
    pub terms: Vec<SineSeries>,
}

impl SeriesBranch {
    /// Evaluates the branch at parameter value s: `(mu, phi)`.
    pub fn eval(&self, s: f64) -> (f64, SineSeries) {
        let mu = self.mu_star + self.direction * s.powi(self.exponent as i32);
        let mut phi = SineSeries::zeros(self.omega.n_modes());
        let mut sk = 1.0;
        for term in &self.terms {
            sk *= s;
            phi = phi.add(&term.scale(sk));
        }
        (mu, phi)
    }

    /// Eigencomponents `<Phi_k, omega>` of the stored terms.
    pub fn eigencomponents(&self) -> Vec<f64> {
        self.terms.iter().map(|t| dot(t, &self.omega)).collect()
    }
}

fn dot(a: &SineSeries, b: &SineSeries) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum()
}

/// Builds the branch series of order `k_order` at the simple characteristic
/// value `cv`, choosing the exponent automatically.
pub fn branch_series(
    problem: &WaveProblem,
    cv: &CharValue,
    k_order: usize,
) -> Result<SeriesBranch> {
    if cv.multiplicity != 1 {
        return Err(Error::Config(format!(
            "series expansion needs a simple characteristic value (multiplicity {})",
            cv.multiplicity
        )));
    }
    if k_order < 1 || k_order > problem.n_modes / 2 {
        return Err(Error::OrderTooHigh { order: k_order, n_modes: problem.n_modes });
    }
    // Canonical sign: dominant coefficient of omega positive.
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
    let omega = omega.scale(1.0 / omega.norm());

    let b = problem.linearize().b;
    for e in 1..=MAX_EXPONENT {
        // Odd exponents cover both parameter directions through the sign of
        // s itself; even exponents need both explicitly.
        let directions: &[f64] = if e % 2 == 1 { &[1.0] } else { &[1.0, -1.0] };
        for &sigma in directions {
            match build(problem, &b, cv.mu_star, &omega, k_order, e, sigma) {
                Ok(sb) => return Ok(sb),
                Err(Build::Escalate) => continue,
                Err(Build::Real(err)) => return Err(err),
            }
        }
    }
    Err(Error::SolvabilityFailure { order: 1 + MAX_EXPONENT as usize })
}

enum Build {
    /// Only the trivial branch exists at this exponent; retry with e + 1.
    Escalate,
    Real(Error),
}

impl From<Error> for Build {
    fn from(e: Error) -> Self {
        Build::Real(e)
    }
}

fn build(
    problem: &WaveProblem,
    b: &LinearMap,
    mu_star: f64,
    omega: &SineSeries,
    k_order: usize,
    e: u32,
    sigma: f64,
) -> std::result::Result<SeriesBranch, Build> {
    let e = e as usize;
    let k_max = k_order + e;
    let n = problem.n_modes;
    // Phi_1..; entries beyond index j-1 with still-pending eigencomponents
    // hold their minimal-norm part only.
    let mut terms: Vec<SineSeries> = Vec::new();

    for k in 1..=k_max {
        if k > e {
            // Fix the pending constant of Phi_j via solvability at order k.
            let j = k - e;
            let degree = if j == 1 { k } else { (k / j).max(1) };
            let eval_f = |c: f64| -> Result<f64> {
                let mut trial = terms.clone();
                let adj = trial[j - 1].add(&omega.scale(c - dot(&trial[j - 1], omega)));
                trial[j - 1] = adj;
                for i in (j + 1)..k {
                    let r = rhs_order(problem, mu_star, e, sigma, &trial[..i - 1], i)?;
                    trial[i - 1] = solve_lenient(b, mu_star, &r, omega);
                }
                let r = rhs_order(problem, mu_star, e, sigma, &trial[..k - 1], k)?;
                Ok(dot(&r, omega))
            };
            let c = match fix_constant(&eval_f, degree, j == 1, k)? {
                Some(c) => c,
                None => return Err(Build::Escalate),
            };
            // Commit: set the constant and refresh dependent intermediates.
            let adj = terms[j - 1].add(&omega.scale(c - dot(&terms[j - 1], omega)));
            terms[j - 1] = adj;
            for i in (j + 1)..k {
                let r = rhs_order(problem, mu_star, e, sigma, &terms[..i - 1], i)?;
                terms[i - 1] = solve_lenient(b, mu_star, &r, omega);
            }
        }
        if k < k_max {
            let r = rhs_order(problem, mu_star, e, sigma, &terms, k)?;
            // Post-fix solvability check: the eigencomponent of the
            // right-hand side must vanish.
            let scale = r.norm().max(1.0);
            if dot(&r, omega).abs() > TOL_SOLVABILITY * scale {
                return Err(Build::Real(Error::SolvabilityFailure { order: k }));
            }
            terms.push(solve_lenient(b, mu_star, &r, omega));
        }
    }

    terms.truncate(k_order);
    let _ = n;
    Ok(SeriesBranch {
        mu_star,
        exponent: e as u32,
        direction: sigma,
        order: k_order,
        omega: omega.clone(),
        terms,
    })
}

/// Solves the polynomial solvability condition `F(c) = 0` for a pending
/// constant. F is exactly polynomial of the given degree, so it is fitted
/// through `degree + 1` samples and deflated by its zero root. Returns
/// `None` when only the trivial root exists and escalation is allowed.
fn fix_constant(
    f: &dyn Fn(f64) -> Result<f64>,
    degree: usize,
    first: bool,
    order: usize,
) -> std::result::Result<Option<f64>, Build> {
    let d = degree;
    // Symmetric sample points around zero (zero included).
    let points: Vec<f64> = (0..=d)
        .map(|t| {
            let q = (t + 1) / 2;
            let sign = if t % 2 == 1 { 1.0 } else { -1.0 };
            sign * 0.5 * q as f64
        })
        .collect();
    let mut vals = Vec::with_capacity(d + 1);
    for &c in &points {
        vals.push(f(c).map_err(Build::Real)?);
    }
    // Vandermonde fit p_0 + p_1 c + ... + p_d c^d.
    let vm = DMatrix::from_fn(d + 1, d + 1, |i, j| points[i].powi(j as i32));
    let rhs = DVector::from_vec(vals.clone());
    let p = vm
        .lu()
        .solve(&rhs)
        .ok_or(Build::Real(Error::SolvabilityFailure { order }))?;
    let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        // Solvability holds identically: the constant is unconstrained here;
        // keep the minimal-norm choice.
        return Ok(Some(0.0));
    }
    // For the first constant F(0) = 0 structurally (all terms vanish), so
    // the zero root is deflated and a nontrivial branch root is required.
    // Later conditions are inhomogeneous polynomials solved as they stand.
    let mut q: Vec<f64> =
        if first { p.iter().skip(1).copied().collect() } else { p.iter().copied().collect() };
    while q.len() > 1 && q.last().unwrap().abs() <= 1e-10 * scale {
        q.pop();
    }
    let roots = real_roots(&q);
    let candidates: Vec<f64> = if first {
        roots.into_iter().filter(|c| c.abs() > 1e-10).collect()
    } else {
        roots
    };
    if candidates.is_empty() {
        if first {
            return Ok(None); // only the trivial branch: escalate the exponent
        }
        return Err(Build::Real(Error::SolvabilityFailure { order }));
    }
    let c = if first {
        // Canonical branch: prefer the largest positive root.
        *candidates
            .iter()
            .filter(|c| **c > 0.0)
            .max_by(|a, b| a.total_cmp(b))
            .unwrap_or_else(|| {
                candidates.iter().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap()
            })
    } else {
        // Perturbative correction: smallest magnitude.
        *candidates.iter().min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap()
    };
    // Verify the root against the true condition.
    let fc = f(c).map_err(Build::Real)?;
    if fc.abs() > TOL_SOLVABILITY * scale.max(1.0) {
        return Err(Build::Real(Error::SolvabilityFailure { order }));
    }
    Ok(Some(c))
}

/// Real roots of `q_0 + q_1 c + ... + q_m c^m` via the companion matrix.
fn real_roots(q: &[f64]) -> Vec<f64> {
    let m = q.len() - 1;
    if m == 0 {
        return Vec::new();
    }
    let lead = q[m];
    if lead == 0.0 {
        return real_roots(&q[..m]);
    }
    let comp = DMatrix::from_fn(m, m, |i, j| {
        if j == m - 1 {
            -q[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eigs = comp.complex_eigenvalues();
    let scale = q.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    eigs.iter()
        .filter(|z| z.im.abs() <= 1e-8 * (1.0 + z.re.abs()) && scale > 0.0)
        .map(|z| z.re)
        .collect()
}

/// Minimal-norm solve of `(I - mu* B) x = r` that silently zeroes the kernel
/// direction (the pending eigencomponent is bookkept by the caller).
fn solve_lenient(b: &LinearMap, mu_star: f64, r: &SineSeries, omega: &SineSeries) -> SineSeries {
    let r_proj = r.sub(&omega.scale(dot(r, omega)));
    crate::linear::fredholm_solve(b, mu_star, &r_proj)
        .expect("projected right-hand side is compatible")
}

/// Order-k coefficient of `A(phi(s), mu* + s^e)` given the lower-order terms
/// `Phi_1..Phi_{k-1}` (the order-k term enters linearly and is excluded, so
/// the result is the right-hand side `R_k` of the order-k equation).
pub fn rhs_order(
    problem: &WaveProblem,
    mu_star: f64,
    e: usize,
    sigma: f64,
    lower: &[SineSeries],
    k: usize,
) -> Result<SineSeries> {
    assert!(lower.len() >= k - 1, "need terms up to order k-1");
    let n = problem.n_modes;
    let m = problem.grid_size();
    let table = TrigTable::new(m);

    // phi(s) on the grid, orders 0..k (order k is the placeholder zero).
    let mut p = GridPoly::zeros(m, k);
    for (i, term) in lower.iter().take(k - 1).enumerate() {
        let g = crate::spectral::to_grid_with(term, &table, m);
        p.orders[i + 1] = g.values().to_vec();
    }

    let g = match &problem.nonlinearity {
        Nonlinearity::Nekrasov => {
            let s = p.compose_sin();
            // W = cumulative integral of sin(phi), order by order, through
            // the same truncated transform chain as the plain operator.
            let aux = m / 2 - 1;
            let mut w = GridPoly::zeros(m, k);
            for ord in 1..=k {
                let gf = GridFunction::new(s.orders[ord].clone());
                let series = from_grid_with(&gf, &table, aux);
                let cum = cosine_to_grid_with(&series.cumulative_integral(), &table, m);
                w.orders[ord] = cum.values().to_vec();
            }
            // u = (mu* + sigma s^e) W
            let mut u = w.scale(mu_star);
            u.add_shifted(&w.scale(sigma), e);
            // g = sin(phi) / (1 + u)
            s.mul(&u.geometric_inverse())
        }
        Nonlinearity::Krasovskii => {
            let s = p.compose_sin();
            // Psi per order: exact conjugate of the coefficient series.
            let mut psi = GridPoly::zeros(m, k);
            for (i, term) in lower.iter().take(k - 1).enumerate() {
                let c = cosine_to_grid_with(&term.conjugate(), &table, m);
                psi.orders[i + 1] = c.values().to_vec();
            }
            psi.compose_exp3().mul(&s)
        }
        Nonlinearity::Hammerstein(poly) => {
            let mut g = GridPoly::zeros(m, k);
            let mut pow = p.clone();
            for (i, &c) in poly.coeffs.iter().enumerate() {
                if i > 0 {
                    pow = pow.mul(&p);
                }
                if c != 0.0 {
                    g.add_scaled(&pow, c);
                }
            }
            g
        }
    };

    // Output order k: f_n * (mu* ghat_k + sigma ghat_{k-e}).
    let mult = problem.multipliers();
    let ghat_k = from_grid_with(&GridFunction::new(g.orders[k].clone()), &table, n);
    let mut coeffs: Vec<f64> =
        (1..=n).map(|i| mult[i - 1] * mu_star * ghat_k.coeff(i)).collect();
    if k > e {
        let ghat_shift = from_grid_with(&GridFunction::new(g.orders[k - e].clone()), &table, n);
        for i in 1..=n {
            coeffs[i - 1] += sigma * mult[i - 1] * ghat_shift.coeff(i);
        }
    }
    Ok(SineSeries::new(coeffs))
}

/// Polynomial in s with grid-function coefficients, truncated at a fixed
/// maximal order.
#[derive(Clone)]
struct GridPoly {
    m: usize,
    /// orders[k][j]: order-k coefficient at grid node j; length k_max + 1.
    orders: Vec<Vec<f64>>,
}

impl GridPoly {
    fn zeros(m: usize, k_max: usize) -> Self {
        GridPoly { m, orders: vec![vec![0.0; m]; k_max + 1] }
    }

    fn k_max(&self) -> usize {
        self.orders.len() - 1
    }

    fn mul(&self, other: &GridPoly) -> GridPoly {
        let k_max = self.k_max();
        let mut out = GridPoly::zeros(self.m, k_max);
        for a in 0..=k_max {
            for b in 0..=(k_max - a) {
                let (pa, pb) = (&self.orders[a], &other.orders[b]);
                let dst = &mut out.orders[a + b];
                for j in 0..self.m {
                    dst[j] += pa[j] * pb[j];
                }
            }
        }
        out
    }

    fn scale(&self, s: f64) -> GridPoly {
        let mut out = self.clone();
        for ord in &mut out.orders {
            for v in ord.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &GridPoly, s: f64) {
        for (dst, src) in self.orders.iter_mut().zip(&other.orders) {
            for (d, v) in dst.iter_mut().zip(src) {
                *d += s * v;
            }
        }
    }

    /// `self += s^shift * other`, truncated.
    fn add_shifted(&mut self, other: &GridPoly, shift: usize) {
        let k_max = self.k_max();
        for k in 0..=k_max.saturating_sub(shift) {
            let src = &other.orders[k];
            let dst = &mut self.orders[k + shift];
            for j in 0..self.m {
                dst[j] += src[j];
            }
        }
    }

    /// `sin(self)` for a polynomial with zero constant term.
    fn compose_sin(&self) -> GridPoly {
        debug_assert!(self.orders[0].iter().all(|v| *v == 0.0));
        let k_max = self.k_max();
        let mut out = GridPoly::zeros(self.m, k_max);
        let mut pow = self.clone(); // self^j
        let mut factorial = 1.0f64;
        let mut j = 1usize;
        loop {
            let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
            out.add_scaled(&pow, sign / factorial);
            if j + 2 > k_max {
                break;
            }
            pow = pow.mul(self).mul(self);
            factorial *= ((j + 1) * (j + 2)) as f64;
            j += 2;
        }
        out
    }

    /// `exp(3 * self)` for a polynomial with zero constant term.
    fn compose_exp3(&self) -> GridPoly {
        debug_assert!(self.orders[0].iter().all(|v| *v == 0.0));
        let k_max = self.k_max();
        let mut out = GridPoly::zeros(self.m, k_max);
        for v in out.orders[0].iter_mut() {
            *v = 1.0;
        }
        let tripled = self.scale(3.0);
        let mut pow = tripled.clone();
        let mut factorial = 1.0f64;
        for j in 1..=k_max {
            factorial *= j as f64;
            out.add_scaled(&pow, 1.0 / factorial);
            if j < k_max {
                pow = pow.mul(&tripled);
            }
        }
        out
    }

    /// `1 / (1 + self)` for a polynomial with zero constant term, via the
    /// truncated geometric series.
    fn geometric_inverse(&self) -> GridPoly {
        debug_assert!(self.orders[0].iter().all(|v| *v == 0.0));
        let k_max = self.k_max();
        let mut out = GridPoly::zeros(self.m, k_max);
        for v in out.orders[0].iter_mut() {
            *v = 1.0;
        }
        let mut pow = self.clone();
        let mut sign = -1.0;
        for j in 1..=k_max {
            out.add_scaled(&pow, sign);
            sign = -sign;
            if j < k_max {
                pow = pow.mul(self);
            }
        }
        out
    }
}
