//! Sine/cosine coefficient representations of 2pi-periodic functions, grid
//! transforms and exact trig-polynomial calculus.
//!
//! `SineSeries` carries the odd part (the wave slope angle), `CosineSeries`
//! its harmonic conjugate and cumulative integrals. Transforms are direct
//! O(M*N) sums over a shared table of sin(2*pi*k/M), which keeps the discrete
//! orthogonality relations exact in floating point.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Odd trig polynomial `sum a_n sin(n theta)`, `n = 1..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineSeries {
    coeffs: Vec<f64>,
}

/// Even trig polynomial `mean + sum b_n cos(n theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineSeries {
    pub mean: f64,
    pub coeffs: Vec<f64>,
}

/// Samples on the uniform grid `theta_j = 2 pi j / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

/// Scalar maps applied pointwise on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Sin,
    Exp3,
    Reciprocal,
}

/// Shared trig table: `sin_at(k) = sin(2 pi k / M)` for integer k.
///
/// Indexing by `(n * j) % M` makes identities like `sin(n pi) = 0` exact,
/// which the odd-symmetry invariants rely on.
pub struct TrigTable {
    m: usize,
    sin: Vec<f64>,
}

impl TrigTable {
    pub fn new(m: usize) -> Self {
        let sin = (0..m).map(|k| (2.0 * PI * k as f64 / m as f64).sin()).collect();
        TrigTable { m, sin }
    }

    #[inline]
    pub fn sin_at(&self, k: usize) -> f64 {
        self.sin[k % self.m]
    }

    #[inline]
    pub fn cos_at(&self, k: usize) -> f64 {
        // cos x = sin(x + pi/2); M is kept divisible by 4 by every caller.
        debug_assert!(self.m % 4 == 0);
        self.sin[(k + self.m / 4) % self.m]
    }
}

impl SineSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "SineSeries needs at least one mode");
        assert!(coeffs.iter().all(|c| c.is_finite()), "non-finite coefficient");
        SineSeries { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        SineSeries::new(vec![0.0; n])
    }

    /// Unit coefficient on mode `n` (1-based), all others zero.
    pub fn mode(n: usize, n_modes: usize) -> Self {
        assert!(n >= 1 && n <= n_modes);
        let mut c = vec![0.0; n_modes];
        c[n - 1] = 1.0;
        SineSeries::new(c)
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `sin(n theta)`, 1-based.
    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs[n - 1]
    }

    pub fn coeff_mut(&mut self, n: usize) -> &mut f64 {
        &mut self.coeffs[n - 1]
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * ((i + 1) as f64 * theta).sin())
            .sum()
    }

    pub fn scale(&self, s: f64) -> SineSeries {
        SineSeries::new(self.coeffs.iter().map(|a| a * s).collect())
    }

    pub fn add(&self, other: &SineSeries) -> SineSeries {
        assert_eq!(self.n_modes(), other.n_modes());
        SineSeries::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn sub(&self, other: &SineSeries) -> SineSeries {
        self.add(&other.scale(-1.0))
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn truncated(&self, n: usize) -> SineSeries {
        let mut c = self.coeffs.clone();
        c.resize(n, 0.0);
        SineSeries::new(c)
    }

    /// Exact termwise antiderivative `int_0^eps sum a_n sin(n a) da
    /// = sum (a_n / n) (1 - cos(n eps))`, returned in cosine form.
    pub fn cumulative_integral(&self) -> CosineSeries {
        let mut mean = 0.0;
        let mut coeffs = Vec::with_capacity(self.n_modes());
        for (i, a) in self.coeffs.iter().enumerate() {
            let n = (i + 1) as f64;
            mean += a / n;
            coeffs.push(-a / n);
        }
        CosineSeries { mean, coeffs }
    }

    /// Harmonic conjugate: `sum a_n sin(n theta) -> -sum a_n cos(n theta)`,
    /// zero mean.
    pub fn conjugate(&self) -> CosineSeries {
        CosineSeries {
            mean: 0.0,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

impl CosineSeries {
    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.mean
            + self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, b)| b * ((i + 1) as f64 * theta).cos())
                .sum::<f64>()
    }

    /// Harmonic conjugate of the zero-mean part:
    /// `cos(n theta) -> sin(n theta)`. Composing with
    /// `SineSeries::conjugate` gives minus the identity.
    pub fn conjugate(&self) -> SineSeries {
        SineSeries::new(self.coeffs.clone())
    }
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(values.len() >= 4 && values.len() % 2 == 0, "grid size must be even, >= 4");
        GridFunction { values }
    }

    pub fn zeros(m: usize) -> Self {
        GridFunction::new(vec![0.0; m])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len() as f64
    }

    /// Pointwise product.
    pub fn mul(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.len(), other.len());
        GridFunction::new(
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        )
    }

    pub fn min(&self) -> (f64, usize) {
        let mut min = f64::INFINITY;
        let mut idx = 0;
        for (j, &v) in self.values.iter().enumerate() {
            if v < min {
                min = v;
                idx = j;
            }
        }
        (min, idx)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Synthesis: `values_j = sum a_n sin(n theta_j)`. Exact for trig polynomials.
pub fn to_grid(s: &SineSeries, m: usize) -> Result<GridFunction> {
    let n = s.n_modes();
    if m < 2 * n + 2 {
        return Err(Error::GridTooSmall { m, n });
    }
    Ok(to_grid_with(s, &TrigTable::new(m), m))
}

/// Synthesis with a caller-provided table (hot path).
pub fn to_grid_with(s: &SineSeries, table: &TrigTable, m: usize) -> GridFunction {
    let mut values = vec![0.0; m];
    for (i, &a) in s.coeffs().iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let n = i + 1;
        for (j, v) in values.iter_mut().enumerate() {
            *v += a * table.sin_at(n * j);
        }
    }
    GridFunction::new(values)
}

/// Analysis: `a_n = (2/M) sum_j values_j sin(n theta_j)`; exact inverse of
/// `to_grid` on the odd subspace of degree <= M/2 - 1.
pub fn from_grid(g: &GridFunction, n: usize) -> Result<SineSeries> {
    let m = g.len();
    if n > m / 2 - 1 {
        return Err(Error::ModeCountTooLarge { n, m });
    }
    Ok(from_grid_with(g, &TrigTable::new(m), n))
}

pub fn from_grid_with(g: &GridFunction, table: &TrigTable, n: usize) -> SineSeries {
    let m = g.len();
    let mut coeffs = vec![0.0; n];
    for (i, c) in coeffs.iter_mut().enumerate() {
        let k = i + 1;
        let mut acc = 0.0;
        for (j, &v) in g.values().iter().enumerate() {
            acc += v * table.sin_at(k * j);
        }
        *c = 2.0 * acc / m as f64;
    }
    SineSeries::new(coeffs)
}

/// Even-part analysis: mean and cosine coefficients of a grid function.
/// Used by the odd-subspace invariance checks.
pub fn from_grid_cosine(g: &GridFunction, n: usize) -> Result<CosineSeries> {
    let m = g.len();
    if n > m / 2 - 1 {
        return Err(Error::ModeCountTooLarge { n, m });
    }
    let table = TrigTable::new(m);
    let mean = g.values().iter().sum::<f64>() / m as f64;
    let mut coeffs = vec![0.0; n];
    for (i, c) in coeffs.iter_mut().enumerate() {
        let k = i + 1;
        let mut acc = 0.0;
        for (j, &v) in g.values().iter().enumerate() {
            acc += v * table.cos_at(k * j);
        }
        *c = 2.0 * acc / m as f64;
    }
    Ok(CosineSeries { mean, coeffs })
}

/// Synthesis of an even trig polynomial on the grid.
pub fn cosine_to_grid_with(c: &CosineSeries, table: &TrigTable, m: usize) -> GridFunction {
    let mut values = vec![c.mean; m];
    for (i, &b) in c.coeffs.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let n = i + 1;
        for (j, v) in values.iter_mut().enumerate() {
            *v += b * table.cos_at(n * j);
        }
    }
    GridFunction::new(values)
}

/// Applies a scalar map pointwise. `Reciprocal` reports the first grid index
/// holding an exact zero.
pub fn pointwise_map(g: &GridFunction, f: MapKind) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(g.len());
    for (j, &v) in g.values().iter().enumerate() {
        let y = match f {
            MapKind::Sin => v.sin(),
            MapKind::Exp3 => (3.0 * v).exp(),
            MapKind::Reciprocal => {
                if v == 0.0 {
                    return Err(Error::DomainViolation { index: j, value: v });
                }
                1.0 / v
            }
        };
        values.push(y);
    }
    Ok(GridFunction::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_to_grid() {
        let s = SineSeries::new(vec![1.0]);
        let g = to_grid(&s, 8).unwrap();
        for j in 0..8 {
            let expect = (2.0 * PI * j as f64 / 8.0).sin();
            assert!((g.values()[j] - expect).abs() <= 1e-15);
        }
    }

    #[test]
    fn zero_series_gives_zero_grid() {
        let s = SineSeries::zeros(5);
        let g = to_grid(&s, 16).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn round_trip_two_modes() {
        let s = SineSeries::new(vec![1.0, 0.5]);
        let g = to_grid(&s, 64).unwrap();
        let back = from_grid(&g, 2).unwrap();
        for n in 1..=2 {
            assert!((back.coeff(n) - s.coeff(n)).abs() <= 1e-14);
        }
    }

    #[test]
    fn grid_too_small_rejected() {
        let s = SineSeries::zeros(4);
        assert_eq!(to_grid(&s, 8), Err(Error::GridTooSmall { m: 8, n: 4 }));
    }

    #[test]
    fn from_grid_orthogonality() {
        // grid of sin(3 theta): only a_3 survives
        let s = SineSeries::mode(3, 3);
        let g = to_grid(&s, 32).unwrap();
        let a = from_grid(&g, 8).unwrap();
        for n in 1..=8 {
            let expect = if n == 3 { 1.0 } else { 0.0 };
            assert!((a.coeff(n) - expect).abs() <= 1e-14);
        }
    }

    #[test]
    fn odd_projection_annihilates_even_part() {
        let m = 32;
        let table = TrigTable::new(m);
        let g = GridFunction::new((0..m).map(|j| table.cos_at(j)).collect());
        let a = from_grid(&g, 8).unwrap();
        assert!(a.coeffs().iter().all(|c| c.abs() <= 1e-14));
    }

    #[test]
    fn mode_count_too_large_rejected() {
        let g = GridFunction::zeros(16);
        assert!(matches!(from_grid(&g, 8), Err(Error::ModeCountTooLarge { .. })));
    }

    #[test]
    fn cumulative_integral_single_mode() {
        // int_0^eps sin = 1 - cos eps
        let w = SineSeries::new(vec![1.0]).cumulative_integral();
        for &eps in &[0.0, 0.3, 1.7, PI, 5.0] {
            assert!((w.eval(eps) - (1.0 - eps.cos())).abs() <= 1e-15);
        }
    }

    #[test]
    fn cumulative_integral_periodic_closes() {
        let s = SineSeries::new(vec![0.3, -1.2, 0.0, 0.7]);
        let w = s.cumulative_integral();
        assert!(w.eval(2.0 * PI).abs() <= 1e-14);
        assert!(w.eval(0.0).abs() <= 1e-14);
    }

    #[test]
    fn cumulative_integral_zero() {
        let w = SineSeries::zeros(3).cumulative_integral();
        assert_eq!(w.eval(1.234), 0.0);
    }

    #[test]
    fn conjugate_sign_convention() {
        // sin theta -> -cos theta
        let c = SineSeries::new(vec![1.0]).conjugate();
        assert_eq!(c.mean, 0.0);
        assert_eq!(c.coeffs, vec![-1.0]);
        assert!((c.eval(0.0) + 1.0).abs() <= 1e-15);
    }

    #[test]
    fn conjugate_zero_is_zero() {
        let c = SineSeries::zeros(4).conjugate();
        assert_eq!(c.mean, 0.0);
        assert!(c.coeffs.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn conjugate_twice_is_minus_identity() {
        let s = SineSeries::new(vec![0.2, -0.5, 1.5]);
        let back = s.conjugate().conjugate();
        for n in 1..=3 {
            assert_eq!(back.coeff(n), -s.coeff(n));
        }
    }

    #[test]
    fn pointwise_maps() {
        let g = GridFunction::zeros(8);
        let s = pointwise_map(&g, MapKind::Sin).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
        let e = pointwise_map(&g, MapKind::Exp3).unwrap();
        assert!(e.values().iter().all(|&v| v == 1.0));
        let r = pointwise_map(&g, MapKind::Reciprocal);
        assert_eq!(r, Err(Error::DomainViolation { index: 0, value: 0.0 }));
    }

    #[test]
    fn cumulative_integral_matches_simpson_quadrature() {
        // Independent oracle: composite Simpson on a dense grid.
        let s = SineSeries::new(vec![0.4, -0.9, 0.25, 0.0, 0.6]);
        let w = s.cumulative_integral();
        let f = |x: f64| s.eval(x);
        for &eps in &[0.7, 2.1, 4.4, 6.0] {
            let q = 100_000; // intervals (even)
            let h = eps / q as f64;
            let mut acc = f(0.0) + f(eps);
            for i in 1..q {
                let x = i as f64 * h;
                acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
            }
            let simpson = acc * h / 3.0;
            assert!(
                (w.eval(eps) - simpson).abs() <= 1e-12,
                "eps={eps}: {} vs {}",
                w.eval(eps),
                simpson
            );
        }
    }

    #[test]
    fn round_trip_random_series() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(1..=24);
            let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let s = SineSeries::new(coeffs);
            let g = to_grid(&s, 4 * n + 8).unwrap();
            let back = from_grid(&g, n).unwrap();
            for k in 1..=n {
                assert!((back.coeff(k) - s.coeff(k)).abs() <= 1e-13);
            }
        }
    }
}
