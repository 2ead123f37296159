//! Kernels and the nonlinear integral operators: the infinite/finite-depth
//! wave operator with the log-difference kernel, the large-amplitude
//! (conjugate-function) operator, and a generic degenerate-kernel Hammerstein
//! operator, together with the Taylor split A = mu*B + C + D.
//!
//! All operators act spectrally: the log-difference kernel equals
//! `-4 sum_n sin(n eps) sin(n theta) / n`, so applying the integral operator
//! reduces to the Fourier multiplier `out_n = mu * g_n / mu_n` on the sine
//! coefficients of the grid-evaluated integrand g. This removes the log
//! singularity from the numerics entirely.

use crate::error::{Error, Result};
use crate::spectral::{
    cosine_to_grid_with, from_grid_with, pointwise_map, to_grid_with, GridFunction, MapKind,
    SineSeries, TrigTable,
};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Guard below which the cumulative-integral denominator counts as vanished.
pub const EPS_DEN: f64 = 1e-10;

/// Overflow guard on the conjugate-function exponent 3*Psi.
pub const EXP_GUARD: f64 = 700.0;

/// The linear smoothing kernel of the integral operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `ln |(1 - cos(eps - theta)) / (1 - cos(eps + theta))|`; infinite depth,
    /// characteristic values `mu_n = 3n`.
    LogDifference,
    /// Degenerate kernel `sum sin(n eps) sin(n theta) / mu_n` with stored
    /// characteristic values.
    FourierDiagonal(Vec<f64>),
    /// Finite depth: Fourier-diagonal with `mu_n = 3n coth(2 pi n h / L)`.
    FiniteDepthFourier { depth: f64, wavelength: f64, n_modes: usize },
}

impl Kernel {
    /// Characteristic values `mu_1..mu_n_max` of the kernel.
    pub fn characteristic_values(&self, n_max: usize) -> Vec<f64> {
        match self {
            Kernel::LogDifference => (1..=n_max).map(|n| 3.0 * n as f64).collect(),
            Kernel::FourierDiagonal(vals) => {
                assert!(n_max <= vals.len(), "n_max exceeds stored characteristic values");
                vals[..n_max].to_vec()
            }
            Kernel::FiniteDepthFourier { depth, wavelength, n_modes } => {
                assert!(n_max <= *n_modes);
                (1..=n_max)
                    .map(|n| {
                        let x = 2.0 * PI * n as f64 * depth / wavelength;
                        3.0 * n as f64 / x.tanh()
                    })
                    .collect()
            }
        }
    }

    /// Pointwise kernel value. The log-difference kernel is singular where
    /// `eps -+ theta` hits a multiple of 2 pi.
    pub fn eval(&self, eps: f64, theta: f64) -> Result<f64> {
        match self {
            Kernel::LogDifference => {
                let num = 1.0 - (eps - theta).cos();
                let den = 1.0 - (eps + theta).cos();
                if num.abs() < 1e-14 || den.abs() < 1e-14 {
                    return Err(Error::SingularPoint { eps, theta });
                }
                Ok((num / den).abs().ln())
            }
            Kernel::FourierDiagonal(vals) => Ok(vals
                .iter()
                .enumerate()
                .map(|(i, mu)| {
                    let n = (i + 1) as f64;
                    (n * eps).sin() * (n * theta).sin() / mu
                })
                .sum()),
            Kernel::FiniteDepthFourier { n_modes, .. } => {
                let vals = self.characteristic_values(*n_modes);
                Ok(vals
                    .iter()
                    .enumerate()
                    .map(|(i, mu)| {
                        let n = (i + 1) as f64;
                        (n * eps).sin() * (n * theta).sin() / mu
                    })
                    .sum())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Kernel::LogDifference => Ok(()),
            Kernel::FourierDiagonal(vals) => {
                let increasing = vals.windows(2).all(|w| w[0] < w[1]);
                if vals.is_empty() || vals[0] <= 0.0 || !increasing {
                    Err(Error::Config(
                        "characteristic values must be positive and strictly increasing".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            Kernel::FiniteDepthFourier { depth, wavelength, .. } => {
                if *depth > 0.0 && *wavelength > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config("finite depth requires h > 0 and L > 0".into()))
                }
            }
        }
    }
}

/// Scalar nonlinearity `f(u) = sum_k c_k u^k`, `k >= 1` (no constant term).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyNonlinearity {
    /// `coeffs[k-1]` multiplies `u^k`.
    pub coeffs: Vec<f64>,
}

impl PolyNonlinearity {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(coeffs.iter().all(|c| c.is_finite()));
        PolyNonlinearity { coeffs }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = (acc + c) * u;
        }
        acc
    }

    pub fn deriv(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * u + (k + 1) as f64 * c;
        }
        acc
    }

    fn linear_coeff(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Lowest nonlinear degree m >= 2 with a nonzero coefficient.
    pub fn leading_nonlinear_degree(&self) -> Option<usize> {
        self.coeffs.iter().enumerate().skip(1).find(|(_, c)| **c != 0.0).map(|(i, _)| i + 1)
    }
}

/// Which nonlinear integrand the problem uses.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `sin Phi / (1 + mu int_0^eps sin Phi)`
    Nekrasov,
    /// `e^{3 Psi} sin Phi`, Psi the harmonic conjugate, kernel on [0, pi].
    Krasovskii,
    /// `f(u)` from a polynomial coefficient table.
    Hammerstein(PolyNonlinearity),
}

/// A fully specified wave problem: kernel, nonlinearity, parameter, truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveProblem {
    pub kernel: Kernel,
    pub nonlinearity: Nonlinearity,
    pub mu: f64,
    pub n_modes: usize,
}

impl WaveProblem {
    pub fn nekrasov_infinite(n_modes: usize, mu: f64) -> Self {
        WaveProblem { kernel: Kernel::LogDifference, nonlinearity: Nonlinearity::Nekrasov, mu, n_modes }
    }

    pub fn nekrasov_finite(depth: f64, wavelength: f64, n_modes: usize, mu: f64) -> Result<Self> {
        let kernel = Kernel::FiniteDepthFourier { depth, wavelength, n_modes };
        kernel.validate()?;
        Ok(WaveProblem { kernel, nonlinearity: Nonlinearity::Nekrasov, mu, n_modes })
    }

    /// Large-amplitude problem with the `pi n / 2` kernel values on [0, pi].
    pub fn krasovskii(n_modes: usize, mu: f64) -> Self {
        let vals = (1..=n_modes).map(|n| PI * n as f64 / 2.0).collect();
        WaveProblem {
            kernel: Kernel::FourierDiagonal(vals),
            nonlinearity: Nonlinearity::Krasovskii,
            mu,
            n_modes,
        }
    }

    pub fn hammerstein(kernel: Kernel, poly: PolyNonlinearity, n_modes: usize, mu: f64) -> Result<Self> {
        kernel.validate()?;
        if let Kernel::LogDifference = kernel {
            // Degenerate-kernel class only; the log kernel is equivalent to
            // its Fourier-diagonal form, so ask for that explicitly.
            return Err(Error::Config(
                "Hammerstein problems take a Fourier-diagonal or finite-depth kernel".into(),
            ));
        }
        Ok(WaveProblem { kernel, nonlinearity: Nonlinearity::Hammerstein(poly), mu, n_modes })
    }

    /// Dealiased working grid: M = 4N keeps products of the nonlinear
    /// integrand alias-free after truncation back to N.
    pub fn grid_size(&self) -> usize {
        4 * self.n_modes
    }

    /// Fourier-multiplier factors `f_n` with `out_n = mu * f_n * g_n`, where
    /// g is the grid integrand. The [0, pi] inner product of the conjugate
    /// kernel contributes the extra pi/2 relative to the full period.
    pub fn multipliers(&self) -> Vec<f64> {
        let charvals = self.kernel.characteristic_values(self.n_modes);
        match self.nonlinearity {
            Nonlinearity::Krasovskii => charvals.iter().map(|mu| (PI / 2.0) / mu).collect(),
            _ => charvals.iter().map(|mu| 1.0 / mu).collect(),
        }
    }

    /// Diagonal of the Frechet derivative B at zero (before the dense wrap
    /// used for generic Hammerstein problems).
    fn b_diagonal(&self) -> Vec<f64> {
        let mult = self.multipliers();
        match &self.nonlinearity {
            Nonlinearity::Hammerstein(poly) => {
                let c1 = poly.linear_coeff();
                mult.iter().map(|f| c1 * f).collect()
            }
            _ => mult,
        }
    }

    /// Applies the full nonlinear operator at the stored parameter.
    pub fn apply(&self, phi: &SineSeries) -> Result<SineSeries> {
        self.apply_at(phi, self.mu)
    }

    /// Applies the full nonlinear operator at an explicit parameter value.
    pub fn apply_at(&self, phi: &SineSeries, mu: f64) -> Result<SineSeries> {
        let ws = Workspace::new(self, phi, mu)?;
        Ok(ws.output(self, mu))
    }

    /// Grid-space integrand g with `A(phi)_n = mu f_n g_n`; exposed for the
    /// odd-subspace invariance checks.
    pub fn integrand_grid(&self, phi: &SineSeries, mu: f64) -> Result<GridFunction> {
        let ws = Workspace::new(self, phi, mu)?;
        Ok(ws.g)
    }

    /// Minimum of the cumulative-integral denominator `w = 1 + mu W` on the
    /// working grid; `None` for nonlinearities without a denominator.
    pub fn denominator_min(&self, phi: &SineSeries, mu: f64) -> Result<Option<f64>> {
        match self.nonlinearity {
            Nonlinearity::Nekrasov => {
                let ws = Workspace::new(self, phi, mu)?;
                Ok(Some(ws.w.min().0))
            }
            _ => Ok(None),
        }
    }

    /// Taylor split `A(phi, mu) = mu B phi + C(phi, mu) + D(phi, mu)`.
    pub fn linearize(&self) -> OperatorSplit<'_> {
        let diag = self.b_diagonal();
        let b = match self.nonlinearity {
            Nonlinearity::Hammerstein(_) => {
                LinearMap::Dense(DMatrix::from_diagonal(&DVector::from_vec(diag)))
            }
            _ => LinearMap::Diagonal(diag),
        };
        let order = match &self.nonlinearity {
            Nonlinearity::Hammerstein(poly) => poly.leading_nonlinear_degree().unwrap_or(2),
            _ => 2,
        };
        OperatorSplit { b, order, problem: self }
    }

    /// Jacobian of `A` with respect to the sine coefficients at `phi`.
    pub fn jacobian(&self, phi: &SineSeries, mu: f64) -> Result<DMatrix<f64>> {
        let n = self.n_modes;
        let m = self.grid_size();
        let table = TrigTable::new(m);
        let ws = Workspace::new(self, phi, mu)?;
        let mult = self.multipliers();
        let mut jac = DMatrix::zeros(n, n);
        for j in 1..=n {
            let dir: Vec<f64> = (0..m).map(|i| table.sin_at(j * i)).collect();
            let dg = ws.integrand_derivative(self, mu, &dir, &table);
            let col = from_grid_with(&GridFunction::new(dg), &table, n);
            for i in 1..=n {
                jac[(i - 1, j - 1)] = mu * mult[i - 1] * col.coeff(i);
            }
        }
        Ok(jac)
    }

    /// Derivative of `A(phi, mu)` with respect to mu (for arclength systems).
    pub fn mu_derivative(&self, phi: &SineSeries, mu: f64) -> Result<SineSeries> {
        let m = self.grid_size();
        let table = TrigTable::new(m);
        let ws = Workspace::new(self, phi, mu)?;
        let mult = self.multipliers();
        match self.nonlinearity {
            Nonlinearity::Nekrasov => {
                // A = mu M[g(mu)], dg/dmu = -sin(phi) W / w^2
                let g_n = from_grid_with(&ws.g, &table, self.n_modes);
                let dg: Vec<f64> = (0..m)
                    .map(|i| -ws.sin_phi.values()[i] * ws.w_raw.values()[i] / (ws.w.values()[i] * ws.w.values()[i]))
                    .collect();
                let dgn = from_grid_with(&GridFunction::new(dg), &table, self.n_modes);
                let coeffs = (1..=self.n_modes)
                    .map(|k| mult[k - 1] * (g_n.coeff(k) + mu * dgn.coeff(k)))
                    .collect();
                Ok(SineSeries::new(coeffs))
            }
            _ => {
                // A is linear in mu.
                let g_n = from_grid_with(&ws.g, &table, self.n_modes);
                let coeffs = (1..=self.n_modes).map(|k| mult[k - 1] * g_n.coeff(k)).collect();
                Ok(SineSeries::new(coeffs))
            }
        }
    }
}

/// Shared grid quantities for one operator application.
struct Workspace {
    g: GridFunction,
    sin_phi: GridFunction,
    cos_phi: GridFunction,
    /// Nekrasov: cumulative integral of sin(phi) (W); else zeros.
    w_raw: GridFunction,
    /// Nekrasov: 1 + mu W; else ones.
    w: GridFunction,
    /// Krasovskii: e^{3 Psi}; else ones.
    exp3psi: GridFunction,
    phi_grid: GridFunction,
}

impl Workspace {
    fn new(problem: &WaveProblem, phi: &SineSeries, mu: f64) -> Result<Self> {
        assert_eq!(phi.n_modes(), problem.n_modes, "mode count mismatch");
        let m = problem.grid_size();
        let table = TrigTable::new(m);
        let phi_grid = to_grid_with(phi, &table, m);
        let sin_phi = pointwise_map(&phi_grid, MapKind::Sin)?;
        let cos_phi = GridFunction::new(phi_grid.values().iter().map(|v| v.cos()).collect());
        let ones = GridFunction::new(vec![1.0; m]);
        match &problem.nonlinearity {
            Nonlinearity::Nekrasov => {
                let aux = m / 2 - 1;
                let s_series = from_grid_with(&sin_phi, &table, aux);
                let w_raw = cosine_to_grid_with(&s_series.cumulative_integral(), &table, m);
                let w = GridFunction::new(w_raw.values().iter().map(|v| 1.0 + mu * v).collect());
                let (min_w, index) = w.min();
                if min_w <= EPS_DEN {
                    return Err(Error::DenominatorVanished { min_w, index });
                }
                let g = GridFunction::new(
                    (0..m).map(|i| sin_phi.values()[i] / w.values()[i]).collect(),
                );
                Ok(Workspace { g, sin_phi, cos_phi, w_raw, w, exp3psi: ones, phi_grid })
            }
            Nonlinearity::Krasovskii => {
                let psi = cosine_to_grid_with(&phi.conjugate(), &table, m);
                let max_arg = 3.0 * psi.max_abs();
                if max_arg > EXP_GUARD {
                    return Err(Error::OverflowGuard { max_arg });
                }
                let exp3psi = pointwise_map(&psi, MapKind::Exp3)?;
                let g = exp3psi.mul(&sin_phi);
                Ok(Workspace {
                    g,
                    sin_phi,
                    cos_phi,
                    w_raw: GridFunction::zeros(m),
                    w: ones,
                    exp3psi,
                    phi_grid,
                })
            }
            Nonlinearity::Hammerstein(poly) => {
                let g = GridFunction::new(phi_grid.values().iter().map(|u| poly.eval(*u)).collect());
                Ok(Workspace {
                    g,
                    sin_phi,
                    cos_phi,
                    w_raw: GridFunction::zeros(m),
                    w: ones.clone(),
                    exp3psi: ones,
                    phi_grid,
                })
            }
        }
    }

    fn output(&self, problem: &WaveProblem, mu: f64) -> SineSeries {
        let m = self.g.len();
        let table = TrigTable::new(m);
        let g_n = from_grid_with(&self.g, &table, problem.n_modes);
        let mult = problem.multipliers();
        SineSeries::new(
            (1..=problem.n_modes).map(|k| mu * mult[k - 1] * g_n.coeff(k)).collect(),
        )
    }

    /// Directional derivative of the grid integrand along `dir`.
    fn integrand_derivative(
        &self,
        problem: &WaveProblem,
        mu: f64,
        dir: &[f64],
        table: &TrigTable,
    ) -> Vec<f64> {
        let m = self.g.len();
        match &problem.nonlinearity {
            Nonlinearity::Nekrasov => {
                // d g = (cos(phi) v) / w - mu sin(phi) W[cos(phi) v] / w^2
                let c: Vec<f64> = (0..m).map(|i| self.cos_phi.values()[i] * dir[i]).collect();
                let c_series = from_grid_with(&GridFunction::new(c.clone()), table, m / 2 - 1);
                let wc = cosine_to_grid_with(&c_series.cumulative_integral(), table, m);
                (0..m)
                    .map(|i| {
                        let w = self.w.values()[i];
                        c[i] / w - mu * self.sin_phi.values()[i] * wc.values()[i] / (w * w)
                    })
                    .collect()
            }
            Nonlinearity::Krasovskii => {
                // d g = e^{3 Psi} (3 dPsi sin(phi) + cos(phi) v),
                // dPsi = conjugate of the direction.
                // dir is sin(j theta); conj(sin(j theta)) = -cos(j theta),
                // but we must handle a general direction: reconstruct via
                // its sine coefficients.
                let dir_series =
                    from_grid_with(&GridFunction::new(dir.to_vec()), table, problem.n_modes);
                let dpsi = cosine_to_grid_with(&dir_series.conjugate(), table, m);
                (0..m)
                    .map(|i| {
                        self.exp3psi.values()[i]
                            * (3.0 * dpsi.values()[i] * self.sin_phi.values()[i]
                                + self.cos_phi.values()[i] * dir[i])
                    })
                    .collect()
            }
            Nonlinearity::Hammerstein(poly) => (0..m)
                .map(|i| poly.deriv(self.phi_grid.values()[i]) * dir[i])
                .collect(),
        }
    }
}

/// A linear map on sine-coefficient space.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearMap {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl LinearMap {
    pub fn dim(&self) -> usize {
        match self {
            LinearMap::Diagonal(d) => d.len(),
            LinearMap::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, x: &SineSeries) -> SineSeries {
        match self {
            LinearMap::Diagonal(d) => {
                SineSeries::new(x.coeffs().iter().zip(d).map(|(a, b)| a * b).collect())
            }
            LinearMap::Dense(m) => {
                let v = DVector::from_column_slice(x.coeffs());
                SineSeries::new((m * v).iter().copied().collect())
            }
        }
    }
}

/// Taylor split of an operator at zero: `A(phi, mu) = mu B phi + C + D`,
/// C homogeneous of degree `order`, D of higher order.
pub struct OperatorSplit<'a> {
    pub b: LinearMap,
    pub order: usize,
    problem: &'a WaveProblem,
}

impl OperatorSplit<'_> {
    /// The leading `order`-homogeneous nonlinear term.
    pub fn c_term(&self, phi: &SineSeries, mu: f64) -> SineSeries {
        let problem = self.problem;
        let m = problem.grid_size();
        let table = TrigTable::new(m);
        let phi_grid = to_grid_with(phi, &table, m);
        let mult = problem.multipliers();
        let integrand: Vec<f64> = match &problem.nonlinearity {
            Nonlinearity::Nekrasov => {
                // quadratic term of sin(phi)/(1 + mu W): -mu phi int(phi)
                let w = cosine_to_grid_with(&phi.cumulative_integral(), &table, m);
                (0..m).map(|i| -mu * phi_grid.values()[i] * w.values()[i]).collect()
            }
            Nonlinearity::Krasovskii => {
                // quadratic term of e^{3 Psi} sin(phi): 3 Psi phi
                let psi = cosine_to_grid_with(&phi.conjugate(), &table, m);
                (0..m).map(|i| 3.0 * psi.values()[i] * phi_grid.values()[i]).collect()
            }
            Nonlinearity::Hammerstein(poly) => {
                let k = self.order;
                let c = if k >= 1 && k <= poly.coeffs.len() { poly.coeffs[k - 1] } else { 0.0 };
                (0..m).map(|i| c * phi_grid.values()[i].powi(k as i32)).collect()
            }
        };
        let g_n = from_grid_with(&GridFunction::new(integrand), &table, problem.n_modes);
        SineSeries::new(
            (1..=problem.n_modes).map(|k| mu * mult[k - 1] * g_n.coeff(k)).collect(),
        )
    }

    /// Remainder `D = A - mu B phi - C`.
    pub fn d_term(&self, phi: &SineSeries, mu: f64) -> Result<SineSeries> {
        let full = self.problem.apply_at(phi, mu)?;
        let linear = self.b.apply(phi).scale(mu);
        Ok(full.sub(&linear).sub(&self.c_term(phi, mu)))
    }
}
