//! Linear analysis of the Frechet derivative B: characteristic values
//! (parameter values mu where I - mu B is singular), minimal-norm Fredholm
//! solves, and bifurcation candidate detection.

use crate::error::{Error, Result};
use crate::operators::LinearMap;
use crate::spectral::SineSeries;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

/// Relative clustering width for nearby characteristic values.
pub const TOL_CLUSTER: f64 = 1e-8;
/// Threshold below which a spectral factor of I - mu B counts as singular.
pub const TOL_SING: f64 = 1e-8;
/// Compatibility tolerance on the singular components of the right-hand side.
pub const TOL_ORTH: f64 = 1e-10;

/// A characteristic value of B with its eigenspace.
#[derive(Debug, Clone)]
pub struct CharValue {
    pub mu_star: f64,
    pub multiplicity: usize,
    /// Orthonormal basis of ker(I - mu_star B), as coefficient vectors.
    pub eigenfunctions: Vec<SineSeries>,
}

/// A characteristic value flagged by the odd-multiplicity criterion:
/// topological degree changes across mu_star, so branching is guaranteed.
#[derive(Debug, Clone)]
pub struct BifurcationCandidate {
    pub char_value: CharValue,
    pub guaranteed: bool,
}

/// All characteristic values of B in ascending order, clustered to
/// multiplicities at relative width `TOL_CLUSTER`.
pub fn char_values(b: &LinearMap) -> Result<Vec<CharValue>> {
    match b {
        LinearMap::Diagonal(d) => {
            // mu_n = 1 / d_n read off exactly; nonpositive entries carry no
            // characteristic value.
            let mut pairs: Vec<(f64, usize)> = d
                .iter()
                .enumerate()
                .filter(|(_, v)| **v > 0.0)
                .map(|(i, v)| (1.0 / v, i + 1))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let n = d.len();
            let mut out: Vec<CharValue> = Vec::new();
            for (mu, mode) in pairs {
                match out.last_mut() {
                    Some(cv) if (mu - cv.mu_star).abs() <= TOL_CLUSTER * cv.mu_star => {
                        cv.multiplicity += 1;
                        cv.eigenfunctions.push(SineSeries::mode(mode, n));
                    }
                    _ => out.push(CharValue {
                        mu_star: mu,
                        multiplicity: 1,
                        eigenfunctions: vec![SineSeries::mode(mode, n)],
                    }),
                }
            }
            Ok(out)
        }
        LinearMap::Dense(m) => dense_char_values(m),
    }
}

fn dense_char_values(b: &DMatrix<f64>) -> Result<Vec<CharValue>> {
    let n = b.nrows();
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let eigs = b.clone().complex_eigenvalues();
    let mut lambdas: Vec<f64> = eigs
        .iter()
        .filter(|z| z.im.abs() <= 1e-10 * scale && z.re > TOL_SING * scale)
        .map(|z| z.re)
        .collect();
    // Largest eigenvalue first => smallest characteristic value first.
    lambdas.sort_by(|a, b| b.total_cmp(a));

    // Cluster in mu = 1/lambda.
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for l in lambdas {
        let mu = 1.0 / l;
        match clusters.last_mut() {
            Some((mu0, count)) if (mu - *mu0).abs() <= TOL_CLUSTER * *mu0 => *count += 1,
            _ => clusters.push((mu, 1)),
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = Vec::new();
    for (mu, mult) in clusters {
        let basis = eigenbasis(b, mu, mult, &mut rng)?;
        out.push(CharValue {
            mu_star: mu,
            multiplicity: mult,
            eigenfunctions: basis.into_iter().map(|v| SineSeries::new(v.iter().copied().collect())).collect(),
        });
    }
    let _ = n;
    Ok(out)
}

/// Orthonormal basis of ker(I - mu B) by shifted inverse iteration with
/// in-cluster Gram-Schmidt.
fn eigenbasis(
    b: &DMatrix<f64>,
    mu: f64,
    mult: usize,
    rng: &mut impl Rng,
) -> Result<Vec<DVector<f64>>> {
    let n = b.nrows();
    // Tiny regularizing shift keeps the LU factor usable at the exact
    // characteristic value.
    let shifted = {
        let mut m = DMatrix::identity(n, n) - b * mu;
        for i in 0..n {
            m[(i, i)] += 1e-13;
        }
        m
    };
    let lu = shifted.full_piv_lu();
    let mut basis: Vec<DVector<f64>> = (0..mult)
        .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64)))
        .collect();
    let max_iters = 100;
    for it in 0..max_iters {
        for k in 0..mult {
            let mut v = lu
                .solve(&basis[k])
                .ok_or(Error::NonConvergence { iters: it })?;
            for prev in basis.iter().take(k) {
                let proj = prev.dot(&v);
                v -= prev * proj;
            }
            let norm = v.norm();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::NonConvergence { iters: it });
            }
            basis[k] = v / norm;
        }
        let residual = basis
            .iter()
            .map(|v| (v - b * v * mu).norm())
            .fold(0.0f64, f64::max);
        if residual <= 1e-10 {
            return Ok(basis);
        }
    }
    Err(Error::NonConvergence { iters: max_iters })
}

/// Minimal-norm solution of `(I - mu B) x = rhs`.
///
/// Singular spectral factors (below `TOL_SING`) demand the matching component
/// of `rhs` to vanish (below `TOL_ORTH`); the solution component there is set
/// to zero, which selects the minimal-norm representative.
pub fn fredholm_solve(b: &LinearMap, mu: f64, rhs: &SineSeries) -> Result<SineSeries> {
    match b {
        LinearMap::Diagonal(d) => {
            assert_eq!(d.len(), rhs.n_modes());
            let mut coeffs = Vec::with_capacity(d.len());
            for (i, &di) in d.iter().enumerate() {
                let s = 1.0 - mu * di;
                let r = rhs.coeff(i + 1);
                if s.abs() <= TOL_SING {
                    if r.abs() > TOL_ORTH {
                        return Err(Error::IncompatibleSingularSystem { component: r });
                    }
                    coeffs.push(0.0);
                } else {
                    coeffs.push(r / s);
                }
            }
            Ok(SineSeries::new(coeffs))
        }
        LinearMap::Dense(m) => {
            let n = m.nrows();
            assert_eq!(n, rhs.n_modes());
            let a = DMatrix::identity(n, n) - m * mu;
            let svd = a.svd(true, true);
            let u = svd.u.as_ref().expect("svd with u");
            let vt = svd.v_t.as_ref().expect("svd with v_t");
            let r = DVector::from_column_slice(rhs.coeffs());
            let ur = u.transpose() * &r;
            let mut y = DVector::zeros(n);
            for i in 0..n {
                let s = svd.singular_values[i];
                if s <= TOL_SING {
                    if ur[i].abs() > TOL_ORTH {
                        return Err(Error::IncompatibleSingularSystem { component: ur[i] });
                    }
                } else {
                    y[i] = ur[i] / s;
                }
            }
            let x = vt.transpose() * y;
            Ok(SineSeries::new(x.iter().copied().collect()))
        }
    }
}

/// Characteristic values of B inside the open interval `(lo, hi)`, each
/// flagged `guaranteed` when its multiplicity is odd.
pub fn detect_bifurcations(b: &LinearMap, lo: f64, hi: f64) -> Result<Vec<BifurcationCandidate>> {
    assert!(lo < hi, "empty parameter interval");
    Ok(char_values(b)?
        .into_iter()
        .filter(|cv| cv.mu_star > lo && cv.mu_star < hi)
        .map(|cv| BifurcationCandidate { guaranteed: cv.multiplicity % 2 == 1, char_value: cv })
        .collect())
}
