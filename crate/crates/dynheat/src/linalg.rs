//! Vector kernels and a preconditioned conjugate-gradient solver in a diagonal-weighted
//! inner product.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::Result;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ wᵢ aᵢ bᵢ`.
pub fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

/// `y ← y + α x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final `‖r‖_W / ‖b‖_W`.
    pub residual: f64,
    pub converged: bool,
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl CgOutcome {
    /// Extreme Ritz values of the Lanczos tridiagonal implied by the CG coefficients.
    /// Meaningful only for unpreconditioned runs.
    pub fn ritz_extremes(&self) -> Option<(f64, f64)> {
        let k = self.alphas.len();
        if k == 0 {
            return None;
        }
        let mut t = DMatrix::<f64>::zeros(k, k);
        for j in 0..k {
            let mut d = 1.0 / self.alphas[j];
            if j > 0 {
                d += self.betas[j - 1] / self.alphas[j - 1];
                let off = self.betas[j - 1].sqrt() / self.alphas[j - 1];
                t[(j, j - 1)] = off;
                t[(j - 1, j)] = off;
            }
            t[(j, j)] = d;
        }
        let ev = SymmetricEigen::new(t).eigenvalues;
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

/// Solves `A x = b` for `A` self-adjoint positive definite in `⟨u,v⟩ = Σ wᵢuᵢvᵢ`.
///
/// `x` holds the initial guess on entry. `precond` is an optional diagonal approximation of
/// `A⁻¹`. Stops when `‖r‖_W ≤ tol ‖b‖_W` or after `maxit` iterations; non-convergence is
/// reported through [`CgOutcome::converged`], not as an error.
pub fn conjugate_gradient<F>(
    mut apply: F,
    weights: &[f64],
    b: &[f64],
    x: &mut [f64],
    precond: Option<&[f64]>,
    tol: f64,
    maxit: usize,
) -> Result<CgOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = b.len();
    let bnorm = wdot(weights, b, b).sqrt();
    let mut out = CgOutcome {
        iterations: 0,
        residual: 0.0,
        converged: true,
        alphas: Vec::new(),
        betas: Vec::new(),
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(out);
    }
    let mut ap = vec![0.0; n];
    apply(x, &mut ap)?;
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let precondition = |r: &[f64], z: &mut Vec<f64>| match precond {
        Some(d) => z
            .iter_mut()
            .zip(r)
            .zip(d)
            .for_each(|((z, r), d)| *z = r * d),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = wdot(weights, &r, &z);
    out.residual = wdot(weights, &r, &r).sqrt() / bnorm;
    while out.residual > tol {
        if out.iterations >= maxit {
            out.converged = false;
            return Ok(out);
        }
        apply(&p, &mut ap)?;
        let pap = wdot(weights, &p, &ap);
        if !(pap > 0.0) {
            out.converged = false;
            return Ok(out);
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        out.iterations += 1;
        out.alphas.push(alpha);
        out.residual = wdot(weights, &r, &r).sqrt() / bnorm;
        precondition(&r, &mut z);
        let rz_new = wdot(weights, &r, &z);
        let beta = rz_new / rz;
        out.betas.push(beta);
        rz = rz_new;
        for (p, z) in p.iter_mut().zip(&z) {
            *p = z + beta * *p;
        }
    }
    Ok(out)
}
