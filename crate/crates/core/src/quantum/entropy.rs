//! Spectral entropies of density matrices, in bits.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::SymmetricEigen;

use super::{hermitian_defect, CMatrix, C64};
use crate::math;
use crate::{Error, Result};

/// Eigenvalues below this are treated as zero.
const SPECTRAL_TOL: f64 = 1e-12;
/// Negative eigenvalues beyond this reject the input as non-PSD.
const PSD_TOL: f64 = 1e-9;

fn eigen(a: &CMatrix, what: &str) -> Result<SymmetricEigen<C64, nalgebra::Dyn>> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!("{what} is {}x{}", a.nrows(), a.ncols())));
    }
    let h = hermitian_defect(a);
    if h > PSD_TOL {
        return Err(Error::InvariantViolated(format!("{what} is not Hermitian (defect {h})")));
    }
    let e = SymmetricEigen::new(a.clone());
    let min = e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    Ok(e)
}

/// `-Tr rho log2 rho`.
pub fn von_neumann_entropy(rho: &CMatrix) -> Result<f64> {
    let e = eigen(rho, "rho")?;
    Ok(-e.eigenvalues.iter().map(|&l| if l > SPECTRAL_TOL { l * math::log2(l) } else { 0.0 }).sum::<f64>())
}

/// `log2` of a positive-definite Hermitian matrix. Fails if any eigenvalue
/// is at most [`SPECTRAL_TOL`].
pub fn hermitian_log2(a: &CMatrix) -> Result<CMatrix> {
    let e = eigen(a, "matrix")?;
    if let Some(&l) = e.eigenvalues.iter().find(|&&l| l <= SPECTRAL_TOL) {
        return Err(Error::InvariantViolated(format!("logarithm of a singular matrix (eigenvalue {l})")));
    }
    let logs = e.eigenvalues.map(|l| C64::new(math::log2(l), 0.0));
    let u = &e.eigenvectors;
    Ok(u * CMatrix::from_diagonal(&logs) * u.adjoint())
}

/// `Tr rho (log2 rho - log2 sigma)`; `f64::INFINITY` when `rho` has weight
/// outside the support of `sigma`.
pub fn quantum_relative_entropy(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!("rho is {:?}, sigma is {:?}", rho.shape(), sigma.shape())));
    }
    let er = eigen(rho, "rho")?;
    let es = eigen(sigma, "sigma")?;
    let neg_entropy: f64 =
        er.eigenvalues.iter().map(|&l| if l > SPECTRAL_TOL { l * math::log2(l) } else { 0.0 }).sum();
    // <u_j|rho|u_j> over sigma's eigenbasis.
    let weights: Vec<f64> = (0..es.eigenvalues.len())
        .map(|j| {
            let u = es.eigenvectors.column(j);
            u.dotc(&(rho * u)).re
        })
        .collect();
    let mut cross = 0.0;
    for (j, &s) in es.eigenvalues.iter().enumerate() {
        if s > SPECTRAL_TOL {
            cross += weights[j] * math::log2(s);
        } else if weights[j] > PSD_TOL {
            return Ok(f64::INFINITY);
        }
    }
    Ok((neg_entropy - cross).max(0.0))
}
