//! Random vectors and subspaces of `C^m`, projectors, and POVM values.
//!
//! Haar sampling normalizes i.i.d. complex Gaussians; frames come from
//! Gram-Schmidt with a second reorthogonalization pass, which keeps the Gram
//! matrix within `1e-12` of the identity at the dimensions used here.
//! Eigen-solves use nalgebra's Hermitian QR iteration, which is
//! deterministic for identical inputs.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::math;
use crate::{Error, Result};

mod ensemble;
mod entropy;
mod net;
mod tails;

pub use ensemble::{
    build_ensemble, incompressibility_hypotheses, incompressibility_trial, net_union_bound_ln, povm_values, EnsembleCheck,
    IncompressReport, DEFEAT_THRESHOLD, ENTROPY_TOL, MEAN_TOL, TRACE_TOL, QuantumEnsemble, SubspaceKind, SubspaceOutcome,
};
pub use entropy::{hermitian_log2, quantum_relative_entropy, von_neumann_entropy};
pub use net::{build_net, check_rounding, net_round, net_size_bound, Net, RoundedSubspace, RoundingCheck};
pub use tails::{
    orthopair_tail, overlap_tails, subspace_energy, tail_counts, tail_report, Hypothesis, TailCounts, TailEvent, TailExperiment, TailReport,
};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Norm tolerance for unit vectors and orthonormal frames.
pub const UNIT_TOL: f64 = 1e-10;

/// Below this norm a Gram-Schmidt residual counts as linearly dependent.
const DEPENDENT_TOL: f64 = 1e-8;

/// A vector of `C^m` with Euclidean norm 1.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector(CVector);

impl UnitVector {
    pub fn new(v: CVector) -> Result<Self> {
        let n = v.norm();
        if v.is_empty() || math::abs(n - 1.0) > UNIT_TOL {
            return Err(Error::InvariantViolated(format!("unit vector has norm {n}")));
        }
        Ok(UnitVector(v))
    }

    /// `v / |v|`; fails on (near) zero vectors.
    pub fn normalize(v: CVector) -> Result<Self> {
        let n = v.norm();
        if v.is_empty() || n < DEPENDENT_TOL {
            return Err(Error::InvariantViolated("cannot normalize a zero vector".into()));
        }
        Ok(UnitVector(v.unscale(n)))
    }

    pub fn basis(m: usize, i: usize) -> Self {
        let mut v = CVector::zeros(m);
        v[i] = C64::new(1.0, 0.0);
        UnitVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &UnitVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn distance(&self, other: &UnitVector) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

/// A subspace of `C^m` held as an `m x d` matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: CMatrix,
}

impl Subspace {
    /// Checks that the columns are orthonormal within [`UNIT_TOL`].
    pub fn new(basis: CMatrix) -> Result<Self> {
        if basis.ncols() == 0 || basis.nrows() < basis.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "basis of shape {}x{} cannot be orthonormal",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let defect = gram_defect(&basis);
        if defect > UNIT_TOL {
            return Err(Error::InvariantViolated(format!("basis Gram matrix is {defect} from the identity")));
        }
        Ok(Subspace { basis })
    }

    /// Orthonormalizes `vectors`, dropping any that are (numerically) in
    /// the span of the earlier ones. Fails if nothing is left.
    pub fn span(m: usize, vectors: &[CVector]) -> Result<Self> {
        let mut cols: Vec<CVector> = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != m {
                return Err(Error::DimensionMismatch(format!("vector of length {} in C^{m}", v.len())));
            }
            if let Some(u) = orthogonalize(v.clone(), &cols) {
                cols.push(u);
            }
        }
        if cols.is_empty() {
            return Err(Error::InvariantViolated("spanning set is zero".into()));
        }
        Ok(Subspace { basis: CMatrix::from_columns(&cols) })
    }

    /// The span of the standard basis vectors `e_lo, ..., e_{hi-1}`.
    pub fn coordinate(m: usize, lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi || hi > m {
            return Err(Error::DimensionMismatch(format!("coordinate range {lo}..{hi} in C^{m}")));
        }
        let mut b = CMatrix::zeros(m, hi - lo);
        for i in lo..hi {
            b[(i, i - lo)] = C64::new(1.0, 0.0);
        }
        Ok(Subspace { basis: b })
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn vector(&self, i: usize) -> UnitVector {
        UnitVector(self.basis.column(i).into_owned())
    }

    /// `max |B^* B - I|` entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        gram_defect(&self.basis)
    }

    /// `B B^*`.
    pub fn projector_matrix(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `B c / |B c|` for coefficients `c` (normalized first).
    pub fn combine(&self, coeffs: &CVector) -> Result<UnitVector> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("{} coefficients for dimension {}", coeffs.len(), self.dim())));
        }
        UnitVector::normalize(&self.basis * coeffs)
    }
}

/// The orthogonal projector onto a subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    range: Subspace,
}

impl Projector {
    pub fn onto(range: Subspace) -> Self {
        Projector { range }
    }

    pub fn range(&self) -> &Subspace {
        &self.range
    }

    pub fn rank(&self) -> usize {
        self.range.dim()
    }

    pub fn matrix(&self) -> CMatrix {
        self.range.projector_matrix()
    }

    /// `<w|P|w>` = `|B^* w|^2`.
    pub fn expectation(&self, w: &UnitVector) -> f64 {
        (self.range.basis.adjoint() * w.as_vector()).norm_squared()
    }
}

fn gram_defect(b: &CMatrix) -> f64 {
    let g = b.adjoint() * b;
    let mut d = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            d = d.max(modulus(g[(i, j)] - C64::new(target, 0.0)));
        }
    }
    d
}

/// Two passes of classical Gram-Schmidt against orthonormal `cols`.
fn orthogonalize(mut v: CVector, cols: &[CVector]) -> Option<CVector> {
    let n0 = v.norm();
    if n0 < DEPENDENT_TOL {
        return None;
    }
    for _ in 0..2 {
        for u in cols {
            let c = u.dotc(&v);
            v.axpy(-c, u, C64::new(1.0, 0.0));
        }
    }
    let n = v.norm();
    if n < DEPENDENT_TOL * n0.max(1.0) {
        None
    } else {
        Some(v.unscale(n))
    }
}

fn gaussian_vector<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CVector {
    CVector::from_fn(m, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// A Haar-random unit vector of `C^m`.
pub fn haar_vector<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<UnitVector> {
    if m == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    loop {
        if let Ok(u) = UnitVector::normalize(gaussian_vector(m, rng)) {
            return Ok(u);
        }
    }
}

/// A Haar-random orthonormal `d`-frame of `C^m` (a random `d`-dimensional
/// subspace with a random ordered basis).
pub fn haar_orthonormal<R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> Result<Subspace> {
    if d == 0 || d > m {
        return Err(Error::Parameter(format!("frame size {d} must lie in 1..={m}")));
    }
    let mut cols: Vec<CVector> = Vec::with_capacity(d);
    while cols.len() < d {
        if let Some(u) = orthogonalize(gaussian_vector(m, rng), &cols) {
            cols.push(u);
        }
    }
    Ok(Subspace { basis: CMatrix::from_columns(&cols) })
}

/// A Haar-random unitary on `C^m`.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<CMatrix> {
    Ok(haar_orthonormal(m, m, rng)?.basis)
}

/// The largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(h: CMatrix) -> f64 {
    if h.nrows() == 1 {
        return h[(0, 0)].re;
    }
    SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `max <w|M|w>` over unit `w` in `W`, for the projector `M`: the largest
/// eigenvalue of `B^* M B = (C^* B)^* (C^* B)`, clamped to `[0, 1]`.
pub fn povm_value(m: &Projector, w: &Subspace) -> Result<f64> {
    if m.range.ambient() != w.ambient() {
        return Err(Error::DimensionMismatch(format!("projector on C^{} vs subspace of C^{}", m.range.ambient(), w.ambient())));
    }
    let g = m.range.basis.adjoint() * &w.basis;
    Ok(max_eigenvalue(g.adjoint() * g).clamp(0.0, 1.0))
}

/// `max <w|M|w>` over unit `w` in `W` for a general Hermitian `M`.
pub fn povm_value_of(m: &CMatrix, w: &Subspace) -> Result<f64> {
    if m.nrows() != w.ambient() || m.ncols() != w.ambient() {
        return Err(Error::DimensionMismatch(format!("{}x{} operator vs subspace of C^{}", m.nrows(), m.ncols(), w.ambient())));
    }
    Ok(max_eigenvalue(w.basis.adjoint() * m * &w.basis))
}

/// `|z|`.
#[inline]
pub fn modulus(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}

#[inline]
pub(crate) fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, f64::from(n))
}

/// `max |A - A^*|` entrywise.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let mut d = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            d = d.max(modulus(a[(i, j)] - a[(j, i)].conj()));
        }
    }
    d
}
