//! The random-basis ensemble: `n / 2^k` independent Haar bases of `C^m`,
//! each cut into `2^k` consecutive blocks `B_l` of `m / 2^k` vectors, with
//! `rho_l = (2^k/m) B_l B_l^*`, `M_l = B_l B_l^*` and `V_l = span B_l`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::SymmetricEigen;
use rand::seq::index::sample;
use rand::Rng;

use super::entropy::hermitian_log2;
use super::tails::Hypothesis;
use super::{haar_orthonormal, modulus, povm_value, powi, CMatrix, CVector, Projector, Subspace, C64, UNIT_TOL};
use crate::math;
use crate::rng::derive_stream;
use crate::{Error, Result};

/// Tolerances the ensemble is checked against on construction.
pub const TRACE_TOL: f64 = 1e-9;
pub const MEAN_TOL: f64 = 1e-8;
pub const ENTROPY_TOL: f64 = 1e-6;

/// The value at or below which a measurement counts as defeated by `W`.
pub const DEFEAT_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumEnsemble {
    m: usize,
    k_exp: u32,
    n: usize,
    bases: Vec<CMatrix>,
}

/// Worst deviations of the ensemble from its defining identities.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleCheck {
    /// `max_l |Tr M_l rho_l - 1|`.
    pub trace_defect: f64,
    /// `max_l |Tr rho_l - 1|`.
    pub unit_trace_defect: f64,
    /// Entrywise `max |(1/n) sum_l rho_l - I/m|`.
    pub mean_defect: f64,
    /// `max_l |S(rho_l || rho) - k|`, with `rho` the computed mean state.
    pub entropy_defect: f64,
    /// Worst orthonormality defect over the bases; bounds both the
    /// Hermitian/PSD defect of every `rho_l` and `|M_l^2 - M_l|`.
    pub basis_defect: f64,
    pub divergences: Vec<f64>,
}

impl EnsembleCheck {
    pub fn holds(&self) -> bool {
        self.trace_defect <= TRACE_TOL
            && self.unit_trace_defect <= TRACE_TOL
            && self.mean_defect <= MEAN_TOL
            && self.entropy_defect <= ENTROPY_TOL
            && self.basis_defect <= UNIT_TOL
    }
}

impl QuantumEnsemble {
    /// Wraps pre-drawn unitary bases and checks every ensemble identity.
    pub fn from_bases(m: usize, k_exp: u32, n: usize, bases: Vec<CMatrix>) -> Result<Self> {
        check_shape(m, k_exp, n)?;
        if bases.len() != n >> k_exp {
            return Err(Error::DimensionMismatch(format!("{} bases for n = {n}, k = {k_exp}", bases.len())));
        }
        if let Some(b) = bases.iter().find(|b| b.shape() != (m, m)) {
            return Err(Error::DimensionMismatch(format!("basis of shape {:?} in C^{m}", b.shape())));
        }
        let ens = QuantumEnsemble { m, k_exp, n, bases };
        let check = ens.check()?;
        if !check.holds() {
            return Err(Error::InvariantViolated(format!("ensemble identities fail: {check:?}")));
        }
        Ok(ens)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_exp(&self) -> u32 {
        self.k_exp
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bases(&self) -> &[CMatrix] {
        &self.bases
    }

    pub fn block_size(&self) -> usize {
        self.m >> self.k_exp
    }

    fn block(&self, l: usize) -> CMatrix {
        let b = self.block_size();
        let j = l & ((1 << self.k_exp) - 1);
        self.bases[l >> self.k_exp].columns(j * b, b).into_owned()
    }

    /// The `t`-th vector of block `l`.
    pub fn vector(&self, l: usize, t: usize) -> CVector {
        let b = self.block_size();
        let j = l & ((1 << self.k_exp) - 1);
        self.bases[l >> self.k_exp].column(j * b + t).into_owned()
    }

    /// `V_l`, the support of `rho_l`.
    pub fn subspace(&self, l: usize) -> Subspace {
        Subspace { basis: self.block(l) }
    }

    /// `M_l`.
    pub fn projector(&self, l: usize) -> Projector {
        Projector::onto(self.subspace(l))
    }

    /// `rho_l` as an `m x m` matrix.
    pub fn state(&self, l: usize) -> CMatrix {
        let b = self.block(l);
        (&b * b.adjoint()).scale(self.scale())
    }

    /// `(1/n) sum_l rho_l`.
    pub fn mean_state(&self) -> CMatrix {
        let mut acc = CMatrix::zeros(self.m, self.m);
        for basis in &self.bases {
            acc += basis * basis.adjoint();
        }
        acc.scale(self.scale() / self.n as f64)
    }

    fn scale(&self) -> f64 {
        (1u64 << self.k_exp) as f64 / self.m as f64
    }

    /// Evaluates every ensemble identity. `S(rho_l || rho)` uses the
    /// nonzero spectrum of `rho_l`, which is that of the scaled Gram matrix
    /// `(2^k/m) B_l^* B_l`, and `Tr rho_l log2 rho = (2^k/m) Tr B_l^* (log2 rho) B_l`.
    pub fn check(&self) -> Result<EnsembleCheck> {
        let scale = self.scale();
        let mean = self.mean_state();
        let inv_m = 1.0 / self.m as f64;
        let mut mean_defect = 0.0f64;
        for i in 0..self.m {
            for j in 0..self.m {
                let target = if i == j { inv_m } else { 0.0 };
                mean_defect = mean_defect.max(modulus(mean[(i, j)] - C64::new(target, 0.0)));
            }
        }
        let log_mean = hermitian_log2(&mean)?;
        let basis_defect = self.bases.iter().map(super::gram_defect).fold(0.0, f64::max);
        let (mut trace_defect, mut unit_trace_defect, mut entropy_defect) = (0.0f64, 0.0f64, 0.0f64);
        let mut divergences = Vec::with_capacity(self.n);
        let k = f64::from(self.k_exp);
        for basis in &self.bases {
            let lb = &log_mean * basis;
            for j in 0..(1usize << self.k_exp) {
                let b = self.block_size();
                let blk = basis.columns(j * b, b);
                let g = blk.adjoint() * blk;
                let tr = g.trace().re * scale;
                unit_trace_defect = unit_trace_defect.max(math::abs(tr - 1.0));
                trace_defect = trace_defect.max(math::abs(g.norm_squared() * scale - 1.0));
                let spectrum = SymmetricEigen::new(g).eigenvalues;
                let neg_entropy: f64 = spectrum
                    .iter()
                    .map(|&x| {
                        let l = x * scale;
                        if l > 1e-12 { l * math::log2(l) } else { 0.0 }
                    })
                    .sum();
                let cross: f64 = (0..b).map(|t| blk.column(t).dotc(&lb.column(j * b + t)).re).sum::<f64>() * scale;
                let s = neg_entropy - cross;
                entropy_defect = entropy_defect.max(math::abs(s - k));
                divergences.push(s);
            }
        }
        Ok(EnsembleCheck { trace_defect, unit_trace_defect, mean_defect, entropy_defect, basis_defect, divergences })
    }
}

fn check_shape(m: usize, k_exp: u32, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::Parameter("m and n must be positive".into()));
    }
    if k_exp >= usize::BITS - 1 {
        return Err(Error::Parameter(format!("k = {k_exp} is too large")));
    }
    let blocks = 1usize << k_exp;
    if !m.is_multiple_of(blocks) {
        return Err(Error::Parameter(format!("2^{k_exp} does not divide m = {m}")));
    }
    if !n.is_multiple_of(blocks) {
        return Err(Error::Parameter(format!("2^{k_exp} does not divide n = {n}")));
    }
    Ok(())
}

/// Draws the ensemble; basis `i` comes from stream `[i]` under `seed`.
pub fn build_ensemble(m: usize, k_exp: u32, n: usize, seed: u64) -> Result<QuantumEnsemble> {
    check_shape(m, k_exp, n)?;
    let bases = (0..(n >> k_exp) as u64)
        .map(|i| haar_orthonormal(m, m, &mut derive_stream(seed, &[i])).map(|s| s.basis))
        .collect::<Result<Vec<_>>>()?;
    QuantumEnsemble::from_bases(m, k_exp, n, bases)
}

/// How a test subspace was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubspaceKind {
    Haar,
    /// `d` vectors of one block `V_l`.
    WithinBlock { block: usize },
    /// One vector from each of `d` distinct blocks.
    AcrossBlocks,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceOutcome {
    pub kind: SubspaceKind,
    /// `|{l : M_l(W) <= 1/10}|`.
    pub defeated: usize,
    pub fraction: f64,
    pub max_value: f64,
    pub mean_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncompressReport {
    pub m: usize,
    pub k_exp: u32,
    pub n: usize,
    pub d: usize,
    pub threshold: f64,
    pub seed: u64,
    pub outcomes: Vec<SubspaceOutcome>,
    pub hypotheses: Vec<Hypothesis>,
    /// Natural log of the net union bound; negative means it is below 1.
    pub union_bound_ln: f64,
}

impl IncompressReport {
    pub fn min_fraction(&self, kind: fn(&SubspaceKind) -> bool) -> Option<f64> {
        self.outcomes.iter().filter(|o| kind(&o.kind)).map(|o| o.fraction).reduce(f64::min)
    }
}

/// `M_l(W)` for every `l`.
pub fn povm_values(ens: &QuantumEnsemble, w: &Subspace) -> Result<Vec<f64>> {
    (0..ens.n).map(|l| povm_value(&ens.projector(l), w)).collect()
}

/// Evaluates `M_l(W)` over all `l` for `samples` subspaces of each kind.
/// Sample `s` of kind `c` uses stream `[c, s]`.
pub fn incompressibility_trial(ens: &QuantumEnsemble, d: usize, samples: usize, seed: u64) -> Result<IncompressReport> {
    if d == 0 || d > ens.m {
        return Err(Error::Parameter(format!("subspace dimension {d} must lie in 1..={}", ens.m)));
    }
    let mut outcomes = Vec::with_capacity(3 * samples);
    for s in 0..samples as u64 {
        let w = haar_orthonormal(ens.m, d, &mut derive_stream(seed, &[0, s]))?;
        outcomes.push(outcome(ens, SubspaceKind::Haar, &w)?);
        if d <= ens.block_size() {
            let mut rng = derive_stream(seed, &[1, s]);
            let l = rng.random_range(0..ens.n);
            let picks = sample(&mut rng, ens.block_size(), d);
            let vs: Vec<CVector> = picks.iter().map(|t| ens.vector(l, t)).collect();
            outcomes.push(outcome(ens, SubspaceKind::WithinBlock { block: l }, &Subspace::span(ens.m, &vs)?)?);
        }
        if d <= ens.n {
            let mut rng = derive_stream(seed, &[2, s]);
            let blocks = sample(&mut rng, ens.n, d);
            let vs: Vec<CVector> =
                blocks.iter().map(|l| ens.vector(l, rng.random_range(0..ens.block_size()))).collect();
            outcomes.push(outcome(ens, SubspaceKind::AcrossBlocks, &Subspace::span(ens.m, &vs)?)?);
        }
    }
    let k = f64::from(ens.k_exp);
    Ok(IncompressReport {
        m: ens.m,
        k_exp: ens.k_exp,
        n: ens.n,
        d,
        threshold: DEFEAT_THRESHOLD,
        seed,
        outcomes,
        hypotheses: incompressibility_hypotheses(ens.m as f64, d as f64, ens.n as f64, k),
        union_bound_ln: net_union_bound_ln(ens.m as f64, d as f64, ens.n as f64, k),
    })
}

fn outcome(ens: &QuantumEnsemble, kind: SubspaceKind, w: &Subspace) -> Result<SubspaceOutcome> {
    let values = povm_values(ens, w)?;
    let defeated = values.iter().filter(|&&v| v <= DEFEAT_THRESHOLD).count();
    Ok(SubspaceOutcome {
        kind,
        defeated,
        fraction: defeated as f64 / ens.n as f64,
        max_value: values.iter().copied().fold(0.0, f64::max),
        mean_value: values.iter().sum::<f64>() / ens.n as f64,
    })
}

/// The parameter constraints under which a quarter of the measurements
/// are guaranteed to be defeated by every `d`-dimensional subspace.
/// Takes reals because the regime is far beyond `usize`.
pub fn incompressibility_hypotheses(m: f64, d: f64, n: f64, k: f64) -> Vec<Hypothesis> {
    let two_k = math::exp2(k);
    alloc::vec![
        Hypothesis::new("k > 7", k > 7.0),
        Hypothesis::new("d > 160^2", d > 160.0 * 160.0),
        Hypothesis::new("1600 d^4 k 2^k ln(20 d^2) < m", 1600.0 * powi(d, 4) * k * two_k * math::ln(20.0 * d * d) < m),
        Hypothesis::new("3200 2^(2k) d^5 ln d < n", 3200.0 * two_k * two_k * powi(d, 5) * math::ln(d) < n),
    ]
}

/// `ln` of `(4e/3)^(3n/2^(k+2)) (8 sqrt(d)/eps)^(2md) exp(-3mn/(1600 2^(2k) d^4))`
/// at `eps = 1/20`: the union bound over the rounded-subspace net.
pub fn net_union_bound_ln(m: f64, d: f64, n: f64, k: f64) -> f64 {
    let two_k = math::exp2(k);
    let eps = 1.0 / 20.0;
    3.0 * n / (4.0 * two_k) * math::ln(4.0 * core::f64::consts::E / 3.0) + 2.0 * m * d * math::ln(8.0 * math::sqrt(d) / eps)
        - 3.0 * m * n / (1600.0 * two_k * two_k * powi(d, 4))
}
