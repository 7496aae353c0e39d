//! Exact finite-probability arithmetic.
//!
//! Distributions are stored as dense `f64` vectors parallel to an ordered
//! alphabet. Logarithms are base 2. Relative entropy returns
//! `f64::INFINITY` when the support of `P` escapes the support of `Q`;
//! callers must check for it.

pub(crate) mod joint;
pub(crate) mod partition;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::{Error, Result};

pub use joint::{Axis, JointDist};
pub use partition::{PartitionedInput, ProductComponent};

/// Tolerance on probability sums.
pub const SUM_TOL: f64 = 1e-12;
/// Tolerance on derived identities (chain rules, additivity).
pub const IDENTITY_TOL: f64 = 1e-9;

/// An ordered, duplicate-free list of symbol names. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet(Arc<[String]>);

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidDistribution(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Self(symbols.into()))
    }

    /// Symbols `"0"`, `"1"`, ..., `"n-1"`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.0
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.0[i]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.0.iter().position(|s| s == symbol)
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// A probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDist {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

/// Checks that `probs` is a probability vector: finite, non-negative, non-empty,
/// summing to 1 within [`SUM_TOL`].
pub fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty probability vector".into()));
    }
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
    }
    let s: f64 = probs.iter().sum();
    if math::abs(s - 1.0) > SUM_TOL {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {s}")));
    }
    Ok(())
}

impl FiniteDist {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if alphabet.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} symbols but {} probabilities",
                alphabet.len(),
                probs.len()
            )));
        }
        validate_probs(&probs)?;
        Ok(Self { alphabet, probs })
    }

    /// A distribution over the indexed alphabet `"0".."n-1"`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let alphabet = Alphabet::indexed(probs.len())?;
        Self::new(alphabet, probs)
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(alphabet: Alphabet, weights: &[f64]) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0 && s.is_finite()) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidDistribution("weights must be non-negative with positive sum".into()));
        }
        Self::new(alphabet, weights.iter().map(|w| w / s).collect())
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.len();
        let probs = alloc::vec![1.0 / n as f64; n];
        Self { alphabet, probs }
    }

    pub fn point_mass(alphabet: Alphabet, index: usize) -> Result<Self> {
        if index >= alphabet.len() {
            return Err(Error::Parameter(format!("index {index} outside alphabet")));
        }
        let mut probs = alloc::vec![0.0; alphabet.len()];
        probs[index] = 1.0;
        Ok(Self { alphabet, probs })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Probability of a set of indices.
    pub fn mass(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        indices.into_iter().map(|i| self.probs[i]).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i)
    }

    fn check_same_alphabet(&self, other: &Self) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch(format!(
                "{:?} vs {:?}",
                self.alphabet, other.alphabet
            )));
        }
        Ok(())
    }
}

/// Shannon entropy in bits.
pub fn entropy(p: &FiniteDist) -> f64 {
    entropy_of(p.probs())
}

/// Relative entropy `S(P||Q)` in bits, or `f64::INFINITY`.
pub fn relative_entropy(p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    p.check_same_alphabet(q)?;
    Ok(relative_entropy_of(p.probs(), q.probs()))
}

/// `sum_i |P(i) - Q(i)|`, in `[0, 2]`.
pub fn total_variation(p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    p.check_same_alphabet(q)?;
    Ok(total_variation_of(p.probs(), q.probs()))
}

/// Entropy of a raw probability vector.
pub fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs.iter().map(|&p| -math::xlogy_ratio(p, 1.0)).sum();
    // Cancellation can leave -0.0 or a few ulps below zero.
    h.max(0.0)
}

/// Relative entropy of raw vectors of equal length.
pub fn relative_entropy_of(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let term = math::xlogy_ratio(pi, qi);
        if term == f64::INFINITY {
            return f64::INFINITY;
        }
        s += term;
    }
    s
}

/// L1 distance of raw vectors of equal length.
pub fn total_variation_of(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter().zip(q).map(|(a, b)| math::abs(a - b)).sum()
}

/// Binary entropy `h(p)`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}
