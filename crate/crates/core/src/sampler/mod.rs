//! Correlated sampling from a reference distribution `Q`.
//!
//! - [`RejectionPair`]: one draw `X ~ Q` with an acceptance bit whose
//!   conditional law given acceptance is `P`.
//! - [`correlated_sequence`]: `t` such draws; the accepted entries form a
//!   binomially long i.i.d. `P` subsequence.
//! - [`LasVegasSampler`]: a stopping rule over an infinite `Q` stream that
//!   outputs `P` on its good set or an explicit abort.
//! - [`race`]: the same stopping rule run lazily for many inputs sharing one
//!   stream, with positions far beyond anything materializable.
//!
//! Every sampler has a closed-form twin used to check it.

mod las_vegas;
pub mod race;

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;

use crate::math;
use crate::prob::{FiniteDist, SUM_TOL};
use crate::{Error, Result};

pub use las_vegas::{
    las_vegas_sampler, multi_sampler, LasVegasSampler, Outcome, SampleTrace, SharedTrace, Stop,
    StreamCap, MATERIALIZE_LOG2_CAP, MAX_EXPONENT,
};

/// A weighted index sampler over a probability vector.
pub(crate) fn categorical(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs).map_err(|e| Error::InvalidDistribution(format!("{e}")))
}

/// Rejection pair: `X ~ Q`, `Pr[accept | X = i] = P(i) / (2^a Q(i))`.
#[derive(Clone, Debug)]
pub struct RejectionPair {
    q: FiniteDist,
    accept_prob: Vec<f64>,
    a: f64,
}

/// Checks `2^-a P <= Q` and returns the first violating symbol.
fn check_domination(p: &FiniteDist, q: &FiniteDist, a: f64) -> Result<()> {
    if p.alphabet() != q.alphabet() {
        return Err(Error::AlphabetMismatch("P and Q differ".into()));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::Parameter(format!("exponent a must be finite and >= 0, got {a}")));
    }
    let scale = math::exp2(-a);
    for i in 0..p.len() {
        let scaled = scale * p.prob(i);
        if scaled > q.prob(i) * (1.0 + SUM_TOL) + f64::MIN_POSITIVE {
            return Err(Error::DominationViolated {
                symbol: p.alphabet().symbol(i).into(),
                scaled,
                q: q.prob(i),
            });
        }
    }
    Ok(())
}

/// Builds the rejection pair for `P` against `Q` at exponent `a`.
pub fn rejection_pair(p: &FiniteDist, q: &FiniteDist, a: f64) -> Result<RejectionPair> {
    check_domination(p, q, a)?;
    let scale = math::exp2(-a);
    let accept_prob = (0..q.len())
        .map(|i| if q.prob(i) > 0.0 { (p.prob(i) / q.prob(i) * scale).min(1.0) } else { 0.0 })
        .collect();
    let pair = RejectionPair { q: q.clone(), accept_prob, a };
    let rate = pair.accept_rate();
    if math::abs(rate - scale) > SUM_TOL {
        return Err(Error::InvariantViolated(format!("acceptance rate {rate} != 2^-a = {scale}")));
    }
    let cond = pair.accepted_law();
    for (i, c) in cond.iter().enumerate() {
        if math::abs(c - p.prob(i)) > 1e-10 {
            return Err(Error::InvariantViolated(format!("accepted law differs from P at {i}")));
        }
    }
    Ok(pair)
}

impl RejectionPair {
    pub fn q(&self) -> &FiniteDist {
        &self.q
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `Pr[accept | X = i]`.
    pub fn accept_prob(&self) -> &[f64] {
        &self.accept_prob
    }

    /// Closed form `Pr[accept] = sum_i Q(i) accept(i)`.
    pub fn accept_rate(&self) -> f64 {
        self.q.probs().iter().zip(&self.accept_prob).map(|(q, g)| q * g).sum()
    }

    /// Closed form `Pr[X = i | accept]`.
    pub fn accepted_law(&self) -> Vec<f64> {
        let rate = self.accept_rate();
        self.q.probs().iter().zip(&self.accept_prob).map(|(q, g)| q * g / rate).collect()
    }

    /// Draws `(X, accepted)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, bool) {
        let x = categorical(self.q.probs()).expect("validated distribution").sample(rng);
        let u: f64 = rng.random();
        (x, u < self.accept_prob[x])
    }
}

/// A `Q` sequence and the subsequence of its accepted entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelatedSequence {
    pub x_seq: Vec<usize>,
    /// Positions (0-based) of accepted entries, increasing.
    pub accepted: Vec<usize>,
    /// `x_seq` at the accepted positions.
    pub y_subseq: Vec<usize>,
}

/// Draws `t` independent rejection pairs.
pub fn correlated_sequence<R: Rng + ?Sized>(
    p: &FiniteDist,
    q: &FiniteDist,
    a: f64,
    t: usize,
    rng: &mut R,
) -> Result<CorrelatedSequence> {
    if t == 0 {
        return Err(Error::Parameter("sequence length must be at least 1".into()));
    }
    let pair = rejection_pair(p, q, a)?;
    let sampler = categorical(q.probs())?;
    let mut x_seq = Vec::with_capacity(t);
    let mut accepted = Vec::new();
    for j in 0..t {
        let x = sampler.sample(rng);
        let u: f64 = rng.random();
        if u < pair.accept_prob[x] {
            accepted.push(j);
        }
        x_seq.push(x);
    }
    let y_subseq = accepted.iter().map(|&j| x_seq[j]).collect();
    Ok(CorrelatedSequence { x_seq, accepted, y_subseq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use crate::stats::three_sigma;
    use alloc::vec;

    fn d(p: &[f64]) -> FiniteDist {
        FiniteDist::from_probs(p.to_vec()).unwrap()
    }

    #[test]
    fn identical_distributions_accept_everything() {
        let p = d(&[0.3, 0.7]);
        let pair = rejection_pair(&p, &p, 0.0).unwrap();
        assert_eq!(pair.accept_prob(), &[1.0, 1.0]);
        assert_eq!(pair.accept_rate(), 1.0);
    }

    #[test]
    fn point_mass_against_uniform() {
        let pair = rejection_pair(&d(&[1.0, 0.0]), &d(&[0.5, 0.5]), 1.0).unwrap();
        assert_eq!(pair.accept_prob(), &[1.0, 0.0]);
        assert_eq!(pair.accept_rate(), 0.5);
        assert_eq!(pair.accepted_law(), vec![1.0, 0.0]);
    }

    #[test]
    fn domination_violation_names_the_symbol() {
        let err = rejection_pair(&d(&[1.0, 0.0]), &d(&[0.5, 0.5]), 0.5).unwrap_err();
        match err {
            Error::DominationViolated { symbol, .. } => assert_eq!(symbol, "0"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn monte_carlo_acceptance_rate() {
        let p = d(&[0.6, 0.3, 0.1]);
        let q = d(&[0.2, 0.3, 0.5]);
        let a = 2.0;
        let pair = rejection_pair(&p, &q, a).unwrap();
        let mut rng = derive_stream(1, &[]);
        let n = 100_000;
        let hits = (0..n).filter(|_| pair.sample(&mut rng).1).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.25).abs() <= three_sigma(0.25, n));
    }

    #[test]
    fn zero_exponent_keeps_whole_sequence() {
        let p = d(&[0.3, 0.7]);
        let mut rng = derive_stream(2, &[]);
        let s = correlated_sequence(&p, &p, 0.0, 50, &mut rng).unwrap();
        assert_eq!(s.x_seq, s.y_subseq);
    }

    #[test]
    fn subsequence_length_is_binomial() {
        let p = d(&[0.9, 0.1]);
        let q = d(&[0.5, 0.5]);
        let (a, t, trials) = (1.0, 40, 10_000);
        let mut total = 0usize;
        for seed in 0..trials {
            let mut rng = derive_stream(3, &[seed]);
            let s = correlated_sequence(&p, &q, a, t, &mut rng).unwrap();
            // Structural: y is the subsequence of x at the accepted positions.
            assert!(s.accepted.windows(2).all(|w| w[0] < w[1]));
            assert!(s.accepted.iter().zip(&s.y_subseq).all(|(&j, &y)| s.x_seq[j] == y));
            total += s.y_subseq.len();
        }
        let mean = total as f64 / trials as f64;
        let expect = t as f64 * 0.5;
        let sd = (t as f64 * 0.25 / trials as f64).sqrt();
        assert!((mean - expect).abs() <= 3.0 * sd);
    }
}
