//! Lazy evaluation of many Las-Vegas samplers on one shared stream.
//!
//! The shared stream is an i.i.d. sequence of pairs `(X_j, U_j)` with
//! `X_j ~ Q` and `U_j` uniform. Sampler `u` stops at the first `j` with
//! `U_j < s_u(X_j)`, accepting if `U_j < gamma_u(X_j)` and aborting
//! otherwise. Instead of walking the stream, the race jumps straight to the
//! next position where some still-active sampler stops: the gap is
//! geometric with rate `sum_m Q(m) max_u s_u(m)`, and at that position
//! `X ∝ Q(m) max_u s_u(m)` and `U` is uniform below `max_u s_u(X)`. By
//! memorylessness this reproduces the joint law of the stream exactly,
//! with positions far beyond `u64`.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{FromPrimitive, One, Zero};
use rand::Rng;
use rand_distr::Distribution;

use super::{categorical, LasVegasSampler};
use crate::math;

/// One sampler taking part in a race.
#[derive(Clone, Debug)]
pub struct Participant {
    gamma: Vec<f64>,
    stop: Vec<f64>,
    log2_cap: u32,
}

impl Participant {
    /// Runs past `2^log2_cap` positions are truncated.
    pub fn new(sampler: &LasVegasSampler, log2_cap: u32) -> Self {
        let stop = (0..sampler.q().len()).map(|i| sampler.stop_prob(i)).collect();
        Self { gamma: sampler.gamma().to_vec(), stop, log2_cap }
    }
}

/// Result of one participant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RaceOutcome {
    /// Accepted the stream symbol at 1-based `position`.
    Accept { position: BigUint, symbol: usize },
    /// Stopped with the abort symbol.
    Dummy { position: BigUint },
    /// Reached the stream cap without stopping.
    Truncated,
}

/// Runs all participants against stream law `q`.
pub fn race<R: Rng + ?Sized>(q: &[f64], participants: &[Participant], rng: &mut R) -> Vec<RaceOutcome> {
    let mut out: Vec<Option<RaceOutcome>> = alloc::vec![None; participants.len()];
    let mut active: Vec<usize> = (0..participants.len()).collect();
    let mut cur = BigUint::zero();
    let mut weights = alloc::vec![0.0; q.len()];
    let mut top = alloc::vec![0.0; q.len()];
    while !active.is_empty() {
        let next_cap_log2 = active.iter().map(|&u| participants[u].log2_cap).min().unwrap();
        let next_cap = BigUint::one() << next_cap_log2;
        for m in 0..q.len() {
            top[m] = active.iter().map(|&u| participants[u].stop[m]).fold(0.0, f64::max);
            weights[m] = q[m] * top[m];
        }
        let rate: f64 = weights.iter().sum();
        let pos = if rate > 0.0 { Some(&cur + geometric(rate, rng)) } else { None };
        match pos {
            Some(pos) if pos <= next_cap => {
                let m = categorical(&weights).expect("positive rate").sample(rng);
                let u = rng.random::<f64>() * top[m];
                active.retain(|&k| {
                    let p = &participants[k];
                    if u < p.stop[m] {
                        out[k] = Some(if u < p.gamma[m] {
                            RaceOutcome::Accept { position: pos.clone(), symbol: m }
                        } else {
                            RaceOutcome::Dummy { position: pos.clone() }
                        });
                        false
                    } else {
                        true
                    }
                });
                cur = pos;
            }
            _ => {
                cur = next_cap;
                active.retain(|&k| {
                    if participants[k].log2_cap == next_cap_log2 {
                        out[k] = Some(RaceOutcome::Truncated);
                        false
                    } else {
                        true
                    }
                });
            }
        }
    }
    out.into_iter().map(|o| o.expect("every participant resolved")).collect()
}

/// Everything a thinned shared stream keeps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thinned {
    /// The first stream position any acceptor looked at, with its symbol.
    pub first: Option<(BigUint, usize)>,
    /// Per acceptor, the accepted `(position, symbol)` pairs in order.
    pub accepted: Vec<Vec<(BigUint, usize)>>,
}

/// Thins one shared stream for several acceptors at once: acceptor `k`
/// keeps position `j <= caps[k]` when `U_j < accept[k][X_j]`. Jumps between
/// positions where some active acceptor keeps the symbol, as in [`race`].
pub fn thin<R: Rng + ?Sized>(q: &[f64], accept: &[Vec<f64>], caps: &[BigUint], rng: &mut R) -> Thinned {
    let mut accepted: Vec<Vec<(BigUint, usize)>> = alloc::vec![Vec::new(); accept.len()];
    let mut first = None;
    let mut active: Vec<usize> = (0..accept.len()).filter(|&k| !caps[k].is_zero()).collect();
    let mut cur = BigUint::zero();
    let mut weights = alloc::vec![0.0; q.len()];
    let mut top = alloc::vec![0.0; q.len()];
    while !active.is_empty() {
        let next_cap = active.iter().map(|&k| &caps[k]).min().unwrap().clone();
        for m in 0..q.len() {
            top[m] = active.iter().map(|&k| accept[k][m]).fold(0.0, f64::max);
            weights[m] = q[m] * top[m];
        }
        let rate: f64 = weights.iter().sum();
        let pos = if rate > 0.0 { Some(&cur + geometric(rate, rng)) } else { None };
        match pos {
            Some(pos) if pos <= next_cap => {
                let m = categorical(&weights).expect("positive rate").sample(rng);
                let u = rng.random::<f64>() * top[m];
                for &k in &active {
                    if u < accept[k][m] {
                        accepted[k].push((pos.clone(), m));
                    }
                }
                if first.is_none() {
                    first = Some((pos.clone(), m));
                }
                cur = pos;
            }
            _ => {
                active.retain(|&k| caps[k] != next_cap);
                cur = next_cap;
            }
        }
    }
    Thinned { first, accepted }
}

/// Number of Bernoulli(`rate`) trials up to and including the first success.
pub fn geometric<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> BigUint {
    if rate >= 1.0 {
        return BigUint::one();
    }
    let v = 1.0 - rng.random::<f64>();
    let g = math::ln(v) / math::ln_1p(-rate);
    const EXACT: f64 = 9_007_199_254_740_992.0; // 2^53
    if g < EXACT {
        return BigUint::from((math::ceil(g) as u64).max(1));
    }
    // Above 2^53 the double only fixes the leading bits; below one ulp the
    // geometric law is uniform to within a relative error of `rate * ulp`.
    let high = BigUint::from_f64(math::floor(g)).expect("finite");
    let (_, e) = libm::frexp(g);
    let low_bits = (e - 53).max(0) as u64;
    high + random_bits(low_bits, rng)
}

fn random_bits<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    if bits == 0 {
        return BigUint::zero();
    }
    let words = bits.div_ceil(32) as usize;
    let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
    let spare = (words as u64) * 32 - bits;
    if spare > 0 {
        let last = digits.last_mut().unwrap();
        *last >>= spare;
    }
    BigUint::from_slice(&digits)
}
