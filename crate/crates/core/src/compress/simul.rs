//! Simultaneous-message compression.
//!
//! Each party's message is replaced by a uniformly random element of a
//! short subsequence of one shared sample from the message marginal. The
//! compressed message is a position in that sample, so it costs
//! `ceil(log2 t)` bits; the resulting protocol is stored with the original
//! message alphabets and the empirical laws of the subsequences.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{FromPrimitive, One};

use crate::math;
use crate::prob::{relative_entropy_of, FiniteDist};
use crate::protocol::{FunctionSpec, Party, SimulProtocol};
use crate::rng::derive_stream;
use crate::sampler::race::thin;
use crate::sampler::MAX_EXPONENT;
use crate::substate::decompose;
use crate::{Error, Result};

/// Default number of fresh samples [`sample_support`] may draw.
pub const DEFAULT_RETRIES: usize = 32;

/// Good-set threshold slack.
const GOOD_TOL: f64 = 1e-12;

/// Output of [`sample_support`].
#[derive(Clone, Debug, PartialEq)]
pub struct SupportSample {
    /// Per-distribution prefix length `t_i`.
    pub t: Vec<BigUint>,
    /// `max_i t_i`, the length of the shared sample.
    pub t_max: BigUint,
    /// Per-distribution rejection exponent `(a_i + 1)/eps - log2(1 - eps)`.
    pub exponents: Vec<f64>,
    /// Per-distribution `(position, symbol)` subsequence.
    pub subsequences: Vec<Vec<(BigUint, usize)>>,
    /// An element of the shared sample (its first kept position).
    pub first: (BigUint, usize),
    /// `max_ij |mean_l s_ij(y^i_l) - p_ij|`.
    pub deviation: f64,
    pub attempts: usize,
}

impl SupportSample {
    /// Empirical law of subsequence `i` over the symbols.
    pub fn empirical_law(&self, i: usize, symbols: usize) -> Vec<f64> {
        let mut law = vec![0.0; symbols];
        let seq = &self.subsequences[i];
        for (_, m) in seq {
            law[*m] += 1.0;
        }
        law.iter_mut().for_each(|v| *v /= seq.len() as f64);
        law
    }
}

/// `ceil(8 2^((a+1)/eps) log2(2N) / ((1 - eps) eps^2))`.
pub fn support_length(a: f64, n: usize, eps: f64) -> Result<BigUint> {
    let t = 8.0 * math::exp2((a + 1.0) / eps) * math::log2(2.0 * n as f64) / ((1.0 - eps) * eps * eps);
    if !t.is_finite() {
        return Err(Error::ResourceCap(format!("sample length overflows at exponent {}", (a + 1.0) / eps)));
    }
    Ok(BigUint::from_f64(math::ceil(t)).expect("finite"))
}

/// Bits needed to name one of `t` positions.
pub fn index_bits(t: &BigUint) -> u64 {
    if t <= &BigUint::one() { 0 } else { (t - 1u8).bits() }
}

/// Draws a sample from `q` and subsequences for each `ps[i]` such that the
/// mean of `s(i, j, .)` over subsequence `i` is within `2 eps` of its mean
/// under `ps[i]`, for every `i` and every `j < n_j`. Retries with fresh
/// derived streams up to `max_attempts` times.
pub fn sample_support(
    q: &FiniteDist,
    ps: &[FiniteDist],
    n_j: usize,
    s: impl Fn(usize, usize, usize) -> f64,
    eps: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<SupportSample> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if ps.is_empty() || n_j == 0 {
        return Err(Error::Parameter("need at least one distribution and one test index".into()));
    }
    let k = q.len();
    let n = ps.len().max(n_j);
    let mut t = Vec::with_capacity(ps.len());
    let mut exponents = Vec::with_capacity(ps.len());
    let mut accept = Vec::with_capacity(ps.len());
    for p in ps {
        let d = decompose(p, q, 1.0 / eps).map_err(|e| match e {
            Error::SubstateUndefined => Error::InfiniteDivergence("a distribution escapes the reference".into()),
            e => e,
        })?;
        let exponent = (d.a + 1.0) / eps - math::log2(1.0 - eps);
        if exponent > MAX_EXPONENT {
            return Err(Error::ResourceCap(format!("rejection exponent {exponent} exceeds {MAX_EXPONENT}")));
        }
        t.push(support_length(d.a, n, eps)?);
        exponents.push(exponent);
        accept.push(
            (0..k)
                .map(|m| if q.prob(m) > 0.0 { (d.alpha * d.p_tilde.prob(m) / q.prob(m)).min(1.0) } else { 0.0 })
                .collect::<Vec<f64>>(),
        );
    }
    let t_max = t.iter().max().unwrap().clone();
    let target: Vec<Vec<f64>> = ps
        .iter()
        .enumerate()
        .map(|(i, p)| (0..n_j).map(|j| (0..k).map(|m| p.prob(m) * s(i, j, m)).sum()).collect())
        .collect();

    let mut best = f64::INFINITY;
    for attempt in 0..max_attempts {
        let mut rng = derive_stream(seed, &[attempt as u64]);
        let th = thin(q.probs(), &accept, &t, &mut rng);
        let mut deviation: f64 = 0.0;
        for (i, seq) in th.accepted.iter().enumerate() {
            if seq.is_empty() {
                deviation = f64::INFINITY;
                break;
            }
            for j in 0..n_j {
                let mean = seq.iter().map(|&(_, m)| s(i, j, m)).sum::<f64>() / seq.len() as f64;
                deviation = deviation.max(math::abs(mean - target[i][j]));
            }
        }
        best = best.min(deviation);
        if deviation <= 2.0 * eps {
            return Ok(SupportSample {
                t,
                t_max,
                exponents,
                subsequences: th.accepted,
                first: th.first.expect("a non-empty subsequence has a first position"),
                deviation,
                attempts: attempt + 1,
            });
        }
    }
    Err(Error::RetryBudgetExhausted { attempts: max_attempts, best_deviation: best })
}

/// One party's side of [`SimulCompressionReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct PartyCompression {
    /// `I(input : message)` under the uniform input law.
    pub information: f64,
    /// Per input, `S(P_u || P)`.
    pub divergences: Vec<f64>,
    /// Inputs with `S(P_u || P) <= 3 * information`.
    pub good: Vec<usize>,
    pub bits: u64,
    /// `(3a + 1)/eps + log2(n + 1) + log2(1/(eps^2 (1 - eps))) + 4`.
    pub bit_bound: f64,
    pub sample: SupportSample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulCompressionReport {
    pub new_protocol: SimulProtocol,
    pub alice: PartyCompression,
    pub bob: PartyCompression,
    /// Input length in bits, `ceil(log2 max(|X|, |Y|))`.
    pub n: u32,
    pub eps: f64,
    /// Worst-case error of the original protocol.
    pub delta: f64,
    /// Largest exact error of the new protocol on `good_A x good_B`.
    pub error_on_good: f64,
    /// Largest pointwise error increase on `good_A x good_B`.
    pub max_error_increase: f64,
}

impl SimulCompressionReport {
    pub fn good_a(&self) -> &[usize] {
        &self.alice.good
    }

    pub fn good_b(&self) -> &[usize] {
        &self.bob.good
    }

    pub fn alice_bits(&self) -> u64 {
        self.alice.bits
    }

    pub fn bob_bits(&self) -> u64 {
        self.bob.bits
    }
}

/// `(3a + 1)/eps + log2(n + 1) + log2(1/(eps^2 (1 - eps))) + 4`.
pub fn simul_bit_bound(a: f64, n: u32, eps: f64) -> f64 {
    (3.0 * a + 1.0) / eps + math::log2(n as f64 + 1.0) + math::log2(1.0 / (eps * eps * (1.0 - eps))) + 4.0
}

fn compress_party(
    pi: &SimulProtocol,
    f: &FunctionSpec,
    party: Party,
    n: u32,
    eps: f64,
    seed: u64,
) -> Result<(SimulProtocol, PartyCompression)> {
    let (inputs, others, msgs) = match party {
        Party::Alice => (pi.x_alphabet().len(), pi.y_alphabet().len(), pi.alice_messages().len()),
        Party::Bob => (pi.y_alphabet().len(), pi.x_alphabet().len(), pi.bob_messages().len()),
    };
    let law = |u: usize| match party {
        Party::Alice => pi.alice_law(u),
        Party::Bob => pi.bob_law(u),
    };
    let mut marginal = vec![0.0; msgs];
    for u in 0..inputs {
        for (m, p) in law(u).iter().enumerate() {
            marginal[m] += p / inputs as f64;
        }
    }
    let divergences: Vec<f64> = (0..inputs).map(|u| relative_entropy_of(law(u), &marginal)).collect();
    let information = pi.information(party, &vec![1.0 / inputs as f64; inputs]);
    let good: Vec<usize> = (0..inputs).filter(|&u| divergences[u] <= 3.0 * information + GOOD_TOL).collect();

    let q = FiniteDist::from_probs(marginal)?;
    let ps = good.iter().map(|&u| FiniteDist::from_probs(law(u).to_vec())).collect::<Result<Vec<_>>>()?;
    let success = |i: usize, j: usize, m: usize| match party {
        Party::Alice => pi.success_given_alice(f, good[i], j, m),
        Party::Bob => pi.success_given_bob(f, j, good[i], m),
    };
    let sample = sample_support(&q, &ps, others, success, eps, seed, DEFAULT_RETRIES)?;

    let mut table = Vec::with_capacity(inputs * msgs);
    let mut slot = 0;
    for u in 0..inputs {
        if slot < good.len() && good[slot] == u {
            table.extend(sample.empirical_law(slot, msgs));
            slot += 1;
        } else {
            let mut point = vec![0.0; msgs];
            point[sample.first.1] = 1.0;
            table.extend(point);
        }
    }
    let next = pi.with_laws(party, table)?;
    let bits = index_bits(&sample.t_max);
    let bit_bound = simul_bit_bound(information, n, eps);
    Ok((next, PartyCompression { information, divergences, good, bits, bit_bound, sample }))
}

/// Compresses Alice's message, then Bob's against the intermediate
/// protocol, under the uniform input distribution.
pub fn compress_simultaneous(pi: &SimulProtocol, f: &FunctionSpec, eps: f64, seed: u64) -> Result<SimulCompressionReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if f.x_alphabet() != pi.x_alphabet() || f.y_alphabet() != pi.y_alphabet() || f.z_alphabet() != pi.z_alphabet() {
        return Err(Error::RangeMismatch("function and protocol ranges differ".into()));
    }
    let (nx, ny) = (pi.x_alphabet().len(), pi.y_alphabet().len());
    let n = math::ceil(math::log2(nx.max(ny) as f64)) as u32;
    let delta = (0..nx).flat_map(|x| (0..ny).map(move |y| (x, y))).map(|(x, y)| pi.error_at(f, x, y)).fold(0.0, f64::max);

    let (mid, alice) = compress_party(pi, f, Party::Alice, n, eps, crate::rng::derive_seed(seed, &[0]))?;
    let (new_protocol, bob) = compress_party(&mid, f, Party::Bob, n, eps, crate::rng::derive_seed(seed, &[1]))?;

    let mut error_on_good: f64 = 0.0;
    let mut max_error_increase = f64::NEG_INFINITY;
    for &x in &alice.good {
        for &y in &bob.good {
            let e = new_protocol.error_at(f, x, y);
            error_on_good = error_on_good.max(e);
            max_error_increase = max_error_increase.max(e - pi.error_at(f, x, y));
        }
    }
    let report = SimulCompressionReport { new_protocol, alice, bob, n, eps, delta, error_on_good, max_error_increase };
    check_report(&report)?;
    Ok(report)
}

fn check_report(r: &SimulCompressionReport) -> Result<()> {
    let (nx, ny) = (r.new_protocol.x_alphabet().len(), r.new_protocol.y_alphabet().len());
    for (side, total) in [(&r.alice, nx), (&r.bob, ny)] {
        if 3 * side.good.len() < 2 * total {
            return Err(Error::InvariantViolated(format!("good set {} of {total} is below 2/3", side.good.len())));
        }
        if side.bits as f64 > side.bit_bound {
            return Err(Error::InvariantViolated(format!("{} bits exceed {}", side.bits, side.bit_bound)));
        }
    }
    if r.max_error_increase > 4.0 * r.eps + 1e-9 {
        return Err(Error::InvariantViolated(format!("error grew by {}", r.max_error_increase)));
    }
    Ok(())
}
