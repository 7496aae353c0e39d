//! Round-by-round compression of private-coin protocols.
//!
//! Rounds are compressed from the last to the first. In a compressed round
//! the owner reads a public stream of i.i.d. draws from `M^{p}`, the law of
//! the round's message given the prefix `p`, and runs a Las-Vegas sampler
//! for its own message law `P_{u,p}` at `r = k/eps`. It sends the stopping
//! index (or the dummy `0`) with the code in [`super::code`]. A dummy ends
//! the protocol, and ending counts as an error.
//!
//! The public streams of every round and prefix form one coin realization.
//! Fixing a realization makes the protocol deterministic, so its error can
//! be evaluated exactly. [`compress_multiround`] tries a budget of
//! realizations, truncates transcripts at the Markov bit cap, and keeps the
//! best.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;

use super::code::{codeword_len, dummy_codeword, prefix_free_encode, Codeword};
use crate::math;
use crate::prob::{relative_entropy_of, Alphabet, FiniteDist, JointDist};
use crate::protocol::{FunctionSpec, Party, ProtocolTree, Round, DEFAULT_MAX_CELLS};
use crate::rng::{derive_seed, derive_stream};
use crate::sampler::race::{race, Participant, RaceOutcome};
use crate::sampler::{LasVegasSampler, StreamCap};
use crate::{Error, Result};

pub const DEFAULT_COIN_BUDGET: usize = 64;

/// One round after compression.
#[derive(Clone, Debug)]
pub struct CompressedRound {
    /// 0-based round index.
    pub round: usize,
    pub owner: Party,
    /// Substate parameter `k / eps`.
    pub r: f64,
    /// `Pr[prefix]` under the original protocol and `mu`.
    pub prefix_prob: Vec<f64>,
    /// Stream law per prefix.
    pub reference: Vec<FiniteDist>,
    /// `[prefix][owner input]`.
    pub samplers: Vec<Vec<LasVegasSampler>>,
    /// `S(P_{u,p} || M^{p})`, `[prefix][owner input]`; infinite only where
    /// the input has zero weight at the prefix.
    pub divergence: Vec<Vec<f64>>,
    /// `Pr[owner input u, prefix p]` under `mu`.
    pub weight: Vec<Vec<f64>>,
    pub log2_caps: Vec<Vec<u32>>,
    /// `a_i = E S(M^{xyp} || M^{p})`.
    pub info: f64,
}

impl CompressedRound {
    /// Sub-probability law of the message actually sent on `(u, p)`,
    /// averaged over the stream: `P` on the good set, scaled by the chance
    /// of stopping before the cap.
    pub fn sent_law(&self, u: usize, p: usize) -> Vec<f64> {
        let s = &self.samplers[p][u];
        let keep = 1.0 - s.tail_beyond(self.log2_caps[p][u]);
        (0..s.p().len()).map(|m| if s.good()[m] { s.p().prob(m) * keep } else { 0.0 }).collect()
    }

    pub fn abort_probability(&self, u: usize, p: usize) -> f64 {
        self.samplers[p][u].capped_abort_probability(self.log2_caps[p][u])
    }

    /// Expected codeword length on `(u, p)`, averaged over the stream.
    pub fn expected_bits(&self, u: usize, p: usize) -> f64 {
        expected_codeword_bits(&self.samplers[p][u], self.log2_caps[p][u])
    }
}

/// `E[len]` of the sent codeword: the stopping index is split into dyadic
/// blocks `[2^b, 2^(b+1))`, on which accepted indices cost `2b + 2` bits;
/// a dummy or a run past the cap costs 1 bit.
pub fn expected_codeword_bits(s: &LasVegasSampler, log2_cap: u32) -> f64 {
    let accept = 1.0 - s.eps();
    let mut total = 0.0;
    for b in 0..=log2_cap {
        let lo = math::exp2(b as f64);
        let hi = if b == log2_cap { lo + 1.0 } else { 2.0 * lo };
        let mass = s.pr_r_at_least(lo) - s.pr_r_at_least(hi);
        total += mass * (accept * (2 * b + 2) as f64 + (1.0 - accept));
    }
    total + s.tail_beyond(log2_cap)
}

/// Compression state: rounds `stage..k` are compressed.
#[derive(Clone, Debug)]
pub struct RoundCompressionState {
    k: usize,
    eps: f64,
    cap: StreamCap,
    stage: usize,
    rounds: Vec<Option<CompressedRound>>,
}

impl RoundCompressionState {
    pub fn new(pi: &ProtocolTree, eps: f64, cap: StreamCap) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Parameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        let k = pi.round_count();
        Ok(Self { k, eps, cap, stage: k, rounds: vec![None; k] })
    }

    /// First compressed round (0-based); `k` before any pass.
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn round(&self, i: usize) -> Option<&CompressedRound> {
        self.rounds[i].as_ref()
    }

    /// `a_i` for the compressed rounds.
    pub fn per_round_info(&self) -> Vec<Option<f64>> {
        self.rounds.iter().map(|r| r.as_ref().map(|r| r.info)).collect()
    }

    /// Compresses round `i`, which must be the last uncompressed round.
    pub fn compress_round(&self, pi: &ProtocolTree, mu: &JointDist, i: usize) -> Result<Self> {
        if pi.round_count() != self.k || i + 1 != self.stage {
            return Err(Error::Parameter(format!("round {i} is not next; stage is {}", self.stage)));
        }
        let round = &pi.rounds()[i];
        let owner = round.owner;
        let (nx, ny) = (pi.x_alphabet().len(), pi.y_alphabet().len());
        let nu = pi.input_count(owner);
        let np = pi.prefix_count(i);
        let nm = round.alphabet.len();
        let r = self.k as f64 / self.eps;

        let mut weight = vec![vec![0.0; nu]; np];
        for x in 0..nx {
            for y in 0..ny {
                let w = mu.prob(&[x, y]);
                if w == 0.0 {
                    continue;
                }
                let u = pi.owner_input(i, x, y);
                for (p, pp) in prefix_probs(pi, x, y, i).into_iter().enumerate() {
                    weight[p][u] += w * pp;
                }
            }
        }

        let mut out = CompressedRound {
            round: i,
            owner,
            r,
            prefix_prob: weight.iter().map(|w| w.iter().sum()).collect(),
            reference: Vec::with_capacity(np),
            samplers: Vec::with_capacity(np),
            divergence: Vec::with_capacity(np),
            weight: Vec::new(),
            log2_caps: Vec::with_capacity(np),
            info: 0.0,
        };
        for p in 0..np {
            let total = out.prefix_prob[p];
            let mut q = vec![0.0; nm];
            for u in 0..nu {
                let c = if total > 0.0 { weight[p][u] / total } else { 1.0 / nu as f64 };
                for (m, v) in pi.policy(i, u, p).iter().enumerate() {
                    q[m] += c * v;
                }
            }
            let q = FiniteDist::new(round.alphabet.clone(), normalize(q))?;
            let div: Vec<f64> = (0..nu).map(|u| relative_entropy_of(pi.policy(i, u, p), q.probs())).collect();
            let exps: Vec<f64> = div.iter().map(|s| r * (s + 1.0)).collect();
            // Inputs never seen at this prefix may escape the stream law;
            // they get the largest finite exponent and lose their bad mass.
            let fallback = exps.iter().copied().filter(|e| e.is_finite()).fold(r, f64::max);
            let mut samplers = Vec::with_capacity(nu);
            let mut caps = Vec::with_capacity(nu);
            for u in 0..nu {
                let e = if exps[u].is_finite() { exps[u] } else { fallback };
                let pu = FiniteDist::new(round.alphabet.clone(), pi.policy(i, u, p).to_vec())?;
                samplers.push(LasVegasSampler::with_exponent(&pu, &q, e)?);
                caps.push(self.cap.log2_for(e));
                if weight[p][u] > 0.0 {
                    out.info += weight[p][u] * div[u];
                }
            }
            out.reference.push(q);
            out.samplers.push(samplers);
            out.divergence.push(div);
            out.log2_caps.push(caps);
        }
        out.weight = weight;

        let mut next = self.clone();
        next.rounds[i] = Some(out);
        next.stage = i;
        Ok(next)
    }

    /// Per-round sub-probability law of the message sent on `(i, u, p)`.
    fn sent_law(&self, pi: &ProtocolTree, i: usize, u: usize, p: usize) -> Vec<f64> {
        match &self.rounds[i] {
            Some(c) => c.sent_law(u, p),
            None => pi.policy(i, u, p).to_vec(),
        }
    }

    /// Stream-averaged error on each input (row-major), with aborts
    /// counted as errors.
    pub fn expected_error_per_input(&self, pi: &ProtocolTree, f: &FunctionSpec) -> Vec<f64> {
        let (nx, ny) = (pi.x_alphabet().len(), pi.y_alphabet().len());
        let mut out = Vec::with_capacity(nx * ny);
        for x in 0..nx {
            for y in 0..ny {
                let layers = self.reach(pi, x, y);
                let last = layers.last().unwrap();
                let ok: f64 = last
                    .iter()
                    .enumerate()
                    .filter(|&(t, _)| pi.output(t).is_some_and(|z| f.accepts(x, y, z)))
                    .map(|(_, p)| p)
                    .sum();
                out.push((1.0 - ok).max(0.0));
            }
        }
        out
    }

    pub fn expected_error(&self, pi: &ProtocolTree, f: &FunctionSpec, mu: &JointDist) -> f64 {
        self.expected_error_per_input(pi, f).iter().zip(mu.probs()).map(|(e, w)| e * w).sum()
    }

    /// Stream- and input-averaged codeword length of every compressed round.
    pub fn expected_bits(&self, pi: &ProtocolTree, mu: &JointDist) -> Vec<Option<f64>> {
        let (nx, ny) = (pi.x_alphabet().len(), pi.y_alphabet().len());
        let mut out: Vec<Option<f64>> = self.rounds.iter().map(|r| r.as_ref().map(|_| 0.0)).collect();
        for x in 0..nx {
            for y in 0..ny {
                let w = mu.prob(&[x, y]);
                if w == 0.0 {
                    continue;
                }
                let layers = self.reach(pi, x, y);
                for (i, r) in self.rounds.iter().enumerate() {
                    if let Some(c) = r {
                        let u = pi.owner_input(i, x, y);
                        let e: f64 = layers[i].iter().enumerate().map(|(p, reach)| reach * c.expected_bits(u, p)).sum();
                        *out[i].as_mut().unwrap() += w * e;
                    }
                }
            }
        }
        out
    }

    /// Stream-averaged probability of reaching each prefix without an
    /// abort, for prefix lengths `0..=k`.
    fn reach(&self, pi: &ProtocolTree, x: usize, y: usize) -> Vec<Vec<f64>> {
        let mut layers = vec![vec![1.0]];
        for i in 0..self.k {
            let n = pi.rounds()[i].alphabet.len();
            let u = pi.owner_input(i, x, y);
            let cur = layers.last().unwrap();
            let mut next = vec![0.0; cur.len() * n];
            for (p, &w) in cur.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (m, v) in self.sent_law(pi, i, u, p).into_iter().enumerate() {
                    next[p * n + m] = w * v;
                }
            }
            layers.push(next);
        }
        layers
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// `Pr[first i messages = p | x, y]` under the original protocol.
fn prefix_probs(pi: &ProtocolTree, x: usize, y: usize, i: usize) -> Vec<f64> {
    let tail: usize = pi.rounds()[i..].iter().map(|r| r.alphabet.len()).product();
    pi.transcript_probs(x, y).chunks(tail).map(|c| c.iter().sum()).collect()
}

/// Why a run of the compressed protocol stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbortReason {
    /// The sampler stopped with the dummy symbol.
    Dummy,
    /// The stream cap was reached.
    Truncated,
    /// The codeword would have passed the bit cap.
    Overflow,
}

/// The run of the deterministic protocol on one input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    /// Original transcript on completion.
    pub transcript: Option<usize>,
    /// Round and reason of an early stop.
    pub abort: Option<(usize, AbortReason)>,
    pub bits: u64,
}

/// One coin realization: race results per `[round][prefix][owner input]`.
#[derive(Clone, Debug)]
pub struct CoinRealization {
    pub index: usize,
    pub seed: u64,
    outcomes: Vec<Vec<Vec<RaceOutcome>>>,
}

impl CoinRealization {
    /// Runs every race of the realization keyed by `seed`.
    pub fn draw(state: &RoundCompressionState, index: usize, seed: u64) -> Result<Self> {
        let mut outcomes = Vec::with_capacity(state.k);
        for (i, r) in state.rounds.iter().enumerate() {
            let c = r.as_ref().ok_or_else(|| Error::Parameter(format!("round {i} is not compressed")))?;
            let per_prefix = c
                .samplers
                .iter()
                .enumerate()
                .map(|(p, ss)| {
                    let parts: Vec<Participant> =
                        ss.iter().enumerate().map(|(u, s)| Participant::new(s, c.log2_caps[p][u])).collect();
                    race(c.reference[p].probs(), &parts, &mut derive_stream(seed, &[i as u64, p as u64]))
                })
                .collect();
            outcomes.push(per_prefix);
        }
        Ok(Self { index, seed, outcomes })
    }

    pub fn outcome(&self, i: usize, p: usize, u: usize) -> &RaceOutcome {
        &self.outcomes[i][p][u]
    }

    /// Runs input `(x, y)` with transcripts cut at `bit_cap` bits.
    pub fn run(&self, pi: &ProtocolTree, x: usize, y: usize, bit_cap: u64) -> Run {
        let k = pi.round_count();
        let mut p = 0;
        let mut bits = 0u64;
        for i in 0..k {
            let u = pi.owner_input(i, x, y);
            let reserve = u64::from(i + 1 < k);
            let abort = match &self.outcomes[i][p][u] {
                RaceOutcome::Accept { position, symbol } => {
                    let len = codeword_len(position);
                    if bits + len + reserve <= bit_cap {
                        bits += len;
                        p = p * pi.rounds()[i].alphabet.len() + symbol;
                        continue;
                    }
                    AbortReason::Overflow
                }
                RaceOutcome::Dummy { .. } => AbortReason::Dummy,
                RaceOutcome::Truncated => AbortReason::Truncated,
            };
            return Run { transcript: None, abort: Some((i, abort)), bits: bits + 1 };
        }
        Run { transcript: Some(p), abort: None, bits }
    }
}

/// Score of one coin realization.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinOutcome {
    pub index: usize,
    pub seed: u64,
    /// Exact distributional error, aborts counted as errors.
    pub error: f64,
    /// Longest transcript over all inputs, in bits.
    pub comm_bits: u64,
    /// `mu`-mass of runs stopped by each [`AbortReason`], in declaration order.
    pub abort_mass: [f64; 3],
}

fn score(pi: &ProtocolTree, f: &FunctionSpec, mu: &JointDist, coin: &CoinRealization, bit_cap: u64) -> CoinOutcome {
    let (nx, ny) = (pi.x_alphabet().len(), pi.y_alphabet().len());
    let mut error = 0.0;
    let mut comm_bits = 0;
    let mut abort_mass = [0.0; 3];
    for x in 0..nx {
        for y in 0..ny {
            let run = coin.run(pi, x, y, bit_cap);
            comm_bits = comm_bits.max(run.bits);
            let w = mu.prob(&[x, y]);
            match (run.transcript, run.abort) {
                (Some(t), _) => {
                    if !pi.output(t).is_some_and(|z| f.accepts(x, y, z)) {
                        error += w;
                    }
                }
                (None, Some((_, reason))) => {
                    error += w;
                    abort_mass[reason as usize] += w;
                }
                (None, None) => unreachable!("a run either completes or aborts"),
            }
        }
    }
    CoinOutcome { index: coin.index, seed: coin.seed, error, comm_bits, abort_mass }
}

/// What one slot of the final protocol's message alphabet stands for at a
/// given prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    /// Bits on the wire; empty once the protocol has stopped.
    pub codeword: Codeword,
    /// Stopping index, for an accepted message.
    pub index: Option<BigUint>,
    /// Message of the original protocol, for an accepted message.
    pub message: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundReport {
    /// 1-based round number.
    pub round: usize,
    pub owner: Party,
    /// `a_i`.
    pub info: f64,
    /// Stream- and input-averaged codeword length.
    pub expected_bits: f64,
    /// `2k(a_i + 1)/eps + 2`.
    pub expected_bits_bound: f64,
    /// Largest stream-averaged abort probability over reachable `(u, p)`.
    pub abort_prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiCompressionReport {
    /// Deterministic; message `s` of round `i` at prefix `p` is
    /// `codebook[i][p][s]`.
    pub final_protocol: ProtocolTree,
    pub codebook: Vec<Vec<Vec<Slot>>>,
    pub comm_bits: u64,
    /// `2k(a + 1)/eps^2 + 2k/eps` with `a = I(XY : T)`.
    pub comm_bound: f64,
    /// `floor(comm_bound)`, the truncation point.
    pub bit_cap: u64,
    /// Exact error of the chosen realization, aborts counted as errors.
    pub dist_error: f64,
    /// Distributional error of the input protocol.
    pub delta: f64,
    /// `delta + 2 eps`.
    pub error_target: f64,
    pub eps: f64,
    pub k: usize,
    /// `I(XY : T)` of the input protocol.
    pub information: f64,
    /// `sum_i a_i`.
    pub info_ledger: f64,
    /// Stream-averaged error before truncation.
    pub expected_error: f64,
    pub per_round: Vec<RoundReport>,
    pub coin_choice: CoinOutcome,
    /// Every realization tried, in order.
    pub coins: Vec<CoinOutcome>,
    pub seed: u64,
}

/// Compresses every round and derandomizes.
#[allow(clippy::too_many_arguments)]
pub fn compress_multiround(
    pi: &ProtocolTree,
    f: &FunctionSpec,
    mu: &JointDist,
    eps: f64,
    cap: StreamCap,
    coin_budget: usize,
    seed: u64,
) -> Result<MultiCompressionReport> {
    if coin_budget == 0 {
        return Err(Error::Parameter("coin budget must be positive".into()));
    }
    let k = pi.round_count();
    let delta = pi.evaluate_error(f, mu)?.distributional;
    let information = pi.information_cost(mu)?;
    let mut state = RoundCompressionState::new(pi, eps, cap)?;
    for i in (0..k).rev() {
        state = state.compress_round(pi, mu, i)?;
    }
    let info_ledger: f64 = state.per_round_info().iter().map(|a| a.unwrap()).sum();
    if math::abs(info_ledger - information) > 1e-9 {
        return Err(Error::InvariantViolated(format!("sum of a_i {info_ledger} != I(XY:T) {information}")));
    }
    let kf = k as f64;
    let comm_bound = 2.0 * kf * (information + 1.0) / (eps * eps) + 2.0 * kf / eps;
    let bit_cap = math::floor(comm_bound) as u64;

    let expected = state.expected_bits(pi, mu);
    let per_round = (0..k)
        .map(|i| {
            let c = state.round(i).unwrap();
            let abort_prob = (0..c.samplers.len())
                .flat_map(|p| (0..c.samplers[p].len()).map(move |u| (p, u)))
                .filter(|&(p, u)| c.weight[p][u] > 0.0)
                .map(|(p, u)| c.abort_probability(u, p))
                .fold(0.0, f64::max);
            RoundReport {
                round: i + 1,
                owner: c.owner,
                info: c.info,
                expected_bits: expected[i].unwrap(),
                expected_bits_bound: 2.0 * kf * (c.info + 1.0) / eps + 2.0,
                abort_prob,
            }
        })
        .collect();

    let mut coins = Vec::with_capacity(coin_budget);
    let mut best: Option<CoinRealization> = None;
    let mut best_score: Option<CoinOutcome> = None;
    for c in 0..coin_budget {
        let coin = CoinRealization::draw(&state, c, derive_seed(seed, &[c as u64]))?;
        let s = score(pi, f, mu, &coin, bit_cap);
        let better = best_score.as_ref().is_none_or(|b| (s.error, s.comm_bits) < (b.error, b.comm_bits));
        coins.push(s.clone());
        if better {
            best = Some(coin);
            best_score = Some(s);
        }
    }
    let (coin, choice) = (best.unwrap(), best_score.unwrap());
    let (final_protocol, codebook) = extract(pi, &coin, bit_cap)?;
    let report = MultiCompressionReport {
        final_protocol,
        codebook,
        comm_bits: choice.comm_bits,
        comm_bound,
        bit_cap,
        dist_error: choice.error,
        delta,
        error_target: delta + 2.0 * eps,
        eps,
        k,
        information,
        info_ledger,
        expected_error: state.expected_error(pi, f, mu),
        per_round,
        coin_choice: choice,
        coins,
        seed,
    };
    if report.dist_error > report.error_target + 1e-9 {
        return Err(Error::CoinBudgetExhausted {
            best_error: report.dist_error,
            target: report.error_target,
            report: Box::new(report),
        });
    }
    Ok(report)
}

enum Node {
    Live { orig: usize, bits: u64 },
    Stopped,
    Dead,
}

/// Builds the deterministic protocol of one realization. Round `i`'s
/// alphabet has one slot per distinct action at the busiest prefix.
fn extract(pi: &ProtocolTree, coin: &CoinRealization, bit_cap: u64) -> Result<(ProtocolTree, Vec<Vec<Vec<Slot>>>)> {
    let k = pi.round_count();
    let mut nodes = vec![Node::Live { orig: 0, bits: 0 }];
    let mut rounds = Vec::with_capacity(k);
    let mut codebook = Vec::with_capacity(k);
    let mut cells = 0usize;
    let silent = Slot { codeword: Codeword::default(), index: None, message: None };
    let dummy = Slot { codeword: dummy_codeword(), index: None, message: None };
    for i in 0..k {
        let owner = pi.rounds()[i].owner;
        let nu = pi.input_count(owner);
        let n_orig = pi.rounds()[i].alphabet.len();
        let reserve = u64::from(i + 1 < k);
        // Per node: its slots and each input's choice.
        let mut slots: Vec<Vec<Slot>> = Vec::with_capacity(nodes.len());
        let mut choice: Vec<Vec<usize>> = Vec::with_capacity(nodes.len());
        for node in &nodes {
            match node {
                Node::Live { orig, bits } => {
                    let mut here: Vec<Slot> = Vec::new();
                    let mut pick = Vec::with_capacity(nu);
                    for u in 0..nu {
                        let slot = match coin.outcome(i, *orig, u) {
                            RaceOutcome::Accept { position, symbol }
                                if bits + codeword_len(position) + reserve <= bit_cap =>
                            {
                                Slot {
                                    codeword: prefix_free_encode(position)?,
                                    index: Some(position.clone()),
                                    message: Some(*symbol),
                                }
                            }
                            _ => dummy.clone(),
                        };
                        let at = here.iter().position(|s| *s == slot).unwrap_or_else(|| {
                            here.push(slot);
                            here.len() - 1
                        });
                        pick.push(at);
                    }
                    slots.push(here);
                    choice.push(pick);
                }
                Node::Stopped | Node::Dead => {
                    slots.push(vec![silent.clone()]);
                    choice.push(vec![0; nu]);
                }
            }
        }
        let width = slots.iter().map(Vec::len).max().unwrap();
        cells = cells.saturating_add(nu.saturating_mul(nodes.len()).saturating_mul(width));
        if cells > DEFAULT_MAX_CELLS {
            return Err(Error::ResourceCap(format!("final protocol exceeds {DEFAULT_MAX_CELLS} cells")));
        }
        let mut policy = vec![0.0; nu * nodes.len() * width];
        for u in 0..nu {
            for p in 0..nodes.len() {
                policy[(u * nodes.len() + p) * width + choice[p][u]] = 1.0;
            }
        }
        rounds.push(Round::new(owner, Alphabet::indexed(width)?, policy));

        let mut next = Vec::with_capacity(nodes.len() * width);
        for (p, node) in nodes.iter().enumerate() {
            for s in 0..width {
                next.push(match (node, slots[p].get(s)) {
                    (Node::Live { orig, bits }, Some(slot)) => match slot.message {
                        Some(m) => Node::Live { orig: orig * n_orig + m, bits: bits + slot.codeword.len() as u64 },
                        None => Node::Stopped,
                    },
                    (Node::Stopped, Some(_)) => Node::Stopped,
                    _ => Node::Dead,
                });
            }
        }
        for row in slots.iter_mut() {
            row.resize(width, silent.clone());
        }
        codebook.push(slots);
        nodes = next;
    }
    let output = nodes
        .iter()
        .map(|n| match n {
            Node::Live { orig, .. } => pi.output(*orig),
            Node::Stopped => Some(0),
            Node::Dead => None,
        })
        .collect();
    let tree = ProtocolTree::new(
        pi.x_alphabet().clone(),
        pi.y_alphabet().clone(),
        pi.z_alphabet().clone(),
        rounds,
        output,
    )?;
    Ok((tree, codebook))
}

/// Bits sent on transcript `t` of an extracted protocol.
pub fn transcript_bits(report: &MultiCompressionReport, t: usize) -> u64 {
    let pi = &report.final_protocol;
    let k = pi.round_count();
    let msgs = pi.decode_prefix(t, k);
    let mut p = 0;
    let mut bits = 0;
    for (i, &s) in msgs.iter().enumerate() {
        bits += report.codebook[i][p][s].codeword.len() as u64;
        p = p * pi.rounds()[i].alphabet.len() + s;
    }
    bits
}

/// `comm_bits` recomputed from the extracted protocol's reachable
/// transcripts.
pub fn extracted_comm_bits(report: &MultiCompressionReport) -> u64 {
    let reach = report.final_protocol.reachable();
    (0..reach.len()).filter(|&t| reach[t]).map(|t| transcript_bits(report, t)).max().unwrap_or(0)
}

