//! Two-party private-coin protocols as explicit finite trees.
//!
//! Round `i` belongs to one party, whose message law depends only on that
//! party's input and the transcript prefix. Prefixes and full transcripts
//! are indexed in mixed radix over the round alphabets, first round most
//! significant. The output is a function of the full transcript.

mod function;
mod search;
mod simul;
mod tensor;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::prob::{
    validate_probs, Alphabet, Axis, FiniteDist, JointDist, PartitionedInput, SUM_TOL,
};
use crate::{Error, Result};

pub use function::FunctionSpec;
pub use search::{brute_force_c, SearchLimits};
pub use simul::SimulProtocol;
pub use tensor::tensor_protocol;

/// Default bound on the number of table cells any derived object may hold.
pub const DEFAULT_MAX_CELLS: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Self {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

/// One round: owner, message alphabet, and the message law for every
/// (owner input, prefix) pair, stored flat as
/// `policy[(input * prefixes + prefix) * |alphabet| + message]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub owner: Party,
    pub alphabet: Alphabet,
    policy: Vec<f64>,
}

impl Round {
    pub fn new(owner: Party, alphabet: Alphabet, policy: Vec<f64>) -> Self {
        Self { owner, alphabet, policy }
    }

    /// The raw flat policy table.
    pub fn policy_table(&self) -> &[f64] {
        &self.policy
    }
}

/// Per-input and aggregate error of a protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub worst_case: f64,
    pub distributional: f64,
    /// Row-major over `(x, y)`.
    pub per_input: Vec<f64>,
}

impl ErrorReport {
    pub fn from_per_input(per_input: Vec<f64>, mu: &[f64]) -> Self {
        let worst_case = per_input.iter().copied().fold(0.0, f64::max);
        let distributional = per_input.iter().zip(mu).map(|(e, m)| e * m).sum();
        Self { worst_case, distributional, per_input }
    }
}

/// A `k`-round private-coin protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolTree {
    x: Alphabet,
    y: Alphabet,
    z: Alphabet,
    rounds: Vec<Round>,
    /// Output per transcript; `None` only on unreachable transcripts.
    output: Vec<Option<usize>>,
}

impl ProtocolTree {
    pub fn new(
        x: Alphabet,
        y: Alphabet,
        z: Alphabet,
        rounds: Vec<Round>,
        output: Vec<Option<usize>>,
    ) -> Result<Self> {
        let t = Self { x, y, z, rounds, output };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if self.rounds.is_empty() {
            return Err(Error::MalformedProtocol("protocol has no rounds".into()));
        }
        for (i, r) in self.rounds.iter().enumerate() {
            let inputs = self.input_count(r.owner);
            let want = inputs * self.prefix_count(i) * r.alphabet.len();
            if r.policy.len() != want {
                return Err(Error::MalformedProtocol(format!(
                    "round {i} policy has {} entries, expected {want}",
                    r.policy.len()
                )));
            }
            for u in 0..inputs {
                for p in 0..self.prefix_count(i) {
                    validate_probs(self.policy(i, u, p)).map_err(|e| {
                        Error::MalformedProtocol(format!("round {i}, input {u}, prefix {p}: {e}"))
                    })?;
                }
            }
        }
        if self.output.len() != self.transcript_count() {
            return Err(Error::MalformedProtocol(format!(
                "output table has {} entries, expected {}",
                self.output.len(),
                self.transcript_count()
            )));
        }
        let reach = self.reachable();
        for (t, o) in self.output.iter().enumerate() {
            match o {
                Some(z) if *z >= self.z.len() => {
                    return Err(Error::MalformedProtocol(format!("transcript {t} outputs {z}")))
                }
                None if reach[t] => {
                    return Err(Error::MalformedProtocol(format!(
                        "reachable transcript {} has no output",
                        self.transcript_label(t)
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn z_alphabet(&self) -> &Alphabet {
        &self.z
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn outputs(&self) -> &[Option<usize>] {
        &self.output
    }

    pub fn input_count(&self, party: Party) -> usize {
        match party {
            Party::Alice => self.x.len(),
            Party::Bob => self.y.len(),
        }
    }

    /// Number of distinct prefixes before round `i` (1 for round 0).
    pub fn prefix_count(&self, i: usize) -> usize {
        self.rounds[..i].iter().map(|r| r.alphabet.len()).product()
    }

    pub fn transcript_count(&self) -> usize {
        self.prefix_count(self.rounds.len())
    }

    /// Message law of round `i` for owner input `u` and prefix index `p`.
    pub fn policy(&self, i: usize, u: usize, p: usize) -> &[f64] {
        let r = &self.rounds[i];
        let n = r.alphabet.len();
        let start = (u * self.prefix_count(i) + p) * n;
        &r.policy[start..start + n]
    }

    /// The owner's input in round `i` given the input pair.
    pub fn owner_input(&self, i: usize, x: usize, y: usize) -> usize {
        match self.rounds[i].owner {
            Party::Alice => x,
            Party::Bob => y,
        }
    }

    /// Messages of transcript (or prefix of length `len`) index `t`.
    pub fn decode_prefix(&self, mut t: usize, len: usize) -> Vec<usize> {
        let mut out = vec![0; len];
        for i in (0..len).rev() {
            let n = self.rounds[i].alphabet.len();
            out[i] = t % n;
            t /= n;
        }
        out
    }

    pub fn transcript_label(&self, t: usize) -> String {
        let msgs = self.decode_prefix(t, self.rounds.len());
        let parts: Vec<&str> = msgs
            .iter()
            .enumerate()
            .map(|(i, &m)| self.rounds[i].alphabet.symbol(m))
            .collect();
        parts.join(",")
    }

    /// Alphabet of full transcripts, labelled `m1,m2,...`.
    pub fn transcript_alphabet(&self) -> Result<Alphabet> {
        Alphabet::new((0..self.transcript_count()).map(|t| self.transcript_label(t)))
    }

    pub fn output(&self, t: usize) -> Option<usize> {
        self.output[t]
    }

    /// Exact transcript law on input `(x, y)`, as a raw vector.
    pub fn transcript_probs(&self, x: usize, y: usize) -> Vec<f64> {
        let mut layer = vec![1.0];
        for (i, r) in self.rounds.iter().enumerate() {
            let n = r.alphabet.len();
            let u = self.owner_input(i, x, y);
            let mut next = vec![0.0; layer.len() * n];
            for (p, &w) in layer.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (m, &pm) in self.policy(i, u, p).iter().enumerate() {
                    next[p * n + m] = w * pm;
                }
            }
            layer = next;
        }
        layer
    }

    /// Exact transcript law on input `(x, y)`.
    pub fn transcript_distribution(&self, x: usize, y: usize) -> Result<FiniteDist> {
        if x >= self.x.len() || y >= self.y.len() {
            return Err(Error::RangeMismatch(format!("input ({x},{y}) out of range")));
        }
        let probs = self.transcript_probs(x, y);
        FiniteDist::new(self.transcript_alphabet()?, probs)
    }

    /// For each transcript, whether some input pair reaches it.
    pub fn reachable(&self) -> Vec<bool> {
        let mut reach = vec![false; self.transcript_count()];
        for x in 0..self.x.len() {
            for y in 0..self.y.len() {
                for (r, p) in reach.iter_mut().zip(self.transcript_probs(x, y)) {
                    *r |= p > 0.0;
                }
            }
        }
        reach
    }

    /// `sum_i ceil(log2 |A_i|)` for fixed-length message encodings.
    pub fn communication_cost(&self) -> u32 {
        self.rounds
            .iter()
            .map(|r| math::ceil(math::log2(r.alphabet.len() as f64)) as u32)
            .sum()
    }

    /// Largest total encoded length over reachable transcripts, where
    /// `len(i, m)` is the length of message `m` in round `i`.
    pub fn communication_cost_with(&self, len: impl Fn(usize, usize) -> u32) -> u32 {
        let reach = self.reachable();
        let k = self.rounds.len();
        (0..self.transcript_count())
            .filter(|&t| reach[t])
            .map(|t| self.decode_prefix(t, k).iter().enumerate().map(|(i, &m)| len(i, m)).sum())
            .max()
            .unwrap_or(0)
    }

    /// Whether every message law is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.rounds.iter().all(|r| r.policy.iter().all(|&p| p == 0.0 || p == 1.0))
    }

    fn check_inputs(&self, mu: &JointDist) -> Result<()> {
        let sizes = mu.sizes();
        if sizes.len() != 2 || sizes[0] != self.x.len() || sizes[1] != self.y.len() {
            return Err(Error::RangeMismatch(format!(
                "input distribution has shape {sizes:?}, protocol expects [{}, {}]",
                self.x.len(),
                self.y.len()
            )));
        }
        Ok(())
    }

    fn check_function(&self, f: &FunctionSpec) -> Result<()> {
        if f.x_alphabet() != &self.x || f.y_alphabet() != &self.y || f.z_alphabet() != &self.z {
            return Err(Error::RangeMismatch("function and protocol ranges differ".into()));
        }
        Ok(())
    }

    /// Exact per-input, worst-case and distributional error.
    pub fn evaluate_error(&self, f: &FunctionSpec, mu: &JointDist) -> Result<ErrorReport> {
        self.check_function(f)?;
        self.check_inputs(mu)?;
        let mut per_input = Vec::with_capacity(self.x.len() * self.y.len());
        for x in 0..self.x.len() {
            for y in 0..self.y.len() {
                let probs = self.transcript_probs(x, y);
                let err: f64 = probs
                    .iter()
                    .enumerate()
                    .filter(|&(t, &p)| p > 0.0 && !self.output[t].is_some_and(|z| f.accepts(x, y, z)))
                    .map(|(_, &p)| p)
                    .sum();
                per_input.push(err);
            }
        }
        Ok(ErrorReport::from_per_input(per_input, mu.probs()))
    }

    /// Joint table of `(X, Y, T)` under `mu` (row-major `[|X|, |Y|]`).
    pub fn joint_with_transcript(&self, mu: &[f64]) -> Result<JointDist> {
        let nt = self.transcript_count();
        let mut probs = Vec::with_capacity(mu.len() * nt);
        for x in 0..self.x.len() {
            for y in 0..self.y.len() {
                let w = mu[x * self.y.len() + y];
                probs.extend(self.transcript_probs(x, y).iter().map(|p| w * p));
            }
        }
        let axes = vec![
            Axis::new("X", self.x.clone()),
            Axis::new("Y", self.y.clone()),
            Axis::new("T", self.transcript_alphabet()?),
        ];
        JointDist::new(axes, probs)
    }

    /// `I(XY : T)` under `mu`.
    pub fn information_cost(&self, mu: &JointDist) -> Result<f64> {
        self.check_inputs(mu)?;
        self.joint_with_transcript(mu.probs())?.mutual_information(&[0, 1], &[2])
    }

    /// `I(XY : T | D) = sum_d kappa(d) I(XY : T | D = d)`.
    pub fn conditional_information_cost(&self, pm: &PartitionedInput) -> Result<f64> {
        self.check_inputs(pm.mu())?;
        let mut total = 0.0;
        for (d, &k) in pm.kappa().probs().iter().enumerate() {
            if k == 0.0 {
                continue;
            }
            let table = pm.component_table(d);
            total += k * self.joint_with_transcript(&table)?.mutual_information(&[0, 1], &[2])?;
        }
        Ok(total)
    }

    /// `Pr[M_2 = . | X = x, Y = y, M_1 = p]` recomputed from the joint law of
    /// the first `i + 1` messages; `None` if the prefix has zero probability.
    pub fn conditional_message_law(&self, i: usize, x: usize, y: usize, p: usize) -> Option<Vec<f64>> {
        let n = self.rounds[i].alphabet.len();
        let k = self.rounds.len();
        let probs = self.transcript_probs(x, y);
        let tail: usize = self.rounds[i + 1..k].iter().map(|r| r.alphabet.len()).product();
        let mut law = vec![0.0; n];
        for m in 0..n {
            let start = (p * n + m) * tail;
            law[m] = probs[start..start + tail].iter().sum();
        }
        let s: f64 = law.iter().sum();
        if s <= SUM_TOL {
            return None;
        }
        Some(law.iter().map(|v| v / s).collect())
    }
}
