//! The Las-Vegas rejection sampler with an abort symbol.
//!
//! Against reference `Q`, the sampler walks an i.i.d. `Q` stream. At each
//! position holding symbol `i` it accepts with probability `gamma_i`,
//! aborts with probability `beta (1 - gamma_i)`, and otherwise continues.
//! The per-step stopping probability is exactly `2^-a`, so the stopping
//! index `R` is geometric with mean `2^a`, and the output is `P` on the good
//! set and the abort symbol with probability `1 - P(good)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Distribution;

use super::categorical;
use crate::math;
use crate::prob::{relative_entropy, FiniteDist};
use crate::substate::good_mask;
use crate::{Error, Result};

/// Materializing samplers never walk more than `2^MATERIALIZE_LOG2_CAP` positions.
pub const MATERIALIZE_LOG2_CAP: u32 = 24;

/// Largest exponent for which `2^-a` is a positive double.
pub const MAX_EXPONENT: f64 = 1000.0;

/// Hard cap on the stream length of one sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamCap {
    /// `2^(ceil(a) + h)` positions for a sampler with exponent `a`.
    Headroom(u32),
    /// `2^l` positions regardless of the exponent.
    Log2(u32),
}

impl Default for StreamCap {
    fn default() -> Self {
        StreamCap::Headroom(20)
    }
}

impl StreamCap {
    /// `log2` of the cap for a sampler with exponent `a`.
    pub fn log2_for(&self, a: f64) -> u32 {
        match *self {
            StreamCap::Headroom(h) => math::ceil(a) as u32 + h,
            StreamCap::Log2(l) => l,
        }
    }
}

/// The value of `Y`: a symbol index or the abort symbol `0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Symbol(usize),
    Abort,
}

/// Where a sampler stopped. `r` is 1-based; `None` means the stream cap was
/// reached without stopping, in which case `y` is `Abort`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stop {
    pub r: Option<u64>,
    pub y: Outcome,
}

/// One materialized run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleTrace {
    pub x_seq: Vec<usize>,
    pub stop: Stop,
}

/// Several samplers run on one shared stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedTrace {
    pub x_seq: Vec<usize>,
    pub stops: Vec<Stop>,
}

#[derive(Clone, Debug)]
pub struct LasVegasSampler {
    p: FiniteDist,
    q: FiniteDist,
    a: f64,
    gamma: Vec<f64>,
    beta: f64,
    good: Vec<bool>,
    eps: f64,
}

/// Sampler at `r = 1 / eps_target`, i.e. exponent `(S(P||Q) + 1) / eps_target`.
pub fn las_vegas_sampler(p: &FiniteDist, q: &FiniteDist, eps_target: f64) -> Result<LasVegasSampler> {
    if !(eps_target > 0.0 && eps_target <= 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1], got {eps_target}")));
    }
    LasVegasSampler::with_r(p, q, 1.0 / eps_target)
}

impl LasVegasSampler {
    /// Sampler with exponent `a = r (S(P||Q) + 1)`.
    pub fn with_r(p: &FiniteDist, q: &FiniteDist, r: f64) -> Result<Self> {
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::Parameter(format!("r must be finite and >= 1, got {r}")));
        }
        let s = relative_entropy(p, q)?;
        if !s.is_finite() {
            return Err(Error::InfiniteDivergence("P and Q".into()));
        }
        Self::with_exponent(p, q, r * (s + 1.0))
    }

    /// Sampler with an explicit exponent; the good set is `{i : P(i)/2^a <= Q(i)}`.
    pub fn with_exponent(p: &FiniteDist, q: &FiniteDist, a: f64) -> Result<Self> {
        if p.alphabet() != q.alphabet() {
            return Err(Error::AlphabetMismatch("P and Q differ".into()));
        }
        if !(a >= 0.0) {
            return Err(Error::Parameter(format!("exponent must be >= 0, got {a}")));
        }
        if a > MAX_EXPONENT {
            return Err(Error::ResourceCap(format!("sampler exponent {a} exceeds {MAX_EXPONENT}")));
        }
        let good = good_mask(p.probs(), q.probs(), a);
        let eps: f64 = (0..p.len()).filter(|&i| !good[i]).map(|i| p.prob(i)).sum();
        let scale = math::exp2(-a);
        let gamma: Vec<f64> = (0..p.len())
            .map(|i| {
                if good[i] && p.prob(i) > 0.0 {
                    (p.prob(i) / q.prob(i) * scale).min(1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let beta = if eps == 0.0 { 0.0 } else { eps * scale / (1.0 - (1.0 - eps) * scale) };
        let s = Self { p: p.clone(), q: q.clone(), a, gamma, beta, good, eps };
        s.verify()?;
        Ok(s)
    }

    fn verify(&self) -> Result<()> {
        let scale = math::exp2(-self.a);
        let rate = self.stop_rate();
        if math::abs(rate / scale - 1.0) > 1e-9 {
            return Err(Error::InvariantViolated(format!("stop rate {rate} != 2^-a = {scale}")));
        }
        let law = self.output_law();
        if math::abs(law[0] - self.eps) > 1e-10 {
            return Err(Error::InvariantViolated(format!("abort mass {} != {}", law[0], self.eps)));
        }
        for i in 0..self.p.len() {
            let want = if self.good[i] { self.p.prob(i) } else { 0.0 };
            if math::abs(law[i + 1] - want) > 1e-10 {
                return Err(Error::InvariantViolated(format!("output law wrong at symbol {i}")));
            }
        }
        Ok(())
    }

    pub fn p(&self) -> &FiniteDist {
        &self.p
    }

    pub fn q(&self) -> &FiniteDist {
        &self.q
    }

    /// The effective exponent `a`; `E[R] = 2^a`.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn good(&self) -> &[bool] {
        &self.good
    }

    /// `1 - P(good)`, the abort probability without a stream cap.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `Pr[Z != continue | X = i]`.
    pub fn stop_prob(&self, i: usize) -> f64 {
        self.gamma[i] + self.beta * (1.0 - self.gamma[i])
    }

    /// Closed form `Pr[Z != continue]`.
    pub fn stop_rate(&self) -> f64 {
        (0..self.q.len()).map(|i| self.q.prob(i) * self.stop_prob(i)).sum()
    }

    /// Closed-form law of `Y` with index 0 the abort symbol and index
    /// `i + 1` symbol `i`.
    pub fn output_law(&self) -> Vec<f64> {
        let rate = self.stop_rate();
        let mut law = Vec::with_capacity(self.q.len() + 1);
        let abort: f64 = (0..self.q.len())
            .map(|i| self.q.prob(i) * self.beta * (1.0 - self.gamma[i]))
            .sum();
        law.push(abort / rate);
        law.extend((0..self.q.len()).map(|i| self.q.prob(i) * self.gamma[i] / rate));
        law
    }

    /// `E[R] = 2^a`.
    pub fn expected_r(&self) -> f64 {
        math::exp2(self.a)
    }

    /// `Pr[R >= n] = (1 - 2^-a)^(n-1)`.
    pub fn pr_r_at_least(&self, n: f64) -> f64 {
        if n <= 1.0 {
            return 1.0;
        }
        math::exp((n - 1.0) * math::ln_1p(-math::exp2(-self.a)))
    }

    /// `Pr[R > 2^log2_cap]`, the mass cut off by a stream cap.
    pub fn tail_beyond(&self, log2_cap: u32) -> f64 {
        self.pr_r_at_least(math::exp2(log2_cap as f64) + 1.0)
    }

    /// Abort probability when runs past `2^log2_cap` positions also abort.
    pub fn capped_abort_probability(&self, log2_cap: u32) -> f64 {
        let tail = self.tail_beyond(log2_cap);
        self.eps * (1.0 - tail) + tail
    }

    /// One step's outcome given the stream symbol and a uniform.
    #[inline]
    pub fn step(&self, x: usize, u: f64) -> Option<Outcome> {
        let g = self.gamma[x];
        if u < g {
            Some(Outcome::Symbol(x))
        } else if u < g + self.beta * (1.0 - g) {
            Some(Outcome::Abort)
        } else {
            None
        }
    }

    /// Materialized run, walking at most `min(cap, 2^24)` positions.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R, cap: StreamCap) -> Result<SampleTrace> {
        let shared = run_shared(&self.q, core::slice::from_ref(self), rng, cap)?;
        Ok(SampleTrace { x_seq: shared.x_seq, stop: shared.stops[0] })
    }
}

/// Multi-sampler: one sampler per `P_j` at `r = 1/eps`, all
/// reading the same materialized stream and the same per-position uniform.
pub fn multi_sampler<R: Rng + ?Sized>(
    q: &FiniteDist,
    ps: &[FiniteDist],
    eps: f64,
    rng: &mut R,
    cap: StreamCap,
) -> Result<(Vec<LasVegasSampler>, SharedTrace)> {
    if ps.is_empty() {
        return Err(Error::Parameter("need at least one target distribution".into()));
    }
    let samplers = ps
        .iter()
        .map(|p| las_vegas_sampler(p, q, eps))
        .collect::<Result<Vec<_>>>()?;
    let trace = run_shared(q, &samplers, rng, cap)?;
    Ok((samplers, trace))
}

pub(crate) fn run_shared<R: Rng + ?Sized>(
    q: &FiniteDist,
    samplers: &[LasVegasSampler],
    rng: &mut R,
    cap: StreamCap,
) -> Result<SharedTrace> {
    let log2_cap = samplers
        .iter()
        .map(|s| cap.log2_for(s.a).min(MATERIALIZE_LOG2_CAP))
        .collect::<Vec<_>>();
    let limit = log2_cap.iter().map(|&c| 1u64 << c).max().unwrap_or(1);
    let dist = categorical(q.probs())?;
    let mut stops: Vec<Option<Stop>> = alloc::vec![None; samplers.len()];
    let mut pending = samplers.len();
    let mut x_seq = Vec::new();
    let mut j = 0u64;
    while pending > 0 && j < limit {
        j += 1;
        let x = dist.sample(rng);
        let u: f64 = rng.random();
        x_seq.push(x);
        for (k, s) in samplers.iter().enumerate() {
            if stops[k].is_some() {
                continue;
            }
            if j > 1u64 << log2_cap[k] {
                stops[k] = Some(Stop { r: None, y: Outcome::Abort });
                pending -= 1;
            } else if let Some(y) = s.step(x, u) {
                stops[k] = Some(Stop { r: Some(j), y });
                pending -= 1;
            }
        }
    }
    let stops = stops
        .into_iter()
        .map(|s| s.unwrap_or(Stop { r: None, y: Outcome::Abort }))
        .collect();
    Ok(SharedTrace { x_seq, stops })
}
