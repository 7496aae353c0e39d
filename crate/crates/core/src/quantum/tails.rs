//! Monte-Carlo tails for random unit vectors and subspaces against a fixed
//! projector `P` onto `V = span(e_1, ..., e_{m/l})`. Unitary invariance
//! makes this choice of `V` without loss of generality.
//!
//! Trial `t` draws from stream `[t]` under the root seed, so counts over
//! disjoint trial ranges merge exactly and a parallel runner reproduces a
//! sequential one as long as ranges are merged in order.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;

use super::{haar_orthonormal, haar_vector, max_eigenvalue, modulus, powi, CMatrix, CVector, C64};
use crate::math;
use crate::rng::derive_stream;
use crate::stats::hoeffding_band;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
}

impl Hypothesis {
    pub fn new(name: &str, holds: bool) -> Self {
        Hypothesis { name: name.into(), holds }
    }
}

/// One tail event: how often a statistic reached `threshold`, against the
/// analytic upper bound on that probability.
#[derive(Clone, Debug, PartialEq)]
pub struct TailEvent {
    pub name: String,
    pub threshold: f64,
    pub bound: f64,
    pub hits: u64,
    pub trials: u64,
}

impl TailEvent {
    pub fn frequency(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }

    /// Three-sigma Hoeffding half-width.
    pub fn band(&self) -> f64 {
        hoeffding_band(self.trials as usize)
    }

    /// The one-sided check `frequency <= bound + band`.
    pub fn holds(&self) -> bool {
        self.frequency() <= self.bound + self.band()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailExperiment {
    /// Independent pairs `(w, w')`: overlap, projected norms, projected overlap.
    Overlap,
    /// Orthonormal pairs: projected overlap.
    Orthopair,
    /// Random `d`-dimensional `W`: largest `<w|P|w>` over unit `w` in `W`.
    SubspaceEnergy,
}

impl TailExperiment {
    pub fn name(self) -> &'static str {
        match self {
            TailExperiment::Overlap => "overlap",
            TailExperiment::Orthopair => "orthopair",
            TailExperiment::SubspaceEnergy => "subspace-energy",
        }
    }

    fn event_count(self) -> usize {
        match self {
            TailExperiment::Overlap => 4,
            TailExperiment::Orthopair => 1,
            TailExperiment::SubspaceEnergy => 1,
        }
    }
}

/// Raw counts over a range of trials.
#[derive(Clone, Debug, PartialEq)]
pub struct TailCounts {
    pub trials: u64,
    pub hits: Vec<u64>,
    /// Sum of `<w|P|w>` over the first frame vector of each trial.
    pub diag_sum: f64,
    /// Sum of the measured statistic of the last event.
    pub stat_sum: f64,
}

impl TailCounts {
    fn empty(events: usize) -> Self {
        TailCounts { trials: 0, hits: vec![0; events], diag_sum: 0.0, stat_sum: 0.0 }
    }

    /// Appends `other`, which must cover the trials right after `self`.
    pub fn merge(&mut self, other: &TailCounts) {
        self.trials += other.trials;
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        self.diag_sum += other.diag_sum;
        self.stat_sum += other.stat_sum;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub experiment: TailExperiment,
    pub m: usize,
    pub d: usize,
    pub l: usize,
    pub trials: u64,
    pub seed: u64,
    pub events: Vec<TailEvent>,
    pub hypotheses: Vec<Hypothesis>,
    /// Empirical mean of `<w|P|w>` for a single random unit vector; its
    /// exact value is `1/l`.
    pub mean_diag: f64,
    /// Empirical mean of the last event's statistic.
    pub mean_stat: f64,
}

impl TailReport {
    pub fn holds(&self) -> bool {
        self.events.iter().all(TailEvent::holds)
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }
}

fn check_dims(m: usize, d: usize, l: usize) -> Result<()> {
    if m == 0 || d == 0 || l == 0 {
        return Err(Error::Parameter("m, d, l must be positive".into()));
    }
    if !m.is_multiple_of(l) {
        return Err(Error::Parameter(alloc::format!("l = {l} must divide m = {m}")));
    }
    if d > m {
        return Err(Error::Parameter(alloc::format!("d = {d} exceeds m = {m}")));
    }
    Ok(())
}

fn pair_hypotheses(m: usize, d: usize, l: usize) -> Vec<Hypothesis> {
    let (mf, df, lf) = (m as f64, d as f64, l as f64);
    vec![Hypothesis::new("d < sqrt(m/l)", df < math::sqrt(mf / lf)), Hypothesis::new("l < m/20", lf < mf / 20.0)]
}

fn energy_hypotheses(m: usize, d: usize, l: usize) -> Vec<Hypothesis> {
    let (mf, df, lf) = (m as f64, d as f64, l as f64);
    vec![Hypothesis::new("200 d^4 l ln(20 d^2) < m", 200.0 * powi(df, 4) * lf * math::ln(20.0 * df * df) < mf)]
}

/// `<a|P|b>` for `P` onto the first `r` coordinates.
fn proj_inner(a: &CVector, b: &CVector, r: usize) -> C64 {
    a.rows(0, r).dotc(&b.rows(0, r))
}

/// Event thresholds and bounds, in order.
fn events(exp: TailExperiment, m: usize, d: usize, l: usize) -> Vec<(&'static str, f64, f64)> {
    let (m, d, l) = (m as f64, d as f64, l as f64);
    let d2 = d * d;
    let d4 = d2 * d2;
    match exp {
        TailExperiment::Overlap => vec![
            ("|<w,w'>| >= 1/(5d^2)", 1.0 / (5.0 * d2), 2.0 * math::exp(-m / (100.0 * d4))),
            ("|Pw| >= 2/sqrt(l)", 2.0 / math::sqrt(l), 2.0 * math::exp(-m / (4.0 * l))),
            ("|Pw'| >= 2/sqrt(l)", 2.0 / math::sqrt(l), 2.0 * math::exp(-m / (4.0 * l))),
            ("|<w|P|w'>| >= 4/(5d^2 l)", 4.0 / (5.0 * d2 * l), 6.0 * math::exp(-m / (100.0 * d4 * l))),
        ],
        TailExperiment::Orthopair => {
            vec![("|<w|P|w'>| >= 2/(d^2 l)", 2.0 / (d2 * l), 10.0 * math::exp(-m / (100.0 * d4 * l)))]
        }
        TailExperiment::SubspaceEnergy => {
            vec![("max_W <w|P|w> >= 6/l", 6.0 / l, math::exp(-m / (200.0 * d4 * l)))]
        }
    }
}

/// Runs trials `range` of `exp` and returns raw counts.
pub fn tail_counts(exp: TailExperiment, m: usize, d: usize, l: usize, seed: u64, range: Range<u64>) -> Result<TailCounts> {
    check_dims(m, d, l)?;
    let ev = events(exp, m, d, l);
    let r = m / l;
    let mut counts = TailCounts::empty(exp.event_count());
    for t in range {
        let mut rng = derive_stream(seed, &[t]);
        let (hits, diag, stat) = trial(exp, m, d, r, &ev, &mut rng)?;
        for (c, h) in counts.hits.iter_mut().zip(hits) {
            *c += u64::from(h);
        }
        counts.diag_sum += diag;
        counts.stat_sum += stat;
        counts.trials += 1;
    }
    Ok(counts)
}

fn trial<R: Rng + ?Sized>(
    exp: TailExperiment,
    m: usize,
    d: usize,
    r: usize,
    ev: &[(&'static str, f64, f64)],
    rng: &mut R,
) -> Result<(Vec<bool>, f64, f64)> {
    match exp {
        TailExperiment::Overlap => {
            let w = haar_vector(m, rng)?.into_vector();
            let w2 = haar_vector(m, rng)?.into_vector();
            let overlap = modulus(w.dotc(&w2));
            let pw = w.rows(0, r).norm();
            let pw2 = w2.rows(0, r).norm();
            let cross = modulus(proj_inner(&w, &w2, r));
            let hits = vec![overlap >= ev[0].1, pw >= ev[1].1, pw2 >= ev[2].1, cross >= ev[3].1];
            Ok((hits, pw * pw, cross))
        }
        TailExperiment::Orthopair => {
            // w = x, w' = (y - <x,y> x) / |y - <x,y> x|.
            let x = haar_vector(m, rng)?.into_vector();
            let y = haar_vector(m, rng)?.into_vector();
            let c = x.dotc(&y);
            let w2 = &y - &x * c;
            let n = w2.norm();
            if n == 0.0 {
                return Err(Error::InvariantViolated("degenerate orthonormal pair".into()));
            }
            let cross = modulus(proj_inner(&x, &w2, r)) / n;
            Ok((vec![cross >= ev[0].1], x.rows(0, r).norm_squared(), cross))
        }
        TailExperiment::SubspaceEnergy => {
            let w = haar_orthonormal(m, d, rng)?;
            let g: CMatrix = w.basis().rows(0, r).into_owned();
            let energy = max_eigenvalue(g.adjoint() * &g).clamp(0.0, 1.0);
            let diag = g.column(0).norm_squared();
            Ok((vec![energy >= ev[0].1], diag, energy))
        }
    }
}

/// Assembles a report from counts covering trials `0..counts.trials`.
pub fn tail_report(exp: TailExperiment, m: usize, d: usize, l: usize, seed: u64, counts: &TailCounts) -> Result<TailReport> {
    check_dims(m, d, l)?;
    if counts.trials == 0 || counts.hits.len() != exp.event_count() {
        return Err(Error::Parameter("counts do not match the experiment".into()));
    }
    let events = events(exp, m, d, l)
        .into_iter()
        .zip(&counts.hits)
        .map(|((name, threshold, bound), &hits)| TailEvent { name: name.into(), threshold, bound, hits, trials: counts.trials })
        .collect();
    let hypotheses = match exp {
        TailExperiment::SubspaceEnergy => energy_hypotheses(m, d, l),
        _ => pair_hypotheses(m, d, l),
    };
    let n = counts.trials as f64;
    Ok(TailReport {
        experiment: exp,
        m,
        d,
        l,
        trials: counts.trials,
        seed,
        events,
        hypotheses,
        mean_diag: counts.diag_sum / n,
        mean_stat: counts.stat_sum / n,
    })
}

fn run(exp: TailExperiment, m: usize, d: usize, l: usize, trials: u64, seed: u64) -> Result<TailReport> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let counts = tail_counts(exp, m, d, l, seed, 0..trials)?;
    tail_report(exp, m, d, l, seed, &counts)
}

/// Tails of independent random unit vectors. Requires `d < sqrt(m/l)` and
/// `l < m/20`.
pub fn overlap_tails(m: usize, d: usize, l: usize, trials: u64, seed: u64) -> Result<TailReport> {
    require(&pair_hypotheses(m, d, l))?;
    run(TailExperiment::Overlap, m, d, l, trials, seed)
}

/// Tail of `|<w|P|w'>|` for random orthonormal pairs. Same hypotheses as
/// [`overlap_tails`].
pub fn orthopair_tail(m: usize, d: usize, l: usize, trials: u64, seed: u64) -> Result<TailReport> {
    require(&pair_hypotheses(m, d, l))?;
    run(TailExperiment::Orthopair, m, d, l, trials, seed)
}

/// Tail of `P(W)` for random `d`-dimensional `W`. The size hypothesis is
/// reported, not enforced: below it the run is exploratory.
pub fn subspace_energy(m: usize, d: usize, l: usize, trials: u64, seed: u64) -> Result<TailReport> {
    run(TailExperiment::SubspaceEnergy, m, d, l, trials, seed)
}

fn require(hyps: &[Hypothesis]) -> Result<()> {
    match hyps.iter().find(|h| !h.holds) {
        Some(h) => Err(Error::Hypothesis(h.name.clone())),
        None => Ok(()),
    }
}
