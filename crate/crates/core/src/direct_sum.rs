//! Direct-sum lower bounds assembled from supplied or exactly computed
//! quantities, and the superadditivity check for tensor protocols.
//!
//! Bounds at or below zero are reported with `vacuous = true` and never
//! clamped.

use alloc::format;
use alloc::string::String;

use crate::math;
use crate::prob::{entropy_of, JointDist, PartitionedInput};
use crate::protocol::{brute_force_c, tensor_protocol, FunctionSpec, ProtocolTree, SearchLimits};
use crate::{Error, Result};

/// Which bound a report applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// `m (eps^2/(2k) C - 2 - H(kappa))` for `k`-round protocols.
    MultiRound,
    /// The product-distribution case of [`Provenance::MultiRound`].
    MultiRoundProduct,
    /// `(m eps / 3)(R~ - 2 log2(n+1) - 2 log2(1/(eps^2 (1-eps))) - 2/eps - 8)`.
    Simultaneous,
}

impl Provenance {
    pub fn describe(self) -> &'static str {
        match self {
            Provenance::MultiRound => "k-round direct sum under a partitioned input distribution",
            Provenance::MultiRoundProduct => "k-round direct sum under a product input distribution",
            Provenance::Simultaneous => "simultaneous-message direct sum",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub m: u64,
    /// Rounds; 1 for simultaneous protocols.
    pub k: u64,
    /// Input length in bits (simultaneous bound only).
    pub n: Option<u64>,
    pub eps: f64,
    pub delta: f64,
    /// The complexity the bound is built from.
    pub c_value: f64,
    pub h_kappa: f64,
    pub bound: f64,
    pub vacuous: bool,
    pub provenance: Provenance,
}

impl BoundReport {
    /// The bound recomputed from the stored fields.
    pub fn recompute(&self) -> f64 {
        match self.provenance {
            Provenance::MultiRound | Provenance::MultiRoundProduct => {
                multiround_formula(self.m, self.k, self.eps, self.c_value, self.h_kappa)
            }
            Provenance::Simultaneous => simul_formula(self.m, self.n.unwrap_or(0), self.eps, self.c_value),
        }
    }

    pub fn is_consistent(&self) -> bool {
        math::abs(self.recompute() - self.bound) <= 1e-12 * self.bound.abs().max(1.0)
    }
}

fn multiround_formula(m: u64, k: u64, eps: f64, c: f64, h: f64) -> f64 {
    m as f64 * (eps * eps / (2.0 * k as f64) * c - 2.0 - h)
}

fn simul_formula(m: u64, n: u64, eps: f64, r: f64) -> f64 {
    (m as f64 * eps / 3.0)
        * (r - 2.0 * math::log2(n as f64 + 1.0) - 2.0 * math::log2(1.0 / (eps * eps * (1.0 - eps))) - 2.0 / eps - 8.0)
}

fn check(cond: bool, what: String) -> Result<()> {
    if cond { Ok(()) } else { Err(Error::Parameter(what)) }
}

fn check_common(m: u64, eps: f64, delta: f64, c: f64) -> Result<()> {
    check(m >= 1, format!("m must be at least 1, got {m}"))?;
    check(eps > 0.0 && eps <= 1.0, format!("eps must lie in (0, 1], got {eps}"))?;
    check((0.0..1.0).contains(&delta), format!("delta must lie in [0, 1), got {delta}"))?;
    check(c >= 0.0 && c.is_finite(), format!("complexity must be finite and non-negative, got {c}"))
}

/// Lower bound on `R^k_delta(f^m)` from `C^k_{mu, delta + 2 eps}(f)` and
/// `H(kappa)`.
pub fn multiround_bound(m: u64, k: u64, eps: f64, delta: f64, c_value: f64, h_kappa: f64) -> Result<BoundReport> {
    check_common(m, eps, delta, c_value)?;
    check(k >= 1, format!("k must be at least 1, got {k}"))?;
    check(h_kappa >= 0.0 && h_kappa.is_finite(), format!("H(kappa) must be finite and non-negative, got {h_kappa}"))?;
    let bound = multiround_formula(m, k, eps, c_value, h_kappa);
    let provenance = if h_kappa == 0.0 { Provenance::MultiRoundProduct } else { Provenance::MultiRound };
    Ok(BoundReport { m, k, n: None, eps, delta, c_value, h_kappa, bound, vacuous: bound <= 0.0, provenance })
}

/// Lower bound on `R^sim_delta(f^m)` from `R~^sim_{delta + 4 eps}(f)` for
/// `n`-bit inputs.
pub fn simul_bound(m: u64, n: u64, eps: f64, delta: f64, r_tilde: f64) -> Result<BoundReport> {
    check_common(m, eps, delta, r_tilde)?;
    check(eps < 1.0, "eps must be below 1 for the simultaneous bound".into())?;
    let bound = simul_formula(m, n, eps, r_tilde);
    Ok(BoundReport {
        m,
        k: 1,
        n: Some(n),
        eps,
        delta,
        c_value: r_tilde,
        h_kappa: 0.0,
        bound,
        vacuous: bound <= 0.0,
        provenance: Provenance::Simultaneous,
    })
}

/// The `R~` at which [`simul_bound`] is exactly zero.
pub fn simul_threshold(n: u64, eps: f64) -> f64 {
    2.0 * math::log2(n as f64 + 1.0) + 2.0 * math::log2(1.0 / (eps * eps * (1.0 - eps))) + 2.0 / eps + 8.0
}

/// `eps^2/(2k) C - 2`, a lower bound on the information cost of any
/// `k`-round protocol with error `delta` under a product distribution,
/// given `C = C^k_{mu, delta + 2 eps}`.
pub fn ic_lower_bound(c_value: f64, k: u64, eps: f64) -> f64 {
    eps * eps / (2.0 * k as f64) * c_value - 2.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcLowerBound {
    /// `C^k_{mu, delta + 2 eps}(f)` from the exhaustive search.
    pub c_value: u32,
    pub bound: f64,
    pub vacuous: bool,
}

/// [`ic_lower_bound`] with `C` computed by [`brute_force_c`].
pub fn ic_lower_bound_from_c(
    f: &FunctionSpec,
    mu: &JointDist,
    delta: f64,
    eps: f64,
    k: usize,
    bits_per_round: u32,
    limits: SearchLimits,
) -> Result<IcLowerBound> {
    check(eps > 0.0 && eps <= 1.0, format!("eps must lie in (0, 1], got {eps}"))?;
    check(k >= 1, "k must be at least 1".into())?;
    check_product(mu)?;
    let target = delta + 2.0 * eps;
    let c_value = if target >= 1.0 { 0 } else { brute_force_c(f, mu, target, k, bits_per_round, limits)? };
    let bound = ic_lower_bound(c_value as f64, k as u64, eps);
    Ok(IcLowerBound { c_value, bound, vacuous: bound <= 0.0 })
}

fn check_product(mu: &JointDist) -> Result<()> {
    let sizes = mu.sizes();
    if sizes.len() != 2 {
        return Err(Error::RangeMismatch("input distribution must have two axes".into()));
    }
    let px = mu.marginal_probs(&[0]);
    let py = mu.marginal_probs(&[1]);
    for x in 0..sizes[0] {
        for y in 0..sizes[1] {
            if math::abs(mu.prob(&[x, y]) - px[x] * py[y]) > 1e-12 {
                return Err(Error::Hypothesis("input distribution is not a product".into()));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuperadditivityReport {
    pub m: usize,
    /// `IC(pi | kappa)` under the single-copy distribution.
    pub single: f64,
    /// `IC(pi^m | kappa^m)` under the tensor distribution.
    pub tensor: f64,
    /// `tensor - m * single`.
    pub residual: f64,
    pub h_kappa: f64,
}

/// Conditional information cost of `m` independent copies against `m`
/// times the single-copy value.
pub fn superadditivity_experiment(
    pi: &ProtocolTree,
    pm: &PartitionedInput,
    m: usize,
    max_cells: usize,
) -> Result<SuperadditivityReport> {
    let single = pi.conditional_information_cost(pm)?;
    let tp = tensor_protocol(pi, m, max_cells)?;
    let tpm = pm.tensor(m, max_cells)?;
    let tensor = tp.conditional_information_cost(&tpm)?;
    let residual = tensor - m as f64 * single;
    if math::abs(residual) > 1e-9 {
        return Err(Error::InvariantViolated(format!("tensor cost {tensor} != {m} x {single}")));
    }
    Ok(SuperadditivityReport { m, single, tensor, residual, h_kappa: entropy_of(pm.kappa().probs()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Alphabet, Axis};
    use crate::protocol::DEFAULT_MAX_CELLS;
    use crate::random::{self, ProtocolShape};
    use crate::protocol::Party;
    use crate::rng::derive_stream;
    use alloc::vec;

    #[test]
    fn multiround_examples() {
        let r = multiround_bound(3, 2, 0.5, 0.1, 0.0, 0.5).unwrap();
        assert_eq!(r.bound, -3.0 * 2.5);
        assert!(r.vacuous);
        let r = multiround_bound(1, 1, 0.5, 0.3, 40.0, 0.0).unwrap();
        assert_eq!(r.bound, 3.0);
        assert!(!r.vacuous);
        assert_eq!(r.provenance, Provenance::MultiRoundProduct);
        // H of a fair coin removes exactly one bit per copy.
        let h = entropy_of(&[0.5, 0.5]);
        let with = multiround_bound(4, 1, 0.5, 0.3, 40.0, h).unwrap();
        assert_eq!(r.bound * 4.0 - with.bound, 4.0);
        assert_eq!(with.provenance, Provenance::MultiRound);
        assert!(with.is_consistent());
    }

    #[test]
    fn simul_examples() {
        let n = 6;
        let eps = 0.2;
        // Threshold from the linear equation, solved independently.
        let t = 2.0 * 7f64.log2() + 2.0 * (1.0 / (0.04 * 0.8f64)).log2() + 10.0 + 8.0;
        assert!((simul_threshold(n, eps) - t).abs() < 1e-12);
        assert!(simul_bound(5, n, eps, 0.1, t).unwrap().bound.abs() < 1e-12);
        let one = simul_bound(1, n, eps, 0.1, t + 30.0).unwrap();
        let seven = simul_bound(7, n, eps, 0.1, t + 30.0).unwrap();
        assert!((seven.bound - 7.0 * one.bound).abs() < 1e-12);
        // Small eps drives the bound negative for any modest R~.
        assert!(simul_bound(1, n, 1e-3, 0.1, 100.0).unwrap().bound < 0.0);
        assert!(simul_bound(1, n, 1.0, 0.1, 100.0).is_err());
    }

    #[test]
    fn parameters_are_checked() {
        assert!(multiround_bound(0, 1, 0.5, 0.1, 1.0, 0.0).is_err());
        assert!(multiround_bound(1, 0, 0.5, 0.1, 1.0, 0.0).is_err());
        assert!(multiround_bound(1, 1, 0.0, 0.1, 1.0, 0.0).is_err());
        assert!(multiround_bound(1, 1, 0.5, 1.0, 1.0, 0.0).is_err());
        assert!(multiround_bound(1, 1, 0.5, 0.1, -1.0, 0.0).is_err());
        assert!(multiround_bound(1, 1, 0.5, 0.1, 1.0, -0.1).is_err());
    }

    fn idx(n: usize) -> Alphabet {
        Alphabet::indexed(n).unwrap()
    }

    #[test]
    fn constant_function_gives_vacuous_bound() {
        let f = FunctionSpec::from_fn(idx(2), idx(2), idx(2), |_, _| 1).unwrap();
        let mu = random::uniform_inputs(2, 2);
        let r = ic_lower_bound_from_c(&f, &mu, 0.0, 0.25, 1, 1, SearchLimits::default()).unwrap();
        assert_eq!(r.c_value, 0);
        assert_eq!(r.bound, -2.0);
        assert!(r.vacuous);
    }

    #[test]
    fn large_error_budget_needs_no_communication() {
        let f = FunctionSpec::from_fn(idx(2), idx(2), idx(2), |x, y| (x == y) as usize).unwrap();
        let mu = random::uniform_inputs(2, 2);
        let r = ic_lower_bound_from_c(&f, &mu, 0.6, 0.25, 2, 1, SearchLimits::default()).unwrap();
        assert_eq!(r.c_value, 0);
        assert!(r.vacuous);
    }

    #[test]
    fn eq_bound_matches_arithmetic() {
        // One-bit equality, exact, two rounds: C = 2 (Alice sends x, Bob answers).
        let f = FunctionSpec::from_fn(idx(2), idx(2), idx(2), |x, y| (x == y) as usize).unwrap();
        let mu = random::uniform_inputs(2, 2);
        let r = ic_lower_bound_from_c(&f, &mu, 0.0, 0.01, 2, 1, SearchLimits::default());
        // delta + 2 eps = 0.02 < 1/4, so no zero- or one-bit protocol works.
        let r = r.unwrap();
        assert_eq!(r.c_value, 2);
        assert_eq!(r.bound, 0.0001 / 4.0 * 2.0 - 2.0);
        // The arithmetic alone for the k = 1, eps = 1/4 case.
        assert_eq!(ic_lower_bound(2.0, 1, 0.25), 2.0 / 32.0 - 2.0);
    }

    #[test]
    fn non_product_distribution_is_rejected() {
        let f = FunctionSpec::from_fn(idx(2), idx(2), idx(2), |x, y| (x == y) as usize).unwrap();
        let axes = vec![Axis::indexed("X", 2).unwrap(), Axis::indexed("Y", 2).unwrap()];
        let mu = JointDist::new(axes, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(matches!(
            ic_lower_bound_from_c(&f, &mu, 0.0, 0.1, 1, 1, SearchLimits::default()),
            Err(Error::Hypothesis(_))
        ));
    }

    /// Every measured protocol with error at most delta has information
    /// cost at least the bound, and communication at least its own
    /// conditional information cost.
    #[test]
    fn sandwich_on_tiny_instances() {
        let mut checked = 0;
        for t in 0..40u64 {
            let mut rng = derive_stream(21, &[t]);
            let shape = ProtocolShape { nx: 2, ny: 2, nz: 2, alphabets: vec![2, 2], start: Party::Alice, sharpness: 0.95 };
            let pi = random::random_protocol(&shape, &mut rng).unwrap();
            let f = random::majority_function(&pi).unwrap();
            let px = random::random_dist(2, &mut rng);
            let py = random::random_dist(2, &mut rng);
            let pm = PartitionedInput::product(&px, &py).unwrap();
            let delta = pi.evaluate_error(&f, pm.mu()).unwrap().distributional;
            for eps in [0.05, 0.1, 0.2] {
                let lb = ic_lower_bound_from_c(&f, pm.mu(), delta, eps, 2, 1, SearchLimits::default()).unwrap();
                assert!(pi.information_cost(pm.mu()).unwrap() >= lb.bound - 1e-12);
                checked += 1;
            }
            assert!(pi.communication_cost() as f64 >= pi.conditional_information_cost(&pm).unwrap() - 1e-12);
        }
        assert_eq!(checked, 120);
    }

    #[test]
    fn superadditivity_small_cases() {
        let mut rng = derive_stream(22, &[]);
        let shape = ProtocolShape { nx: 2, ny: 3, nz: 2, alphabets: vec![2, 2], start: Party::Bob, sharpness: 0.9 };
        let pi = random::random_protocol(&shape, &mut rng).unwrap();
        let pm = random::random_partitioned_input(2, 3, 2, &mut rng).unwrap();
        let one = superadditivity_experiment(&pi, &pm, 1, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(one.tensor, one.single);
        let two = superadditivity_experiment(&pi, &pm, 2, DEFAULT_MAX_CELLS).unwrap();
        assert!(two.residual.abs() <= 1e-9);
        // With a point-mass partition this is plain additivity.
        let px = random::random_dist(2, &mut rng);
        let py = random::random_dist(3, &mut rng);
        let prod = PartitionedInput::product(&px, &py).unwrap();
        let r = superadditivity_experiment(&pi, &prod, 2, DEFAULT_MAX_CELLS).unwrap();
        let ic = pi.information_cost(prod.mu()).unwrap();
        assert!((r.single - ic).abs() < 1e-12);
        assert_eq!(r.h_kappa, 0.0);
    }
}
