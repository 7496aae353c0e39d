//! The good-set decomposition of `P` against `Q`.
//!
//! With `a = S(P||Q)` and `r >= 1`, the good set is
//! `{i : P(i) / 2^(r(a+1)) <= Q(i)}` (ties included). It carries
//! `P`-mass at least `1 - 1/r`, and `P~ = P / P(good)` restricted to it
//! satisfies `alpha P~ <= Q` with `alpha = ((r-1)/r) 2^(-r(a+1))`.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::prob::{relative_entropy, total_variation_of, FiniteDist, SUM_TOL};
use crate::{Error, Result};

/// Result of [`decompose`]. All invariants are checked on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SubstateDecomposition {
    /// `S(P||Q)`, recomputed from the inputs.
    pub a: f64,
    pub r: f64,
    /// Good indices in increasing order.
    pub good: Vec<usize>,
    pub p_good: f64,
    pub p_tilde: FiniteDist,
    pub alpha: f64,
}

impl SubstateDecomposition {
    pub fn is_good(&self, i: usize) -> bool {
        self.good.binary_search(&i).is_ok()
    }
}

/// Membership test `P(i) / 2^exponent <= Q(i)` for every symbol.
pub fn good_mask(p: &[f64], q: &[f64], exponent: f64) -> Vec<bool> {
    let scale = math::exp2(exponent);
    p.iter().zip(q).map(|(&pi, &qi)| pi / scale <= qi).collect()
}

/// Decomposes `P` against `Q` at parameter `r`.
pub fn decompose(p: &FiniteDist, q: &FiniteDist, r: f64) -> Result<SubstateDecomposition> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::Parameter(format!("r must be a finite number >= 1, got {r}")));
    }
    let a = relative_entropy(p, q)?;
    if !a.is_finite() {
        return Err(Error::SubstateUndefined);
    }
    let exponent = r * (a + 1.0);
    let mask = good_mask(p.probs(), q.probs(), exponent);
    let good: Vec<usize> = (0..p.len()).filter(|&i| mask[i]).collect();
    let p_good = p.mass(good.iter().copied());
    let bad_mass: f64 = (0..p.len()).filter(|&i| !mask[i]).map(|i| p.prob(i)).sum();
    let p_tilde = if bad_mass == 0.0 {
        p.clone()
    } else {
        let probs = (0..p.len())
            .map(|i| if mask[i] { p.prob(i) / p_good } else { 0.0 })
            .collect();
        FiniteDist::new(p.alphabet().clone(), probs)?
    };
    let alpha = ((r - 1.0) / r) * math::exp2(-exponent);
    let d = SubstateDecomposition { a, r, good, p_good, p_tilde, alpha };
    check_invariants(&d, p, q)?;
    Ok(d)
}

fn check_invariants(d: &SubstateDecomposition, p: &FiniteDist, q: &FiniteDist) -> Result<()> {
    if d.p_good < 1.0 - 1.0 / d.r - SUM_TOL {
        return Err(Error::InvariantViolated(format!(
            "good set has mass {} < 1 - 1/{}",
            d.p_good, d.r
        )));
    }
    let tv = total_variation_of(p.probs(), d.p_tilde.probs());
    if tv > 2.0 / d.r + SUM_TOL {
        return Err(Error::InvariantViolated(format!("|P - P~| = {tv} > 2/{}", d.r)));
    }
    for (i, (&pt, &qi)) in d.p_tilde.probs().iter().zip(q.probs()).enumerate() {
        if d.alpha * pt > qi + SUM_TOL {
            return Err(Error::InvariantViolated(format!("alpha P~ exceeds Q at symbol {i}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn d(p: &[f64]) -> FiniteDist {
        FiniteDist::from_probs(p.to_vec()).unwrap()
    }

    #[test]
    fn identical_distributions() {
        let p = d(&[0.2, 0.3, 0.5]);
        let s = decompose(&p, &p, 2.0).unwrap();
        assert_eq!(s.a, 0.0);
        assert_eq!(s.good, vec![0, 1, 2]);
        assert_eq!(s.p_tilde, p);
        assert_eq!(s.alpha, 0.5 * 0.25);
    }

    #[test]
    fn two_point_example() {
        let p = d(&[0.9, 0.1]);
        let q = d(&[0.5, 0.5]);
        let s = decompose(&p, &q, 1.0).unwrap();
        // Oracle: 0.9 log2 1.8 + 0.1 log2 0.2.
        let a = 0.9 * (1.8f64).ln() / 2f64.ln() + 0.1 * (0.2f64).ln() / 2f64.ln();
        assert!((s.a - a).abs() < 1e-15);
        assert!((s.a - 0.531004).abs() < 1e-6);
        // Threshold 2^(a+1) = 2.889870...; P(1)/threshold = 0.0346 <= 0.5.
        assert!((2f64.powf(s.a + 1.0) - 2.889870).abs() < 1e-6);
        assert_eq!(s.good, vec![0, 1]);
        assert_eq!(s.p_tilde, p);
        assert_eq!(s.alpha, 0.0);
    }

    #[test]
    fn ties_are_good() {
        // a = 1, r = 1: threshold 2^2 = 4; P(0)/4 = 0.25 = Q(0) exactly.
        let p = d(&[1.0, 0.0]);
        let q = d(&[0.5, 0.5]);
        let s = decompose(&p, &q, 1.0).unwrap();
        assert_eq!(s.a, 1.0);
        assert!(s.is_good(0));
    }

    #[test]
    fn errors() {
        let p = d(&[1.0, 0.0]);
        let q = d(&[0.0, 1.0]);
        assert!(matches!(decompose(&p, &q, 2.0), Err(Error::SubstateUndefined)));
        assert!(matches!(decompose(&q, &q, 0.5), Err(Error::Parameter(_))));
        assert!(matches!(decompose(&q, &q, f64::NAN), Err(Error::Parameter(_))));
    }

    fn pair() -> impl Strategy<Value = (FiniteDist, FiniteDist)> {
        (1usize..=16).prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], n),
                prop::collection::vec(1e-6f64..1.0, n),
            )
                .prop_filter_map("positive mass", |(wp, wq)| {
                    let sp: f64 = wp.iter().sum();
                    if sp <= 0.0 {
                        return None;
                    }
                    let sq: f64 = wq.iter().sum();
                    Some((
                        FiniteDist::from_probs(wp.iter().map(|x| x / sp).collect()).ok()?,
                        FiniteDist::from_probs(wq.iter().map(|x| x / sq).collect()).ok()?,
                    ))
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn bounds_hold((p, q) in pair(), r in prop_oneof![Just(1.0), Just(2.0), Just(4.0), 1.0f64..16.0]) {
            let s = decompose(&p, &q, r).unwrap();
            prop_assert!(s.p_good >= 1.0 - 1.0 / r - SUM_TOL);
            prop_assert!(total_variation_of(p.probs(), s.p_tilde.probs()) <= 2.0 / r + SUM_TOL);
            for i in 0..p.len() {
                prop_assert!(s.alpha * s.p_tilde.prob(i) <= q.prob(i) + SUM_TOL);
                if !s.is_good(i) {
                    prop_assert_eq!(s.p_tilde.prob(i), 0.0);
                }
            }
        }

        #[test]
        fn good_set_grows_with_r((p, q) in pair(), r1 in 1.0f64..8.0, dr in 0.0f64..8.0) {
            let s1 = decompose(&p, &q, r1).unwrap();
            let s2 = decompose(&p, &q, r1 + dr).unwrap();
            for i in &s1.good {
                prop_assert!(s2.is_good(*i));
            }
        }
    }
}
