use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use rand::SeedableRng;

use super::*;
use crate::prob::{Alphabet, FiniteDist};
use crate::protocol::{FunctionSpec, Party, ProtocolTree, Round, SimulProtocol};
use crate::random::{self, ProtocolShape};
use crate::rng::StreamRng;
use crate::sampler::{LasVegasSampler, StreamCap};
use crate::Error;

fn idx(n: usize) -> Alphabet {
    Alphabet::indexed(n).unwrap()
}

fn d(p: &[f64]) -> FiniteDist {
    FiniteDist::from_probs(p.to_vec()).unwrap()
}

// ---- sample_support ----

#[test]
fn support_with_identical_laws_and_constant_test() {
    let q = d(&[0.5, 0.25, 0.25]);
    let s = sample_support(&q, core::slice::from_ref(&q), 1, |_, _, _| 1.0, 0.25, 1, 4).unwrap();
    assert_eq!(s.deviation, 0.0);
    assert_eq!(s.attempts, 1);
    assert!(!s.subsequences[0].is_empty());
}

#[test]
fn support_indicator_mean_is_close() {
    let q = d(&[0.4, 0.3, 0.2, 0.1]);
    let p = d(&[0.1, 0.2, 0.3, 0.4]);
    let eps = 0.25;
    let s = sample_support(&q, core::slice::from_ref(&p), 1, |_, _, m| (m == 3) as u8 as f64, eps, 2, 8).unwrap();
    let seq = &s.subsequences[0];
    let mean = seq.iter().filter(|(_, m)| *m == 3).count() as f64 / seq.len() as f64;
    assert!((mean - p.prob(3)).abs() <= 2.0 * eps);
    assert!((s.deviation - (mean - 0.4).abs()).abs() <= 1e-15);
}

#[test]
fn support_lengths_and_structure() {
    let mut rng = StreamRng::seed_from_u64(3);
    let q = random::random_dist(5, &mut rng);
    let ps: Vec<FiniteDist> = (0..4)
        .map(|_| {
            let w = random::blended(5, 0.5, &mut rng);
            let mix: Vec<f64> = w.iter().zip(q.probs()).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
            d(&mix)
        })
        .collect();
    let eps = 0.3;
    let s = sample_support(&q, &ps, 6, |i, j, m| ((i + j + m) % 3) as f64 / 2.0, eps, 4, 16).unwrap();
    for (i, p) in ps.iter().enumerate() {
        let a = crate::prob::relative_entropy(p, &q).unwrap();
        // N = max(4, 6) = 6, so log2(2N) = log2(12).
        let want = (8.0 * 2f64.powf((a + 1.0) / eps) * 12f64.log2() / ((1.0 - eps) * eps * eps)).ceil();
        assert_eq!(s.t[i], BigUint::from(want as u64));
        let seq = &s.subsequences[i];
        assert!(seq.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(seq.iter().all(|(pos, _)| *pos >= BigUint::from(1u8) && *pos <= s.t[i]));
        assert!((s.exponents[i] - ((a + 1.0) / eps - (1.0 - eps).log2())).abs() < 1e-12);
    }
    assert_eq!(&s.t_max, s.t.iter().max().unwrap());
    assert!(s.deviation <= 2.0 * eps);
}

#[test]
fn support_rejects_bad_inputs() {
    let q = d(&[1.0, 0.0]);
    let p = d(&[0.5, 0.5]);
    assert!(matches!(
        sample_support(&q, &[p], 1, |_, _, _| 1.0, 0.5, 0, 2),
        Err(Error::InfiniteDivergence(_))
    ));
    assert!(matches!(sample_support(&q, core::slice::from_ref(&q), 1, |_, _, _| 1.0, 1.0, 0, 2), Err(Error::Parameter(_))));
    // A single attempt cannot meet an impossible deviation target.
    let q = d(&[0.5, 0.5]);
    let r = sample_support(&q, core::slice::from_ref(&q), 1, |_, _, m| m as f64, 0.01, 0, 0);
    assert!(matches!(r, Err(Error::RetryBudgetExhausted { attempts: 0, .. })));
}

#[test]
fn index_bits_cover_the_sample() {
    assert_eq!(index_bits(&BigUint::from(1u8)), 0);
    assert_eq!(index_bits(&BigUint::from(2u8)), 1);
    assert_eq!(index_bits(&BigUint::from(8u8)), 3);
    assert_eq!(index_bits(&BigUint::from(9u8)), 4);
}

// ---- simultaneous compression ----

fn eq_instance() -> (SimulProtocol, FunctionSpec) {
    // Each party sends a noisy copy of its 2-bit input; the referee
    // compares.
    let n = 4;
    let noisy = |u: usize| (0..n).map(move |m| if m == u { 0.85 } else { 0.05 });
    let alice: Vec<f64> = (0..n).flat_map(noisy).collect();
    let bob = alice.clone();
    let referee = (0..n * n).map(|c| (c / n == c % n) as usize).collect();
    let pi = SimulProtocol::new(idx(n), idx(n), idx(2), idx(n), idx(n), alice, bob, referee).unwrap();
    let f = FunctionSpec::from_fn(idx(n), idx(n), idx(2), |x, y| (x == y) as usize).unwrap();
    (pi, f)
}

/// Error of a simultaneous protocol by summing over both messages.
fn simul_error(pi: &SimulProtocol, f: &FunctionSpec, x: usize, y: usize) -> f64 {
    let mut ok = 0.0;
    for (ma, pa) in pi.alice_law(x).iter().enumerate() {
        for (mb, pb) in pi.bob_law(y).iter().enumerate() {
            if f.accepts(x, y, pi.referee(ma, mb)) {
                ok += pa * pb;
            }
        }
    }
    1.0 - ok
}

#[test]
fn eq_like_instance_meets_the_error_bound() {
    let (pi, f) = eq_instance();
    let eps = 0.2;
    let rep = compress_simultaneous(&pi, &f, eps, 5).unwrap();
    let delta = (0..4).flat_map(|x| (0..4).map(move |y| (x, y))).map(|(x, y)| simul_error(&pi, &f, x, y)).fold(0.0, f64::max);
    assert!((rep.delta - delta).abs() < 1e-12);
    let mut worst: f64 = 0.0;
    for &x in rep.good_a() {
        for &y in rep.good_b() {
            worst = worst.max(simul_error(&rep.new_protocol, &f, x, y));
        }
    }
    assert!((rep.error_on_good - worst).abs() < 1e-12);
    assert!(worst <= delta + 4.0 * eps + 1e-9);
    assert!(3 * rep.good_a().len() >= 2 * 4 && 3 * rep.good_b().len() >= 2 * 4);
    assert!(rep.alice_bits() as f64 <= simul_bit_bound(rep.alice.information, 2, eps));
    assert_eq!(rep.n, 2);
}

#[test]
fn fixed_message_protocol_is_unchanged() {
    let pi = SimulProtocol::new(idx(3), idx(3), idx(2), idx(1), idx(1), vec![1.0; 3], vec![1.0; 3], vec![1]).unwrap();
    let f = FunctionSpec::from_fn(idx(3), idx(3), idx(2), |x, y| (x <= y) as usize).unwrap();
    let rep = compress_simultaneous(&pi, &f, 0.25, 0).unwrap();
    assert_eq!(rep.good_a(), &[0, 1, 2]);
    assert_eq!(rep.good_b(), &[0, 1, 2]);
    assert_eq!(rep.new_protocol, pi);
    assert_eq!(rep.error_on_good, rep.delta);
}

#[test]
fn input_independent_messages_cost_only_the_additive_terms() {
    let mut rng = StreamRng::seed_from_u64(6);
    let pi = random::random_simul_protocol(8, 5, 3, 2, 0.0, &mut rng).unwrap();
    let f = random::simul_majority_function(&pi).unwrap();
    let eps = 0.25;
    let rep = compress_simultaneous(&pi, &f, eps, 1).unwrap();
    assert!(rep.alice.information.abs() < 1e-12 && rep.bob.information.abs() < 1e-12);
    let bound = 1.0 / eps + 4f64.log2() + (1.0 / (eps * eps * (1.0 - eps))).log2() + 4.0;
    assert!(rep.alice_bits() as f64 <= bound && rep.bob_bits() as f64 <= bound);
    assert_eq!(rep.good_a().len(), 8);
}

#[test]
fn random_instances_satisfy_all_bounds() {
    let mut rng = StreamRng::seed_from_u64(7);
    for trial in 0..6 {
        let pi = random::random_simul_protocol(6, 4, 4, 2, 0.6, &mut rng).unwrap();
        let f = random::simul_majority_function(&pi).unwrap();
        let rep = compress_simultaneous(&pi, &f, 0.1, trial).unwrap();
        assert!(rep.max_error_increase <= 0.4 + 1e-9);
        for side in [&rep.alice, &rep.bob] {
            assert!(side.bits as f64 <= side.bit_bound);
            let thr = 3.0 * side.information;
            for (u, &s) in side.divergences.iter().enumerate() {
                assert_eq!(side.good.contains(&u), s <= thr + 1e-12);
            }
        }
    }
}

#[test]
fn simultaneous_compression_is_reproducible() {
    let (pi, f) = eq_instance();
    assert_eq!(compress_simultaneous(&pi, &f, 0.3, 9).unwrap(), compress_simultaneous(&pi, &f, 0.3, 9).unwrap());
}

// ---- round compression ----

/// `E[len]` by summing over every stopping index up to the cap.
fn brute_expected_bits(s: &LasVegasSampler, log2_cap: u32) -> f64 {
    let rate = 2f64.powf(-s.a());
    let cap = 1u64 << log2_cap;
    let mut total = 0.0;
    let mut survive = 1.0;
    for r in 1..=cap {
        let stop = survive * rate;
        let len = 2.0 * (63 - r.leading_zeros()) as f64 + 2.0;
        total += stop * ((1.0 - s.eps()) * len + s.eps());
        survive *= 1.0 - rate;
    }
    total + survive
}

#[test]
fn expected_codeword_bits_match_direct_sum() {
    let q = d(&[0.5, 0.3, 0.2]);
    let p = d(&[0.2, 0.2, 0.6]);
    for (a, cap) in [(1.5, 12), (3.0, 14), (2.0, 3)] {
        let s = LasVegasSampler::with_exponent(&p, &q, a).unwrap();
        let got = expected_codeword_bits(&s, cap);
        let want = brute_expected_bits(&s, cap);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        assert!(got <= 2.0 * a + 2.0 + 1e-12);
    }
}

fn shape(nx: usize, ny: usize, alphabets: Vec<usize>, sharpness: f64) -> ProtocolShape {
    ProtocolShape { nx, ny, nz: 2, alphabets, start: Party::Alice, sharpness }
}

#[test]
fn passes_must_run_last_to_first() {
    let mut rng = StreamRng::seed_from_u64(8);
    let pi = random::random_protocol(&shape(3, 3, vec![2, 2, 2], 0.7), &mut rng).unwrap();
    let mu = random::uniform_inputs(3, 3);
    let s = RoundCompressionState::new(&pi, 0.25, StreamCap::default()).unwrap();
    assert!(s.compress_round(&pi, &mu, 0).is_err());
    let s2 = s.compress_round(&pi, &mu, 2).unwrap();
    assert_eq!(s2.stage(), 2);
    // Untouched rounds stay uncompressed.
    assert!(s2.round(0).is_none() && s2.round(1).is_none());
    let s1 = s2.compress_round(&pi, &mu, 1).unwrap();
    assert_eq!(s1.round(2).unwrap().info, s2.round(2).unwrap().info);
    assert_eq!(s1.round(2).unwrap().reference, s2.round(2).unwrap().reference);
}

#[test]
fn pass_ledgers() {
    let mut rng = StreamRng::seed_from_u64(9);
    for _ in 0..10 {
        let pi = random::random_protocol(&shape(4, 3, vec![3, 2, 3], 0.9), &mut rng).unwrap();
        let f = random::majority_function(&pi).unwrap();
        let mu = random::random_joint(&[4, 3], &mut rng);
        let eps = 0.25;
        let k = 3.0;
        let mut state = RoundCompressionState::new(&pi, eps, StreamCap::default()).unwrap();
        let mut prev_err = state.expected_error_per_input(&pi, &f);
        let base: f64 = prev_err.iter().zip(mu.probs()).map(|(e, w)| e * w).sum();
        assert!((base - pi.evaluate_error(&f, &mu).unwrap().distributional).abs() < 1e-12);
        let mut prev_bits = state.expected_bits(&pi, &mu);
        for i in (0..3).rev() {
            state = state.compress_round(&pi, &mu, i).unwrap();
            let err = state.expected_error_per_input(&pi, &f);
            for (a, b) in err.iter().zip(&prev_err) {
                assert!(a - b <= eps / k + 1e-9);
            }
            let bits = state.expected_bits(&pi, &mu);
            for j in i + 1..3 {
                assert!(bits[j].unwrap() <= prev_bits[j].unwrap() + 1e-12);
            }
            let c = state.round(i).unwrap();
            assert!(bits[i].unwrap() <= 2.0 * k * (c.info + 1.0) / eps + 2.0 + 1e-9);
            for p in 0..c.samplers.len() {
                for u in 0..c.samplers[p].len() {
                    if c.weight[p][u] > 0.0 {
                        assert!(c.abort_probability(u, p) <= eps / k + 1e-9);
                        assert!(c.expected_bits(u, p) <= 2.0 * k * (c.divergence[p][u] + 1.0) / eps + 2.0 + 1e-9);
                    }
                }
            }
            prev_err = err;
            prev_bits = bits;
        }
        let ledger: f64 = state.per_round_info().iter().map(|a| a.unwrap()).sum();
        assert!((ledger - pi.information_cost(&mu).unwrap()).abs() < 1e-9);
        let total: f64 = prev_err.iter().zip(mu.probs()).map(|(e, w)| e * w).sum();
        assert!(total <= base + eps + 1e-9);
    }
}

#[test]
fn input_independent_round_has_no_bad_mass() {
    let mut rng = StreamRng::seed_from_u64(10);
    let pi = random::random_protocol(&shape(3, 3, vec![3, 3], 0.0), &mut rng).unwrap();
    let f = random::majority_function(&pi).unwrap();
    let mu = random::random_joint(&[3, 3], &mut rng);
    let eps = 0.5;
    let s = RoundCompressionState::new(&pi, eps, StreamCap::default()).unwrap();
    let s = s.compress_round(&pi, &mu, 1).unwrap();
    let c = s.round(1).unwrap();
    for p in 0..c.samplers.len() {
        for u in 0..3 {
            let sm = &c.samplers[p][u];
            assert_eq!(sm.eps(), 0.0);
            // Exponent k/eps: the index is geometric with rate 2^-(k/eps).
            assert!((sm.a() - 2.0 / eps).abs() < 1e-12);
            assert!((sm.pr_r_at_least(3.0) - (1.0 - 2f64.powf(-4.0)).powi(2)).abs() < 1e-12);
        }
    }
    let before = pi.evaluate_error(&f, &mu).unwrap().distributional;
    let after = s.expected_error(&pi, &f, &mu);
    assert!((after - before).abs() < 1e-12);
}

/// Alice sends `x`, Bob always sends 0, the output is the parity of `x`.
fn send_x(n: usize) -> ProtocolTree {
    let mut alice = vec![0.0; n * n];
    for x in 0..n {
        alice[x * n + x] = 1.0;
    }
    let bob: Vec<f64> = (0..n * n).flat_map(|_| [1.0, 0.0]).collect();
    ProtocolTree::new(
        idx(n),
        idx(n),
        idx(2),
        vec![Round::new(Party::Alice, idx(n), alice), Round::new(Party::Bob, idx(2), bob)],
        (0..n * 2).map(|t| Some(t / 2 % 2)).collect(),
    )
    .unwrap()
}

#[test]
fn deterministic_protocol_errors_only_by_stopping() {
    let pi = send_x(4);
    assert!(pi.is_deterministic());
    let f = FunctionSpec::from_fn(idx(4), idx(4), idx(2), |x, y| ((x + y) % 2 == 0) as usize).unwrap();
    let mu = random::uniform_inputs(4, 4);
    let eps = 0.25;
    let rep = match compress_multiround(&pi, &f, &mu, eps, StreamCap::default(), 8, 11) {
        Ok(r) => r,
        Err(Error::CoinBudgetExhausted { report, .. }) => *report,
        Err(e) => panic!("{e}"),
    };
    let coin = CoinRealization::draw(
        &{
            let mut s = RoundCompressionState::new(&pi, eps, StreamCap::default()).unwrap();
            for i in (0..2).rev() {
                s = s.compress_round(&pi, &mu, i).unwrap();
            }
            s
        },
        rep.coin_choice.index,
        rep.coin_choice.seed,
    )
    .unwrap();
    let mut want = 0.0;
    for x in 0..4 {
        for y in 0..4 {
            let run = coin.run(&pi, x, y, rep.bit_cap);
            let orig = pi.transcript_probs(x, y).iter().position(|&p| p == 1.0).unwrap();
            match run.transcript {
                Some(t) => {
                    assert_eq!(t, orig);
                    if !f.accepts(x, y, pi.output(t).unwrap()) {
                        want += 1.0 / 16.0;
                    }
                }
                None => want += 1.0 / 16.0,
            }
        }
    }
    assert!((rep.dist_error - want).abs() < 1e-12);
    // Point-mass laws are always good, so nothing stops with a dummy.
    assert_eq!(rep.coin_choice.abort_mass[AbortReason::Dummy as usize], 0.0);
}

fn check_report(rep: &MultiCompressionReport, pi: &ProtocolTree, f: &FunctionSpec, mu: &crate::prob::JointDist) {
    let k = rep.k as f64;
    let bound = 2.0 * k * (rep.information + 1.0) / (rep.eps * rep.eps) + 2.0 * k / rep.eps;
    assert!((rep.comm_bound - bound).abs() < 1e-12);
    assert!(rep.comm_bits as f64 <= bound);
    assert!((rep.info_ledger - pi.information_cost(mu).unwrap()).abs() < 1e-9);
    assert!(rep.final_protocol.is_deterministic());
    assert_eq!(extracted_comm_bits(rep), rep.comm_bits);
    let final_err = rep.final_protocol.evaluate_error(f, mu).unwrap().distributional;
    assert!(final_err <= rep.dist_error + 1e-12);
    assert!(rep.expected_error <= rep.delta + rep.eps + 1e-9);
}

#[test]
fn input_independent_protocol_compresses_within_bounds() {
    let mut rng = StreamRng::seed_from_u64(12);
    let pi = random::random_protocol(&shape(4, 4, vec![2, 3], 0.0), &mut rng).unwrap();
    let f = random::majority_function(&pi).unwrap();
    let mu = random::uniform_inputs(4, 4);
    let eps = 0.25;
    let rep = compress_multiround(&pi, &f, &mu, eps, StreamCap::default(), 16, 3).unwrap();
    assert!(rep.information.abs() < 1e-12);
    assert!(rep.comm_bits as f64 <= 2.0 * 2.0 / (eps * eps) + 2.0 * 2.0 / eps);
    assert!(rep.dist_error <= rep.delta + 2.0 * eps + 1e-9);
    check_report(&rep, &pi, &f, &mu);
}

#[test]
fn two_round_protocol_with_about_one_bit() {
    let mut rng = StreamRng::seed_from_u64(13);
    let mu = random::uniform_inputs(4, 4);
    let mut found = false;
    for _ in 0..40 {
        let pi = random::random_protocol(&shape(4, 4, vec![4, 4], 0.95), &mut rng).unwrap();
        let ic = pi.information_cost(&mu).unwrap();
        if !(0.7..=1.3).contains(&ic) {
            continue;
        }
        found = true;
        let f = random::majority_function(&pi).unwrap();
        let rep = compress_multiround(&pi, &f, &mu, 0.25, StreamCap::default(), 64, 4).unwrap();
        assert!(rep.dist_error <= rep.error_target + 1e-9);
        check_report(&rep, &pi, &f, &mu);
        // Recompute the chosen coin's error from scratch.
        let coins = &rep.coins;
        let best = coins.iter().map(|c| c.error).fold(f64::INFINITY, f64::min);
        assert_eq!(rep.dist_error, best);
        break;
    }
    assert!(found, "no instance with information near one bit");
}

#[test]
fn multiround_is_reproducible() {
    let mut rng = StreamRng::seed_from_u64(14);
    let pi = random::random_protocol(&shape(3, 3, vec![2, 2, 2], 0.8), &mut rng).unwrap();
    let f = random::majority_function(&pi).unwrap();
    let mu = random::uniform_inputs(3, 3);
    let run = || compress_multiround(&pi, &f, &mu, 0.25, StreamCap::default(), 8, 77).map(|r| (r.dist_error, r.coins, r.final_protocol));
    let (a, b) = (run(), run());
    match (a, b) {
        (Ok(a), Ok(b)) => assert_eq!(a, b),
        (Err(Error::CoinBudgetExhausted { best_error: x, .. }), Err(Error::CoinBudgetExhausted { best_error: y, .. })) => {
            assert_eq!(x, y)
        }
        _ => panic!("runs disagree"),
    }
}

#[test]
fn exhausted_budget_carries_the_best_report() {
    let mut rng = StreamRng::seed_from_u64(15);
    let pi = random::random_protocol(&shape(3, 3, vec![3, 3], 0.9), &mut rng).unwrap();
    let f = random::majority_function(&pi).unwrap();
    let mu = random::uniform_inputs(3, 3);
    // A one-position stream truncates almost every run.
    match compress_multiround(&pi, &f, &mu, 0.1, StreamCap::Log2(0), 2, 5) {
        Err(Error::CoinBudgetExhausted { best_error, target, report }) => {
            assert!(best_error > target);
            assert_eq!(report.dist_error, best_error);
            assert_eq!(report.coins.len(), 2);
        }
        other => panic!("expected an exhausted budget, got {:?}", other.map(|r| r.dist_error)),
    }
}
