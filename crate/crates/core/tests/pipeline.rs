//! End-to-end runs through the public API: decomposition feeding the
//! samplers, both compressors checked from outside, and the bound and
//! quantum layers on small instances.

use ccompress_core::compress::{compress_multiround, compress_simultaneous, extracted_comm_bits, simul_bit_bound};
use ccompress_core::direct_sum::{multiround_bound, superadditivity_experiment};
use ccompress_core::prob::{entropy_of, relative_entropy, total_variation, FiniteDist};
use ccompress_core::protocol::{Party, DEFAULT_MAX_CELLS};
use ccompress_core::quantum::{build_ensemble, incompressibility_trial, SubspaceKind};
use ccompress_core::random::{self, ProtocolShape};
use ccompress_core::rng::derive_stream;
use ccompress_core::sampler::{las_vegas_sampler, rejection_pair, LasVegasSampler, StreamCap};
use ccompress_core::substate::decompose;
use ccompress_core::Error;

#[test]
fn substate_feeds_the_samplers() {
    for t in 0..200u64 {
        let mut rng = derive_stream(100, &[t]);
        let p = random::random_dist(6, &mut rng);
        let q = random::random_dist(6, &mut rng);
        let r = 2.0;
        let dec = decompose(&p, &q, r).unwrap();
        assert!(dec.p_good >= 1.0 - 1.0 / r - 1e-12);
        assert!(total_variation(&p, &dec.p_tilde).unwrap() <= 2.0 / r + 1e-12);
        // alpha P~ <= Q is exactly the domination the rejection pair needs.
        let a = -dec.alpha.log2();
        let pair = rejection_pair(&dec.p_tilde, &q, a).unwrap();
        assert!((pair.accept_rate() - dec.alpha).abs() < 1e-12);
        for (x, y) in pair.accepted_law().iter().zip(dec.p_tilde.probs()) {
            assert!((x - y).abs() < 1e-10);
        }
        // Las-Vegas output law at the sampler's own exponent.
        let s = LasVegasSampler::with_r(&p, &q, r).unwrap();
        let law = s.output_law();
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((law[0] - (1.0 - dec.p_good)).abs() < 1e-12);
        assert!((s.expected_r() - 2f64.powf(s.a())).abs() <= 1e-9 * s.expected_r());
    }
}

#[test]
fn las_vegas_target_error_is_met() {
    let p = FiniteDist::from_probs(vec![0.6, 0.3, 0.1]).unwrap();
    let q = FiniteDist::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
    let a = relative_entropy(&p, &q).unwrap();
    for eps in [0.05, 0.2, 0.5] {
        let s = las_vegas_sampler(&p, &q, eps).unwrap();
        assert!(s.output_law()[0] <= eps + 1e-12);
        assert!(s.a() >= a);
    }
}

#[test]
fn simultaneous_compression_from_outside() {
    let mut rng = derive_stream(101, &[]);
    let pi = random::random_simul_protocol(8, 4, 4, 2, 0.7, &mut rng).unwrap();
    let f = random::simul_majority_function(&pi).unwrap();
    let eps = 0.2;
    let rep = compress_simultaneous(&pi, &f, eps, 9).unwrap();
    assert_eq!(rep.n, 3);
    for side in [&rep.alice, &rep.bob] {
        assert!((side.bit_bound - simul_bit_bound(side.information, 3, eps)).abs() < 1e-12);
        assert!(side.bits as f64 <= side.bit_bound);
        assert!(3 * side.good.len() >= 16);
    }
    assert!(rep.error_on_good <= rep.delta + 4.0 * eps + 1e-9);
    assert_eq!(compress_simultaneous(&pi, &f, eps, 9).unwrap(), rep);
}

#[test]
fn multiround_compression_from_outside() {
    let shape = ProtocolShape { nx: 4, ny: 4, nz: 2, alphabets: vec![3, 3], start: Party::Alice, sharpness: 0.8 };
    let mu = random::uniform_inputs(4, 4);
    let mut done = 0;
    for t in 0..6u64 {
        let mut rng = derive_stream(102, &[t]);
        let pi = random::random_protocol(&shape, &mut rng).unwrap();
        let f = random::majority_function(&pi).unwrap();
        let eps = 0.25;
        match compress_multiround(&pi, &f, &mu, eps, StreamCap::default(), 32, t) {
            Ok(rep) => {
                let ic = pi.information_cost(&mu).unwrap();
                assert!((rep.info_ledger - ic).abs() < 1e-9);
                assert!(rep.comm_bits as f64 <= 4.0 * (ic + 1.0) / (eps * eps) + 4.0 / eps);
                assert_eq!(extracted_comm_bits(&rep), rep.comm_bits);
                let err = rep.final_protocol.evaluate_error(&f, &mu).unwrap().distributional;
                assert!(err <= rep.delta + 2.0 * eps + 1e-9);
                done += 1;
            }
            Err(Error::CoinBudgetExhausted { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(done >= 5);
}

#[test]
fn superadditivity_feeds_the_bound() {
    let mut rng = derive_stream(103, &[]);
    let shape = ProtocolShape { nx: 2, ny: 2, nz: 2, alphabets: vec![2, 2], start: Party::Alice, sharpness: 0.9 };
    let pi = random::random_protocol(&shape, &mut rng).unwrap();
    let pm = random::random_partitioned_input(2, 2, 2, &mut rng).unwrap();
    for m in [2, 3] {
        let rep = superadditivity_experiment(&pi, &pm, m, DEFAULT_MAX_CELLS).unwrap();
        assert!((rep.tensor - m as f64 * rep.single).abs() <= 1e-9);
    }
    let h = entropy_of(pm.kappa().probs());
    let b = multiround_bound(10, 2, 0.5, 0.1, 100.0, h).unwrap();
    assert!(b.is_consistent());
    assert!((b.bound - 10.0 * (100.0 / 16.0 - 2.0 - h)).abs() < 1e-12);
}

#[test]
fn quantum_ensemble_and_incompressibility() {
    let ens = build_ensemble(64, 1, 16, 104).unwrap();
    let check = ens.check().unwrap();
    assert!(check.holds(), "{check:?}");
    let rep = incompressibility_trial(&ens, 2, 3, 5).unwrap();
    assert!(rep.hypotheses.iter().all(|h| !h.holds));
    for o in &rep.outcomes {
        assert!((0.0..=1.0).contains(&o.fraction));
        if let SubspaceKind::WithinBlock { .. } = o.kind {
            assert!((o.max_value - 1.0).abs() < 1e-9);
        }
    }
}
