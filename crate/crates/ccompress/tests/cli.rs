//! The binary end to end: golden outputs, exit codes, determinism, and
//! reports re-checked against the library.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ccompress::formats::{load_function, load_inputs, load_protocol, load_simul, parse_json, ProtocolFile};
use ccompress_core::compress::compress_simultaneous;
use ccompress_core::direct_sum::multiround_bound;
use ccompress_core::prob::entropy_of;
use serde_json::Value;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccompress")).current_dir(data()).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccompress"))
        .current_dir(data())
        .env("CCOMPRESS_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

const INFO_COST: &[&str] =
    &["info-cost", "--protocol", "eq_protocol.json", "--function", "eq_function.json", "--inputs", "mixture_inputs.json"];

#[test]
fn golden_outputs_are_reproduced() {
    let cases: [(&str, Vec<&str>); 4] = [
        ("info_cost.json", INFO_COST.to_vec()),
        (
            "bounds_multiround.json",
            vec![
                "bounds", "--kind", "multiround", "--copies", "10", "--rounds", "2", "--eps", "0.5", "--delta", "0.1", "--c-value", "100",
                "--inputs", "mixture_inputs.json",
            ],
        ),
        ("tails.csv", vec!["quantum", "tails", "--dim", "128", "--subdim", "2", "--blocks", "4", "--trials", "500", "--seed", "11"]),
        ("substate.json", vec!["substate", "--p", "p.json", "--q", "q.json", "--r", "2"]),
    ];
    for (golden, args) in cases {
        let out = run(&args);
        assert!(out.status.success());
        let want = std::fs::read_to_string(data().join("golden").join(golden)).unwrap();
        assert_eq!(String::from_utf8(out.stdout).unwrap(), want, "{golden}");
    }
}

#[test]
fn info_cost_equals_library_call() {
    let v = json_of(&run(INFO_COST));
    let r = &v["result"];
    let pi = load_protocol(&data().join("eq_protocol.json")).unwrap();
    let fs = load_function(&data().join("eq_function.json")).unwrap();
    let inputs = load_inputs(&data().join("mixture_inputs.json")).unwrap();
    let pm = inputs.partition.as_ref().unwrap();
    assert_eq!(f(&r["information_cost"]), pi.information_cost(&inputs.mu).unwrap());
    assert_eq!(f(&r["conditional_information_cost"]), pi.conditional_information_cost(pm).unwrap());
    assert_eq!(r["communication_cost"], 2);
    let err = pi.evaluate_error(&fs, &inputs.mu).unwrap();
    assert_eq!(f(&r["error_report"]["distributional"]), err.distributional);
    assert_eq!(f(&r["error_report"]["per_input"]["1,0"]), err.per_input[2]);
    // The conditional cost sits within H(kappa) below the plain cost.
    let h = entropy_of(pm.kappa().probs());
    assert!(f(&r["conditional_information_cost"]) >= f(&r["information_cost"]) - h - 1e-9);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["command"], "info-cost");
    assert!(v["seed"].is_u64());
}

#[test]
fn malformed_inputs_exit_2_with_field_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"alphabet\": [\"a\", \"b\"],\n \"probs\": [0.5, \"x\"]}").unwrap();
    let out = run(&["substate", "--p", bad.to_str().unwrap(), "--q", "q.json", "--r", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("probs[1]") && err.contains("line 2"), "{err}");

    std::fs::write(&bad, "{\"alphabet\": [\"a\"], \"probs\": [1.0]").unwrap();
    let out = run(&["substate", "--p", bad.to_str().unwrap(), "--q", "q.json", "--r", "2"]);
    assert_eq!(out.status.code(), Some(2));

    // Well-formed JSON, invalid content.
    let mut proto: Value = serde_json::from_str(&std::fs::read_to_string(data().join("eq_protocol.json")).unwrap()).unwrap();
    proto["rounds"][0]["policy"]["1"][""] = serde_json::json!([0.5, 0.6]);
    let p = dir.path().join("proto.json");
    std::fs::write(&p, proto.to_string()).unwrap();
    let out = run(&["info-cost", "--protocol", p.to_str().unwrap(), "--function", "eq_function.json", "--inputs", "uniform_inputs.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["info-cost", "--protocol", "missing.json", "--function", "eq_function.json", "--inputs", "uniform_inputs.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["bounds", "--kind", "simul", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["quantum", "ensemble", "--dim", "6", "--kexp", "2", "--states", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rounds_report_satisfies_its_bounds() {
    let out = run(&[
        "compress", "--mode", "rounds", "--protocol", "eq_protocol.json", "--function", "eq_function.json", "--inputs",
        "uniform_inputs.json", "--eps", "0.25", "--seed", "5",
    ]);
    let v = json_of(&out);
    let r = &v["result"];
    let k = r["k"].as_u64().unwrap() as f64;
    let (eps, a) = (f(&r["eps"]), f(&r["information"]));
    assert!((f(&r["comm_bound"]) - (2.0 * k * (a + 1.0) / (eps * eps) + 2.0 * k / eps)).abs() < 1e-9);
    assert!(r["comm_bits"].as_u64().unwrap() as f64 <= f(&r["comm_bound"]));
    assert!(f(&r["dist_error"]) <= f(&r["delta"]) + 2.0 * eps + 1e-9);
    assert!((f(&r["info_ledger"]) - a).abs() < 1e-9);
    let ledger: f64 = r["per_round"].as_array().unwrap().iter().map(|p| f(&p["a_i"])).sum();
    assert!((ledger - a).abs() < 1e-9);

    // The embedded protocol is loadable and has the reported error.
    let pf: ProtocolFile = parse_json(Path::new("report"), &r["final_protocol"].to_string()).unwrap();
    let fin = pf.to_tree(Path::new("report")).unwrap();
    assert!(fin.is_deterministic());
    let fs = load_function(&data().join("eq_function.json")).unwrap();
    let mu = load_inputs(&data().join("uniform_inputs.json")).unwrap().mu;
    let err = fin.evaluate_error(&fs, &mu).unwrap().distributional;
    assert!((err - f(&r["dist_error"])).abs() < 1e-12);
    // Codewords along every reachable transcript stay within comm_bits.
    let reach = fin.reachable();
    for t in (0..reach.len()).filter(|&t| reach[t]) {
        let msgs = fin.decode_prefix(t, fin.round_count());
        let mut p = 0;
        let mut bits = 0;
        for (i, &s) in msgs.iter().enumerate() {
            bits += r["codebook"][i][p][s]["codeword"].as_str().unwrap().len() as u64;
            p = p * fin.rounds()[i].alphabet.len() + s;
        }
        assert!(bits <= r["comm_bits"].as_u64().unwrap());
    }
}

#[test]
fn budget_exhaustion_writes_report_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = run(&[
        "compress", "--mode", "rounds", "--protocol", "eq_protocol.json", "--function", "eq_function.json", "--inputs",
        "uniform_inputs.json", "--eps", "0.1", "--budget", "1", "--tmax", "0", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["status"], "budget-exhausted");
    assert!(f(&v["result"]["dist_error"]) > f(&v["result"]["error_target"]));
}

#[test]
fn simul_mode_matches_library_and_handles_zero_information() {
    let args = [
        "compress", "--mode", "simul", "--protocol", "simul_protocol.json", "--function", "simul_function.json", "--eps", "0.2",
        "--seed", "9",
    ];
    let r = json_of(&run(&args))["result"].clone();
    let pi = load_simul(&data().join("simul_protocol.json")).unwrap();
    let fs = load_function(&data().join("simul_function.json")).unwrap();
    let rep = compress_simultaneous(&pi, &fs, 0.2, 9).unwrap();
    assert_eq!(r["alice"]["bits"], rep.alice.bits);
    assert_eq!(r["bob"]["bits"], rep.bob.bits);
    assert_eq!(f(&r["error_on_good"]), rep.error_on_good);

    // Input-independent messages carry no information.
    let dir = tempfile::tempdir().unwrap();
    let mut flat: Value = serde_json::from_str(&std::fs::read_to_string(data().join("simul_protocol.json")).unwrap()).unwrap();
    for side in ["alice", "bob"] {
        for u in ["0", "1", "2", "3"] {
            flat[side][u] = serde_json::json!([0.5, 0.5]);
        }
    }
    let p = dir.path().join("flat.json");
    std::fs::write(&p, flat.to_string()).unwrap();
    let mut args = args.to_vec();
    args[4] = p.to_str().unwrap();
    let r = json_of(&run(&args))["result"].clone();
    for side in ["alice", "bob"] {
        assert!(f(&r[side]["information"]).abs() < 1e-12);
        let n = r["n"].as_u64().unwrap() as f64;
        let eps = 0.2f64;
        let bound = 1.0 / eps + (n + 1.0).log2() + (1.0 / (eps * eps * (1.0 - eps))).log2() + 4.0;
        assert!((f(&r[side]["bit_bound"]) - bound).abs() < 1e-9);
        assert!(r[side]["bits"].as_u64().unwrap() as f64 <= bound);
    }
}

#[test]
fn bounds_match_the_library() {
    let v = json_of(&run(&[
        "bounds", "--kind", "multiround", "--copies", "7", "--rounds", "3", "--eps", "0.3", "--delta", "0.05", "--c-value", "400",
        "--h-kappa", "0.5",
    ]));
    let b = multiround_bound(7, 3, 0.3, 0.05, 400.0, 0.5).unwrap();
    assert_eq!(f(&v["result"]["bound"]), b.bound);
    assert_eq!(v["result"]["provenance"], b.provenance.describe());

    let v = json_of(&run(&["bounds", "--kind", "simul", "--copies", "4", "--n", "3", "--eps", "0.5", "--r-tilde", "1"]));
    assert_eq!(v["result"]["vacuous"], true);

    let v = json_of(&run(&[
        "bounds", "--kind", "superadditivity", "--protocol", "eq_protocol.json", "--inputs", "mixture_inputs.json", "--copies", "3",
    ]));
    assert!(f(&v["result"]["residual"]).abs() <= 1e-9);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let cases: [Vec<&str>; 4] = [
        vec![
            "compress", "--mode", "rounds", "--protocol", "eq_protocol.json", "--function", "eq_function.json", "--inputs",
            "uniform_inputs.json", "--eps", "0.25",
        ],
        vec!["quantum", "tails", "--dim", "64", "--trials", "1000", "--blocks", "2"],
        vec!["quantum", "incompress", "--dim", "16", "--kexp", "1", "--states", "8", "--samples", "3"],
        vec!["sample", "--p", "p.json", "--q", "q.json", "--eps", "0.3", "--draws", "40"],
    ];
    for args in cases {
        let a = run_env(&args, "1");
        let b = run_env(&args, "4");
        let c = run(&args);
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stdout, c.stdout, "{args:?}");
    }
}

#[test]
fn quantum_outputs() {
    let out = run(&["quantum", "ensemble", "--dim", "8", "--kexp", "0", "--states", "4", "--seed", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert!(lines.next().unwrap().starts_with("m,k_exp,n,quantity"));
    for l in lines {
        assert!(l.contains(",true,"), "{l}");
    }

    // A saved ensemble is reloaded by `incompress`.
    let dir = tempfile::tempdir().unwrap();
    let save = dir.path().join("ens.json");
    let out = run(&["quantum", "ensemble", "--dim", "16", "--kexp", "1", "--states", "8", "--save", save.to_str().unwrap()]);
    assert!(out.status.success());
    let a = run(&["quantum", "incompress", "--ensemble", save.to_str().unwrap(), "--samples", "2", "--seed", "3", "--format", "json"]);
    let r = json_of(&a)["result"].clone();
    assert_eq!(r["m"], 16);
    assert_eq!(r["outcomes"].as_array().unwrap().len(), 6);

    // Unmet hypotheses are warnings, not failures.
    let out = run(&["quantum", "tails", "--dim", "64", "--subdim", "4", "--blocks", "8", "--trials", "50"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}
