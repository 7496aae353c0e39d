//! Command execution and output rendering.
//!
//! Every output carries the tool version, the config echo and the root
//! seed. Nothing time- or machine-dependent is written, so the same config
//! always yields the same bytes. The output path is not part of the config:
//! writing the same run to two files gives two identical files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use ccompress_core::compress::{compress_multiround, compress_simultaneous, MultiCompressionReport, PartyCompression, Slot};
use ccompress_core::direct_sum::{ic_lower_bound_from_c, multiround_bound, simul_bound, superadditivity_experiment, BoundReport};
use ccompress_core::prob::{entropy_of, Alphabet};
use ccompress_core::protocol::{ProtocolTree, SearchLimits, DEFAULT_MAX_CELLS};
use ccompress_core::quantum::{
    incompressibility_trial, Hypothesis, SubspaceKind, TailExperiment, TailReport, ENTROPY_TOL, MEAN_TOL, TRACE_TOL, UNIT_TOL,
};
use ccompress_core::rng::derive_stream;
use ccompress_core::sampler::{las_vegas_sampler, Outcome, StreamCap};
use ccompress_core::substate::decompose;
use ccompress_core::Error as CoreError;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::cli::{
    BoundKind, BoundsArgs, Cli, Command, CompressArgs, EnsembleArgs, Format, IncompressArgs, InfoCostArgs, Mode, QuantumCommand,
    SampleArgs, SubstateArgs, TailKind, TailsArgs,
};
use crate::formats::{
    self, float, format_float, load_dist, load_function, load_inputs, load_protocol, load_simul, normalize_floats, party_name,
    protocol_value, simul_value, DistFile, EnsembleFile, SEP,
};
use crate::runners;
use crate::{exit, CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The resolved configuration of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: &'static str,
    /// `{command, args, inputs: {role: {path, sha256}}, format}`.
    pub echo: Value,
    pub seed: u64,
    /// `"flag"` or `"config-hash"`.
    pub seed_source: &'static str,
    pub format: Format,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    /// Echoes the arguments, fingerprints the input files, and derives the
    /// default seed from the first 8 bytes of the SHA-256 of the compact echo.
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let format = cli.format.unwrap_or_else(|| cli.command.default_format());
        let mut args = serde_json::to_value(&cli.command).map_err(|e| CliError::Config(e.to_string()))?;
        normalize_floats(&mut args);
        let mut inputs = Map::new();
        for (role, path) in cli.command.input_files() {
            let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.into(), source })?;
            inputs.insert(role.into(), json!({ "path": path.display().to_string(), "sha256": sha256_hex(&bytes) }));
        }
        let echo = json!({ "command": cli.command.name(), "args": args, "inputs": inputs, "format": format });
        let (seed, seed_source) = match cli.seed {
            Some(s) => (s, "flag"),
            None => {
                let text = serde_json::to_string(&echo).expect("echo serializes");
                let h = Sha256::digest(text.as_bytes());
                (u64::from_be_bytes(h[..8].try_into().expect("32-byte digest")), "config-hash")
            }
        };
        Ok(RunConfig { command: cli.command.name(), echo, seed, seed_source, format })
    }

    fn header(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("tool".into(), json!("ccompress"));
        m.insert("version".into(), json!(VERSION));
        m.insert("config".into(), self.echo.clone());
        m.insert("seed".into(), json!(self.seed));
        m.insert("seed_source".into(), json!(self.seed_source));
        m
    }
}

/// Rows of a CSV output.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// What a command produced, before rendering.
#[derive(Clone, Debug)]
pub enum Body {
    Json(Value),
    /// A result with both a JSON and a tabular form.
    Table { json: Value, table: Table },
    /// JSON lines after a header line.
    Lines(Vec<Value>),
}

/// A finished run: the rendered main output, any side files, warnings for
/// standard error, and the failure to report once everything is written.
#[derive(Debug)]
pub struct Rendered {
    pub main: String,
    pub side_files: Vec<(PathBuf, String)>,
    pub warnings: Vec<String>,
    pub failure: Option<CliError>,
}

struct Produced {
    status: &'static str,
    body: Body,
    side_files: Vec<(PathBuf, String)>,
    warnings: Vec<String>,
    failure: Option<CliError>,
}

impl Produced {
    fn ok(body: Body) -> Self {
        Produced { status: "ok", body, side_files: Vec::new(), warnings: Vec::new(), failure: None }
    }
}

/// Runs the command and renders its output; nothing is written yet.
pub fn execute(cli: &Cli) -> Result<Rendered> {
    let cfg = RunConfig::resolve(cli)?;
    let pool = runners::thread_pool()?;
    let out = pool.install(|| dispatch(&cli.command, &cfg))?;
    let main = render(&cfg, out.status, out.body)?;
    Ok(Rendered { main, side_files: out.side_files, warnings: out.warnings, failure: out.failure })
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Produced> {
    match cmd {
        Command::InfoCost(a) => info_cost(a),
        Command::Compress(a) => compress(a, cfg.seed),
        Command::Bounds(a) => bounds(a),
        Command::Substate(a) => substate(a),
        Command::Sample(a) => sample(a, cfg),
        Command::Quantum(QuantumCommand::Tails(a)) => tails(a, cfg.seed),
        Command::Quantum(QuantumCommand::Ensemble(a)) => ensemble(a, cfg),
        Command::Quantum(QuantumCommand::Incompress(a)) => incompress(a, cfg.seed),
    }
}

fn render(cfg: &RunConfig, status: &str, body: Body) -> Result<String> {
    let mut head = cfg.header();
    head.insert("status".into(), json!(status));
    match (cfg.format, body) {
        (Format::Json, Body::Json(result) | Body::Table { json: result, .. }) => {
            head.insert("result".into(), result);
            let mut v = Value::Object(head);
            normalize_floats(&mut v);
            Ok(formats::to_pretty(&v))
        }
        (Format::Csv, Body::Table { table, .. }) => {
            let comment = serde_json::to_string(&Value::Object(head)).expect("header serializes");
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.header).map_err(csv_error)?;
            for r in &table.rows {
                w.write_record(r).map_err(csv_error)?;
            }
            let data = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
            Ok(format!("# {comment}\n{}", String::from_utf8(data).expect("CSV of UTF-8 fields")))
        }
        (Format::Json, Body::Lines(lines)) => {
            let mut s = serde_json::to_string(&Value::Object(head)).expect("header serializes");
            s.push('\n');
            for mut l in lines {
                normalize_floats(&mut l);
                s.push_str(&serde_json::to_string(&l).expect("line serializes"));
                s.push('\n');
            }
            Ok(s)
        }
        (Format::Csv, _) => Err(CliError::Config(format!("`{}` has no csv output; use --format json", cfg.command))),
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |source| CliError::Io { path: path.into(), source };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Executes, writes every output, and returns the process exit code.
/// Errors and warnings go to standard error.
pub fn run(cli: &Cli) -> i32 {
    let rendered = match execute(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    for w in &rendered.warnings {
        eprintln!("warning: {w}");
    }
    let written = rendered
        .side_files
        .iter()
        .try_for_each(|(p, s)| write_atomic(p, s))
        .and_then(|()| match &cli.out {
            Some(p) => write_atomic(p, &rendered.main),
            None => std::io::stdout()
                .write_all(rendered.main.as_bytes())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
        });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match rendered.failure {
        Some(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        None => exit::SUCCESS,
    }
}

fn pair_key(x: &Alphabet, y: &Alphabet, c: usize) -> String {
    format!("{}{SEP}{}", x.symbol(c / y.len()), y.symbol(c % y.len()))
}

fn info_cost(a: &InfoCostArgs) -> Result<Produced> {
    let pi = load_protocol(&a.protocol)?;
    let f = load_function(&a.function)?;
    let inputs = load_inputs(&a.inputs)?;
    let err = pi.evaluate_error(&f, &inputs.mu)?;
    let (xa, ya) = (pi.x_alphabet(), pi.y_alphabet());
    let per_input: Map<String, Value> =
        err.per_input.iter().enumerate().map(|(c, &e)| (pair_key(xa, ya, c), float(e))).collect();
    let (cic, h) = match &inputs.partition {
        Some(pm) => (float(pi.conditional_information_cost(pm)?), float(entropy_of(pm.kappa().probs()))),
        None => (Value::Null, Value::Null),
    };
    Ok(Produced::ok(Body::Json(json!({
        "information_cost": float(pi.information_cost(&inputs.mu)?),
        "conditional_information_cost": cic,
        "h_kappa": h,
        "communication_cost": pi.communication_cost(),
        "rounds": pi.round_count(),
        "error_report": {
            "worst_case": float(err.worst_case),
            "distributional": float(err.distributional),
            "per_input": per_input,
        },
    }))))
}

fn compress(a: &CompressArgs, seed: u64) -> Result<Produced> {
    let f = load_function(&a.function)?;
    match a.mode {
        Mode::Simul => {
            if a.inputs.is_some() {
                return Err(CliError::Config("--mode simul compresses under uniform inputs; drop --inputs".into()));
            }
            let pi = load_simul(&a.protocol)?;
            let rep = compress_simultaneous(&pi, &f, a.eps, seed)?;
            Ok(Produced::ok(Body::Json(json!({
                "mode": "simul",
                "n": rep.n,
                "eps": float(rep.eps),
                "delta": float(rep.delta),
                "error_on_good": float(rep.error_on_good),
                "error_target": float(rep.delta + 4.0 * rep.eps),
                "max_error_increase": float(rep.max_error_increase),
                "alice": party_json(&rep.alice, pi.x_alphabet()),
                "bob": party_json(&rep.bob, pi.y_alphabet()),
                "new_protocol": simul_value(&rep.new_protocol),
            }))))
        }
        Mode::Rounds => {
            let path = a.inputs.as_ref().ok_or_else(|| CliError::Config("--mode rounds needs --inputs".into()))?;
            let inputs = load_inputs(path)?;
            let pi = load_protocol(&a.protocol)?;
            let cap = a.tmax.map_or(StreamCap::default(), StreamCap::Log2);
            match compress_multiround(&pi, &f, &inputs.mu, a.eps, cap, a.budget, seed) {
                Ok(rep) => Ok(Produced::ok(Body::Json(multi_json(&rep, &pi)))),
                Err(CoreError::CoinBudgetExhausted { best_error, target, report }) => Ok(Produced {
                    status: "budget-exhausted",
                    body: Body::Json(multi_json(&report, &pi)),
                    side_files: Vec::new(),
                    warnings: Vec::new(),
                    failure: Some(CliError::SearchExhausted(format!(
                        "no coin realization among {} reached error {} (best {})",
                        a.budget,
                        format_float(target),
                        format_float(best_error)
                    ))),
                }),
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn party_json(p: &PartyCompression, inputs: &Alphabet) -> Value {
    let div: Map<String, Value> =
        p.divergences.iter().enumerate().map(|(u, &d)| (inputs.symbol(u).to_string(), float(d))).collect();
    json!({
        "information": float(p.information),
        "bits": p.bits,
        "bit_bound": float(p.bit_bound),
        "good": p.good.iter().map(|&u| inputs.symbol(u)).collect::<Vec<_>>(),
        "divergences": div,
        "support": {
            "t_max": p.sample.t_max.to_string(),
            "attempts": p.sample.attempts,
            "deviation": float(p.sample.deviation),
        },
    })
}

fn bits_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn slot_json(s: &Slot, messages: &Alphabet) -> Value {
    json!({
        "codeword": bits_string(s.codeword.bits()),
        "index": s.index.as_ref().map(|j| j.to_string()),
        "message": s.message.map(|m| messages.symbol(m)),
    })
}

fn multi_json(rep: &MultiCompressionReport, pi: &ProtocolTree) -> Value {
    let coin = |c: &ccompress_core::compress::CoinOutcome| {
        json!({
            "index": c.index,
            "seed": c.seed,
            "error": float(c.error),
            "comm_bits": c.comm_bits,
            "abort_mass": { "dummy": float(c.abort_mass[0]), "truncated": float(c.abort_mass[1]), "overflow": float(c.abort_mass[2]) },
        })
    };
    let per_round: Vec<Value> = rep
        .per_round
        .iter()
        .map(|r| {
            json!({
                "i": r.round,
                "owner": party_name(r.owner),
                "a_i": float(r.info),
                "expected_bits": float(r.expected_bits),
                "expected_bits_bound": float(r.expected_bits_bound),
                "abort_prob": float(r.abort_prob),
            })
        })
        .collect();
    let codebook: Vec<Value> = rep
        .codebook
        .iter()
        .enumerate()
        .map(|(i, prefixes)| {
            let msgs = &pi.rounds()[i].alphabet;
            Value::Array(prefixes.iter().map(|slots| Value::Array(slots.iter().map(|s| slot_json(s, msgs)).collect())).collect())
        })
        .collect();
    json!({
        "mode": "rounds",
        "k": rep.k,
        "eps": float(rep.eps),
        "delta": float(rep.delta),
        "error_target": float(rep.error_target),
        "information": float(rep.information),
        "info_ledger": float(rep.info_ledger),
        "comm_bits": rep.comm_bits,
        "comm_bound": float(rep.comm_bound),
        "bit_cap": rep.bit_cap,
        "dist_error": float(rep.dist_error),
        "expected_error": float(rep.expected_error),
        "per_round": per_round,
        "seed": rep.seed,
        "coin_choice": coin(&rep.coin_choice),
        "coins_tried": rep.coins.len(),
        "coins": rep.coins.iter().map(coin).collect::<Vec<_>>(),
        "codebook": codebook,
        "final_protocol": protocol_value(&rep.final_protocol),
    })
}

fn need<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| CliError::Config(format!("--kind {kind} needs {flag}")))
}

fn need_path<'a>(v: &'a Option<PathBuf>, flag: &str, kind: &str) -> Result<&'a Path> {
    v.as_deref().ok_or_else(|| CliError::Config(format!("--kind {kind} needs {flag}")))
}

fn bound_json(b: &BoundReport) -> Value {
    json!({
        "m": b.m,
        "k": b.k,
        "n": b.n,
        "eps": float(b.eps),
        "delta": float(b.delta),
        "c_value": float(b.c_value),
        "h_kappa": float(b.h_kappa),
        "bound": float(b.bound),
        "vacuous": b.vacuous,
        "provenance": b.provenance.describe(),
    })
}

fn bounds(a: &BoundsArgs) -> Result<Produced> {
    let body = match a.kind {
        BoundKind::Multiround => {
            let eps = need(a.eps, "--eps", "multiround")?;
            let c = need(a.c_value, "--c-value", "multiround")?;
            let from_file = match &a.inputs {
                Some(p) => load_inputs(p)?.partition.map(|pm| entropy_of(pm.kappa().probs())),
                None => None,
            };
            let h = match (a.h_kappa, from_file) {
                (Some(_), Some(_)) => return Err(CliError::Config("give --h-kappa or a partitioned --inputs, not both".into())),
                (Some(h), None) | (None, Some(h)) => h,
                (None, None) => 0.0,
            };
            bound_json(&multiround_bound(a.copies, a.rounds, eps, a.delta, c, h)?)
        }
        BoundKind::Simul => {
            let eps = need(a.eps, "--eps", "simul")?;
            let r = need(a.r_tilde, "--r-tilde", "simul")?;
            let n = need(a.n, "--n", "simul")?;
            bound_json(&simul_bound(a.copies, n, eps, a.delta, r)?)
        }
        BoundKind::Ic => {
            let eps = need(a.eps, "--eps", "ic")?;
            let f = load_function(need_path(&a.function, "--function", "ic")?)?;
            let inputs = load_inputs(need_path(&a.inputs, "--inputs", "ic")?)?;
            let k = usize::try_from(a.rounds).map_err(|_| CliError::Config("--rounds is too large".into()))?;
            let ic = ic_lower_bound_from_c(&f, &inputs.mu, a.delta, eps, k, a.bits_per_round, SearchLimits::default())?;
            let witness = match &a.protocol {
                Some(p) => {
                    let pi = load_protocol(p)?;
                    let info = pi.information_cost(&inputs.mu)?;
                    let error = pi.evaluate_error(&f, &inputs.mu)?.distributional;
                    let applies = error <= a.delta && pi.round_count() as u64 <= a.rounds;
                    json!({
                        "information_cost": float(info),
                        "error": float(error),
                        "rounds": pi.round_count(),
                        "bound_applies": applies,
                        "consistent": !applies || info >= ic.bound - 1e-9,
                    })
                }
                None => Value::Null,
            };
            json!({
                "k": a.rounds,
                "eps": float(eps),
                "delta": float(a.delta),
                "bits_per_round": a.bits_per_round,
                "target_error": float(a.delta + 2.0 * eps),
                "c_value": ic.c_value,
                "bound": float(ic.bound),
                "vacuous": ic.vacuous,
                "witness": witness,
            })
        }
        BoundKind::Superadditivity => {
            let pi = load_protocol(need_path(&a.protocol, "--protocol", "superadditivity")?)?;
            let inputs = load_inputs(need_path(&a.inputs, "--inputs", "superadditivity")?)?;
            let pm = inputs
                .partition
                .ok_or_else(|| CliError::Config("--kind superadditivity needs inputs given as kappa + components".into()))?;
            let m = usize::try_from(a.copies).map_err(|_| CliError::Config("--copies is too large".into()))?;
            let r = superadditivity_experiment(&pi, &pm, m, DEFAULT_MAX_CELLS)?;
            json!({
                "m": r.m,
                "single": float(r.single),
                "tensor": float(r.tensor),
                "m_times_single": float(r.m as f64 * r.single),
                "residual": float(r.residual),
                "h_kappa": float(r.h_kappa),
            })
        }
    };
    Ok(Produced::ok(Body::Json(body)))
}

fn substate(a: &SubstateArgs) -> Result<Produced> {
    let p = load_dist(&a.p)?;
    let q = load_dist(&a.q)?;
    let d = decompose(&p, &q, a.r)?;
    Ok(Produced::ok(Body::Json(json!({
        "a": float(d.a),
        "r": float(d.r),
        "good": d.good.iter().map(|&i| p.alphabet().symbol(i)).collect::<Vec<_>>(),
        "p_good": float(d.p_good),
        "alpha": float(d.alpha),
        "p_tilde": DistFile::from_dist(&d.p_tilde).to_value(),
    }))))
}

fn sample(a: &SampleArgs, cfg: &RunConfig) -> Result<Produced> {
    if cfg.format != Format::Json {
        return Err(CliError::Config("`sample` writes JSON lines; use --format json".into()));
    }
    let p = load_dist(&a.p)?;
    let q = load_dist(&a.q)?;
    let s = las_vegas_sampler(&p, &q, a.eps)?;
    let cap = a.tmax.map_or(StreamCap::default(), StreamCap::Log2);
    let log2_cap = cap.log2_for(s.a());
    let seed = cfg.seed;
    let draws: Vec<u64> = (0..a.draws).collect();
    let traces = runners::par_map(&draws, |&j| s.run(&mut derive_stream(seed, &[j]), cap))
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut lines = vec![json!({
        "sampler": {
            "a": float(s.a()),
            "stop_rate": float(s.stop_rate()),
            "expected_r": float(s.expected_r()),
            "abort_probability": float(s.output_law()[0]),
            "log2_cap": log2_cap,
            "capped_abort_probability": float(s.capped_abort_probability(log2_cap)),
        }
    })];
    for (j, t) in traces.iter().enumerate() {
        let y = match t.stop.y {
            Outcome::Symbol(i) => json!(p.alphabet().symbol(i)),
            Outcome::Abort => json!(0),
        };
        lines.push(json!({ "j": j, "r": t.stop.r, "y": y }));
    }
    Ok(Produced::ok(Body::Lines(lines)))
}

fn hypotheses_json(h: &[Hypothesis]) -> Value {
    Value::Array(h.iter().map(|h| json!({ "name": h.name, "holds": h.holds })).collect())
}

fn hypothesis_warnings(what: &str, h: &[Hypothesis]) -> Vec<String> {
    h.iter().filter(|h| !h.holds).map(|h| format!("{what}: hypothesis `{}` does not hold; run is exploratory", h.name)).collect()
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

fn tails(a: &TailsArgs, seed: u64) -> Result<Produced> {
    let exps = match a.experiment {
        TailKind::All => vec![TailExperiment::Overlap, TailExperiment::Orthopair, TailExperiment::SubspaceEnergy],
        TailKind::Overlap => vec![TailExperiment::Overlap],
        TailKind::Orthopair => vec![TailExperiment::Orthopair],
        TailKind::Energy => vec![TailExperiment::SubspaceEnergy],
    };
    let reports =
        exps.iter().map(|&e| runners::run_tails(e, a.dim, a.subdim, a.blocks, a.trials, seed)).collect::<Result<Vec<TailReport>>>()?;
    let header = vec![
        "experiment",
        "m",
        "d",
        "l",
        "event",
        "threshold",
        "analytic_bound",
        "empirical_freq",
        "band",
        "hits",
        "trials",
        "holds",
        "hypotheses_hold",
        "seed",
    ];
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut json_reports = Vec::new();
    for r in &reports {
        warnings.extend(hypothesis_warnings(r.experiment.name(), &r.hypotheses));
        for e in &r.events {
            rows.push(vec![
                r.experiment.name().to_string(),
                r.m.to_string(),
                r.d.to_string(),
                r.l.to_string(),
                e.name.clone(),
                format_float(e.threshold),
                format_float(e.bound),
                format_float(e.frequency()),
                format_float(e.band()),
                e.hits.to_string(),
                e.trials.to_string(),
                bool_cell(e.holds()),
                bool_cell(r.hypotheses_hold()),
                r.seed.to_string(),
            ]);
        }
        let events: Vec<Value> = r
            .events
            .iter()
            .map(|e| {
                json!({
                    "event": e.name,
                    "threshold": float(e.threshold),
                    "analytic_bound": float(e.bound),
                    "empirical_freq": float(e.frequency()),
                    "band": float(e.band()),
                    "hits": e.hits,
                    "trials": e.trials,
                    "holds": e.holds(),
                })
            })
            .collect();
        json_reports.push(json!({
            "experiment": r.experiment.name(),
            "m": r.m,
            "d": r.d,
            "l": r.l,
            "trials": r.trials,
            "seed": r.seed,
            "hypotheses": hypotheses_json(&r.hypotheses),
            "mean_diag": float(r.mean_diag),
            "mean_stat": float(r.mean_stat),
            "events": events,
        }));
    }
    let mut out = Produced::ok(Body::Table { json: json!({ "experiments": json_reports }), table: Table { header, rows } });
    out.warnings = warnings;
    Ok(out)
}

fn ensemble(a: &EnsembleArgs, cfg: &RunConfig) -> Result<Produced> {
    let ens = runners::build_ensemble(a.dim, a.kexp, a.states, cfg.seed)?;
    let check = ens.check()?;
    let k = f64::from(a.kexp);
    // (quantity, block, expected, observed-or-defect, tolerance)
    let mut items: Vec<(&str, Option<usize>, f64, f64, f64)> = vec![
        ("max_l |Tr M_l rho_l - 1|", None, 0.0, check.trace_defect, TRACE_TOL),
        ("max_l |Tr rho_l - 1|", None, 0.0, check.unit_trace_defect, TRACE_TOL),
        ("max |mean rho_l - I/m|", None, 0.0, check.mean_defect, MEAN_TOL),
        ("max |B^* B - I|", None, 0.0, check.basis_defect, UNIT_TOL),
    ];
    for (l, &s) in check.divergences.iter().enumerate() {
        items.push(("S(rho_l || rho)", Some(l), k, s, ENTROPY_TOL));
    }
    let header = vec!["m", "k_exp", "n", "quantity", "block", "expected", "observed", "defect", "tolerance", "holds", "seed"];
    let mut rows = Vec::with_capacity(items.len());
    let mut json_items = Vec::with_capacity(items.len());
    for &(q, l, expected, observed, tol) in &items {
        let defect = (observed - expected).abs();
        rows.push(vec![
            a.dim.to_string(),
            a.kexp.to_string(),
            a.states.to_string(),
            q.to_string(),
            l.map_or(String::new(), |l| l.to_string()),
            format_float(expected),
            format_float(observed),
            format_float(defect),
            format_float(tol),
            bool_cell(defect <= tol),
            cfg.seed.to_string(),
        ]);
        json_items.push(json!({
            "quantity": q,
            "block": l,
            "expected": float(expected),
            "observed": float(observed),
            "defect": float(defect),
            "tolerance": float(tol),
            "holds": defect <= tol,
        }));
    }
    let json = json!({ "m": a.dim, "k_exp": a.kexp, "n": a.states, "holds": check.holds(), "checks": json_items });
    let mut out = Produced::ok(Body::Table { json, table: Table { header, rows } });
    if let Some(p) = &a.save {
        let mut head = cfg.header();
        head.insert("ensemble".into(), EnsembleFile::from_ensemble(&ens).to_value());
        // The saved file is itself loadable: the ensemble fields sit under
        // "ensemble" next to the provenance header.
        out.side_files.push((p.clone(), formats::to_pretty(&Value::Object(head))));
    }
    Ok(out)
}

fn incompress(a: &IncompressArgs, seed: u64) -> Result<Produced> {
    let ens = match &a.ensemble {
        Some(p) => formats::load_ensemble(p)?,
        None => runners::build_ensemble(a.dim.unwrap_or(64), a.kexp.unwrap_or(1), a.states.unwrap_or(16), seed)?,
    };
    let rep = incompressibility_trial(&ens, a.subdim, a.samples, seed)?;
    let header = vec![
        "m", "k_exp", "n", "d", "sample", "kind", "block", "defeated", "fraction", "max_value", "mean_value", "threshold", "seed",
    ];
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    let mut per_kind: BTreeMap<&str, usize> = BTreeMap::new();
    for o in &rep.outcomes {
        let (kind, block) = match o.kind {
            SubspaceKind::Haar => ("haar", None),
            SubspaceKind::WithinBlock { block } => ("within-block", Some(block)),
            SubspaceKind::AcrossBlocks => ("across-blocks", None),
        };
        let s = per_kind.entry(kind).or_insert(0);
        rows.push(vec![
            rep.m.to_string(),
            rep.k_exp.to_string(),
            rep.n.to_string(),
            rep.d.to_string(),
            s.to_string(),
            kind.to_string(),
            block.map_or(String::new(), |b: usize| b.to_string()),
            o.defeated.to_string(),
            format_float(o.fraction),
            format_float(o.max_value),
            format_float(o.mean_value),
            format_float(rep.threshold),
            rep.seed.to_string(),
        ]);
        outcomes.push(json!({
            "sample": *s,
            "kind": kind,
            "block": block,
            "defeated": o.defeated,
            "fraction": float(o.fraction),
            "max_value": float(o.max_value),
            "mean_value": float(o.mean_value),
        }));
        *s += 1;
    }
    let json = json!({
        "m": rep.m,
        "k_exp": rep.k_exp,
        "n": rep.n,
        "d": rep.d,
        "threshold": float(rep.threshold),
        "hypotheses": hypotheses_json(&rep.hypotheses),
        "union_bound_ln": float(rep.union_bound_ln),
        "outcomes": outcomes,
    });
    let mut out = Produced::ok(Body::Table { json, table: Table { header, rows } });
    out.warnings = hypothesis_warnings("incompress", &rep.hypotheses);
    Ok(out)
}
