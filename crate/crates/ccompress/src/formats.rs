//! JSON and CSV file formats.
//!
//! Input files are read through `serde_path_to_error`, so a malformed file
//! reports the JSON path of the offending field next to serde's line and
//! column. Semantic failures (probabilities that do not sum to one, a
//! missing policy row) are reported against the same file.
//!
//! Every float written by this crate goes through [`float`], which prints
//! 17 significant digits so that values round-trip exactly. Non-finite
//! values are written as the strings `"inf"`, `"-inf"` and `"nan"`.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use ccompress_core::prob::{Alphabet, Axis, FiniteDist, JointDist, PartitionedInput, ProductComponent};
use ccompress_core::protocol::{FunctionSpec, Party, ProtocolTree, Round, SimulProtocol};
use ccompress_core::quantum::{CMatrix, QuantumEnsemble, C64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use crate::{CliError, Result};

/// Separator between symbols in transcript labels and `accept`/`referee` keys.
pub const SEP: char = ',';

/// Reads and deserializes a JSON file with field-level diagnostics.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    parse_json(path, &text)
}

/// [`read_json`] on text already in memory; `path` only labels errors.
pub fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        CliError::Parse {
            path: path.into(),
            at: format!("{} (line {}, column {})", e.path(), inner.line(), inner.column()),
            msg: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| CliError::Parse {
        path: path.into(),
        at: format!("line {}, column {}", e.line(), e.column()),
        msg: e.to_string(),
    })?;
    Ok(value)
}

fn invalid(path: &Path, at: impl Into<String>, msg: impl ToString) -> CliError {
    CliError::Parse { path: path.into(), at: at.into(), msg: msg.to_string() }
}

/// `x` with 17 significant digits.
pub fn float(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&format_float(x)).expect("formatted float is a JSON number"))
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

/// The text form used by [`float`] and in CSV cells.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().copied().map(float).collect())
}

/// Rewrites every non-integer number in `v` with [`float`], so values built
/// with `json!` follow the same 17-digit convention.
pub fn normalize_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.as_u64().is_none() && n.as_i64().is_none() => {
            if let Some(x) = n.as_f64() {
                *v = float(x);
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(normalize_floats),
        Value::Object(m) => m.values_mut().for_each(normalize_floats),
        _ => {}
    }
}

fn alphabet(path: &Path, at: &str, symbols: &[String]) -> Result<Alphabet> {
    if let Some(s) = symbols.iter().find(|s| s.contains(SEP)) {
        return Err(invalid(path, at, format!("symbol {s:?} contains '{SEP}'")));
    }
    Alphabet::new(symbols.iter().cloned()).map_err(|e| invalid(path, at, e))
}

fn index(path: &Path, at: &str, a: &Alphabet, s: &str) -> Result<usize> {
    a.index_of(s).ok_or_else(|| invalid(path, at, format!("unknown symbol {s:?}")))
}

fn split_pair<'a>(path: &Path, at: &str, key: &'a str) -> Result<(&'a str, &'a str)> {
    key.split_once(SEP).ok_or_else(|| invalid(path, at, format!("key {key:?} is not of the form \"a{SEP}b\"")))
}

/// `{"alphabet": [...], "probs": [...]}` with `probs` parallel to `alphabet`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistFile {
    pub alphabet: Vec<String>,
    pub probs: Vec<f64>,
}

impl DistFile {
    pub fn from_dist(d: &FiniteDist) -> Self {
        DistFile { alphabet: d.alphabet().symbols().to_vec(), probs: d.probs().to_vec() }
    }

    pub fn to_dist(&self, path: &Path) -> Result<FiniteDist> {
        let a = alphabet(path, ".alphabet", &self.alphabet)?;
        FiniteDist::new(a, self.probs.clone()).map_err(|e| invalid(path, ".probs", e))
    }

    pub fn to_value(&self) -> Value {
        serde_json::json!({ "alphabet": self.alphabet, "probs": floats(&self.probs) })
    }
}

pub fn load_dist(path: &Path) -> Result<FiniteDist> {
    read_json::<DistFile>(path)?.to_dist(path)
}

/// `{"x": [...], "y": [...], "z": [...], "accept": {"x,y": [z, ...]}}`.
/// Every input pair needs an entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionFile {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
    pub accept: BTreeMap<String, Vec<String>>,
}

impl FunctionFile {
    pub fn from_spec(f: &FunctionSpec) -> Self {
        let (xa, ya, za) = (f.x_alphabet(), f.y_alphabet(), f.z_alphabet());
        let mut accept = BTreeMap::new();
        for x in 0..xa.len() {
            for y in 0..ya.len() {
                let zs = (0..za.len()).filter(|&z| f.accepts(x, y, z)).map(|z| za.symbol(z).to_string()).collect();
                accept.insert(format!("{}{SEP}{}", xa.symbol(x), ya.symbol(y)), zs);
            }
        }
        FunctionFile { x: xa.symbols().to_vec(), y: ya.symbols().to_vec(), z: za.symbols().to_vec(), accept }
    }

    pub fn to_spec(&self, path: &Path) -> Result<FunctionSpec> {
        let xa = alphabet(path, ".x", &self.x)?;
        let ya = alphabet(path, ".y", &self.y)?;
        let za = alphabet(path, ".z", &self.z)?;
        let mut table = vec![None; xa.len() * ya.len()];
        for (key, zs) in &self.accept {
            let at = format!(".accept[{key:?}]");
            let (xs, ys) = split_pair(path, &at, key)?;
            let cell = index(path, &at, &xa, xs)? * ya.len() + index(path, &at, &ya, ys)?;
            let zs = zs.iter().map(|z| index(path, &at, &za, z)).collect::<Result<Vec<_>>>()?;
            table[cell] = Some(zs);
        }
        let accept = table
            .into_iter()
            .enumerate()
            .map(|(c, zs)| {
                zs.ok_or_else(|| {
                    let key = format!("{}{SEP}{}", xa.symbol(c / ya.len()), ya.symbol(c % ya.len()));
                    invalid(path, ".accept", format!("no entry for input pair {key:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FunctionSpec::new(xa, ya, za, accept).map_err(|e| invalid(path, ".accept", e))
    }
}

pub fn load_function(path: &Path) -> Result<FunctionSpec> {
    read_json::<FunctionFile>(path)?.to_spec(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Alice,
    Bob,
}

impl From<Owner> for Party {
    fn from(o: Owner) -> Party {
        match o {
            Owner::Alice => Party::Alice,
            Owner::Bob => Party::Bob,
        }
    }
}

impl From<Party> for Owner {
    fn from(p: Party) -> Owner {
        match p {
            Party::Alice => Owner::Alice,
            Party::Bob => Owner::Bob,
        }
    }
}

pub fn party_name(p: Party) -> &'static str {
    match p {
        Party::Alice => "alice",
        Party::Bob => "bob",
    }
}

/// One round: `policy[input symbol][prefix label]` is the message law over
/// `alphabet`, where the prefix label joins the earlier messages with `,`
/// (`""` before the first message).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundFile {
    pub owner: Owner,
    pub alphabet: Vec<String>,
    pub policy: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

/// A private-coin protocol tree. `outputs` maps each full transcript label
/// to an output symbol, or `null` for transcripts that cannot occur.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
    pub rounds: Vec<RoundFile>,
    pub outputs: BTreeMap<String, Option<String>>,
}

/// Labels of all prefixes of length `len`, in index order.
fn prefix_labels(alphabets: &[Alphabet], len: usize) -> Vec<String> {
    let mut labels = vec![String::new()];
    for a in &alphabets[..len] {
        labels = labels
            .iter()
            .flat_map(|p| {
                a.symbols().iter().map(move |s| if p.is_empty() { s.clone() } else { format!("{p}{SEP}{s}") })
            })
            .collect();
    }
    labels
}

impl ProtocolFile {
    pub fn from_tree(pi: &ProtocolTree) -> Self {
        let alphabets: Vec<Alphabet> = pi.rounds().iter().map(|r| r.alphabet.clone()).collect();
        let rounds = pi
            .rounds()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let inputs = match r.owner {
                    Party::Alice => pi.x_alphabet(),
                    Party::Bob => pi.y_alphabet(),
                };
                let labels = prefix_labels(&alphabets, i);
                let policy = (0..inputs.len())
                    .map(|u| {
                        let rows = labels.iter().enumerate().map(|(p, l)| (l.clone(), pi.policy(i, u, p).to_vec())).collect();
                        (inputs.symbol(u).to_string(), rows)
                    })
                    .collect();
                RoundFile { owner: r.owner.into(), alphabet: r.alphabet.symbols().to_vec(), policy }
            })
            .collect();
        let outputs = prefix_labels(&alphabets, alphabets.len())
            .into_iter()
            .zip(pi.outputs())
            .map(|(l, o)| (l, o.map(|z| pi.z_alphabet().symbol(z).to_string())))
            .collect();
        ProtocolFile {
            x: pi.x_alphabet().symbols().to_vec(),
            y: pi.y_alphabet().symbols().to_vec(),
            z: pi.z_alphabet().symbols().to_vec(),
            rounds,
            outputs,
        }
    }

    pub fn to_tree(&self, path: &Path) -> Result<ProtocolTree> {
        let xa = alphabet(path, ".x", &self.x)?;
        let ya = alphabet(path, ".y", &self.y)?;
        let za = alphabet(path, ".z", &self.z)?;
        let alphabets = self
            .rounds
            .iter()
            .enumerate()
            .map(|(i, r)| alphabet(path, &format!(".rounds[{i}].alphabet"), &r.alphabet))
            .collect::<Result<Vec<_>>>()?;
        let mut rounds = Vec::with_capacity(self.rounds.len());
        for (i, r) in self.rounds.iter().enumerate() {
            let inputs = match r.owner {
                Owner::Alice => &xa,
                Owner::Bob => &ya,
            };
            let at = format!(".rounds[{i}].policy");
            check_keys(path, &at, r.policy.keys(), inputs.symbols())?;
            let labels = prefix_labels(&alphabets, i);
            let mut table = Vec::with_capacity(inputs.len() * labels.len() * alphabets[i].len());
            for u in inputs.symbols() {
                let rows = &r.policy[u];
                let at = format!("{at}[{u:?}]");
                check_keys(path, &at, rows.keys(), &labels)?;
                for l in &labels {
                    let row = &rows[l];
                    if row.len() != alphabets[i].len() {
                        return Err(invalid(
                            path,
                            format!("{at}[{l:?}]"),
                            format!("{} probabilities for {} messages", row.len(), alphabets[i].len()),
                        ));
                    }
                    table.extend_from_slice(row);
                }
            }
            rounds.push(Round::new(r.owner.into(), alphabets[i].clone(), table));
        }
        let labels = prefix_labels(&alphabets, alphabets.len());
        check_keys(path, ".outputs", self.outputs.keys(), &labels)?;
        let output = labels
            .iter()
            .map(|l| match &self.outputs[l] {
                Some(z) => index(path, &format!(".outputs[{l:?}]"), &za, z).map(Some),
                None => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        ProtocolTree::new(xa, ya, za, rounds, output).map_err(|e| invalid(path, "", e))
    }
}

/// The keys of a map must be exactly `want`.
fn check_keys<'a>(path: &Path, at: &str, keys: impl Iterator<Item = &'a String>, want: &[String]) -> Result<()> {
    let keys: Vec<&String> = keys.collect();
    if let Some(k) = keys.iter().find(|k| !want.contains(k)) {
        return Err(invalid(path, at, format!("unexpected key {k:?}")));
    }
    if let Some(w) = want.iter().find(|w| !keys.contains(w)) {
        return Err(invalid(path, at, format!("missing key {w:?}")));
    }
    Ok(())
}

pub fn load_protocol(path: &Path) -> Result<ProtocolTree> {
    read_json::<ProtocolFile>(path)?.to_tree(path)
}

/// A simultaneous-message protocol: per-input message laws for each party
/// and the referee's output for each message pair `"ma,mb"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulFile {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
    pub alice_messages: Vec<String>,
    pub bob_messages: Vec<String>,
    pub alice: BTreeMap<String, Vec<f64>>,
    pub bob: BTreeMap<String, Vec<f64>>,
    pub referee: BTreeMap<String, String>,
}

impl SimulFile {
    pub fn from_protocol(pi: &SimulProtocol) -> Self {
        let laws = |inputs: &Alphabet, law: &dyn Fn(usize) -> Vec<f64>| {
            (0..inputs.len()).map(|u| (inputs.symbol(u).to_string(), law(u))).collect()
        };
        let (ma, mb) = (pi.alice_messages(), pi.bob_messages());
        let mut referee = BTreeMap::new();
        for a in 0..ma.len() {
            for b in 0..mb.len() {
                referee
                    .insert(format!("{}{SEP}{}", ma.symbol(a), mb.symbol(b)), pi.z_alphabet().symbol(pi.referee(a, b)).to_string());
            }
        }
        SimulFile {
            x: pi.x_alphabet().symbols().to_vec(),
            y: pi.y_alphabet().symbols().to_vec(),
            z: pi.z_alphabet().symbols().to_vec(),
            alice_messages: ma.symbols().to_vec(),
            bob_messages: mb.symbols().to_vec(),
            alice: laws(pi.x_alphabet(), &|u| pi.alice_law(u).to_vec()),
            bob: laws(pi.y_alphabet(), &|u| pi.bob_law(u).to_vec()),
            referee,
        }
    }

    pub fn to_protocol(&self, path: &Path) -> Result<SimulProtocol> {
        let xa = alphabet(path, ".x", &self.x)?;
        let ya = alphabet(path, ".y", &self.y)?;
        let za = alphabet(path, ".z", &self.z)?;
        let ma = alphabet(path, ".alice_messages", &self.alice_messages)?;
        let mb = alphabet(path, ".bob_messages", &self.bob_messages)?;
        let table = |at: &str, inputs: &Alphabet, msgs: &Alphabet, laws: &BTreeMap<String, Vec<f64>>| -> Result<Vec<f64>> {
            check_keys(path, at, laws.keys(), inputs.symbols())?;
            let mut t = Vec::with_capacity(inputs.len() * msgs.len());
            for u in inputs.symbols() {
                let row = &laws[u];
                if row.len() != msgs.len() {
                    return Err(invalid(path, format!("{at}[{u:?}]"), format!("{} probabilities for {} messages", row.len(), msgs.len())));
                }
                t.extend_from_slice(row);
            }
            Ok(t)
        };
        let alice = table(".alice", &xa, &ma, &self.alice)?;
        let bob = table(".bob", &ya, &mb, &self.bob)?;
        let mut referee = vec![None; ma.len() * mb.len()];
        for (key, z) in &self.referee {
            let at = format!(".referee[{key:?}]");
            let (a, b) = split_pair(path, &at, key)?;
            referee[index(path, &at, &ma, a)? * mb.len() + index(path, &at, &mb, b)?] = Some(index(path, &at, &za, z)?);
        }
        let referee = referee
            .into_iter()
            .enumerate()
            .map(|(c, z)| {
                z.ok_or_else(|| {
                    let key = format!("{}{SEP}{}", ma.symbol(c / mb.len()), mb.symbol(c % mb.len()));
                    invalid(path, ".referee", format!("no entry for message pair {key:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SimulProtocol::new(xa, ya, za, ma, mb, alice, bob, referee).map_err(|e| invalid(path, "", e))
    }
}

pub fn load_simul(path: &Path) -> Result<SimulProtocol> {
    read_json::<SimulFile>(path)?.to_protocol(path)
}

/// One product component `mu_d = mu_X x mu_Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Input distribution over `X x Y`: either a joint table `probs[x][y]`, or a
/// mixture `kappa` of product `components` (which also fixes the partition
/// used for conditional information cost). Exactly one form must be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsFile {
    pub x: Vec<String>,
    pub y: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<ComponentFile>>,
}

/// A loaded input distribution, with its partition when one was given.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub mu: JointDist,
    pub partition: Option<PartitionedInput>,
}

impl InputsFile {
    pub fn to_inputs(&self, path: &Path) -> Result<Inputs> {
        let xa = alphabet(path, ".x", &self.x)?;
        let ya = alphabet(path, ".y", &self.y)?;
        match (&self.probs, &self.kappa, &self.components) {
            (Some(rows), None, None) => {
                if rows.len() != xa.len() || rows.iter().any(|r| r.len() != ya.len()) {
                    return Err(invalid(path, ".probs", format!("expected a {}x{} table", xa.len(), ya.len())));
                }
                let axes = vec![Axis::new("X", xa), Axis::new("Y", ya)];
                let mu = JointDist::new(axes, rows.concat()).map_err(|e| invalid(path, ".probs", e))?;
                Ok(Inputs { mu, partition: None })
            }
            (None, Some(kappa), Some(components)) => {
                let kappa = FiniteDist::from_probs(kappa.clone()).map_err(|e| invalid(path, ".kappa", e))?;
                let components = components.iter().map(|c| ProductComponent { x: c.x.clone(), y: c.y.clone() }).collect();
                let pm = PartitionedInput::from_components(xa, ya, kappa, components)
                    .map_err(|e| invalid(path, ".components", e))?;
                Ok(Inputs { mu: pm.mu().clone(), partition: Some(pm) })
            }
            _ => Err(invalid(path, "", "give either \"probs\" or both \"kappa\" and \"components\"")),
        }
    }
}

pub fn load_inputs(path: &Path) -> Result<Inputs> {
    read_json::<InputsFile>(path)?.to_inputs(path)
}

/// A saved ensemble: each basis as `m` rows of `m` `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub m: usize,
    pub k_exp: u32,
    pub n: usize,
    pub bases: Vec<Vec<Vec<[f64; 2]>>>,
}

impl EnsembleFile {
    pub fn from_ensemble(ens: &QuantumEnsemble) -> Self {
        let bases = ens
            .bases()
            .iter()
            .map(|b| (0..b.nrows()).map(|i| (0..b.ncols()).map(|j| [b[(i, j)].re, b[(i, j)].im]).collect()).collect())
            .collect();
        EnsembleFile { m: ens.m(), k_exp: ens.k_exp(), n: ens.n(), bases }
    }

    pub fn to_ensemble(&self, path: &Path) -> Result<QuantumEnsemble> {
        let m = self.m;
        let mut bases = Vec::with_capacity(self.bases.len());
        for (i, rows) in self.bases.iter().enumerate() {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(invalid(path, format!(".bases[{i}]"), format!("expected an {m}x{m} matrix")));
            }
            bases.push(CMatrix::from_fn(m, m, |r, c| C64::new(rows[r][c][0], rows[r][c][1])));
        }
        QuantumEnsemble::from_bases(m, self.k_exp, self.n, bases).map_err(|e| invalid(path, ".bases", e))
    }

    pub fn to_value(&self) -> Value {
        let bases = self
            .bases
            .iter()
            .map(|rows| {
                Value::Array(rows.iter().map(|r| Value::Array(r.iter().map(|z| floats(z)).collect())).collect())
            })
            .collect();
        serde_json::json!({ "m": self.m, "k_exp": self.k_exp, "n": self.n, "bases": Value::Array(bases) })
    }
}

/// A file written by `quantum ensemble --save`: the provenance header of
/// every output plus the ensemble under `"ensemble"`.
#[derive(Deserialize)]
struct SavedEnsemble {
    ensemble: EnsembleFile,
}

pub fn load_ensemble(path: &Path) -> Result<QuantumEnsemble> {
    read_json::<SavedEnsemble>(path)?.ensemble.to_ensemble(path)
}

/// Serializes `v` the way every output file is written: pretty-printed with
/// a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("a Value always serializes");
    s.push('\n');
    s
}

/// [`ProtocolFile`] as a `Value` with 17-digit floats.
pub fn protocol_value(pi: &ProtocolTree) -> Value {
    let mut v = serde_json::to_value(ProtocolFile::from_tree(pi)).expect("protocol file serializes");
    normalize_floats(&mut v);
    v
}

/// [`SimulFile`] as a `Value` with 17-digit floats.
pub fn simul_value(pi: &SimulProtocol) -> Value {
    let mut v = serde_json::to_value(SimulFile::from_protocol(pi)).expect("protocol file serializes");
    normalize_floats(&mut v);
    v
}
