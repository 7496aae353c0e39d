//! Seeded random instances for tests, experiments and the acceptance suite.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::prob::{Alphabet, Axis, FiniteDist, JointDist, PartitionedInput, ProductComponent};
use crate::protocol::{FunctionSpec, Party, ProtocolTree, Round, SimulProtocol};
use crate::Result;

/// A flat Dirichlet draw (uniform on the simplex).
pub fn simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// A simplex draw where each entry is zeroed with probability `sparsity`
/// (at least one entry survives).
pub fn sparse_simplex<R: Rng + ?Sized>(n: usize, sparsity: f64, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            if rng.random::<f64>() < sparsity { 0.0 } else { e }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// `(1 - s) * uniform + s * simplex draw`: `s` controls how much a message
/// law can depend on the input.
pub fn blended<R: Rng + ?Sized>(n: usize, sharpness: f64, rng: &mut R) -> Vec<f64> {
    let d = simplex(n, rng);
    d.iter().map(|p| (1.0 - sharpness) / n as f64 + sharpness * p).collect()
}

pub fn random_dist<R: Rng + ?Sized>(n: usize, rng: &mut R) -> FiniteDist {
    FiniteDist::from_probs(simplex(n, rng)).expect("simplex draw is a distribution")
}

pub fn random_joint<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> JointDist {
    let axes = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| Axis::indexed(alloc::format!("V{i}"), n).expect("non-empty axis"))
        .collect();
    JointDist::new(axes, simplex(sizes.iter().product(), rng)).expect("simplex draw is a distribution")
}

pub fn uniform_inputs(nx: usize, ny: usize) -> JointDist {
    let axes = vec![Axis::indexed("X", nx).expect("nx > 0"), Axis::indexed("Y", ny).expect("ny > 0")];
    JointDist::new(axes, vec![1.0 / (nx * ny) as f64; nx * ny]).expect("uniform")
}

/// Shape of a random protocol.
#[derive(Clone, Debug)]
pub struct ProtocolShape {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub alphabets: Vec<usize>,
    pub start: Party,
    /// In `[0, 1]`; 0 gives input-independent uniform messages.
    pub sharpness: f64,
}

/// A random private-coin protocol with a random output table.
pub fn random_protocol<R: Rng + ?Sized>(shape: &ProtocolShape, rng: &mut R) -> Result<ProtocolTree> {
    let mut rounds = Vec::with_capacity(shape.alphabets.len());
    let mut prefixes = 1usize;
    let mut owner = shape.start;
    for &n in &shape.alphabets {
        let inputs = if owner == Party::Alice { shape.nx } else { shape.ny };
        let mut policy = Vec::with_capacity(inputs * prefixes * n);
        for _ in 0..inputs * prefixes {
            policy.extend(blended(n, shape.sharpness, rng));
        }
        rounds.push(Round::new(owner, Alphabet::indexed(n)?, policy));
        prefixes *= n;
        owner = owner.other();
    }
    let output = (0..prefixes).map(|_| Some(rng.random_range(0..shape.nz))).collect();
    ProtocolTree::new(
        Alphabet::indexed(shape.nx)?,
        Alphabet::indexed(shape.ny)?,
        Alphabet::indexed(shape.nz)?,
        rounds,
        output,
    )
}

/// The function whose value at `(x, y)` is the protocol's most likely answer
/// (lowest index on ties), so the protocol errs with probability below
/// `1 - 1/|Z|` on every input.
pub fn majority_function(pi: &ProtocolTree) -> Result<FunctionSpec> {
    let nz = pi.z_alphabet().len();
    let f = |x: usize, y: usize| {
        let mut votes = vec![0.0; nz];
        for (t, p) in pi.transcript_probs(x, y).iter().enumerate() {
            if let Some(z) = pi.output(t) {
                votes[z] += p;
            }
        }
        argmax(&votes)
    };
    FunctionSpec::from_fn(pi.x_alphabet().clone(), pi.y_alphabet().clone(), pi.z_alphabet().clone(), f)
}

/// Majority answer of a simultaneous protocol.
pub fn simul_majority_function(pi: &SimulProtocol) -> Result<FunctionSpec> {
    let nz = pi.z_alphabet().len();
    let f = |x: usize, y: usize| {
        let mut votes = vec![0.0; nz];
        for (ma, pa) in pi.alice_law(x).iter().enumerate() {
            for (mb, pb) in pi.bob_law(y).iter().enumerate() {
                votes[pi.referee(ma, mb)] += pa * pb;
            }
        }
        argmax(&votes)
    };
    FunctionSpec::from_fn(pi.x_alphabet().clone(), pi.y_alphabet().clone(), pi.z_alphabet().clone(), f)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// A random simultaneous protocol with `n` inputs per side.
pub fn random_simul_protocol<R: Rng + ?Sized>(
    n: usize,
    alice_messages: usize,
    bob_messages: usize,
    nz: usize,
    sharpness: f64,
    rng: &mut R,
) -> Result<SimulProtocol> {
    let alice = (0..n).flat_map(|_| blended(alice_messages, sharpness, rng)).collect();
    let bob = (0..n).flat_map(|_| blended(bob_messages, sharpness, rng)).collect();
    let referee = (0..alice_messages * bob_messages).map(|_| rng.random_range(0..nz)).collect();
    SimulProtocol::new(
        Alphabet::indexed(n)?,
        Alphabet::indexed(n)?,
        Alphabet::indexed(nz)?,
        Alphabet::indexed(alice_messages)?,
        Alphabet::indexed(bob_messages)?,
        alice,
        bob,
        referee,
    )
}

/// A random mixture of `nk` product distributions.
pub fn random_partitioned_input<R: Rng + ?Sized>(
    nx: usize,
    ny: usize,
    nk: usize,
    rng: &mut R,
) -> Result<PartitionedInput> {
    let kappa = random_dist(nk, rng);
    let components = (0..nk)
        .map(|_| ProductComponent { x: sparse_simplex(nx, 0.3, rng), y: sparse_simplex(ny, 0.3, rng) })
        .collect();
    PartitionedInput::from_components(Alphabet::indexed(nx)?, Alphabet::indexed(ny)?, kappa, components)
}
