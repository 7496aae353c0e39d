//! Exhaustive search for the cheapest deterministic `k`-round protocol.
//!
//! A deterministic protocol splits the current input rectangle: in each
//! round the owner partitions its side into at most `2^b` labelled blocks.
//! After the last round the output is the best single answer for the
//! rectangle. The minimal distributional error for a fixed bit allocation
//! is a memoized recursion over `(Alice mask, Bob mask, round)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{FunctionSpec, Party};
use crate::prob::JointDist;
use crate::{Error, Result};

/// Guard on instance size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_inputs: usize,
    pub max_rounds: usize,
    pub max_bits_per_round: u32,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { max_inputs: 4, max_rounds: 2, max_bits_per_round: 2 }
    }
}

struct Search<'a> {
    f: &'a FunctionSpec,
    mu: &'a [f64],
    ny: usize,
    alloc: Vec<u32>,
    start: Party,
    memo: BTreeMap<(u32, u32, usize), f64>,
}

impl Search<'_> {
    fn leaf_error(&self, xm: u32, ym: u32) -> f64 {
        let nz = self.f.z_alphabet().len();
        let mut mass = 0.0;
        let mut good = vec![0.0; nz];
        for x in bits(xm) {
            for y in bits(ym) {
                let w = self.mu[x * self.ny + y];
                mass += w;
                for (z, ok) in self.f.acceptable(x, y).iter().enumerate() {
                    if *ok {
                        good[z] += w;
                    }
                }
            }
        }
        mass - good.iter().copied().fold(0.0, f64::max)
    }

    fn best(&mut self, xm: u32, ym: u32, i: usize) -> f64 {
        if xm == 0 || ym == 0 {
            return 0.0;
        }
        if i == self.alloc.len() {
            return self.leaf_error(xm, ym);
        }
        if let Some(&e) = self.memo.get(&(xm, ym, i)) {
            return e;
        }
        let owner = if i.is_multiple_of(2) { self.start } else { self.start.other() };
        let blocks = 1usize << self.alloc[i];
        let side = if owner == Party::Alice { xm } else { ym };
        let elems: Vec<usize> = bits(side).collect();
        let mut best = f64::INFINITY;
        for_each_partition(elems.len(), blocks, &mut |labels, used| {
            let mut total = 0.0;
            for b in 0..used {
                let mask = elems
                    .iter()
                    .zip(labels)
                    .filter(|(_, &l)| l == b)
                    .fold(0u32, |m, (&e, _)| m | (1 << e));
                total += if owner == Party::Alice {
                    self.best(mask, ym, i + 1)
                } else {
                    self.best(xm, mask, i + 1)
                };
            }
            best = best.min(total);
        });
        self.memo.insert((xm, ym, i), best);
        best
    }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |&i| mask >> i & 1 == 1)
}

/// Calls `visit(labels, block_count)` for every set partition of `n`
/// elements into at most `max_blocks` blocks (restricted growth strings).
fn for_each_partition(n: usize, max_blocks: usize, visit: &mut dyn FnMut(&[usize], usize)) {
    fn rec(i: usize, used: usize, labels: &mut Vec<usize>, max: usize, visit: &mut dyn FnMut(&[usize], usize)) {
        if i == labels.len() {
            visit(labels, used);
            return;
        }
        for l in 0..=used.min(max - 1) {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), labels, max, visit);
        }
    }
    let mut labels = vec![0; n];
    rec(0, 0, &mut labels, max_blocks, visit);
}

/// Least communication of a deterministic protocol with at most `k`
/// alternating rounds of at most `bits_per_round` bits each, either party
/// starting, whose distributional error under `mu` is at most `delta`.
pub fn brute_force_c(
    f: &FunctionSpec,
    mu: &JointDist,
    delta: f64,
    k: usize,
    bits_per_round: u32,
    limits: SearchLimits,
) -> Result<u32> {
    let (nx, ny) = (f.x_alphabet().len(), f.y_alphabet().len());
    if nx > limits.max_inputs || ny > limits.max_inputs {
        return Err(Error::InstanceTooLarge(format!("{nx}x{ny} inputs")));
    }
    if k > limits.max_rounds || bits_per_round > limits.max_bits_per_round {
        return Err(Error::InstanceTooLarge(format!("{k} rounds of {bits_per_round} bits")));
    }
    if mu.sizes() != [nx, ny] {
        return Err(Error::RangeMismatch("input distribution has the wrong shape".into()));
    }
    let full_x = (1u32 << nx) - 1;
    let full_y = (1u32 << ny) - 1;
    for cost in 0..=(k as u32 * bits_per_round) {
        for alloc in allocations(k, bits_per_round, cost) {
            for start in [Party::Alice, Party::Bob] {
                let mut s = Search { f, mu: mu.probs(), ny, alloc: alloc.clone(), start, memo: BTreeMap::new() };
                if s.best(full_x, full_y, 0) <= delta + 1e-12 {
                    return Ok(cost);
                }
            }
        }
    }
    Err(Error::Infeasible)
}

/// All `k`-tuples in `0..=max` summing to `total`.
fn allocations(k: usize, max: u32, total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0; k];
    fn rec(i: usize, left: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for b in 0..=max.min(left) {
            cur[i] = b;
            rec(i + 1, left - b, max, cur, out);
        }
    }
    rec(0, total, max, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Alphabet, Axis};

    fn uniform(nx: usize, ny: usize) -> JointDist {
        let axes = vec![Axis::indexed("X", nx).unwrap(), Axis::indexed("Y", ny).unwrap()];
        JointDist::new(axes, vec![1.0 / (nx * ny) as f64; nx * ny]).unwrap()
    }

    fn eq(n: usize) -> FunctionSpec {
        let a = Alphabet::indexed(n).unwrap();
        FunctionSpec::from_fn(a.clone(), a, Alphabet::indexed(2).unwrap(), |x, y| (x == y) as usize).unwrap()
    }

    #[test]
    fn partitions_are_counted_by_bell_numbers() {
        let mut count = 0;
        for_each_partition(4, 4, &mut |_, _| count += 1);
        assert_eq!(count, 15);
        count = 0;
        for_each_partition(4, 2, &mut |_, _| count += 1);
        assert_eq!(count, 8);
    }

    #[test]
    fn constant_function_is_free() {
        let a = Alphabet::indexed(3).unwrap();
        let f = FunctionSpec::from_fn(a.clone(), a, Alphabet::indexed(2).unwrap(), |_, _| 1).unwrap();
        assert_eq!(brute_force_c(&f, &uniform(3, 3), 0.0, 1, 1, SearchLimits::default()).unwrap(), 0);
    }

    #[test]
    fn equality_on_one_bit() {
        let f = eq(2);
        let mu = uniform(2, 2);
        // One round: the answer depends on both inputs but only one party speaks.
        assert!(matches!(
            brute_force_c(&f, &mu, 0.0, 1, 2, SearchLimits::default()),
            Err(Error::Infeasible)
        ));
        assert_eq!(brute_force_c(&f, &mu, 0.0, 2, 1, SearchLimits::default()).unwrap(), 2);
        // Answering "different" blindly errs with probability 1/2.
        assert_eq!(brute_force_c(&f, &mu, 0.5, 2, 1, SearchLimits::default()).unwrap(), 0);
        assert_eq!(brute_force_c(&f, &mu, 1.0, 1, 1, SearchLimits::default()).unwrap(), 0);
    }

    #[test]
    fn equality_on_two_bits() {
        let f = eq(4);
        let mu = uniform(4, 4);
        assert_eq!(brute_force_c(&f, &mu, 0.0, 2, 2, SearchLimits::default()).unwrap(), 3);
        // Error 1/4 is reached by answering "different" without talking.
        assert_eq!(brute_force_c(&f, &mu, 0.25, 2, 2, SearchLimits::default()).unwrap(), 0);
    }

    #[test]
    fn guard() {
        let f = eq(5);
        assert!(matches!(
            brute_force_c(&f, &uniform(5, 5), 0.0, 1, 1, SearchLimits::default()),
            Err(Error::InstanceTooLarge(_))
        ));
        assert!(matches!(
            brute_force_c(&eq(2), &uniform(2, 2), 0.0, 3, 1, SearchLimits::default()),
            Err(Error::InstanceTooLarge(_))
        ));
    }
}
