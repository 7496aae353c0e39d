use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{ProtocolTree, Round};
use crate::prob::partition::tensor_alphabet;
use crate::{Error, Result};

/// Digits of `v` in base `n`, `m` of them, most significant first.
fn digits(mut v: usize, n: usize, m: usize) -> Vec<usize> {
    let mut d = vec![0; m];
    for slot in d.iter_mut().rev() {
        *slot = v % n;
        v /= n;
    }
    d
}

fn undigits(d: impl IntoIterator<Item = usize>, n: usize) -> usize {
    d.into_iter().fold(0, |acc, x| acc * n + x)
}

/// `m` independent copies of `pi` run side by side: round `i` of the result
/// carries the tuple of the copies' round-`i` messages. Inputs, messages and
/// outputs are tuples indexed with the first copy most significant.
pub fn tensor_protocol(pi: &ProtocolTree, m: usize, max_cells: usize) -> Result<ProtocolTree> {
    if m == 0 {
        return Err(Error::Parameter("tensor power must be at least 1".into()));
    }
    if m == 1 {
        return Ok(pi.clone());
    }
    let k = pi.round_count();
    let pow = |n: usize| n.checked_pow(m as u32);
    let mut cells = 0usize;
    for i in 0..k {
        let r = &pi.rounds()[i];
        let c = pow(pi.input_count(r.owner))
            .zip(pow(pi.prefix_count(i)))
            .zip(pow(r.alphabet.len()))
            .and_then(|((a, b), c)| a.checked_mul(b)?.checked_mul(c));
        cells = c.and_then(|c| cells.checked_add(c)).unwrap_or(usize::MAX);
    }
    let transcripts = pow(pi.transcript_count()).unwrap_or(usize::MAX);
    if cells > max_cells || transcripts > max_cells {
        return Err(Error::ResourceCap(format!("tensor power {m} exceeds {max_cells} cells")));
    }

    let sizes: Vec<usize> = pi.rounds().iter().map(|r| r.alphabet.len()).collect();
    // Per-copy prefixes of a tensor prefix index before round i.
    let copy_prefixes = |i: usize, tp: usize| -> Vec<usize> {
        let tuples: Vec<usize> = {
            let mut t = vec![0; i];
            let mut v = tp;
            for j in (0..i).rev() {
                let base = sizes[j].pow(m as u32);
                t[j] = v % base;
                v /= base;
            }
            t
        };
        let per_round: Vec<Vec<usize>> =
            tuples.iter().enumerate().map(|(j, &t)| digits(t, sizes[j], m)).collect();
        (0..m)
            .map(|c| {
                (0..i).fold(0, |acc, j| acc * sizes[j] + per_round[j][c])
            })
            .collect()
    };

    let mut rounds = Vec::with_capacity(k);
    for i in 0..k {
        let r = &pi.rounds()[i];
        let nu = pi.input_count(r.owner);
        let na = sizes[i];
        let nu_m = nu.pow(m as u32);
        let np_m = pi.prefix_count(i).pow(m as u32);
        let na_m = na.pow(m as u32);
        let mut policy = Vec::with_capacity(nu_m * np_m * na_m);
        for u in 0..nu_m {
            let us = digits(u, nu, m);
            for tp in 0..np_m {
                let ps = copy_prefixes(i, tp);
                let laws: Vec<&[f64]> = (0..m).map(|c| pi.policy(i, us[c], ps[c])).collect();
                for t in 0..na_m {
                    let ts = digits(t, na, m);
                    policy.push((0..m).map(|c| laws[c][ts[c]]).product());
                }
            }
        }
        rounds.push(Round::new(r.owner, tensor_alphabet(&r.alphabet, m)?, policy));
    }

    let nz = pi.z_alphabet().len();
    let nt = pi.transcript_count();
    let output = (0..nt.pow(m as u32))
        .map(|tt| {
            // Tensor transcript -> per-copy transcripts.
            let cps = copy_prefixes(k, tt);
            let zs: Option<Vec<usize>> = cps.iter().map(|&t| pi.output(t)).collect();
            zs.map(|z| undigits(z, nz))
        })
        .collect();

    ProtocolTree::new(
        tensor_alphabet(pi.x_alphabet(), m)?,
        tensor_alphabet(pi.y_alphabet(), m)?,
        tensor_alphabet(pi.z_alphabet(), m)?,
        rounds,
        output,
    )
}
