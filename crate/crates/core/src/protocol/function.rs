use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::prob::partition::tensor_alphabet;
use crate::prob::Alphabet;
use crate::{Error, Result};

/// A function or relation `f ⊆ X × Y × Z`: each input pair has a non-empty
/// set of acceptable outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSpec {
    x: Alphabet,
    y: Alphabet,
    z: Alphabet,
    /// Row-major over `(x, y)`; each entry is a mask over `Z`.
    accept: Vec<Vec<bool>>,
}

impl FunctionSpec {
    /// `accept[x * |Y| + y]` lists the acceptable output indices.
    pub fn new(x: Alphabet, y: Alphabet, z: Alphabet, accept: Vec<Vec<usize>>) -> Result<Self> {
        if accept.len() != x.len() * y.len() {
            return Err(Error::RangeMismatch(format!(
                "acceptance table has {} cells, expected {}",
                accept.len(),
                x.len() * y.len()
            )));
        }
        let mut masks = Vec::with_capacity(accept.len());
        for (c, zs) in accept.iter().enumerate() {
            if zs.is_empty() {
                return Err(Error::RangeMismatch(format!("input cell {c} accepts nothing")));
            }
            let mut mask = vec![false; z.len()];
            for &zi in zs {
                if zi >= z.len() {
                    return Err(Error::RangeMismatch(format!("output index {zi} out of range")));
                }
                mask[zi] = true;
            }
            masks.push(mask);
        }
        Ok(Self { x, y, z, accept: masks })
    }

    /// A total function given by `f(x, y)`.
    pub fn from_fn(x: Alphabet, y: Alphabet, z: Alphabet, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let ny = y.len();
        let accept = (0..x.len() * ny).map(|c| vec![f(c / ny, c % ny)]).collect();
        Self::new(x, y, z, accept)
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn z_alphabet(&self) -> &Alphabet {
        &self.z
    }

    pub fn accepts(&self, x: usize, y: usize, z: usize) -> bool {
        self.accept[x * self.y.len() + y][z]
    }

    /// Mask of acceptable outputs for `(x, y)`.
    pub fn acceptable(&self, x: usize, y: usize) -> &[bool] {
        &self.accept[x * self.y.len() + y]
    }

    /// `f^m`: an output tuple is acceptable iff every coordinate is.
    pub fn tensor(&self, m: usize, max_cells: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("tensor power must be at least 1".into()));
        }
        let cells = [self.x.len(), self.y.len(), self.z.len()]
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n.checked_pow(m as u32)?));
        if !cells.is_some_and(|c| c <= max_cells) {
            return Err(Error::ResourceCap(format!("f^{m} exceeds {max_cells} cells")));
        }
        let xs = tensor_alphabet(&self.x, m)?;
        let ys = tensor_alphabet(&self.y, m)?;
        let zs = tensor_alphabet(&self.z, m)?;
        let digits = |mut v: usize, n: usize| -> Vec<usize> {
            let mut d = vec![0; m];
            for slot in d.iter_mut().rev() {
                *slot = v % n;
                v /= n;
            }
            d
        };
        let (nx, ny, nz) = (self.x.len(), self.y.len(), self.z.len());
        let mut accept = Vec::with_capacity(xs.len() * ys.len());
        for xt in 0..xs.len() {
            let xd = digits(xt, nx);
            for yt in 0..ys.len() {
                let yd = digits(yt, ny);
                let ok: Vec<usize> = (0..zs.len())
                    .filter(|&zt| {
                        digits(zt, nz)
                            .iter()
                            .enumerate()
                            .all(|(c, &zc)| self.accepts(xd[c], yd[c], zc))
                    })
                    .collect();
                accept.push(ok);
            }
        }
        Self::new(xs, ys, zs, accept)
    }
}
