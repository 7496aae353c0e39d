//! Input distributions written as mixtures of product distributions.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{validate_probs, Alphabet, Axis, FiniteDist, JointDist, IDENTITY_TOL};
use crate::math;
use crate::{Error, Result};

/// One product component `mu_d = mu_X (x) mu_Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductComponent {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ProductComponent {
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.x[x] * self.y[y]
    }
}

/// `mu = sum_d kappa(d) mu_d` with each `mu_d` a product distribution.
///
/// Axis 0 of `mu` is Alice's input and axis 1 is Bob's.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedInput {
    mu: JointDist,
    kappa: FiniteDist,
    components: Vec<ProductComponent>,
}

impl PartitionedInput {
    /// Validates that the mixture reproduces `mu` within `1e-9`.
    pub fn new(mu: JointDist, kappa: FiniteDist, components: Vec<ProductComponent>) -> Result<Self> {
        if mu.axes().len() != 2 {
            return Err(Error::InvalidPartition("input distribution must have two axes".into()));
        }
        if components.len() != kappa.len() {
            return Err(Error::InvalidPartition(format!(
                "{} components for {} weights",
                components.len(),
                kappa.len()
            )));
        }
        let sizes = mu.sizes();
        for (d, c) in components.iter().enumerate() {
            if c.x.len() != sizes[0] || c.y.len() != sizes[1] {
                return Err(Error::InvalidPartition(format!("component {d} has wrong shape")));
            }
            validate_probs(&c.x).map_err(|e| Error::InvalidPartition(format!("component {d}: {e}")))?;
            validate_probs(&c.y).map_err(|e| Error::InvalidPartition(format!("component {d}: {e}")))?;
        }
        for x in 0..sizes[0] {
            for y in 0..sizes[1] {
                let mix: f64 = components
                    .iter()
                    .zip(kappa.probs())
                    .map(|(c, k)| k * c.prob(x, y))
                    .sum();
                let target = mu.prob(&[x, y]);
                if math::abs(mix - target) > IDENTITY_TOL {
                    return Err(Error::InvalidPartition(format!(
                        "mixture gives {mix} at ({x},{y}) but mu is {target}"
                    )));
                }
            }
        }
        Ok(Self { mu, kappa, components })
    }

    /// Builds `mu` from the mixture.
    pub fn from_components(
        x: Alphabet,
        y: Alphabet,
        kappa: FiniteDist,
        components: Vec<ProductComponent>,
    ) -> Result<Self> {
        if components.len() != kappa.len() {
            return Err(Error::InvalidPartition("component count differs from kappa".into()));
        }
        let (nx, ny) = (x.len(), y.len());
        if components.iter().any(|c| c.x.len() != nx || c.y.len() != ny) {
            return Err(Error::InvalidPartition("component has wrong shape".into()));
        }
        let axes = vec![Axis::new("X", x), Axis::new("Y", y)];
        let mu = JointDist::from_fn(axes, |i| {
            components.iter().zip(kappa.probs()).map(|(c, k)| k * c.prob(i[0], i[1])).sum()
        })?;
        Self::new(mu, kappa, components)
    }

    /// A product distribution with the trivial one-point partition.
    pub fn product(x: &FiniteDist, y: &FiniteDist) -> Result<Self> {
        let kappa = FiniteDist::from_probs(vec![1.0])?;
        let c = ProductComponent { x: x.probs().to_vec(), y: y.probs().to_vec() };
        Self::from_components(x.alphabet().clone(), y.alphabet().clone(), kappa, vec![c])
    }

    pub fn mu(&self) -> &JointDist {
        &self.mu
    }

    pub fn kappa(&self) -> &FiniteDist {
        &self.kappa
    }

    pub fn components(&self) -> &[ProductComponent] {
        &self.components
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.mu.axes()[0].range
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.mu.axes()[1].range
    }

    /// Row-major `|X| x |Y|` table of component `d`.
    pub fn component_table(&self, d: usize) -> Vec<f64> {
        let c = &self.components[d];
        c.x.iter().flat_map(|px| c.y.iter().map(move |py| px * py)).collect()
    }

    /// The `m`-fold independent power `(mu^m, kappa^m)`. Tuples are indexed
    /// in mixed radix with the first copy most significant.
    pub fn tensor(&self, m: usize, max_cells: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("tensor power must be at least 1".into()));
        }
        let nx = self.x_alphabet().len();
        let ny = self.y_alphabet().len();
        let nk = self.kappa.len();
        let cells = [nx, ny, nk].iter().try_fold(1usize, |acc, &n| {
            checked_pow(n, m).and_then(|p| acc.checked_mul(p))
        });
        match cells {
            Some(c) if c <= max_cells => {}
            _ => return Err(Error::ResourceCap(format!("tensor power {m} exceeds {max_cells} cells"))),
        }
        let xs = tensor_alphabet(self.x_alphabet(), m)?;
        let ys = tensor_alphabet(self.y_alphabet(), m)?;
        let kappa_labels = tensor_alphabet(self.kappa.alphabet(), m)?;
        let kappa_probs = tensor_vector(self.kappa.probs(), m);
        let kappa = FiniteDist::new(kappa_labels, kappa_probs)?;
        let mut components = Vec::with_capacity(kappa.len());
        let mut digits = vec![0usize; m];
        for _ in 0..kappa.len() {
            let xv: Vec<&[f64]> = digits.iter().map(|&d| self.components[d].x.as_slice()).collect();
            let yv: Vec<&[f64]> = digits.iter().map(|&d| self.components[d].y.as_slice()).collect();
            components.push(ProductComponent { x: outer_all(&xv), y: outer_all(&yv) });
            super::joint::increment(&mut digits, &vec![nk; m]);
        }
        Self::from_components(xs, ys, kappa, components)
    }
}

fn checked_pow(n: usize, m: usize) -> Option<usize> {
    (0..m).try_fold(1usize, |acc, _| acc.checked_mul(n))
}

/// Symbols of `A^m`, joined with `|`.
pub(crate) fn tensor_alphabet(a: &Alphabet, m: usize) -> Result<Alphabet> {
    let n = a.len();
    let total = checked_pow(n, m).ok_or_else(|| Error::ResourceCap("alphabet power overflows".into()))?;
    let mut digits = vec![0usize; m];
    let mut out: Vec<String> = Vec::with_capacity(total);
    for _ in 0..total {
        let parts: Vec<&str> = digits.iter().map(|&d| a.symbol(d)).collect();
        out.push(parts.join("|"));
        super::joint::increment(&mut digits, &vec![n; m]);
    }
    Alphabet::new(out)
}

/// `v (x) v (x) ... (x) v`, `m` times, first factor most significant.
pub(crate) fn tensor_vector(v: &[f64], m: usize) -> Vec<f64> {
    let copies: Vec<&[f64]> = (0..m).map(|_| v).collect();
    outer_all(&copies)
}

fn outer_all(vs: &[&[f64]]) -> Vec<f64> {
    let mut out = vec![1.0];
    for v in vs {
        out = out.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
    }
    out
}
