//! Finite nets of unit vectors and the rounding of a subspace onto a net.
//!
//! A `delta`-dense net of the unit sphere of `C^m` can need `(4/delta)^(2m)`
//! points, so nets are only built for `m <= 3`. Larger experiments pass their
//! own vectors through [`Net::trusted`].

use alloc::format;
use alloc::vec::Vec;

use super::{haar_vector, povm_value, CVector, Projector, Subspace, UnitVector, C64};
use crate::math;
use crate::rng::derive_stream;
use crate::{Error, Result};

/// Largest ambient dimension for which [`build_net`] runs.
pub const MAX_NET_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Net {
    vectors: Vec<UnitVector>,
    delta: f64,
    /// Largest distance to the net seen over the density check's samples;
    /// `None` for trusted nets.
    checked_radius: Option<f64>,
}

impl Net {
    /// A caller-supplied net whose `delta`-density is taken on trust.
    pub fn trusted(vectors: Vec<UnitVector>, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let m = vectors.first().ok_or(Error::EmptyNet)?.dim();
        if vectors.iter().any(|v| v.dim() != m) {
            return Err(Error::DimensionMismatch("net vectors of different lengths".into()));
        }
        Ok(Net { vectors, delta, checked_radius: None })
    }

    pub fn vectors(&self) -> &[UnitVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn ambient(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn checked_radius(&self) -> Option<f64> {
        self.checked_radius
    }

    /// The net point closest to `v` (first one on ties) and its distance.
    pub fn nearest(&self, v: &CVector) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, u) in self.vectors.iter().enumerate() {
            let d = (v - u.as_vector()).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Largest distance from `samples` Haar vectors to the net.
    pub fn sampled_radius(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = derive_stream(seed, &[]);
        let mut r = 0.0f64;
        for _ in 0..samples {
            let v = haar_vector(self.ambient(), &mut rng)?;
            r = r.max(self.nearest(v.as_vector()).1);
        }
        Ok(r)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("delta must lie in (0, 1], got {delta}")))
    }
}

/// `(4/delta)^(2m)`, the size a `delta`-dense net is guaranteed to fit in.
pub fn net_size_bound(m: usize, delta: f64) -> f64 {
    math::exp(2.0 * m as f64 * math::ln(4.0 / delta))
}

/// Greedy random covering: Haar candidates join the net when farther than
/// `delta/2` from every member, until `patience` consecutive candidates are
/// already covered. Density is then checked on `check_samples` fresh Haar
/// vectors and the build fails unless all lie within `delta`.
pub fn build_net(m: usize, delta: f64, patience: usize, check_samples: usize, seed: u64) -> Result<Net> {
    check_delta(delta)?;
    if m == 0 || m > MAX_NET_DIM {
        return Err(Error::ResourceCap(format!("nets are built for 1 <= m <= {MAX_NET_DIM}, got {m}")));
    }
    let cap = net_size_bound(m, delta);
    let mut rng = derive_stream(seed, &[0]);
    let mut net = Net { vectors: Vec::new(), delta, checked_radius: None };
    let mut covered = 0;
    while covered < patience.max(1) {
        let v = haar_vector(m, &mut rng)?;
        if net.vectors.is_empty() || net.nearest(v.as_vector()).1 > delta / 2.0 {
            net.vectors.push(v);
            covered = 0;
            if net.vectors.len() as f64 > cap {
                return Err(Error::InvariantViolated(format!("net outgrew (4/delta)^(2m) = {cap}")));
            }
        } else {
            covered += 1;
        }
    }
    let r = net.sampled_radius(check_samples, derive_seed_for_check(seed))?;
    if r > delta {
        return Err(Error::InvariantViolated(format!("sampled covering radius {r} exceeds delta = {delta}")));
    }
    net.checked_radius = Some(r);
    Ok(net)
}

fn derive_seed_for_check(seed: u64) -> u64 {
    crate::rng::derive_seed(seed, &[1])
}

/// `W` with each basis vector replaced by its nearest net point.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundedSubspace {
    /// `w~_i`, one per basis vector of `W`.
    pub images: Vec<UnitVector>,
    /// `span(w~_1, ..., w~_d)`, of dimension at most `d`.
    pub subspace: Subspace,
    pub delta: f64,
}

/// Rounds `W` onto `net`.
pub fn net_round(w: &Subspace, net: &Net) -> Result<RoundedSubspace> {
    if net.is_empty() {
        return Err(Error::EmptyNet);
    }
    check_delta(net.delta)?;
    if net.ambient() != w.ambient() {
        return Err(Error::DimensionMismatch(format!("net in C^{} vs subspace of C^{}", net.ambient(), w.ambient())));
    }
    let images: Vec<UnitVector> =
        (0..w.dim()).map(|i| net.vectors[net.nearest(&w.basis().column(i).into_owned()).0].clone()).collect();
    let cols: Vec<CVector> = images.iter().map(|u| u.as_vector().clone()).collect();
    Ok(RoundedSubspace { subspace: Subspace::span(w.ambient(), &cols)?, images, delta: net.delta })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingCheck {
    pub samples: usize,
    /// `max |w - w^|` over sampled unit `w` in `W`.
    pub max_distance: f64,
    /// `2 delta sqrt(d)`.
    pub bound: f64,
    /// `max (M(W) - M(W^))` over the supplied projectors.
    pub max_povm_gap: f64,
}

impl RoundingCheck {
    pub fn holds(&self) -> bool {
        self.max_distance <= self.bound + 1e-12 && self.max_povm_gap <= self.bound + 1e-12
    }
}

/// Samples unit `w = sum a_i w_i` in `W`, maps it to `w^ = w'/|w'|` with
/// `w' = sum a_i w~_i` (or 0 if `w' = 0`), and compares `|w - w^|` and
/// `M(W) - M(W^)` with `2 delta sqrt(d)`.
pub fn check_rounding(
    w: &Subspace,
    rounded: &RoundedSubspace,
    projectors: &[Projector],
    samples: usize,
    seed: u64,
) -> Result<RoundingCheck> {
    let d = w.dim();
    if rounded.images.len() != d {
        return Err(Error::DimensionMismatch(format!("{} images for dimension {d}", rounded.images.len())));
    }
    let mut rng = derive_stream(seed, &[]);
    let mut max_distance = 0.0f64;
    for _ in 0..samples {
        let a = haar_vector(d, &mut rng)?.into_vector();
        let x = w.basis() * &a;
        let mut y = CVector::zeros(w.ambient());
        for (i, img) in rounded.images.iter().enumerate() {
            y.axpy(a[i], img.as_vector(), C64::new(1.0, 0.0));
        }
        let ny = y.norm();
        let y_hat = if ny > 0.0 { y.unscale(ny) } else { y };
        max_distance = max_distance.max((x - y_hat).norm());
    }
    let mut max_povm_gap = f64::NEG_INFINITY;
    for p in projectors {
        max_povm_gap = max_povm_gap.max(povm_value(p, w)? - povm_value(p, &rounded.subspace)?);
    }
    Ok(RoundingCheck {
        samples,
        max_distance,
        bound: 2.0 * rounded.delta * math::sqrt(d as f64),
        max_povm_gap: if projectors.is_empty() { 0.0 } else { max_povm_gap },
    })
}
