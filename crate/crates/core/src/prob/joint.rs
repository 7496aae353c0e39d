//! Joint distributions over several named finite variables.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{entropy_of, validate_probs, Alphabet, FiniteDist};
use crate::{Error, Result};

/// A named variable with a finite range.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub range: Alphabet,
}

impl Axis {
    pub fn new(name: impl Into<String>, range: Alphabet) -> Self {
        Self { name: name.into(), range }
    }

    /// An axis whose range is `"0".."n-1"`.
    pub fn indexed(name: impl Into<String>, n: usize) -> Result<Self> {
        Ok(Self::new(name, Alphabet::indexed(n)?))
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

/// A probability table over the product of its axes, stored row-major
/// (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct JointDist {
    axes: Vec<Axis>,
    probs: Vec<f64>,
}

impl JointDist {
    pub fn new(axes: Vec<Axis>, probs: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidDistribution("joint distribution needs an axis".into()));
        }
        let cells: usize = axes.iter().map(Axis::len).product();
        if cells != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "table has {} cells but axes span {cells}",
                probs.len()
            )));
        }
        validate_probs(&probs)?;
        Ok(Self { axes, probs })
    }

    /// Builds a table from a cell function of the multi-index.
    pub fn from_fn(axes: Vec<Axis>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let sizes: Vec<usize> = axes.iter().map(Axis::len).collect();
        let cells: usize = sizes.iter().product();
        let mut probs = Vec::with_capacity(cells);
        let mut idx = vec![0usize; sizes.len()];
        for _ in 0..cells {
            probs.push(f(&idx));
            increment(&mut idx, &sizes);
        }
        Self::new(axes, probs)
    }

    /// The product distribution of independent marginals.
    pub fn product(marginals: &[(String, &FiniteDist)]) -> Result<Self> {
        let axes = marginals
            .iter()
            .map(|(n, d)| Axis::new(n.clone(), d.alphabet().clone()))
            .collect();
        Self::from_fn(axes, |idx| {
            idx.iter().zip(marginals).map(|(&i, (_, d))| d.prob(i)).product()
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::InvalidDistribution(format!("no axis named {name:?}")))
    }

    /// Row-major cell index of a multi-index.
    pub fn cell(&self, idx: &[usize]) -> usize {
        let mut c = 0;
        for (i, a) in idx.iter().zip(&self.axes) {
            c = c * a.len() + i;
        }
        c
    }

    pub fn prob(&self, idx: &[usize]) -> f64 {
        self.probs[self.cell(idx)]
    }

    fn check_axes(&self, set: &[usize]) -> Result<()> {
        for (i, &a) in set.iter().enumerate() {
            if a >= self.axes.len() {
                return Err(Error::UnknownAxis(a));
            }
            if set[..i].contains(&a) {
                return Err(Error::OverlappingAxes);
            }
        }
        Ok(())
    }

    /// Marginal table over `keep`, in that order.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointDist> {
        self.check_axes(keep)?;
        if keep.is_empty() {
            return Err(Error::InvalidDistribution("marginal over no axes".into()));
        }
        let axes: Vec<Axis> = keep.iter().map(|&a| self.axes[a].clone()).collect();
        let probs = self.marginal_probs(keep);
        Ok(JointDist { axes, probs })
    }

    /// Marginal of a single axis as a [`FiniteDist`].
    pub fn axis_marginal(&self, axis: usize) -> Result<FiniteDist> {
        self.check_axes(&[axis])?;
        FiniteDist::new(self.axes[axis].range.clone(), self.marginal_probs(&[axis]))
    }

    /// Raw marginal vector over `keep` (row-major in the given order).
    /// An empty `keep` yields `[1.0]`.
    pub fn marginal_probs(&self, keep: &[usize]) -> Vec<f64> {
        let sizes = self.sizes();
        let out_len: usize = keep.iter().map(|&a| sizes[a]).product();
        let mut out = vec![0.0; out_len];
        let mut idx = vec![0usize; sizes.len()];
        for &p in &self.probs {
            if p != 0.0 {
                let mut c = 0;
                for &a in keep {
                    c = c * sizes[a] + idx[a];
                }
                out[c] += p;
            }
            increment(&mut idx, &sizes);
        }
        out
    }

    /// Joint entropy of the variables in `set`.
    pub fn entropy(&self, set: &[usize]) -> Result<f64> {
        self.check_axes(set)?;
        Ok(entropy_of(&self.marginal_probs(set)))
    }

    /// `I(A : B) = H(A) + H(B) - H(AB)`.
    pub fn mutual_information(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        let ab: Vec<usize> = a.iter().chain(b).copied().collect();
        self.check_axes(&ab)?;
        let h = entropy_of(&self.marginal_probs(a)) + entropy_of(&self.marginal_probs(b))
            - entropy_of(&self.marginal_probs(&ab));
        Ok(h)
    }

    /// `I(A : B | Z)` as the `Z`-average of the mutual information of the
    /// conditional tables.
    pub fn conditional_mutual_information(&self, a: &[usize], b: &[usize], z: &[usize]) -> Result<f64> {
        let abz: Vec<usize> = a.iter().chain(b).chain(z).copied().collect();
        self.check_axes(&abz)?;
        let sizes = self.sizes();
        let na: usize = a.iter().map(|&i| sizes[i]).product();
        let nb: usize = b.iter().map(|&i| sizes[i]).product();
        let nz: usize = z.iter().map(|&i| sizes[i]).product();
        // Layout: (a, b, z) with z fastest.
        let table = self.marginal_probs(&abz);
        let mut total = 0.0;
        let mut slice = vec![0.0; na * nb];
        for zi in 0..nz {
            let mut pz = 0.0;
            for (ab, s) in slice.iter_mut().enumerate() {
                *s = table[ab * nz + zi];
                pz += *s;
            }
            if pz <= 0.0 {
                continue;
            }
            slice.iter_mut().for_each(|s| *s /= pz);
            total += pz * mi_of_matrix(&slice, na, nb);
        }
        Ok(total)
    }

    /// The conditional table of the remaining axes given `axis = value`.
    pub fn condition(&self, axis: usize, value: usize) -> Result<JointDist> {
        self.check_axes(&[axis])?;
        if self.axes.len() < 2 {
            return Err(Error::InvalidDistribution("cannot condition a single-axis table".into()));
        }
        if value >= self.axes[axis].len() {
            return Err(Error::Parameter(format!("value {value} outside axis range")));
        }
        let sizes = self.sizes();
        let rest: Vec<usize> = (0..sizes.len()).filter(|&i| i != axis).collect();
        let mut probs = vec![0.0; self.probs.len() / sizes[axis]];
        let mut idx = vec![0usize; sizes.len()];
        let mut mass = 0.0;
        for &p in &self.probs {
            if idx[axis] == value {
                let mut c = 0;
                for &r in &rest {
                    c = c * sizes[r] + idx[r];
                }
                probs[c] += p;
                mass += p;
            }
            increment(&mut idx, &sizes);
        }
        if mass <= 0.0 {
            return Err(Error::InvalidDistribution("conditioning on a null event".into()));
        }
        probs.iter_mut().for_each(|p| *p /= mass);
        let axes = rest.iter().map(|&r| self.axes[r].clone()).collect();
        Ok(JointDist { axes, probs })
    }
}

/// Mutual information of a row-major `na x nb` probability matrix.
pub(crate) fn mi_of_matrix(m: &[f64], na: usize, nb: usize) -> f64 {
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for i in 0..na {
        for j in 0..nb {
            pa[i] += m[i * nb + j];
            pb[j] += m[i * nb + j];
        }
    }
    entropy_of(&pa) + entropy_of(&pb) - entropy_of(m)
}

/// Advances a row-major multi-index; wraps to all zeros after the last cell.
pub(crate) fn increment(idx: &mut [usize], sizes: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < sizes[k] {
            return;
        }
        idx[k] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{relative_entropy_of, IDENTITY_TOL};
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn joint(sizes: &[usize], w: &[f64]) -> JointDist {
        let s: f64 = w.iter().sum();
        let axes = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| Axis::indexed(alloc::format!("v{i}"), n).unwrap())
            .collect();
        JointDist::new(axes, w.iter().map(|x| x / s).collect()).unwrap()
    }

    fn table(sizes: &'static [usize]) -> impl Strategy<Value = JointDist> {
        let n: usize = sizes.iter().product();
        prop::collection::vec(0.001f64..1.0, n).prop_map(move |w| joint(sizes, &w))
    }

    #[test]
    fn independent_product_has_zero_information() {
        let j = joint(&[2, 3], &[0.1 * 0.2, 0.1 * 0.3, 0.1 * 0.5, 0.9 * 0.2, 0.9 * 0.3, 0.9 * 0.5]);
        assert!(j.mutual_information(&[0], &[1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn copied_bit_has_one_bit() {
        let j = joint(&[2, 2], &[0.5, 0.0, 0.0, 0.5]);
        assert!((j.mutual_information(&[0], &[1]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_conditioning_is_vacuous() {
        let j = joint(&[2, 2, 1], &[0.4, 0.1, 0.2, 0.3]);
        let mi = j.mutual_information(&[0], &[1]).unwrap();
        let cmi = j.conditional_mutual_information(&[0], &[1], &[2]).unwrap();
        assert!((mi - cmi).abs() < 1e-15);
    }

    #[test]
    fn overlapping_or_unknown_axes_are_errors() {
        let j = joint(&[2, 2], &[0.25; 4]);
        assert!(matches!(j.mutual_information(&[0], &[0]), Err(Error::OverlappingAxes)));
        assert!(matches!(j.mutual_information(&[0], &[2]), Err(Error::UnknownAxis(2))));
        assert!(matches!(
            j.conditional_mutual_information(&[0], &[1], &[1]),
            Err(Error::OverlappingAxes)
        ));
    }

    #[test]
    fn marginal_and_condition() {
        let j = joint(&[2, 2], &[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(j.marginal_probs(&[1]), alloc::vec![0.1 + 0.3, 0.2 + 0.4]);
        let c = j.condition(0, 1).unwrap();
        assert!((c.probs()[0] - 0.3 / 0.7).abs() < 1e-15);
        let m = j.marginal(&[1, 0]).unwrap();
        assert_eq!(m.prob(&[0, 1]), 0.3);
    }

    /// `E_x S(P_x || P)` computed from the conditional rows.
    fn expected_divergence(j: &JointDist) -> f64 {
        let sizes = j.sizes();
        let px = j.marginal_probs(&[0]);
        let pm = j.marginal_probs(&[1]);
        (0..sizes[0])
            .map(|x| {
                let row: Vec<f64> = (0..sizes[1]).map(|m| j.prob(&[x, m]) / px[x]).collect();
                px[x] * relative_entropy_of(&row, &pm)
            })
            .sum()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn information_is_expected_divergence(j in table(&[3, 3])) {
            let mi = j.mutual_information(&[0], &[1]).unwrap();
            prop_assert!((mi - expected_divergence(&j)).abs() < IDENTITY_TOL);
            prop_assert!(mi >= -IDENTITY_TOL);
        }

        #[test]
        fn chain_rule(j in table(&[2, 2, 2])) {
            let lhs = j.mutual_information(&[0], &[1, 2]).unwrap();
            let rhs = j.mutual_information(&[0], &[1]).unwrap()
                + j.conditional_mutual_information(&[0], &[2], &[1]).unwrap();
            prop_assert!((lhs - rhs).abs() < IDENTITY_TOL);
        }

        #[test]
        fn conditioning_costs_at_most_the_entropy_of_the_condition(j in table(&[2, 2, 2, 3])) {
            let cond = j.conditional_mutual_information(&[0, 1], &[2], &[3]).unwrap();
            let plain = j.mutual_information(&[0, 1], &[2]).unwrap();
            let hw = j.entropy(&[3]).unwrap();
            prop_assert!(cond >= plain - hw - IDENTITY_TOL);
        }

        #[test]
        fn marginals_are_valid(j in table(&[2, 3, 2])) {
            for a in 0..3 {
                let m = j.axis_marginal(a).unwrap();
                prop_assert!((m.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
