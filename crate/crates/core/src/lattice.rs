//! Redundancy lattice of antichains over input subsets.
//!
//! Feature subsets are bitmasks (bit i−1 for feature i). An antichain is a
//! sorted list of pairwise incomparable non-empty subsets. The order is
//! `α ≤ β` iff every member of β contains some member of α. The information
//! a feature set T carries about the target covers exactly the down-set of
//! the antichain `{T}`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper limit on the number of features.
pub const MAX_FEATURES: usize = 4;
/// Hard limit for [`enumerate_lattice_unbounded`].
pub const MAX_FEATURES_UNBOUNDED: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Antichain {
    /// Member subsets as bitmasks, ascending.
    sets: Vec<u32>,
}

impl Antichain {
    pub fn new(mut sets: Vec<u32>) -> Result<Self> {
        sets.sort_unstable();
        sets.dedup();
        if sets.is_empty() || sets.contains(&0) {
            return Err(Error::InvalidArgument("antichain members must be non-empty".into()));
        }
        for (i, &a) in sets.iter().enumerate() {
            for &b in &sets[i + 1..] {
                if a & b == a || a & b == b {
                    return Err(Error::InvalidArgument(format!(
                        "{} and {} are comparable",
                        fmt_set(a),
                        fmt_set(b)
                    )));
                }
            }
        }
        Ok(Antichain { sets })
    }

    /// The single-member antichain `{T}` for a 1-based feature collection.
    pub fn node(collection: &[usize], n_features: usize) -> Result<Self> {
        Antichain::new(vec![mask(collection, n_features)?])
    }

    pub fn sets(&self) -> &[u32] {
        &self.sets
    }

    /// Members as 1-based feature index lists.
    pub fn collections(&self) -> Vec<Vec<usize>> {
        self.sets.iter().map(|&s| members(s)).collect()
    }

    /// `self ≤ other` in the lattice order.
    pub fn is_below(&self, other: &Antichain) -> bool {
        other.sets.iter().all(|&b| self.sets.iter().any(|&a| a & b == a))
    }
}

fn members(s: u32) -> Vec<usize> {
    (0..32).filter(|i| s >> i & 1 == 1).map(|i| i + 1).collect()
}

fn fmt_set(s: u32) -> String {
    let inner: Vec<String> = members(s).iter().map(|m| m.to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

impl fmt::Display for Antichain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.sets {
            f.write_str(&fmt_set(s))?;
        }
        Ok(())
    }
}

fn mask(collection: &[usize], n_features: usize) -> Result<u32> {
    if collection.is_empty() {
        return Err(Error::InvalidArgument("empty feature collection".into()));
    }
    let mut m = 0u32;
    for &i in collection {
        if i == 0 || i > n_features {
            return Err(Error::InvalidArgument(format!("feature {i} outside 1..={n_features}")));
        }
        m |= 1 << (i - 1);
    }
    Ok(m)
}

/// All antichains of non-empty subsets of `n_features` features, sorted.
pub fn enumerate_lattice(n_features: usize) -> Result<Vec<Antichain>> {
    if n_features > MAX_FEATURES {
        return Err(Error::Budget(format!(
            "{n_features} features exceed the default limit of {MAX_FEATURES}; use enumerate_lattice_unbounded"
        )));
    }
    enumerate_lattice_unbounded(n_features)
}

/// As [`enumerate_lattice`], allowing up to [`MAX_FEATURES_UNBOUNDED`] features.
pub fn enumerate_lattice_unbounded(n_features: usize) -> Result<Vec<Antichain>> {
    if n_features == 0 || n_features > MAX_FEATURES_UNBOUNDED {
        return Err(Error::InvalidArgument(format!(
            "feature count {n_features} outside 1..={MAX_FEATURES_UNBOUNDED}"
        )));
    }
    let subsets: Vec<u32> = (1..1u32 << n_features).collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    extend(&subsets, 0, &mut current, &mut out);
    out.sort();
    Ok(out)
}

fn extend(subsets: &[u32], from: usize, current: &mut Vec<u32>, out: &mut Vec<Antichain>) {
    for i in from..subsets.len() {
        let s = subsets[i];
        if current.iter().all(|&c| c & s != c && c & s != s) {
            current.push(s);
            out.push(Antichain { sets: current.clone() });
            extend(subsets, i + 1, current, out);
            current.pop();
        }
    }
}

/// Atoms covered by the information of `collection` (1-based features):
/// the down-set of `{collection}`.
pub fn atoms_covered_by_mi(collection: &[usize], lattice: &[Antichain], n_features: usize) -> Result<BTreeSet<Antichain>> {
    let node = Antichain::node(collection, n_features)?;
    Ok(lattice.iter().filter(|a| a.is_below(&node)).cloned().collect())
}

/// Atoms covered by I(Y; target | conditioning): coverage of the union minus
/// coverage of the conditioning set (empty conditioning reduces to MI).
pub fn atoms_covered_by_cmi(
    target: &[usize],
    conditioning: &[usize],
    lattice: &[Antichain],
    n_features: usize,
) -> Result<BTreeSet<Antichain>> {
    let mut union: Vec<usize> = target.iter().chain(conditioning).copied().collect();
    union.sort_unstable();
    union.dedup();
    let all = atoms_covered_by_mi(&union, lattice, n_features)?;
    if conditioning.is_empty() {
        return Ok(all);
    }
    let cond = atoms_covered_by_mi(conditioning, lattice, n_features)?;
    Ok(all.difference(&cond).cloned().collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub n_features: usize,
    pub atoms: usize,
    /// Coverage size of I(Y;F1), I(Y;F2|F1), ..., in chain order.
    pub cmi_sizes: Vec<usize>,
    pub cmi_disjoint: bool,
    pub cmi_covers_all: bool,
    /// Coverage size of each I(Y;Fi).
    pub mi_sizes: Vec<usize>,
    /// Atoms covered by more than one MI term.
    pub mi_overlap: usize,
    /// Atoms covered by no MI term.
    pub mi_uncovered: usize,
    /// Whether any MI term covers the top node {1..N}.
    pub mi_covers_top: bool,
}

/// Compares how the CMI chain and the single-feature MI terms cover the lattice.
pub fn verify_cmi_partition(n_features: usize) -> Result<PartitionReport> {
    verify_with(n_features, &enumerate_lattice(n_features)?)
}

fn verify_with(n: usize, lattice: &[Antichain]) -> Result<PartitionReport> {
    let mut seen: BTreeSet<Antichain> = BTreeSet::new();
    let mut cmi_sizes = Vec::with_capacity(n);
    let mut cmi_disjoint = true;
    for i in 1..=n {
        let cond: Vec<usize> = (1..i).collect();
        let cover = atoms_covered_by_cmi(&[i], &cond, lattice, n)?;
        cmi_sizes.push(cover.len());
        for a in cover {
            cmi_disjoint &= seen.insert(a);
        }
    }
    let cmi_covers_all = seen.len() == lattice.len();

    let mut count = vec![0usize; lattice.len()];
    let mut mi_sizes = Vec::with_capacity(n);
    for i in 1..=n {
        let node = Antichain::node(&[i], n)?;
        let mut size = 0;
        for (c, a) in count.iter_mut().zip(lattice) {
            if a.is_below(&node) {
                *c += 1;
                size += 1;
            }
        }
        mi_sizes.push(size);
    }
    let all: Vec<usize> = (1..=n).collect();
    let top = Antichain::node(&all, n)?;
    let top_pos = lattice.iter().position(|a| *a == top).expect("top node is in the lattice");
    Ok(PartitionReport {
        n_features: n,
        atoms: lattice.len(),
        cmi_sizes,
        cmi_disjoint,
        cmi_covers_all,
        mi_sizes,
        mi_overlap: count.iter().filter(|&&c| c > 1).count(),
        mi_uncovered: count.iter().filter(|&&c| c == 0).count(),
        mi_covers_top: count[top_pos] > 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_match_dedekind_minus_two() {
        for (n, d) in [(1, 3), (2, 6), (3, 20), (4, 168)] {
            assert_eq!(enumerate_lattice(n).unwrap().len(), d - 2, "n = {n}");
        }
        assert!(matches!(enumerate_lattice(5), Err(Error::Budget(_))));
        assert!(enumerate_lattice(0).is_err());
    }

    #[test]
    #[ignore = "7579 atoms; slow in debug builds"]
    fn five_features() {
        assert_eq!(enumerate_lattice_unbounded(5).unwrap().len(), 7579);
    }

    #[test]
    fn down_set_of_a_single_feature() {
        let lat = enumerate_lattice(3).unwrap();
        let cover = atoms_covered_by_mi(&[3], &lat, 3).unwrap();
        let mut names: Vec<String> = cover.iter().map(|a| a.to_string()).collect();
        names.sort();
        assert_eq!(names, vec!["{1,2}{3}", "{1}{2}{3}", "{1}{3}", "{2}{3}", "{3}"]);
        assert_eq!(atoms_covered_by_mi(&[1, 2, 3], &lat, 3).unwrap().len(), 18);
        assert!(atoms_covered_by_mi(&[4], &lat, 3).is_err());
    }

    #[test]
    fn cmi_given_the_rest_contains_the_synergy_node() {
        let lat = enumerate_lattice(3).unwrap();
        let cover = atoms_covered_by_cmi(&[1], &[2, 3], &lat, 3).unwrap();
        assert!(cover.contains(&Antichain::node(&[1, 2, 3], 3).unwrap()));
    }

    #[test]
    fn partition_reports() {
        let r2 = verify_cmi_partition(2).unwrap();
        assert_eq!(r2.cmi_sizes, vec![2, 2]);
        assert_eq!(r2.mi_sizes, vec![2, 2]);
        assert_eq!(r2.mi_overlap, 1);
        for n in 2..=4 {
            let r = verify_cmi_partition(n).unwrap();
            assert!(r.cmi_disjoint && r.cmi_covers_all);
            assert!(!r.mi_covers_top);
            assert!(r.mi_uncovered > 0);
        }
    }

    #[test]
    fn rejects_comparable_members() {
        assert!(Antichain::new(vec![0b01, 0b11]).is_err());
        assert!(Antichain::new(vec![]).is_err());
        assert_eq!(Antichain::new(vec![0b10, 0b01]).unwrap().to_string(), "{1}{2}");
    }

    fn element() -> impl Strategy<Value = Antichain> {
        let lat = enumerate_lattice(4).unwrap();
        proptest::sample::select(lat)
    }

    proptest! {
        #[test]
        fn order_is_a_partial_order(a in element(), b in element(), c in element()) {
            prop_assert!(a.is_below(&a));
            if a.is_below(&b) && b.is_below(&a) {
                prop_assert_eq!(&a, &b);
            }
            if a.is_below(&b) && b.is_below(&c) {
                prop_assert!(a.is_below(&c));
            }
        }

        #[test]
        fn coverage_is_monotone(a in element(), b in element()) {
            let lat = enumerate_lattice(4).unwrap();
            if a.is_below(&b) {
                let below = |x: &Antichain| lat.iter().filter(|e| e.is_below(x)).cloned().collect::<BTreeSet<_>>();
                prop_assert!(below(&a).is_subset(&below(&b)));
            }
        }
    }
}
