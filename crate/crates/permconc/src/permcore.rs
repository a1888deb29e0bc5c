//! Permutation arithmetic, group enumeration from generators, orbit and
//! subgroup chains, locality checks, and local bases with the word bijection.
//!
//! Points are stored 0-based internally; the public JSON surface and the
//! `Display` impls are 1-based so that the ground set reads as `[1..n]`.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PermError {
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("images are not a bijection of [1..{0}]")]
    NotBijection(usize),
    #[error("group enumeration exceeded the element cap {0}")]
    CapExceeded(usize),
    #[error("element is not a member of the group")]
    NotInGroup,
    #[error("group is not {ell}-local at chain level {level} (no mover for point {point})")]
    NotLocal { ell: usize, level: usize, point: usize },
    #[error("word coordinate {coord} is outside orbit O_{level}")]
    WordOutsideOrbit { level: usize, coord: usize },
    #[error("degree-<= {ell} elements do not generate the group")]
    NotGenerated { ell: usize },
    #[error("no generators supplied and no ground-set size known")]
    EmptyGenerators,
}

/// An element of S_n stored as its image array.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    img: Vec<usize>,
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm{:?}", self.one_based())
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles: Vec<Vec<usize>> = self
            .cycles()
            .into_iter()
            .filter(|c| c.len() > 1)
            .map(|c| c.into_iter().map(|p| p + 1).collect())
            .collect();
        if cycles.is_empty() {
            return write!(f, "id");
        }
        for c in cycles {
            write!(f, "(")?;
            for (i, p) in c.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { img: (0..n).collect() }
    }

    /// Builds from 0-based images, validating bijectivity.
    pub fn from_images(img: Vec<usize>) -> Result<Self, PermError> {
        let n = img.len();
        let mut seen = vec![false; n];
        for &v in &img {
            if v >= n || seen[v] {
                return Err(PermError::NotBijection(n));
            }
            seen[v] = true;
        }
        Ok(Permutation { img })
    }

    /// Builds from 1-based images as used in group spec files.
    pub fn from_images_one_based(img: &[usize]) -> Result<Self, PermError> {
        let n = img.len();
        if img.iter().any(|&v| v == 0 || v > n) {
            return Err(PermError::NotBijection(n));
        }
        Self::from_images(img.iter().map(|&v| v - 1).collect())
    }

    /// The transposition exchanging 0-based points `i` and `j`.
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut img: Vec<usize> = (0..n).collect();
        img.swap(i, j);
        Permutation { img }
    }

    pub fn n(&self) -> usize {
        self.img.len()
    }

    /// Image of 0-based point `i`.
    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.img[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.img
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.img.iter().map(|&v| v + 1).collect()
    }

    /// Functional composition: `(a.compose(b))(i) = a(b(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation, PermError> {
        if self.n() != other.n() {
            return Err(PermError::SizeMismatch(self.n(), other.n()));
        }
        Ok(Permutation {
            img: other.img.iter().map(|&v| self.img[v]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut img = vec![0; self.n()];
        for (i, &v) in self.img.iter().enumerate() {
            img[v] = i;
        }
        Permutation { img }
    }

    pub fn is_identity(&self) -> bool {
        self.img.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.img[i] != i).collect()
    }

    pub fn degree(&self) -> usize {
        (0..self.n()).filter(|&i| self.img[i] != i).count()
    }

    /// Cycle decomposition including fixed points as 1-cycles, each cycle
    /// starting at its minimal point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut cur = self.img[start];
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = self.img[cur];
            }
            out.push(cycle);
        }
        out
    }

    /// Number of cycles |sigma|, fixed points counted as 1-cycles.
    pub fn cycle_count(&self) -> usize {
        self.cycles().len()
    }

    pub fn parity_even(&self) -> bool {
        (self.n() - self.cycle_count()) % 2 == 0
    }
}

/// Hamming distance d_H(sigma, tau) = #{i : sigma(i) != tau(i)}.
pub fn hamming(a: &Permutation, b: &Permutation) -> Result<usize, PermError> {
    if a.n() != b.n() {
        return Err(PermError::SizeMismatch(a.n(), b.n()));
    }
    Ok((0..a.n()).filter(|&i| a.apply(i) != b.apply(i)).count())
}

pub const DEFAULT_ELEMENT_CAP: usize = 10_000;

/// A fully enumerated permutation group with its subgroup chain and orbits.
///
/// `subgroup_chain[m-1]` holds the element ids of G_m = {sigma : sigma fixes
/// every point >= m} for m in 1..=n (so chain level m corresponds to the
/// one-based convention: the subgroup fixing m+1..n). `orbits[m-1]` is O_m, the orbit of
/// point m-1 inside G_m, sorted ascending.
#[derive(Clone, Debug)]
pub struct GroupTable {
    n: usize,
    elements: Vec<Permutation>,
    index: HashMap<Permutation, usize>,
    generators: Vec<Permutation>,
    subgroup_chain: Vec<Vec<usize>>,
    orbits: Vec<Vec<usize>>,
}

impl GroupTable {
    /// BFS closure of the generators under composition.
    pub fn enumerate(generators: &[Permutation], cap: usize) -> Result<Self, PermError> {
        let n = match generators.first() {
            Some(g) => g.n(),
            None => return Err(PermError::EmptyGenerators),
        };
        for g in generators {
            if g.n() != n {
                return Err(PermError::SizeMismatch(n, g.n()));
            }
        }
        Self::enumerate_with_n(generators, n, cap)
    }

    /// As `enumerate`, with an explicit ground-set size so that the trivial
    /// group on n points can be built from an empty generator list.
    pub fn enumerate_with_n(
        generators: &[Permutation],
        n: usize,
        cap: usize,
    ) -> Result<Self, PermError> {
        let id = Permutation::identity(n);
        let mut elements = vec![id.clone()];
        let mut index = HashMap::new();
        index.insert(id, 0usize);
        let mut queue = VecDeque::from([0usize]);
        while let Some(cur) = queue.pop_front() {
            for g in generators {
                let next = elements[cur].compose(g)?;
                if !index.contains_key(&next) {
                    if elements.len() >= cap {
                        return Err(PermError::CapExceeded(cap));
                    }
                    index.insert(next.clone(), elements.len());
                    queue.push_back(elements.len());
                    elements.push(next);
                }
            }
        }
        let mut subgroup_chain = Vec::with_capacity(n);
        let mut orbits = Vec::with_capacity(n);
        for m in 1..=n {
            let ids: Vec<usize> = (0..elements.len())
                .filter(|&e| (m..n).all(|p| elements[e].apply(p) == p))
                .collect();
            let mut orbit: Vec<usize> = ids.iter().map(|&e| elements[e].apply(m - 1)).collect();
            orbit.sort_unstable();
            orbit.dedup();
            orbits.push(orbit);
            subgroup_chain.push(ids);
        }
        Ok(GroupTable {
            n,
            elements,
            index,
            generators: generators.to_vec(),
            subgroup_chain,
            orbits,
        })
    }

    /// The symmetric group S_n from adjacent transpositions.
    pub fn symmetric(n: usize, cap: usize) -> Result<Self, PermError> {
        if n < 2 {
            return Self::enumerate_with_n(&[], n.max(1), cap);
        }
        let gens: Vec<Permutation> = (0..n - 1)
            .map(|i| Permutation::transposition(n, i, i + 1))
            .collect();
        Self::enumerate(&gens, cap)
    }

    /// The alternating group A_n from consecutive 3-cycles.
    pub fn alternating(n: usize, cap: usize) -> Result<Self, PermError> {
        if n < 3 {
            return Self::enumerate_with_n(&[], n.max(1), cap);
        }
        let gens: Vec<Permutation> = (0..n - 2)
            .map(|i| {
                let mut img: Vec<usize> = (0..n).collect();
                img[i] = i + 1;
                img[i + 1] = i + 2;
                img[i + 2] = i;
                Permutation { img }
            })
            .collect();
        Self::enumerate(&gens, cap)
    }

    /// Direct product of symmetric groups acting on consecutive blocks,
    /// e.g. `[2, 3]` gives S_2 x S_3 on 5 points.
    pub fn product_symmetric(blocks: &[usize], cap: usize) -> Result<Self, PermError> {
        let n: usize = blocks.iter().sum();
        let mut gens = Vec::new();
        let mut offset = 0;
        for &b in blocks {
            for i in 0..b.saturating_sub(1) {
                gens.push(Permutation::transposition(n, offset + i, offset + i + 1));
            }
            offset += b;
        }
        Self::enumerate_with_n(&gens, n, cap)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> &Permutation {
        &self.elements[id]
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn index_of(&self, p: &Permutation) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        self.index.contains_key(p)
    }

    /// Element ids of chain level m (one-based level label).
    pub fn subgroup_level(&self, m: usize) -> &[usize] {
        &self.subgroup_chain[m - 1]
    }

    /// Orbit O_m as sorted 0-based points.
    pub fn orbit(&self, m: usize) -> &[usize] {
        &self.orbits[m - 1]
    }

    /// Number of chain levels with a nontrivial orbit, K_n = #{j : O_j != {j}}.
    pub fn k_n(&self) -> usize {
        (2..=self.n).filter(|&m| self.orbits[m - 1].len() > 1).count()
    }

    pub fn is_symmetric_full(&self) -> bool {
        (2..=self.n).all(|m| self.orbits[m - 1].len() == m)
    }

    /// Checks the l-local property by exhaustive search.
    pub fn is_ell_local(&self, ell: usize) -> bool {
        for sigma in &self.elements {
            let supp = sigma.support();
            for &i in &supp {
                let j = sigma.apply(i);
                let found = self.elements.iter().any(|tau| {
                    tau.apply(i) == j
                        && tau.degree() <= ell
                        && tau.support().iter().all(|p| supp.contains(p))
                });
                if !found {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest l in 2..=n for which the group is l-local.
    pub fn minimal_locality(&self) -> Option<usize> {
        (2..=self.n.max(2)).find(|&ell| self.is_ell_local(ell))
    }

    /// Exhaustive normality check of this group inside the ambient group.
    pub fn is_normal_in(&self, ambient: &GroupTable) -> bool {
        if ambient.n() != self.n {
            return false;
        }
        ambient.elements.iter().all(|t| {
            let tinv = t.inverse();
            self.elements.iter().all(|sigma| {
                let conj = tinv.compose(sigma).unwrap().compose(t).unwrap();
                self.contains(&conj)
            })
        })
    }

    /// Stable fingerprint of the enumerated element set.
    pub fn fingerprint(&self) -> String {
        let mut sorted: Vec<&Permutation> = self.elements.iter().collect();
        sorted.sort();
        let mut h = Fnv::new();
        h.write_usize(self.n);
        for p in sorted {
            for &v in p.images() {
                h.write_usize(v);
            }
        }
        format!("{:016x}", h.finish())
    }

    /// BFS word-length table over the Cayley graph generated by the
    /// degree-<= ell elements of the group. `table[e]` is the minimal number
    /// of such factors needed to write element `e`.
    pub fn word_length_table(&self, ell: usize) -> Result<Vec<u32>, PermError> {
        let gens: Vec<usize> = (0..self.elements.len())
            .filter(|&e| {
                let d = self.elements[e].degree();
                d >= 1 && d <= ell
            })
            .collect();
        let mut dist = vec![u32::MAX; self.elements.len()];
        let id = self.index[&Permutation::identity(self.n)];
        dist[id] = 0;
        let mut queue = VecDeque::from([id]);
        while let Some(cur) = queue.pop_front() {
            for &g in &gens {
                let next = self.elements[cur].compose(&self.elements[g]).unwrap();
                let ni = self.index[&next];
                if dist[ni] == u32::MAX {
                    dist[ni] = dist[cur] + 1;
                    queue.push_back(ni);
                }
            }
        }
        if dist.iter().any(|&d| d == u32::MAX) {
            return Err(PermError::NotGenerated { ell });
        }
        Ok(dist)
    }
}

/// d_T(sigma, tau): minimal number of degree-<= ell elements of G whose
/// product equals sigma tau^{-1}.
pub fn transposition_distance(
    group: &GroupTable,
    ell: usize,
    sigma: &Permutation,
    tau: &Permutation,
) -> Result<usize, PermError> {
    let table = group.word_length_table(ell)?;
    let rel = sigma.compose(&tau.inverse())?;
    let id = group.index_of(&rel).ok_or(PermError::NotInGroup)?;
    Ok(table[id] as usize)
}

/// An l-local base: for each chain level m in 2..=n and each point i in O_m,
/// an element t_{i,m} of G_m moving i to m-1 with degree <= l (t_{m-1,m} = id).
#[derive(Clone, Debug)]
pub struct LocalBase {
    n: usize,
    ell: usize,
    entries: Vec<BTreeMap<usize, Permutation>>,
}

impl LocalBase {
    /// Deterministic construction: for each slot pick the qualifying element
    /// of minimal degree, ties broken by enumeration order.
    pub fn build(group: &GroupTable, ell: usize) -> Result<Self, PermError> {
        let n = group.n();
        let mut entries = Vec::new();
        for m in 2..=n {
            let mut level = BTreeMap::new();
            for &i in group.orbit(m) {
                if i == m - 1 {
                    level.insert(i, Permutation::identity(n));
                    continue;
                }
                let mut best: Option<(usize, usize)> = None;
                for &e in group.subgroup_level(m) {
                    let p = group.element(e);
                    if p.apply(i) == m - 1 && p.degree() <= ell {
                        let key = (p.degree(), e);
                        if best.map_or(true, |b| key < b) {
                            best = Some(key);
                        }
                    }
                }
                match best {
                    Some((_, e)) => {
                        level.insert(i, group.element(e).clone());
                    }
                    None => {
                        return Err(PermError::NotLocal { ell, level: m, point: i });
                    }
                }
            }
            entries.push(level);
        }
        Ok(LocalBase { n, ell, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Base entry t_{i,m} for chain level m in 2..=n and 0-based point i.
    pub fn entry(&self, m: usize, i: usize) -> Option<&Permutation> {
        self.entries[m - 2].get(&i)
    }

    /// Orbit points available at level m, sorted.
    pub fn orbit_points(&self, m: usize) -> Vec<usize> {
        self.entries[m - 2].keys().copied().collect()
    }

    /// Sizes |O_m| for m in 2..=n.
    pub fn orbit_sizes(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.len()).collect()
    }

    /// Total number of words, Prod |O_m|.
    pub fn word_count(&self) -> usize {
        self.entries.iter().map(|e| e.len()).product()
    }

    /// The identity word (i_m = m-1 at every level).
    pub fn identity_word(&self) -> Vec<usize> {
        (2..=self.n).map(|m| m - 1).collect()
    }

    /// Iterates every word of the orbit product space in lexicographic order.
    pub fn words(&self) -> Vec<Vec<usize>> {
        let mut words = vec![Vec::new()];
        for level in &self.entries {
            let mut next = Vec::with_capacity(words.len() * level.len());
            for w in &words {
                for &i in level.keys() {
                    let mut w2 = w.clone();
                    w2.push(i);
                    next.push(w2);
                }
            }
            words = next;
        }
        words
    }

    /// U_T: word (i_2, ..., i_n) -> t_{i_2,2} t_{i_3,3} ... t_{i_n,n}.
    pub fn u_map(&self, word: &[usize]) -> Result<Permutation, PermError> {
        if word.len() != self.n.saturating_sub(1) {
            return Err(PermError::SizeMismatch(word.len(), self.n - 1));
        }
        let mut acc = Permutation::identity(self.n);
        for (lvl, &i) in word.iter().enumerate() {
            let m = lvl + 2;
            let t = self
                .entry(m, i)
                .ok_or(PermError::WordOutsideOrbit { level: m, coord: i })?;
            acc = acc.compose(t)?;
        }
        Ok(acc)
    }

    /// Inverse of U_T by peeling factors top-down: i_m = (sigma^(m))^{-1}(m-1),
    /// sigma^(m-1) = sigma^(m) t_{i_m,m}^{-1}.
    pub fn u_inverse(&self, sigma: &Permutation) -> Result<Vec<usize>, PermError> {
        if sigma.n() != self.n {
            return Err(PermError::SizeMismatch(sigma.n(), self.n));
        }
        let mut word = vec![0usize; self.n - 1];
        let mut cur = sigma.clone();
        for m in (2..=self.n).rev() {
            let i = cur.inverse().apply(m - 1);
            let t = self.entry(m, i).ok_or(PermError::NotInGroup)?;
            cur = cur.compose(&t.inverse())?;
            word[m - 2] = i;
        }
        if !cur.is_identity() {
            return Err(PermError::NotInGroup);
        }
        Ok(word)
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Fnv::new();
        h.write_usize(self.n);
        h.write_usize(self.ell);
        for level in &self.entries {
            for (i, p) in level {
                h.write_usize(*i);
                for &v in p.images() {
                    h.write_usize(v);
                }
            }
        }
        format!("{:016x}", h.finish())
    }
}

/// FNV-1a, used for stable fingerprints across processes.
pub(crate) struct Fnv(u64);

impl Fnv {
    pub fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }
    pub fn write_usize(&mut self, v: usize) {
        for b in (v as u64).to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    pub fn finish(&self) -> u64 {
        self.0
    }
}

/// JSON group specification: 1-based image arrays.
#[derive(Debug, Serialize, Deserialize)]
pub struct GroupSpec {
    pub n: usize,
    pub generators: Vec<Vec<usize>>,
    #[serde(default)]
    pub ell: Option<usize>,
}

impl GroupSpec {
    pub fn build(&self, cap: usize) -> Result<GroupTable, PermError> {
        let gens: Vec<Permutation> = self
            .generators
            .iter()
            .map(|g| {
                if g.len() != self.n {
                    Err(PermError::SizeMismatch(g.len(), self.n))
                } else {
                    Permutation::from_images_one_based(g)
                }
            })
            .collect::<Result<_, _>>()?;
        GroupTable::enumerate_with_n(&gens, self.n, cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: usize) -> GroupTable {
        GroupTable::symmetric(n, DEFAULT_ELEMENT_CAP).unwrap()
    }

    #[test]
    fn compose_identity_and_inverse() {
        let id = Permutation::identity(4);
        let sigma = Permutation::from_images_one_based(&[2, 3, 1, 4]).unwrap();
        assert_eq!(id.compose(&sigma).unwrap(), sigma);
        assert_eq!(sigma.compose(&id).unwrap(), sigma);
        assert!(sigma.compose(&sigma.inverse()).unwrap().is_identity());
    }

    #[test]
    fn compose_transpositions_hand_evaluated() {
        // a = (1 2), b = (2 3) on 3 points; (a o b)(i) = a(b(i)):
        // 1 -> 1 -> 2, 2 -> 3 -> 3, 3 -> 2 -> 1, i.e. the cycle 1->2->3->1.
        let a = Permutation::transposition(3, 0, 1);
        let b = Permutation::transposition(3, 1, 2);
        let c = a.compose(&b).unwrap();
        assert_eq!(c.one_based(), vec![2, 3, 1]);
    }

    #[test]
    fn compose_size_mismatch() {
        let a = Permutation::identity(3);
        let b = Permutation::identity(4);
        assert_eq!(a.compose(&b), Err(PermError::SizeMismatch(3, 4)));
    }

    #[test]
    fn cycle_counts() {
        assert_eq!(Permutation::identity(5).cycle_count(), 5);
        assert_eq!(Permutation::transposition(5, 0, 1).cycle_count(), 4);
        // (1 2 3)(4 5) in S_6: cycles {1,2,3}, {4,5}, {6}.
        let p = Permutation::from_images_one_based(&[2, 3, 1, 5, 4, 6]).unwrap();
        assert_eq!(p.cycle_count(), 3);
    }

    #[test]
    fn hamming_basics() {
        let id = Permutation::identity(5);
        let t = Permutation::transposition(5, 1, 3);
        assert_eq!(hamming(&id, &id).unwrap(), 0);
        assert_eq!(hamming(&id, &t).unwrap(), 2);
    }

    #[test]
    fn hamming_equals_degree_of_quotient_exhaustive_s4() {
        let g = s(4);
        for a in g.elements() {
            for b in g.elements() {
                let d = hamming(a, b).unwrap();
                assert_eq!(d, a.compose(&b.inverse()).unwrap().degree());
                // translation invariance
                for r in g.elements() {
                    let ar = a.compose(r).unwrap();
                    let br = b.compose(r).unwrap();
                    assert_eq!(hamming(&ar, &br).unwrap(), d);
                }
            }
        }
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(s(4).len(), 24);
        let a4 = GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap();
        assert_eq!(a4.len(), 12);
        let trivial = GroupTable::enumerate_with_n(&[], 4, 100).unwrap();
        assert_eq!(trivial.len(), 1);
        for m in 1..=4 {
            assert_eq!(trivial.orbit(m), &[m - 1]);
        }
        let prod = GroupTable::product_symmetric(&[2, 3], DEFAULT_ELEMENT_CAP).unwrap();
        assert_eq!(prod.len(), 12);
        assert_eq!(prod.k_n(), 3);
    }

    #[test]
    fn cap_exceeded() {
        let gens: Vec<Permutation> = (0..3)
            .map(|i| Permutation::transposition(4, i, i + 1))
            .collect();
        assert_eq!(
            GroupTable::enumerate(&gens, 10).unwrap_err(),
            PermError::CapExceeded(10)
        );
    }

    #[test]
    fn orbit_chain_structure_s4() {
        let g = s(4);
        for m in 1..=4 {
            let o: Vec<usize> = (0..m).collect();
            assert_eq!(g.orbit(m), &o[..]);
        }
        assert_eq!(g.subgroup_level(1).len(), 1);
        assert_eq!(g.subgroup_level(4).len(), 24);
        assert_eq!(g.k_n(), 3);
    }

    #[test]
    fn locality_checks() {
        assert!(s(4).is_ell_local(2));
        let a4 = GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap();
        assert!(!a4.is_ell_local(2));
        assert!(a4.is_ell_local(3));
        let trivial = GroupTable::enumerate_with_n(&[], 3, 10).unwrap();
        assert!(trivial.is_ell_local(2));
    }

    #[test]
    fn base_s3_is_transpositions() {
        let g = s(3);
        let base = LocalBase::build(&g, 2).unwrap();
        for m in 2..=3 {
            for i in 0..m - 1 {
                let t = base.entry(m, i).unwrap();
                assert_eq!(*t, Permutation::transposition(3, i, m - 1));
            }
            assert!(base.entry(m, m - 1).unwrap().is_identity());
        }
    }

    #[test]
    fn base_a4_degree_bound() {
        let a4 = GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap();
        let base = LocalBase::build(&a4, 3).unwrap();
        for m in 2..=4 {
            for i in base.orbit_points(m) {
                assert!(base.entry(m, i).unwrap().degree() <= 3);
            }
        }
        assert!(LocalBase::build(&a4, 2).is_err());
    }

    #[test]
    fn u_map_identity_word() {
        let g = s(4);
        let base = LocalBase::build(&g, 2).unwrap();
        assert!(base.u_map(&base.identity_word()).unwrap().is_identity());
    }

    #[test]
    fn u_map_single_factor_s3() {
        let g = s(3);
        let base = LocalBase::build(&g, 2).unwrap();
        // word (1, 3) in one-based labels = internal (0, 2): only t_{1,2} = (1 2).
        let p = base.u_map(&[0, 2]).unwrap();
        assert_eq!(p, Permutation::transposition(3, 0, 1));
    }

    #[test]
    fn u_inverse_hand_peeled_s3() {
        let g = s(3);
        let base = LocalBase::build(&g, 2).unwrap();
        // sigma = (1 3): i_3 = sigma^{-1}(3) = 1 (one-based), remainder id -> word (2, 1).
        let sigma = Permutation::transposition(3, 0, 2);
        let w = base.u_inverse(&sigma).unwrap();
        assert_eq!(w, vec![1, 0]);
        assert!(base.u_inverse(&Permutation::identity(3)).unwrap() == vec![1, 2]);
    }

    #[test]
    fn bijection_roundtrip_s4_and_a4() {
        for (g, ell) in [
            (s(4), 2),
            (GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap(), 3),
        ] {
            let base = LocalBase::build(&g, ell).unwrap();
            assert_eq!(base.word_count(), g.len());
            for w in base.words() {
                let sigma = base.u_map(&w).unwrap();
                assert!(g.contains(&sigma));
                assert_eq!(base.u_inverse(&sigma).unwrap(), w);
            }
            for sigma in g.elements() {
                let w = base.u_inverse(sigma).unwrap();
                assert_eq!(&base.u_map(&w).unwrap(), sigma);
            }
        }
    }

    #[test]
    fn u_inverse_rejects_non_members() {
        let a4 = GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap();
        let base = LocalBase::build(&a4, 3).unwrap();
        let odd = Permutation::transposition(4, 0, 1);
        assert_eq!(base.u_inverse(&odd).unwrap_err(), PermError::NotInGroup);
    }

    #[test]
    fn transposition_distance_s4() {
        let g = s(4);
        let id = Permutation::identity(4);
        let three_cycle = Permutation::from_images_one_based(&[2, 3, 1, 4]).unwrap();
        assert_eq!(transposition_distance(&g, 2, &id, &id).unwrap(), 0);
        assert_eq!(transposition_distance(&g, 2, &id, &three_cycle).unwrap(), 2);
        // d_T = n - |sigma tau^{-1}| for S_n with ell = 2, plus comparison bounds.
        let table = g.word_length_table(2).unwrap();
        for a in g.elements() {
            for b in g.elements() {
                let rel = a.compose(&b.inverse()).unwrap();
                let dt = table[g.index_of(&rel).unwrap()] as usize;
                assert_eq!(dt, 4 - rel.cycle_count());
                let dh = hamming(a, b).unwrap();
                if a != b {
                    assert!(dh <= 2 * dt, "1/2 d_H <= d_T");
                    assert!(dt <= dh - 1, "d_T <= d_H - 1");
                }
            }
        }
    }

    #[test]
    fn metric_axioms_exhaustive_s4() {
        let g = s(4);
        let table = g.word_length_table(2).unwrap();
        let dt = |a: &Permutation, b: &Permutation| {
            table[g.index_of(&a.compose(&b.inverse()).unwrap()).unwrap()] as usize
        };
        for a in g.elements() {
            for b in g.elements() {
                let dh = hamming(a, b).unwrap();
                assert_eq!(dh == 0, a == b);
                assert_eq!(dt(a, b) == 0, a == b);
                assert_eq!(dh, hamming(b, a).unwrap());
                assert_eq!(dt(a, b), dt(b, a));
                for c in g.elements() {
                    assert!(hamming(a, c).unwrap() <= dh + hamming(b, c).unwrap());
                    assert!(dt(a, c) <= dt(a, b) + dt(b, c));
                }
            }
        }
    }

    #[test]
    fn normality() {
        let s4 = s(4);
        let a4 = GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap();
        assert!(a4.is_normal_in(&s4));
        assert!(s4.is_normal_in(&s4));
        let gens = vec![Permutation::transposition(4, 0, 1)];
        let s2 = GroupTable::enumerate_with_n(&gens, 4, 100).unwrap();
        assert!(!s2.is_normal_in(&s4));
    }

    #[test]
    fn group_spec_roundtrip() {
        let spec = GroupSpec {
            n: 4,
            generators: vec![vec![2, 1, 3, 4], vec![1, 3, 2, 4], vec![1, 2, 4, 3]],
            ell: Some(2),
        };
        let g = spec.build(DEFAULT_ELEMENT_CAP).unwrap();
        assert_eq!(g.len(), 24);
    }
}
