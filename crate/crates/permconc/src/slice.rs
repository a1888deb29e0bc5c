//! Slices of the discrete cube, multinomial label sets, and the projections
//! from permutation groups onto them.

use crate::permcore::{Fnv, Permutation};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SliceError {
    #[error("k = {k} out of range for n = {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("parts must be nonzero and sum to n = {0}")]
    BadParts(usize),
    #[error("carrier too large: {0} points exceeds cap {1}")]
    TooLarge(usize, usize),
}

pub const SLICE_POINT_CAP: usize = 2_000;

/// The slice X_{k,n-k}: binary strings of length n with exactly k ones,
/// enumerated in lexicographic order.
#[derive(Clone, Debug)]
pub struct SliceSet {
    n: usize,
    k: usize,
    points: Vec<Vec<u8>>,
}

impl SliceSet {
    pub fn new(n: usize, k: usize) -> Result<Self, SliceError> {
        if k > n || n == 0 {
            return Err(SliceError::KOutOfRange { k, n });
        }
        let mut points = Vec::new();
        let mut cur = vec![0u8; n];
        gen_binary(&mut points, &mut cur, 0, k);
        if points.len() > SLICE_POINT_CAP {
            return Err(SliceError::TooLarge(points.len(), SLICE_POINT_CAP));
        }
        Ok(SliceSet { n, k, points })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[Vec<u8>] {
        &self.points
    }

    pub fn index_of(&self, point: &[u8]) -> Option<usize> {
        self.points.iter().position(|p| p == point)
    }

    pub fn carrier_id(&self) -> String {
        format!("slice:{}:{}", self.n, self.k)
    }

    /// Slice Hamming distance d_h(x,y) = (1/2) Σ 1_{x_i != y_i}.
    pub fn hamming_matrix(&self) -> Vec<Vec<f64>> {
        coord_distance_matrix(&self.points, 0.5)
    }
}

fn gen_binary(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, ones_left: usize) {
    let n = cur.len();
    if n - pos < ones_left {
        return;
    }
    if pos == n {
        out.push(cur.clone());
        return;
    }
    // lexicographic: 0 before 1
    cur[pos] = 0;
    gen_binary(out, cur, pos + 1, ones_left);
    if ones_left > 0 {
        cur[pos] = 1;
        gen_binary(out, cur, pos + 1, ones_left - 1);
        cur[pos] = 0;
    }
}

/// The multinomial label set X_{k_1,...,k_m}: strings over labels {0..m-1}
/// where label l occurs exactly k_{l+1} times, in lexicographic order.
#[derive(Clone, Debug)]
pub struct MultinomialSet {
    n: usize,
    parts: Vec<usize>,
    points: Vec<Vec<u8>>,
}

impl MultinomialSet {
    pub fn new(parts: &[usize]) -> Result<Self, SliceError> {
        let n: usize = parts.iter().sum();
        if n == 0 || parts.iter().any(|&k| k == 0) {
            return Err(SliceError::BadParts(n));
        }
        let mut points = Vec::new();
        let mut cur = vec![0u8; n];
        let mut left = parts.to_vec();
        gen_labels(&mut points, &mut cur, 0, &mut left);
        if points.len() > SLICE_POINT_CAP {
            return Err(SliceError::TooLarge(points.len(), SLICE_POINT_CAP));
        }
        Ok(MultinomialSet { n, parts: parts.to_vec(), points })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<u8>] {
        &self.points
    }

    pub fn index_of(&self, point: &[u8]) -> Option<usize> {
        self.points.iter().position(|p| p == point)
    }

    pub fn carrier_id(&self) -> String {
        let parts: Vec<String> = self.parts.iter().map(|k| k.to_string()).collect();
        format!("multinomial:{}:{}", self.n, parts.join(","))
    }
}

fn gen_labels(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, left: &mut [usize]) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for l in 0..left.len() {
        if left[l] > 0 {
            left[l] -= 1;
            cur[pos] = l as u8;
            gen_labels(out, cur, pos + 1, left);
            left[l] += 1;
        }
    }
}

/// P(σ) = indicator vector of σ([k]) = {σ(1),...,σ(k)}.
pub fn slice_projection(sigma: &Permutation, k: usize) -> Result<Vec<u8>, SliceError> {
    let n = sigma.n();
    if k > n {
        return Err(SliceError::KOutOfRange { k, n });
    }
    let mut x = vec![0u8; n];
    for j in 0..k {
        x[sigma.apply(j)] = 1;
    }
    Ok(x)
}

/// Multinomial projection: x_i = label l for every i in σ(J_l), where J_l is
/// the l-th consecutive block of sizes (k_1,...,k_m).
pub fn multinomial_projection(sigma: &Permutation, parts: &[usize]) -> Result<Vec<u8>, SliceError> {
    let n: usize = parts.iter().sum();
    if n != sigma.n() || parts.iter().any(|&k| k == 0) {
        return Err(SliceError::BadParts(sigma.n()));
    }
    let mut x = vec![0u8; n];
    let mut j = 0;
    for (l, &k) in parts.iter().enumerate() {
        for _ in 0..k {
            x[sigma.apply(j)] = l as u8;
            j += 1;
        }
    }
    Ok(x)
}

/// Distance matrix over coordinate vectors: scale · #{disagreements}.
pub fn coord_distance_matrix(coords: &[Vec<u8>], scale: f64) -> Vec<Vec<f64>> {
    let m = coords.len();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let c = coords[i]
                .iter()
                .zip(&coords[j])
                .filter(|(a, b)| a != b)
                .count();
            d[i][j] = scale * c as f64;
            d[j][i] = d[i][j];
        }
    }
    d
}

pub fn coords_fingerprint(coords: &[Vec<u8>]) -> String {
    let mut h = Fnv::new();
    for p in coords {
        for &v in p {
            h.write_usize(v as usize);
        }
    }
    format!("{:016x}", h.finish())
}
