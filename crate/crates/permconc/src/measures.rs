//! Probability measures on finite carriers, the product class over orbit
//! words, Ewens distributions, relative entropy, and total variation.
//!
//! Total variation uses the ×2 normalization ‖μ−ν‖ = Σ|μ(x)−ν(x)|
//! (equivalently 2·sup_A |μ(A)−ν(A)|); Pinsker-type constants in this crate
//! assume it.

use crate::permcore::{GroupTable, LocalBase, PermError, Permutation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("carrier mismatch: {0} vs {1}")]
    CarrierMismatch(String, String),
    #[error("weight length {0} does not match carrier cardinality {1}")]
    LengthMismatch(usize, usize),
    #[error("weights sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("negative weight {0}")]
    NegativeWeight(f64),
    #[error("empty carrier")]
    EmptyCarrier,
    #[error("theta must be positive, got {0}")]
    BadTheta(f64),
    #[error("carrier is not the full symmetric group")]
    NotSymmetricGroup,
    #[error("factor for chain level {level} has {got} weights, orbit has {want}")]
    FactorMismatch { level: usize, got: usize, want: usize },
    #[error(transparent)]
    Perm(#[from] PermError),
}

const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability vector over a finite indexed carrier.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Measure {
    pub carrier_id: String,
    pub weights: Vec<f64>,
}

impl Measure {
    pub fn new(carrier_id: impl Into<String>, weights: Vec<f64>) -> Result<Self, MeasureError> {
        if weights.is_empty() {
            return Err(MeasureError::EmptyCarrier);
        }
        if let Some(&w) = weights.iter().find(|&&w| w < 0.0) {
            return Err(MeasureError::NegativeWeight(w));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(MeasureError::NotNormalized(sum));
        }
        Ok(Measure { carrier_id: carrier_id.into(), weights })
    }

    /// Normalizes a nonnegative weight vector exactly (used by constructors
    /// whose analytic normalizer carries rounding error).
    fn from_unnormalized(
        carrier_id: impl Into<String>,
        mut weights: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        if weights.is_empty() {
            return Err(MeasureError::EmptyCarrier);
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(MeasureError::NotNormalized(sum));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Ok(Measure { carrier_id: carrier_id.into(), weights })
    }

    pub fn uniform(carrier_id: impl Into<String>, size: usize) -> Result<Self, MeasureError> {
        if size == 0 {
            return Err(MeasureError::EmptyCarrier);
        }
        Ok(Measure {
            carrier_id: carrier_id.into(),
            weights: vec![1.0 / size as f64; size],
        })
    }

    pub fn dirac(
        carrier_id: impl Into<String>,
        size: usize,
        at: usize,
    ) -> Result<Self, MeasureError> {
        if size == 0 || at >= size {
            return Err(MeasureError::EmptyCarrier);
        }
        let mut weights = vec![0.0; size];
        weights[at] = 1.0;
        Ok(Measure { carrier_id: carrier_id.into(), weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn same_carrier(&self, other: &Measure) -> Result<(), MeasureError> {
        if self.carrier_id != other.carrier_id || self.len() != other.len() {
            return Err(MeasureError::CarrierMismatch(
                self.carrier_id.clone(),
                other.carrier_id.clone(),
            ));
        }
        Ok(())
    }

    /// Expectation of a function given by its value vector.
    pub fn mean(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// A product measure on the orbit-word space O_2 × ... × O_n of a base.
/// `factors[m-2]` is indexed like `base.orbit_points(m)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductMeasure {
    pub factors: Vec<Vec<f64>>,
}

impl ProductMeasure {
    pub fn validate(&self, base: &LocalBase) -> Result<(), MeasureError> {
        if self.factors.len() != base.n().saturating_sub(1) {
            return Err(MeasureError::LengthMismatch(
                self.factors.len(),
                base.n() - 1,
            ));
        }
        for m in 2..=base.n() {
            let want = base.orbit_points(m).len();
            let f = &self.factors[m - 2];
            if f.len() != want {
                return Err(MeasureError::FactorMismatch { level: m, got: f.len(), want });
            }
            if let Some(&w) = f.iter().find(|&&w| w < 0.0) {
                return Err(MeasureError::NegativeWeight(w));
            }
            let sum: f64 = f.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(MeasureError::NotNormalized(sum));
            }
        }
        Ok(())
    }

    pub fn uniform(base: &LocalBase) -> Self {
        ProductMeasure {
            factors: (2..=base.n())
                .map(|m| {
                    let k = base.orbit_points(m).len();
                    vec![1.0 / k as f64; k]
                })
                .collect(),
        }
    }

    /// Mass of a word under the product.
    pub fn word_mass(&self, base: &LocalBase, word: &[usize]) -> Result<f64, MeasureError> {
        let mut mass = 1.0;
        for (lvl, &i) in word.iter().enumerate() {
            let m = lvl + 2;
            let pos = base
                .orbit_points(m)
                .iter()
                .position(|&p| p == i)
                .ok_or(PermError::WordOutsideOrbit { level: m, coord: i })?;
            mass *= self.factors[lvl][pos];
        }
        Ok(mass)
    }
}

/// Pushforward of a product measure through the word bijection: the mass of
/// σ is the product of its word coordinates' factor weights.
pub fn pushforward_product(
    group: &GroupTable,
    base: &LocalBase,
    product: &ProductMeasure,
) -> Result<Measure, MeasureError> {
    product.validate(base)?;
    let weights = group
        .elements()
        .iter()
        .map(|sigma| {
            let word = base.u_inverse(sigma)?;
            product.word_mass(base, &word)
        })
        .collect::<Result<Vec<f64>, MeasureError>>()?;
    // exact by construction: the words partition the product space
    Measure::new(group.fingerprint(), weights)
}

fn log_pochhammer(theta: f64, n: usize) -> f64 {
    (0..n).map(|i| (theta + i as f64).ln()).sum()
}

/// Ewens distribution on the full symmetric group: mass of σ proportional
/// to θ^{cycle count}, normalized by θ(θ+1)···(θ+n−1) in log-space.
pub fn ewens_closed(group: &GroupTable, theta: f64) -> Result<Measure, MeasureError> {
    if theta <= 0.0 {
        return Err(MeasureError::BadTheta(theta));
    }
    let n = group.n();
    let nfact: usize = (1..=n).product();
    if group.len() != nfact || !group.is_symmetric_full() {
        return Err(MeasureError::NotSymmetricGroup);
    }
    let log_norm = log_pochhammer(theta, n);
    let weights: Vec<f64> = group
        .elements()
        .iter()
        .map(|sigma| (sigma.cycle_count() as f64 * theta.ln() - log_norm).exp())
        .collect();
    Measure::from_unnormalized(group.fingerprint(), weights)
}

/// Chinese-restaurant factors for the Ewens distribution: level j gives mass
/// θ/(θ+j−1) to the fixed point j and 1/(θ+j−1) to each earlier point.
/// Valid for the standard 2-local base of S_n, whose level-j orbit is [1..j].
pub fn ewens_product(base: &LocalBase, theta: f64) -> Result<ProductMeasure, MeasureError> {
    if theta <= 0.0 {
        return Err(MeasureError::BadTheta(theta));
    }
    let mut factors = Vec::new();
    for m in 2..=base.n() {
        let points = base.orbit_points(m);
        if points.len() != m {
            return Err(MeasureError::NotSymmetricGroup);
        }
        let denom = theta + (m - 1) as f64;
        let f: Vec<f64> = points
            .iter()
            .map(|&i| if i == m - 1 { theta / denom } else { 1.0 / denom })
            .collect();
        factors.push(f);
    }
    Ok(ProductMeasure { factors })
}

/// Relative entropy H(ν|μ) = Σ ν(x) log(ν(x)/μ(x)), +∞ when ν charges a
/// μ-null point.
pub fn relative_entropy(nu: &Measure, mu: &Measure) -> Result<f64, MeasureError> {
    nu.same_carrier(mu)?;
    let mut h = 0.0;
    for (&p, &q) in nu.weights.iter().zip(&mu.weights) {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        h += p * (p / q).ln();
    }
    Ok(h.max(0.0))
}

/// Total variation with the ×2 convention: Σ|μ(x)−ν(x)| ∈ [0,2].
pub fn total_variation(mu: &Measure, nu: &Measure) -> Result<f64, MeasureError> {
    mu.same_carrier(nu)?;
    Ok(mu
        .weights
        .iter()
        .zip(&nu.weights)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Checks μ(σ) = μ(σ^{-1}) for all σ ∈ G and μ(σ) = μ(t^{-1}σt) for all
/// σ ∈ G, t in the ambient group, exhaustively with tolerance 1e-12.
pub fn check_invariance(
    mu: &Measure,
    group: &GroupTable,
    ambient: &GroupTable,
) -> Result<bool, MeasureError> {
    if mu.len() != group.len() {
        return Err(MeasureError::LengthMismatch(mu.len(), group.len()));
    }
    let tol = 1e-12;
    let lookup = |p: &Permutation| -> Option<f64> { group.index_of(p).map(|i| mu.weights[i]) };
    for (i, sigma) in group.elements().iter().enumerate() {
        match lookup(&sigma.inverse()) {
            Some(w) if (w - mu.weights[i]).abs() <= tol => {}
            _ => return Ok(false),
        }
        for t in ambient.elements() {
            let conj = t.inverse().compose(sigma)?.compose(t)?;
            match lookup(&conj) {
                Some(w) if (w - mu.weights[i]).abs() <= tol => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permcore::DEFAULT_ELEMENT_CAP;

    fn sym(n: usize) -> (GroupTable, LocalBase) {
        let g = GroupTable::symmetric(n, DEFAULT_ELEMENT_CAP).unwrap();
        let base = LocalBase::build(&g, 2).unwrap();
        (g, base)
    }

    #[test]
    fn uniform_weights() {
        let m = Measure::uniform("c", 6).unwrap();
        assert!(m.weights.iter().all(|&w| (w - 1.0 / 6.0).abs() < 1e-15));
        let s = Measure::uniform("c", 1).unwrap();
        assert_eq!(s.weights, vec![1.0]);
        assert!(Measure::uniform("c", 0).is_err());
    }

    #[test]
    fn measure_validation() {
        assert!(Measure::new("c", vec![0.5, 0.4]).is_err());
        assert!(Measure::new("c", vec![1.5, -0.5]).is_err());
        assert!(Measure::new("c", vec![0.25; 4]).is_ok());
    }

    #[test]
    fn pushforward_uniform_factors_is_uniform() {
        for (g, base) in [
            sym(3),
            sym(4),
            {
                let g = GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap();
                let b = LocalBase::build(&g, 3).unwrap();
                (g, b)
            },
            {
                let g = GroupTable::product_symmetric(&[2, 3], DEFAULT_ELEMENT_CAP).unwrap();
                let b = LocalBase::build(&g, 2).unwrap();
                (g, b)
            },
        ] {
            let m = pushforward_product(&g, &base, &ProductMeasure::uniform(&base)).unwrap();
            let u = 1.0 / g.len() as f64;
            assert!(m.weights.iter().all(|&w| (w - u).abs() < 1e-15));
        }
    }

    #[test]
    fn pushforward_dirac_factors_is_dirac_at_id() {
        let (g, base) = sym(4);
        let factors = (2..=4)
            .map(|m| {
                let pts = base.orbit_points(m);
                pts.iter().map(|&i| if i == m - 1 { 1.0 } else { 0.0 }).collect()
            })
            .collect();
        let meas = pushforward_product(&g, &base, &ProductMeasure { factors }).unwrap();
        let id_idx = g.index_of(&Permutation::identity(4)).unwrap();
        for (i, &w) in meas.weights.iter().enumerate() {
            assert_eq!(w, if i == id_idx { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn pushforward_half_half_on_s3() {
        // ν̂_2 = (½,½), ν̂_3 Dirac at the fixed point → uniform on {id, (1 2)}.
        let (g, base) = sym(3);
        let factors = vec![vec![0.5, 0.5], vec![0.0, 0.0, 1.0]];
        let meas = pushforward_product(&g, &base, &ProductMeasure { factors }).unwrap();
        let id_idx = g.index_of(&Permutation::identity(3)).unwrap();
        let t_idx = g.index_of(&Permutation::transposition(3, 0, 1)).unwrap();
        for (i, &w) in meas.weights.iter().enumerate() {
            if i == id_idx || i == t_idx {
                assert!((w - 0.5).abs() < 1e-15);
            } else {
                assert_eq!(w, 0.0);
            }
        }
    }

    #[test]
    fn ewens_theta_one_is_uniform() {
        let (g, _) = sym(4);
        let m = ewens_closed(&g, 1.0).unwrap();
        assert!(m.weights.iter().all(|&w| (w - 1.0 / 24.0).abs() < 1e-14));
    }

    #[test]
    fn ewens_n2_closed_form() {
        let (g, _) = sym(2);
        let theta = 3.0;
        let m = ewens_closed(&g, theta).unwrap();
        let id_idx = g.index_of(&Permutation::identity(2)).unwrap();
        assert!((m.weights[id_idx] - theta / (theta + 1.0)).abs() < 1e-14);
        assert!((m.weights[1 - id_idx] - 1.0 / (theta + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn ewens_normalizer_identity() {
        // Σ_σ θ^{|σ|} = θ^{(n)} on S_5, θ = 2.5.
        let (g, _) = sym(5);
        let theta: f64 = 2.5;
        let raw: f64 = g
            .elements()
            .iter()
            .map(|s| theta.powi(s.cycle_count() as i32))
            .sum();
        assert!((raw - log_pochhammer(theta, 5).exp()).abs() / raw < 1e-12);
        let m = ewens_closed(&g, theta).unwrap();
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ewens_rejects_non_symmetric() {
        let a4 = GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap();
        assert_eq!(
            ewens_closed(&a4, 2.0).unwrap_err(),
            MeasureError::NotSymmetricGroup
        );
        assert!(ewens_closed(&GroupTable::symmetric(3, 100).unwrap(), 0.0).is_err());
    }

    #[test]
    fn ewens_product_factors() {
        let (_, base) = sym(3);
        let p = ewens_product(&base, 2.0).unwrap();
        // level 3, θ=2: (1/4, 1/4, 2/4) over points {1,2,3}.
        assert_eq!(p.factors[1], vec![0.25, 0.25, 0.5]);
        // θ=1: uniform factors.
        let p1 = ewens_product(&base, 1.0).unwrap();
        for f in &p1.factors {
            let u = 1.0 / f.len() as f64;
            assert!(f.iter().all(|&w| (w - u).abs() < 1e-15));
        }
    }

    #[test]
    fn ewens_product_pushforward_matches_closed() {
        for n in 2..=6 {
            let (g, base) = sym(n);
            for theta in [0.1, 0.5, 1.0, 2.0, 10.0] {
                let closed = ewens_closed(&g, theta).unwrap();
                let prod = ewens_product(&base, theta).unwrap();
                let pushed = pushforward_product(&g, &base, &prod).unwrap();
                for (a, b) in pushed.weights.iter().zip(&closed.weights) {
                    assert!((a - b).abs() < 1e-12, "n={n} theta={theta}");
                }
            }
        }
    }

    #[test]
    fn entropy_basics() {
        let mu = Measure::uniform("c", 6).unwrap();
        assert_eq!(relative_entropy(&mu, &mu).unwrap(), 0.0);
        let d = Measure::dirac("c", 6, 0).unwrap();
        assert!((relative_entropy(&d, &mu).unwrap() - 6.0_f64.ln()).abs() < 1e-14);
        let null = Measure::new("c", vec![0.0, 0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(relative_entropy(&d, &null).unwrap(), f64::INFINITY);
        let other = Measure::uniform("other", 6).unwrap();
        assert!(relative_entropy(&d, &other).is_err());
    }

    #[test]
    fn tv_basics() {
        let mu = Measure::uniform("c", 2).unwrap();
        assert_eq!(total_variation(&mu, &mu).unwrap(), 0.0);
        let d = Measure::dirac("c", 2, 0).unwrap();
        assert!((total_variation(&d, &mu).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pinsker_on_random_pairs() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mu = Measure::uniform("s4", 24).unwrap();
        for _ in 0..500 {
            let raw: Vec<f64> = (0..24).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let nu = Measure::from_unnormalized("s4", raw).unwrap();
            let tv = total_variation(&mu, &nu).unwrap();
            let h = relative_entropy(&nu, &mu).unwrap();
            assert!(tv * tv <= 2.0 * h + 1e-10);
        }
    }

    #[test]
    fn invariance_checks() {
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        let u = Measure::uniform(g.fingerprint(), 24).unwrap();
        assert!(check_invariance(&u, &g, &g).unwrap());
        let ew = ewens_closed(&g, 2.0).unwrap();
        assert!(check_invariance(&ew, &g, &g).unwrap());

        // A skewed product measure on S_3 is not conjugation-invariant.
        let g3 = GroupTable::symmetric(3, DEFAULT_ELEMENT_CAP).unwrap();
        let base = LocalBase::build(&g3, 2).unwrap();
        let skew = ProductMeasure {
            factors: vec![vec![0.9, 0.1], vec![1.0 / 3.0; 3]],
        };
        let mu = pushforward_product(&g3, &base, &skew).unwrap();
        assert!(!check_invariance(&mu, &g3, &g3).unwrap());
    }
}
