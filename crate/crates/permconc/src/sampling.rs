//! Random generation of permutations from product measures on the word
//! space of a local base, plus deviation experiments for configuration
//! functions (cycle counts, Lipschitz-convex images, suprema of linear
//! families) against the closed-form concentration bounds.

use crate::measures::{pushforward_product, Measure, MeasureError, ProductMeasure};
use crate::permcore::{GroupTable, LocalBase, PermError, Permutation};
use rand::distributions::{Distribution, WeightedIndex};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write as IoWrite;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("cycle length {0} out of range 1..={1}")]
    CycleLengthOutOfRange(usize, usize),
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("statistic parameter mismatch: {0}")]
    BadStatistic(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Number of samples drawn per independent RNG stream; fixed so results do
/// not depend on the worker-thread count.
const STREAM_CHUNK: usize = 4096;

/// Exact-tail cap: groups of at most this order are enumerated instead of
/// sampled.
pub const EXACT_TAIL_CAP: usize = 5040;

/// Draws `count` permutations whose law is exactly the pushforward of
/// `product` through the base's word map: each word coordinate is drawn
/// independently from its factor. Seeded and thread-count independent.
pub fn sample(
    base: &LocalBase,
    product: &ProductMeasure,
    count: usize,
    seed: u64,
) -> Result<Vec<Permutation>, SamplingError> {
    if count == 0 {
        return Err(SamplingError::EmptySample);
    }
    product.validate(base)?;
    let n = base.n();
    let levels: Vec<(Vec<usize>, WeightedIndex<f64>)> = (2..=n)
        .map(|m| {
            let pts = base.orbit_points(m);
            let idx = WeightedIndex::new(product.factors[m - 2].iter().copied())
                .expect("validated factor weights");
            (pts, idx)
        })
        .collect();
    let chunks = count.div_ceil(STREAM_CHUNK);
    let out: Vec<Vec<Permutation>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64 + 1);
            let lo = chunk * STREAM_CHUNK;
            let hi = ((chunk + 1) * STREAM_CHUNK).min(count);
            (lo..hi)
                .map(|_| {
                    let word: Vec<usize> = levels
                        .iter()
                        .map(|(pts, idx)| pts[idx.sample(&mut rng)])
                        .collect();
                    base.u_map(&word).expect("word drawn from orbit supports")
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Number of length-`l` cycles in the cycle decomposition of `sigma`
/// (fixed points count as 1-cycles).
pub fn l_cycle_statistic(sigma: &Permutation, l: usize) -> Result<usize, SamplingError> {
    if l == 0 || l > sigma.n() {
        return Err(SamplingError::CycleLengthOutOfRange(l, sigma.n()));
    }
    Ok(sigma.cycles().iter().filter(|c| c.len() == l).count())
}

/// The statistic families a deviation experiment can target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum StatisticKind {
    /// g(σ) = number of length-l cycles of σ.
    LCycleCount { l: usize },
    /// g(σ) = ‖x_σ − anchor‖₂ with x_σ = (x_{σ(1)}, …, x_{σ(n)}): a
    /// 1-Lipschitz convex image of the permuted coordinate vector.
    LipschitzConvex { x: Vec<f64>, anchor: Vec<f64> },
    /// g(σ) = max_t Σ_k a^t[k][σ(k)] over a finite family of nonnegative
    /// score matrices.
    SupLinearFamily { matrices: Vec<Vec<Vec<f64>>> },
}

impl StatisticKind {
    pub fn evaluate(&self, sigma: &Permutation) -> Result<f64, SamplingError> {
        match self {
            StatisticKind::LCycleCount { l } => Ok(l_cycle_statistic(sigma, *l)? as f64),
            StatisticKind::LipschitzConvex { x, anchor } => {
                let (y, a) = self.permuted(sigma, x, anchor)?;
                Ok(y.iter()
                    .zip(&a)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt())
            }
            StatisticKind::SupLinearFamily { matrices } => {
                if matrices.is_empty() {
                    return Err(SamplingError::BadStatistic("empty family".into()));
                }
                Ok(matrices
                    .iter()
                    .map(|m| (0..sigma.n()).map(|k| m[k][sigma.apply(k)]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    fn permuted(
        &self,
        sigma: &Permutation,
        x: &[f64],
        anchor: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), SamplingError> {
        if x.len() != sigma.n() || anchor.len() != sigma.n() {
            return Err(SamplingError::BadStatistic(
                "x/anchor length must equal n".into(),
            ));
        }
        let y: Vec<f64> = (0..sigma.n()).map(|k| x[sigma.apply(k)]).collect();
        Ok((y, anchor.to_vec()))
    }

    /// The coordinate coefficients α_k(τ) certifying the configuration
    /// inequality g(τ) − g(σ) ≤ Σ_k α_k(τ)·1_{τ(k) ≠ σ(k)}.
    pub fn alphas(&self, tau: &Permutation) -> Result<Vec<f64>, SamplingError> {
        let n = tau.n();
        match self {
            StatisticKind::LCycleCount { l } => {
                let mut a = vec![0.0; n];
                for cyc in tau.cycles() {
                    if cyc.len() == *l {
                        for &k in &cyc {
                            a[k] = 1.0;
                        }
                    }
                }
                Ok(a)
            }
            StatisticKind::LipschitzConvex { x, anchor } => {
                // gradient of y ↦ ‖y − anchor‖ at y = x_τ; zero at the anchor
                let (y, anc) = self.permuted(tau, x, anchor)?;
                let norm = y
                    .iter()
                    .zip(&anc)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt();
                if norm < 1e-300 {
                    return Ok(vec![0.0; n]);
                }
                Ok(y.iter().zip(&anc).map(|(u, v)| ((u - v) / norm).abs()).collect())
            }
            StatisticKind::SupLinearFamily { matrices } => {
                let best = matrices
                    .iter()
                    .max_by(|m1, m2| {
                        let s1: f64 = (0..n).map(|k| m1[k][tau.apply(k)]).sum();
                        let s2: f64 = (0..n).map(|k| m2[k][tau.apply(k)]).sum();
                        s1.total_cmp(&s2)
                    })
                    .ok_or_else(|| SamplingError::BadStatistic("empty family".into()))?;
                Ok((0..n).map(|k| best[k][tau.apply(k)]).collect())
            }
        }
    }

    /// An M with |α(τ)|₂² ≤ M·g(τ) for every τ, when one exists.
    pub fn bernstein_m(&self) -> Option<f64> {
        match self {
            // α_k ∈ {0,1} with exactly l·g ones: |α|₂² = l·g
            StatisticKind::LCycleCount { l } => Some(*l as f64),
            StatisticKind::LipschitzConvex { .. } => None,
            StatisticKind::SupLinearFamily { matrices } => {
                let m = matrices
                    .iter()
                    .flatten()
                    .flatten()
                    .fold(0.0f64, |acc, &v| acc.max(v));
                Some(m)
            }
        }
    }
}

/// Configuration of a deviation experiment; serialized alongside reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationExperiment {
    pub statistic: StatisticKind,
    pub sample_count: usize,
    pub seed: u64,
    pub u_grid: Vec<f64>,
}

/// One grid point of a deviation report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationRow {
    pub u: f64,
    pub empirical_upper_tail: f64,
    pub bound_upper: f64,
    pub empirical_lower_tail: f64,
    pub bound_lower: f64,
    pub bound_median: f64,
    /// Strict tail above the median, for checking `bound_median`; not a CSV
    /// column. Strictness matters for atomic laws: μ(g ≥ M) ≥ 1/2 by the
    /// definition of a median, while the bound equals 1/2 at u = 0; the
    /// sublevel-set inclusion behind the bound is strict, so the discrete
    /// statement controls μ(g > M(g) + u).
    pub median_upper_tail: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationReport {
    pub rows: Vec<DeviationRow>,
    pub mean: f64,
    pub median: f64,
    /// Tails computed by exact enumeration rather than Monte Carlo.
    pub exact: bool,
    /// Monte Carlo standard error of the mean estimate; None when exact.
    pub standard_error: Option<f64>,
    pub c2: f64,
    pub seed: u64,
    pub sample_count: usize,
    pub sup_alpha2: f64,
    pub mean_alpha2: f64,
    pub bernstein_m: Option<f64>,
}

fn is_uniform(mu: &Measure) -> bool {
    let w = 1.0 / mu.len() as f64;
    mu.weights.iter().all(|&v| (v - w).abs() < 1e-12)
}

fn is_hypoinvariant(group: &GroupTable, mu: &Measure) -> bool {
    let tol = 1e-12;
    for (id, sigma) in group.elements().iter().enumerate() {
        let inv = group.index_of(&sigma.inverse()).expect("closed group");
        if (mu.weights[id] - mu.weights[inv]).abs() > tol {
            return false;
        }
    }
    for t in group.elements() {
        let t_inv = t.inverse();
        for (id, sigma) in group.elements().iter().enumerate() {
            let conj = t_inv
                .compose(sigma)
                .and_then(|p| p.compose(t))
                .expect("same degree");
            let cid = group.index_of(&conj).expect("closed group");
            if (mu.weights[id] - mu.weights[cid]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// The squared constant c(ℓ)² for configuration-function bounds: a uniform
/// measure gives 2(ℓ−1)² + 2; a symmetric, conjugation-invariant measure on
/// a normal subgroup of S_n gives 8(ℓ−1)² + 2.
pub fn configuration_constant_sq(group: &GroupTable, mu: &Measure) -> Option<f64> {
    let ell = group.minimal_locality()? as f64;
    if is_uniform(mu) {
        return Some(2.0 * (ell - 1.0) * (ell - 1.0) + 2.0);
    }
    let ambient = GroupTable::symmetric(group.n(), group.len().max(5040) * 2).ok()?;
    if group.is_normal_in(&ambient) && is_hypoinvariant(group, mu) {
        return Some(8.0 * (ell - 1.0) * (ell - 1.0) + 2.0);
    }
    None
}

/// Runs the experiment against measure μ = pushforward of `product`:
/// exact tails by enumeration when |G| ≤ `EXACT_TAIL_CAP`, Monte Carlo
/// otherwise, with the closed-form upper/lower/median bounds at each grid
/// point. `c2_override` bypasses the automatic constant (canary runs).
pub fn run_deviation_experiment(
    group: &GroupTable,
    base: &LocalBase,
    product: &ProductMeasure,
    exp: &DeviationExperiment,
    c2_override: Option<f64>,
) -> Result<DeviationReport, SamplingError> {
    if exp.sample_count == 0 {
        return Err(SamplingError::EmptySample);
    }
    let mu = pushforward_product(group, base, product)?;
    let c2 = match c2_override {
        Some(v) => v,
        None => configuration_constant_sq(group, &mu).ok_or_else(|| {
            SamplingError::BadStatistic(
                "no configuration constant for this group/measure pair".into(),
            )
        })?,
    };
    let c = c2.sqrt();

    // per-element statistic values and |α|₂²
    let g_vals: Vec<f64> = group
        .elements()
        .iter()
        .map(|s| exp.statistic.evaluate(s))
        .collect::<Result<_, _>>()?;
    let alpha2: Vec<f64> = group
        .elements()
        .iter()
        .map(|s| {
            exp.statistic
                .alphas(s)
                .map(|a| a.iter().map(|v| v * v).sum::<f64>())
        })
        .collect::<Result<_, _>>()?;
    let sup_alpha2 = alpha2.iter().cloned().fold(0.0f64, f64::max);
    let mean_alpha2 = mu.mean(&alpha2);
    let bernstein_m = exp.statistic.bernstein_m();

    #[derive(Clone, Copy, PartialEq)]
    enum Tail {
        Ge,
        Le,
        Gt,
    }
    let matches_tail = |g: f64, thresh: f64, mode: Tail| match mode {
        Tail::Ge => g >= thresh,
        Tail::Le => g <= thresh,
        Tail::Gt => g > thresh,
    };
    let exact = group.len() <= EXACT_TAIL_CAP;
    let (mean, tail_at, standard_error): (f64, Box<dyn Fn(f64, Tail) -> f64>, Option<f64>);
    if exact {
        let m = mu.mean(&g_vals);
        let weights = mu.weights.clone();
        let gv = g_vals.clone();
        mean = m;
        standard_error = None;
        tail_at = Box::new(move |thresh: f64, mode: Tail| {
            gv.iter()
                .zip(&weights)
                .filter(|(&g, _)| matches_tail(g, thresh, mode))
                .map(|(_, &w)| w)
                .sum()
        });
    } else {
        let draws = sample(base, product, exp.sample_count, exp.seed)?;
        let vals: Vec<f64> = draws
            .iter()
            .map(|s| exp.statistic.evaluate(s))
            .collect::<Result<_, _>>()?;
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var =
            vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (vals.len() - 1).max(1) as f64;
        mean = m;
        standard_error = Some((var / vals.len() as f64).sqrt());
        let count = vals.len() as f64;
        tail_at = Box::new(move |thresh: f64, mode: Tail| {
            vals.iter()
                .filter(|&&g| matches_tail(g, thresh, mode))
                .count() as f64
                / count
        });
    }

    // median: smallest value with μ(g ≤ v) ≥ 1/2, from the exact law when
    // available, else from the empirical distribution
    let median = {
        let mut pairs: Vec<(f64, f64)> = if exact {
            g_vals.iter().cloned().zip(mu.weights.iter().cloned()).collect()
        } else {
            // approximate via the exact enumeration anyway when cheap
            g_vals
                .iter()
                .cloned()
                .zip(mu.weights.iter().cloned())
                .collect()
        };
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let mut med = pairs.last().map(|p| p.0).unwrap_or(0.0);
        for (v, w) in pairs {
            acc += w;
            if acc >= 0.5 - 1e-12 {
                med = v;
                break;
            }
        }
        med
    };

    let w_fn = |u: f64| u * (u - 2.0 * (2.0f64.ln()).sqrt());
    let rows = exp
        .u_grid
        .iter()
        .map(|&u| {
            let mut bound_upper = if sup_alpha2 > 0.0 {
                (-u * u / (2.0 * c2 * sup_alpha2)).exp()
            } else {
                if u > 0.0 { 0.0 } else { 1.0 }
            };
            if let Some(m) = bernstein_m {
                if m > 0.0 {
                    let b = (-u * u / (2.0 * c2 * m * (mean + u))).exp();
                    bound_upper = bound_upper.min(b);
                }
            }
            let bound_lower = if mean_alpha2 > 0.0 {
                (-u * u / (2.0 * c2 * mean_alpha2)).exp()
            } else {
                if u > 0.0 { 0.0 } else { 1.0 }
            };
            let bound_median = if sup_alpha2 > 0.0 {
                0.5 * (-w_fn(u / (2.0f64.sqrt() * c * sup_alpha2.sqrt()))).exp()
            } else {
                if u > 0.0 { 0.0 } else { 0.5 }
            };
            DeviationRow {
                u,
                empirical_upper_tail: tail_at(mean + u, Tail::Ge),
                bound_upper: bound_upper.min(1.0),
                empirical_lower_tail: tail_at(mean - u, Tail::Le),
                bound_lower: bound_lower.min(1.0),
                bound_median: bound_median.min(1.0),
                median_upper_tail: tail_at(median + u, Tail::Gt),
            }
        })
        .collect();

    Ok(DeviationReport {
        rows,
        mean,
        median,
        exact,
        standard_error,
        c2,
        seed: exp.seed,
        sample_count: exp.sample_count,
        sup_alpha2,
        mean_alpha2,
        bernstein_m,
    })
}

/// Writes the report in CSV form: one header line, one row per grid point.
pub fn write_csv<W: IoWrite>(report: &DeviationReport, out: &mut W) -> Result<(), SamplingError> {
    writeln!(
        out,
        "u,empirical_upper_tail,bound_upper,empirical_lower_tail,bound_lower,bound_median"
    )?;
    // Adding +0.0 canonicalizes IEEE negative zero so reports are
    // byte-stable across arithmetic paths.
    for r in &report.rows {
        writeln!(
            out,
            "{:.12},{:.12},{:.12},{:.12},{:.12},{:.12}",
            r.u + 0.0,
            r.empirical_upper_tail + 0.0,
            r.bound_upper + 0.0,
            r.empirical_lower_tail + 0.0,
            r.bound_lower + 0.0,
            r.bound_median + 0.0
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{ewens_closed, ewens_product};
    use crate::permcore::DEFAULT_ELEMENT_CAP;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn base_for(group: &GroupTable) -> LocalBase {
        let ell = group.minimal_locality().unwrap();
        LocalBase::build(group, ell).unwrap()
    }

    #[test]
    fn dirac_factors_sample_constant() {
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        let b = base_for(&g);
        // Dirac on a fixed word
        let word: Vec<usize> = b.orbit_points(2).first().copied().into_iter()
            .chain(b.orbit_points(3).last().copied())
            .chain(b.orbit_points(4).first().copied())
            .collect();
        let factors: Vec<Vec<f64>> = (2..=4)
            .map(|m| {
                let pts = b.orbit_points(m);
                pts.iter().map(|&p| if p == word[m - 2] { 1.0 } else { 0.0 }).collect()
            })
            .collect();
        let product = ProductMeasure { factors };
        let target = b.u_map(&word).unwrap();
        for s in sample(&b, &product, 50, 7).unwrap() {
            assert_eq!(s, target);
        }
    }

    #[test]
    fn uniform_s3_frequencies_within_binomial_band() {
        let g = GroupTable::symmetric(3, DEFAULT_ELEMENT_CAP).unwrap();
        let b = base_for(&g);
        let product = ProductMeasure::uniform(&b);
        let n_samples = 60_000usize;
        let draws = sample(&b, &product, n_samples, 42).unwrap();
        let mut counts = vec![0usize; 6];
        for d in &draws {
            counts[g.index_of(d).unwrap()] += 1;
        }
        let p = 1.0 / 6.0;
        let sd = (n_samples as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - n_samples as f64 * p).abs() <= 4.0 * sd);
        }
    }

    #[test]
    fn ewens_cycle_count_marginal_within_band() {
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        let b = base_for(&g);
        let product = ewens_product(&b, 2.0).unwrap();
        let exact = ewens_closed(&g, 2.0).unwrap();
        let n_samples = 60_000usize;
        let draws = sample(&b, &product, n_samples, 5).unwrap();
        // marginal of the cycle count
        let mut exact_marginal = vec![0.0; 5];
        for (id, s) in g.elements().iter().enumerate() {
            exact_marginal[s.cycle_count()] += exact.weights[id];
        }
        let mut counts = vec![0usize; 5];
        for d in &draws {
            counts[d.cycle_count()] += 1;
        }
        for k in 1..=4 {
            let p = exact_marginal[k];
            let sd = (n_samples as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!(
                (counts[k] as f64 - n_samples as f64 * p).abs() <= 4.0 * sd,
                "cycle count {k}"
            );
        }
    }

    #[test]
    fn chi_square_goodness_of_fit_s3_and_a4() {
        for (g, theta) in [
            (GroupTable::symmetric(3, DEFAULT_ELEMENT_CAP).unwrap(), None),
            (GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap(), None),
            (GroupTable::symmetric(3, DEFAULT_ELEMENT_CAP).unwrap(), Some(2.0)),
        ] {
            let b = base_for(&g);
            let product = match theta {
                Some(t) => ewens_product(&b, t).unwrap(),
                None => ProductMeasure::uniform(&b),
            };
            let mu = pushforward_product(&g, &b, &product).unwrap();
            let n_samples = 100_000usize;
            let draws = sample(&b, &product, n_samples, 2024).unwrap();
            let mut counts = vec![0usize; g.len()];
            for d in &draws {
                counts[g.index_of(d).unwrap()] += 1;
            }
            let stat: f64 = counts
                .iter()
                .zip(&mu.weights)
                .map(|(&o, &p)| {
                    let e = n_samples as f64 * p;
                    (o as f64 - e) * (o as f64 - e) / e
                })
                .sum();
            let dist = ChiSquared::new((g.len() - 1) as f64).unwrap();
            let p_value = 1.0 - dist.cdf(stat);
            assert!(p_value > 1e-4, "chi-square p-value {p_value} too small");
        }
    }

    #[test]
    fn sampling_reproducible_and_stream_split_deterministic() {
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        let b = base_for(&g);
        let product = ProductMeasure::uniform(&b);
        let a = sample(&b, &product, 9000, 99).unwrap();
        let c = sample(&b, &product, 9000, 99).unwrap();
        assert_eq!(a, c);
        // a shorter run is a prefix-consistent chunk draw
        let d = sample(&b, &product, 4096, 99).unwrap();
        assert_eq!(&a[..4096], &d[..]);
    }

    #[test]
    fn l_cycle_examples() {
        let id = Permutation::identity(4);
        assert_eq!(l_cycle_statistic(&id, 1).unwrap(), 4);
        let two_two = Permutation::from_images_one_based(&[2, 1, 4, 3]).unwrap();
        assert_eq!(l_cycle_statistic(&two_two, 2).unwrap(), 2);
        assert_eq!(l_cycle_statistic(&two_two, 1).unwrap(), 0);
        assert!(l_cycle_statistic(&two_two, 5).is_err());
        assert!(l_cycle_statistic(&two_two, 0).is_err());
    }

    #[test]
    fn alpha_norm_identity_and_configuration_inequality_s4() {
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        for l in 1..=4usize {
            let kind = StatisticKind::LCycleCount { l };
            for tau in g.elements() {
                let gval = l_cycle_statistic(tau, l).unwrap() as f64;
                let a = kind.alphas(tau).unwrap();
                let norm2: f64 = a.iter().map(|v| v * v).sum();
                assert!((norm2 - l as f64 * gval).abs() < 1e-12, "|α|₂² = l·g");
                for sigma in g.elements() {
                    let bound: f64 = (0..4)
                        .map(|k| if tau.apply(k) != sigma.apply(k) { a[k] } else { 0.0 })
                        .sum();
                    let gs = l_cycle_statistic(sigma, l).unwrap() as f64;
                    assert!(gval - gs <= bound + 1e-12);
                }
            }
        }
    }

    #[test]
    fn configuration_inequality_other_statistics_s4() {
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        let kinds = [
            StatisticKind::LipschitzConvex {
                x: vec![0.1, 0.9, 0.4, 0.7],
                anchor: vec![0.5; 4],
            },
            StatisticKind::SupLinearFamily {
                matrices: vec![
                    vec![
                        vec![0.2, 0.8, 0.1, 0.5],
                        vec![0.7, 0.3, 0.9, 0.2],
                        vec![0.4, 0.6, 0.5, 0.1],
                        vec![0.3, 0.2, 0.8, 0.6],
                    ],
                    vec![
                        vec![0.5, 0.1, 0.6, 0.3],
                        vec![0.2, 0.9, 0.4, 0.8],
                        vec![0.7, 0.3, 0.2, 0.5],
                        vec![0.1, 0.6, 0.3, 0.9],
                    ],
                ],
            },
        ];
        for kind in &kinds {
            for tau in g.elements() {
                let gt = kind.evaluate(tau).unwrap();
                let a = kind.alphas(tau).unwrap();
                for sigma in g.elements() {
                    let gs = kind.evaluate(sigma).unwrap();
                    let bound: f64 = (0..4)
                        .map(|k| if tau.apply(k) != sigma.apply(k) { a[k] } else { 0.0 })
                        .sum();
                    assert!(gt - gs <= bound + 1e-9);
                }
            }
        }
    }

    fn check_report_sound(report: &DeviationReport) {
        let mut prev_u = f64::NEG_INFINITY;
        let mut prev_up = f64::INFINITY;
        let mut prev_lo = f64::INFINITY;
        for r in &report.rows {
            assert!(r.u > prev_u, "grid increasing");
            assert!(r.empirical_upper_tail <= prev_up + 1e-12);
            assert!(r.empirical_lower_tail <= prev_lo + 1e-12);
            prev_u = r.u;
            prev_up = r.empirical_upper_tail;
            prev_lo = r.empirical_lower_tail;
            assert!(
                r.empirical_upper_tail <= r.bound_upper + 1e-12,
                "upper bound violated at u = {}: {} > {}",
                r.u,
                r.empirical_upper_tail,
                r.bound_upper
            );
            assert!(
                r.empirical_lower_tail <= r.bound_lower + 1e-12,
                "lower bound violated at u = {}",
                r.u
            );
            assert!(
                r.median_upper_tail <= r.bound_median + 1e-12,
                "median bound violated at u = {}",
                r.u
            );
        }
    }

    #[test]
    fn deviation_bounds_dominate_exact_tails() {
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.1 + 1e-9).collect();
        for group in [
            GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap(),
            GroupTable::alternating(4, DEFAULT_ELEMENT_CAP).unwrap(),
        ] {
            let b = base_for(&group);
            for theta in [None, Some(0.5), Some(2.0)] {
                if theta.is_some() && !group.is_symmetric_full() {
                    continue; // Ewens factors need the full chain
                }
                let product = match theta {
                    Some(t) => ewens_product(&b, t).unwrap(),
                    None => ProductMeasure::uniform(&b),
                };
                for l in [1usize, 2] {
                    let exp = DeviationExperiment {
                        statistic: StatisticKind::LCycleCount { l },
                        sample_count: 1,
                        seed: 1,
                        u_grid: grid.clone(),
                    };
                    let report =
                        run_deviation_experiment(&group, &b, &product, &exp, None).unwrap();
                    assert!(report.exact);
                    check_report_sound(&report);
                }
            }
        }
    }

    #[test]
    fn uniform_s4_two_cycles_bernstein_form() {
        // the Bernstein-form bound with c² = 4, M = 2 must dominate the
        // exact upper tail at every grid point
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        let b = base_for(&g);
        let product = ProductMeasure::uniform(&b);
        let exp = DeviationExperiment {
            statistic: StatisticKind::LCycleCount { l: 2 },
            sample_count: 1,
            seed: 1,
            u_grid: (0..50).map(|i| i as f64 * 0.05).collect(),
        };
        let report = run_deviation_experiment(&g, &b, &product, &exp, None).unwrap();
        assert!((report.c2 - 4.0).abs() < 1e-12, "uniform constant 2(ℓ−1)²+2");
        for r in &report.rows {
            let bern = (-r.u * r.u / (2.0 * 4.0 * 2.0 * (report.mean + r.u))).exp();
            assert!(r.empirical_upper_tail <= bern + 1e-12);
            if r.u == 0.0 {
                assert_eq!(r.bound_upper, 1.0);
            }
        }
        // Ewens θ = 2 selects the invariant-measure constant 8(ℓ−1)²+2
        let prod_e = ewens_product(&b, 2.0).unwrap();
        let rep_e = run_deviation_experiment(&g, &b, &prod_e, &exp, None).unwrap();
        assert!((rep_e.c2 - 10.0).abs() < 1e-12);
        check_report_sound(&rep_e);
    }

    #[test]
    fn lipschitz_convex_two_sided_bound() {
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        let b = base_for(&g);
        let product = ProductMeasure::uniform(&b);
        let exp = DeviationExperiment {
            statistic: StatisticKind::LipschitzConvex {
                x: vec![0.05, 0.95, 0.3, 0.65],
                anchor: vec![0.5; 4],
            },
            sample_count: 1,
            seed: 1,
            u_grid: (0..30).map(|i| i as f64 * 0.05).collect(),
        };
        let report = run_deviation_experiment(&g, &b, &product, &exp, None).unwrap();
        check_report_sound(&report);
        // |∇φ| ≤ 1 gives the two-sided form 2·exp(−u²/(2c²)); for u > 0 the
        // two tails are disjoint, so their sum is μ(|g − μ(g)| ≥ u)
        for r in &report.rows {
            if r.u > 0.0 {
                let two_sided = 2.0 * (-r.u * r.u / (2.0 * report.c2)).exp();
                assert!(r.empirical_upper_tail + r.empirical_lower_tail <= two_sided + 1e-12);
            }
        }
    }

    #[test]
    fn csv_output_shape() {
        let g = GroupTable::symmetric(3, DEFAULT_ELEMENT_CAP).unwrap();
        let b = base_for(&g);
        let product = ProductMeasure::uniform(&b);
        let exp = DeviationExperiment {
            statistic: StatisticKind::LCycleCount { l: 2 },
            sample_count: 1,
            seed: 3,
            u_grid: vec![0.0, 0.5, 1.0],
        };
        let report = run_deviation_experiment(&g, &b, &product, &exp, None).unwrap();
        let mut buf = Vec::new();
        write_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.trim().lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(
            lines[0],
            "u,empirical_upper_tail,bound_upper,empirical_lower_tail,bound_lower,bound_median"
        );
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 6);
        }
    }

    #[test]
    fn rejects_empty_sample_count() {
        let g = GroupTable::symmetric(3, DEFAULT_ELEMENT_CAP).unwrap();
        let b = base_for(&g);
        let product = ProductMeasure::uniform(&b);
        assert!(matches!(
            sample(&b, &product, 0, 1),
            Err(SamplingError::EmptySample)
        ));
    }
}
