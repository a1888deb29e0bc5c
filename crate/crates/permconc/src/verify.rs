//! The inequality-verification engine: for each transport-entropy or
//! concentration inequality, generate witness measures (exhaustive Dirac
//! families plus seeded Dirichlet(1) pairs), compute both sides with
//! certified solver gaps, and report slack. A report fails iff some trial
//! has slack below −(accumulated solver gaps + the global tolerance).

use crate::dualops::{q_hat, q_paren, q_tilde, q_tilde_alpha, r_c, talagrand_f, DualError};
use crate::measures::{
    pushforward_product, relative_entropy, total_variation, Measure, MeasureError, ProductMeasure,
};
use crate::measures::{check_invariance, ewens_product};
use crate::permcore::{GroupTable, LocalBase, PermError, DEFAULT_ELEMENT_CAP};
use crate::slice::{
    coord_distance_matrix, multinomial_projection, slice_projection, MultinomialSet, SliceError,
    SliceSet,
};
use crate::transport::{
    group_coords, hamming_matrix, t2_hat, t2_paren, t2_tilde, transposition_matrix_cached, w1,
    FwOptions, TransportError, WeakObjective,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Global slack tolerance added to certified solver gaps.
pub const TOLERANCE: f64 = 1e-8;

/// Frank-Wolfe options used by the verification batches: the certified gap
/// is carried into each trial's allowance, so a modest tolerance is sound.
fn fw_opts() -> FwOptions {
    FwOptions { gap_tol: 1e-6, max_iters: 50_000 }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Slice(#[from] SliceError),
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trial {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs; negative beyond gaps + tolerance means failure.
    pub slack: f64,
    /// Accumulated certified solver gaps entering this trial.
    pub gaps: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub inequality_id: String,
    pub carrier: String,
    pub constants: BTreeMap<String, f64>,
    pub trials: Vec<Trial>,
    pub worst_slack: f64,
    /// Minimal RHS/LHS over trials with LHS bounded away from zero — the
    /// tightness probe.
    pub min_ratio: Option<f64>,
    pub pass: bool,
    pub tolerance: f64,
    pub seed: u64,
}

impl VerificationReport {
    fn build(
        inequality_id: impl Into<String>,
        carrier: impl Into<String>,
        constants: BTreeMap<String, f64>,
        trials: Vec<Trial>,
        seed: u64,
    ) -> Self {
        let worst_slack = trials
            .iter()
            .map(|t| t.slack)
            .fold(f64::INFINITY, f64::min);
        let pass = trials.iter().all(|t| t.slack >= -(t.gaps + TOLERANCE));
        let min_ratio = trials
            .iter()
            .filter(|t| t.lhs > 1e-9)
            .map(|t| t.rhs / t.lhs)
            .fold(None, |acc: Option<f64>, r| {
                Some(acc.map_or(r, |a| a.min(r)))
            });
        VerificationReport {
            inequality_id: inequality_id.into(),
            carrier: carrier.into(),
            constants,
            trials,
            worst_slack,
            min_ratio,
            pass,
            tolerance: TOLERANCE,
            seed,
        }
    }
}

/// Distance choice for the part-(a) inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Hamming,
    Transposition,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Hamming => "hamming",
            Metric::Transposition => "transposition",
        }
    }
}

/// Constant regime for a measure on a group carrier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// μ is the uniform law of an ℓ-local group.
    Uniform,
    /// G is normal in S_n and μ is symmetric and conjugation-invariant.
    InvariantNormal,
}

/// A group carrier with a measure from the pushforward class, the local
/// base that produced it, and the matching constant regime.
pub struct GroupInstance {
    pub name: String,
    pub group: GroupTable,
    pub base: LocalBase,
    pub mu: Measure,
    pub ell: usize,
    pub kn: f64,
    pub regime: Regime,
}

impl GroupInstance {
    pub fn uniform(name: impl Into<String>, group: GroupTable) -> Result<Self, VerifyError> {
        let ell = group
            .minimal_locality()
            .ok_or_else(|| VerifyError::HypothesisFailed("group is not ℓ-local".into()))?;
        let base = LocalBase::build(&group, ell)?;
        let product = ProductMeasure::uniform(&base);
        let mu = pushforward_product(&group, &base, &product)?;
        let kn = group.k_n() as f64;
        Ok(GroupInstance {
            name: name.into(),
            group,
            base,
            mu,
            ell,
            kn,
            regime: Regime::Uniform,
        })
    }

    pub fn ewens(n: usize, theta: f64) -> Result<Self, VerifyError> {
        let group = GroupTable::symmetric(n, DEFAULT_ELEMENT_CAP)?;
        let ell = 2;
        let base = LocalBase::build(&group, ell)?;
        let product = ewens_product(&base, theta)?;
        let mu = pushforward_product(&group, &base, &product)?;
        let kn = group.k_n() as f64;
        Ok(GroupInstance {
            name: format!("S{n}-ewens-{theta}"),
            group,
            base,
            mu,
            ell,
            kn,
            regime: Regime::InvariantNormal,
        })
    }

    /// Builds an instance from an arbitrary product measure, auto-selecting
    /// the constant regime; errors when neither hypothesis holds.
    pub fn from_product(
        name: impl Into<String>,
        group: GroupTable,
        base: LocalBase,
        product: &ProductMeasure,
    ) -> Result<Self, VerifyError> {
        let ell = group
            .minimal_locality()
            .ok_or_else(|| VerifyError::HypothesisFailed("group is not ℓ-local".into()))?;
        let mu = pushforward_product(&group, &base, product)?;
        let kn = group.k_n() as f64;
        let w = 1.0 / group.len() as f64;
        let regime = if mu.weights.iter().all(|&v| (v - w).abs() < 1e-12) {
            Regime::Uniform
        } else {
            let ambient = GroupTable::symmetric(group.n(), DEFAULT_ELEMENT_CAP)?;
            if group.is_normal_in(&ambient) && check_invariance(&mu, &group, &ambient)? {
                Regime::InvariantNormal
            } else {
                return Err(VerifyError::HypothesisFailed(
                    "measure is neither uniform nor invariant on a normal subgroup".into(),
                ));
            }
        };
        Ok(GroupInstance { name: name.into(), group, base, mu, ell, kn, regime })
    }

    /// c(ℓ) for the part-(a) inequalities (W1 and the distance-barycenter
    /// cost): uniform laws get ℓ (d_H) / 1 (d_T); general measures of the
    /// pushforward class get min(2ℓ−1, n) (d_H) / 2 (d_T).
    pub fn c_transport(&self, metric: Metric) -> f64 {
        match (self.regime, metric) {
            (Regime::Uniform, Metric::Hamming) => self.ell as f64,
            (Regime::Uniform, Metric::Transposition) => 1.0,
            (_, Metric::Hamming) => ((2 * self.ell - 1).min(self.group.n())) as f64,
            (_, Metric::Transposition) => 2.0,
        }
    }

    /// c(ℓ)² for the coordinate-cost (part-b) inequalities: 2(ℓ−1)² + 2 for
    /// uniform laws, 8(ℓ−1)² + 2 in the invariant-normal regime.
    pub fn c2_coordinate(&self) -> f64 {
        let e = (self.ell - 1) as f64;
        match self.regime {
            Regime::Uniform => 2.0 * e * e + 2.0,
            Regime::InvariantNormal => 8.0 * e * e + 2.0,
        }
    }

    pub fn distance_matrix(&self, metric: Metric) -> Result<Vec<Vec<f64>>, VerifyError> {
        match metric {
            Metric::Hamming => Ok(hamming_matrix(&self.group)),
            Metric::Transposition => {
                Ok(transposition_matrix_cached(&self.group, self.ell)?)
            }
        }
    }
}

fn dirichlet(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// The witness family: the identical pair, every Dirac pair, (δ, μ) and
/// (μ, δ) pairs, optional Dirac-mixture pairs against μ, and `random_pairs`
/// seeded Dirichlet(1) pairs.
pub fn witness_pairs(
    mu: &Measure,
    random_pairs: usize,
    seed: u64,
    include_mixtures: bool,
) -> Vec<(String, Measure, Measure)> {
    let m = mu.len();
    let cid = mu.carrier_id.clone();
    let mk = |w: Vec<f64>| Measure::new(cid.clone(), w).expect("normalized witness");
    let dirac = |x: usize| Measure::dirac(cid.clone(), m, x).expect("valid index");
    let mut out = Vec::new();
    out.push(("identical:mu-mu".to_string(), mu.clone(), mu.clone()));
    for x in 0..m {
        for y in 0..m {
            out.push((format!("dirac:{x}:{y}"), dirac(x), dirac(y)));
        }
    }
    for x in 0..m {
        out.push((format!("dirac-mu:{x}"), dirac(x), mu.clone()));
        out.push((format!("mu-dirac:{x}"), mu.clone(), dirac(x)));
    }
    if include_mixtures {
        for x in 0..m {
            for y in 0..m {
                if x == y {
                    continue;
                }
                for eps in [0.02, 0.05, 0.1] {
                    let mut w = vec![0.0; m];
                    w[x] = 1.0 - eps;
                    w[y] = eps;
                    out.push((format!("mix:{x}:{y}:{eps}"), mu.clone(), mk(w)));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..random_pairs {
        let a = mk(dirichlet(&mut rng, m));
        let b = mk(dirichlet(&mut rng, m));
        out.push((format!("random:{i}"), a, b));
    }
    out
}

fn entropy_rhs(n1: &Measure, n2: &Measure, mu: &Measure) -> Result<f64, VerifyError> {
    let h1 = relative_entropy(n1, mu)?;
    let h2 = relative_entropy(n2, mu)?;
    Ok((h1.sqrt() + h2.sqrt()) * (h1.sqrt() + h2.sqrt()))
}

/// Closed-form weak cost when a marginal is a Dirac mass: the coupling is
/// forced, so the value is exact (zero gap). Returns None otherwise.
fn forced_weak_cost(n1: &Measure, n2: &Measure, obj: &WeakObjective) -> Option<f64> {
    let m = n1.len();
    let nf = match obj {
        WeakObjective::Distance(_) => 1,
        WeakObjective::Coordinates(c) => c[0].len(),
    };
    let feature = |k: usize, i: usize, j: usize| -> f64 {
        match obj {
            WeakObjective::Distance(d) => d[i][j],
            WeakObjective::Coordinates(c) => {
                if c[i][k] != c[j][k] {
                    1.0
                } else {
                    0.0
                }
            }
        }
    };
    if let Some(x) = (0..m).find(|&i| n1.weights[i] == 1.0) {
        // single row: the kernel is ν2 itself
        let mut total = 0.0;
        for k in 0..nf {
            let bary: f64 = (0..m).map(|j| n2.weights[j] * feature(k, x, j)).sum();
            total += bary * bary;
        }
        return Some(total);
    }
    if let Some(y) = (0..m).find(|&j| n2.weights[j] == 1.0) {
        // every row maps to δ_y
        let mut total = 0.0;
        for (i, &w) in n1.weights.iter().enumerate() {
            if w > 0.0 {
                let row: f64 = (0..nf).map(|k| {
                    let f = feature(k, i, y);
                    f * f
                }).sum();
                total += w * row;
            }
        }
        return Some(total);
    }
    None
}

/// (2/c²)·W1²(ν1, ν2) ≤ K_n·(√H(ν1|μ) + √H(ν2|μ))².
pub fn verify_tw1(
    inst: &GroupInstance,
    metric: Metric,
    random_pairs: usize,
    seed: u64,
    c_override: Option<f64>,
) -> Result<VerificationReport, VerifyError> {
    let dist = inst.distance_matrix(metric)?;
    let c = c_override.unwrap_or_else(|| inst.c_transport(metric));
    let pairs = witness_pairs(&inst.mu, random_pairs, seed, true);
    let trials = pairs
        .par_iter()
        .map(|(label, n1, n2)| -> Result<Trial, VerifyError> {
            let sol = w1(n1, n2, &dist, metric.name())?;
            let lhs = 2.0 / (c * c) * sol.value * sol.value;
            let lb = (sol.value - sol.gap).max(0.0);
            let gaps = lhs - 2.0 / (c * c) * lb * lb;
            let rhs = inst.kn * entropy_rhs(n1, n2, &inst.mu)?;
            Ok(Trial { label: label.clone(), lhs, rhs, slack: rhs - lhs, gaps })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut constants = BTreeMap::new();
    constants.insert("c".into(), c);
    constants.insert("k_n".into(), inst.kn);
    Ok(VerificationReport::build(
        format!("tw1-{}", metric.name()),
        &inst.name,
        constants,
        trials,
        seed,
    ))
}

/// (1/(2c²))·T̃2(ν2|ν1) ≤ K_n·(√H + √H)², plus the dual product form
/// (∫e^{αQ̃_{K_n}φ}dμ)^{1/α}·(∫e^{−(1−α)φ}dμ)^{1/(1−α)} ≤ 1.
pub fn verify_t_tilde(
    inst: &GroupInstance,
    metric: Metric,
    random_pairs: usize,
    seed: u64,
    dual_phis: usize,
) -> Result<VerificationReport, VerifyError> {
    let dist = inst.distance_matrix(metric)?;
    let c = inst.c_transport(metric);
    let opts = fw_opts();
    let pairs = witness_pairs(&inst.mu, random_pairs, seed, false);
    let obj = WeakObjective::Distance(&dist);
    let mut trials = pairs
        .par_iter()
        .map(|(label, n1, n2)| -> Result<Trial, VerifyError> {
            let (value, gap) = match forced_weak_cost(n1, n2, &obj) {
                Some(v) => (v, 0.0),
                None => {
                    let sol = t2_tilde(n1, n2, &dist, metric.name(), &opts)?;
                    (sol.value, sol.gap)
                }
            };
            let lhs = value / (2.0 * c * c);
            let gaps = gap / (2.0 * c * c);
            let rhs = inst.kn * entropy_rhs(n1, n2, &inst.mu)?;
            Ok(Trial { label: label.clone(), lhs, rhs, slack: rhs - lhs, gaps })
        })
        .collect::<Result<Vec<_>, _>>()?;

    // dual product trials: log-space evaluation, exact operator
    let m = inst.mu.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d0a1);
    for p in 0..dual_phis {
        let phi: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        for alpha in [0.25, 0.5, 0.75] {
            for improved in [false, true] {
                let q: Vec<f64> = (0..m)
                    .map(|x| {
                        if improved {
                            q_tilde_alpha(&phi, inst.kn, c, alpha, &dist[x])
                        } else {
                            q_tilde(&phi, inst.kn, c, &dist[x])
                        }
                    })
                    .collect::<Result<_, _>>()?;
                let log1 = log_mean_exp(&inst.mu.weights, &q, alpha);
                let log2 = log_mean_exp(&inst.mu.weights, &phi, -(1.0 - alpha));
                let log_product = log1 / alpha + log2 / (1.0 - alpha);
                let tag = if improved { "dual-alpha" } else { "dual" };
                trials.push(Trial {
                    label: format!("{tag}:{p}:alpha={alpha}"),
                    lhs: log_product.exp(),
                    rhs: 1.0,
                    slack: 1.0 - log_product.exp(),
                    gaps: 1e-9,
                });
            }
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("c".into(), c);
    constants.insert("k_n".into(), inst.kn);
    Ok(VerificationReport::build(
        format!("t-tilde-{}", metric.name()),
        &inst.name,
        constants,
        trials,
        seed,
    ))
}

/// ln ∫ e^{s·f} dμ for weights μ, stable for the magnitudes used here.
fn log_mean_exp(weights: &[f64], f: &[f64], s: f64) -> f64 {
    let peak = f
        .iter()
        .map(|&v| s * v)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = weights
        .iter()
        .zip(f)
        .map(|(&w, &v)| w * (s * v - peak).exp())
        .sum();
    peak + sum.ln()
}

/// (1/(2c²))·T⌢2(ν2|ν1) ≤ (√H + √H)² in the regime-matched constant, plus
/// the dual product form with the coordinate operator Q⌢.
pub fn verify_t_paren(
    inst: &GroupInstance,
    random_pairs: usize,
    seed: u64,
    dual_phis: usize,
) -> Result<VerificationReport, VerifyError> {
    let coords = group_coords(&inst.group);
    let c2 = inst.c2_coordinate();
    let opts = fw_opts();
    let pairs = witness_pairs(&inst.mu, random_pairs, seed, false);
    let obj = WeakObjective::Coordinates(&coords);
    let mut trials = pairs
        .par_iter()
        .map(|(label, n1, n2)| -> Result<Trial, VerifyError> {
            let (value, gap) = match forced_weak_cost(n1, n2, &obj) {
                Some(v) => (v, 0.0),
                None => {
                    let sol = t2_paren(n1, n2, &coords, &opts)?;
                    (sol.value, sol.gap)
                }
            };
            let lhs = value / (2.0 * c2);
            let gaps = gap / (2.0 * c2);
            let rhs = entropy_rhs(n1, n2, &inst.mu)?;
            Ok(Trial { label: label.clone(), lhs, rhs, slack: rhs - lhs, gaps })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let m = inst.mu.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9a7e_11d3);
    for p in 0..dual_phis {
        let phi: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let mut q = Vec::with_capacity(m);
        let mut max_gap = 0.0f64;
        for x in 0..m {
            let (v, g) = q_paren(&phi, c2, &coords, x, 1e-8)?;
            q.push(v);
            max_gap = max_gap.max(g);
        }
        for alpha in [0.25, 0.5, 0.75] {
            let log1 = log_mean_exp(&inst.mu.weights, &q, alpha);
            let log2 = log_mean_exp(&inst.mu.weights, &phi, -(1.0 - alpha));
            let log_product = log1 / alpha + log2 / (1.0 - alpha);
            trials.push(Trial {
                label: format!("dual:{p}:alpha={alpha}"),
                lhs: log_product.exp(),
                rhs: 1.0,
                slack: 1.0 - log_product.exp(),
                // computed Q⌢ overestimates by ≤ max_gap; e^{that} factor
                gaps: (max_gap.exp() - 1.0) + 1e-9,
            });
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("c2".into(), c2);
    Ok(VerificationReport::build("t-paren", &inst.name, constants, trials, seed))
}

/// ∫e^{(α/(2c²))·f(σ,A)}dμ ≤ μ(A)^{−α/(1−α)} over subset families and an
/// α grid, plus the Tchebychev tail form for singleton sets.
pub fn verify_talagrand(
    inst: &GroupInstance,
    random_sets: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let coords = group_coords(&inst.group);
    let c2 = inst.c2_coordinate();
    let m = inst.mu.len();
    let alpha_grid = [0.25, 0.5, 0.75];

    let mut families: Vec<(String, Vec<usize>)> = Vec::new();
    families.push(("all".into(), (0..m).collect()));
    for x in 0..m {
        families.push((format!("single:{x}"), vec![x]));
    }
    if m <= 24 {
        for x in 0..m {
            for y in (x + 1)..m {
                families.push((format!("pair:{x}:{y}"), vec![x, y]));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a1a_6e4d);
    for i in 0..random_sets {
        let size = rng.gen_range(2..=(m / 2).max(2));
        let mut set: Vec<usize> = (0..m).collect();
        set.shuffle(&mut rng);
        let mut a: Vec<usize> = set.into_iter().take(size).collect();
        a.sort_unstable();
        families.push((format!("random:{i}"), a));
    }

    let trials: Vec<Trial> = families
        .par_iter()
        .map(|(name, a)| -> Result<Vec<Trial>, VerifyError> {
            let refs: Vec<&[u8]> = a.iter().map(|&y| coords[y].as_slice()).collect();
            let f_vals: Vec<f64> = (0..m)
                .map(|x| talagrand_f(&coords[x], &refs).map(|(v, _)| v))
                .collect::<Result<_, _>>()?;
            let mu_a: f64 = a.iter().map(|&y| inst.mu.weights[y]).sum();
            let mut out = Vec::new();
            if mu_a <= 0.0 {
                return Ok(out); // empty-measure set: bound is vacuous (+∞)
            }
            for &alpha in &alpha_grid {
                let log_lhs = log_mean_exp(&inst.mu.weights, &f_vals, alpha / (2.0 * c2));
                let log_rhs = -(alpha / (1.0 - alpha)) * mu_a.ln();
                out.push(Trial {
                    label: format!("set:{name}:alpha={alpha}"),
                    lhs: log_lhs.exp(),
                    rhs: log_rhs.exp(),
                    slack: log_rhs.exp() - log_lhs.exp(),
                    gaps: 1e-7,
                });
            }
            // tail form for singleton sets, α = 1/2
            if a.len() == 1 {
                let alpha = 0.5;
                for t in [1.0, 2.0, 3.0, 4.0] {
                    let tail: f64 = f_vals
                        .iter()
                        .zip(&inst.mu.weights)
                        .filter(|(&f, _)| f >= t)
                        .map(|(_, &w)| w)
                        .sum();
                    let bound =
                        (-(alpha * t) / (2.0 * c2)).exp() / mu_a.powf(alpha / (1.0 - alpha));
                    out.push(Trial {
                        label: format!("tail:{name}:t={t}"),
                        lhs: tail,
                        rhs: bound,
                        slack: bound - tail,
                        gaps: 1e-9,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut constants = BTreeMap::new();
    constants.insert("c2".into(), c2);
    Ok(VerificationReport::build("talagrand", &inst.name, constants, trials, seed))
}

/// ‖μ−ν‖²_TV ≤ 2·H(ν|μ) (with ‖·‖_TV = Σ|μ−ν|), plus the closed-form dual
/// ∫e^{λR^c f}dν ≤ e^{λ∫f dν + λ²c²/8} on three-point carriers.
pub fn verify_ckp(
    mu: &Measure,
    carrier_name: &str,
    random_trials: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let pairs = witness_pairs(mu, random_trials, seed, false);
    let mut trials = Vec::new();
    for (label, _, nu) in &pairs {
        let tv = total_variation(mu, nu)?;
        let h = relative_entropy(nu, mu)?;
        trials.push(Trial {
            label: format!("primal:{label}"),
            lhs: tv * tv,
            rhs: 2.0 * h,
            slack: 2.0 * h - tv * tv,
            gaps: 0.0,
        });
    }
    // dual on a 3-point carrier, independent of μ's carrier
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3c3c_900f);
    for i in 0..50usize {
        let nu = dirichlet(&mut rng, 3);
        let f: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        for c in [0.5, 1.0, 2.0] {
            let rf: Vec<f64> = (0..3).map(|x| r_c(&f, c, x)).collect();
            let mean_f: f64 = nu.iter().zip(&f).map(|(a, b)| a * b).sum();
            for lambda in [0.0, 0.5, 1.0, 2.0, 4.0] {
                let lhs = log_mean_exp(&nu, &rf, lambda).exp();
                let rhs = (lambda * mean_f + lambda * lambda * c * c / 8.0).exp();
                trials.push(Trial {
                    label: format!("dual:{i}:c={c}:lambda={lambda}"),
                    lhs,
                    rhs,
                    slack: rhs - lhs,
                    gaps: 1e-9,
                });
            }
        }
    }
    let constants = BTreeMap::new();
    Ok(VerificationReport::build("ckp", carrier_name, constants, trials, seed))
}

/// ∫e^{λφ}dμ ≤ exp(λ∫φdμ + K_n·c²·λ²/8) for 1-Lipschitz φ.
pub fn verify_hoeffding_dual(
    inst: &GroupInstance,
    metric: Metric,
    phi_count: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let dist = inst.distance_matrix(metric)?;
    let c = inst.c_transport(metric);
    let m = inst.mu.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x40ff_0000u64);
    let lambda_grid = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
    let mut trials = Vec::new();
    // the constant function: equality at every λ
    let mut phis: Vec<(String, Vec<f64>)> = vec![("constant".into(), vec![1.5; m])];
    for i in 0..phi_count {
        let raw: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 6.0 - 3.0).collect();
        phis.push((format!("random:{i}"), crate::dualops::lipschitz_smooth(&raw, &dist)));
    }
    for (name, phi) in &phis {
        let mean = inst.mu.mean(phi);
        for &lambda in &lambda_grid {
            let lhs = log_mean_exp(&inst.mu.weights, phi, lambda).exp();
            let rhs = (lambda * mean + inst.kn * c * c * lambda * lambda / 8.0).exp();
            trials.push(Trial {
                label: format!("{name}:lambda={lambda}"),
                lhs,
                rhs,
                slack: rhs - lhs,
                gaps: 1e-9 * rhs.max(1.0),
            });
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("c".into(), c);
    constants.insert("k_n".into(), inst.kn);
    Ok(VerificationReport::build(
        format!("hoeffding-dual-{}", metric.name()),
        &inst.name,
        constants,
        trials,
        seed,
    ))
}

fn chain_trials(
    label: &str,
    n1: &Measure,
    n2: &Measure,
    dist: &[Vec<f64>],
    coords: &[Vec<u8>],
    n: usize,
    opts: &FwOptions,
) -> Result<Vec<Trial>, VerifyError> {
    let obj_d = WeakObjective::Distance(dist);
    let obj_c = WeakObjective::Coordinates(coords);
    let sol_w1 = w1(n1, n2, dist, "halved-hamming")?;
    let (tilde, g_tilde) = match forced_weak_cost(n1, n2, &obj_d) {
        Some(v) => (v, 0.0),
        None => {
            let s = t2_tilde(n1, n2, dist, "halved-hamming", opts)?;
            (s.value, s.gap)
        }
    };
    let (hat, g_hat) = match forced_weak_cost(n1, n2, &obj_c) {
        Some(v) => (v, 0.0),
        None => {
            let s = t2_hat(n1, n2, coords, opts)?;
            (s.value, s.gap)
        }
    };
    // W1² ≤ T̃2: the left side is exact up to the flow dual gap; the right
    // side's computed value overestimates by ≤ g_tilde, so the allowance is
    // the W1 linearization plus g_tilde.
    let w1_sq = sol_w1.value * sol_w1.value;
    let w1_gap = w1_sq - (sol_w1.value - sol_w1.gap).max(0.0).powi(2);
    Ok(vec![
        Trial {
            label: format!("chain-w1-tilde:{label}"),
            lhs: w1_sq,
            rhs: tilde,
            slack: tilde - w1_sq,
            gaps: w1_gap + g_tilde,
        },
        Trial {
            label: format!("chain-tilde-hat:{label}"),
            lhs: tilde,
            rhs: n as f64 / 4.0 * hat,
            slack: n as f64 / 4.0 * hat - tilde,
            gaps: g_tilde + n as f64 / 4.0 * g_hat,
        },
    ])
}

/// Slice suite on X_{k,n−k}: part (a) with C = min(k, n−k) for W1 and the
/// distance-barycenter cost, part (b) with constant 1/8 for the coordinate
/// cost, the comparison chain W1² ≤ T̃2 ≤ (n/4)·T̂2, and the pointwise
/// projection inequality Q⌢(f∘P)(σ) ≥ Q̂f(P(σ)).
pub fn verify_slice(
    n: usize,
    k: usize,
    random_pairs: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let slice = SliceSet::new(n, k)?;
    let dist = slice.hamming_matrix();
    let coords = slice.points().to_vec();
    let m = slice.len();
    let mu = Measure::uniform(slice.carrier_id(), m)?;
    let cap = k.min(n - k) as f64;
    let opts = fw_opts();
    let pairs = witness_pairs(&mu, random_pairs, seed, false);
    let obj_d = WeakObjective::Distance(&dist);
    let obj_c = WeakObjective::Coordinates(&coords);

    let mut trials: Vec<Trial> = pairs
        .par_iter()
        .map(|(label, n1, n2)| -> Result<Vec<Trial>, VerifyError> {
            let rhs = entropy_rhs(n1, n2, &mu)?;
            let mut out = Vec::new();
            let sol = w1(n1, n2, &dist, "halved-hamming")?;
            let lhs = 2.0 / cap * sol.value * sol.value;
            let gaps = lhs - 2.0 / cap * (sol.value - sol.gap).max(0.0).powi(2);
            out.push(Trial {
                label: format!("a-w1:{label}"),
                lhs,
                rhs,
                slack: rhs - lhs,
                gaps,
            });
            let (tilde, g_tilde) = match forced_weak_cost(n1, n2, &obj_d) {
                Some(v) => (v, 0.0),
                None => {
                    let s = t2_tilde(n1, n2, &dist, "halved-hamming", &opts)?;
                    (s.value, s.gap)
                }
            };
            out.push(Trial {
                label: format!("a-tilde:{label}"),
                lhs: tilde / (2.0 * cap),
                rhs,
                slack: rhs - tilde / (2.0 * cap),
                gaps: g_tilde / (2.0 * cap),
            });
            let (hat, g_hat) = match forced_weak_cost(n1, n2, &obj_c) {
                Some(v) => (v, 0.0),
                None => {
                    let s = t2_hat(n1, n2, &coords, &opts)?;
                    (s.value, s.gap)
                }
            };
            out.push(Trial {
                label: format!("b-hat:{label}"),
                lhs: hat / 8.0,
                rhs,
                slack: rhs - hat / 8.0,
                gaps: g_hat / 8.0,
            });
            out.extend(chain_trials(label, n1, n2, &dist, &coords, n, &opts)?);
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();

    trials.extend(tartine_trials(
        n,
        &coords,
        |sigma| slice_projection(sigma, k).map_err(VerifyError::from),
        10,
        seed ^ 0x7a57_11e0,
    )?);

    let mut constants = BTreeMap::new();
    constants.insert("c_cap".into(), cap);
    constants.insert("hat_constant".into(), 0.125);
    Ok(VerificationReport::build(
        "slice",
        slice.carrier_id(),
        constants,
        trials,
        seed,
    ))
}

/// Pointwise projection inequality: for f on the projected carrier and P
/// the projection from S_n, Q⌢(f∘P)(σ) ≥ Q̂f(P(σ)) with the coordinate
/// operator taken at c² = 4 (uniform S_n is 2-local), whose per-coordinate
/// weight 1/(2c²) = 1/8 matches the projected operator's.
pub fn tartine_trials<F>(
    n: usize,
    coords: &[Vec<u8>],
    project: F,
    f_count: usize,
    seed: u64,
) -> Result<Vec<Trial>, VerifyError>
where
    F: Fn(&crate::permcore::Permutation) -> Result<Vec<u8>, VerifyError>,
{
    let group = GroupTable::symmetric(n, DEFAULT_ELEMENT_CAP)?;
    let g_coords = group_coords(&group);
    let m = coords.len();
    let proj_index: Vec<usize> = group
        .elements()
        .iter()
        .map(|sigma| -> Result<usize, VerifyError> {
            let x = project(sigma)?;
            coords
                .iter()
                .position(|p| p == &x)
                .ok_or_else(|| VerifyError::HypothesisFailed("projection off-carrier".into()))
        })
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::new();
    for i in 0..f_count {
        let f: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let f_lift: Vec<f64> = proj_index.iter().map(|&j| f[j]).collect();
        // Q̂f on the projected carrier, once per point
        let mut qhat = vec![(0.0, 0.0); m];
        for (x, q) in qhat.iter_mut().enumerate() {
            *q = q_hat(&f, coords, x, 1e-8)?;
        }
        for (id, &px) in proj_index.iter().enumerate() {
            let (lhs_q, g1) = q_paren(&f_lift, 4.0, &g_coords, id, 1e-8)?;
            let (rhs_q, g2) = qhat[px];
            trials.push(Trial {
                label: format!("tartine:{i}:sigma={id}"),
                lhs: rhs_q, // the bound reads lhs_q ≥ rhs_q; slack = lhs−rhs
                rhs: lhs_q,
                slack: lhs_q - rhs_q,
                gaps: g1 + g2,
            });
        }
    }
    Ok(trials)
}

/// Multinomial variant: part (b) with constant 1/8, the comparison chain,
/// and the projection inequality, on the label set of the given parts.
pub fn verify_multinomial(
    parts: &[usize],
    random_pairs: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let set = MultinomialSet::new(parts)?;
    let n = set.n();
    let coords = set.points().to_vec();
    let dist = coord_distance_matrix(&coords, 0.5);
    let m = set.len();
    let mu = Measure::uniform(set.carrier_id(), m)?;
    let opts = fw_opts();
    let pairs = witness_pairs(&mu, random_pairs, seed, false);
    let obj_c = WeakObjective::Coordinates(&coords);

    let mut trials: Vec<Trial> = pairs
        .par_iter()
        .map(|(label, n1, n2)| -> Result<Vec<Trial>, VerifyError> {
            let rhs = entropy_rhs(n1, n2, &mu)?;
            let mut out = Vec::new();
            let (hat, g_hat) = match forced_weak_cost(n1, n2, &obj_c) {
                Some(v) => (v, 0.0),
                None => {
                    let s = t2_hat(n1, n2, &coords, &opts)?;
                    (s.value, s.gap)
                }
            };
            out.push(Trial {
                label: format!("b-hat:{label}"),
                lhs: hat / 8.0,
                rhs,
                slack: rhs - hat / 8.0,
                gaps: g_hat / 8.0,
            });
            out.extend(chain_trials(label, n1, n2, &dist, &coords, n, &opts)?);
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();

    let parts_owned = parts.to_vec();
    trials.extend(tartine_trials(
        n,
        &coords,
        move |sigma| multinomial_projection(sigma, &parts_owned).map_err(VerifyError::from),
        10,
        seed ^ 0x7a57_11e1,
    )?);

    let mut constants = BTreeMap::new();
    constants.insert("hat_constant".into(), 0.125);
    Ok(VerificationReport::build(
        "multinomial",
        set.carrier_id(),
        constants,
        trials,
        seed,
    ))
}

/// The default verification suite over every configured carrier.
pub fn verify_all(random_pairs: usize, seed: u64) -> Result<Vec<VerificationReport>, VerifyError> {
    let mut reports = Vec::new();
    let instances = default_instances()?;
    for inst in &instances {
        reports.push(verify_tw1(inst, Metric::Hamming, random_pairs, seed, None)?);
        reports.push(verify_tw1(inst, Metric::Transposition, random_pairs, seed, None)?);
        reports.push(verify_t_tilde(inst, Metric::Hamming, random_pairs, seed, 20)?);
        reports.push(verify_t_paren(inst, random_pairs, seed, 20)?);
        reports.push(verify_talagrand(inst, 50, seed)?);
        reports.push(verify_ckp(&inst.mu, &inst.name, random_pairs, seed)?);
        reports.push(verify_hoeffding_dual(inst, Metric::Hamming, 50, seed)?);
        reports.push(verify_hoeffding_dual(inst, Metric::Transposition, 50, seed)?);
    }
    reports.push(verify_slice(4, 2, random_pairs, seed)?);
    reports.push(verify_slice(5, 2, random_pairs, seed)?);
    reports.push(verify_multinomial(&[2, 1, 1], random_pairs, seed)?);
    for (name, sz) in [("slice:4:2", 6usize), ("slice:5:2", 10)] {
        let mu = Measure::uniform(name, sz)?;
        reports.push(verify_ckp(&mu, name, random_pairs, seed)?);
    }
    Ok(reports)
}

/// The configured suite carriers: uniform S_3, S_4, A_4, S_2×S_3 and the
/// Ewens measures θ ∈ {0.5, 2} on S_4.
pub fn default_instances() -> Result<Vec<GroupInstance>, VerifyError> {
    Ok(vec![
        GroupInstance::uniform("S3", GroupTable::symmetric(3, DEFAULT_ELEMENT_CAP)?)?,
        GroupInstance::uniform("S4", GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP)?)?,
        GroupInstance::uniform("A4", GroupTable::alternating(4, DEFAULT_ELEMENT_CAP)?)?,
        GroupInstance::uniform(
            "S2xS3",
            GroupTable::product_symmetric(&[2, 3], DEFAULT_ELEMENT_CAP)?,
        )?,
        GroupInstance::ewens(4, 0.5)?,
        GroupInstance::ewens(4, 2.0)?,
    ])
}
