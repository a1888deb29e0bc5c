//! Wasserstein distance W1 (exact, by min-cost flow) and the barycentric
//! weak transport costs T̃2, T⌢2, T̂2 (convex, by pairwise Frank-Wolfe over
//! the transportation polytope with certified primal-dual gaps).

use crate::flow::min_cost_transport;
use crate::measures::{Measure, MeasureError};
use crate::permcore::{GroupTable, PermError};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error("carrier has {0} points, exceeding the cap {1}")]
    CarrierTooLarge(usize, usize),
    #[error("distance matrix is {0}x{0} but measures have {1} points")]
    DistanceMismatch(usize, usize),
}

pub const CARRIER_CAP: usize = 2_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostResult {
    pub value: f64,
    /// Certified optimality gap: `value - gap` lower-bounds the true optimum.
    pub gap: f64,
    pub iterations: usize,
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<Vec<f64>>>,
}

impl CostResult {
    pub fn without_coupling(mut self) -> Self {
        self.coupling = None;
        self
    }
}

/// Group elements as coordinate vectors (images), the features of T⌢2.
pub fn group_coords(group: &GroupTable) -> Vec<Vec<u8>> {
    group
        .elements()
        .iter()
        .map(|p| p.images().iter().map(|&v| v as u8).collect())
        .collect()
}

/// d_H matrix of a group (coordinate disagreements).
pub fn hamming_matrix(group: &GroupTable) -> Vec<Vec<f64>> {
    crate::slice::coord_distance_matrix(&group_coords(group), 1.0)
}

/// d_T matrix: BFS word length of σ τ^{-1} over the degree-≤ ell elements.
pub fn transposition_matrix(group: &GroupTable, ell: usize) -> Result<Vec<Vec<f64>>, PermError> {
    let table = group.word_length_table(ell)?;
    let m = group.len();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let rel = group.element(i).compose(&group.element(j).inverse())?;
            d[i][j] = table[group.index_of(&rel).unwrap()] as f64;
        }
    }
    Ok(d)
}

/// As `transposition_matrix`, with an optional on-disk cache keyed by the
/// group fingerprint under `PERMCONC_CACHE_DIR`.
pub fn transposition_matrix_cached(
    group: &GroupTable,
    ell: usize,
) -> Result<Vec<Vec<f64>>, PermError> {
    let dir = match std::env::var_os("PERMCONC_CACHE_DIR") {
        Some(d) => PathBuf::from(d),
        None => return transposition_matrix(group, ell),
    };
    let path = dir.join(format!("dT-{}-{}.json", group.fingerprint(), ell));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(d) = serde_json::from_str::<Vec<Vec<f64>>>(&text) {
            if d.len() == group.len() {
                return Ok(d);
            }
        }
    }
    let d = transposition_matrix(group, ell)?;
    if std::fs::create_dir_all(&dir).is_ok() {
        let _ = std::fs::write(&path, serde_json::to_string(&d).unwrap());
    }
    Ok(d)
}

fn check_inputs(
    nu1: &Measure,
    nu2: &Measure,
    size: usize,
) -> Result<(), TransportError> {
    nu1.same_carrier(nu2)?;
    if nu1.len() != size {
        return Err(TransportError::DistanceMismatch(size, nu1.len()));
    }
    if size > CARRIER_CAP {
        return Err(TransportError::CarrierTooLarge(size, CARRIER_CAP));
    }
    Ok(())
}

/// Exact W1 as a transportation LP; the gap is the (near-zero) certified
/// duality gap of the flow solver.
pub fn w1(
    nu1: &Measure,
    nu2: &Measure,
    dist: &[Vec<f64>],
    metric: &str,
) -> Result<CostResult, TransportError> {
    check_inputs(nu1, nu2, dist.len())?;
    let sol = min_cost_transport(&nu1.weights, &nu2.weights, dist);
    Ok(CostResult {
        value: sol.value,
        gap: sol.dual_gap,
        iterations: 1,
        metric: metric.to_string(),
        coupling: Some(sol.plan),
    })
}

/// The convex objective of a weak transport cost: for each ν1-charged row σ,
/// a sum of squared barycenters of row features.
pub enum WeakObjective<'a> {
    /// T̃2: one feature per row, the distance to σ. Cost (1/ν1_σ)(Σ_τ π d)².
    Distance(&'a [Vec<f64>]),
    /// T⌢2 / T̂2: n indicator features 1_{coords differ at k}.
    Coordinates(&'a [Vec<u8>]),
}

impl<'a> WeakObjective<'a> {
    fn size(&self) -> usize {
        match self {
            WeakObjective::Distance(d) => d.len(),
            WeakObjective::Coordinates(c) => c.len(),
        }
    }

    fn feature_count(&self) -> usize {
        match self {
            WeakObjective::Distance(_) => 1,
            WeakObjective::Coordinates(c) => c[0].len(),
        }
    }

    #[inline]
    fn feature(&self, k: usize, i: usize, j: usize) -> f64 {
        match self {
            WeakObjective::Distance(d) => d[i][j],
            WeakObjective::Coordinates(c) => {
                if c[i][k] != c[j][k] {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

pub struct FwOptions {
    pub gap_tol: f64,
    pub max_iters: usize,
}

impl Default for FwOptions {
    fn default() -> Self {
        FwOptions { gap_tol: 1e-7, max_iters: 50_000 }
    }
}

/// One column of the restricted master problem: a coupling held sparsely
/// together with its row feature sums U[ri][k] = Σ_j π_ij Φ_k(i,j).
struct Atom {
    entries: Vec<(u32, u32, f64)>,
    u: Vec<f64>, // rows.len() × nf, row-major
    weight: f64,
}

fn atom_from_plan(
    obj: &WeakObjective,
    rows: &[usize],
    row_pos: &[usize],
    plan: &[Vec<f64>],
) -> Atom {
    let nf = obj.feature_count();
    let mut entries = Vec::new();
    let mut u = vec![0.0; rows.len() * nf];
    for (i, row) in plan.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x > 0.0 {
                entries.push((i as u32, j as u32, x));
                let ri = row_pos[i];
                if ri != usize::MAX {
                    for k in 0..nf {
                        u[ri * nf + k] += x * obj.feature(k, i, j);
                    }
                }
            }
        }
    }
    Atom { entries, u, weight: 0.0 }
}

fn atoms_equal(a: &[(u32, u32, f64)], b: &[(u32, u32, f64)]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.0 == y.0 && x.1 == y.1 && (x.2 - y.2).abs() <= 1e-9)
}

/// Minimizes Σ_σ (1/ν1_σ) Σ_k (Σ_τ π Φ_k)² over couplings of (ν1, ν2).
///
/// Fully corrective Frank-Wolfe: the linear oracle (one exact transportation
/// LP per outer iteration) proposes vertices, and a pairwise Frank-Wolfe
/// master re-optimizes the convex weights over the collected vertices. The
/// reported gap is the certified outer duality gap.
pub fn weak_cost(
    nu1: &Measure,
    nu2: &Measure,
    obj: &WeakObjective,
    metric: &str,
    opts: &FwOptions,
) -> Result<CostResult, TransportError> {
    let m = obj.size();
    check_inputs(nu1, nu2, m)?;
    let a = &nu1.weights;
    let b = &nu2.weights;
    let rows: Vec<usize> = (0..m).filter(|&i| a[i] > 0.0).collect();
    let mut row_pos = vec![usize::MAX; m];
    for (ri, &i) in rows.iter().enumerate() {
        row_pos[i] = ri;
    }
    let nf = obj.feature_count();
    let inv_a: Vec<f64> = rows.iter().map(|&i| 1.0 / a[i]).collect();

    // start from the product coupling ν1 ⊗ ν2
    let product: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| a[i] * b[j]).collect())
        .collect();
    let mut first = atom_from_plan(obj, &rows, &row_pos, &product);
    first.weight = 1.0;
    let mut atoms = vec![first];
    // aggregated feature sums S of the current iterate
    let mut s_sum: Vec<f64> = atoms[0].u.clone();
    let mut grad = vec![vec![0.0; m]; m];
    let mut best_gap = f64::INFINITY;
    let mut iterations = 0;

    let objective = |s: &[f64]| -> f64 {
        (0..rows.len())
            .map(|ri| {
                inv_a[ri] * s[ri * nf..(ri + 1) * nf].iter().map(|&x| x * x).sum::<f64>()
            })
            .sum()
    };

    for it in 0..opts.max_iters {
        iterations = it + 1;
        // gradient: ∂F/∂π_ij = (2/ν1_i) Σ_k S_ik Φ_k(i,j)
        for row in grad.iter_mut() {
            row.iter_mut().for_each(|g| *g = 0.0);
        }
        for (ri, &i) in rows.iter().enumerate() {
            let scale = 2.0 * inv_a[ri];
            for j in 0..m {
                let mut acc = 0.0;
                for k in 0..nf {
                    acc += s_sum[ri * nf + k] * obj.feature(k, i, j);
                }
                grad[i][j] = scale * acc;
            }
        }
        // ⟨g, π⟩ = 2 Σ (1/a_i) Σ_k S_ik² since π's feature sums are S
        let g_plan = 2.0 * objective(&s_sum);
        let lmo = min_cost_transport(a, b, &grad);
        let fw_gap = (g_plan - (lmo.value - lmo.dual_gap)).max(0.0);
        best_gap = best_gap.min(fw_gap);
        if fw_gap <= opts.gap_tol {
            best_gap = fw_gap;
            break;
        }

        let candidate = atom_from_plan(obj, &rows, &row_pos, &lmo.plan);
        if !atoms.iter().any(|at| atoms_equal(&at.entries, &candidate.entries)) {
            atoms.push(candidate);
        }

        // restricted master: pairwise FW over the atom-weight simplex
        let dim = rows.len() * nf;
        let inner_tol = (fw_gap * 1e-3).max(opts.gap_tol * 1e-2);
        for _ in 0..400 {
            // gradient wrt atom weights: q_a = 2 Σ (1/a_i) S_ik U_a,ik
            let mut best_to = 0usize;
            let mut best_to_val = f64::INFINITY;
            let mut best_away = usize::MAX;
            let mut best_away_val = f64::NEG_INFINITY;
            for (ai, atom) in atoms.iter().enumerate() {
                let mut q = 0.0;
                for ri in 0..rows.len() {
                    let mut dot = 0.0;
                    for k in 0..nf {
                        dot += s_sum[ri * nf + k] * atom.u[ri * nf + k];
                    }
                    q += inv_a[ri] * dot;
                }
                q *= 2.0;
                if q < best_to_val {
                    best_to_val = q;
                    best_to = ai;
                }
                if atom.weight > 0.0 && q > best_away_val {
                    best_away_val = q;
                    best_away = ai;
                }
            }
            if best_away == usize::MAX || best_away_val - best_to_val <= inner_tol {
                break;
            }
            // exact line search along U_to − U_away
            let mut q1 = 0.0;
            let mut q2 = 0.0;
            for ri in 0..rows.len() {
                for k in 0..nf {
                    let d = atoms[best_to].u[ri * nf + k] - atoms[best_away].u[ri * nf + k];
                    q1 += 2.0 * inv_a[ri] * s_sum[ri * nf + k] * d;
                    q2 += inv_a[ri] * d * d;
                }
            }
            let gamma_max = atoms[best_away].weight;
            let gamma = if q2 > 1e-300 {
                (-q1 / (2.0 * q2)).clamp(0.0, gamma_max)
            } else if q1 < 0.0 {
                gamma_max
            } else {
                0.0
            };
            if gamma <= 0.0 {
                break;
            }
            for x in 0..dim {
                s_sum[x] += gamma * (atoms[best_to].u[x] - atoms[best_away].u[x]);
            }
            atoms[best_to].weight += gamma;
            atoms[best_away].weight -= gamma;
        }
        atoms.retain(|at| at.weight > 1e-15);
        // resynchronize S from the decomposition to cancel drift
        let wsum: f64 = atoms.iter().map(|at| at.weight).sum();
        for x in 0..dim {
            s_sum[x] = atoms.iter().map(|at| at.weight * at.u[x]).sum::<f64>() / wsum;
        }
    }

    // reconstruct the coupling from the convex decomposition
    let mut plan = vec![vec![0.0; m]; m];
    let wsum: f64 = atoms.iter().map(|at| at.weight).sum();
    for atom in &atoms {
        let w = atom.weight / wsum;
        for &(i, j, x) in &atom.entries {
            plan[i as usize][j as usize] += w * x;
        }
    }
    Ok(CostResult {
        value: objective(&s_sum),
        gap: best_gap,
        iterations,
        metric: metric.to_string(),
        coupling: Some(plan),
    })
}

/// T̃2(ν2|ν1) with the given metric matrix.
pub fn t2_tilde(
    nu1: &Measure,
    nu2: &Measure,
    dist: &[Vec<f64>],
    metric: &str,
    opts: &FwOptions,
) -> Result<CostResult, TransportError> {
    weak_cost(nu1, nu2, &WeakObjective::Distance(dist), metric, opts)
}

/// T⌢2(ν2|ν1) on a permutation group (coordinate indicator features).
pub fn t2_paren(
    nu1: &Measure,
    nu2: &Measure,
    coords: &[Vec<u8>],
    opts: &FwOptions,
) -> Result<CostResult, TransportError> {
    weak_cost(nu1, nu2, &WeakObjective::Coordinates(coords), "coordinate", opts)
}

/// T̂2(ν2|ν1) on a slice or multinomial carrier — the same objective as
/// T⌢2, evaluated on the carrier's coordinate vectors.
pub fn t2_hat(
    nu1: &Measure,
    nu2: &Measure,
    coords: &[Vec<u8>],
    opts: &FwOptions,
) -> Result<CostResult, TransportError> {
    weak_cost(nu1, nu2, &WeakObjective::Coordinates(coords), "coordinate", opts)
}

/// Max marginal violation of a coupling, for feasibility assertions.
pub fn marginal_error(plan: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let mut err: f64 = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        err = err.max((plan[i].iter().sum::<f64>() - ai).abs());
    }
    for (j, &bj) in b.iter().enumerate() {
        err = err.max((plan.iter().map(|r| r[j]).sum::<f64>() - bj).abs());
    }
    err
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Measure;
    use crate::permcore::{GroupTable, Permutation, DEFAULT_ELEMENT_CAP};
    use crate::slice::SliceSet;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn s3() -> (GroupTable, Vec<Vec<f64>>, String) {
        let g = GroupTable::symmetric(3, DEFAULT_ELEMENT_CAP).unwrap();
        let d = hamming_matrix(&g);
        let id = g.fingerprint();
        (g, d, id)
    }

    fn random_measure(rng: &mut ChaCha8Rng, id: &str, n: usize) -> Measure {
        let mut w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        Measure::new(id, w).unwrap()
    }

    #[test]
    fn w1_dirac_pairs_equal_distance() {
        let (g, d, id) = s3();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let a = Measure::dirac(&id, g.len(), i).unwrap();
                let b = Measure::dirac(&id, g.len(), j).unwrap();
                let r = w1(&a, &b, &d, "dH").unwrap();
                assert!((r.value - d[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn w1_identical_measures_zero() {
        let (g, d, id) = s3();
        let u = Measure::uniform(&id, g.len()).unwrap();
        let r = w1(&u, &u, &d, "dH").unwrap();
        assert!(r.value < 1e-12);
    }

    #[test]
    fn w1_dirac_to_uniform_s3() {
        // forced single-row coupling: mean d_H(id, ·) = (0+2+2+2+3+3)/6 = 2.
        let (g, d, id) = s3();
        let i = g.index_of(&Permutation::identity(3)).unwrap();
        let a = Measure::dirac(&id, 6, i).unwrap();
        let u = Measure::uniform(&id, 6).unwrap();
        let r = w1(&a, &u, &d, "dH").unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!(r.gap < 1e-9);
    }

    #[test]
    fn w1_symmetric() {
        let (g, d, id) = s3();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_measure(&mut rng, &id, g.len());
            let b = random_measure(&mut rng, &id, g.len());
            let r1 = w1(&a, &b, &d, "dH").unwrap();
            let r2 = w1(&b, &a, &d, "dH").unwrap();
            assert!((r1.value - r2.value).abs() < 1e-9);
        }
    }

    #[test]
    fn t2_tilde_identical_is_zero() {
        let (g, d, id) = s3();
        let u = Measure::uniform(&id, g.len()).unwrap();
        let r = t2_tilde(&u, &u, &d, "dH", &FwOptions::default()).unwrap();
        assert!(r.value < 1e-7, "value {}", r.value);
    }

    #[test]
    fn t2_tilde_dirac_first_argument_forced() {
        // ν1 = δ_σ forces the kernel p_σ = ν2: value = (mean distance)².
        let (g, d, id) = s3();
        let i = g.index_of(&Permutation::identity(3)).unwrap();
        let a = Measure::dirac(&id, 6, i).unwrap();
        let u = Measure::uniform(&id, 6).unwrap();
        let r = t2_tilde(&a, &u, &d, "dH", &FwOptions::default()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-9); // mean = 2
        assert!(r.gap < 1e-7);
    }

    #[test]
    fn t2_paren_dirac_pair_is_hamming() {
        let g = GroupTable::symmetric(3, DEFAULT_ELEMENT_CAP).unwrap();
        let coords = group_coords(&g);
        let d = hamming_matrix(&g);
        let id = g.fingerprint();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let a = Measure::dirac(&id, 6, i).unwrap();
                let b = Measure::dirac(&id, 6, j).unwrap();
                let r = t2_paren(&a, &b, &coords, &FwOptions::default()).unwrap();
                assert!((r.value - d[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn t2_hat_antipodal_diracs_on_x11() {
        let slice = SliceSet::new(2, 1).unwrap();
        let id = slice.carrier_id();
        let a = Measure::dirac(&id, 2, 0).unwrap();
        let b = Measure::dirac(&id, 2, 1).unwrap();
        let r = t2_hat(&a, &b, slice.points(), &FwOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn comparison_chain_on_s4() {
        // W1² ≤ T̃2 ≤ n·T⌢2 with d = d_H, on random pairs.
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        let d = hamming_matrix(&g);
        let coords = group_coords(&g);
        let id = g.fingerprint();
        let opts = FwOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let a = random_measure(&mut rng, &id, g.len());
            let b = random_measure(&mut rng, &id, g.len());
            let rw = w1(&a, &b, &d, "dH").unwrap();
            let rt = t2_tilde(&a, &b, &d, "dH", &opts).unwrap();
            let rp = t2_paren(&a, &b, &coords, &opts).unwrap();
            assert!(rw.value * rw.value <= rt.value + rt.gap + 1e-7);
            assert!(rt.value - rt.gap <= 4.0 * (rp.value + rp.gap) + 1e-7);
            assert!(marginal_error(rt.coupling.as_ref().unwrap(), &a.weights, &b.weights) < 1e-10);
            assert!(marginal_error(rp.coupling.as_ref().unwrap(), &a.weights, &b.weights) < 1e-10);
        }
    }

    #[test]
    fn t2_tilde_asymmetry_witness() {
        // T̃2(ν2|ν1) ≠ T̃2(ν1|ν2): concentrate ν1 on one point.
        let (g, d, id) = s3();
        let i = g.index_of(&Permutation::identity(3)).unwrap();
        let a = Measure::dirac(&id, 6, i).unwrap();
        let u = Measure::uniform(&id, 6).unwrap();
        let opts = FwOptions::default();
        let r1 = t2_tilde(&a, &u, &d, "dH", &opts).unwrap(); // forced: 4
        let r2 = t2_tilde(&u, &a, &d, "dH", &opts).unwrap(); // Σ μ(σ) d(σ,id)²
        assert!((r2.value - (4.0 * 3.0 + 9.0 * 2.0) / 6.0).abs() < 1e-9);
        assert!((r1.value - r2.value).abs() > 0.5);
    }

    #[test]
    fn transposition_matrix_s4() {
        let g = GroupTable::symmetric(4, DEFAULT_ELEMENT_CAP).unwrap();
        let d = transposition_matrix(&g, 2).unwrap();
        for (i, a) in g.elements().iter().enumerate() {
            for (j, b) in g.elements().iter().enumerate() {
                let rel = a.compose(&b.inverse()).unwrap();
                assert_eq!(d[i][j], (4 - rel.cycle_count()) as f64);
            }
        }
    }

    #[test]
    fn fw_brute_force_two_point_carrier() {
        // two-point carrier: couplings are a one-parameter family; grid at
        // 1e-4 brackets the optimum.
        let id = "two";
        let coords = vec![vec![0u8, 1], vec![1u8, 0]];
        let a = Measure::new(id, vec![0.6, 0.4]).unwrap();
        let b = Measure::new(id, vec![0.3, 0.7]).unwrap();
        let r = t2_hat(&a, &b, &coords, &FwOptions::default()).unwrap();
        let mut best = f64::INFINITY;
        // π11 free in [max(0, a1+b1−1), min(a1,b1)]
        let lo: f64 = (a.weights[0] + b.weights[0] - 1.0).max(0.0);
        let hi = a.weights[0].min(b.weights[0]);
        let steps = 200_000;
        for s in 0..=steps {
            let p11 = lo + (hi - lo) * s as f64 / steps as f64;
            let p12 = a.weights[0] - p11;
            let p21 = b.weights[0] - p11;
            // both coordinates differ across the two points:
            // Σ_i (1/a_i) Σ_k (off-diagonal row mass)²
            let v = 2.0 * (p12 * p12 / a.weights[0] + p21 * p21 / a.weights[1]);
            best = best.min(v);
        }
        assert!((r.value - best).abs() < r.gap + 1e-4, "{} vs {}", r.value, best);
    }
}
