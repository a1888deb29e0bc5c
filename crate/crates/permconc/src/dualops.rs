//! Infimum-convolution operators over probability kernels and the
//! convex-hull distance functional f(σ, A).
//!
//! Linear penalties (R^c, the W1 operator Q) have closed forms. The
//! barycentric operators Q̃ reduce exactly to mixtures of at most two Dirac
//! masses: the objective is ∫φ dp + ψ(∫F dp) with ψ convex increasing, so
//! the minimum over the simplex lies on the lower-left boundary of the 2-D
//! point cloud {(F(y), φ(y))}, which two-point mixtures sweep entirely. The
//! coordinate-penalty operators Q⌢, Q^j, Q̂ are solved by pairwise
//! Frank-Wolfe on the simplex with an exact linear oracle.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DualError {
    #[error("empty target set")]
    EmptySet,
    #[error("alpha = {0} out of the open interval (0,1)")]
    BadAlpha(f64),
    #[error("parameter must be positive, got {0}")]
    BadParameter(f64),
    #[error("function values and carrier size differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// R^c f(x) = inf_p {∫f dp + c·p(y ≠ x)} = min(f(x), min_{y≠x} f(y) + c).
pub fn r_c(f: &[f64], c: f64, x: usize) -> f64 {
    let mut best = f[x];
    for (y, &v) in f.iter().enumerate() {
        if y != x {
            best = best.min(v + c);
        }
    }
    best
}

/// Qφ(σ) = min_τ (φ(τ) + d(σ,τ)), the classical inf-convolution; exact
/// since the penalty is linear in p.
pub fn q_w1(phi: &[f64], dist_row: &[f64], _x: usize) -> f64 {
    phi.iter()
        .zip(dist_row)
        .map(|(&p, &d)| p + d)
        .fold(f64::INFINITY, f64::min)
}

/// Qφ at every point; the result is 1-Lipschitz for the given metric, so
/// this doubles as a generator of random Lipschitz functions.
pub fn lipschitz_smooth(phi: &[f64], dist: &[Vec<f64>]) -> Vec<f64> {
    (0..phi.len()).map(|x| q_w1(phi, &dist[x], x)).collect()
}

/// Exact minimization of λφ(y) + (1−λ)φ(z) + penalty(λ d_y + (1−λ) d_z)
/// over all pairs (y,z) and λ ∈ [0,1]; `penalty` must be convex. Domain
/// restrictions are expressed by returning +∞.
fn two_point_scan(phi: &[f64], dist_row: &[f64], penalty: &dyn Fn(f64) -> f64) -> f64 {
    let m = phi.len();
    let mut best = f64::INFINITY;
    for y in 0..m {
        let v = phi[y] + penalty(dist_row[y]);
        if v < best {
            best = v;
        }
    }
    for y in 0..m {
        for z in (y + 1)..m {
            let eval = |lam: f64| {
                lam * phi[y]
                    + (1.0 - lam) * phi[z]
                    + penalty(lam * dist_row[y] + (1.0 - lam) * dist_row[z])
            };
            // golden-section search on the convex section
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            for _ in 0..80 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if eval(m1) <= eval(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let v = eval(0.5 * (lo + hi)).min(eval(lo)).min(eval(hi));
            if v < best {
                best = v;
            }
        }
    }
    best
}

/// Q̃_t φ(σ) = inf_p {∫φ dp + (1/(2c²t))(∫d(σ,y) dp(y))²}, exact via the
/// two-point reduction.
pub fn q_tilde(
    phi: &[f64],
    t: f64,
    c: f64,
    dist_row: &[f64],
) -> Result<f64, DualError> {
    if t <= 0.0 || c <= 0.0 {
        return Err(DualError::BadParameter(t.min(c)));
    }
    if phi.len() != dist_row.len() {
        return Err(DualError::LengthMismatch(phi.len(), dist_row.len()));
    }
    let scale = 1.0 / (2.0 * c * c * t);
    Ok(two_point_scan(phi, dist_row, &|b| scale * b * b))
}

/// The convex cost c_α(u) = [α(1−u)log(1−u) − (1−αu)log(1−αu)]/(α(1−α)) on
/// [0,1], with the continuity extensions c_α(0) = 0 and
/// c_α(1) = −log(1−α)/α; +∞ outside the domain.
pub fn c_alpha(alpha: f64, u: f64) -> Result<f64, DualError> {
    if !(0.0..=1.0).contains(&alpha) || alpha <= 1e-6 || alpha >= 1.0 - 1e-6 {
        return Err(DualError::BadAlpha(alpha));
    }
    if u < 0.0 || u > 1.0 {
        return Ok(f64::INFINITY);
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    if u == 1.0 {
        return Ok(-(1.0 - alpha).ln() / alpha);
    }
    let first = alpha * (1.0 - u) * (1.0 - u).ln();
    let second = (1.0 - alpha * u) * (1.0 - alpha * u).ln();
    Ok((first - second) / (alpha * (1.0 - alpha)))
}

/// Q̃^α_t φ(σ) = inf_p {∫φ dp + t·c_α((1/(ct))∫d(σ,y) dp(y))}, exact via
/// the same two-point reduction; barycenters beyond c·t are out of c_α's
/// domain and are penalized by +∞ (the Dirac at σ keeps the value finite).
pub fn q_tilde_alpha(
    phi: &[f64],
    t: f64,
    c: f64,
    alpha: f64,
    dist_row: &[f64],
) -> Result<f64, DualError> {
    if t <= 0.0 || c <= 0.0 {
        return Err(DualError::BadParameter(t.min(c)));
    }
    if phi.len() != dist_row.len() {
        return Err(DualError::LengthMismatch(phi.len(), dist_row.len()));
    }
    c_alpha(alpha, 0.0)?; // validate alpha once
    let penalty = |b: f64| {
        let u = b / (c * t);
        match c_alpha(alpha, u) {
            Ok(v) => t * v,
            Err(_) => f64::INFINITY,
        }
    };
    Ok(two_point_scan(phi, dist_row, &penalty))
}

/// Minimizes p ↦ Σ_y p_y φ(y) + Σ_k w_k (Σ_y p_y 1_{coords[x][k] ≠ coords[y][k]})²
/// over the probability simplex by pairwise Frank-Wolfe with an exact
/// linear oracle. Returns (value, certified gap).
pub fn q_coordinate(
    phi: &[f64],
    coord_weights: &[f64],
    coords: &[Vec<u8>],
    x: usize,
    gap_tol: f64,
) -> Result<(f64, f64), DualError> {
    let m = phi.len();
    if m != coords.len() {
        return Err(DualError::LengthMismatch(m, coords.len()));
    }
    let nf = coord_weights.len();
    // disagreement features of each candidate point against x
    let feats: Vec<Vec<f64>> = (0..m)
        .map(|y| {
            (0..nf)
                .map(|k| if coords[x][k] != coords[y][k] { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut p = vec![0.0; m];
    p[x] = 1.0; // Dirac at x: zero penalty, value φ(x)
    let mut u = vec![0.0; nf];
    let mut best_gap = f64::INFINITY;
    let objective = |p: &[f64], u: &[f64]| -> f64 {
        p.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>()
            + u.iter()
                .zip(coord_weights)
                .map(|(&s, &w)| w * s * s)
                .sum::<f64>()
    };
    for _ in 0..200_000 {
        // grad_y = φ(y) + 2 Σ_k w_k U_k Φ_k(y)
        let mut to = 0usize;
        let mut to_val = f64::INFINITY;
        let mut away = usize::MAX;
        let mut away_val = f64::NEG_INFINITY;
        let mut g_dot_p = 0.0;
        for y in 0..m {
            let mut g = phi[y];
            for k in 0..nf {
                g += 2.0 * coord_weights[k] * u[k] * feats[y][k];
            }
            g_dot_p += g * p[y];
            if g < to_val {
                to_val = g;
                to = y;
            }
            if p[y] > 0.0 && g > away_val {
                away_val = g;
                away = y;
            }
        }
        let gap = (g_dot_p - to_val).max(0.0);
        best_gap = best_gap.min(gap);
        if gap <= gap_tol {
            best_gap = gap;
            break;
        }
        // exact line search along e_to − e_away
        let mut q1 = phi[to] - phi[away];
        let mut q2 = 0.0;
        for k in 0..nf {
            let d = feats[to][k] - feats[away][k];
            q1 += 2.0 * coord_weights[k] * u[k] * d;
            q2 += coord_weights[k] * d * d;
        }
        let gamma_max = p[away];
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
        p[to] += gamma;
        p[away] -= gamma;
        for k in 0..nf {
            u[k] += gamma * (feats[to][k] - feats[away][k]);
        }
    }
    Ok((objective(&p, &u), best_gap))
}

/// Q⌢φ(σ): every coordinate weighted 1/(2c²).
pub fn q_paren(
    phi: &[f64],
    c2: f64,
    coords: &[Vec<u8>],
    x: usize,
    gap_tol: f64,
) -> Result<(f64, f64), DualError> {
    if c2 <= 0.0 {
        return Err(DualError::BadParameter(c2));
    }
    let n = coords[0].len();
    let w = vec![1.0 / (2.0 * c2); n];
    q_coordinate(phi, &w, coords, x, gap_tol)
}

/// Q^j φ(σ): coordinate j (0-based) carries weight 1/c², the rest 1/(2c²).
pub fn q_j(
    phi: &[f64],
    c2: f64,
    j: usize,
    coords: &[Vec<u8>],
    x: usize,
    gap_tol: f64,
) -> Result<(f64, f64), DualError> {
    if c2 <= 0.0 {
        return Err(DualError::BadParameter(c2));
    }
    let n = coords[0].len();
    if j >= n {
        return Err(DualError::LengthMismatch(j, n));
    }
    let mut w = vec![1.0 / (2.0 * c2); n];
    w[j] = 1.0 / c2;
    q_coordinate(phi, &w, coords, x, gap_tol)
}

/// Q̂f(x) on a slice or multinomial carrier: every coordinate weighted 1/8.
pub fn q_hat(
    f: &[f64],
    coords: &[Vec<u8>],
    x: usize,
    gap_tol: f64,
) -> Result<(f64, f64), DualError> {
    let n = coords[0].len();
    let w = vec![1.0 / 8.0; n];
    q_coordinate(f, &w, coords, x, gap_tol)
}

/// Talagrand's convex-hull functional f(σ,A): the squared Euclidean distance
/// from the origin to the convex hull of the disagreement vectors
/// {(1_{σ(j) ≠ y(j)})_j : y ∈ A}. Exact via the min-norm-point method.
pub fn talagrand_f(
    sigma_coords: &[u8],
    a_coords: &[&[u8]],
) -> Result<(f64, Vec<f64>), DualError> {
    if a_coords.is_empty() {
        return Err(DualError::EmptySet);
    }
    let n = sigma_coords.len();
    let points: Vec<Vec<f64>> = a_coords
        .iter()
        .map(|y| {
            (0..n)
                .map(|j| if sigma_coords[j] != y[j] { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let x = min_norm_point(&points, 1e-12);
    let norm2 = x.iter().map(|&v| v * v).sum();
    Ok((norm2, x))
}

/// Wolfe's min-norm-point algorithm over the convex hull of `points`.
///
/// Major cycles add the vertex most opposed to the current iterate; minor
/// cycles solve the affine least-norm problem on the active set by Gaussian
/// elimination on the bordered Gram system and step back to the feasible
/// (convex) region, dropping vanished vertices.
pub fn min_norm_point(points: &[Vec<f64>], tol: f64) -> Vec<f64> {
    assert!(!points.is_empty());
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    // start from the shortest vertex
    let start = (0..points.len())
        .min_by(|&i, &j| dot(&points[i], &points[i]).total_cmp(&dot(&points[j], &points[j])))
        .unwrap();
    let mut active: Vec<usize> = vec![start];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = points[start].clone();

    for _ in 0..(points.len() * 4 + 32) {
        // optimality: ⟨x, x − p⟩ ≤ tol for every vertex p
        let xx = dot(&x, &x);
        let (q, xq) = (0..points.len())
            .map(|i| (i, dot(&x, &points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xq <= tol * xx.max(1.0) {
            break;
        }
        if active.contains(&q) {
            break; // numerically stalled; x is the best certified point
        }
        active.push(q);
        weights.push(0.0);

        // minor cycles
        loop {
            match affine_min_norm(points, &active) {
                Some(alpha) => {
                    if alpha.iter().all(|&a| a > 1e-12) {
                        weights = alpha;
                        break;
                    }
                    // step from weights toward alpha until a weight hits zero
                    let mut theta = 1.0f64;
                    for (w, a) in weights.iter().zip(&alpha) {
                        if *a <= 1e-12 && w - a > 1e-300 {
                            theta = theta.min(w / (w - a));
                        }
                    }
                    let mut next: Vec<f64> = weights
                        .iter()
                        .zip(&alpha)
                        .map(|(w, a)| (1.0 - theta) * w + theta * a)
                        .collect();
                    // drop vanished vertices
                    let mut keep_active = Vec::new();
                    let mut keep_w = Vec::new();
                    for (i, &w) in next.iter().enumerate() {
                        if w > 1e-12 {
                            keep_active.push(active[i]);
                            keep_w.push(w);
                        }
                    }
                    if keep_active.is_empty() {
                        // degenerate: keep the largest
                        let (bi, _) = next
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1.total_cmp(b.1))
                            .unwrap();
                        keep_active.push(active[bi]);
                        keep_w.push(1.0);
                    }
                    active = keep_active;
                    next = keep_w;
                    let s: f64 = next.iter().sum();
                    weights = next.into_iter().map(|w| w / s).collect();
                }
                None => {
                    // affinely dependent active set: drop the latest vertex
                    active.pop();
                    weights.pop();
                    let s: f64 = weights.iter().sum();
                    weights.iter_mut().for_each(|w| *w /= s);
                    break;
                }
            }
        }
        for v in x.iter_mut() {
            *v = 0.0;
        }
        for (&i, &w) in active.iter().zip(&weights) {
            for (xv, pv) in x.iter_mut().zip(&points[i]) {
                *xv += w * pv;
            }
        }
    }
    x
}

/// Solves min ‖Σ α_i P_i‖² subject to Σ α_i = 1 (unsigned α) via the
/// bordered Gram system; returns None when the system is singular.
fn affine_min_norm(points: &[Vec<f64>], active: &[usize]) -> Option<Vec<f64>> {
    let m = active.len();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    // KKT: [0 1ᵀ; 1 G][λ; α] = [1; 0]
    let dim = m + 1;
    let mut mat = vec![vec![0.0; dim + 1]; dim];
    for i in 0..m {
        mat[0][i + 1] = 1.0;
        mat[i + 1][0] = 1.0;
        for j in 0..m {
            mat[i + 1][j + 1] = dot(&points[active[i]], &points[active[j]]);
        }
    }
    mat[0][dim] = 1.0;
    // Gaussian elimination with partial pivoting
    for col in 0..dim {
        let (piv, piv_val) = (col..dim)
            .map(|r| (r, mat[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if piv_val < 1e-12 {
            return None;
        }
        mat.swap(col, piv);
        for r in 0..dim {
            if r != col {
                let f = mat[r][col] / mat[col][col];
                if f != 0.0 {
                    for c in col..=dim {
                        mat[r][c] -= f * mat[col][c];
                    }
                }
            }
        }
    }
    Some((0..m).map(|i| mat[i + 1][dim] / mat[i + 1][i + 1]).collect())
}
