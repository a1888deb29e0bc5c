//! Exact transportation linear programs by successive shortest paths with
//! node potentials (Dijkstra on reduced costs). Used both for Wasserstein
//! distances and as the linear minimization oracle of the Frank-Wolfe
//! solvers for weak transport costs.

const MASS_EPS: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub value: f64,
    pub plan: Vec<Vec<f64>>,
    /// Certified duality gap: value minus a feasible dual objective, ≥ 0.
    pub dual_gap: f64,
    /// Row potentials u and column potentials v with u_i + v_j ≤ c_ij.
    pub row_duals: Vec<f64>,
    pub col_duals: Vec<f64>,
}

/// Solves min Σ x_ij c_ij over x ≥ 0 with row sums `a` and column sums `b`
/// (Σa = Σb = 1 in this crate, but any balanced nonnegative marginals work).
pub fn min_cost_transport(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> FlowSolution {
    let nr = a.len();
    let nc = b.len();
    assert!(cost.len() == nr && cost.iter().all(|r| r.len() == nc));

    let mut plan = vec![vec![0.0; nc]; nr];
    let mut rem_a = a.to_vec();
    let mut rem_b = b.to_vec();
    // potentials over nodes: rows 0..nr, columns nr..nr+nc
    let mut pot = vec![0.0; nr + nc];

    loop {
        // Multi-source Dijkstra from all rows with remaining supply, over the
        // residual graph: forward edges i→j (always present) with reduced
        // cost c_ij + p_i − p_j ≥ 0, backward edges j→i when plan[i][j] > 0
        // with reduced cost −c_ij + p_j − p_i (zero under complementary
        // slackness, clamped at 0 against rounding).
        let total = nr + nc;
        let mut dist = vec![f64::INFINITY; total];
        let mut done = vec![false; total];
        let mut prev: Vec<Option<usize>> = vec![None; total];
        let mut any_source = false;
        for i in 0..nr {
            if rem_a[i] > MASS_EPS {
                dist[i] = 0.0;
                any_source = true;
            }
        }
        if !any_source {
            break;
        }
        for _ in 0..total {
            let mut cur = usize::MAX;
            let mut best = f64::INFINITY;
            for x in 0..total {
                if !done[x] && dist[x] < best {
                    best = dist[x];
                    cur = x;
                }
            }
            if cur == usize::MAX {
                break;
            }
            done[cur] = true;
            if cur < nr {
                let i = cur;
                for j in 0..nc {
                    let rc = (cost[i][j] + pot[i] - pot[nr + j]).max(0.0);
                    if dist[i] + rc < dist[nr + j] {
                        dist[nr + j] = dist[i] + rc;
                        prev[nr + j] = Some(i);
                    }
                }
            } else {
                let j = cur - nr;
                for i in 0..nr {
                    if plan[i][j] > MASS_EPS {
                        let rc = (-cost[i][j] - pot[i] + pot[nr + j]).max(0.0);
                        if dist[nr + j] + rc < dist[i] {
                            dist[i] = dist[nr + j] + rc;
                            prev[i] = Some(nr + j);
                        }
                    }
                }
            }
        }
        // nearest column with unmet demand
        let mut target = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..nc {
            if rem_b[j] > MASS_EPS && dist[nr + j] < best {
                best = dist[nr + j];
                target = nr + j;
            }
        }
        if target == usize::MAX {
            break; // numerically exhausted
        }
        let d_target = dist[target];
        for x in 0..nr + nc {
            if dist[x] < f64::INFINITY {
                pot[x] += dist[x].min(d_target);
            } else {
                pot[x] += d_target;
            }
        }
        // reconstruct augmenting path and its bottleneck
        let mut path = vec![target];
        while let Some(p) = prev[*path.last().unwrap()] {
            path.push(p);
        }
        path.reverse();
        let source = path[0];
        let mut delta = rem_a[source].min(rem_b[target - nr]);
        for w in path.windows(2) {
            if w[0] >= nr {
                // backward edge col→row
                let (j, i) = (w[0] - nr, w[1]);
                delta = delta.min(plan[i][j]);
            }
        }
        for w in path.windows(2) {
            if w[0] < nr {
                plan[w[0]][w[1] - nr] += delta;
            } else {
                plan[w[1]][w[0] - nr] -= delta;
            }
        }
        rem_a[source] -= delta;
        rem_b[target - nr] -= delta;
        if delta <= MASS_EPS {
            break; // degenerate; marginals are consistent to round-off only
        }
    }

    let value: f64 = plan
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, &x)| x * cost[i][j]).sum::<f64>())
        .sum();

    // Feasible dual: u_i = −p_i, v_j = p_j satisfies u_i + v_j ≤ c_ij up to
    // round-off; shift u by the worst violation to restore exact feasibility.
    let mut u: Vec<f64> = (0..nr).map(|i| -pot[i]).collect();
    let v: Vec<f64> = (0..nc).map(|j| pot[nr + j]).collect();
    let mut viol: f64 = 0.0;
    for i in 0..nr {
        for j in 0..nc {
            viol = viol.max(u[i] + v[j] - cost[i][j]);
        }
    }
    if viol > 0.0 {
        for ui in &mut u {
            *ui -= viol;
        }
    }
    let dual: f64 = a.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>()
        + b.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
    FlowSolution {
        value,
        dual_gap: (value - dual).max(0.0),
        plan,
        row_duals: u,
        col_duals: v,
    }
}
