//! Minimum-cost perfect matching on small square cost matrices.

use crate::{Error, Result};

/// A bijection rows → columns; `permutation[i]` is the column given to row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub permutation: Vec<usize>,
    /// Sum of the selected entries, accumulated in row order.
    pub total_cost: f64,
}

/// Kuhn–Munkres with row/column potentials, O(n³). Returns the column
/// assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    // 1-based with a virtual column 0, as in the classic formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

fn min_cost(cost: &[Vec<f64>]) -> f64 {
    if cost.is_empty() {
        return 0.0;
    }
    hungarian(cost)
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .sum()
}

/// Globally optimal assignment; among optimal permutations the
/// lexicographically smallest is returned.
pub fn optimal_assignment(cost: &[Vec<f64>]) -> Result<Assignment> {
    let n = cost.len();
    if n == 0 {
        return Err(Error::invalid("cost matrix is empty"));
    }
    if cost.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("cost matrix is not square"));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::invalid("cost matrix has non-finite entries"));
    }

    let optimum = min_cost(cost);
    let tol = 1e-12 * (1.0 + optimum.abs());

    // Fix rows in order to the smallest column that still admits an optimum.
    let mut permutation = Vec::with_capacity(n);
    let mut free: Vec<usize> = (0..n).collect();
    let mut fixed_cost = 0.0;
    for i in 0..n {
        let mut chosen = None;
        for (slot, &j) in free.iter().enumerate() {
            let rest: Vec<usize> = free.iter().copied().filter(|&c| c != j).collect();
            let sub: Vec<Vec<f64>> = (i + 1..n)
                .map(|r| rest.iter().map(|&c| cost[r][c]).collect())
                .collect();
            if fixed_cost + cost[i][j] + min_cost(&sub) <= optimum + tol {
                chosen = Some(slot);
                break;
            }
        }
        // The optimum is always reachable from some column; fall back to the
        // solver's own choice if rounding rejected every candidate.
        let slot = chosen.unwrap_or_else(|| {
            let sub: Vec<Vec<f64>> = (i..n)
                .map(|r| free.iter().map(|&c| cost[r][c]).collect())
                .collect();
            hungarian(&sub)[0]
        });
        let j = free.remove(slot);
        fixed_cost += cost[i][j];
        permutation.push(j);
    }
    let total_cost = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .sum();
    Ok(Assignment {
        permutation,
        total_cost,
    })
}
