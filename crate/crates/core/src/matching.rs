//! Minimum-weight perfect matching on complete bipartite graphs
//! (Hungarian method with potentials, O(n^3)).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchingError {
    #[error("weight matrix must be square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("weight at ({row}, {col}) is {value}; weights must be finite and non-negative")]
    BadWeight { row: usize, col: usize, value: f64 },
}

/// A perfect matching: `assignment[row] = col`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub assignment: Vec<usize>,
    pub total: f64,
}

/// Minimum-weight perfect matching of a square, finite, non-negative matrix.
pub fn hungarian(weights: &[Vec<f64>]) -> Result<Matching, MatchingError> {
    let n = weights.len();
    for (row, r) in weights.iter().enumerate() {
        if r.len() != n {
            return Err(MatchingError::NotSquare { row, len: r.len(), expected: n });
        }
        for (col, &value) in r.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(MatchingError::BadWeight { row, col, value });
            }
        }
    }
    let (total, assignment) = solve_assignment(n, |i, j| weights[i][j]);
    Ok(Matching { assignment, total })
}

/// Solves the `n x n` assignment problem for a cost oracle. Returns the
/// optimal total (summed directly from the chosen entries) and the
/// row-to-column assignment.
pub(crate) fn solve_assignment(n: usize, cost: impl Fn(usize, usize) -> f64) -> (f64, Vec<usize>) {
    if n == 0 {
        return (0.0, Vec::new());
    }
    // 1-based potentials; column 0 is the virtual start column
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
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
        assignment[p[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
    (total, assignment)
}
