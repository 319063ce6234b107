//! Exact minimum-cost perfect matching on a dense square cost matrix.
//!
//! Shortest augmenting paths with dual potentials (Hungarian method), O(n^3).
//! Ties are resolved toward the lowest column index, so the returned matching
//! is a deterministic function of the cost matrix.

/// Returns `assignment[row] = column` minimizing the total cost.
pub fn min_cost_assignment(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is the virtual root column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        matched_row[0] = row;
        let mut col0 = 0usize;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[col0] = true;
            let i0 = matched_row[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if matched_row[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            matched_row[col0] = matched_row[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(n: usize, cost: &dyn Fn(usize, usize) -> f64) -> f64 {
        fn rec(row: usize, n: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64, cost: &dyn Fn(usize, usize) -> f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(row + 1, n, used, acc + cost(row, j), best, cost);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(0, n, &mut vec![false; n], 0.0, &mut best, cost);
        best
    }

    #[test]
    fn matches_brute_force_on_small_matrices() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 1000) as f64 / 10.0
        };
        for n in 1..=7 {
            for _ in 0..20 {
                let m: Vec<f64> = (0..n * n).map(|_| next()).collect();
                let cost = |i: usize, j: usize| m[i * n + j];
                let a = min_cost_assignment(n, cost);
                let mut seen = vec![false; n];
                a.iter().for_each(|&j| seen[j] = true);
                assert!(seen.iter().all(|&s| s));
                let total: f64 = a.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
                assert!((total - brute_force(n, &cost)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_and_singleton() {
        assert!(min_cost_assignment(0, |_, _| 0.0).is_empty());
        assert_eq!(min_cost_assignment(1, |_, _| 3.0), vec![0]);
    }
}
