//! Rectangular minimum-cost assignment (Kuhn-Munkres with potentials).

/// Assigns every row to a distinct column minimizing the total cost.
/// `cost` is `n x m` with `n <= m` and finite entries; forbid a pair with a
/// large finite cost. Returns the column of each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "need at least as many columns ({m}) as rows ({n})");
    assert!(cost
        .iter()
        .all(|r| r.len() == m && r.iter().all(|c| c.is_finite())));

    // 1-based potentials; column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if owner[j] > 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(cost: &[Vec<f64>], a: &[usize]) -> f64 {
        a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
    }

    /// Best total over every injective row -> column map.
    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + go(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost[0].len()])
    }

    #[test]
    fn one_by_one() {
        assert_eq!(min_cost_assignment(&[vec![3.5]]), vec![0]);
    }

    #[test]
    fn diagonal_dominance() {
        let c = vec![vec![1.0, 5.0], vec![4.0, 2.0]];
        assert_eq!(min_cost_assignment(&c), vec![0, 1]);
        let c = vec![vec![5.0, 1.0], vec![2.0, 4.0]];
        assert_eq!(min_cost_assignment(&c), vec![1, 0]);
    }

    #[test]
    fn rectangular_picks_cheapest_columns() {
        let c = vec![vec![9.0, 1.0, 8.0, 7.0], vec![9.0, 2.0, 8.0, 0.5]];
        assert_eq!(min_cost_assignment(&c), vec![1, 3]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..5, extra in 0usize..3, seed in prop::collection::vec(0.0f64..10.0, 32)) {
            let m = n + extra;
            let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| seed[(i * m + j) % 32] + (i * j) as f64 * 0.01).collect()).collect();
            let a = min_cost_assignment(&cost);
            let mut cols = a.clone();
            cols.sort_unstable();
            cols.dedup();
            prop_assert_eq!(cols.len(), n);
            prop_assert!((total(&cost, &a) - brute_force(&cost)).abs() < 1e-9);
        }
    }
}
