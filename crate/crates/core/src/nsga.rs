//! Nondominated sorting and crowding distances.
//!
//! Minimization throughout. Candidate `a` dominates `b` when every objective
//! of `a` is no worse and at least one is strictly better. Rank 1 is the
//! non-dominated set; sorting proceeds on the remainder.
//!
//! Exact-equal objective vectors are the one departure from the textbook
//! relation: the earlier individual dominates its clones, which stacks
//! duplicates into successive fronts instead of letting them share rank 1.
//! Evolutionary runs produce many exact clones (memetic fitting maps equal
//! structures to bit-equal objectives), and under merge-then-truncate
//! elitism rank-1 clones would otherwise flood the population and expel all
//! other genetic material within a few generations.
//!
//! Two-objective inputs (the common case in the search loop) use a sweep
//! with binary search over per-front minima, O(n log n); other arities fall
//! back to the classic O(n²) bookkeeping. Objective values may be `+inf`
//! (failed candidates) but must not be NaN.

/// Per-individual rank (1-based) and crowding distance.
#[derive(Debug, Clone)]
pub struct SortResult {
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
}

impl SortResult {
    /// Indices ordered by (rank ascending, crowding descending); stable for
    /// equal keys so the output is deterministic.
    pub fn ordering(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.rank.len()).collect();
        idx.sort_by(|&a, &b| {
            self.rank[a]
                .cmp(&self.rank[b])
                .then(self.crowding[b].total_cmp(&self.crowding[a]))
        });
        idx
    }
}

pub fn non_dominated_sort(objectives: &[Vec<f64>]) -> SortResult {
    let n = objectives.len();
    if n == 0 {
        return SortResult {
            rank: vec![],
            crowding: vec![],
        };
    }
    debug_assert!(objectives.iter().all(|o| o.iter().all(|v| !v.is_nan())));
    let dims = objectives[0].len();
    debug_assert!(objectives.iter().all(|o| o.len() == dims));

    let rank = if dims == 2 {
        rank_two_objectives(objectives)
    } else {
        rank_generic(objectives)
    };

    let max_rank = rank.iter().copied().max().unwrap_or(1);
    let mut fronts: Vec<Vec<usize>> = vec![Vec::new(); max_rank];
    for (i, r) in rank.iter().enumerate() {
        fronts[r - 1].push(i);
    }
    let mut crowding = vec![0.0; n];
    for front in &fronts {
        assign_crowding(objectives, front, &mut crowding);
    }

    SortResult { rank, crowding }
}

fn rank_two_objectives(objectives: &[Vec<f64>]) -> Vec<usize> {
    let n = objectives.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        objectives[a][0]
            .total_cmp(&objectives[b][0])
            .then(objectives[a][1].total_cmp(&objectives[b][1]))
    });

    let mut rank = vec![0usize; n];
    // front_min[k]: smallest second objective seen in front k+1 so far;
    // nondecreasing in k, which makes the membership test searchable.
    let mut front_min: Vec<f64> = Vec::new();
    for &point in &idx {
        let o1 = objectives[point][1];
        // Processed points all have first objective <= ours, so any earlier
        // point with second objective <= o1 dominates us (`<=` also demotes
        // exact clones one front below their original). Find the first
        // front free of such points.
        let k = front_min.partition_point(|&min| min <= o1);
        if k == front_min.len() {
            front_min.push(o1);
        } else {
            front_min[k] = o1;
        }
        rank[point] = k + 1;
    }
    rank
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

fn rank_generic(objectives: &[Vec<f64>]) -> Vec<usize> {
    let n = objectives.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..n {
        for b in (a + 1)..n {
            if dominates(&objectives[a], &objectives[b]) || objectives[a] == objectives[b] {
                dominates_list[a].push(b);
                dominated_by[b] += 1;
            } else if dominates(&objectives[b], &objectives[a]) {
                dominates_list[b].push(a);
                dominated_by[a] += 1;
            }
        }
    }
    let mut rank = vec![0usize; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut r = 1;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = r;
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        current = next;
        r += 1;
    }
    rank
}

fn assign_crowding(objectives: &[Vec<f64>], front: &[usize], crowding: &mut [f64]) {
    if front.len() <= 2 {
        for &i in front {
            crowding[i] = f64::INFINITY;
        }
        return;
    }
    let dims = objectives[front[0]].len();
    let mut order: Vec<usize> = front.to_vec();
    for d in 0..dims {
        order.sort_by(|&a, &b| objectives[a][d].total_cmp(&objectives[b][d]));
        let lo = objectives[*order.first().unwrap()][d];
        let hi = objectives[*order.last().unwrap()][d];
        crowding[*order.first().unwrap()] = f64::INFINITY;
        crowding[*order.last().unwrap()] = f64::INFINITY;
        let range = hi - lo;
        if !(range.is_finite() && range > 0.0) {
            continue;
        }
        for w in order.windows(3) {
            let gap = (objectives[w[2]][d] - objectives[w[0]][d]) / range;
            if gap.is_finite() {
                crowding[w[1]] += gap;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objs(pairs: &[(f64, f64)]) -> Vec<Vec<f64>> {
        pairs.iter().map(|&(a, b)| vec![a, b]).collect()
    }

    #[test]
    fn mutually_non_dominated_set_is_rank_one() {
        let r = non_dominated_sort(&objs(&[(1.0, 4.0), (2.0, 3.0), (3.0, 2.0), (4.0, 1.0)]));
        assert_eq!(r.rank, vec![1, 1, 1, 1]);
    }

    #[test]
    fn strict_dominance_splits_ranks() {
        let r = non_dominated_sort(&objs(&[(1.0, 1.0), (2.0, 2.0)]));
        assert_eq!(r.rank, vec![1, 2]);
    }

    #[test]
    fn clones_stack_into_successive_fronts() {
        let r = non_dominated_sort(&objs(&[(1.0, 1.0), (1.0, 1.0), (0.5, 3.0)]));
        assert_eq!(r.rank, vec![1, 2, 1]);
        let r = non_dominated_sort(&objs(&[(2.0, 2.0), (2.0, 2.0), (1.0, 1.0)]));
        assert_eq!(r.rank, vec![2, 3, 1]);
    }

    #[test]
    fn infinite_objectives_land_last() {
        let inf = f64::INFINITY;
        let r = non_dominated_sort(&objs(&[(inf, inf), (1.0, 2.0), (inf, inf), (2.0, 1.0)]));
        assert_eq!(r.rank, vec![2, 1, 3, 1]);
    }

    /// Reference implementation by repeated removal of the non-dominated set,
    /// with the same clone rule (an earlier index dominates its exact copies).
    fn brute_force_ranks(objectives: &[Vec<f64>]) -> Vec<usize> {
        let n = objectives.len();
        let beats = |j: usize, i: usize| {
            dominates(&objectives[j], &objectives[i])
                || (objectives[j] == objectives[i] && j < i)
        };
        let mut rank = vec![0usize; n];
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut r = 1;
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| !remaining.iter().any(|&j| j != i && beats(j, i)))
                .collect();
            for &i in &front {
                rank[i] = r;
            }
            remaining.retain(|i| !front.contains(i));
            r += 1;
        }
        rank
    }

    #[test]
    fn sweep_matches_brute_force_on_random_sets() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(7);
        for _ in 0..20 {
            // Coarse grid values so exact duplicates are common.
            let objectives: Vec<Vec<f64>> = (0..60)
                .map(|_| {
                    vec![
                        (rng.gen_range(0..8) as f64) / 2.0,
                        (rng.gen_range(0..8) as f64) / 2.0,
                    ]
                })
                .collect();
            let fast = non_dominated_sort(&objectives).rank;
            assert_eq!(fast, brute_force_ranks(&objectives));
        }
    }

    #[test]
    fn generic_path_matches_brute_force_in_three_dims() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(11);
        for _ in 0..10 {
            let objectives: Vec<Vec<f64>> = (0..40)
                .map(|_| (0..3).map(|_| (rng.gen_range(0..6) as f64)).collect())
                .collect();
            let got = non_dominated_sort(&objectives).rank;
            assert_eq!(got, brute_force_ranks(&objectives));
        }
    }

    #[test]
    fn crowding_prefers_boundaries_and_gaps() {
        // Front of four: boundaries infinite, the point in the sparse region
        // beats the point in the dense region.
        let r = non_dominated_sort(&objs(&[
            (0.0, 10.0),
            (1.0, 9.0),
            (2.0, 8.0),
            (10.0, 0.0),
        ]));
        assert_eq!(r.rank, vec![1, 1, 1, 1]);
        assert_eq!(r.crowding[0], f64::INFINITY);
        assert_eq!(r.crowding[3], f64::INFINITY);
        assert!(r.crowding[2] > r.crowding[1]);
    }

    #[test]
    fn ordering_is_rank_then_crowding() {
        let r = non_dominated_sort(&objs(&[
            (5.0, 5.0), // rank 2
            (0.0, 10.0),
            (4.0, 4.0), // rank 1, interior
            (10.0, 0.0),
        ]));
        let order = r.ordering();
        assert_eq!(order.last(), Some(&0));
        assert!(order[..3].contains(&1) && order[..3].contains(&2) && order[..3].contains(&3));
    }
}
