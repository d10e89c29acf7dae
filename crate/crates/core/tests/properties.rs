use cutset_bounds::oracle::random_system;
use cutset_bounds::search::{unrank, BoundTable, DEFAULT_SEARCH_CAP};
use cutset_bounds::{
    bound, bound_all_levels, condition1, condition2_any, condition2_at, generate_conditional_uniform, line_deduction,
    max_level, optimal_bound, reorder, ConditionWitness, Ordering, ProbabilityMatrix, Tolerance,
};
use proptest::prelude::*;

/// Valid matrix from a diagonal and overlap fractions; fractions of exactly 0
/// or 1 put entries on the Fréchet limits.
fn matrix_from(diag: &[f64], fractions: &[f64]) -> ProbabilityMatrix {
    let n = diag.len();
    let mut rows = vec![vec![0.0; n]; n];
    let mut k = 0;
    for i in 0..n {
        rows[i][i] = diag[i];
        for j in (i + 1)..n {
            let v = diag[i].min(diag[j]) * fractions[k];
            rows[i][j] = v;
            rows[j][i] = v;
            k += 1;
        }
    }
    ProbabilityMatrix::from_rows_validated(rows).unwrap()
}

fn fraction() -> BoxedStrategy<f64> {
    prop_oneof![3 => 0.0..1.0f64, 1 => Just(0.0), 1 => Just(1.0), 1 => Just(0.5)].boxed()
}

/// Never exactly on the upper Fréchet limit, so no event is forced inside another.
fn interior_fraction() -> BoxedStrategy<f64> {
    prop_oneof![3 => 0.0..1.0f64, 1 => Just(0.0), 1 => Just(0.5)].boxed()
}

fn matrix(max_n: usize, fractions: fn() -> BoxedStrategy<f64>) -> impl Strategy<Value = ProbabilityMatrix> {
    (2..=max_n).prop_flat_map(move |n| {
        (
            prop::collection::vec(0.0..1.0f64, n),
            prop::collection::vec(fractions(), n * (n - 1) / 2),
        )
            .prop_map(|(d, f)| matrix_from(&d, &f))
    })
}

fn matrix_and_ordering(max_n: usize) -> impl Strategy<Value = (ProbabilityMatrix, Ordering)> {
    with_ordering(matrix(max_n, fraction))
}

fn interior_matrix_and_ordering(max_n: usize) -> impl Strategy<Value = (ProbabilityMatrix, Ordering)> {
    with_ordering(matrix(max_n, interior_fraction))
}

fn with_ordering(
    matrices: impl Strategy<Value = ProbabilityMatrix>,
) -> impl Strategy<Value = (ProbabilityMatrix, Ordering)> {
    matrices.prop_flat_map(|m| {
        let n = m.n();
        (Just(m), Just((0..n).collect::<Vec<_>>()).prop_shuffle()).prop_map(|(m, p)| (m, Ordering::new(p).unwrap()))
    })
}

/// Straightforward level-m bound: every ordered sequence of distinct
/// predecessors is built explicitly and its sum evaluated from scratch.
fn naive_bound(m: &ProbabilityMatrix, ordering: &Ordering, level: usize) -> f64 {
    let order = ordering.as_slice();
    let mut total = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        let preds = &order[..pos];
        let t = level.min(preds.len());
        let mut best = 0.0f64;
        let mut seqs: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..t {
            let mut longer = Vec::new();
            for s in &seqs {
                for &j in preds.iter().filter(|j| !s.contains(j)) {
                    let mut s = s.clone();
                    s.push(j);
                    longer.push(s);
                }
            }
            seqs = longer;
        }
        for seq in &seqs {
            let mut sum = 0.0;
            for r in 0..seq.len() {
                let pr = m.get(seq[r], i);
                let cross: f64 = (0..r)
                    .map(|s| pr.min(m.get(seq[s], i)).min(m.get(seq[r], seq[s])))
                    .sum();
                sum += (pr - cross).max(0.0);
            }
            best = best.max(sum);
        }
        total += (m.first_order(i) - best).max(0.0);
    }
    total
}

/// `P_1 + P_2 - P_12 + sum_{i>=3} [P_i - max_{j<i} P_ji]`, lines clipped at zero.
fn kvhd(m: &ProbabilityMatrix, ordering: &Ordering) -> f64 {
    let o = ordering.as_slice();
    (0..o.len())
        .map(|a| {
            let best = (0..a).map(|b| m.get(o[b], o[a])).fold(0.0, f64::max);
            (m.first_order(o[a]) - best).max(0.0)
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn level_one_is_the_classical_bound((m, o) in matrix_and_ordering(7)) {
        let b = bound(&m, &o, 1).unwrap();
        prop_assert!((b - kvhd(&m, &o)).abs() <= 1e-12, "{} vs {}", b, kvhd(&m, &o));
    }

    #[test]
    fn every_level_matches_naive_evaluation((m, o) in matrix_and_ordering(6)) {
        for level in 1..=max_level(m.n()) {
            let b = bound(&m, &o, level).unwrap();
            let naive = naive_bound(&m, &o, level);
            prop_assert!((b - naive).abs() <= 1e-12, "level {}: {} vs {}", level, b, naive);
        }
    }

    #[test]
    fn levels_never_increase((m, o) in matrix_and_ordering(7)) {
        let values = bound_all_levels(&m, &o, max_level(m.n())).unwrap().values;
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0]), "{:?}", values);
    }

    #[test]
    fn bounds_lie_between_first_event_and_first_order_sum((m, o) in matrix_and_ordering(7)) {
        let first = m.first_order(o.as_slice()[0]);
        for level in 1..=max_level(m.n()) {
            let b = bound(&m, &o, level).unwrap();
            prop_assert!(b <= m.first_order_sum() + 1e-15);
            prop_assert!(b >= first);
        }
    }

    #[test]
    fn swapping_the_first_two_events_changes_nothing((m, o) in matrix_and_ordering(7)) {
        let swapped = o.swapped(0, 1);
        for level in 1..=max_level(m.n()) {
            let a = bound(&m, &o, level).unwrap();
            let b = bound(&m, &swapped, level).unwrap();
            prop_assert!((a - b).abs() <= 1e-15, "level {}: {} vs {}", level, a, b);
        }
    }

    #[test]
    fn triplet_witness_implies_level_two_gain((m, o) in interior_matrix_and_ordering(7)) {
        prop_assume!(m.n() >= 3);
        if condition1(&m, &o).unwrap().is_some() {
            prop_assert!(bound(&m, &o, 2).unwrap() < bound(&m, &o, 1).unwrap());
        }
    }

    /// The witnessed line deducts strictly more at the next level; the bound
    /// drops unless that line was already clipped to zero.
    #[test]
    fn line_witness_implies_next_level_gain((m, o) in matrix_and_ordering(7)) {
        let q = reorder(&m, &o).unwrap();
        for level in 1..max_level(m.n()) {
            if let Some(ConditionWitness::Line { line, .. }) = condition2_any(&m, &o, level).unwrap() {
                let lower = line_deduction(&q, line, level).unwrap();
                let higher = line_deduction(&q, line, level + 1).unwrap();
                prop_assert!(higher > lower, "line {}: {} vs {}", line, higher, lower);
                if q.first_order(line) > lower {
                    prop_assert!(bound(&m, &o, level + 1).unwrap() < bound(&m, &o, level).unwrap());
                }
            }
        }
    }

    #[test]
    fn level_one_line_test_is_the_two_sided_pairwise_test((m, o) in matrix_and_ordering(7)) {
        let q = reorder(&m, &o).unwrap();
        for line in 2..m.n() {
            let pairwise = (0..line).all(|a| {
                (0..line).filter(|&b| b != a).all(|b| q.get(a, line) > q.get(b, line).min(q.get(a, b)))
            });
            prop_assert_eq!(condition2_at(&m, &o, 1, line).unwrap(), pairwise);
        }
    }

    #[test]
    fn level_one_line_test_implies_triplet_witness((m, o) in matrix_and_ordering(7)) {
        prop_assume!(m.n() >= 3);
        let any_line = (2..m.n()).any(|line| condition2_at(&m, &o, 1, line).unwrap());
        if any_line {
            prop_assert!(condition1(&m, &o).unwrap().is_some());
        }
    }

    #[test]
    fn bounds_dominate_exact_union(seed in any::<u64>(), n_el in 1usize..=6, n in 1usize..=5) {
        let cap = (0..n_el / 2).fold(1usize, |acc, i| acc * (n_el - i) / (i + 1));
        prop_assume!(n <= cap);
        let system = random_system(n_el, n, seed).unwrap();
        let exact = system.atom_union_probability().unwrap();
        let m = system.project_second_order();
        let first_order = m.first_order_sum();
        let pairs: f64 = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).sum();
        prop_assert!(exact <= first_order + 1e-12);
        prop_assert!(exact >= first_order - pairs - 1e-12);
        let table = BoundTable::compute(&m, max_level(n), DEFAULT_SEARCH_CAP).unwrap();
        for level in 1..=max_level(n) {
            for &v in table.level(level) {
                prop_assert!(v >= exact - 1e-12, "level {}: {} < {}", level, v, exact);
            }
        }
    }

    #[test]
    fn gain_conditions_hold_on_realizable_matrices(seed in any::<u64>(), n_el in 3usize..=6, n in 3usize..=5) {
        let cap = (0..n_el / 2).fold(1usize, |acc, i| acc * (n_el - i) / (i + 1));
        prop_assume!(n <= cap);
        let m = random_system(n_el, n, seed).unwrap().project_second_order();
        let table = BoundTable::compute(&m, max_level(n), DEFAULT_SEARCH_CAP).unwrap();
        for rank in 0..table.len() {
            let o = table.ordering(rank);
            if condition1(&m, &o).unwrap().is_some() {
                prop_assert!(table.level(2)[rank] < table.level(1)[rank]);
            }
            for level in 1..max_level(n) {
                if condition2_any(&m, &o, level).unwrap().is_some() {
                    prop_assert!(table.level(level + 1)[rank] < table.level(level)[rank]);
                }
            }
        }
    }
}

#[test]
fn optimal_bounds_agree_with_table_minimum() {
    for seed in 0..20 {
        let m = generate_conditional_uniform(5, seed).unwrap();
        let table = BoundTable::compute(&m, 4, DEFAULT_SEARCH_CAP).unwrap();
        for level in 1..=4 {
            let (best, ordering) = optimal_bound(&m, level).unwrap();
            let min = table.level(level).iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(best, min);
            assert_eq!(bound(&m, &ordering, level).unwrap(), best);
        }
    }
}

#[test]
fn table_rows_follow_lexicographic_ranks() {
    let m = generate_conditional_uniform(4, 8).unwrap();
    let table = BoundTable::compute(&m, 3, DEFAULT_SEARCH_CAP).unwrap();
    for rank in 0..24 {
        let o = Ordering::new(unrank(4, rank)).unwrap();
        assert_eq!(table.ordering(rank), o);
        for level in 1..=3 {
            assert_eq!(table.level(level)[rank], bound(&m, &o, level).unwrap());
        }
    }
    assert_eq!(table.monotonicity_violations(), 0);
}

/// The two highest levels have the same best bound on random matrices. This is
/// an empirical observation, not a proven identity.
#[test]
fn two_highest_levels_share_the_optimum() {
    let tol = Tolerance::default();
    for n in 4..=7 {
        let seeds = if n == 7 { 0..5 } else { 0..30 };
        for seed in seeds {
            let m = generate_conditional_uniform(n, 1000 * n as u64 + seed).unwrap();
            let table = BoundTable::compute(&m, n - 1, DEFAULT_SEARCH_CAP).unwrap();
            let min = |level: usize| table.level(level).iter().copied().fold(f64::INFINITY, f64::min);
            assert!(
                tol.ties(min(n - 1), min(n - 2)),
                "n {n} seed {seed}: {} vs {}",
                min(n - 1),
                min(n - 2)
            );
        }
    }
}
