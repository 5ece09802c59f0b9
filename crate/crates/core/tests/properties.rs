use infosel::benchmarks::{gen_friedman, gen_runge, gen_toy};
use infosel::dataset::{parse_csv, CsvOptions, Dataset, Variable};
use infosel::pid::{brute_force_unique, broja_unique, pid_report, TripleDistribution};
use infosel::selection::{select_features, Criterion, EstimatorKind, SelectionConfig};
use infosel::Seed;
use proptest::prelude::*;

const TOL: f64 = 1e-4;

fn table(dims: [usize; 3]) -> impl Strategy<Value = TripleDistribution> {
    let cells = dims.iter().product::<usize>();
    proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], cells)
        .prop_filter("non-empty table", |w| w.iter().any(|&v| v > 0.0))
        .prop_map(move |w| TripleDistribution::from_weights(dims, &w).unwrap())
}

fn any_table() -> impl Strategy<Value = TripleDistribution> {
    (2usize..4, 2usize..4, 2usize..4).prop_flat_map(|(a, b, c)| table([a, b, c]))
}

fn relabel(p: &TripleDistribution, perms: &[Vec<usize>; 3]) -> TripleDistribution {
    let inv: Vec<Vec<usize>> = perms
        .iter()
        .map(|perm| {
            let mut inv = vec![0; perm.len()];
            for (i, &j) in perm.iter().enumerate() {
                inv[j] = i;
            }
            inv
        })
        .collect();
    TripleDistribution::from_fn(p.dims(), |y, a, b| p.get(inv[0][y], inv[1][a], inv[2][b])).unwrap()
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_identities(p in any_table()) {
        let r = pid_report(&p, TOL).unwrap();
        let (a, t) = (r.atoms, r.terms);
        for (lhs, rhs) in [
            (t.mi_x1, a.unq_x1 + a.shd),
            (t.mi_x2, a.unq_x2 + a.shd),
            (t.mi_joint, a.total()),
            (t.cmi_x1_given_x2, a.unq_x1 + a.syn),
            (t.cmi_x2_given_x1, a.unq_x2 + a.syn),
            (t.mi_x2 - t.cmi_x2_given_x1, a.shd - a.syn),
        ] {
            prop_assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
        }
        for v in [a.unq_x1, a.unq_x2, a.shd, a.syn] {
            prop_assert!(v >= -1e-6);
        }
    }

    #[test]
    fn solver_is_marginal_feasible(p in any_table()) {
        let sol = broja_unique(&p, TOL).unwrap();
        for (m, n) in [(p.marginal_y_x1(), sol.q.marginal_y_x1()), (p.marginal_y_x2(), sol.q.marginal_y_x2())] {
            for (a, b) in m.iter().zip(&n) {
                prop_assert!((a - b).abs() <= TOL);
            }
        }
    }

    #[test]
    fn solver_never_worse_than_grid(p in table([2, 2, 2])) {
        let step = 0.01;
        let solver = broja_unique(&p, TOL).unwrap().unique_x1;
        prop_assert!(solver <= brute_force_unique(&p, step).unwrap() + step);
    }

    #[test]
    fn relabeling_leaves_atoms_unchanged(
        (p, perms) in (2usize..4, 2usize..4, 2usize..4).prop_flat_map(|(a, b, c)| {
            (table([a, b, c]), (permutation(a), permutation(b), permutation(c)))
        })
    ) {
        let q = relabel(&p, &[perms.0, perms.1, perms.2]);
        let (x, y) = (pid_report(&p, TOL).unwrap().atoms, pid_report(&q, TOL).unwrap().atoms);
        for (a, b) in [(x.unq_x1, y.unq_x1), (x.unq_x2, y.unq_x2), (x.shd, y.shd), (x.syn, y.syn)] {
            prop_assert!((a - b).abs() < 2.0 * TOL);
        }
    }
}

fn plugin(criterion: Criterion, seed: u64) -> SelectionConfig {
    SelectionConfig { criterion, estimator: EstimatorKind::Plugin, n_perm: 99, seed: Seed(seed), ..Default::default() }
}

/// Y is a fair bit, X1 = Y xor N with P(N = 1) = 0.3, so N is informative
/// only jointly with X1. Column 2 copies X1, columns 3 and 4 are noise.
fn masked_bit(n: usize, seed: u64) -> Dataset {
    let mut s = Seed(seed).rng();
    let mut cols = vec![Vec::with_capacity(n); 6];
    for _ in 0..n {
        let y = s.below(2) as usize;
        let m = s.bernoulli(0.3) as usize;
        let (c, d) = (s.below(2) as usize, s.below(2) as usize);
        for (col, v) in cols.iter_mut().zip([y ^ m, m, y ^ m, c, d, y]) {
            col.push(v);
        }
    }
    let vars = ["X1", "N", "X1 copy", "C", "D", "Y"].iter().zip(cols).map(|(n, c)| Variable::discrete(*n, c)).collect();
    Dataset::new(vars, 5).unwrap()
}

#[test]
fn cmi_takes_synergy_and_drops_copies() {
    for seed in 0..5 {
        let d = masked_bit(500, seed);
        let sorted = |c| {
            let mut s = select_features(&d, &plugin(c, seed)).unwrap().selected;
            s.sort_unstable();
            s
        };
        assert_eq!(sorted(Criterion::Cmi), [0, 1], "seed {seed}");
        assert_eq!(sorted(Criterion::Mi), [0, 2], "seed {seed}");
    }
}

#[test]
fn trace_invariants() {
    let d = gen_friedman(1, 300, 0.5, None, Seed(3)).unwrap();
    for criterion in [Criterion::Cmi, Criterion::Mi] {
        let r = select_features(&d, &plugin(criterion, 3)).unwrap();
        for step in &r.steps {
            let best = step.scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(step.score, best);
            let first = step.scores.iter().find(|s| s.1 == best).unwrap().0;
            assert_eq!(step.winner, first);
            assert!(step.p_value > 0.0 && step.p_value <= 1.0);
            assert_eq!(step.significant, step.score > step.threshold);
        }
        assert!(r.selected.iter().all(|v| !r.pruned.contains(v)));
        let last = r.pruning.last();
        assert!(last.is_none_or(|p| p.significant || r.selected.is_empty()));
    }
}

#[test]
fn csv_round_trip_preserves_selection() {
    let d = gen_toy(300, Seed(9)).unwrap();
    let back = parse_csv(&d.to_csv_string(), "Y", &CsvOptions { header: true, ..Default::default() }).unwrap();
    let cfg = SelectionConfig { n_perm: 39, seed: Seed(9), ..Default::default() };
    assert_eq!(select_features(&d, &cfg).unwrap(), select_features(&back, &cfg).unwrap());
}

#[test]
fn runge_noise_free_identity() {
    let (a, b, c) = (0.4, 2.0, 0.4);
    let d = gen_runge(50, a, b, c, 0.0, Seed(1)).unwrap();
    let col = |i: usize| d.variable(i).as_f64();
    let (z, w, y) = ((0..3).map(col).collect::<Vec<_>>(), (3..7).map(col).collect::<Vec<_>>(), col(9));
    for r in 0..d.n_samples() {
        let pred = c * w.iter().map(|v| v[r]).sum::<f64>() + b * z.iter().map(|v| v[r]).product::<f64>();
        assert!((y[r] - pred).abs() < 1e-9);
    }
}
