use bclab::bc::{
    derive_sequence, expected_hits, prop16_sequence, shrinking_target_sequence, sp_ratio, sp_verdict, thm22_counterexample,
    thm23_counterexample, default_grid, Placement, Verdict,
};
use bclab::orbit::hit_experiment;
use bclab::shift::{enumerate_words, Symbol};
use bclab::{Cylinder, CylinderSequence, MarkovGibbs, Potential, SymbolicOrbit, TransitionMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn golden() -> (TransitionMatrix, MarkovGibbs) {
    let a = TransitionMatrix::golden_mean();
    let g = MarkovGibbs::parry(&a).unwrap();
    (a, g)
}

fn weighted_golden(shift: f64) -> MarkovGibbs {
    let a = TransitionMatrix::golden_mean();
    let phi = Potential::new(&a, 2, [(vec![0, 0], 0.4), (vec![0, 1], -0.3), (vec![1, 0], 0.1)]).unwrap();
    MarkovGibbs::build(&a, &phi.plus_constant(shift)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derived_cylinders_keep_the_base_word(
        words in prop::collection::vec((0usize..3, 1usize..5, -6i64..6), 1..6),
        lengths in prop::collection::vec(1u64..9, 6),
    ) {
        let a = TransitionMatrix::full(3).unwrap();
        let base: Vec<Cylinder> = words
            .iter()
            .map(|&(s, len, lo)| Cylinder::new(&a, lo, vec![s as Symbol; len]).unwrap())
            .collect();
        let lengths = lengths[..base.len()].to_vec();
        let seq = derive_sequence(base.clone(), lengths.clone()).unwrap();
        let d = seq.derivation().unwrap();
        let s = d.partial_sums();
        prop_assert_eq!(seq.len(), lengths.iter().sum::<u64>());
        for n in 1..=seq.len() {
            let k = d.block_of(n);
            prop_assert!(s[k - 1] < n && n <= s[k]);
            let c = seq.cylinder(n).unwrap();
            prop_assert_eq!(c.word(), base[k - 1].word());
            // Shifting back by n - s_k recovers the base interval.
            prop_assert_eq!(c.interval().translate(n as i64 - s[k] as i64), base[k - 1].interval());
        }
    }

    #[test]
    fn sp_ratio_ignores_constant_potential_shifts(c in -3.0f64..3.0, len in 1usize..4, n in 2u64..30) {
        let (a, _) = golden();
        let fixture = thm22_counterexample(&a, &vec![0; len], &(1..=10).collect::<Vec<_>>(), Placement::Aligned).unwrap();
        let r0 = sp_ratio(&weighted_golden(0.0), &fixture.sequence, 1, n).unwrap();
        let r1 = sp_ratio(&weighted_golden(c), &fixture.sequence, 1, n).unwrap();
        prop_assert!((r0 - r1).abs() < 1e-10, "{} vs {}", r0, r1);
    }
}

#[test]
fn repeated_base_sums_are_nonnegative_and_grow() {
    let (a, g) = golden();
    let fixture = thm22_counterexample(&a, &[0], &(1..=30).collect::<Vec<_>>(), Placement::Aligned).unwrap();
    let report = sp_verdict(&g, &fixture.sequence, &default_grid(465)).unwrap();
    // Every R_mn is positive here: shifted copies of [0] correlate positively at all lags.
    for row in &report.rows {
        let diag: f64 = (row.m..=row.n)
            .map(|n| {
                let mu = g.cylinder_measure(&fixture.sequence.cylinder(n).unwrap());
                mu * (1.0 - mu)
            })
            .sum();
        assert!(row.sum_r >= diag - 1e-12, "{row:?}");
    }
    assert_eq!(report.verdict, Verdict::Growing);
    assert!(!fixture.bounded_warning);
}

#[test]
fn repeated_base_expected_hits_at_block_ends() {
    let (a, g) = golden();
    let base = Cylinder::new(&a, 0, vec![1]).unwrap();
    let fixture = thm22_counterexample(&a, base.word(), &(1..=100).collect::<Vec<_>>(), Placement::Aligned).unwrap();
    assert_eq!(fixture.sequence.len(), 5050);
    let mu = g.cylinder_measure(&base);
    assert!((expected_hits(&g, &fixture.sequence, 5050) - 5050.0 * mu).abs() < 1e-9);
    // Left endpoints of aligned blocks stay within [0, l_k].
    let d = fixture.sequence.derivation().unwrap();
    for n in 1..=5050 {
        let k = d.block_of(n);
        let lo = fixture.sequence.cylinder(n).unwrap().interval().lo();
        assert!((0..=k as i64).contains(&lo), "n = {n}, lo = {lo}");
    }
    let constant = thm22_counterexample(&a, &[0], &[1; 20], Placement::Aligned).unwrap();
    assert!(constant.bounded_warning);
}

#[test]
fn constant_sequence_is_bounded() {
    let (a, g) = golden();
    let c = Cylinder::new(&a, 0, vec![0, 1, 0]).unwrap();
    let seq = CylinderSequence::explicit(vec![c; 256]).unwrap();
    assert_eq!(sp_verdict(&g, &seq, &default_grid(256)).unwrap().verdict, Verdict::Bounded);
}

#[test]
fn nested_random_sequences_plateau() {
    let (_, g) = golden();
    for seed in 0..4u64 {
        let mut x = SymbolicOrbit::sample(&g, 100 + seed);
        let symbols: Vec<Symbol> = (-50..=50).map(|i| x.symbol(i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // c = 20 keeps every word at most 10 symbols long.
        let seq = shrinking_target_sequence(&g, |i| symbols[(i + 50) as usize], 20.0, 400, 3, &mut rng).unwrap();
        for n in 1..=400 {
            assert!(seq.cylinder(n).unwrap().len() <= 10);
        }
        let report = sp_verdict(&g, &seq, &default_grid(400)).unwrap();
        assert_eq!(report.verdict, Verdict::Bounded, "seed {seed}");
        assert!(report.sup_growth < 0.1, "seed {seed}: {}", report.sup_growth);
    }
}

#[test]
fn summable_base_gives_unit_blocks() {
    let a = TransitionMatrix::full(2).unwrap();
    let g = MarkovGibbs::parry(&a).unwrap();
    let base = (1..=12).map(|k| Cylinder::new(&a, 0, vec![1; k]).unwrap()).collect();
    let p = prop16_sequence(&g, base).unwrap();
    for (k, (&l, &m)) in p.lengths.iter().zip(&p.base_measures).enumerate() {
        assert_eq!(l, (1u64 << (k + 1)) + 1);
        let block = l as f64 * m;
        assert!(block > 1.0 && block <= 1.5);
    }
    let constant = (0..12).map(|_| Cylinder::new(&a, 0, vec![1, 0]).unwrap()).collect();
    assert!(prop16_sequence(&g, constant).is_err());
}

#[test]
fn greedy_sums_keep_growing_between_decades() {
    let (_, g) = golden();
    let eps = 0.5;
    let t = thm23_counterexample(&g, eps, 100_000).unwrap();
    let (_, d4) = t.sums_up_to(10_000);
    let (_, d5) = t.sums_up_to(100_000);
    let floor = 0.8 * eps * ((1e5f64).ln().ln() - (1e4f64).ln().ln());
    assert!(d5 - d4 >= floor, "{} < {floor}", d5 - d4);
    assert!(t.base_sum() < 1.0 / 2f64.ln().powi(2));
}

#[test]
fn hit_statistics_are_consistent() {
    let (a, g) = golden();
    let words = enumerate_words(&a, 3).unwrap();
    let seq = CylinderSequence::explicit(
        (0..2000).map(|n| Cylinder::new(&a, (n % 7) as i64 - 3, words[n % words.len()].clone()).unwrap()).collect(),
    )
    .unwrap();
    let checkpoints = [10, 100, 500, 2000];
    let stats = hit_experiment(&g, &seq, &checkpoints, 64, 5).unwrap();
    for (j, &n) in checkpoints.iter().enumerate() {
        assert!((stats.expected[j] - expected_hits(&g, &seq, n)).abs() < 1e-10);
    }
    for h in &stats.hits {
        assert!(h.windows(2).all(|w| w[0] <= w[1]));
        assert!(h.iter().zip(&checkpoints).all(|(&s, &n)| s <= n));
    }
    // Sample mean within four standard errors of E_N.
    let last: Vec<f64> = stats.hits.iter().map(|h| h[3] as f64).collect();
    let mean = last.iter().sum::<f64>() / last.len() as f64;
    let var = last.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (last.len() - 1) as f64;
    let se = (var / last.len() as f64).sqrt();
    assert!((mean - stats.expected[3]).abs() < 4.0 * se, "{mean} vs {}", stats.expected[3]);
}
