use std::collections::BTreeMap;

use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ngram_graph::graph::{compose_permutations, invert_permutation, one_hot, validate_graph};
use ngram_graph::ingest::{featurize, read_json_graphs, to_canonical_json, Atom, Bond, FeaturizerConfig, MolRecord};
use ngram_graph::ngram::{
    embed_corpus, graph_embed, graph_embed_exact, graph_embed_with, oracle_embed_exact, oracle_embed_with,
    EmbedOptions, Normalization, OracleDirection, OracleOptions, WalkVariant,
};
use ngram_graph::predict::{fit_traced, objective_and_gradient, roc_auc, FitConfig, Penalty, Task};
use ngram_graph::synth::{random_distinct_graph, random_graph};
use ngram_graph::theory::{build_sensing, count_statistics, verify_identity, Allocation};
use ngram_graph::vertex::{random_embedding, random_embedding_scaled, EntryDistribution};
use ngram_graph::{AttributeSchema, MolecularGraph};

fn schema() -> AttributeSchema {
    AttributeSchema::uniform("prop", &[4, 3, 5]).unwrap()
}

prop_compose! {
    fn graph_with(max_m: usize)(m in 1..=max_m, seed in any::<u64>(), density in 0.0..0.8f64) -> MolecularGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_graph(&schema(), m, density, &mut rng)
    }
}

fn perm(m: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..m).collect::<Vec<usize>>()).prop_shuffle()
}

fn graph_and_perm(max_m: usize) -> impl Strategy<Value = (MolecularGraph, Vec<usize>)> {
    graph_with(max_m).prop_flat_map(|g| {
        let m = g.num_vertices();
        (Just(g), perm(m))
    })
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn permutation_is_a_group_action((g, pi) in graph_and_perm(10), seed in any::<u64>()) {
        let m = g.num_vertices();
        let id: Vec<usize> = (0..m).collect();
        prop_assert_eq!(g.permute(&id).unwrap(), g.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rho = id.clone();
        rand::seq::SliceRandom::shuffle(rho.as_mut_slice(), &mut rng);
        let two_step = g.permute(&rho).unwrap().permute(&pi).unwrap();
        prop_assert_eq!(two_step, g.permute(&compose_permutations(&pi, &rho)).unwrap());
        prop_assert_eq!(g.permute(&pi).unwrap().permute(&invert_permutation(&pi)).unwrap(), g.clone());
        prop_assert!(validate_graph(&g.permute(&pi).unwrap().to_raw(), &schema()).is_ok());
    }

    #[test]
    fn recurrence_matches_oracle_exactly(g in graph_with(8), t in 1usize..=4, seed in any::<u64>()) {
        let w = random_embedding_scaled(&schema(), 6, EntryDistribution::Rademacher, seed, 1.0).unwrap();
        let fast = graph_embed_exact(&g, &w, t, WalkVariant::Walk).unwrap();
        let slow = oracle_embed_exact(&g, &w, t, WalkVariant::Walk, &OracleOptions::default()).unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn filtered_variants_match_oracle(g in graph_with(7), t in 1usize..=4, seed in any::<u64>()) {
        let w = random_embedding_scaled(&schema(), 4, EntryDistribution::Rademacher, seed, 1.0).unwrap();
        for variant in [WalkVariant::Path, WalkVariant::SimplePath] {
            let fast = graph_embed_exact(&g, &w, t, variant).unwrap();
            let slow = oracle_embed_exact(&g, &w, t, variant, &OracleOptions::default()).unwrap();
            prop_assert_eq!(fast, slow);
        }
    }

    #[test]
    fn oracle_direction_modes_agree(g in graph_with(7), seed in any::<u64>()) {
        let w = random_embedding(&schema(), 5, EntryDistribution::Gaussian, seed).unwrap();
        for variant in [WalkVariant::Walk, WalkVariant::Path] {
            let both = oracle_embed_with(&g, &w, 4, variant, &OracleOptions::default()).unwrap().concatenated();
            let canon = oracle_embed_with(&g, &w, 4, variant, &OracleOptions { direction: OracleDirection::CanonicalDoubled, ..Default::default() })
                .unwrap()
                .concatenated();
            prop_assert!(max_rel(&canon, &both) <= 1e-12);
        }
    }

    #[test]
    fn embedding_is_permutation_invariant((g, pi) in graph_and_perm(16), seed in any::<u64>()) {
        let w = random_embedding(&schema(), 12, EntryDistribution::Gaussian, seed).unwrap();
        let a = graph_embed(&g, &w, 5).unwrap().concatenated();
        let b = graph_embed(&g.permute(&pi).unwrap(), &w, 5).unwrap().concatenated();
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let dev = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() / norm;
        prop_assert!(dev <= 1e-9);
    }

    #[test]
    fn levels_scale_as_powers(g in graph_with(10), alpha in -3.0..3.0f64, seed in any::<u64>()) {
        let w = random_embedding(&schema(), 6, EntryDistribution::Gaussian, seed).unwrap();
        let base = graph_embed(&g, &w, 4).unwrap();
        let scaled = graph_embed(&g, &w.scaled(alpha), 4).unwrap();
        for n in 1..=4 {
            let expect: Vec<f64> = base.level(n).iter().map(|x| x * alpha.powi(n as i32)).collect();
            prop_assert!(max_rel(scaled.level(n), &expect) <= 1e-10);
        }
    }

    #[test]
    fn identity_holds_on_distinct_graphs(m in 1usize..=3, density in 0.0..1.0f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_distinct_graph(&schema(), m, density, &mut rng).unwrap();
        let b = build_sensing(&schema(), 9, seed, Allocation::Equal, 1.0).unwrap();
        let rep = verify_identity(&g, &schema(), &b, 3).unwrap();
        prop_assert!(rep.exact && rep.max_abs_residual.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn count_statistics_invariants((g, pi) in graph_and_perm(9)) {
        let a = count_statistics(&g, &schema(), 3).unwrap();
        let b = count_statistics(&g.permute(&pi).unwrap(), &schema(), 3).unwrap();
        prop_assert_eq!(&a, &b);
        for n in 1..=3 {
            for j in 0..3 {
                prop_assert_eq!(a.block(n, j).iter().sum::<u64>(), a.walks[n - 1]);
            }
            prop_assert!(a.sparsity(n) as u64 <= 3 * a.walks[n - 1]);
        }
    }

    #[test]
    fn one_hot_sum_is_first_level(g in graph_with(12)) {
        let s = schema();
        let mut sum = vec![0u64; s.width()];
        for i in 0..g.num_vertices() {
            for &idx in one_hot(&g, &s, i).unwrap().indices() {
                sum[idx] += 1;
            }
        }
        prop_assert_eq!(count_statistics(&g, &s, 1).unwrap().level(1), sum);
    }

    #[test]
    fn auc_invariant_to_monotone_maps(scores in prop::collection::vec(-5.0..5.0f64, 2..60), bits in prop::collection::vec(any::<bool>(), 60)) {
        let labels: Vec<f64> = scores.iter().zip(&bits).map(|(_, &b)| f64::from(u8::from(b))).collect();
        let mapped: Vec<f64> = scores.iter().map(|s| (s * 0.7).exp() + 3.0).collect();
        prop_assert_eq!(roc_auc(&scores, &labels), roc_auc(&mapped, &labels));
        if let Some(a) = roc_auc(&scores, &labels) {
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn normalized_rows_have_unit_norm(gs in prop::collection::vec(graph_with(8), 0..12), seed in any::<u64>()) {
        let w = random_embedding(&schema(), 5, EntryDistribution::Gaussian, seed).unwrap();
        let fm = embed_corpus(&gs, &w, &EmbedOptions { t: 3, normalization: Normalization::UnitL2, ..Default::default() }, seed).unwrap();
        for row in fm.data.rows() {
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(n == 0.0 || (n - 1.0).abs() <= 1e-12);
        }
        for (g, row) in gs.iter().zip(fm.data.rows()) {
            let direct = graph_embed_with(g, &w, &EmbedOptions { t: 3, normalization: Normalization::UnitL2, ..Default::default() }).unwrap();
            prop_assert_eq!(row.to_vec(), direct.concatenated());
        }
    }

    #[test]
    fn fit_objective_never_increases(seed in any::<u64>(), unsquared in any::<bool>(), logistic in any::<bool>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((30, 4), |_| rng.random_range(-2.0..2.0));
        let mut y: Vec<f64> = (0..30).map(|i| f64::from(u8::from(x[[i, 0]] + 0.3 * x[[i, 1]] > 0.0))).collect();
        y[0] = 0.0;
        y[1] = 1.0;
        let cfg = FitConfig {
            task: if logistic { Task::BinaryLogistic } else { Task::LeastSquares },
            penalty: if unsquared { Penalty::UnsquaredL2 } else { Penalty::SquaredL2 },
            lambda: 0.01,
            ..Default::default()
        };
        let (_, trace) = fit_traced(x.view(), &y, &cfg).unwrap();
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn logistic_gradient_matches_differences(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((20, 3), |_| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..20).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
        let theta: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let cfg = FitConfig { lambda: 0.05, ..Default::default() };
        let (_, g, gb) = objective_and_gradient(&x, &y, &cfg, &theta, b);
        let h = 1e-6;
        let mut diff = 0.0;
        let mut scale = 0.0;
        for i in 0..=3 {
            let bump = |d: f64| {
                let mut t = theta.clone();
                let mut bb = b;
                if i < 3 { t[i] += d } else { bb += d }
                objective_and_gradient(&x, &y, &cfg, &t, bb).0
            };
            let num = (bump(h) - bump(-h)) / (2.0 * h);
            let ana = if i < 3 { g[i] } else { gb };
            diff += (num - ana).powi(2);
            scale += ana * ana;
        }
        prop_assert!(diff.sqrt() <= 1e-5 * scale.sqrt().max(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn json_round_trip(g in graph_with(15), label in prop::option::of(-1e6..1e6f64)) {
        let g = g.with_id("rt").with_label(label);
        let text = to_canonical_json(&g, &schema());
        let back = read_json_graphs(text.as_bytes(), &schema()).unwrap();
        prop_assert_eq!(back.len(), 1);
        let h = back.into_iter().next().unwrap().unwrap();
        prop_assert_eq!(&h, &g);
        prop_assert_eq!(to_canonical_json(&h, &schema()), text);
    }
}

const ELEMENTS: [&str; 7] = ["C", "N", "O", "S", "Cl", "H", "P"];

prop_compose! {
    fn molecule()(n in 1usize..10, seed in any::<u64>()) -> MolRecord {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let atoms: Vec<Atom> = (0..n)
            .map(|_| Atom {
                symbol: ELEMENTS[rng.random_range(0..ELEMENTS.len())].to_string(),
                charge: rng.random_range(-1..=1),
                hydrogen_query: 0,
            })
            .collect();
        let mut bonds = Vec::new();
        for v in 1..n {
            bonds.push(Bond { u: rng.random_range(1..=v), v: v + 1, order: rng.random_range(1..=2) });
        }
        MolRecord { name: "mol".into(), atoms, bonds, data: BTreeMap::new(), warnings: Vec::new() }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn featurization_is_equivariant(rec in molecule(), seed in any::<u64>()) {
        let n = rec.atoms.len();
        let mut pi: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(pi.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        // atom i moves to position pi[i]
        let mut atoms = rec.atoms.clone();
        for (i, &p) in pi.iter().enumerate() {
            atoms[p] = rec.atoms[i].clone();
        }
        let bonds = rec.bonds.iter().map(|b| Bond { u: pi[b.u - 1] + 1, v: pi[b.v - 1] + 1, order: b.order }).collect();
        let shuffled = MolRecord { atoms, bonds, ..rec.clone() };

        let cfg = FeaturizerConfig::default();
        let a = featurize(&rec, &cfg).unwrap().graph;
        let b = featurize(&shuffled, &cfg).unwrap().graph;
        // hydrogens are not vertices; map heavy-atom ranks through pi
        let heavy = |atoms: &[Atom]| -> Vec<Option<usize>> {
            let mut k = 0;
            atoms.iter().map(|a| (a.symbol != "H").then(|| { k += 1; k - 1 })).collect()
        };
        let ha = heavy(&rec.atoms);
        let hb = heavy(&shuffled.atoms);
        let rho: Vec<usize> = (0..n).filter_map(|i| ha[i].map(|_| hb[pi[i]].unwrap())).collect();
        prop_assert_eq!(a.permute(&rho).unwrap().with_id("mol"), b.clone());
        let s = cfg.schema.schema();
        let w = random_embedding(&s, 8, EntryDistribution::Gaussian, seed).unwrap();
        let fa = graph_embed(&a, &w, 4).unwrap().concatenated();
        let fb = graph_embed(&b, &w, 4).unwrap().concatenated();
        prop_assert!(max_rel(&fa, &fb) <= 1e-9);
    }
}
