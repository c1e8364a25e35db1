use std::collections::{HashMap, HashSet};

use itertools::Itertools;
use proptest::prelude::*;

use eeorder::classifiers::{train_linear_svm, train_rbf_svm, train_tree, DecisionTree, RbfParams, Split, TreeNode, TreeParams};
use eeorder::datasets::{augment_with_swaps, split_corpus_by_ee, split_then_augment, CCRecord, Label, OrderedPairExample, SplitSpec, Tag, TaggedCorpus, TaggedSentence};
use eeorder::embeddings::EmbeddingTable;
use eeorder::features::{chi2_scores, encode, select_top_k, FeatureId, FeatureMask, FeatureSet, FeatureSpace, Position, SparseVec};
use eeorder::fixtures::{planted_tagging_corpus, PlantedCorpusSpec};
use eeorder::phonology::{focal_phoneme, parse_syllable, render_syllable, LanguageProfile, PhonemeClass, Syllable, BUILTIN_LANGUAGES};
use eeorder::scales::{induce_scale_from_tree, rule_accuracy, rule_predict, search_best_scale, Scale, TiePolicy};
use eeorder::tagging::{baseline_tag, evaluate_tags, repair, BaselineConfig, Stages};

fn hmong() -> LanguageProfile {
    LanguageProfile::builtin("hmong").unwrap()
}

fn syllable_at(p: &LanguageProfile, (o, r, t): (usize, usize, usize)) -> Syllable {
    let inv = &p.inventory;
    Syllable::new(&inv.onsets[o % inv.onsets.len()].symbol, &inv.rhymes[r % inv.rhymes.len()].symbol, &inv.tones[t % inv.tones.len()].symbol)
}

fn toned(b1: &str, b2: &str, label: Label, id: usize) -> OrderedPairExample {
    OrderedPairExample {
        id,
        b1: format!("w{b1}"),
        b2: format!("w{b2}"),
        b1_syll: Syllable::new("p", "a", b1),
        b2_syll: Syllable::new("p", "a", b2),
        label,
        source_id: id,
    }
}

proptest! {
    #[test]
    fn parse_is_deterministic(token in "[a-z]{1,6}") {
        let p = hmong();
        let a = parse_syllable(&p.inventory, &token).ok();
        let b = parse_syllable(&p.inventory, &token).ok();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn render_then_parse_round_trips(lang in 0usize..3, idx in (0usize..100, 0usize..100, 0usize..100)) {
        let p = LanguageProfile::builtin(BUILTIN_LANGUAGES[lang]).unwrap();
        let s = syllable_at(&p, idx);
        let text = render_syllable(&p.inventory, &s).unwrap();
        prop_assert_eq!(parse_syllable(&p.inventory, &text).unwrap(), s);
    }

    #[test]
    fn focal_is_never_an_onset(lang in 0usize..3, idx in (0usize..100, 0usize..100, 0usize..100)) {
        let p = LanguageProfile::builtin(BUILTIN_LANGUAGES[lang]).unwrap();
        let s = syllable_at(&p, idx);
        prop_assert_ne!(focal_phoneme(&p, &s).class, PhonemeClass::Onset);
    }

    #[test]
    fn augmentation_balance_and_mirror(pairs in prop::collection::hash_set((0u8..8, 0u8..8), 1..30), seed in any::<u64>()) {
        let p = hmong();
        let records: Vec<CCRecord> = pairs
            .iter()
            .filter(|(a, b)| a != b)
            .enumerate()
            .map(|(id, (a, b))| CCRecord {
                id,
                language: "hmong".into(),
                b1: format!("w{a}"),
                b2: format!("w{b}"),
                b1_syll: syllable_at(&p, (*a as usize, 0, 0)),
                b2_syll: syllable_at(&p, (*b as usize, 0, 0)),
            })
            .collect();
        let ordered: HashSet<(&str, &str)> = records.iter().map(|r| (r.b1.as_str(), r.b2.as_str())).collect();
        let both = ordered.iter().filter(|(a, b)| a < b && ordered.contains(&(*b, *a))).count();
        let aug = augment_with_swaps(&records, seed);
        let att = aug.iter().filter(|e| e.label == Label::Attested).count();
        let un = aug.len() - att;
        prop_assert_eq!(un, att - 2 * both);

        let key = |e: &OrderedPairExample| (e.b1.clone(), e.b2.clone(), e.label);
        let set: HashSet<_> = aug.iter().map(key).collect();
        for e in aug.iter().filter(|e| !(ordered.contains(&(e.b1.as_str(), e.b2.as_str())) && ordered.contains(&(e.b2.as_str(), e.b1.as_str())))) {
            prop_assert!(set.contains(&key(&e.mirrored())));
        }
    }

    #[test]
    fn splits_are_deterministic(n in 10usize..60, seed in any::<u64>()) {
        let p = hmong();
        let records: Vec<CCRecord> = (0..n)
            .map(|i| CCRecord {
                id: i,
                language: "hmong".into(),
                b1: format!("x{i}"),
                b2: format!("y{i}"),
                b1_syll: syllable_at(&p, (i, 1, 2)),
                b2_syll: syllable_at(&p, (i, 3, 4)),
            })
            .collect();
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let a = split_then_augment(&records, &spec).unwrap();
        let b = split_then_augment(&records, &spec).unwrap();
        prop_assert_eq!(a.train, b.train);
        prop_assert_eq!(a.test, b.test);
        prop_assert_eq!(a.dev, b.dev);
    }

    #[test]
    fn chi2_nonnegative_and_equivariant(rows in prop::collection::vec((prop::collection::vec(any::<bool>(), 4), any::<bool>()), 2..40), perm_seed in any::<u64>()) {
        let xs: Vec<SparseVec> = rows.iter().map(|(r, _)| SparseVec::from_dense(&r.iter().map(|b| *b as u8 as f64).collect::<Vec<_>>())).collect();
        let ys: Vec<Label> = rows.iter().map(|(_, y)| if *y { Label::Attested } else { Label::Unattested }).collect();
        let s = chi2_scores(&xs, &ys).unwrap();
        prop_assert!(s.iter().all(|v| *v >= 0.0));
        let mut perm: Vec<usize> = (0..4).collect();
        perm.rotate_left((perm_seed % 4) as usize);
        let permuted: Vec<SparseVec> = xs.iter().map(|x| SparseVec::from_dense(&perm.iter().map(|&j| x.get(j)).collect::<Vec<_>>())).collect();
        let ps = chi2_scores(&permuted, &ys).unwrap();
        for (k, &j) in perm.iter().enumerate() {
            prop_assert!((ps[k] - s[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn chi2_zero_when_table_factorizes(k in 1usize..6, m in 1usize..6) {
        // feature present in the same share of both classes
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (label, reps) in [(Label::Attested, 1), (Label::Unattested, 3)] {
            for _ in 0..reps {
                xs.extend((0..k).map(|_| SparseVec::from_dense(&[1.0])));
                xs.extend((0..m).map(|_| SparseVec::from_dense(&[0.0])));
                ys.extend(std::iter::repeat_n(label, k + m));
            }
        }
        prop_assert!(chi2_scores(&xs, &ys).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn encoding_is_injective(a in (0usize..60, 0usize..20, 0usize..10), b in (0usize..60, 0usize..20, 0usize..10)) {
        let p = hmong();
        let space = FeatureSpace::for_set(&p, FeatureSet::All, None);
        let pair = |s1: Syllable| OrderedPairExample { id: 0, b1: String::new(), b2: String::new(), b1_syll: s1.clone(), b2_syll: s1, label: Label::Attested, source_id: 0 };
        let (s, t) = (syllable_at(&p, a), syllable_at(&p, b));
        let (x, y) = (encode(&pair(s.clone()), &space, None).unwrap(), encode(&pair(t.clone()), &space, None).unwrap());
        prop_assert_eq!(s == t, x == y);
    }

    #[test]
    fn top_k_is_idempotent(scores in prop::collection::vec(0.0f64..10.0, 1..30), k in 0usize..30) {
        let k = k.min(scores.len());
        let mask = select_top_k(&scores, k).unwrap();
        let kept: Vec<f64> = mask.selected.iter().map(|&i| scores[i]).collect();
        prop_assert_eq!(select_top_k(&kept, k).unwrap(), FeatureMask::identity(k));
    }

    #[test]
    fn rules_antisymmetric_and_reversal_dual(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..40)) {
        let symbols = ["a", "b", "c", "d", "e"];
        let scale = Scale::total(&symbols, PhonemeClass::Tone).unwrap();
        let data: Vec<OrderedPairExample> = pairs
            .iter()
            .filter(|(x, y)| x != y)
            .enumerate()
            .map(|(i, (x, y))| toned(symbols[*x], symbols[*y], if i % 3 == 0 { Label::Unattested } else { Label::Attested }, i))
            .collect();
        prop_assume!(!data.is_empty());
        for e in &data {
            let fwd = rule_predict(&scale, e, TiePolicy::ExpectedHalf).unwrap();
            let back = rule_predict(&scale, &e.mirrored(), TiePolicy::ExpectedHalf).unwrap();
            prop_assert_eq!(fwd == Some(Label::Attested), back == Some(Label::Unattested));
        }
        let a = rule_accuracy(&scale, &data, TiePolicy::ExpectedHalf).unwrap();
        let r = rule_accuracy(&scale.reversed(), &data, TiePolicy::ExpectedHalf).unwrap();
        prop_assert!((a + r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn search_matches_brute_force(pairs in prop::collection::vec((0usize..4, 0usize..4, any::<bool>()), 1..40)) {
        let symbols = ["a", "b", "c", "d"];
        let data: Vec<OrderedPairExample> = pairs
            .iter()
            .enumerate()
            .map(|(i, (x, y, att))| toned(symbols[*x], symbols[*y], if *att { Label::Attested } else { Label::Unattested }, i))
            .collect();
        let (found, acc) = search_best_scale(&data, &symbols, PhonemeClass::Tone).unwrap();
        // oracle: score every permutation directly, first maximum wins
        let mut best: Option<(Vec<&str>, f64)> = None;
        for perm in symbols.iter().copied().permutations(4) {
            let rank: HashMap<&str, usize> = perm.iter().enumerate().map(|(i, s)| (*s, i)).collect();
            let credit: f64 = data
                .iter()
                .map(|e| {
                    let (x, y) = (rank[e.b1_syll.tone.symbol.as_str()], rank[e.b2_syll.tone.symbol.as_str()]);
                    if x == y { 0.5 } else if (x < y) == (e.label == Label::Attested) { 1.0 } else { 0.0 }
                })
                .sum();
            let a = credit / data.len() as f64;
            if best.as_ref().is_none_or(|(_, b)| a > *b) {
                best = Some((perm, a));
            }
        }
        let (order, oracle_acc) = best.unwrap();
        prop_assert!((acc - oracle_acc).abs() < 1e-12);
        prop_assert_eq!(found.ranked_symbols(), order);
    }

    #[test]
    fn induction_respects_encounter_order(chain in prop::collection::vec((0usize..7, any::<bool>(), any::<bool>()), 1..12)) {
        let p = hmong();
        let space = FeatureSpace::for_set(&p, FeatureSet::Focal, None);
        let tones: Vec<String> = p.inventory.tones.iter().map(|t| t.symbol.clone()).collect();
        let mut nodes = Vec::new();
        let mut front = Vec::new();
        let mut back = Vec::new();
        for (depth, (t, b1, attested)) in chain.iter().enumerate() {
            let symbol = tones[*t].clone();
            let position = if *b1 { Position::B1 } else { Position::B2 };
            let feature = space.index_of(&FeatureId::OneHot { position, class: PhonemeClass::Tone, symbol: symbol.clone() }).unwrap();
            let yes = if *attested { (10, 2) } else { (2, 10) };
            let here = nodes.len();
            nodes.push(TreeNode { split: Some(Split { feature, threshold: 0.5, no: here + 2, yes: here + 1 }), counts: (100, 100), depth });
            nodes.push(TreeNode { split: None, counts: yes, depth: depth + 1 });
            if !front.contains(&symbol) && !back.contains(&symbol) {
                if *b1 == *attested { front.push(symbol) } else { back.push(symbol) }
            }
        }
        nodes.push(TreeNode { split: None, counts: (1, 1), depth: chain.len() });
        let tree = DecisionTree { nodes, n_features: space.len(), params: TreeParams::default() };
        let scale = induce_scale_from_tree(&tree, &space, PhonemeClass::Tone).unwrap();
        let ranked = scale.ranked_symbols();
        let len = ranked.len();
        for (i, s) in front.iter().enumerate() {
            prop_assert_eq!(ranked[i], s.as_str());
        }
        for (j, s) in back.iter().enumerate() {
            prop_assert_eq!(ranked[len - 1 - j], s.as_str());
        }
    }

    #[test]
    fn cosine_symmetric_and_bounded(a in prop::collection::vec(-5.0f32..5.0, 4), b in prop::collection::vec(-5.0f32..5.0, 4)) {
        let t = EmbeddingTable::from_rows(vec![("a".into(), a), ("b".into(), b)]).unwrap();
        let (x, y) = (t.cosine("a", "b").unwrap(), t.cosine("b", "a").unwrap());
        prop_assert_eq!(x, y);
        prop_assert!(x.abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn repair_always_well_formed(raw in prop::collection::vec(0usize..5, 0..30), scores in prop::collection::vec(-5.0f64..0.0, 150)) {
        let tags: Vec<Tag> = raw.iter().map(|&i| Tag::ALL[i]).collect();
        let lp: Vec<Vec<f64>> = (0..tags.len()).map(|i| scores[i * 5..i * 5 + 5].to_vec()).collect();
        let tokens: Vec<String> = (0..tags.len()).map(|i| format!("t{i}")).collect();
        let (s, _) = repair(tokens, &tags, &lp, &Tag::ALL);
        let corpus = TaggedCorpus { sentences: vec![s] };
        prop_assert!(corpus.validate().is_ok());
    }

    #[test]
    fn self_evaluation_is_perfect(spans in prop::collection::vec((0usize..3, any::<bool>()), 0..6)) {
        let mut sentences = Vec::new();
        for (gap, fake) in spans {
            let mut tokens: Vec<String> = (0..gap).map(|i| format!("f{i}")).collect();
            tokens.extend(["a", "b", "a", "c"].map(String::from));
            let mut s = TaggedSentence::untagged(tokens);
            s.set_span(gap, fake);
            sentences.push(s);
        }
        sentences.push(TaggedSentence::untagged(vec!["z".into()]));
        let c = TaggedCorpus { sentences };
        let m = evaluate_tags(&c, &c).unwrap();
        prop_assert_eq!((m.token.precision, m.token.recall, m.token.f1), (1.0, 1.0, 1.0));
        prop_assert_eq!((m.span.precision, m.span.recall, m.span.f1), (1.0, 1.0, 1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tree_invariants(rows in prop::collection::vec((prop::collection::vec(0u8..3, 5), any::<bool>()), 20..120)) {
        let xs: Vec<SparseVec> = rows.iter().map(|(r, _)| SparseVec::from_dense(&r.iter().map(|v| *v as f64).collect::<Vec<_>>())).collect();
        let ys: Vec<Label> = rows.iter().map(|(_, y)| if *y { Label::Attested } else { Label::Unattested }).collect();
        let mut last_acc = 0.0;
        for depth in 0..6 {
            let params = TreeParams { max_depth: depth, min_samples_leaf: 1, ..TreeParams::default() };
            let tree = train_tree(&xs, &ys, &params).unwrap();
            prop_assert_eq!(&tree, &train_tree(&xs, &ys, &params).unwrap());
            for node in &tree.nodes {
                if let Some(s) = &node.split {
                    let (no, yes) = (&tree.nodes[s.no], &tree.nodes[s.yes]);
                    let n = |c: (usize, usize)| (c.0 + c.1) as f64;
                    let children = n(no.counts) * no.gini() + n(yes.counts) * yes.gini();
                    prop_assert!(n(node.counts) * node.gini() - children >= -1e-9);
                }
            }
            let acc = xs.iter().zip(&ys).filter(|(x, y)| tree.predict(x).unwrap() == **y).count() as f64 / xs.len() as f64;
            prop_assert!(acc >= last_acc - 1e-12);
            last_acc = acc;
        }
    }

    #[test]
    fn linear_svm_ignores_zero_feature(rows in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 3), any::<bool>()), 5..50), seed in any::<u64>()) {
        let xs: Vec<SparseVec> = rows.iter().map(|(r, _)| SparseVec::from_dense(r)).collect();
        let ys: Vec<Label> = rows.iter().map(|(_, y)| if *y { Label::Attested } else { Label::Unattested }).collect();
        let padded: Vec<SparseVec> = xs.iter().map(|x| x.padded(1)).collect();
        let a = train_linear_svm(&xs, &ys, 0.01, 5, seed).unwrap();
        let b = train_linear_svm(&padded, &ys, 0.01, 5, seed).unwrap();
        for (x, px) in xs.iter().zip(&padded) {
            prop_assert_eq!(a.predict(x).unwrap(), b.predict(px).unwrap());
        }
    }

    #[test]
    fn rbf_dual_feasible(rows in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 2), any::<bool>()), 4..60), c in 0.1f64..5.0) {
        let xs: Vec<SparseVec> = rows.iter().map(|(r, _)| SparseVec::from_dense(r)).collect();
        let ys: Vec<Label> = rows.iter().map(|(_, y)| if *y { Label::Attested } else { Label::Unattested }).collect();
        prop_assume!(ys.contains(&Label::Attested) && ys.contains(&Label::Unattested));
        let m = train_rbf_svm(&xs, &ys, &RbfParams { c, ..RbfParams::default() }).unwrap();
        prop_assert!(m.coef.iter().all(|a| a.abs() <= c + 1e-9));
        prop_assert!(m.coef.iter().sum::<f64>().abs() < 1e-6);
    }

    #[test]
    fn baseline_filters_are_monotone(seed in 0u64..1000) {
        let spec = PlantedCorpusSpec { sentences: 400, ees: 40, distractors: 120, component_pairs: 15, seed, ..PlantedCorpusSpec::default() };
        let planted = planted_tagging_corpus(&spec).unwrap();
        let corpus = planted.tagged.to_corpus();
        let mut last: Option<(usize, f64)> = None;
        for stages in Stages::cascade() {
            let cfg = BaselineConfig { stages, ..BaselineConfig::default() };
            let (pred, report) = baseline_tag(&corpus, &planted.profile, Some(&planted.embeddings), Some(&planted.scale), &cfg).unwrap();
            let recall = evaluate_tags(&pred, &planted.tagged).unwrap().span.recall;
            if let Some((n, r)) = last {
                prop_assert!(report.tagged <= n);
                prop_assert!(recall <= r);
            } else {
                prop_assert_eq!(recall, 1.0);
            }
            last = Some((report.tagged, recall));
        }
    }

    #[test]
    fn corpus_splits_are_ee_disjoint(seed in 0u64..1000) {
        let spec = PlantedCorpusSpec { sentences: 400, ees: 60, distractors: 60, component_pairs: 15, seed, ..PlantedCorpusSpec::default() };
        let planted = planted_tagging_corpus(&spec).unwrap();
        for split in split_corpus_by_ee(&planted.tagged, [0.6, 0.2, 0.2], 2, seed).unwrap() {
            let train: HashSet<_> = split.train.ee_catalog().into_iter().collect();
            let dev: HashSet<_> = split.dev.ee_catalog().into_iter().collect();
            let test: HashSet<_> = split.test.ee_catalog().into_iter().collect();
            prop_assert!(train.is_disjoint(&test));
            prop_assert!(train.is_disjoint(&dev));
            prop_assert!(dev.is_disjoint(&test));
        }
    }
}
