//! Synthetic datasets with known answers. Each generator is the oracle for
//! what a correct pipeline should recover from its output.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::classifiers::{DecisionTree, Split, TreeNode, TreeParams};
use crate::datasets::{EERecord, EeForm, EeKey, Label, OrderedPairExample, TaggedCorpus, TaggedSentence};
use crate::embeddings::EmbeddingTable;
use crate::features::{FeatureId, FeatureSet, FeatureSpace, Position, SparseVec};
use crate::phonology::{parse_syllable, LanguageProfile, PhonemeClass, Syllable, ZERO};
use crate::scales::Scale;
use crate::seeded_rng;
use crate::tagging::find_candidates;
use crate::datasets::{write_ee_list, Corpus};
use crate::Error;

/// The planted Hmong tone order; `d` stays out of it.
pub const PLANTED_TONES: [&str; 7] = ["j", "b", "m", "v", "s", "g", ZERO];

pub fn planted_scale() -> Scale {
    let mut s = Scale::total(&PLANTED_TONES, PhonemeClass::Tone).expect("distinct symbols");
    s.unranked = vec!["d".into()];
    s
}

/// Every Hmong syllable that renders and parses back to itself, shuffled,
/// bucketed by tone and handed out without repetition.
struct WordSupply {
    by_tone: BTreeMap<String, Vec<(String, Syllable)>>,
}

impl WordSupply {
    fn new(profile: &LanguageProfile, rng: &mut ChaCha8Rng) -> Self {
        let inv = &profile.inventory;
        let mut by_tone: BTreeMap<String, Vec<(String, Syllable)>> = BTreeMap::new();
        for on in &inv.onsets {
            for rh in &inv.rhymes {
                for tn in &inv.tones {
                    let s = Syllable::new(&on.symbol, &rh.symbol, &tn.symbol);
                    let word = s.to_string();
                    if parse_syllable(inv, &word).ok().as_ref() == Some(&s) {
                        by_tone.entry(tn.symbol.clone()).or_default().push((word, s));
                    }
                }
            }
        }
        for words in by_tone.values_mut() {
            words.shuffle(rng);
        }
        WordSupply { by_tone }
    }

    fn with_tone(&mut self, tone: &str) -> (String, Syllable) {
        self.by_tone.get_mut(tone).and_then(Vec::pop).unwrap_or_else(|| panic!("word supply exhausted for tone {tone}"))
    }

    fn any(&mut self, rng: &mut ChaCha8Rng) -> (String, Syllable) {
        let tones: Vec<String> = self.by_tone.iter().filter(|(_, v)| !v.is_empty()).map(|(k, _)| k.clone()).collect();
        let tone = tones.choose(rng).expect("word supply exhausted").clone();
        self.with_tone(&tone)
    }
}

fn random_syllable(profile: &LanguageProfile, tone: &str, rng: &mut ChaCha8Rng) -> (String, Syllable) {
    let inv = &profile.inventory;
    loop {
        let on = &inv.onsets[rng.gen_range(0..inv.onsets.len())].symbol;
        let rh = &inv.rhymes[rng.gen_range(0..inv.rhymes.len())].symbol;
        let s = Syllable::new(on, rh, tone);
        let word = s.to_string();
        if parse_syllable(inv, &word).ok().as_ref() == Some(&s) {
            return (word, s);
        }
    }
}

fn distinct_ranked_pair<'a>(symbols: &[&'a str], rng: &mut ChaCha8Rng) -> (&'a str, &'a str) {
    let i = rng.gen_range(0..symbols.len());
    let mut j = rng.gen_range(0..symbols.len() - 1);
    if j >= i {
        j += 1;
    }
    (symbols[i], symbols[j])
}

/// `n` Hmong word pairs whose tones are a uniformly drawn ordered pair of
/// distinct ranked symbols. The label is attested iff B1's tone precedes
/// B2's on `scale`, then flipped with probability `noise`.
pub fn planted_scale_pairs(profile: &LanguageProfile, scale: &Scale, n: usize, noise: f64, seed: u64) -> Vec<OrderedPairExample> {
    let mut rng = seeded_rng(seed, 0xF1);
    let symbols = scale.ranked_symbols();
    (0..n)
        .map(|id| {
            let (t1, t2) = distinct_ranked_pair(&symbols, &mut rng);
            let (b1, b1_syll) = random_syllable(profile, t1, &mut rng);
            let (b2, b2_syll) = random_syllable(profile, t2, &mut rng);
            let clean = if scale.rank(t1) < scale.rank(t2) { Label::Attested } else { Label::Unattested };
            let label = if rng.gen_bool(noise) { clean.flip() } else { clean };
            OrderedPairExample { id, b1, b2, b1_syll, b2_syll, label, source_id: id }
        })
        .collect()
}

/// `n` AB1AB2 records whose B1 tone precedes B2's on `scale`.
pub fn planted_ee_records(profile: &LanguageProfile, scale: &Scale, n: usize, seed: u64) -> Vec<EERecord> {
    let mut rng = seeded_rng(seed, 0xF2);
    let symbols = scale.ranked_symbols();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (x, y) = distinct_ranked_pair(&symbols, &mut rng);
        let (t1, t2) = if scale.rank(x) < scale.rank(y) { (x, y) } else { (y, x) };
        let (b1, b1_syll) = random_syllable(profile, t1, &mut rng);
        let (b2, b2_syll) = random_syllable(profile, t2, &mut rng);
        let tone = profile.inventory.tones[rng.gen_range(0..profile.inventory.tones.len())].symbol.clone();
        let (a, a_syll) = random_syllable(profile, &tone, &mut rng);
        // unordered B pairs must be unique or augmentation would drop mirrors
        let key = if b1 < b2 { (b1.clone(), b2.clone()) } else { (b2.clone(), b1.clone()) };
        if !seen.insert(key) || a == b1 || a == b2 {
            continue;
        }
        out.push(EERecord {
            id: out.len(),
            language: profile.language.clone(),
            form: EeForm::AB1AB2,
            a,
            b1,
            b2,
            a_syll,
            b1_syll,
            b2_syll,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpusSpec {
    pub sentences: usize,
    pub ees: usize,
    pub distractors: usize,
    /// Distinct (B1, B2) word pairs shared among the EEs.
    pub component_pairs: usize,
    /// Share of EEs using their component pair in reversed order.
    pub reversed_share: f64,
    /// Share of component pairs whose words get unrelated vectors.
    pub dissimilar_share: f64,
    pub emb_dim: usize,
    pub seed: u64,
}

impl Default for PlantedCorpusSpec {
    fn default() -> Self {
        PlantedCorpusSpec {
            sentences: 10_000,
            ees: 500,
            distractors: 2_000,
            component_pairs: 100,
            reversed_share: 0.1,
            dissimilar_share: 0.1,
            emb_dim: 32,
            seed: 0,
        }
    }
}

/// Distractor 4-grams A X A Y by the first baseline filter they fail.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DistractorCounts {
    pub unparsable: usize,
    pub dissimilar: usize,
    pub reversed: usize,
    pub passing: usize,
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub tagged: TaggedCorpus,
    pub embeddings: EmbeddingTable,
    pub scale: Scale,
    pub profile: LanguageProfile,
    pub ees: Vec<EeKey>,
    pub distractors: DistractorCounts,
}

fn random_vec(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

fn near(base: &[f32], rng: &mut ChaCha8Rng) -> Vec<f32> {
    base.iter().map(|b| b + 0.3 * rng.gen_range(-1.0f32..1.0)).collect()
}

/// A Hmong corpus with gold EE spans and distractors of every kind.
///
/// EEs are A B1 A B2 over a small set of component pairs (each reused by
/// several EEs with different A, mostly in scale order). Distractors are
/// A X A Y 4-grams tagged O, in four kinds: with a numeral token, with
/// unrelated X/Y vectors, with X after Y on the scale, and ones that pass
/// every filter. Filler words never form candidates, so the gold spans are
/// exactly the EE occurrences.
pub fn planted_tagging_corpus(spec: &PlantedCorpusSpec) -> Result<PlantedCorpus, Error> {
    let profile = LanguageProfile::builtin("hmong")?;
    let scale = planted_scale();
    let symbols = scale.ranked_symbols();
    let mut rng = seeded_rng(spec.seed, 0xF3);
    let mut supply = WordSupply::new(&profile, &mut rng);
    let mut vectors: BTreeMap<String, Vec<f32>> = BTreeMap::new();
    let dim = spec.emb_dim;

    let mut ordered_pair = |similar: bool, in_order: bool, supply: &mut WordSupply, rng: &mut ChaCha8Rng| {
        let (x, y) = distinct_ranked_pair(&symbols, rng);
        let forward = scale.rank(x) < scale.rank(y);
        let (t1, t2) = if forward == in_order { (x, y) } else { (y, x) };
        let (b1, _) = supply.with_tone(t1);
        let (b2, _) = supply.with_tone(t2);
        let base = random_vec(dim, rng);
        if similar {
            vectors.insert(b1.clone(), near(&base, rng));
            vectors.insert(b2.clone(), near(&base, rng));
        } else {
            vectors.insert(b1.clone(), base);
            vectors.insert(b2.clone(), random_vec(dim, rng));
        }
        (b1, b2)
    };

    let n_dissimilar = (spec.component_pairs as f64 * spec.dissimilar_share).round() as usize;
    let components: Vec<(String, String)> = (0..spec.component_pairs)
        .map(|i| ordered_pair(i >= n_dissimilar, true, &mut supply, &mut rng))
        .collect();
    let pool = spec.component_pairs;
    let d_dissimilar: Vec<(String, String)> = (0..pool).map(|_| ordered_pair(false, true, &mut supply, &mut rng)).collect();
    let d_reversed: Vec<(String, String)> = (0..pool).map(|_| ordered_pair(true, false, &mut supply, &mut rng)).collect();
    let d_passing: Vec<(String, String)> = (0..pool).map(|_| ordered_pair(true, true, &mut supply, &mut rng)).collect();

    let a_pool: Vec<String> = (0..150).map(|_| supply.any(&mut rng).0).collect();
    let numerals: Vec<String> = (0..50).map(|k| format!("{}", 1900 + k)).collect();
    let fillers: Vec<String> = (0..1500).map(|_| supply.any(&mut rng).0).collect();
    for w in a_pool.iter().chain(&numerals).chain(&fillers) {
        let v = random_vec(dim, &mut rng);
        vectors.insert(w.clone(), v);
    }

    // EEs: component pair k % pairs, distinct A per pair, some reversed
    let mut ees: Vec<EeKey> = Vec::with_capacity(spec.ees);
    let mut used: HashSet<EeKey> = HashSet::new();
    for k in 0..spec.ees {
        let (b1, b2) = &components[k % components.len()];
        loop {
            let a = a_pool.choose(&mut rng).expect("A pool").clone();
            let key = if rng.gen_bool(spec.reversed_share) {
                [a.clone(), b2.clone(), a, b1.clone()]
            } else {
                [a.clone(), b1.clone(), a, b2.clone()]
            };
            let unordered = [key[0].clone(), key[3].clone(), key[0].clone(), key[1].clone()];
            if !used.contains(&unordered) && used.insert(key.clone()) {
                ees.push(key);
                break;
            }
        }
    }

    let mut grams: Vec<([String; 4], bool)> = Vec::new();
    for key in &ees {
        for _ in 0..rng.gen_range(1..=3) {
            grams.push((key.clone(), true));
        }
    }
    let mut counts = DistractorCounts::default();
    for k in 0..spec.distractors {
        let a = a_pool.choose(&mut rng).expect("A pool").clone();
        let (x, y) = match k % 20 {
            0..=4 => {
                counts.unparsable += 1;
                let (x, _) = d_passing.choose(&mut rng).expect("pool").clone();
                (x, numerals.choose(&mut rng).expect("numerals").clone())
            }
            5..=11 => {
                counts.dissimilar += 1;
                d_dissimilar.choose(&mut rng).expect("pool").clone()
            }
            12..=15 => {
                counts.reversed += 1;
                d_reversed.choose(&mut rng).expect("pool").clone()
            }
            _ => {
                counts.passing += 1;
                d_passing.choose(&mut rng).expect("pool").clone()
            }
        };
        grams.push(([a.clone(), x, a, y], false));
    }
    if grams.len() > spec.sentences {
        return Err(Error::Fixture(format!("{} planted 4-grams do not fit in {} sentences", grams.len(), spec.sentences)));
    }
    grams.extend((grams.len()..spec.sentences).map(|_| (std::array::from_fn(|_| String::new()), false)));
    grams.shuffle(&mut rng);

    let mut sentences = Vec::with_capacity(spec.sentences);
    for (gram, is_ee) in grams {
        let filler_only = gram[0].is_empty();
        let len = rng.gen_range(6..=14);
        loop {
            let mut tokens: Vec<String> = (0..len).map(|_| fillers.choose(&mut rng).expect("fillers").clone()).collect();
            let start = if filler_only {
                None
            } else {
                let s = rng.gen_range(0..=len - 4);
                tokens.splice(s..s + 4, gram.iter().cloned());
                Some(s)
            };
            let found = find_candidates(&tokens);
            if found != start.into_iter().collect::<Vec<_>>() {
                continue;
            }
            let mut sentence = TaggedSentence::untagged(tokens);
            if let (Some(s), true) = (start, is_ee) {
                sentence.set_span(s, false);
            }
            sentences.push(sentence);
            break;
        }
    }
    let embeddings = EmbeddingTable::from_rows(vectors.into_iter().collect())?.with_label("planted");
    Ok(PlantedCorpus { tagged: TaggedCorpus { sentences }, embeddings, scale, profile, ees, distractors: counts })
}

pub struct ToyEmbeddingCorpus {
    pub corpus: Corpus,
    /// Word pairs that always occur together in the same contexts.
    pub planted: Vec<(String, String)>,
    /// Word pairs that never share a sentence or a context word.
    pub never: Vec<(String, String)>,
}

/// Twenty topics with five context words each. Planted pair i shares
/// sentences of topic i; never-pair j puts its words in topics 10 + j and
/// 10 + (j + 5) % 10.
pub fn toy_embedding_corpus(sentences_per_topic: usize, seed: u64) -> ToyEmbeddingCorpus {
    let mut rng = seeded_rng(seed, 0xF4);
    let ctx = |t: usize, k: usize| format!("c{t}_{k}");
    let mut lines: Vec<Vec<String>> = Vec::new();
    let mut planted = Vec::new();
    let mut never = Vec::new();
    for i in 0..10 {
        let (p, q) = (format!("p{i}"), format!("q{i}"));
        for _ in 0..sentences_per_topic {
            let mut s: Vec<String> = (0..4).map(|_| ctx(i, rng.gen_range(0..5))).collect();
            s.insert(rng.gen_range(0..=s.len()), p.clone());
            s.insert(rng.gen_range(0..=s.len()), q.clone());
            lines.push(s);
        }
        planted.push((p, q));
    }
    for j in 0..10 {
        let (r, s) = (format!("r{j}"), format!("s{j}"));
        for (word, topic) in [(&r, 10 + j), (&s, 10 + (j + 5) % 10)] {
            for _ in 0..sentences_per_topic {
                let mut line: Vec<String> = (0..5).map(|_| ctx(topic, rng.gen_range(0..5))).collect();
                line.insert(rng.gen_range(0..=line.len()), word.clone());
                lines.push(line);
            }
        }
        never.push((r, s));
    }
    lines.shuffle(&mut rng);
    ToyEmbeddingCorpus { corpus: Corpus { sentences: lines }, planted, never }
}

/// Points drawn uniformly from [-1, 1]^d, kept when |w·x| ≥ margin for a
/// random unit w, labeled by the sign of w·x.
pub fn separable_data(n: usize, d: usize, margin: f64, seed: u64) -> (Vec<SparseVec>, Vec<Label>) {
    let mut rng = seeded_rng(seed, 0xF5);
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w: Vec<f64> = w.iter().map(|v| v / norm).collect();
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    while xs.len() < n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        if m.abs() >= margin {
            xs.push(SparseVec::from_dense(&x));
            ys.push(Label::from_sign(m));
        }
    }
    (xs, ys)
}

/// Four Gaussian-ish clusters at (±1, ±1); the label is the sign of x·y.
pub fn xor_clusters(per_cluster: usize, spread: f64, seed: u64) -> (Vec<SparseVec>, Vec<Label>) {
    let mut rng = seeded_rng(seed, 0xF6);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (cx, cy) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
        for _ in 0..per_cluster {
            // sum of uniforms approximates a normal
            let mut jitter = || (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() * spread * 0.866;
            let (x, y) = (cx + jitter(), cy + jitter());
            xs.push(SparseVec::from_dense(&[x, y]));
            ys.push(Label::from_sign(cx * cy));
        }
    }
    (xs, ys)
}

/// A "no"-path chain of focal one-hot splits; each entry is the split
/// feature and the (attested, unattested) counts of its "yes" leaf.
fn chain_tree(space: &FeatureSpace, class: PhonemeClass, chain: &[(Position, &str, (usize, usize))], rest: (usize, usize)) -> DecisionTree {
    let total: (usize, usize) = chain.iter().fold(rest, |acc, (_, _, c)| (acc.0 + c.0, acc.1 + c.1));
    let mut nodes = Vec::new();
    let mut remaining = total;
    for (depth, (position, symbol, yes)) in chain.iter().enumerate() {
        let id = FeatureId::OneHot { position: *position, class, symbol: symbol.to_string() };
        let feature = space.index_of(&id).unwrap_or_else(|| panic!("{symbol} not in feature space"));
        let here = nodes.len();
        nodes.push(TreeNode { split: Some(Split { feature, threshold: 0.5, no: here + 2, yes: here + 1 }), counts: remaining, depth });
        nodes.push(TreeNode { split: None, counts: *yes, depth: depth + 1 });
        remaining = (remaining.0 - yes.0, remaining.1 - yes.1);
    }
    nodes.push(TreeNode { split: None, counts: remaining, depth: chain.len() });
    DecisionTree { nodes, n_features: space.len(), params: TreeParams::default() }
}

/// A Hmong tone tree over the focal feature space whose induced scale is
/// j < b < m < v < s < g < ∅, with two splits on already placed tones.
pub fn hmong_tree_fixture() -> Result<(DecisionTree, FeatureSpace), Error> {
    let profile = LanguageProfile::builtin("hmong")?;
    let space = FeatureSpace::for_set(&profile, FeatureSet::Focal, None);
    let chain = [
        (Position::B1, "j", (120, 10)),
        (Position::B1, "b", (100, 20)),
        (Position::B2, ZERO, (90, 15)),
        (Position::B2, "g", (80, 20)),
        (Position::B1, "s", (10, 60)),
        (Position::B2, "j", (5, 50)),
        (Position::B2, "b", (8, 40)),
        (Position::B1, "m", (40, 12)),
        (Position::B1, "v", (30, 20)),
    ];
    Ok((chain_tree(&space, PhonemeClass::Tone, &chain, (20, 20)), space))
}

/// A Lahu vowel tree placing o, u in front and a, ε, ɔ, e at the back.
pub fn lahu_tree_fixture() -> Result<(DecisionTree, FeatureSpace), Error> {
    let profile = LanguageProfile::builtin("lahu")?;
    let space = FeatureSpace::for_set(&profile, FeatureSet::Focal, None);
    let chain = [
        (Position::B1, "o", (90, 10)),
        (Position::B1, "u", (70, 15)),
        (Position::B2, "a", (80, 20)),
        (Position::B2, "ε", (50, 20)),
        (Position::B1, "ɔ", (10, 40)),
        (Position::B1, "e", (12, 30)),
    ];
    Ok((chain_tree(&space, PhonemeClass::Rhyme, &chain, (30, 30)), space))
}

/// A Middle Chinese tone-category tree inducing ping < shang < qu < ru.
pub fn mc_tree_fixture() -> Result<(DecisionTree, FeatureSpace), Error> {
    let profile = LanguageProfile::builtin("middle-chinese")?;
    let space = FeatureSpace::for_set(&profile, FeatureSet::Focal, None);
    let chain = [
        (Position::B1, "ping", (150, 30)),
        (Position::B2, "ru", (90, 20)),
        (Position::B1, "ru", (15, 70)),
        (Position::B1, "shang", (60, 25)),
        (Position::B2, "qu", (40, 18)),
    ];
    Ok((chain_tree(&space, PhonemeClass::Tone, &chain, (25, 25)), space))
}

/// Writes every fixture into `dir` and returns the paths written.
pub fn write_fixtures(dir: &Path, seed: u64) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Fixture(format!("{}: {e}", dir.display())))?;
    let io = |p: &Path, e: std::io::Error| Error::Fixture(format!("{}: {e}", p.display()));
    let mut written = Vec::new();
    let profile = LanguageProfile::builtin("hmong")?;
    let scale = planted_scale();

    let p = dir.join("planted.scale");
    scale.save(&p)?;
    written.push(p);
    let p = dir.join("planted_ee.tsv");
    write_ee_list(&p, &planted_ee_records(&profile, &scale, 1000, seed))?;
    written.push(p);

    let planted = planted_tagging_corpus(&PlantedCorpusSpec { seed, ..PlantedCorpusSpec::default() })?;
    let p = dir.join("planted_corpus.tagged");
    planted.tagged.save(&p)?;
    written.push(p);
    let p = dir.join("planted_corpus.txt");
    planted.tagged.to_corpus().save(&p)?;
    written.push(p);
    let p = dir.join("planted_emb.bin");
    planted.embeddings.save(&p)?;
    written.push(p);

    let toy = toy_embedding_corpus(60, seed);
    let p = dir.join("toy_embedding_corpus.txt");
    toy.corpus.save(&p)?;
    written.push(p);

    for (name, (tree, _)) in [
        ("hmong_tree.json", hmong_tree_fixture()?),
        ("lahu_tree.json", lahu_tree_fixture()?),
        ("mc_tree.json", mc_tree_fixture()?),
    ] {
        let p = dir.join(name);
        std::fs::write(&p, tree.to_json()).map_err(|e| io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}
