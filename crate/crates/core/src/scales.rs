//! Linear scales over focal phonemes: rule-based order prediction,
//! exhaustive scale search and scale induction from a decision tree.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::tree::DecisionTree;
use crate::datasets::{Label, OrderedPairExample};
use crate::features::{FeatureId, FeatureSpace, Position};
use crate::phonology::{normalize_symbol, PhonemeClass};
use crate::seeded_rng;

/// Largest inventory searched exhaustively (10! orders).
pub const MAX_SEARCH_SYMBOLS: usize = 10;

#[derive(Debug, Error)]
pub enum ScaleError {
    #[error("symbol {0:?} appears more than once in the scale")]
    DuplicateSymbol(String),
    #[error("scale has an empty group")]
    EmptyGroup,
    #[error("symbol {0:?} is neither ranked nor unranked")]
    UnknownSymbol(String),
    #[error("{0} symbols is too many for exhaustive search (max {MAX_SEARCH_SYMBOLS})")]
    TooManySymbols(usize),
    #[error("empty symbol inventory")]
    NoSymbols,
    #[error("tree has {tree} features but the space has {space}")]
    TreeMismatch { tree: usize, space: usize },
    #[error("tree node {node} splits on feature {feature} outside the space")]
    BadSplit { node: usize, feature: usize },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    /// Ranked groups, earliest first; symbols within a group are tied.
    pub groups: Vec<Vec<String>>,
    pub unranked: Vec<String>,
    pub focal_class: PhonemeClass,
}

impl Scale {
    pub fn new(groups: Vec<Vec<String>>, unranked: Vec<String>, focal_class: PhonemeClass) -> Result<Self, ScaleError> {
        let mut seen = HashSet::new();
        for g in &groups {
            if g.is_empty() {
                return Err(ScaleError::EmptyGroup);
            }
        }
        for s in groups.iter().flatten().chain(&unranked) {
            if !seen.insert(s.as_str()) {
                return Err(ScaleError::DuplicateSymbol(s.clone()));
            }
        }
        Ok(Scale { groups, unranked, focal_class })
    }

    /// A total order with no ties.
    pub fn total<S: AsRef<str>>(order: &[S], focal_class: PhonemeClass) -> Result<Self, ScaleError> {
        Self::new(order.iter().map(|s| vec![s.as_ref().to_string()]).collect(), Vec::new(), focal_class)
    }

    /// `Some(Some(rank))` for ranked symbols, `Some(None)` for unranked ones.
    pub fn rank(&self, symbol: &str) -> Option<Option<usize>> {
        if let Some(r) = self.groups.iter().position(|g| g.iter().any(|s| s == symbol)) {
            return Some(Some(r));
        }
        self.unranked.iter().any(|s| s == symbol).then_some(None)
    }

    pub fn ranked_symbols(&self) -> Vec<&str> {
        self.groups.iter().flatten().map(String::as_str).collect()
    }

    pub fn reversed(&self) -> Scale {
        Scale {
            groups: self.groups.iter().rev().cloned().collect(),
            unranked: self.unranked.clone(),
            focal_class: self.focal_class,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ScaleError> {
        let mut focal = PhonemeClass::Tone;
        let mut groups = Vec::new();
        let mut unranked = Vec::new();
        let split = |s: &str| -> Vec<String> {
            s.split([',', ' ', '\t']).filter(|t| !t.is_empty()).map(|t| normalize_symbol(t).to_string()).collect()
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("focal:") {
                focal = match rest.trim() {
                    "tone" => PhonemeClass::Tone,
                    "rhyme" | "vowel" => PhonemeClass::Rhyme,
                    "onset" => PhonemeClass::Onset,
                    other => return Err(ScaleError::Malformed { line: i + 1, msg: format!("unknown focal class {other:?}") }),
                };
            } else if let Some(rest) = line.strip_prefix("unranked:") {
                unranked.extend(split(rest));
            } else if line.contains('<') {
                // one-line display form: `a < b = c < d (unranked: x, y)`
                let (order, rest) = line.split_once('(').unwrap_or((line, ""));
                for group in order.split('<') {
                    groups.push(group.split('=').flat_map(split).collect());
                }
                if let Some(names) = rest.trim_end_matches(')').trim().strip_prefix("unranked:") {
                    unranked.extend(split(names));
                }
            } else {
                groups.push(split(line));
            }
        }
        Self::new(groups, unranked, focal)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScaleError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScaleError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("focal: {}\n", self.focal_class.name());
        for g in &self.groups {
            out.push_str(&g.join(","));
            out.push('\n');
        }
        if !self.unranked.is_empty() {
            out.push_str(&format!("unranked: {}\n", self.unranked.join(",")));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScaleError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|source| ScaleError::Io { path: path.display().to_string(), source })
    }
}

impl fmt::Display for Scale {
    /// `j < b < m`, tied symbols joined by `=`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.groups.iter().map(|g| g.join(" = ")).collect();
        f.write_str(&parts.join(" < "))?;
        if !self.unranked.is_empty() {
            write!(f, " (unranked: {})", self.unranked.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TiePolicy {
    /// A fair coin seeded per (seed, example id).
    RandomCoin(u64),
    /// Half credit in accuracy, no label.
    ExpectedHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Attested,
    Unattested,
    Tie,
}

pub fn compare(scale: &Scale, b1: &str, b2: &str) -> Result<Decision, ScaleError> {
    let r1 = scale.rank(b1).ok_or_else(|| ScaleError::UnknownSymbol(b1.to_string()))?;
    let r2 = scale.rank(b2).ok_or_else(|| ScaleError::UnknownSymbol(b2.to_string()))?;
    Ok(match (r1, r2) {
        (Some(x), Some(y)) if x < y => Decision::Attested,
        (Some(x), Some(y)) if x > y => Decision::Unattested,
        _ => Decision::Tie,
    })
}

pub fn rule_decide(scale: &Scale, pair: &OrderedPairExample) -> Result<Decision, ScaleError> {
    compare(scale, &pair.b1_syll.get(scale.focal_class).symbol, &pair.b2_syll.get(scale.focal_class).symbol)
}

/// Predicted label; `None` for a tie under [`TiePolicy::ExpectedHalf`].
pub fn rule_predict(scale: &Scale, pair: &OrderedPairExample, policy: TiePolicy) -> Result<Option<Label>, ScaleError> {
    Ok(match rule_decide(scale, pair)? {
        Decision::Attested => Some(Label::Attested),
        Decision::Unattested => Some(Label::Unattested),
        Decision::Tie => match policy {
            TiePolicy::ExpectedHalf => None,
            TiePolicy::RandomCoin(seed) => Some(if seeded_rng(seed, pair.id as u64).gen_bool(0.5) {
                Label::Attested
            } else {
                Label::Unattested
            }),
        },
    })
}

pub fn rule_accuracy(scale: &Scale, data: &[OrderedPairExample], policy: TiePolicy) -> Result<f64, ScaleError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut credit = 0.0;
    for pair in data {
        credit += match rule_predict(scale, pair, policy)? {
            Some(l) if l == pair.label => 1.0,
            Some(_) => 0.0,
            None => 0.5,
        };
    }
    Ok(credit / data.len() as f64)
}

/// Evaluates every total order of `symbols` (lexicographic in the given
/// symbol order) with half credit for same-symbol pairs, and returns the
/// first order with the highest training accuracy.
pub fn search_best_scale<S: AsRef<str>>(
    train: &[OrderedPairExample],
    symbols: &[S],
    focal_class: PhonemeClass,
) -> Result<(Scale, f64), ScaleError> {
    let n = symbols.len();
    if n == 0 {
        return Err(ScaleError::NoSymbols);
    }
    if n > MAX_SEARCH_SYMBOLS {
        return Err(ScaleError::TooManySymbols(n));
    }
    let index: HashMap<&str, usize> = symbols.iter().enumerate().map(|(i, s)| (s.as_ref(), i)).collect();
    if index.len() != n {
        return Err(ScaleError::DuplicateSymbol(String::new()));
    }
    // support[i][j]: examples answered correctly when i precedes j
    let mut support = vec![vec![0u64; n]; n];
    let mut ties = 0u64;
    for pair in train {
        let lookup = |p: &str| index.get(p).copied().ok_or_else(|| ScaleError::UnknownSymbol(p.to_string()));
        let i = lookup(&pair.b1_syll.get(focal_class).symbol)?;
        let j = lookup(&pair.b2_syll.get(focal_class).symbol)?;
        if i == j {
            ties += 1;
        } else if pair.label == Label::Attested {
            support[i][j] += 1;
        } else {
            support[j][i] += 1;
        }
    }
    let best = (0..n)
        .into_par_iter()
        .map(|first| best_with_prefix(&support, first))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None::<(u64, Vec<usize>)>, |acc, cand| match acc {
            Some(a) if a.0 >= cand.0 => Some(a),
            _ => Some(cand),
        })
        .expect("n > 0");
    let order: Vec<&str> = best.1.iter().map(|&i| symbols[i].as_ref()).collect();
    let accuracy = if train.is_empty() {
        0.0
    } else {
        (2 * best.0 + ties) as f64 / (2 * train.len()) as f64
    };
    Ok((Scale::total(&order, focal_class)?, accuracy))
}

/// Best (score, order) among orders starting with `first`, visiting the
/// rest lexicographically and keeping the earliest maximum.
fn best_with_prefix(support: &[Vec<u64>], first: usize) -> (u64, Vec<usize>) {
    let n = support.len();
    // gain[x]: score added by placing x next, given the placed prefix
    let mut gain: Vec<u64> = (0..n).map(|x| support[first][x]).collect();
    let mut used = vec![false; n];
    used[first] = true;
    let mut order = vec![first];
    let mut best = (0u64, Vec::new());
    let mut found = false;
    fn dfs(
        support: &[Vec<u64>],
        gain: &mut [u64],
        used: &mut [bool],
        order: &mut Vec<usize>,
        score: u64,
        best: &mut (u64, Vec<usize>),
        found: &mut bool,
    ) {
        let n = support.len();
        if order.len() == n {
            if !*found || score > best.0 {
                *best = (score, order.clone());
                *found = true;
            }
            return;
        }
        for x in 0..n {
            if used[x] {
                continue;
            }
            let add = gain[x];
            used[x] = true;
            order.push(x);
            for y in 0..n {
                gain[y] += support[x][y];
            }
            dfs(support, gain, used, order, score + add, best, found);
            for y in 0..n {
                gain[y] -= support[x][y];
            }
            order.pop();
            used[x] = false;
        }
    }
    dfs(support, &mut gain, &mut used, &mut order, 0, &mut best, &mut found);
    best
}

/// Walks the tree's "no" path from the root. At each split on an unplaced
/// focal one-hot, the "yes" child's majority decides the end: B1 with an
/// attested majority (or B2 with an unattested one) goes to the front,
/// the converse to the back. Exact ties and never-seen symbols end up
/// unranked.
pub fn induce_scale_from_tree(
    tree: &DecisionTree,
    space: &FeatureSpace,
    focal_class: PhonemeClass,
) -> Result<Scale, ScaleError> {
    if tree.n_features != space.len() {
        return Err(ScaleError::TreeMismatch { tree: tree.n_features, space: space.len() });
    }
    let mut front: Vec<String> = Vec::new();
    let mut back: Vec<String> = Vec::new();
    let mut node = 0;
    while let Some(split) = tree.nodes.get(node).and_then(|n| n.split.as_ref()) {
        let id = space.get(split.feature).ok_or(ScaleError::BadSplit { node, feature: split.feature })?;
        if let FeatureId::OneHot { position, class, symbol } = id {
            let placed = front.contains(symbol) || back.contains(symbol);
            if *class == focal_class && !placed {
                let (att, un) = tree.nodes[split.yes].counts;
                let to_front = match (att.cmp(&un), position) {
                    (std::cmp::Ordering::Equal, _) => None,
                    (std::cmp::Ordering::Greater, Position::B1) | (std::cmp::Ordering::Less, Position::B2) => Some(true),
                    _ => Some(false),
                };
                match to_front {
                    Some(true) => front.push(symbol.clone()),
                    Some(false) => back.push(symbol.clone()),
                    None => {}
                }
            }
        }
        node = split.no;
    }
    let mut unranked = Vec::new();
    for id in space.entries() {
        if let FeatureId::OneHot { class, symbol, .. } = id {
            if *class == focal_class && !front.contains(symbol) && !back.contains(symbol) && !unranked.contains(symbol) {
                unranked.push(symbol.clone());
            }
        }
    }
    let groups = front.into_iter().chain(back.into_iter().rev()).map(|s| vec![s]).collect();
    Scale::new(groups, unranked, focal_class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::{Syllable, ZERO};

    fn toned(b1: &str, b2: &str, label: Label) -> OrderedPairExample {
        OrderedPairExample {
            id: 0,
            b1: b1.into(),
            b2: b2.into(),
            b1_syll: Syllable::new("p", "a", b1),
            b2_syll: Syllable::new("p", "a", b2),
            label,
            source_id: 0,
        }
    }

    fn hmong_scale() -> Scale {
        Scale::parse(include_str!("../../../data/hmong_table2.scale")).unwrap()
    }

    #[test]
    fn shipped_scales_parse() {
        let h = hmong_scale();
        assert_eq!(h.to_string(), format!("j < b < m < s < v < g < {ZERO} (unranked: d)"));
        let l = Scale::parse(include_str!("../../../data/lahu_table2.scale")).unwrap();
        assert_eq!(l.focal_class, PhonemeClass::Rhyme);
        assert_eq!(l.groups.len(), 9);
        let mc = Scale::parse(include_str!("../../../data/mc_table2.scale")).unwrap();
        assert_eq!(mc.ranked_symbols(), vec!["ping", "shang", "qu", "ru"]);
        assert_eq!(Scale::parse(&h.to_text()).unwrap(), h);
        assert_eq!(Scale::parse(&h.to_string()).unwrap(), h);
        let tied = Scale::parse("a < b = c < d").unwrap();
        assert_eq!(tied.rank("c"), Some(Some(1)));
        assert_eq!(tied.to_string(), "a < b = c < d");
    }

    #[test]
    fn hmong_rule() {
        let s = hmong_scale();
        let p = toned("j", "0", Label::Attested);
        assert_eq!(rule_predict(&s, &p, TiePolicy::ExpectedHalf).unwrap(), Some(Label::Attested));
        assert_eq!(rule_predict(&s, &p.mirrored(), TiePolicy::ExpectedHalf).unwrap(), Some(Label::Unattested));
        let unranked = toned("d", "j", Label::Attested);
        assert_eq!(rule_predict(&s, &unranked, TiePolicy::ExpectedHalf).unwrap(), None);
        assert!(rule_predict(&s, &toned("x", "j", Label::Attested), TiePolicy::ExpectedHalf).is_err());
    }

    #[test]
    fn lahu_rule() {
        let s = Scale::parse(include_str!("../../../data/lahu_table2.scale")).unwrap();
        let p = OrderedPairExample {
            id: 0,
            b1: "pho^?".into(),
            b2: "di".into(),
            b1_syll: Syllable::new("ph", "o", "^?"),
            b2_syll: Syllable::new("d", "i", "0"),
            label: Label::Attested,
            source_id: 0,
        };
        assert_eq!(rule_decide(&s, &p).unwrap(), Decision::Attested);
    }

    #[test]
    fn tie_policies() {
        let s = Scale::total(&["a", "b"], PhonemeClass::Tone).unwrap();
        let ties: Vec<_> = (0..100)
            .map(|i| OrderedPairExample { id: i, ..toned("a", "a", Label::Attested) })
            .collect();
        assert_eq!(rule_accuracy(&s, &ties, TiePolicy::ExpectedHalf).unwrap(), 0.5);
        let coin = rule_accuracy(&s, &ties, TiePolicy::RandomCoin(3)).unwrap();
        assert!(coin > 0.3 && coin < 0.7);
        assert_eq!(coin, rule_accuracy(&s, &ties, TiePolicy::RandomCoin(3)).unwrap());
    }

    #[test]
    fn invalid_scales() {
        assert!(matches!(Scale::parse("a\na\n"), Err(ScaleError::DuplicateSymbol(_))));
        assert!(matches!(Scale::parse("a\nunranked: a\n"), Err(ScaleError::DuplicateSymbol(_))));
        assert!(Scale::new(vec![vec![]], vec![], PhonemeClass::Tone).is_err());
    }

    #[test]
    fn search_finds_planted_order() {
        let planted = ["c", "a", "d", "b"];
        let mut data = Vec::new();
        for (i, x) in planted.iter().enumerate() {
            for y in &planted[i + 1..] {
                data.push(toned(x, y, Label::Attested));
                data.push(toned(y, x, Label::Unattested));
            }
        }
        let (scale, acc) = search_best_scale(&data, &["a", "b", "c", "d"], PhonemeClass::Tone).unwrap();
        assert_eq!(scale.ranked_symbols(), planted);
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn search_single_symbol_and_limits() {
        let data = vec![toned("a", "a", Label::Attested)];
        let (scale, acc) = search_best_scale(&data, &["a"], PhonemeClass::Tone).unwrap();
        assert_eq!(scale.ranked_symbols(), vec!["a"]);
        assert_eq!(acc, 0.5);
        let many: Vec<String> = (0..11).map(|i| i.to_string()).collect();
        assert!(matches!(search_best_scale(&data, &many, PhonemeClass::Tone), Err(ScaleError::TooManySymbols(11))));
    }

    #[test]
    fn search_tie_break_is_lexicographic() {
        let (scale, _) = search_best_scale(&[], &["x", "y", "z"], PhonemeClass::Tone).unwrap();
        assert_eq!(scale.ranked_symbols(), vec!["x", "y", "z"]);
    }
}
