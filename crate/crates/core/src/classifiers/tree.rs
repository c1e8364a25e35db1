//! CART decision tree with Gini impurity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::datasets::Label;
use crate::features::{FeatureId, FeatureSpace, SparseVec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_impurity_decrease: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 12, min_samples_leaf: 5, min_impurity_decrease: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Examples with value > threshold go to `yes`.
    pub threshold: f64,
    pub no: usize,
    pub yes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub split: Option<Split>,
    /// (attested, unattested) training examples reaching the node.
    pub counts: (usize, usize),
    pub depth: usize,
}

impl TreeNode {
    pub fn majority(&self) -> Label {
        if self.counts.0 >= self.counts.1 {
            Label::Attested
        } else {
            Label::Unattested
        }
    }

    pub fn gini(&self) -> f64 {
        gini(self.counts.0, self.counts.1)
    }
}

/// Arena of nodes, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub params: TreeParams,
}

pub fn gini(att: usize, un: usize) -> f64 {
    let n = (att + un) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = att as f64 / n;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

fn is_binary(column: &[(usize, f64)]) -> bool {
    column.iter().all(|&(_, v)| v == 1.0 || v == 0.0)
}

/// Greedy CART. Equal-gain candidates resolve to the lowest feature index
/// (then the lowest threshold), so the result is fully deterministic.
pub fn train_tree(xs: &[SparseVec], ys: &[Label], params: &TreeParams) -> Result<DecisionTree, ClassifierError> {
    if xs.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    if xs.len() != ys.len() {
        return Err(ClassifierError::LengthMismatch { rows: xs.len(), labels: ys.len() });
    }
    let dim = xs[0].dim;
    if let Some(x) = xs.iter().find(|x| x.dim != dim) {
        return Err(ClassifierError::DimensionMismatch { expected: dim, got: x.dim });
    }
    // column view: feature -> (row, value) for non-zero entries
    let mut column: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (r, x) in xs.iter().enumerate() {
        for &(f, v) in &x.entries {
            column[f].push((r, v));
        }
    }
    let binary: Vec<bool> = column.iter().map(|c| is_binary(c)).collect();

    let mut tree = DecisionTree { nodes: Vec::new(), n_features: dim, params: *params };
    let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
    let all: Vec<usize> = (0..xs.len()).collect();
    tree.nodes.push(node_for(&all, ys, 0));
    stack.push((0, all));
    let mut in_node = vec![false; xs.len()];

    while let Some((id, rows)) = stack.pop() {
        let node = &tree.nodes[id];
        let (att, un) = node.counts;
        if att == 0 || un == 0 || node.depth >= params.max_depth || rows.len() < 2 * params.min_samples_leaf.max(1) {
            continue;
        }
        for &r in &rows {
            in_node[r] = true;
        }
        let parent = gini(att, un);
        let best = (0..dim)
            .into_par_iter()
            .filter_map(|f| {
                let entries: Vec<(usize, f64)> = column[f].iter().copied().filter(|&(r, _)| in_node[r]).collect();
                if binary[f] {
                    best_binary(f, &entries, ys, (att, un), parent, params)
                } else {
                    best_continuous(f, &entries, ys, (att, un), parent, params)
                }
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(None::<Candidate>, |acc, c| match acc {
                Some(a) if a.decrease >= c.decrease => Some(a),
                _ => Some(c),
            });
        for &r in &rows {
            in_node[r] = false;
        }
        let Some(best) = best else { continue };
        let (yes_rows, no_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| xs[r].get(best.feature) > best.threshold);
        let depth = tree.nodes[id].depth + 1;
        let no = tree.nodes.len();
        tree.nodes.push(node_for(&no_rows, ys, depth));
        let yes = tree.nodes.len();
        tree.nodes.push(node_for(&yes_rows, ys, depth));
        tree.nodes[id].split = Some(Split { feature: best.feature, threshold: best.threshold, no, yes });
        stack.push((yes, yes_rows));
        stack.push((no, no_rows));
    }
    Ok(tree)
}

fn node_for(rows: &[usize], ys: &[Label], depth: usize) -> TreeNode {
    let att = rows.iter().filter(|&&r| ys[r] == Label::Attested).count();
    TreeNode { split: None, counts: (att, rows.len() - att), depth }
}

fn decrease(parent: f64, left: (usize, usize), right: (usize, usize)) -> f64 {
    let nl = (left.0 + left.1) as f64;
    let nr = (right.0 + right.1) as f64;
    let n = nl + nr;
    parent - (nl / n) * gini(left.0, left.1) - (nr / n) * gini(right.0, right.1)
}

fn admissible(yes: (usize, usize), no: (usize, usize), dec: f64, params: &TreeParams) -> bool {
    let min = params.min_samples_leaf.max(1);
    yes.0 + yes.1 >= min && no.0 + no.1 >= min && dec >= params.min_impurity_decrease
}

fn best_binary(
    f: usize,
    entries: &[(usize, f64)],
    ys: &[Label],
    counts: (usize, usize),
    parent: f64,
    params: &TreeParams,
) -> Option<Candidate> {
    let yes_att = entries.iter().filter(|&&(r, v)| v == 1.0 && ys[r] == Label::Attested).count();
    let yes_n = entries.iter().filter(|&&(_, v)| v == 1.0).count();
    let yes = (yes_att, yes_n - yes_att);
    let no = (counts.0 - yes.0, counts.1 - yes.1);
    let dec = decrease(parent, no, yes);
    admissible(yes, no, dec, params).then_some(Candidate { feature: f, threshold: 0.5, decrease: dec })
}

fn best_continuous(
    f: usize,
    entries: &[(usize, f64)],
    ys: &[Label],
    counts: (usize, usize),
    parent: f64,
    params: &TreeParams,
) -> Option<Candidate> {
    // implicit zeros for rows without an entry
    let n = counts.0 + counts.1;
    let zero_att = counts.0 - entries.iter().filter(|&&(r, _)| ys[r] == Label::Attested).count();
    let zero_n = n - entries.len();
    let mut values: Vec<(f64, usize, usize)> = entries
        .iter()
        .map(|&(r, v)| (v, (ys[r] == Label::Attested) as usize, (ys[r] == Label::Unattested) as usize))
        .collect();
    if zero_n > 0 {
        values.push((0.0, zero_att, zero_n - zero_att));
    }
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<Candidate> = None;
    let mut below = (0usize, 0usize);
    for k in 0..values.len() {
        below.0 += values[k].1;
        below.1 += values[k].2;
        if k + 1 == values.len() || values[k + 1].0 == values[k].0 {
            continue;
        }
        let threshold = 0.5 * (values[k].0 + values[k + 1].0);
        let above = (counts.0 - below.0, counts.1 - below.1);
        let dec = decrease(parent, below, above);
        if admissible(above, below, dec, params) && best.is_none_or(|b| dec > b.decrease) {
            best = Some(Candidate { feature: f, threshold, decrease: dec });
        }
    }
    best
}

impl DecisionTree {
    pub fn leaf_for(&self, x: &SparseVec) -> &TreeNode {
        let mut node = &self.nodes[0];
        while let Some(s) = &node.split {
            node = &self.nodes[if x.get(s.feature) > s.threshold { s.yes } else { s.no }];
        }
        node
    }

    /// Leaf majority; an exactly tied leaf predicts attested.
    pub fn predict(&self, x: &SparseVec) -> Result<Label, ClassifierError> {
        if x.dim != self.n_features {
            return Err(ClassifierError::DimensionMismatch { expected: self.n_features, got: x.dim });
        }
        Ok(self.leaf_for(x).majority())
    }

    pub fn predict_many(&self, xs: &[SparseVec]) -> Result<Vec<Label>, ClassifierError> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let tree: DecisionTree = serde_json::from_str(text).map_err(|e| ClassifierError::Malformed(e.to_string()))?;
        tree.validate()?;
        Ok(tree)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    /// Checks arena links and that each node's counts equal its children's sum.
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.nodes.is_empty() {
            return Err(ClassifierError::Malformed("tree has no nodes".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(s) = &n.split {
                if s.no >= self.nodes.len() || s.yes >= self.nodes.len() || s.no <= i || s.yes <= i {
                    return Err(ClassifierError::Malformed(format!("node {i} has bad child links")));
                }
                if s.feature >= self.n_features {
                    return Err(ClassifierError::Malformed(format!("node {i} splits on feature {}", s.feature)));
                }
                let (a, b) = (&self.nodes[s.no].counts, &self.nodes[s.yes].counts);
                if (a.0 + b.0, a.1 + b.1) != n.counts {
                    return Err(ClassifierError::Malformed(format!("node {i} counts differ from its children")));
                }
            }
        }
        Ok(())
    }

    /// Indented text rendering with feature names.
    pub fn render(&self, space: Option<&FeatureSpace>) -> String {
        let mut out = String::new();
        self.render_node(0, 0, space, &mut out);
        out
    }

    fn render_node(&self, id: usize, indent: usize, space: Option<&FeatureSpace>, out: &mut String) {
        let n = &self.nodes[id];
        let pad = "  ".repeat(indent);
        let label = match n.majority() {
            Label::Attested => "ATT",
            Label::Unattested => "FAKE",
        };
        match &n.split {
            None => out.push_str(&format!("{pad}{label} {}/{}\n", n.counts.0, n.counts.1)),
            Some(s) => {
                let name = match space.and_then(|sp| sp.get(s.feature)) {
                    Some(id @ FeatureId::OneHot { .. }) => id.to_string(),
                    Some(id) => format!("{id} > {:.4}", s.threshold),
                    None => format!("f{} > {:.4}", s.feature, s.threshold),
                };
                out.push_str(&format!("{pad}{label} {}/{} [{name}?]\n", n.counts.0, n.counts.1));
                out.push_str(&format!("{pad}no:\n"));
                self.render_node(s.no, indent + 1, space, out);
                out.push_str(&format!("{pad}yes:\n"));
                self.render_node(s.yes, indent + 1, space, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[[f64; 2]]) -> Vec<SparseVec> {
        v.iter().map(|r| SparseVec::from_dense(r)).collect()
    }

    #[test]
    fn gini_closed_form() {
        assert_eq!(gini(50, 50), 0.5);
        assert_eq!(gini(7, 0), 0.0);
    }

    #[test]
    fn pure_labels_give_a_leaf() {
        let xs = rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let t = train_tree(&xs, &[Label::Attested; 3], &TreeParams::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn xor_is_learned() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..10 {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                xs.push(SparseVec::from_dense(&[a, b]));
                ys.push(if (a == 1.0) != (b == 1.0) { Label::Attested } else { Label::Unattested });
            }
        }
        let params = TreeParams { max_depth: 2, ..TreeParams::default() };
        let t = train_tree(&xs, &ys, &params).unwrap();
        assert_eq!(t.predict_many(&xs).unwrap(), ys);
        t.validate().unwrap();
    }

    #[test]
    fn continuous_threshold() {
        let xs: Vec<SparseVec> = (0..20).map(|i| SparseVec::from_dense(&[i as f64 / 10.0])).collect();
        let ys: Vec<Label> = (0..20).map(|i| if i >= 12 { Label::Attested } else { Label::Unattested }).collect();
        let t = train_tree(&xs, &ys, &TreeParams { min_samples_leaf: 1, ..TreeParams::default() }).unwrap();
        let s = t.nodes[0].split.as_ref().unwrap();
        assert!((s.threshold - 1.15).abs() < 1e-12);
        assert_eq!(t.predict_many(&xs).unwrap(), ys);
    }

    #[test]
    fn leaf_ties_predict_attested() {
        let t = DecisionTree {
            nodes: vec![TreeNode { split: None, counts: (2, 2), depth: 0 }],
            n_features: 1,
            params: TreeParams::default(),
        };
        assert_eq!(t.predict(&SparseVec::from_dense(&[0.0])).unwrap(), Label::Attested);
        assert!(t.predict(&SparseVec::from_dense(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let xs = rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0]]);
        let ys = [Label::Attested, Label::Unattested, Label::Attested, Label::Unattested];
        let t = train_tree(&xs, &ys, &TreeParams { min_samples_leaf: 1, ..TreeParams::default() }).unwrap();
        assert_eq!(DecisionTree::from_json(&t.to_json()).unwrap(), t);
        let mut bad = t.clone();
        bad.nodes[1].counts.0 += 1;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_data_is_an_error() {
        assert!(matches!(train_tree(&[], &[], &TreeParams::default()), Err(ClassifierError::EmptyData)));
    }
}
