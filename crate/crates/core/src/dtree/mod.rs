//! Oblique decision trees with Q-learning leaves.
//!
//! Nodes live in a preorder arena: node 0 is the root and every subtree
//! occupies a contiguous id range. Leaf ids are assigned in the same
//! preorder walk, counting leaves only.

mod prune;
mod text;

use rand::Rng;

use crate::error::{Error, Result};

pub use prune::{prune, MergeRecord, PruneReport, Removal, DEFAULT_PRUNE_THRESHOLD};
pub use text::parse;

/// `weights · x < bias`
#[derive(Debug, Clone, PartialEq)]
pub struct ObliqueSplit {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ObliqueSplit {
    #[inline]
    pub fn is_true(&self, s: &[f64]) -> bool {
        let dot: f64 = self.weights.iter().zip(s).map(|(w, x)| w * x).sum();
        dot < self.bias
    }

    pub fn nonzero_terms(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }
}

/// Owned recursive form used to build and rewrite trees.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Split {
        split: ObliqueSplit,
        on_true: Box<Expr>,
        on_false: Box<Expr>,
    },
    /// An empty `q` is filled with zeros by [`DecisionTree::new`].
    Leaf { q: Vec<f64> },
}

impl Expr {
    pub fn leaf(q: Vec<f64>) -> Self {
        Expr::Leaf { q }
    }

    pub fn split(weights: Vec<f64>, bias: f64, on_true: Expr, on_false: Expr) -> Self {
        Expr::Split {
            split: ObliqueSplit { weights, bias },
            on_true: Box::new(on_true),
            on_false: Box::new(on_false),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        split: ObliqueSplit,
        on_true: usize,
        on_false: usize,
    },
    Leaf {
        leaf_id: usize,
        q: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLearnParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for QLearnParams {
    fn default() -> Self {
        QLearnParams {
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 0.05,
        }
    }
}

impl QLearnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("alpha", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("epsilon", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn greedy(self) -> Self {
        QLearnParams { epsilon: 0.0, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    n_inputs: usize,
    n_actions: usize,
    nodes: Vec<Node>,
    parents: Vec<Option<usize>>,
    leaf_nodes: Vec<usize>,
    visits: Vec<u64>,
}

impl DecisionTree {
    pub fn new(n_inputs: usize, n_actions: usize, expr: Expr) -> Result<Self> {
        if n_inputs == 0 {
            return Err(Error::InvalidDimension("tree needs at least one input".into()));
        }
        if n_actions == 0 {
            return Err(Error::InvalidDimension("tree needs at least one action".into()));
        }
        let mut tree = DecisionTree {
            n_inputs,
            n_actions,
            nodes: Vec::new(),
            parents: Vec::new(),
            leaf_nodes: Vec::new(),
            visits: Vec::new(),
        };
        tree.push(expr, None)?;
        tree.visits = vec![0; tree.nodes.len()];
        Ok(tree)
    }

    /// Single-leaf tree.
    pub fn leaf(n_inputs: usize, n_actions: usize, q: Vec<f64>) -> Result<Self> {
        Self::new(n_inputs, n_actions, Expr::leaf(q))
    }

    fn push(&mut self, expr: Expr, parent: Option<usize>) -> Result<usize> {
        let id = self.nodes.len();
        match expr {
            Expr::Leaf { q } => {
                let q = if q.is_empty() { vec![0.0; self.n_actions] } else { q };
                if q.len() != self.n_actions {
                    return Err(Error::LengthMismatch {
                        left: q.len(),
                        right: self.n_actions,
                    });
                }
                if q.iter().any(|v| !v.is_finite()) {
                    return Err(Error::ContractViolation("non-finite leaf Q-value".into()));
                }
                let leaf_id = self.leaf_nodes.len();
                self.leaf_nodes.push(id);
                self.nodes.push(Node::Leaf { leaf_id, q });
                self.parents.push(parent);
            }
            Expr::Split {
                split,
                on_true,
                on_false,
            } => {
                if split.weights.len() != self.n_inputs {
                    return Err(Error::LengthMismatch {
                        left: split.weights.len(),
                        right: self.n_inputs,
                    });
                }
                if split.weights.iter().chain([&split.bias]).any(|v| !v.is_finite()) {
                    return Err(Error::ContractViolation("non-finite split coefficient".into()));
                }
                self.nodes.push(Node::Split {
                    split,
                    on_true: usize::MAX,
                    on_false: usize::MAX,
                });
                self.parents.push(parent);
                let t = self.push(*on_true, Some(id))?;
                let f = self.push(*on_false, Some(id))?;
                if let Node::Split { on_true, on_false, .. } = &mut self.nodes[id] {
                    *on_true = t;
                    *on_false = f;
                }
            }
        }
        Ok(id)
    }

    pub fn to_expr(&self) -> Expr {
        self.expr_at(0)
    }

    pub(crate) fn expr_at(&self, id: usize) -> Expr {
        match &self.nodes[id] {
            Node::Leaf { q, .. } => Expr::Leaf { q: q.clone() },
            Node::Split {
                split,
                on_true,
                on_false,
            } => Expr::Split {
                split: split.clone(),
                on_true: Box::new(self.expr_at(*on_true)),
                on_false: Box::new(self.expr_at(*on_false)),
            },
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn parent(&self, node_id: usize) -> Option<usize> {
        self.parents[node_id]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_nodes.len()
    }

    /// Splits in preorder.
    pub fn splits(&self) -> Vec<&ObliqueSplit> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { split, .. } => Some(split),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    /// Mutable access to the `index`-th split in preorder.
    pub fn split_mut(&mut self, index: usize) -> Option<&mut ObliqueSplit> {
        self.nodes
            .iter_mut()
            .filter_map(|n| match n {
                Node::Split { split, .. } => Some(split),
                Node::Leaf { .. } => None,
            })
            .nth(index)
    }

    pub fn depth(&self) -> usize {
        fn depth_at(t: &DecisionTree, id: usize) -> usize {
            match &t.nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { on_true, on_false, .. } => 1 + depth_at(t, *on_true).max(depth_at(t, *on_false)),
            }
        }
        depth_at(self, 0)
    }

    pub fn q(&self, leaf_id: usize) -> &[f64] {
        match &self.nodes[self.leaf_nodes[leaf_id]] {
            Node::Leaf { q, .. } => q,
            Node::Split { .. } => unreachable!("leaf index points at a split"),
        }
    }

    pub fn q_mut(&mut self, leaf_id: usize) -> &mut [f64] {
        match &mut self.nodes[self.leaf_nodes[leaf_id]] {
            Node::Leaf { q, .. } => q,
            Node::Split { .. } => unreachable!("leaf index points at a split"),
        }
    }

    pub fn leaf_node(&self, leaf_id: usize) -> usize {
        self.leaf_nodes[leaf_id]
    }

    /// Redraws every leaf Q-value from U(-1, 1), leaf by leaf in id order.
    pub fn init_q_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for leaf in 0..self.n_leaves() {
            for v in self.q_mut(leaf) {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
    }

    fn check_obs(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.n_inputs {
            return Err(Error::InvalidObservation(format!(
                "expected {} entries, got {}",
                self.n_inputs,
                s.len()
            )));
        }
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidObservation(format!("entry {i} is not finite")));
        }
        Ok(())
    }

    #[inline]
    fn descend(&self, s: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Split {
                    split,
                    on_true,
                    on_false,
                } => id = if split.is_true(s) { *on_true } else { *on_false },
            }
        }
    }

    /// Leaf id reached by `s`.
    pub fn route(&self, s: &[f64]) -> Result<usize> {
        self.check_obs(s)?;
        Ok(self.leaf_id_of(self.descend(s)))
    }

    fn leaf_id_of(&self, node: usize) -> usize {
        match &self.nodes[node] {
            Node::Leaf { leaf_id, .. } => *leaf_id,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Routes `s` and increments the visit counter of every node on the path.
    pub fn route_counted(&mut self, s: &[f64]) -> Result<usize> {
        self.check_obs(s)?;
        let mut id = 0;
        loop {
            self.visits[id] += 1;
            match &self.nodes[id] {
                Node::Leaf { leaf_id, .. } => return Ok(*leaf_id),
                Node::Split {
                    split,
                    on_true,
                    on_false,
                } => id = if split.is_true(s) { *on_true } else { *on_false },
            }
        }
    }

    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    pub fn reset_visits(&mut self) {
        self.visits.iter_mut().for_each(|v| *v = 0);
    }

    /// `node_id,visits,parent_id` with `-1` as the root's parent.
    pub fn visits_csv(&self) -> String {
        let mut out = String::from("node_id,visits,parent_id\n");
        for (id, v) in self.visits.iter().enumerate() {
            let parent = self.parents[id].map_or_else(|| "-1".to_string(), |p| p.to_string());
            out.push_str(&format!("{id},{v},{parent}\n"));
        }
        out
    }

    /// Argmax of the routed leaf's Q-vector, lowest index on ties.
    pub fn greedy_action(&self, s: &[f64]) -> Result<usize> {
        let leaf = self.route(s)?;
        Ok(argmax(self.q(leaf)))
    }

    /// Epsilon-greedy action. No random draw is made when epsilon is zero.
    pub fn act<R: Rng + ?Sized>(&self, s: &[f64], params: &QLearnParams, rng: &mut R) -> Result<usize> {
        self.check_obs(s)?;
        if params.epsilon > 0.0 && rng.gen::<f64>() < params.epsilon {
            return Ok(rng.gen_range(0..self.n_actions));
        }
        Ok(argmax(self.q(self.leaf_id_of(self.descend(s)))))
    }

    /// One-step Q-learning on the leaf routed by `t.s`.
    pub fn q_update(&mut self, t: &Transition, params: &QLearnParams) -> Result<()> {
        self.check_obs(&t.s)?;
        if t.a >= self.n_actions {
            return Err(Error::InvalidAction {
                action: t.a,
                limit: self.n_actions,
            });
        }
        let leaf = self.leaf_id_of(self.descend(&t.s));
        let target = if t.done {
            t.r
        } else {
            self.check_obs(&t.s_next)?;
            let next = self.leaf_id_of(self.descend(&t.s_next));
            t.r + params.gamma * max(self.q(next))
        };
        let q = &mut self.q_mut(leaf)[t.a];
        *q += params.alpha * (target - *q);
        Ok(())
    }

    /// True when both trees have the same shape and identical splits.
    pub fn same_structure(&self, other: &DecisionTree) -> bool {
        self.n_inputs == other.n_inputs
            && self.n_actions == other.n_actions
            && self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| match (a, b) {
                (
                    Node::Split {
                        split: sa,
                        on_true: ta,
                        ..
                    },
                    Node::Split {
                        split: sb,
                        on_true: tb,
                        ..
                    },
                ) => sa == sb && ta == tb,
                (Node::Leaf { .. }, Node::Leaf { .. }) => true,
                _ => false,
            })
    }

    /// Multiply-accumulate operations on the worst-case root-to-leaf path.
    pub fn mac_count(&self) -> u64 {
        fn worst(t: &DecisionTree, id: usize) -> u64 {
            match &t.nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split {
                    split,
                    on_true,
                    on_false,
                } => split.nonzero_terms() as u64 + worst(t, *on_true).max(worst(t, *on_false)),
            }
        }
        worst(self, 0)
    }

    pub fn mac_per_episode(&self, episode_length: u64) -> u64 {
        self.mac_count() * episode_length
    }

    pub fn serialize(&self) -> String {
        text::serialize(self)
    }

    /// Serialization with every Q-value masked, for structure comparisons.
    pub fn structure_string(&self) -> String {
        text::serialize_structure(self)
    }
}

pub(crate) fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in q.iter().enumerate().skip(1) {
        if *v > q[best] {
            best = i;
        }
    }
    best
}

fn max(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Leaf-wise arithmetic mean of structurally identical trees.
///
/// Each entry is computed as `v0 + sum(vi - v0) / n`, which returns `v0`
/// bit-for-bit when all inputs agree.
pub fn average_trees(trees: &[DecisionTree]) -> Result<DecisionTree> {
    let (first, rest) = trees
        .split_first()
        .ok_or_else(|| Error::IncompatibleTrees("no trees to average".into()))?;
    if let Some(i) = rest.iter().position(|t| !t.same_structure(first)) {
        return Err(Error::IncompatibleTrees(format!("tree {} differs in structure", i + 1)));
    }
    let n = trees.len() as f64;
    let mut out = first.clone();
    out.reset_visits();
    for leaf in 0..first.n_leaves() {
        let base = first.q(leaf).to_vec();
        let q = out.q_mut(leaf);
        for (a, v0) in base.iter().enumerate() {
            let dev: f64 = rest.iter().map(|t| t.q(leaf)[a] - v0).sum();
            q[a] = v0 + dev / n;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::{self, Domain};
    use rand::Rng;
    use proptest::prelude::*;

    fn published_pendulum() -> DecisionTree {
        DecisionTree::new(
            4,
            7,
            Expr::split(
                vec![-0.224, -5.024, -0.684, -1.678],
                0.285,
                Expr::leaf(vec![]),
                Expr::leaf(vec![]),
            ),
        )
        .unwrap()
    }

    fn stump(weights: Vec<f64>, bias: f64, qt: Vec<f64>, qf: Vec<f64>) -> DecisionTree {
        let n = weights.len();
        let k = qt.len();
        DecisionTree::new(n, k, Expr::split(weights, bias, Expr::leaf(qt), Expr::leaf(qf))).unwrap()
    }

    #[test]
    fn route_published_split_at_origin_goes_true() {
        let t = published_pendulum();
        assert_eq!(t.route(&[0.0; 4]).unwrap(), 0);
    }

    #[test]
    fn strict_inequality_sends_ties_false() {
        let t = stump(vec![0.0, 0.0], 0.0, vec![0.0], vec![0.0]);
        for s in [[0.0, 0.0], [5.0, -3.0], [1e9, 1e-9]] {
            assert_eq!(t.route(&s).unwrap(), 1);
        }
    }

    #[test]
    fn single_leaf_routes_everything_to_it() {
        let t = DecisionTree::leaf(3, 2, vec![]).unwrap();
        assert_eq!(t.route(&[1.0, -2.0, 3.0]).unwrap(), 0);
        assert_eq!(t.mac_count(), 0);
    }

    #[test]
    fn route_rejects_bad_observations() {
        let t = published_pendulum();
        assert!(matches!(t.route(&[0.0, f64::NAN, 0.0, 0.0]), Err(Error::InvalidObservation(_))));
        assert!(matches!(t.route(&[0.0; 3]), Err(Error::InvalidObservation(_))));
    }

    #[test]
    fn greedy_argmax_and_ties() {
        let t = DecisionTree::leaf(1, 3, vec![0.2, 0.9, -1.0]).unwrap();
        let mut rng = seeds::stream(0, Domain::Aux, 0, 0);
        let p = QLearnParams { epsilon: 0.0, ..Default::default() };
        assert_eq!(t.act(&[0.0], &p, &mut rng).unwrap(), 1);
        let t = DecisionTree::leaf(1, 2, vec![0.5, 0.5]).unwrap();
        assert_eq!(t.act(&[0.0], &p, &mut rng).unwrap(), 0);
        assert_eq!(t.greedy_action(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let k = 4;
        let t = DecisionTree::leaf(1, k, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let mut rng = seeds::stream(3, Domain::Aux, 0, 0);
        let p = QLearnParams { epsilon: 1.0, ..Default::default() };
        let n = 10_000;
        let mut counts = vec![0usize; k];
        for _ in 0..n {
            counts[t.act(&[0.0], &p, &mut rng).unwrap()] += 1;
        }
        let pk = 1.0 / k as f64;
        let sigma = (n as f64 * pk * (1.0 - pk)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * pk).abs() < 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn q_update_formula() {
        // s routes left (x < 0.5), s' routes right.
        let mut t = stump(vec![1.0], 0.5, vec![0.0, 0.0], vec![0.5, 0.1]);
        let p = QLearnParams::default();
        let tr = Transition {
            s: vec![0.0],
            a: 1,
            r: 1.0,
            s_next: vec![1.0],
            done: false,
        };
        t.q_update(&tr, &p).unwrap();
        let expected = 0.0 + 0.1 * (1.0 + 0.9 * 0.5 - 0.0);
        assert!((t.q(0)[1] - 0.145).abs() < 1e-15);
        assert_eq!(t.q(0)[1], expected);
        assert_eq!(t.q(0)[0], 0.0);
        assert_eq!(t.q(1), &[0.5, 0.1]);
    }

    #[test]
    fn q_update_zero_target_is_fixed_point() {
        let mut t = DecisionTree::leaf(1, 2, vec![0.0, 0.0]).unwrap();
        let tr = Transition {
            s: vec![0.0],
            a: 0,
            r: 0.0,
            s_next: vec![0.0],
            done: false,
        };
        t.q_update(&tr, &QLearnParams::default()).unwrap();
        assert_eq!(t.q(0), &[0.0, 0.0]);
    }

    #[test]
    fn q_update_terminal_drops_bootstrap() {
        let mut t = stump(vec![1.0], 0.5, vec![0.0], vec![100.0]);
        let tr = Transition {
            s: vec![0.0],
            a: 0,
            r: 1.0,
            // would bootstrap from 100 if not terminal; not even checked
            s_next: vec![f64::NAN],
            done: true,
        };
        t.q_update(&tr, &QLearnParams::default()).unwrap();
        assert!((t.q(0)[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn q_update_rejects_bad_action() {
        let mut t = DecisionTree::leaf(1, 2, vec![]).unwrap();
        let tr = Transition {
            s: vec![0.0],
            a: 2,
            r: 0.0,
            s_next: vec![0.0],
            done: true,
        };
        assert!(matches!(t.q_update(&tr, &QLearnParams::default()), Err(Error::InvalidAction { .. })));
    }

    #[test]
    fn averaging() {
        let a = DecisionTree::leaf(1, 2, vec![0.0, 2.0]).unwrap();
        let b = DecisionTree::leaf(1, 2, vec![2.0, 4.0]).unwrap();
        assert_eq!(average_trees(&[a.clone(), b]).unwrap().q(0), &[1.0, 3.0]);
        assert_eq!(average_trees(std::slice::from_ref(&a)).unwrap().q(0), a.q(0));

        let three: Vec<_> = [0.3, 0.6, 0.9]
            .iter()
            .map(|v| DecisionTree::leaf(1, 1, vec![*v]).unwrap())
            .collect();
        assert!((average_trees(&three).unwrap().q(0)[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn averaging_rejects_mismatched_structure() {
        let a = stump(vec![1.0], 0.5, vec![0.0], vec![0.0]);
        let b = stump(vec![1.0], 0.6, vec![0.0], vec![0.0]);
        assert!(matches!(average_trees(&[a.clone(), b]), Err(Error::IncompatibleTrees(_))));
        assert!(matches!(average_trees(&[]), Err(Error::IncompatibleTrees(_))));
        let leaf = DecisionTree::leaf(1, 1, vec![]).unwrap();
        assert!(average_trees(&[a, leaf]).is_err());
    }

    #[test]
    fn mac_counts() {
        let t = published_pendulum();
        assert_eq!(t.mac_count(), 4);
        assert_eq!(t.mac_per_episode(1000), 4000);
        let reacher = stump(
            vec![0.3, 9.3, 0.0, 0.0, -9.8, 5.1, 0.2, 1.1, -5.1, 0.0, 0.0],
            0.0,
            vec![0.0],
            vec![0.0],
        );
        assert_eq!(reacher.mac_count(), 7);
        // worst case takes the deeper, denser side
        let deep = DecisionTree::new(
            2,
            1,
            Expr::split(
                vec![1.0, 0.0],
                0.0,
                Expr::leaf(vec![]),
                Expr::split(vec![1.0, 1.0], 0.0, Expr::leaf(vec![]), Expr::leaf(vec![])),
            ),
        )
        .unwrap();
        assert_eq!(deep.mac_count(), 3);
    }

    #[test]
    fn visit_counters_follow_the_path() {
        let mut t = stump(vec![1.0], 0.5, vec![0.0], vec![0.0]);
        for x in [0.0, 0.1, 1.0] {
            t.route_counted(&[x]).unwrap();
        }
        assert_eq!(t.visits(), &[3, 2, 1]);
        assert_eq!(t.visits_csv(), "node_id,visits,parent_id\n0,3,-1\n1,2,0\n2,1,0\n");
        t.reset_visits();
        assert_eq!(t.visits(), &[0, 0, 0]);
    }

    #[test]
    fn q_init_is_seeded_and_bounded() {
        let mut a = published_pendulum();
        let mut b = published_pendulum();
        a.init_q_uniform(&mut seeds::stream(9, Domain::QInit, 0, 0));
        b.init_q_uniform(&mut seeds::stream(9, Domain::QInit, 0, 0));
        assert_eq!(a, b);
        assert!((0..2).all(|l| a.q(l).iter().all(|v| (-1.0..1.0).contains(v))));
    }

    fn random_tree(seed: u64) -> DecisionTree {
        let mut rng = seeds::stream(seed, Domain::Aux, 1, 0);
        let n_inputs = rng.gen_range(1..5);
        let n_actions = rng.gen_range(1..5);
        fn grow(rng: &mut seeds::Rng, n: usize, depth: usize) -> Expr {
            if depth == 0 || rng.gen_bool(0.4) {
                Expr::leaf(vec![])
            } else {
                let w = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
                Expr::split(w, rng.gen_range(-10.0..10.0), grow(rng, n, depth - 1), grow(rng, n, depth - 1))
            }
        }
        let expr = grow(&mut rng, n_inputs, 4);
        let mut t = DecisionTree::new(n_inputs, n_actions, expr).unwrap();
        t.init_q_uniform(&mut rng);
        t
    }

    proptest! {
        #[test]
        fn q_update_touches_one_entry(seed in 0u64..500, s in -5.0f64..5.0, sn in -5.0f64..5.0, r in -2.0f64..2.0, done: bool) {
            let mut t = random_tree(seed);
            let n = t.n_inputs();
            let a = (seed as usize) % t.n_actions();
            let before = t.clone();
            let tr = Transition { s: vec![s; n], a, r, s_next: vec![sn; n], done };
            t.q_update(&tr, &QLearnParams::default()).unwrap();
            let leaf = t.route(&tr.s).unwrap();
            for l in 0..t.n_leaves() {
                for k in 0..t.n_actions() {
                    if (l, k) != (leaf, a) {
                        prop_assert_eq!(t.q(l)[k].to_bits(), before.q(l)[k].to_bits());
                    }
                }
            }
        }

        #[test]
        fn averaging_is_idempotent_and_order_free(seed in 0u64..500, perturb in -1.0f64..1.0) {
            let t = random_tree(seed);
            let avg = average_trees(&[t.clone(), t.clone(), t.clone()]).unwrap();
            prop_assert_eq!(&avg.to_expr(), &t.to_expr());

            let mut u = t.clone();
            for l in 0..u.n_leaves() { u.q_mut(l)[0] += perturb; }
            let mut w = t.clone();
            for l in 0..w.n_leaves() { w.q_mut(l)[0] -= 0.5 * perturb; }
            let x = average_trees(&[t.clone(), u.clone(), w.clone()]).unwrap();
            let y = average_trees(&[w, t, u]).unwrap();
            for l in 0..x.n_leaves() {
                for k in 0..x.n_actions() {
                    prop_assert!((x.q(l)[k] - y.q(l)[k]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn child_visits_never_exceed_parent(seed in 0u64..200) {
            let mut t = random_tree(seed);
            let mut rng = seeds::stream(seed, Domain::Aux, 2, 0);
            for _ in 0..200 {
                let s: Vec<f64> = (0..t.n_inputs()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                t.route_counted(&s).unwrap();
            }
            for id in 1..t.n_nodes() {
                let p = t.parent(id).unwrap();
                prop_assert!(t.visits()[id] <= t.visits()[p]);
            }
            prop_assert_eq!(t.visits()[0], 200);
        }
    }

    pub(crate) fn fuzz_tree(seed: u64) -> DecisionTree {
        random_tree(seed)
    }
}
