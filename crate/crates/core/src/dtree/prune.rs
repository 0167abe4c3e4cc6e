//! Visit-ratio pruning.
//!
//! A non-root node `n` with parent `p` is removed when `v_n / v_p` falls
//! below the threshold; `p` is then replaced by the sibling subtree of `n`.
//! Removal repeats until no node qualifies, after which any split whose two
//! children are leaves with the same greedy action collapses into one leaf.

use std::fmt;

use super::{argmax, DecisionTree, Expr, Node, ObliqueSplit};
use crate::error::{Error, Result};

pub const DEFAULT_PRUNE_THRESHOLD: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    /// Root of the removed subtree, as a node id of the input tree.
    pub node_id: usize,
    pub ratio: f64,
    /// The bypassed parent, as a node id of the input tree.
    pub bypassed_parent: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeRecord {
    /// Split collapsed into a leaf, as a node id of the input tree.
    pub node_id: usize,
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PruneReport {
    pub removed: Vec<Removal>,
    pub merged: Vec<MergeRecord>,
    pub nodes_before: usize,
    pub nodes_after: usize,
}

impl PruneReport {
    pub fn nodes_removed(&self) -> usize {
        self.nodes_before - self.nodes_after
    }
}

impl fmt::Display for PruneReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} nodes removed", self.nodes_removed())?;
        writeln!(f, "nodes_before: {}", self.nodes_before)?;
        writeln!(f, "nodes_after: {}", self.nodes_after)?;
        for r in &self.removed {
            writeln!(
                f,
                "removed node {} (ratio {:.6}), bypassed parent {}",
                r.node_id, r.ratio, r.bypassed_parent
            )?;
        }
        for m in &self.merged {
            writeln!(f, "merged node {} into a leaf with action {}", m.node_id, m.action)?;
        }
        Ok(())
    }
}

enum PNode {
    Split {
        id: usize,
        visits: u64,
        split: ObliqueSplit,
        on_true: Box<PNode>,
        on_false: Box<PNode>,
    },
    Leaf {
        id: usize,
        visits: u64,
        q: Vec<f64>,
    },
}

impl PNode {
    fn build(tree: &DecisionTree, visits: &[u64], id: usize) -> PNode {
        match &tree.nodes[id] {
            Node::Leaf { q, .. } => PNode::Leaf {
                id,
                visits: visits[id],
                q: q.clone(),
            },
            Node::Split {
                split,
                on_true,
                on_false,
            } => PNode::Split {
                id,
                visits: visits[id],
                split: split.clone(),
                on_true: Box::new(PNode::build(tree, visits, *on_true)),
                on_false: Box::new(PNode::build(tree, visits, *on_false)),
            },
        }
    }

    fn id(&self) -> usize {
        match self {
            PNode::Split { id, .. } | PNode::Leaf { id, .. } => *id,
        }
    }

    fn visits(&self) -> u64 {
        match self {
            PNode::Split { visits, .. } | PNode::Leaf { visits, .. } => *visits,
        }
    }

    fn into_expr(self) -> Expr {
        match self {
            PNode::Leaf { q, .. } => Expr::Leaf { q },
            PNode::Split {
                split,
                on_true,
                on_false,
                ..
            } => Expr::Split {
                split,
                on_true: Box::new(on_true.into_expr()),
                on_false: Box::new(on_false.into_expr()),
            },
        }
    }
}

fn ratio(child: u64, parent: u64) -> f64 {
    if parent == 0 {
        0.0
    } else {
        child as f64 / parent as f64
    }
}

/// Applies one removal in preorder. Returns true if the tree changed.
fn remove_once(node: &mut PNode, threshold: f64, report: &mut PruneReport) -> bool {
    let PNode::Split {
        id,
        visits,
        on_true,
        on_false,
        ..
    } = node
    else {
        return false;
    };
    let (id, parent_visits) = (*id, *visits);
    let r_true = ratio(on_true.visits(), parent_visits);
    let r_false = ratio(on_false.visits(), parent_visits);
    let victim = if r_true < threshold {
        Some((true, r_true))
    } else if r_false < threshold {
        Some((false, r_false))
    } else {
        None
    };
    if let Some((true_side, r)) = victim {
        let removed = if true_side { &**on_true } else { &**on_false };
        report.removed.push(Removal {
            node_id: removed.id(),
            ratio: r,
            bypassed_parent: id,
        });
        let sibling = if true_side {
            std::mem::replace(&mut **on_false, PNode::Leaf { id: 0, visits: 0, q: vec![] })
        } else {
            std::mem::replace(&mut **on_true, PNode::Leaf { id: 0, visits: 0, q: vec![] })
        };
        *node = sibling;
        return true;
    }
    remove_once(on_true, threshold, report) || remove_once(on_false, threshold, report)
}

/// Collapses same-action leaf pairs bottom-up. Returns true if anything merged.
fn merge_leaves(node: &mut PNode, report: &mut PruneReport) -> bool {
    let PNode::Split {
        id,
        visits,
        on_true,
        on_false,
        ..
    } = node
    else {
        return false;
    };
    let mut changed = merge_leaves(on_true, report);
    changed |= merge_leaves(on_false, report);
    if let (PNode::Leaf { visits: vt, q: qt, .. }, PNode::Leaf { visits: vf, q: qf, .. }) = (&**on_true, &**on_false) {
        let action = argmax(qt);
        if action == argmax(qf) {
            let q = if vf > vt { qf.clone() } else { qt.clone() };
            report.merged.push(MergeRecord { node_id: *id, action });
            *node = PNode::Leaf { id: *id, visits: *visits, q };
            return true;
        }
    }
    changed
}

/// Prunes `tree` using per-node visit counts indexed by node id.
pub fn prune(tree: &DecisionTree, visits: &[u64], threshold: f64) -> Result<(DecisionTree, PruneReport)> {
    if visits.len() != tree.n_nodes() {
        return Err(Error::LengthMismatch {
            left: visits.len(),
            right: tree.n_nodes(),
        });
    }
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::ContractViolation(format!("prune threshold {threshold}")));
    }
    let mut root = PNode::build(tree, visits, 0);
    let mut report = PruneReport {
        nodes_before: tree.n_nodes(),
        ..Default::default()
    };
    while remove_once(&mut root, threshold, &mut report) {}
    while merge_leaves(&mut root, &mut report) {}
    let pruned = DecisionTree::new(tree.n_inputs, tree.n_actions, root.into_expr())?;
    report.nodes_after = pruned.n_nodes();
    Ok((pruned, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(a: usize) -> Expr {
        let mut q = vec![0.0; 3];
        q[a] = 1.0;
        Expr::leaf(q)
    }

    /// Node ids: 0 root, 1 inner split, 2 leaf(0), 3 leaf(1), 4 leaf(2).
    fn two_level() -> DecisionTree {
        DecisionTree::new(
            1,
            3,
            Expr::split(vec![1.0], 0.0, Expr::split(vec![1.0], -1.0, leaf(0), leaf(1)), leaf(2)),
        )
        .unwrap()
    }

    #[test]
    fn rarely_visited_child_bypasses_parent() {
        let t = two_level();
        // v(1) = 1000, v(2) = 3 -> ratio 0.003 < 0.005
        let (p, report) = prune(&t, &[2000, 1000, 3, 997, 1000], DEFAULT_PRUNE_THRESHOLD).unwrap();
        let expected = DecisionTree::new(1, 3, Expr::split(vec![1.0], 0.0, leaf(1), leaf(2))).unwrap();
        assert_eq!(p, expected);
        assert_eq!(
            report.removed,
            vec![Removal {
                node_id: 2,
                ratio: 0.003,
                bypassed_parent: 1
            }]
        );
        assert_eq!(report.nodes_removed(), 2);
    }

    #[test]
    fn well_visited_tree_is_unchanged() {
        let t = two_level();
        let (p, report) = prune(&t, &[2000, 1000, 5, 995, 1000], DEFAULT_PRUNE_THRESHOLD).unwrap();
        assert_eq!(p, t);
        assert!(report.removed.is_empty() && report.merged.is_empty());
    }

    #[test]
    fn single_leaf_is_unchanged() {
        let t = DecisionTree::leaf(2, 2, vec![0.3, 0.1]).unwrap();
        let (p, report) = prune(&t, &[0], DEFAULT_PRUNE_THRESHOLD).unwrap();
        assert_eq!(p, t);
        assert_eq!(report.nodes_removed(), 0);
        assert!(report.to_string().starts_with("0 nodes removed"));
    }

    #[test]
    fn unvisited_subtree_collapses_to_fixed_point() {
        let t = two_level();
        // The whole inner split is dead: removing it leaves leaf(2) at the root.
        let (p, report) = prune(&t, &[100, 0, 0, 0, 100], DEFAULT_PRUNE_THRESHOLD).unwrap();
        assert_eq!(p, DecisionTree::new(1, 3, leaf(2)).unwrap());
        assert_eq!(report.removed[0].node_id, 1);
        assert_eq!(report.removed[0].bypassed_parent, 0);
    }

    #[test]
    fn same_action_leaves_merge() {
        let t = DecisionTree::new(1, 3, Expr::split(vec![1.0], 0.0, leaf(2), leaf(2))).unwrap();
        let (p, report) = prune(&t, &[10, 5, 5], DEFAULT_PRUNE_THRESHOLD).unwrap();
        assert_eq!(p.n_nodes(), 1);
        assert_eq!(report.merged, vec![MergeRecord { node_id: 0, action: 2 }]);
    }

    #[test]
    fn rejects_wrong_visit_length() {
        assert!(prune(&two_level(), &[1, 2], DEFAULT_PRUNE_THRESHOLD).is_err());
    }
}
