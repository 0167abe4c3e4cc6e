//! Canonical text form of a tree.
//!
//! ```text
//! tree inputs=2 actions=3
//! Node(0.5*x1 + -1.2*x2 < 0.0, Leaf#0[q=1.0000000000000000e0, ...], Leaf#1[q=...])
//! ```
//!
//! Coefficients use the shortest representation that parses back to the same
//! value (always with a decimal point); Q-values are printed with 17
//! significant digits. Lines starting with `#` are comments.

use std::fmt::Write;

use super::{DecisionTree, Expr, Node, ObliqueSplit};
use crate::error::{Error, Result};

pub(super) fn serialize(tree: &DecisionTree) -> String {
    render(tree, true)
}

pub(super) fn serialize_structure(tree: &DecisionTree) -> String {
    render(tree, false)
}

fn render(tree: &DecisionTree, with_q: bool) -> String {
    let mut out = format!("tree inputs={} actions={}\n", tree.n_inputs, tree.n_actions);
    write_node(tree, 0, with_q, &mut out);
    out.push('\n');
    out
}

fn write_node(tree: &DecisionTree, id: usize, with_q: bool, out: &mut String) {
    match &tree.nodes[id] {
        Node::Leaf { leaf_id, q } => {
            write!(out, "Leaf#{leaf_id}").unwrap();
            if with_q {
                out.push_str("[q=");
                for (i, v) in q.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write!(out, "{v:.16e}").unwrap();
                }
                out.push(']');
            }
        }
        Node::Split {
            split,
            on_true,
            on_false,
        } => {
            out.push_str("Node(");
            for (i, w) in split.weights.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                write!(out, "{w:?}*x{}", i + 1).unwrap();
            }
            write!(out, " < {:?}, ", split.bias).unwrap();
            write_node(tree, *on_true, with_q, out);
            out.push_str(", ");
            write_node(tree, *on_false, with_q, out);
            out.push(')');
        }
    }
}

pub fn parse(text: &str) -> Result<DecisionTree> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    p.keyword("tree")?;
    p.skip_ws();
    p.keyword("inputs=")?;
    let n_inputs = p.integer()?;
    p.skip_ws();
    p.keyword("actions=")?;
    let n_actions = p.integer()?;
    p.skip_ws();
    let mut next_leaf = 0;
    let expr = p.node(n_inputs, &mut next_leaf)?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.err("unexpected trailing input"));
    }
    DecisionTree::new(n_inputs, n_actions, expr).map_err(|e| Error::Parse {
        pos: text.len(),
        msg: e.to_string(),
    })
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                return;
            }
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        if self.rest().starts_with(kw) {
            self.pos += kw.len();
            Ok(())
        } else {
            Err(self.err(&format!("expected `{kw}`")))
        }
    }

    fn token(&mut self, kw: &str) -> Result<()> {
        self.skip_ws();
        self.keyword(kw)
    }

    fn integer(&mut self) -> Result<usize> {
        let len = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        let v = self.rest()[..len].parse().map_err(|_| self.err("expected integer"))?;
        self.pos += len;
        Ok(v)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let len = self
            .rest()
            .bytes()
            .take_while(|b| b.is_ascii_digit() || matches!(b, b'-' | b'+' | b'.' | b'e' | b'E'))
            .count();
        let v: f64 = self.rest()[..len].parse().map_err(|_| self.err("expected number"))?;
        if !v.is_finite() {
            return Err(self.err("non-finite number"));
        }
        self.pos += len;
        Ok(v)
    }

    fn node(&mut self, n_inputs: usize, next_leaf: &mut usize) -> Result<Expr> {
        self.skip_ws();
        if self.rest().starts_with("Leaf") {
            self.keyword("Leaf#")?;
            let at = self.pos;
            let id = self.integer()?;
            if id != *next_leaf {
                self.pos = at;
                return Err(self.err(&format!("leaf id {id} out of order, expected {}", *next_leaf)));
            }
            *next_leaf += 1;
            let mut q = Vec::new();
            if self.rest().starts_with('[') {
                self.keyword("[q=")?;
                loop {
                    q.push(self.number()?);
                    self.skip_ws();
                    if self.rest().starts_with(',') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.token("]")?;
            }
            return Ok(Expr::Leaf { q });
        }
        self.keyword("Node(")?;
        let mut weights = Vec::with_capacity(n_inputs);
        for i in 1..=n_inputs {
            if i > 1 {
                self.token("+")?;
            }
            weights.push(self.number()?);
            self.token(&format!("*x{i}"))?;
        }
        self.token("<")?;
        let bias = self.number()?;
        self.token(",")?;
        let on_true = self.node(n_inputs, next_leaf)?;
        self.token(",")?;
        let on_false = self.node(n_inputs, next_leaf)?;
        self.token(")")?;
        Ok(Expr::Split {
            split: ObliqueSplit { weights, bias },
            on_true: Box::new(on_true),
            on_false: Box::new(on_false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtree::tests::fuzz_tree;

    #[test]
    fn single_leaf_round_trip() {
        let t = DecisionTree::leaf(2, 3, vec![0.1, -2.5, 1.0 / 3.0]).unwrap();
        let s = t.serialize();
        assert!(s.contains("Leaf#0[q="));
        assert_eq!(parse(&s).unwrap(), t);
    }

    #[test]
    fn canonical_split_text() {
        let t = DecisionTree::new(
            2,
            1,
            Expr::split(vec![0.5, -1.2], 0.0, Expr::leaf(vec![1.0]), Expr::leaf(vec![-0.5])),
        )
        .unwrap();
        assert_eq!(
            t.serialize(),
            "tree inputs=2 actions=1\nNode(0.5*x1 + -1.2*x2 < 0.0, Leaf#0[q=1.0000000000000000e0], Leaf#1[q=-5.0000000000000000e-1])\n"
        );
        assert_eq!(
            t.structure_string(),
            "tree inputs=2 actions=1\nNode(0.5*x1 + -1.2*x2 < 0.0, Leaf#0, Leaf#1)\n"
        );
    }

    #[test]
    fn fuzzed_trees_round_trip() {
        for seed in 0..1000 {
            let t = fuzz_tree(seed);
            let back = parse(&t.serialize()).unwrap();
            assert_eq!(back, t, "seed {seed}");
        }
    }

    #[test]
    fn comments_and_missing_q() {
        let t = parse("# hand written\ntree inputs=1 actions=2\n  Node(1.0*x1 < 0.5,\n Leaf#0, Leaf#1)\n").unwrap();
        assert_eq!(t.q(1), &[0.0, 0.0]);
    }

    #[test]
    fn errors_carry_positions() {
        let cases = [
            ("tree inputs=1 actions=2\nNode(1.0*x2 < 0.5, Leaf#0, Leaf#1)", 32),
            ("tree inputs=1 actions=2\nNode(1.0*x1 < 0.5, Leaf#1, Leaf#0)", 48),
            ("tree inputs=1 actions=2\nLeaf#0 junk", 31),
            ("tree inputs=one", 12),
        ];
        for (src, pos) in cases {
            match parse(src) {
                Err(Error::Parse { pos: p, .. }) => assert_eq!(p, pos, "{src}"),
                other => panic!("expected parse error for {src:?}, got {other:?}"),
            }
        }
        assert!(matches!(
            parse("tree inputs=1 actions=2\nLeaf#0[q=1.0]"),
            Err(Error::Parse { .. })
        ));
    }
}
