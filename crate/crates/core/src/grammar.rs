//! Grammar and genotype-to-phenotype translation.
//!
//! A [`Grammar`] is a list of named rules, each holding an ordered list of
//! productions. Translation performs a leftmost derivation: the first
//! unexpanded nonterminal is replaced by `options[gene % options.len()]`,
//! consuming one gene per expansion.

use std::fmt;

use rand::Rng;

use crate::dtree::{DecisionTree, Expr, ObliqueSplit};
use crate::error::{Error, Result};

/// Lowest and highest coefficient on the grid, in tenths.
pub const COEF_MIN_TENTHS: i16 = -100;
pub const COEF_MAX_TENTHS: i16 = 100;

/// A coefficient stored as an integer number of 0.1 steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tenths(pub i16);

impl Tenths {
    pub fn to_f64(self) -> f64 {
        f64::from(self.0) / 10.0
    }
}

impl fmt::Display for Tenths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{}{}.{}", sign, abs / 10, abs % 10)
    }
}

/// Terminal tokens of the oblique tree grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    NodeOpen,
    Comma,
    Close,
    /// Observation variable, zero-based.
    Var(usize),
    Plus,
    Less,
    Leaf,
    /// The literal `0` option of the `const` rule.
    Zero,
    Coef(Tenths),
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::NodeOpen => f.write_str("Node("),
            Terminal::Comma => f.write_str(", "),
            Terminal::Close => f.write_str(")"),
            Terminal::Var(i) => write!(f, "·x{}", i + 1),
            Terminal::Plus => f.write_str(" + "),
            Terminal::Less => f.write_str(" < "),
            Terminal::Leaf => f.write_str("Leaf"),
            Terminal::Zero => f.write_str("0"),
            Terminal::Coef(t) => t.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    T(Terminal),
    /// Index of a rule in [`Grammar::rules`].
    N(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub options: Vec<Vec<Symbol>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    rules: Vec<Rule>,
    start: usize,
}

impl Grammar {
    /// Builds a grammar from `(name, options)` pairs. Nonterminal references
    /// inside options are rule indices into the same list.
    pub fn new(rules: Vec<Rule>, start: usize) -> Result<Self> {
        if start >= rules.len() {
            return Err(Error::IndexOutOfRange(format!("start symbol {start}")));
        }
        for rule in &rules {
            if rule.options.is_empty() {
                return Err(Error::ContractViolation(format!("rule <{}> has no options", rule.name)));
            }
            for sym in rule.options.iter().flatten() {
                if let Symbol::N(idx) = sym {
                    if *idx >= rules.len() {
                        return Err(Error::ContractViolation(format!(
                            "rule <{}> references undefined nonterminal {idx}",
                            rule.name
                        )));
                    }
                }
            }
        }
        Ok(Grammar { rules, start })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn start_symbol(&self) -> &str {
        &self.rules[self.start].name
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Number of observation variables the `condition` rule spans, if present.
    pub fn n_inputs(&self) -> Option<usize> {
        let cond = self.rule("condition")?;
        Some(
            cond.options[0]
                .iter()
                .filter(|s| matches!(s, Symbol::T(Terminal::Var(_))))
                .count(),
        )
    }
}

/// The oblique decision-tree grammar over `n_inputs` observation variables:
///
/// ```text
/// start     -> <if>
/// if        -> Node(<condition>, <action>, <action>)
/// condition -> <const>·x1 + ... + <const>·xN < <const>
/// action    -> Leaf | <if>
/// const     -> 0 | <nonzero>
/// nonzero   -> -10.0 | -9.9 | ... | 10.0
/// ```
pub fn default_oblique_grammar(n_inputs: usize) -> Result<Grammar> {
    if n_inputs == 0 {
        return Err(Error::InvalidDimension("grammar needs at least one input".into()));
    }
    const START: usize = 0;
    const IF: usize = 1;
    const CONDITION: usize = 2;
    const ACTION: usize = 3;
    const CONST: usize = 4;
    const NONZERO: usize = 5;
    use Symbol::{N, T};

    let mut condition = Vec::with_capacity(3 * n_inputs + 2);
    for i in 0..n_inputs {
        if i > 0 {
            condition.push(T(Terminal::Plus));
        }
        condition.push(N(CONST));
        condition.push(T(Terminal::Var(i)));
    }
    condition.push(T(Terminal::Less));
    condition.push(N(CONST));

    let nonzero = (COEF_MIN_TENTHS..=COEF_MAX_TENTHS)
        .map(|t| vec![T(Terminal::Coef(Tenths(t)))])
        .collect();

    let rule = |name: &str, options: Vec<Vec<Symbol>>| Rule {
        name: name.to_string(),
        options,
    };
    Grammar::new(
        vec![
            rule("start", vec![vec![N(IF)]]),
            rule(
                "if",
                vec![vec![
                    T(Terminal::NodeOpen),
                    N(CONDITION),
                    T(Terminal::Comma),
                    N(ACTION),
                    T(Terminal::Comma),
                    N(ACTION),
                    T(Terminal::Close),
                ]],
            ),
            rule("condition", vec![condition]),
            rule("action", vec![vec![T(Terminal::Leaf)], vec![N(IF)]]),
            rule("const", vec![vec![T(Terminal::Zero)], vec![N(NONZERO)]]),
            rule("nonzero", nonzero),
        ],
        START,
    )
}

/// Fixed-length integer vector searched by evolution.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    pub genes: Vec<u32>,
}

impl Genotype {
    pub fn new(genes: Vec<u32>) -> Self {
        Genotype { genes }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, gene_value_max: u32, rng: &mut R) -> Self {
        Genotype {
            genes: (0..len).map(|_| rng.gen_range(0..gene_value_max)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

/// A fully expanded derivation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Phenotype {
    pub tokens: Vec<Terminal>,
    pub genes_used: usize,
}

impl fmt::Display for Phenotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tokens {
            t.fmt(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TranslationResult {
    Complete(Phenotype),
    Incomplete { unexpanded: usize },
}

impl TranslationResult {
    pub fn is_complete(&self) -> bool {
        matches!(self, TranslationResult::Complete(_))
    }

    pub fn phenotype(&self) -> Option<&Phenotype> {
        match self {
            TranslationResult::Complete(p) => Some(p),
            TranslationResult::Incomplete { .. } => None,
        }
    }
}

/// Leftmost derivation driven by the genotype.
///
/// The working string is kept as the emitted terminal prefix plus a stack
/// holding the unexpanded suffix in reverse, so the top of the stack (after
/// flushing terminals) is always the first unexpanded nonterminal.
pub fn translate(genotype: &Genotype, grammar: &Grammar) -> TranslationResult {
    let mut tokens = Vec::new();
    let mut stack = vec![Symbol::N(grammar.start)];
    let mut genes = genotype.genes.iter();
    let mut used = 0;
    loop {
        while let Some(Symbol::T(t)) = stack.last() {
            tokens.push(*t);
            stack.pop();
        }
        let Some(&Symbol::N(rule)) = stack.last() else {
            return TranslationResult::Complete(Phenotype {
                tokens,
                genes_used: used,
            });
        };
        let Some(&gene) = genes.next() else {
            let unexpanded = stack.iter().filter(|s| matches!(s, Symbol::N(_))).count();
            return TranslationResult::Incomplete { unexpanded };
        };
        used += 1;
        stack.pop();
        let options = &grammar.rules[rule].options;
        let choice = &options[gene as usize % options.len()];
        stack.extend(choice.iter().rev().copied());
    }
}

impl Phenotype {
    /// Builds an executable tree. Leaf Q-vectors are drawn from U(-1, 1) in
    /// leaf-id order.
    pub fn to_tree<R: Rng + ?Sized>(&self, n_inputs: usize, n_actions: usize, rng: &mut R) -> Result<DecisionTree> {
        let mut parser = TokenParser {
            tokens: &self.tokens,
            pos: 0,
            n_inputs,
        };
        let expr = parser.action()?;
        if parser.pos != self.tokens.len() {
            return Err(parser.err("trailing tokens"));
        }
        let mut tree = DecisionTree::new(n_inputs, n_actions, expr)?;
        tree.init_q_uniform(rng);
        Ok(tree)
    }
}

struct TokenParser<'a> {
    tokens: &'a [Terminal],
    pos: usize,
    n_inputs: usize,
}

impl TokenParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: format!("phenotype token stream: {msg}"),
        }
    }

    fn next(&mut self) -> Option<Terminal> {
        let t = self.tokens.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Terminal) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => Err(self.err(&format!("expected `{want}`"))),
        }
    }

    fn coef(&mut self) -> Result<f64> {
        match self.next() {
            Some(Terminal::Zero) => Ok(0.0),
            Some(Terminal::Coef(t)) => Ok(t.to_f64()),
            _ => Err(self.err("expected coefficient")),
        }
    }

    fn action(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Terminal::Leaf) => Ok(Expr::Leaf { q: Vec::new() }),
            Some(Terminal::NodeOpen) => {
                let mut weights = Vec::with_capacity(self.n_inputs);
                for i in 0..self.n_inputs {
                    if i > 0 {
                        self.expect(Terminal::Plus)?;
                    }
                    weights.push(self.coef()?);
                    self.expect(Terminal::Var(i))?;
                }
                self.expect(Terminal::Less)?;
                let bias = self.coef()?;
                self.expect(Terminal::Comma)?;
                let on_true = self.action()?;
                self.expect(Terminal::Comma)?;
                let on_false = self.action()?;
                self.expect(Terminal::Close)?;
                Ok(Expr::Split {
                    split: ObliqueSplit { weights, bias },
                    on_true: Box::new(on_true),
                    on_false: Box::new(on_false),
                })
            }
            _ => Err(self.err("expected `Leaf` or `Node(`")),
        }
    }
}
