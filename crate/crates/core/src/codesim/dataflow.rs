//! Def-use edges extracted from a syntax tree.
//!
//! Variables are renamed to positional placeholders (`v0`, `v1`, ... in
//! order of first definition) so that consistent renaming does not change
//! the edge set. An edge links a use to the most recent definition of the
//! same variable in source order.

use std::collections::HashMap;

use super::parser::Node;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub var: String,
    /// How many times the variable had been redefined before this def.
    pub def_ordinal: usize,
    pub def_kind: &'static str,
    /// Kind of the node the use sits in.
    pub use_context: &'static str,
}

#[derive(Default)]
struct Flow {
    vars: HashMap<String, (usize, usize, &'static str)>,
    next_var: usize,
    edges: Vec<Edge>,
}

impl Flow {
    fn define(&mut self, name: &str, kind: &'static str) {
        let next = self.next_var;
        let entry = self.vars.entry(name.to_string()).or_insert((next, usize::MAX, kind));
        if entry.0 == next {
            self.next_var += 1;
        }
        entry.1 = entry.1.wrapping_add(1);
        entry.2 = kind;
    }

    fn use_(&mut self, name: &str, context: &'static str) {
        if let Some(&(idx, ordinal, kind)) = self.vars.get(name) {
            self.edges.push(Edge {
                var: format!("v{idx}"),
                def_ordinal: ordinal,
                def_kind: kind,
                use_context: context,
            });
        }
    }

    fn visit(&mut self, node: &Node, parent: &'static str) {
        let is_var = |n: &Node| n.kind == "identifier" && n.field.is_none();
        match node.kind {
            "identifier" => {
                if node.field.is_none() {
                    self.use_(node.text.as_deref().unwrap_or(""), parent);
                }
            }
            "variable_declarator" => {
                for c in &node.children[1..] {
                    self.visit(c, node.kind);
                }
                self.define_leaf(&node.children[0], "declarator");
            }
            "formal_parameter" | "spread_parameter" | "catch_formal_parameter" => {
                for c in &node.children {
                    if c.kind == "identifier" && c.field == Some("name") {
                        self.define_leaf(c, "parameter");
                    }
                }
            }
            "enhanced_for_statement" => {
                let (body, head) = node.children.split_last().expect("for body");
                for c in head.iter().filter(|c| c.field.is_none()) {
                    self.visit(c, node.kind);
                }
                for c in head.iter().filter(|c| c.field == Some("name")) {
                    self.define_leaf(c, "foreach");
                }
                self.visit(body, node.kind);
            }
            "lambda_expression" | "inferred_parameters" => {
                for c in &node.children {
                    if c.field == Some("parameter") {
                        self.define_leaf(c, "parameter");
                    } else {
                        self.visit(c, node.kind);
                    }
                }
            }
            "assignment_expression" => {
                let (lhs, rhs) = (&node.children[0], &node.children[1]);
                let compound = node.text.as_deref() != Some("=");
                if is_var(lhs) {
                    if compound {
                        self.visit(lhs, node.kind);
                    }
                    self.visit(rhs, node.kind);
                    self.define_leaf(lhs, "assignment");
                } else {
                    self.visit(lhs, node.kind);
                    self.visit(rhs, node.kind);
                }
            }
            "update_expression" if is_var(&node.children[0]) => {
                self.visit(&node.children[0], node.kind);
                self.define_leaf(&node.children[0], "update");
            }
            _ => {
                for c in &node.children {
                    self.visit(c, node.kind);
                }
            }
        }
    }

    fn define_leaf(&mut self, leaf: &Node, kind: &'static str) {
        if let Some(name) = leaf.text.as_deref() {
            self.define(name, kind);
        }
    }
}

/// Def-use edges in source order.
pub fn edges(root: &Node) -> Vec<Edge> {
    let mut flow = Flow::default();
    flow.visit(root, "program");
    flow.edges
}

/// Fraction of reference edges also present in the candidate, counting
/// multiplicity. `None` when the reference has no edges.
pub fn dataflow_match(candidate: &Node, reference: &Node) -> Option<f64> {
    let refs = edges(reference);
    if refs.is_empty() {
        return None;
    }
    let mut pool: HashMap<Edge, usize> = HashMap::new();
    for e in edges(candidate) {
        *pool.entry(e).or_insert(0) += 1;
    }
    let mut matched = 0usize;
    for e in &refs {
        if let Some(n) = pool.get_mut(e).filter(|n| **n > 0) {
            *n -= 1;
            matched += 1;
        }
    }
    Some(matched as f64 / refs.len() as f64)
}
