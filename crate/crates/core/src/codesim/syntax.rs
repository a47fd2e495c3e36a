//! Subtree matching between two syntax trees.

use std::collections::HashMap;

use super::parser::Node;

/// Shape of one internal node: its kind and the ordered kinds of its named
/// children.
fn signature(node: &Node) -> String {
    let mut s = String::from(node.kind);
    s.push('(');
    for (i, c) in node.children.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(c.kind);
    }
    s.push(')');
    s
}

/// Multiset of internal-node signatures.
pub fn subtrees(root: &Node) -> HashMap<String, usize> {
    let mut out = HashMap::new();
    root.walk(&mut |n| {
        if !n.leaf && !(n.kind == "program" && n.children.is_empty()) {
            *out.entry(signature(n)).or_insert(0) += 1;
        }
    });
    out
}

/// Fraction of reference subtrees also found in the candidate, counting
/// multiplicity. `None` when the reference has no subtrees.
pub fn syntax_match(candidate: &Node, reference: &Node) -> Option<f64> {
    let refs = subtrees(reference);
    let total: usize = refs.values().sum();
    if total == 0 {
        return None;
    }
    let cand = subtrees(candidate);
    let matched: usize = refs
        .iter()
        .map(|(sig, n)| (*n).min(cand.get(sig).copied().unwrap_or(0)))
        .sum();
    Some(matched as f64 / total as f64)
}
