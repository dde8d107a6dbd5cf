use chainsdn_core::abe::AccessTree;

/// Every tree of depth ≤ `depth` over `attrs` whose gates are binary AND/OR
/// with ordered children.
pub fn all_trees(attrs: &[&str], depth: usize) -> Vec<AccessTree> {
    let leaves: Vec<AccessTree> = attrs.iter().map(|a| AccessTree::leaf(*a)).collect();
    if depth == 0 {
        return leaves;
    }
    let sub = all_trees(attrs, depth - 1);
    let mut out = leaves;
    for l in &sub {
        for r in &sub {
            out.push(AccessTree::and(vec![l.clone(), r.clone()]));
            out.push(AccessTree::or(vec![l.clone(), r.clone()]));
        }
    }
    out
}

/// Satisfiability by truth-table style recursion on a bitmask of held
/// attributes.
pub fn satisfied(tree: &AccessTree, attrs: &[&str], mask: u32) -> bool {
    use chainsdn_core::abe::GateKind;
    match tree {
        AccessTree::Leaf(a) => {
            let i = attrs.iter().position(|x| x == a).expect("leaf from universe");
            mask & (1 << i) != 0
        }
        AccessTree::Gate { kind: GateKind::And, children } => children.iter().all(|c| satisfied(c, attrs, mask)),
        AccessTree::Gate { kind: GateKind::Or, children } => children.iter().any(|c| satisfied(c, attrs, mask)),
    }
}
