use std::collections::{BTreeSet, HashMap};

use super::node::HighLevelNode;

/// Open list ordered by `(lb, cost, id)` with a focal list over the nodes
/// whose cost is within the current bound, ordered by
/// `(conflicts, cost, id)`.
#[derive(Debug, Default)]
pub struct NodeQueue {
    nodes: HashMap<u64, HighLevelNode>,
    open: BTreeSet<(u64, u64, u64)>,
    by_cost: BTreeSet<(u64, u64)>,
    focal: BTreeSet<(usize, u64, u64)>,
    bound: u64,
}

impl NodeQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn focal_len(&self) -> usize {
        self.focal.len()
    }

    /// Smallest lb in the open list.
    pub fn head_lb(&self) -> Option<u64> {
        self.open.first().map(|&(lb, _, _)| lb)
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn push(&mut self, node: HighLevelNode) {
        let (id, cost) = (node.id, node.cost());
        self.open.insert((node.lb(), cost, id));
        self.by_cost.insert((cost, id));
        if cost <= self.bound {
            self.focal.insert((node.num_conflicts(), cost, id));
        }
        let prev = self.nodes.insert(id, node);
        debug_assert!(prev.is_none(), "node {id} queued twice");
    }

    /// Moves the focal band to nodes with `cost <= bound`.
    pub fn set_bound(&mut self, bound: u64) {
        if bound > self.bound {
            let lo = self.bound.saturating_add(1);
            for &(cost, id) in self.by_cost.range((lo, 0)..=(bound, u64::MAX)) {
                self.focal
                    .insert((self.nodes[&id].num_conflicts(), cost, id));
            }
        } else if bound < self.bound {
            let lo = bound.saturating_add(1);
            for &(cost, id) in self.by_cost.range((lo, 0)..=(self.bound, u64::MAX)) {
                self.focal
                    .remove(&(self.nodes[&id].num_conflicts(), cost, id));
            }
        }
        self.bound = bound;
    }

    /// Removes and returns the focal head.
    pub fn pop_focal(&mut self) -> Option<HighLevelNode> {
        let (_, cost, id) = self.focal.pop_first()?;
        let node = self.nodes.remove(&id).expect("focal entry without node");
        self.open.remove(&(node.lb(), cost, id));
        self.by_cost.remove(&(cost, id));
        Some(node)
    }

    pub fn into_nodes(self) -> impl Iterator<Item = HighLevelNode> {
        self.nodes.into_values()
    }
}
