use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;
use web_time::Instant;

use super::cat::ConflictAvoidanceTable;
use super::conflict::{
    conflicts_of_agent, detect_conflicts_windowed, recount_after_replan, Conflict, ConflictKind,
};
use crate::grid::{bfs_dist, DistField};
use crate::lowlevel::{
    focal_bound, plan_focal_path, Constraint, PlanError, PlanRequest, PlannedPath,
};
use crate::path::Path;
use crate::scenario::Instance;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("robot {agent} cannot reach its goal")]
    UnreachableGoal { agent: usize },
}

/// The deadline passed while planning.
#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
#[error("deadline reached")]
pub struct TimedOut;

/// A constraint-tree node: per-robot constraints and paths plus the cost,
/// the lower bound (sum of per-robot `fmin`) and the exact conflict list.
#[derive(Debug, Clone)]
pub struct HighLevelNode {
    pub id: u64,
    pub parent: Option<u64>,
    pub depth: u32,
    constraints: Vec<Arc<Vec<Constraint>>>,
    paths: Vec<Arc<Path>>,
    fmins: Vec<u64>,
    cost: u64,
    lb: u64,
    conflicts: Vec<Conflict>,
}

impl HighLevelNode {
    pub fn paths(&self) -> &[Arc<Path>] {
        &self.paths
    }

    pub fn cost(&self) -> u64 {
        self.cost
    }

    pub fn lb(&self) -> u64 {
        self.lb
    }

    pub fn fmin(&self, agent: usize) -> u64 {
        self.fmins[agent]
    }

    /// Sorted by `(t, a1, a2)`; the first entry is the one split on.
    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }

    pub fn num_conflicts(&self) -> usize {
        self.conflicts.len()
    }

    pub fn constraints_of(&self, agent: usize) -> &[Constraint] {
        &self.constraints[agent]
    }

    pub fn constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().flat_map(|c| c.iter())
    }

    /// Replaces one robot's path without touching the conflict list; the
    /// caller must recount before relying on `conflicts()`.
    pub(crate) fn substitute_path(&mut self, agent: usize, path: Arc<Path>, fmin: u64) {
        self.cost = self.cost - self.paths[agent].cost() + path.cost();
        self.lb = self.lb - self.fmins[agent] + fmin;
        self.paths[agent] = path;
        self.fmins[agent] = fmin;
    }

    pub(crate) fn set_conflicts(&mut self, conflicts: Vec<Conflict>) {
        self.conflicts = conflicts;
    }

    /// Substitutes an accepted bypass and recounts incrementally.
    pub fn apply_bypass(&mut self, bypass: Bypass) {
        let agent = bypass.agent;
        self.substitute_path(agent, bypass.path, bypass.fmin);
        self.conflicts = recount_after_replan(&self.conflicts, &self.paths, agent);
    }
}

/// An alternative path for one robot that passed the bypass test.
#[derive(Debug, Clone)]
pub struct Bypass {
    pub agent: usize,
    pub path: Arc<Path>,
    pub fmin: u64,
    /// Conflicts of `agent` against the other paths before and after.
    pub conflicts_before: usize,
    pub conflicts_after: usize,
}

/// Everything a high-level search needs to replan robots: the instance,
/// per-robot distance tables, the suboptimality factor and the deadline.
/// Shared read-only between worker threads.
pub struct SearchContext {
    instance: Instance,
    dists: Vec<DistField>,
    w: f64,
    deadline: Option<Instant>,
    next_id: AtomicU64,
}

impl SearchContext {
    pub fn new(
        instance: &Instance,
        w: f64,
        deadline: Option<Instant>,
    ) -> Result<Self, ContextError> {
        assert!(w >= 1.0, "suboptimality factor must be at least 1");
        let map = instance.map();
        let mut dists = Vec::with_capacity(instance.num_agents());
        for (agent, (&s, &g)) in instance.starts().iter().zip(instance.goals()).enumerate() {
            let field = bfs_dist(map, g).map_err(|_| ContextError::UnreachableGoal { agent })?;
            if field.get(s).is_none() {
                return Err(ContextError::UnreachableGoal { agent });
            }
            dists.push(field);
        }
        Ok(Self {
            instance: instance.clone(),
            dists,
            w,
            deadline,
            next_id: AtomicU64::new(0),
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn dist(&self, agent: usize) -> &DistField {
        &self.dists[agent]
    }

    pub fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn fresh_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }

    /// Low-level call for `agent` under `constraints`.
    pub fn plan(
        &self,
        agent: usize,
        constraints: &[Constraint],
        cat: Option<&ConflictAvoidanceTable>,
    ) -> Result<PlannedPath, PlanError> {
        plan_focal_path(&PlanRequest {
            map: self.instance.map(),
            dist: &self.dists[agent],
            agent,
            start: self.instance.starts()[agent],
            goal: self.instance.goals()[agent],
            constraints,
            cat,
            w: self.w,
            deadline: self.deadline,
        })
    }

    /// Root node: robots planned one after another in index order, each
    /// against a conflict table of the robots planned before it.
    pub fn root(&self) -> Result<HighLevelNode, TimedOut> {
        let n = self.instance.num_agents();
        let mut cat = ConflictAvoidanceTable::new();
        let mut paths = Vec::with_capacity(n);
        let mut fmins = Vec::with_capacity(n);
        for agent in 0..n {
            if self.timed_out() {
                return Err(TimedOut);
            }
            let planned = match self.plan(agent, &[], Some(&cat)) {
                Ok(p) => p,
                Err(PlanError::Timeout) => return Err(TimedOut),
                // Goals are reachable (checked in `new`) and nothing is
                // constrained yet.
                Err(PlanError::Infeasible) => unreachable!("unconstrained plan failed"),
            };
            cat.add_path(agent, &planned.path);
            paths.push(Arc::new(planned.path));
            fmins.push(planned.fmin);
        }
        let conflicts = detect_conflicts_windowed(&paths, 0, u32::MAX);
        Ok(HighLevelNode {
            id: self.fresh_id(),
            parent: None,
            depth: 0,
            constraints: (0..n).map(|_| Arc::default()).collect(),
            cost: paths.iter().map(|p| p.cost()).sum(),
            lb: fmins.iter().sum(),
            paths,
            fmins,
            conflicts,
        })
    }

    /// The two constraints that resolve `conflict`, one per robot.
    pub fn resolving_constraints(conflict: &Conflict) -> [Constraint; 2] {
        let t = conflict.t;
        match conflict.kind {
            ConflictKind::Vertex(v) => [
                Constraint::vertex(conflict.a1, v, t),
                Constraint::vertex(conflict.a2, v, t),
            ],
            ConflictKind::Edge { from, to } => [
                Constraint::edge(conflict.a1, from, to, t),
                Constraint::edge(conflict.a2, to, from, t),
            ],
        }
    }

    /// Children of `node` for `conflict`; a child whose replan is
    /// infeasible is `None`. `cat` must be built from `node`'s paths.
    pub fn split(
        &self,
        node: &HighLevelNode,
        conflict: &Conflict,
        cat: &ConflictAvoidanceTable,
    ) -> Result<[Option<HighLevelNode>; 2], TimedOut> {
        let mut out = [None, None];
        for (slot, constraint) in out.iter_mut().zip(Self::resolving_constraints(conflict)) {
            let agent = constraint.agent;
            let mut constraints = node.constraints[agent].as_ref().clone();
            constraints.push(constraint);
            let planned = match self.plan(agent, &constraints, Some(cat)) {
                Ok(p) => p,
                Err(PlanError::Infeasible) => continue,
                Err(PlanError::Timeout) => return Err(TimedOut),
            };
            let mut child = node.clone();
            child.id = self.fresh_id();
            child.parent = Some(node.id);
            child.depth = node.depth + 1;
            child.constraints[agent] = Arc::new(constraints);
            // The old bound still holds under more constraints; keeping the
            // larger one makes child lb >= parent lb.
            let fmin = planned.fmin.max(node.fmins[agent]);
            child.substitute_path(agent, Arc::new(planned.path), fmin);
            child.conflicts = recount_after_replan(&node.conflicts, &child.paths, agent);
            *slot = Some(child);
        }
        Ok(out)
    }

    /// Looks for a replacement path for `conflict.a1`, then `conflict.a2`,
    /// under the node's existing constraints. A candidate is accepted when
    /// it no longer has this conflict, keeps the node cost within
    /// `w * soc_lb` and its own cost within `w * fmin`, and strictly
    /// reduces that robot's conflict count.
    pub fn try_bypass(
        &self,
        node: &HighLevelNode,
        conflict: &Conflict,
        soc_lb: u64,
        cat: &ConflictAvoidanceTable,
    ) -> Result<Option<Bypass>, TimedOut> {
        debug_assert!(node.conflicts.contains(conflict));
        let node_bound = focal_bound(self.w, soc_lb);
        for agent in [conflict.a1, conflict.a2] {
            let planned = match self.plan(agent, &node.constraints[agent], Some(cat)) {
                Ok(p) => p,
                Err(PlanError::Infeasible) => continue,
                Err(PlanError::Timeout) => return Err(TimedOut),
            };
            let fmin = planned.fmin.max(node.fmins[agent]);
            let new_cost = planned.path.cost();
            let node_cost = node.cost - node.paths[agent].cost() + new_cost;
            if new_cost > focal_bound(self.w, fmin) || node_cost > node_bound {
                continue;
            }
            let path = Arc::new(planned.path);
            let view: Vec<&Path> = node
                .paths
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if i == agent {
                        path.as_ref()
                    } else {
                        p.as_ref()
                    }
                })
                .collect();
            let after = conflicts_of_agent(&view, agent);
            if after.contains(conflict) {
                continue;
            }
            let before = node.conflicts.iter().filter(|c| c.involves(agent)).count();
            if after.len() >= before {
                continue;
            }
            return Ok(Some(Bypass {
                agent,
                path,
                fmin,
                conflicts_before: before,
                conflicts_after: after.len(),
            }));
        }
        Ok(None)
    }
}
