//! Serial ECBS with optional single-conflict bypass.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::cbs::{
    ConflictAvoidanceTable, ContextError, HighLevelNode, NodeQueue, SearchContext, TimedOut,
};
use crate::lowlevel::focal_bound;
use crate::path::Path;
use crate::scenario::Instance;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveParams {
    /// Suboptimality factor, at least 1.
    pub w: f64,
    pub timeout: Duration,
    pub bypass: bool,
    /// Seeds randomized work distribution; the serial solver ignores it.
    pub seed: u64,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            w: 2.0,
            timeout: Duration::from_secs(120),
            bypass: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Solved,
    Timeout,
    /// Every node was expanded or pruned without finding a solution.
    Exhausted,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::Timeout => "timeout",
            SolveStatus::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub solution: Option<Vec<Path>>,
    pub soc: Option<u64>,
    /// Global lower bound when the solution was selected, or at
    /// termination otherwise.
    pub soc_lb: u64,
    pub expansions: u64,
    pub generated: u64,
    /// Children dropped because their replan was infeasible.
    pub pruned: u64,
    /// Nodes still queued at termination.
    pub residual: u64,
    pub bypasses: u64,
    pub wall_time: Duration,
}

impl SolveOutcome {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }
}

/// Observations emitted by the serial search, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchEvent {
    /// The open-list head lb at the start of an iteration.
    SocLb(u64),
    /// A node was popped from focal and split or returned.
    Expanded {
        id: u64,
    },
    Child {
        parent_lb: u64,
        child_lb: u64,
    },
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Counters {
    pub expansions: u64,
    pub generated: u64,
    pub pruned: u64,
    pub bypasses: u64,
}

impl Counters {
    pub fn merge(&mut self, other: &Counters) {
        self.expansions += other.expansions;
        self.generated += other.generated;
        self.pruned += other.pruned;
        self.bypasses += other.bypasses;
    }
}

pub(crate) enum Step {
    Solved(HighLevelNode),
    /// The node's path was replaced; it goes back to the queue.
    Bypassed(HighLevelNode),
    Split(Vec<HighLevelNode>),
}

/// Processes a node popped from focal: returns it if conflict-free, else
/// tries a bypass on its first conflict, else splits it. On timeout the
/// node comes back unchanged so it can be requeued.
#[allow(clippy::result_large_err)]
pub(crate) fn expand(
    ctx: &SearchContext,
    node: HighLevelNode,
    soc_lb: u64,
    bypass: bool,
    counters: &mut Counters,
) -> Result<Step, HighLevelNode> {
    let Some(conflict) = node.conflicts().first().copied() else {
        counters.expansions += 1;
        return Ok(Step::Solved(node));
    };
    let cat = ConflictAvoidanceTable::from_paths(node.paths());
    if bypass {
        match ctx.try_bypass(&node, &conflict, soc_lb, &cat) {
            Ok(Some(bp)) => {
                let mut node = node;
                node.apply_bypass(bp);
                counters.bypasses += 1;
                return Ok(Step::Bypassed(node));
            }
            Ok(None) => {}
            Err(TimedOut) => return Err(node),
        }
    }
    match ctx.split(&node, &conflict, &cat) {
        Ok(children) => {
            counters.expansions += 1;
            counters.generated += 2;
            let children: Vec<_> = children.into_iter().flatten().collect();
            counters.pruned += 2 - children.len() as u64;
            Ok(Step::Split(children))
        }
        Err(TimedOut) => Err(node),
    }
}

pub(crate) fn unwrap_paths(paths: &[Arc<Path>]) -> Vec<Path> {
    paths.iter().map(|p| p.as_ref().clone()).collect()
}

/// Hook run on each popped node before it is expanded, given the current
/// global lower bound.
pub(crate) type PreExpand<'a> =
    dyn FnMut(&SearchContext, &mut HighLevelNode, u64, &mut Counters) -> Result<(), TimedOut> + 'a;

pub(crate) fn run_serial(
    instance: &Instance,
    params: &SolveParams,
    pre: &mut PreExpand<'_>,
    trace: &mut dyn FnMut(SearchEvent),
) -> Result<SolveOutcome, ContextError> {
    let started = Instant::now();
    let ctx = SearchContext::new(instance, params.w, Some(started + params.timeout))?;
    let mut counters = Counters::default();
    let mut queue = NodeQueue::new();
    let finish =
        |status, node: Option<HighLevelNode>, soc_lb, counters: Counters, residual| SolveOutcome {
            status,
            soc: node.as_ref().map(|n| n.cost()),
            solution: node.map(|n| unwrap_paths(n.paths())),
            soc_lb,
            expansions: counters.expansions,
            generated: counters.generated,
            pruned: counters.pruned,
            residual,
            bypasses: counters.bypasses,
            wall_time: started.elapsed(),
        };
    let root = match ctx.root() {
        Ok(root) => root,
        Err(TimedOut) => return Ok(finish(SolveStatus::Timeout, None, 0, counters, 0)),
    };
    counters.generated += 1;
    queue.push(root);
    let mut soc_lb = 0;
    loop {
        let Some(head) = queue.head_lb() else {
            return Ok(finish(SolveStatus::Exhausted, None, soc_lb, counters, 0));
        };
        debug_assert!(head >= soc_lb, "lower bound decreased");
        soc_lb = head;
        trace(SearchEvent::SocLb(soc_lb));
        queue.set_bound(focal_bound(params.w, soc_lb));
        if ctx.timed_out() {
            let residual = queue.len() as u64;
            return Ok(finish(
                SolveStatus::Timeout,
                None,
                soc_lb,
                counters,
                residual,
            ));
        }
        let mut node = queue.pop_focal().expect("open head is always in focal");
        if let Err(TimedOut) = pre(&ctx, &mut node, soc_lb, &mut counters) {
            queue.push(node);
            continue;
        }
        let (id, parent_lb) = (node.id, node.lb());
        match expand(&ctx, node, soc_lb, params.bypass, &mut counters) {
            Ok(Step::Solved(node)) => {
                trace(SearchEvent::Expanded { id });
                let residual = queue.len() as u64;
                return Ok(finish(
                    SolveStatus::Solved,
                    Some(node),
                    soc_lb,
                    counters,
                    residual,
                ));
            }
            Ok(Step::Bypassed(node)) => queue.push(node),
            Ok(Step::Split(children)) => {
                trace(SearchEvent::Expanded { id });
                for child in children {
                    trace(SearchEvent::Child {
                        parent_lb,
                        child_lb: child.lb(),
                    });
                    queue.push(child);
                }
            }
            Err(node) => queue.push(node),
        }
    }
}

pub fn solve_ecbs(instance: &Instance, params: &SolveParams) -> Result<SolveOutcome, ContextError> {
    solve_ecbs_traced(instance, params, &mut |_| {})
}

/// [`solve_ecbs`] reporting every lower-bound update, expansion and child.
pub fn solve_ecbs_traced(
    instance: &Instance,
    params: &SolveParams,
    trace: &mut dyn FnMut(SearchEvent),
) -> Result<SolveOutcome, ContextError> {
    run_serial(instance, params, &mut |_, _, _, _| Ok(()), trace)
}
