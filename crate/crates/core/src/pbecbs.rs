//! ECBS with rounds of parallel bypasses over agent-disjoint conflicts.

use crate::cbs::{
    detect_conflicts_windowed, find_disjoint_conflicts, partition_windows, Bypass, Conflict,
    ConflictAvoidanceTable, ContextError, HighLevelNode, SearchContext, TimedOut,
};
use crate::ecbs::{run_serial, SolveOutcome, SolveParams};
use crate::lowlevel::focal_bound;
use crate::path::makespan;
use crate::scenario::Instance;

#[derive(Debug, Clone, PartialEq)]
pub struct PbParams {
    pub base: SolveParams,
    pub n_workers: usize,
    /// Conflict count at which a popped node enters the bypass phase.
    pub alpha: usize,
    /// Apply the phase to the root node only.
    pub root_only: bool,
}

impl PbParams {
    /// Defaults `alpha` to the worker count.
    pub fn new(base: SolveParams, n_workers: usize) -> Self {
        let n_workers = n_workers.max(1);
        Self {
            base,
            n_workers,
            alpha: n_workers,
            root_only: false,
        }
    }
}

/// What a bypass phase did, round by round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhaseReport {
    /// Conflict count before each round, then the final count.
    pub conflict_counts: Vec<usize>,
    /// Agents whose paths were replaced, per round, in commit order.
    pub written: Vec<Vec<usize>>,
}

impl PhaseReport {
    pub fn rounds(&self) -> usize {
        self.written.len()
    }

    pub fn accepted(&self) -> usize {
        self.written.iter().map(Vec::len).sum()
    }
}

/// Runs `f` over `items` on up to `n_workers` scoped threads, round-robin,
/// and returns the results in item order. One worker runs inline.
fn fork_join<T: Sync, R: Send>(
    items: &[T],
    n_workers: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let k = n_workers.min(items.len());
    if k <= 1 {
        return items.iter().map(&f).collect();
    }
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = (0..k)
            .map(|t| {
                s.spawn(move || {
                    (t..items.len())
                        .step_by(k)
                        .map(|i| (i, f(&items[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().unwrap() {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.unwrap()).collect()
}

/// Exact conflict list via windowed detection over `n_workers` contiguous
/// windows, one per worker.
pub fn parallel_recount(node: &HighLevelNode, n_workers: usize) -> Vec<Conflict> {
    let paths = node.paths();
    let windows = partition_windows(makespan(paths), n_workers);
    fork_join(&windows, n_workers, |&(lo, hi)| {
        detect_conflicts_windowed(paths, lo, hi)
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Rounds of concurrent bypass attempts on a disjoint conflict set, all
/// reading the same frozen table and paths. Entered when the node has at
/// least `alpha` conflicts; repeated while a round strictly lowers the
/// conflict count. Leaves `node` with an exact conflict list and cost
/// within `w * soc_lb`.
pub fn parallel_bp_phase(
    ctx: &SearchContext,
    node: &mut HighLevelNode,
    soc_lb: u64,
    n_workers: usize,
    alpha: usize,
) -> Result<PhaseReport, TimedOut> {
    let alpha = alpha.max(1);
    let bound = focal_bound(ctx.w(), soc_lb);
    let mut report = PhaseReport::default();
    let mut count = node.num_conflicts();
    report.conflict_counts.push(count);
    if count < alpha || count == 0 {
        return Ok(report);
    }
    let mut cat = ConflictAvoidanceTable::from_paths(node.paths());
    loop {
        let chosen = find_disjoint_conflicts(node.conflicts());
        let frozen: &HighLevelNode = node;
        let attempts: Vec<Result<Option<Bypass>, TimedOut>> = fork_join(&chosen, n_workers, |c| {
            ctx.try_bypass(frozen, c, soc_lb, &cat)
        });
        let mut accepted = Vec::new();
        for attempt in attempts {
            if let Some(bp) = attempt? {
                accepted.push(bp);
            }
        }

        // Commit in conflict order, keeping the aggregate cost in bound.
        let mut written = Vec::new();
        for bp in accepted {
            let agent = bp.agent;
            let cost = node.cost() - node.paths()[agent].cost() + bp.path.cost();
            if cost > bound {
                continue;
            }
            debug_assert!(!written.contains(&agent));
            node.substitute_path(agent, bp.path, bp.fmin);
            written.push(agent);
        }
        if !written.is_empty() {
            node.set_conflicts(parallel_recount(node, n_workers));
            cat = ConflictAvoidanceTable::from_paths(node.paths());
        }
        report.written.push(written);
        let before = count;
        count = node.num_conflicts();
        report.conflict_counts.push(count);
        if count == 0 || count >= before {
            return Ok(report);
        }
    }
}

pub fn solve_pb(instance: &Instance, params: &PbParams) -> Result<SolveOutcome, ContextError> {
    let (n_workers, alpha, root_only) = (params.n_workers.max(1), params.alpha, params.root_only);
    run_serial(
        instance,
        &params.base,
        &mut |ctx, node, soc_lb, counters| {
            if root_only && node.parent.is_some() {
                return Ok(());
            }
            let report = parallel_bp_phase(ctx, node, soc_lb, n_workers, alpha)?;
            counters.bypasses += report.accepted() as u64;
            Ok(())
        },
        &mut |_| {},
    )
}
