//! Decentralized parallel ECBS: every worker owns an open/focal pair and a
//! mailbox, and the global lower bound is the minimum over the bounds the
//! workers publish.

use std::mem;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::cbs::{ContextError, HighLevelNode, NodeQueue, SearchContext};
use crate::ecbs::{expand, unwrap_paths, Counters, SolveOutcome, SolveParams, SolveStatus, Step};
use crate::lowlevel::focal_bound;
use crate::scenario::Instance;

/// Bound published by a worker with nothing queued.
pub const NO_BOUND: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionStrategy {
    /// Each child goes to a uniformly drawn worker.
    Random,
    /// Child 0 stays on the expanding worker `j`, child 1 goes to `j + 1`.
    #[default]
    Deterministic,
}

impl DistributionStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            DistributionStrategy::Random => "random",
            DistributionStrategy::Deterministic => "deterministic",
        }
    }
}

/// Worker that receives child number `ordinal` (0 or 1) of a node
/// expanded on worker `j`.
pub fn destinate_thread(
    ordinal: usize,
    j: usize,
    n_workers: usize,
    strategy: DistributionStrategy,
    rng: &mut impl Rng,
) -> usize {
    if n_workers <= 1 {
        return 0;
    }
    match strategy {
        DistributionStrategy::Deterministic => (j + ordinal) % n_workers,
        DistributionStrategy::Random => rng.random_range(0..n_workers),
    }
}

/// Minimum of the published bounds, [`NO_BOUND`] if all are empty.
pub fn get_global_soc_lb(bounds: &[u64]) -> u64 {
    bounds.iter().copied().min().unwrap_or(NO_BOUND)
}

/// Published bounds. A node in flight is covered by `buffer_min` of its
/// destination from the moment it enters the mailbox until the receiver
/// drains it and republishes `local_lb`.
struct Board {
    local_lb: Vec<u64>,
    buffer_min: Vec<u64>,
}

impl Board {
    fn global(&self) -> u64 {
        get_global_soc_lb(&self.local_lb).min(get_global_soc_lb(&self.buffer_min))
    }
}

struct Shared<'a> {
    ctx: &'a SearchContext,
    params: &'a SolveParams,
    n_workers: usize,
    strategy: DistributionStrategy,
    buffers: Vec<Mutex<Vec<HighLevelNode>>>,
    board: Mutex<Board>,
    incumbent: OnceLock<(HighLevelNode, u64)>,
    stop: AtomicBool,
}

impl Shared<'_> {
    /// Mailbox push. Lock order is always buffer, then board.
    fn send(&self, j: usize, node: HighLevelNode) {
        let lb = node.lb();
        let mut buf = self.buffers[j].lock().unwrap();
        buf.push(node);
        let mut board = self.board.lock().unwrap();
        board.buffer_min[j] = board.buffer_min[j].min(lb);
    }

    /// Drains worker `i`'s mailbox into its queue, publishes the queue head
    /// and returns the new global bound.
    fn pull(&self, i: usize, queue: &mut NodeQueue) -> u64 {
        let mut buf = self.buffers[i].lock().unwrap();
        for node in mem::take(&mut *buf) {
            queue.push(node);
        }
        let mut board = self.board.lock().unwrap();
        board.local_lb[i] = queue.head_lb().unwrap_or(NO_BOUND);
        board.buffer_min[i] = NO_BOUND;
        board.global()
    }
}

enum Exit {
    Solved,
    Stopped,
    TimedOut,
    Exhausted,
}

struct WorkerResult {
    counters: Counters,
    queue: NodeQueue,
    exit: Exit,
}

fn worker(shared: &Shared<'_>, i: usize) -> WorkerResult {
    let ctx = shared.ctx;
    let mut rng = ChaCha8Rng::seed_from_u64(
        shared.params.seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
    );
    let mut counters = Counters::default();
    let mut queue = NodeQueue::new();
    let mut idle = 0u32;
    let exit = loop {
        if shared.stop.load(Ordering::Acquire) {
            break Exit::Stopped;
        }
        if ctx.timed_out() {
            shared.stop.store(true, Ordering::Release);
            break Exit::TimedOut;
        }
        let soc_lb = shared.pull(i, &mut queue);
        if soc_lb == NO_BOUND {
            // Every queue and mailbox is empty and no worker is expanding:
            // a worker publishes NO_BOUND only after its own queue ran dry.
            shared.stop.store(true, Ordering::Release);
            break Exit::Exhausted;
        }
        queue.set_bound(focal_bound(shared.params.w, soc_lb));
        let Some(node) = queue.pop_focal() else {
            idle += 1;
            if idle < 64 {
                std::thread::yield_now();
            } else {
                std::thread::sleep(Duration::from_micros(50));
            }
            continue;
        };
        idle = 0;
        match expand(ctx, node, soc_lb, shared.params.bypass, &mut counters) {
            Ok(Step::Solved(node)) => {
                // First publication wins; a later candidate is dropped.
                if shared.incumbent.set((node, soc_lb)).is_ok() {
                    shared.stop.store(true, Ordering::Release);
                    break Exit::Solved;
                }
                break Exit::Stopped;
            }
            Ok(Step::Bypassed(node)) => queue.push(node),
            Ok(Step::Split(children)) => {
                for (ordinal, child) in children.into_iter().enumerate() {
                    let j =
                        destinate_thread(ordinal, i, shared.n_workers, shared.strategy, &mut rng);
                    if j == i {
                        // The stale local bound still covers the child,
                        // whose lb is at least its parent's.
                        queue.push(child);
                    } else {
                        shared.send(j, child);
                    }
                }
            }
            Err(node) => queue.push(node),
        }
    };
    WorkerResult {
        counters,
        queue,
        exit,
    }
}

/// Parallel ECBS over `n_workers` workers. With one worker everything
/// runs on the calling thread.
pub fn solve_dp(
    instance: &Instance,
    params: &SolveParams,
    n_workers: usize,
    strategy: DistributionStrategy,
) -> Result<SolveOutcome, ContextError> {
    assert!(n_workers >= 1, "at least one worker is required");
    let started = Instant::now();
    let ctx = SearchContext::new(instance, params.w, Some(started + params.timeout))?;
    let timeout_outcome = |counters: Counters, soc_lb, residual| SolveOutcome {
        status: SolveStatus::Timeout,
        solution: None,
        soc: None,
        soc_lb,
        expansions: counters.expansions,
        generated: counters.generated,
        pruned: counters.pruned,
        residual,
        bypasses: counters.bypasses,
        wall_time: started.elapsed(),
    };
    let Ok(root) = ctx.root() else {
        return Ok(timeout_outcome(Counters::default(), 0, 0));
    };
    let shared = Shared {
        ctx: &ctx,
        params,
        n_workers,
        strategy,
        buffers: (0..n_workers).map(|_| Mutex::new(Vec::new())).collect(),
        board: Mutex::new(Board {
            local_lb: vec![NO_BOUND; n_workers],
            buffer_min: vec![NO_BOUND; n_workers],
        }),
        incumbent: OnceLock::new(),
        stop: AtomicBool::new(false),
    };
    shared.send(0, root);

    let results: Vec<WorkerResult> = if n_workers == 1 {
        vec![worker(&shared, 0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..n_workers)
                .map(|i| {
                    let shared = &shared;
                    s.spawn(move || worker(shared, i))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    };

    let mut counters = Counters {
        generated: 1,
        ..Counters::default()
    };
    let mut residual = 0u64;
    let mut final_lb = NO_BOUND;
    let mut exhausted = false;
    for r in &results {
        counters.merge(&r.counters);
        residual += r.queue.len() as u64;
        final_lb = final_lb.min(r.queue.head_lb().unwrap_or(NO_BOUND));
        exhausted |= matches!(r.exit, Exit::Exhausted);
        debug_assert!(!matches!(r.exit, Exit::Solved) || shared.incumbent.get().is_some());
        debug_assert!(
            !matches!(r.exit, Exit::TimedOut | Exit::Stopped)
                || shared.stop.load(Ordering::Acquire)
        );
    }
    for buf in &shared.buffers {
        let buf = buf.lock().unwrap();
        residual += buf.len() as u64;
        final_lb = buf.iter().map(|n| n.lb()).fold(final_lb, u64::min);
    }
    let wall_time = started.elapsed();
    let mut outcome = timeout_outcome(
        counters,
        if final_lb == NO_BOUND { 0 } else { final_lb },
        residual,
    );
    outcome.wall_time = wall_time;
    if let Some((node, soc_lb)) = shared.incumbent.into_inner() {
        outcome.status = SolveStatus::Solved;
        outcome.soc = Some(node.cost());
        outcome.soc_lb = soc_lb;
        outcome.solution = Some(unwrap_paths(node.paths()));
    } else if exhausted {
        outcome.status = SolveStatus::Exhausted;
    }
    Ok(outcome)
}
