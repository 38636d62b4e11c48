//! Single-robot focal search over the time-expanded grid.
//!
//! States are `(vertex, t)`; waiting is a legal move. The open list is
//! ordered by `f = t + dist(v)` and the focal list holds open states with
//! `f <= w * fmin`, ordered by accumulated conflict-table hits, then `f`,
//! then `h`, then insertion order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::{FxHashMap, FxHashSet};

use thiserror::Error;
use web_time::Instant;

use crate::cbs::ConflictAvoidanceTable;
use crate::grid::{DistField, GridMap, Vertex};
use crate::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintKind {
    /// Forbidden to be at the vertex at `t`.
    Vertex(Vertex),
    /// Forbidden to traverse `from -> to` arriving at `t`.
    Edge { from: Vertex, to: Vertex },
}

/// A prohibition added by the high-level search. `t >= 1` always: the
/// start state cannot be constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub agent: usize,
    pub kind: ConstraintKind,
    pub t: u32,
}

impl Constraint {
    pub fn vertex(agent: usize, v: Vertex, t: u32) -> Self {
        assert!(t >= 1, "constraints cannot forbid the start state");
        Self {
            agent,
            kind: ConstraintKind::Vertex(v),
            t,
        }
    }

    pub fn edge(agent: usize, from: Vertex, to: Vertex, t: u32) -> Self {
        assert!(t >= 1, "constraints cannot forbid the start state");
        Self {
            agent,
            kind: ConstraintKind::Edge { from, to },
            t,
        }
    }
}

/// A position in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimedState {
    pub vertex: Vertex,
    pub time: u32,
}

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("no constrained path exists within the time horizon")]
    Infeasible,
    #[error("deadline reached during low-level search")]
    Timeout,
}

/// A planned path and the search's lower bound on the optimal constrained
/// cost (the open-list minimum `f` when the goal was selected).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedPath {
    pub path: Path,
    pub fmin: u64,
}

/// Inputs to one low-level call.
#[derive(Clone, Copy)]
pub struct PlanRequest<'a> {
    pub map: &'a GridMap,
    pub dist: &'a DistField,
    pub agent: usize,
    pub start: Vertex,
    pub goal: Vertex,
    /// Constraints on `agent`; entries for other agents are ignored.
    pub constraints: &'a [Constraint],
    pub cat: Option<&'a ConflictAvoidanceTable>,
    pub w: f64,
    pub deadline: Option<Instant>,
}

/// Largest integer cost admitted by a band of `w * lb`.
#[inline]
pub fn focal_bound(w: f64, lb: u64) -> u64 {
    (w * lb as f64 + 1e-9).floor() as u64
}

struct Node {
    state: TimedState,
    parent: u32,
    conflicts: u32,
    f: u32,
    h: u32,
    closed: bool,
    in_focal: bool,
    /// Stands for stopping at the parent goal state, priced with the
    /// collisions that parking there would cause later.
    terminal: bool,
}

type FocalKey = Reverse<(u32, u32, u32, u32)>;

fn focal_key(n: &Node, id: u32) -> FocalKey {
    Reverse((n.conflicts, n.f, n.h, id))
}

/// Open states bucketed by `f`, with a count of the unclosed ones.
#[derive(Default)]
struct Buckets {
    ids: Vec<Vec<u32>>,
    live: Vec<u32>,
    head: usize,
}

impl Buckets {
    fn push(&mut self, f: u32, id: u32) {
        let f = f as usize;
        if f >= self.ids.len() {
            self.ids.resize_with(f + 1, Vec::new);
            self.live.resize(f + 1, 0);
        }
        self.ids[f].push(id);
        self.live[f] += 1;
        self.head = self.head.min(f);
    }

    fn close(&mut self, f: u32) {
        self.live[f as usize] -= 1;
    }

    fn min_f(&mut self) -> Option<u32> {
        while self.head < self.live.len() && self.live[self.head] == 0 {
            self.head += 1;
        }
        (self.head < self.live.len()).then_some(self.head as u32)
    }
}

struct ConstraintTable {
    vertex: FxHashSet<(Vertex, u32)>,
    edge: FxHashSet<(Vertex, Vertex, u32)>,
    /// Latest time the goal vertex is forbidden; parking is allowed after it.
    goal_last: Option<u32>,
    horizon: u32,
}

impl ConstraintTable {
    fn new(req: &PlanRequest<'_>) -> Self {
        let mut vertex = FxHashSet::default();
        let mut edge = FxHashSet::default();
        let mut goal_last: Option<u32> = None;
        let mut latest = 0;
        let mut count = 0u32;
        for c in req.constraints.iter().filter(|c| c.agent == req.agent) {
            count += 1;
            latest = latest.max(c.t);
            match c.kind {
                ConstraintKind::Vertex(v) => {
                    vertex.insert((v, c.t));
                    if v == req.goal {
                        goal_last = Some(goal_last.map_or(c.t, |g| g.max(c.t)));
                    }
                }
                ConstraintKind::Edge { from, to } => {
                    edge.insert((from, to, c.t));
                }
            }
        }
        let horizon = req.map.num_passable() as u32 + latest + count;
        Self {
            vertex,
            edge,
            goal_last,
            horizon,
        }
    }

    #[inline]
    fn allows(&self, from: Vertex, to: Vertex, t: u32) -> bool {
        !self.vertex.contains(&(to, t)) && (from == to || !self.edge.contains(&(from, to, t)))
    }

    #[inline]
    fn can_park(&self, t: u32) -> bool {
        self.goal_last.is_none_or(|g| t > g)
    }
}

fn trace_back(nodes: &[Node], last: u32, time: u32) -> Path {
    let mut cells = Vec::with_capacity(time as usize + 1);
    let mut cur = last;
    while cur != u32::MAX {
        cells.push(nodes[cur as usize].state.vertex);
        cur = nodes[cur as usize].parent;
    }
    cells.reverse();
    Path::new(cells)
}

/// Plans a bounded-suboptimal path for one robot: the result obeys every
/// constraint, parks at the goal with no later goal constraint, and costs
/// at most `w * fmin`.
pub fn plan_focal_path(req: &PlanRequest<'_>) -> Result<PlannedPath, PlanError> {
    assert!(req.w >= 1.0, "suboptimality factor must be at least 1");
    let Some(h0) = req.dist.get(req.start) else {
        return Err(PlanError::Infeasible);
    };
    debug_assert_eq!(req.dist.goal(), req.goal);
    let table = ConstraintTable::new(req);

    let mut nodes: Vec<Node> = Vec::new();
    let mut index: FxHashMap<TimedState, u32> = FxHashMap::default();
    let mut open = Buckets::default();
    // Entries go stale when a node is closed or its conflicts improve.
    let mut focal: BinaryHeap<FocalKey> = BinaryHeap::new();

    let root = TimedState {
        vertex: req.start,
        time: 0,
    };
    nodes.push(Node {
        state: root,
        parent: u32::MAX,
        conflicts: 0,
        f: h0,
        h: h0,
        closed: false,
        in_focal: true,
        terminal: false,
    });
    index.insert(root, 0);
    open.push(h0, 0);
    focal.push(focal_key(&nodes[0], 0));
    let mut fmin = h0;
    let mut expanded = 0u32;

    loop {
        let Some(head_f) = open.min_f() else {
            return Err(PlanError::Infeasible);
        };
        if head_f > fmin {
            let old = focal_bound(req.w, fmin.into());
            let new = focal_bound(req.w, head_f.into());
            let lo = (old + 1) as usize;
            let hi = (new as usize).min(open.ids.len().saturating_sub(1));
            for f in lo..=hi {
                if open.live[f] == 0 {
                    continue;
                }
                for &id in &open.ids[f] {
                    let n = &mut nodes[id as usize];
                    if !n.closed && !n.in_focal {
                        n.in_focal = true;
                        focal.push(focal_key(n, id));
                    }
                }
            }
            fmin = head_f;
        }
        let bound = focal_bound(req.w, fmin.into());

        let id = loop {
            let Some(Reverse(key)) = focal.pop() else {
                return Err(PlanError::Infeasible);
            };
            let n = &nodes[key.3 as usize];
            if !n.closed && n.conflicts == key.0 {
                break key.3;
            }
        };
        let (state, f, conflicts, terminal) = {
            let n = &mut nodes[id as usize];
            n.closed = true;
            n.in_focal = false;
            (n.state, n.f, n.conflicts, n.terminal)
        };
        open.close(f);

        if terminal {
            return Ok(PlannedPath {
                path: trace_back(&nodes, nodes[id as usize].parent, state.time),
                fmin: fmin.into(),
            });
        }
        if state.vertex == req.goal && table.can_park(state.time) {
            let parking = req
                .cat
                .map_or(0, |cat| cat.parking_count(req.agent, req.goal, state.time));
            if parking == 0 {
                return Ok(PlannedPath {
                    path: trace_back(&nodes, id, state.time),
                    fmin: fmin.into(),
                });
            }
            let tid = nodes.len() as u32;
            let n = Node {
                state,
                parent: id,
                conflicts: conflicts + parking,
                f,
                h: 0,
                closed: false,
                in_focal: true,
                terminal: true,
            };
            focal.push(focal_key(&n, tid));
            open.push(f, tid);
            nodes.push(n);
        }

        expanded += 1;
        if expanded.is_multiple_of(1024) {
            if let Some(deadline) = req.deadline {
                if Instant::now() >= deadline {
                    return Err(PlanError::Timeout);
                }
            }
        }

        let t = state.time + 1;
        if t > table.horizon {
            continue;
        }
        let from = state.vertex;
        let mut successors = smallvec::SmallVec::<[Vertex; 5]>::new();
        req.map.for_each_neighbor(from, |u| successors.push(u));
        successors.push(from);
        for to in successors {
            if !table.allows(from, to, t) {
                continue;
            }
            let Some(h) = req.dist.get(to) else {
                continue;
            };
            let c = conflicts
                + req
                    .cat
                    .map_or(0, |cat| cat.move_count(req.agent, from, to, t));
            let next = TimedState {
                vertex: to,
                time: t,
            };
            let nf = t + h;
            match index.get(&next) {
                Some(&existing) => {
                    let n = &mut nodes[existing as usize];
                    if n.closed || c >= n.conflicts {
                        continue;
                    }
                    n.conflicts = c;
                    n.parent = id;
                    if n.in_focal {
                        focal.push(focal_key(n, existing));
                    }
                }
                None => {
                    let nid = nodes.len() as u32;
                    let in_focal = u64::from(nf) <= bound;
                    let n = Node {
                        state: next,
                        parent: id,
                        conflicts: c,
                        f: nf,
                        h,
                        closed: false,
                        in_focal,
                        terminal: false,
                    };
                    if in_focal {
                        focal.push(focal_key(&n, nid));
                    }
                    open.push(nf, nid);
                    index.insert(next, nid);
                    nodes.push(n);
                }
            }
        }
    }
}
