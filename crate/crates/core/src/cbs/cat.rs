use rustc_hash::FxHashMap as HashMap;
use smallvec::SmallVec;

use crate::grid::Vertex;
use crate::path::Path;

type Agents = SmallVec<[u32; 2]>;

#[inline]
fn vertex_key(v: Vertex, t: u32) -> u64 {
    (u64::from(t) << 32) | u64::from(v.0)
}

#[inline]
fn edge_key(from: Vertex, to: Vertex, t: u32) -> u64 {
    debug_assert!(from.0 < (1 << 22) && to.0 < (1 << 22) && t < (1 << 20));
    (u64::from(t) << 44) | (u64::from(from.0) << 22) | u64::from(to.0)
}

/// Conflict-avoidance table: occupancy of `(vertex, t)` and of directed
/// moves `(u -> v, t)` by a set of robot paths.
///
/// Positions after a robot's final arrival are not stored; a robot counts
/// as parked on its last cell for every later timestep.
#[derive(Debug, Clone, Default)]
pub struct ConflictAvoidanceTable {
    vertices: HashMap<u64, Agents>,
    edges: HashMap<u64, Agents>,
    parked: HashMap<Vertex, SmallVec<[(u32, u32); 1]>>,
    /// `(agent, t)` for every stored vertex occupancy, grouped by vertex.
    visits: HashMap<Vertex, SmallVec<[(u32, u32); 4]>>,
    horizon: u32,
}

impl ConflictAvoidanceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_paths<P: AsRef<Path>>(paths: &[P]) -> Self {
        let mut cat = Self::new();
        for (agent, p) in paths.iter().enumerate() {
            cat.add_path(agent, p.as_ref());
        }
        cat
    }

    pub fn add_path(&mut self, agent: usize, path: &Path) {
        let cells = path.cells();
        let Some(&last) = cells.last() else {
            return;
        };
        let agent = agent as u32;
        let arrival = path.last_time();
        for (t, &v) in cells[..cells.len() - 1].iter().enumerate() {
            self.vertices
                .entry(vertex_key(v, t as u32))
                .or_default()
                .push(agent);
            self.visits.entry(v).or_default().push((agent, t as u32));
        }
        for (t, w) in cells.windows(2).enumerate() {
            if w[0] != w[1] {
                self.edges
                    .entry(edge_key(w[0], w[1], t as u32 + 1))
                    .or_default()
                    .push(agent);
            }
        }
        self.parked.entry(last).or_default().push((agent, arrival));
        self.horizon = self.horizon.max(arrival);
    }

    /// Largest final arrival time indexed.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Robots other than `agent` located at `v` at time `t`.
    pub fn vertex_count(&self, agent: usize, v: Vertex, t: u32) -> u32 {
        let agent = agent as u32;
        let moving = self
            .vertices
            .get(&vertex_key(v, t))
            .map_or(0, |a| a.iter().filter(|&&b| b != agent).count());
        let parked = self.parked.get(&v).map_or(0, |a| {
            a.iter()
                .filter(|&&(b, arrival)| b != agent && arrival <= t)
                .count()
        });
        (moving + parked) as u32
    }

    /// Robots other than `agent` traversing `to -> from` during `t - 1 -> t`.
    pub fn edge_count(&self, agent: usize, from: Vertex, to: Vertex, t: u32) -> u32 {
        if from == to || t == 0 {
            return 0;
        }
        let agent = agent as u32;
        self.edges
            .get(&edge_key(to, from, t))
            .map_or(0, |a| a.iter().filter(|&&b| b != agent).count() as u32)
    }

    /// Collisions `agent` would have by staying at `v` for every timestep
    /// after `t`.
    pub fn parking_count(&self, agent: usize, v: Vertex, t: u32) -> u32 {
        let me = agent as u32;
        let moving = self
            .visits
            .get(&v)
            .map_or(0, |a| a.iter().filter(|&&(b, s)| b != me && s > t).count());
        // A robot ending here collides at every later step; one count is
        // enough to steer away from it.
        let parked = self
            .parked
            .get(&v)
            .map_or(0, |a| a.iter().filter(|&&(b, _)| b != me).count());
        (moving + parked) as u32
    }

    /// Collisions caused by `agent` moving `from -> to` and arriving at `t`.
    #[inline]
    pub fn move_count(&self, agent: usize, from: Vertex, to: Vertex, t: u32) -> u32 {
        self.vertex_count(agent, to, t) + self.edge_count(agent, from, to, t)
    }
}
