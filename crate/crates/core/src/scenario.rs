//! Problem instances: MovingAI `.scen` ingestion and seeded generators.
//!
//! Generators draw from a ChaCha8 stream seeded with `seed_from_u64`, and
//! sample without replacement by a partial Fisher-Yates shuffle over the
//! passable cells in row-major order. Both the stream and the shuffle are
//! platform independent, so an instance is reproducible from
//! `(map, n, seed)`.

use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{bfs_dist, GridMap, Vertex};

#[derive(Debug, Error, PartialEq)]
pub enum ScenError {
    #[error("missing `version` header")]
    MissingHeader,

    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("line {line}: cell ({x}, {y}) is out of bounds")]
    OutOfBounds { line: usize, x: u32, y: u32 },

    #[error("line {line}: cell ({x}, {y}) is blocked")]
    BlockedCell { line: usize, x: u32, y: u32 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("an instance needs at least one robot")]
    NoRobots,

    #[error("{starts} starts but {goals} goals")]
    LengthMismatch { starts: usize, goals: usize },

    #[error("robot {agent}: {what} cell is blocked or out of bounds")]
    NotPassable { agent: usize, what: &'static str },

    #[error("robots {first} and {second} share a {what} cell")]
    Duplicate {
        first: usize,
        second: usize,
        what: &'static str,
    },

    #[error("requested {requested} robots but only {available} cells are available")]
    TooManyRobots { requested: usize, available: usize },

    #[error("corner region {region} exceeds map side {side}")]
    RegionTooLarge { region: u32, side: u32 },
}

/// One row of a `.scen` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenEntry {
    pub bucket: u32,
    pub map_name: String,
    pub map_width: u32,
    pub map_height: u32,
    pub start: (u32, u32),
    pub goal: (u32, u32),
    pub optimal_length: f64,
}

/// Parses every row of a `.scen` file without checking it against a map.
pub fn parse_scen_entries(text: &str) -> Result<Vec<ScenEntry>, ScenError> {
    let mut lines = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim().starts_with("version") => {}
        _ => return Err(ScenError::MissingHeader),
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() != 9 {
            return Err(ScenError::MalformedRow {
                line: line_no,
                reason: format!("expected 9 fields, found {}", fields.len()),
            });
        }
        let num = |i: usize| -> Result<u32, ScenError> {
            fields[i]
                .trim()
                .parse()
                .map_err(|_| ScenError::MalformedRow {
                    line: line_no,
                    reason: format!("field {} is not an integer: {:?}", i + 1, fields[i]),
                })
        };
        let optimal_length = fields[8]
            .trim()
            .parse()
            .map_err(|_| ScenError::MalformedRow {
                line: line_no,
                reason: format!("optimal length is not a number: {:?}", fields[8]),
            })?;
        entries.push(ScenEntry {
            bucket: num(0)?,
            map_name: fields[1].to_string(),
            map_width: num(2)?,
            map_height: num(3)?,
            start: (num(4)?, num(5)?),
            goal: (num(6)?, num(7)?),
            optimal_length,
        });
    }
    Ok(entries)
}

/// `(start, goal)` as `(x, y)` coordinates.
pub type CellPair = ((u32, u32), (u32, u32));

/// Start/goal coordinate pairs of a `.scen` file, in file order, checked
/// against `map`.
pub fn parse_scen(text: &str, map: &GridMap) -> Result<Vec<CellPair>, ScenError> {
    let entries = parse_scen_entries(text)?;
    // Line numbers: header is line 1, rows follow (blank lines aside).
    let mut pairs = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let line = i + 2;
        for &(x, y) in &[e.start, e.goal] {
            match map.vertex(x, y) {
                None => return Err(ScenError::OutOfBounds { line, x, y }),
                Some(v) if !map.is_passable(v) => {
                    return Err(ScenError::BlockedCell { line, x, y })
                }
                Some(_) => {}
            }
        }
        pairs.push((e.start, e.goal));
    }
    Ok(pairs)
}

/// Renders entries in the tab-separated `.scen` layout.
pub fn serialize_scen(entries: &[ScenEntry]) -> String {
    let mut out = String::from("version 1\n");
    for e in entries {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.8}\n",
            e.bucket,
            e.map_name,
            e.map_width,
            e.map_height,
            e.start.0,
            e.start.1,
            e.goal.0,
            e.goal.1,
            e.optimal_length
        ));
    }
    out
}

/// Start and goal configurations for `n` robots on a shared map.
#[derive(Debug, Clone)]
pub struct Instance {
    map: Arc<GridMap>,
    starts: Vec<Vertex>,
    goals: Vec<Vertex>,
}

impl Instance {
    pub fn new(
        map: Arc<GridMap>,
        starts: Vec<Vertex>,
        goals: Vec<Vertex>,
    ) -> Result<Self, InstanceError> {
        if starts.len() != goals.len() {
            return Err(InstanceError::LengthMismatch {
                starts: starts.len(),
                goals: goals.len(),
            });
        }
        if starts.is_empty() {
            return Err(InstanceError::NoRobots);
        }
        for (what, cells) in [("start", &starts), ("goal", &goals)] {
            let mut seen = std::collections::HashMap::new();
            for (agent, &v) in cells.iter().enumerate() {
                if !map.is_passable(v) {
                    return Err(InstanceError::NotPassable { agent, what });
                }
                if let Some(first) = seen.insert(v, agent) {
                    return Err(InstanceError::Duplicate {
                        first,
                        second: agent,
                        what,
                    });
                }
            }
        }
        Ok(Self { map, starts, goals })
    }

    /// Instance from coordinate pairs, e.g. the first `n` rows of a scen.
    pub fn from_pairs(map: Arc<GridMap>, pairs: &[CellPair]) -> Result<Self, InstanceError> {
        let mut starts = Vec::with_capacity(pairs.len());
        let mut goals = Vec::with_capacity(pairs.len());
        for (agent, &((sx, sy), (gx, gy))) in pairs.iter().enumerate() {
            let s = map.vertex(sx, sy).ok_or(InstanceError::NotPassable {
                agent,
                what: "start",
            })?;
            let g = map.vertex(gx, gy).ok_or(InstanceError::NotPassable {
                agent,
                what: "goal",
            })?;
            starts.push(s);
            goals.push(g);
        }
        Self::new(map, starts, goals)
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn shared_map(&self) -> Arc<GridMap> {
        Arc::clone(&self.map)
    }

    pub fn num_agents(&self) -> usize {
        self.starts.len()
    }

    pub fn starts(&self) -> &[Vertex] {
        &self.starts
    }

    pub fn goals(&self) -> &[Vertex] {
        &self.goals
    }

    /// Scen rows for this instance; the optimal-length column holds the
    /// single-robot shortest distance.
    pub fn to_scen_entries(&self, map_name: &str) -> Vec<ScenEntry> {
        let map = self.map();
        self.starts
            .iter()
            .zip(&self.goals)
            .map(|(&s, &g)| {
                let d = bfs_dist(map, g)
                    .ok()
                    .and_then(|f| f.get(s))
                    .map_or(-1.0, f64::from);
                ScenEntry {
                    bucket: 0,
                    map_name: map_name.to_string(),
                    map_width: map.width(),
                    map_height: map.height(),
                    start: map.coord(s),
                    goal: map.coord(g),
                    optimal_length: d,
                }
            })
            .collect()
    }
}

/// `n` distinct cells drawn uniformly from `cells` by partial Fisher-Yates.
fn sample_distinct(rng: &mut ChaCha8Rng, cells: &[Vertex], n: usize) -> Vec<Vertex> {
    let mut pool = cells.to_vec();
    for i in 0..n {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(n);
    pool
}

/// Starts and goals sampled independently and uniformly from the passable
/// cells of `map`.
pub fn gen_uniform_random(
    map: Arc<GridMap>,
    n: usize,
    seed: u64,
) -> Result<Instance, InstanceError> {
    let cells = map.passable_cells();
    if n > cells.len() {
        return Err(InstanceError::TooManyRobots {
            requested: n,
            available: cells.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = sample_distinct(&mut rng, &cells, n);
    let goals = sample_distinct(&mut rng, &cells, n);
    Instance::new(map, starts, goals)
}

/// Default corner-square side for `n` robots: `ceil(sqrt(2n))`, clamped to
/// the map side. Gives roughly half occupancy.
pub fn default_corner_region(n: usize, side: u32) -> u32 {
    let mut r = (2.0 * n as f64).sqrt().ceil() as u32;
    while (r as usize) * (r as usize) < 2 * n {
        r += 1;
    }
    r.clamp(1, side)
}

/// Obstacle-free `side x side` map with every start and goal inside the
/// `region x region` lower-left corner.
pub fn gen_corner_rearrangement(
    side: u32,
    region: u32,
    n: usize,
    seed: u64,
) -> Result<Instance, InstanceError> {
    if region > side {
        return Err(InstanceError::RegionTooLarge { region, side });
    }
    let map = Arc::new(GridMap::empty(side, side));
    let corner: Vec<Vertex> = (side - region..side)
        .flat_map(|y| (0..region).map(move |x| (x, y)))
        .filter_map(|(x, y)| map.vertex(x, y))
        .collect();
    if n > corner.len() {
        return Err(InstanceError::TooManyRobots {
            requested: n,
            available: corner.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = sample_distinct(&mut rng, &corner, n);
    let goals = sample_distinct(&mut rng, &corner, n);
    Instance::new(map, starts, goals)
}

/// Map with obstacles placed at `density` of the cells, drawn from the
/// same seeded stream; only the largest 4-connected component is kept
/// passable so that every pair of free cells is mutually reachable.
pub fn gen_random_obstacle_map(width: u32, height: u32, density: f64, seed: u64) -> GridMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<Vertex> = (0..width * height).map(Vertex).collect();
    let blocked = ((width * height) as f64 * density).round() as usize;
    let blocked: HashSet<Vertex> = sample_distinct(&mut rng, &cells, blocked.min(cells.len() - 1))
        .into_iter()
        .collect();
    let raw = GridMap::from_fn(width, height, |x, y| {
        !blocked.contains(&Vertex(y * width + x))
    });

    // Largest connected component.
    let mut label = vec![usize::MAX; raw.num_cells()];
    let mut best = (0usize, 0usize);
    let mut next = 0;
    for v in raw.passable_cells() {
        if label[v.index()] != usize::MAX {
            continue;
        }
        let mut stack = vec![v];
        label[v.index()] = next;
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            raw.for_each_neighbor(u, |w| {
                if label[w.index()] == usize::MAX {
                    label[w.index()] = next;
                    stack.push(w);
                }
            });
        }
        if size > best.1 {
            best = (next, size);
        }
        next += 1;
    }
    GridMap::from_fn(width, height, |x, y| {
        label[(y * width + x) as usize] == best.0
    })
}
