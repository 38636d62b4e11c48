use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::grid::{bfs_dist, DistField, Vertex};
use crate::path::Path;
use crate::scenario::Instance;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("robot {agent} cannot reach its goal")]
pub struct Unreachable {
    pub agent: usize,
}

/// Sum of single-robot shortest distances, a lower bound on any plan's SOC.
pub fn soc_lower_bound(instance: &Instance) -> Result<u64, Unreachable> {
    let map = instance.map();
    let mut total = 0u64;
    for (agent, (&s, &g)) in instance.starts().iter().zip(instance.goals()).enumerate() {
        let d = bfs_dist(map, g)
            .ok()
            .and_then(|f| f.get(s))
            .ok_or(Unreachable { agent })?;
        total += u64::from(d);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOutcome {
    /// Minimum over plans of makespan at most the horizon of the number of
    /// (robot, timestep) pairs spent away from the goal.
    pub cost: u64,
    pub witness: Vec<Path>,
    /// `cost` is the optimal SOC: no robot of the witness leaves its goal
    /// after first reaching it, and no longer plan can be cheaper.
    pub soc_certified: bool,
}

type Config = Vec<Vertex>;

/// Exhaustive least-cost search over joint configurations up to timestep
/// `horizon`, where each step costs the number of robots not at their
/// goals. `None` when no collision-free plan reaches every goal in time.
/// Meant for a handful of robots on tiny maps.
pub fn oracle_optimal_soc(instance: &Instance, horizon: u32) -> Option<OracleOutcome> {
    let map = instance.map();
    let goals = instance.goals();
    let n = instance.num_agents();
    let dists: Vec<DistField> = goals
        .iter()
        .map(|&g| bfs_dist(map, g).ok())
        .collect::<Option<_>>()?;
    let h = |c: &Config| -> Option<u64> {
        c.iter()
            .zip(&dists)
            .map(|(&v, d)| d.get(v).map(u64::from))
            .sum()
    };
    let start: Config = instance.starts().to_vec();
    let h0 = h(&start)?;

    // A* over (configuration, t); the heuristic is consistent because each
    // robot away from its goal lowers its distance by at most one per step.
    let mut best: HashMap<(Config, u32), u64> = HashMap::new();
    let mut parent: HashMap<(Config, u32), Config> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert((start.clone(), 0), 0);
    heap.push(Reverse((h0, 0u64, 0u32, start)));
    let mut found = None;
    while let Some(Reverse((_, g, t, config))) = heap.pop() {
        if best.get(&(config.clone(), t)).is_some_and(|&b| b < g) {
            continue;
        }
        if config.as_slice() == goals {
            found = Some((config, t, g));
            break;
        }
        if t == horizon {
            continue;
        }
        let step = config.iter().zip(goals).filter(|(v, g)| v != g).count() as u64;
        let options: Vec<Vec<Vertex>> = config
            .iter()
            .map(|&v| {
                let mut o = vec![v];
                map.for_each_neighbor(v, |u| o.push(u));
                o
            })
            .collect();
        let mut next = vec![Vertex(0); n];
        successors(&config, &options, 0, &mut next, &mut |succ| {
            let key = (succ.to_vec(), t + 1);
            let g2 = g + step;
            if best.get(&key).is_none_or(|&b| g2 < b) {
                let Some(h2) = h(&key.0) else { return };
                best.insert(key.clone(), g2);
                parent.insert(key.clone(), config.clone());
                heap.push(Reverse((g2 + h2, g2, t + 1, key.0)));
            }
        });
    }

    let (config, t, cost) = found?;
    let mut configs = vec![config];
    let mut tt = t;
    while tt > 0 {
        let prev = parent[&(configs.last().unwrap().clone(), tt)].clone();
        configs.push(prev);
        tt -= 1;
    }
    configs.reverse();
    let witness: Vec<Path> = (0..n)
        .map(|a| Path::new(configs.iter().map(|c| c[a]).collect()))
        .collect();
    let stays = (0..n).all(|a| {
        let first = configs.iter().position(|c| c[a] == goals[a]).unwrap();
        configs[first..].iter().all(|c| c[a] == goals[a])
    });
    // A plan with makespan beyond the horizon has SOC at least horizon + 1.
    let soc_certified = stays && cost <= u64::from(horizon) + 1;
    Some(OracleOutcome {
        cost,
        witness,
        soc_certified,
    })
}

/// Enumerates collision-free joint moves, robot by robot.
fn successors(
    config: &[Vertex],
    options: &[Vec<Vertex>],
    i: usize,
    next: &mut Vec<Vertex>,
    emit: &mut dyn FnMut(&[Vertex]),
) {
    if i == config.len() {
        emit(next);
        return;
    }
    for &v in &options[i] {
        let clash = (0..i).any(|j| next[j] == v || (next[j] == config[i] && config[j] == v));
        if !clash {
            next[i] = v;
            successors(config, options, i + 1, next, emit);
        }
    }
}
