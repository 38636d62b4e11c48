use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Vertex;
use crate::lowlevel::{Constraint, ConstraintKind};
use crate::path::Path;
use crate::scenario::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    VertexConflict,
    EdgeConflict,
    Discontinuity,
    WrongStart,
    WrongGoal,
    ConstraintBreach,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub agent: usize,
    /// The second robot of a conflict.
    pub other: Option<usize>,
    /// Timestep of arrival for moves and conflicts, 0 for endpoints.
    pub t: u32,
    /// Cell involved, when it is on the map.
    pub cell: Option<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub soc: u64,
    pub makespan: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("expected {expected} paths, got {got}")]
pub struct PathCountMismatch {
    pub expected: usize,
    pub got: usize,
}

/// Checks endpoints, per-step moves and collisions of a plan, with paths
/// padded at their last cell, and reports every violation found.
pub fn validate_solution<P: AsRef<Path>>(
    instance: &Instance,
    paths: &[P],
) -> Result<ValidationReport, PathCountMismatch> {
    validate_with_constraints(instance, paths, &[])
}

/// [`validate_solution`] that also reports breaches of `constraints`.
pub fn validate_with_constraints<P: AsRef<Path>>(
    instance: &Instance,
    paths: &[P],
    constraints: &[Constraint],
) -> Result<ValidationReport, PathCountMismatch> {
    let n = instance.num_agents();
    if paths.len() != n {
        return Err(PathCountMismatch {
            expected: n,
            got: paths.len(),
        });
    }
    let map = instance.map();
    let on_map = |v: Vertex| v.index() < map.num_cells();
    let cell = |v: Vertex| on_map(v).then(|| map.coord(v));
    let mut violations = Vec::new();
    let mut push = |kind, agent, other, t, v: Option<Vertex>| {
        violations.push(Violation {
            kind,
            agent,
            other,
            t,
            cell: v.and_then(cell),
        })
    };

    for (a, p) in paths.iter().enumerate() {
        let cells = p.as_ref().cells();
        if cells.first() != Some(&instance.starts()[a]) {
            push(
                ViolationKind::WrongStart,
                a,
                None,
                0,
                cells.first().copied(),
            );
        }
        if cells.last() != Some(&instance.goals()[a]) {
            push(ViolationKind::WrongGoal, a, None, 0, cells.last().copied());
        }
        for (t, &v) in cells.iter().enumerate() {
            let t = t as u32;
            if !on_map(v) || !map.is_passable(v) {
                push(ViolationKind::ConstraintBreach, a, None, t, Some(v));
                continue;
            }
            if t > 0 {
                let u = cells[t as usize - 1];
                if on_map(u) && !map.adjacent_or_same(u, v) {
                    push(ViolationKind::Discontinuity, a, None, t, Some(v));
                }
            }
        }
    }

    let horizon = paths
        .iter()
        .map(|p| p.as_ref().last_time())
        .max()
        .unwrap_or(0);
    let at = |a: usize, t: u32| -> Option<Vertex> {
        let cells = paths[a].as_ref().cells();
        cells.get(t as usize).or(cells.last()).copied()
    };
    for c in constraints {
        let breached = match c.kind {
            ConstraintKind::Vertex(v) => at(c.agent, c.t) == Some(v),
            ConstraintKind::Edge { from, to } => {
                at(c.agent, c.t - 1) == Some(from) && at(c.agent, c.t) == Some(to)
            }
        };
        if breached {
            push(
                ViolationKind::ConstraintBreach,
                c.agent,
                None,
                c.t,
                at(c.agent, c.t),
            );
        }
    }

    let mut occupied: HashMap<Vertex, usize> = HashMap::with_capacity(n);
    let mut moves: HashMap<(Vertex, Vertex), usize> = HashMap::with_capacity(n);
    for t in 0..=horizon {
        occupied.clear();
        moves.clear();
        for a in 0..n {
            let Some(v) = at(a, t) else { continue };
            if let Some(&b) = occupied.get(&v) {
                push(ViolationKind::VertexConflict, b, Some(a), t, Some(v));
            } else {
                occupied.insert(v, a);
            }
            if t > 0 {
                let u = at(a, t - 1).expect("non-empty path");
                if u != v {
                    if let Some(&b) = moves.get(&(v, u)) {
                        push(ViolationKind::EdgeConflict, b, Some(a), t, Some(u));
                    }
                    moves.insert((u, v), a);
                }
            }
        }
    }

    Ok(ValidationReport {
        ok: violations.is_empty(),
        violations,
        soc: paths.iter().map(|p| p.as_ref().cost()).sum(),
        makespan: horizon,
    })
}
