//! Plan files: `# key=value` metadata lines, then one line per robot with
//! its index and the `(x,y)` cells it occupies at t = 0, 1, ...

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{GridError, GridMap};
use crate::path::Path;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanFileError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("robot indices must be 0..n in order; line {line} has {got}")]
    BadIndex { line: usize, got: usize },
    #[error("robot {agent}, step {t}: {source}")]
    Cell {
        agent: usize,
        t: usize,
        source: GridError,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Plan {
    pub meta: BTreeMap<String, String>,
    pub paths: Vec<Vec<(u32, u32)>>,
}

impl Plan {
    pub fn from_paths(map: &GridMap, paths: &[Path]) -> Self {
        Self {
            meta: BTreeMap::new(),
            paths: paths
                .iter()
                .map(|p| p.cells().iter().map(|&v| map.coord(v)).collect())
                .collect(),
        }
    }

    /// Converts coordinates to vertices, rejecting blocked or off-map cells.
    pub fn to_paths(&self, map: &GridMap) -> Result<Vec<Path>, PlanFileError> {
        self.paths
            .iter()
            .enumerate()
            .map(|(agent, cells)| {
                cells
                    .iter()
                    .enumerate()
                    .map(|(t, &(x, y))| {
                        map.passable_vertex(x.into(), y.into())
                            .map_err(|source| PlanFileError::Cell { agent, t, source })
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(Path::new)
            })
            .collect()
    }
}

pub fn serialize_plan(plan: &Plan) -> String {
    let mut out = String::new();
    for (k, v) in &plan.meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    for (i, cells) in plan.paths.iter().enumerate() {
        let _ = write!(out, "{i}");
        for (x, y) in cells {
            let _ = write!(out, " ({x},{y})");
        }
        out.push('\n');
    }
    out
}

fn parse_cell(tok: &str) -> Option<(u32, u32)> {
    let inner = tok.strip_prefix('(')?.strip_suffix(')')?;
    let (x, y) = inner.split_once(',')?;
    Some((x.trim().parse().ok()?, y.trim().parse().ok()?))
}

pub fn parse_plan(text: &str) -> Result<Plan, PlanFileError> {
    let mut plan = Plan::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let (k, v) = rest
                .trim()
                .split_once('=')
                .ok_or(PlanFileError::Malformed {
                    line,
                    reason: "metadata needs key=value".into(),
                })?;
            plan.meta.insert(k.trim().to_string(), v.trim().to_string());
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let idx = toks.next().unwrap();
        let idx: usize = idx.parse().map_err(|_| PlanFileError::Malformed {
            line,
            reason: format!("bad robot index {idx:?}"),
        })?;
        if idx != plan.paths.len() {
            return Err(PlanFileError::BadIndex { line, got: idx });
        }
        let cells = toks
            .map(|t| {
                parse_cell(t).ok_or_else(|| PlanFileError::Malformed {
                    line,
                    reason: format!("bad cell {t:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if cells.is_empty() {
            return Err(PlanFileError::Malformed {
                line,
                reason: "robot has no cells".into(),
            });
        }
        plan.paths.push(cells);
    }
    Ok(plan)
}
