use std::collections::HashMap;

use smallvec::SmallVec;

use crate::grid::Vertex;
use crate::path::{makespan, Path};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConflictKind {
    /// Both robots occupy the vertex.
    Vertex(Vertex),
    /// `a1` moves `from -> to` while `a2` moves `to -> from`.
    Edge { from: Vertex, to: Vertex },
}

/// A collision between robots `a1 < a2` arriving at timestep `t`.
///
/// Ordering is by `(t, a1, a2, kind)`, the order in which conflicts are
/// reported and chosen for splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conflict {
    pub t: u32,
    pub a1: usize,
    pub a2: usize,
    pub kind: ConflictKind,
}

impl Conflict {
    pub fn vertex(a: usize, b: usize, v: Vertex, t: u32) -> Self {
        let (a1, a2) = if a < b { (a, b) } else { (b, a) };
        Self {
            t,
            a1,
            a2,
            kind: ConflictKind::Vertex(v),
        }
    }

    /// Edge conflict where robot `a` moves `from -> to` and `b` moves back.
    pub fn edge(a: usize, b: usize, from: Vertex, to: Vertex, t: u32) -> Self {
        debug_assert!(t >= 1);
        let (a1, a2, from, to) = if a < b {
            (a, b, from, to)
        } else {
            (b, a, to, from)
        };
        Self {
            t,
            a1,
            a2,
            kind: ConflictKind::Edge { from, to },
        }
    }

    pub fn involves(&self, agent: usize) -> bool {
        self.a1 == agent || self.a2 == agent
    }

    pub fn other(&self, agent: usize) -> usize {
        if self.a1 == agent {
            self.a2
        } else {
            self.a1
        }
    }
}

/// Conflicts between two padded paths for `t` in `[t_lo, t_hi)`, appended
/// to `out` in increasing `t`.
fn pair_conflicts(
    i: usize,
    pi: &Path,
    j: usize,
    pj: &Path,
    t_lo: u32,
    t_hi: u32,
    out: &mut Vec<Conflict>,
) {
    if pi.is_empty() || pj.is_empty() {
        return;
    }
    for t in t_lo..t_hi {
        let (vi, vj) = (pi.at(t), pj.at(t));
        if vi == vj {
            out.push(Conflict::vertex(i, j, vi, t));
        } else if t >= 1 {
            let (ui, uj) = (pi.at(t - 1), pj.at(t - 1));
            if ui == vj && vi == uj {
                out.push(Conflict::edge(i, j, ui, vi, t));
            }
        }
    }
}

/// Every vertex and edge conflict, checking each robot pair at each
/// timestep up to the makespan. Sorted by `(t, a1, a2)`.
pub fn detect_conflicts_brute<P: AsRef<Path>>(paths: &[P]) -> Vec<Conflict> {
    let end = makespan(paths) + 1;
    let mut out = Vec::new();
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            pair_conflicts(i, paths[i].as_ref(), j, paths[j].as_ref(), 0, end, &mut out);
        }
    }
    out.sort_unstable();
    out
}

/// Conflicts with arrival timestep in `[t_lo, t_hi)`, found by hashing
/// each robot's state per timestep. Edge conflicts belong to the window
/// holding their arrival timestep, so results over a partition of
/// `[0, makespan]` concatenate to the full conflict list.
pub fn detect_conflicts_windowed<P: AsRef<Path>>(
    paths: &[P],
    t_lo: u32,
    t_hi: u32,
) -> Vec<Conflict> {
    let t_hi = t_hi.min(makespan(paths) + 1);
    let mut out = Vec::new();
    let mut at: HashMap<Vertex, SmallVec<[usize; 2]>> = HashMap::with_capacity(paths.len());
    let mut moves: HashMap<(Vertex, Vertex), SmallVec<[usize; 1]>> = HashMap::new();
    for t in t_lo..t_hi {
        at.clear();
        moves.clear();
        for (a, p) in paths.iter().enumerate() {
            let p = p.as_ref();
            if p.is_empty() {
                continue;
            }
            let v = p.at(t);
            let here = at.entry(v).or_default();
            for &b in here.iter() {
                out.push(Conflict::vertex(b, a, v, t));
            }
            here.push(a);
            if t >= 1 {
                let u = p.at(t - 1);
                if u != v {
                    if let Some(back) = moves.get(&(v, u)) {
                        for &b in back {
                            out.push(Conflict::edge(a, b, u, v, t));
                        }
                    }
                    moves.entry((u, v)).or_default().push(a);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Conflicts between `agent` and every other robot.
pub fn conflicts_of_agent<P: AsRef<Path>>(paths: &[P], agent: usize) -> Vec<Conflict> {
    let mut out = Vec::new();
    let end = makespan(paths) + 1;
    let pa = paths[agent].as_ref();
    for (j, pj) in paths.iter().enumerate() {
        if j != agent {
            pair_conflicts(agent, pa, j, pj.as_ref(), 0, end, &mut out);
        }
    }
    out
}

/// Incremental recount after only `agent`'s path changed: conflicts not
/// involving `agent` are kept from `old`, the rest are recomputed.
pub fn recount_after_replan<P: AsRef<Path>>(
    old: &[Conflict],
    paths: &[P],
    agent: usize,
) -> Vec<Conflict> {
    // Two other robots parked on the same cell collide at every step up to
    // the makespan, which the replan may have moved.
    let mut finals = std::collections::HashSet::new();
    let shared_final = paths
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != agent)
        .filter_map(|(_, p)| p.as_ref().last())
        .any(|v| !finals.insert(v));
    if shared_final {
        return detect_conflicts_windowed(paths, 0, u32::MAX);
    }
    let mut out: Vec<Conflict> = old.iter().filter(|c| !c.involves(agent)).copied().collect();
    out.extend(conflicts_of_agent(paths, agent));
    out.sort_unstable();
    out
}

/// Greedy maximal subset of conflicts with pairwise disjoint robot pairs,
/// scanning in the given order.
pub fn find_disjoint_conflicts(conflicts: &[Conflict]) -> Vec<Conflict> {
    let mut used: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for c in conflicts {
        if used.contains(&c.a1) || used.contains(&c.a2) {
            continue;
        }
        used.push(c.a1);
        used.push(c.a2);
        out.push(*c);
    }
    out
}

/// Splits `[0, makespan]` into `k` contiguous windows of near-equal width.
pub fn partition_windows(makespan: u32, k: usize) -> Vec<(u32, u32)> {
    let span = makespan as u64 + 1;
    let k = (k.max(1) as u64).min(span);
    (0..k)
        .map(|i| ((span * i / k) as u32, (span * (i + 1) / k) as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(cells: &[u32]) -> Path {
        Path::new(cells.iter().copied().map(Vertex).collect())
    }

    #[test]
    fn swap_is_one_edge_conflict() {
        let paths = vec![p(&[0, 1]), p(&[1, 0])];
        let c = detect_conflicts_brute(&paths);
        assert_eq!(c, vec![Conflict::edge(0, 1, Vertex(0), Vertex(1), 1)]);
    }

    #[test]
    fn parked_robot_is_hit_later() {
        // 3x1 corridor, cells 0,1,2. Robot 0 parks at 2 from t=2; robot 1
        // waits at 0 and enters 2 at t=5.
        let paths = vec![p(&[1, 1, 2]), p(&[0, 0, 0, 0, 1, 2])];
        let c = detect_conflicts_brute(&paths);
        assert_eq!(c, vec![Conflict::vertex(0, 1, Vertex(2), 5)]);
    }

    #[test]
    fn disjoint_paths_have_no_conflicts() {
        let paths = vec![p(&[0, 1, 2]), p(&[5, 4, 3])];
        assert!(detect_conflicts_brute(&paths).is_empty());
        assert!(detect_conflicts_windowed(&paths, 0, 10).is_empty());
    }

    #[test]
    fn windowed_examples() {
        let paths = vec![p(&[0, 1, 2, 3]), p(&[3, 2, 1, 0]), p(&[7, 3])];
        let full = detect_conflicts_brute(&paths);
        assert!(!full.is_empty());
        assert_eq!(
            detect_conflicts_windowed(&paths, 0, makespan(&paths) + 1),
            full
        );
        assert!(detect_conflicts_windowed(&paths, 2, 2).is_empty());
        let mut joined = detect_conflicts_windowed(&paths, 0, 2);
        joined.extend(detect_conflicts_windowed(&paths, 2, 4));
        assert_eq!(joined, full);
    }

    #[test]
    fn recount_examples() {
        let mut paths = vec![p(&[0, 1, 2]), p(&[2, 1, 0]), p(&[5, 6]), p(&[6, 5])];
        let old = detect_conflicts_brute(&paths);
        assert_eq!(recount_after_replan(&old, &paths, 0), old);
        // Move robot 3 away from its swap with robot 2.
        paths[3] = p(&[6, 7]);
        let new = recount_after_replan(&old, &paths, 3);
        assert_eq!(new, detect_conflicts_brute(&paths));
        assert!(new.iter().all(|c| !c.involves(3)));
        assert!(new.iter().any(|c| c.involves(0)));
    }

    #[test]
    fn disjoint_examples() {
        let c = |a, b| Conflict::vertex(a, b, Vertex(0), 1);
        assert_eq!(
            find_disjoint_conflicts(&[c(1, 2), c(2, 3), c(4, 5)]),
            vec![c(1, 2), c(4, 5)]
        );
        let all = [c(0, 1), c(2, 3), c(4, 5)];
        assert_eq!(find_disjoint_conflicts(&all), all.to_vec());
        assert!(find_disjoint_conflicts(&[]).is_empty());
    }

    #[test]
    fn windows_partition() {
        assert_eq!(partition_windows(9, 3), vec![(0, 3), (3, 6), (6, 10)]);
        assert_eq!(partition_windows(1, 8), vec![(0, 1), (1, 2)]);
        assert_eq!(partition_windows(0, 1), vec![(0, 1)]);
    }

    fn arb_paths() -> impl Strategy<Value = Vec<Path>> {
        proptest::collection::vec(
            proptest::collection::vec(0u32..12, 1..20)
                .prop_map(|cells| Path::new(cells.into_iter().map(Vertex).collect())),
            1..8,
        )
    }

    proptest! {
        #[test]
        fn windowed_partition_equals_brute(paths in arb_paths(), k in 1usize..6) {
            let brute = detect_conflicts_brute(&paths);
            let mut joined = Vec::new();
            for (lo, hi) in partition_windows(makespan(&paths), k) {
                joined.extend(detect_conflicts_windowed(&paths, lo, hi));
            }
            prop_assert_eq!(joined, brute);
        }
    }
}
