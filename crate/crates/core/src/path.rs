use crate::grid::Vertex;

/// A timed single-robot path: `cells[t]` is the position at timestep `t`.
///
/// Trailing repeats of the final cell are dropped on construction, so the
/// last index is the final arrival time. The robot is treated as parked on
/// its last cell for every later timestep.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    cells: Vec<Vertex>,
}

impl Path {
    pub fn new(mut cells: Vec<Vertex>) -> Self {
        while cells.len() >= 2 && cells[cells.len() - 1] == cells[cells.len() - 2] {
            cells.pop();
        }
        Self { cells }
    }

    pub fn cells(&self) -> &[Vertex] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Final arrival time, i.e. this robot's contribution to the sum of costs.
    pub fn cost(&self) -> u64 {
        self.cells.len().saturating_sub(1) as u64
    }

    pub fn last_time(&self) -> u32 {
        self.cells.len().saturating_sub(1) as u32
    }

    /// Position at `t`, padded with the final cell. Panics on an empty path.
    #[inline]
    pub fn at(&self, t: u32) -> Vertex {
        let t = t as usize;
        if t < self.cells.len() {
            self.cells[t]
        } else {
            self.cells[self.cells.len() - 1]
        }
    }

    pub fn first(&self) -> Option<Vertex> {
        self.cells.first().copied()
    }

    pub fn last(&self) -> Option<Vertex> {
        self.cells.last().copied()
    }
}

impl AsRef<Path> for Path {
    fn as_ref(&self) -> &Path {
        self
    }
}

/// Sum of final arrival times.
pub fn sum_of_costs<P: AsRef<Path>>(paths: &[P]) -> u64 {
    paths.iter().map(|p| p.as_ref().cost()).sum()
}

/// Largest final arrival time.
pub fn makespan<P: AsRef<Path>>(paths: &[P]) -> u32 {
    paths
        .iter()
        .map(|p| p.as_ref().last_time())
        .max()
        .unwrap_or(0)
}
