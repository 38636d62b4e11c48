//! 4-connected grid graphs and MovingAI `.map` ingestion.
//!
//! Coordinates are `(x, y)` = (column, row) with `(0, 0)` at the top-left
//! corner, which is the row order of MovingAI files.

use std::collections::VecDeque;
use std::fmt;
use std::num::NonZeroU32;

use smallvec::SmallVec;
use thiserror::Error;

/// A grid cell, stored as the row-major index `y * width + x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex(pub u32);

impl Vertex {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Errors from parsing a MovingAI map file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("missing header field `{0}`")]
    MissingHeader(&'static str),

    #[error("invalid value for header `{field}`: {value:?}")]
    InvalidHeader { field: &'static str, value: String },

    #[error("unexpected header line {0:?}")]
    UnknownHeaderLine(String),

    #[error("expected {expected} map rows, found {got}")]
    RowCountMismatch { expected: usize, got: usize },

    #[error("row {row}: expected {expected} cells, found {got}")]
    RowLengthMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("row {row}, column {col}: unknown glyph {glyph:?}")]
    UnknownGlyph { row: usize, col: usize, glyph: char },
}

/// Errors from vertex queries.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("cell ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfBounds {
        x: i64,
        y: i64,
        width: u32,
        height: u32,
    },

    #[error("cell ({x}, {y}) is blocked")]
    Blocked { x: u32, y: u32 },
}

/// A 4-connected grid with passable and blocked cells.
///
/// The original glyphs are kept so that a parsed map re-serializes to the
/// same text.
#[derive(Clone, PartialEq, Eq)]
pub struct GridMap {
    width: u32,
    height: u32,
    kind: String,
    glyphs: Vec<u8>,
    passable: Vec<bool>,
}

impl fmt::Debug for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridMap")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("passable", &self.passable.iter().filter(|&&p| p).count())
            .finish()
    }
}

fn glyph_passable(glyph: u8) -> Option<bool> {
    match glyph {
        b'.' | b'G' => Some(true),
        b'@' | b'T' | b'O' => Some(false),
        _ => None,
    }
}

impl GridMap {
    /// Obstacle-free `width x height` grid.
    pub fn empty(width: u32, height: u32) -> Self {
        Self::from_fn(width, height, |_, _| true)
    }

    /// Builds a grid from a passability predicate over `(x, y)`.
    pub fn from_fn(width: u32, height: u32, mut passable: impl FnMut(u32, u32) -> bool) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "grid dimensions must be positive"
        );
        let mut glyphs = Vec::with_capacity((width * height) as usize);
        let mut cells = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                let p = passable(x, y);
                glyphs.push(if p { b'.' } else { b'@' });
                cells.push(p);
            }
        }
        Self {
            width,
            height,
            kind: "octile".to_string(),
            glyphs,
            passable: cells,
        }
    }

    /// Parses the MovingAI map format.
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));

        let mut kind = None;
        let mut height = None;
        let mut width = None;
        let mut saw_map = false;
        for line in lines.by_ref() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "map" {
                saw_map = true;
                break;
            }
            let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let value = value.trim();
            match key {
                "type" => kind = Some(value.to_string()),
                "height" => height = Some(parse_dim("height", value)?),
                "width" => width = Some(parse_dim("width", value)?),
                _ => return Err(MapError::UnknownHeaderLine(line.to_string())),
            }
        }
        let kind = kind.ok_or(MapError::MissingHeader("type"))?;
        let height = height.ok_or(MapError::MissingHeader("height"))?;
        let width = width.ok_or(MapError::MissingHeader("width"))?;
        if !saw_map {
            return Err(MapError::MissingHeader("map"));
        }

        let mut glyphs = Vec::with_capacity((width * height) as usize);
        let mut passable = Vec::with_capacity((width * height) as usize);
        let mut rows = 0usize;
        for line in lines {
            if rows >= height as usize {
                if line.trim().is_empty() {
                    continue;
                }
                rows += 1;
                continue;
            }
            let bytes = line.as_bytes();
            if bytes.len() != width as usize {
                return Err(MapError::RowLengthMismatch {
                    row: rows,
                    expected: width as usize,
                    got: line.chars().count(),
                });
            }
            for (col, &glyph) in bytes.iter().enumerate() {
                let p = glyph_passable(glyph).ok_or_else(|| MapError::UnknownGlyph {
                    row: rows,
                    col,
                    glyph: line[col..].chars().next().unwrap_or('?'),
                })?;
                glyphs.push(glyph);
                passable.push(p);
            }
            rows += 1;
        }
        if rows != height as usize {
            return Err(MapError::RowCountMismatch {
                expected: height as usize,
                got: rows,
            });
        }
        Ok(Self {
            width,
            height,
            kind,
            glyphs,
            passable,
        })
    }

    /// Serializes back to the MovingAI map format.
    pub fn to_map_string(&self) -> String {
        let mut out = format!(
            "type {}\nheight {}\nwidth {}\nmap\n",
            self.kind, self.height, self.width
        );
        for row in self.glyphs.chunks(self.width as usize) {
            out.push_str(std::str::from_utf8(row).expect("glyphs are ASCII"));
            out.push('\n');
        }
        out
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.passable.len()
    }

    /// The vertex at `(x, y)`, if in bounds. The cell may be blocked.
    pub fn vertex(&self, x: u32, y: u32) -> Option<Vertex> {
        (x < self.width && y < self.height).then(|| Vertex(y * self.width + x))
    }

    /// The vertex at `(x, y)`, which must be in bounds and passable.
    pub fn passable_vertex(&self, x: i64, y: i64) -> Result<Vertex, GridError> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return Err(GridError::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        let v = Vertex(y as u32 * self.width + x as u32);
        if !self.is_passable(v) {
            return Err(GridError::Blocked {
                x: x as u32,
                y: y as u32,
            });
        }
        Ok(v)
    }

    pub fn coord(&self, v: Vertex) -> (u32, u32) {
        (v.0 % self.width, v.0 / self.width)
    }

    pub fn is_passable(&self, v: Vertex) -> bool {
        self.passable.get(v.index()).copied().unwrap_or(false)
    }

    pub fn passable_cells(&self) -> Vec<Vertex> {
        (0..self.passable.len() as u32)
            .map(Vertex)
            .filter(|&v| self.passable[v.index()])
            .collect()
    }

    pub fn num_passable(&self) -> usize {
        self.passable.iter().filter(|&&p| p).count()
    }

    fn check(&self, v: Vertex) -> Result<(), GridError> {
        if v.index() >= self.passable.len() {
            return Err(GridError::OutOfBounds {
                x: (v.0 % self.width) as i64,
                y: (v.0 / self.width) as i64,
                width: self.width,
                height: self.height,
            });
        }
        if !self.passable[v.index()] {
            let (x, y) = self.coord(v);
            return Err(GridError::Blocked { x, y });
        }
        Ok(())
    }

    /// The passable 4-neighbors of a passable vertex.
    pub fn neighbors(&self, v: Vertex) -> Result<SmallVec<[Vertex; 4]>, GridError> {
        self.check(v)?;
        let mut out = SmallVec::new();
        self.for_each_neighbor(v, |u| out.push(u));
        Ok(out)
    }

    /// Calls `f` on each passable 4-neighbor of `v` in the order
    /// right, left, down, up. `v` is not checked.
    #[inline]
    pub fn for_each_neighbor(&self, v: Vertex, mut f: impl FnMut(Vertex)) {
        let (x, y) = self.coord(v);
        let w = self.width;
        if x + 1 < w && self.passable[v.index() + 1] {
            f(Vertex(v.0 + 1));
        }
        if x > 0 && self.passable[v.index() - 1] {
            f(Vertex(v.0 - 1));
        }
        if y + 1 < self.height && self.passable[(v.0 + w) as usize] {
            f(Vertex(v.0 + w));
        }
        if y > 0 && self.passable[(v.0 - w) as usize] {
            f(Vertex(v.0 - w));
        }
    }

    /// True when `u` and `v` are equal or 4-adjacent.
    pub fn adjacent_or_same(&self, u: Vertex, v: Vertex) -> bool {
        if u == v {
            return true;
        }
        let (ux, uy) = self.coord(u);
        let (vx, vy) = self.coord(v);
        ux.abs_diff(vx) + uy.abs_diff(vy) == 1
    }
}

fn parse_dim(field: &'static str, value: &str) -> Result<u32, MapError> {
    match value.parse::<u32>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(MapError::InvalidHeader {
            field,
            value: value.to_string(),
        }),
    }
}

/// Shorthand for [`GridMap::parse`].
pub fn parse_map(text: &str) -> Result<GridMap, MapError> {
    GridMap::parse(text)
}

/// Shortest-path distances from every cell to one goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistField {
    goal: Vertex,
    // Distance plus one; `None` marks unreachable and blocked cells.
    dist: Vec<Option<NonZeroU32>>,
}

impl DistField {
    pub fn goal(&self) -> Vertex {
        self.goal
    }

    /// Distance from `v` to the goal; `None` when unreachable or blocked.
    #[inline]
    pub fn get(&self, v: Vertex) -> Option<u32> {
        self.dist
            .get(v.index())
            .copied()
            .flatten()
            .map(|d| d.get() - 1)
    }
}

/// Breadth-first distances to `goal` over the passable cells.
pub fn bfs_dist(map: &GridMap, goal: Vertex) -> Result<DistField, GridError> {
    map.check(goal)?;
    let mut dist: Vec<Option<NonZeroU32>> = vec![None; map.num_cells()];
    dist[goal.index()] = NonZeroU32::new(1);
    let mut queue = VecDeque::from([goal]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v.index()].map_or(1, NonZeroU32::get) + 1;
        map.for_each_neighbor(v, |u| {
            if dist[u.index()].is_none() {
                dist[u.index()] = NonZeroU32::new(d);
                queue.push_back(u);
            }
        });
    }
    Ok(DistField { goal, dist })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xy(map: &GridMap, x: u32, y: u32) -> Vertex {
        map.vertex(x, y).unwrap()
    }

    #[test]
    fn parses_smallest_map() {
        let map = parse_map("type octile\nheight 1\nwidth 1\nmap\n.").unwrap();
        assert_eq!((map.width(), map.height()), (1, 1));
        assert!(map.is_passable(xy(&map, 0, 0)));
    }

    #[test]
    fn parses_two_by_two() {
        let map = parse_map("type octile\nheight 2\nwidth 2\nmap\n.@\n..").unwrap();
        let passable: Vec<_> = map.passable_cells().iter().map(|&v| map.coord(v)).collect();
        assert_eq!(passable, vec![(0, 0), (0, 1), (1, 1)]);
        assert!(!map.is_passable(xy(&map, 1, 0)));
    }

    #[test]
    fn glyph_conventions() {
        let map = parse_map("type octile\nheight 1\nwidth 5\nmap\n.G@TO").unwrap();
        let p: Vec<bool> = (0..5).map(|x| map.is_passable(xy(&map, x, 0))).collect();
        assert_eq!(p, vec![true, true, false, false, false]);
    }

    #[test]
    fn rejects_unknown_glyph() {
        let err = parse_map("type octile\nheight 1\nwidth 2\nmap\n.X").unwrap_err();
        assert_eq!(
            err,
            MapError::UnknownGlyph {
                row: 0,
                col: 1,
                glyph: 'X'
            }
        );
    }

    #[test]
    fn rejects_malformed_headers_and_shapes() {
        assert_eq!(
            parse_map("height 1\nwidth 1\nmap\n.").unwrap_err(),
            MapError::MissingHeader("type")
        );
        assert!(matches!(
            parse_map("type octile\nheight x\nwidth 1\nmap\n.").unwrap_err(),
            MapError::InvalidHeader {
                field: "height",
                ..
            }
        ));
        assert_eq!(
            parse_map("type octile\nheight 1\nwidth 1\n.").unwrap_err(),
            MapError::UnknownHeaderLine(".".into())
        );
        assert_eq!(
            parse_map("type octile\nheight 2\nwidth 1\nmap\n.").unwrap_err(),
            MapError::RowCountMismatch {
                expected: 2,
                got: 1
            }
        );
        assert_eq!(
            parse_map("type octile\nheight 1\nwidth 1\nmap\n.\n.").unwrap_err(),
            MapError::RowCountMismatch {
                expected: 1,
                got: 2
            }
        );
        assert_eq!(
            parse_map("type octile\nheight 1\nwidth 2\nmap\n...").unwrap_err(),
            MapError::RowLengthMismatch {
                row: 0,
                expected: 2,
                got: 3
            }
        );
    }

    #[test]
    fn neighbor_examples() {
        let map = GridMap::empty(3, 3);
        assert_eq!(map.neighbors(xy(&map, 1, 1)).unwrap().len(), 4);
        let mut corner: Vec<_> = map
            .neighbors(xy(&map, 0, 0))
            .unwrap()
            .iter()
            .map(|&v| map.coord(v))
            .collect();
        corner.sort();
        assert_eq!(corner, vec![(0, 1), (1, 0)]);

        let blocked = GridMap::from_fn(2, 2, |x, y| (x, y) != (1, 0));
        let n: Vec<_> = blocked
            .neighbors(xy(&blocked, 0, 0))
            .unwrap()
            .iter()
            .map(|&v| blocked.coord(v))
            .collect();
        assert_eq!(n, vec![(0, 1)]);
        assert_eq!(
            blocked.neighbors(xy(&blocked, 1, 0)).unwrap_err(),
            GridError::Blocked { x: 1, y: 0 }
        );
        assert!(matches!(
            blocked.neighbors(Vertex(9)).unwrap_err(),
            GridError::OutOfBounds { .. }
        ));
    }

    #[test]
    fn bfs_examples() {
        let corridor = GridMap::empty(3, 1);
        let d = bfs_dist(&corridor, xy(&corridor, 2, 0)).unwrap();
        let got: Vec<_> = (0..3).map(|x| d.get(xy(&corridor, x, 0))).collect();
        assert_eq!(got, vec![Some(2), Some(1), Some(0)]);

        let walled = GridMap::from_fn(3, 1, |x, _| x != 1);
        let d = bfs_dist(&walled, xy(&walled, 2, 0)).unwrap();
        assert_eq!(d.get(xy(&walled, 0, 0)), None);
        assert_eq!(d.get(xy(&walled, 1, 0)), None);
        assert_eq!(d.get(xy(&walled, 2, 0)), Some(0));

        assert!(bfs_dist(&walled, xy(&walled, 1, 0)).is_err());
    }

    fn arb_map() -> impl Strategy<Value = GridMap> {
        (1u32..=8, 1u32..=8).prop_flat_map(|(w, h)| {
            proptest::collection::vec(prop::bool::weighted(0.7), (w * h) as usize)
                .prop_map(move |cells| GridMap::from_fn(w, h, |x, y| cells[(y * w + x) as usize]))
        })
    }

    /// Exhaustive shortest path length by iterated relaxation over all cells,
    /// independent of the queue-based search.
    fn relaxation_dist(map: &GridMap, goal: Vertex) -> Vec<Option<u32>> {
        let n = map.num_cells();
        let mut d: Vec<Option<u32>> = vec![None; n];
        d[goal.index()] = Some(0);
        loop {
            let mut changed = false;
            for a in 0..n as u32 {
                for b in 0..n as u32 {
                    let (va, vb) = (Vertex(a), Vertex(b));
                    if a == b || !map.is_passable(va) || !map.is_passable(vb) {
                        continue;
                    }
                    if !map.adjacent_or_same(va, vb) {
                        continue;
                    }
                    if let Some(db) = d[b as usize] {
                        if d[a as usize].is_none_or(|da| db + 1 < da) {
                            d[a as usize] = Some(db + 1);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return d;
            }
        }
    }

    proptest! {
        #[test]
        fn bfs_matches_exhaustive(map in arb_map(), pick in any::<prop::sample::Index>()) {
            let cells = map.passable_cells();
            prop_assume!(!cells.is_empty());
            let goal = cells[pick.index(cells.len())];
            let field = bfs_dist(&map, goal).unwrap();
            let oracle = relaxation_dist(&map, goal);
            for v in 0..map.num_cells() as u32 {
                prop_assert_eq!(field.get(Vertex(v)), oracle[v as usize]);
            }
        }

        #[test]
        fn neighbors_symmetric(map in arb_map()) {
            for v in map.passable_cells() {
                for u in map.neighbors(v).unwrap() {
                    prop_assert!(u != v);
                    prop_assert!(map.neighbors(u).unwrap().contains(&v));
                }
            }
        }

        #[test]
        fn map_text_round_trip(map in arb_map()) {
            let text = map.to_map_string();
            let parsed = parse_map(&text).unwrap();
            prop_assert_eq!(parsed.to_map_string(), text);
            prop_assert_eq!(parsed, map);
        }
    }
}
