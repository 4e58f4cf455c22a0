//! Static 4-connected grid maps, cells, and the five-action move set.

use std::fmt;

use thiserror::Error;

/// Index of an agent; stable over an episode.
pub type AgentId = usize;

/// A grid cell. `x` is the column, `y` the row; `(0, 0)` is the top-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    /// Manhattan distance to another cell.
    pub fn manhattan(&self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// One of the five moves an agent can take per time step: stand still or step
/// to a 4-adjacent cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Action {
    Wait,
    Up,
    Down,
    Left,
    Right,
}

/// Canonical action order; used for enumeration and deterministic tie-breaks.
pub const ACTIONS: [Action; 5] = [
    Action::Wait,
    Action::Up,
    Action::Down,
    Action::Left,
    Action::Right,
];

impl Action {
    /// Displacement `(dx, dy)` of the action. `Wait` is `(0, 0)`.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Wait => (0, 0),
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }

    /// Position in [`ACTIONS`].
    pub fn index(self) -> usize {
        match self {
            Action::Wait => 0,
            Action::Up => 1,
            Action::Down => 2,
            Action::Left => 3,
            Action::Right => 4,
        }
    }

    /// Cell reached by applying this action from `from`.
    pub fn apply(self, from: Cell) -> Cell {
        let (dx, dy) = self.delta();
        Cell::new(from.x + dx, from.y + dy)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::Wait => "wait",
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("map must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("map has no free cell")]
    NoFreeCell,
    #[error("map file: missing `{0}` header line")]
    MissingHeader(&'static str),
    #[error("map file: bad header line {0:?}")]
    BadHeader(String),
    #[error("map file: row {row} has {got} cells, expected {want}")]
    BadRowLength { row: usize, got: usize, want: usize },
    #[error("map file: {got} rows, expected {want}")]
    BadRowCount { got: usize, want: usize },
    #[error("map file: unknown cell character {0:?}")]
    BadCell(char),
}

/// Static obstacle grid. Blocked flags are stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
}

impl GridMap {
    /// Build a map from row-major blocked flags. Requires positive dimensions
    /// and at least one free cell.
    pub fn new(width: usize, height: usize, blocked: Vec<bool>) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::EmptyDimensions { width, height });
        }
        assert_eq!(blocked.len(), width * height, "blocked vector length");
        if blocked.iter().all(|&b| b) {
            return Err(MapError::NoFreeCell);
        }
        Ok(GridMap {
            width,
            height,
            blocked,
        })
    }

    /// An all-free map.
    pub fn open(width: usize, height: usize) -> Self {
        GridMap::new(width, height, vec![false; width * height]).expect("open map is valid")
    }

    /// Build from ASCII rows, `.` free and `#` blocked, as in [`GridMap::parse`]
    /// but without the header. Handy for tests.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows[0].len();
        let mut blocked = Vec::with_capacity(width * height);
        for row in rows {
            assert_eq!(row.len(), width, "ragged ascii map");
            for c in row.chars() {
                blocked.push(parse_cell_char(c).expect("ascii map cell"));
            }
        }
        GridMap::new(width, height, blocked).expect("ascii map is valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    /// Row-major index of an in-bounds cell.
    pub fn index(&self, c: Cell) -> usize {
        debug_assert!(self.in_bounds(c));
        c.y as usize * self.width + c.x as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as i32, (index / self.width) as i32)
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        !self.in_bounds(c) || self.blocked[self.index(c)]
    }

    /// In bounds and not an obstacle.
    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked[self.index(c)]
    }

    /// All free cells in row-major order.
    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.cell_count())
            .filter(|&i| !self.blocked[i])
            .map(|i| self.cell_at(i))
            .collect()
    }

    pub fn free_cell_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| !b).count()
    }

    /// Actions whose destination stays on the grid and off obstacles.
    /// `Wait` is always included (the agent's own cell is free by invariant).
    pub fn valid_actions(&self, from: Cell) -> Vec<Action> {
        ACTIONS
            .iter()
            .copied()
            .filter(|a| self.is_free(a.apply(from)))
            .collect()
    }

    /// Serialize to the ASCII map format:
    ///
    /// ```text
    /// height 2
    /// width 3
    /// map
    /// .#.
    /// ...
    /// ```
    pub fn format(&self) -> String {
        let mut out = String::with_capacity(self.cell_count() + self.height + 32);
        out.push_str(&format!("height {}\n", self.height));
        out.push_str(&format!("width {}\n", self.width));
        out.push_str("map\n");
        for y in 0..self.height {
            for x in 0..self.width {
                let b = self.blocked[y * self.width + x];
                out.push(if b { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    /// Parse the ASCII map format emitted by [`GridMap::format`]. Accepts the
    /// common benchmark-file variations: an optional `type ...` line, headers
    /// in either order, an optional `map` separator, and the usual obstacle
    /// characters (`@`, `O`, `T`, `W` blocked; `G`, `S` free).
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut height: Option<usize> = None;
        let mut width: Option<usize> = None;
        let mut rows: Vec<&str> = Vec::new();
        let mut in_grid = false;
        for line in text.lines() {
            if in_grid {
                if !line.is_empty() {
                    rows.push(line);
                }
                continue;
            }
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with("type ") {
                continue;
            }
            if trimmed == "map" {
                in_grid = true;
                continue;
            }
            if let Some(v) = trimmed.strip_prefix("height ") {
                height = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| MapError::BadHeader(line.to_string()))?,
                );
            } else if let Some(v) = trimmed.strip_prefix("width ") {
                width = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| MapError::BadHeader(line.to_string()))?,
                );
            } else if height.is_some() && width.is_some() {
                // First grid row of a file without a `map` separator.
                in_grid = true;
                rows.push(line);
            } else {
                return Err(MapError::BadHeader(line.to_string()));
            }
        }
        let height = height.ok_or(MapError::MissingHeader("height"))?;
        let width = width.ok_or(MapError::MissingHeader("width"))?;
        if rows.len() != height {
            return Err(MapError::BadRowCount {
                got: rows.len(),
                want: height,
            });
        }
        let mut blocked = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(MapError::BadRowLength {
                    row: y,
                    got: row.chars().count(),
                    want: width,
                });
            }
            for c in row.chars() {
                blocked.push(parse_cell_char(c)?);
            }
        }
        GridMap::new(width, height, blocked)
    }
}

fn parse_cell_char(c: char) -> Result<bool, MapError> {
    match c {
        '.' | 'G' | 'S' => Ok(false),
        '#' | '@' | 'O' | 'T' | 'W' => Ok(true),
        other => Err(MapError::BadCell(other)),
    }
}
