//! Generators for the three evaluation map families and their instances.
//!
//! * `random`: uniformly scattered obstacles at a target density, retried
//!   until the largest free component covers at least 80% of the free cells;
//! * `maze`: corridor mazes from a randomized depth-first spanning carve on
//!   a coarse lattice, braided by knocking out a fraction of the remaining
//!   interior walls;
//! * `warehouse`: a fixed 46 x 33 layout of shelf blocks with open bands on
//!   the left and right edges.
//!
//! Instances place agent starts (and, for the warehouse, restrict the goal
//! stream to shelf-adjacent cells); initial goals come from the world's
//! seeded goal stream.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{Cell, GridMap, ACTIONS};
use crate::world::{World, WorldError};

/// Map family of an instance; decides placement rules and the goal domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Random,
    Maze,
    Warehouse,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Random => "random",
            Family::Maze => "maze",
            Family::Warehouse => "warehouse",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Family::Random),
            "maze" => Ok(Family::Maze),
            "warehouse" => Ok(Family::Warehouse),
            other => Err(format!("unknown map family {other:?}")),
        }
    }
}

/// Parameters identifying one generated map.
#[derive(Clone, Copy, Debug)]
pub struct MapSpec {
    pub family: Family,
    pub width: usize,
    pub height: usize,
    /// Obstacle fraction; used by the random family only.
    pub density: f64,
    pub seed: u64,
}

impl MapSpec {
    pub fn generate(&self) -> Result<GridMap, MapGenError> {
        match self.family {
            Family::Random => random_map(self.width, self.height, self.density, self.seed),
            Family::Maze => Ok(maze_map(self.width, self.height, self.seed)),
            Family::Warehouse => Ok(warehouse_map()),
        }
    }

    /// Stable identifier used in result tables and file names.
    pub fn id(&self) -> String {
        match self.family {
            Family::Random => format!(
                "random{}x{}-d{:02}-s{}",
                self.width,
                self.height,
                (self.density * 100.0).round() as u32,
                self.seed
            ),
            Family::Maze => format!("maze{}x{}-s{}", self.width, self.height, self.seed),
            Family::Warehouse => "warehouse46x33".to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum MapGenError {
    #[error("density {0} outside [0, 1)")]
    BadDensity(f64),
    #[error("no sufficiently connected map found in {tries} tries (density {density})")]
    RetriesExhausted { tries: u32, density: f64 },
    #[error("not enough candidate cells: need {need}, have {have}")]
    NotEnoughCells { need: usize, have: usize },
    #[error("warehouse instances support at most {max} agents, requested {requested}")]
    TooManyAgents { requested: usize, max: usize },
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Largest connected component size over the free cells.
fn largest_free_component(map: &GridMap) -> usize {
    let mut seen = vec![false; map.cell_count()];
    let mut best = 0;
    for start in map.free_cells() {
        if seen[map.index(start)] {
            continue;
        }
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        seen[map.index(start)] = true;
        while let Some(c) = queue.pop_front() {
            size += 1;
            for a in ACTIONS.iter().skip(1) {
                let n = a.apply(c);
                if map.is_free(n) && !seen[map.index(n)] {
                    seen[map.index(n)] = true;
                    queue.push_back(n);
                }
            }
        }
        best = best.max(size);
    }
    best
}

/// A map with `round(density * cells)` obstacles placed uniformly at random.
/// Regenerates (up to a bounded number of tries) until the largest free
/// component holds at least 80% of the free cells.
pub fn random_map(
    width: usize,
    height: usize,
    density: f64,
    seed: u64,
) -> Result<GridMap, MapGenError> {
    if !(0.0..1.0).contains(&density) {
        return Err(MapGenError::BadDensity(density));
    }
    let cells = width * height;
    let obstacles = (density * cells as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const TRIES: u32 = 100;
    for _ in 0..TRIES {
        let mut indices: Vec<usize> = (0..cells).collect();
        indices.shuffle(&mut rng);
        let mut blocked = vec![false; cells];
        for &i in &indices[..obstacles] {
            blocked[i] = true;
        }
        let Ok(map) = GridMap::new(width, height, blocked) else {
            continue;
        };
        let free = map.free_cell_count();
        if largest_free_component(&map) * 5 >= free * 4 {
            return Ok(map);
        }
    }
    Err(MapGenError::RetriesExhausted { tries: TRIES, density })
}

/// Fraction of removable interior walls knocked out to braid the maze.
pub const MAZE_BRAID_FRACTION: f64 = 0.1;

/// A corridor maze with fully connected free space.
pub fn maze_map(width: usize, height: usize, seed: u64) -> GridMap {
    maze_map_braided(width, height, seed, MAZE_BRAID_FRACTION)
}

/// Maze generation with an explicit braid fraction.
///
/// Carves a randomized depth-first spanning tree over the coarse lattice of
/// cells at odd coordinates, then removes `braid` of the walls that separate
/// two corridor cells, creating loops. Even target dimensions are produced
/// by carving an odd-sized maze and cropping the outer wall row/column,
/// which never touches a corridor.
pub fn maze_map_braided(width: usize, height: usize, seed: u64, braid: f64) -> GridMap {
    assert!(width >= 3 && height >= 3, "maze needs at least 3x3");
    let gen_w = if width % 2 == 1 { width } else { width + 1 };
    let gen_h = if height % 2 == 1 { height } else { height + 1 };
    let lat_w = gen_w / 2;
    let lat_h = gen_h / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocked = vec![true; gen_w * gen_h];
    let cell = |lx: usize, ly: usize| (2 * ly + 1) * gen_w + (2 * lx + 1);

    // Iterative depth-first carve over the lattice.
    let mut visited = vec![false; lat_w * lat_h];
    let start = (rng.gen_range(0..lat_w), rng.gen_range(0..lat_h));
    let mut stack = vec![start];
    visited[start.1 * lat_w + start.0] = true;
    blocked[cell(start.0, start.1)] = false;
    while let Some(&(lx, ly)) = stack.last() {
        let mut neighbors = Vec::with_capacity(4);
        if lx > 0 && !visited[ly * lat_w + lx - 1] {
            neighbors.push((lx - 1, ly));
        }
        if lx + 1 < lat_w && !visited[ly * lat_w + lx + 1] {
            neighbors.push((lx + 1, ly));
        }
        if ly > 0 && !visited[(ly - 1) * lat_w + lx] {
            neighbors.push((lx, ly - 1));
        }
        if ly + 1 < lat_h && !visited[(ly + 1) * lat_w + lx] {
            neighbors.push((lx, ly + 1));
        }
        match neighbors.choose(&mut rng) {
            Some(&(nx, ny)) => {
                visited[ny * lat_w + nx] = true;
                blocked[cell(nx, ny)] = false;
                // Open the wall cell between the two lattice cells.
                let wall = ((2 * ly + 1 + 2 * ny + 1) / 2) * gen_w + (2 * lx + 1 + 2 * nx + 1) / 2;
                blocked[wall] = false;
                stack.push((nx, ny));
            }
            None => {
                stack.pop();
            }
        }
    }

    // Braid: open a fraction of the walls separating two corridors.
    let mut candidates: Vec<usize> = Vec::new();
    for y in 1..gen_h - 1 {
        for x in 1..gen_w - 1 {
            let i = y * gen_w + x;
            if !blocked[i] {
                continue;
            }
            let horizontal = !blocked[i - 1] && !blocked[i + 1];
            let vertical = !blocked[i - gen_w] && !blocked[i + gen_w];
            if horizontal || vertical {
                candidates.push(i);
            }
        }
    }
    candidates.shuffle(&mut rng);
    let open = (braid * candidates.len() as f64).round() as usize;
    for &i in &candidates[..open.min(candidates.len())] {
        blocked[i] = false;
    }

    // Crop the outer wall row/column added for even target sizes.
    let mut cropped = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            cropped.push(blocked[y * gen_w + x]);
        }
    }
    GridMap::new(width, height, cropped).expect("maze has corridors")
}

/// Warehouse layout: 46 x 33 cells, three columns of 10 x 2 shelf blocks
/// separated by one-cell aisles, and 5-cell open bands along the left and
/// right edges where agents start.
pub fn warehouse_map() -> GridMap {
    const W: usize = 46;
    const H: usize = 33;
    let mut blocked = vec![false; W * H];
    let shelf_cols = [7..=16, 18..=27, 29..=38];
    for block in 0..10 {
        let top = 1 + 3 * block;
        for y in [top, top + 1] {
            for cols in &shelf_cols {
                for x in cols.clone() {
                    blocked[y * W + x] = true;
                }
            }
        }
    }
    GridMap::new(W, H, blocked).expect("warehouse layout is valid")
}

/// Width of the free start bands on the warehouse's left and right edges.
pub const WAREHOUSE_BAND: usize = 5;
/// Agent capacity of warehouse instances.
pub const WAREHOUSE_MAX_AGENTS: usize = 192;

/// Cells the goal stream draws from for a family: every free cell, except
/// in the warehouse, where goals appear only next to the shelves.
pub fn goal_domain(map: &GridMap, family: Family) -> Vec<Cell> {
    match family {
        Family::Random | Family::Maze => map.free_cells(),
        Family::Warehouse => map
            .free_cells()
            .into_iter()
            .filter(|&c| ACTIONS.iter().skip(1).any(|a| {
                let n = a.apply(c);
                map.in_bounds(n) && !map.is_free(n)
            }))
            .collect(),
    }
}

/// A runnable problem: agent starts plus the seed of the goal stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub family: Family,
    pub seed: u64,
    pub starts: Vec<Cell>,
}

impl Instance {
    /// Build the world for this instance on `map`.
    pub fn world(&self, map: Arc<GridMap>) -> Result<World, WorldError> {
        let domain = Arc::new(goal_domain(&map, self.family));
        World::with_goal_cells(map, &self.starts, self.seed, domain)
    }

    /// Plain-text serialization:
    ///
    /// ```text
    /// family maze
    /// seed 7
    /// agents 2
    /// 0 4 5
    /// 1 2 0
    /// ```
    pub fn format(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("family {}\n", self.family));
        out.push_str(&format!("seed {}\n", self.seed));
        out.push_str(&format!("agents {}\n", self.starts.len()));
        for (id, s) in self.starts.iter().enumerate() {
            out.push_str(&format!("{} {} {}\n", id, s.x, s.y));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let family = lines
            .next()
            .and_then(|l| l.strip_prefix("family "))
            .ok_or("missing family line")?
            .trim()
            .parse::<Family>()?;
        let seed = lines
            .next()
            .and_then(|l| l.strip_prefix("seed "))
            .ok_or("missing seed line")?
            .trim()
            .parse::<u64>()
            .map_err(|e| format!("bad seed: {e}"))?;
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("agents "))
            .ok_or("missing agents line")?
            .trim()
            .parse()
            .map_err(|e| format!("bad agent count: {e}"))?;
        let mut starts = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut tok = line.split_whitespace();
            let id: usize = tok
                .next()
                .ok_or("missing agent id")?
                .parse()
                .map_err(|e| format!("bad agent id: {e}"))?;
            if id != i {
                return Err(format!("agent ids must be sequential, got {id} at row {i}"));
            }
            let x: i32 = tok.next().ok_or("missing x")?.parse().map_err(|e| format!("bad x: {e}"))?;
            let y: i32 = tok.next().ok_or("missing y")?.parse().map_err(|e| format!("bad y: {e}"))?;
            starts.push(Cell::new(x, y));
        }
        if starts.len() != count {
            return Err(format!("expected {count} agents, found {}", starts.len()));
        }
        Ok(Instance { family, seed, starts })
    }
}

/// Place `n_agents` starts on `map` under the family's rules and pair them
/// with a goal-stream seed.
pub fn make_instance(
    map: &GridMap,
    n_agents: usize,
    family: Family,
    seed: u64,
) -> Result<Instance, MapGenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<Cell> = match family {
        Family::Random | Family::Maze => {
            let free = map.free_cells();
            // Goals must have a candidate cell distinct from every start.
            if n_agents >= free.len() {
                return Err(MapGenError::NotEnoughCells { need: n_agents + 1, have: free.len() });
            }
            free
        }
        Family::Warehouse => {
            if n_agents > WAREHOUSE_MAX_AGENTS {
                return Err(MapGenError::TooManyAgents {
                    requested: n_agents,
                    max: WAREHOUSE_MAX_AGENTS,
                });
            }
            let w = map.width();
            let band: Vec<Cell> = map
                .free_cells()
                .into_iter()
                .filter(|c| (c.x as usize) < WAREHOUSE_BAND || (c.x as usize) >= w - WAREHOUSE_BAND)
                .collect();
            if n_agents > band.len() {
                return Err(MapGenError::NotEnoughCells { need: n_agents, have: band.len() });
            }
            band
        }
    };
    let mut pool = candidates;
    pool.shuffle(&mut rng);
    pool.truncate(n_agents);
    Ok(Instance { family, seed, starts: pool })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::validate_instance;

    #[test]
    fn random_density_zero_is_empty() {
        let m = random_map(20, 20, 0.0, 1).unwrap();
        assert_eq!(m.free_cell_count(), 400);
    }

    #[test]
    fn random_density_30_has_exactly_120_obstacles() {
        let m = random_map(20, 20, 0.3, 5).unwrap();
        assert_eq!(m.cell_count() - m.free_cell_count(), 120);
    }

    #[test]
    fn random_maps_are_seed_deterministic() {
        assert_eq!(random_map(20, 20, 0.25, 9).unwrap(), random_map(20, 20, 0.25, 9).unwrap());
        assert_ne!(random_map(20, 20, 0.25, 9).unwrap(), random_map(20, 20, 0.25, 10).unwrap());
    }

    #[test]
    fn random_maps_keep_main_component_large() {
        for seed in 0..20 {
            let m = random_map(20, 20, 0.3, seed).unwrap();
            assert!(largest_free_component(&m) * 5 >= m.free_cell_count() * 4);
        }
    }

    #[test]
    fn mazes_are_fully_connected() {
        for (w, h) in [(10, 10), (20, 20), (30, 30), (11, 17)] {
            for seed in 0..10 {
                let m = maze_map(w, h, seed);
                assert_eq!(
                    largest_free_component(&m),
                    m.free_cell_count(),
                    "{w}x{h} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn maze_density_band_10x10() {
        for seed in 0..100 {
            let m = maze_map(10, 10, seed);
            let density = 1.0 - m.free_cell_count() as f64 / m.cell_count() as f64;
            assert!((0.3..=0.6).contains(&density), "seed {seed}: density {density}");
        }
    }

    #[test]
    fn maze_seeds_differ() {
        let a = maze_map(20, 20, 1);
        let b = maze_map(20, 20, 2);
        assert_ne!(a, b);
        assert_eq!(a, maze_map(20, 20, 1));
    }

    #[test]
    fn warehouse_dimensions_and_bands() {
        let m = warehouse_map();
        assert_eq!(m.width(), 46);
        assert_eq!(m.height(), 33);
        for y in 0..33 {
            assert!(m.is_free(Cell::new(0, y)));
            assert!(m.is_free(Cell::new(45, y)));
        }
        assert_eq!(largest_free_component(&m), m.free_cell_count());
        // Room for the stated agent capacity in the start bands.
        let w = m.width();
        let band = m
            .free_cells()
            .into_iter()
            .filter(|c| (c.x as usize) < WAREHOUSE_BAND || (c.x as usize) >= w - WAREHOUSE_BAND)
            .count();
        assert!(band >= WAREHOUSE_MAX_AGENTS);
    }

    #[test]
    fn warehouse_agent_cap() {
        let m = warehouse_map();
        assert!(make_instance(&m, 192, Family::Warehouse, 3).is_ok());
        assert!(matches!(
            make_instance(&m, 193, Family::Warehouse, 3),
            Err(MapGenError::TooManyAgents { .. })
        ));
    }

    #[test]
    fn warehouse_goal_domain_hugs_shelves() {
        let m = warehouse_map();
        let domain = goal_domain(&m, Family::Warehouse);
        assert!(!domain.is_empty());
        for c in &domain {
            assert!(m.is_free(*c));
            assert!(ACTIONS.iter().skip(1).any(|a| {
                let n = a.apply(*c);
                m.in_bounds(n) && !m.is_free(n)
            }));
        }
        // Start bands are shelf-free, so no goal lands there.
        assert!(domain.iter().all(|c| {
            (c.x as usize) >= WAREHOUSE_BAND && (c.x as usize) < m.width() - WAREHOUSE_BAND
        }));
    }

    #[test]
    fn instance_starts_are_distinct_and_valid() {
        for (family, map) in [
            (Family::Random, random_map(20, 20, 0.2, 7).unwrap()),
            (Family::Maze, maze_map(20, 20, 7)),
            (Family::Warehouse, warehouse_map()),
        ] {
            let inst = make_instance(&map, 16, family, 1).unwrap();
            assert_eq!(inst.starts.len(), 16);
            let world = inst.world(Arc::new(map.clone())).unwrap();
            let pairs: Vec<(Cell, Cell)> =
                world.agents().iter().map(|a| (a.pos, a.goal)).collect();
            assert!(validate_instance(&map, &pairs).is_empty());
        }
    }

    #[test]
    fn instance_with_all_free_cells_errors() {
        let m = GridMap::open(2, 2);
        assert!(matches!(
            make_instance(&m, 4, Family::Random, 0),
            Err(MapGenError::NotEnoughCells { .. })
        ));
        assert!(make_instance(&m, 3, Family::Random, 0).is_ok());
    }

    #[test]
    fn instances_are_seed_deterministic() {
        let m = maze_map(20, 20, 3);
        assert_eq!(
            make_instance(&m, 8, Family::Maze, 5).unwrap(),
            make_instance(&m, 8, Family::Maze, 5).unwrap()
        );
    }

    #[test]
    fn instance_file_round_trip() {
        let m = maze_map(10, 10, 3);
        let inst = make_instance(&m, 4, Family::Maze, 11).unwrap();
        let text = inst.format();
        let parsed = Instance::parse(&text).unwrap();
        assert_eq!(parsed, inst);
        assert_eq!(parsed.format(), text);
    }

    #[test]
    fn instance_parse_rejects_malformed() {
        assert!(Instance::parse("seed 1\n").is_err());
        assert!(Instance::parse("family maze\nseed x\nagents 0\n").is_err());
        assert!(Instance::parse("family maze\nseed 1\nagents 2\n0 1 1\n").is_err());
        assert!(Instance::parse("family maze\nseed 1\nagents 1\n5 1 1\n").is_err());
    }
}
