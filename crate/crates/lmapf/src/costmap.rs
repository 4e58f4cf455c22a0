//! Cost-to-go distance fields and the egocentric two-matrix observation.
//!
//! A [`CostField`] holds exact 4-connected shortest-path distances from every
//! cell to one goal cell, computed by breadth-first search. [`observe`] cuts
//! an `m x m` window around an agent and produces the pair of matrices its
//! policy consumes: other-agent presence, and the cost field inverted and
//! affinely renormalized per window so the closest visible cell reads 1 and
//! the farthest 0. Obstacles, out-of-bounds cells, and cells that cannot
//! reach the goal read -1.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::grid::{AgentId, Cell, GridMap, ACTIONS};

/// Distance marker for cells with no path to the goal.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("goal cell {0} is blocked or out of bounds")]
    GoalBlocked(Cell),
}

/// Shortest-path distance from every cell to a fixed goal cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostField {
    width: usize,
    height: usize,
    goal: Cell,
    dist: Vec<u32>,
}

impl CostField {
    pub fn goal(&self) -> Cell {
        self.goal
    }

    /// Distance of `c` to the goal; [`UNREACHABLE`] off-grid, on obstacles,
    /// and in components not containing the goal.
    pub fn dist(&self, c: Cell) -> u32 {
        if c.x < 0 || c.y < 0 || c.x as usize >= self.width || c.y as usize >= self.height {
            return UNREACHABLE;
        }
        self.dist[c.y as usize * self.width + c.x as usize]
    }

    /// ASCII rendering for test diagnostics: one digit per cell (mod 10),
    /// `#` for unreachable cells.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let d = self.dist[y * self.width + x];
                if d == UNREACHABLE {
                    out.push('#');
                } else {
                    out.push(char::from_digit(d % 10, 10).unwrap());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Exact BFS distances from every cell of `map` to `goal`.
pub fn cost_to_go(map: &GridMap, goal: Cell) -> Result<CostField, CostError> {
    if !map.is_free(goal) {
        return Err(CostError::GoalBlocked(goal));
    }
    let mut dist = vec![UNREACHABLE; map.cell_count()];
    let mut queue = VecDeque::new();
    dist[map.index(goal)] = 0;
    queue.push_back(goal);
    while let Some(c) = queue.pop_front() {
        let d = dist[map.index(c)];
        for a in ACTIONS.iter().skip(1) {
            let n = a.apply(c);
            if map.is_free(n) && dist[map.index(n)] == UNREACHABLE {
                dist[map.index(n)] = d + 1;
                queue.push_back(n);
            }
        }
    }
    Ok(CostField {
        width: map.width(),
        height: map.height(),
        goal,
        dist,
    })
}

/// Shared cache of cost fields for one map, keyed by goal cell.
///
/// Fields are pure functions of (map, goal); concurrent callers may compute a
/// field twice but always observe identical results.
pub struct CostCache {
    map: Arc<GridMap>,
    fields: Mutex<HashMap<Cell, Arc<CostField>>>,
}

impl CostCache {
    pub fn new(map: Arc<GridMap>) -> Self {
        CostCache {
            map,
            fields: Mutex::new(HashMap::new()),
        }
    }

    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    /// The cost field for `goal`, computing it on first use.
    ///
    /// Panics if `goal` is blocked; callers hold the free-goal invariant.
    pub fn field(&self, goal: Cell) -> Arc<CostField> {
        if let Some(f) = self.fields.lock().unwrap().get(&goal) {
            return f.clone();
        }
        // Computed outside the lock: duplicate work is harmless and the
        // results are identical.
        let f = Arc::new(cost_to_go(&self.map, goal).expect("goal cell must be free"));
        let mut fields = self.fields.lock().unwrap();
        fields.entry(goal).or_insert(f).clone()
    }

    pub fn len(&self) -> usize {
        self.fields.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Egocentric observation: the two window matrices plus the goal knowledge
/// the agent has about itself and the agents it sees.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// Window side length `m` (odd); the ego agent sits at the center cell.
    pub fov: usize,
    /// `m x m`, row-major over the window: 1.0 where another agent stands.
    /// The ego agent itself is not marked.
    pub agents: Vec<f32>,
    /// `m x m`, row-major: renormalized inverted cost-to-go in `[0, 1]`,
    /// or -1.0 for obstacles, out-of-bounds, and goal-unreachable cells.
    pub costmap: Vec<f32>,
    /// The ego agent's current goal.
    pub ego_goal: Cell,
    /// The ego agent's own cost-to-go; [`UNREACHABLE`] when cut off.
    pub ego_dist: u32,
    /// Goals of the visible agents, ascending id order.
    pub visible_goals: Vec<(AgentId, Cell)>,
}

impl Observation {
    /// Window index of the center cell.
    pub fn center(&self) -> usize {
        let h = self.fov / 2;
        h * self.fov + h
    }

    /// Window index reached from the center by `(dx, dy)`, if inside.
    pub fn offset_index(&self, dx: i32, dy: i32) -> Option<usize> {
        let h = (self.fov / 2) as i32;
        let wx = h + dx;
        let wy = h + dy;
        if wx < 0 || wy < 0 || wx >= self.fov as i32 || wy >= self.fov as i32 {
            return None;
        }
        Some(wy as usize * self.fov + wx as usize)
    }
}

/// Build the observation for an agent at `ego_pos` pursuing `ego_goal`,
/// with `others` the (id, position, goal) of every other agent inside the
/// `m x m` window. `m` must be odd.
pub fn observe(
    cache: &CostCache,
    ego_pos: Cell,
    ego_goal: Cell,
    others: &[(AgentId, Cell, Cell)],
    fov: usize,
) -> Observation {
    assert!(fov % 2 == 1 && fov >= 1, "field of view must be odd");
    let map = cache.map().clone();
    let field = cache.field(ego_goal);
    let half = (fov / 2) as i32;
    let mut agents = vec![0.0f32; fov * fov];
    let mut dists = vec![UNREACHABLE; fov * fov];

    for dy in -half..=half {
        for dx in -half..=half {
            let w = ((dy + half) as usize) * fov + (dx + half) as usize;
            let c = Cell::new(ego_pos.x + dx, ego_pos.y + dy);
            if map.is_free(c) {
                dists[w] = field.dist(c);
            }
        }
    }
    let mut visible_goals = Vec::new();
    for &(id, pos, goal) in others {
        let dx = pos.x - ego_pos.x;
        let dy = pos.y - ego_pos.y;
        if dx.abs() <= half && dy.abs() <= half {
            let w = ((dy + half) as usize) * fov + (dx + half) as usize;
            agents[w] = 1.0;
            visible_goals.push((id, goal));
        }
    }
    visible_goals.sort_unstable_by_key(|&(id, _)| id);

    let reachable = dists.iter().copied().filter(|&d| d != UNREACHABLE);
    let d_min = reachable.clone().min();
    let d_max = reachable.max();
    let costmap = dists
        .iter()
        .map(|&d| match (d, d_min, d_max) {
            (UNREACHABLE, _, _) => -1.0,
            (_, Some(lo), Some(hi)) if hi > lo => {
                1.0 - ((d - lo) as f32) / ((hi - lo) as f32)
            }
            // All visible reachable cells equidistant: every one reads 1.
            _ => 1.0,
        })
        .collect();

    Observation {
        fov,
        agents,
        costmap,
        ego_goal,
        ego_dist: field.dist(ego_pos),
        visible_goals,
    }
}
