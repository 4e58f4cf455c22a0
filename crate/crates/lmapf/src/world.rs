//! The ground-truth lifelong environment: synchronized steps, conflict-checked
//! joint moves, external goal reassignment, and episode metrics.
//!
//! Each step every agent's solver is queried independently with the view of
//! the world the agent is entitled to (static map, own state, agents inside
//! its window); the proposed joint move is then resolved and applied. An
//! agent that lands on its goal is counted and handed a fresh goal within the
//! same step, so no agent is ever goal-less.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use thiserror::Error;

use crate::conflict::resolve_moves;
use crate::costmap::{CostCache, Observation};
use crate::grid::{Action, AgentId, Cell, GridMap};

/// Minimal public knowledge about an agent: who, where, and which goal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgentInfo {
    pub id: AgentId,
    pub pos: Cell,
    pub goal: Cell,
}

/// Full per-agent state tracked by the environment.
#[derive(Clone, Debug)]
pub struct AgentState {
    pub id: AgentId,
    pub pos: Cell,
    pub goal: Cell,
    /// Minimum cost-to-go reached since the current goal was assigned.
    pub best_dist: u32,
    pub goals_completed: u64,
}

/// Instance problems reported by [`validate_instance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateStart { a: AgentId, b: AgentId, cell: Cell },
    StartBlocked { agent: AgentId, cell: Cell },
    GoalBlocked { agent: AgentId, cell: Cell },
    StartOutOfBounds { agent: AgentId, cell: Cell },
    GoalOutOfBounds { agent: AgentId, cell: Cell },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DuplicateStart { a, b, cell } => {
                write!(f, "agents {a} and {b} share start cell {cell}")
            }
            Violation::StartBlocked { agent, cell } => {
                write!(f, "agent {agent} starts on blocked cell {cell}")
            }
            Violation::GoalBlocked { agent, cell } => {
                write!(f, "agent {agent} goal on blocked cell {cell}")
            }
            Violation::StartOutOfBounds { agent, cell } => {
                write!(f, "agent {agent} start {cell} out of bounds")
            }
            Violation::GoalOutOfBounds { agent, cell } => {
                write!(f, "agent {agent} goal {cell} out of bounds")
            }
        }
    }
}

/// Check starts and goals against the map. Collects every violation rather
/// than stopping at the first.
pub fn validate_instance(map: &GridMap, agents: &[(Cell, Cell)]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, &(start, goal)) in agents.iter().enumerate() {
        if !map.in_bounds(start) {
            out.push(Violation::StartOutOfBounds { agent: i, cell: start });
        } else if !map.is_free(start) {
            out.push(Violation::StartBlocked { agent: i, cell: start });
        }
        if !map.in_bounds(goal) {
            out.push(Violation::GoalOutOfBounds { agent: i, cell: goal });
        } else if !map.is_free(goal) {
            out.push(Violation::GoalBlocked { agent: i, cell: goal });
        }
        for (j, &(other, _)) in agents.iter().enumerate().take(i) {
            if other == start {
                out.push(Violation::DuplicateStart { a: j, b: i, cell: start });
            }
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidInstance(Vec<Violation>),
    #[error("no goal candidate cell available for agent {0}")]
    NoGoalCandidate(AgentId),
}

/// What happened in one step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepEvents {
    /// Agents whose non-wait move was rejected by conflict resolution.
    pub frozen: Vec<AgentId>,
    /// Agents that reached their goal this step.
    pub reached: Vec<AgentId>,
    /// Fresh goals handed out this step, in assignment order.
    pub assigned: Vec<(AgentId, Cell)>,
}

/// The synchronized multi-agent environment.
pub struct World {
    map: Arc<GridMap>,
    cache: Arc<CostCache>,
    agents: Vec<AgentState>,
    time: u64,
    rng: ChaCha8Rng,
    /// Cells goals are sampled from; all free cells unless restricted.
    goal_cells: Arc<Vec<Cell>>,
}

impl World {
    /// New world with goals sampled uniformly over all free cells. Initial
    /// goals are drawn from the seeded stream in ascending agent order.
    pub fn new(map: Arc<GridMap>, starts: &[Cell], seed: u64) -> Result<Self, WorldError> {
        let goal_cells = Arc::new(map.free_cells());
        Self::with_goal_cells(map, starts, seed, goal_cells)
    }

    /// New world with goals restricted to `goal_cells`.
    pub fn with_goal_cells(
        map: Arc<GridMap>,
        starts: &[Cell],
        seed: u64,
        goal_cells: Arc<Vec<Cell>>,
    ) -> Result<Self, WorldError> {
        let placeholder: Vec<(Cell, Cell)> = starts.iter().map(|&s| (s, s)).collect();
        let violations = validate_instance(&map, &placeholder);
        if !violations.is_empty() {
            return Err(WorldError::InvalidInstance(violations));
        }
        let cache = Arc::new(CostCache::new(map.clone()));
        let agents = starts
            .iter()
            .enumerate()
            .map(|(id, &pos)| AgentState {
                id,
                pos,
                goal: pos,
                best_dist: 0,
                goals_completed: 0,
            })
            .collect();
        let mut world = World {
            map,
            cache,
            agents,
            time: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            goal_cells,
        };
        for id in 0..world.agents.len() {
            world.assign_goal(id)?;
        }
        Ok(world)
    }

    /// New world with explicit initial goals; later reassignments still come
    /// from the seeded stream. Used by scenario tests and trace replays.
    pub fn with_initial_goals(
        map: Arc<GridMap>,
        agents: &[(Cell, Cell)],
        seed: u64,
    ) -> Result<Self, WorldError> {
        let violations = validate_instance(&map, agents);
        if !violations.is_empty() {
            return Err(WorldError::InvalidInstance(violations));
        }
        let goal_cells = Arc::new(map.free_cells());
        let cache = Arc::new(CostCache::new(map.clone()));
        let states = agents
            .iter()
            .enumerate()
            .map(|(id, &(pos, goal))| AgentState {
                id,
                pos,
                goal,
                best_dist: cache.field(goal).dist(pos),
                goals_completed: 0,
            })
            .collect();
        Ok(World {
            map,
            cache,
            agents: states,
            time: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            goal_cells,
        })
    }

    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn cache(&self) -> &Arc<CostCache> {
        &self.cache
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Draw a fresh goal for `agent`: uniform over the goal cells excluding
    /// the agent's current position. Resets the agent's best-distance record.
    pub fn assign_goal(&mut self, agent: AgentId) -> Result<Cell, WorldError> {
        let pos = self.agents[agent].pos;
        if !self.goal_cells.iter().any(|&c| c != pos) {
            return Err(WorldError::NoGoalCandidate(agent));
        }
        let goal = loop {
            let c = self.goal_cells[self.rng.gen_range(0..self.goal_cells.len())];
            if c != pos {
                break c;
            }
        };
        let a = &mut self.agents[agent];
        a.goal = goal;
        a.best_dist = self.cache.field(goal).dist(pos);
        Ok(goal)
    }

    /// Apply one joint action. Conflicts freeze the affected agents in
    /// place; agents reaching their goal are counted and reassigned within
    /// the same step.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepEvents, WorldError> {
        assert_eq!(actions.len(), self.agents.len(), "one action per agent");
        let positions: Vec<(AgentId, Cell)> =
            self.agents.iter().map(|a| (a.id, a.pos)).collect();
        let resolution = resolve_moves(&self.map, &positions, actions);
        let mut events = StepEvents {
            frozen: resolution.frozen,
            ..Default::default()
        };
        for (agent, pos) in resolution.positions.iter().enumerate() {
            self.agents[agent].pos = *pos;
        }
        self.time += 1;
        for agent in 0..self.agents.len() {
            let (pos, goal) = (self.agents[agent].pos, self.agents[agent].goal);
            let d = self.cache.field(goal).dist(pos);
            let a = &mut self.agents[agent];
            a.best_dist = a.best_dist.min(d);
            if pos == goal {
                a.goals_completed += 1;
                events.reached.push(agent);
                let fresh = self.assign_goal(agent)?;
                events.assigned.push((agent, fresh));
            }
        }
        Ok(events)
    }

    /// The view agent `id` is entitled to under an `m x m` field of view.
    pub fn agent_view(&self, id: AgentId, fov: usize) -> AgentView {
        let ego = &self.agents[id];
        let half = (fov / 2) as i32;
        let others = self
            .agents
            .iter()
            .filter(|a| {
                a.id != id
                    && (a.pos.x - ego.pos.x).abs() <= half
                    && (a.pos.y - ego.pos.y).abs() <= half
            })
            .map(|a| AgentInfo { id: a.id, pos: a.pos, goal: a.goal })
            .collect();
        AgentView {
            map: self.map.clone(),
            cache: self.cache.clone(),
            fov,
            ego: AgentInfo { id: ego.id, pos: ego.pos, goal: ego.goal },
            others,
        }
    }
}

/// Everything one agent may condition its decision on: the static map, its
/// own state, and the agents inside its window together with their goals.
#[derive(Clone)]
pub struct AgentView {
    pub map: Arc<GridMap>,
    pub cache: Arc<CostCache>,
    pub fov: usize,
    pub ego: AgentInfo,
    pub others: Vec<AgentInfo>,
}

impl AgentView {
    /// The two-matrix observation for this view.
    pub fn observe(&self) -> Observation {
        let others: Vec<(AgentId, Cell, Cell)> =
            self.others.iter().map(|a| (a.id, a.pos, a.goal)).collect();
        crate::costmap::observe(&self.cache, self.ego.pos, self.ego.goal, &others, self.fov)
    }
}

#[derive(Debug, Error)]
#[error("solver failed for agent {agent}: {message}")]
pub struct SolverError {
    pub agent: AgentId,
    pub message: String,
}

/// A decentralized per-agent decision procedure. Solvers are queried once
/// per agent per step, see only that agent's view, and must be deterministic
/// functions of it.
pub trait Solver: Send + Sync {
    fn decide(&self, view: &AgentView) -> Result<Action, SolverError>;
}

/// Episode-level measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeMetrics {
    /// Number of synchronized steps executed.
    pub length: u64,
    pub total_goals_reached: u64,
    /// Goals per step: `total_goals_reached / length` (0 for empty episodes).
    pub throughput: f64,
    /// Per-step mean solver query time across agents, milliseconds.
    pub per_step_decision_ms: Vec<f64>,
    /// Mean solver query time over all agents and steps, milliseconds.
    pub mean_decision_ms: f64,
}

/// One line of an episode trace: the pre-step state of every agent, the
/// actions taken, and who reached a goal when they were applied.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StepRecord {
    pub time: u64,
    pub agents: Vec<AgentRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AgentRecord {
    pub id: AgentId,
    pub pos: Cell,
    pub goal: Cell,
    pub action: Action,
    pub reached: bool,
}

/// Run `steps` synchronized steps, querying `solver` once per agent per step.
pub fn run_episode(
    world: &mut World,
    solver: &dyn Solver,
    steps: u64,
    fov: usize,
) -> Result<EpisodeMetrics, SolverError> {
    run_episode_inner(world, solver, steps, fov, None)
}

/// As [`run_episode`], also recording one [`StepRecord`] per step.
pub fn run_episode_traced(
    world: &mut World,
    solver: &dyn Solver,
    steps: u64,
    fov: usize,
) -> Result<(EpisodeMetrics, Vec<StepRecord>), SolverError> {
    let mut trace = Vec::with_capacity(steps as usize);
    let metrics = run_episode_inner(world, solver, steps, fov, Some(&mut trace))?;
    Ok((metrics, trace))
}

fn run_episode_inner(
    world: &mut World,
    solver: &dyn Solver,
    steps: u64,
    fov: usize,
    mut trace: Option<&mut Vec<StepRecord>>,
) -> Result<EpisodeMetrics, SolverError> {
    let n = world.agents().len();
    let mut total_goals = 0u64;
    let mut per_step_ms = Vec::with_capacity(steps as usize);
    let mut total_ms = 0.0f64;
    for _ in 0..steps {
        let views: Vec<AgentView> = (0..n).map(|id| world.agent_view(id, fov)).collect();
        // Queries are independent; any schedule yields the same actions.
        let decisions: Vec<Result<(Action, f64), SolverError>> = views
            .par_iter()
            .map(|view| {
                let started = Instant::now();
                let action = solver.decide(view)?;
                Ok((action, started.elapsed().as_secs_f64() * 1e3))
            })
            .collect();
        let mut actions = Vec::with_capacity(n);
        let mut step_ms = 0.0;
        for d in decisions {
            let (action, ms) = d?;
            actions.push(action);
            step_ms += ms;
        }
        per_step_ms.push(step_ms / n.max(1) as f64);
        total_ms += step_ms;

        let before: Vec<AgentRecord> = world
            .agents()
            .iter()
            .zip(&actions)
            .map(|(a, &action)| AgentRecord {
                id: a.id,
                pos: a.pos,
                goal: a.goal,
                action,
                reached: false,
            })
            .collect();
        let events = world.step(&actions).expect("goal reassignment cannot fail mid-episode");
        total_goals += events.reached.len() as u64;
        if let Some(trace) = trace.as_deref_mut() {
            let mut record = StepRecord { time: world.time() - 1, agents: before };
            for &id in &events.reached {
                record.agents[id].reached = true;
            }
            trace.push(record);
        }
    }
    let throughput = if steps == 0 {
        0.0
    } else {
        total_goals as f64 / steps as f64
    };
    Ok(EpisodeMetrics {
        length: steps,
        total_goals_reached: total_goals,
        throughput,
        per_step_decision_ms: per_step_ms,
        mean_decision_ms: total_ms / ((steps * n as u64).max(1)) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ACTIONS;

    fn open_world(w: usize, h: usize, starts: &[Cell], seed: u64) -> World {
        World::new(Arc::new(GridMap::open(w, h)), starts, seed).unwrap()
    }

    #[test]
    fn validate_reports_everything() {
        let map = GridMap::from_ascii(&["..#", "..."]);
        let agents_ok = [(Cell::new(0, 0), Cell::new(1, 1)), (Cell::new(1, 0), Cell::new(0, 1))];
        assert!(validate_instance(&map, &agents_ok).is_empty());

        let bad = [
            (Cell::new(0, 0), Cell::new(2, 0)),  // goal blocked
            (Cell::new(0, 0), Cell::new(5, 0)),  // duplicate start + goal oob
            (Cell::new(2, 0), Cell::new(1, 1)),  // start blocked
        ];
        let v = validate_instance(&map, &bad);
        assert!(v.contains(&Violation::GoalBlocked { agent: 0, cell: Cell::new(2, 0) }));
        assert!(v.contains(&Violation::DuplicateStart { a: 0, b: 1, cell: Cell::new(0, 0) }));
        assert!(v.contains(&Violation::GoalOutOfBounds { agent: 1, cell: Cell::new(5, 0) }));
        assert!(v.contains(&Violation::StartBlocked { agent: 2, cell: Cell::new(2, 0) }));
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn step_moves_single_agent() {
        let mut w = open_world(3, 3, &[Cell::new(0, 0)], 1);
        w.step(&[Action::Right]).unwrap();
        assert_eq!(w.agents()[0].pos, Cell::new(1, 0));
        assert_eq!(w.time(), 1);
    }

    #[test]
    fn swap_freezes_and_reports() {
        let mut w = World::with_initial_goals(
            Arc::new(GridMap::open(4, 1)),
            &[(Cell::new(1, 0), Cell::new(3, 0)), (Cell::new(2, 0), Cell::new(0, 0))],
            1,
        )
        .unwrap();
        let ev = w.step(&[Action::Right, Action::Left]).unwrap();
        assert_eq!(ev.frozen, vec![0, 1]);
        assert_eq!(w.agents()[0].pos, Cell::new(1, 0));
        assert_eq!(w.agents()[1].pos, Cell::new(2, 0));
    }

    #[test]
    fn goal_reached_fires_and_reassigns_same_step() {
        let mut w = World::with_initial_goals(
            Arc::new(GridMap::open(3, 1)),
            &[(Cell::new(0, 0), Cell::new(1, 0))],
            7,
        )
        .unwrap();
        let ev = w.step(&[Action::Right]).unwrap();
        assert_eq!(ev.reached, vec![0]);
        assert_eq!(ev.assigned.len(), 1);
        assert_eq!(w.agents()[0].goals_completed, 1);
        // Lifelong closure: a fresh goal, different from the agent's cell.
        assert_ne!(w.agents()[0].goal, w.agents()[0].pos);
        // best_dist reset to the new goal's distance.
        assert_eq!(
            w.agents()[0].best_dist,
            w.cache().field(w.agents()[0].goal).dist(w.agents()[0].pos)
        );
    }

    #[test]
    fn assign_goal_two_free_cells_picks_the_other() {
        let map = Arc::new(GridMap::from_ascii(&["#.."]));
        let mut w = World::new(map, &[Cell::new(1, 0)], 3).unwrap();
        for _ in 0..5 {
            assert_eq!(w.assign_goal(0).unwrap(), Cell::new(2, 0));
        }
    }

    #[test]
    fn assign_goal_single_free_cell_errors() {
        let map = Arc::new(GridMap::from_ascii(&["#.#"]));
        assert!(matches!(
            World::new(map, &[Cell::new(1, 0)], 3),
            Err(WorldError::NoGoalCandidate(0))
        ));
    }

    #[test]
    fn goal_stream_is_reproducible() {
        let seq = |seed| {
            let mut w = open_world(6, 6, &[Cell::new(0, 0)], seed);
            (0..20).map(|_| w.assign_goal(0).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(seq(11), seq(11));
        assert_ne!(seq(11), seq(12));
    }

    #[test]
    fn goal_sampling_is_uniform_chi_squared() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let mut w = open_world(20, 20, &[Cell::new(3, 3)], 1234);
        let mut counts = std::collections::HashMap::new();
        let n = 10_000usize;
        for _ in 0..n {
            let g = w.assign_goal(0).unwrap();
            *counts.entry(g).or_insert(0usize) += 1;
        }
        // 399 candidate cells (the agent's own cell is excluded).
        let cells = 399.0;
        let expected = n as f64 / cells;
        let mut chi2 = 0.0;
        for y in 0..20 {
            for x in 0..20 {
                let c = Cell::new(x, y);
                if c == Cell::new(3, 3) {
                    assert!(!counts.contains_key(&c));
                    continue;
                }
                let got = *counts.get(&c).unwrap_or(&0) as f64;
                chi2 += (got - expected).powi(2) / expected;
            }
        }
        let dist = ChiSquared::new(cells - 1.0).unwrap();
        let critical = dist.inverse_cdf(0.99);
        assert!(chi2 < critical, "chi2 {chi2} >= critical {critical}");
    }

    #[test]
    fn invariants_hold_on_random_action_streams() {
        use rand::{Rng, SeedableRng};
        let map = Arc::new(GridMap::from_ascii(&[
            "........",
            "..##....",
            "......#.",
            ".#......",
            "....##..",
            "........",
        ]));
        let starts: Vec<Cell> = map.free_cells().into_iter().step_by(4).take(8).collect();
        let mut w = World::new(map.clone(), &starts, 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..400 {
            let before: Vec<Cell> = w.agents().iter().map(|a| a.pos).collect();
            let actions: Vec<Action> = (0..8).map(|_| ACTIONS[rng.gen_range(0..5)]).collect();
            w.step(&actions).unwrap();
            let after: Vec<Cell> = w.agents().iter().map(|a| a.pos).collect();
            for i in 0..8 {
                assert!(map.is_free(after[i]));
                assert!(before[i].manhattan(after[i]) <= 1);
                for j in (i + 1)..8 {
                    assert_ne!(after[i], after[j], "vertex conflict");
                    assert!(
                        !(after[i] == before[j] && after[j] == before[i]),
                        "swap conflict"
                    );
                }
                // Lifelong closure + best_dist is a running minimum.
                let a = &w.agents()[i];
                assert_ne!(a.pos, a.goal);
                assert!(a.best_dist <= w.cache().field(a.goal).dist(a.pos));
            }
        }
    }

    struct FollowCostmap;
    impl Solver for FollowCostmap {
        fn decide(&self, view: &AgentView) -> Result<Action, SolverError> {
            use crate::policy::Policy;
            let obs = view.observe();
            Ok(crate::policy::CostmapPolicy::default().evaluate(&obs).argmax())
        }
    }

    #[test]
    fn empty_episode_has_zero_throughput() {
        let mut w = open_world(4, 4, &[Cell::new(0, 0)], 1);
        let m = run_episode(&mut w, &FollowCostmap, 0, 5).unwrap();
        assert_eq!(m.throughput, 0.0);
        assert_eq!(m.total_goals_reached, 0);
        assert!(m.per_step_decision_ms.is_empty());
    }

    #[test]
    fn single_agent_greedy_reaches_goals() {
        let map = Arc::new(GridMap::open(8, 8));
        let mut w = World::with_initial_goals(
            map,
            &[(Cell::new(0, 0), Cell::new(5, 0))],
            42,
        )
        .unwrap();
        let m = run_episode(&mut w, &FollowCostmap, 512, 11).unwrap();
        assert!(m.total_goals_reached >= 1);
        assert_eq!(m.throughput, m.total_goals_reached as f64 / 512.0);
    }

    #[test]
    fn episodes_are_deterministic() {
        let run = || {
            let map = Arc::new(GridMap::open(6, 6));
            let mut w = World::new(map, &[Cell::new(0, 0), Cell::new(5, 5)], 77).unwrap();
            run_episode(&mut w, &FollowCostmap, 64, 5).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.length, b.length);
        assert_eq!(a.total_goals_reached, b.total_goals_reached);
        assert_eq!(a.throughput, b.throughput);
    }

    #[test]
    fn trace_records_every_step() {
        let map = Arc::new(GridMap::open(5, 5));
        let mut w = World::new(map, &[Cell::new(0, 0), Cell::new(4, 4)], 9).unwrap();
        let (_, trace) = run_episode_traced(&mut w, &FollowCostmap, 16, 5).unwrap();
        assert_eq!(trace.len(), 16);
        for (t, rec) in trace.iter().enumerate() {
            assert_eq!(rec.time, t as u64);
            assert_eq!(rec.agents.len(), 2);
        }
    }
}
