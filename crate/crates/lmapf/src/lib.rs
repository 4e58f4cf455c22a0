//! Lifelong multi-agent pathfinding on 4-connected grids.
//!
//! The crate provides the synchronized grid environment with conflict-checked
//! joint moves and external goal reassignment ([`world`]), BFS cost-to-go
//! fields and egocentric observations ([`costmap`]), per-agent action priors
//! ([`policy`]), the egocentric planning simulation ([`localsim`]), a
//! prior-guided Monte-Carlo tree search over joint actions ([`mcts`]), the
//! solver assemblies built from those pieces ([`solver`]), and generators for
//! the evaluation map families ([`mapgen`]).

pub mod conflict;
pub mod costmap;
pub mod grid;
pub mod localsim;
pub mod mapgen;
pub mod mcts;
pub mod policy;
pub mod solver;
pub mod world;

pub use costmap::{cost_to_go, observe, CostCache, CostField, Observation, UNREACHABLE};
pub use grid::{Action, AgentId, Cell, GridMap, ACTIONS};
pub use localsim::{build_sim, JointAction, LocalSim, OnSimGoal, SimAgent};
pub use mcts::{plan, EdgeStats, SearchConfig};
pub use policy::{CostmapPolicy, LinearPolicy, Policy, PolicyOutput, RandomPolicy};
pub use solver::{MctsSolver, PlannerSettings, PolicySolver};
pub use world::{
    run_episode, run_episode_traced, validate_instance, AgentInfo, AgentState, AgentView,
    EpisodeMetrics, Solver, SolverError, StepRecord, World,
};
