//! Decentralized solvers: the search-based planner and its ablations.

use std::sync::Arc;

use crate::grid::Action;
use crate::localsim::{build_sim, OnSimGoal};
use crate::mcts::{plan, SearchConfig};
use crate::policy::{CostmapPolicy, Policy, RandomPolicy};
use crate::world::{AgentView, Solver, SolverError};

/// Shared solver knobs: field of view plus the policy parameters.
#[derive(Clone, Copy, Debug)]
pub struct PlannerSettings {
    /// Observation window side length (odd).
    pub fov: usize,
    /// Softmax temperature of the goal-chasing policy.
    pub temperature: f64,
    /// Improvement reward magnitude `r`.
    pub reward_scale: f64,
    pub search: SearchConfig,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        PlannerSettings {
            fov: 11,
            temperature: 0.1,
            reward_scale: 1.0,
            search: SearchConfig::default(),
        }
    }
}

impl PlannerSettings {
    pub fn costmap_policy(&self) -> CostmapPolicy {
        CostmapPolicy {
            temperature: self.temperature,
            reward_scale: self.reward_scale,
            gamma: self.search.gamma,
        }
    }
}

/// Picks the most probable action of a policy; no lookahead. Serves as the
/// search-free baseline.
pub struct PolicySolver {
    policy: Arc<dyn Policy>,
}

impl PolicySolver {
    pub fn new(policy: Arc<dyn Policy>) -> Self {
        PolicySolver { policy }
    }

    pub fn costmap(settings: &PlannerSettings) -> Self {
        PolicySolver::new(Arc::new(settings.costmap_policy()))
    }
}

impl Solver for PolicySolver {
    fn decide(&self, view: &AgentView) -> Result<Action, SolverError> {
        Ok(self.policy.evaluate(&view.observe()).argmax())
    }
}

/// Tree-search solver: builds the egocentric simulation from the view and
/// plans one action with prior-guided MCTS.
pub struct MctsSolver {
    policy: Arc<dyn Policy>,
    settings: PlannerSettings,
    on_goal: OnSimGoal,
}

impl MctsSolver {
    /// The standard configuration: search guided by the goal-chasing policy.
    pub fn new(settings: PlannerSettings) -> Self {
        MctsSolver {
            policy: Arc::new(settings.costmap_policy()),
            settings,
            on_goal: OnSimGoal::Freeze,
        }
    }

    /// Search guided by a caller-supplied policy (loaded weights, or the
    /// uniform policy for the ablation).
    pub fn with_policy(settings: PlannerSettings, policy: Arc<dyn Policy>) -> Self {
        MctsSolver {
            policy,
            settings,
            on_goal: OnSimGoal::Freeze,
        }
    }

    /// Ablation: uniform priors and zero values inside the search.
    pub fn random_policy(settings: PlannerSettings) -> Self {
        Self::with_policy(settings, Arc::new(RandomPolicy))
    }

    pub fn on_goal(mut self, on_goal: OnSimGoal) -> Self {
        self.on_goal = on_goal;
        self
    }
}

impl Solver for MctsSolver {
    fn decide(&self, view: &AgentView) -> Result<Action, SolverError> {
        let sim = build_sim(view, self.settings.reward_scale, self.on_goal);
        Ok(plan(sim, self.policy.as_ref(), &self.settings.search))
    }
}
