//! The egocentric simulation an agent plans in.
//!
//! From its own view an agent builds a small closed world: the full static
//! map plus exactly the agents it currently observes, each with the goal it
//! is known to pursue. Inside this world the agent enumerates joint actions
//! and simulates them with the same conflict semantics as the real
//! environment. To keep the branching factor in check, only the few agents
//! nearest the ego (by BFS distance inside the window) branch over their
//! whole action set; every other simulated agent is pinned to its most
//! probable action under the policy.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::conflict::resolve_moves;
use crate::costmap::{CostCache, Observation, UNREACHABLE};
use crate::grid::{Action, AgentId, Cell, GridMap, ACTIONS};
use crate::policy::{improvement_reward, Policy, PolicyOutput};
use crate::world::AgentView;

/// What happens to a simulated agent standing on its goal. There is no
/// external goal source inside the simulation, so by default the agent just
/// keeps its position and goal, earning nothing further.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OnSimGoal {
    #[default]
    Freeze,
    /// Drop non-ego agents from the simulation the moment they land on
    /// their goal. The ego agent always freezes.
    Remove,
}

/// One agent inside the simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimAgent {
    pub id: AgentId,
    pub pos: Cell,
    pub goal: Cell,
    /// Running minimum distance since simulation start; drives rewards.
    pub best_dist: u32,
}

/// State of the egocentric simulation. The ego agent is `agents[0]`.
#[derive(Clone)]
pub struct LocalSim {
    map: Arc<GridMap>,
    cache: Arc<CostCache>,
    pub agents: Vec<SimAgent>,
    pub step_in_sim: u32,
    pub fov: usize,
    pub reward_scale: f64,
    pub on_goal: OnSimGoal,
}

/// Build the simulation for the agent owning `view`: the ego agent first,
/// then every agent inside its window, with best-distance histories starting
/// from the distances at construction time.
pub fn build_sim(view: &AgentView, reward_scale: f64, on_goal: OnSimGoal) -> LocalSim {
    let mut agents = Vec::with_capacity(view.others.len() + 1);
    let ego = view.ego;
    agents.push(SimAgent {
        id: ego.id,
        pos: ego.pos,
        goal: ego.goal,
        best_dist: view.cache.field(ego.goal).dist(ego.pos),
    });
    for other in &view.others {
        agents.push(SimAgent {
            id: other.id,
            pos: other.pos,
            goal: other.goal,
            best_dist: view.cache.field(other.goal).dist(other.pos),
        });
    }
    LocalSim {
        map: view.map.clone(),
        cache: view.cache.clone(),
        agents,
        step_in_sim: 0,
        fov: view.fov,
        reward_scale,
        on_goal,
    }
}

impl LocalSim {
    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn cache(&self) -> &Arc<CostCache> {
        &self.cache
    }

    /// Observation of simulated agent `idx` within the simulation.
    pub fn observe(&self, idx: usize) -> Observation {
        let ego = self.agents[idx];
        let others: Vec<(AgentId, Cell, Cell)> = self
            .agents
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, a)| (a.id, a.pos, a.goal))
            .collect();
        crate::costmap::observe(&self.cache, ego.pos, ego.goal, &others, self.fov)
    }

    /// Indices of the `k` simulated agents nearest the ego by BFS distance
    /// inside the ego's window, ego first. Ties break on ascending agent id;
    /// agents unreachable within the window sort last.
    pub fn proximal_agents(&self, k: usize) -> Vec<usize> {
        assert!(k >= 1);
        let dist = self.window_bfs(self.agents[0].pos);
        let mut order: Vec<(u32, AgentId, usize)> = self
            .agents
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let d = dist(a.pos);
                (d, a.id, idx)
            })
            .collect();
        order.sort_unstable();
        order.into_iter().take(k).map(|(_, _, idx)| idx).collect()
    }

    /// BFS over free cells restricted to the window centered at `center`.
    /// Returns a closure giving the distance of any cell ([`UNREACHABLE`]
    /// outside the window or with no in-window path).
    fn window_bfs(&self, center: Cell) -> impl Fn(Cell) -> u32 {
        let half = (self.fov / 2) as i32;
        let fov = self.fov as i32;
        let origin = Cell::new(center.x - half, center.y - half);
        let mut dist = vec![UNREACHABLE; (fov * fov) as usize];
        let idx_of = move |c: Cell| -> Option<usize> {
            let dx = c.x - origin.x;
            let dy = c.y - origin.y;
            if dx < 0 || dy < 0 || dx >= fov || dy >= fov {
                None
            } else {
                Some((dy * fov + dx) as usize)
            }
        };
        dist[idx_of(center).expect("center is in its own window")] = 0;
        let mut queue = VecDeque::from([center]);
        while let Some(c) = queue.pop_front() {
            let d = dist[idx_of(c).unwrap()];
            for a in ACTIONS.iter().skip(1) {
                let n = a.apply(c);
                if !self.map.is_free(n) {
                    continue;
                }
                if let Some(i) = idx_of(n) {
                    if dist[i] == UNREACHABLE {
                        dist[i] = d + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        move |c: Cell| idx_of(c).map_or(UNREACHABLE, |i| dist[i])
    }

    /// Per-agent policy outputs inside this state, in agent order.
    pub fn evaluate_agents(&self, policy: &dyn Policy) -> Vec<PolicyOutput> {
        (0..self.agents.len())
            .map(|i| policy.evaluate(&self.observe(i)))
            .collect()
    }

    /// Enumerate the joint actions available from this state, paired with
    /// their normalized prior probabilities.
    ///
    /// Agents listed in `proximal` branch over every action that stays on
    /// free cells; all remaining agents are pinned to their most probable
    /// action. The prior of a joint action is the product of the per-agent
    /// probabilities, renormalized over the returned list (the pinned
    /// agents contribute a constant factor).
    pub fn joint_actions(
        &self,
        proximal: &[usize],
        evals: &[PolicyOutput],
    ) -> Vec<(JointAction, f64)> {
        let n = self.agents.len();
        // Per-agent action menu in agent order, paired with probabilities.
        let mut menus: Vec<Vec<(Action, f64)>> = Vec::with_capacity(n);
        for (idx, agent) in self.agents.iter().enumerate() {
            if proximal.contains(&idx) {
                let menu = self
                    .map
                    .valid_actions(agent.pos)
                    .into_iter()
                    .map(|a| (a, evals[idx].priors[a.index()]))
                    .collect();
                menus.push(menu);
            } else {
                let a = evals[idx].argmax();
                menus.push(vec![(a, evals[idx].priors[a.index()])]);
            }
        }
        let mut out = Vec::new();
        let mut choice = vec![0usize; n];
        loop {
            let mut actions = Vec::with_capacity(n);
            let mut prior = 1.0f64;
            for (idx, menu) in menus.iter().enumerate() {
                let (a, p) = menu[choice[idx]];
                actions.push(a);
                prior *= p;
            }
            out.push((JointAction(actions), prior));
            // Advance the counter; the first agent is the most significant
            // digit so enumeration is lexicographic over the joint vector.
            let mut pos = n;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < menus[pos].len() {
                    break;
                }
                choice[pos] = 0;
                if pos == 0 {
                    break;
                }
            }
            if choice.iter().all(|&c| c == 0) {
                break;
            }
        }
        let sum: f64 = out.iter().map(|(_, p)| p).sum();
        if sum > 0.0 {
            for (_, p) in &mut out {
                *p /= sum;
            }
        } else {
            let u = 1.0 / out.len() as f64;
            for (_, p) in &mut out {
                *p = u;
            }
        }
        out
    }

    /// Apply a joint action with the environment's conflict semantics and
    /// collect the summed improvement reward.
    pub fn step(&self, joint: &JointAction) -> (LocalSim, f64) {
        assert_eq!(joint.0.len(), self.agents.len());
        let positions: Vec<(AgentId, Cell)> =
            self.agents.iter().map(|a| (a.id, a.pos)).collect();
        let resolution = resolve_moves(&self.map, &positions, &joint.0);
        let mut next = self.clone();
        let mut reward = 0.0;
        for (idx, agent) in next.agents.iter_mut().enumerate() {
            agent.pos = resolution.positions[idx];
            let d = self.cache.field(agent.goal).dist(agent.pos);
            reward += improvement_reward(agent.best_dist, d, self.reward_scale);
            agent.best_dist = agent.best_dist.min(d);
        }
        if next.on_goal == OnSimGoal::Remove {
            // The ego agent (index 0) always stays.
            let keep: Vec<SimAgent> = next
                .agents
                .iter()
                .enumerate()
                .filter(|&(idx, a)| idx == 0 || a.pos != a.goal)
                .map(|(_, a)| *a)
                .collect();
            next.agents = keep;
        }
        next.step_in_sim += 1;
        (next, reward)
    }
}

/// One action per simulated agent, in simulation order (ego first).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JointAction(pub Vec<Action>);

impl JointAction {
    /// The ego agent's component.
    pub fn ego(&self) -> Action {
        self.0[0]
    }
}

impl std::fmt::Display for JointAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}
