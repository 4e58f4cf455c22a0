//! Prior-guided Monte-Carlo tree search over joint actions of a [`LocalSim`].
//!
//! Each node holds one simulation state; each edge holds one joint action
//! with statistics `{N, Q, r, prior}`. Iterations select edges by the PUCT
//! bound, expand one new node per iteration by stepping the simulation,
//! estimate the leaf with the summed per-agent policy values, and
//! backpropagate discounted returns as running means. The chosen action is
//! the ego component of the most-visited root edge.
//!
//! The whole search is deterministic: priors, rewards, and tie-breaks are
//! all fixed functions of the root state, the policy, and the
//! configuration. The tree is rebuilt from scratch on every call, since the
//! set of observed agents changes between steps.

use std::io::Write;

use crate::grid::Action;
use crate::localsim::{JointAction, LocalSim};
use crate::policy::Policy;

/// Search hyperparameters.
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    /// Discount for simulated rewards.
    pub gamma: f64,
    /// Exploration coefficient `c` of the PUCT bound.
    pub exploration_c: f64,
    /// Number of select-expand-backpropagate iterations per decision.
    pub expansions: u32,
    /// How many nearest agents (ego included) branch over all actions.
    pub proximal_k: usize,
    /// Uniform mixing ratio applied to the root edge priors.
    pub root_noise_eps: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            gamma: 0.96,
            exploration_c: 4.4,
            expansions: 250,
            proximal_k: 3,
            root_noise_eps: 0.6,
        }
    }
}

/// Statistics of one (state, joint action) edge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeStats {
    /// Visit count.
    pub visits: u32,
    /// Running mean of the discounted returns propagated through the edge.
    pub q: f64,
    /// Joint reward observed when the edge's transition was first taken.
    pub reward: f64,
    /// Prior probability of the edge's joint action.
    pub prior: f64,
}

/// PUCT selection: index of the edge maximizing
/// `Q + c * prior * sqrt(sum N) / (1 + N)`. While the node is unvisited the
/// square-root factor is taken as 1 so that the priors decide the first
/// pick. Ties resolve to the first edge in enumeration order.
pub fn puct_argmax(stats: &[EdgeStats], exploration_c: f64) -> usize {
    let total: u32 = stats.iter().map(|s| s.visits).sum();
    let sqrt_total = if total == 0 { 1.0 } else { (total as f64).sqrt() };
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in stats.iter().enumerate() {
        let score = s.q + exploration_c * s.prior * sqrt_total / (1.0 + s.visits as f64);
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

/// Discounted returns along a root-to-leaf path.
///
/// `rewards[t]` is the joint reward of the edge at depth `t` (the transition
/// into the node at depth `t + 1`); `leaf_value` estimates everything past
/// the leaf. Returns `G^k` for each edge depth `k`:
/// `G^k = sum_{tau} gamma^tau * rewards[k + tau] + gamma^(l - k) * leaf_value`.
pub fn discounted_returns(rewards: &[f64], leaf_value: f64, gamma: f64) -> Vec<f64> {
    let l = rewards.len();
    let mut returns = vec![0.0; l];
    let mut acc = leaf_value;
    for k in (0..l).rev() {
        acc = rewards[k] + gamma * acc;
        returns[k] = acc;
    }
    returns
}

/// Mix the root priors with the uniform distribution:
/// `p' = (1 - eps) * p + eps / len`.
pub fn mix_uniform(priors: &mut [f64], eps: f64) {
    let n = priors.len();
    if n == 0 {
        return;
    }
    let u = eps / n as f64;
    for p in priors.iter_mut() {
        *p = (1.0 - eps) * *p + u;
    }
}

struct Edge {
    joint: JointAction,
    stats: EdgeStats,
    child: Option<usize>,
}

struct Node {
    state: LocalSim,
    edges: Vec<Edge>,
}

/// One search over a root simulation state. Kept as a struct so tests can
/// inspect root statistics after running.
pub struct Search<'a> {
    policy: &'a dyn Policy,
    config: SearchConfig,
    nodes: Vec<Node>,
    iterations_done: u32,
}

impl<'a> Search<'a> {
    pub fn new(root: LocalSim, policy: &'a dyn Policy, config: SearchConfig) -> Self {
        let mut search = Search {
            policy,
            config,
            nodes: Vec::new(),
            iterations_done: 0,
        };
        let (mut edges, _) = search.make_edges(&root);
        let mut priors: Vec<f64> = edges.iter().map(|e| e.stats.prior).collect();
        mix_uniform(&mut priors, config.root_noise_eps);
        for (e, p) in edges.iter_mut().zip(priors) {
            e.stats.prior = p;
        }
        search.nodes.push(Node { state: root, edges });
        search
    }

    /// Evaluate every agent once, then enumerate the joint actions. The
    /// node value is the sum of per-agent value estimates at the state.
    fn make_edges(&self, state: &LocalSim) -> (Vec<Edge>, f64) {
        let evals = state.evaluate_agents(self.policy);
        let value: f64 = evals.iter().map(|e| e.value).sum();
        let proximal = state.proximal_agents(self.config.proximal_k);
        let edges = state
            .joint_actions(&proximal, &evals)
            .into_iter()
            .map(|(joint, prior)| Edge {
                joint,
                stats: EdgeStats { prior, ..Default::default() },
                child: None,
            })
            .collect();
        (edges, value)
    }

    /// One select-expand-backpropagate iteration. Returns the path of
    /// (node, edge) picks and the return seen at the root, for tracing.
    pub fn iterate(&mut self) -> (Vec<(usize, usize)>, f64) {
        // Selection: descend until an edge without a child is picked.
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut node_idx = 0;
        loop {
            let node = &self.nodes[node_idx];
            let stats: Vec<EdgeStats> = node.edges.iter().map(|e| e.stats).collect();
            let pick = puct_argmax(&stats, self.config.exploration_c);
            path.push((node_idx, pick));
            match node.edges[pick].child {
                Some(child) => node_idx = child,
                None => break,
            }
        }

        // Expansion: step the simulation along the unexplored edge.
        let (leaf_parent, pick) = *path.last().unwrap();
        let (child_state, reward, no_op) = {
            let node = &self.nodes[leaf_parent];
            let (child, reward) = node.state.step(&node.edges[pick].joint);
            let no_op = child.agents.len() == node.state.agents.len()
                && child
                    .agents
                    .iter()
                    .zip(&node.state.agents)
                    .all(|(a, b)| a.pos == b.pos);
            (child, reward, no_op)
        };
        let (edges, value) = self.make_edges(&child_state);
        // A transition that froze every agent in place proves the
        // unobstructed-progress value unattainable along this line; valuing
        // such leaves by the closed form would keep the search revisiting
        // dead branches ahead of untried ones.
        let leaf_value = if no_op { 0.0 } else { value };
        let child_idx = self.nodes.len();
        self.nodes.push(Node { state: child_state, edges });
        {
            let edge = &mut self.nodes[leaf_parent].edges[pick];
            edge.child = Some(child_idx);
            edge.stats.reward = reward;
        }

        // Backpropagation: running-mean update with discounted returns.
        let rewards: Vec<f64> = path
            .iter()
            .map(|&(n, e)| self.nodes[n].edges[e].stats.reward)
            .collect();
        let returns = discounted_returns(&rewards, leaf_value, self.config.gamma);
        for (&(n, e), &g) in path.iter().zip(&returns) {
            let s = &mut self.nodes[n].edges[e].stats;
            s.q = (s.visits as f64 * s.q + g) / (s.visits as f64 + 1.0);
            s.visits += 1;
        }
        self.iterations_done += 1;
        (path, returns[0])
    }

    pub fn run(&mut self) {
        for _ in 0..self.config.expansions {
            self.iterate();
        }
    }

    /// Root edge statistics in enumeration order.
    pub fn root_stats(&self) -> Vec<EdgeStats> {
        self.nodes[0].edges.iter().map(|e| e.stats).collect()
    }

    pub fn root_joints(&self) -> Vec<&JointAction> {
        self.nodes[0].edges.iter().map(|e| &e.joint).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn iterations_done(&self) -> u32 {
        self.iterations_done
    }

    /// The ego action of the most explored root edge. Ties prefer higher Q,
    /// then the earlier (lexicographically smaller) joint action.
    pub fn best_action(&self) -> Action {
        let mut best: Option<&Edge> = None;
        for e in &self.nodes[0].edges {
            let better = match best {
                None => true,
                Some(b) => {
                    e.stats.visits > b.stats.visits
                        || (e.stats.visits == b.stats.visits && e.stats.q > b.stats.q)
                }
            };
            if better {
                best = Some(e);
            }
        }
        best.expect("a node always has at least one edge").joint.ego()
    }
}

/// Run a full search and return the chosen ego action.
pub fn plan(root: LocalSim, policy: &dyn Policy, config: &SearchConfig) -> Action {
    let mut search = Search::new(root, policy, *config);
    search.run();
    search.best_action()
}

/// As [`plan`], writing one JSON record per iteration: the edge path picked,
/// the return seen at the root, and the root visit counts.
pub fn plan_traced(
    root: LocalSim,
    policy: &dyn Policy,
    config: &SearchConfig,
    sink: &mut dyn Write,
) -> std::io::Result<Action> {
    let mut search = Search::new(root, policy, *config);
    for iteration in 0..config.expansions {
        let (path, g0) = search.iterate();
        let joints: Vec<String> = path
            .iter()
            .map(|&(n, e)| search.nodes[n].edges[e].joint.to_string())
            .collect();
        let record = serde_json::json!({
            "iteration": iteration,
            "path": joints,
            "g0": g0,
            "root_visits": search.root_stats().iter().map(|s| s.visits).collect::<Vec<_>>(),
        });
        writeln!(sink, "{record}")?;
    }
    Ok(search.best_action())
}
