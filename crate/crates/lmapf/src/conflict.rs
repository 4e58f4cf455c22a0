//! Simultaneous-move resolution on a shared grid.
//!
//! All agents propose one action for the same time step. Moves are resolved
//! so that the post-state has no vertex conflict (two agents on one cell) and
//! no swap (two agents exchanging adjacent cells). A rejected agent is frozen
//! at its current cell for the step.
//!
//! The rule, applied until a fixed point is reached:
//!
//! 1. a move into an out-of-bounds or blocked cell is rejected;
//! 2. both ends of a would-be swap are rejected;
//! 3. among agents moving into the same cell, all but the lowest id are
//!    rejected;
//! 4. a move into the cell of an agent that stays there (waiting or rejected)
//!    is rejected.
//!
//! Rotations (cycles of agents each moving into the cell vacated by the next)
//! pass untouched; they involve no vertex or edge conflict. The fixed point is
//! unique, so re-resolving the same proposals always yields the same outcome.

use crate::grid::{Action, AgentId, Cell, GridMap};

/// Outcome of resolving one joint move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolution {
    /// Post-step position per agent, same order as the input.
    pub positions: Vec<Cell>,
    /// Agents whose non-wait move was rejected, ascending id order.
    pub frozen: Vec<AgentId>,
}

/// Resolve a joint move. `agents` pairs each id with its current cell;
/// positions must be pairwise distinct and free. One action per agent.
pub fn resolve_moves(map: &GridMap, agents: &[(AgentId, Cell)], actions: &[Action]) -> Resolution {
    assert_eq!(agents.len(), actions.len(), "one action per agent");
    let n = agents.len();
    let targets: Vec<Cell> = agents
        .iter()
        .zip(actions)
        .map(|(&(_, pos), &a)| a.apply(pos))
        .collect();
    // `stays[i]`: the agent keeps its current cell (by choice or rejection).
    let mut stays: Vec<bool> = (0..n).map(|i| targets[i] == agents[i].1).collect();
    let mut rejected = vec![false; n];

    for i in 0..n {
        if !stays[i] && !map.is_free(targets[i]) {
            stays[i] = true;
            rejected[i] = true;
        }
    }

    // Swaps: both ends frozen. Rejecting one end cannot create a new swap,
    // so a single pass over pairs suffices.
    for i in 0..n {
        for j in (i + 1)..n {
            if !stays[i]
                && !stays[j]
                && targets[i] == agents[j].1
                && targets[j] == agents[i].1
            {
                stays[i] = true;
                rejected[i] = true;
                stays[j] = true;
                rejected[j] = true;
            }
        }
    }

    loop {
        let mut changed = false;
        // Same-target contention: lowest id wins.
        for i in 0..n {
            if stays[i] {
                continue;
            }
            for j in 0..n {
                if j != i && !stays[j] && targets[j] == targets[i] {
                    let loser = if agents[i].0 < agents[j].0 { j } else { i };
                    stays[loser] = true;
                    rejected[loser] = true;
                    changed = true;
                }
            }
        }
        // Moving into a cell that stays occupied.
        for i in 0..n {
            if stays[i] {
                continue;
            }
            if (0..n).any(|j| j != i && stays[j] && agents[j].1 == targets[i]) {
                stays[i] = true;
                rejected[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let positions = (0..n)
        .map(|i| if stays[i] { agents[i].1 } else { targets[i] })
        .collect();
    let mut frozen: Vec<AgentId> = (0..n).filter(|&i| rejected[i]).map(|i| agents[i].0).collect();
    frozen.sort_unstable();
    Resolution { positions, frozen }
}
