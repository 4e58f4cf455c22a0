//! Episode trace files: one JSON record per step, and a replay check that
//! re-executes the recorded actions through the environment's move
//! resolution to confirm the recorded positions.

use std::path::Path;

use anyhow::Context;
use lmapf::conflict::resolve_moves;
use lmapf::{Cell, GridMap, StepRecord};
use thiserror::Error;

pub fn write_trace(path: &Path, records: &[StepRecord]) -> anyhow::Result<()> {
    let mut text = String::new();
    for record in records {
        text.push_str(&serde_json::to_string(record)?);
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing trace {}", path.display()))
}

pub fn read_trace(path: &Path) -> anyhow::Result<Vec<StepRecord>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading trace {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("trace line {}", i + 1))
        })
        .collect()
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("trace is empty")]
    Empty,
    #[error("step {step}: agent {agent} recorded at {recorded}, replay yields {replayed}")]
    PositionMismatch { step: u64, agent: usize, recorded: Cell, replayed: Cell },
    #[error("step {step}: agent count changed from {before} to {after}")]
    AgentCountChanged { step: u64, before: usize, after: usize },
}

/// Re-resolve every recorded joint move and compare with the positions of
/// the following record. Returns the number of verified transitions.
pub fn replay_check(map: &GridMap, records: &[StepRecord]) -> Result<usize, ReplayError> {
    if records.is_empty() {
        return Err(ReplayError::Empty);
    }
    let mut checked = 0;
    for pair in records.windows(2) {
        let (now, next) = (&pair[0], &pair[1]);
        if now.agents.len() != next.agents.len() {
            return Err(ReplayError::AgentCountChanged {
                step: now.time,
                before: now.agents.len(),
                after: next.agents.len(),
            });
        }
        let agents: Vec<(usize, Cell)> = now.agents.iter().map(|a| (a.id, a.pos)).collect();
        let actions: Vec<_> = now.agents.iter().map(|a| a.action).collect();
        let resolution = resolve_moves(map, &agents, &actions);
        for (idx, agent) in next.agents.iter().enumerate() {
            if resolution.positions[idx] != agent.pos {
                return Err(ReplayError::PositionMismatch {
                    step: now.time,
                    agent: agent.id,
                    recorded: agent.pos,
                    replayed: resolution.positions[idx],
                });
            }
        }
        checked += 1;
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lmapf::solver::{PlannerSettings, PolicySolver};
    use lmapf::world::run_episode_traced;
    use lmapf::World;
    use std::sync::Arc;

    fn record_episode() -> (Arc<GridMap>, Vec<StepRecord>) {
        let map = Arc::new(GridMap::from_ascii(&["......", ".#..#.", "......"]));
        let starts = [Cell::new(0, 0), Cell::new(5, 2), Cell::new(3, 0)];
        let mut world = World::new(map.clone(), &starts, 11).unwrap();
        let solver = PolicySolver::costmap(&PlannerSettings::default());
        let (_, records) = run_episode_traced(&mut world, &solver, 24, 5).unwrap();
        (map, records)
    }

    #[test]
    fn traces_replay_cleanly() {
        let (map, records) = record_episode();
        assert_eq!(records.len(), 24);
        assert_eq!(replay_check(&map, &records).unwrap(), 23);
    }

    #[test]
    fn trace_file_round_trip() {
        let (map, records) = record_episode();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ep.trace.jsonl");
        write_trace(&path, &records).unwrap();
        let loaded = read_trace(&path).unwrap();
        assert_eq!(loaded, records);
        assert_eq!(replay_check(&map, &loaded).unwrap(), 23);
    }

    #[test]
    fn tampered_trace_is_caught() {
        let (map, mut records) = record_episode();
        // Teleport one agent mid-trace.
        let p = records[10].agents[0].pos;
        records[10].agents[0].pos =
            if p == Cell::new(5, 0) { Cell::new(0, 2) } else { Cell::new(5, 0) };
        assert!(matches!(
            replay_check(&map, &records),
            Err(ReplayError::PositionMismatch { .. })
        ));
    }
}
