use lmapf::*;
use std::sync::Arc;

fn main() {
    let map = Arc::new(GridMap::from_ascii(&["..#..", ".....", "..#.."]));
    let pairs = [
        (Cell::new(0, 1), Cell::new(4, 1)),
        (Cell::new(4, 1), Cell::new(0, 1)),
        (Cell::new(1, 0), Cell::new(3, 2)),
        (Cell::new(3, 2), Cell::new(1, 0)),
    ];
    for expansions in [60u32, 100, 250] {
        let settings = PlannerSettings {
            search: SearchConfig { expansions, ..Default::default() },
            ..Default::default()
        };
        for random in [false, true] {
            let mut world = World::with_initial_goals(map.clone(), &pairs, 3).unwrap();
            let solver = if random {
                MctsSolver::random_policy(settings)
            } else {
                MctsSolver::new(settings)
            };
            let m = run_episode(&mut world, &solver, 40, settings.fov).unwrap();
            println!(
                "expansions={expansions} random={random}: goals={} per-agent={:?} final={:?}",
                m.total_goals_reached,
                world.agents().iter().map(|a| a.goals_completed).collect::<Vec<_>>(),
                world.agents().iter().map(|a| (a.pos.x, a.pos.y)).collect::<Vec<_>>()
            );
        }
    }
}
