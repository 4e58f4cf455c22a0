use lmapf::*;
use std::sync::Arc;

fn main() {
    let map = Arc::new(GridMap::from_ascii(&[".......", "###.###"]));
    let mut world = World::with_initial_goals(
        map.clone(),
        &[(Cell::new(0, 0), Cell::new(6, 0)), (Cell::new(6, 0), Cell::new(0, 0))],
        1,
    )
    .unwrap();
    let settings = PlannerSettings {
        search: SearchConfig { expansions: 100, ..Default::default() },
        ..Default::default()
    };
    let solver = MctsSolver::new(settings);
    for t in 0..20 {
        let views: Vec<AgentView> = (0..2).map(|id| world.agent_view(id, settings.fov)).collect();
        let actions: Vec<Action> = views.iter().map(|v| Solver::decide(&solver, v).unwrap()).collect();
        println!(
            "t={t} pos=({}, {}) goals=({}, {}) actions=({}, {})",
            world.agents()[0].pos, world.agents()[1].pos,
            world.agents()[0].goal, world.agents()[1].goal,
            actions[0], actions[1]
        );
        world.step(&actions).unwrap();
    }
}
