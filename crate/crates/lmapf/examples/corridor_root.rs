use lmapf::*;
use lmapf::mcts::Search;
use std::sync::Arc;

fn main() {
    let rows = vec![
        ".....#####.....",
        ".....#####.....",
        "...............",
        ".....##.##.....",
        ".....#####.....",
    ];
    let map = Arc::new(GridMap::from_ascii(&rows));
    let world = World::with_initial_goals(
        map.clone(),
        &[(Cell::new(7, 2), Cell::new(13, 2)), (Cell::new(8, 2), Cell::new(1, 2))],
        1,
    )
    .unwrap();
    let settings = PlannerSettings {
        search: SearchConfig { expansions: 250, ..Default::default() },
        ..Default::default()
    };
    let policy = settings.costmap_policy();
    let sim = build_sim(&world.agent_view(0, settings.fov), 1.0, OnSimGoal::Freeze);
    println!("agent dists: a0 d={}, a1 d={}",
        world.cache().field(Cell::new(13,2)).dist(Cell::new(7,2)),
        world.cache().field(Cell::new(1,2)).dist(Cell::new(8,2)));
    let mut search = Search::new(sim, &policy, settings.search);
    search.run();
    let joints: Vec<_> = search.root_joints().into_iter().cloned().collect();
    for (j, s) in joints.iter().zip(search.root_stats()) {
        if s.visits > 0 || s.prior > 0.05 {
            println!("{j}  N={:3}  Q={:7.3}  prior={:.4}  r={:.2}", s.visits, s.q, s.prior, s.reward);
        }
    }
    println!("best: {}", search.best_action());
}
