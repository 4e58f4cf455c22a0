use lmapf::*;
use std::sync::Arc;

fn run(rows: &[&str], starts: (Cell, Cell), goals: (Cell, Cell), expansions: u32, seed: u64) -> (u64, u64) {
    let map = Arc::new(GridMap::from_ascii(rows));
    let mut world = World::with_initial_goals(
        map.clone(),
        &[(starts.0, goals.0), (starts.1, goals.1)],
        seed,
    )
    .unwrap();
    let settings = PlannerSettings {
        search: SearchConfig { expansions, ..Default::default() },
        ..Default::default()
    };
    let solver = MctsSolver::new(settings);
    let _ = run_episode(&mut world, &solver, 64, settings.fov).unwrap();
    let g: Vec<u64> = world.agents().iter().map(|a| a.goals_completed).collect();
    (g[0], g[1])
}

fn main() {
    let five = vec![".....", "##.##"];
    let seven = vec![".......", "###.###"];
    let rooms = vec![
        ".....#####.....",
        ".....#####.....",
        "...............",
        ".....##.##.....",
        ".....#####.....",
    ];
    let cases: Vec<(&str, &Vec<&str>, (Cell, Cell))> = vec![
        ("len5", &five, (Cell::new(4, 0), Cell::new(0, 0))),
        ("len7", &seven, (Cell::new(6, 0), Cell::new(0, 0))),
        ("rooms", &rooms, (Cell::new(13, 2), Cell::new(1, 2))),
    ];
    for (name, rows, ends) in &cases {
        let starts = (ends.1, ends.0);
        let goals = (ends.0, ends.1);
        for e in [50u32, 100, 250] {
            let mut ok = 0;
            let mut goals_sum = 0;
            for seed in 0..10u64 {
                let (g0, g1) = run(rows, starts, goals, e, seed);
                if g0 >= 1 && g1 >= 1 { ok += 1; }
                goals_sum += g0 + g1;
            }
            println!("{name} expansions={e}: {ok}/10 (total goals {goals_sum})");
        }
    }
}
