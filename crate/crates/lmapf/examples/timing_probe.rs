use lmapf::mapgen::{make_instance, maze_map, Family};
use lmapf::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    for (n, e) in [(16usize, 100u32), (16, 250), (8, 100)] {
        let map = Arc::new(maze_map(20, 20, 1000));
        let inst = make_instance(&map, n, Family::Maze, 0).unwrap();
        let mut world = inst.world(map).unwrap();
        let settings = PlannerSettings {
            search: SearchConfig { expansions: e, ..Default::default() },
            ..Default::default()
        };
        let solver = MctsSolver::new(settings);
        let t = Instant::now();
        let m = run_episode(&mut world, &solver, 128, settings.fov).unwrap();
        println!("n={n} e={e}: episode {:.1}s, decision {:.2} ms/agent/step", t.elapsed().as_secs_f64(), m.mean_decision_ms);
    }
}
