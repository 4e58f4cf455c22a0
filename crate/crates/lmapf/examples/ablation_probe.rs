use lmapf::mapgen::{make_instance, maze_map, Family};
use lmapf::*;
use std::sync::Arc;

fn run_maze(seed: u64, n: usize, k: usize, e: u32, tau: f64) -> f64 {
    let map = Arc::new(maze_map(20, 20, 1000 + seed));
    let inst = make_instance(&map, n, Family::Maze, seed).unwrap();
    let mut world = inst.world(map).unwrap();
    let settings = PlannerSettings {
        temperature: tau,
        search: SearchConfig { expansions: e, proximal_k: k, ..Default::default() },
        ..Default::default()
    };
    let solver = MctsSolver::new(settings);
    run_episode(&mut world, &solver, 128, settings.fov).unwrap().throughput
}

fn stats(v: &mut Vec<f64>) -> (f64, f64) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let med = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
    (med, v.iter().sum::<f64>() / n as f64)
}

fn main() {
    const SEEDS: u64 = 20;
    for (n, k, e) in [(8usize, 1usize, 100u32), (8, 3, 100), (16, 1, 100), (16, 3, 100), (16, 1, 250), (16, 3, 250)] {
        let mut tps: Vec<f64> = (0..SEEDS).map(|s| run_maze(s, n, k, e, 0.1)).collect();
        let (med, mean) = stats(&mut tps);
        println!("k{k}@{n} e={e}: med {med:.4} mean {mean:.4}");
    }
}
