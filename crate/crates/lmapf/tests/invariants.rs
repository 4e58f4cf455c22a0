//! Property tests over randomized maps, states, and action streams.

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lmapf::localsim::{build_sim, JointAction, OnSimGoal};
use lmapf::mapgen::{maze_map, random_map, Family};
use lmapf::policy::Policy;
use lmapf::{
    observe, plan,CostCache, CostmapPolicy, GridMap, PlannerSettings, RandomPolicy, SearchConfig,
    World, ACTIONS, UNREACHABLE,
};

type Cell = lmapf::Cell;

/// A random map with at least `agents` free cells, plus distinct starts.
fn setup(seed: u64, agents: usize) -> (Arc<GridMap>, Vec<Cell>) {
    let map = Arc::new(random_map(12, 12, 0.2, seed).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let mut free = map.free_cells();
    for i in (1..free.len()).rev() {
        free.swap(i, rng.gen_range(0..=i));
    }
    free.truncate(agents);
    (map, free)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn world_step_preserves_invariants(seed in 0u64..500, stream in 0u64..1000) {
        let (map, starts) = setup(seed, 8);
        let mut world = World::new(map.clone(), &starts, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        for _ in 0..60 {
            let before: Vec<Cell> = world.agents().iter().map(|a| a.pos).collect();
            let actions: Vec<_> = (0..8).map(|_| ACTIONS[rng.gen_range(0..5)]).collect();
            world.step(&actions).unwrap();
            let after: Vec<Cell> = world.agents().iter().map(|a| a.pos).collect();
            for i in 0..8 {
                prop_assert!(map.is_free(after[i]));
                prop_assert!(before[i].manhattan(after[i]) <= 1);
                prop_assert_ne!(world.agents()[i].pos, world.agents()[i].goal);
                for j in (i + 1)..8 {
                    prop_assert_ne!(after[i], after[j]);
                    prop_assert!(!(after[i] == before[j] && after[j] == before[i]));
                }
            }
        }
    }

    #[test]
    fn observation_normalization_bounds(seed in 0u64..500, fov_pick in 0usize..3) {
        let fov = [5, 7, 11][fov_pick];
        let (map, cells) = setup(seed, 2);
        let cache = CostCache::new(map);
        let obs = observe(&cache, cells[0], cells[1], &[], fov);
        let visible: Vec<f32> = obs.costmap.iter().copied().filter(|&v| v != -1.0).collect();
        if !visible.is_empty() {
            let max = visible.iter().cloned().fold(f32::MIN, f32::max);
            let min = visible.iter().cloned().fold(f32::MAX, f32::min);
            prop_assert_eq!(max, 1.0);
            if visible.len() > 1 && min != 1.0 {
                prop_assert_eq!(min, 0.0);
            }
            for v in &visible {
                prop_assert!((0.0..=1.0).contains(v));
            }
        }
    }

    #[test]
    fn observation_is_monotone_in_distance(seed in 0u64..500) {
        let (map, cells) = setup(seed, 2);
        let cache = CostCache::new(map.clone());
        let goal = cells[1];
        let field = cache.field(goal);
        let obs = observe(&cache, cells[0], goal, &[], 7);
        let half = 3i32;
        for dy in -half..=half {
            for dx in -half..=half {
                for (ex, ey) in [(dx + 1, dy), (dx, dy + 1)] {
                    let (Some(wa), Some(wb)) = (obs.offset_index(dx, dy), obs.offset_index(ex, ey))
                    else { continue };
                    let a = Cell::new(cells[0].x + dx, cells[0].y + dy);
                    let b = Cell::new(cells[0].x + ex, cells[0].y + ey);
                    let (da, db) = (field.dist(a), field.dist(b));
                    if da == UNREACHABLE || db == UNREACHABLE || !map.is_free(a) || !map.is_free(b) {
                        continue;
                    }
                    if da < db {
                        prop_assert!(obs.costmap[wa] > obs.costmap[wb]);
                    }
                }
            }
        }
    }

    #[test]
    fn joint_action_count_is_product_of_menus(seed in 0u64..300, k in 1usize..4) {
        let (map, starts) = setup(seed, 5);
        let world = World::new(map.clone(), &starts, seed).unwrap();
        let sim = build_sim(&world.agent_view(0, 9), 1.0, OnSimGoal::Freeze);
        let proximal = sim.proximal_agents(k);
        let evals = sim.evaluate_agents(&CostmapPolicy::default());
        let joints = sim.joint_actions(&proximal, &evals);
        let expected: usize = sim
            .agents
            .iter()
            .enumerate()
            .map(|(idx, a)| if proximal.contains(&idx) { map.valid_actions(a.pos).len() } else { 1 })
            .product();
        prop_assert_eq!(joints.len(), expected);
        let total: f64 = joints.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        // Distant agents keep one fixed action across the whole list.
        for idx in 0..sim.agents.len() {
            if !proximal.contains(&idx) {
                let first = joints[0].0 .0[idx];
                prop_assert!(joints.iter().all(|(j, _)| j.0[idx] == first));
            }
        }
    }

    #[test]
    fn sim_rewards_are_bounded_by_initial_distance(seed in 0u64..300) {
        let (map, starts) = setup(seed, 4);
        let world = World::new(map, &starts, seed).unwrap();
        let sim = build_sim(&world.agent_view(0, 9), 1.0, OnSimGoal::Freeze);
        let budgets: Vec<f64> = sim
            .agents
            .iter()
            .map(|a| if a.best_dist == UNREACHABLE { 0.0 } else { a.best_dist as f64 })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = sim;
        let mut total = 0.0;
        for _ in 0..40 {
            let joint = JointAction(
                (0..state.agents.len()).map(|_| ACTIONS[rng.gen_range(0..5)]).collect(),
            );
            let (next, r) = state.step(&joint);
            total += r;
            state = next;
        }
        prop_assert!(total <= budgets.iter().sum::<f64>() + 1e-9);
    }

    #[test]
    fn map_files_round_trip(seed in 0u64..500) {
        let map = if seed % 2 == 0 {
            random_map(9, 6, 0.25, seed).unwrap()
        } else {
            maze_map(11, 9, seed)
        };
        let text = map.format();
        let parsed = GridMap::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &map);
        prop_assert_eq!(parsed.format(), text);
    }
}

#[test]
fn priors_form_a_simplex_on_many_random_observations() {
    let policy = CostmapPolicy::default();
    let random = RandomPolicy;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    'outer: for seed in 0.. {
        let (map, _) = setup(seed, 1);
        let cache = CostCache::new(map.clone());
        let free = map.free_cells();
        for _ in 0..200 {
            let pos = free[rng.gen_range(0..free.len())];
            let goal = free[rng.gen_range(0..free.len())];
            let others: Vec<(usize, Cell, Cell)> = (0..rng.gen_range(0..4))
                .map(|i| (i + 1, free[rng.gen_range(0..free.len())], goal))
                .filter(|&(_, p, _)| p != pos)
                .collect();
            let obs = observe(&cache, pos, goal, &others, 7);
            for out in [policy.evaluate(&obs), random.evaluate(&obs)] {
                let sum: f64 = out.priors.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "prior sum {sum}");
                assert!(out.priors.iter().all(|&p| p >= 0.0));
                assert!(out.value >= 0.0 && out.value <= 1.0 / (1.0 - 0.96) + 1e-9);
                for (i, a) in ACTIONS.iter().enumerate() {
                    let (dx, dy) = a.delta();
                    let masked = obs
                        .offset_index(dx, dy)
                        .map_or(true, |w| obs.costmap[w] < 0.0);
                    if masked && out.priors.iter().any(|&p| p != 0.2) {
                        assert!(out.priors[i] < 1e-6, "masked action {a} got {}", out.priors[i]);
                    }
                }
            }
            checked += 1;
            if checked >= 10_000 {
                break 'outer;
            }
        }
    }
    assert_eq!(checked, 10_000);
}

#[test]
fn planning_with_goal_prior_beats_uniform_prior_on_congestion() {
    // Two agents crossing a one-cell corridor with a single pocket. The
    // goal-chasing prior finds the crossing quickly; uniform priors with
    // zero values should do no better.
    let map = Arc::new(GridMap::from_ascii(&[".......", "###.###"]));
    let pairs = [
        (Cell::new(0, 0), Cell::new(6, 0)),
        (Cell::new(6, 0), Cell::new(0, 0)),
    ];
    let settings = PlannerSettings {
        search: SearchConfig { expansions: 100, ..Default::default() },
        ..Default::default()
    };
    let score = |random: bool| -> u64 {
        let mut world = World::with_initial_goals(map.clone(), &pairs, 3).unwrap();
        let solver = if random {
            lmapf::MctsSolver::random_policy(settings)
        } else {
            lmapf::MctsSolver::new(settings)
        };
        lmapf::run_episode(&mut world, &solver, 48, settings.fov)
            .unwrap()
            .total_goals_reached
    };
    let guided = score(false);
    assert!(guided >= score(true));
    assert!(guided >= 2, "both agents should cross at least once, got {guided}");
}
