//! Suite execution: every (map, agent count, solver, seed) combination runs
//! one episode and yields one result row. Completed rows are skipped when a
//! suite is rerun, so interrupted suites resume instead of duplicating work.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use anyhow::Context;
use lmapf::mapgen::{make_instance, Family, MapSpec};
use lmapf::world::run_episode_traced;
use lmapf::{run_episode, GridMap, MctsSolver, PolicySolver, Solver};
use rayon::prelude::*;

use crate::config::{RunConfig, SolverKind};
use crate::trace;

pub const CSV_HEADER: &str =
    "map_id,family,n_agents,solver,seed,throughput,goals,decision_ms,wall_s,status";

/// One run's outcome. A failed run keeps its key columns and records the
/// failure in `status`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResultRow {
    pub map_id: String,
    pub family: Family,
    pub n_agents: usize,
    pub solver: String,
    pub seed: u64,
    pub throughput: f64,
    pub goals: u64,
    pub decision_ms: f64,
    pub wall_s: f64,
    pub status: String,
}

impl ResultRow {
    pub fn key(&self) -> (String, usize, String, u64) {
        (self.map_id.clone(), self.n_agents, self.solver.clone(), self.seed)
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{},{:.3},{:.3},{}",
            self.map_id,
            self.family,
            self.n_agents,
            self.solver,
            self.seed,
            self.throughput,
            self.goals,
            self.decision_ms,
            self.wall_s,
            self.status.replace(',', ";"),
        )
    }

    pub fn from_csv(line: &str) -> Option<ResultRow> {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 10 {
            return None;
        }
        Some(ResultRow {
            map_id: parts[0].to_string(),
            family: parts[1].parse().ok()?,
            n_agents: parts[2].parse().ok()?,
            solver: parts[3].to_string(),
            seed: parts[4].parse().ok()?,
            throughput: parts[5].parse().ok()?,
            goals: parts[6].parse().ok()?,
            decision_ms: parts[7].parse().ok()?,
            wall_s: parts[8].parse().ok()?,
            status: parts[9].to_string(),
        })
    }
}

/// Read rows from a results CSV, skipping the header and malformed lines.
pub fn read_rows(path: &Path) -> anyhow::Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading results {}", path.display()))?;
    Ok(text
        .lines()
        .skip_while(|l| *l == CSV_HEADER)
        .filter_map(ResultRow::from_csv)
        .collect())
}

/// Write the canonical results files: rows sorted by key, CSV plus a JSONL
/// mirror, replacing any previous contents atomically.
pub fn write_rows(out_dir: &Path, rows: &[ResultRow]) -> anyhow::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(out_dir)?;
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.key());

    let csv_path = out_dir.join("results.csv");
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in &sorted {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    let tmp = out_dir.join("results.csv.tmp");
    fs::write(&tmp, csv)?;
    fs::rename(&tmp, &csv_path)?;

    let jsonl_path = out_dir.join("results.jsonl");
    let mut jsonl = String::new();
    for row in &sorted {
        jsonl.push_str(&serde_json::to_string(row)?);
        jsonl.push('\n');
    }
    let tmp = out_dir.join("results.jsonl.tmp");
    fs::write(&tmp, jsonl)?;
    fs::rename(&tmp, &jsonl_path)?;

    Ok((csv_path, jsonl_path))
}

/// The maps of a suite, generated from the config.
pub fn suite_maps(cfg: &RunConfig) -> anyhow::Result<Vec<(MapSpec, Arc<GridMap>)>> {
    let mut maps = Vec::with_capacity(cfg.maps);
    for i in 0..cfg.maps {
        let spec = MapSpec {
            family: cfg.family,
            width: cfg.width,
            height: cfg.height,
            density: cfg.density,
            seed: cfg.map_seed + i as u64,
        };
        let map = spec
            .generate()
            .with_context(|| format!("generating map {}", spec.id()))?;
        maps.push((spec, Arc::new(map)));
    }
    Ok(maps)
}

fn build_solver(cfg: &RunConfig, kind: SolverKind) -> Box<dyn Solver> {
    let settings = cfg.planner_settings(kind);
    match kind {
        SolverKind::BarePolicy => Box::new(PolicySolver::costmap(&settings)),
        SolverKind::MatsLp | SolverKind::NoProximal => Box::new(MctsSolver::new(settings)),
        SolverKind::RandomPolicyMcts => Box::new(MctsSolver::random_policy(settings)),
    }
}

struct Task {
    map_id: String,
    map: Arc<GridMap>,
    n_agents: usize,
    solver: SolverKind,
    seed: u64,
}

fn run_task(cfg: &RunConfig, task: &Task) -> ResultRow {
    let mut row = ResultRow {
        map_id: task.map_id.clone(),
        family: cfg.family,
        n_agents: task.n_agents,
        solver: task.solver.to_string(),
        seed: task.seed,
        throughput: 0.0,
        goals: 0,
        decision_ms: 0.0,
        wall_s: 0.0,
        status: "ok".to_string(),
    };
    let started = Instant::now();
    let outcome = (|| -> anyhow::Result<()> {
        let instance = make_instance(&task.map, task.n_agents, cfg.family, task.seed)?;
        let mut world = instance.world(task.map.clone())?;
        let solver = build_solver(cfg, task.solver);
        let metrics = if let Some(dir) = &cfg.trace_dir {
            let (metrics, records) =
                run_episode_traced(&mut world, solver.as_ref(), cfg.episode_len, cfg.fov)?;
            fs::create_dir_all(dir)?;
            let name = format!(
                "{}-a{}-{}-s{}.trace.jsonl",
                task.map_id, task.n_agents, task.solver, task.seed
            );
            trace::write_trace(&dir.join(name), &records)?;
            metrics
        } else {
            run_episode(&mut world, solver.as_ref(), cfg.episode_len, cfg.fov)?
        };
        row.throughput = metrics.throughput;
        row.goals = metrics.total_goals_reached;
        row.decision_ms = metrics.mean_decision_ms;
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = format!("error: {e}");
    }
    row.wall_s = started.elapsed().as_secs_f64();
    row
}

/// Run every missing (map, agents, solver, seed) combination of the config
/// and return the full result table (existing rows included). Rows are
/// appended to the CSV as they finish, and the canonical sorted files are
/// rewritten at the end.
pub fn run_suite(cfg: &RunConfig) -> anyhow::Result<Vec<ResultRow>> {
    fs::create_dir_all(&cfg.out_dir)?;
    let csv_path = cfg.out_dir.join("results.csv");
    let mut existing = if csv_path.exists() { read_rows(&csv_path)? } else { Vec::new() };
    let done: std::collections::HashSet<_> = existing.iter().map(|r| r.key()).collect();

    let maps = suite_maps(cfg)?;
    let mut tasks = Vec::new();
    for (spec, map) in &maps {
        for &n_agents in &cfg.agents {
            for &solver in &cfg.solvers {
                for &seed in &cfg.seeds {
                    let key =
                        (spec.id(), n_agents, solver.to_string(), seed);
                    if !done.contains(&key) {
                        tasks.push(Task {
                            map_id: spec.id(),
                            map: map.clone(),
                            n_agents,
                            solver,
                            seed,
                        });
                    }
                }
            }
        }
    }
    log::info!(
        "suite: {} runs to execute ({} already done)",
        tasks.len(),
        existing.len()
    );

    let append = Mutex::new(
        fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&csv_path)?,
    );
    if existing.is_empty() {
        writeln!(append.lock().unwrap(), "{CSV_HEADER}")?;
    }

    let run_all = || -> Vec<ResultRow> {
        tasks
            .par_iter()
            .map(|task| {
                let row = run_task(cfg, task);
                {
                    let mut f = append.lock().unwrap();
                    let _ = writeln!(f, "{}", row.to_csv());
                    let _ = f.flush();
                }
                log::debug!("done {} {} {} seed {}", row.map_id, row.n_agents, row.solver, row.seed);
                row
            })
            .collect()
    };
    let mut fresh = if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .context("building worker pool")?
            .install(run_all)
    } else {
        run_all()
    };

    existing.append(&mut fresh);
    existing.sort_by_key(|r| r.key());
    write_rows(&cfg.out_dir, &existing)?;
    Ok(existing)
}
