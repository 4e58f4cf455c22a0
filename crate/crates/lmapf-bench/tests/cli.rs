//! End-to-end exercise of the command-line surface on a tiny suite.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lmapf-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("out");
    let trace = dir.join("traces");
    let text = format!(
        "family = maze\nwidth = 10\nheight = 10\nmaps = 1\nmap_seed = 4\n\
         agents = 3\nepisode_len = 16\nsolvers = bare-policy, mats-lp\nseeds = 0,1\n\
         expansions = 20\nout_dir = {}\ntrace_dir = {}\n",
        out.display(),
        trace.display()
    );
    let path = dir.join("suite.cfg");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn gen_run_summarize_replay() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());

    let gen = bench(&["gen", "--config", config.to_str().unwrap()]);
    assert!(gen.status.success(), "gen: {}", String::from_utf8_lossy(&gen.stderr));
    let map_path = dir.path().join("out/maze10x10-s4.map");
    assert!(map_path.exists());
    assert!(dir.path().join("out/maze10x10-s4-a3-s0.inst").exists());

    let run = bench(&["run", "--config", config.to_str().unwrap()]);
    assert!(run.status.success(), "run: {}", String::from_utf8_lossy(&run.stderr));
    let results = dir.path().join("out/results.csv");
    let text = fs::read_to_string(&results).unwrap();
    assert!(text.starts_with(lmapf_bench::CSV_HEADER));
    assert_eq!(text.lines().count(), 1 + 4, "2 solvers x 2 seeds");
    assert!(dir.path().join("out/results.jsonl").exists());

    let summarize = bench(&["summarize", "--results", results.to_str().unwrap()]);
    assert!(summarize.status.success());
    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert!(summary.starts_with(lmapf_bench::summary::SUMMARY_HEADER));
    assert_eq!(summary.lines().count(), 1 + 2, "one row per solver");

    // Replay one of the recorded traces against the emitted map file.
    let trace_file = dir.path().join("traces/maze10x10-s4-a3-bare-policy-s0.trace.jsonl");
    assert!(trace_file.exists());
    let replay = bench(&[
        "replay",
        "--map",
        map_path.to_str().unwrap(),
        "--trace",
        trace_file.to_str().unwrap(),
    ]);
    assert!(replay.status.success(), "replay: {}", String::from_utf8_lossy(&replay.stderr));
    assert!(String::from_utf8_lossy(&replay.stdout).contains("positions confirmed"));
}

#[test]
fn run_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "familly = maze\n").unwrap();
    let out = bench(&["run", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}
