use std::fs;
use std::path::Path;

use pimax::harness::{fresh_learners, load_learner_set, run_composition, save_learner};
use pimax::metrics::{coverage_entropy, coverage_grid, pi_timeseries, same_sign_hop_fraction};
use pimax::{run_experiment, run_loop, Control, ExperimentConfig, RunLog};
use pimax_core::composer::compose_learners;
use pimax_core::{ConditionalTable, Learner};

fn small(robots: usize, control: Control, steps: u64, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::canonical(robots, control);
    cfg.steps = steps;
    cfg.seed = seed;
    cfg
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn run_log_round_trips_through_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_experiment(&small(3, Control::Split, 1_500, 4)).unwrap();
    out.log.write_dir(tmp.path()).unwrap();
    let back = RunLog::read_dir(tmp.path()).unwrap();
    assert_eq!(back, out.log);
}

#[test]
fn repeated_runs_write_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let mut cfg = small(3, Control::Combined, 2_000, 21);
        cfg.output_dir = Some(tmp.path().join(name));
        run_experiment(&cfg).unwrap();
        dir_files(&tmp.path().join(name))
    };
    let (a, b) = (run("a"), run("b"));
    assert!(a.len() >= 8);
    assert_eq!(a, b);

    let mut other = small(3, Control::Combined, 2_000, 22);
    other.output_dir = Some(tmp.path().join("c"));
    run_experiment(&other).unwrap();
    assert_ne!(dir_files(&tmp.path().join("c")), a);
}

#[test]
fn frozen_uniform_policy_is_left_untouched() {
    let cfg = small(1, Control::Split, 3_000, 5);
    let learners = fresh_learners(&cfg).unwrap();
    let out = run_loop(&cfg, learners.clone(), false).unwrap();
    assert_eq!(out.learners, learners);
    let pi = pi_timeseries(&out.log).unwrap();
    assert!(pi.average.iter().all(|v| *v == 0.0));
    // random wheel commands still move the robot around
    assert!(coverage_entropy(&coverage_grid(&out.log, &cfg.arena)).unwrap() > 1.0);
}

fn one_hot_learner(states: usize, action: usize) -> Learner {
    let rows = (0..states)
        .map(|_| {
            (0..states)
                .map(|a| if a == action { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let policy = ConditionalTable::from_rows(rows).unwrap();
    let fresh = Learner::init_uniform(states, states).unwrap();
    Learner::from_parts(
        fresh.sensor_distribution().clone(),
        fresh.world_model().clone(),
        policy,
        0,
    )
    .unwrap()
}

#[test]
fn full_forward_policy_drives_straight_into_the_wall() {
    let cfg = small(1, Control::Split, 400, 6);
    let out = run_loop(&cfg, vec![one_hot_learner(4, 3); 2], false).unwrap();
    let log = &out.log;
    // heading 0: straight along +x at 0.75 of full speed once the lag is over
    let p = log.position(10, 0);
    assert!((p[1] - 4.0).abs() < 1e-9);
    let expected = 4.0 + 0.1 * cfg.arena.v_max * (0.5 + 10.0 * 0.75);
    assert!((p[0] - expected).abs() < 1e-9, "{p:?}");
    assert_eq!(log.wheels(10, 0), [0.75, 0.75]);
    let end = log.position(399, 0);
    assert!((end[0] - (cfg.arena.width - cfg.arena.robot_radius)).abs() < 1e-9);
    // pressed against the wall the wheels cannot turn
    assert_eq!(log.sensor(399, 0), 2);
    assert!(log.wheels(399, 0)[0].abs() < 1e-12);
}

#[test]
fn composing_uniform_learners_gives_the_uniform_combined_learner() {
    let split = Learner::init_uniform(4, 4).unwrap();
    let composed = compose_learners(&split, &split).unwrap();
    let uniform = Learner::init_uniform(16, 16).unwrap();
    assert_eq!(composed.policy().data(), uniform.policy().data());
    assert!(composed.predictive_information().abs() < 1e-12);

    let mut cfg = small(1, Control::Combined, 500, 7);
    cfg.pi_stride = 50;
    let report = run_composition(&split, &split, &cfg).unwrap();
    assert!(report.distance >= 0.0 && report.initial_pi.abs() < 1e-12);
    assert_eq!(report.output.learners.len(), 1);
}

#[test]
fn learners_survive_a_save_load_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(1, Control::Split, 5_000, 8);
    cfg.output_dir = Some(tmp.path().join("run"));
    let out = run_experiment(&cfg).unwrap();
    let loaded = load_learner_set(&tmp.path().join("run"), 2).unwrap();
    for (a, b) in loaded.iter().zip(&out.learners) {
        assert_eq!(a.policy(), b.policy());
        assert_eq!(a.world_model(), b.world_model());
        assert_eq!(a.sensor_distribution(), b.sensor_distribution());
        assert_eq!(a.steps(), b.steps());
    }

    // resuming from the saved learners continues with their counters
    let mut resumed = cfg.clone();
    resumed.init_policy = Some(tmp.path().join("run"));
    resumed.output_dir = None;
    resumed.steps = 10;
    let next = run_experiment(&resumed).unwrap();
    assert_eq!(next.learners[0].steps(), out.learners[0].steps() + 9);

    save_learner(&out.learners[0], &tmp.path().join("single")).unwrap();
    let shared = load_learner_set(&tmp.path().join("single"), 3).unwrap();
    assert_eq!(shared.len(), 3);
}

#[test]
fn learning_single_robot_shows_same_sign_oscillation() {
    let cfg = small(1, Control::Split, 100_000, 0);
    let out = run_experiment(&cfg).unwrap();
    let pi = pi_timeseries(&out.log).unwrap();
    let early = pi.mean_between(1_000, 10_000).unwrap();
    let late = pi.mean_between(90_000, 100_000).unwrap();
    assert!(late > early, "{early} -> {late}");
    // the learned behavior hops between neighbouring bins of one sign
    let tail: Vec<usize> = out.log.sensor_series(0)[50_000..].to_vec();
    assert!(same_sign_hop_fraction(&tail, 4) > 0.3);
}

#[test]
fn mismatched_learners_are_rejected() {
    let cfg = small(1, Control::Combined, 10, 0);
    assert!(run_loop(&cfg, vec![Learner::init_uniform(4, 4).unwrap()], true).is_err());
    assert!(run_loop(&cfg, vec![], true).is_err());
}
