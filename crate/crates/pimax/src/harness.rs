//! Experiment orchestration: wires one learner per controller to the chain
//! simulator, runs the control loop and emits the artifacts.
//!
//! Per tick: read wheel sensors, bin them per controller (a combined
//! controller fuses both wheels, left wheel as the low-order digit), let every
//! controller learn from its last `(s, a, s')` triple, sample new actions,
//! decode them to desired wheel values at the bin centers and step the
//! simulation. Controllers share nothing but the chain they are mounted on.

use std::io::Write;
use std::path::{Path, PathBuf};

use pimax_core::composer::{compose_learners, policy_distance};
use pimax_core::{ConditionalTable, DiscreteDistribution, Learner, Table, WheelBinner};
use pimax_sim::ChainState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Control, ExperimentConfig};
use crate::error::{io_err, HarnessError, Result};
use crate::metrics::{self, coverage_entropy, coverage_grid, sliding_coverage_entropy};
use crate::runlog::RunLog;

pub const POLICY_FILE: &str = "policy.txt";
pub const WORLD_MODEL_FILE: &str = "world_model.txt";
pub const SENSOR_FILE: &str = "sensor.txt";
pub const LEARNERS_DIR: &str = "learners";

/// Portable, documented generator: ChaCha with 8 rounds.
pub type ExperimentRng = ChaCha8Rng;

/// Log and final learners of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: RunLog,
    pub learners: Vec<Learner>,
}

/// Maps wheel readings to controller states and actions to wheel commands.
#[derive(Debug, Clone, Copy)]
struct Wiring {
    control: Control,
    binner: WheelBinner,
}

impl Wiring {
    fn encode(&self, wheels: &[[f64; 2]], out: &mut Vec<usize>) {
        out.clear();
        let k = self.binner.k();
        for [l, r] in wheels {
            let (bl, br) = (self.binner.encode(*l), self.binner.encode(*r));
            match self.control {
                Control::Split => out.extend([bl, br]),
                Control::Combined => out.push(bl + k * br),
            }
        }
    }

    fn decode(&self, actions: &[usize], out: &mut Vec<[f64; 2]>) {
        out.clear();
        let k = self.binner.k();
        match self.control {
            Control::Split => out.extend(
                actions
                    .chunks(2)
                    .map(|a| [self.binner.decode(a[0]), self.binner.decode(a[1])]),
            ),
            Control::Combined => out.extend(
                actions
                    .iter()
                    .map(|a| [self.binner.decode(a % k), self.binner.decode(a / k)]),
            ),
        }
    }
}

/// Runs the control loop. With `learning` off the policies stay frozen.
pub fn run_loop(
    cfg: &ExperimentConfig,
    mut learners: Vec<Learner>,
    learning: bool,
) -> Result<RunOutput> {
    cfg.validate()?;
    let n_ctrl = cfg.controllers();
    let n_states = cfg.states_per_controller();
    if learners.len() != n_ctrl {
        return Err(HarnessError::Config(format!(
            "configuration {} needs {n_ctrl} learners, got {}",
            cfg.label(),
            learners.len()
        )));
    }
    if let Some(l) = learners
        .iter()
        .find(|l| l.num_sensors() != n_states || l.num_actions() != n_states)
    {
        return Err(HarnessError::Config(format!(
            "learner of shape {}x{} does not fit {} control with {} bins",
            l.num_sensors(),
            l.num_actions(),
            cfg.control,
            cfg.bins
        )));
    }

    let wiring = Wiring {
        control: cfg.control,
        binner: WheelBinner::unit(cfg.bins)?,
    };
    let mut rng = ExperimentRng::seed_from_u64(cfg.seed);
    let mut chain = ChainState::init_chain(cfg.robots, &cfg.arena, 0.0)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let steps = cfg.steps as usize;
    let mut log = RunLog::with_capacity(cfg.robots, n_ctrl, steps);

    let mut states = Vec::with_capacity(n_ctrl);
    let mut actions: Vec<usize> = Vec::with_capacity(n_ctrl);
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n_ctrl];
    let mut desired = Vec::with_capacity(cfg.robots);
    let mut poses = Vec::with_capacity(cfg.robots);
    let mut pi = vec![0.0; n_ctrl];

    for tick in 0..cfg.steps {
        let wheels = chain.read_sensors();
        wiring.encode(&wheels, &mut states);
        actions.clear();
        for (c, learner) in learners.iter_mut().enumerate() {
            if learning {
                if let Some((s, a)) = prev[c] {
                    learner.learning_step(s, a, states[c]);
                }
            }
            let a = learner.sample_action(states[c], &mut rng);
            prev[c] = Some((states[c], a));
            actions.push(a);
        }
        wiring.decode(&actions, &mut desired);
        chain
            .step(&cfg.arena, &desired, cfg.dt())
            .map_err(|source| HarnessError::Simulation { tick, source })?;

        poses.clear();
        poses.extend(chain.bodies.iter().map(|b| (b.position, b.heading)));
        log.push_tick(&wheels, &poses, &states, &actions);

        if tick % cfg.pi_stride == 0 || tick + 1 == cfg.steps {
            for (v, l) in pi.iter_mut().zip(&learners) {
                *v = l.predictive_information();
            }
            if let Some(c) = pi.iter().position(|v| !v.is_finite()) {
                return Err(HarnessError::Analysis(format!(
                    "non-finite intrinsic PI for controller {c} at tick {tick}"
                )));
            }
            log.push_pi(tick, &pi);
        }
    }
    Ok(RunOutput { log, learners })
}

pub fn fresh_learners(cfg: &ExperimentConfig) -> Result<Vec<Learner>> {
    let n = cfg.states_per_controller();
    (0..cfg.controllers())
        .map(|_| Ok(Learner::init_uniform(n, n)?.with_schedule(cfg.rate_schedule)))
        .collect()
}

/// Learners for a run: fresh, or loaded from `cfg.init_policy`, which is
/// either one learner directory (shared by every controller) or a
/// directory of `controller_<i>` learner directories.
pub fn initial_learners(cfg: &ExperimentConfig) -> Result<Vec<Learner>> {
    match &cfg.init_policy {
        None => fresh_learners(cfg),
        Some(path) => Ok(load_learner_set(path, cfg.controllers())?
            .into_iter()
            .map(|l| l.with_schedule(cfg.rate_schedule))
            .collect()),
    }
}

/// Learning run; writes all artifacts when `cfg.output_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let out = run_loop(cfg, initial_learners(cfg)?, true)?;
    if let Some(dir) = &cfg.output_dir {
        write_artifacts(cfg, &out, dir)?;
    }
    Ok(out)
}

/// Runs stored learners with learning frozen (behavior analysis).
pub fn run_fixed_policy(cfg: &ExperimentConfig, learner_dir: &Path) -> Result<RunOutput> {
    let learners = load_learner_set(learner_dir, cfg.controllers())?;
    let out = run_loop(cfg, learners, false)?;
    if let Some(dir) = &cfg.output_dir {
        write_artifacts(cfg, &out, dir)?;
    }
    Ok(out)
}

pub fn write_artifacts(cfg: &ExperimentConfig, out: &RunOutput, dir: &Path) -> Result<()> {
    out.log.write_dir(dir)?;
    std::fs::write(dir.join("run.cfg"), cfg.to_kv()).map_err(io_err(dir.join("run.cfg")))?;
    coverage_grid(&out.log, &cfg.arena).write_csv(&dir.join("coverage.csv"))?;
    metrics::write_sliding_csv(
        &dir.join("sliding.csv"),
        &sliding_coverage_entropy(&out.log, &cfg.arena, cfg.sliding_window),
    )?;
    let learners_dir = dir.join(LEARNERS_DIR);
    for (i, l) in out.learners.iter().enumerate() {
        save_learner(l, &learners_dir.join(format!("controller_{i}")))?;
    }
    Ok(())
}

pub fn save_learner(learner: &Learner, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let sensor = Table::from_rows(vec![learner.sensor_distribution().probs().to_vec()])?
        .with_counters(vec![learner.observations()])?;
    for (name, table) in [
        (POLICY_FILE, learner.policy()),
        (WORLD_MODEL_FILE, learner.world_model()),
        (SENSOR_FILE, &sensor),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, table.to_text()).map_err(io_err(&path))?;
    }
    Ok(())
}

fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    ConditionalTable::from_text(&text).map_err(|source| HarnessError::Table {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_learner(dir: &Path) -> Result<Learner> {
    let policy = read_table(&dir.join(POLICY_FILE))?;
    let model = read_table(&dir.join(WORLD_MODEL_FILE))?;
    let sensor_path = dir.join(SENSOR_FILE);
    let sensor = read_table(&sensor_path)?;
    if sensor.rows() != 1 {
        return Err(HarnessError::Format {
            path: sensor_path,
            msg: "sensor distribution must be a single-row table".into(),
        });
    }
    let mut probs = sensor.row(0).to_vec();
    pimax_core::floor_project(&mut probs, pimax_core::PROB_FLOOR);
    let dist = DiscreteDistribution::new(probs).map_err(|source| HarnessError::Table {
        path: sensor_path,
        source,
    })?;
    Learner::from_parts(dist, model, policy, sensor.counter(0)).map_err(|source| {
        HarnessError::Table {
            path: dir.to_path_buf(),
            source,
        }
    })
}

pub fn controller_dir(root: &Path, i: usize) -> PathBuf {
    root.join(format!("controller_{i}"))
}

/// Loads `count` learners from a run directory, a `learners` directory or a
/// single learner directory (which is then shared by every controller).
pub fn load_learner_set(path: &Path, count: usize) -> Result<Vec<Learner>> {
    if path.join(POLICY_FILE).exists() {
        let l = load_learner(path)?;
        return Ok(vec![l; count]);
    }
    let root = if path.join(LEARNERS_DIR).is_dir() {
        path.join(LEARNERS_DIR)
    } else {
        path.to_path_buf()
    };
    (0..count)
        .map(|i| load_learner(&controller_dir(&root, i)))
        .collect()
}

/// Outcome of training a combined controller initialized from two split ones.
#[derive(Debug, Clone)]
pub struct CompositionReport {
    pub left_pi: f64,
    pub right_pi: f64,
    pub initial_pi: f64,
    pub min_pi: f64,
    pub final_pi: f64,
    pub distance: f64,
    pub coverage_entropy: f64,
    pub mean_sliding_entropy: Option<f64>,
    pub initial_policy: Table,
    pub output: RunOutput,
}

impl CompositionReport {
    pub fn split_pi_sum(&self) -> f64 {
        self.left_pi + self.right_pi
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("left_split_pi_bits", format!("{:.12}", self.left_pi));
        kv("right_split_pi_bits", format!("{:.12}", self.right_pi));
        kv("split_pi_sum_bits", format!("{:.12}", self.split_pi_sum()));
        kv(
            "initial_composed_pi_bits",
            format!("{:.12}", self.initial_pi),
        );
        kv("min_pi_bits", format!("{:.12}", self.min_pi));
        kv("final_pi_bits", format!("{:.12}", self.final_pi));
        kv("policy_distance", format!("{:.6e}", self.distance));
        kv(
            "coverage_entropy_bits",
            format!("{:.12}", self.coverage_entropy),
        );
        if let Some(m) = self.mean_sliding_entropy {
            kv("mean_sliding_entropy_bits", format!("{m:.12}"));
        }
        s
    }
}

/// Composes two split learners into one combined learner and trains it on a
/// single robot for `cfg.steps` ticks (`cfg` is forced to 1-1).
pub fn run_composition(
    left: &Learner,
    right: &Learner,
    cfg: &ExperimentConfig,
) -> Result<CompositionReport> {
    let mut cfg = cfg.clone();
    cfg.robots = 1;
    cfg.control = Control::Combined;
    if left.num_sensors() != cfg.bins || left.num_actions() != cfg.bins {
        return Err(HarnessError::Config(format!(
            "split learners are {}x{}, configuration expects {} bins",
            left.num_sensors(),
            left.num_actions(),
            cfg.bins
        )));
    }
    let composed = compose_learners(left, right)?.with_schedule(cfg.rate_schedule);
    let initial_policy = composed.policy().clone();
    let initial_pi = composed.predictive_information();
    let output = run_loop(&cfg, vec![composed], true)?;

    let series = metrics::pi_timeseries(&output.log)?;
    let min_pi = series.average.iter().copied().fold(initial_pi, f64::min);
    let report = CompositionReport {
        left_pi: left.predictive_information(),
        right_pi: right.predictive_information(),
        initial_pi,
        min_pi,
        final_pi: output.learners[0].predictive_information(),
        distance: policy_distance(&initial_policy, output.learners[0].policy())?,
        coverage_entropy: coverage_entropy(&coverage_grid(&output.log, &cfg.arena))?,
        mean_sliding_entropy: metrics::mean_sliding_coverage_entropy(
            &output.log,
            &cfg.arena,
            cfg.sliding_window,
        ),
        initial_policy,
        output,
    };
    if let Some(dir) = &cfg.output_dir {
        write_artifacts(&cfg, &report.output, dir)?;
        save_learner(
            &compose_learners(left, right)?,
            &dir.join("composed_initial"),
        )?;
        let path = dir.join("report.txt");
        std::fs::write(&path, report.to_kv()).map_err(io_err(&path))?;
    }
    Ok(report)
}

/// File-based composition: `left` and `right` are learner directories.
pub fn run_composition_experiment(
    left: &Path,
    right: &Path,
    cfg: &ExperimentConfig,
) -> Result<CompositionReport> {
    run_composition(&load_learner(left)?, &load_learner(right)?, cfg)
}

/// Summary statistics of a finished run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub label: String,
    pub final_pi: Vec<f64>,
    pub final_average_pi: f64,
    pub posteriori_pi: Option<f64>,
    pub coverage_entropy: f64,
    pub mean_sliding_entropy: Option<f64>,
}

pub fn summarize(cfg: &ExperimentConfig, log: &RunLog) -> Result<RunSummary> {
    let series = metrics::pi_timeseries(log)?;
    let final_pi: Vec<f64> = series
        .per_controller
        .iter()
        .map(|s| *s.last().unwrap())
        .collect();
    let window = cfg.analysis_window.min(log.ticks().saturating_sub(1));
    let posteriori_pi = if window > 0 {
        Some(metrics::mean_posteriori_pi(log, cfg.analysis_bins, window)?)
    } else {
        None
    };
    Ok(RunSummary {
        label: cfg.label(),
        final_average_pi: series.last_average().unwrap(),
        final_pi,
        posteriori_pi,
        coverage_entropy: coverage_entropy(&coverage_grid(log, &cfg.arena))?,
        mean_sliding_entropy: metrics::mean_sliding_coverage_entropy(
            log,
            &cfg.arena,
            cfg.sliding_window,
        ),
    })
}

impl RunSummary {
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "configuration = {}", self.label)?;
        writeln!(w, "final_average_pi_bits = {:.9}", self.final_average_pi)?;
        for (i, v) in self.final_pi.iter().enumerate() {
            writeln!(w, "final_pi_bits.controller_{i} = {v:.9}")?;
        }
        if let Some(v) = self.posteriori_pi {
            writeln!(w, "posteriori_pi_bits_per_robot = {v:.9}")?;
        }
        writeln!(w, "coverage_entropy_bits = {:.9}", self.coverage_entropy)?;
        if let Some(v) = self.mean_sliding_entropy {
            writeln!(w, "mean_sliding_entropy_bits = {v:.9}")?;
        }
        Ok(())
    }
}
