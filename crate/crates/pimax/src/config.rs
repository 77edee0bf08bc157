//! Experiment configuration, loadable from a `key = value` file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pimax_core::RateSchedule;
use pimax_sim::ArenaConfig;

use crate::error::{HarnessError, Result};

/// One controller per wheel, or one controller per robot for both wheels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Split,
    Combined,
}

impl Control {
    pub fn controllers_per_robot(self) -> usize {
        match self {
            Control::Split => 2,
            Control::Combined => 1,
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Control::Split => "split",
            Control::Combined => "combined",
        })
    }
}

impl FromStr for Control {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(Control::Split),
            "combined" => Ok(Control::Combined),
            _ => Err(HarnessError::Config(format!(
                "unknown control paradigm `{s}` (split | combined)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub robots: usize,
    pub control: Control,
    pub bins: usize,
    pub steps: u64,
    /// Controller frequency in Hz; one tick lasts `1 / control_rate` s.
    pub control_rate: f64,
    pub seed: u64,
    pub arena: ArenaConfig,
    pub rate_schedule: RateSchedule,
    pub output_dir: Option<PathBuf>,
    pub init_policy: Option<PathBuf>,
    pub analysis_bins: usize,
    pub analysis_window: usize,
    /// Ticks between intrinsic PI samples.
    pub pi_stride: u64,
    /// Width (ticks) of the sliding coverage-entropy window.
    pub sliding_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            robots: 1,
            control: Control::Split,
            bins: 4,
            steps: 1_000_000,
            control_rate: 10.0,
            seed: 0,
            arena: ArenaConfig::default(),
            rate_schedule: RateSchedule::Reciprocal,
            output_dir: None,
            init_policy: None,
            analysis_bins: 30,
            analysis_window: 500_000,
            pi_stride: 100,
            sliding_window: 1000,
        }
    }
}

impl ExperimentConfig {
    /// The `r-c` configuration label, e.g. `3-6` for three robots with split control.
    pub fn label(&self) -> String {
        format!("{}-{}", self.robots, self.controllers())
    }

    pub fn canonical(robots: usize, control: Control) -> Self {
        Self {
            robots,
            control,
            ..Self::default()
        }
    }

    pub fn controllers(&self) -> usize {
        self.robots * self.control.controllers_per_robot()
    }

    /// Sensor (and action) alphabet size of each controller.
    pub fn states_per_controller(&self) -> usize {
        match self.control {
            Control::Split => self.bins,
            Control::Combined => self.bins * self.bins,
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.control_rate
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.robots == 0 {
            return fail("at least one robot is required".into());
        }
        if self.bins < 2 {
            return fail(format!("at least 2 bins are required, got {}", self.bins));
        }
        if self.steps == 0 {
            return fail("steps must be positive".into());
        }
        if !(self.control_rate > 0.0) {
            return fail(format!(
                "control rate must be positive, got {}",
                self.control_rate
            ));
        }
        if self.analysis_bins < 2 {
            return fail("analysis needs at least 2 bins".into());
        }
        if self.pi_stride == 0 || self.sliding_window == 0 || self.analysis_window == 0 {
            return fail("strides and windows must be positive".into());
        }
        if self.arena.chain_length(self.robots) >= self.arena.width.min(self.arena.height) {
            return fail(format!(
                "a chain of {} robots does not fit the arena",
                self.robots
            ));
        }
        Ok(())
    }

    /// Applies `key = value` lines (`#` starts a comment) on top of `self`.
    pub fn apply_kv(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| {
                HarnessError::Config(format!("{}:{}: {msg}", origin.display(), i + 1))
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            self.set(key, value).map_err(|e| bad(e.to_string()))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad value `{value}` for `{key}`")))
        }
        match key {
            "robots" => self.robots = num(key, value)?,
            "control" => self.control = value.parse()?,
            "bins" => self.bins = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "control_rate" => self.control_rate = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "rate_schedule" => {
                self.rate_schedule = value
                    .parse()
                    .map_err(|e: pimax_core::Error| HarnessError::Config(e.to_string()))?
            }
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "init_policy" => self.init_policy = Some(PathBuf::from(value)),
            "analysis_bins" => self.analysis_bins = num(key, value)?,
            "analysis_window" => self.analysis_window = num(key, value)?,
            "pi_stride" => self.pi_stride = num(key, value)?,
            "sliding_window" => self.sliding_window = num(key, value)?,
            "arena_width" => self.arena.width = num(key, value)?,
            "arena_height" => self.arena.height = num(key, value)?,
            "robot_radius" => self.arena.robot_radius = num(key, value)?,
            "link_gap" => self.arena.link_gap = num(key, value)?,
            "hinge_limit" => self.arena.hinge_limit = num(key, value)?,
            "v_max" => self.arena.v_max = num(key, value)?,
            "wheel_lag" => self.arena.wheel_lag = num(key, value)?,
            "coupling" => self.arena.coupling = num(key, value)?,
            "max_sweeps" => self.arena.max_sweeps = num(key, value)?,
            _ => {
                return Err(HarnessError::Config(format!(
                    "unknown configuration key `{key}`"
                )))
            }
        }
        Ok(())
    }

    /// `key = value` rendering accepted by [`ExperimentConfig::apply_kv`].
    pub fn to_kv(&self) -> String {
        let mut lines = vec![
            format!("robots = {}", self.robots),
            format!("control = {}", self.control),
            format!("bins = {}", self.bins),
            format!("steps = {}", self.steps),
            format!("control_rate = {}", self.control_rate),
            format!("seed = {}", self.seed),
            format!("rate_schedule = {}", self.rate_schedule),
            format!("analysis_bins = {}", self.analysis_bins),
            format!("analysis_window = {}", self.analysis_window),
            format!("pi_stride = {}", self.pi_stride),
            format!("sliding_window = {}", self.sliding_window),
            format!("arena_width = {}", self.arena.width),
            format!("arena_height = {}", self.arena.height),
            format!("robot_radius = {}", self.arena.robot_radius),
            format!("link_gap = {}", self.arena.link_gap),
            format!("hinge_limit = {}", self.arena.hinge_limit),
            format!("v_max = {}", self.arena.v_max),
            format!("wheel_lag = {}", self.arena.wheel_lag),
            format!("coupling = {}", self.arena.coupling),
            format!("max_sweeps = {}", self.arena.max_sweeps),
        ];
        if let Some(p) = &self.init_policy {
            lines.push(format!("init_policy = {}", p.display()));
        }
        lines.join("\n") + "\n"
    }
}
