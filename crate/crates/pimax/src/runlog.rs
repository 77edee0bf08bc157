//! Per-tick record of a run and its CSV representation.
//!
//! Files written into a run directory (headers included, floats with 17
//! significant digits so a log reads back bit-identically):
//!
//! | file              | columns                                   |
//! |-------------------|-------------------------------------------|
//! | `trajectory.csv`  | tick, robot_index, x, y, heading          |
//! | `wheels.csv`      | tick, robot_index, v_left, v_right        |
//! | `pi.csv`          | tick, controller_index, pi_bits           |
//! | `controllers.csv` | tick, controller_index, sensor, action    |

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{io_err, HarnessError, Result};

/// Record of one run. Tick `t` holds the wheel values read at the start of
/// the tick, the discrete sensor state and action of every controller, and
/// the robot poses after the simulation step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub robots: usize,
    pub controllers: usize,
    ticks: usize,
    positions: Vec<[f64; 2]>,
    headings: Vec<f64>,
    wheels: Vec<[f64; 2]>,
    sensors: Vec<u32>,
    actions: Vec<u32>,
    pi_ticks: Vec<u64>,
    pi_values: Vec<f64>,
}

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const WHEELS_CSV: &str = "wheels.csv";
pub const PI_CSV: &str = "pi.csv";
pub const CONTROLLERS_CSV: &str = "controllers.csv";

impl RunLog {
    pub fn new(robots: usize, controllers: usize) -> Self {
        Self {
            robots,
            controllers,
            ..Self::default()
        }
    }

    pub fn with_capacity(robots: usize, controllers: usize, ticks: usize) -> Self {
        Self {
            robots,
            controllers,
            ticks: 0,
            positions: Vec::with_capacity(ticks * robots),
            headings: Vec::with_capacity(ticks * robots),
            wheels: Vec::with_capacity(ticks * robots),
            sensors: Vec::with_capacity(ticks * controllers),
            actions: Vec::with_capacity(ticks * controllers),
            pi_ticks: Vec::new(),
            pi_values: Vec::new(),
        }
    }

    /// Appends the record of the next tick.
    pub fn push_tick(
        &mut self,
        wheels: &[[f64; 2]],
        poses: &[([f64; 2], f64)],
        sensors: &[usize],
        actions: &[usize],
    ) {
        assert_eq!(wheels.len(), self.robots);
        assert_eq!(poses.len(), self.robots);
        assert_eq!(sensors.len(), self.controllers);
        assert_eq!(actions.len(), self.controllers);
        self.wheels.extend_from_slice(wheels);
        for (p, h) in poses {
            self.positions.push(*p);
            self.headings.push(*h);
        }
        self.sensors.extend(sensors.iter().map(|s| *s as u32));
        self.actions.extend(actions.iter().map(|a| *a as u32));
        self.ticks += 1;
    }

    /// Appends one intrinsic PI sample per controller, taken at `tick`.
    pub fn push_pi(&mut self, tick: u64, values: &[f64]) {
        assert_eq!(values.len(), self.controllers);
        assert!(
            self.pi_ticks.last().is_none_or(|t| *t < tick),
            "PI ticks must increase"
        );
        self.pi_ticks.push(tick);
        self.pi_values.extend_from_slice(values);
    }

    pub fn ticks(&self) -> usize {
        self.ticks
    }

    pub fn center_robot(&self) -> usize {
        self.robots / 2
    }

    pub fn position(&self, tick: usize, robot: usize) -> [f64; 2] {
        self.positions[tick * self.robots + robot]
    }

    pub fn heading(&self, tick: usize, robot: usize) -> f64 {
        self.headings[tick * self.robots + robot]
    }

    pub fn wheels(&self, tick: usize, robot: usize) -> [f64; 2] {
        self.wheels[tick * self.robots + robot]
    }

    pub fn sensor(&self, tick: usize, controller: usize) -> usize {
        self.sensors[tick * self.controllers + controller] as usize
    }

    pub fn action(&self, tick: usize, controller: usize) -> usize {
        self.actions[tick * self.controllers + controller] as usize
    }

    pub fn center_positions(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        let c = self.center_robot();
        (0..self.ticks).map(move |t| self.position(t, c))
    }

    pub fn wheel_series(&self, robot: usize) -> Vec<[f64; 2]> {
        (0..self.ticks).map(|t| self.wheels(t, robot)).collect()
    }

    pub fn sensor_series(&self, controller: usize) -> Vec<usize> {
        (0..self.ticks)
            .map(|t| self.sensor(t, controller))
            .collect()
    }

    pub fn pi_ticks(&self) -> &[u64] {
        &self.pi_ticks
    }

    /// PI sample `i` for every controller.
    pub fn pi_sample(&self, i: usize) -> &[f64] {
        &self.pi_values[i * self.controllers..(i + 1) * self.controllers]
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_csv(
            &dir.join(TRAJECTORY_CSV),
            "tick,robot_index,x,y,heading",
            |w| {
                for t in 0..self.ticks {
                    for r in 0..self.robots {
                        let [x, y] = self.position(t, r);
                        writeln!(w, "{t},{r},{x:.16e},{y:.16e},{:.16e}", self.heading(t, r))?;
                    }
                }
                Ok(())
            },
        )?;
        write_csv(
            &dir.join(WHEELS_CSV),
            "tick,robot_index,v_left,v_right",
            |w| {
                for t in 0..self.ticks {
                    for r in 0..self.robots {
                        let [l, rr] = self.wheels(t, r);
                        writeln!(w, "{t},{r},{l:.16e},{rr:.16e}")?;
                    }
                }
                Ok(())
            },
        )?;
        write_csv(&dir.join(PI_CSV), "tick,controller_index,pi_bits", |w| {
            for (i, tick) in self.pi_ticks.iter().enumerate() {
                for (c, v) in self.pi_sample(i).iter().enumerate() {
                    writeln!(w, "{tick},{c},{v:.16e}")?;
                }
            }
            Ok(())
        })?;
        write_csv(
            &dir.join(CONTROLLERS_CSV),
            "tick,controller_index,sensor,action",
            |w| {
                for t in 0..self.ticks {
                    for c in 0..self.controllers {
                        writeln!(w, "{t},{c},{},{}", self.sensor(t, c), self.action(t, c))?;
                    }
                }
                Ok(())
            },
        )
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let traj = read_csv(&dir.join(TRAJECTORY_CSV), 5)?;
        let wheels = read_csv(&dir.join(WHEELS_CSV), 4)?;
        let pi = read_csv(&dir.join(PI_CSV), 3)?;
        let ctrl = read_csv(&dir.join(CONTROLLERS_CSV), 4)?;

        let robots = traj
            .rows
            .iter()
            .map(|r| r[1] as usize + 1)
            .max()
            .unwrap_or(0);
        let controllers = ctrl
            .rows
            .iter()
            .map(|r| r[1] as usize + 1)
            .max()
            .unwrap_or(0);
        if robots == 0 || controllers == 0 {
            return Err(HarnessError::Format {
                path: dir.to_path_buf(),
                msg: "run log is empty".into(),
            });
        }
        let ticks = traj.rows.len() / robots;
        let mut log = RunLog::with_capacity(robots, controllers, ticks);
        let shape_err = |path: &PathBuf, what: &str| HarnessError::Format {
            path: path.clone(),
            msg: format!("{what} rows do not form one record per tick"),
        };
        if traj.rows.len() != ticks * robots
            || wheels.rows.len() != ticks * robots
            || ctrl.rows.len() != ticks * controllers
        {
            return Err(shape_err(&dir.to_path_buf(), "trajectory/wheel/controller"));
        }
        for t in 0..ticks {
            let mut w = Vec::with_capacity(robots);
            let mut poses = Vec::with_capacity(robots);
            for r in 0..robots {
                let tr = &traj.rows[t * robots + r];
                let wr = &wheels.rows[t * robots + r];
                if tr[0] as usize != t
                    || tr[1] as usize != r
                    || wr[0] as usize != t
                    || wr[1] as usize != r
                {
                    return Err(shape_err(&traj.path, "trajectory/wheel"));
                }
                poses.push(([tr[2], tr[3]], tr[4]));
                w.push([wr[2], wr[3]]);
            }
            let mut s = Vec::with_capacity(controllers);
            let mut a = Vec::with_capacity(controllers);
            for c in 0..controllers {
                let cr = &ctrl.rows[t * controllers + c];
                if cr[0] as usize != t || cr[1] as usize != c {
                    return Err(shape_err(&ctrl.path, "controller"));
                }
                s.push(cr[2] as usize);
                a.push(cr[3] as usize);
            }
            log.push_tick(&w, &poses, &s, &a);
        }
        if pi.rows.len() % controllers != 0 {
            return Err(shape_err(&pi.path, "PI"));
        }
        for chunk in pi.rows.chunks(controllers) {
            let tick = chunk[0][0] as u64;
            if chunk
                .iter()
                .enumerate()
                .any(|(c, r)| r[0] as u64 != tick || r[1] as usize != c)
            {
                return Err(shape_err(&pi.path, "PI"));
            }
            if log.pi_ticks.last().is_some_and(|t| *t >= tick) {
                return Err(HarnessError::Format {
                    path: pi.path.clone(),
                    msg: "PI ticks are not strictly increasing".into(),
                });
            }
            let values: Vec<f64> = chunk.iter().map(|r| r[2]).collect();
            log.push_pi(tick, &values);
        }
        Ok(log)
    }
}

pub(crate) fn write_csv(
    path: &Path,
    header: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{header}")
        .and_then(|_| body(&mut w))
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

struct Csv {
    path: PathBuf,
    rows: Vec<Vec<f64>>,
}

fn read_csv(path: &Path, columns: usize) -> Result<Csv> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .ok()
            .filter(|r| r.len() == columns)
            .ok_or_else(|| HarnessError::Format {
                path: path.to_path_buf(),
                msg: format!("line {}: expected {columns} numeric columns", i + 1),
            })?;
        rows.push(row);
    }
    Ok(Csv {
        path: path.to_path_buf(),
        rows,
    })
}
