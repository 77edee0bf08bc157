//! Deterministic 2D kinematic simulation of a chain of hinge-coupled
//! differential-drive robots in a bounded, featureless arena.
//!
//! Each tick:
//!
//! 1. wheel lag: actual wheel values move toward the desired values by at
//!    most `wheel_lag` per tick, so a full reversal takes several ticks;
//! 2. differential-drive kinematics from the actual wheel values;
//! 3. chain constraint projection: link separations are restored and each
//!    robot's heading is kept within `hinge_limit` of the chain direction at
//!    its position, removing any wheel differential that turns it further.
//!    Link corrections are split equally between the two linked
//!    bodies. Wherever a link had to be corrected, `coupling` of the
//!    along-link velocity mismatch between the two bodies is averaged out
//!    and written back into their wheel values, so a segment pulling against
//!    its neighbours is felt in their wheel sensors;
//! 4. wall resolution: the whole chain is translated back inside the arena,
//!    which removes the outward displacement without disturbing the links,
//!    and bodies touching the wall lose the outward part of their forward
//!    velocity, so pushing against a wall shows in the wheel sensors.
//!
//! Wheel values are normalized to `[-1, 1]`; `±1` is `v_max` m/s.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(
        "chain of {robots} robots ({length:.3} m) does not fit in a {width} x {height} m arena"
    )]
    ChainTooLong {
        robots: usize,
        length: f64,
        width: f64,
        height: f64,
    },
    #[error("a chain needs at least one robot")]
    EmptyChain,
    #[error("expected {expected} desired wheel pairs, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("desired wheel value {0} outside [-1, 1]")]
    ActionRange(f64),
    #[error("non-finite simulation state at robot {robot}")]
    NonFinite { robot: usize },
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Arena geometry plus the free physical constants of the kinematic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArenaConfig {
    pub width: f64,
    pub height: f64,
    /// Robot body radius (m); also half the wheel base.
    pub robot_radius: f64,
    /// Gap between neighbouring bodies (m).
    pub link_gap: f64,
    /// Maximal heading of a robot relative to the chain direction (rad).
    pub hinge_limit: f64,
    /// Linear speed at wheel value 1 (m/s).
    pub v_max: f64,
    /// Largest change of an actual wheel value within one tick (torque limit).
    pub wheel_lag: f64,
    /// Fraction of the along-link velocity mismatch averaged per sweep.
    pub coupling: f64,
    pub max_sweeps: usize,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            width: 8.0,
            height: 8.0,
            robot_radius: 0.05,
            link_gap: 0.02,
            hinge_limit: 0.9,
            v_max: 0.6,
            wheel_lag: 0.5,
            coupling: 0.3,
            max_sweeps: 20,
        }
    }
}

impl ArenaConfig {
    /// Center-to-center distance of linked robots.
    pub fn link_length(&self) -> f64 {
        2.0 * self.robot_radius + self.link_gap
    }

    pub fn chain_length(&self, robots: usize) -> f64 {
        robots.saturating_sub(1) as f64 * self.link_length() + 2.0 * self.robot_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotBody {
    pub position: [f64; 2],
    pub heading: f64,
    /// Actual (left, right) wheel values in `[-1, 1]`.
    pub wheels: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub bodies: Vec<RobotBody>,
    pub hinge_limit: f64,
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

const LINK_TOLERANCE: f64 = 1e-10;
const WALL_CONTACT: f64 = 1e-9;

impl ChainState {
    /// Lays `robots` bodies out collinearly along `heading`, the center robot
    /// (index `robots / 2`) at the arena center, all at rest.
    pub fn init_chain(robots: usize, arena: &ArenaConfig, heading: f64) -> Result<Self> {
        if robots == 0 {
            return Err(SimError::EmptyChain);
        }
        let length = arena.chain_length(robots);
        if length >= arena.width.min(arena.height) {
            return Err(SimError::ChainTooLong {
                robots,
                length,
                width: arena.width,
                height: arena.height,
            });
        }
        let center = [arena.width / 2.0, arena.height / 2.0];
        let (sin, cos) = heading.sin_cos();
        let mid = (robots / 2) as f64;
        let bodies = (0..robots)
            .map(|i| {
                let off = (i as f64 - mid) * arena.link_length();
                RobotBody {
                    position: [center[0] + off * cos, center[1] + off * sin],
                    heading,
                    wheels: [0.0, 0.0],
                    radius: arena.robot_radius,
                }
            })
            .collect();
        Ok(Self {
            bodies,
            hinge_limit: arena.hinge_limit,
        })
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn center_index(&self) -> usize {
        self.bodies.len() / 2
    }

    pub fn center_position(&self) -> [f64; 2] {
        self.bodies[self.center_index()].position
    }

    /// Actual wheel values of every robot; the only sensor channel.
    pub fn read_sensors(&self) -> Vec<[f64; 2]> {
        self.bodies.iter().map(|b| b.wheels).collect()
    }

    /// Advances the chain by `dt` seconds under the desired wheel values.
    pub fn step(&mut self, arena: &ArenaConfig, desired: &[[f64; 2]], dt: f64) -> Result<()> {
        if desired.len() != self.bodies.len() {
            return Err(SimError::ActionCount {
                expected: self.bodies.len(),
                got: desired.len(),
            });
        }
        if let Some(v) = desired.iter().flatten().find(|v| !(v.abs() <= 1.0)) {
            return Err(SimError::ActionRange(*v));
        }

        for (body, want) in self.bodies.iter_mut().zip(desired) {
            for (w, d) in body.wheels.iter_mut().zip(want) {
                *w = (*w + (d - *w).clamp(-arena.wheel_lag, arena.wheel_lag)).clamp(-1.0, 1.0);
            }
            drive(body, arena.v_max, dt);
        }

        if self.bodies.len() > 1 {
            self.project_constraints(arena);
        }
        self.resolve_walls(arena);

        match self.bodies.iter().position(|b| !body_is_finite(b)) {
            Some(robot) => Err(SimError::NonFinite { robot }),
            None => Ok(()),
        }
    }

    fn project_constraints(&mut self, arena: &ArenaConfig) {
        let link = arena.link_length();
        for _ in 0..arena.max_sweeps {
            let mut worst: f64 = 0.0;
            for i in 0..self.bodies.len() - 1 {
                let (a, b) = pair_mut(&mut self.bodies, i);
                let d = [b.position[0] - a.position[0], b.position[1] - a.position[1]];
                let dist = d[0].hypot(d[1]);
                let u = if dist > 1e-12 {
                    [d[0] / dist, d[1] / dist]
                } else {
                    let (s, c) = a.heading.sin_cos();
                    [c, s]
                };
                let err = dist - link;
                if err.abs() > LINK_TOLERANCE {
                    worst = worst.max(err.abs());
                    let half = 0.5 * err;
                    a.position[0] += half * u[0];
                    a.position[1] += half * u[1];
                    b.position[0] -= half * u[0];
                    b.position[1] -= half * u[1];
                    couple_along(a, b, u, arena);
                }
            }
            for i in 0..self.bodies.len() {
                let rel = self.hinge_angle(i);
                let excess = rel.abs() - self.hinge_limit;
                if excess > 0.0 {
                    worst = worst.max(excess);
                    let body = &mut self.bodies[i];
                    body.heading = wrap_angle(body.heading - excess * rel.signum());
                    stop_turning(body, rel.signum());
                }
            }
            if worst <= LINK_TOLERANCE {
                break;
            }
        }
        self.rebuild_links(link);
    }

    /// Places the bodies at exactly `link` apart along the current link
    /// directions, keeping the centroid fixed.
    fn rebuild_links(&mut self, link: f64) {
        let n = self.bodies.len() as f64;
        let centroid = self.bodies.iter().fold([0.0, 0.0], |acc, b| {
            [acc[0] + b.position[0] / n, acc[1] + b.position[1] / n]
        });
        let mut placed = vec![[0.0, 0.0]; self.bodies.len()];
        for i in 1..self.bodies.len() {
            let (p, q) = (self.bodies[i - 1].position, self.bodies[i].position);
            let d = [q[0] - p[0], q[1] - p[1]];
            let dist = d[0].hypot(d[1]);
            let u = if dist > 1e-12 {
                [d[0] / dist, d[1] / dist]
            } else {
                let (s, c) = self.bodies[i - 1].heading.sin_cos();
                [c, s]
            };
            placed[i] = [
                placed[i - 1][0] + link * u[0],
                placed[i - 1][1] + link * u[1],
            ];
        }
        let mean = placed
            .iter()
            .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
        for (body, p) in self.bodies.iter_mut().zip(&placed) {
            body.position = [p[0] - mean[0] + centroid[0], p[1] - mean[1] + centroid[1]];
        }
    }

    fn resolve_walls(&mut self, arena: &ArenaConfig) {
        for axis in 0..2 {
            let extent = if axis == 0 { arena.width } else { arena.height };
            let lo = self
                .bodies
                .iter()
                .map(|b| b.position[axis] - b.radius)
                .fold(f64::INFINITY, f64::min);
            let hi = self
                .bodies
                .iter()
                .map(|b| b.position[axis] + b.radius)
                .fold(f64::NEG_INFINITY, f64::max);
            let (shift, outward) = if lo < 0.0 {
                (-lo, -1.0)
            } else if hi > extent {
                (extent - hi, 1.0)
            } else {
                continue;
            };
            let boundary = if outward < 0.0 { 0.0 } else { extent };
            for b in &mut self.bodies {
                b.position[axis] += shift;
                if (b.position[axis] + outward * b.radius - boundary).abs() < WALL_CONTACT {
                    stop_outward(b, axis, outward);
                }
            }
        }
    }

    /// Heading of robot `i` relative to the chain tangent at its position:
    /// the direction of its link for an end robot, the bisector of both
    /// links otherwise. Zero for a lone robot.
    pub fn hinge_angle(&self, i: usize) -> f64 {
        let n = self.bodies.len();
        if n < 2 {
            return 0.0;
        }
        let dir = |j: usize| {
            let (p, q) = (self.bodies[j].position, self.bodies[j + 1].position);
            let d = [q[0] - p[0], q[1] - p[1]];
            let len = d[0].hypot(d[1]).max(1e-12);
            [d[0] / len, d[1] / len]
        };
        let t = match i {
            0 => dir(0),
            _ if i == n - 1 => dir(n - 2),
            _ => {
                let (u, v) = (dir(i - 1), dir(i));
                [u[0] + v[0], u[1] + v[1]]
            }
        };
        if t[0].hypot(t[1]) < 1e-12 {
            return 0.0;
        }
        wrap_angle(self.bodies[i].heading - t[1].atan2(t[0]))
    }

    pub fn link_separation(&self, i: usize) -> f64 {
        let (p, q) = (self.bodies[i].position, self.bodies[i + 1].position);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }
}

fn pair_mut(bodies: &mut [RobotBody], i: usize) -> (&mut RobotBody, &mut RobotBody) {
    let (head, tail) = bodies.split_at_mut(i + 1);
    (&mut head[i], &mut tail[0])
}

fn body_is_finite(b: &RobotBody) -> bool {
    b.position.iter().chain(&b.wheels).all(|x| x.is_finite()) && b.heading.is_finite()
}

/// Exact unicycle integration over `dt` from the actual wheel values.
fn drive(body: &mut RobotBody, v_max: f64, dt: f64) {
    let [l, r] = body.wheels;
    let speed = v_max * 0.5 * (l + r);
    let omega = v_max * (r - l) / (2.0 * body.radius);
    let th = body.heading;
    if omega.abs() < 1e-12 {
        body.position[0] += speed * dt * th.cos();
        body.position[1] += speed * dt * th.sin();
    } else {
        let th2 = th + omega * dt;
        let k = speed / omega;
        body.position[0] += k * (th2.sin() - th.sin());
        body.position[1] -= k * (th2.cos() - th.cos());
        body.heading = wrap_angle(th2);
    }
}

/// Averages `coupling` of the along-link velocity mismatch of two linked
/// bodies, acting on their forward speeds (both wheels shift equally).
/// Removes the outward part of a wall-contacting body's forward velocity
/// from its wheel values; the turning part is kept.
fn stop_outward(body: &mut RobotBody, axis: usize, outward: f64) {
    let (s, c) = body.heading.sin_cos();
    let h = if axis == 0 { c } else { s };
    let common = 0.5 * (body.wheels[0] + body.wheels[1]);
    if common * h * outward > 0.0 {
        let dv = common * h * h;
        for w in &mut body.wheels {
            *w = (*w - dv).clamp(-1.0, 1.0);
        }
    }
}

/// Removes the wheel differential turning a body further in direction
/// `sign`, as when its hinge is at the stop.
fn stop_turning(body: &mut RobotBody, sign: f64) {
    let diff = 0.5 * (body.wheels[1] - body.wheels[0]);
    if diff * sign > 0.0 {
        let common = 0.5 * (body.wheels[0] + body.wheels[1]);
        body.wheels = [common, common];
    }
}

fn couple_along(a: &mut RobotBody, b: &mut RobotBody, u: [f64; 2], arena: &ArenaConfig) {
    let proj = |body: &RobotBody| {
        let (s, c) = body.heading.sin_cos();
        c * u[0] + s * u[1]
    };
    let (pa, pb) = (proj(a), proj(b));
    let speed = |body: &RobotBody| arena.v_max * 0.5 * (body.wheels[0] + body.wheels[1]);
    let mismatch = speed(a) * pa - speed(b) * pb;
    let delta = 0.5 * arena.coupling * mismatch;
    for (body, p, sign) in [(a, pa, -1.0), (b, pb, 1.0)] {
        let dv = sign * delta * p / arena.v_max;
        for w in &mut body.wheels {
            *w = (*w + dv).clamp(-1.0, 1.0);
        }
    }
}
