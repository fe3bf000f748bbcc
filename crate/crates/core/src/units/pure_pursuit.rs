//! Pure-pursuit path follower.
//!
//! Each step the goal point is placed `lookahead` metres of arc length ahead
//! of the path point nearest the vehicle. With the goal at `(x_b, y_b)` in the
//! body frame the commanded curvature is `2 y_b / (x_b^2 + y_b^2)` and the
//! steering angle `atan(curvature * wheelbase)`. Speed is `cruise_speed` until
//! the vehicle is within `lookahead` of the final waypoint, then 0.

use crate::error::{Error, Result};
use crate::simunit::{Attachments, Parameters, PortKind, SimUnit, UnitDescription};

pub const UNIT_TYPE: &str = "pure_pursuit";

pub fn description() -> UnitDescription {
    UnitDescription::new(UNIT_TYPE)
        .input("x", PortKind::Real)
        .input("y", PortKind::Real)
        .input("theta", PortKind::Real)
        .output("velocity", PortKind::Real)
        .output("delta_f", PortKind::Real)
        .parameter("lookahead", Some(1.5))
        .parameter("cruise_speed", Some(1.0))
        .parameter("wheelbase", Some(1.2))
}

/// Polyline with cumulative arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    points: Vec<[f64; 2]>,
    arc: Vec<f64>,
}

impl Path {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "path".into(),
                reason: "at least two waypoints required".into(),
            });
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "path".into(),
                reason: "waypoints must be finite".into(),
            });
        }
        let mut arc = Vec::with_capacity(points.len());
        let mut total = 0.0;
        arc.push(0.0);
        for w in points.windows(2) {
            total += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            arc.push(total);
        }
        if total == 0.0 {
            return Err(Error::InvalidParameter {
                name: "path".into(),
                reason: "degenerate path: all waypoints coincide".into(),
            });
        }
        Ok(Self { points, arc })
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().expect("non-empty")
    }

    pub fn end(&self) -> [f64; 2] {
        *self.points.last().expect("non-empty")
    }

    /// Arc length and distance of the path point nearest to `(x, y)`.
    pub fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        for (i, w) in self.points.windows(2).enumerate() {
            let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            let len2 = dx * dx + dy * dy;
            if len2 == 0.0 {
                continue;
            }
            let t = (((x - w[0][0]) * dx + (y - w[0][1]) * dy) / len2).clamp(0.0, 1.0);
            let (px, py) = (w[0][0] + t * dx, w[0][1] + t * dy);
            let d = (x - px).hypot(y - py);
            if d < best.1 {
                best = (self.arc[i] + t * (self.arc[i + 1] - self.arc[i]), d);
            }
        }
        best
    }

    /// Point at arc length `s`, clamped to the path ends.
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        if s <= 0.0 {
            return self.points[0];
        }
        if s >= self.length() {
            return self.end();
        }
        let i = self.arc.partition_point(|&a| a <= s) - 1;
        let seg = self.arc[i + 1] - self.arc[i];
        let t = if seg > 0.0 { (s - self.arc[i]) / seg } else { 0.0 };
        let (a, b) = (self.points[i], self.points[i + 1]);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Signed lateral offset of `(x, y)` from the path, positive to the left
    /// of the direction of travel.
    pub fn cross_track(&self, x: f64, y: f64) -> f64 {
        let (s, d) = self.project(x, y);
        let i = (self.arc.partition_point(|&a| a <= s).max(1) - 1).min(self.points.len() - 2);
        let (a, b) = (self.points[i], self.points[i + 1]);
        let cross = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
        if cross < 0.0 {
            -d
        } else {
            d
        }
    }
}

#[derive(Clone, Debug)]
pub struct PurePursuit {
    path: Path,
    lookahead: f64,
    cruise_speed: f64,
    wheelbase: f64,
    pose: [f64; 3],
    velocity: f64,
    delta_f: f64,
}

impl PurePursuit {
    pub fn new(path: Path, lookahead: f64, cruise_speed: f64, wheelbase: f64) -> Result<Self> {
        if !(lookahead > 0.0 && lookahead.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lookahead".into(),
                reason: format!("{lookahead} must be positive"),
            });
        }
        if !(wheelbase > 0.0 && wheelbase.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "wheelbase".into(),
                reason: format!("{wheelbase} must be positive"),
            });
        }
        let mut unit = Self {
            path,
            lookahead,
            cruise_speed,
            wheelbase,
            pose: [0.0; 3],
            velocity: 0.0,
            delta_f: 0.0,
        };
        unit.update();
        Ok(unit)
    }

    /// Steering command for a pose, without touching the unit state.
    pub fn command(&self, x: f64, y: f64, theta: f64) -> (f64, f64) {
        let (s, _) = self.path.project(x, y);
        let goal = self.path.point_at(s + self.lookahead);
        let (dx, dy) = (goal[0] - x, goal[1] - y);
        let (sin, cos) = theta.sin_cos();
        let x_b = cos * dx + sin * dy;
        let y_b = -sin * dx + cos * dy;
        let dist2 = x_b * x_b + y_b * y_b;
        let delta_f = if dist2 > 1e-12 {
            (2.0 * y_b / dist2 * self.wheelbase).atan()
        } else {
            0.0
        };
        let end = self.path.end();
        let velocity = if (end[0] - x).hypot(end[1] - y) <= self.lookahead {
            0.0
        } else {
            self.cruise_speed
        };
        (velocity, delta_f)
    }

    fn update(&mut self) {
        let [x, y, theta] = self.pose;
        (self.velocity, self.delta_f) = self.command(x, y, theta);
    }
}

impl SimUnit for PurePursuit {
    fn set_input(&mut self, input: usize, value: f64) {
        self.pose[input] = value;
    }

    fn do_step(&mut self, _time: f64, _h: f64) -> Result<()> {
        self.update();
        Ok(())
    }

    fn output(&self, output: usize) -> f64 {
        match output {
            0 => self.velocity,
            1 => self.delta_f,
            _ => unreachable!("pure pursuit output index"),
        }
    }
}

pub fn factory(p: &Parameters, a: &Attachments) -> Result<Box<dyn SimUnit>> {
    let points = a.path.clone().ok_or(Error::MissingAttachment {
        unit_type: UNIT_TYPE.into(),
        what: "path",
    })?;
    Ok(Box::new(PurePursuit::new(
        Path::new(points)?,
        p.value("lookahead"),
        p.value("cruise_speed"),
        p.value("wheelbase"),
    )?))
}
