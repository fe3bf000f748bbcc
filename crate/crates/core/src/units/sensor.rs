//! Combined range sensor (camera, LiDAR and radar abstracted into one
//! annulus). Weather shrinks `max_range`; measurement inaccuracy is a blind
//! zone below `min_range`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::simunit::{Attachments, Parameters, PortKind, SimUnit, UnitDescription};
use crate::units::GridMap;

pub const UNIT_TYPE: &str = "sensor";

/// Distance output when nothing is detected.
pub const NO_DETECTION: f64 = -1.0;

pub fn description() -> UnitDescription {
    UnitDescription::new(UNIT_TYPE)
        .input("x", PortKind::Real)
        .input("y", PortKind::Real)
        .input("theta", PortKind::Real)
        .output("obstacle_detected", PortKind::Boolean)
        .output("obstacle_distance", PortKind::Real)
        .parameter("min_range", Some(0.5))
        .parameter("max_range", Some(10.0))
        .parameter("fov", Some(PI))
        .parameter("ray_count", Some(64.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorParams {
    pub min_range: f64,
    pub max_range: f64,
    pub fov: f64,
    pub ray_count: usize,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            min_range: 0.5,
            max_range: 10.0,
            fov: PI,
            ray_count: 64,
        }
    }
}

impl SensorParams {
    pub fn from_parameters(p: &Parameters) -> Result<Self> {
        let rays = p.value("ray_count");
        if !(rays >= 1.0 && rays.fract() == 0.0 && rays <= 1e6) {
            return Err(Error::InvalidParameter {
                name: "ray_count".into(),
                reason: format!("{rays} is not a positive integer"),
            });
        }
        let params = Self {
            min_range: p.value("min_range"),
            max_range: p.value("max_range"),
            fov: p.value("fov"),
            ray_count: rays as usize,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_range >= 0.0 && self.min_range < self.max_range && self.max_range.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "min_range/max_range".into(),
                reason: format!(
                    "need 0 <= min_range < max_range, got {} and {}",
                    self.min_range, self.max_range
                ),
            });
        }
        if !(self.fov >= 0.0 && self.fov <= 2.0 * PI) {
            return Err(Error::InvalidParameter {
                name: "fov".into(),
                reason: format!("{} outside [0, 2pi]", self.fov),
            });
        }
        if self.ray_count == 0 {
            return Err(Error::InvalidParameter {
                name: "ray_count".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RangeSensor {
    params: SensorParams,
    map: Arc<GridMap>,
    pose: [f64; 3],
    detection: Option<f64>,
}

impl RangeSensor {
    pub fn new(params: SensorParams, map: Arc<GridMap>) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            map,
            pose: [0.0; 3],
            detection: None,
        })
    }

    /// Nearest hit within `[min_range, max_range]` over the ray fan.
    ///
    /// Each ray is marched in steps of half a cell from `min_range`; the last
    /// sample sits exactly on `max_range`.
    pub fn scan(&self, x: f64, y: f64, theta: f64) -> Option<f64> {
        let p = &self.params;
        let step = self.map.resolution() / 2.0;
        let span = p.max_range - p.min_range;
        let samples = (span / step).ceil() as usize;

        let mut nearest: Option<f64> = None;
        for i in 0..p.ray_count {
            let angle = if p.ray_count == 1 {
                theta
            } else {
                theta - p.fov / 2.0 + p.fov * i as f64 / (p.ray_count - 1) as f64
            };
            let (sin, cos) = angle.sin_cos();
            for k in 0..=samples {
                let d = (p.min_range + k as f64 * step).min(p.max_range);
                if nearest.is_some_and(|n| d >= n) {
                    break;
                }
                if self.map.is_occupied(x + d * cos, y + d * sin) {
                    nearest = Some(d);
                    break;
                }
            }
        }
        nearest
    }
}

impl SimUnit for RangeSensor {
    fn set_input(&mut self, input: usize, value: f64) {
        self.pose[input] = value;
    }

    fn do_step(&mut self, _time: f64, _h: f64) -> Result<()> {
        let [x, y, theta] = self.pose;
        self.detection = self.scan(x, y, theta);
        Ok(())
    }

    fn output(&self, output: usize) -> f64 {
        match output {
            0 => f64::from(u8::from(self.detection.is_some())),
            1 => self.detection.unwrap_or(NO_DETECTION),
            _ => unreachable!("sensor output index"),
        }
    }
}

pub fn factory(p: &Parameters, a: &Attachments) -> Result<Box<dyn SimUnit>> {
    let map = a.map.clone().ok_or(Error::MissingAttachment {
        unit_type: UNIT_TYPE.into(),
        what: "map",
    })?;
    Ok(Box::new(RangeSensor::new(SensorParams::from_parameters(p)?, map)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 10 m x 4 m map at 0.1 m, vehicle frame origin at (0, 0) in the
    /// middle of the left edge.
    fn map_with_cell_at(x: f64) -> Arc<GridMap> {
        let mut map = GridMap::empty(100, 40, 0.1, [-0.05, -2.0]).unwrap();
        let (c, r) = map.cell_at(x, 0.0).unwrap();
        map.set(c, r, true);
        Arc::new(map)
    }

    fn sensor(min: f64, max: f64, map: Arc<GridMap>) -> RangeSensor {
        RangeSensor::new(
            SensorParams {
                min_range: min,
                max_range: max,
                ..Default::default()
            },
            map,
        )
        .unwrap()
    }

    #[test]
    fn empty_map_reports_nothing() {
        let mut s = sensor(0.5, 2.0, Arc::new(GridMap::empty(10, 10, 0.1, [0.0, 0.0]).unwrap()));
        s.do_step(0.0, 0.01).unwrap();
        assert_eq!(s.output(0), 0.0);
        assert_eq!(s.output(1), NO_DETECTION);
    }

    #[test]
    fn detects_cell_dead_ahead() {
        let mut s = sensor(0.5, 2.0, map_with_cell_at(1.5));
        s.do_step(0.0, 0.01).unwrap();
        assert_eq!(s.output(0), 1.0);
        assert!((s.output(1) - 1.5).abs() <= 0.1, "{}", s.output(1));
    }

    #[test]
    fn blind_zone_hides_near_obstacles() {
        let s = sensor(1.0, 2.0, map_with_cell_at(0.7));
        assert_eq!(s.scan(0.0, 0.0, 0.0), None);
        let s = sensor(0.5, 2.0, map_with_cell_at(0.7));
        assert!(s.scan(0.0, 0.0, 0.0).is_some());
    }

    #[test]
    fn out_of_range_is_invisible() {
        let s = sensor(0.5, 2.0, map_with_cell_at(3.0));
        assert_eq!(s.scan(0.0, 0.0, 0.0), None);
        // looking the other way
        let s = sensor(0.5, 5.0, map_with_cell_at(3.0));
        assert_eq!(s.scan(0.0, 0.0, PI), None);
    }

    #[test]
    fn rejects_invalid_ranges() {
        let map = Arc::new(GridMap::empty(1, 1, 1.0, [0.0, 0.0]).unwrap());
        let bad = SensorParams {
            min_range: 2.0,
            max_range: 1.0,
            ..Default::default()
        };
        assert!(RangeSensor::new(bad, map).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn detection_stays_in_annulus(
            min in 0.0..1.5f64,
            extra in 0.1..3.0f64,
            cells in proptest::collection::vec((0usize..60, 0usize..60), 1..40),
            x in 0.5..5.5f64,
            y in 0.5..5.5f64,
            theta in -3.1..3.1f64,
        ) {
            let mut map = GridMap::empty(60, 60, 0.1, [0.0, 0.0]).unwrap();
            for (c, r) in cells {
                map.set(c, r, true);
            }
            let s = sensor(min, min + extra, Arc::new(map));
            if let Some(d) = s.scan(x, y, theta) {
                prop_assert!(d >= min && d <= min + extra);
            }
        }
    }
}
