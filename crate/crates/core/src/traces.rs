//! Timed traces: the CSV dialect shared by steering inputs, GPS positions and
//! co-simulation results, the field-test scenario generators, and
//! time-based alignment of a reference track with a simulated one.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::format_g17;

/// Timestamped rows of named channel values.
///
/// Invariants: times strictly increase, every value is finite, every row has
/// one value per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedTrace {
    channels: Vec<String>,
    times: Vec<f64>,
    data: Vec<f64>,
}

impl TimedTrace {
    pub fn new<S: Into<String>>(channels: impl IntoIterator<Item = S>) -> Self {
        Self {
            channels: channels.into_iter().map(Into::into).collect(),
            times: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, row: usize) -> f64 {
        self.times[row]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let width = self.channels.len();
        &self.data[row * width..(row + 1) * width]
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, &[f64])> {
        (0..self.len()).map(move |i| (self.times[i], self.row(i)))
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    pub fn column(&self, channel: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.row(i)[channel])
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn push(&mut self, time: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.channels.len() {
            return Err(Error::parse(
                "trace",
                format!(
                    "row at t={time} has {} values for {} channels",
                    values.len(),
                    self.channels.len()
                ),
            ));
        }
        if !time.is_finite() {
            return Err(Error::NonFinite {
                name: "time".into(),
                value: time,
            });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                name: self.channels[i].clone(),
                value: *v,
            });
        }
        if let Some(&last) = self.times.last() {
            if time <= last {
                return Err(Error::parse(
                    "trace",
                    format!("time {time} does not increase past {last}"),
                ));
            }
        }
        self.times.push(time);
        self.data.extend_from_slice(values);
        Ok(())
    }

    /// CSV text: header `time,<channels>`, 17-significant-digit reals, LF.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for c in &self.channels {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, values) in self.rows() {
            out.push_str(&format_g17(t));
            for v in values {
                out.push(',');
                out.push_str(&format_g17(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV dialect. `origin` names the source in diagnostics.
    pub fn parse_csv(text: &str, origin: &str, expected: Option<&[&str]>) -> Result<Self> {
        let mut lines = text.split('\n').enumerate();
        let header = match lines.next() {
            Some((_, h)) if !h.trim().is_empty() => h.trim_end_matches('\r'),
            _ => return Err(Error::parse(origin, "missing header row")),
        };
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        if columns[0] != "time" {
            return Err(Error::parse(
                format!("{origin}:1"),
                format!("first column must be `time`, found `{}`", columns[0]),
            ));
        }
        let channels = &columns[1..];
        for (i, c) in channels.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::parse(format!("{origin}:1"), "empty column name"));
            }
            if *c == "time" || channels[..i].contains(c) {
                return Err(Error::parse(format!("{origin}:1"), format!("duplicated column `{c}`")));
            }
        }
        if let Some(expected) = expected {
            if channels != expected {
                let mut missing: Vec<&&str> = expected.iter().filter(|e| !channels.contains(e)).collect();
                missing.dedup();
                let message = if missing.is_empty() {
                    format!(
                        "column order is [{}], expected [{}]",
                        channels.join(","),
                        expected.join(",")
                    )
                } else {
                    format!(
                        "missing column(s) {}; found [{}]",
                        missing.iter().map(|m| format!("`{m}`")).collect::<Vec<_>>().join(", "),
                        channels.join(",")
                    )
                };
                return Err(Error::parse(format!("{origin}:1"), message));
            }
        }

        let mut trace = TimedTrace::new(channels.iter().copied());
        let mut values = vec![0.0; channels.len()];
        for (index, line) in lines {
            let line_no = index + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let location = || format!("{origin}:{line_no}");
            let mut fields = line.split(',');
            let time = parse_number(fields.next().unwrap_or(""), &location)?;
            let mut count = 0;
            for (slot, field) in values.iter_mut().zip(fields.by_ref()) {
                *slot = parse_number(field, &location)?;
                count += 1;
            }
            if count != channels.len() || fields.next().is_some() {
                return Err(Error::parse(
                    location(),
                    format!("expected {} fields", channels.len() + 1),
                ));
            }
            if let Some(last) = trace.last_time() {
                if time <= last {
                    return Err(Error::parse(
                        location(),
                        format!("time regression: {time} after {last}"),
                    ));
                }
            }
            trace.push(time, &values).map_err(|e| match e {
                Error::NonFinite { name, value } => {
                    Error::parse(location(), format!("non-finite value {value} in `{name}`"))
                }
                other => other,
            })?;
        }
        Ok(trace)
    }
}

fn parse_number(field: &str, location: &dyn Fn() -> String) -> Result<f64> {
    let field = field.trim();
    let value: f64 = field
        .parse()
        .map_err(|_| Error::parse(location(), format!("cannot parse `{field}` as a number")))?;
    if !value.is_finite() {
        return Err(Error::parse(location(), format!("non-finite value `{field}`")));
    }
    Ok(value)
}

pub fn read_trace_csv(path: impl AsRef<Path>, expected_channels: Option<&[&str]>) -> Result<TimedTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TimedTrace::parse_csv(&text, &path.display().to_string(), expected_channels)
}

pub fn write_trace_csv(trace: &TimedTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, trace.to_csv()).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Sin,
    TurnRamp,
    SpeedRamp,
    SpeedStep,
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin" => Ok(ScenarioKind::Sin),
            "turn_ramp" => Ok(ScenarioKind::TurnRamp),
            "speed_ramp" => Ok(ScenarioKind::SpeedRamp),
            "speed_step" => Ok(ScenarioKind::SpeedStep),
            other => Err(Error::parse(
                "scenario kind",
                format!("unknown kind `{other}` (sin, turn_ramp, speed_ramp, speed_step)"),
            )),
        }
    }
}

/// Synthetic field-test manoeuvre.
///
/// `amplitude` is the peak steering angle for `sin` and the final steering
/// angle for `turn_ramp`; the speed scenarios ignore it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub kind: ScenarioKind,
    pub duration: f64,
    pub base_speed: f64,
    pub amplitude: f64,
    pub sample_period: f64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.name.trim().is_empty() {
            problems.push("scenario name is empty".to_string());
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            problems.push(format!("duration {} must be positive", self.duration));
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            problems.push(format!("sample period {} must be positive", self.sample_period));
        }
        if !self.base_speed.is_finite() || !self.amplitude.is_finite() {
            problems.push("base speed and amplitude must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }
}

/// Number of whole steps of `step` that fit in `span`, tolerating the
/// rounding of decimal step sizes (`1.0 / 0.1` counts as 10).
pub(crate) fn whole_steps(span: f64, step: f64) -> u64 {
    let q = span / step;
    let nearest = q.round();
    if (q - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        q.floor() as u64
    }
}

/// Steering-input trace with channels `[velocity, delta_f]` sampled every
/// `sample_period` over `[0, duration]`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<TimedTrace> {
    spec.validate()?;
    let samples = whole_steps(spec.duration, spec.sample_period);
    let mut trace = TimedTrace::new(["velocity", "delta_f"]);
    for k in 0..=samples {
        let t = k as f64 * spec.sample_period;
        let progress = (t / spec.duration).min(1.0);
        let (velocity, delta_f) = match spec.kind {
            ScenarioKind::Sin => {
                let period = spec.duration / 3.0;
                (
                    spec.base_speed,
                    spec.amplitude * (2.0 * std::f64::consts::PI * t / period).sin(),
                )
            }
            ScenarioKind::TurnRamp => (spec.base_speed, spec.amplitude * progress),
            ScenarioKind::SpeedRamp => (spec.base_speed * progress, 0.0),
            ScenarioKind::SpeedStep => {
                let plateau = ((4.0 * progress + 1e-9).floor() as u32).min(3);
                (spec.base_speed * f64::from(plateau + 1) / 4.0, 0.0)
            }
        };
        trace.push(t, &[velocity, delta_f])?;
    }
    Ok(trace)
}

/// Reference positions paired with time-interpolated simulated positions.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedPair {
    /// `(x_ref, y_ref, x_sim, y_sim)` for every reference row, in order.
    pub pairs: Vec<[f64; 4]>,
    /// Reference rows that fell outside the simulated time span and were
    /// clamped to its nearest endpoint.
    pub clamped: usize,
}

impl AlignedPair {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Finds the (x, y) channels of a trace: channels named `x`/`y` or ending in
/// `.x`/`.y`, otherwise the only two channels in order.
pub fn position_channels(trace: &TimedTrace) -> Result<[usize; 2]> {
    let find = |axis: &str| {
        let suffix = format!(".{axis}");
        let hits: Vec<usize> = trace
            .channels()
            .iter()
            .enumerate()
            .filter(|(_, c)| *c == axis || c.ends_with(&suffix))
            .map(|(i, _)| i)
            .collect();
        (hits.len() == 1).then(|| hits[0])
    };
    match (find("x"), find("y")) {
        (Some(x), Some(y)) => Ok([x, y]),
        _ if trace.channels().len() == 2 => Ok([0, 1]),
        _ => Err(Error::parse(
            "trace",
            format!("cannot identify x/y channels among [{}]", trace.channels().join(",")),
        )),
    }
}

/// Aligns using [`position_channels`] on both traces.
pub fn align(reference: &TimedTrace, simulated: &TimedTrace) -> Result<AlignedPair> {
    let r = position_channels(reference)?;
    let s = position_channels(simulated)?;
    align_channels(reference, r, simulated, s)
}

pub fn align_channels(
    reference: &TimedTrace,
    reference_xy: [usize; 2],
    simulated: &TimedTrace,
    simulated_xy: [usize; 2],
) -> Result<AlignedPair> {
    if reference.is_empty() {
        return Err(Error::EmptyTrace("reference".into()));
    }
    if simulated.is_empty() {
        return Err(Error::EmptyTrace("simulated".into()));
    }
    let times = simulated.times();
    let at = |row: usize| {
        let values = simulated.row(row);
        (values[simulated_xy[0]], values[simulated_xy[1]])
    };

    let mut pairs = Vec::with_capacity(reference.len());
    let mut clamped = 0;
    for (t, values) in reference.rows() {
        let (xr, yr) = (values[reference_xy[0]], values[reference_xy[1]]);
        let (xs, ys) = if t <= times[0] {
            if t < times[0] {
                clamped += 1;
            }
            at(0)
        } else if t >= times[times.len() - 1] {
            if t > times[times.len() - 1] {
                clamped += 1;
            }
            at(times.len() - 1)
        } else {
            // first simulated time >= t
            let hi = times.partition_point(|&s| s < t);
            if times[hi] == t {
                at(hi)
            } else {
                let lo = hi - 1;
                let w = (t - times[lo]) / (times[hi] - times[lo]);
                let (x0, y0) = at(lo);
                let (x1, y1) = at(hi);
                (x0 + w * (x1 - x0), y0 + w * (y1 - y0))
            }
        };
        pairs.push([xr, yr, xs, ys]);
    }
    Ok(AlignedPair { pairs, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(channels: &[&str], rows: &[(f64, &[f64])]) -> TimedTrace {
        let mut t = TimedTrace::new(channels.iter().copied());
        for (time, values) in rows {
            t.push(*time, values).unwrap();
        }
        t
    }

    #[test]
    fn parses_simple_csv() {
        let t = TimedTrace::parse_csv("time,x,y\n0,0,0\n1,1,0", "mem", Some(&["x", "y"])).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn rejects_column_order() {
        let err = TimedTrace::parse_csv("time,y,x\n0,0,0\n", "mem", Some(&["x", "y"])).unwrap_err();
        assert!(err.to_string().contains("column order"), "{err}");
    }

    #[test]
    fn rejects_bad_headers_and_values() {
        assert!(TimedTrace::parse_csv("time,x,x\n", "m", None).is_err());
        assert!(TimedTrace::parse_csv("t,x\n", "m", None).is_err());
        assert!(TimedTrace::parse_csv("", "m", None).is_err());
        let missing = TimedTrace::parse_csv("time,x\n", "m", Some(&["x", "y"])).unwrap_err();
        assert!(missing.to_string().contains("missing"), "{missing}");
        let bad = TimedTrace::parse_csv("time,x\n0,abc\n", "m", None).unwrap_err();
        assert!(bad.to_string().contains("m:2"), "{bad}");
        let nan = TimedTrace::parse_csv("time,x\n0,NaN\n", "m", None).unwrap_err();
        assert!(nan.to_string().contains("non-finite"), "{nan}");
        let arity = TimedTrace::parse_csv("time,x\n0,1,2\n", "m", None).unwrap_err();
        assert!(arity.to_string().contains("fields"), "{arity}");
    }

    #[test]
    fn time_regression_reports_line() {
        let err = TimedTrace::parse_csv("time,x\n0,0\n1,0\n0.5,0\n", "f.csv", None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("f.csv:4") && msg.contains("regression"), "{msg}");
    }

    #[test]
    fn speed_step_plateaus() {
        let spec = ScenarioSpec {
            name: "speed_step1".into(),
            kind: ScenarioKind::SpeedStep,
            duration: 8.0,
            base_speed: 2.0,
            amplitude: 0.0,
            sample_period: 1.0,
        };
        let t = generate_scenario(&spec).unwrap();
        let v: Vec<f64> = t.column(0).collect();
        assert_eq!(v, vec![0.5, 0.5, 1.0, 1.0, 1.5, 1.5, 2.0, 2.0, 2.0]);
        assert!(t.column(1).all(|d| d == 0.0));
    }

    #[test]
    fn speed_ramp_has_no_steering() {
        let spec = ScenarioSpec {
            name: "speed_ramp1".into(),
            kind: ScenarioKind::SpeedRamp,
            duration: 10.0,
            base_speed: 3.0,
            amplitude: 0.4,
            sample_period: 0.1,
        };
        let t = generate_scenario(&spec).unwrap();
        assert_eq!(t.len(), 101);
        assert!(t.column(1).all(|d| d == 0.0));
        assert_eq!(t.row(0)[0], 0.0);
        assert_eq!(t.row(100)[0], 3.0);
    }

    #[test]
    fn sin_bounds() {
        let spec = ScenarioSpec {
            name: "sin1".into(),
            kind: ScenarioKind::Sin,
            duration: 12.0,
            base_speed: 2.0,
            amplitude: 0.3,
            sample_period: 0.25,
        };
        let t = generate_scenario(&spec).unwrap();
        assert_eq!(t.row(0)[1], 0.0);
        let peak = t.column(1).fold(0.0_f64, |m, d| m.max(d.abs()));
        assert!((peak - 0.3).abs() <= 1e-12);
        assert!(t.column(0).all(|v| v == 2.0));
    }

    #[test]
    fn turn_ramp_is_linear() {
        let spec = ScenarioSpec {
            name: "turn_ramp1".into(),
            kind: ScenarioKind::TurnRamp,
            duration: 4.0,
            base_speed: 1.0,
            amplitude: 0.2,
            sample_period: 1.0,
        };
        let t = generate_scenario(&spec).unwrap();
        let d: Vec<f64> = t.column(1).collect();
        assert_eq!(d, vec![0.0, 0.2 * 0.25, 0.2 * 0.5, 0.2 * 0.75, 0.2]);
    }

    #[test]
    fn invalid_scenarios_rejected() {
        let mut spec = ScenarioSpec {
            name: "".into(),
            kind: ScenarioKind::Sin,
            duration: 1.0,
            base_speed: 1.0,
            amplitude: 0.1,
            sample_period: 0.1,
        };
        assert!(generate_scenario(&spec).is_err());
        spec.name = "ok".into();
        spec.duration = 0.0;
        assert!(generate_scenario(&spec).is_err());
    }

    #[test]
    fn align_interpolates_and_clamps() {
        let sim = trace(&["v.x", "v.y"], &[(0.0, &[0.0, 0.0]), (1.0, &[2.0, 0.0])]);
        let reference = trace(&["x", "y"], &[(0.5, &[0.0, 0.0]), (2.0, &[0.0, 0.0])]);
        let a = align(&reference, &sim).unwrap();
        assert_eq!(a.pairs[0], [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(a.pairs[1], [0.0, 0.0, 2.0, 0.0]);
        assert_eq!(a.clamped, 1);
    }

    #[test]
    fn align_matching_times_is_row_lookup() {
        let sim = trace(
            &["x", "y"],
            &[(0.0, &[0.1, 0.2]), (0.1, &[0.3, 0.4]), (0.2, &[0.5, 0.6])],
        );
        let reference = trace(&["x", "y"], &[(0.1, &[0.0, 0.0]), (0.2, &[0.0, 0.0])]);
        let a = align(&reference, &sim).unwrap();
        assert_eq!(a.pairs[0][2..], [0.3, 0.4]);
        assert_eq!(a.pairs[1][2..], [0.5, 0.6]);
        assert_eq!(a.clamped, 0);

        let same = align(&sim, &sim).unwrap();
        assert!(same.pairs.iter().all(|p| p[0] == p[2] && p[1] == p[3]));
    }

    #[test]
    fn align_rejects_empty() {
        let empty = TimedTrace::new(["x", "y"]);
        let sim = trace(&["x", "y"], &[(0.0, &[0.0, 0.0])]);
        assert!(matches!(align(&empty, &sim), Err(Error::EmptyTrace(_))));
        assert!(matches!(align(&sim, &empty), Err(Error::EmptyTrace(_))));
    }

    #[test]
    fn alignment_is_reference_indexed() {
        let reference = trace(&["x", "y"], &[(0.0, &[0.0, 0.0]), (1.0, &[1.0, 0.0])]);
        for n in [2usize, 5, 50] {
            let mut sim = TimedTrace::new(["x", "y"]);
            for k in 0..n {
                let t = k as f64 / (n - 1) as f64;
                sim.push(t, &[t, 0.0]).unwrap();
            }
            assert_eq!(align(&reference, &sim).unwrap().len(), 2);
        }
    }
}
