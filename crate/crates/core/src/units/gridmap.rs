use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numfmt::format_g17;

/// Occupancy grid. Cell `(col, row)` covers
/// `[x0 + col*res, x0 + (col+1)*res) x [y0 + row*res, y0 + (row+1)*res)`;
/// row 0 is the minimum-y row. Everything outside the grid is free.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
    cells: Vec<bool>,
}

impl GridMap {
    pub fn new(width: usize, height: usize, resolution: f64, origin: [f64; 2], cells: Vec<bool>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(Error::parse(
                "grid map",
                format!("{} cells for a {width}x{height} grid", cells.len()),
            ));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::parse(
                "grid map",
                format!("resolution {resolution} must be positive"),
            ));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::parse("grid map", "origin must be finite"));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    pub fn empty(width: usize, height: usize, resolution: f64, origin: [f64; 2]) -> Result<Self> {
        Self::new(width, height, resolution, origin, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn set(&mut self, col: usize, row: usize, occupied: bool) {
        assert!(col < self.width && row < self.height, "cell out of range");
        self.cells[row * self.width + col] = occupied;
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.width + col]
    }

    /// Marks every cell whose centre lies in the axis-aligned box.
    pub fn fill_box(&mut self, min: [f64; 2], max: [f64; 2]) {
        for row in 0..self.height {
            for col in 0..self.width {
                let [cx, cy] = self.cell_centre(col, row);
                if cx >= min[0] && cx <= max[0] && cy >= min[1] && cy <= max[1] {
                    self.set(col, row, true);
                }
            }
        }
    }

    pub fn cell_centre(&self, col: usize, row: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.resolution,
            self.origin[1] + (row as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn cell_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = ((x - self.origin[0]) / self.resolution).floor();
        let row = ((y - self.origin[1]) / self.resolution).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return None;
        }
        Some((col as usize, row as usize))
    }

    pub fn is_occupied(&self, x: f64, y: f64) -> bool {
        self.cell_at(x, y).map(|(c, r)| self.get(c, r)).unwrap_or(false)
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Euclidean distance from a point to the nearest occupied cell (0 inside
    /// one), or `None` for a map without obstacles.
    pub fn clearance(&self, x: f64, y: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for row in 0..self.height {
            for col in 0..self.width {
                if !self.get(col, row) {
                    continue;
                }
                let x_lo = self.origin[0] + col as f64 * self.resolution;
                let y_lo = self.origin[1] + row as f64 * self.resolution;
                let dx = (x_lo - x).max(x - (x_lo + self.resolution)).max(0.0);
                let dy = (y_lo - y).max(y - (y_lo + self.resolution)).max(0.0);
                let d = dx.hypot(dy);
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
        best
    }

    /// Text format: `GRIDMAP 1`, then `width height resolution x0 y0`, then
    /// `height` lines of space-separated 0/1 cells, row 0 first.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text
            .split('\n')
            .map(|l| l.trim_end_matches('\r'))
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let at = |n: usize| format!("{origin}:{}", n + 1);

        match lines.next() {
            Some((_, l)) if l.trim() == "GRIDMAP 1" => {}
            Some((n, l)) => return Err(Error::parse(at(n), format!("expected `GRIDMAP 1`, found `{l}`"))),
            None => return Err(Error::parse(origin, "empty grid map file")),
        }
        let (n, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, "missing dimension line"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(at(n), "expected `width height resolution x0 y0`"));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(at(n), format!("bad integer `{s}`")))
        };
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(at(n), format!("bad number `{s}`")))
        };
        let width = int(fields[0])?;
        let height = int(fields[1])?;
        let resolution = real(fields[2])?;
        let x0 = real(fields[3])?;
        let y0 = real(fields[4])?;

        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::parse(origin, format!("missing cell row {row}")))?;
            let before = cells.len();
            for token in line.split_whitespace() {
                match token {
                    "0" => cells.push(false),
                    "1" => cells.push(true),
                    other => return Err(Error::parse(at(n), format!("cell must be 0 or 1, found `{other}`"))),
                }
            }
            if cells.len() - before != width {
                return Err(Error::parse(
                    at(n),
                    format!("expected {width} cells, found {}", cells.len() - before),
                ));
            }
        }
        if let Some((n, _)) = lines.next() {
            return Err(Error::parse(at(n), "unexpected content after the last row"));
        }
        Self::new(width, height, resolution, [x0, y0], cells)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("GRIDMAP 1\n");
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            self.width,
            self.height,
            format_g17(self.resolution),
            format_g17(self.origin[0]),
            format_g17(self.origin[1])
        );
        for row in 0..self.height {
            let line: Vec<&str> = (0..self.width)
                .map(|col| if self.get(col, row) { "1" } else { "0" })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
