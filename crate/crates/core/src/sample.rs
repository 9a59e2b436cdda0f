//! Observations around a cutoff and their CSV interchange format.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side of the cutoff. `Plus` holds `x >= c`, `Minus` holds `x < c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }

    #[inline]
    pub fn contains(self, x: f64, cutoff: f64) -> bool {
        match self {
            Side::Plus => x >= cutoff,
            Side::Minus => x < cutoff,
        }
    }
}

/// Which column is regressed on the running variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Response {
    Y,
    D,
}

/// Observations `(x_i, y_i, d_i)` with a cutoff `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    cutoff: f64,
}

impl Sample {
    /// Validates equal lengths, `n >= 2`, finiteness, binary `d`, and at least
    /// one observation on each side of the cutoff.
    pub fn new(x: Vec<f64>, y: Vec<f64>, d: Vec<f64>, cutoff: f64) -> Result<Self> {
        if x.len() != y.len() || x.len() != d.len() {
            return Err(Error::InvalidSample(format!(
                "column lengths differ (x {}, y {}, d {})",
                x.len(),
                y.len(),
                d.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidSample("need at least 2 observations".into()));
        }
        if !cutoff.is_finite() {
            return Err(Error::InvalidSample("cutoff must be finite".into()));
        }
        for i in 0..x.len() {
            if !(x[i].is_finite() && y[i].is_finite() && d[i].is_finite()) {
                return Err(Error::InvalidSample(format!("non-finite value at index {i}")));
            }
            if d[i] != 0.0 && d[i] != 1.0 {
                return Err(Error::InvalidSample(format!(
                    "treatment indicator {} at index {i} is not 0 or 1",
                    d[i]
                )));
            }
        }
        let sample = Sample { x, y, d, cutoff };
        for side in [Side::Plus, Side::Minus] {
            if sample.count_side(side) == 0 {
                return Err(Error::EmptySide(side.name()));
            }
        }
        Ok(sample)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn response(&self, r: Response) -> &[f64] {
        match r {
            Response::Y => &self.y,
            Response::D => &self.d,
        }
    }

    pub fn count_side(&self, side: Side) -> usize {
        self.x.iter().filter(|&&x| side.contains(x, self.cutoff)).count()
    }

    /// Indices of observations on `side`, in sample order.
    pub fn side_indices(&self, side: Side) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| side.contains(self.x[i], self.cutoff))
            .collect()
    }

    /// Sorted distances `|x_i - c|` on `side`.
    pub fn side_distances(&self, side: Side) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .x
            .iter()
            .filter(|&&x| side.contains(x, self.cutoff))
            .map(|&x| (x - self.cutoff).abs())
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// A copy with every `d_i` replaced by `1 - d_i`.
    pub fn with_flipped_treatment(&self) -> Sample {
        Sample {
            d: self.d.iter().map(|d| 1.0 - d).collect(),
            ..self.clone()
        }
    }

    /// Parse a headed CSV with columns `x`, `y`, `d` in any order (names are
    /// case-insensitive; extra columns are ignored).
    pub fn from_csv_reader<R: Read>(reader: R, cutoff: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse(format!("header: {e}")))?
            .clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::Parse(format!("missing column '{name}'")))
        };
        let (ix, iy, id) = (find("x")?, find("y")?, find("d")?);

        let (mut x, mut y, mut d) = (Vec::new(), Vec::new(), Vec::new());
        for (k, rec) in rdr.records().enumerate() {
            // row 1 is the header
            let row = k + 2;
            let rec = rec.map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
            let field = |i: usize, name: &str| -> Result<f64> {
                let raw = rec
                    .get(i)
                    .ok_or_else(|| Error::Parse(format!("row {row}: missing field '{name}'")))?;
                let v: f64 = raw
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {row}: cannot parse {name} = '{raw}'")))?;
                if !v.is_finite() {
                    return Err(Error::Validation(format!("row {row}: non-finite {name}")));
                }
                Ok(v)
            };
            let (xv, yv, dv) = (field(ix, "x")?, field(iy, "y")?, field(id, "d")?);
            if dv != 0.0 && dv != 1.0 {
                return Err(Error::Validation(format!(
                    "row {row}: d = {dv} is not 0 or 1"
                )));
            }
            x.push(xv);
            y.push(yv);
            d.push(dv);
        }
        Sample::new(x, y, d, cutoff).map_err(|e| match e {
            Error::EmptySide(s) => Error::Validation(format!("no observations on the {s} side")),
            Error::InvalidSample(m) => Error::Validation(m),
            other => other,
        })
    }

    pub fn from_csv_path(path: impl AsRef<Path>, cutoff: f64) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(std::io::BufReader::new(file), cutoff)
    }

    /// Write `x,y,d` with a header. Floats use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["x", "y", "d"]).map_err(io)?;
        for i in 0..self.len() {
            w.write_record([
                self.x[i].to_string(),
                self.y[i].to_string(),
                (self.d[i] as u8).to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }
}

/// Load a headed `x,y,d` CSV file and attach the cutoff.
pub fn load_csv(path: impl AsRef<Path>, cutoff: f64) -> Result<Sample> {
    Sample::from_csv_path(path, cutoff)
}
