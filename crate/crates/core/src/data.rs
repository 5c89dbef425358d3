//! Observation storage and CSV ingestion.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared outcome support `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
}

impl Support {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::argument("core-data", "outcome support must be finite"));
        }
        if lower >= upper {
            return Err(Error::argument(
                "core-data",
                format!("degenerate outcome support [{lower}, {upper}]"),
            ));
        }
        Ok(Support { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lower && y <= self.upper
    }
}

/// Maps dataset roles onto CSV column names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub y: String,
    pub d: String,
    pub x: Vec<String>,
    pub z: Option<String>,
}

impl Schema {
    pub fn new(y: impl Into<String>, d: impl Into<String>, x: &[&str], z: Option<&str>) -> Self {
        Schema {
            y: y.into(),
            d: d.into(),
            x: x.iter().map(|s| s.to_string()).collect(),
            z: z.map(str::to_string),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let all = [&self.y, &self.d]
            .into_iter()
            .chain(self.x.iter())
            .chain(self.z.iter());
        for name in all {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("column '{name}' mapped to more than one role")));
            }
        }
        Ok(())
    }
}

/// A single observation `w = (y, d, x, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<'a> {
    pub y: f64,
    pub d: u8,
    pub x: &'a [f64],
    pub z: Option<f64>,
}

/// Immutable table of observations with a declared outcome support.
///
/// Covariates are stored row-major; `x_names` gives the column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    d: Vec<u8>,
    x: Vec<f64>,
    x_names: Vec<String>,
    z: Option<Vec<f64>>,
    z_name: Option<String>,
    support: Support,
}

impl Dataset {
    /// Builds a dataset from columns, validating every invariant.
    pub fn new(
        y: Vec<f64>,
        d: Vec<u8>,
        x_names: Vec<String>,
        x: Vec<f64>,
        z: Option<(String, Vec<f64>)>,
        support: Support,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Schema("dataset has no observations".into()));
        }
        if d.len() != n {
            return Err(Error::Schema(format!("d has {} rows, y has {n}", d.len())));
        }
        if x.len() != n * x_names.len() {
            return Err(Error::Schema("covariate matrix does not match row count".into()));
        }
        let mut names = HashSet::new();
        for name in x_names.iter().chain(z.as_ref().map(|(n, _)| n)) {
            if !names.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name '{name}'")));
            }
        }
        for (row, (&yi, &di)) in y.iter().zip(&d).enumerate() {
            if !yi.is_finite() || !support.contains(yi) {
                return Err(Error::Domain {
                    row,
                    message: format!(
                        "outcome {yi} outside support [{}, {}]",
                        support.lower, support.upper
                    ),
                });
            }
            if di > 1 {
                return Err(Error::Domain {
                    row,
                    message: format!("treatment {di} is not binary"),
                });
            }
        }
        if let Some(row) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                row: row / x_names.len().max(1),
                message: "non-finite covariate".into(),
            });
        }
        let (z_name, z) = match z {
            Some((name, values)) => {
                if values.len() != n {
                    return Err(Error::Schema("instrument column does not match row count".into()));
                }
                if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Domain {
                        row,
                        message: "non-finite instrument".into(),
                    });
                }
                (Some(name), Some(values))
            }
            None => (None, None),
        };
        Ok(Dataset {
            y,
            d,
            x,
            x_names,
            z,
            z_name,
            support,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    pub fn z_name(&self) -> Option<&str> {
        self.z_name.as_deref()
    }

    pub fn has_instrument(&self) -> bool {
        self.z.is_some()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn d(&self) -> &[u8] {
        &self.d
    }

    pub fn z(&self) -> Option<&[f64]> {
        self.z.as_deref()
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        let p = self.x_names.len();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn observation(&self, i: usize) -> Observation<'_> {
        Observation {
            y: self.y[i],
            d: self.d[i],
            x: self.covariates(i),
            z: self.z.as_ref().map(|z| z[i]),
        }
    }

    pub fn observations(&self) -> impl Iterator<Item = Observation<'_>> + '_ {
        (0..self.len()).map(move |i| self.observation(i))
    }

    /// Returns a copy whose instrument column is replaced by `values`.
    pub fn with_instrument(&self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        Dataset::new(
            self.y.clone(),
            self.d.clone(),
            self.x_names.clone(),
            self.x.clone(),
            Some((name.into(), values)),
            self.support,
        )
    }
}

/// Loads a CSV file (header row required) into a [`Dataset`].
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema, support: Support) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_dataset(file, schema, support)
}

/// Same as [`load_dataset`] but reads from any byte source.
pub fn read_dataset<R: Read>(reader: R, schema: &Schema, support: Support) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header row: {e}")))?
        .clone();
    let mut seen = HashSet::new();
    for h in headers.iter() {
        if !seen.insert(h) {
            return Err(Error::Schema(format!("duplicate header '{h}'")));
        }
    }
    let index_of = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    };
    let y_idx = index_of(&schema.y)?;
    let d_idx = index_of(&schema.d)?;
    let x_idx = schema
        .x
        .iter()
        .map(|name| index_of(name))
        .collect::<Result<Vec<_>>>()?;
    let z_idx = schema.z.as_deref().map(index_of).transpose()?;

    let mut y = Vec::new();
    let mut d = Vec::new();
    let mut x = Vec::new();
    let mut z = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        let cell = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            let column = headers.get(idx).unwrap_or("").to_string();
            if raw.is_empty() {
                return Err(Error::Parse {
                    row,
                    column,
                    message: "missing value".into(),
                });
            }
            raw.parse::<f64>().map_err(|e| Error::Parse {
                row,
                column,
                message: format!("'{raw}': {e}"),
            })
        };
        y.push(cell(y_idx)?);
        let di = cell(d_idx)?;
        if di != 0.0 && di != 1.0 {
            return Err(Error::Domain {
                row,
                message: format!("treatment {di} is not binary"),
            });
        }
        d.push(di as u8);
        for &j in &x_idx {
            x.push(cell(j)?);
        }
        if let Some(j) = z_idx {
            z.push(cell(j)?);
        }
    }
    let z = schema.z.clone().map(|name| (name, z));
    Dataset::new(y, d, schema.x.clone(), x, z, support)
}
