use std::collections::HashMap;
use std::path::Path;

use robustse::{Controls, Dataset64, Groups, Matrix64};

use crate::error::{CliError, Result};

/// A CSV file held as strings, with the file line of each record.
#[derive(Clone, Debug)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub lines: Vec<u64>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(CliError::FileNotFound(path.to_path_buf()));
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let headers = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record?;
            lines.push(record.position().map_or(0, |p| p.line()));
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(Self {
            headers,
            rows,
            lines,
        })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::UnknownColumn(name.to_string()))
    }

    fn raw(&self, name: &str) -> Result<Vec<(u64, &str)>> {
        let j = self.index(name)?;
        self.rows
            .iter()
            .zip(&self.lines)
            .map(|(row, &line)| {
                let v = row.get(j).map_or("", |s| s.trim());
                if v.is_empty() || v.eq_ignore_ascii_case("na") {
                    Err(CliError::MissingValue {
                        line,
                        column: name.to_string(),
                    })
                } else {
                    Ok((line, v))
                }
            })
            .collect()
    }

    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        self.raw(name)?
            .into_iter()
            .map(|(line, v)| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| CliError::Parse {
                        line,
                        column: name.to_string(),
                        value: v.to_string(),
                    })
            })
            .collect()
    }

    /// Level index per row, levels numbered in order of first appearance.
    pub fn categorical(&self, name: &str) -> Result<(Vec<usize>, Vec<String>)> {
        let mut levels: Vec<String> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let codes = self
            .raw(name)?
            .into_iter()
            .map(|(_, v)| {
                *seen.entry(v.to_string()).or_insert_with(|| {
                    levels.push(v.to_string());
                    levels.len() - 1
                })
            })
            .collect();
        Ok((codes, levels))
    }
}

/// Column roles for a regression.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct ModelSpec {
    pub outcome: String,
    pub focal: Vec<String>,
    pub controls: Vec<String>,
    pub categorical: Vec<String>,
    pub intercept: bool,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.focal.is_empty() {
            return Err(CliError::Usage("at least one focal column is required".into()));
        }
        let mut all: Vec<&String> = self
            .focal
            .iter()
            .chain(&self.controls)
            .chain(&self.categorical)
            .collect();
        if all.contains(&&self.outcome) {
            return Err(CliError::Usage(format!(
                "outcome '{}' is also listed as a regressor",
                self.outcome
            )));
        }
        all.sort();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::Usage(format!("column '{}' listed twice", w[0])));
        }
        Ok(())
    }
}

/// Dataset plus the names needed to label the output.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub data: Dataset64,
    pub focal_names: Vec<String>,
    /// File line of each observation.
    pub lines: Vec<u64>,
}

/// Builds the regression from the table. A lone categorical control with no
/// other controls is kept as a grouping; otherwise categorical columns are
/// expanded to dummies, dropping the first level once a constant is already
/// in the span (intercept or an earlier categorical).
pub fn prepare(table: &CsvTable, model: &ModelSpec) -> Result<Prepared> {
    model.validate()?;
    let n = table.rows.len();
    let y = table.numeric(&model.outcome)?;
    let focal: Vec<Vec<f64>> = model
        .focal
        .iter()
        .map(|c| table.numeric(c))
        .collect::<Result<_>>()?;
    let mut dense: Vec<Vec<f64>> = Vec::new();
    if model.intercept {
        dense.push(vec![1.0; n]);
    }
    for c in &model.controls {
        dense.push(table.numeric(c)?);
    }
    let mut cats = model
        .categorical
        .iter()
        .map(|c| table.categorical(c))
        .collect::<Result<Vec<_>>>()?;

    let controls = if dense.is_empty() && cats.len() == 1 {
        let (codes, _) = cats.pop().expect("one categorical");
        Controls::OneWay(Groups::new(codes)?)
    } else {
        let mut has_constant = model.intercept;
        for (codes, levels) in &cats {
            for level in usize::from(has_constant)..levels.len() {
                dense.push(codes.iter().map(|&c| f64::from(u8::from(c == level))).collect());
            }
            has_constant = true;
        }
        if dense.is_empty() {
            Controls::None
        } else {
            Controls::Dense(Matrix64::from_columns(n, &dense))
        }
    };
    let data = Dataset64::new(y, Matrix64::from_columns(n, &focal), controls)?;
    Ok(Prepared {
        data,
        focal_names: model.focal.clone(),
        lines: table.lines.clone(),
    })
}
