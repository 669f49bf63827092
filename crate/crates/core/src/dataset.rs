//! Measured configurations: typed columns plus CSV and metadata ingestion.
//!
//! Metadata lives in a TOML sidecar:
//!
//! ```toml
//! [[variable]]
//! name = "visualize"
//! role = "option"
//! dtype = "discrete"
//! levels = ["0", "1"]
//!
//! [[variable]]
//! name = "encoding_time"
//! role = "performance"
//! dtype = "continuous"
//! units = "s"
//! ```

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeRole;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("metadata: {0}")]
    Meta(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{var}` has no level `{level}`")]
    UnknownLevel { var: String, level: String },
    #[error("column `{0}` is constant")]
    ConstantColumn(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "dtype", rename_all = "snake_case")]
pub enum DType {
    Discrete { levels: Vec<String> },
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    pub role: NodeRole,
    #[serde(flatten)]
    pub dtype: DType,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub units: String,
}

impl VariableMeta {
    pub fn discrete(name: &str, role: NodeRole, levels: &[&str]) -> Self {
        VariableMeta {
            name: name.to_string(),
            role,
            dtype: DType::Discrete {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
            units: String::new(),
        }
    }

    /// Discrete variable with levels `"0"`, `"1"`, ... `k-1`.
    pub fn discrete_k(name: &str, role: NodeRole, k: usize) -> Self {
        let levels: Vec<String> = (0..k).map(|i| i.to_string()).collect();
        VariableMeta {
            name: name.to_string(),
            role,
            dtype: DType::Discrete { levels },
            units: String::new(),
        }
    }

    pub fn continuous(name: &str, role: NodeRole) -> Self {
        VariableMeta {
            name: name.to_string(),
            role,
            dtype: DType::Continuous,
            units: String::new(),
        }
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.dtype {
            DType::Discrete { levels } => Some(levels),
            DType::Continuous => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.dtype, DType::Discrete { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default)]
    pub variable: Vec<VariableMeta>,
}

impl Metadata {
    pub fn parse(text: &str) -> Result<Self, DataError> {
        toml::from_str(text).map_err(|e| DataError::Meta(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// Level indices into the variable's declared levels.
    Discrete(Vec<u32>),
    Continuous(Vec<f64>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Discrete(v) => v.len(),
            Column::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, row: usize) -> f64 {
        match self {
            Column::Discrete(v) => v[row] as f64,
            Column::Continuous(v) => v[row],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    vars: Vec<VariableMeta>,
    columns: Vec<Column>,
    index: HashMap<String, usize>,
    /// Marks data collected under randomized intervention on these variables.
    intervened: BTreeSet<String>,
}

impl Dataset {
    pub fn new(vars: Vec<VariableMeta>, columns: Vec<Column>) -> Result<Self, DataError> {
        if vars.len() != columns.len() {
            return Err(DataError::Invalid(format!(
                "{} variables but {} columns",
                vars.len(),
                columns.len()
            )));
        }
        let mut index = HashMap::new();
        for (i, v) in vars.iter().enumerate() {
            if !crate::graph::valid_name(&v.name) {
                return Err(DataError::Invalid(format!("invalid name `{}`", v.name)));
            }
            if index.insert(v.name.clone(), i).is_some() {
                return Err(DataError::Invalid(format!("duplicate variable `{}`", v.name)));
            }
        }
        let n = columns.first().map_or(0, Column::len);
        if n == 0 {
            return Err(DataError::Invalid("dataset has no rows".into()));
        }
        for (v, c) in vars.iter().zip(&columns) {
            if c.len() != n {
                return Err(DataError::Invalid(format!("column `{}` has ragged length", v.name)));
            }
            match (&v.dtype, c) {
                (DType::Discrete { levels }, Column::Discrete(codes)) => {
                    if levels.is_empty() {
                        return Err(DataError::Meta(format!("`{}` declares no levels", v.name)));
                    }
                    let distinct: BTreeSet<&String> = levels.iter().collect();
                    if distinct.len() != levels.len() {
                        return Err(DataError::Meta(format!("`{}` repeats a level", v.name)));
                    }
                    if let Some(row) = codes.iter().position(|&c| c as usize >= levels.len()) {
                        return Err(DataError::Cell {
                            row: row + 1,
                            column: v.name.clone(),
                            message: "level code out of range".into(),
                        });
                    }
                }
                (DType::Continuous, Column::Continuous(xs)) => {
                    if let Some(row) = xs.iter().position(|x| !x.is_finite()) {
                        return Err(DataError::Cell {
                            row: row + 1,
                            column: v.name.clone(),
                            message: "non-finite value".into(),
                        });
                    }
                }
                _ => {
                    return Err(DataError::Invalid(format!(
                        "column `{}` does not match its dtype",
                        v.name
                    )))
                }
            }
        }
        Ok(Dataset {
            vars,
            columns,
            index,
            intervened: BTreeSet::new(),
        })
    }

    /// Flags the dataset as experimental: `vars` were set by randomized intervention.
    pub fn with_intervened<S: AsRef<str>>(mut self, vars: &[S]) -> Result<Self, DataError> {
        for v in vars {
            self.index_of(v.as_ref())?;
            self.intervened.insert(v.as_ref().to_string());
        }
        Ok(self)
    }

    pub fn intervened(&self) -> &BTreeSet<String> {
        &self.intervened
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[VariableMeta] {
        &self.vars
    }

    pub fn var(&self, i: usize) -> &VariableMeta {
        &self.vars[i]
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, DataError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| DataError::UnknownVariable(name.to_string()))
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub fn metadata(&self) -> Metadata {
        Metadata {
            variable: self.vars.clone(),
        }
    }

    /// Discrete codes of column `i`, or `None` for a continuous column.
    pub fn codes(&self, i: usize) -> Option<&[u32]> {
        match &self.columns[i] {
            Column::Discrete(c) => Some(c),
            Column::Continuous(_) => None,
        }
    }

    pub fn n_levels(&self, i: usize) -> Option<usize> {
        self.vars[i].levels().map(<[String]>::len)
    }

    /// Level index of `label` for discrete variable `var`.
    pub fn level_code(&self, var: usize, label: &str) -> Result<u32, DataError> {
        let levels = self.vars[var].levels().ok_or_else(|| {
            DataError::Invalid(format!("`{}` is continuous", self.vars[var].name))
        })?;
        if let Some(p) = levels.iter().position(|l| l == label) {
            return Ok(p as u32);
        }
        // numeric labels match numerically ("1" == "1.0")
        if let Ok(x) = label.parse::<f64>() {
            if let Some(p) = levels
                .iter()
                .position(|l| l.parse::<f64>().ok() == Some(x))
            {
                return Ok(p as u32);
            }
        }
        Err(DataError::UnknownLevel {
            var: self.vars[var].name.clone(),
            level: label.to_string(),
        })
    }

    /// Rejects constant columns.
    pub fn check_nonconstant(&self) -> Result<(), DataError> {
        for (v, c) in self.vars.iter().zip(&self.columns) {
            let constant = match c {
                Column::Discrete(x) => x.iter().all(|&a| a == x[0]),
                Column::Continuous(x) => x.iter().all(|&a| a == x[0]),
            };
            if constant {
                return Err(DataError::ConstantColumn(v.name.clone()));
            }
        }
        Ok(())
    }

    /// Reads a CSV whose header names every variable in `meta`.
    pub fn from_csv<R: Read>(reader: R, meta: &Metadata) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| DataError::Csv(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let by_name: HashMap<&str, &VariableMeta> =
            meta.variable.iter().map(|v| (v.name.as_str(), v)).collect();
        let mut vars = Vec::with_capacity(header.len());
        for h in &header {
            let m = by_name
                .get(h.as_str())
                .ok_or_else(|| DataError::Meta(format!("no metadata for column `{h}`")))?;
            vars.push((*m).clone());
        }
        let lookups: Vec<Option<HashMap<&str, u32>>> = vars
            .iter()
            .map(|v| {
                v.levels().map(|ls| {
                    ls.iter()
                        .enumerate()
                        .map(|(i, l)| (l.as_str(), i as u32))
                        .collect()
                })
            })
            .collect();
        let mut columns: Vec<Column> = vars
            .iter()
            .map(|v| match v.dtype {
                DType::Discrete { .. } => Column::Discrete(Vec::new()),
                DType::Continuous => Column::Continuous(Vec::new()),
            })
            .collect();
        for (r, rec) in rdr.records().enumerate() {
            let row = r + 1;
            let rec = rec.map_err(|e| DataError::Csv(format!("row {row}: {e}")))?;
            if rec.len() != header.len() {
                return Err(DataError::Cell {
                    row,
                    column: header.get(rec.len()).cloned().unwrap_or_default(),
                    message: format!("expected {} cells, found {}", header.len(), rec.len()),
                });
            }
            for (j, cell) in rec.iter().enumerate() {
                let bad = |message: String| DataError::Cell {
                    row,
                    column: header[j].clone(),
                    message,
                };
                if cell.is_empty() {
                    return Err(bad("missing value".into()));
                }
                match &mut columns[j] {
                    Column::Discrete(codes) => {
                        let table = lookups[j].as_ref().unwrap();
                        let code = match table.get(cell) {
                            Some(&c) => c,
                            None => {
                                let x: Option<f64> = cell.parse().ok();
                                vars[j]
                                    .levels()
                                    .unwrap()
                                    .iter()
                                    .position(|l| x.is_some() && l.parse::<f64>().ok() == x)
                                    .map(|p| p as u32)
                                    .ok_or_else(|| bad(format!("undeclared level `{cell}`")))?
                            }
                        };
                        codes.push(code);
                    }
                    Column::Continuous(xs) => {
                        let x: f64 = cell
                            .parse()
                            .map_err(|_| bad(format!("not a number: `{cell}`")))?;
                        xs.push(x);
                    }
                }
            }
        }
        let ds = Dataset::new(vars, columns)?;
        ds.check_nonconstant()?;
        Ok(ds)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let e = |e: csv::Error| DataError::Csv(e.to_string());
        w.write_record(self.vars.iter().map(|v| v.name.as_str()))
            .map_err(e)?;
        let mut buf = Vec::with_capacity(self.n_vars());
        for r in 0..self.n_rows() {
            buf.clear();
            for (v, c) in self.vars.iter().zip(&self.columns) {
                buf.push(match c {
                    Column::Discrete(codes) => v.levels().unwrap()[codes[r] as usize].clone(),
                    Column::Continuous(xs) => format!("{}", xs[r]),
                });
            }
            w.write_record(&buf).map_err(e)?;
        }
        w.flush().map_err(|e| DataError::Csv(e.to_string()))?;
        Ok(())
    }

    /// Rows matching every `(variable, level code)` pair.
    pub fn matching_rows(&self, assignment: &[(usize, u32)]) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&r| {
                assignment.iter().all(|&(v, code)| match &self.columns[v] {
                    Column::Discrete(c) => c[r] == code,
                    Column::Continuous(_) => false,
                })
            })
            .collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Dataset, DataError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<_, _>>()?;
        Dataset::new(
            idx.iter().map(|&i| self.vars[i].clone()).collect(),
            idx.iter().map(|&i| self.columns[i].clone()).collect(),
        )
    }
}
