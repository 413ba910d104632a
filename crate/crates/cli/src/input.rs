//! Variable specifications and CSV ingestion.

use std::path::Path;

use crate::error::{CliError, CliResult};

/// Groups of 1-based, inclusive column ranges; each group is one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub groups: Vec<Vec<usize>>,
}

impl VariableSpec {
    /// One variable per column.
    pub fn per_column(n_columns: usize) -> Self {
        Self { groups: (1..=n_columns).map(|c| vec![c]).collect() }
    }

    pub fn max_column(&self) -> usize {
        self.groups.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn check_bounds(&self, n_columns: usize) -> CliResult<()> {
        match self.groups.iter().flatten().find(|c| **c > n_columns) {
            Some(c) => Err(CliError::Config(format!("column {c} is out of range: the file has {n_columns} columns"))),
            None => Ok(()),
        }
    }
}

/// Parses "1-5,6-10" or "3"; errors name the offending item's position.
pub fn parse_variable_spec(text: &str) -> CliResult<VariableSpec> {
    let text = text.trim();
    if text.is_empty() {
        return Err(CliError::Config("empty variable specification".into()));
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut offset = 0;
    for item in text.split(',') {
        let at = offset + 1;
        offset += item.len() + 1;
        let item = item.trim();
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|v| *v >= 1)
                .ok_or_else(|| CliError::Config(format!("invalid column `{s}` at position {at}")))
        };
        let group: Vec<usize> = match item.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if b < a {
                    return Err(CliError::Config(format!("reversed range `{item}` at position {at}")));
                }
                (a..=b).collect()
            }
            None => vec![num(item)?],
        };
        if let Some(c) = group.iter().find(|c| groups.iter().flatten().any(|x| x == *c)) {
            return Err(CliError::Config(format!("column {c} used twice (overlap at position {at})")));
        }
        groups.push(group);
    }
    Ok(VariableSpec { groups })
}

/// A numeric table, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn n_columns(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Values of the columns in `group` (1-based), row-major.
    pub fn block_values(&self, group: &[usize]) -> Vec<f64> {
        self.rows.iter().flat_map(|r| group.iter().map(move |c| r[c - 1])).collect()
    }
}

/// Comma-separated numbers; a first line that does not parse as numbers is
/// taken as the header.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        let parsed: Vec<Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
        if i == 0 && parsed.iter().any(Result::is_err) {
            header = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for (j, v) in parsed.into_iter().enumerate() {
            match v {
                Ok(x) if x.is_finite() => row.push(x),
                _ => {
                    return Err(CliError::Data(format!(
                        "non-numeric value `{}` at row {}, column {}",
                        &record[j],
                        i + 1,
                        j + 1
                    )))
                }
            }
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::Data(format!(
                    "row {} has {} columns, expected {}",
                    i + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{} contains no data rows", path.display())));
    }
    Ok(Table { header, rows })
}
