use std::path::Path;

use super::{DataError, LabeledDataset, SurvivalData};
use crate::numerics::Matrix;

/// Raw table: header plus string cells, with row-name columns (empty header)
/// dropped.
struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<RawTable, DataError> {
    if !path.exists() {
        return Err(DataError::FileNotFound(path.display().to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let raw_header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let keep: Vec<usize> = (0..raw_header.len()).filter(|&j| !raw_header[j].is_empty()).collect();
    let header = keep.iter().map(|&j| raw_header[j].clone()).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != raw_header.len() {
            return Err(DataError::ParseError {
                row: i + 1,
                column: String::new(),
                message: format!("expected {} fields, found {}", raw_header.len(), record.len()),
            });
        }
        rows.push(keep.iter().map(|&j| record[j].to_owned()).collect());
    }
    Ok(RawTable { header, rows })
}

fn column_index(header: &[String], name: &str) -> Result<usize, DataError> {
    header.iter().position(|h| h == name).ok_or_else(|| DataError::MissingColumn(name.to_owned()))
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Expands covariate columns into a design matrix.
///
/// A column whose every cell is non-numeric is treated as categorical and
/// treatment-coded against its alphabetically first level. A column mixing
/// numbers and text is a parse error at the first offending row.
fn design_matrix(table: &RawTable, columns: &[usize]) -> Result<(Matrix, Vec<String>), DataError> {
    let n = table.rows.len();
    let mut blocks: Vec<(String, Vec<f64>)> = Vec::new();
    for &j in columns {
        let name = &table.header[j];
        let cells: Vec<&str> = table.rows.iter().map(|r| r[j].as_str()).collect();
        if let Some(i) = cells.iter().position(|c| is_missing(c)) {
            return Err(DataError::ParseError { row: i + 1, column: name.clone(), message: "missing value".into() });
        }
        let numeric: Vec<Option<f64>> = cells.iter().map(|c| parse_number(c)).collect();
        if numeric.iter().all(Option::is_some) {
            blocks.push((name.clone(), numeric.into_iter().map(Option::unwrap).collect()));
        } else if numeric.iter().any(Option::is_some) {
            let i = numeric.iter().position(Option::is_none).unwrap();
            return Err(DataError::ParseError {
                row: i + 1,
                column: name.clone(),
                message: format!("non-numeric value `{}`", cells[i]),
            });
        } else {
            let mut levels: Vec<&str> = cells.clone();
            levels.sort_unstable();
            levels.dedup();
            for level in levels.iter().skip(1) {
                let col = cells.iter().map(|c| if c == level { 1.0 } else { 0.0 }).collect();
                blocks.push((format!("{name}_{level}"), col));
            }
        }
    }
    let p = blocks.len();
    let mut x = Matrix::zeros(n, p);
    for (k, (_, col)) in blocks.iter().enumerate() {
        for i in 0..n {
            x[(i, k)] = col[i];
        }
    }
    Ok((x, blocks.into_iter().map(|(name, _)| name).collect()))
}

/// Loads a binary-outcome table.
///
/// With `positive_level = Some(level)` the label column may hold any two
/// values and `level` codes as 1. Without it, labels must be `0`/`1`.
/// All remaining named columns become covariates, in file order.
pub fn load_csv_binary(
    path: impl AsRef<Path>,
    label_column: &str,
    positive_level: Option<&str>,
) -> Result<LabeledDataset, DataError> {
    let table = read_table(path.as_ref())?;
    let label_j = column_index(&table.header, label_column)?;
    let mut y = Vec::with_capacity(table.rows.len());
    let mut seen: Vec<&str> = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let cell = row[label_j].as_str();
        if is_missing(cell) {
            return Err(DataError::ParseError { row: i + 1, column: label_column.into(), message: "missing label".into() });
        }
        if !seen.contains(&cell) {
            seen.push(cell);
            if seen.len() > 2 {
                return Err(DataError::NonBinaryLabel {
                    column: label_column.into(),
                    message: format!("more than two distinct values: {seen:?}"),
                });
            }
        }
        let label = match positive_level {
            Some(level) => cell == level,
            None => match parse_number(cell) {
                Some(1.0) => true,
                Some(0.0) => false,
                _ => {
                    return Err(DataError::NonBinaryLabel {
                        column: label_column.into(),
                        message: format!("value `{cell}` at row {} is not 0/1", i + 1),
                    })
                }
            },
        };
        y.push(label);
    }
    if let Some(level) = positive_level {
        if !seen.contains(&level) && !table.rows.is_empty() && seen.len() == 2 {
            return Err(DataError::NonBinaryLabel {
                column: label_column.into(),
                message: format!("positive level `{level}` not among {seen:?}"),
            });
        }
    }
    let covariates: Vec<usize> = (0..table.header.len()).filter(|&j| j != label_j).collect();
    let (x, names) = design_matrix(&table, &covariates)?;
    LabeledDataset::with_names(x, y, None, names)
}

/// Loads a right-censored survival table. The event column must be `0`/`1`
/// (1 = event) and times must be nonnegative.
pub fn load_csv_survival(
    path: impl AsRef<Path>,
    time_column: &str,
    event_column: &str,
) -> Result<SurvivalData, DataError> {
    let table = read_table(path.as_ref())?;
    let tj = column_index(&table.header, time_column)?;
    let ej = column_index(&table.header, event_column)?;
    let mut time = Vec::with_capacity(table.rows.len());
    let mut event = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let t = parse_number(&row[tj]).ok_or_else(|| DataError::ParseError {
            row: i + 1,
            column: time_column.into(),
            message: format!("time `{}` is not a number", row[tj]),
        })?;
        if t < 0.0 {
            return Err(DataError::ParseError {
                row: i + 1,
                column: time_column.into(),
                message: format!("negative time {t}"),
            });
        }
        time.push(t);
        event.push(match parse_number(&row[ej]) {
            Some(1.0) => true,
            Some(0.0) => false,
            _ => {
                return Err(DataError::NonBinaryLabel {
                    column: event_column.into(),
                    message: format!("value `{}` at row {} is not 0/1", row[ej], i + 1),
                })
            }
        });
    }
    let covariates: Vec<usize> = (0..table.header.len()).filter(|&j| j != tj && j != ej).collect();
    let (x, names) = design_matrix(&table, &covariates)?;
    SurvivalData::with_names(x, time, event, None, names)
}
