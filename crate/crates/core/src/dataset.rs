//! Multivariate daily series: CSV ingestion, calendar alignment and the
//! stationarity-oriented transforms (differencing, z-scoring) applied before
//! estimation.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::stattests::pearson;

/// Column holding the observation date in every input file.
pub const DATE_COLUMN: &str = "Date";

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("column `{column}` not found in any of the input files")]
    MissingColumn { column: String },
    #[error("{path}: no `{DATE_COLUMN}` column in header")]
    MissingDateColumn { path: PathBuf },
    #[error("{path}: row {row}: `{value}` is not a YYYY-MM-DD date")]
    MalformedDate {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("{path}: date {date} appears more than once")]
    DuplicateDate { path: PathBuf, date: NaiveDate },
    #[error("{path}: column `{column}` has no parseable rows")]
    NoRows { path: PathBuf, column: String },
    #[error("at least {needed} series are required, got {got}")]
    TooFewSeries { needed: usize, got: usize },
    #[error("the input series share no common date")]
    EmptyIntersection,
    #[error("series too short: need at least {needed} rows, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("column `{name}` is constant")]
    ConstantColumn { name: String },
    #[error("variable name `{name}` is used twice")]
    DuplicateName { name: String },
    #[error("dates must be strictly increasing (row {row})")]
    UnsortedDates { row: usize },
    #[error("value at row {row}, column `{name}` is not finite")]
    NonFinite { row: usize, name: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

/// An aligned, gap-free `T × n` panel of observations with a date index.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset<T: Scalar> {
    names: Vec<String>,
    dates: Vec<NaiveDate>,
    values: DMatrix<T>,
}

impl<T: Scalar> TimeSeriesDataset<T> {
    pub fn new(
        names: Vec<String>,
        dates: Vec<NaiveDate>,
        values: DMatrix<T>,
    ) -> Result<Self, DatasetError> {
        if values.ncols() != names.len() {
            return Err(DatasetError::Shape(format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        if values.nrows() != dates.len() {
            return Err(DatasetError::Shape(format!(
                "{} dates for {} rows",
                dates.len(),
                values.nrows()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::DuplicateName { name: name.clone() });
            }
        }
        if let Some(row) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(DatasetError::UnsortedDates { row: row + 1 });
        }
        for (col, name) in names.iter().enumerate() {
            if let Some(row) = values.column(col).iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite {
                    row,
                    name: name.clone(),
                });
            }
        }
        Ok(Self {
            names,
            dates,
            values,
        })
    }

    /// Builds a dataset on a synthetic daily calendar starting 2000-01-01.
    pub fn from_matrix(names: Vec<String>, values: DMatrix<T>) -> Result<Self, DatasetError> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let dates = (0..values.nrows())
            .map(|i| start + Days::new(i as u64))
            .collect();
        Self::new(names, dates, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Observations, one row per date and one column per variable.
    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.column(j).iter().copied().collect()
    }

    /// Keeps rows with `start <= date <= end`.
    pub fn between(&self, start: NaiveDate, end: NaiveDate) -> Result<Self, DatasetError> {
        let rows: Vec<usize> = self
            .dates
            .iter()
            .enumerate()
            .filter(|(_, d)| **d >= start && **d <= end)
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            return Err(DatasetError::TooShort { needed: 1, got: 0 });
        }
        let values = self.values.select_rows(rows.iter());
        let dates = rows.iter().map(|&i| self.dates[i]).collect();
        Self::new(self.names.clone(), dates, values)
    }

    pub fn select(&self, names: &[&str]) -> Result<Self, DatasetError> {
        let cols = names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| DatasetError::UnknownVariable(n.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let values = self.values.select_columns(cols.iter());
        Self::new(
            names.iter().map(|s| s.to_string()).collect(),
            self.dates.clone(),
            values,
        )
    }

    pub fn cast<U: Scalar>(&self) -> TimeSeriesDataset<U> {
        TimeSeriesDataset {
            names: self.names.clone(),
            dates: self.dates.clone(),
            values: self.values.map(|v| U::of(v.as_f64())),
        }
    }
}

/// A single named level series as read from one input file.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<T>,
}

/// A data row whose target value could not be parsed as a finite number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub path: PathBuf,
    pub variable: String,
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub raw: String,
}

#[derive(Debug, Clone)]
pub struct Ingested<T> {
    pub series: Vec<Series<T>>,
    pub skipped: Vec<SkippedRow>,
}

pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let b = raw.as_bytes();
    let shape_ok = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b
            .iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit());
    if !shape_ok {
        return None;
    }
    NaiveDate::parse_from_str(raw, DATE_FORMAT).ok()
}

/// Reads one level series per entry of `variable_map` (variable name to
/// column header). Each column is looked up in the files in order; the first
/// file carrying it wins.
pub fn ingest_csv<T: Scalar, P: AsRef<Path>>(
    paths: &[P],
    variable_map: &BTreeMap<String, String>,
) -> Result<Ingested<T>, DatasetError> {
    let mut tables = Vec::with_capacity(paths.len());
    for path in paths {
        tables.push(read_table(path.as_ref())?);
    }

    let mut series = Vec::with_capacity(variable_map.len());
    let mut skipped = Vec::new();
    for (variable, column) in variable_map {
        let (table, col) = tables
            .iter()
            .find_map(|t| t.headers.iter().position(|h| h == column).map(|c| (t, c)))
            .ok_or_else(|| DatasetError::MissingColumn {
                column: column.clone(),
            })?;

        let mut points: Vec<(NaiveDate, T)> = Vec::with_capacity(table.rows.len());
        for (i, (date, record)) in table.rows.iter().enumerate() {
            let raw = record.get(col).map(|s| s.trim()).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => points.push((*date, T::of(v))),
                _ => skipped.push(SkippedRow {
                    path: table.path.clone(),
                    variable: variable.clone(),
                    row: i + 1,
                    raw: raw.to_string(),
                }),
            }
        }
        if points.is_empty() {
            return Err(DatasetError::NoRows {
                path: table.path.clone(),
                column: column.clone(),
            });
        }
        points.sort_by_key(|(d, _)| *d);
        let (dates, values) = points.into_iter().unzip();
        series.push(Series {
            name: variable.clone(),
            dates,
            values,
        });
    }
    Ok(Ingested { series, skipped })
}

struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<(NaiveDate, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<Table, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let date_col = headers
        .iter()
        .position(|h| h == DATE_COLUMN)
        .ok_or_else(|| DatasetError::MissingDateColumn {
            path: path.to_path_buf(),
        })?;

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let raw = record.get(date_col).unwrap_or("");
        let date = parse_date(raw).ok_or_else(|| DatasetError::MalformedDate {
            path: path.to_path_buf(),
            row: i + 1,
            value: raw.to_string(),
        })?;
        if !seen.insert(date) {
            return Err(DatasetError::DuplicateDate {
                path: path.to_path_buf(),
                date,
            });
        }
        rows.push((date, record.iter().map(str::to_string).collect()));
    }
    Ok(Table {
        path: path.to_path_buf(),
        headers,
        rows,
    })
}

/// How dates missing from some series are treated by [`align`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignPolicy {
    /// Keep only dates present in every series.
    #[default]
    Inner,
    /// Keep every date after all series have started, carrying the last
    /// observation forward.
    ForwardFill,
}

pub fn align<T: Scalar>(
    series: &[Series<T>],
    policy: AlignPolicy,
) -> Result<TimeSeriesDataset<T>, DatasetError> {
    if series.len() < 2 {
        return Err(DatasetError::TooFewSeries {
            needed: 2,
            got: series.len(),
        });
    }
    let lookups: Vec<BTreeMap<NaiveDate, T>> = series
        .iter()
        .map(|s| s.dates.iter().copied().zip(s.values.iter().copied()).collect())
        .collect();

    let dates: Vec<NaiveDate> = match policy {
        AlignPolicy::Inner => {
            let mut common: BTreeSet<NaiveDate> = lookups[0].keys().copied().collect();
            for l in &lookups[1..] {
                common.retain(|d| l.contains_key(d));
            }
            common.into_iter().collect()
        }
        AlignPolicy::ForwardFill => {
            let start = lookups
                .iter()
                .filter_map(|l| l.keys().next().copied())
                .max();
            let all: BTreeSet<NaiveDate> =
                lookups.iter().flat_map(|l| l.keys().copied()).collect();
            all.into_iter()
                .filter(|d| start.is_some_and(|s| *d >= s))
                .collect()
        }
    };
    if dates.is_empty() {
        return Err(DatasetError::EmptyIntersection);
    }

    let mut values = DMatrix::zeros(dates.len(), series.len());
    for (j, l) in lookups.iter().enumerate() {
        for (i, d) in dates.iter().enumerate() {
            // Forward fill: the last observation on or before `d` exists because
            // `d` is not earlier than every series' first date.
            let v = match policy {
                AlignPolicy::Inner => l[d],
                AlignPolicy::ForwardFill => *l.range(..=*d).next_back().expect("series started").1,
            };
            values[(i, j)] = v;
        }
    }
    TimeSeriesDataset::new(series.iter().map(|s| s.name.clone()).collect(), dates, values)
}

/// One recorded transformation, with everything needed to undo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformStep<T> {
    Difference {
        order: usize,
        /// Dates dropped from the front of the series.
        leading_dates: Vec<NaiveDate>,
        /// `initial[k][j]`: first value of the k-times differenced column j.
        initial: Vec<Vec<T>>,
    },
    Standardize { mean: Vec<T>, scale: Vec<T> },
}

/// Ordered record of transforms applied to a dataset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransformLog<T> {
    pub variables: Vec<String>,
    pub steps: Vec<TransformStep<T>>,
}

/// Per-variable view of one logged step.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableTransform<T> {
    Difference { order: usize },
    Standardize { mean: T, scale: T },
}

impl<T: Scalar> TransformLog<T> {
    pub fn then(mut self, other: TransformLog<T>) -> Self {
        if self.variables.is_empty() {
            self.variables = other.variables;
        }
        self.steps.extend(other.steps);
        self
    }

    pub fn for_variable(&self, name: &str) -> Option<Vec<VariableTransform<T>>> {
        let j = self.variables.iter().position(|v| v == name)?;
        Some(
            self.steps
                .iter()
                .map(|s| match s {
                    TransformStep::Difference { order, .. } => {
                        VariableTransform::Difference { order: *order }
                    }
                    TransformStep::Standardize { mean, scale } => VariableTransform::Standardize {
                        mean: mean[j],
                        scale: scale[j],
                    },
                })
                .collect(),
        )
    }

    /// Re-applies the logged steps to `raw` using the recorded parameters.
    pub fn replay(&self, raw: &TimeSeriesDataset<T>) -> Result<TimeSeriesDataset<T>, DatasetError> {
        let mut ds = raw.clone();
        for step in &self.steps {
            ds = match step {
                TransformStep::Difference { order, .. } => difference(&ds, *order)?.0,
                TransformStep::Standardize { mean, scale } => {
                    let mut values = ds.values.clone();
                    for (j, mut col) in values.column_iter_mut().enumerate() {
                        col.apply(|v| *v = (*v - mean[j]) / scale[j]);
                    }
                    TimeSeriesDataset::new(ds.names.clone(), ds.dates.clone(), values)?
                }
            };
        }
        Ok(ds)
    }

    /// Undoes every step in reverse, recovering the original levels.
    pub fn invert(
        &self,
        transformed: &TimeSeriesDataset<T>,
    ) -> Result<TimeSeriesDataset<T>, DatasetError> {
        let mut ds = transformed.clone();
        for step in self.steps.iter().rev() {
            ds = match step {
                TransformStep::Standardize { mean, scale } => {
                    let mut values = ds.values.clone();
                    for (j, mut col) in values.column_iter_mut().enumerate() {
                        col.apply(|v| *v = *v * scale[j] + mean[j]);
                    }
                    TimeSeriesDataset::new(ds.names.clone(), ds.dates.clone(), values)?
                }
                TransformStep::Difference {
                    order,
                    leading_dates,
                    initial,
                } => {
                    let mut values = ds.values.clone();
                    for k in (0..*order).rev() {
                        values = cumulate(&values, &initial[k]);
                    }
                    let mut dates = leading_dates.clone();
                    dates.extend_from_slice(&ds.dates);
                    TimeSeriesDataset::new(ds.names.clone(), dates, values)?
                }
            };
        }
        Ok(ds)
    }
}

fn cumulate<T: Scalar>(diffs: &DMatrix<T>, start: &[T]) -> DMatrix<T> {
    let (rows, cols) = diffs.shape();
    let mut out = DMatrix::zeros(rows + 1, cols);
    for j in 0..cols {
        out[(0, j)] = start[j];
        for i in 0..rows {
            out[(i + 1, j)] = out[(i, j)] + diffs[(i, j)];
        }
    }
    out
}

/// Applies `order` successive first differences to every column.
pub fn difference<T: Scalar>(
    ds: &TimeSeriesDataset<T>,
    order: usize,
) -> Result<(TimeSeriesDataset<T>, TransformLog<T>), DatasetError> {
    if ds.len() < order + 1 {
        return Err(DatasetError::TooShort {
            needed: order + 1,
            got: ds.len(),
        });
    }
    let mut values = ds.values.clone();
    let mut initial = Vec::with_capacity(order);
    for _ in 0..order {
        initial.push(values.row(0).iter().copied().collect());
        let rows = values.nrows();
        values = values.rows(1, rows - 1) - values.rows(0, rows - 1);
    }
    let out = TimeSeriesDataset::new(ds.names.clone(), ds.dates[order..].to_vec(), values)?;
    let log = TransformLog {
        variables: ds.names.clone(),
        steps: vec![TransformStep::Difference {
            order,
            leading_dates: ds.dates[..order].to_vec(),
            initial,
        }],
    };
    Ok((out, log))
}

/// Sample mean and standard deviation (n−1 denominator) of a column.
pub fn mean_and_sd<T: Scalar>(column: &[T]) -> (T, T) {
    let n = column.len();
    let nt = T::of(n as f64);
    let mean = column.iter().fold(T::zero(), |a, &v| a + v) / nt;
    if n < 2 {
        return (mean, T::zero());
    }
    let ss = column.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    (mean, (ss / T::of((n - 1) as f64)).sqrt())
}

/// Z-scores every column with the sample (n−1) standard deviation.
pub fn standardize<T: Scalar>(
    ds: &TimeSeriesDataset<T>,
) -> Result<(TimeSeriesDataset<T>, TransformLog<T>), DatasetError> {
    let n = ds.n_vars();
    let mut mean = Vec::with_capacity(n);
    let mut scale = Vec::with_capacity(n);
    let mut values = ds.values.clone();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let (m, sd) = mean_and_sd(col.as_slice());
        // Also rejects a NaN deviation.
        if sd.partial_cmp(&(T::rank_tolerance() * (T::one() + m.abs()))) != Some(std::cmp::Ordering::Greater) {
            return Err(DatasetError::ConstantColumn {
                name: ds.names[j].clone(),
            });
        }
        col.apply(|v| *v = (*v - m) / sd);
        mean.push(m);
        scale.push(sd);
    }
    let out = TimeSeriesDataset::new(ds.names.clone(), ds.dates.clone(), values)?;
    let log = TransformLog {
        variables: ds.names.clone(),
        steps: vec![TransformStep::Standardize { mean, scale }],
    };
    Ok((out, log))
}

/// Paired points `(cause(t − lag), effect(t))` and their Pearson correlation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterSummary<T> {
    pub cause: String,
    pub effect: String,
    pub lag: usize,
    #[serde(skip)]
    pub points: Vec<(T, T)>,
    /// `None` when either coordinate is constant.
    pub correlation: Option<f64>,
}

/// Scatter summaries for every ordered pair of variables (self pairs included)
/// at lags `0..=max_lag`.
pub fn linearity_diagnostics<T: Scalar>(
    ds: &TimeSeriesDataset<T>,
    max_lag: usize,
) -> Result<Vec<ScatterSummary<T>>, DatasetError> {
    if ds.len() <= max_lag + 2 {
        return Err(DatasetError::TooShort {
            needed: max_lag + 3,
            got: ds.len(),
        });
    }
    let t = ds.len();
    let mut out = Vec::with_capacity(ds.n_vars() * ds.n_vars() * (max_lag + 1));
    for cause in 0..ds.n_vars() {
        for effect in 0..ds.n_vars() {
            for lag in 0..=max_lag {
                let xs: Vec<T> = (lag..t).map(|i| ds.values[(i - lag, cause)]).collect();
                let ys: Vec<T> = (lag..t).map(|i| ds.values[(i, effect)]).collect();
                let correlation = pearson(
                    &xs.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
                    &ys.iter().map(|v| v.as_f64()).collect::<Vec<_>>(),
                );
                out.push(ScatterSummary {
                    cause: ds.names[cause].clone(),
                    effect: ds.names[effect].clone(),
                    lag,
                    points: xs.into_iter().zip(ys).collect(),
                    correlation,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn date(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    fn series(name: &str, dates: &[&str], values: &[f64]) -> Series<f64> {
        Series {
            name: name.into(),
            dates: dates.iter().map(|d| date(d)).collect(),
            values: values.to_vec(),
        }
    }

    fn one_col(values: &[f64]) -> TimeSeriesDataset<f64> {
        TimeSeriesDataset::from_matrix(
            vec!["x".into()],
            DMatrix::from_column_slice(values.len(), 1, values),
        )
        .unwrap()
    }

    fn write_csv(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn ingest_reads_values_in_date_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(&dir, "jgb.csv", "Date,Close\n2022-12-20,0.421\n2022-12-19,0.256\n");
        let got = ingest_csv::<f64, _>(&[p], &map(&[("Close_JGB", "Close")])).unwrap();
        assert_eq!(got.series.len(), 1);
        let s = &got.series[0];
        assert_eq!(s.dates, vec![date("2022-12-19"), date("2022-12-20")]);
        assert_eq!(s.values, vec![0.256, 0.421]);
        assert!(got.skipped.is_empty());
    }

    #[test]
    fn ingest_accepts_single_row_and_reports_unparsed_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(&dir, "a.csv", "Date,USD\n2022-01-03,115.2\n2022-01-04,n/a\n");
        let got = ingest_csv::<f64, _>(&[p], &map(&[("USD", "USD")])).unwrap();
        assert_eq!(got.series[0].values, vec![115.2]);
        assert_eq!(got.skipped.len(), 1);
        assert_eq!(got.skipped[0].row, 2);
        assert_eq!(got.skipped[0].raw, "n/a");
    }

    #[test]
    fn ingest_rejects_bad_dates_duplicates_and_missing_columns() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write_csv(&dir, "bad.csv", "Date,X\n2022-01-03,1\n2022-13-40,2\n");
        match ingest_csv::<f64, _>(&[bad], &map(&[("X", "X")])) {
            Err(DatasetError::MalformedDate { row, value, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(value, "2022-13-40");
            }
            other => panic!("expected malformed date, got {other:?}"),
        }
        let us = write_csv(&dir, "us.csv", "Date,X\n01/03/2022,1\n");
        assert!(matches!(
            ingest_csv::<f64, _>(&[us], &map(&[("X", "X")])),
            Err(DatasetError::MalformedDate { row: 1, .. })
        ));
        let dup = write_csv(&dir, "dup.csv", "Date,X\n2022-01-03,1\n2022-01-03,2\n");
        assert!(matches!(
            ingest_csv::<f64, _>(&[dup], &map(&[("X", "X")])),
            Err(DatasetError::DuplicateDate { .. })
        ));
        let ok = write_csv(&dir, "ok.csv", "Date,X\n2022-01-03,1\n");
        assert!(matches!(
            ingest_csv::<f64, _>(std::slice::from_ref(&ok), &map(&[("Y", "Y")])),
            Err(DatasetError::MissingColumn { .. })
        ));
        let empty = write_csv(&dir, "empty.csv", "Date,X\n2022-01-03,\n");
        assert!(matches!(
            ingest_csv::<f64, _>(&[empty], &map(&[("X", "X")])),
            Err(DatasetError::NoRows { .. })
        ));
    }

    #[test]
    fn align_identical_calendars_keeps_every_row() {
        let start = date("2021-07-01");
        let dates: Vec<NaiveDate> = (0..380).map(|i| start + Days::new(i)).collect();
        let a = Series {
            name: "a".into(),
            dates: dates.clone(),
            values: (0..380).map(|i| i as f64).collect(),
        };
        let b = Series {
            name: "b".into(),
            dates,
            values: (0..380).map(|i| -(i as f64)).collect(),
        };
        let ds = align(&[a, b], AlignPolicy::Inner).unwrap();
        assert_eq!(ds.len(), 380);
    }

    #[test]
    fn align_drops_dates_missing_from_any_series() {
        let cal_a = ["2022-01-03", "2022-01-04", "2022-01-05", "2022-01-06", "2022-01-07"];
        let cal_b = ["2022-01-04", "2022-01-05", "2022-01-06", "2022-01-07", "2022-01-10"];
        let a = series("a", &cal_a, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = series("b", &cal_b, &[6.0, 7.0, 8.0, 9.0, 10.0]);
        let ds = align(&[a, b], AlignPolicy::Inner).unwrap();

        let expected: Vec<NaiveDate> = cal_a
            .iter()
            .filter(|d| cal_b.contains(d))
            .map(|d| date(d))
            .collect();
        assert_eq!(ds.dates(), expected.as_slice());
        assert!(!ds.dates().contains(&date("2022-01-03")));
        assert_eq!(ds.values()[(0, 0)], 2.0);
        assert_eq!(ds.values()[(0, 1)], 6.0);
    }

    #[test]
    fn align_errors_on_disjoint_or_single_input() {
        let a = series("a", &["2022-01-03"], &[1.0]);
        let b = series("b", &["2022-01-04"], &[1.0]);
        assert!(matches!(
            align(&[a.clone(), b], AlignPolicy::Inner),
            Err(DatasetError::EmptyIntersection)
        ));
        assert!(matches!(
            align(&[a], AlignPolicy::Inner),
            Err(DatasetError::TooFewSeries { .. })
        ));
    }

    #[test]
    fn forward_fill_carries_last_value() {
        let a = series("a", &["2022-01-03", "2022-01-04", "2022-01-05"], &[1.0, 2.0, 3.0]);
        let b = series("b", &["2022-01-03", "2022-01-05"], &[10.0, 30.0]);
        let ds = align(&[a, b], AlignPolicy::ForwardFill).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.values()[(1, 1)], 10.0);
    }

    #[test]
    fn difference_examples() {
        let (d, _) = difference(&one_col(&[5.0, 5.0, 5.0]), 1).unwrap();
        assert_eq!(d.column(0), vec![0.0, 0.0]);
        let (d, _) = difference(&one_col(&[0.256, 0.421]), 1).unwrap();
        assert!((d.column(0)[0] - 0.165).abs() < 1e-12);
        let (d, _) = difference(&one_col(&[1.0, 2.0, 3.0, 4.0]), 1).unwrap();
        assert_eq!(d.column(0), vec![1.0, 1.0, 1.0]);
        assert!(matches!(
            difference(&one_col(&[1.0]), 1),
            Err(DatasetError::TooShort { .. })
        ));
    }

    #[test]
    fn second_order_difference_inverts() {
        let raw = one_col(&[1.0, 4.0, 9.0, 16.0, 25.0]);
        let (d, log) = difference(&raw, 2).unwrap();
        assert_eq!(d.column(0), vec![2.0, 2.0, 2.0]);
        assert_eq!(log.invert(&d).unwrap(), raw);
    }

    #[test]
    fn standardize_examples() {
        let (z, _) = standardize(&one_col(&[-1.0, 1.0])).unwrap();
        let c = z.column(0);
        assert!((c[0] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((c[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(
            standardize(&one_col(&[3.0, 3.0, 3.0])),
            Err(DatasetError::ConstantColumn { .. })
        ));
    }

    #[test]
    fn standardize_is_idempotent() {
        let raw = one_col(&[0.3, -1.2, 4.5, 2.2, 0.0, 7.1]);
        let (once, _) = standardize(&raw).unwrap();
        let (twice, _) = standardize(&once).unwrap();
        for (a, b) in once.values().iter().zip(twice.values().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn linearity_diagnostics_counts_and_perfect_line() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let mut m = DMatrix::zeros(20, 2);
        m.set_column(0, &nalgebra::DVector::from_vec(x));
        m.set_column(1, &nalgebra::DVector::from_vec(y));
        let ds = TimeSeriesDataset::from_matrix(vec!["x".into(), "y".into()], m).unwrap();
        let out = linearity_diagnostics(&ds, 3).unwrap();
        assert_eq!(out.len(), 2 * 2 * 4);
        let xy0 = out
            .iter()
            .find(|s| s.cause == "x" && s.effect == "y" && s.lag == 0)
            .unwrap();
        assert!((xy0.correlation.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(out.iter().find(|s| s.lag == 3).unwrap().points.len(), 17);
        assert!(linearity_diagnostics(&ds, 18).is_err());
    }

    #[test]
    fn dataset_rejects_invariant_violations() {
        let m = DMatrix::from_element(2, 2, 1.0);
        let d = vec![date("2022-01-03"), date("2022-01-03")];
        assert!(matches!(
            TimeSeriesDataset::new(vec!["a".into(), "b".into()], d, m.clone()),
            Err(DatasetError::UnsortedDates { .. })
        ));
        let d = vec![date("2022-01-03"), date("2022-01-04")];
        assert!(matches!(
            TimeSeriesDataset::new(vec!["a".into(), "a".into()], d, m),
            Err(DatasetError::DuplicateName { .. })
        ));
    }
}
