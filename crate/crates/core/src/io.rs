//! File formats: numeric CSV tables in, plot-ready CSV and versioned JSON
//! reports out. Numbers are written with 17 significant digits so that a
//! reload reproduces them exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bootstrap::ConfidenceInterval;
use crate::crossval::CvResult;
use crate::error::{Error, Result};
use crate::experiments::StudyResult;
use crate::field::FieldQualityReport;
use crate::mop::MopResult;
use crate::quality::LocalEstimate;
use crate::sampling::{Bounds, DesignMatrix, OutputVector};

pub const REPORT_SCHEMA: &str = "prognosis/1";
pub const MIN_ROWS: usize = 3;

/// Round-trip decimal representation with 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_optional(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

/// Rectangular numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub headers: Vec<String>,
    /// Row-major cells.
    pub rows: Vec<Vec<f64>>,
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let text = cell.trim();
    if text.is_empty() {
        return Err(Error::Data(format!("row {row}: empty cell in column '{column}'")));
    }
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Data(format!("row {row}: non-numeric cell '{text}' in column '{column}'")))
}

impl TabularDataset {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    /// Parses a headed CSV table. Row numbers in errors count data rows
    /// from 1, excluding the header.
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().any(String::is_empty) {
            return Err(Error::Data("header row has empty column names".into()));
        }
        for (i, h) in headers.iter().enumerate() {
            if headers[..i].contains(h) {
                return Err(Error::Data(format!("duplicate column name '{h}'")));
            }
        }
        let mut rows = Vec::new();
        for (i, record) in csv.records().enumerate() {
            let record = record?;
            let row = i + 1;
            if record.len() != headers.len() {
                return Err(Error::Data(format!("row {row}: {} cells, header has {}", record.len(), headers.len())));
            }
            rows.push(
                record
                    .iter()
                    .zip(&headers)
                    .map(|(cell, h)| parse_cell(cell, row, h))
                    .collect::<Result<Vec<f64>>>()?,
            );
        }
        if rows.len() < MIN_ROWS {
            return Err(Error::Data(format!("need at least {MIN_ROWS} data rows, found {}", rows.len())));
        }
        Ok(Self { headers, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("missing column '{name}'")))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Every column except the excluded ones, in file order.
    pub fn other_columns(&self, exclude: &[String]) -> Vec<String> {
        self.headers.iter().filter(|h| !exclude.contains(h)).cloned().collect()
    }

    /// Design over the named columns; bounds are the column ranges unless given.
    pub fn design(&self, inputs: &[String], bounds: Option<Bounds>) -> Result<DesignMatrix> {
        if inputs.is_empty() {
            return Err(Error::Argument("no input columns selected".into()));
        }
        let idx = inputs.iter().map(|c| self.column_index(c)).collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect();
        let bounds = match bounds {
            Some(b) if b.dim() != inputs.len() => {
                return Err(Error::Dimension(format!("bounds have {} dimensions, {} inputs selected", b.dim(), inputs.len())))
            }
            Some(b) => b,
            None => infer_bounds(&rows, inputs)?,
        };
        DesignMatrix::new(rows, bounds).map_err(|e| match e {
            Error::Design(msg) => Error::Data(msg),
            other => other,
        })
    }

    pub fn output(&self, name: &str) -> Result<OutputVector> {
        Ok(OutputVector::new(self.column(self.column_index(name)?)))
    }
}

fn infer_bounds(rows: &[Vec<f64>], names: &[String]) -> Result<Bounds> {
    let m = names.len();
    let mut lower = vec![f64::INFINITY; m];
    let mut upper = vec![f64::NEG_INFINITY; m];
    for r in rows {
        for j in 0..m {
            lower[j] = lower[j].min(r[j]);
            upper[j] = upper[j].max(r[j]);
        }
    }
    if let Some(j) = (0..m).find(|&j| lower[j] >= upper[j]) {
        return Err(Error::Data(format!("column '{}' is constant; pass explicit bounds", names[j])));
    }
    Bounds::new(lower, upper)
}

/// Loads a design and one output column. An empty input list selects every
/// other column.
pub fn load_csv(path: impl AsRef<Path>, inputs: &[String], output: &str, bounds: Option<Bounds>) -> Result<(DesignMatrix, OutputVector)> {
    let table = TabularDataset::read(path)?;
    let inputs = if inputs.is_empty() { table.other_columns(&[output.to_string()]) } else { inputs.to_vec() };
    if inputs.iter().any(|c| c == output) {
        return Err(Error::Argument(format!("column '{output}' is both input and output")));
    }
    Ok((table.design(&inputs, bounds)?, table.output(output)?))
}

/// Field table without a header: the first row holds the grid coordinates,
/// every following row one sample.
pub fn load_field_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut csv = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(file);
    let mut lines = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let label = if i == 0 { "grid".to_string() } else { format!("sample {i}") };
        let values = record
            .iter()
            .enumerate()
            .map(|(j, c)| parse_cell(c, i, &format!("{label}, position {}", j + 1)))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = lines.first().map(Vec::len) {
            if values.len() != first {
                return Err(Error::Data(format!("row {i}: {} values, grid has {first}", values.len())));
            }
        }
        lines.push(values);
    }
    if lines.len() < MIN_ROWS + 1 {
        return Err(Error::Data(format!("field file needs a grid row and at least {MIN_ROWS} samples")));
    }
    let grid = lines.remove(0);
    Ok((grid, lines))
}

/// Buffered writer on a new file.
pub fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    let path = path.as_ref();
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display()))))
}

fn write_rows<W: Write>(out: W, headers: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Design columns, optionally followed by one output column.
pub fn write_design<W: Write>(out: W, names: &[String], design: &DesignMatrix, output: Option<(&str, &OutputVector)>) -> Result<()> {
    if names.len() != design.cols() {
        return Err(Error::Dimension(format!("{} names for {} columns", names.len(), design.cols())));
    }
    let mut headers = names.to_vec();
    if let Some((name, y)) = output {
        if y.len() != design.rows() {
            return Err(Error::Dimension(format!("{} outputs for {} rows", y.len(), design.rows())));
        }
        headers.push(name.to_string());
    }
    let rows = (0..design.rows()).map(|i| {
        let mut r: Vec<String> = design.row(i).iter().map(|&v| format_number(v)).collect();
        if let Some((_, y)) = output {
            r.push(format_number(y.values[i]));
        }
        r
    });
    write_rows(out, &headers, rows)
}

/// Residual-plot data; points and folds are numbered from 1.
pub fn write_residuals<W: Write>(out: W, cv: &CvResult) -> Result<()> {
    let headers: Vec<String> = ["index", "y", "fitted", "cv_pred", "fit_residual", "cv_residual", "fold"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = (0..cv.n()).map(|i| {
        vec![
            (i + 1).to_string(),
            format_number(cv.y[i]),
            format_number(cv.fitted[i]),
            format_number(cv.cv_pred[i]),
            format_number(cv.fit_residuals[i]),
            format_number(cv.cv_residuals[i]),
            (cv.assignment.fold_of(i) + 1).to_string(),
        ]
    });
    write_rows(out, &headers, rows)
}

/// Local error lattice: point coordinates, then local RMSE and local CoP.
pub fn write_local_grid<W: Write>(out: W, names: &[String], points: &[Vec<f64>], estimates: &[LocalEstimate]) -> Result<()> {
    if points.len() != estimates.len() {
        return Err(Error::Dimension(format!("{} points, {} estimates", points.len(), estimates.len())));
    }
    let mut headers = names.to_vec();
    headers.extend(["local_rmse".to_string(), "local_cop".to_string()]);
    let rows = points.iter().zip(estimates).map(|(p, e)| {
        let mut r: Vec<String> = p.iter().map(|&v| format_number(v)).collect();
        r.push(format_number(e.rmse));
        r.push(format_number(e.cop));
        r
    });
    write_rows(out, &headers, rows)
}

/// Per-point field curves; failed points leave their cells empty.
pub fn write_field_curves<W: Write>(out: W, report: &FieldQualityReport) -> Result<()> {
    let headers: Vec<String> = ["t", "rmse_fit", "rmse_cv", "cod_stat", "cop_stat"].iter().map(|s| s.to_string()).collect();
    let rows = report.points.iter().map(|p| {
        vec![
            format_number(p.t),
            format_optional(p.rmse_fit),
            format_optional(p.rmse_cv),
            format_optional(p.cod_stat),
            format_optional(p.cop_stat),
        ]
    });
    write_rows(out, &headers, rows)
}

/// Study runs ordered by ascending CoP; `run` keeps the original index.
pub fn write_study<W: Write>(out: W, result: &StudyResult) -> Result<()> {
    let headers: Vec<String> = ["run", "cop", "ci_lo", "ci_hi", "cod_test", "dss_kfold", "dss_loo"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = result.sorted_by_cop().into_iter().map(|r| {
        vec![
            r.run.to_string(),
            format_number(r.cop),
            format_number(r.ci_lo),
            format_number(r.ci_hi),
            format_number(r.cod_test),
            format_number(r.dss_kfold),
            format_number(r.dss_loo),
        ]
    });
    write_rows(out, &headers, rows)
}

/// One output's line of the model-selection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MopTableRow {
    pub name: String,
    pub n: usize,
    pub model: String,
    pub k_inputs: usize,
    pub cop: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub cod_test: Option<f64>,
}

pub const MOP_TABLE_HEADER: [&str; 8] = ["name", "n", "model", "k_inputs", "cop", "ci_lo", "ci_hi", "cod_test"];

impl MopTableRow {
    pub fn new(name: &str, result: &MopResult, ci: &ConfidenceInterval, cod_test: Option<f64>) -> Result<Self> {
        let top = result
            .leaderboard
            .first()
            .ok_or_else(|| Error::Argument(format!("output '{name}' has an empty leaderboard")))?;
        Ok(Self {
            name: name.to_string(),
            n: result.winner_cv.n(),
            model: top.spec.label().to_string(),
            k_inputs: top.inputs.len(),
            cop: result.winner_report.cop,
            ci_lo: ci.lower,
            ci_hi: ci.upper,
            cod_test,
        })
    }
}

pub fn write_mop_table<W: Write>(out: W, rows: &[MopTableRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Argument("model-selection table has no rows".into()));
    }
    let headers: Vec<String> = MOP_TABLE_HEADER.iter().map(|s| s.to_string()).collect();
    let cells = rows.iter().map(|r| {
        vec![
            r.name.clone(),
            r.n.to_string(),
            r.model.clone(),
            r.k_inputs.to_string(),
            format_number(r.cop),
            format_number(r.ci_lo),
            format_number(r.ci_hi),
            format_optional(r.cod_test),
        ]
    });
    write_rows(out, &headers, cells)
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    schema: &'a str,
    kind: &'a str,
    report: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    schema: String,
    kind: String,
    report: T,
}

/// Writes `{"schema": "prognosis/1", "kind": …, "report": …}`.
pub fn write_report<W: Write, T: Serialize>(mut out: W, kind: &str, report: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &EnvelopeOut { schema: REPORT_SCHEMA, kind, report })?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Reads a report written by [`write_report`], returning its kind.
pub fn read_report<R: Read, T: DeserializeOwned>(input: R) -> Result<(String, T)> {
    let env: EnvelopeIn<T> = serde_json::from_reader(input)?;
    if env.schema != REPORT_SCHEMA {
        return Err(Error::Data(format!("unsupported report schema '{}'", env.schema)));
    }
    Ok((env.kind, env.report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI, 0.0] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_number(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn parses_toy_table() {
        let t = TabularDataset::from_reader("x,y\n0,1\n1,3\n2,5\n".as_bytes()).unwrap();
        assert_eq!(t.headers, vec!["x", "y"]);
        assert_eq!(t.rows, vec![vec![0.0, 1.0], vec![1.0, 3.0], vec![2.0, 5.0]]);
        let d = t.design(&["x".to_string()], None).unwrap();
        assert_eq!(d.bounds().lower(), &[0.0]);
        assert_eq!(d.bounds().upper(), &[2.0]);
    }

    #[test]
    fn table_errors() {
        let err = |text: &str| TabularDataset::from_reader(text.as_bytes()).unwrap_err().to_string();
        assert!(err("x,y\n0,1\n1,3\n").contains("at least 3"));
        assert!(err("x,y\n0,1\n1\n2,5\n").contains("row 2"));
        assert!(err("x,y\n0,1\n1,abc\n2,5\n").contains("row 2"));
        assert!(err("x,x\n0,1\n1,2\n2,5\n").contains("duplicate"));
        let t = TabularDataset::from_reader("x,y\n0,1\n1,3\n2,5\n".as_bytes()).unwrap();
        assert!(t.output("z").unwrap_err().to_string().contains("missing column"));
    }

    #[test]
    fn blank_cell_names_its_row() {
        let mut text = String::from("a,b\n");
        for i in 0..9 {
            if i == 6 {
                text.push_str("7,\n");
            } else {
                text.push_str(&format!("{i},{}\n", i * 2));
            }
        }
        let e = TabularDataset::from_reader(text.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("row 7") && e.contains("empty"), "{e}");
    }

    #[test]
    fn report_envelope_round_trip() {
        let values = vec![0.1, 1.0 / 3.0, -2.5e-17, 123456.789];
        let mut buf = Vec::new();
        write_report(&mut buf, "test", &values).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"schema\": \"prognosis/1\""));
        let (kind, back): (String, Vec<f64>) = read_report(buf.as_slice()).unwrap();
        assert_eq!(kind, "test");
        assert_eq!(back, values);
    }

    #[test]
    fn empty_table_is_rejected() {
        assert!(write_mop_table(Vec::new(), &[]).is_err());
    }
}
