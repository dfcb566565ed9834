//! Report rows and their CSV encoding.
//!
//! Column order is frozen: `experiment, tag, t, exact, predicted,
//! normalized_error, method, stderr`. Floats carry 17 significant digits; an
//! empty cell means "not defined for this row".

use std::io::{Read, Write};

use crate::asymptotics::Formula;
use crate::kolmogorov::Provenance;

pub const COLUMNS: [&str; 8] = ["experiment", "tag", "t", "exact", "predicted", "normalized_error", "method", "stderr"];

/// Where the `exact` column came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ode,
    Oracle,
    Mc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ode => "ode",
            Method::Oracle => "oracle",
            Method::Mc => "mc",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "ode" => Some(Method::Ode),
            "oracle" => Some(Method::Oracle),
            "mc" => Some(Method::Mc),
            _ => None,
        }
    }
}

impl From<Provenance> for Method {
    fn from(p: Provenance) -> Self {
        match p {
            Provenance::Ode => Method::Ode,
            Provenance::Oracle => Method::Oracle,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub formula: Formula,
    pub t: f64,
    pub exact: f64,
    pub predicted: Option<f64>,
    pub normalized_error: Option<f64>,
    pub method: Method,
    /// Monte Carlo rows only.
    pub stderr: Option<f64>,
}

impl ReportRow {
    pub fn new(experiment: impl Into<String>, formula: Formula, t: f64, exact: f64, method: Method) -> Self {
        ReportRow {
            experiment: experiment.into(),
            formula,
            t,
            exact,
            predicted: None,
            normalized_error: None,
            method,
            stderr: None,
        }
    }

    pub fn predicted(mut self, v: f64) -> Self {
        self.predicted = Some(v);
        self
    }

    pub fn normalized(mut self, v: f64) -> Self {
        self.normalized_error = Some(v);
        self
    }

    pub fn stderr(mut self, v: f64) -> Self {
        self.stderr = Some(v);
        self
    }

    fn fields(&self) -> [String; 8] {
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        [
            self.experiment.clone(),
            self.formula.tag().to_string(),
            fmt_float(self.t),
            fmt_float(self.exact),
            opt(self.predicted),
            opt(self.normalized_error),
            self.method.as_str().to_string(),
            opt(self.stderr),
        ]
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_rows<W: Write>(out: W, rows: &[ReportRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },
}

/// Parses a report written by [`write_rows`], checking the frozen header.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<ReportRow>, ReadError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(ReadError::Schema {
            row: 0,
            message: format!("header {:?} does not match {:?}", header.iter().collect::<Vec<_>>(), COLUMNS),
        });
    }
    let mut rows = Vec::new();
    for (idx, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = idx + 1;
        let bad = |message: String| ReadError::Schema { row, message };
        let num = |i: usize| -> Result<Option<f64>, ReadError> {
            let s = &rec[i];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| bad(format!("column `{}`: not a number: `{s}`", COLUMNS[i])))
        };
        let formula = Formula::from_tag(&rec[1]).ok_or_else(|| bad(format!("unknown tag `{}`", &rec[1])))?;
        let method = Method::parse(&rec[6]).ok_or_else(|| bad(format!("unknown method `{}`", &rec[6])))?;
        rows.push(ReportRow {
            experiment: rec[0].to_string(),
            formula,
            t: num(2)?.ok_or_else(|| bad("missing t".into()))?,
            exact: num(3)?.ok_or_else(|| bad("missing exact".into()))?,
            predicted: num(4)?,
            normalized_error: num(5)?,
            method,
            stderr: num(7)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, 6.02214076e23, -0.0] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            assert_eq!(s.trim_start_matches('-').split('e').next().unwrap().len(), 18);
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            ReportRow::new("solve/s=0", Formula::LeadingOrder, 1.0, 0.444, Method::Ode).predicted(0.5).normalized(-0.1),
            ReportRow::new("sim, quoted", Formula::MonteCarlo, 2.0, 0.25, Method::Mc).stderr(0.001),
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("experiment,tag,t,exact,predicted,normalized_error,method,stderr\n"));
        assert_eq!(read_rows(&buf[..]).unwrap(), rows);
        assert!(read_rows("a,b\n1,2\n".as_bytes()).is_err());
    }
}
