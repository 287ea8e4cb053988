//! CSV emission with C-style `%.12e` numbers, so files are byte-stable
//! across platforms and easy to diff.

use std::io::Write;

use crate::correlations::DecaySample;
use crate::error::{Error, Result};
use crate::protocols::{DecouplingReport, PovmDecouplingReport, TheoremTable};

/// `printf("%.12e")`: twelve fractional digits and an exponent of at least
/// two digits.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

/// Header plus rows of pre-formatted fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert!(row.len() == self.header.len() || row.len() == 2);
        self.rows.push(row);
    }

    /// Rows may be shorter than the header (trailing summary lines).
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = ::csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

fn csv_err(e: ::csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `sample,distance,bound`, closed by a `mean,bound` line.
pub fn decoupling_table(r: &DecouplingReport) -> Table {
    let mut t = Table::new(&["sample", "distance", "bound"]);
    for (i, d) in r.distances.iter().enumerate() {
        t.push(vec![i.to_string(), sci(*d), sci(r.bound)]);
    }
    t.push(vec![sci(r.mean), sci(r.bound)]);
    t
}

/// `sample,error,bound`, closed by a `best,bound` line.
pub fn merging_table(r: &PovmDecouplingReport) -> Table {
    let mut t = Table::new(&["sample", "error", "bound"]);
    for (i, e) in r.errors.iter().enumerate() {
        t.push(vec![i.to_string(), sci(*e), sci(r.bound)]);
    }
    t.push(vec![sci(r.best), sci(r.bound)]);
    t
}

pub fn theorem_table(r: &TheoremTable) -> Table {
    let mut t = Table::new(&["block_start", "block_len", "l", "eps", "hmax_lower", "hmax_upper"]);
    for row in &r.rows {
        t.push(vec![
            row.block_start.to_string(),
            row.block_len.to_string(),
            row.l.to_string(),
            sci(row.eps),
            sci(row.hmax_lower),
            sci(row.hmax_upper),
        ]);
    }
    t
}

/// `l,cor_lower,cor_upper,bound` with `bound = 2^(-l/xi)`.
pub fn decay_table(samples: &[DecaySample], xi: f64) -> Table {
    let mut t = Table::new(&["l", "cor_lower", "cor_upper", "bound"]);
    for s in samples {
        t.push(vec![s.l.to_string(), sci(s.lower), sci(s.upper), sci(crate::correlations::envelope(xi, s.l))]);
    }
    t
}
