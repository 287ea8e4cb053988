//! Text format for chain states:
//!
//! ```text
//! chainstate n=<n> d=<d> topology=<line|ring>
//! <index> <real> <imag>
//! ...
//! ```
//!
//! One line per nonzero amplitude; blank lines and lines starting with `#`
//! are ignored. Numbers use the shortest round-trip decimal form, so
//! write-then-read is exact.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexVector, ZERO};

use super::{ChainState, SiteState, Topology};

/// Norm slack accepted on input before renormalizing.
const READ_NORM_TOL: f64 = 1e-6;

pub fn write_chainstate<W: Write>(mut w: W, state: &ChainState) -> Result<()> {
    writeln!(w, "chainstate n={} d={} topology={}", state.num_sites(), state.site_dim(), state.topology())?;
    for (idx, a) in state.amplitudes().iter().enumerate() {
        if *a != ZERO {
            writeln!(w, "{idx} {} {}", a.re, a.im)?;
        }
    }
    Ok(())
}

pub fn read_chainstate<R: BufRead>(r: R) -> Result<ChainState> {
    let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#') => None,
        other => Some((i + 1, other)),
    });
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })?;
    let header = header?;
    let (n, d, topology) = parse_header(&header).map_err(|message| Error::Parse { line: hline, message })?;
    let dim = (d as u128)
        .checked_pow(n as u32)
        .filter(|&x| x <= 1 << 24)
        .ok_or(Error::Parse { line: hline, message: format!("dimension {d}^{n} too large") })? as usize;
    let mut amps = ComplexVector::from_element(dim, ZERO);
    for (line, text) in lines {
        let text = text?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        let bad = |message: String| Error::Parse { line, message };
        if fields.len() != 3 {
            return Err(bad(format!("expected 'index real imag', got {} fields", fields.len())));
        }
        let idx: usize = fields[0].parse().map_err(|e| bad(format!("index: {e}")))?;
        let re: f64 = fields[1].parse().map_err(|e| bad(format!("real part: {e}")))?;
        let im: f64 = fields[2].parse().map_err(|e| bad(format!("imaginary part: {e}")))?;
        if idx >= dim {
            return Err(bad(format!("index {idx} out of range for dimension {dim}")));
        }
        if !re.is_finite() || !im.is_finite() {
            return Err(bad("non-finite amplitude".into()));
        }
        amps[idx] = c(re, im);
    }
    let norm = amps.norm();
    if (norm - 1.0).abs() > READ_NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    if (norm - 1.0).abs() <= super::NORM_TOL {
        // already a valid state; rescaling would perturb the last bits
        ChainState::new(amps, n, d, topology)
    } else {
        ChainState::normalized(amps, n, d, topology)
    }
}

fn parse_header(header: &str) -> std::result::Result<(usize, usize, Topology), String> {
    let mut parts = header.split_whitespace();
    if parts.next() != Some("chainstate") {
        return Err("header must start with 'chainstate'".into());
    }
    let (mut n, mut d, mut topology) = (None, None, None);
    for part in parts {
        let (key, value) = part.split_once('=').ok_or_else(|| format!("malformed field '{part}'"))?;
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|e| format!("n: {e}"))?),
            "d" => d = Some(value.parse::<usize>().map_err(|e| format!("d: {e}"))?),
            "topology" => topology = Some(value.parse::<Topology>().map_err(|e| e.to_string())?),
            other => return Err(format!("unknown header field '{other}'")),
        }
    }
    match (n, d, topology) {
        (Some(n), Some(d), Some(t)) => Ok((n, d, t)),
        _ => Err("header needs n=, d= and topology=".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use crate::states::{ghz, haar_chain};

    #[test]
    fn round_trip_is_exact() {
        let s = haar_chain(5, 2, RngSeed::new(8)).unwrap().with_topology(Topology::Line);
        let mut buf = Vec::new();
        write_chainstate(&mut buf, &s).unwrap();
        let back = read_chainstate(buf.as_slice()).unwrap();
        assert_eq!(back.topology(), Topology::Line);
        assert_eq!(back.amplitudes(), s.amplitudes());
    }

    #[test]
    fn sparse_output() {
        let mut buf = Vec::new();
        write_chainstate(&mut buf, &ghz(3).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("chainstate n=3 d=2 topology=ring\n0 "));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "chainstate n=2 d=2 topology=ring\n0 1 0\n9 0 0\n";
        match read_chainstate(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_chainstate("chainstate n=2 d=2\n".as_bytes()).is_err());
        assert!(matches!(
            read_chainstate("chainstate n=2 d=2 topology=ring\n0 0.5 0\n".as_bytes()),
            Err(Error::NotNormalized(_))
        ));
    }
}
