//! File formats: timing samples, expected-time curves, numeric formatting.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expected_time::EtResult;
use crate::mle::TimingSamples;

/// `%.12g`-style rendering: 12 significant digits, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TimingRow {
    task_id: String,
    t1: f64,
    t2: f64,
}

/// Reads a `task_id,t1,t2` CSV.
pub fn read_timings<R: Read>(reader: R) -> Result<TimingSamples> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["task_id", "t1", "t2"] {
        return Err(Error::Parse(format!("timing CSV header must be task_id,t1,t2, got {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut pairs = Vec::new();
    let mut ids = Vec::new();
    for row in rdr.deserialize() {
        let row: TimingRow = row?;
        pairs.push((row.t1, row.t2));
        ids.push(row.task_id);
    }
    TimingSamples::with_ids(pairs, ids)
}

pub fn load_timings(path: &Path) -> Result<TimingSamples> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    read_timings(file)
}

pub fn write_timings<W: Write>(writer: W, samples: &TimingSamples) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["task_id", "t1", "t2"])?;
    for (id, &(x, y)) in samples.task_ids().iter().zip(samples.pairs()) {
        w.write_record([id.as_str(), &fmt_num(x), &fmt_num(y)])?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// One evaluated point of an expected-time curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub tau: f64,
    pub result: EtResult,
}

/// Writes `tau,et,method,stderr,divergent`; divergent rows leave `et` empty.
pub fn write_curve<W: Write>(writer: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["tau", "et", "method", "stderr", "divergent"])?;
    for p in points {
        let et = p.result.finite().map(fmt_num).unwrap_or_default();
        let stderr = p.result.stderr.map(fmt_num).unwrap_or_default();
        let divergent = if p.result.value.is_divergent() { "true" } else { "false" };
        w.write_record([fmt_num(p.tau), et, p.result.method.to_string(), stderr, divergent.into()])?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Parses `lo:hi:step` into the grid `lo, lo+step, …` up to `hi` inclusive (with rounding slack).
pub fn parse_tau_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Parse(format!("tau grid '{spec}': expected LO:HI:STEP"));
    let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    let [lo, hi, step] = parts[..] else { return Err(bad()) };
    if !(lo.is_finite() && hi.is_finite() && step > 0.0 && hi >= lo) {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Expectation;
    use crate::expected_time::EtMethod;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_num(4.0), "4");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(2.854_071_234_567_89), "2.85407123457");
        assert_eq!(fmt_num(-1.5e-7), "-1.5e-07");
        assert_eq!(fmt_num(123_456_789_012_345.0), "1.23456789012e+14");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(99_999_999_999.99), "100000000000");
        assert_eq!(fmt_num(99_999_999_999.4), "99999999999.4");
        assert_eq!(fmt_num(999_999_999_999.9), "1e+12");
    }

    #[test]
    fn timings_round_trip() {
        let s = TimingSamples::with_ids(vec![(1.5, 2.0), (0.25, 3.0)], vec!["a".into(), "b".into()]).unwrap();
        let mut buf = Vec::new();
        write_timings(&mut buf, &s).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "task_id,t1,t2\na,1.5,2\nb,0.25,3\n");
        assert_eq!(read_timings(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn timings_errors() {
        assert!(matches!(read_timings("id,x,y\n1,2,3\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_timings("task_id,t1,t2\n1,abc,3\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_timings("task_id,t1,t2\n1,-1,3\n".as_bytes()), Err(Error::Domain(_))));
        assert!(read_timings("task_id,t1,t2\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn curve_rows() {
        let pts = [
            CurvePoint { tau: 0.5, result: EtResult::exact(1.0, EtMethod::ClosedForm) },
            CurvePoint { tau: 1.0, result: EtResult::divergent(EtMethod::Quadrature) },
            CurvePoint {
                tau: 2.0,
                result: EtResult { value: Expectation::Finite(2.5), method: EtMethod::MonteCarlo, stderr: Some(0.01) },
            },
        ];
        let mut buf = Vec::new();
        write_curve(&mut buf, &pts).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "tau,et,method,stderr,divergent\n0.5,1,closed_form,,false\n1,,quadrature,,true\n2,2.5,monte_carlo,0.01,false\n"
        );
    }

    #[test]
    fn tau_grids() {
        assert_eq!(parse_tau_grid("0:10:0.25").unwrap().len(), 41);
        assert_eq!(parse_tau_grid("0:1:0.1").unwrap().len(), 11);
        assert!(parse_tau_grid("0:1").is_err());
        assert!(parse_tau_grid("1:0:0.1").is_err());
    }
}
