//! Flat CSV for fields and curves, JSON for everything else.
//!
//! Floats are written with 17 significant digits, which reloads every finite `f64`
//! bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, RectDomain};
use crate::solvers::BifurcationCurve;

/// JSON companion of a field CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub a: f64,
    pub b: f64,
    pub nx: usize,
    pub ny: usize,
}

impl FieldHeader {
    pub fn of(dom: &RectDomain) -> Self {
        FieldHeader {
            a: dom.width,
            b: dom.height,
            nx: dom.nx,
            ny: dom.ny,
        }
    }

    pub fn domain(&self) -> Result<RectDomain> {
        RectDomain::new(self.a, self.b, self.nx, self.ny)
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Rows `x,y,value` in storage order.
pub fn write_field_csv<W: Write>(out: W, field: &Field, dom: &RectDomain) -> Result<()> {
    field.check(dom)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "value"]).map_err(csv_err)?;
    for (k, v) in field.values().iter().enumerate() {
        let (x, y) = dom.coords(k);
        w.write_record([fmt_f64(x), fmt_f64(y), fmt_f64(*v)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_field_csv`]; the node coordinates must match `dom`.
pub fn read_field_csv<R: Read>(input: R, dom: &RectDomain) -> Result<Field> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "value"] {
        return Err(Error::Parse(format!("expected header x,y,value, got {headers:?}")));
    }
    let mut values = Vec::with_capacity(dom.len());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Parse(format!("row {k}: missing column {i}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {k}: {e}")))
        };
        if k >= dom.len() {
            return Err(Error::DimensionMismatch {
                expected: dom.len(),
                got: k + 1,
            });
        }
        let (x, y) = dom.coords(k);
        let tol = 1e-12 * (dom.width + dom.height);
        if (num(0)? - x).abs() > tol || (num(1)? - y).abs() > tol {
            return Err(Error::Parse(format!("row {k}: coordinates do not match the grid")));
        }
        values.push(num(2)?);
    }
    Field::from_values(dom, values)
}

/// Writes `<path>` as CSV and `<path>` with extension `json` as its header.
pub fn save_field(path: &Path, field: &Field, dom: &RectDomain) -> Result<()> {
    write_field_csv(BufWriter::new(File::create(path)?), field, dom)?;
    write_json(&path.with_extension("json"), &FieldHeader::of(dom))
}

pub fn load_field(path: &Path) -> Result<(Field, RectDomain)> {
    let header: FieldHeader = serde_json::from_reader(File::open(path.with_extension("json"))?)?;
    let dom = header.domain()?;
    Ok((read_field_csv(File::open(path)?, &dom)?, dom))
}

/// Columns `mu,lambda_star,lambda_ub,evidence`; a missing bound is an empty cell.
pub fn write_curve_csv<W: Write>(out: W, curve: &BifurcationCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mu", "lambda_star", "lambda_ub", "evidence"]).map_err(csv_err)?;
    for p in &curve.points {
        w.write_record([
            fmt_f64(p.mu),
            fmt_f64(p.lambda_star),
            p.lambda_ub.map(fmt_f64).unwrap_or_default(),
            format!("{:?}", p.evidence),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Exponents;
    use crate::solvers::{CurvePoint, Evidence};

    #[test]
    fn field_csv_roundtrip_is_bitwise() {
        let dom = RectDomain::new(1.5, 0.7, 5, 4).unwrap();
        let f = Field::from_fn(&dom, |x, y| (x * 1e-7 + y).exp() / 3.0 - 0.2);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f, &dom).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y,value\n"));
        assert_eq!(text.lines().count(), 21);
        assert_eq!(read_field_csv(buf.as_slice(), &dom).unwrap(), f);
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let dom = RectDomain::unit_square(3).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &dom.sine_mode(1, 1), &dom).unwrap();
        let other = RectDomain::unit_square(4).unwrap();
        assert!(read_field_csv(buf.as_slice(), &other).is_err());
        assert!(read_field_csv("a,b\n1,2\n".as_bytes(), &dom).is_err());
    }

    #[test]
    fn curve_csv_columns() {
        let curve = BifurcationCurve {
            exps: Exponents::new(3.0, 2.0, 0.25, 0.5).unwrap(),
            lambda1: 19.7,
            points: vec![
                CurvePoint { mu: 0.0, lambda_star: 88.5, lambda_ub: None, evidence: Evidence::OneSolution, lambda_fail: Some(89.0), probes: 11 },
                CurvePoint { mu: 0.2, lambda_star: 0.0, lambda_ub: Some(2964.0), evidence: Evidence::NotDetected, lambda_fail: None, probes: 20 },
            ],
        };
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &curve).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mu,lambda_star,lambda_ub,evidence");
        assert_eq!(lines[1], "0.0000000000000000e0,8.8500000000000000e1,,OneSolution");
        assert!(lines[2].ends_with(",2.9640000000000000e3,NotDetected"));
    }

    #[test]
    fn save_and_load() {
        let dir = std::env::temp_dir().join(format!("hamvar-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let dom = RectDomain::unit_square(6).unwrap();
        let f = dom.sine_mode(2, 1).scaled(0.3);
        let path = dir.join("v.csv");
        save_field(&path, &f, &dom).unwrap();
        let (g, d) = load_field(&path).unwrap();
        assert_eq!((g, d), (f, dom));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
