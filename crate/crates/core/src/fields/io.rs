//! Plain-text field dump: a header describing the grid, then one node per
//! line as `s y_2 … y_n t value`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use super::{Axis, Grid, ScalarField};
use crate::error::{Error, Result};

const MAGIC: &str = "# scalar-field";

pub fn write_field<W: Write>(field: &ScalarField, mut out: W) -> Result<()> {
    let grid = field.grid();
    let n = grid.n();
    writeln!(out, "{MAGIC} n={n}")?;
    for k in 0..grid.num_axes() {
        let a = grid.axis(k);
        writeln!(out, "# axis {} {} {} {}", axis_name(k, n), a.lo(), a.hi(), a.len())?;
    }
    let names: Vec<String> = (0..grid.num_axes()).map(|k| axis_name(k, n)).collect();
    writeln!(out, "# columns {} value", names.join(" "))?;
    let mut buf = vec![0.0; grid.num_axes()];
    let mut line = String::new();
    for (idx, v) in field.values().iter().enumerate() {
        grid.coords_into(idx, &mut buf);
        line.clear();
        for c in &buf {
            line.push_str(&format!("{c:.16e} "));
        }
        line.push_str(&format!("{v:.16e}"));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn axis_name(k: usize, n: usize) -> String {
    match k {
        0 => "s".into(),
        k if k == n => "t".into(),
        k => format!("y{}", k + 1),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse().map_err(|_| Error::Parse { line, message: format!("bad number {tok:?}") })
}

pub fn read_field<R: BufRead>(input: R) -> Result<ScalarField> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })?;
    let first = first?;
    let n: usize = first
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.trim().strip_prefix("n="))
        .and_then(|v| v.parse().ok())
        .ok_or(Error::Parse { line: 1, message: "missing scalar-field header".into() })?;
    let mut axes = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (no, line) = lines.next().ok_or(Error::Parse { line: k + 2, message: "truncated header".into() })?;
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 6 || toks[1] != "axis" || toks[2] != axis_name(k, n) {
            return Err(Error::Parse { line: no + 1, message: format!("expected axis {}", axis_name(k, n)) });
        }
        let count: usize =
            toks[5].parse().map_err(|_| Error::Parse { line: no + 1, message: "bad node count".into() })?;
        axes.push(Axis::uniform(parse_f64(toks[3], no + 1)?, parse_f64(toks[4], no + 1)?, count)?);
    }
    let t = axes.pop().expect("n + 1 axes");
    let s = axes.remove(0);
    let grid = Arc::new(Grid::new(s, axes, t)?);
    let na = grid.num_axes();
    let mut values = Vec::with_capacity(grid.len());
    let mut buf = vec![0.0; na];
    for (no, line) in lines {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != na + 1 {
            return Err(Error::Parse { line: no + 1, message: format!("expected {} columns", na + 1) });
        }
        let idx = values.len();
        if idx >= grid.len() {
            return Err(Error::Parse { line: no + 1, message: "more rows than grid nodes".into() });
        }
        grid.coords_into(idx, &mut buf);
        for (k, tok) in toks[..na].iter().enumerate() {
            let c = parse_f64(tok, no + 1)?;
            if (c - buf[k]).abs() > 1e-12 * (1.0 + buf[k].abs()) {
                return Err(Error::Parse { line: no + 1, message: format!("coordinate {c} does not match node {}", buf[k]) });
            }
        }
        values.push(parse_f64(toks[na], no + 1)?);
    }
    if values.len() != grid.len() {
        return Err(Error::Parse { line: values.len(), message: format!("expected {} rows, got {}", grid.len(), values.len()) });
    }
    ScalarField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Arc::new(Grid::uniform(3, (0.0, 0.7, 5), (-0.3, 1.1, 4), (0.1, 0.9, 3)).unwrap());
        let f = ScalarField::sample(g, |x, y, t| (x * 7.1).sin() / 3.0 + y[0] * y[1] * 1e-9 + t.exp()).unwrap();
        let mut out = Vec::new();
        write_field(&f, &mut out).unwrap();
        let back = read_field(out.as_slice()).unwrap();
        assert_eq!(back.grid(), f.grid());
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_field("hello\n".as_bytes()).is_err());
        assert!(read_field("".as_bytes()).is_err());
    }
}
