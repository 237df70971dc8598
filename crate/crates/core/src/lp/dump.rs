//! Plain-text sparse triplet dump of an LP.
//!
//! ```text
//! <rows> <cols> <nnz>
//! <i> <j> <v>            nnz lines; equality rows first, then inequality rows
//! rows
//! <i> <E|L> <rhs>        one line per row; L means "≤"
//! bounds
//! <j> <lower> <upper> <name>
//! objective
//! <j> <c>                maximized
//! ```
//! Values use Rust's shortest round-trip float formatting, so parsing a dump
//! reproduces the problem bit for bit. Infinite bounds are written `inf`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{CscMatrix, StandardFormLP};
use crate::error::{Error, Result};

pub fn write_triplet_dump(lp: &StandardFormLP) -> String {
    let m_eq = lp.eq_matrix.nrows;
    let rows = m_eq + lp.ineq_matrix.nrows;
    let nnz = lp.eq_matrix.nnz() + lp.ineq_matrix.nnz();
    let mut out = String::new();
    let _ = writeln!(out, "{rows} {} {nnz}", lp.num_vars());
    for (i, j, v) in lp.eq_matrix.triplets() {
        let _ = writeln!(out, "{i} {j} {v}");
    }
    for (i, j, v) in lp.ineq_matrix.triplets() {
        let _ = writeln!(out, "{} {j} {v}", i + m_eq);
    }
    out.push_str("rows\n");
    for (i, v) in lp.eq_rhs.iter().enumerate() {
        let _ = writeln!(out, "{i} E {v}");
    }
    for (i, v) in lp.ineq_rhs.iter().enumerate() {
        let _ = writeln!(out, "{} L {v}", i + m_eq);
    }
    out.push_str("bounds\n");
    for j in 0..lp.num_vars() {
        let name = lp.variable_names.get(j).map(String::as_str).filter(|s| !s.is_empty()).unwrap_or("-");
        let _ = writeln!(out, "{j} {} {} {name}", lp.lower_bounds[j], lp.upper_bounds[j]);
    }
    out.push_str("objective\n");
    for (j, c) in lp.objective.iter().enumerate() {
        if *c != 0.0 {
            let _ = writeln!(out, "{j} {c}");
        }
    }
    out
}

fn bad(line: usize, what: &str) -> Error {
    Error::invalid(format!("dump line {}: {what}", line + 1))
}

fn field<T: core::str::FromStr>(parts: &[&str], k: usize, line: usize) -> Result<T> {
    parts.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| bad(line, "malformed field"))
}

fn expect<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, name: &str) -> Result<()> {
    match lines.next() {
        Some((_, l)) if l.trim() == name => Ok(()),
        Some((ln, _)) => Err(bad(ln, &format!("expected section '{name}'"))),
        None => Err(Error::invalid(format!("missing section '{name}'"))),
    }
}

pub fn parse_triplet_dump(text: &str) -> Result<StandardFormLP> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| Error::invalid("empty dump"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let rows: usize = field(&h, 0, hl)?;
    let cols: usize = field(&h, 1, hl)?;
    let nnz: usize = field(&h, 2, hl)?;

    let mut trip = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let (ln, l) = lines.next().ok_or_else(|| Error::invalid("dump ends inside triplets"))?;
        let p: Vec<&str> = l.split_whitespace().collect();
        let (i, j, v): (usize, usize, f64) = (field(&p, 0, ln)?, field(&p, 1, ln)?, field(&p, 2, ln)?);
        if i >= rows || j >= cols {
            return Err(bad(ln, "index out of range"));
        }
        trip.push((i, j, v));
    }
    expect(&mut lines, "rows")?;
    let mut kinds = Vec::with_capacity(rows);
    for _ in 0..rows {
        let (ln, l) = lines.next().ok_or_else(|| Error::invalid("dump ends inside rows"))?;
        let p: Vec<&str> = l.split_whitespace().collect();
        let kind = match p.get(1) {
            Some(&"E") => true,
            Some(&"L") => false,
            _ => return Err(bad(ln, "row kind must be E or L")),
        };
        kinds.push((kind, field::<f64>(&p, 2, ln)?));
    }
    let m_eq = kinds.iter().take_while(|k| k.0).count();
    if kinds[m_eq..].iter().any(|k| k.0) {
        return Err(Error::invalid("equality rows must precede inequality rows"));
    }
    expect(&mut lines, "bounds")?;
    let mut lower = Vec::with_capacity(cols);
    let mut upper = Vec::with_capacity(cols);
    let mut names = Vec::with_capacity(cols);
    for _ in 0..cols {
        let (ln, l) = lines.next().ok_or_else(|| Error::invalid("dump ends inside bounds"))?;
        let p: Vec<&str> = l.split_whitespace().collect();
        lower.push(field::<f64>(&p, 1, ln)?);
        upper.push(field::<f64>(&p, 2, ln)?);
        names.push(match p.get(3) {
            Some(&"-") | None => String::new(),
            Some(s) => s.to_string(),
        });
    }
    expect(&mut lines, "objective")?;
    let mut objective = alloc::vec![0.0; cols];
    for (ln, l) in lines {
        let p: Vec<&str> = l.split_whitespace().collect();
        let j: usize = field(&p, 0, ln)?;
        if j >= cols {
            return Err(bad(ln, "objective index out of range"));
        }
        objective[j] = field(&p, 1, ln)?;
    }
    let (eq_t, in_t): (Vec<_>, Vec<_>) = trip.into_iter().partition(|t| t.0 < m_eq);
    let in_t: Vec<_> = in_t.into_iter().map(|(i, j, v)| (i - m_eq, j, v)).collect();
    let lp = StandardFormLP {
        objective,
        eq_matrix: CscMatrix::from_triplets(m_eq, cols, &eq_t),
        eq_rhs: kinds[..m_eq].iter().map(|k| k.1).collect(),
        ineq_matrix: CscMatrix::from_triplets(rows - m_eq, cols, &in_t),
        ineq_rhs: kinds[m_eq..].iter().map(|k| k.1).collect(),
        lower_bounds: lower,
        upper_bounds: upper,
        variable_names: names,
    };
    lp.validate()?;
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn round_trip_is_exact() {
        let lp = StandardFormLP {
            objective: vec![3.0, 0.1 + 0.2],
            eq_matrix: CscMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0 / 3.0)]),
            eq_rhs: vec![0.5],
            ineq_matrix: CscMatrix::from_triplets(1, 2, &[(0, 1, 2.0)]),
            ineq_rhs: vec![4.0],
            lower_bounds: vec![0.0, f64::NEG_INFINITY],
            upper_bounds: vec![f64::INFINITY, 7.0],
            variable_names: vec!["a".into(), String::new()],
        };
        let text = write_triplet_dump(&lp);
        assert!(text.starts_with("2 2 3\n"));
        assert_eq!(parse_triplet_dump(&text).unwrap(), lp);
    }

    #[test]
    fn truncated_dump_is_rejected() {
        assert!(parse_triplet_dump("1 1 1\n0 0 1\nrows\n").is_err());
    }
}
