//! Plain-text matrix and vector files.
//!
//! Dense: a header `m n` followed by `m` lines of `n` numbers. Sparse: a
//! header `m n nnz` followed by `nnz` lines `row col value` (0-based).
//! Vectors: a header `n` followed by one number per line. Numbers are written
//! in shortest round-trip form so reading back is bit-exact.

use std::io::{BufRead, Write};

use crate::{DenseMatrix, LinalgError, Matrix, Result, SparseColMatrix};

pub fn write_matrix<W: Write>(m: &Matrix, mut w: W) -> Result<()> {
    match m {
        Matrix::Dense(d) => {
            writeln!(w, "{} {}", d.rows(), d.cols())?;
            for i in 0..d.rows() {
                let line: Vec<String> = d.row(i).iter().map(|v| format!("{v:?}")).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
        Matrix::Sparse(s) => {
            writeln!(w, "{} {} {}", s.rows(), s.cols(), s.nnz())?;
            for (i, j, v) in s.triplets() {
                writeln!(w, "{i} {j} {v:?}")?;
            }
        }
    }
    Ok(())
}

pub fn write_vector<W: Write>(v: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "{}", v.len())?;
    for x in v {
        writeln!(w, "{x:?}")?;
    }
    Ok(())
}

fn tokens<R: BufRead>(r: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("");
        out.extend(line.split_whitespace().map(|t| (ln + 1, t.to_string())));
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(tok: Option<&(usize, String)>) -> Result<T> {
    let (line, t) = tok.ok_or(LinalgError::Parse { line: 0, msg: "unexpected end of input".into() })?;
    t.parse().map_err(|_| LinalgError::Parse { line: *line, msg: format!("cannot parse `{t}`") })
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<Matrix> {
    let toks = tokens(r)?;
    let header_line = toks.first().map(|t| t.0).unwrap_or(0);
    let header = toks.iter().take_while(|t| t.0 == header_line).count();
    let mut it = toks.iter();
    let m: usize = parse(it.next())?;
    let n: usize = parse(it.next())?;
    match header {
        2 => {
            let data = (0..m * n).map(|_| parse::<f64>(it.next())).collect::<Result<Vec<_>>>()?;
            if let Some((line, _)) = it.next() {
                return Err(LinalgError::Parse { line: *line, msg: "trailing data".into() });
            }
            Ok(Matrix::Dense(DenseMatrix::new(m, n, data)?))
        }
        3 => {
            let nnz: usize = parse(it.next())?;
            let mut trip = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let i: usize = parse(it.next())?;
                let j: usize = parse(it.next())?;
                let v: f64 = parse(it.next())?;
                trip.push((i, j, v));
            }
            if let Some((line, _)) = it.next() {
                return Err(LinalgError::Parse { line: *line, msg: "trailing data".into() });
            }
            Ok(Matrix::Sparse(SparseColMatrix::from_triplets(m, n, &trip)?))
        }
        k => Err(LinalgError::Parse { line: header_line, msg: format!("header has {k} fields") }),
    }
}

pub fn read_vector<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let toks = tokens(r)?;
    let mut it = toks.iter();
    let n: usize = parse(it.next())?;
    let v = (0..n).map(|_| parse::<f64>(it.next())).collect::<Result<Vec<_>>>()?;
    if let Some(k) = v.iter().position(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite(k));
    }
    Ok(v)
}
