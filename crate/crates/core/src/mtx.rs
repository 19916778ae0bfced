//! Matrix Market (`.mtx`) reading and writing for dense complex matrices.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
    Integer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn mtx_read(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    mtx_parse(&std::fs::read_to_string(path)?)
}

/// Parses Matrix Market text. Symmetric and Hermitian storage is mirrored.
pub fn mtx_parse(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, format!("bad header `{header}`")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported format `{other}`"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "complex" => Field::Complex,
        "integer" => Field::Integer,
        other => return Err(parse_err(1, format!("unsupported field `{other}`"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(parse_err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| parse_err(1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, format!("bad integer `{t}`"))))
        .collect::<Result<_>>()?;

    let value_width = if field == Field::Complex { 2 } else { 1 };
    let parse_value = |line: usize, toks: &[&str]| -> Result<C64> {
        if toks.len() != value_width {
            return Err(parse_err(line, format!("expected {value_width} value(s), found {}", toks.len())));
        }
        let num = |t: &str| t.parse::<f64>().map_err(|_| parse_err(line, format!("bad number `{t}`")));
        let re = num(toks[0])?;
        let im = if value_width == 2 { num(toks[1])? } else { 0.0 };
        let z = C64::new(re, im);
        if !z.is_finite() {
            return Err(Error::NonFinite(format!("line {line}")));
        }
        Ok(z)
    };

    let (rows, cols) = match (layout, dims.as_slice()) {
        (Layout::Coordinate, [r, c, _]) | (Layout::Array, [r, c]) => (*r, *c),
        _ => return Err(parse_err(size_line, "size line has the wrong number of fields")),
    };
    if rows == 0 || cols == 0 {
        return Err(parse_err(size_line, "empty matrix"));
    }
    if symmetry != Symmetry::General && rows != cols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    let mirror = |m: &mut ComplexMatrix, i: usize, j: usize, z: C64| {
        m[(i, j)] = z;
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => m[(j, i)] = z,
                Symmetry::Hermitian => m[(j, i)] = z.conj(),
            }
        }
    };

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for (line, l) in body {
                let toks: Vec<&str> = l.split_whitespace().collect();
                if toks.len() < 2 {
                    return Err(parse_err(line, "truncated entry"));
                }
                let idx = |t: &str, bound: usize| -> Result<usize> {
                    let v: usize = t.parse().map_err(|_| parse_err(line, format!("bad index `{t}`")))?;
                    if v == 0 || v > bound {
                        return Err(parse_err(line, format!("index {v} outside 1..={bound}")));
                    }
                    Ok(v - 1)
                };
                let (i, j) = (idx(toks[0], rows)?, idx(toks[1], cols)?);
                let z = parse_value(line, &toks[2..])?;
                mirror(&mut m, i, j, z);
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_line, format!("header declares {nnz} entries, found {seen}")));
            }
        }
        Layout::Array => {
            // column-major; symmetric storage lists only the lower triangle
            let slots: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| {
                    let start = if symmetry == Symmetry::General { 0 } else { j };
                    (start..rows).map(move |i| (i, j))
                })
                .collect();
            let mut seen = 0;
            for (line, l) in body {
                let toks: Vec<&str> = l.split_whitespace().collect();
                let z = parse_value(line, &toks)?;
                let &(i, j) =
                    slots.get(seen).ok_or_else(|| parse_err(line, format!("more than {} values", slots.len())))?;
                mirror(&mut m, i, j, z);
                seen += 1;
            }
            if seen != slots.len() {
                return Err(parse_err(size_line, format!("expected {} values, found {seen}", slots.len())));
            }
        }
    }
    Ok(m)
}

/// Array-format text, real field when every entry is real. Values use the
/// shortest round-trip representation, so parsing restores them exactly.
pub fn mtx_format(a: &ComplexMatrix) -> String {
    let real = a.as_slice().iter().all(|z| z.im == 0.0);
    let mut out = format!("%%MatrixMarket matrix array {} general\n", if real { "real" } else { "complex" });
    let _ = writeln!(out, "{} {}", a.rows(), a.cols());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            let z = a[(i, j)];
            let _ = if real { writeln!(out, "{:e}", z.re) } else { writeln!(out, "{:e} {:e}", z.re, z.im) };
        }
    }
    out
}

pub fn mtx_write(path: impl AsRef<Path>, a: &ComplexMatrix) -> Result<()> {
    std::fs::write(path, mtx_format(a))?;
    Ok(())
}

/// Number of stored nonzeros, for comparison against a coordinate header.
pub fn count_nonzeros(a: &ComplexMatrix) -> usize {
    a.as_slice().iter().filter(|&&z| z != ZERO).count()
}
