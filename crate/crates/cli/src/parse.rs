//! Parsers for the compact command-line notations: complex scalars,
//! bracketed Toeplitz stencils, real lists and index ranges.

use anyhow::{anyhow, bail, Context, Result};
use faber_decay::{ToeplitzSpec, C64};

/// Parses `3`, `-2.5`, `i`, `-i`, `0.9i`, `3+3i`, `3i+3`, `1e-3-2e-1i`.
pub fn parse_complex(text: &str) -> Result<C64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        bail!("empty complex number");
    }
    // split at signs that are not part of an exponent
    let bytes = s.as_bytes();
    let mut terms = Vec::new();
    let mut start = 0;
    for i in 1..bytes.len() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            terms.push(&s[start..i]);
            start = i;
        }
    }
    terms.push(&s[start..]);
    let mut z = C64::new(0.0, 0.0);
    for term in terms {
        if let Some(coef) = term.strip_suffix(['i', 'j']) {
            let v = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().with_context(|| format!("bad imaginary part '{term}' in '{text}'"))?,
            };
            z.im += v;
        } else {
            z.re += term.parse::<f64>().with_context(|| format!("bad real part '{term}' in '{text}'"))?;
        }
    }
    Ok(z)
}

/// Parses a stencil such as `-i,[i],-2`; the bracketed value sits on the diagonal.
pub fn parse_stencil(text: &str, n: usize) -> Result<ToeplitzSpec> {
    let mut stencil = Vec::new();
    let mut diag = None;
    for (k, item) in text.split(',').enumerate() {
        let item = item.trim();
        let value = match item.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
            Some(inner) => {
                if diag.replace(k).is_some() {
                    bail!("stencil '{text}' marks more than one diagonal value");
                }
                inner
            }
            None => item,
        };
        stencil.push(parse_complex(value)?);
    }
    let diag_index = match (diag, stencil.len()) {
        (Some(d), _) => d,
        (None, 1) => 0,
        (None, _) => bail!("stencil '{text}' needs its diagonal value in brackets, e.g. -i,[i],-2"),
    };
    Ok(ToeplitzSpec::new(stencil, diag_index, n))
}

/// Inverse of [`parse_stencil`].
pub fn format_stencil(spec: &ToeplitzSpec) -> String {
    spec.stencil
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let v = format_complex(*z);
            if k == spec.diag_index {
                format!("[{v}]")
            } else {
                v
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

pub fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number '{t}' in '{text}'"))).collect()
}

/// `lo..hi` (inclusive), `lo..=hi`, or a single value.
pub fn parse_range(text: &str) -> Result<std::ops::RangeInclusive<u64>> {
    let parse = |t: &str| t.trim().parse::<u64>().with_context(|| format!("bad range bound '{t}' in '{text}'"));
    let range = match text.split_once("..") {
        Some((lo, hi)) => parse(lo)?..=parse(hi.strip_prefix('=').unwrap_or(hi))?,
        None => {
            let v = parse(text)?;
            v..=v
        }
    };
    if range.is_empty() {
        return Err(anyhow!("empty range '{text}'"));
    }
    Ok(range)
}
