//! Text grammar for replication kernels.
//!
//! `poi(1.0)`, `bin(4,0.25)`, `hgeo(12,6,2)`, `nbin(2,0.3333333)`,
//! `geo(0.5)`, `mixgeo([0.5,0.5],[0.25,0.75])`, `dirac(1)`. Family names are
//! case-insensitive; whitespace is allowed around tokens.

use super::DiscreteLaw;
use crate::error::{Error, Result};

/// Parse a law expression such as `bin(6,0.1666667)`.
pub fn parse_law(input: &str) -> Result<DiscreteLaw> {
    let s = input.trim();
    let open = s.find('(').ok_or_else(|| {
        Error::Parse(format!("law '{}' is missing an argument list", s))
    })?;
    if !s.ends_with(')') {
        return Err(Error::Parse(format!(
            "law '{}' is missing a closing parenthesis",
            s
        )));
    }
    let name = s[..open].trim().to_ascii_lowercase();
    let args = &s[open + 1..s.len() - 1];
    match name.as_str() {
        "poi" => {
            let v = scalar_args(args, 1, "poi")?;
            DiscreteLaw::poisson(v[0])
        }
        "bin" => {
            let v = scalar_args(args, 2, "bin")?;
            DiscreteLaw::binomial(integral(v[0], "bin", "n")?, v[1])
        }
        "hgeo" => {
            let v = scalar_args(args, 3, "hgeo")?;
            DiscreteLaw::hypergeometric(
                integral(v[0], "hgeo", "n")?,
                integral(v[1], "hgeo", "m")?,
                integral(v[2], "hgeo", "k")?,
            )
        }
        "nbin" => {
            let v = scalar_args(args, 2, "nbin")?;
            DiscreteLaw::neg_binomial(v[0], v[1])
        }
        "geo" => {
            let v = scalar_args(args, 1, "geo")?;
            DiscreteLaw::geometric(v[0])
        }
        "dirac" => {
            let v = scalar_args(args, 1, "dirac")?;
            DiscreteLaw::dirac(integral(v[0], "dirac", "n")?)
        }
        "mixgeo" => {
            let lists = bracket_lists(args, "mixgeo")?;
            if lists.len() != 2 {
                return Err(Error::Parse(format!(
                    "mixgeo takes two bracketed lists, got {}",
                    lists.len()
                )));
            }
            DiscreteLaw::geo_mixture(&lists[0], &lists[1])
        }
        other => Err(Error::Parse(format!(
            "unknown law family '{}' (expected poi, bin, hgeo, nbin, geo, mixgeo, or dirac)",
            other
        ))),
    }
}

fn scalar_args(args: &str, want: usize, family: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = if args.trim().is_empty() {
        Vec::new()
    } else {
        args.split(',').collect()
    };
    if parts.len() != want {
        return Err(Error::Parse(format!(
            "{} takes {} argument(s), got {}",
            family,
            want,
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.trim().parse::<f64>().map_err(|_| {
                Error::Parse(format!("{}: '{}' is not a number", family, p.trim()))
            })
        })
        .collect()
}

fn integral(v: f64, family: &str, param: &str) -> Result<u64> {
    if v.fract() != 0.0 || v < 0.0 || !v.is_finite() {
        return Err(Error::Parse(format!(
            "{}: parameter {} must be a non-negative integer, got {}",
            family, param, v
        )));
    }
    Ok(v as u64)
}

/// Split `[a,b],[c,d]` into numeric lists.
fn bracket_lists(args: &str, family: &str) -> Result<Vec<Vec<f64>>> {
    let mut lists = Vec::new();
    let mut rest = args.trim();
    while !rest.is_empty() {
        if !rest.starts_with('[') {
            return Err(Error::Parse(format!(
                "{}: expected '[' at '{}'",
                family, rest
            )));
        }
        let close = rest.find(']').ok_or_else(|| {
            Error::Parse(format!("{}: unterminated list in '{}'", family, rest))
        })?;
        let inner = &rest[1..close];
        let values: Result<Vec<f64>> = inner
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("{}: '{}' is not a number", family, p.trim()))
                })
            })
            .collect();
        lists.push(values?);
        rest = rest[close + 1..].trim();
        if let Some(stripped) = rest.strip_prefix(',') {
            rest = stripped.trim();
        } else if !rest.is_empty() {
            return Err(Error::Parse(format!(
                "{}: expected ',' between lists at '{}'",
                family, rest
            )));
        }
    }
    Ok(lists)
}
