//! Textual specification grammars for exponents and functions, used by the
//! CLI and by experiment config files.
//!
//! Exponents: `constant(p)`, `piecewise(b0,b1,..;v0,v1,..)`, `log`,
//! `spiked(J,s,b)`, `shuffle(<spec>, seed[, depth])`.
//!
//! Functions: `indicator(a,b)`, `poly(b0,b1,..; c00,c01,..|c10,c11,..)`,
//! `const(c)`, `mask(<f>, omega(n))`, `sum(<f>; <f>; ..)`,
//! `scale(alpha, <f>)`. Polynomial coefficient rows are ascending-degree,
//! one row per piece, rows separated by `|`.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::exponent::{shuffle_exponent, Exponent};
use crate::families::rng_from_seed;
use crate::func::{Func, Poly};

/// Splits at top-level occurrences of `sep` (not inside parentheses).
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// `head(body)` -> (head, body); None when `s` is a bare word.
fn call_form(s: &str) -> Option<(&str, &str)> {
    let s = s.trim();
    let open = s.find('(')?;
    if !s.ends_with(')') {
        return None;
    }
    Some((s[..open].trim(), &s[open + 1..s.len() - 1]))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("expected a number, got `{}`", s.trim())))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| Error::Parse(format!("expected an integer, got `{}`", s.trim())))
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    split_top(s, ',').iter().map(|p| parse_f64(p)).collect()
}

pub fn parse_exponent(src: &str) -> Result<Exponent> {
    let src = src.trim();
    if src == "log" {
        return Ok(Exponent::log_family());
    }
    let (head, body) = call_form(src).ok_or_else(|| {
        Error::Parse(format!(
            "unrecognized exponent spec `{src}` (expected constant/piecewise/log/spiked/shuffle)"
        ))
    })?;
    match head {
        "constant" => Exponent::constant(parse_f64(body)?),
        "piecewise" => {
            let halves = split_top(body, ';');
            if halves.len() != 2 {
                return Err(Error::Parse(
                    "piecewise expects `breaks;values`".into(),
                ));
            }
            Exponent::piecewise(numbers(halves[0])?, numbers(halves[1])?)
        }
        "spiked" => {
            let args = split_top(body, ',');
            if args.len() != 3 {
                return Err(Error::Parse("spiked expects `J,s,b`".into()));
            }
            Exponent::spiked(
                parse_u64(args[0])? as u32,
                parse_f64(args[1])?,
                parse_f64(args[2])?,
            )
        }
        "shuffle" => {
            let args = split_top(body, ',');
            if args.len() < 2 || args.len() > 3 {
                return Err(Error::Parse(
                    "shuffle expects `<spec>, seed[, depth]`".into(),
                ));
            }
            let inner = parse_exponent(args[0])?;
            let seed = parse_u64(args[1])?;
            let depth = if args.len() == 3 {
                parse_u64(args[2])? as u32
            } else {
                8
            };
            let grid = inner.discretize_dyadic(depth)?;
            let mut perm: Vec<usize> = (0..(1usize << depth)).collect();
            perm.shuffle(&mut rng_from_seed(seed));
            shuffle_exponent(&grid, &perm)
        }
        other => Err(Error::Parse(format!("unknown exponent form `{other}`"))),
    }
}

/// Functions may reference the exponent through `omega(n)` masks.
pub fn parse_func(src: &str, p: &Exponent) -> Result<Func> {
    let src = src.trim();
    let (head, body) = call_form(src).ok_or_else(|| {
        Error::Parse(format!(
            "unrecognized function spec `{src}` (expected indicator/poly/const/mask/sum/scale)"
        ))
    })?;
    match head {
        "const" => Ok(Func::constant(parse_f64(body)?)),
        "indicator" => {
            let args = split_top(body, ',');
            if args.len() != 2 {
                return Err(Error::Parse("indicator expects `a,b`".into()));
            }
            Func::indicator(parse_f64(args[0])?, parse_f64(args[1])?)
        }
        "poly" => {
            let halves = split_top(body, ';');
            if halves.len() != 2 {
                return Err(Error::Parse("poly expects `breaks;rows`".into()));
            }
            let breaks = numbers(halves[0])?;
            let mut pieces = Vec::new();
            for row in split_top(halves[1], '|') {
                let coeffs = numbers(row)?;
                if coeffs.is_empty() || coeffs.len() > 4 {
                    return Err(Error::Parse(
                        "polynomial rows take 1 to 4 ascending-degree coefficients".into(),
                    ));
                }
                let mut c = [0.0; 4];
                c[..coeffs.len()].copy_from_slice(&coeffs);
                pieces.push(Poly::new(c));
            }
            Func::piecewise_poly(breaks, pieces, false)
        }
        "mask" => {
            let args = split_top(body, ',');
            if args.len() != 2 {
                return Err(Error::Parse("mask expects `<f>, omega(n)`".into()));
            }
            let inner = parse_func(args[0], p)?;
            let (mhead, mbody) = call_form(args[1])
                .ok_or_else(|| Error::Parse("mask region must be `omega(n)`".into()))?;
            if mhead != "omega" {
                return Err(Error::Parse(format!(
                    "unknown mask region `{mhead}` (expected omega)"
                )));
            }
            let n = parse_u64(mbody)? as u32;
            Ok(Func::masked(inner, p.level_set(n)?))
        }
        "sum" => {
            let terms = split_top(body, ';')
                .into_iter()
                .map(|t| parse_func(t, p))
                .collect::<Result<Vec<_>>>()?;
            Ok(Func::sum(terms))
        }
        "scale" => {
            let args = split_top(body, ',');
            if args.len() != 2 {
                return Err(Error::Parse("scale expects `alpha, <f>`".into()));
            }
            Ok(Func::scaled(parse_f64(args[0])?, parse_func(args[1], p)?))
        }
        other => Err(Error::Parse(format!("unknown function form `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_round_trips() {
        assert_eq!(parse_exponent("log").unwrap(), Exponent::log_family());
        assert_eq!(
            parse_exponent("constant(2.5)").unwrap(),
            Exponent::constant(2.5).unwrap()
        );
        assert_eq!(
            parse_exponent("piecewise(0,0.5,1;2,4)").unwrap(),
            Exponent::piecewise(vec![0.0, 0.5, 1.0], vec![2.0, 4.0]).unwrap()
        );
        assert_eq!(
            parse_exponent("spiked(4,4,2)").unwrap(),
            Exponent::spiked(4, 4.0, 2.0).unwrap()
        );
    }

    #[test]
    fn shuffle_spec_is_seed_deterministic() {
        let a = parse_exponent("shuffle(log, 7)").unwrap();
        let b = parse_exponent("shuffle(log, 7)").unwrap();
        assert_eq!(a, b);
        let c = parse_exponent("shuffle(log, 8)").unwrap();
        assert_ne!(a, c);
        // equimeasurable with the discretization
        let disc = parse_exponent("log").unwrap().discretize_dyadic(8).unwrap();
        assert_eq!(
            a.decreasing_rearrangement().unwrap(),
            disc.decreasing_rearrangement().unwrap()
        );
    }

    #[test]
    fn func_specs() {
        let log = Exponent::log_family();
        let f = parse_func("indicator(0.25, 0.75)", &log).unwrap();
        assert_eq!(f.eval(0.5).unwrap(), 1.0);
        let f = parse_func("scale(2, const(3))", &log).unwrap();
        assert_eq!(f.eval(0.1).unwrap(), 6.0);
        let f = parse_func("poly(0,0.5,1; 0,1 | 1,-1)", &log).unwrap();
        assert!((f.eval(0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!((f.eval(0.75).unwrap() - 0.25).abs() < 1e-15);
        let f = parse_func("mask(const(1), omega(2))", &log).unwrap();
        assert_eq!(f.eval(0.1).unwrap(), 0.0);
        assert_eq!(f.eval(0.5).unwrap(), 1.0);
        let f = parse_func("sum(const(1); scale(-1, const(1)))", &log).unwrap();
        assert_eq!(f.eval(0.4).unwrap(), 0.0);
    }

    #[test]
    fn parse_errors_name_the_problem() {
        assert!(matches!(
            parse_exponent("notathing(1)"),
            Err(Error::Parse(msg)) if msg.contains("notathing")
        ));
        let log = Exponent::log_family();
        assert!(parse_func("mask(const(1), sigma(2))", &log).is_err());
        assert!(parse_func("poly(0,1; 1,2,3,4,5)", &log).is_err());
    }
}
