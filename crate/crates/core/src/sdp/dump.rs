//! Plain-text problem dump for cross-checking against external solvers.
//!
//! ```text
//! # sdp-dump v1
//! sense maximize|minimize
//! block <index> <name> <side>
//! obj <block> <row> <col> <re> <im>
//! con <index> <rhs>
//! coef <con> <block> <row> <col> <re> <im>
//! ```
//!
//! One `obj`/`coef` line per stored nonzero; both triangles are written.
//! Values use Rust's shortest round-trip float formatting, so a dump read
//! back reproduces the problem exactly (block labels become plain blocks).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::tensor::C64;

use super::problem::{Constraint, SdpProblem, Sense, SparseHermitian};

pub fn write_dump<W: Write>(p: &SdpProblem, mut out: W) -> Result<()> {
    writeln!(out, "# sdp-dump v1")?;
    let sense = match p.sense {
        Sense::Maximize => "maximize",
        Sense::Minimize => "minimize",
    };
    writeln!(out, "sense {sense}")?;
    for (i, b) in p.blocks.iter().enumerate() {
        writeln!(out, "block {i} {} {}", b.name, b.side())?;
    }
    for (i, c) in p.objective.iter().enumerate() {
        for &(r, cc, v) in &c.entries {
            writeln!(out, "obj {i} {r} {cc} {:?} {:?}", v.re, v.im)?;
        }
    }
    for (k, con) in p.constraints.iter().enumerate() {
        writeln!(out, "con {k} {:?}", con.rhs)?;
        for (b, a) in &con.terms {
            for &(r, cc, v) in &a.entries {
                writeln!(out, "coef {k} {b} {r} {cc} {:?} {:?}", v.re, v.im)?;
            }
        }
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("dump line {line}: bad or missing field")))
}

pub fn read_dump<R: BufRead>(input: R) -> Result<SdpProblem> {
    let mut p = SdpProblem::new(Sense::Minimize);
    for (no, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let no = no + 1;
        match it.next() {
            Some("sense") => {
                p.sense = match it.next() {
                    Some("maximize") => Sense::Maximize,
                    Some("minimize") => Sense::Minimize,
                    _ => return Err(Error::Parse(format!("dump line {no}: unknown sense"))),
                }
            }
            Some("block") => {
                let idx: usize = parse(it.next(), no)?;
                let name: String = parse(it.next(), no)?;
                let side: usize = parse(it.next(), no)?;
                if idx != p.blocks.len() {
                    return Err(Error::Parse(format!("dump line {no}: blocks out of order")));
                }
                p.add_plain_block(name, side);
            }
            Some("obj") => {
                let b: usize = parse(it.next(), no)?;
                let r: usize = parse(it.next(), no)?;
                let c: usize = parse(it.next(), no)?;
                let re: f64 = parse(it.next(), no)?;
                let im: f64 = parse(it.next(), no)?;
                let obj = p
                    .objective
                    .get_mut(b)
                    .ok_or_else(|| Error::Parse(format!("dump line {no}: unknown block")))?;
                obj.entries.push((r, c, C64::new(re, im)));
            }
            Some("con") => {
                let k: usize = parse(it.next(), no)?;
                let rhs: f64 = parse(it.next(), no)?;
                if k != p.constraints.len() {
                    return Err(Error::Parse(format!(
                        "dump line {no}: constraints out of order"
                    )));
                }
                p.add_constraint(Constraint::new(rhs));
            }
            Some("coef") => {
                let k: usize = parse(it.next(), no)?;
                let b: usize = parse(it.next(), no)?;
                let r: usize = parse(it.next(), no)?;
                let c: usize = parse(it.next(), no)?;
                let re: f64 = parse(it.next(), no)?;
                let im: f64 = parse(it.next(), no)?;
                let con = p
                    .constraints
                    .get_mut(k)
                    .ok_or_else(|| Error::Parse(format!("dump line {no}: unknown constraint")))?;
                match con.terms.iter_mut().find(|(bb, _)| *bb == b) {
                    Some((_, a)) => a.entries.push((r, c, C64::new(re, im))),
                    None => con.terms.push((
                        b,
                        SparseHermitian {
                            entries: vec![(r, c, C64::new(re, im))],
                        },
                    )),
                }
            }
            Some(other) => {
                return Err(Error::Parse(format!(
                    "dump line {no}: unknown record `{other}`"
                )))
            }
            None => {}
        }
    }
    p.validate()?;
    Ok(p)
}
