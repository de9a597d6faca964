//! Invariant sets and their text format.
//!
//! ```text
//! MGHMI-SET v1; M=2; N=2; model=RA; K=2; O=1; norm=divide-by-sum
//! # psi12 | Lambda12
//! 2/1 * eta[1;1,0] * eta[2;0,1] + -2/1 * eta[1;0,1] * eta[2;1,0]
//! ```
//!
//! Lines starting with `#` are comments; a comment directly above an
//! invariant is kept as that invariant's source label.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::atoms::Model;
use super::poly::{Coeff, MomentPolynomial, MomentSymbol, Monomial};
use crate::error::{Error, Result};

const HEADER_TAG: &str = "MGHMI-SET v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    /// Divide every invariant by the sum over the set, then drop the last.
    DivideBySum,
}

impl Normalization {
    pub fn for_model(model: Model) -> Self {
        match model {
            Model::Ra => Normalization::DivideBySum,
            Model::Tr => Normalization::None,
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::None => "none",
            Normalization::DivideBySum => "divide-by-sum",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalization::None),
            "divide-by-sum" => Ok(Normalization::DivideBySum),
            _ => Err(Error::param(format!("unknown normalization {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSet {
    pub coord_dim: usize,
    pub channel_dim: usize,
    pub model: Model,
    pub degree: usize,
    pub order: usize,
    pub norm: Normalization,
    pub members: Vec<MomentPolynomial>,
    /// Optional source label per member (empty strings when unknown).
    pub sources: Vec<String>,
}

impl InvariantSet {
    pub fn new(
        coord_dim: usize,
        channel_dim: usize,
        model: Model,
        degree: usize,
        order: usize,
        norm: Normalization,
        members: Vec<MomentPolynomial>,
    ) -> Self {
        let sources = vec![String::new(); members.len()];
        Self {
            coord_dim,
            channel_dim,
            model,
            degree,
            order,
            norm,
            members,
            sources,
        }
    }

    pub fn with_sources(mut self, sources: Vec<String>) -> Self {
        assert_eq!(sources.len(), self.members.len(), "one source per member");
        self.sources = sources;
        self
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Highest moment order any member uses.
    pub fn max_moment_order(&self) -> usize {
        self.members.iter().map(MomentPolynomial::max_order).max().unwrap_or(0)
    }

    /// Short identifier used as feature provenance.
    pub fn id(&self) -> String {
        format!(
            "M{}N{}-{}-K{}O{}-{}",
            self.coord_dim,
            self.channel_dim,
            self.model,
            self.degree,
            self.order,
            self.members.len()
        )
    }

    pub fn header(&self) -> String {
        format!(
            "{HEADER_TAG}; M={}; N={}; model={}; K={}; O={}; norm={}",
            self.coord_dim, self.channel_dim, self.model, self.degree, self.order, self.norm
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for (poly, src) in self.members.iter().zip(&self.sources) {
            if !src.is_empty() {
                out.push_str("# ");
                out.push_str(src);
                out.push('\n');
            }
            out.push_str(&poly.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| line_err(1, "empty file"))?;
        let mut set = parse_header(header)?;
        let mut pending_source = String::new();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                pending_source = c.trim().to_string();
                continue;
            }
            let poly = parse_polynomial(line, set.coord_dim, set.channel_dim).map_err(|msg| line_err(i + 1, &msg))?;
            set.members.push(poly);
            set.sources.push(std::mem::take(&mut pending_source));
        }
        Ok(set)
    }
}

fn line_err(line: usize, msg: &str) -> Error {
    Error::ParseLine {
        line,
        msg: msg.to_string(),
    }
}

fn parse_header(line: &str) -> Result<InvariantSet> {
    let mut parts = line.split(';').map(str::trim);
    if parts.next() != Some(HEADER_TAG) {
        return Err(line_err(1, &format!("expected header starting with {HEADER_TAG:?}")));
    }
    let mut fields = std::collections::HashMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| line_err(1, &format!("header field {p:?} is not key=value")))?;
        fields.insert(k.trim(), v.trim());
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| line_err(1, &format!("header lacks {k}")));
    let num = |k: &str| -> Result<usize> {
        get(k)?
            .parse::<usize>()
            .map_err(|_| line_err(1, &format!("header field {k} is not an integer")))
    };
    let model = get("model")?.parse::<Model>().map_err(|e| line_err(1, &e.to_string()))?;
    let norm = get("norm")?
        .parse::<Normalization>()
        .map_err(|e| line_err(1, &e.to_string()))?;
    Ok(InvariantSet::new(num("M")?, num("N")?, model, num("K")?, num("O")?, norm, Vec::new()))
}

fn parse_symbol(tok: &str, m: usize, n: usize) -> std::result::Result<MomentSymbol, String> {
    let body = tok
        .strip_prefix("eta[")
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("bad moment symbol {tok:?}"))?;
    let (ch, orders) = body.split_once(';').ok_or_else(|| format!("bad moment symbol {tok:?}"))?;
    let ch: usize = ch.trim().parse().map_err(|_| format!("bad channel in {tok:?}"))?;
    if ch == 0 || ch > n {
        return Err(format!("channel {ch} outside 1..={n}"));
    }
    let orders: Vec<usize> = orders
        .split(',')
        .map(|o| o.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("bad orders in {tok:?}"))?;
    if orders.len() != m {
        return Err(format!("{tok:?} has {} orders, expected M = {m}", orders.len()));
    }
    Ok(MomentSymbol::new(ch - 1, orders))
}

fn parse_coeff(tok: &str) -> std::result::Result<Coeff, String> {
    let (num, den) = tok.split_once('/').unwrap_or((tok, "1"));
    let num: i64 = num.trim().parse().map_err(|_| format!("bad coefficient {tok:?}"))?;
    let den: i64 = den.trim().parse().map_err(|_| format!("bad coefficient {tok:?}"))?;
    if den == 0 {
        return Err(format!("zero denominator in {tok:?}"));
    }
    Ok(Coeff::new(num, den))
}

fn parse_polynomial(line: &str, m: usize, n: usize) -> std::result::Result<MomentPolynomial, String> {
    if line == "0/1" {
        return Ok(MomentPolynomial::zero());
    }
    let mut poly = MomentPolynomial::zero();
    for term in line.split(" + ") {
        let mut toks = term.split('*').map(str::trim);
        let coeff = parse_coeff(toks.next().unwrap_or(""))?;
        let syms = toks.map(|t| parse_symbol(t, m, n)).collect::<std::result::Result<Vec<_>, _>>()?;
        if syms.is_empty() {
            return Err(format!("term {term:?} has no moment factors"));
        }
        poly.add_term(coeff, Monomial::new(syms));
    }
    Ok(poly)
}

pub fn save_invariant_set(set: &InvariantSet, path: &Path) -> Result<()> {
    fs::write(path, set.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_invariant_set(path: &Path) -> Result<InvariantSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    InvariantSet::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::super::poly::{eta, int};
    use super::*;

    fn worked() -> MomentPolynomial {
        MomentPolynomial::from_terms([
            (int(2), Monomial::new(vec![eta(1, &[1, 0]), eta(2, &[0, 1])])),
            (int(-2), Monomial::new(vec![eta(1, &[0, 1]), eta(2, &[1, 0])])),
        ])
    }

    #[test]
    fn text_roundtrip() {
        let set = InvariantSet::new(2, 2, Model::Ra, 2, 1, Normalization::DivideBySum, vec![worked()])
            .with_sources(vec!["psi12 | Lambda12".into()]);
        let text = set.to_text();
        assert!(text.starts_with("MGHMI-SET v1; M=2; N=2; model=RA; K=2; O=1; norm=divide-by-sum\n"));
        assert_eq!(InvariantSet::parse(&text).unwrap(), set);
    }

    #[test]
    fn empty_roundtrip() {
        let set = InvariantSet::new(2, 2, Model::Ra, 1, 3, Normalization::DivideBySum, vec![]);
        let back = InvariantSet::parse(&set.to_text()).unwrap();
        assert!(back.is_empty());
        assert_eq!(back, set);
    }

    #[test]
    fn fractional_coefficients_survive() {
        let p = worked().scale(Coeff::new(-5, 3));
        let set = InvariantSet::new(2, 2, Model::Tr, 2, 1, Normalization::None, vec![p.clone()]);
        assert_eq!(InvariantSet::parse(&set.to_text()).unwrap().members[0], p);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "MGHMI-SET v1; M=2; N=2; model=TR; K=2; O=1; norm=none\n1/1 * eta[1;1,0] * eta[1;1,0]\n1/1 * eta[3;1,0]\n";
        match InvariantSet::parse(text) {
            Err(Error::ParseLine { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(InvariantSet::parse("nonsense"), Err(Error::ParseLine { line: 1, .. })));
        let bad_model = "MGHMI-SET v1; M=2; N=2; model=XX; K=2; O=1; norm=none\n";
        assert!(matches!(InvariantSet::parse(bad_model), Err(Error::ParseLine { line: 1, .. })));
    }
}
