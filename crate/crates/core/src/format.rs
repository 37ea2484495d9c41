//! Line-oriented text format for networks.
//!
//! One reaction per line, `<lhs> -> <rhs>`, sides are `+`-separated terms
//! `k?Name`. A blank right-hand side or `∅` means no products, `#` starts a
//! comment line and an optional `species: N` header fixes the species count.

use std::collections::HashMap;

use crate::crn::{Crn, Reaction, SpeciesId, SpeciesMultiset};
use crate::error::CrnError;

const EMPTY_SET: &str = "∅";

fn syntax(line: usize, message: impl Into<String>) -> CrnError {
    CrnError::Syntax { line, message: message.into() }
}

fn at_line(line: usize, e: CrnError) -> CrnError {
    CrnError::AtLine { line, source: Box::new(e) }
}

type Side = Vec<(String, u8)>;

fn parse_side(text: &str, line: usize) -> Result<Side, CrnError> {
    let text = text.trim();
    if text.is_empty() || text == EMPTY_SET {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for term in text.split('+') {
        let term = term.trim();
        if term.is_empty() {
            return Err(syntax(line, "empty term"));
        }
        let digits = term.chars().take_while(|c| c.is_ascii_digit()).count();
        let (coef, name) = term.split_at(digits);
        let name = name.trim();
        let coef: u8 = if coef.is_empty() {
            1
        } else {
            coef.parse().map_err(|_| syntax(line, format!("bad coefficient in `{term}`")))?
        };
        if coef == 0 {
            return Err(syntax(line, format!("zero coefficient in `{term}`")));
        }
        if name.is_empty() || name.chars().any(|c| c.is_whitespace()) || name == EMPTY_SET {
            return Err(syntax(line, format!("bad species name in `{term}`")));
        }
        out.push((name.to_string(), coef));
    }
    Ok(out)
}

fn numbered(name: &str) -> Option<usize> {
    let rest = name.strip_prefix('S')?;
    if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) || (rest.len() > 1 && rest.starts_with('0')) {
        return None;
    }
    rest.parse().ok()
}

/// Parses reactions from an iterator of `(line number, text)` pairs.
fn parse_lines<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Crn, CrnError> {
    let mut header: Option<usize> = None;
    let mut raw: Vec<(usize, Side, Side)> = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("species:") {
            let n = rest.trim().parse().map_err(|_| syntax(lineno, "bad species header"))?;
            header = Some(n);
            continue;
        }
        let (lhs, rhs) = line.split_once("->").ok_or_else(|| syntax(lineno, "missing `->`"))?;
        if rhs.contains("->") {
            return Err(syntax(lineno, "more than one `->`"));
        }
        let lhs = parse_side(lhs, lineno)?;
        if lhs.is_empty() {
            return Err(at_line(lineno, CrnError::EmptyReactants));
        }
        raw.push((lineno, lhs, parse_side(rhs, lineno)?));
    }

    // Names in first-appearance order.
    let mut order: Vec<String> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for (_, l, r) in &raw {
        for (name, _) in l.iter().chain(r.iter()) {
            if seen.insert(name.clone(), ()).is_none() {
                order.push(name.clone());
            }
        }
    }
    let total = header.unwrap_or(0).max(order.len());
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut taken = vec![false; total];
    for name in &order {
        if let Some(k) = numbered(name) {
            if k < total && !taken[k] {
                taken[k] = true;
                ids.insert(name.clone(), k);
            }
        }
    }
    let mut free = (0..total).filter(|&i| !taken[i]);
    for name in &order {
        if !ids.contains_key(name) {
            ids.insert(name.clone(), free.next().expect("enough ids"));
        }
    }

    let mut reactions = Vec::with_capacity(raw.len());
    for (lineno, l, r) in &raw {
        let side = |s: &Side| SpeciesMultiset::from_counts(s.iter().map(|(n, k)| (SpeciesId::from(ids[n]), *k)));
        let rxn = Reaction::new(side(l), side(r)).map_err(|e| at_line(*lineno, e))?;
        if reactions.contains(&rxn) {
            return Err(at_line(*lineno, CrnError::DuplicateReaction { index: reactions.len() }));
        }
        reactions.push(rxn);
    }
    if total == 0 {
        return Err(CrnError::NoSpecies);
    }
    let mut names = vec![String::new(); total];
    for (name, &i) in &ids {
        names[i] = name.clone();
    }
    let default_names = names.iter().enumerate().all(|(i, n)| *n == format!("S{i}"));
    let crn = Crn::new(total, reactions)?;
    if default_names {
        Ok(crn)
    } else {
        crn.with_names(names)
    }
}

/// Parses the multi-line text format.
pub fn parse_crn(text: &str) -> Result<Crn, CrnError> {
    parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
}

/// Parses the single-line form produced by [`serialize_crn_line`]
/// (reactions separated by `;`).
pub fn parse_crn_line(line: &str) -> Result<Crn, CrnError> {
    parse_lines(line.split(';').map(|l| (1, l)))
}

fn format_side(crn: &Crn, side: &SpeciesMultiset) -> String {
    side.iter()
        .map(|(s, k)| if k > 1 { format!("{k}{}", crn.name(s)) } else { crn.name(s) })
        .collect::<Vec<_>>()
        .join(" + ")
}

pub fn serialize_reaction(crn: &Crn, r: &Reaction) -> String {
    format!("{} -> {}", format_side(crn, r.reactants()), format_side(crn, r.products()))
}

/// Canonical multi-line text: species sorted by id within each side,
/// coefficient prefix for counts above one, empty right-hand side for waste.
pub fn serialize_crn(crn: &Crn) -> String {
    crn.reactions().iter().map(|r| serialize_reaction(crn, r)).collect::<Vec<_>>().join("\n")
}

/// Single-line form used by the enumeration cache.
pub fn serialize_crn_line(crn: &Crn) -> String {
    crn.reactions().iter().map(|r| serialize_reaction(crn, r)).collect::<Vec<_>>().join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAX: &str = "A -> Z1 + Y\nB -> Z2 + Y\nZ1 + Z2 -> K\nY + K -> ";

    #[test]
    fn parses_max_network() {
        let c = parse_crn(MAX).unwrap();
        assert_eq!(c.species_count(), 6);
        assert_eq!(c.reaction_count(), 4);
        assert!(c.reaction(3).products().is_empty());
        let text = serialize_crn(&c);
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), "A -> Z1 + Y");
        assert_eq!(text.lines().nth(3).unwrap(), "Y + K -> ");
        assert_eq!(parse_crn(&text).unwrap(), c);
    }

    #[test]
    fn identical_sides_rejected() {
        let err = parse_crn("A -> A").unwrap_err();
        assert!(err.to_string().contains("ReactantsDifferentThanProducts"), "{err}");
    }

    #[test]
    fn coefficients() {
        let c = parse_crn("2A + B -> C").unwrap();
        let r = c.reaction(0);
        assert_eq!(r.reactants().count(c.species_by_name("A").unwrap()), 2);
        assert_eq!(r.reactants().count(c.species_by_name("B").unwrap()), 1);
        assert_eq!(parse_crn(&serialize_crn(&c)).unwrap(), c);
        let waste = parse_crn("2A -> ∅").unwrap();
        assert_eq!(serialize_crn(&waste), "2A -> ");
    }

    #[test]
    fn numbered_names_and_header() {
        let c = parse_crn("S1 -> S0").unwrap();
        assert_eq!(c.reaction(0).reactants().atoms(), vec![SpeciesId(1)]);
        assert!(c.names().is_none());
        assert!(matches!(parse_crn("species: 3\nA -> B"), Err(CrnError::UnusedSpecies { .. })));
        let c = parse_crn("# comment\nspecies: 2\n\nS0 -> S1\n").unwrap();
        assert_eq!(c.species_count(), 2);
    }

    #[test]
    fn syntax_errors_carry_line() {
        match parse_crn("A -> B\nA B C") {
            Err(CrnError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_crn("A -> B\nA -> B"), Err(CrnError::AtLine { line: 2, .. })));
        assert!(matches!(parse_crn(" -> B"), Err(CrnError::AtLine { line: 1, .. })));
    }

    #[test]
    fn line_form_round_trip() {
        let c = parse_crn(MAX).unwrap();
        let line = serialize_crn_line(&c);
        assert!(!line.contains('\n'));
        assert_eq!(parse_crn_line(&line).unwrap(), c);
    }
}
