//! Seesaw strand-displacement networks.
//!
//! Species are strands `S(l,r)`, left gates `LG(l,r)` and right gates
//! `RG(l,r)` over a set of domains. A strand reacts with a left gate whose
//! left domain matches the strand's right domain:
//!
//! ```text
//! S(x,y) + LG(y,z) <-> S(y,z) + RG(x,y)
//! ```
//!
//! and the reverse direction is the strand/right-gate interaction. Every
//! reaction is therefore determined by the domain triple `(x, y, z)` and is
//! stored in the left-gate-on-the-left direction.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::ControlFlow;

use crate::par;

pub type DomainId = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Strand,
    LeftGate,
    RightGate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeesawSpecies {
    pub kind: Kind,
    pub left: DomainId,
    pub right: DomainId,
}

impl SeesawSpecies {
    pub fn strand(left: DomainId, right: DomainId) -> Self {
        SeesawSpecies { kind: Kind::Strand, left, right }
    }

    pub fn left_gate(left: DomainId, right: DomainId) -> Self {
        SeesawSpecies { kind: Kind::LeftGate, left, right }
    }

    pub fn right_gate(left: DomainId, right: DomainId) -> Self {
        SeesawSpecies { kind: Kind::RightGate, left, right }
    }
}

fn domain_name(d: DomainId) -> char {
    (b'a' + d) as char
}

impl fmt::Display for SeesawSpecies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            Kind::Strand => "S",
            Kind::LeftGate => "LG",
            Kind::RightGate => "RG",
        };
        write!(f, "{k}({},{})", domain_name(self.left), domain_name(self.right))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeesawError {
    #[error("{0} and {1} cannot react")]
    CannotReact(SeesawSpecies, SeesawSpecies),
    #[error("at most {max} domains are supported, got {got}")]
    TooManyDomains { max: usize, got: usize },
}

/// Order-insensitive reactivity test.
pub fn can_react(a: SeesawSpecies, b: SeesawSpecies) -> bool {
    let (s, g) = match (a.kind, b.kind) {
        (Kind::Strand, Kind::LeftGate | Kind::RightGate) => (a, b),
        (Kind::LeftGate | Kind::RightGate, Kind::Strand) => (b, a),
        _ => return false,
    };
    match g.kind {
        Kind::LeftGate => s.right == g.left,
        Kind::RightGate => s.left == g.right,
        Kind::Strand => false,
    }
}

/// Products of a strand/gate interaction: `(strand_out, gate_out)`.
pub fn react(strand: SeesawSpecies, gate: SeesawSpecies) -> Result<(SeesawSpecies, SeesawSpecies), SeesawError> {
    if strand.kind != Kind::Strand || !can_react(strand, gate) {
        return Err(SeesawError::CannotReact(strand, gate));
    }
    Ok(match gate.kind {
        Kind::LeftGate => (
            SeesawSpecies::strand(gate.left, gate.right),
            SeesawSpecies::right_gate(strand.left, strand.right),
        ),
        _ => (
            SeesawSpecies::strand(gate.left, gate.right),
            SeesawSpecies::left_gate(strand.left, strand.right),
        ),
    })
}

/// A reaction `S(x,y) + LG(y,z) <-> S(y,z) + RG(x,y)`, stored as `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeesawReaction(pub DomainId, pub DomainId, pub DomainId);

impl SeesawReaction {
    pub fn strand_in(self) -> SeesawSpecies {
        SeesawSpecies::strand(self.0, self.1)
    }

    pub fn gate_in(self) -> SeesawSpecies {
        SeesawSpecies::left_gate(self.1, self.2)
    }

    pub fn strand_out(self) -> SeesawSpecies {
        SeesawSpecies::strand(self.1, self.2)
    }

    pub fn gate_out(self) -> SeesawSpecies {
        SeesawSpecies::right_gate(self.0, self.1)
    }

    pub fn species(self) -> [SeesawSpecies; 4] {
        [self.strand_in(), self.gate_in(), self.strand_out(), self.gate_out()]
    }

    fn map(self, perm: &[DomainId]) -> Self {
        SeesawReaction(perm[self.0 as usize], perm[self.1 as usize], perm[self.2 as usize])
    }
}

impl fmt::Display for SeesawReaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {} <-> {} + {}", self.strand_in(), self.gate_in(), self.strand_out(), self.gate_out())
    }
}

/// Set of normalized seesaw reactions over `domains` domains.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeesawCrn {
    pub domains: usize,
    pub reactions: Vec<SeesawReaction>,
}

/// Canonical key: the lexicographically least sorted reaction list over all
/// domain renamings.
pub type SeesawKey = Vec<SeesawReaction>;

impl SeesawCrn {
    pub fn new(domains: usize, mut reactions: Vec<SeesawReaction>) -> Self {
        reactions.sort();
        reactions.dedup();
        SeesawCrn { domains, reactions }
    }

    pub fn species(&self) -> BTreeSet<SeesawSpecies> {
        self.reactions.iter().flat_map(|r| r.species()).collect()
    }

    /// Reactions forced by the species present.
    pub fn closure(&self) -> BTreeSet<SeesawReaction> {
        closure_of(&self.species())
    }

    /// Closed (every possible interaction present), and every domain used.
    pub fn is_valid(&self, max_species: usize) -> bool {
        let species = self.species();
        let used: HashSet<DomainId> = species.iter().flat_map(|s| [s.left, s.right]).collect();
        let closed: Vec<SeesawReaction> = closure_of(&species).into_iter().collect();
        used.len() == self.domains && species.len() <= max_species && closed == self.reactions
    }

    pub fn canonical_key(&self) -> SeesawKey {
        let mut best: Option<SeesawKey> = None;
        for perm in permutations(self.domains) {
            let mut mapped: Vec<_> = self.reactions.iter().map(|r| r.map(&perm)).collect();
            mapped.sort();
            if best.as_ref().is_none_or(|b| mapped < *b) {
                best = Some(mapped);
            }
        }
        best.unwrap_or_default()
    }

    pub fn relabeled(&self, perm: &[DomainId]) -> SeesawCrn {
        SeesawCrn::new(self.domains, self.reactions.iter().map(|r| r.map(perm)).collect())
    }
}

impl fmt::Display for SeesawCrn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.reactions.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

fn closure_of(species: &BTreeSet<SeesawSpecies>) -> BTreeSet<SeesawReaction> {
    let mut out = BTreeSet::new();
    for s in species.iter().filter(|s| s.kind == Kind::Strand) {
        for g in species.iter().filter(|g| g.kind != Kind::Strand) {
            if !can_react(*s, *g) {
                continue;
            }
            out.insert(match g.kind {
                Kind::LeftGate => SeesawReaction(s.left, s.right, g.right),
                _ => SeesawReaction(g.left, g.right, s.right),
            });
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<DomainId>> {
    fn rec(cur: &mut Vec<DomainId>, used: &mut [bool], out: &mut Vec<Vec<DomainId>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for d in 0..used.len() {
            if !used[d] {
                used[d] = true;
                cur.push(d as DomainId);
                rec(cur, used, out);
                cur.pop();
                used[d] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub const MAX_DOMAINS: usize = 6;

struct SeesawSearch {
    domains: usize,
    reactions: usize,
    max_species: usize,
    triples: Vec<SeesawReaction>,
}

impl SeesawSearch {
    fn index(&self, r: SeesawReaction) -> usize {
        let d = self.domains;
        (r.0 as usize * d + r.1 as usize) * d + r.2 as usize
    }

    fn walk(&self, chosen: &mut Vec<usize>, start: usize, out: &mut BTreeSet<SeesawKey>) {
        let crn = SeesawCrn::new(self.domains, chosen.iter().map(|&i| self.triples[i]).collect());
        let closure = crn.closure();
        if closure.len() > self.reactions {
            return;
        }
        // Forced reactions below the next index can no longer be added.
        for r in &closure {
            let i = self.index(*r);
            if i < start && !chosen.contains(&i) {
                return;
            }
        }
        if chosen.len() == self.reactions {
            if crn.is_valid(self.max_species) {
                out.insert(crn.canonical_key());
            }
            return;
        }
        for j in start..self.triples.len() {
            chosen.push(j);
            self.walk(chosen, j + 1, out);
            chosen.pop();
        }
    }
}

/// One representative per isomorphism class of valid seesaw networks with
/// exactly `domains` domains (all used), exactly `reactions` reactions and at
/// most `max_species` species, in canonical-key order.
pub fn enumerate_seesaw(
    domains: usize,
    reactions: usize,
    max_species: usize,
    mut sink: impl FnMut(&SeesawCrn) -> ControlFlow<()>,
) -> Result<u64, SeesawError> {
    if domains > MAX_DOMAINS {
        return Err(SeesawError::TooManyDomains { max: MAX_DOMAINS, got: domains });
    }
    if domains == 0 || reactions == 0 {
        return Ok(0);
    }
    let d = domains as DomainId;
    let mut triples = Vec::new();
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                triples.push(SeesawReaction(x, y, z));
            }
        }
    }
    let search = SeesawSearch { domains, reactions, max_species, triples };
    let firsts: Vec<usize> = (0..search.triples.len()).collect();
    let parts = par::map(&firsts, |&j| {
        let mut out = BTreeSet::new();
        search.walk(&mut vec![j], j + 1, &mut out);
        out
    });
    let keys: BTreeSet<SeesawKey> = parts.into_iter().flatten().collect();
    let mut n = 0;
    for key in keys {
        n += 1;
        if sink(&SeesawCrn::new(domains, key)).is_break() {
            break;
        }
    }
    Ok(n)
}

pub fn default_max_species(reactions: usize) -> usize {
    4 * reactions
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(d: usize, r: usize) -> Vec<SeesawCrn> {
        let mut v = Vec::new();
        enumerate_seesaw(d, r, default_max_species(r), |c| {
            v.push(c.clone());
            ControlFlow::Continue(())
        })
        .unwrap();
        v
    }

    #[test]
    fn reactivity() {
        let (a, b, c) = (0, 1, 2);
        assert!(can_react(SeesawSpecies::strand(a, b), SeesawSpecies::left_gate(b, c)));
        assert!(!can_react(SeesawSpecies::strand(a, b), SeesawSpecies::left_gate(a, c)));
        assert!(can_react(SeesawSpecies::strand(a, b), SeesawSpecies::right_gate(c, a)));
        assert!(can_react(SeesawSpecies::right_gate(c, a), SeesawSpecies::strand(a, b)));
    }

    #[test]
    fn reaction_products() {
        let (a, b, c) = (0, 1, 2);
        assert_eq!(
            react(SeesawSpecies::strand(a, b), SeesawSpecies::left_gate(b, c)).unwrap(),
            (SeesawSpecies::strand(b, c), SeesawSpecies::right_gate(a, b))
        );
        assert_eq!(
            react(SeesawSpecies::strand(a, a), SeesawSpecies::left_gate(a, a)).unwrap(),
            (SeesawSpecies::strand(a, a), SeesawSpecies::right_gate(a, a))
        );
        // The mirror rule undoes the forward one.
        assert_eq!(
            react(SeesawSpecies::strand(b, a), SeesawSpecies::right_gate(a, b)).unwrap(),
            (SeesawSpecies::strand(a, b), SeesawSpecies::left_gate(b, a))
        );
        assert!(react(SeesawSpecies::strand(a, b), SeesawSpecies::left_gate(a, b)).is_err());
    }

    #[test]
    fn two_domain_cells() {
        let one = collect(2, 1);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].to_string(), "S(a,b) + LG(b,a) <-> S(b,a) + RG(a,b)");
        assert_eq!(collect(2, 3).len(), 0);
        assert_eq!(collect(2, 4).len(), 2);
        assert_eq!(collect(1, 1).len(), 1);
    }

    #[test]
    fn key_invariant_under_renaming() {
        for c in collect(3, 3) {
            let swapped = c.relabeled(&[2, 0, 1]);
            assert_eq!(swapped.canonical_key(), c.canonical_key());
            assert!(swapped.is_valid(12));
        }
    }

    #[test]
    fn emitted_networks_are_closed() {
        for r in 1..=4 {
            for c in collect(3, r) {
                let closure: Vec<_> = c.closure().into_iter().collect();
                assert_eq!(closure, c.reactions);
                for rx in &c.reactions {
                    assert_eq!(react(rx.strand_in(), rx.gate_in()).unwrap(), (rx.strand_out(), rx.gate_out()));
                }
            }
        }
    }
}
