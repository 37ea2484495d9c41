//! Bounded-exhaustive generation of canonical networks.
//!
//! A network is canonical when, scanning reactions in order and each reaction
//! as sorted reactants followed by sorted products, every species is either
//! already used or the next fresh one (so the first atom is species 0),
//! reactions are non-decreasing by (reactant count, product count), and
//! adjacent reactions of equal size are lexicographically non-decreasing.
//!
//! The generator builds networks directly in that order: all candidate
//! reactions over the scope's species are sorted by the canonical reaction
//! key, and a network is a strictly increasing sequence of candidates whose
//! species introduction respects the first-use rule. Hereditary class
//! conditions (non-competition, acyclicity, metabolic catalyst roles, size
//! caps) prune prefixes.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::constraints::{is_autocatalytic_reaction, is_catalytic_reaction, is_elementary, ClassSpec};
use crate::crn::{Crn, Reaction, SpeciesId, SpeciesMultiset};
use crate::error::CrnError;
use crate::par;

/// Exact (reactions, species) size of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scope {
    pub reactions: usize,
    pub species: usize,
}

impl Scope {
    pub fn new(reactions: usize, species: usize) -> Self {
        Scope { reactions, species }
    }

    pub fn of(crn: &Crn) -> Self {
        Scope::new(crn.reaction_count(), crn.species_count())
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} reactions, {} species)", self.reactions, self.species)
    }
}

/// Largest species count the bitmask generator handles.
pub const MAX_SPECIES: usize = 32;
/// Largest reaction count the generator handles.
pub const MAX_REACTIONS: usize = 16;

/// Position in the generator's search tree: candidate indices of the last
/// emitted network. Enumeration resumed from a token starts strictly after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResumeToken(pub Vec<u32>);

impl fmt::Display for ResumeToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ResumeToken {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(ResumeToken(Vec::new()));
        }
        s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>().map(ResumeToken)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EnumError {
    #[error("scope {0} is out of range (at most {MAX_REACTIONS} reactions and {MAX_SPECIES} species, both at least 1)")]
    ScopeOutOfRange(Scope),
    #[error("enumeration needs bounded reaction sides: set elementary or explicit max_reactants/max_products")]
    UnboundedSides,
    #[error("{0}")]
    InvalidSpec(#[from] crate::constraints::ClassSpecError),
    #[error("resource limit reached after {count} networks; resume from token {token}")]
    Partial { count: u64, token: ResumeToken },
    #[error("cache file {path} failed its checksum")]
    Checksum { path: String },
    #[error("cache file {path}: {message}")]
    CorruptCache { path: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Options for a single scope run.
#[derive(Debug, Clone, Default)]
pub struct EnumOptions {
    /// Stop with [`EnumError::Partial`] after this many networks.
    pub limit: Option<u64>,
    pub resume_after: Option<ResumeToken>,
}

#[derive(Debug, Clone)]
struct Candidate {
    reaction: Reaction,
    /// Minimum highest-used species index before this reaction may appear.
    requires: i32,
    max_atom: i32,
    reactant_count: u32,
    arity: u32,
    reactants: u32,
    consumed: u32,
    produced: u32,
    catalysts: u32,
    non_catalysts: u32,
}

fn sorted_tuples(species: usize, len: usize, out: &mut Vec<SmallVec<[u8; 4]>>) {
    fn rec(species: usize, len: usize, start: usize, cur: &mut SmallVec<[u8; 4]>, out: &mut Vec<SmallVec<[u8; 4]>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for s in start..species {
            cur.push(s as u8);
            rec(species, len, s, cur, out);
            cur.pop();
        }
    }
    rec(species, len, 0, &mut SmallVec::new(), out);
}

fn requirement(atoms: &[u8]) -> i32 {
    let mut req = -1i32;
    let mut max_prev = -1i32;
    for (k, &a) in atoms.iter().enumerate() {
        let a = a as i32;
        if k == 0 || a > max_prev + 1 {
            req = req.max(a - 1);
        }
        max_prev = max_prev.max(a);
    }
    req
}

/// Candidate reactions for a scope, sorted by the canonical reaction key.
fn candidates(scope: Scope, spec: &ClassSpec) -> Result<Vec<Candidate>, EnumError> {
    spec.validate()?;
    let (Some(rcap), Some(pcap)) = (spec.reactant_cap(), spec.product_cap()) else {
        return Err(EnumError::UnboundedSides);
    };
    if scope.species == 0 || scope.reactions == 0 || scope.species > MAX_SPECIES || scope.reactions > MAX_REACTIONS
    {
        return Err(EnumError::ScopeOutOfRange(scope));
    }
    let mut lhs = Vec::new();
    for len in 1..=rcap as usize {
        sorted_tuples(scope.species, len, &mut lhs);
    }
    let mut rhs = Vec::new();
    for len in 0..=pcap as usize {
        sorted_tuples(scope.species, len, &mut rhs);
    }
    let mut out = Vec::new();
    for l in &lhs {
        for r in &rhs {
            if l == r {
                continue;
            }
            let reactants = SpeciesMultiset::from_atoms(l.iter().map(|&a| SpeciesId(a as u16)));
            let products = SpeciesMultiset::from_atoms(r.iter().map(|&a| SpeciesId(a as u16)));
            let reaction = Reaction::new(reactants, products).expect("non-empty distinct sides");
            if spec.catalytic && !is_catalytic_reaction(&reaction) {
                continue;
            }
            if spec.autocatalytic && !is_autocatalytic_reaction(&reaction) {
                continue;
            }
            let arity = (l.len() + r.len()) as u32;
            if spec.max_total_arity.is_some_and(|cap| arity > cap) {
                continue;
            }
            let mut reactant_mask = 0u32;
            let mut consumed = 0u32;
            let mut produced = 0u32;
            let mut catalysts = 0u32;
            let mut non_catalysts = 0u32;
            for s in reaction.species() {
                let bit = 1u32 << s.0;
                let g = reaction.net_gain(s);
                if reaction.reactants().contains(s) {
                    reactant_mask |= bit;
                }
                if g < 0 {
                    consumed |= bit;
                } else if g > 0 {
                    produced |= bit;
                }
                if reaction.reactants().contains(s) && reaction.products().contains(s) {
                    catalysts |= bit;
                } else {
                    non_catalysts |= bit;
                }
            }
            if spec.must_consume && consumed == 0 {
                continue;
            }
            let atoms: SmallVec<[u8; 8]> = l.iter().chain(r.iter()).copied().collect();
            out.push((
                (l.len(), r.len(), l.clone(), r.clone()),
                Candidate {
                    requires: requirement(&atoms),
                    max_atom: *atoms.iter().max().unwrap() as i32,
                    reaction,
                    reactant_count: l.len() as u32,
                    arity,
                    reactants: reactant_mask,
                    consumed,
                    produced,
                    catalysts,
                    non_catalysts,
                },
            ));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out.into_iter().map(|(_, c)| c).collect())
}

#[derive(Clone, Copy)]
struct Frame {
    max_species: i32,
    reactant_union: u32,
    consumed_union: u32,
    catalyst_union: u32,
    non_catalyst_union: u32,
    arity: u32,
}

struct Generator<'a> {
    scope: Scope,
    spec: &'a ClassSpec,
    cands: Vec<Candidate>,
    max_atoms_per_reaction: i32,
    reactant_species_cap: Option<u32>,
}

/// Per-branch mutable search state.
struct Walk {
    path: Vec<u32>,
    reach: Vec<[u16; MAX_REACTIONS]>,
}

impl<'a> Generator<'a> {
    fn new(scope: Scope, spec: &'a ClassSpec) -> Result<Self, EnumError> {
        let cands = candidates(scope, spec)?;
        let max_atoms = (spec.reactant_cap().unwrap() + spec.product_cap().unwrap()) as i32;
        let reactant_species_cap = spec
            .min_only_product_species
            .map(|m| (scope.species as i64 - m as i64).max(-1))
            .map(|v| if v < 0 { u32::MAX } else { v as u32 });
        Ok(Generator { scope, spec, cands, max_atoms_per_reaction: max_atoms, reactant_species_cap })
    }

    fn root(&self) -> Frame {
        Frame {
            max_species: -1,
            reactant_union: 0,
            consumed_union: 0,
            catalyst_union: 0,
            non_catalyst_union: 0,
            arity: 0,
        }
    }

    /// Tries to append candidate `j` at depth `depth`; returns the new frame.
    fn extend(&self, f: &Frame, walk: &mut Walk, depth: usize, j: usize) -> Option<Frame> {
        let c = &self.cands[j];
        if c.requires > f.max_species || c.max_atom >= self.scope.species as i32 {
            return None;
        }
        let remaining = (self.scope.reactions - depth - 1) as i32;
        let max_species = f.max_species.max(c.max_atom);
        if max_species + 1 + remaining * self.max_atoms_per_reaction < self.scope.species as i32 {
            return None;
        }
        let arity = f.arity + c.arity;
        if let Some(cap) = self.spec.max_total_arity {
            if arity + remaining as u32 * c.reactant_count > cap {
                return None;
            }
        }
        let reactant_union = f.reactant_union | c.reactants;
        if let Some(cap) = self.reactant_species_cap {
            if reactant_union.count_ones() > cap {
                return None;
            }
        }
        if self.spec.non_competitive
            && ((f.reactant_union & c.consumed) != 0 || (c.reactants & f.consumed_union) != 0)
        {
            return None;
        }
        let catalyst_union = f.catalyst_union | c.catalysts;
        let non_catalyst_union = f.non_catalyst_union | c.non_catalysts;
        if self.spec.metabolic && (catalyst_union & non_catalyst_union) != 0 {
            return None;
        }
        if self.spec.feed_forward {
            let chosen = &walk.path[..depth];
            let mut into = 0u16;
            let mut out_of = 0u16;
            for (pos, &i) in chosen.iter().enumerate() {
                let other = &self.cands[i as usize];
                if other.produced & c.consumed != 0 {
                    into |= 1 << pos;
                }
                if c.produced & other.consumed != 0 {
                    out_of |= 1 << pos;
                }
            }
            let reach = walk.reach[depth];
            let mut downstream = 1u16 << depth;
            for pos in 0..depth {
                if out_of & (1 << pos) != 0 {
                    if reach[pos] & into != 0 {
                        return None;
                    }
                    downstream |= reach[pos];
                }
            }
            let mut next = reach;
            next[depth] = downstream;
            for pos in 0..depth {
                if next[pos] & into != 0 {
                    next[pos] |= downstream;
                }
            }
            if depth + 1 < walk.reach.len() {
                walk.reach[depth + 1] = next;
            }
        }
        Some(Frame {
            max_species,
            reactant_union,
            consumed_union: f.consumed_union | c.consumed,
            catalyst_union,
            non_catalyst_union,
            arity,
        })
    }

    fn accepts_leaf(&self, f: &Frame) -> bool {
        if f.max_species + 1 != self.scope.species as i32 {
            return false;
        }
        let reactant_species = f.reactant_union.count_ones() as usize;
        if let Some(min) = self.spec.min_only_product_species {
            if self.scope.species - reactant_species < min {
                return false;
            }
        }
        if let Some(min) = self.spec.min_not_only_product_species {
            if reactant_species < min {
                return false;
            }
        }
        true
    }

    fn materialize(&self, path: &[u32]) -> Crn {
        let reactions = path.iter().map(|&i| self.cands[i as usize].reaction.clone()).collect();
        Crn::new(self.scope.species, reactions).expect("generator emits valid networks")
    }

    fn new_walk(&self) -> Walk {
        Walk { path: vec![0; self.scope.reactions], reach: vec![[0u16; MAX_REACTIONS]; self.scope.reactions + 1] }
    }

    /// Depth-first walk below `frame`. `visit` gets the candidate path of each
    /// accepted network. `lower` is the resume bound (exclusive at the leaf).
    fn walk(
        &self,
        frame: &Frame,
        walk: &mut Walk,
        depth: usize,
        start: usize,
        lower: Option<&[u32]>,
        visit: &mut dyn FnMut(&[u32]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if depth == self.scope.reactions {
            if self.accepts_leaf(frame) {
                return visit(&walk.path);
            }
            return ControlFlow::Continue(());
        }
        let mut from = start;
        if let Some(b) = lower {
            from = from.max(b[depth] as usize);
        }
        for j in from..self.cands.len() {
            let bound_here = lower.filter(|b| b[depth] as usize == j);
            if let Some(b) = bound_here {
                if depth + 1 == self.scope.reactions {
                    // The token's own leaf was already emitted.
                    let _ = b;
                    continue;
                }
            }
            if let Some(next) = self.extend(frame, walk, depth, j) {
                walk.path[depth] = j as u32;
                self.walk(&next, walk, depth + 1, j + 1, bound_here, visit)?;
            }
        }
        ControlFlow::Continue(())
    }

    fn first_level(&self) -> Vec<usize> {
        (0..self.cands.len()).filter(|&j| self.cands[j].requires < 0).collect()
    }

    fn count_under_first(&self, j: usize) -> u64 {
        let mut walk = self.new_walk();
        let mut n = 0u64;
        if let Some(next) = self.extend(&self.root(), &mut walk, 0, j) {
            walk.path[0] = j as u32;
            let _ = self.walk(&next, &mut walk, 1, j + 1, None, &mut |_| {
                n += 1;
                ControlFlow::Continue(())
            });
        }
        n
    }

    fn collect_under_first(&self, j: usize) -> Vec<Vec<u32>> {
        let mut walk = self.new_walk();
        let mut out = Vec::new();
        if let Some(next) = self.extend(&self.root(), &mut walk, 0, j) {
            walk.path[0] = j as u32;
            let _ = self.walk(&next, &mut walk, 1, j + 1, None, &mut |p| {
                out.push(p.to_vec());
                ControlFlow::Continue(())
            });
        }
        out
    }
}

/// Streams every canonical network of `scope` satisfying `spec` to `sink`,
/// in deterministic (lexicographic candidate-key) order. The sink may stop
/// the walk early by returning `Break`.
pub fn enumerate_scope_with(
    scope: Scope,
    spec: &ClassSpec,
    opts: &EnumOptions,
    mut sink: impl FnMut(&Crn) -> ControlFlow<()>,
) -> Result<u64, EnumError> {
    let gen = Generator::new(scope, spec)?;
    let mut walk = gen.new_walk();
    let mut count = 0u64;
    let mut partial: Option<ResumeToken> = None;
    let lower = opts.resume_after.as_ref().map(|t| t.0.clone());
    if let Some(l) = &lower {
        if l.len() != scope.reactions {
            return Err(EnumError::CorruptCache {
                path: "<resume token>".into(),
                message: format!("token has {} entries, scope has {} reactions", l.len(), scope.reactions),
            });
        }
    }
    let _ = gen.walk(&gen.root(), &mut walk, 0, 0, lower.as_deref(), &mut |path| {
        if opts.limit.is_some_and(|lim| count >= lim) {
            return ControlFlow::Break(());
        }
        count += 1;
        let crn = gen.materialize(path);
        let flow = sink(&crn);
        if opts.limit.is_some_and(|lim| count >= lim) {
            partial = Some(ResumeToken(path.to_vec()));
        }
        flow
    });
    if let Some(token) = partial {
        // A limit hit exactly on the final network still counts as complete.
        let mut more = false;
        let mut probe = gen.new_walk();
        let _ = gen.walk(&gen.root(), &mut probe, 0, 0, Some(&token.0), &mut |_| {
            more = true;
            ControlFlow::Break(())
        });
        if more {
            return Err(EnumError::Partial { count, token });
        }
    }
    Ok(count)
}

pub fn enumerate_scope(scope: Scope, spec: &ClassSpec, mut sink: impl FnMut(&Crn)) -> Result<u64, EnumError> {
    enumerate_scope_with(scope, spec, &EnumOptions::default(), |c| {
        sink(c);
        ControlFlow::Continue(())
    })
}

/// Counts a scope without materialising networks, one partition per first
/// reaction (parallel when the `parallel` feature is on).
pub fn count_scope(scope: Scope, spec: &ClassSpec) -> Result<u64, EnumError> {
    let gen = Generator::new(scope, spec)?;
    let firsts = gen.first_level();
    Ok(par::map(&firsts, |&j| gen.count_under_first(j)).into_iter().sum())
}

/// Single-threaded count, regardless of features.
pub fn count_scope_sequential(scope: Scope, spec: &ClassSpec) -> Result<u64, EnumError> {
    let gen = Generator::new(scope, spec)?;
    Ok(gen.first_level().into_iter().map(|j| gen.count_under_first(j)).sum())
}

/// All networks of a scope in stream order (partitions generated in parallel
/// and concatenated in partition order).
pub fn collect_scope(scope: Scope, spec: &ClassSpec) -> Result<Vec<Crn>, EnumError> {
    let gen = Generator::new(scope, spec)?;
    let firsts = gen.first_level();
    let parts = par::map(&firsts, |&j| gen.collect_under_first(j));
    Ok(parts.into_iter().flatten().map(|p| gen.materialize(&p)).collect())
}

/// Scopes up to `max` in deepening order: reactions ascending, then species.
pub fn deepening_order(max: Scope) -> impl Iterator<Item = Scope> {
    (1..=max.reactions).flat_map(move |r| (1..=max.species).map(move |s| Scope::new(r, s)))
}

fn side_atoms(m: &SpeciesMultiset) -> Vec<i32> {
    m.atoms().into_iter().map(|s| s.0 as i32).collect()
}

/// Checks the four symmetry-breaking rules on a network as written (species
/// numbering and reaction order included). Only defined for elementary networks.
pub fn is_canonical(crn: &Crn) -> Result<bool, CrnError> {
    if !is_elementary(crn) {
        return Err(CrnError::NotElementary);
    }
    let rs = crn.reactions();
    // First-use introduction of species.
    let mut max_used = -1i32;
    for r in rs {
        for a in side_atoms(r.reactants()).into_iter().chain(side_atoms(r.products())) {
            if a > max_used + 1 {
                return Ok(false);
            }
            max_used = max_used.max(a);
        }
    }
    let size = |r: &Reaction| (r.reactants().total(), r.products().total());
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            if size(&rs[i]) > size(&rs[j]) {
                return Ok(false);
            }
        }
    }
    for w in rs.windows(2) {
        if size(&w[0]) == size(&w[1]) {
            let key = |r: &Reaction| (side_atoms(r.reactants()), side_atoms(r.products()));
            if key(&w[1]) < key(&w[0]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{parse_crn, serialize_crn_line};

    #[test]
    fn single_species_single_reaction() {
        let mut lines = Vec::new();
        let n = enumerate_scope(Scope::new(1, 1), &ClassSpec::ffnc(), |c| lines.push(serialize_crn_line(c))).unwrap();
        assert_eq!(n, 3);
        lines.sort();
        assert_eq!(lines, vec!["2S0 -> ", "2S0 -> S0", "S0 -> "]);
    }

    #[test]
    fn small_table_cells() {
        let ffnc = ClassSpec::ffnc();
        assert_eq!(count_scope(Scope::new(2, 2), &ffnc).unwrap(), 22);
        assert_eq!(count_scope(Scope::new(1, 5), &ffnc).unwrap(), 0);
        assert_eq!(count_scope(Scope::new(2, 3), &ffnc).unwrap(), 199);
    }

    #[test]
    fn canonical_examples() {
        assert!(!is_canonical(&parse_crn("S1 -> S0").unwrap()).unwrap());
        assert!(is_canonical(&parse_crn("S0 -> S1").unwrap()).unwrap());
        assert!(!is_canonical(&parse_crn("S0 + S1 -> S2\nS0 -> S1").unwrap()).unwrap());
        assert!(is_canonical(&parse_crn("3A -> B").unwrap()).is_err());
    }

    #[test]
    fn requirement_matches_scan_rule() {
        assert_eq!(requirement(&[0]), -1);
        assert_eq!(requirement(&[0, 1, 2]), -1);
        assert_eq!(requirement(&[0, 2]), 1);
        assert_eq!(requirement(&[3, 4]), 2);
        assert_eq!(requirement(&[1, 1, 0]), 0);
    }

    #[test]
    fn emitted_networks_are_canonical() {
        let ffnc = ClassSpec::ffnc();
        enumerate_scope(Scope::new(3, 4), &ffnc, |c| {
            assert!(is_canonical(c).unwrap(), "{c}");
            assert!(crate::constraints::satisfies(c, &ffnc), "{c}");
        })
        .unwrap();
    }

    #[test]
    fn limit_and_resume_cover_the_scope() {
        let spec = ClassSpec::ffnc();
        let scope = Scope::new(2, 3);
        let all = collect_scope(scope, &spec).unwrap();
        let mut got = Vec::new();
        let mut opts = EnumOptions { limit: Some(50), resume_after: None };
        loop {
            match enumerate_scope_with(scope, &spec, &opts, |c| {
                got.push(c.clone());
                ControlFlow::Continue(())
            }) {
                Ok(_) => break,
                Err(EnumError::Partial { token, .. }) => {
                    let t: ResumeToken = token.to_string().parse().unwrap();
                    opts.resume_after = Some(t);
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(got, all);
    }

    #[test]
    fn unbounded_sides_rejected() {
        assert!(matches!(count_scope(Scope::new(1, 1), &ClassSpec::general()), Err(EnumError::UnboundedSides)));
        let spec = ClassSpec { max_reactants: Some(3), max_products: Some(1), ..ClassSpec::general() };
        assert!(count_scope(Scope::new(1, 1), &spec).unwrap() > 0);
    }

    #[test]
    fn deepening_order_is_reactions_major() {
        let v: Vec<_> = deepening_order(Scope::new(2, 3)).map(|s| (s.reactions, s.species)).collect();
        assert_eq!(v, vec![(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)]);
    }
}
