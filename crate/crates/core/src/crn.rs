//! Species, multiset reactions and networks.

use std::collections::BTreeMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::CrnError;

/// Dense 0-based index of a species within its network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpeciesId(pub u16);

impl SpeciesId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for SpeciesId {
    fn from(i: usize) -> Self {
        SpeciesId(i as u16)
    }
}

/// A multiset of species, stored as `(species, count)` pairs sorted by species.
///
/// Counts are always at least one; absent species have an implicit count of zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpeciesMultiset {
    entries: SmallVec<[(SpeciesId, u8); 4]>,
}

impl SpeciesMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a multiset from a list of atoms (repetition allowed, any order).
    pub fn from_atoms<I: IntoIterator<Item = SpeciesId>>(atoms: I) -> Self {
        let mut m = Self::new();
        for s in atoms {
            m.add(s, 1);
        }
        m
    }

    pub fn from_counts<I: IntoIterator<Item = (SpeciesId, u8)>>(counts: I) -> Self {
        let mut m = Self::new();
        for (s, k) in counts {
            m.add(s, k);
        }
        m
    }

    pub fn add(&mut self, s: SpeciesId, k: u8) {
        if k == 0 {
            return;
        }
        match self.entries.binary_search_by_key(&s, |e| e.0) {
            Ok(i) => self.entries[i].1 += k,
            Err(i) => self.entries.insert(i, (s, k)),
        }
    }

    pub fn count(&self, s: SpeciesId) -> u32 {
        match self.entries.binary_search_by_key(&s, |e| e.0) {
            Ok(i) => self.entries[i].1 as u32,
            Err(_) => 0,
        }
    }

    pub fn contains(&self, s: SpeciesId) -> bool {
        self.count(s) > 0
    }

    /// Total number of molecules, counting multiplicity.
    pub fn total(&self) -> u32 {
        self.entries.iter().map(|e| e.1 as u32).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct species with their counts, ascending by id.
    pub fn iter(&self) -> impl Iterator<Item = (SpeciesId, u32)> + '_ {
        self.entries.iter().map(|&(s, k)| (s, k as u32))
    }

    pub fn species(&self) -> impl Iterator<Item = SpeciesId> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// Atoms in ascending order with repetition, e.g. `{A:2, B:1}` -> `[A, A, B]`.
    pub fn atoms(&self) -> Vec<SpeciesId> {
        let mut v = Vec::with_capacity(self.total() as usize);
        for &(s, k) in &self.entries {
            for _ in 0..k {
                v.push(s);
            }
        }
        v
    }

    pub fn map_species(&self, f: impl Fn(SpeciesId) -> SpeciesId) -> Self {
        Self::from_counts(self.entries.iter().map(|&(s, k)| (f(s), k)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reaction {
    reactants: SpeciesMultiset,
    products: SpeciesMultiset,
}

impl Reaction {
    pub fn new(reactants: SpeciesMultiset, products: SpeciesMultiset) -> Result<Self, CrnError> {
        if reactants.is_empty() {
            return Err(CrnError::EmptyReactants);
        }
        if reactants == products {
            return Err(CrnError::ReactantsEqualProducts);
        }
        Ok(Reaction { reactants, products })
    }

    pub fn reactants(&self) -> &SpeciesMultiset {
        &self.reactants
    }

    pub fn products(&self) -> &SpeciesMultiset {
        &self.products
    }

    /// Products count minus reactants count of `s`.
    pub fn net_gain(&self, s: SpeciesId) -> i32 {
        self.products.count(s) as i32 - self.reactants.count(s) as i32
    }

    pub fn net_produces(&self, s: SpeciesId) -> bool {
        self.net_gain(s) > 0
    }

    pub fn net_consumes(&self, s: SpeciesId) -> bool {
        self.net_gain(s) < 0
    }

    pub fn contains(&self, s: SpeciesId) -> bool {
        self.reactants.contains(s) || self.products.contains(s)
    }

    /// Species appearing on either side, ascending, without duplicates.
    pub fn species(&self) -> Vec<SpeciesId> {
        let mut v: Vec<SpeciesId> = self.reactants.species().chain(self.products.species()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn map_species(&self, f: impl Fn(SpeciesId) -> SpeciesId + Copy) -> Self {
        Reaction {
            reactants: self.reactants.map_species(f),
            products: self.products.map_species(f),
        }
    }
}

/// A chemical reaction network: an ordered list of distinct reactions over
/// `species_count` species, every one of which occurs in some reaction.
#[derive(Debug, Clone)]
pub struct Crn {
    species_count: usize,
    reactions: Vec<Reaction>,
    names: Option<Vec<String>>,
}

impl PartialEq for Crn {
    fn eq(&self, other: &Self) -> bool {
        self.species_count == other.species_count && self.reactions == other.reactions
    }
}

impl Eq for Crn {}

impl std::hash::Hash for Crn {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.species_count.hash(state);
        self.reactions.hash(state);
    }
}

impl Crn {
    pub fn new(species_count: usize, reactions: Vec<Reaction>) -> Result<Self, CrnError> {
        if species_count == 0 {
            return Err(CrnError::NoSpecies);
        }
        let mut used = vec![false; species_count];
        for (i, r) in reactions.iter().enumerate() {
            for s in r.species() {
                if s.index() >= species_count {
                    return Err(CrnError::SpeciesOutOfRange { species: s.index(), count: species_count });
                }
                used[s.index()] = true;
            }
            if reactions[..i].contains(r) {
                return Err(CrnError::DuplicateReaction { index: i });
            }
        }
        if let Some(s) = used.iter().position(|u| !u) {
            return Err(CrnError::UnusedSpecies { species: s });
        }
        Ok(Crn { species_count, reactions, names: None })
    }

    /// Attaches display names; `names.len()` must equal the species count.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, CrnError> {
        if names.len() != self.species_count {
            return Err(CrnError::NameCount { expected: self.species_count, got: names.len() });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn species_count(&self) -> usize {
        self.species_count
    }

    pub fn reaction_count(&self) -> usize {
        self.reactions.len()
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn reaction(&self, i: usize) -> &Reaction {
        &self.reactions[i]
    }

    pub fn species(&self) -> impl Iterator<Item = SpeciesId> {
        (0..self.species_count).map(SpeciesId::from)
    }

    pub fn name(&self, s: SpeciesId) -> String {
        match &self.names {
            Some(n) => n[s.index()].clone(),
            None => format!("S{}", s.0),
        }
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Looks up a species by display name (or by `S<k>` when unnamed).
    pub fn species_by_name(&self, name: &str) -> Option<SpeciesId> {
        self.species().find(|&s| self.name(s) == name)
    }

    pub fn net_gain(&self, reaction: usize, s: SpeciesId) -> Result<i32, CrnError> {
        let r = self
            .reactions
            .get(reaction)
            .ok_or(CrnError::ReactionOutOfRange { index: reaction, count: self.reactions.len() })?;
        if s.index() >= self.species_count {
            return Err(CrnError::SpeciesOutOfRange { species: s.index(), count: self.species_count });
        }
        Ok(r.net_gain(s))
    }

    /// Species that appear as a reactant in at least one reaction.
    pub fn reactant_species(&self) -> Vec<bool> {
        let mut v = vec![false; self.species_count];
        for r in &self.reactions {
            for s in r.reactants().species() {
                v[s.index()] = true;
            }
        }
        v
    }

    /// Species that occur only on product sides.
    pub fn only_product_species(&self) -> Vec<SpeciesId> {
        let reactant = self.reactant_species();
        self.species().filter(|s| !reactant[s.index()]).collect()
    }

    /// Applies a species relabelling `perm[old] = new` and a reaction order.
    pub fn relabeled(&self, perm: &[usize], order: &[usize]) -> Crn {
        let reactions = order
            .iter()
            .map(|&i| self.reactions[i].map_species(|s| SpeciesId::from(perm[s.index()])))
            .collect();
        let names = self.names.as_ref().map(|n| {
            let mut out = vec![String::new(); n.len()];
            for (old, name) in n.iter().enumerate() {
                out[perm[old]] = name.clone();
            }
            out
        });
        Crn { species_count: self.species_count, reactions, names }
    }

    /// Drops display names, keeping the structure.
    pub fn unnamed(&self) -> Crn {
        Crn { species_count: self.species_count, reactions: self.reactions.clone(), names: None }
    }
}

impl fmt::Display for Crn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::format::serialize_crn(self))
    }
}

/// Per-species invariant used to restrict the isomorphism search.
fn species_signature(crn: &Crn, s: SpeciesId) -> Vec<(u32, u32, u32, u32)> {
    let mut sig: Vec<(u32, u32, u32, u32)> = crn
        .reactions
        .iter()
        .filter(|r| r.contains(s))
        .map(|r| (r.reactants().count(s), r.products().count(s), r.reactants().total(), r.products().total()))
        .collect();
    sig.sort();
    sig
}

/// True iff some species bijection plus reaction reordering maps `a` onto `b`.
pub fn isomorphic(a: &Crn, b: &Crn) -> bool {
    if a.species_count != b.species_count || a.reactions.len() != b.reactions.len() {
        return false;
    }
    let mut shape_a: Vec<(u32, u32)> =
        a.reactions.iter().map(|r| (r.reactants().total(), r.products().total())).collect();
    let mut shape_b: Vec<(u32, u32)> =
        b.reactions.iter().map(|r| (r.reactants().total(), r.products().total())).collect();
    shape_a.sort();
    shape_b.sort();
    if shape_a != shape_b {
        return false;
    }
    let sig_a: Vec<_> = a.species().map(|s| species_signature(a, s)).collect();
    let sig_b: Vec<_> = b.species().map(|s| species_signature(b, s)).collect();
    let mut classes_a: BTreeMap<&Vec<(u32, u32, u32, u32)>, usize> = BTreeMap::new();
    let mut classes_b: BTreeMap<&Vec<(u32, u32, u32, u32)>, usize> = BTreeMap::new();
    for s in &sig_a {
        *classes_a.entry(s).or_default() += 1;
    }
    for s in &sig_b {
        *classes_b.entry(s).or_default() += 1;
    }
    if classes_a != classes_b {
        return false;
    }
    let mut target: Vec<Reaction> = b.reactions.clone();
    target.sort();
    let n = a.species_count;
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    assign(a, &sig_a, &sig_b, &target, 0, &mut perm, &mut taken)
}

fn assign(
    a: &Crn,
    sig_a: &[Vec<(u32, u32, u32, u32)>],
    sig_b: &[Vec<(u32, u32, u32, u32)>],
    target: &[Reaction],
    next: usize,
    perm: &mut Vec<usize>,
    taken: &mut Vec<bool>,
) -> bool {
    let n = perm.len();
    if next == n {
        let mut mapped: Vec<Reaction> =
            a.reactions.iter().map(|r| r.map_species(|s| SpeciesId::from(perm[s.index()]))).collect();
        mapped.sort();
        return mapped == target;
    }
    for cand in 0..n {
        if taken[cand] || sig_a[next] != sig_b[cand] {
            continue;
        }
        perm[next] = cand;
        taken[cand] = true;
        if assign(a, sig_a, sig_b, target, next + 1, perm, taken) {
            return true;
        }
        taken[cand] = false;
    }
    perm[next] = usize::MAX;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_crn;

    fn max_network() -> Crn {
        parse_crn("A -> Z1 + Y\nB -> Z2 + Y\nZ1 + Z2 -> K\nY + K -> \n").unwrap()
    }

    #[test]
    fn net_gain_examples() {
        let c = max_network();
        let a = c.species_by_name("A").unwrap();
        assert_eq!(c.net_gain(0, a).unwrap(), -1);
        let cat = parse_crn("X -> X + Y").unwrap();
        assert_eq!(cat.net_gain(0, cat.species_by_name("X").unwrap()).unwrap(), 0);
        let dimer = parse_crn("2A -> A").unwrap();
        assert_eq!(dimer.net_gain(0, SpeciesId(0)).unwrap(), -1);
        assert!(c.net_gain(9, a).is_err());
        assert!(c.net_gain(0, SpeciesId(40)).is_err());
    }

    #[test]
    fn produce_consume_exclusive() {
        let c = max_network();
        for (i, r) in c.reactions().iter().enumerate() {
            for s in c.species() {
                assert!(!(r.net_produces(s) && r.net_consumes(s)), "reaction {i}");
            }
        }
    }

    #[test]
    fn invariants_rejected() {
        let s = |i| SpeciesId(i);
        assert_eq!(
            Reaction::new(SpeciesMultiset::new(), SpeciesMultiset::from_atoms([s(0)])),
            Err(CrnError::EmptyReactants)
        );
        let r = Reaction::new(SpeciesMultiset::from_atoms([s(0)]), SpeciesMultiset::from_atoms([s(1)])).unwrap();
        assert!(matches!(Crn::new(2, vec![r.clone(), r.clone()]), Err(CrnError::DuplicateReaction { index: 1 })));
        assert!(matches!(Crn::new(3, vec![r]), Err(CrnError::UnusedSpecies { species: 2 })));
    }

    #[test]
    fn isomorphism_examples() {
        let a = max_network();
        let b = parse_crn("Q + P -> \nX -> W + Q\nW + V -> P\nU -> V + Q\n").unwrap();
        assert!(isomorphic(&a, &b));
        let x = parse_crn("A -> B").unwrap();
        let y = parse_crn("2A -> B").unwrap();
        assert!(!isomorphic(&x, &y));
        let min = parse_crn("A + B -> C").unwrap();
        let other = parse_crn("A -> B + C").unwrap();
        assert!(!isomorphic(&min, &other));
    }
}
