//! Generate-and-filter reference enumerator for small scopes.
//!
//! Builds every set of distinct elementary reactions over a fixed number of
//! species, keeps those that use every species and satisfy a class filter,
//! then applies the symmetry-breaking rules written out directly. Shares no
//! code with the canonical enumerator beyond the network type used to print
//! results.

#![allow(dead_code)]

use std::collections::BTreeSet;

use crnkit::format::serialize_crn_line;
use crnkit::{Crn, Reaction, SpeciesId, SpeciesMultiset};

/// Reactant and product atoms, each sorted ascending.
pub type Rx = (Vec<u8>, Vec<u8>);

fn multisets(species: u8, max: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &frontier {
            let lo = m.last().copied().unwrap_or(0);
            for s in lo..species {
                let mut m2: Vec<u8> = m.clone();
                m2.push(s);
                next.push(m2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Every elementary reaction over `species` species with a non-empty
/// reactant side that differs from its product side.
pub fn elementary_reactions(species: u8) -> Vec<Rx> {
    let sides = multisets(species, 2);
    let mut out = Vec::new();
    for r in &sides {
        if r.is_empty() {
            continue;
        }
        for p in &sides {
            if r != p {
                out.push((r.clone(), p.clone()));
            }
        }
    }
    out
}

fn count(side: &[u8], s: u8) -> i32 {
    side.iter().filter(|&&x| x == s).count() as i32
}

fn net(r: &Rx, s: u8) -> i32 {
    count(&r.1, s) - count(&r.0, s)
}

fn species_of(rs: &[Rx]) -> BTreeSet<u8> {
    rs.iter().flat_map(|(a, b)| a.iter().chain(b)).copied().collect()
}

pub fn must_consume(rs: &[Rx]) -> bool {
    rs.iter().all(|r| r.0.iter().any(|&s| net(r, s) < 0))
}

/// No species is a reactant of one reaction and net consumed by another.
pub fn non_competitive(rs: &[Rx]) -> bool {
    for (i, a) in rs.iter().enumerate() {
        for (j, b) in rs.iter().enumerate() {
            if i != j && a.0.iter().any(|&s| net(b, s) < 0) {
                return false;
            }
        }
    }
    true
}

/// The produce-to-consume graph between reactions has no cycle.
pub fn feed_forward(rs: &[Rx]) -> bool {
    let n = rs.len();
    let species = species_of(rs);
    let edge = |i: usize, j: usize| species.iter().any(|&s| net(&rs[i], s) > 0 && net(&rs[j], s) < 0);
    // Repeatedly remove reactions with no incoming edge from the remainder.
    let mut alive = vec![true; n];
    for _ in 0..n {
        let Some(k) = (0..n).find(|&k| alive[k] && !(0..n).any(|i| alive[i] && edge(i, k))) else {
            return false;
        };
        alive[k] = false;
    }
    true
}

pub fn ffnc(rs: &[Rx]) -> bool {
    must_consume(rs) && non_competitive(rs) && feed_forward(rs)
}

pub fn any_class(_: &[Rx]) -> bool {
    true
}

/// Species are introduced in order of first appearance, reactions are sorted
/// by (reactant count, product count) and then by atoms.
pub fn symmetry_broken(rs: &[Rx]) -> bool {
    let mut next = 0u8;
    for (a, b) in rs {
        for &s in a.iter().chain(b) {
            if s > next {
                return false;
            }
            if s == next {
                next += 1;
            }
        }
    }
    let key = |r: &Rx| (r.0.len(), r.1.len(), r.0.clone(), r.1.clone());
    rs.windows(2).all(|w| key(&w[0]) < key(&w[1]))
}

fn subsets(items: &[Rx], k: usize, start: usize, cur: &mut Vec<Rx>, out: &mut dyn FnMut(&[Rx])) {
    if cur.len() == k {
        out(cur);
        return;
    }
    for i in start..items.len() {
        cur.push(items[i].clone());
        subsets(items, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Every set of `reactions` distinct reactions using exactly the species
/// `0..species` and accepted by `class`, as reactions in generation order.
pub fn labeled_networks(reactions: usize, species: u8, class: &dyn Fn(&[Rx]) -> bool) -> Vec<Vec<Rx>> {
    let all = elementary_reactions(species);
    let mut out = Vec::new();
    subsets(&all, reactions, 0, &mut Vec::new(), &mut |rs| {
        if species_of(rs).len() == species as usize && class(rs) {
            out.push(rs.to_vec());
        }
    });
    out
}

/// `rs` with species renamed by `perm`, sides and reactions sorted.
fn relabel(rs: &[Rx], perm: &[u8]) -> Vec<Rx> {
    let mut out: Vec<Rx> = rs
        .iter()
        .map(|(a, b)| {
            let mut a: Vec<u8> = a.iter().map(|&s| perm[s as usize]).collect();
            let mut b: Vec<u8> = b.iter().map(|&s| perm[s as usize]).collect();
            a.sort();
            b.sort();
            (a, b)
        })
        .collect();
    out.sort();
    out
}

fn permutations(n: usize) -> Vec<Vec<u8>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, (n - 1) as u8);
            out.push(q);
        }
    }
    out
}

/// Smallest relabelled reaction list over all species permutations.
pub fn iso_key(rs: &[Rx], species: u8) -> Vec<Rx> {
    permutations(species as usize).iter().map(|p| relabel(rs, p)).min().expect("at least one permutation")
}

pub fn to_crn(rs: &[Rx], species: u8) -> Crn {
    let side = |v: &[u8]| SpeciesMultiset::from_atoms(v.iter().map(|&s| SpeciesId(s as u16)));
    let reactions = rs.iter().map(|(a, b)| Reaction::new(side(a), side(b)).expect("valid reaction")).collect();
    Crn::new(species as usize, reactions).expect("valid network")
}

/// Serialized networks passing the symmetry-breaking rules.
pub fn naive_scope(reactions: usize, species: u8, class: &dyn Fn(&[Rx]) -> bool) -> BTreeSet<String> {
    labeled_networks(reactions, species, class)
        .into_iter()
        .filter_map(|mut rs| {
            // A set has one sorted order; the first-use rule is then checked on it.
            rs.sort_by_key(|r| (r.0.len(), r.1.len(), r.0.clone(), r.1.clone()));
            symmetry_broken(&rs).then(|| serialize_crn_line(&to_crn(&rs, species)))
        })
        .collect()
}

/// One key per isomorphism class among all labelled networks in scope.
pub fn naive_classes(reactions: usize, species: u8, class: &dyn Fn(&[Rx]) -> bool) -> BTreeSet<Vec<Rx>> {
    labeled_networks(reactions, species, class).iter().map(|rs| iso_key(rs, species)).collect()
}

/// Reactions of a network as oracle tuples.
pub fn from_crn(crn: &Crn) -> Vec<Rx> {
    let atoms = |m: &SpeciesMultiset| m.atoms().into_iter().map(|s| s.0 as u8).collect::<Vec<u8>>();
    crn.reactions().iter().map(|r| (atoms(r.reactants()), atoms(r.products()))).collect()
}
