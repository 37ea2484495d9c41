//! Brute-force reference for seesaw networks: every subset of domain
//! triples, kept when closed under strand/gate interaction, reduced to
//! isomorphism classes by trying every domain permutation.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// (kind, left, right) with kind 0 = strand, 1 = left gate, 2 = right gate.
type Sp = (u8, u8, u8);

fn species(t: (u8, u8, u8)) -> [Sp; 4] {
    let (x, y, z) = t;
    [(0, x, y), (1, y, z), (0, y, z), (2, x, y)]
}

/// Every reaction the species set can perform, as domain triples.
fn forced(sp: &BTreeSet<Sp>) -> BTreeSet<(u8, u8, u8)> {
    let mut out = BTreeSet::new();
    for &(k, a, b) in sp {
        if k != 0 {
            continue;
        }
        for &(g, c, d) in sp {
            if g == 1 && c == b {
                out.insert((a, b, d));
            }
            if g == 2 && d == a {
                out.insert((c, d, b));
            }
        }
    }
    out
}

fn perms(n: u8) -> Vec<Vec<u8>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in perms(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn class_key(set: &[(u8, u8, u8)], domains: u8) -> Vec<(u8, u8, u8)> {
    perms(domains)
        .iter()
        .map(|p| {
            let mut v: Vec<_> = set.iter().map(|&(x, y, z)| (p[x as usize], p[y as usize], p[z as usize])).collect();
            v.sort();
            v
        })
        .min()
        .unwrap()
}

/// Isomorphism classes of closed networks with exactly `reactions` reactions
/// that use every one of `domains` domains, by brute force over subsets.
pub fn brute_force_classes(domains: u8, reactions: usize, max_species: usize) -> BTreeSet<Vec<(u8, u8, u8)>> {
    let triples: Vec<(u8, u8, u8)> =
        (0..domains).flat_map(|x| (0..domains).flat_map(move |y| (0..domains).map(move |z| (x, y, z)))).collect();
    let mut classes = BTreeSet::new();
    let n = triples.len();
    let mut idx: Vec<usize> = (0..reactions).collect();
    if reactions > n {
        return classes;
    }
    loop {
        let set: Vec<_> = idx.iter().map(|&i| triples[i]).collect();
        let sp: BTreeSet<Sp> = set.iter().flat_map(|&t| species(t)).collect();
        let used: BTreeSet<u8> = sp.iter().flat_map(|&(_, a, b)| [a, b]).collect();
        let mine: BTreeSet<_> = set.iter().copied().collect();
        if used.len() == domains as usize && sp.len() <= max_species && forced(&sp) == mine {
            classes.insert(class_key(&set, domains));
        }
        // Next combination.
        let mut k = reactions;
        loop {
            if k == 0 {
                return classes;
            }
            k -= 1;
            if idx[k] < n - reactions + k {
                idx[k] += 1;
                for j in k + 1..reactions {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

