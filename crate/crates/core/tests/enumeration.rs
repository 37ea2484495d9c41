#[path = "common/naive.rs"]
mod naive;

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use crnkit::constraints::satisfies;
use crnkit::enumerate::{
    collect_scope, count_scope, count_scope_sequential, enumerate_scope_with, is_canonical, EnumError, EnumOptions,
    Scope,
};
use crnkit::format::serialize_crn_line;
use crnkit::{isomorphic, ClassSpec};

fn canonical_set(r: usize, s: usize, spec: &ClassSpec) -> BTreeSet<String> {
    collect_scope(Scope::new(r, s), spec).unwrap().iter().map(serialize_crn_line).collect()
}

#[test]
fn matches_naive_generator_on_small_scopes() {
    for r in 1..=2 {
        for s in 1..=3u8 {
            let ffnc = naive::naive_scope(r, s, &naive::ffnc);
            assert_eq!(canonical_set(r, s as usize, &ClassSpec::ffnc()), ffnc, "ffnc ({r},{s})");
            let elem = naive::naive_scope(r, s, &naive::any_class);
            assert_eq!(canonical_set(r, s as usize, &ClassSpec::elementary()), elem, "elementary ({r},{s})");
        }
    }
}

#[test]
fn matches_naive_generator_three_reactions() {
    let naive = naive::naive_scope(3, 3, &naive::ffnc);
    assert_eq!(naive.len(), 287);
    assert_eq!(canonical_set(3, 3, &ClassSpec::ffnc()), naive);
}

#[test]
fn every_isomorphism_class_is_represented() {
    for (r, s) in [(1, 2), (2, 2), (2, 3), (3, 3)] {
        let classes = naive::naive_classes(r, s, &naive::ffnc);
        let reps: BTreeSet<_> = collect_scope(Scope::new(r, s as usize), &ClassSpec::ffnc())
            .unwrap()
            .iter()
            .map(|c| naive::iso_key(&naive::from_crn(c), s))
            .collect();
        assert_eq!(reps, classes, "scope ({r},{s})");
    }
}

/// The symmetry-breaking rules keep both orientations of a bimolecular
/// reaction whose product is one of its reactants: 10 networks, 8 classes.
#[test]
fn one_reaction_two_species_partition() {
    let crns = collect_scope(Scope::new(1, 2), &ClassSpec::ffnc()).unwrap();
    assert_eq!(crns.len(), 10);
    let mut pairs = Vec::new();
    for (i, a) in crns.iter().enumerate() {
        for b in &crns[i + 1..] {
            let same = naive::iso_key(&naive::from_crn(a), 2) == naive::iso_key(&naive::from_crn(b), 2);
            assert_eq!(isomorphic(a, b), same, "{a} vs {b}");
            if same {
                pairs.push((serialize_crn_line(a), serialize_crn_line(b)));
            }
        }
    }
    pairs.sort();
    let expected = [("S0 + S1 -> 2S0", "S0 + S1 -> 2S1"), ("S0 + S1 -> S0", "S0 + S1 -> S1")];
    assert_eq!(pairs, expected.map(|(a, b)| (a.to_string(), b.to_string())));
    assert_eq!(naive::naive_classes(1, 2, &naive::ffnc).len(), 8);
}

#[test]
fn isomorphism_agrees_with_brute_force() {
    for (r, s) in [(2, 2), (2, 3)] {
        let crns = collect_scope(Scope::new(r, s as usize), &ClassSpec::ffnc()).unwrap();
        let keys: Vec<_> = crns.iter().map(|c| naive::iso_key(&naive::from_crn(c), s)).collect();
        for i in 0..crns.len() {
            for j in i..crns.len() {
                assert_eq!(isomorphic(&crns[i], &crns[j]), keys[i] == keys[j], "{} vs {}", crns[i], crns[j]);
            }
        }
    }
}

#[test]
fn output_is_canonical_and_in_class() {
    let spec = ClassSpec::ffnc();
    for scope in [Scope::new(2, 4), Scope::new(3, 4)] {
        for crn in collect_scope(scope, &spec).unwrap() {
            assert!(is_canonical(&crn).unwrap(), "{crn}");
            assert!(satisfies(&crn, &spec), "{crn}");
            assert_eq!(crn.species_count(), scope.species);
            assert_eq!(crn.reaction_count(), scope.reactions);
        }
    }
}

#[test]
fn sequential_and_parallel_counts_agree() {
    let spec = ClassSpec::ffnc();
    for (r, s) in [(2, 4), (3, 5), (4, 4)] {
        assert_eq!(count_scope(Scope::new(r, s), &spec).unwrap(), count_scope_sequential(Scope::new(r, s), &spec).unwrap());
    }
}

#[test]
fn resumed_enumeration_continues_the_stream() {
    let scope = Scope::new(3, 4);
    let spec = ClassSpec::ffnc();
    let full: Vec<String> = collect_scope(scope, &spec).unwrap().iter().map(serialize_crn_line).collect();
    let mut pieces = Vec::new();
    let mut resume_after = None;
    loop {
        let opts = EnumOptions { limit: Some(1000), resume_after: resume_after.take() };
        let r = enumerate_scope_with(scope, &spec, &opts, |c| {
            pieces.push(serialize_crn_line(c));
            ControlFlow::Continue(())
        });
        match r {
            Ok(_) => break,
            Err(EnumError::Partial { token, .. }) => resume_after = Some(token),
            Err(e) => panic!("{e}"),
        }
    }
    let mut sorted_full = full.clone();
    sorted_full.sort();
    pieces.sort();
    assert_eq!(pieces, sorted_full);
}
