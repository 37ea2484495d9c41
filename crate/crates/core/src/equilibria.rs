//! Static equilibria of a network as exact symbolic branches.
//!
//! Every species satisfies `s = s0 + Σ_i netGain(i, s)·flux_i`. At a static
//! equilibrium each reaction has some reactant at zero, so choosing one
//! reactant per reaction (a cover) and setting those to zero gives a linear
//! system in the fluxes. When it has a unique solution, the species and flux
//! values become affine expressions in the initial concentrations, valid on
//! the region where all of them are non-negative.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::crn::{Crn, SpeciesId};
use crate::linexpr::{q, LinExpr, Var, Q};

/// One conservation equation per species: the species' final value.
pub fn conservation_equations(crn: &Crn) -> Vec<(SpeciesId, LinExpr)> {
    crn.species()
        .map(|s| {
            let mut e = LinExpr::init(s);
            for (i, r) in crn.reactions().iter().enumerate() {
                e.add_term(Var::Flux(i), q(r.net_gain(s) as i64));
            }
            (s, e)
        })
        .collect()
}

/// Species held at zero: at least one reactant of every reaction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cover {
    pub zero_set: BTreeSet<SpeciesId>,
}

/// Cartesian product of the reactant sets, first reaction varying fastest,
/// with repeated sets dropped (first occurrence kept).
pub fn reactant_covers(crn: &Crn) -> Vec<Cover> {
    let choices: Vec<Vec<SpeciesId>> = crn.reactions().iter().map(|r| r.reactants().species().collect()).collect();
    let mut idx = vec![0usize; choices.len()];
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    loop {
        let zero_set: BTreeSet<SpeciesId> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
        if seen.insert(zero_set.clone()) {
            out.push(Cover { zero_set });
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Settings for branch construction.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumOptions {
    /// Add `flux_i ≥ 0` to every branch's feasibility region.
    pub nonnegative_fluxes: bool,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions { nonnegative_fluxes: true }
    }
}

/// A solved equilibrium branch. Expressions range over `Var::Init` only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub cover: Cover,
    pub species_value: Vec<LinExpr>,
    pub flux_value: Vec<LinExpr>,
    /// Each expression must be `≥ 0` for the branch to apply.
    pub feasibility: Vec<LinExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("the equilibrium system for this cover has no unique solution")]
pub struct NoUniqueSolution;

impl Branch {
    fn build(cover: Cover, species_value: Vec<LinExpr>, flux_value: Vec<LinExpr>, opts: EquilibriumOptions) -> Self {
        let mut feasibility: Vec<LinExpr> = species_value.clone();
        if opts.nonnegative_fluxes {
            feasibility.extend(flux_value.iter().cloned());
        }
        let mut b = Branch { cover, species_value, flux_value, feasibility };
        b.tidy();
        b
    }

    /// Drops trivially true constraints and duplicates.
    fn tidy(&mut self) {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in self.feasibility.drain(..) {
            if e.is_constant() && !e.constant_term().is_negative() {
                continue;
            }
            let key = format!("{:?}", e.normalized());
            if seen.insert(key) {
                out.push(e);
            }
        }
        self.feasibility = out;
    }

    /// Sets the initial concentration of every non-input species to zero.
    pub fn restrict_inputs(&self, inputs: &[SpeciesId]) -> Branch {
        let f = |v: Var| match v {
            Var::Init(s) if !inputs.contains(&s) => Some(LinExpr::zero()),
            _ => None,
        };
        let sub = |e: &LinExpr| e.substitute_with(f);
        let mut b = Branch {
            cover: self.cover.clone(),
            species_value: self.species_value.iter().map(sub).collect(),
            flux_value: self.flux_value.iter().map(sub).collect(),
            feasibility: self.feasibility.iter().map(sub).collect(),
        };
        b.tidy();
        b
    }

    /// True when some feasibility constraint is a negative constant.
    pub fn is_trivially_infeasible(&self) -> bool {
        self.feasibility.iter().any(|e| e.is_constant() && e.constant_term().is_negative())
    }

    fn value_at(e: &LinExpr, init: &[Q]) -> Q {
        e.eval(|v| match v {
            Var::Init(s) => Some(init[s.index()].clone()),
            Var::Flux(_) => None,
        })
        .expect("branch expressions only mention initial concentrations")
    }

    pub fn is_feasible_at(&self, init: &[Q]) -> bool {
        self.feasibility.iter().all(|e| !Self::value_at(e, init).is_negative())
    }

    pub fn species_at(&self, init: &[Q]) -> Vec<Q> {
        self.species_value.iter().map(|e| Self::value_at(e, init)).collect()
    }

    pub fn fluxes_at(&self, init: &[Q]) -> Vec<Q> {
        self.flux_value.iter().map(|e| Self::value_at(e, init)).collect()
    }
}

/// Solves the equilibrium system for one cover by Gauss-Jordan elimination
/// over the rationals with symbolic right-hand sides.
pub fn solve_branch(crn: &Crn, cover: &Cover, opts: EquilibriumOptions) -> Result<Branch, NoUniqueSolution> {
    let n = crn.reaction_count();
    let rows: Vec<SpeciesId> = cover.zero_set.iter().copied().collect();
    if rows.len() != n {
        return Err(NoUniqueSolution);
    }
    // Row s: Σ_i gain(i,s)·flux_i = -s0.
    let mut a: Vec<Vec<Q>> =
        rows.iter().map(|&s| crn.reactions().iter().map(|r| q(r.net_gain(s) as i64)).collect()).collect();
    let mut rhs: Vec<LinExpr> = rows.iter().map(|&s| -LinExpr::init(s)).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(NoUniqueSolution)?;
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = Q::one() / &a[col][col];
        for c in 0..n {
            a[col][c] = &a[col][c] * &inv;
        }
        rhs[col] = rhs[col].scale(&inv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..n {
                    let delta = &factor * &a[col][c];
                    a[r][c] -= delta;
                }
                rhs[r] = rhs[r].clone() - rhs[col].scale(&factor);
            }
        }
    }
    let flux_value = rhs;
    let species_value = conservation_equations(crn)
        .into_iter()
        .map(|(s, e)| {
            if cover.zero_set.contains(&s) {
                LinExpr::zero()
            } else {
                e.substitute_with(|v| match v {
                    Var::Flux(i) => Some(flux_value[i].clone()),
                    _ => None,
                })
            }
        })
        .collect();
    Ok(Branch::build(cover.clone(), species_value, flux_value, opts))
}

/// Branches for every cover with a unique solution, in cover order.
pub fn all_branches(crn: &Crn, opts: EquilibriumOptions) -> Vec<Branch> {
    reactant_covers(crn)
        .iter()
        .filter_map(|c| match solve_branch(crn, c, opts) {
            Ok(b) => Some(b),
            Err(NoUniqueSolution) => {
                log::debug!("cover {:?} has no unique equilibrium solution", c.zero_set);
                None
            }
        })
        .collect()
}

/// Species values at the first branch feasible at `init`, if any.
pub fn equilibrium_at(branches: &[Branch], init: &[Q]) -> Option<Vec<Q>> {
    branches.iter().find(|b| b.is_feasible_at(init)).map(|b| b.species_at(init))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_crn;

    fn sid(crn: &Crn, name: &str) -> SpeciesId {
        crn.species_by_name(name).unwrap()
    }

    #[test]
    fn single_reaction_equations() {
        let crn = parse_crn("X -> 2Y").unwrap();
        let eq = conservation_equations(&crn);
        let (x, y) = (sid(&crn, "X"), sid(&crn, "Y"));
        assert_eq!(eq[x.index()].1, LinExpr::init(x) - LinExpr::var(Var::Flux(0)));
        assert_eq!(eq[y.index()].1, LinExpr::init(y) + LinExpr::term(Var::Flux(0), q(2)));
        let covers = reactant_covers(&crn);
        assert_eq!(covers.len(), 1);
        let b = solve_branch(&crn, &covers[0], EquilibriumOptions::default()).unwrap();
        assert_eq!(b.flux_value[0], LinExpr::init(x));
        assert!(b.species_value[x.index()].is_zero());
        assert_eq!(b.species_value[y.index()], LinExpr::init(y) + LinExpr::init(x).scale(&q(2)));
    }

    #[test]
    fn covers_are_deduplicated() {
        let crn = parse_crn("A + B -> C\nB + D -> E").unwrap();
        let covers = reactant_covers(&crn);
        assert_eq!(covers.len(), 4);
        let names: Vec<Vec<String>> =
            covers.iter().map(|c| c.zero_set.iter().map(|&s| crn.name(s)).collect()).collect();
        assert!(names.contains(&vec!["B".to_string()]));
    }

    #[test]
    fn min_has_two_branches() {
        let crn = parse_crn("X1 + X2 -> Y").unwrap();
        let bs = all_branches(&crn, EquilibriumOptions::default());
        assert_eq!(bs.len(), 2);
        let (x1, x2, y) = (sid(&crn, "X1"), sid(&crn, "X2"), sid(&crn, "Y"));
        let init = |a: i64, b: i64| {
            let mut v = vec![q(0); 3];
            v[x1.index()] = q(a);
            v[x2.index()] = q(b);
            v
        };
        for (a, b) in [(1, 4), (4, 1), (3, 3), (0, 2)] {
            let vals = equilibrium_at(&bs, &init(a, b)).unwrap();
            assert_eq!(vals[y.index()], q(a.min(b)));
        }
    }

    #[test]
    fn underdetermined_cover_has_no_solution() {
        let crn = parse_crn("A + B -> C\nB + D -> E").unwrap();
        let cover = Cover { zero_set: [sid(&crn, "B")].into_iter().collect() };
        assert_eq!(solve_branch(&crn, &cover, EquilibriumOptions::default()), Err(NoUniqueSolution));
    }

    #[test]
    fn restrict_to_all_species_is_identity() {
        let crn = parse_crn("A -> B").unwrap();
        let b = &all_branches(&crn, EquilibriumOptions::default())[0];
        let all: Vec<_> = crn.species().collect();
        assert_eq!(&b.restrict_inputs(&all), b);
    }
}
