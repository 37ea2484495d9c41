//! Concrete continuous equilibria of feed-forward, non-competitive networks.
//!
//! In such a network a species consumed by a reaction is a reactant of no
//! other reaction, so each reaction can be run to exhaustion independently:
//! its extent is the smallest `conc / net_loss` over the species it consumes,
//! provided every reactant is present. Catalysts produced later can re-enable
//! a reaction, so passes repeat until nothing fires.

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::constraints::{dependency_graph, is_non_competitive};
use crate::crn::Crn;
use crate::linexpr::Q;

pub type R = Ratio<i128>;

#[derive(Debug, Clone)]
struct Step {
    reactants: Vec<usize>,
    consumed: Vec<(usize, i128)>,
    gains: Vec<(usize, i128)>,
}

/// Precomputed firing schedule for a feed-forward, non-competitive network.
#[derive(Debug, Clone)]
pub struct Equilibrator {
    species: usize,
    steps: Vec<Step>,
}

impl Equilibrator {
    /// `None` when the network is not feed-forward and non-competitive.
    pub fn new(crn: &Crn) -> Option<Self> {
        if !is_non_competitive(crn) {
            return None;
        }
        let order = dependency_graph(crn).topological_order()?;
        let steps = order
            .into_iter()
            .map(|i| {
                let r = crn.reaction(i);
                let reactants = r.reactants().species().map(|s| s.index()).collect();
                let mut consumed = Vec::new();
                let mut gains = Vec::new();
                for s in r.species() {
                    let g = r.net_gain(s) as i128;
                    if g < 0 {
                        consumed.push((s.index(), -g));
                    }
                    if g != 0 {
                        gains.push((s.index(), g));
                    }
                }
                Step { reactants, consumed, gains }
            })
            .collect();
        Some(Equilibrator { species: crn.species_count(), steps })
    }

    pub fn species_count(&self) -> usize {
        self.species
    }

    /// Runs `conc` to its static equilibrium in place. Returns false if it
    /// did not settle within the pass budget.
    pub fn settle(&self, conc: &mut [R]) -> bool {
        let budget = 2 * self.steps.len() + 2;
        for _ in 0..budget {
            let mut fired = false;
            for step in &self.steps {
                if step.consumed.is_empty() || step.reactants.iter().any(|&s| !conc[s].is_positive()) {
                    continue;
                }
                let extent = step
                    .consumed
                    .iter()
                    .map(|&(s, k)| conc[s] / R::from_integer(k))
                    .min()
                    .expect("non-empty");
                if extent.is_zero() {
                    continue;
                }
                for &(s, g) in &step.gains {
                    conc[s] += extent * R::from_integer(g);
                }
                fired = true;
            }
            if !fired {
                return true;
            }
        }
        false
    }
}

/// Exact conversion for the small rationals used as test points.
pub fn to_small(x: &Q) -> Option<R> {
    use num_traits::ToPrimitive;
    Some(R::new(x.numer().to_i128()?, x.denom().to_i128()?))
}

pub fn to_big(x: &R) -> Q {
    Q::new((*x.numer()).into(), (*x.denom()).into())
}
