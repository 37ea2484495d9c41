//! Discrete firing semantics: integer molecule counts, one reaction at a time.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crn::Crn;
use crate::par;

/// Name of the generator used for randomized runs, for output headers.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), seeded with seed_from_u64";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub counts: Vec<u64>,
}

impl Configuration {
    pub fn zero(crn: &Crn) -> Self {
        Configuration { counts: vec![0; crn.species_count()] }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn display<'a>(&'a self, crn: &'a Crn) -> impl fmt::Display + 'a {
        ConfigDisplay { c: self, crn }
    }

    /// Parses `A=2,B=5` (unlisted species are 0).
    pub fn parse(crn: &Crn, text: &str) -> Result<Self, DynamicsError> {
        let mut c = Self::zero(crn);
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, n) = part.split_once('=').ok_or_else(|| DynamicsError::BadConfig(part.to_string()))?;
            let s = crn.species_by_name(name.trim()).ok_or_else(|| DynamicsError::UnknownSpecies(name.trim().to_string()))?;
            c.counts[s.index()] = n.trim().parse().map_err(|_| DynamicsError::BadConfig(part.to_string()))?;
        }
        Ok(c)
    }
}

struct ConfigDisplay<'a> {
    c: &'a Configuration,
    crn: &'a Crn,
}

impl fmt::Display for ConfigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.crn.species().map(|s| format!("{}={}", self.crn.name(s), self.c.counts[s.index()])).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    #[error("reaction {0} is not enabled")]
    NotEnabled(usize),
    #[error("no terminal configuration after {0} firings; the network may not terminate")]
    StepCap(u64),
    #[error("bad configuration entry `{0}` (expected NAME=COUNT)")]
    BadConfig(String),
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
}

pub fn enabled(crn: &Crn, config: &Configuration, reaction: usize) -> bool {
    crn.reaction(reaction).reactants().iter().all(|(s, k)| config.counts[s.index()] >= k as u64)
}

pub fn fire(crn: &Crn, config: &Configuration, reaction: usize) -> Result<Configuration, DynamicsError> {
    if !enabled(crn, config, reaction) {
        return Err(DynamicsError::NotEnabled(reaction));
    }
    let r = crn.reaction(reaction);
    let mut next = config.clone();
    for (s, k) in r.reactants().iter() {
        next.counts[s.index()] -= k as u64;
    }
    for (s, k) in r.products().iter() {
        next.counts[s.index()] += k as u64;
    }
    Ok(next)
}

fn enabled_set(crn: &Crn, config: &Configuration) -> Vec<usize> {
    (0..crn.reaction_count()).filter(|&i| enabled(crn, config, i)).collect()
}

pub fn is_terminal(crn: &Crn, config: &Configuration) -> bool {
    (0..crn.reaction_count()).all(|i| !enabled(crn, config, i))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub terminal: Configuration,
    pub sequence: Vec<usize>,
}

pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

/// Fires a uniformly chosen enabled reaction until none is enabled.
pub fn run_to_terminal(crn: &Crn, config: &Configuration, seed: u64, step_cap: u64) -> Result<Run, DynamicsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = config.clone();
    let mut sequence = Vec::new();
    loop {
        let en = enabled_set(crn, &cur);
        if en.is_empty() {
            return Ok(Run { terminal: cur, sequence });
        }
        if sequence.len() as u64 >= step_cap {
            return Err(DynamicsError::StepCap(step_cap));
        }
        let i = en[rng.gen_range(0..en.len())];
        cur = fire(crn, &cur, i)?;
        sequence.push(i);
    }
}

/// How a terminal configuration was reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalWitness {
    /// Seed of the randomized run, or `None` for exhaustive search.
    pub seed: Option<u64>,
    pub sequence: Vec<usize>,
    pub terminal: Configuration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub unique_terminal: bool,
    pub exhaustive: bool,
    /// One witness per distinct terminal configuration (sorted by configuration).
    pub terminals: Vec<TerminalWitness>,
}

impl Verdict {
    /// Two witnesses with different terminal configurations, if any.
    pub fn differing(&self) -> Option<(&TerminalWitness, &TerminalWitness)> {
        if self.terminals.len() >= 2 {
            Some((&self.terminals[0], &self.terminals[1]))
        } else {
            None
        }
    }
}

/// Largest total count for which every maximal firing sequence is explored.
pub const EXHAUSTIVE_TOTAL: u64 = 12;
const EXHAUSTIVE_STATE_CAP: usize = 2_000_000;

/// All terminal configurations reachable from `config`, each with a firing
/// sequence reaching it. `None` if the state space exceeds the cap.
pub fn reachable_terminals(crn: &Crn, config: &Configuration) -> Option<Vec<(Configuration, Vec<usize>)>> {
    // Breadth-first with parent links so every state is expanded once.
    let mut parent: HashMap<Configuration, Option<(Configuration, usize)>> = HashMap::new();
    parent.insert(config.clone(), None);
    let mut frontier = vec![config.clone()];
    let mut terminals: HashSet<Configuration> = HashSet::new();
    while let Some(cur) = frontier.pop() {
        let en = enabled_set(crn, &cur);
        if en.is_empty() {
            terminals.insert(cur);
            continue;
        }
        for i in en {
            let next = fire(crn, &cur, i).expect("enabled");
            if !parent.contains_key(&next) {
                parent.insert(next.clone(), Some((cur.clone(), i)));
                if parent.len() > EXHAUSTIVE_STATE_CAP {
                    return None;
                }
                frontier.push(next);
            }
        }
    }
    let mut out: Vec<(Configuration, Vec<usize>)> = terminals
        .into_iter()
        .map(|t| {
            let mut seq = Vec::new();
            let mut at = t.clone();
            while let Some(Some((prev, i))) = parent.get(&at) {
                seq.push(*i);
                at = prev.clone();
            }
            seq.reverse();
            (t, seq)
        })
        .collect();
    out.sort();
    Some(out)
}

/// Whether every firing order ends in the same configuration. Exhaustive
/// when the total count is at most [`EXHAUSTIVE_TOTAL`], else `trials`
/// randomized runs with seeds `seed_base..seed_base+trials`.
pub fn check_rate_independence(
    crn: &Crn,
    config: &Configuration,
    trials: u64,
    seed_base: u64,
    step_cap: u64,
) -> Result<Verdict, DynamicsError> {
    if config.total() <= EXHAUSTIVE_TOTAL {
        if let Some(ts) = reachable_terminals(crn, config) {
            if ts.is_empty() {
                return Err(DynamicsError::StepCap(step_cap));
            }
            let terminals: Vec<TerminalWitness> = ts
                .into_iter()
                .map(|(terminal, sequence)| TerminalWitness { seed: None, sequence, terminal })
                .collect();
            return Ok(Verdict { unique_terminal: terminals.len() == 1, exhaustive: true, terminals });
        }
    }
    let runs = par::map_range(trials as usize, |k| {
        let seed = seed_base + k as u64;
        run_to_terminal(crn, config, seed, step_cap).map(|r| (seed, r))
    });
    let mut by_terminal: Vec<TerminalWitness> = Vec::new();
    for r in runs {
        let (seed, run) = r?;
        if !by_terminal.iter().any(|w| w.terminal == run.terminal) {
            by_terminal.push(TerminalWitness { seed: Some(seed), sequence: run.sequence, terminal: run.terminal });
        }
    }
    by_terminal.sort_by(|a, b| a.terminal.cmp(&b.terminal));
    Ok(Verdict { unique_terminal: by_terminal.len() <= 1, exhaustive: false, terminals: by_terminal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_crn;

    fn max_network() -> Crn {
        parse_crn("A -> Z1 + Y\nB -> Z2 + Y\nZ1 + Z2 -> K\nY + K -> ").unwrap()
    }

    #[test]
    fn enabling_and_firing() {
        let crn = max_network();
        let mut c = Configuration::parse(&crn, "Z1=1").unwrap();
        assert!(!enabled(&crn, &c, 2));
        c = Configuration::parse(&crn, "A=2").unwrap();
        assert!(enabled(&crn, &c, 0));
        let next = fire(&crn, &c, 0).unwrap();
        assert_eq!(next, Configuration::parse(&crn, "A=1,Z1=1,Y=1").unwrap());
        assert_eq!(fire(&crn, &Configuration::zero(&crn), 0), Err(DynamicsError::NotEnabled(0)));

        let cat = parse_crn("X + Y -> 2Y").unwrap();
        assert!(!enabled(&cat, &Configuration::parse(&cat, "X=1").unwrap(), 0));
        let after = fire(&cat, &Configuration::parse(&cat, "X=1,Y=1").unwrap(), 0).unwrap();
        assert_eq!(after, Configuration::parse(&cat, "Y=2").unwrap());
    }

    #[test]
    fn max_for_every_seed() {
        let crn = max_network();
        let y = crn.species_by_name("Y").unwrap().index();
        let c = Configuration::parse(&crn, "A=2,B=5").unwrap();
        for seed in 0..20 {
            let run = run_to_terminal(&crn, &c, seed, DEFAULT_STEP_CAP).unwrap();
            assert_eq!(run.terminal.counts[y], 5);
        }
    }

    #[test]
    fn terminal_start_has_empty_sequence() {
        let crn = max_network();
        let run = run_to_terminal(&crn, &Configuration::zero(&crn), 1, 10).unwrap();
        assert!(run.sequence.is_empty());
    }

    #[test]
    fn decay_chain_reaches_zero() {
        let crn = parse_crn("S1 -> \nS0 -> S1").unwrap();
        let c = Configuration::parse(&crn, "S0=4,S1=3").unwrap();
        let run = run_to_terminal(&crn, &c, 3, DEFAULT_STEP_CAP).unwrap();
        assert_eq!(run.terminal.total(), 0);
    }

    #[test]
    fn competing_reactions_are_rate_dependent() {
        let crn = parse_crn("S1 -> \nS1 -> S0").unwrap();
        let c = Configuration::parse(&crn, "S1=3").unwrap();
        let v = check_rate_independence(&crn, &c, 20, 0, DEFAULT_STEP_CAP).unwrap();
        assert!(v.exhaustive);
        assert!(!v.unique_terminal);
        let s0 = crn.species_by_name("S0").unwrap().index();
        let mut seen: Vec<u64> = v.terminals.iter().map(|w| w.terminal.counts[s0]).collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        let (a, b) = v.differing().unwrap();
        assert_ne!(a.terminal, b.terminal);
        for w in [a, b] {
            let mut cur = c.clone();
            for &i in &w.sequence {
                cur = fire(&crn, &cur, i).unwrap();
            }
            assert_eq!(cur, w.terminal);
        }
    }

    #[test]
    fn step_cap_reports_nontermination() {
        let crn = parse_crn("A -> B\nB -> A").unwrap();
        let c = Configuration::parse(&crn, "A=1").unwrap();
        assert_eq!(run_to_terminal(&crn, &c, 0, 50), Err(DynamicsError::StepCap(50)));
        assert!(check_rate_independence(&crn, &c, 3, 0, 50).is_err());
    }

    #[test]
    fn sampled_mode_for_large_totals() {
        let crn = max_network();
        let c = Configuration::parse(&crn, "A=10,B=7").unwrap();
        let v = check_rate_independence(&crn, &c, 20, 0, DEFAULT_STEP_CAP).unwrap();
        assert!(!v.exhaustive);
        assert!(v.unique_terminal);
    }
}
