//! Structural class predicates and their composition.
//!
//! "Produces" and "consumes" always refer to net stoichiometry: a catalyst is
//! neither produced nor consumed by its reaction.

use std::fmt;
use std::str::FromStr;

use crate::crn::{Crn, Reaction, SpeciesId};

/// Enabled class flags plus size parameters. Every flag is a conjunct.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ClassSpec {
    pub elementary: bool,
    pub catalytic: bool,
    pub autocatalytic: bool,
    pub metabolic: bool,
    pub feed_forward: bool,
    pub non_competitive: bool,
    pub must_consume: bool,
    pub max_reactants: Option<u32>,
    pub max_products: Option<u32>,
    pub min_only_product_species: Option<usize>,
    pub min_not_only_product_species: Option<usize>,
    pub max_total_arity: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassSpecError {
    #[error("unknown class `{0}` (expected one of: general, elementary, catalytic, autocatalytic, metabolic, ffnc, 2in2out)")]
    UnknownClass(String),
    #[error("line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("metabolic requires catalytic")]
    MetabolicWithoutCatalytic,
    #[error("autocatalytic requires elementary")]
    AutocatalyticWithoutElementary,
}

impl ClassSpec {
    /// No structural restriction beyond the basic network invariants.
    pub fn general() -> Self {
        Self::default()
    }

    pub fn elementary() -> Self {
        ClassSpec { elementary: true, ..Self::default() }
    }

    pub fn catalytic() -> Self {
        ClassSpec { catalytic: true, ..Self::elementary() }
    }

    pub fn autocatalytic() -> Self {
        ClassSpec { autocatalytic: true, ..Self::catalytic() }
    }

    pub fn metabolic() -> Self {
        ClassSpec { metabolic: true, ..Self::catalytic() }
    }

    /// Elementary, feed-forward, non-competitive and every reaction consumes.
    pub fn ffnc() -> Self {
        ClassSpec { feed_forward: true, non_competitive: true, must_consume: true, ..Self::elementary() }
    }

    /// FFNC networks with room for two dual-rail inputs and two dual-rail
    /// outputs: at least four species occurring only as products, at least
    /// four that occur as reactants, and at most 16 reactant and product
    /// molecules in total.
    pub fn two_in_two_out() -> Self {
        ClassSpec {
            min_only_product_species: Some(4),
            min_not_only_product_species: Some(4),
            max_total_arity: Some(16),
            ..Self::ffnc()
        }
    }

    pub fn validate(&self) -> Result<(), ClassSpecError> {
        if self.metabolic && !self.catalytic {
            return Err(ClassSpecError::MetabolicWithoutCatalytic);
        }
        if self.autocatalytic && !self.elementary {
            return Err(ClassSpecError::AutocatalyticWithoutElementary);
        }
        Ok(())
    }

    /// Per-reaction cap on reactant molecules, combining `elementary` and `max_reactants`.
    pub fn reactant_cap(&self) -> Option<u32> {
        let e = if self.elementary { Some(2) } else { None };
        match (e, self.max_reactants) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn product_cap(&self) -> Option<u32> {
        let e = if self.elementary { Some(2) } else { None };
        match (e, self.max_products) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Stable text rendering, used for cache fingerprints.
    pub fn fingerprint(&self) -> String {
        let opt = |o: Option<u32>| o.map_or("-".to_string(), |v| v.to_string());
        let opt_us = |o: Option<usize>| o.map_or("-".to_string(), |v| v.to_string());
        format!(
            "elementary={};catalytic={};autocatalytic={};metabolic={};feed_forward={};non_competitive={};must_consume={};max_reactants={};max_products={};min_only_product_species={};min_not_only_product_species={};max_total_arity={}",
            self.elementary as u8,
            self.catalytic as u8,
            self.autocatalytic as u8,
            self.metabolic as u8,
            self.feed_forward as u8,
            self.non_competitive as u8,
            self.must_consume as u8,
            opt(self.max_reactants),
            opt(self.max_products),
            opt_us(self.min_only_product_species),
            opt_us(self.min_not_only_product_species),
            opt(self.max_total_arity),
        )
    }

    /// Applies one `key=value` setting. `class=NAME` resets to a named class.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let flag = |v: &str| match v {
            "1" | "true" | "yes" => Ok(true),
            "0" | "false" | "no" => Ok(false),
            _ => Err(format!("expected boolean for `{key}`, got `{v}`")),
        };
        let opt_num = |v: &str| -> Result<Option<u32>, String> {
            if v == "-" || v.is_empty() || v == "none" {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| format!("expected integer for `{key}`, got `{v}`"))
            }
        };
        match key {
            "class" => *self = value.parse().map_err(|e: ClassSpecError| e.to_string())?,
            "elementary" => self.elementary = flag(value)?,
            "catalytic" => self.catalytic = flag(value)?,
            "autocatalytic" => self.autocatalytic = flag(value)?,
            "metabolic" => self.metabolic = flag(value)?,
            "feed_forward" => self.feed_forward = flag(value)?,
            "non_competitive" => self.non_competitive = flag(value)?,
            "must_consume" => self.must_consume = flag(value)?,
            "max_reactants" => self.max_reactants = opt_num(value)?,
            "max_products" => self.max_products = opt_num(value)?,
            "min_only_product_species" => self.min_only_product_species = opt_num(value)?.map(|v| v as usize),
            "min_not_only_product_species" => {
                self.min_not_only_product_species = opt_num(value)?.map(|v| v as usize)
            }
            "max_total_arity" => self.max_total_arity = opt_num(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses a flat `key=value` config (one per line, `#` comments).
    pub fn from_config(text: &str) -> Result<Self, ClassSpecError> {
        let mut spec = ClassSpec::general();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ClassSpecError::Config {
                line: i + 1,
                message: "expected key=value".into(),
            })?;
            spec.set(k.trim(), v.trim()).map_err(|message| ClassSpecError::Config { line: i + 1, message })?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl FromStr for ClassSpec {
    type Err = ClassSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "general" => Self::general(),
            "elementary" => Self::elementary(),
            "catalytic" => Self::catalytic(),
            "autocatalytic" => Self::autocatalytic(),
            "metabolic" => Self::metabolic(),
            "ffnc" | "feedforward" => Self::ffnc(),
            "2in2out" => Self::two_in_two_out(),
            other => return Err(ClassSpecError::UnknownClass(other.to_string())),
        })
    }
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fingerprint())
    }
}

/// Reaction dependency graph: `(r1, r2)` is an edge iff some species is net
/// produced by `r1` and net consumed by `r2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl DependencyGraph {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn successors(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == r).map(|e| e.1)
    }

    /// A topological order of the reactions, or `None` if the graph is cyclic.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut ready: Vec<usize> = (0..self.n).filter(|&i| indeg[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(r) = ready.pop() {
            order.push(r);
            let mut next: Vec<usize> = Vec::new();
            for s in self.successors(r) {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    next.push(s);
                }
            }
            next.sort_unstable_by(|a, b| b.cmp(a));
            ready.extend(next);
            ready.sort_unstable_by(|a, b| b.cmp(a));
        }
        (order.len() == self.n).then_some(order)
    }
}

fn total_reactants(r: &Reaction) -> u32 {
    r.reactants().total()
}

fn total_products(r: &Reaction) -> u32 {
    r.products().total()
}

pub fn is_elementary(crn: &Crn) -> bool {
    crn.reactions().iter().all(|r| total_reactants(r) <= 2 && total_products(r) <= 2)
}

pub fn is_catalytic_reaction(r: &Reaction) -> bool {
    r.reactants().species().any(|s| r.products().contains(s))
}

/// Every reaction shares at least one species between its two sides.
pub fn is_catalytic(crn: &Crn) -> bool {
    crn.reactions().iter().all(is_catalytic_reaction)
}

/// Exactly two products, both copies of one species that is also a reactant.
pub fn is_autocatalytic_reaction(r: &Reaction) -> bool {
    is_catalytic_reaction(r) && r.products().total() == 2 && r.products().species().count() == 1
}

pub fn is_autocatalytic(crn: &Crn) -> bool {
    is_elementary(crn) && crn.reactions().iter().all(is_autocatalytic_reaction)
}

/// Appears on both sides of `r`.
pub fn is_catalyst(s: SpeciesId, r: &Reaction) -> bool {
    r.reactants().contains(s) && r.products().contains(s)
}

/// Catalytic, and a species that is a catalyst anywhere is a catalyst in
/// every reaction that contains it.
pub fn is_metabolic(crn: &Crn) -> bool {
    if !is_catalytic(crn) {
        return false;
    }
    crn.species().all(|s| {
        let catalyst_somewhere = crn.reactions().iter().any(|r| is_catalyst(s, r));
        !catalyst_somewhere || crn.reactions().iter().filter(|r| r.contains(s)).all(|r| is_catalyst(s, r))
    })
}

pub fn dependency_graph(crn: &Crn) -> DependencyGraph {
    let rs = crn.reactions();
    let mut edges = Vec::new();
    for (i, a) in rs.iter().enumerate() {
        for (j, b) in rs.iter().enumerate() {
            if crn.species().any(|s| a.net_produces(s) && b.net_consumes(s)) {
                edges.push((i, j));
            }
        }
    }
    DependencyGraph { n: rs.len(), edges }
}

pub fn is_feed_forward(crn: &Crn) -> bool {
    dependency_graph(crn).topological_order().is_some()
}

/// For all `r1 != r2` and species `s`: `s` is not both a reactant of `r1`
/// and net consumed by `r2`.
pub fn is_non_competitive(crn: &Crn) -> bool {
    let rs = crn.reactions();
    for (i, a) in rs.iter().enumerate() {
        for (j, b) in rs.iter().enumerate() {
            if i != j && a.reactants().species().any(|s| b.net_consumes(s)) {
                return false;
            }
        }
    }
    true
}

/// Looser reading: a species net consumed by one reaction is a reactant of no
/// other reaction. Differs from [`is_non_competitive`] only in which of the
/// two roles is quantified first; kept for the diagnostic comparison.
pub fn is_non_competitive_prose(crn: &Crn) -> bool {
    let rs = crn.reactions();
    crn.species().all(|s| {
        rs.iter().enumerate().filter(|(_, r)| r.net_consumes(s)).all(|(i, _)| {
            rs.iter().enumerate().all(|(j, other)| j == i || !other.reactants().contains(s))
        })
    })
}

/// Every reaction net consumes at least one species.
pub fn must_consume(crn: &Crn) -> bool {
    crn.reactions().iter().all(|r| r.reactants().species().any(|s| r.net_consumes(s)))
}

pub fn total_arity(crn: &Crn) -> u32 {
    crn.reactions().iter().map(|r| total_reactants(r) + total_products(r)).sum()
}

pub fn satisfies(crn: &Crn, spec: &ClassSpec) -> bool {
    if spec.elementary && !is_elementary(crn) {
        return false;
    }
    if let Some(cap) = spec.max_reactants {
        if crn.reactions().iter().any(|r| total_reactants(r) > cap) {
            return false;
        }
    }
    if let Some(cap) = spec.max_products {
        if crn.reactions().iter().any(|r| total_products(r) > cap) {
            return false;
        }
    }
    if spec.catalytic && !is_catalytic(crn) {
        return false;
    }
    if spec.autocatalytic && !is_autocatalytic(crn) {
        return false;
    }
    if spec.metabolic && !is_metabolic(crn) {
        return false;
    }
    if spec.must_consume && !must_consume(crn) {
        return false;
    }
    if spec.non_competitive && !is_non_competitive(crn) {
        return false;
    }
    if spec.feed_forward && !is_feed_forward(crn) {
        return false;
    }
    if let Some(cap) = spec.max_total_arity {
        if total_arity(crn) > cap {
            return false;
        }
    }
    let only_products = crn.only_product_species().len();
    if let Some(min) = spec.min_only_product_species {
        if only_products < min {
            return false;
        }
    }
    if let Some(min) = spec.min_not_only_product_species {
        if crn.species_count() - only_products < min {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_crn;

    fn p(text: &str) -> Crn {
        parse_crn(text).unwrap()
    }

    fn max_network() -> Crn {
        p("A -> Z1 + Y\nB -> Z2 + Y\nZ1 + Z2 -> K\nY + K -> ")
    }

    #[test]
    fn elementary() {
        assert!(is_elementary(&max_network()));
        assert!(!is_elementary(&p("3A -> B")));
        assert!(is_elementary(&p("A + B -> C + D")));
    }

    #[test]
    fn catalytic() {
        assert!(is_catalytic(&p("S0 + S1 -> 2S0\nS0 + S1 -> 2S1")));
        assert!(!is_catalytic(&p("A -> B")));
        assert!(is_catalytic(&p("X + Y -> 2Y")));
    }

    #[test]
    fn autocatalytic() {
        assert!(is_autocatalytic(&p("X + Y -> 2Y")));
        assert!(parse_crn("X + Y -> Y + X").is_err());
        assert!(!is_autocatalytic(&p("X + Y -> X + Z")));
        assert!(is_autocatalytic(&p("Y -> 2Y")));
    }

    #[test]
    fn metabolic() {
        assert!(is_metabolic(&p("E + S -> E + P")));
        assert!(!is_metabolic(&p("E + S -> E + P\nE -> Q")));
        assert!(!is_metabolic(&p("S0 + S1 -> 2S0\nS0 + S1 -> 2S1")));
    }

    #[test]
    fn dependency_graph_of_max_network() {
        let g = dependency_graph(&max_network());
        let mut e = g.edges().to_vec();
        e.sort();
        assert_eq!(e, vec![(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!(dependency_graph(&p("A -> B")).edges().is_empty());
        let mut e = dependency_graph(&p("A -> B\nB -> A")).edges().to_vec();
        e.sort();
        assert_eq!(e, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn feed_forward() {
        assert!(is_feed_forward(&max_network()));
        assert!(!is_feed_forward(&p("A -> B\nB -> A")));
        assert!(is_feed_forward(&p("X + Y -> 2Y")));
    }

    #[test]
    fn non_competitive() {
        assert!(is_non_competitive(&max_network()));
        assert!(!is_non_competitive(&p("A -> B\nA -> C")));
        assert!(!is_non_competitive(&p("X + C -> Y\nC + D -> E")));
    }

    #[test]
    fn consumes() {
        assert!(!must_consume(&p("A -> 2A")));
        assert!(must_consume(&max_network()));
        assert!(must_consume(&p("X + Y -> Y + Y")));
    }

    #[test]
    fn composed_classes() {
        assert!(satisfies(&max_network(), &ClassSpec::ffnc()));
        assert!(!satisfies(&p("A -> B\nB -> A"), &ClassSpec::ffnc()));
        let minmax = p("X1p -> M1 + Ymaxp\nX1m -> M2 + Yminm\nX2p -> M2 + Ymaxp\nX2m -> M1 + Yminm\nM1 + M2 -> Ymaxm + Yminp");
        assert!(satisfies(&minmax, &ClassSpec::two_in_two_out()));
        assert!(!satisfies(&max_network(), &ClassSpec::two_in_two_out()));
    }

    #[test]
    fn topological_order_witnesses_feed_forward() {
        let c = max_network();
        let order = dependency_graph(&c).topological_order().unwrap();
        let pos: Vec<usize> = {
            let mut v = vec![0; order.len()];
            for (k, &r) in order.iter().enumerate() {
                v[r] = k;
            }
            v
        };
        for (i, a) in c.reactions().iter().enumerate() {
            for (j, b) in c.reactions().iter().enumerate() {
                if c.species().any(|s| b.net_produces(s) && a.net_consumes(s)) {
                    assert!(pos[j] < pos[i]);
                }
            }
        }
    }

    #[test]
    fn config_round_trip() {
        let spec = ClassSpec::from_config("class=ffnc\nmax_total_arity=16\n# note\n").unwrap();
        assert!(spec.feed_forward && spec.elementary);
        assert_eq!(spec.max_total_arity, Some(16));
        assert!(ClassSpec::from_config("metabolic=1").is_err());
        assert!(ClassSpec::from_config("bogus=1").is_err());
        let t3: ClassSpec = "2in2out".parse().unwrap();
        assert_eq!(t3, ClassSpec::two_in_two_out());
    }
}
