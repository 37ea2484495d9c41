//! Piecewise-linear functions, target functions, and the decision whether a
//! network computes a target.
//!
//! A network's computed function is assembled from its equilibrium branches:
//! after zeroing non-input initial concentrations, each branch contributes a
//! piece (its feasibility region and output expressions). Equivalence with a
//! target is decided exactly by searching, for every pair of pieces and each
//! sign, for a rational point where the two values differ.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::concrete::{to_small, Equilibrator, R};
use crate::crn::{Crn, SpeciesId};
use crate::equilibria::{all_branches, Branch, EquilibriumOptions};
use crate::fm::{self, Constraint};
use crate::linexpr::{q, q_frac, LinExpr, Var, Q};

/// `expr > 0` when strict, else `expr ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinIneq {
    pub expr: LinExpr,
    pub strict: bool,
}

impl LinIneq {
    pub fn nonneg(expr: LinExpr) -> Self {
        LinIneq { expr, strict: false }
    }

    pub fn positive(expr: LinExpr) -> Self {
        LinIneq { expr, strict: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub region: Vec<LinIneq>,
    pub values: Vec<LinExpr>,
}

/// A function of `input_vars` (each ranging over the non-negative rationals)
/// given as a list of pieces. The first piece whose region contains a point
/// defines the value there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PwlFunction {
    pub input_vars: Vec<Var>,
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no piece covers the point {0:?}")]
pub struct Uncovered(pub Vec<Q>);

impl PwlFunction {
    fn index_of(&self, v: Var) -> usize {
        self.input_vars.iter().position(|&w| w == v).unwrap_or_else(|| panic!("{v:?} is not an input variable"))
    }

    fn dense(&self, e: &LinExpr) -> (Vec<Q>, Q) {
        let mut coeffs = vec![Q::zero(); self.input_vars.len()];
        for (v, c) in e.terms() {
            coeffs[self.index_of(v)] = c.clone();
        }
        (coeffs, e.constant_term().clone())
    }

    fn constraint(&self, ineq: &LinIneq) -> Constraint {
        let (coeffs, constant) = self.dense(&ineq.expr);
        Constraint::new(coeffs, constant, ineq.strict)
    }

    fn orthant(&self) -> Vec<Constraint> {
        let n = self.input_vars.len();
        (0..n)
            .map(|i| {
                let mut c = vec![Q::zero(); n];
                c[i] = Q::one();
                Constraint::new(c, Q::zero(), false)
            })
            .collect()
    }

    fn eval_expr(&self, e: &LinExpr, point: &[Q]) -> Q {
        e.eval(|v| Some(point[self.index_of(v)].clone())).expect("all variables assigned")
    }

    fn region_holds(&self, region: &[LinIneq], point: &[Q]) -> bool {
        region.iter().all(|i| {
            let v = self.eval_expr(&i.expr, point);
            if i.strict {
                v.is_positive()
            } else {
                !v.is_negative()
            }
        })
    }

    /// Index of the first piece containing `point`.
    pub fn piece_at(&self, point: &[Q]) -> Option<usize> {
        self.pieces.iter().position(|p| self.region_holds(&p.region, point))
    }

    pub fn eval(&self, point: &[Q]) -> Result<Vec<Q>, Uncovered> {
        let i = self.piece_at(point).ok_or_else(|| Uncovered(point.to_vec()))?;
        Ok(self.pieces[i].values.iter().map(|e| self.eval_expr(e, point)).collect())
    }

    pub fn output_count(&self) -> usize {
        self.pieces.first().map_or(0, |p| p.values.len())
    }

    /// Drops pieces whose region has empty interior in the orthant, removes
    /// redundant inequalities, and rescales the rest to integer form.
    pub fn simplified(&self) -> PwlFunction {
        let n = self.input_vars.len();
        let orthant = self.orthant();
        let mut pieces: Vec<Piece> = Vec::new();
        for p in &self.pieces {
            let cs: Vec<Constraint> = p.region.iter().map(|i| self.constraint(i)).collect();
            let mut all = orthant.clone();
            all.extend(cs.iter().cloned());
            if !fm::has_interior(&all, n) {
                continue;
            }
            let keep = fm::irredundant(&cs, &orthant, n);
            let region = keep
                .into_iter()
                .map(|k| LinIneq { expr: p.region[k].expr.normalized(), strict: p.region[k].strict })
                .collect();
            let piece = Piece { region, values: p.values.clone() };
            if !pieces.contains(&piece) {
                pieces.push(piece);
            }
        }
        PwlFunction { input_vars: self.input_vars.clone(), pieces }
    }

    pub fn display<'a>(&'a self, name: &'a dyn Fn(Var) -> String) -> impl fmt::Display + 'a {
        PwlDisplay { f: self, name }
    }
}

struct PwlDisplay<'a> {
    f: &'a PwlFunction,
    name: &'a dyn Fn(Var) -> String,
}

impl fmt::Display for PwlDisplay<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.f.pieces.iter().enumerate() {
            if k > 0 {
                writeln!(out)?;
            }
            let vals: Vec<String> = p.values.iter().map(|v| v.display_with(self.name).to_string()).collect();
            write!(out, "({})", vals.join(", "))?;
            if p.region.is_empty() {
                write!(out, " everywhere")?;
            } else {
                let conds: Vec<String> = p
                    .region
                    .iter()
                    .map(|i| format!("{} {} 0", i.expr.display_with(self.name), if i.strict { ">" } else { ">=" }))
                    .collect();
                write!(out, " if {}", conds.join(" and "))?;
            }
        }
        Ok(())
    }
}

/// Built-in target functions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TargetKind {
    Max2,
    Min2,
    /// Two outputs: `(min, max)`.
    MinMax2,
    Abs,
    ReLU,
    Identity,
    SumN(usize),
    MulBy(Q),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RailMode {
    Single,
    Dual,
}

impl FromStr for TargetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "max" | "max2" => TargetKind::Max2,
            "min" | "min2" => TargetKind::Min2,
            "minmax" | "minmax2" => TargetKind::MinMax2,
            "abs" => TargetKind::Abs,
            "relu" => TargetKind::ReLU,
            "identity" | "id" => TargetKind::Identity,
            "sum" => TargetKind::SumN(2),
            other => {
                if let Some(n) = other.strip_prefix("sum") {
                    let n: usize = n.parse().map_err(|_| format!("bad arity in `{s}`"))?;
                    if n == 0 {
                        return Err("sum needs at least one input".into());
                    }
                    TargetKind::SumN(n)
                } else if let Some(k) = other.strip_prefix("mulby").or_else(|| other.strip_prefix("mul")) {
                    let k = k.trim_start_matches([':', '=']);
                    let k: Q = match k.split_once('/') {
                        Some((n, d)) => {
                            let n: i64 = n.parse().map_err(|_| format!("bad factor in `{s}`"))?;
                            let d: i64 = d.parse().map_err(|_| format!("bad factor in `{s}`"))?;
                            if d == 0 {
                                return Err(format!("zero denominator in `{s}`"));
                            }
                            q_frac(n, d)
                        }
                        None => q(k.parse().map_err(|_| format!("bad factor in `{s}`"))?),
                    };
                    TargetKind::MulBy(k)
                } else {
                    return Err(format!(
                        "unknown function `{s}` (expected max, min, minmax, abs, relu, identity, sumN, mulK)"
                    ));
                }
            }
        })
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetKind::Max2 => f.write_str("max"),
            TargetKind::Min2 => f.write_str("min"),
            TargetKind::MinMax2 => f.write_str("minmax"),
            TargetKind::Abs => f.write_str("abs"),
            TargetKind::ReLU => f.write_str("relu"),
            TargetKind::Identity => f.write_str("identity"),
            TargetKind::SumN(n) => write!(f, "sum{n}"),
            TargetKind::MulBy(k) => write!(f, "mul{k}"),
        }
    }
}

/// A target function together with its encoding of inputs and outputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TargetFunction {
    pub kind: TargetKind,
    pub dual_rail_inputs: bool,
    pub dual_rail_outputs: bool,
}

/// Placeholder variable for the `i`-th input value in target pieces.
fn value_var(i: usize) -> Var {
    Var::Init(SpeciesId(i as u16))
}

impl TargetFunction {
    pub fn new(kind: TargetKind, rail: RailMode) -> Self {
        let dual = rail == RailMode::Dual;
        TargetFunction { kind, dual_rail_inputs: dual, dual_rail_outputs: dual }
    }

    pub fn rail(&self) -> RailMode {
        if self.dual_rail_inputs {
            RailMode::Dual
        } else {
            RailMode::Single
        }
    }

    pub fn arity(&self) -> usize {
        match self.kind {
            TargetKind::Max2 | TargetKind::Min2 | TargetKind::MinMax2 => 2,
            TargetKind::SumN(n) => n,
            _ => 1,
        }
    }

    pub fn output_count(&self) -> usize {
        if self.kind == TargetKind::MinMax2 {
            2
        } else {
            1
        }
    }

    /// Invariant under permuting the inputs.
    pub fn is_commutative(&self) -> bool {
        matches!(self.kind, TargetKind::Max2 | TargetKind::Min2 | TargetKind::MinMax2 | TargetKind::SumN(_))
    }

    /// Pieces over the input values (placeholder variables `0..arity`).
    pub fn pieces(&self) -> Vec<Piece> {
        let x = |i: usize| LinExpr::var(value_var(i));
        let ge = |a: LinExpr, b: LinExpr| LinIneq::nonneg(a - b);
        let one = |region: Vec<LinIneq>, v: LinExpr| Piece { region, values: vec![v] };
        match &self.kind {
            TargetKind::Max2 => vec![one(vec![ge(x(0), x(1))], x(0)), one(vec![ge(x(1), x(0))], x(1))],
            TargetKind::Min2 => vec![one(vec![ge(x(1), x(0))], x(0)), one(vec![ge(x(0), x(1))], x(1))],
            TargetKind::MinMax2 => vec![
                Piece { region: vec![ge(x(1), x(0))], values: vec![x(0), x(1)] },
                Piece { region: vec![ge(x(0), x(1))], values: vec![x(1), x(0)] },
            ],
            TargetKind::Abs => vec![
                one(vec![LinIneq::nonneg(x(0))], x(0)),
                one(vec![LinIneq::nonneg(-x(0))], -x(0)),
            ],
            TargetKind::ReLU => vec![
                one(vec![LinIneq::nonneg(x(0))], x(0)),
                one(vec![LinIneq::nonneg(-x(0))], LinExpr::zero()),
            ],
            TargetKind::Identity => vec![one(vec![], x(0))],
            TargetKind::SumN(n) => vec![one(vec![], (0..*n).map(x).fold(LinExpr::zero(), |a, b| a + b))],
            TargetKind::MulBy(k) => vec![one(vec![], x(0).scale(k))],
        }
    }

    /// Direct evaluation on input values, generic over the number type.
    pub fn eval_with<T>(&self, xs: &[T], from_q: impl Fn(&Q) -> T) -> Vec<T>
    where
        T: Clone + Ord + num_traits::Num + Signed,
    {
        let max = |a: &T, b: &T| if a >= b { a.clone() } else { b.clone() };
        let min = |a: &T, b: &T| if a <= b { a.clone() } else { b.clone() };
        match &self.kind {
            TargetKind::Max2 => vec![max(&xs[0], &xs[1])],
            TargetKind::Min2 => vec![min(&xs[0], &xs[1])],
            TargetKind::MinMax2 => vec![min(&xs[0], &xs[1]), max(&xs[0], &xs[1])],
            TargetKind::Abs => vec![xs[0].abs()],
            TargetKind::ReLU => vec![max(&xs[0], &T::zero())],
            TargetKind::Identity => vec![xs[0].clone()],
            TargetKind::SumN(n) => vec![xs[..*n].iter().cloned().fold(T::zero(), |a, b| a + b)],
            TargetKind::MulBy(k) => vec![from_q(k) * xs[0].clone()],
        }
    }

    pub fn eval(&self, xs: &[Q]) -> Vec<Q> {
        self.eval_with(xs, Q::clone)
    }

    /// The target expressed over a network's input species under `io`.
    pub fn instantiate(&self, io: &IoAssignment) -> PwlFunction {
        let exprs: Vec<LinExpr> = io.inputs.iter().map(Rail::expr).collect();
        let sub = |e: &LinExpr| {
            e.substitute_with(|v| match v {
                Var::Init(s) => Some(exprs[s.index()].clone()),
                Var::Flux(_) => None,
            })
        };
        let pieces = self
            .pieces()
            .into_iter()
            .map(|p| Piece {
                region: p.region.iter().map(|i| LinIneq { expr: sub(&i.expr), strict: i.strict }).collect(),
                values: p.values.iter().map(sub).collect(),
            })
            .collect();
        PwlFunction { input_vars: io.input_vars(), pieces }
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if self.dual_rail_inputs {
            f.write_str(" (dual-rail)")?;
        }
        Ok(())
    }
}

/// One value carried by one species, or by the difference of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rail {
    Single(SpeciesId),
    Dual { plus: SpeciesId, minus: SpeciesId },
}

impl Rail {
    pub fn species(&self) -> Vec<SpeciesId> {
        match *self {
            Rail::Single(s) => vec![s],
            Rail::Dual { plus, minus } => vec![plus, minus],
        }
    }

    /// The value in terms of initial concentrations.
    pub fn expr(&self) -> LinExpr {
        match *self {
            Rail::Single(s) => LinExpr::init(s),
            Rail::Dual { plus, minus } => LinExpr::init(plus) - LinExpr::init(minus),
        }
    }

    /// The value read from per-species expressions (e.g. a branch's species values).
    pub fn read<T: Clone + std::ops::Sub<Output = T>>(&self, species: &[T]) -> T {
        match *self {
            Rail::Single(s) => species[s.index()].clone(),
            Rail::Dual { plus, minus } => species[plus.index()].clone() - species[minus.index()].clone(),
        }
    }

    pub fn display(&self, crn: &Crn) -> String {
        match *self {
            Rail::Single(s) => crn.name(s),
            Rail::Dual { plus, minus } => format!("{}-{}", crn.name(plus), crn.name(minus)),
        }
    }
}

/// Which species carry the inputs and outputs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IoAssignment {
    pub inputs: Vec<Rail>,
    pub outputs: Vec<Rail>,
}

impl IoAssignment {
    pub fn input_species(&self) -> Vec<SpeciesId> {
        self.inputs.iter().flat_map(Rail::species).collect()
    }

    pub fn output_species(&self) -> Vec<SpeciesId> {
        self.outputs.iter().flat_map(Rail::species).collect()
    }

    pub fn input_vars(&self) -> Vec<Var> {
        self.input_species().into_iter().map(Var::Init).collect()
    }

    /// Input values at a point given per input species (in `input_species` order).
    pub fn input_values<T: Clone + std::ops::Sub<Output = T>>(&self, point: &[T]) -> Vec<T> {
        let mut k = 0;
        self.inputs
            .iter()
            .map(|r| match r {
                Rail::Single(_) => {
                    k += 1;
                    point[k - 1].clone()
                }
                Rail::Dual { .. } => {
                    k += 2;
                    point[k - 2].clone() - point[k - 1].clone()
                }
            })
            .collect()
    }

    pub fn display(&self, crn: &Crn) -> String {
        let side = |rs: &[Rail]| rs.iter().map(|r| r.display(crn)).collect::<Vec<_>>().join(", ");
        format!("inputs ({}) -> outputs ({})", side(&self.inputs), side(&self.outputs))
    }
}

fn rails(candidates: &[SpeciesId], dual: bool) -> Vec<Rail> {
    let mut out = Vec::new();
    for &a in candidates {
        if dual {
            for &b in candidates {
                if a != b {
                    out.push(Rail::Dual { plus: a, minus: b });
                }
            }
        } else {
            out.push(Rail::Single(a));
        }
    }
    out
}

/// Tuples of `k` rails over pairwise distinct species; strictly increasing
/// when `unordered`.
fn rail_tuples(options: &[Rail], k: usize, unordered: bool, exclude: &[SpeciesId]) -> Vec<Vec<Rail>> {
    fn rec(
        options: &[Rail],
        k: usize,
        unordered: bool,
        start: usize,
        used: &mut Vec<SpeciesId>,
        cur: &mut Vec<Rail>,
        out: &mut Vec<Vec<Rail>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let from = if unordered { start } else { 0 };
        for i in from..options.len() {
            let sp = options[i].species();
            if sp.iter().any(|s| used.contains(s)) {
                continue;
            }
            used.extend(&sp);
            cur.push(options[i]);
            rec(options, k, unordered, i + 1, used, cur, out);
            cur.pop();
            used.truncate(used.len() - sp.len());
        }
    }
    let mut out = Vec::new();
    rec(options, k, unordered, 0, &mut exclude.to_vec(), &mut Vec::new(), &mut out);
    out
}

/// Input tuples. Inputs are species that occur as reactants (a species that
/// never reacts cannot influence any other species).
pub fn input_choices(crn: &Crn, target: &TargetFunction) -> Vec<Vec<Rail>> {
    let reactant = crn.reactant_species();
    let candidates: Vec<SpeciesId> = crn.species().filter(|s| reactant[s.index()]).collect();
    let options = rails(&candidates, target.dual_rail_inputs);
    rail_tuples(&options, target.arity(), target.is_commutative(), &[])
}

/// Output tuples disjoint from `inputs`. Dual-rail outputs must occur only
/// as products.
pub fn output_choices(crn: &Crn, target: &TargetFunction, inputs: &[Rail]) -> Vec<Vec<Rail>> {
    let used: Vec<SpeciesId> = inputs.iter().flat_map(Rail::species).collect();
    let candidates: Vec<SpeciesId> = if target.dual_rail_outputs {
        crn.only_product_species()
    } else {
        crn.species().collect()
    };
    let candidates: Vec<SpeciesId> = candidates.into_iter().filter(|s| !used.contains(s)).collect();
    let options = rails(&candidates, target.dual_rail_outputs);
    rail_tuples(&options, target.output_count(), false, &used)
}

/// Every input/output role assignment, inputs-major, in deterministic order.
pub fn io_assignments(crn: &Crn, target: &TargetFunction) -> Vec<IoAssignment> {
    let mut out = Vec::new();
    for inputs in input_choices(crn, target) {
        for outputs in output_choices(crn, target, &inputs) {
            out.push(IoAssignment { inputs: inputs.clone(), outputs });
        }
    }
    out
}

/// Assembles the computed function for `io` from the network's branches.
pub fn build_pwl(branches: &[Branch], io: &IoAssignment) -> PwlFunction {
    let inputs = io.input_species();
    let mut pieces = Vec::new();
    for b in branches {
        let r = b.restrict_inputs(&inputs);
        if r.is_trivially_infeasible() {
            continue;
        }
        pieces.push(Piece {
            region: r.feasibility.iter().cloned().map(LinIneq::nonneg).collect(),
            values: io.outputs.iter().map(|o| o.read(&r.species_value)).collect(),
        });
    }
    PwlFunction { input_vars: io.input_vars(), pieces }
}

/// A point where the two functions disagree on one output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub point: Vec<Q>,
    pub output: usize,
    pub got: Q,
    pub expected: Q,
}

impl Witness {
    pub fn display(&self, vars: &[Var], crn: &Crn) -> String {
        let coords: Vec<String> = vars
            .iter()
            .zip(&self.point)
            .map(|(v, x)| format!("{}={}", crate::linexpr::var_name(crn, *v), x))
            .collect();
        format!("at {}: output {} is {} but should be {}", coords.join(" "), self.output + 1, self.got, self.expected)
    }
}

/// Exact search for a non-negative rational point where some piece of `pw`
/// differs from the matching piece of `target`. Both must be over the same
/// input variables. The witness is re-checked by direct evaluation.
pub fn find_counterexample(pw: &PwlFunction, target: &PwlFunction) -> Option<Witness> {
    assert_eq!(pw.input_vars, target.input_vars, "functions over different variables");
    let n = pw.input_vars.len();
    let orthant = pw.orthant();
    for p in &pw.pieces {
        let pc: Vec<Constraint> = p.region.iter().map(|i| pw.constraint(i)).collect();
        let mut base_p = orthant.clone();
        base_p.extend(pc);
        if !fm::is_feasible(&base_p, n) {
            continue;
        }
        for t in &target.pieces {
            let mut base = base_p.clone();
            base.extend(t.region.iter().map(|i| target.constraint(i)));
            if !fm::is_feasible(&base, n) {
                continue;
            }
            for (o, (pv, tv)) in p.values.iter().zip(&t.values).enumerate() {
                let diff = pv.clone() - tv.clone();
                if diff.is_zero() {
                    continue;
                }
                for sign in [Q::one(), -Q::one()] {
                    let mut system = base.clone();
                    system.push(pw.constraint(&LinIneq::positive(diff.scale(&sign))));
                    if let Some(point) = fm::find_point(&system, n) {
                        let got = pw.eval_expr(pv, &point);
                        let expected = target.eval_expr(tv, &point);
                        assert!(
                            pw.region_holds(&p.region, &point) && target.region_holds(&t.region, &point) && got != expected,
                            "counterexample failed re-verification"
                        );
                        return Some(Witness { point, output: o, got, expected });
                    }
                }
            }
        }
    }
    None
}

/// Why a point failed a concrete test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestFailure {
    Mismatch { point: Vec<Q>, got: Vec<Q>, expected: Vec<Q> },
    Uncovered { point: Vec<Q> },
}

impl TestFailure {
    pub fn point(&self) -> &[Q] {
        match self {
            TestFailure::Mismatch { point, .. } | TestFailure::Uncovered { point } => point,
        }
    }
}

/// First test point where `pw` and `target` disagree (a point no piece
/// covers counts as a disagreement).
pub fn prefilter_failure(pw: &PwlFunction, target: &PwlFunction, points: &[Vec<Q>]) -> Option<TestFailure> {
    for p in points {
        let got = match pw.eval(p) {
            Ok(v) => v,
            Err(_) => return Some(TestFailure::Uncovered { point: p.clone() }),
        };
        let expected = target.eval(p).expect("targets cover the orthant");
        if got != expected {
            return Some(TestFailure::Mismatch { point: p.clone(), got, expected });
        }
    }
    None
}

pub fn prefilter_tests(pw: &PwlFunction, target: &PwlFunction, points: &[Vec<Q>]) -> bool {
    prefilter_failure(pw, target, points).is_none()
}

/// For two outputs: `y1 + y2 = x1 + ... + xn` exactly. Holds for any
/// correct min/max pair regardless of output order.
pub fn sum_identity_prefilter(pw: &PwlFunction, io: &IoAssignment) -> Option<Witness> {
    let summed = PwlFunction {
        input_vars: pw.input_vars.clone(),
        pieces: pw
            .pieces
            .iter()
            .map(|p| Piece {
                region: p.region.clone(),
                values: vec![p.values.iter().cloned().fold(LinExpr::zero(), |a, b| a + b)],
            })
            .collect(),
    };
    let rail = if io.inputs.iter().any(|r| matches!(r, Rail::Dual { .. })) { RailMode::Dual } else { RailMode::Single };
    let sum = TargetFunction::new(TargetKind::SumN(io.inputs.len()), rail).instantiate(io);
    find_counterexample(&summed, &sum)
}

/// Default concrete test points over `n` species: `random` seeded random
/// rationals (numerators 0..=7, denominators 1..=7) followed by the grid
/// `{0,1,2,3}^n`.
pub fn default_test_points(n: usize, random: usize, seed: u64) -> Vec<Vec<Q>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec<Q>> = (0..random)
        .map(|_| (0..n).map(|_| q_frac(rng.gen_range(0..=7), rng.gen_range(1..=7))).collect())
        .collect();
    let total = 4usize.pow(n as u32);
    for mut code in 0..total {
        let mut p = Vec::with_capacity(n);
        for _ in 0..n {
            p.push(q((code % 4) as i64));
            code /= 4;
        }
        pts.push(p);
    }
    pts
}

/// Analysis settings.
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub equilibrium: EquilibriumOptions,
    /// Screen io assignments with concrete equilibria before any symbolic work.
    pub screen: bool,
    pub random_points: usize,
    pub seed: u64,
    /// Record a reason for every rejected assignment.
    pub collect_refutations: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            equilibrium: EquilibriumOptions::default(),
            screen: true,
            random_points: 32,
            seed: 0x5eed,
            collect_refutations: false,
        }
    }
}

/// Why one io assignment was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    /// The concrete equilibrium disagrees with the target at this point.
    Screen { point: Vec<Q> },
    /// The piecewise function fails a concrete test.
    Prefilter(TestFailure),
    /// Outputs do not sum to the inputs' sum.
    SumIdentity(Witness),
    Counterexample(Witness),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnalysisStats {
    pub assignments: u64,
    pub screened_out: u64,
    pub prefiltered: u64,
    pub sum_identity_rejected: u64,
    /// Assignments that reached the exact per-output decision.
    pub exact_checks: u64,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub found: Option<(IoAssignment, PwlFunction)>,
    pub refutations: Vec<(IoAssignment, Rejection)>,
    pub stats: AnalysisStats,
}

struct Screen {
    eq: Equilibrator,
    points: Vec<Vec<R>>,
}

impl Screen {
    /// Surviving output tuples for an input tuple, or the killing point per
    /// rejected output tuple.
    fn filter<'a>(
        &self,
        target: &TargetFunction,
        io_inputs: &[Rail],
        outputs: &'a [Vec<Rail>],
    ) -> (Vec<&'a Vec<Rail>>, Vec<(&'a Vec<Rail>, Vec<R>)>) {
        let probe = IoAssignment { inputs: io_inputs.to_vec(), outputs: Vec::new() };
        let species = probe.input_species();
        let mut alive: Vec<&Vec<Rail>> = outputs.iter().collect();
        let mut dead = Vec::new();
        let small = |k: &Q| to_small(k).unwrap_or_else(R::zero);
        for p in &self.points[..] {
            if alive.is_empty() {
                break;
            }
            let pt = &p[..species.len()];
            let mut conc = vec![R::zero(); self.eq.species_count()];
            for (s, v) in species.iter().zip(pt) {
                conc[s.index()] = *v;
            }
            if !self.eq.settle(&mut conc) {
                return (alive, dead);
            }
            let expected = target.eval_with(&probe.input_values(pt), small);
            let mut keep = Vec::with_capacity(alive.len());
            for o in alive {
                if o.iter().zip(&expected).all(|(rail, e)| rail.read(&conc) == *e) {
                    keep.push(o);
                } else {
                    dead.push((o, pt.to_vec()));
                }
            }
            alive = keep;
        }
        (alive, dead)
    }
}

fn small_points(points: &[Vec<Q>]) -> Vec<Vec<R>> {
    points.iter().map(|p| p.iter().map(|x| to_small(x).expect("small test point")).collect()).collect()
}

/// Runs the full decision for every io assignment and reports the first that
/// computes `target`.
///
/// Per input tuple: concrete screen (when the network is feed-forward and
/// non-competitive), then per surviving output tuple: build the piecewise
/// function, concrete tests on it, the sum identity for two outputs, and
/// finally the exact counterexample search.
pub fn analyze(crn: &Crn, target: &TargetFunction, opts: &AnalysisOptions) -> Analysis {
    let n_in = target.arity() * if target.dual_rail_inputs { 2 } else { 1 };
    let points = default_test_points(n_in, opts.random_points, opts.seed);
    let screen = if opts.screen {
        Equilibrator::new(crn).map(|eq| Screen { eq, points: small_points(&points) })
    } else {
        None
    };
    let mut stats = AnalysisStats::default();
    let mut refutations = Vec::new();
    let mut branches: Option<Vec<Branch>> = None;
    let collect = opts.collect_refutations;
    let to_q = |p: &[R]| p.iter().map(crate::concrete::to_big).collect::<Vec<Q>>();

    for inputs in input_choices(crn, target) {
        let outputs = output_choices(crn, target, &inputs);
        stats.assignments += outputs.len() as u64;
        let survivors: Vec<&Vec<Rail>> = match &screen {
            Some(s) => {
                let (alive, dead) = s.filter(target, &inputs, &outputs);
                stats.screened_out += dead.len() as u64;
                if collect {
                    for (o, p) in dead {
                        let io = IoAssignment { inputs: inputs.clone(), outputs: o.clone() };
                        refutations.push((io, Rejection::Screen { point: to_q(&p) }));
                    }
                }
                alive
            }
            None => outputs.iter().collect(),
        };
        for outs in survivors {
            let io = IoAssignment { inputs: inputs.clone(), outputs: outs.clone() };
            let bs = branches.get_or_insert_with(|| all_branches(crn, opts.equilibrium));
            let pw = build_pwl(bs, &io);
            let goal = target.instantiate(&io);
            if let Some(f) = prefilter_failure(&pw, &goal, &points) {
                stats.prefiltered += 1;
                if collect {
                    refutations.push((io, Rejection::Prefilter(f)));
                }
                continue;
            }
            if target.output_count() == 2 {
                if let Some(w) = sum_identity_prefilter(&pw, &io) {
                    stats.sum_identity_rejected += 1;
                    if collect {
                        refutations.push((io, Rejection::SumIdentity(w)));
                    }
                    continue;
                }
            }
            stats.exact_checks += 1;
            match find_counterexample(&pw, &goal) {
                None => return Analysis { found: Some((io, pw)), refutations, stats },
                Some(w) => {
                    if collect {
                        refutations.push((io, Rejection::Counterexample(w)));
                    }
                }
            }
        }
    }
    Analysis { found: None, refutations, stats }
}

/// The first io assignment under which `crn` computes `target`, with the
/// computed function.
pub fn computes_f(crn: &Crn, target: &TargetFunction) -> Option<(IoAssignment, PwlFunction)> {
    analyze(crn, target, &AnalysisOptions::default()).found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_crn;

    fn max_network() -> Crn {
        parse_crn("A -> Z1 + Y\nB -> Z2 + Y\nZ1 + Z2 -> K\nY + K -> ").unwrap()
    }

    fn single(crn: &Crn, names: &[&str]) -> Vec<Rail> {
        names.iter().map(|n| Rail::Single(crn.species_by_name(n).unwrap())).collect()
    }

    #[test]
    fn target_parsing() {
        assert_eq!("max".parse::<TargetKind>().unwrap(), TargetKind::Max2);
        assert_eq!("sum3".parse::<TargetKind>().unwrap(), TargetKind::SumN(3));
        assert_eq!("mul2".parse::<TargetKind>().unwrap(), TargetKind::MulBy(q(2)));
        assert_eq!("mulby:3/2".parse::<TargetKind>().unwrap(), TargetKind::MulBy(q_frac(3, 2)));
        assert!("median".parse::<TargetKind>().is_err());
    }

    #[test]
    fn max_network_pieces_are_max() {
        let crn = max_network();
        let io = IoAssignment { inputs: single(&crn, &["A", "B"]), outputs: single(&crn, &["Y"]) };
        let bs = all_branches(&crn, EquilibriumOptions::default());
        let pw = build_pwl(&bs, &io);
        let max = TargetFunction::new(TargetKind::Max2, RailMode::Single);
        assert!(find_counterexample(&pw, &max.instantiate(&io)).is_none());
        let min = TargetFunction::new(TargetKind::Min2, RailMode::Single);
        let w = find_counterexample(&pw, &min.instantiate(&io)).unwrap();
        assert_ne!(w.point[0], w.point[1]);
        assert!(find_counterexample(&pw, &pw).is_none());
    }

    #[test]
    fn min_network_is_not_max() {
        let crn = parse_crn("X1 + X2 -> Y").unwrap();
        let io = IoAssignment { inputs: single(&crn, &["X1", "X2"]), outputs: single(&crn, &["Y"]) };
        let pw = build_pwl(&all_branches(&crn, EquilibriumOptions::default()), &io);
        let max = TargetFunction::new(TargetKind::Max2, RailMode::Single).instantiate(&io);
        let w = find_counterexample(&pw, &max).unwrap();
        assert_ne!(w.got, w.expected);
        let grid = default_test_points(2, 0, 0);
        assert!(!prefilter_tests(&pw, &max, &grid));
        assert!(prefilter_tests(&pw, &max, &[]));
    }

    #[test]
    fn computes_examples() {
        let max = TargetFunction::new(TargetKind::Max2, RailMode::Single);
        let (io, _) = computes_f(&max_network(), &max).unwrap();
        assert_eq!(io.display(&max_network()), "inputs (A, B) -> outputs (Y)");
        let double = TargetFunction::new(TargetKind::MulBy(q(2)), RailMode::Single);
        assert!(computes_f(&parse_crn("X -> 2Y").unwrap(), &double).is_some());
        let relu = TargetFunction::new(TargetKind::ReLU, RailMode::Dual);
        assert!(computes_f(&parse_crn("Xp -> M + Yp\nM + Xm -> Ym").unwrap(), &relu).is_some());
        let abs = TargetFunction::new(TargetKind::Abs, RailMode::Dual);
        assert!(computes_f(&parse_crn("Xp -> Yp + C\nXm -> Yp + E\nC + E -> 2Ym").unwrap(), &abs).is_some());
    }

    #[test]
    fn too_few_species_has_no_assignment() {
        let crn = parse_crn("A -> B").unwrap();
        let max = TargetFunction::new(TargetKind::Max2, RailMode::Single);
        assert!(io_assignments(&crn, &max).is_empty());
    }

    #[test]
    fn analysis_without_screen_agrees() {
        let max = TargetFunction::new(TargetKind::Max2, RailMode::Single);
        let opts = AnalysisOptions { screen: false, ..AnalysisOptions::default() };
        assert!(analyze(&max_network(), &max, &opts).found.is_some());
        // The max network also computes min (Z1, Z2 -> K), so refute max on the min network.
        let min_crn = parse_crn("X1 + X2 -> Y").unwrap();
        let a = analyze(&min_crn, &max, &AnalysisOptions { collect_refutations: true, ..opts });
        assert!(a.found.is_none());
        assert_eq!(a.refutations.len() as u64, a.stats.assignments);
    }
}
