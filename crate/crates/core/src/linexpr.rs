//! Exact affine expressions over initial-concentration and flux variables.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::crn::{Crn, SpeciesId};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Symbolic unknown. Orders by kind (initial concentrations first), then index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Init(SpeciesId),
    Flux(usize),
}

/// `Σ coeff·var + constant`, with no zero coefficients stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LinExpr {
    coeffs: BTreeMap<Var, Q>,
    constant: Q,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        Self::term(v, Q::one())
    }

    pub fn term(v: Var, c: Q) -> Self {
        let mut e = Self::zero();
        e.add_term(v, c);
        e
    }

    pub fn init(s: SpeciesId) -> Self {
        Self::var(Var::Init(s))
    }

    pub fn add_term(&mut self, v: Var, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(v).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn add_constant(&mut self, c: &Q) {
        self.constant += c;
    }

    pub fn coeff(&self, v: Var) -> Q {
        self.coeffs.get(&v).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> &Q {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (Var, &Q)> {
        self.coeffs.iter().map(|(v, c)| (*v, c))
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, k: &Q) -> LinExpr {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    /// Replaces `v` by `by` everywhere.
    pub fn substitute(&self, v: Var, by: &LinExpr) -> LinExpr {
        let Some(c) = self.coeffs.get(&v) else {
            return self.clone();
        };
        let mut rest = self.clone();
        rest.coeffs.remove(&v);
        rest + by.scale(c)
    }

    /// Replaces every variable for which `f` returns an expression.
    pub fn substitute_with(&self, f: impl Fn(Var) -> Option<LinExpr>) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            match f(*v) {
                Some(e) => out = out + e.scale(c),
                None => out.add_term(*v, c.clone()),
            }
        }
        out
    }

    /// Value under an assignment; unassigned variables are an error (`None`).
    pub fn eval(&self, value: impl Fn(Var) -> Option<Q>) -> Option<Q> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * value(*v)?;
        }
        Some(acc)
    }

    /// Positive rescaling to integer coefficients with unit content. Used to
    /// compare inequalities and to print them.
    pub fn normalized(&self) -> LinExpr {
        let mut lcm = BigInt::one();
        let mut gcd = BigInt::zero();
        for c in self.coeffs.values().chain(std::iter::once(&self.constant)) {
            lcm = lcm.lcm(c.denom());
        }
        for c in self.coeffs.values().chain(std::iter::once(&self.constant)) {
            let n = (c * Q::from_integer(lcm.clone())).to_integer();
            gcd = gcd.gcd(&n);
        }
        if gcd.is_zero() {
            return LinExpr::zero();
        }
        self.scale(&Q::new(lcm, gcd.abs()))
    }

    pub fn display<'a>(&'a self, crn: &'a Crn) -> impl fmt::Display + 'a {
        DisplayExpr { e: self, name: Box::new(move |v| var_name(crn, v)) }
    }

    /// Renders with a caller-supplied variable namer.
    pub fn display_with<'a>(&'a self, name: impl Fn(Var) -> String + 'a) -> impl fmt::Display + 'a {
        DisplayExpr { e: self, name: Box::new(name) }
    }
}

/// `a0`-style name for an initial concentration, `flux3` for a flux
/// (reaction numbers are 1-based in text).
pub fn var_name(crn: &Crn, v: Var) -> String {
    match v {
        Var::Init(s) => format!("{}0", crn.name(s)),
        Var::Flux(i) => format!("flux{}", i + 1),
    }
}

struct DisplayExpr<'a> {
    e: &'a LinExpr,
    name: Box<dyn Fn(Var) -> String + 'a>,
}

fn fmt_coeff(c: &Q) -> String {
    if c.is_integer() {
        c.to_integer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.e.coeffs {
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag.is_one() {
                write!(f, "{}", (self.name)(*v))?;
            } else {
                write!(f, "{}*{}", fmt_coeff(&mag), (self.name)(*v))?;
            }
            first = false;
        }
        let c = &self.e.constant;
        if first {
            write!(f, "{}", fmt_coeff(c))?;
        } else if !c.is_zero() {
            let sign = if c.is_negative() { "-" } else { "+" };
            write!(f, " {sign} {}", fmt_coeff(&c.abs()))?;
        }
        Ok(())
    }
}

impl Add for LinExpr {
    type Output = LinExpr;

    fn add(mut self, rhs: LinExpr) -> LinExpr {
        for (v, c) in rhs.coeffs {
            self.add_term(v, c);
        }
        self.constant += rhs.constant;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;

    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;

    fn neg(self) -> LinExpr {
        self.scale(&-Q::one())
    }
}

impl Mul<&Q> for &LinExpr {
    type Output = LinExpr;

    fn mul(self, k: &Q) -> LinExpr {
        self.scale(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u16) -> LinExpr {
        LinExpr::init(SpeciesId(i))
    }

    #[test]
    fn arithmetic_drops_zero_terms() {
        let e = x(0) + x(1) - x(0);
        assert_eq!(e, x(1));
        assert!((x(0) - x(0)).is_zero());
    }

    #[test]
    fn substitution() {
        let e = x(0).scale(&q(2)) + LinExpr::var(Var::Flux(0));
        let s = e.substitute(Var::Flux(0), &(x(1) - x(0)));
        assert_eq!(s, x(0) + x(1));
    }

    #[test]
    fn normalization_clears_denominators() {
        let e = x(0).scale(&q_frac(1, 2)) - x(1).scale(&q_frac(3, 4));
        assert_eq!(e.normalized(), x(0).scale(&q(2)) - x(1).scale(&q(3)));
        assert_eq!(e.scale(&q(-5)).normalized(), -(x(0).scale(&q(2)) - x(1).scale(&q(3))));
    }

    #[test]
    fn display() {
        let e = x(0) - x(1).scale(&q(2)) + LinExpr::constant(q_frac(1, 3));
        let s = e.display_with(|v| format!("{v:?}")).to_string();
        assert_eq!(s, "Init(SpeciesId(0)) - 2*Init(SpeciesId(1)) + 1/3");
        assert_eq!(LinExpr::zero().display_with(|_| String::new()).to_string(), "0");
    }

    #[test]
    fn var_order_is_kind_then_index() {
        assert!(Var::Init(SpeciesId(5)) < Var::Flux(0));
        assert!(Var::Flux(0) < Var::Flux(1));
    }
}
