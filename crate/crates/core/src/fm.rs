//! Exact feasibility of small systems of strict and non-strict linear
//! inequalities by Fourier-Motzkin elimination, with witness points.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::linexpr::Q;

/// `coeffs·x + constant > 0` (strict) or `≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub constant: Q,
    pub strict: bool,
}

impl Constraint {
    pub fn new(coeffs: Vec<Q>, constant: Q, strict: bool) -> Self {
        Constraint { coeffs, constant, strict }
    }

    pub fn value(&self, x: &[Q]) -> Q {
        let mut acc = self.constant.clone();
        for (c, v) in self.coeffs.iter().zip(x) {
            if !c.is_zero() {
                acc += c * v;
            }
        }
        acc
    }

    pub fn holds(&self, x: &[Q]) -> bool {
        let v = self.value(x);
        if self.strict {
            v.is_positive()
        } else {
            !v.is_negative()
        }
    }

    /// Logical negation: `¬(e ≥ 0)` is `-e > 0`, `¬(e > 0)` is `-e ≥ 0`.
    pub fn negated(&self) -> Constraint {
        Constraint {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            constant: -&self.constant,
            strict: !self.strict,
        }
    }

    /// Scales by a positive factor so the first non-zero coefficient is ±1.
    fn normalized(mut self) -> Self {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()).map(|c| c.abs()) {
            for c in &mut self.coeffs {
                *c = &*c / &lead;
            }
            self.constant = &self.constant / &lead;
        }
        self
    }
}

/// Keeps, for each coefficient vector, only the tightest bound.
fn dedupe(cs: Vec<Constraint>) -> Vec<Constraint> {
    let mut best: BTreeMap<Vec<Q>, (Q, bool)> = BTreeMap::new();
    for c in cs {
        let c = c.normalized();
        match best.get_mut(&c.coeffs) {
            Some((k, strict)) => {
                if c.constant < *k || (c.constant == *k && c.strict) {
                    *k = c.constant;
                    *strict = c.strict;
                }
            }
            None => {
                best.insert(c.coeffs, (c.constant, c.strict));
            }
        }
    }
    best.into_iter().map(|(coeffs, (constant, strict))| Constraint { coeffs, constant, strict }).collect()
}

fn constant_ok(c: &Constraint) -> bool {
    if c.strict {
        c.constant.is_positive()
    } else {
        !c.constant.is_negative()
    }
}

/// A point satisfying every constraint over `n` variables, or `None` if the
/// system is infeasible.
pub fn find_point(constraints: &[Constraint], n: usize) -> Option<Vec<Q>> {
    let x = solve(constraints.to_vec(), n)?;
    debug_assert!(constraints.iter().all(|c| c.holds(&x)));
    Some(x)
}

pub fn is_feasible(constraints: &[Constraint], n: usize) -> bool {
    find_point(constraints, n).is_some()
}

fn solve(cs: Vec<Constraint>, n: usize) -> Option<Vec<Q>> {
    let mut live = Vec::new();
    for c in cs {
        if c.coeffs[..n].iter().all(Zero::is_zero) {
            if !constant_ok(&c) {
                return None;
            }
        } else {
            live.push(c);
        }
    }
    if n == 0 {
        return Some(Vec::new());
    }
    let cs = dedupe(live);
    let k = n - 1;
    let (mut lower, mut upper, mut rest) = (Vec::new(), Vec::new(), Vec::new());
    for c in cs {
        if c.coeffs[k].is_positive() {
            lower.push(c);
        } else if c.coeffs[k].is_negative() {
            upper.push(c);
        } else {
            rest.push(c);
        }
    }
    let mut projected = rest;
    for l in &lower {
        for u in &upper {
            let a = &l.coeffs[k];
            let b = -&u.coeffs[k];
            let coeffs = l.coeffs.iter().zip(&u.coeffs).map(|(x, y)| x * &b + y * a).collect();
            let constant = &l.constant * &b + &u.constant * a;
            projected.push(Constraint { coeffs, constant, strict: l.strict || u.strict });
        }
    }
    let mut x = solve(projected, k)?;
    // Bounds on x_k given x_0..x_{k-1}; x_k's own coefficient is ignored by
    // `value` because x has only k entries so far.
    let bound = |c: &Constraint| -c.value(&x) / &c.coeffs[k];
    let lo = lower.iter().map(|c| (bound(c), c.strict)).fold(None, |acc: Option<(Q, bool)>, (v, s)| match acc {
        Some((w, t)) if w > v || (w == v && t) => Some((w, t)),
        _ => Some((v, s)),
    });
    let hi = upper.iter().map(|c| (bound(c), c.strict)).fold(None, |acc: Option<(Q, bool)>, (v, s)| match acc {
        Some((w, t)) if w < v || (w == v && t) => Some((w, t)),
        _ => Some((v, s)),
    });
    let fits = |v: &Q| {
        lo.as_ref().is_none_or(|(l, s)| if *s { v > l } else { v >= l })
            && hi.as_ref().is_none_or(|(h, s)| if *s { v < h } else { v <= h })
    };
    let value = if fits(&Q::zero()) {
        Q::zero()
    } else {
        match (&lo, &hi) {
            (Some((l, _)), Some((h, _))) => {
                // Prefer an integer strictly inside, else the midpoint.
                let c = Q::from_integer(l.floor().to_integer() + BigInt::one());
                if fits(&c) {
                    c
                } else if fits(l) {
                    l.clone()
                } else {
                    (l + h) / Q::from_integer(BigInt::from(2))
                }
            }
            (Some((l, s)), None) => {
                if *s {
                    Q::from_integer(l.floor().to_integer() + BigInt::one())
                } else {
                    l.clone()
                }
            }
            (None, Some((h, s))) => {
                if *s {
                    Q::from_integer(h.ceil().to_integer() - BigInt::one())
                } else {
                    h.clone()
                }
            }
            (None, None) => Q::zero(),
        }
    };
    if !fits(&value) {
        return None;
    }
    x.push(value);
    Some(x)
}

/// Indices of constraints not implied by the others (together with `context`).
pub fn irredundant(constraints: &[Constraint], context: &[Constraint], n: usize) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..constraints.len()).collect();
    let mut i = 0;
    while i < keep.len() {
        let mut system: Vec<Constraint> = context.to_vec();
        for (j, &k) in keep.iter().enumerate() {
            if j != i {
                system.push(constraints[k].clone());
            }
        }
        system.push(constraints[keep[i]].negated());
        if is_feasible(&system, n) {
            i += 1;
        } else {
            keep.remove(i);
        }
    }
    keep
}

/// True when the closed polyhedron `{c ≥ 0}` has non-empty interior.
pub fn has_interior(constraints: &[Constraint], n: usize) -> bool {
    let strict: Vec<Constraint> = constraints.iter().map(|c| Constraint { strict: true, ..c.clone() }).collect();
    is_feasible(&strict, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linexpr::{q, q_frac};

    fn c(coeffs: &[i64], k: i64, strict: bool) -> Constraint {
        Constraint::new(coeffs.iter().map(|&v| q(v)).collect(), q(k), strict)
    }

    #[test]
    fn open_interval() {
        // x > 0, 1 - x > 0
        let cs = vec![c(&[1], 0, true), c(&[-1], 1, true)];
        let p = find_point(&cs, 1).unwrap();
        assert_eq!(p, vec![q_frac(1, 2)]);
    }

    #[test]
    fn strict_contradiction() {
        // x - y > 0 and y - x > 0
        assert!(!is_feasible(&[c(&[1, -1], 0, true), c(&[-1, 1], 0, true)], 2));
        // x - y ≥ 0 and y - x ≥ 0 is the diagonal.
        let p = find_point(&[c(&[1, -1], 0, false), c(&[-1, 1], 0, false)], 2).unwrap();
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn orthant_with_offset() {
        // x ≥ 0, y ≥ 0, x - y - 3 > 0
        let cs = vec![c(&[1, 0], 0, false), c(&[0, 1], 0, false), c(&[1, -1], -3, true)];
        let p = find_point(&cs, 2).unwrap();
        assert!(cs.iter().all(|k| k.holds(&p)));
    }

    #[test]
    fn redundancy() {
        // x ≥ 0, x ≥ -1, y ≥ 0: the second is implied.
        let cs = vec![c(&[1, 0], 0, false), c(&[1, 0], 1, false), c(&[0, 1], 0, false)];
        assert_eq!(irredundant(&cs, &[], 2), vec![0, 2]);
    }

    #[test]
    fn interior() {
        assert!(has_interior(&[c(&[1, 0], 0, false), c(&[0, 1], 0, false)], 2));
        assert!(!has_interior(&[c(&[1, -1], 0, false), c(&[-1, 1], 0, false)], 2));
    }
}
