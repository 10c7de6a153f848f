//! Bivariate polynomials in the chamber parameters `(u, v)` with exact
//! rational coefficients. Univariate polynomials are the special case where
//! one degree is zero; the same type carries both.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::rat::Rat;

/// Finitely supported assignment from monomials `u^a v^b` to rational
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ParamPoly {
    terms: BTreeMap<(u32, u32), Rat>,
}

impl ParamPoly {
    pub fn zero() -> Self {
        ParamPoly::default()
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = ParamPoly::zero();
        p.add_term(0, 0, c);
        p
    }

    pub fn one() -> Self {
        ParamPoly::constant(Rat::one())
    }

    pub fn var_u() -> Self {
        let mut p = ParamPoly::zero();
        p.add_term(1, 0, Rat::one());
        p
    }

    pub fn var_v() -> Self {
        let mut p = ParamPoly::zero();
        p.add_term(0, 1, Rat::one());
        p
    }

    /// `c + cu*u + cv*v`.
    pub fn affine(c: Rat, cu: Rat, cv: Rat) -> Self {
        let mut p = ParamPoly::zero();
        p.add_term(0, 0, c);
        p.add_term(1, 0, cu);
        p.add_term(0, 1, cv);
        p
    }

    /// Univariate polynomial in `u` from the coefficient list `[c0, c1, ...]`.
    pub fn from_u_coeffs(coeffs: &[Rat]) -> Self {
        let mut p = ParamPoly::zero();
        for (i, c) in coeffs.iter().enumerate() {
            p.add_term(i as u32, 0, c.clone());
        }
        p
    }

    pub fn add_term(&mut self, du: u32, dv: u32, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((du, dv)).or_insert_with(Rat::zero);
        *entry += &c;
        if entry.is_zero() {
            self.terms.remove(&(du, dv));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, du: u32, dv: u32) -> Rat {
        self.terms.get(&(du, dv)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn deg_u(&self) -> u32 {
        self.terms.keys().map(|&(a, _)| a).max().unwrap_or(0)
    }

    pub fn deg_v(&self) -> u32 {
        self.terms.keys().map(|&(_, b)| b).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|&(a, b)| a + b).max().unwrap_or(0)
    }

    /// Affine in `(u, v)`: total degree at most 1.
    pub fn is_affine(&self) -> bool {
        self.total_degree() <= 1
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return ParamPoly::zero();
        }
        let mut out = ParamPoly::zero();
        for (&k, coef) in &self.terms {
            out.terms.insert(k, coef * c);
        }
        out
    }

    pub fn eval(&self, u: &Rat, v: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for (&(a, b), c) in &self.terms {
            acc += &(c * &u.pow(a) * &v.pow(b));
        }
        acc
    }

    /// Evaluation of a polynomial with no `v` dependence.
    pub fn eval_u(&self, u: &Rat) -> Rat {
        debug_assert_eq!(self.deg_v(), 0, "eval_u on a v-dependent polynomial");
        self.eval(u, &Rat::zero())
    }

    /// Substitute `u = u0`, leaving a univariate polynomial in `v`
    /// (returned as coefficient list `[c0, c1, ...]`).
    pub fn restrict_u(&self, u0: &Rat) -> Vec<Rat> {
        let n = self.deg_v() as usize + 1;
        let mut out = vec![Rat::zero(); n];
        for (&(a, b), c) in &self.terms {
            out[b as usize] += &(c * &u0.pow(a));
        }
        while out.len() > 1 && out.last().unwrap().is_zero() {
            out.pop();
        }
        out
    }

    /// Substitute `v = w(u)` where `w` has no `v` dependence.
    pub fn substitute_v(&self, w: &ParamPoly) -> ParamPoly {
        assert_eq!(w.deg_v(), 0, "substitution target depends on v");
        let max_b = self.deg_v();
        // powers of w
        let mut pow = Vec::with_capacity(max_b as usize + 1);
        pow.push(ParamPoly::one());
        for i in 1..=max_b {
            let prev = pow[(i - 1) as usize].clone();
            pow.push(&prev * w);
        }
        let mut out = ParamPoly::zero();
        for (&(a, b), c) in &self.terms {
            let mut term = pow[b as usize].scale(c);
            term = term.mul_monomial(a, 0);
            out = &out + &term;
        }
        out
    }

    fn mul_monomial(&self, du: u32, dv: u32) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (&(a, b), c) in &self.terms {
            out.terms.insert((a + du, b + dv), c.clone());
        }
        out
    }

    /// Antiderivative with respect to `v` (constant of integration zero).
    pub fn antiderivative_v(&self) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (&(a, b), c) in &self.terms {
            out.add_term(a, b + 1, c / &Rat::int(i64::from(b) + 1));
        }
        out
    }

    /// Antiderivative with respect to `u`.
    pub fn antiderivative_u(&self) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (&(a, b), c) in &self.terms {
            out.add_term(a + 1, b, c / &Rat::int(i64::from(a) + 1));
        }
        out
    }

    /// `∫_{lo(u)}^{hi(u)} self dv`, with limits free of `v`.
    pub fn integrate_v_between(&self, lo: &ParamPoly, hi: &ParamPoly) -> ParamPoly {
        let anti = self.antiderivative_v();
        &anti.substitute_v(hi) - &anti.substitute_v(lo)
    }

    /// Definite integral in `u` over `[a, b]` of a polynomial with no `v`
    /// dependence.
    pub fn integrate_u_interval(&self, a: &Rat, b: &Rat) -> Rat {
        assert_eq!(self.deg_v(), 0, "integrand depends on v");
        let anti = self.antiderivative_u();
        &anti.eval_u(b) - &anti.eval_u(a)
    }
}

impl std::ops::Add<&ParamPoly> for &ParamPoly {
    type Output = ParamPoly;
    fn add(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (&(a, b), c) in &rhs.terms {
            out.add_term(a, b, c.clone());
        }
        out
    }
}

impl std::ops::Sub<&ParamPoly> for &ParamPoly {
    type Output = ParamPoly;
    fn sub(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (&(a, b), c) in &rhs.terms {
            out.add_term(a, b, -c);
        }
        out
    }
}

impl std::ops::Mul<&ParamPoly> for &ParamPoly {
    type Output = ParamPoly;
    fn mul(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &rhs.terms {
                out.add_term(a1 + a2, b1 + b2, c1 * c2);
            }
        }
        out
    }
}

impl std::ops::Neg for &ParamPoly {
    type Output = ParamPoly;
    fn neg(self) -> ParamPoly {
        &ParamPoly::zero() - self
    }
}

impl fmt::Display for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        // highest total degree first, for readability
        let mut keys: Vec<_> = self.terms.keys().copied().collect();
        keys.sort_by_key(|&(a, b)| (std::cmp::Reverse(a + b), std::cmp::Reverse(a)));
        for (a, b) in keys {
            let c = &self.terms[&(a, b)];
            let (sign, mag) = if c.is_negative() {
                ("-", c.abs())
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {sign} ")?;
            }
            let mono = match (a, b) {
                (0, 0) => String::new(),
                (a, 0) if a == 1 => "u".into(),
                (a, 0) => format!("u^{a}"),
                (0, b) if b == 1 => "v".into(),
                (0, b) => format!("v^{b}"),
                (a, b) => {
                    let us = if a == 1 { "u".into() } else { format!("u^{a}") };
                    let vs = if b == 1 { "v".into() } else { format!("v^{b}") };
                    format!("{us}*{vs}")
                }
            };
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == Rat::one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{mag}*{mono}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Serialized as a list of `[u_degree, v_degree, coefficient]` entries.
impl Serialize for ParamPoly {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<(u32, u32, &Rat)> =
            self.terms.iter().map(|(&(a, b), c)| (a, b, c)).collect();
        entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ParamPoly {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = Vec::<(u32, u32, Rat)>::deserialize(deserializer)?;
        let mut p = ParamPoly::zero();
        for (a, b, c) in entries {
            p.add_term(a, b, c);
        }
        Ok(p)
    }
}
