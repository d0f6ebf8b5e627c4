//! Sparse multivariate polynomials over the rationals.
//!
//! Terms live in a `BTreeMap` keyed by monomials in graded lexicographic
//! order (total degree first, then variable-by-variable with earlier variable
//! names more significant). The leading term is the last entry of the map.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{ArithError, Scalar, Var};

/// A monomial: variables with positive exponents, sorted by variable.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Mono(Vec<(Var, u32)>);

impl Mono {
    pub fn unit() -> Mono {
        Mono(Vec::new())
    }

    pub fn var(v: Var) -> Mono {
        Mono(vec![(v, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(Var, u32)>) -> Mono {
        pairs.retain(|&(_, e)| e > 0);
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        Mono(pairs)
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn pairs(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// Quotient `self / other`, or `None` when not divisible.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for &(v, e) in &self.0 {
            let mut rem = e;
            if j < other.0.len() && other.0[j].0 == v {
                if other.0[j].1 > e {
                    return None;
                }
                rem = e - other.0[j].1;
                j += 1;
            }
            if rem > 0 {
                out.push((v, rem));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    /// Per-variable minimum with `other` (the gcd of two monomials).
    pub fn common(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        let mut j = 0;
        for &(v, e) in &self.0 {
            while j < other.0.len() && other.0[j].0 < v {
                j += 1;
            }
            if j < other.0.len() && other.0[j].0 == v {
                out.push((v, e.min(other.0[j].1)));
            }
        }
        Mono(out)
    }

    /// Removes `v` entirely, returning the exponent it carried.
    fn strip(&self, v: Var) -> (u32, Mono) {
        let mut out = Vec::with_capacity(self.0.len());
        let mut exp = 0;
        for &(w, e) in &self.0 {
            if w == v {
                exp = e;
            } else {
                out.push((w, e));
            }
        }
        (exp, Mono(out))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mono {
    // Graded lex: by total degree, then the first variable (in ascending
    // variable order) with differing exponent decides — larger exponent wins.
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => {
                    match self.0[i].1.cmp(&other.0[j].1) {
                        Ordering::Equal => {}
                        ord => return ord,
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        if i < self.0.len() {
            Ordering::Greater
        } else if j < other.0.len() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

/// A sparse multivariate polynomial with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Mono::unit(), c);
        }
        Poly { terms }
    }

    pub fn int(n: i64) -> Poly {
        Poly::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn var(v: Var) -> Poly {
        let mut terms = BTreeMap::new();
        terms.insert(Mono::var(v), BigRational::one());
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Mono::unit())
                .map(|c| c.is_one())
                .unwrap_or(false)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.contains_key(&Mono::unit()))
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.is_zero() {
            Some(BigRational::zero())
        } else if self.is_constant() {
            self.terms.get(&Mono::unit()).cloned()
        } else {
            None
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Mono::degree).max().unwrap_or(0)
    }

    /// Leading (graded-lex greatest) term.
    pub fn leading(&self) -> Option<(&Mono, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn support(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            out.extend(m.vars());
        }
        out
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    fn insert_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), -c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.insert_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_term(&self, m: &Mono, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(mm, cc)| (mm.mul(m), cc * c))
                .collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        self.mul_term(&Mono::unit(), c)
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative, treating all variables as independent.
    pub fn partial(&self, v: Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let (_, rest) = m.strip(v);
            let lowered = if e > 1 { rest.mul(&Mono::from_pairs(vec![(v, e - 1)])) } else { rest };
            out.insert_term(lowered, c * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Simultaneous substitution of variables by scalars.
    pub fn substitute(&self, map: &HashMap<Var, Scalar>) -> Result<Scalar, ArithError> {
        let mut cache: HashMap<(Var, u32), Scalar> = HashMap::new();
        let mut acc = Scalar::zero();
        for (m, c) in &self.terms {
            let mut term = Scalar::from_rational(c.clone());
            for &(v, e) in m.pairs() {
                let factor = match map.get(&v) {
                    None => Scalar::var(v).pow(e as i64)?,
                    Some(img) => cache
                        .entry((v, e))
                        .or_insert_with(|| img.pow(e as i64).expect("positive power"))
                        .clone(),
                };
                term = term.mul(&factor);
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&(BigRational::one() / c)));
        }
        let (ld_m, ld_c) = d.leading().expect("nonzero");
        let mut rem = self.clone();
        let mut quo = Poly::zero();
        while !rem.is_zero() {
            let (lm, lc) = rem.leading().expect("nonzero");
            let qm = lm.div(ld_m)?;
            let qc = lc / ld_c;
            let t = Poly {
                terms: std::iter::once((qm.clone(), qc.clone())).collect(),
            };
            quo = quo.add(&t);
            rem = rem.sub(&d.mul_term(&qm, &qc));
        }
        Some(quo)
    }

    /// Splits into rational content and integer-coefficient primitive part
    /// with positive leading coefficient; `self = content * primitive`.
    pub fn to_int_primitive(&self) -> (BigRational, Poly) {
        if self.is_zero() {
            return (BigRational::zero(), Poly::zero());
        }
        let mut denom_lcm = BigInt::one();
        for c in self.terms.values() {
            denom_lcm = denom_lcm.lcm(c.denom());
        }
        let mut numer_gcd = BigInt::zero();
        for c in self.terms.values() {
            let scaled = c.numer() * (&denom_lcm / c.denom());
            numer_gcd = numer_gcd.gcd(&scaled);
        }
        // gcd is nonzero since self is nonzero
        let mut content = BigRational::new(numer_gcd, denom_lcm);
        let lead_negative = self
            .leading()
            .map(|(_, c)| c.is_negative())
            .unwrap_or(false);
        if lead_negative {
            content = -content;
        }
        let prim = self.scale(&(BigRational::one() / &content));
        (content, prim)
    }

    /// The largest monomial dividing every term.
    pub fn monomial_content(&self) -> Mono {
        let mut iter = self.terms.keys();
        let mut acc = match iter.next() {
            Some(m) => m.clone(),
            None => return Mono::unit(),
        };
        for m in iter {
            if acc.is_unit() {
                break;
            }
            acc = acc.common(m);
        }
        acc
    }

    /// Exact division by a monomial that divides every term.
    pub fn div_monomial(&self, m: &Mono) -> Poly {
        if m.is_unit() {
            return self.clone();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(mm, c)| (mm.div(m).expect("monomial content divides"), c.clone()))
                .collect(),
        }
    }

    fn int_content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            debug_assert!(c.denom().is_one(), "int_content on non-integer poly");
            g = g.gcd(c.numer());
        }
        g
    }

    /// Degree in a single variable.
    fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    /// Coefficients of `self` as a univariate polynomial in `v`; index = power.
    fn univariate_in(&self, v: Var) -> Vec<Poly> {
        let deg = self.degree_in(v) as usize;
        let mut out = vec![Poly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.strip(v);
            out[e as usize].insert_term(rest, c.clone());
        }
        out
    }

    fn coeff_of_power(&self, v: Var, e: u32) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (me, rest) = m.strip(v);
            if me == e {
                out.insert_term(rest, c.clone());
            }
        }
        out
    }
}

/// Primitive gcd of two polynomials, up to a rational unit: the result has
/// integer coefficients, content 1 and positive leading coefficient.
/// Recursive content / primitive-part reduction with a primitive
/// pseudo-remainder sequence in the main variable.
pub fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() && b.is_zero() {
        return Poly::zero();
    }
    if a.is_zero() {
        return b.to_int_primitive().1;
    }
    if b.is_zero() {
        return a.to_int_primitive().1;
    }
    let (_, pa) = a.to_int_primitive();
    let (_, pb) = b.to_int_primitive();
    gcd_primitive(&pa, &pb)
}

/// gcd of integer-coefficient polynomials, integer content included.
fn gcd_ints(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.to_int_primitive().1.scale(&BigRational::from_integer(b.int_content().abs()));
    }
    if b.is_zero() {
        return a.to_int_primitive().1.scale(&BigRational::from_integer(a.int_content().abs()));
    }
    let ca = a.int_content().abs();
    let cb = b.int_content().abs();
    let c0 = ca.gcd(&cb);
    let pa = a.to_int_primitive().1;
    let pb = b.to_int_primitive().1;
    gcd_primitive(&pa, &pb).scale(&BigRational::from_integer(c0))
}

/// gcd of integer-primitive polynomials; result primitive with positive lc.
fn gcd_primitive(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.to_int_primitive().1;
    }
    // divisibility probes catch the den | den^k fractions cheaply
    if a.total_degree() >= b.total_degree() && a.exact_div(b).is_some() {
        return b.to_int_primitive().1;
    }
    if b.total_degree() > a.total_degree() && b.exact_div(a).is_some() {
        return a.to_int_primitive().1;
    }
    // split off monomial contents before any remainder sequence
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    if !ma.is_unit() || !mb.is_unit() {
        let shared = ma.common(&mb);
        let g = gcd_primitive(&a.div_monomial(&ma), &b.div_monomial(&mb));
        return g.mul_term(&shared, &BigRational::one());
    }
    // primitive polynomials in disjoint variables are coprime
    let sa = a.support();
    let sb = b.support();
    if sa.intersection(&sb).next().is_none() {
        return Poly::one();
    }
    // variables on one side only cannot appear in the gcd: content them away
    for &v in sa.symmetric_difference(&sb) {
        return if sa.contains(&v) {
            gcd_primitive(&content_in(a, v), b)
        } else {
            gcd_primitive(a, &content_in(b, v))
        };
    }
    // main variable: the common one with the shortest remainder sequence
    let v = *sa
        .intersection(&sb)
        .min_by_key(|&&v| a.degree_in(v).min(b.degree_in(v)))
        .expect("common variable exists");
    let cont_a = content_in(a, v);
    let cont_b = content_in(b, v);
    let c = gcd_ints(&cont_a, &cont_b);
    let mut prev = a.exact_div(&cont_a).expect("content divides");
    let mut cur = b.exact_div(&cont_b).expect("content divides");
    if prev.degree_in(v) < cur.degree_in(v) {
        std::mem::swap(&mut prev, &mut cur);
    }
    // subresultant pseudo-remainder sequence: each remainder is divided by a
    // predicted exact factor, so no content gcds are needed inside the loop
    let mut delta = prev.degree_in(v) - cur.degree_in(v);
    let mut beta = if delta % 2 == 0 { Poly::int(-1) } else { Poly::one() };
    let mut psi = Poly::int(-1);
    loop {
        let r = pseudo_rem(&prev, &cur, v);
        if r.is_zero() {
            let (_, pp) = primitive_in(&cur, v);
            return pp.mul(&c).to_int_primitive().1;
        }
        if r.degree_in(v) == 0 {
            return c;
        }
        let next = r.exact_div(&beta).expect("subresultant factor divides");
        let lc_cur = cur.coeff_of_power(v, cur.degree_in(v));
        // psi' = (-lc)^delta / psi^(delta - 1)
        psi = match delta {
            0 => psi,
            1 => lc_cur.neg(),
            _ => lc_cur
                .neg()
                .pow(delta)
                .exact_div(&psi.pow(delta - 1))
                .expect("psi update divides"),
        };
        delta = cur.degree_in(v) - next.degree_in(v);
        beta = lc_cur.neg().mul(&psi.pow(delta));
        prev = cur;
        cur = next;
    }
}

/// Content of `p` with respect to `v`: gcd of its `v`-coefficients.
fn content_in(p: &Poly, v: Var) -> Poly {
    let coeffs = p.univariate_in(v);
    let mut g = Poly::zero();
    for c in &coeffs {
        if !c.is_zero() {
            g = gcd_ints(&g, c);
            if g.is_one() {
                break;
            }
        }
    }
    g
}

fn primitive_in(p: &Poly, v: Var) -> (Poly, Poly) {
    let cont = content_in(p, v);
    let prim = p.exact_div(&cont).expect("content divides");
    (cont, prim)
}

/// Pseudo-remainder `lc(q)^(deg p - deg q + 1) p mod q` in the variable `v`.
fn pseudo_rem(p: &Poly, q: &Poly, v: Var) -> Poly {
    let dq = q.degree_in(v);
    let dp = p.degree_in(v);
    debug_assert!(dp >= dq);
    let lcq = q.coeff_of_power(v, dq);
    let mut r = p.clone();
    let mut applied = 0;
    while !r.is_zero() {
        let dr = r.degree_in(v);
        if dr < dq {
            break;
        }
        let lcr = r.coeff_of_power(v, dr);
        let shift = Mono::from_pairs(vec![(v, dr - dq)]);
        r = r.mul(&lcq).sub(&q.mul(&lcr).mul_term(&shift, &BigRational::one()));
        applied += 1;
    }
    // the subresultant recurrences need the full multiplier even when the
    // degree drops by more than one per step
    for _ in applied..(dp - dq + 1) {
        r = r.mul(&lcq);
    }
    r
}

fn fmt_coeff(c: &BigRational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
                first = false;
            } else if neg {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            let mut wrote_factor = false;
            if !abs.is_one() || m.is_unit() {
                f.write_str(&fmt_coeff(&abs))?;
                wrote_factor = true;
            }
            for &(v, e) in m.pairs() {
                if wrote_factor {
                    f.write_str("*")?;
                }
                wrote_factor = true;
                if e == 1 {
                    write!(f, "{v}")?;
                } else {
                    write!(f, "{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Var {
        Var::new(name)
    }

    #[test]
    fn grlex_ordering() {
        let x = v("a_x");
        let y = v("b_y");
        // degree dominates
        assert!(Mono::from_pairs(vec![(x, 2)]) > Mono::from_pairs(vec![(y, 1)]));
        // same degree: earlier variable with larger exponent wins
        assert!(Mono::from_pairs(vec![(x, 2)]) > Mono::from_pairs(vec![(x, 1), (y, 1)]));
        assert!(Mono::from_pairs(vec![(x, 1), (y, 1)]) > Mono::from_pairs(vec![(y, 2)]));
    }

    #[test]
    fn exact_division_roundtrip() {
        let x = Poly::var(v("x"));
        let y = Poly::var(v("y"));
        let p = x.add(&y).mul(&x.sub(&y));
        let q = p.exact_div(&x.add(&y)).unwrap();
        assert_eq!(q, x.sub(&y));
        assert!(x.add(&y).exact_div(&x).is_none());
    }

    #[test]
    fn gcd_difference_of_squares() {
        let x = Poly::var(v("x"));
        let y = Poly::var(v("y"));
        let a = x.mul(&x).sub(&y.mul(&y));
        let b = x.add(&y);
        let g = poly_gcd(&a, &b);
        assert_eq!(g, x.add(&y));
    }

    #[test]
    fn gcd_with_content() {
        let x = Poly::var(v("x"));
        // gcd(2x^2 + 2, 4x + 4) = 2(x + 1) up to integer content handling:
        // the primitive gcd is x + 1
        let a = x.mul(&x).scale(&BigRational::from_integer(2.into())).add(&Poly::int(2));
        let b = x.scale(&BigRational::from_integer(4.into())).add(&Poly::int(4));
        let g = poly_gcd(&a, &b);
        // a = 2(x^2+1), b = 4(x+1): primitive parts are coprime
        assert!(g.is_one());
        let a2 = x.mul(&x).sub(&Poly::one());
        let g2 = poly_gcd(&a2, &b);
        assert_eq!(g2, x.add(&Poly::one()));
    }

    #[test]
    fn render_poly() {
        let x = Poly::var(v("u_xy"));
        let l = Poly::var(v("lambda"));
        let p = x.mul(&x).sub(&l.mul(&x).scale(&BigRational::from_integer(2.into())));
        // grlex with earlier names more significant: lambda*u_xy leads u_xy^2
        assert_eq!(p.to_string(), "-2*lambda*u_xy + u_xy^2");
    }
}
