//! Normalized rational functions: the coefficient field for everything else.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poly::{poly_gcd, Poly};
use super::{ArithError, Var};

/// An exact rational function `num / den` in canonical form: the fraction is
/// reduced (gcd of numerator and denominator is a unit) and the denominator
/// is monic in graded lex order. Equality is structural identity.
#[derive(Clone, PartialEq, Eq)]
pub struct Scalar {
    num: Poly,
    den: Poly,
}

impl Scalar {
    /// Canonical reduced fraction `num / den`.
    pub fn normalize(num: Poly, den: Poly) -> Result<Scalar, ArithError> {
        if den.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Scalar {
                num: Poly::zero(),
                den: Poly::one(),
            });
        }
        if den.is_one() {
            return Ok(Scalar { num, den });
        }
        if let Some(c) = den.as_constant() {
            return Ok(Scalar {
                num: num.scale(&(BigRational::one() / c)),
                den: Poly::one(),
            });
        }
        let (cn, pn) = num.to_int_primitive();
        let (cd, pd) = den.to_int_primitive();
        let g = poly_gcd(&pn, &pd);
        let rn = pn.exact_div(&g).expect("gcd divides");
        let rd = pd.exact_div(&g).expect("gcd divides");
        // make the denominator monic: divide both by its leading coefficient
        let lc = rd.leading().expect("nonzero").1.clone();
        let c = cn / cd / &lc;
        Ok(Scalar {
            num: rn.scale(&c),
            den: rd.scale(&(BigRational::one() / lc)),
        })
    }

    pub fn zero() -> Scalar {
        Scalar {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Scalar {
        Scalar {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn int(n: i64) -> Scalar {
        Scalar {
            num: Poly::int(n),
            den: Poly::one(),
        }
    }

    pub fn rational(num: i64, den: i64) -> Scalar {
        assert!(den != 0, "rational literal with zero denominator");
        Scalar::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rational(c: BigRational) -> Scalar {
        Scalar {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn var(v: Var) -> Scalar {
        Scalar {
            num: Poly::var(v),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> Scalar {
        Scalar {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn support(&self) -> BTreeSet<Var> {
        let mut s = self.num.support();
        s.extend(self.den.support());
        s
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den.is_one() && other.den.is_one() {
            return Scalar {
                num: self.num.add(&other.num),
                den: Poly::one(),
            };
        }
        if self.den == other.den {
            return Scalar::normalize(self.num.add(&other.num), self.den.clone())
                .expect("nonzero denominator");
        }
        let g = poly_gcd(&self.den, &other.den);
        if g.is_one() {
            // coprime monic denominators: the sum is already reduced
            let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
            if num.is_zero() {
                return Scalar::zero();
            }
            return Scalar {
                num,
                den: self.den.mul(&other.den),
            };
        }
        let d2 = other.den.exact_div(&g).expect("gcd divides");
        let d1 = self.den.exact_div(&g).expect("gcd divides");
        let num = self.num.mul(&d2).add(&other.num.mul(&d1));
        let den = self.den.mul(&d2);
        Scalar::normalize(num, den).expect("nonzero denominator")
    }

    pub fn neg(&self) -> Scalar {
        Scalar {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        if self.is_zero() || other.is_zero() {
            return Scalar::zero();
        }
        if self.den.is_one() && other.den.is_one() {
            return Scalar {
                num: self.num.mul(&other.num),
                den: Poly::one(),
            };
        }
        // both inputs are reduced, so only cross pairs can share factors
        let g1 = poly_gcd(&self.num, &other.den);
        let g2 = poly_gcd(&other.num, &self.den);
        let n1 = if g1.is_one() { self.num.clone() } else { self.num.exact_div(&g1).expect("gcd divides") };
        let d2 = if g1.is_one() { other.den.clone() } else { other.den.exact_div(&g1).expect("gcd divides") };
        let n2 = if g2.is_one() { other.num.clone() } else { other.num.exact_div(&g2).expect("gcd divides") };
        let d1 = if g2.is_one() { self.den.clone() } else { self.den.exact_div(&g2).expect("gcd divides") };
        let num = n1.mul(&n2);
        let den = d1.mul(&d2);
        if den.is_one() {
            return Scalar { num, den };
        }
        let lc = den.leading().expect("nonzero").1.clone();
        if lc.is_one() {
            return Scalar { num, den };
        }
        let inv_lc = BigRational::one() / lc;
        Scalar {
            num: num.scale(&inv_lc),
            den: den.scale(&inv_lc),
        }
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar, ArithError> {
        Ok(self.mul(&other.inv()?))
    }

    /// Reciprocal; a pure swap for canonical fractions.
    pub fn inv(&self) -> Result<Scalar, ArithError> {
        if self.num.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        let lc = self.num.leading().expect("nonzero").1.clone();
        let inv_lc = BigRational::one() / lc;
        Ok(Scalar {
            num: self.den.scale(&inv_lc),
            den: self.num.scale(&inv_lc),
        })
    }

    pub fn pow(&self, e: i64) -> Result<Scalar, ArithError> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut out = Scalar::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigRational) -> Scalar {
        if c.is_zero() {
            return Scalar::zero();
        }
        Scalar {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Partial derivative treating all variables as independent.
    pub fn partial(&self, v: Var) -> Scalar {
        if self.den.is_one() {
            return Scalar {
                num: self.num.partial(v),
                den: Poly::one(),
            };
        }
        let dn = self.num.partial(v);
        let dd = self.den.partial(v);
        if dd.is_zero() {
            return Scalar::normalize(dn, self.den.clone()).expect("nonzero denominator");
        }
        // (n/d)' = (n' d_red - n (d'/g)) / (d d_red) with g = gcd(d, d')
        let g = poly_gcd(&self.den, &dd);
        let d_red = self.den.exact_div(&g).expect("gcd divides");
        let dd_red = dd.exact_div(&g).expect("gcd divides");
        let num = dn.mul(&d_red).sub(&self.num.mul(&dd_red));
        let den = self.den.mul(&d_red);
        Scalar::normalize(num, den).expect("nonzero denominator")
    }

    /// Simultaneous substitution followed by canonicalization.
    ///
    /// Fails when the denominator vanishes identically after substitution,
    /// naming the offending factor.
    pub fn substitute(&self, map: &HashMap<Var, Scalar>) -> Result<Scalar, ArithError> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        let sn = self.num.substitute(map)?;
        if self.den.is_one() {
            return Ok(sn);
        }
        let sd = self.den.substitute(map)?;
        if sd.is_zero() {
            return Err(ArithError::ZeroDenominator {
                factor: self.den.to_string(),
            });
        }
        sn.div(&sd)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({self})")
    }
}
