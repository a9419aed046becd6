//! Coefficient rings for jets.
//!
//! Everything in the kernel is computed over exact rationals. The Moser
//! path machinery additionally needs polynomials in a formal parameter t
//! with rational coefficients, so jets are generic over a small `Scalar`
//! trait with exactly these two implementations.

use std::fmt;

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rat = Ratio<BigInt>;

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Parse a decimal-free rational string: either `p` or `p/q`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::SchemaError(format!("bad rational numerator {s:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::SchemaError(format!("bad rational denominator {s:?}")))?;
    if d.is_zero() {
        return Err(Error::SchemaError(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(n, d))
}

/// Render a rational canonically: `p` when the denominator is one, else `p/q`.
pub fn render_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Commutative ring of jet coefficients.
pub trait Scalar: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn mul_rat(&self, r: &Rat) -> Self;
    fn from_rat(r: Rat) -> Self;
    /// Multiplicative inverse when the element is a unit of the ring.
    fn inv(&self) -> Option<Self>;
    /// Exact division; `None` when `rhs` does not divide `self`.
    fn div_exact(&self, rhs: &Self) -> Option<Self>;
    /// The rational value of a constant element, when it is one.
    fn to_rat(&self) -> Option<Rat>;
    fn render(&self) -> String;
}

impl Scalar for Rat {
    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn one() -> Self {
        <Rat as One>::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn mul_rat(&self, r: &Rat) -> Self {
        self * r
    }
    fn from_rat(r: Rat) -> Self {
        r
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn div_exact(&self, rhs: &Self) -> Option<Self> {
        if Zero::is_zero(rhs) {
            None
        } else {
            Some(self / rhs)
        }
    }
    fn to_rat(&self) -> Option<Rat> {
        Some(self.clone())
    }
    fn render(&self) -> String {
        render_rat(self)
    }
}

/// Polynomial in the formal path parameter t with rational coefficients,
/// stored densely from degree zero with no trailing zeros.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct TPoly {
    coeffs: Vec<Rat>,
}

impl TPoly {
    pub fn from_coeffs(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(|c| Zero::is_zero(c)) {
            coeffs.pop();
        }
        TPoly { coeffs }
    }

    pub fn constant(r: Rat) -> Self {
        TPoly::from_coeffs(vec![r])
    }

    /// The generator t.
    pub fn t() -> Self {
        TPoly::from_coeffs(vec![<Rat as Zero>::zero(), <Rat as One>::one()])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(<Rat as Zero>::zero)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// True when the polynomial is constant in t.
    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn eval(&self, t: &Rat) -> Rat {
        let mut acc = <Rat as Zero>::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    /// d/dt.
    pub fn d_dt(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * rat_int(k as i64))
            .collect();
        TPoly::from_coeffs(coeffs)
    }

    /// Antiderivative with zero constant term.
    pub fn int_dt(&self) -> Self {
        let mut coeffs = vec![<Rat as Zero>::zero()];
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / rat_int(k as i64 + 1));
        }
        TPoly::from_coeffs(coeffs)
    }
}

impl Scalar for TPoly {
    fn zero() -> Self {
        TPoly { coeffs: vec![] }
    }
    fn one() -> Self {
        TPoly::constant(<Rat as One>::one())
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        TPoly::from_coeffs(coeffs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect();
        TPoly::from_coeffs(coeffs)
    }
    fn neg(&self) -> Self {
        TPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
    fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return <TPoly as Scalar>::zero();
        }
        let mut coeffs = vec![<Rat as Zero>::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if Zero::is_zero(a) {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] = &coeffs[i + j] + a * b;
            }
        }
        TPoly::from_coeffs(coeffs)
    }
    fn mul_rat(&self, r: &Rat) -> Self {
        TPoly::from_coeffs(self.coeffs.iter().map(|c| c * r).collect())
    }
    fn from_rat(r: Rat) -> Self {
        TPoly::constant(r)
    }
    fn inv(&self) -> Option<Self> {
        if self.coeffs.len() == 1 {
            Scalar::inv(&self.coeffs[0]).map(TPoly::constant)
        } else {
            None
        }
    }
    fn div_exact(&self, rhs: &Self) -> Option<Self> {
        if rhs.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(<TPoly as Scalar>::zero());
        }
        if self.coeffs.len() < rhs.coeffs.len() {
            return None;
        }
        // long division; exact iff remainder is zero
        let mut rem = self.coeffs.clone();
        let dn = rhs.coeffs.len();
        let lead = rhs.coeffs[dn - 1].clone();
        let mut quot = vec![<Rat as Zero>::zero(); rem.len() - dn + 1];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + dn - 1] / &lead;
            if !Zero::is_zero(&c) {
                for (j, b) in rhs.coeffs.iter().enumerate() {
                    rem[k + j] = &rem[k + j] - &c * b;
                }
            }
            quot[k] = c;
        }
        if rem.iter().all(Zero::is_zero) {
            Some(TPoly::from_coeffs(quot))
        } else {
            None
        }
    }
    fn to_rat(&self) -> Option<Rat> {
        if self.is_zero() {
            Some(<Rat as Zero>::zero())
        } else if self.is_constant() {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }
    fn render(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if Zero::is_zero(c) {
                continue;
            }
            let mono = match k {
                0 => String::new(),
                1 => "t".into(),
                _ => format!("t^{k}"),
            };
            if mono.is_empty() {
                parts.push(render_rat(c));
            } else if c.is_one() {
                parts.push(mono);
            } else if (-c).is_one() {
                parts.push(format!("-{mono}"));
            } else {
                parts.push(format!("{}*{}", render_rat(c), mono));
            }
        }
        let mut out = String::new();
        for (i, p) in parts.iter().enumerate() {
            if i > 0 && !p.starts_with('-') {
                out.push('+');
            }
            out.push_str(p);
        }
        out
    }
}

/// Abs-value helper used by Gaussian elimination pivot selection.
pub fn rat_abs(r: &Rat) -> Rat {
    r.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        for s in ["1/3", "-7/2", "4", "0", "-12"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(render_rat(&r), s);
        }
        assert_eq!(render_rat(&parse_rat("2/4").unwrap()), "1/2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("0.5").is_err());
    }

    #[test]
    fn tpoly_arith() {
        let t = TPoly::t();
        let one = <TPoly as Scalar>::one();
        // (1-t)(1+t) = 1 - t^2
        let p = one.sub(&t).mul(&one.add(&t));
        assert_eq!(p.coeff(0), rat_int(1));
        assert_eq!(p.coeff(1), rat_int(0));
        assert_eq!(p.coeff(2), rat_int(-1));
        assert_eq!(p.eval(&rat(1, 2)), rat(3, 4));
        // d/dt and integral round-trip
        assert_eq!(p.d_dt().int_dt().coeff(2), rat_int(-1));
        // exact division (1-t^2)/(1+t) = 1-t
        let q = p.div_exact(&one.add(&t)).unwrap();
        assert_eq!(q, one.sub(&t));
        assert!(p.div_exact(&t).is_none());
    }
}
