//! Shifted leading coefficients and subclass decisions.
//!
//! Coefficients are indexed by the negated power of `n`, so `p(-2)` is the
//! coefficient of `n^2` in `a_{n+1}` and `qp(0)` the constant term of `b'_n`.
//! The constant term of `b'_n` is read as `q'_0` throughout.

use std::fmt;

use rug::Complex;
use serde_json::{json, Value};

use crate::cf::TwoVariantCF;
use crate::error::{Error, Result};
use crate::mp::{abs, complex_to_json, is_nonpositive_real, is_zero, principal_sqrt, rel_eq, PrecisionContext};

/// Leading coefficients of `a_{n+1}`, `a'_n`, `b_{n+1}` and `b'_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedCoeffs {
    /// `[p_0, p_{-1}, p_{-2}]`, i.e. ascending powers of `n`.
    p: [Complex; 3],
    pp: [Complex; 3],
    /// `[q_1, q_0, q_{-1}, q_{-2}]`; `q_1` multiplies `n^{-1}` and is zero
    /// for polynomial denominators.
    q: [Complex; 4],
    qp: [Complex; 4],
    bits: u32,
}

impl ShiftedCoeffs {
    fn numerator(arr: &[Complex; 3], i: i32, bits: u32) -> Complex {
        match i {
            -2..=0 => arr[(-i) as usize].clone(),
            _ => Complex::new(bits),
        }
    }

    fn denominator(arr: &[Complex; 4], i: i32, bits: u32) -> Complex {
        match i {
            -2..=1 => arr[(1 - i) as usize].clone(),
            _ => Complex::new(bits),
        }
    }

    /// `p_i`: coefficient of `n^{-i}` in `a_{n+1}`.
    pub fn p(&self, i: i32) -> Complex {
        Self::numerator(&self.p, i, self.bits)
    }

    /// `p'_i`: coefficient of `n^{-i}` in `a'_n`.
    pub fn pp(&self, i: i32) -> Complex {
        Self::numerator(&self.pp, i, self.bits)
    }

    /// `q_i`: coefficient of `n^{-i}` in `b_{n+1}`.
    pub fn q(&self, i: i32) -> Complex {
        Self::denominator(&self.q, i, self.bits)
    }

    /// `q'_i`: coefficient of `n^{-i}` in `b'_n`.
    pub fn qp(&self, i: i32) -> Complex {
        Self::denominator(&self.qp, i, self.bits)
    }

    pub fn to_json(&self) -> Value {
        let list = |f: &dyn Fn(i32) -> Complex, range: std::ops::RangeInclusive<i32>| {
            Value::Array(range.map(|i| complex_to_json(&f(i))).collect())
        };
        json!({
            "p": list(&|i| self.p(i), -2..=0),
            "p_prime": list(&|i| self.pp(i), -2..=0),
            "q": list(&|i| self.q(i), -2..=1),
            "q_prime": list(&|i| self.qp(i), -2..=1),
        })
    }
}

/// Reads `p`, `p'` from `a(n+1)`, `a'(n)` and `q`, `q'` from `b(n+1)`, `b'(n)`.
pub fn shifted_coeffs(cf: &TwoVariantCF, ctx: &PrecisionContext) -> ShiftedCoeffs {
    let a1 = cf.a.shift(ctx);
    let b1 = cf.b.shift(ctx);
    let num = |poly: &crate::mp::Poly| [poly.coeff(0, ctx), poly.coeff(1, ctx), poly.coeff(2, ctx)];
    let den = |poly: &crate::mp::Poly| [ctx.zero(), poly.coeff(0, ctx), poly.coeff(1, ctx), poly.coeff(2, ctx)];
    ShiftedCoeffs { p: num(&a1), pp: num(&cf.a_prime), q: den(&b1), qp: den(&cf.b_prime), bits: ctx.bits() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subclass {
    /// `deg a = 1`, `deg b = 0`, `p_{-1} = p'_{-1}`.
    De10,
    /// `deg a = 1`, `deg b = 0`, `|p'_{-1}| != |p_{-1}|`.
    Dn10,
    D11,
    /// `deg a = 2`, `deg b = 0`, `p_{-2} = p'_{-2}`.
    De20,
    /// `deg a = 2`, `deg b = 0`, `|p'_{-2}| != |p_{-2}|`.
    Dn20,
    /// `deg a = 2`, `deg b = 1` with distinguishable fixed-point roots.
    Dt21,
}

impl Subclass {
    pub const ALL: [Subclass; 6] =
        [Subclass::De10, Subclass::Dn10, Subclass::D11, Subclass::De20, Subclass::Dn20, Subclass::Dt21];

    pub fn name(self) -> &'static str {
        match self {
            Subclass::De10 => "De10",
            Subclass::Dn10 => "Dn10",
            Subclass::D11 => "D11",
            Subclass::De20 => "De20",
            Subclass::Dn20 => "Dn20",
            Subclass::Dt21 => "Dt21",
        }
    }

    /// Exponent of the beginning term `tau_{-mu} n^{mu/2}`.
    pub fn mu(self) -> u32 {
        match self {
            Subclass::De10 => 1,
            Subclass::Dn20 => 4,
            _ => 2,
        }
    }

    /// Twice the order of the initial approximation.
    pub fn initial_order(self) -> u32 {
        match self {
            Subclass::De20 | Subclass::Dn20 => 0,
            Subclass::De10 => 1,
            _ => 2,
        }
    }

    /// Order gained per iteration.
    pub fn theta(self) -> u32 {
        match self {
            Subclass::De10 | Subclass::De20 => 1,
            Subclass::Dn10 | Subclass::Dn20 | Subclass::Dt21 => 2,
            Subclass::D11 => 4,
        }
    }
}

impl fmt::Display for Subclass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Values the decision was based on.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `q_0 q'_0 / p_{-1}` (De10) or `(beta^2 - 4 alpha gamma) / p_{-2}^2` (De20).
    Quotient(Complex),
    /// `|p'|` and `|p|` at the leading power (Dn10, Dn20).
    Moduli {
        prime: rug::Float,
        plain: rug::Float,
    },
    /// Roots of the fixed-point quadratic, `chosen` nearer to `p'_{-2}/q'_{-1}`.
    Roots {
        chosen: Complex,
        rejected: Complex,
        chosen_distance: rug::Float,
        rejected_distance: rug::Float,
    },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubclassTag {
    pub class: Subclass,
    pub witness: Witness,
}

impl SubclassTag {
    pub fn to_json(&self) -> Value {
        let witness = match &self.witness {
            Witness::Quotient(w) => json!({ "quotient": complex_to_json(w) }),
            Witness::Moduli { prime, plain } => json!({
                "modulus_prime": prime.to_string_radix(10, None),
                "modulus": plain.to_string_radix(10, None),
            }),
            Witness::Roots { chosen, rejected, chosen_distance, rejected_distance } => json!({
                "chosen_root": complex_to_json(chosen),
                "rejected_root": complex_to_json(rejected),
                "chosen_distance": chosen_distance.to_string_radix(10, None),
                "rejected_distance": rejected_distance.to_string_radix(10, None),
            }),
            Witness::None => Value::Null,
        };
        json!({ "tag": self.class.name(), "witness": witness })
    }
}

/// Roots of `alpha x^2 + beta x + gamma` without cancellation: the larger
/// one from `-(beta + s sqrt(disc)) / (2 alpha)` with the sign aligned to
/// `beta`, the other from the product `gamma / alpha`.
pub(crate) fn stable_quadratic_roots(alpha: &Complex, beta: &Complex, gamma: &Complex) -> (Complex, Complex) {
    let disc = beta.clone() * beta - alpha.clone() * gamma * 4u32;
    let d = principal_sqrt(&disc);
    let plus = beta.clone() + &d;
    let minus = beta.clone() - &d;
    let big = if abs(&plus) >= abs(&minus) { plus } else { minus };
    if is_zero(&big) {
        // beta = disc = 0: double root at zero.
        return (big.clone(), big);
    }
    let large = -big.clone() / (alpha.clone() * 2u32);
    let small = -(gamma.clone() * 2u32) / big;
    (large, small)
}

/// The two roots of the fixed-point quadratic of the `(2, 1)` case,
/// `q'_{-1} x^2 + (p_{-2} - p'_{-2} + q_{-1} q'_{-1}) x - q_{-1} p'_{-2} = 0`,
/// ordered by distance to `p'_{-2} / q'_{-1}`.
pub(crate) fn dt21_roots(sc: &ShiftedCoeffs) -> (Complex, Complex, rug::Float, rug::Float) {
    let alpha = sc.qp(-1);
    let beta = sc.p(-2) - sc.pp(-2) + sc.q(-1) * sc.qp(-1);
    let gamma = -(sc.q(-1) * sc.pp(-2));
    let (x0, x1) = stable_quadratic_roots(&alpha, &beta, &gamma);
    let target = sc.pp(-2) / sc.qp(-1);
    let d0 = abs(&(target.clone() - &x0));
    let d1 = abs(&(target - &x1));
    if d0 <= d1 {
        (x0, x1, d0, d1)
    } else {
        (x1, x0, d1, d0)
    }
}

fn moduli_differ(prime: &Complex, plain: &Complex, ctx: &PrecisionContext) -> (bool, rug::Float, rug::Float) {
    let mp = abs(prime);
    let m = abs(plain);
    let scale = mp.clone().max(&m);
    let gap = rug::Float::with_val(ctx.bits(), &mp - &m).abs();
    (gap > scale * ctx.eps_rel(), mp, m)
}

fn require_nonzero(value: &Complex, what: &str) -> Result<()> {
    if is_zero(value) {
        Err(Error::DegenerateCoefficient(format!("{what} vanishes")))
    } else {
        Ok(())
    }
}

/// Decides the subclass from the shifted coefficients.
pub fn classify(sc: &ShiftedCoeffs, ctx: &PrecisionContext) -> Result<SubclassTag> {
    let k = if !is_zero(&sc.p(-2)) || !is_zero(&sc.pp(-2)) { 2 } else { 1 };
    let l = if !is_zero(&sc.q(-1)) || !is_zero(&sc.qp(-1)) { 1 } else { 0 };
    let lead = -k;
    if is_zero(&sc.p(lead)) || is_zero(&sc.pp(lead)) {
        return Err(Error::DegreeOutOfRange { k: i64::from(k), l: i64::from(l) });
    }
    match (k, l) {
        (1, 1) | (2, 1) => {
            require_nonzero(&sc.qp(-1), "q'_{-1}")?;
            require_nonzero(&sc.q(-1), "q_{-1}")?;
        }
        _ => require_nonzero(&sc.qp(0), "q'_0")?,
    }
    match (k, l) {
        (1, 1) => Ok(SubclassTag { class: Subclass::D11, witness: Witness::None }),
        (2, 1) => {
            let (chosen, rejected, dc, dr) = dt21_roots(sc);
            let scale = dr.clone();
            let gap = rug::Float::with_val(ctx.bits(), &dr - &dc);
            if gap <= scale * ctx.eps_rel() {
                return Err(Error::NotInClassD(
                    "(2,1): both fixed-point roots are equidistant from p'_{-2}/q'_{-1}".into(),
                ));
            }
            Ok(SubclassTag {
                class: Subclass::Dt21,
                witness: Witness::Roots { chosen, rejected, chosen_distance: dc, rejected_distance: dr },
            })
        }
        (1, 0) => {
            let (p, pp) = (sc.p(-1), sc.pp(-1));
            if rel_eq(&p, &pp, ctx) {
                let w = sc.q(0) * sc.qp(0) / &p;
                if is_nonpositive_real(&w, ctx) {
                    return Err(Error::NotInClassD(
                        "(1,0) with p_{-1} = p'_{-1}: q_0 q'_0 / p_{-1} lies on (-inf, 0]".into(),
                    ));
                }
                return Ok(SubclassTag { class: Subclass::De10, witness: Witness::Quotient(w) });
            }
            let (differ, prime, plain) = moduli_differ(&pp, &p, ctx);
            if differ {
                Ok(SubclassTag { class: Subclass::Dn10, witness: Witness::Moduli { prime, plain } })
            } else {
                Err(Error::NotInClassD("(1,0): |p'_{-1}| = |p_{-1}| but p'_{-1} != p_{-1}".into()))
            }
        }
        (2, 0) => {
            let (p, pp) = (sc.p(-2), sc.pp(-2));
            if rel_eq(&p, &pp, ctx) {
                let (alpha, beta, gamma) = (sc.qp(0), sc.p(-1) - sc.pp(-1) - &p, -(sc.q(0) * &p));
                let disc = beta.clone() * &beta - alpha * gamma * 4u32;
                let w = disc / (p.clone() * &p);
                if is_nonpositive_real(&w, ctx) {
                    return Err(Error::NotInClassD(
                        "(2,0) with p_{-2} = p'_{-2}: discriminant quotient lies on (-inf, 0]".into(),
                    ));
                }
                return Ok(SubclassTag { class: Subclass::De20, witness: Witness::Quotient(w) });
            }
            let (differ, prime, plain) = moduli_differ(&pp, &p, ctx);
            if differ {
                Ok(SubclassTag { class: Subclass::Dn20, witness: Witness::Moduli { prime, plain } })
            } else {
                Err(Error::NotInClassD("(2,0): |p'_{-2}| = |p_{-2}| but p'_{-2} != p_{-2}".into()))
            }
        }
        _ => Err(Error::DegreeOutOfRange { k: i64::from(k), l: i64::from(l) }),
    }
}

/// Degree check, shifted coefficients and classification in one step.
pub fn classify_cf(cf: &TwoVariantCF, ctx: &PrecisionContext) -> Result<(ShiftedCoeffs, SubclassTag)> {
    cf.degrees()?;
    let sc = shifted_coeffs(cf, ctx);
    let tag = classify(&sc, ctx)?;
    Ok((sc, tag))
}
