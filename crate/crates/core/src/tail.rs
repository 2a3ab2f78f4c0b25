//! Asymptotic model of the odd tails `u_n ~ sum_j tau_j n^{-j/2}`.

use std::collections::BTreeMap;

use rug::{Complex, Float};
use serde_json::{json, Map, Value};

use crate::cf::TwoVariantCF;
use crate::classify::{classify_cf, dt21_roots, ShiftedCoeffs, Subclass, SubclassTag, Witness};
use crate::error::{Error, Result};
use crate::mp::{abs, complex_to_json, is_zero, principal_sqrt, PrecisionContext};

#[derive(Debug, Clone, PartialEq)]
pub struct TailModel {
    pub tag: SubclassTag,
    pub mu: u32,
    /// Twice the order of the initial approximation `u_{n0}`.
    pub m: u32,
    pub theta: u32,
    /// Coefficients used by `u_{n0}`; absent entries are zero.
    pub tau: BTreeMap<i32, Complex>,
    pub alpha: Complex,
    pub beta: Complex,
    pub gamma: Complex,
}

impl TailModel {
    pub fn class(&self) -> Subclass {
        self.tag.class
    }

    pub fn tau(&self, j: i32, ctx: &PrecisionContext) -> Complex {
        self.tau.get(&j).cloned().unwrap_or_else(|| ctx.zero())
    }

    /// `tau_{-mu}`.
    pub fn beginning(&self, ctx: &PrecisionContext) -> Complex {
        self.tau(-(self.mu as i32), ctx)
    }

    /// `u_{n0}`: the truncated expansion evaluated at `n`.
    pub fn eval_initial(&self, n: u64, ctx: &PrecisionContext) -> Complex {
        let nf = Float::with_val(ctx.bits(), n);
        let root = nf.clone().sqrt();
        let mut sum = ctx.zero();
        for (&j, t) in &self.tau {
            // n^{-j/2} for j in [-4, 0]
            let power = match -j {
                0 => Float::with_val(ctx.bits(), 1),
                1 => root.clone(),
                2 => nf.clone(),
                3 => nf.clone() * &root,
                4 => nf.clone() * &nf,
                _ => unreachable!("initial model uses j in [-4, 0]"),
            };
            sum += t.clone() * power;
        }
        sum
    }

    /// Exponent `m/2 + j theta` of the error after `j` iterations, as a
    /// numerator over 2.
    pub fn order_halves(&self, j: usize) -> u64 {
        u64::from(self.m) + 2 * j as u64 * u64::from(self.theta)
    }

    /// `alpha tau^2 + beta tau + gamma` at `tau_{-mu}` and the largest term
    /// modulus.
    pub fn quadratic_residual(&self, ctx: &PrecisionContext) -> (Complex, Float) {
        let t = self.beginning(ctx);
        let terms = [self.alpha.clone() * &t * &t, self.beta.clone() * &t, self.gamma.clone()];
        let scale = terms.iter().map(abs).fold(ctx.real_zero(), |acc, v| acc.max(&v));
        let sum = terms.into_iter().fold(ctx.zero(), |acc, v| acc + v);
        (sum, scale)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tag": self.tag.class.name(),
            "witness": self.tag.to_json()["witness"].clone(),
            "mu": self.mu,
            "m": self.m,
            "theta": self.theta,
            "tau": tau_json(&self.tau),
            "alpha": complex_to_json(&self.alpha),
            "beta": complex_to_json(&self.beta),
            "gamma": complex_to_json(&self.gamma),
        })
    }
}

pub fn tau_json(tau: &BTreeMap<i32, Complex>) -> Value {
    let mut map = Map::new();
    for (j, t) in tau {
        map.insert(j.to_string(), complex_to_json(t));
    }
    Value::Object(map)
}

pub fn quadratic_coefficients(tag: &SubclassTag, sc: &ShiftedCoeffs) -> Result<(Complex, Complex, Complex)> {
    let zero = || Complex::new(sc.p(-1).prec());
    let row = match tag.class {
        Subclass::De10 => (sc.qp(0), zero(), -(sc.q(0) * sc.p(-1))),
        Subclass::Dn10 => (sc.qp(0), sc.p(-1) - sc.pp(-1), zero()),
        Subclass::D11 => (sc.qp(-1), sc.q(-1) * sc.qp(-1), zero()),
        Subclass::De20 => (sc.qp(0), sc.p(-1) - sc.pp(-1) - sc.p(-2), -(sc.q(0) * sc.p(-2))),
        Subclass::Dn20 => (sc.qp(0), sc.p(-2) - sc.pp(-2), zero()),
        Subclass::Dt21 => (sc.qp(-1), sc.p(-2) - sc.pp(-2) + sc.q(-1) * sc.qp(-1), -(sc.q(-1) * sc.pp(-2))),
    };
    if is_zero(&row.0) {
        return Err(Error::DegenerateCoefficient(format!("alpha vanishes for {}", tag.class)));
    }
    Ok(row)
}

/// Sign of `Re w`; refuses to choose when `Re w` is negligible.
fn sign_of_real(w: &Complex, what: &str, ctx: &PrecisionContext) -> Result<i32> {
    let re = w.real().clone().abs();
    if re <= abs(w) * ctx.eps_rel() {
        return Err(Error::BoundaryCondition(format!("Re({what}) vanishes")));
    }
    Ok(if w.real().is_sign_negative() { -1 } else { 1 })
}

fn nonzero_div(num: Complex, den: Complex, what: &str) -> Result<Complex> {
    if is_zero(&den) {
        return Err(Error::DegenerateCoefficient(format!("zero denominator in {what}")));
    }
    Ok(num / den)
}

fn modulus_below(prime: &Complex, plain: &Complex) -> bool {
    abs(prime) < abs(plain)
}

/// `tau_{-mu}`.
pub fn beginning_coefficient(tag: &SubclassTag, sc: &ShiftedCoeffs, ctx: &PrecisionContext) -> Result<Complex> {
    match tag.class {
        Subclass::De10 => {
            let r = principal_sqrt(&nonzero_div(sc.q(0) * sc.p(-1), sc.qp(0), "q_0 p_{-1} / q'_0")?);
            let probe = nonzero_div(sc.qp(0) * &r, sc.p(-1), "q'_0 r / p_{-1}")?;
            let s = sign_of_real(&probe, "q'_0 sqrt(q_0 p_{-1}/q'_0) / p_{-1}", ctx)?;
            Ok(if s < 0 { -r } else { r })
        }
        Subclass::Dn10 => {
            if modulus_below(&sc.pp(-1), &sc.p(-1)) {
                Ok(ctx.zero())
            } else {
                nonzero_div(sc.pp(-1) - sc.p(-1), sc.qp(0), "tau_{-2}")
            }
        }
        Subclass::D11 => Ok(ctx.zero()),
        Subclass::De20 => {
            let (alpha, beta, gamma) = quadratic_coefficients(tag, sc)?;
            let disc = beta.clone() * &beta - alpha.clone() * &gamma * 4u32;
            let d = principal_sqrt(&disc);
            let s =
                sign_of_real(&nonzero_div(d.clone(), sc.p(-2), "sqrt(disc) / p_{-2}")?, "sqrt(disc) / p_{-2}", ctx)?;
            let sd = if s < 0 { -d } else { d };
            let t = -beta.clone() + &sd;
            let t_other = -beta - &sd;
            if abs(&t) >= abs(&t_other) {
                nonzero_div(t, alpha * 2u32, "tau_{-2}")
            } else {
                nonzero_div(gamma * 2u32, t_other, "tau_{-2}")
            }
        }
        Subclass::Dn20 => {
            if modulus_below(&sc.pp(-2), &sc.p(-2)) {
                Ok(ctx.zero())
            } else {
                nonzero_div(sc.pp(-2) - sc.p(-2), sc.qp(0), "tau_{-4}")
            }
        }
        Subclass::Dt21 => match &tag.witness {
            Witness::Roots { chosen, .. } => Ok(chosen.clone()),
            _ => Ok(dt21_roots(sc).0),
        },
    }
}

fn de10_tau0(sc: &ShiftedCoeffs) -> Result<Complex> {
    let num = sc.pp(0) * 2u32 - sc.qp(0) * sc.q(0) * 2u32 + sc.p(-1) - sc.p(0) * 2u32;
    nonzero_div(num, sc.qp(0) * 4u32, "tau_0")
}

fn dn10_tau0(sc: &ShiftedCoeffs, tau_m2: &Complex) -> Result<Complex> {
    if is_zero(tau_m2) {
        nonzero_div(sc.pp(-1) * sc.q(0), sc.p(-1) - sc.pp(-1), "tau_0")
    } else {
        let qp0 = sc.qp(0);
        let first = nonzero_div(sc.p(-1) * sc.q(0), sc.pp(-1) - sc.p(-1), "tau_0")?;
        let second = nonzero_div(sc.p(-1) + sc.pp(0) - sc.p(0), qp0.clone(), "tau_0")?;
        let third = nonzero_div((sc.p(-1) - sc.pp(-1)) * sc.qp(1), qp0.clone() * &qp0, "tau_0")?;
        Ok(first + second + third)
    }
}

fn dn20_tau_m2(sc: &ShiftedCoeffs, tau_m4: &Complex) -> Result<Complex> {
    if is_zero(tau_m4) {
        Ok(Complex::new(sc.p(-2).prec()))
    } else {
        let qp0 = sc.qp(0);
        let first = nonzero_div(sc.p(-2) * 2u32 + sc.pp(-1) - sc.p(-1), qp0.clone(), "tau_{-2}")?;
        let second = nonzero_div(sc.qp(1) * (sc.p(-2) - sc.pp(-2)), qp0.clone() * &qp0, "tau_{-2}")?;
        Ok(first + second)
    }
}

fn dt21_tau0(sc: &ShiftedCoeffs, t: &Complex) -> Result<Complex> {
    let lin = sc.qp(-1) * sc.q(0) + sc.qp(0) * sc.q(-1) - sc.pp(-1) + sc.p(-1) - sc.pp(-2);
    let num = sc.pp(-2) * sc.q(0) + sc.pp(-1) * sc.q(-1) - lin * t - (sc.qp(-1) + sc.qp(0)) * t * t;
    let den = sc.qp(-1) * t * 2u32 + sc.p(-2) - sc.pp(-2) + sc.qp(-1) * sc.q(-1);
    nonzero_div(num, den, "tau_0")
}

fn de20_tau0(sc: &ShiftedCoeffs, t: &Complex) -> Result<Complex> {
    let num = sc.pp(-1) * sc.q(0) + sc.p(-2) * sc.q(1) - (sc.qp(1) + sc.qp(0)) * t * t
        + (sc.pp(-1) + sc.pp(0) - sc.p(0) - sc.qp(0) * sc.q(0)) * t;
    let den = t.clone() * sc.qp(0) * 2u32 + sc.p(-1) - sc.pp(-1);
    nonzero_div(num, den, "tau_0")
}

fn d11_tau0(sc: &ShiftedCoeffs, tau_m2: &Complex) -> Result<Complex> {
    if is_zero(tau_m2) {
        nonzero_div(sc.pp(-1), sc.qp(-1), "tau_0")
    } else {
        Ok(sc.q(-1) - sc.q(0) - nonzero_div(sc.p(-1), sc.qp(-1), "tau_0")?)
    }
}

/// Builds the model whose truncated expansion gives `u_{n0}`.
pub fn initial_tail(tag: &SubclassTag, sc: &ShiftedCoeffs, ctx: &PrecisionContext) -> Result<TailModel> {
    let (alpha, beta, gamma) = quadratic_coefficients(tag, sc)?;
    let lead = beginning_coefficient(tag, sc, ctx)?;
    let class = tag.class;
    let mut tau = BTreeMap::new();
    match class {
        Subclass::De10 => {
            tau.insert(0, de10_tau0(sc)?);
            tau.insert(-1, lead);
        }
        Subclass::Dn10 => {
            tau.insert(0, dn10_tau0(sc, &lead)?);
            tau.insert(-2, lead);
        }
        Subclass::D11 => {
            tau.insert(0, d11_tau0(sc, &lead)?);
        }
        Subclass::De20 => {
            tau.insert(-2, lead);
        }
        Subclass::Dn20 => {
            tau.insert(-2, dn20_tau_m2(sc, &lead)?);
            tau.insert(-4, lead);
        }
        Subclass::Dt21 => {
            tau.insert(0, dt21_tau0(sc, &lead)?);
            tau.insert(-2, lead);
        }
    }
    Ok(TailModel {
        tag: tag.clone(),
        mu: class.mu(),
        m: class.initial_order(),
        theta: class.theta(),
        tau,
        alpha,
        beta,
        gamma,
    })
}

/// Every `tau_j` with `j <= 0` that has a closed form for the subclass.
pub fn extended_coefficients(
    tag: &SubclassTag,
    sc: &ShiftedCoeffs,
    ctx: &PrecisionContext,
) -> Result<BTreeMap<i32, Complex>> {
    let lead = beginning_coefficient(tag, sc, ctx)?;
    let mut tau = BTreeMap::new();
    match tag.class {
        Subclass::De10 => {
            tau.insert(-2, ctx.zero());
            tau.insert(0, de10_tau0(sc)?);
            tau.insert(-1, lead);
        }
        Subclass::Dn10 => {
            tau.insert(-1, ctx.zero());
            tau.insert(0, dn10_tau0(sc, &lead)?);
            tau.insert(-2, lead);
        }
        Subclass::D11 => {
            tau.insert(-1, ctx.zero());
            tau.insert(0, d11_tau0(sc, &lead)?);
            tau.insert(-2, lead);
        }
        Subclass::De20 => {
            tau.insert(-4, ctx.zero());
            tau.insert(-3, ctx.zero());
            tau.insert(-1, ctx.zero());
            tau.insert(0, de20_tau0(sc, &lead)?);
            tau.insert(-2, lead);
        }
        Subclass::Dn20 => {
            tau.insert(-3, ctx.zero());
            tau.insert(-1, ctx.zero());
            tau.insert(-2, dn20_tau_m2(sc, &lead)?);
            tau.insert(-4, lead);
        }
        Subclass::Dt21 => {
            tau.insert(-3, ctx.zero());
            tau.insert(-1, ctx.zero());
            tau.insert(0, dt21_tau0(sc, &lead)?);
            tau.insert(-2, lead);
        }
    }
    Ok(tau)
}

/// Classification followed by [`initial_tail`].
pub fn tail_model(cf: &TwoVariantCF, ctx: &PrecisionContext) -> Result<(ShiftedCoeffs, TailModel)> {
    let (sc, tag) = classify_cf(cf, ctx)?;
    let model = initial_tail(&tag, &sc, ctx)?;
    Ok((sc, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify, shifted_coeffs};
    use crate::mp::{rel_eq, Poly};

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(50).unwrap()
    }

    fn model_of(a: Poly, b: Poly, ap: Poly, bp: Poly, c: &PrecisionContext) -> (ShiftedCoeffs, TailModel) {
        let cf = TwoVariantCF::new("t", c.zero(), a, b, ap, bp, c).unwrap();
        tail_model(&cf, c).unwrap()
    }

    fn digamma_one(c: &PrecisionContext) -> (ShiftedCoeffs, TailModel) {
        model_of(
            Poly::new(vec![c.ratio(3, 4), c.int(-4), c.int(4)]),
            Poly::from_ints(&[1], c),
            Poly::from_ints(&[0, 0, 4], c),
            Poly::from_ints(&[1], c),
            c,
        )
    }

    #[test]
    fn de20_digamma() {
        let c = ctx();
        let (sc, model) = digamma_one(&c);
        assert_eq!((model.alpha.clone(), model.beta.clone(), model.gamma.clone()), (c.int(1), c.zero(), c.int(-4)));
        assert_eq!(model.tau.len(), 1);
        assert!(rel_eq(&model.beginning(&c), &c.int(2), &c));
        assert!(rel_eq(&model.eval_initial(7, &c), &c.int(14), &c));
        assert_eq!((model.mu, model.m, model.theta), (2, 0, 1));
        let ext = extended_coefficients(&model.tag, &sc, &c).unwrap();
        // (-4 - (3/4 + 1) 2) / (2 * 2 + 4)
        assert!(rel_eq(&ext[&0], &c.ratio(-15, 16), &c));
        assert!(is_zero(&ext[&-4]) && is_zero(&ext[&-3]));
    }

    #[test]
    fn de10_incomplete_gamma() {
        let c = ctx();
        let z = c.ratio(1, 16);
        let (_, model) = model_of(
            Poly::from_ints(&[3, 1], &c),
            Poly::from_ints(&[1], &c),
            Poly::from_ints(&[0, 1], &c),
            Poly::constant(z.clone()),
            &c,
        );
        assert_eq!(model.class(), Subclass::De10);
        // p_{-1} = 1, p_0 = 4, p'_0 = 0, q_0 = 1, q'_0 = z
        assert!(rel_eq(&model.tau(-1, &c), &c.int(4), &c));
        assert!(rel_eq(&model.tau(0, &c), &c.ratio(-57, 2), &c));
        assert!(rel_eq(&model.eval_initial(4, &c), &c.ratio(-41, 2), &c));
    }

    #[test]
    fn dt21_log() {
        let c = ctx();
        let x = c.int(1);
        let (sc, model) = model_of(
            Poly::new(vec![c.zero(), c.zero(), x.clone()]),
            Poly::from_ints(&[0, 2], &c),
            Poly::new(vec![c.zero(), c.zero(), x]),
            Poly::from_ints(&[1, 2], &c),
            &c,
        );
        assert_eq!((model.alpha.clone(), model.beta.clone(), model.gamma.clone()), (c.int(2), c.int(4), c.int(-2)));
        let sqrt2 = Float::with_val(c.bits(), 2).sqrt();
        let t = c.from_real(&(sqrt2 - 1u32));
        assert!(rel_eq(&model.beginning(&c), &t, &c));
        // (2 - 7 t - 3 t^2) / (4 t + 4)
        let expected = (c.int(2) - t.clone() * 7u32 - t.clone() * &t * 3u32) / (t.clone() * 4u32 + 4u32);
        assert!(rel_eq(&model.tau(0, &c), &expected, &c));
        let (res, scale) = model.quadratic_residual(&c);
        assert!(abs(&res) <= scale * c.eps_rel());
        // the rejected root is farther from p'_{-2}/q'_{-1} and gives a larger product
        let Witness::Roots { chosen, rejected, .. } = &model.tag.witness else { panic!() };
        let prod = |x: &Complex| abs(&(x.clone() * sc.p(-2) / (x.clone() + sc.q(-1))));
        assert!(prod(chosen) < prod(rejected));
    }

    #[test]
    fn d11_constant_tail() {
        let c = ctx();
        let (_, model) = model_of(
            Poly::from_ints(&[1, 1], &c),
            Poly::from_ints(&[1, 1], &c),
            Poly::from_ints(&[0, 3], &c),
            Poly::from_ints(&[0, 2], &c),
            &c,
        );
        assert_eq!(model.class(), Subclass::D11);
        for n in [1, 5, 100] {
            assert!(rel_eq(&model.eval_initial(n, &c), &c.ratio(3, 2), &c));
        }
    }

    #[test]
    fn dn20_cn_is_zero() {
        let c = ctx();
        let k2 = c.parse_complex("0.81").unwrap();
        let x = c.parse_complex("0.8").unwrap();
        let (_, model) = model_of(
            Poly::from_ints(&[1, -4, 4], &c),
            Poly::constant(x.clone()),
            Poly::from_ints(&[0, 0, 4], &c).scale(&k2),
            Poly::constant(x),
            &c,
        );
        assert_eq!(model.class(), Subclass::Dn20);
        assert!(is_zero(&model.tau(-4, &c)) && is_zero(&model.tau(-2, &c)));
        assert!(is_zero(&model.eval_initial(9, &c)));
    }

    #[test]
    fn dn10_branches() {
        let c = ctx();
        // |p'_{-1}| = 1 < |p_{-1}| = 2
        let (sc, model) = model_of(
            Poly::from_ints(&[1, 2], &c),
            Poly::from_ints(&[1], &c),
            Poly::from_ints(&[0, 1], &c),
            Poly::from_ints(&[1], &c),
            &c,
        );
        assert!(is_zero(&model.tau(-2, &c)));
        assert!(rel_eq(&model.tau(0, &c), &(sc.pp(-1) * sc.q(0) / (sc.p(-1) - sc.pp(-1))), &c));
        // |p'_{-1}| = 3 > |p_{-1}| = 1: tau_{-2} = (3 - 1) / 1
        let (_, model) = model_of(
            Poly::from_ints(&[1, 1], &c),
            Poly::from_ints(&[1], &c),
            Poly::from_ints(&[0, 3], &c),
            Poly::from_ints(&[1], &c),
            &c,
        );
        assert!(rel_eq(&model.tau(-2, &c), &c.int(2), &c));
        let (res, scale) = model.quadratic_residual(&c);
        assert!(abs(&res) <= scale * c.eps_rel());
    }

    #[test]
    fn boundary_sign_is_refused() {
        let c = ctx();
        // q_0 = q'_0 = i makes Re(q'_0 r / p_{-1}) vanish.
        let sc_cf = TwoVariantCF::new(
            "t",
            c.zero(),
            Poly::from_ints(&[0, 1], &c),
            Poly::constant(c.from_f64(0.0, 1.0)),
            Poly::from_ints(&[0, 1], &c),
            Poly::constant(c.from_f64(0.0, 1.0)),
            &c,
        )
        .unwrap();
        let sc = shifted_coeffs(&sc_cf, &c);
        // q_0 q'_0 / p_{-1} = -1 is rejected before reaching the sign test.
        assert!(matches!(classify(&sc, &c), Err(Error::NotInClassD(_))));
        let tag = SubclassTag { class: Subclass::De10, witness: Witness::None };
        // r = sqrt(1) = 1, q'_0 r / p_{-1} = i: purely imaginary.
        assert!(matches!(beginning_coefficient(&tag, &sc, &c), Err(Error::BoundaryCondition(_))));
    }

    #[test]
    fn json_has_tau_keys() {
        let c = ctx();
        let (_, model) = digamma_one(&c);
        let v = model.to_json();
        assert_eq!(v["tag"], "De20");
        assert!(v["tau"]["-2"].is_array());
    }
}
