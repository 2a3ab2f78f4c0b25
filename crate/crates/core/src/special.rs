//! Reference values computed without continued fractions.

use std::sync::{Mutex, OnceLock};

use rug::float::Constant;
use rug::{Complex, Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::mp::{abs, is_zero, principal_sqrt, PrecisionContext};

static BERNOULLI: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();

/// `B_0, ..., B_n` from `sum_{k<=m} C(m+1, k) B_k = 0`.
fn extend_bernoulli(table: &mut Vec<Rational>, n: usize) {
    if table.is_empty() {
        table.push(Rational::from(1));
    }
    while table.len() <= n {
        let m = table.len();
        let mut sum = Rational::new();
        for (k, b) in table.iter().enumerate() {
            let binom = Integer::from(m + 1).binomial(k as u32);
            sum += Rational::from(binom) * b;
        }
        table.push(-sum / Rational::from(m + 1));
    }
}

/// Exact Bernoulli number `B_n` (`B_1 = -1/2`).
pub fn bernoulli(n: usize) -> Rational {
    let lock = BERNOULLI.get_or_init(|| Mutex::new(Vec::new()));
    let mut table = lock.lock().expect("bernoulli cache poisoned");
    extend_bernoulli(&mut table, n);
    table[n].clone()
}

/// Complex digamma by upward recurrence and the Stirling-type series
/// `ln w - 1/(2w) - sum B_{2k} / (2k w^{2k})`.
pub fn digamma(z: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let work = ctx.scaled(1.1);
    let bits = work.bits();
    let z = Complex::with_val(bits, z);
    let re = z.real().to_f64();
    if z.imag().is_zero() && re <= 0.0 && re == re.round() {
        return Err(Error::Domain("digamma pole at a non-positive integer".into()));
    }
    let lift = 10.0 + 0.6 * f64::from(ctx.digits());
    let shift = if re < lift { (lift - re).ceil() as u64 } else { 0 };
    let mut correction = Complex::new(bits);
    for k in 0..shift {
        let t = z.clone() + k;
        if is_zero(&t) {
            return Err(Error::Domain("digamma pole".into()));
        }
        correction += t.recip();
    }
    let w = z + shift;
    let mut sum = w.clone().ln() - (w.clone() * 2u32).recip();
    let w2 = w.clone().square();
    let mut power = w2.clone();
    let eps = Float::with_val(bits, Float::i_exp(1, -(bits as i32)));
    let mut k = 1usize;
    loop {
        let b = Float::with_val(bits, bernoulli(2 * k));
        let term = Complex::with_val(bits, &power).recip() * b / (2 * k) as u64;
        sum -= &term;
        if abs(&term) <= abs(&sum) * &eps {
            break;
        }
        if k > 4 * bits as usize {
            return Err(Error::NoConvergence("digamma asymptotic series".into()));
        }
        power *= &w2;
        k += 1;
    }
    Ok(ctx.convert(&(sum - correction)))
}

/// Tanh-sinh quadrature of a real integrand on `[a, b]`; refines the step
/// until two consecutive levels agree to the context precision.
pub fn tanh_sinh<F>(f: F, a: &Float, b: &Float, ctx: &PrecisionContext) -> Result<Float>
where
    F: Fn(&Float) -> Result<Float>,
{
    let bits = ctx.bits();
    let half_pi = Float::with_val(bits, Constant::Pi) / 2u32;
    let mid = Float::with_val(bits, a + b) / 2u32;
    let radius = Float::with_val(bits, b - a) / 2u32;
    let t_max = (4.0 * f64::from(bits) * std::f64::consts::LN_2 / std::f64::consts::PI).ln() + 0.5;
    let tol = Float::with_val(bits, ctx.eps_rel()).square() * 16u32;
    let mut previous: Option<Float> = None;
    for level in 2..=14 {
        let h = Float::with_val(bits, Float::i_exp(1, -level));
        let count = (t_max * f64::from(1u32 << level)).ceil() as i64;
        let mut sum = Float::new(bits);
        for k in -count..=count {
            let t = Float::with_val(bits, &h * k);
            let u = Float::with_val(bits, t.sinh_ref()) * &half_pi;
            let ch = Float::with_val(bits, u.cosh_ref());
            let weight = Float::with_val(bits, t.cosh_ref()) * &half_pi / ch.square();
            let x = u.tanh();
            let node = Float::with_val(bits, &radius * &x) + &mid;
            if node <= *a || node >= *b {
                continue;
            }
            sum += f(&node)? * weight;
        }
        let value = sum * &h * &radius;
        if let Some(prev) = &previous {
            let diff = Float::with_val(bits, &value - prev).abs();
            if diff <= Float::with_val(bits, value.abs_ref()) * &tol {
                return Ok(value);
            }
        }
        previous = Some(value);
    }
    Err(Error::NoConvergence("tanh-sinh quadrature".into()))
}

/// `int_z^inf e^{-v} v^{-alpha} dv` for real `z > 0`, integrated in
/// `s = ln(v / z)` on `[0, ln(T / z)]` with `T = z + 1.2 digits ln 10 + 16`.
pub fn upper_incomplete_integral(z: &Float, alpha: &Float, ctx: &PrecisionContext) -> Result<Float> {
    if *z <= 0 {
        return Err(Error::Domain("incomplete gamma integral needs z > 0".into()));
    }
    let work = ctx.scaled(1.2);
    let bits = work.bits();
    let z = Float::with_val(bits, z);
    let one_minus_alpha = Float::with_val(bits, 1 - Float::with_val(bits, alpha));
    let mut span = Float::with_val(bits, f64::from(ctx.digits()) * 1.2 * std::f64::consts::LN_10 + 16.0);
    span += &z;
    // For alpha < 1 the integrand decays like v^{-alpha} e^{-v}; extend the cut.
    if *alpha < 1 {
        span += Float::with_val(bits, &one_minus_alpha) * Float::with_val(bits, &span).ln();
    }
    let upper = Float::with_val(bits, &span / &z).ln();
    let scale = Float::with_val(bits, z.ln_ref()) * &one_minus_alpha;
    let integrand = |s: &Float| -> Result<Float> {
        // z^{1-alpha} e^{(1-alpha) s} e^{-z e^s}
        let es = Float::with_val(bits, s.exp_ref());
        let expo = Float::with_val(bits, &one_minus_alpha * s) + &scale - Float::with_val(bits, &z * &es);
        Ok(expo.exp())
    };
    let value = tanh_sinh(integrand, &Float::new(bits), &upper, &work)?;
    Ok(Float::with_val(ctx.bits(), value))
}

/// Arithmetic-geometric mean of positive reals.
pub fn agm(a: &Float, b: &Float, ctx: &PrecisionContext) -> Float {
    let bits = ctx.bits();
    let (mut a, mut b) = (Float::with_val(bits, a), Float::with_val(bits, b));
    for _ in 0..4 * bits {
        let next_a = Float::with_val(bits, &a + &b) / 2u32;
        let next_b = Float::with_val(bits, &a * &b).sqrt();
        let done =
            Float::with_val(bits, &next_a - &next_b).abs() <= Float::with_val(bits, &next_a * ctx.eps_rel()).square();
        a = next_a;
        b = next_b;
        if done {
            break;
        }
    }
    a
}

/// Descending-Landen data for Jacobi functions of modulus `k` in `(0, 1)`.
#[derive(Debug, Clone)]
pub struct Jacobi {
    a: Vec<Float>,
    c: Vec<Float>,
    bits: u32,
}

impl Jacobi {
    pub fn new(k: &Float, ctx: &PrecisionContext) -> Result<Self> {
        if *k <= 0 || *k >= 1 {
            return Err(Error::Domain("Jacobi modulus must lie in (0, 1)".into()));
        }
        let bits = ctx.bits();
        let mut a = vec![Float::with_val(bits, 1)];
        let mut b = Float::with_val(bits, 1 - Float::with_val(bits, k.square_ref())).sqrt();
        let mut c = vec![Float::with_val(bits, k)];
        let tiny = Float::with_val(bits, Float::i_exp(1, -(bits as i32)));
        while c.last().expect("nonempty").clone().abs() > tiny {
            let prev_a = a.last().expect("nonempty").clone();
            let next_a = Float::with_val(bits, &prev_a + &b) / 2u32;
            let next_c = Float::with_val(bits, &prev_a - &b) / 2u32;
            b = Float::with_val(bits, &prev_a * &b).sqrt();
            a.push(next_a);
            c.push(next_c);
            if a.len() > bits as usize {
                return Err(Error::NoConvergence("AGM for Jacobi functions".into()));
            }
        }
        Ok(Jacobi { a, c, bits })
    }

    /// Complete elliptic integral `K(k) = pi / (2 AGM(1, k'))`.
    pub fn quarter_period(&self) -> Float {
        Float::with_val(self.bits, Constant::Pi) / (Float::with_val(self.bits, self.a.last().expect("nonempty")) * 2u32)
    }

    /// `cn(t; k)`.
    pub fn cn(&self, t: &Float) -> Float {
        let bits = self.bits;
        let last = self.a.len() - 1;
        let mut phi = Float::with_val(bits, &self.a[last] * t) << last as u32;
        for i in (1..=last).rev() {
            let s = Float::with_val(bits, &self.c[i] / &self.a[i]) * Float::with_val(bits, phi.sin_ref());
            phi = (phi + s.asin()) / 2u32;
        }
        phi.cos()
    }
}

/// `int_0^inf e^{-t x} cn(t; k) dt` for `x > 0`, using `cn(t + 2K) = -cn(t)`
/// to reduce to one half-period: `I_{[0, 2K]} / (1 + e^{-2 K x})`.
pub fn laplace_cn(x: &Float, k: &Float, ctx: &PrecisionContext) -> Result<Float> {
    if *x <= 0 {
        return Err(Error::Domain("Laplace transform of cn needs x > 0".into()));
    }
    let work = ctx.scaled(1.2);
    let bits = work.bits();
    let x = Float::with_val(bits, x);
    let jac = Jacobi::new(&Float::with_val(bits, k), &work)?;
    let quarter = jac.quarter_period();
    let half = Float::with_val(bits, &quarter * 2u32);
    let integrand = |t: &Float| -> Result<Float> {
        let decay = Float::with_val(bits, -Float::with_val(bits, t * &x)).exp();
        Ok(decay * jac.cn(t))
    };
    let first = tanh_sinh(integrand, &Float::new(bits), &quarter, &work)?;
    let second = tanh_sinh(integrand, &quarter, &half, &work)?;
    let damping = Float::with_val(bits, -Float::with_val(bits, &half * &x)).exp() + 1u32;
    Ok(Float::with_val(ctx.bits(), (first + second) / damping))
}

/// Principal `arctan` by argument halving
/// `arctan x = 2 arctan(x / (1 + sqrt(1 + x^2)))` and the Taylor series.
pub fn arctan(x: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let work = ctx.scaled(1.1);
    let bits = work.bits();
    let mut y = Complex::with_val(bits, x);
    let one_plus = y.clone().square() + 1u32;
    if is_zero(&one_plus) {
        return Err(Error::Domain("arctan is singular at x = +-i".into()));
    }
    let mut factor = 1u32;
    let threshold = Float::with_val(bits, 1) >> 8u32;
    while abs(&y) > threshold {
        let root = principal_sqrt(&(y.clone().square() + 1u32)) + 1u32;
        y /= root;
        factor *= 2;
        if factor > 1 << 20 {
            return Err(Error::NoConvergence("arctan argument reduction".into()));
        }
    }
    let y2 = y.clone().square();
    let mut power = y.clone();
    let mut sum = y.clone();
    let eps = Float::with_val(bits, Float::i_exp(1, -(bits as i32)));
    let mut k = 1u64;
    loop {
        power *= &y2;
        let term = power.clone() / (2 * k + 1);
        if k % 2 == 1 {
            sum -= &term;
        } else {
            sum += &term;
        }
        if abs(&term) <= abs(&sum) * &eps {
            break;
        }
        k += 1;
    }
    Ok(ctx.convert(&(sum * factor)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(60).unwrap()
    }

    fn close(a: &Float, b: &Float, digits: i32) -> bool {
        let diff = Float::with_val(a.prec(), a - b).abs();
        diff <= Float::with_val(a.prec(), b.abs_ref()) * Float::with_val(a.prec(), 10).pow(-digits)
    }

    #[test]
    fn bernoulli_small() {
        assert_eq!(bernoulli(0), Rational::from(1));
        assert_eq!(bernoulli(1), Rational::from((-1, 2)));
        assert_eq!(bernoulli(2), Rational::from((1, 6)));
        assert_eq!(bernoulli(3), Rational::from(0));
        assert_eq!(bernoulli(12), Rational::from((-691, 2730)));
    }

    #[test]
    fn digamma_matches_mpfr_on_reals() {
        let c = ctx();
        for x in ["0.3", "1", "2.5", "17.25", "-0.5"] {
            let z = c.parse_complex(x).unwrap();
            let ours = digamma(&z, &c).unwrap();
            let theirs = Float::with_val(c.bits(), c.parse_real(x).unwrap().digamma_ref());
            assert!(close(ours.real(), &theirs, 55), "x = {x}");
            assert!(ours.imag().is_zero());
        }
    }

    #[test]
    fn digamma_reflection_on_complex() {
        // psi(1 - z) - psi(z) = pi cot(pi z)
        let c = ctx();
        let z = c.from_f64(0.3, 0.7);
        let lhs = digamma(&(c.int(1) - z.clone()), &c).unwrap() - digamma(&z, &c).unwrap();
        let piz = z * c.pi();
        let rhs = piz.clone().cos() / piz.sin() * c.pi();
        assert!(abs(&(lhs - &rhs)) <= abs(&rhs) * Float::with_val(c.bits(), 10).pow(-55));
        assert!(matches!(digamma(&c.int(-2), &c), Err(Error::Domain(_))));
    }

    #[test]
    fn quadrature_polynomial_and_exp() {
        let c = ctx();
        let (a, b) = (Float::with_val(c.bits(), 0), Float::with_val(c.bits(), 2));
        let v = tanh_sinh(|t| Ok(Float::with_val(c.bits(), t.square_ref())), &a, &b, &c).unwrap();
        assert!(close(&v, &(Float::with_val(c.bits(), 8) / 3u32), 55));
        let v = tanh_sinh(|t| Ok(Float::with_val(c.bits(), t.exp_ref())), &a, &b, &c).unwrap();
        assert!(close(&v, &(Float::with_val(c.bits(), 2).exp() - 1u32), 55));
    }

    #[test]
    fn incomplete_integral_matches_mpfr() {
        let c = ctx();
        for (z, alpha) in [("0.0625", "4"), ("1", "0.5"), ("3", "-1.5")] {
            let z = c.parse_real(z).unwrap();
            let alpha = c.parse_real(alpha).unwrap();
            let ours = upper_incomplete_integral(&z, &alpha, &c).unwrap();
            let a = Float::with_val(c.bits(), 1 - alpha);
            let theirs = a.gamma_inc(&z);
            assert!(close(&ours, &theirs, 50), "ours {ours} theirs {theirs}");
        }
    }

    #[test]
    fn jacobi_cn_limits() {
        let c = ctx();
        let k = c.parse_real("0.9").unwrap();
        let jac = Jacobi::new(&k, &c).unwrap();
        let quarter = jac.quarter_period();
        // cn(0) = 1, cn(K) = 0, cn(2K) = -1
        assert!(close(&jac.cn(&Float::new(c.bits())), &Float::with_val(c.bits(), 1), 55));
        assert!(jac.cn(&quarter).abs() < 1e-55);
        assert!(close(&jac.cn(&(quarter.clone() * 2u32)), &Float::with_val(c.bits(), -1), 55));
        // K(0.9) = 2.28054913842277...
        let expected = c.parse_real("2.2805491384227703").unwrap();
        assert!(close(&quarter, &expected, 15));
        assert!(Jacobi::new(&Float::with_val(c.bits(), 1), &c).is_err());
    }

    #[test]
    fn laplace_cn_small_modulus_is_cosine_transform() {
        // k -> 0: cn(t) -> cos t, whose transform is x / (1 + x^2)
        let c = PrecisionContext::new(30).unwrap();
        let x = c.parse_real("0.8").unwrap();
        let k = c.parse_real("1e-20").unwrap();
        let v = laplace_cn(&x, &k, &c).unwrap();
        let expected = Float::with_val(c.bits(), &x / (Float::with_val(c.bits(), x.square_ref()) + 1u32));
        assert!(close(&v, &expected, 25));
    }

    #[test]
    fn arctan_of_one_is_quarter_pi() {
        let c = ctx();
        let v = arctan(&c.int(1), &c).unwrap();
        let quarter = c.pi() / 4u32;
        assert!(close(v.real(), &quarter, 58));
        let v = arctan(&c.from_f64(0.5, 0.25), &c).unwrap();
        let reference = Complex::with_val(c.bits(), (0.5, 0.25)).atan();
        assert!(abs(&(v - &reference)) <= abs(&reference) * Float::with_val(c.bits(), 10).pow(-55));
        assert!(arctan(&c.from_f64(0.0, 1.0), &c).is_err());
    }
}
