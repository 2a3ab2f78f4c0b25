//! Arbitrary-precision context, complex helpers, polynomials in the index
//! variable, and the digit-accuracy metric.
//!
//! All numbers are [`rug`] values created at the precision carried by an
//! explicit [`PrecisionContext`]. Nothing in this crate reads global
//! precision state.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Integer};
use serde_json::Value;

use crate::error::{Error, Result};

/// Working precision in decimal digits and the tolerances derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionContext {
    digits: u32,
    bits: u32,
    eps_rel: Float,
}

impl PrecisionContext {
    pub const DEFAULT_DIGITS: u32 = 128;
    pub const MIN_DIGITS: u32 = 16;

    /// Binary precision is `ceil(digits * log2(10)) + 8` guard bits.
    pub fn new(digits: u32) -> Result<Self> {
        if digits < Self::MIN_DIGITS {
            return Err(Error::Domain(format!(
                "precision of {digits} digits is below the minimum of {}",
                Self::MIN_DIGITS
            )));
        }
        let bits = (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as u32 + 8;
        // 10^(-digits/2), evaluated in the working precision.
        let exponent = Float::with_val(bits, -f64::from(digits)) / 2u32;
        let eps_rel = Float::with_val(bits, 10u32).pow(&exponent);
        Ok(PrecisionContext { digits, bits, eps_rel })
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Relative tolerance for equality and tie tests, `10^(-digits/2)`.
    pub fn eps_rel(&self) -> &Float {
        &self.eps_rel
    }

    /// Largest value [`acc`] reports.
    pub fn acc_cap(&self) -> f64 {
        f64::from(self.digits)
    }

    /// A context with `factor` times as many digits (rounded up).
    pub fn scaled(&self, factor: f64) -> Self {
        let digits = (f64::from(self.digits) * factor).ceil() as u32;
        PrecisionContext::new(digits.max(Self::MIN_DIGITS)).expect("scaled precision is valid")
    }

    pub fn zero(&self) -> Complex {
        Complex::new(self.bits)
    }

    pub fn real_zero(&self) -> Float {
        Float::new(self.bits)
    }

    pub fn int(&self, value: i64) -> Complex {
        Complex::with_val(self.bits, value)
    }

    pub fn real_int(&self, value: i64) -> Float {
        Float::with_val(self.bits, value)
    }

    pub fn from_f64(&self, re: f64, im: f64) -> Complex {
        Complex::with_val(self.bits, (re, im))
    }

    pub fn from_parts(&self, re: &Float, im: &Float) -> Complex {
        Complex::with_val(self.bits, (re, im))
    }

    /// `num / den` rounded once at working precision.
    pub fn ratio(&self, num: i64, den: i64) -> Complex {
        let mut out = self.int(num);
        out /= den;
        out
    }

    pub fn from_real(&self, re: &Float) -> Complex {
        Complex::with_val(self.bits, (re, 0))
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.bits, Constant::Pi)
    }

    /// Re-rounds `value` to this context's precision.
    pub fn convert(&self, value: &Complex) -> Complex {
        Complex::with_val(self.bits, value)
    }

    /// Parses a real literal: decimal (with optional exponent) or `p/q`.
    pub fn parse_real(&self, text: &str) -> Result<Float> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let num = self.parse_decimal(num)?;
            let den = self.parse_decimal(den)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{text}`")));
            }
            return Ok(num / den);
        }
        self.parse_decimal(text)
    }

    fn parse_decimal(&self, text: &str) -> Result<Float> {
        let parsed = Float::parse(text.trim()).map_err(|e| Error::Parse(format!("invalid number `{text}`: {e}")))?;
        Ok(Float::with_val(self.bits, parsed))
    }

    /// Parses a complex literal of the form `a`, `bi`, `a+bi` or `a-bi`,
    /// without spaces. Each part may be a decimal or a rational `p/q`.
    pub fn parse_complex(&self, text: &str) -> Result<Complex> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Parse("empty complex literal".into()));
        }
        let Some(body) = text.strip_suffix('i') else {
            return Ok(self.from_real(&self.parse_real(text)?));
        };
        // Split at the last sign that is neither leading nor part of an exponent.
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re_text, im_text) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im_text {
            "" | "+" => self.real_int(1),
            "-" => self.real_int(-1),
            t => self.parse_real(t.strip_prefix('+').unwrap_or(t))?,
        };
        let re = self.parse_real(re_text)?;
        Ok(self.from_parts(&re, &im))
    }

    /// Decodes a complex number from JSON: `[re, im]`, a single number, or a
    /// string literal. Components may be numbers or strings.
    pub fn complex_from_json(&self, value: &Value) -> Result<Complex> {
        match value {
            Value::Array(parts) if parts.len() == 2 => {
                let re = self.real_from_json(&parts[0])?;
                let im = self.real_from_json(&parts[1])?;
                Ok(self.from_parts(&re, &im))
            }
            Value::String(s) => self.parse_complex(s),
            Value::Number(_) => Ok(self.from_real(&self.real_from_json(value)?)),
            other => Err(Error::Parse(format!("expected [re, im], got {other}"))),
        }
    }

    fn real_from_json(&self, value: &Value) -> Result<Float> {
        match value {
            Value::String(s) => self.parse_real(s),
            Value::Number(n) => self.parse_real(&n.to_string()),
            other => Err(Error::Parse(format!("expected a real number, got {other}"))),
        }
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext::new(Self::DEFAULT_DIGITS).expect("default precision is valid")
    }
}

/// `[re, im]` as decimal strings with enough digits to round-trip.
pub fn complex_to_json(value: &Complex) -> Value {
    Value::Array(vec![
        Value::String(value.real().to_string_radix(10, None)),
        Value::String(value.imag().to_string_radix(10, None)),
    ])
}

pub fn abs(value: &Complex) -> Float {
    Float::with_val(value.prec().0, value.abs_ref())
}

pub fn is_zero(value: &Complex) -> bool {
    value.real().is_zero() && value.imag().is_zero()
}

/// `|a - b| <= eps_rel * max(|a|, |b|)`.
pub fn rel_eq(a: &Complex, b: &Complex, ctx: &PrecisionContext) -> bool {
    let diff = abs(&(a.clone() - b));
    let scale = abs(a).max(&abs(b));
    diff <= scale * ctx.eps_rel()
}

/// True when `w` is numerically a real number in `(-inf, 0]`.
pub fn is_nonpositive_real(w: &Complex, ctx: &PrecisionContext) -> bool {
    let tol = abs(w) * ctx.eps_rel();
    Float::with_val(ctx.bits(), w.imag().abs_ref()) <= tol && *w.real() <= tol
}

/// Principal square root: non-negative real part, and non-negative
/// imaginary part when the real part is zero.
pub fn principal_sqrt(value: &Complex) -> Complex {
    let mut root = value.clone().sqrt();
    if root.real().is_zero() && root.imag().is_sign_negative() {
        root = -root;
    }
    root
}

/// Number of exact significant decimal digits of `x` as an approximation of
/// `v`: `-log10|1 - x/v|`, capped at the context's precision.
pub fn acc(x: &Complex, v: &Complex, ctx: &PrecisionContext) -> Result<f64> {
    if is_zero(v) {
        return Err(Error::Domain("accuracy against a zero reference".into()));
    }
    let rel = ctx.int(1) - x.clone() / v;
    let err = abs(&rel);
    if err.is_zero() {
        return Ok(ctx.acc_cap());
    }
    let digits = -err.log10();
    Ok(digits.to_f64().min(ctx.acc_cap()))
}

/// Polynomial in the index variable `n` with complex coefficients in
/// ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex>,
}

impl Poly {
    /// Trailing zero coefficients are dropped, keeping at least one.
    pub fn new(mut coeffs: Vec<Complex>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64], ctx: &PrecisionContext) -> Self {
        Poly::new(coeffs.iter().map(|&c| ctx.int(c)).collect())
    }

    pub fn constant(value: Complex) -> Self {
        Poly::new(vec![value])
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    /// Degree from the trailing nonzero coefficient; `None` for the zero
    /// polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !is_zero(c))
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    /// Coefficient of `n^k` (zero beyond the stored length).
    pub fn coeff(&self, k: usize, ctx: &PrecisionContext) -> Complex {
        self.coeffs.get(k).map_or_else(|| ctx.zero(), |c| ctx.convert(c))
    }

    pub fn eval(&self, n: &Complex, ctx: &PrecisionContext) -> Complex {
        let mut acc = ctx.zero();
        for c in self.coeffs.iter().rev() {
            acc *= n;
            acc += c;
        }
        acc
    }

    /// Horner evaluation at a non-negative integer.
    pub fn eval_at(&self, n: u64, ctx: &PrecisionContext) -> Complex {
        let mut acc = ctx.zero();
        for c in self.coeffs.iter().rev() {
            acc *= n;
            acc += c;
        }
        acc
    }

    /// `Q(n) = P(n + 1)`.
    pub fn shift(&self, ctx: &PrecisionContext) -> Poly {
        self.compose_affine(1, 1, ctx)
    }

    /// `Q(n) = P(scale * n + offset)`, by binomial re-expansion with integer
    /// weights.
    pub fn compose_affine(&self, scale: i64, offset: i64, ctx: &PrecisionContext) -> Poly {
        let len = self.coeffs.len().max(1);
        let mut out = vec![ctx.zero(); len];
        for (k, c) in self.coeffs.iter().enumerate() {
            for (i, slot) in out.iter_mut().enumerate().take(k + 1) {
                let weight = Integer::from(Integer::binomial_u(k as u32, i as u32))
                    * Integer::from(scale).pow(i as u32)
                    * Integer::from(offset).pow((k - i) as u32);
                *slot += c.clone() * &weight;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, factor: &Complex) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c.clone() * factor).collect())
    }

    /// Positive integers `n` at which the polynomial vanishes, for degree at
    /// most two. Roots are tested at relative tolerance `eps_rel`.
    pub fn positive_integer_roots(&self, ctx: &PrecisionContext) -> Vec<u64> {
        let roots = match self.degree() {
            None | Some(0) => return Vec::new(),
            Some(1) => vec![-self.coeff(0, ctx) / self.coeff(1, ctx)],
            Some(2) => {
                let (a, b, c) = (self.coeff(2, ctx), self.coeff(1, ctx), self.coeff(0, ctx));
                let disc = b.clone() * &b - a.clone() * &c * 4u32;
                let d = principal_sqrt(&disc);
                let two_a = a * 2u32;
                vec![(-b.clone() + &d) / &two_a, (-b - d) / two_a]
            }
            Some(_) => return Vec::new(),
        };
        let mut found: Vec<u64> = roots
            .iter()
            .filter_map(|r| {
                let nearest = r.real().clone().round();
                if nearest < 1 {
                    return None;
                }
                let candidate = ctx.from_real(&nearest);
                let value = self.eval(&candidate, ctx);
                let scale = self.coeffs.iter().map(abs).fold(ctx.real_int(1), |m, x| m.max(&x))
                    * abs(&candidate).pow(self.degree().unwrap_or(0) as u32);
                (abs(&value) <= scale * ctx.eps_rel()).then(|| nearest.to_f64() as u64)
            })
            .collect();
        found.sort_unstable();
        found.dedup();
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(40).unwrap()
    }

    #[test]
    fn precision_floor() {
        assert!(matches!(PrecisionContext::new(15), Err(Error::Domain(_))));
        let c = PrecisionContext::new(16).unwrap();
        assert_eq!(c.acc_cap(), 16.0);
    }

    #[test]
    fn binary_precision_has_guard_bits() {
        let c = PrecisionContext::new(128).unwrap();
        assert_eq!(c.bits(), 426 + 8);
        let eps = c.eps_rel().to_f64();
        assert!((eps / 1e-64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_of_zero_is_zero() {
        let c = ctx();
        let p = Poly::new(vec![c.zero()]);
        let q = p.shift(&c);
        assert!(q.is_zero());
        assert_eq!(q.coeffs().len(), 1);
    }

    #[test]
    fn shift_of_square() {
        let c = ctx();
        let q = Poly::from_ints(&[0, 0, 1], &c).shift(&c);
        assert_eq!(q, Poly::from_ints(&[1, 2, 1], &c));
    }

    #[test]
    fn shift_of_odd_square_minus_quarter() {
        // (2n+1)^2 - 1/4 = 3/4 + 4n + 4n^2; shifted: (2n+3)^2 - 1/4 = 35/4 + 12n + 4n^2
        let c = ctx();
        let p = Poly::new(vec![c.ratio(3, 4), c.int(4), c.int(4)]);
        let q = p.shift(&c);
        assert_eq!(q, Poly::new(vec![c.ratio(35, 4), c.int(12), c.int(4)]));
    }

    #[test]
    fn compose_affine_odd_even_indices() {
        let c = ctx();
        let p = Poly::from_ints(&[0, 1], &c);
        assert_eq!(p.compose_affine(2, -1, &c), Poly::from_ints(&[-1, 2], &c));
        assert_eq!(p.compose_affine(2, 0, &c), Poly::from_ints(&[0, 2], &c));
    }

    #[test]
    fn acc_edge_cases() {
        let c = ctx();
        let v = c.parse_complex("1.327052799890558739735").unwrap();
        assert_eq!(acc(&v, &v, &c).unwrap(), c.acc_cap());
        assert_eq!(acc(&c.zero(), &v, &c).unwrap(), 0.0);
        assert!(matches!(acc(&v, &c.zero(), &c), Err(Error::Domain(_))));
    }

    #[test]
    fn acc_of_slow_approximant() {
        let c = ctx();
        let v = c.parse_complex("1.327052799890558739735").unwrap();
        let x = c.parse_complex("1.319558").unwrap();
        let d = acc(&x, &v, &c).unwrap();
        assert!((d - 2.25).abs() < 0.01, "{d}");
    }

    #[test]
    fn complex_literals() {
        let c = ctx();
        let x = c.parse_complex("-1.5+0.01i").unwrap();
        assert_eq!(x, c.from_parts(&c.parse_real("-1.5").unwrap(), &c.parse_real("0.01").unwrap()));
        assert_eq!(c.parse_complex("1/16").unwrap(), c.ratio(1, 16));
        assert_eq!(c.parse_complex("-i").unwrap(), c.from_f64(0.0, -1.0));
        assert_eq!(c.parse_complex("2i").unwrap(), c.from_f64(0.0, 2.0));
        assert_eq!(
            c.parse_complex("1e-3-2e-2i").unwrap(),
            c.from_parts(&c.parse_real("1e-3").unwrap(), &c.parse_real("-2e-2").unwrap(),)
        );
        assert_eq!(c.parse_complex("1/2-3/4i").unwrap(), c.from_f64(0.5, -0.75));
        assert!(c.parse_complex("1+").is_err());
        assert!(c.parse_complex("1/0").is_err());
        assert!(c.parse_complex("").is_err());
    }

    #[test]
    fn json_complex_round_trip() {
        let c = PrecisionContext::new(128).unwrap();
        let x = c.ratio(1, 3) + c.from_f64(0.0, 1.0) * c.pi();
        let back = c.complex_from_json(&complex_to_json(&x)).unwrap();
        assert_eq!(x, back);
        let plain: Value = serde_json::json!([0.5, -2]);
        assert_eq!(c.complex_from_json(&plain).unwrap(), c.from_f64(0.5, -2.0));
    }

    #[test]
    fn sqrt_branch() {
        let c = ctx();
        let r = principal_sqrt(&c.from_f64(-4.0, 0.0));
        assert_eq!(r, c.from_f64(0.0, 2.0));
        let r = principal_sqrt(&(-c.from_f64(4.0, 0.0)));
        assert_eq!(r, c.from_f64(0.0, 2.0));
        let r = principal_sqrt(&c.from_f64(-3.0, -4.0));
        assert_eq!(r, c.from_f64(1.0, -2.0));
    }

    #[test]
    fn nonpositive_real_membership() {
        let c = ctx();
        assert!(is_nonpositive_real(&c.from_f64(-2.0, 0.0), &c));
        assert!(is_nonpositive_real(&c.zero(), &c));
        assert!(!is_nonpositive_real(&c.from_f64(-2.0, 1e-10), &c));
        assert!(!is_nonpositive_real(&c.from_f64(1.0, 0.0), &c));
    }

    #[test]
    fn integer_roots() {
        let c = ctx();
        // (n - 3)(n + 2)
        let p = Poly::from_ints(&[-6, -1, 1], &c);
        assert_eq!(p.positive_integer_roots(&c), vec![3]);
        let p = Poly::from_ints(&[3, 1], &c);
        assert!(p.positive_integer_roots(&c).is_empty());
        let p = Poly::new(vec![c.ratio(-1, 2), c.int(1)]);
        assert!(p.positive_integer_roots(&c).is_empty());
    }
}
