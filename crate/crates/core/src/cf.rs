//! Two-variant continued fractions
//!
//! ```text
//! b0' + a_1/b_1 + a'_1/b'_1 + a_2/b_2 + a'_2/b'_2 + ...
//! ```
//!
//! with polynomial partial numerators and denominators, and evaluation of
//! their modified approximants by backward folding.

use rug::Complex;
use serde_json::{json, Map, Value};

use crate::error::{Error, Position, Result};
use crate::mp::{complex_to_json, is_zero, Poly, PrecisionContext};

pub const SCHEMA: &str = "tvcf/1";

/// A leading quotient `numerator / (denominator + ...)` applied outside the
/// polynomial core, for expansions written as `c/x + K(...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixQuotient {
    pub numerator: Complex,
    pub denominator: Complex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoVariantCF {
    pub label: String,
    pub b0_prime: Complex,
    pub a: Poly,
    pub b: Poly,
    pub a_prime: Poly,
    pub b_prime: Poly,
    /// Outermost quotients, first entry outermost. Classification and tail
    /// approximation see only the core; approximants include the prefix.
    pub prefix: Vec<PrefixQuotient>,
}

/// Degrees `(k, l)` with `deg a = deg a' = k` and `deg b = deg b' = l`.
pub fn class_degrees(cf: &TwoVariantCF) -> Result<(usize, usize)> {
    let k = cf.a.degree();
    let kp = cf.a_prime.degree();
    // A vanishing denominator polynomial counts as degree 0.
    let l = cf.b.degree().unwrap_or(0);
    let lp = cf.b_prime.degree().unwrap_or(0);
    let as_i64 = |d: Option<usize>| d.map_or(-1, |d| d as i64);
    match (k, kp) {
        (Some(k), Some(kp)) if k == kp && l == lp && (1..=2).contains(&k) && l <= 1 => Ok((k, l)),
        _ => {
            Err(Error::DegreeOutOfRange { k: if k == kp { as_i64(k) } else { as_i64(k.max(kp)) }, l: l.max(lp) as i64 })
        }
    }
}

impl TwoVariantCF {
    /// Builds a continued fraction and checks the degree bounds and that no
    /// partial numerator vanishes at a positive index.
    pub fn new(
        label: impl Into<String>,
        b0_prime: Complex,
        a: Poly,
        b: Poly,
        a_prime: Poly,
        b_prime: Poly,
        ctx: &PrecisionContext,
    ) -> Result<Self> {
        let cf = TwoVariantCF { label: label.into(), b0_prime, a, b, a_prime, b_prime, prefix: Vec::new() };
        cf.validate(ctx)?;
        Ok(cf)
    }

    pub fn with_prefix(mut self, numerator: Complex, denominator: Complex) -> Self {
        self.prefix.push(PrefixQuotient { numerator, denominator });
        self
    }

    pub fn validate(&self, ctx: &PrecisionContext) -> Result<()> {
        class_degrees(self)?;
        for (name, poly) in [("a", &self.a), ("a'", &self.a_prime)] {
            if let Some(n) = poly.positive_integer_roots(ctx).first() {
                return Err(Error::Domain(format!("partial numerator {name}(n) vanishes at n = {n}")));
            }
        }
        for q in &self.prefix {
            if is_zero(&q.numerator) {
                return Err(Error::Domain("prefix numerator is zero".into()));
            }
        }
        Ok(())
    }

    pub fn degrees(&self) -> Result<(usize, usize)> {
        class_degrees(self)
    }

    pub fn a_at(&self, n: u64, ctx: &PrecisionContext) -> Complex {
        self.a.eval_at(n, ctx)
    }

    pub fn b_at(&self, n: u64, ctx: &PrecisionContext) -> Complex {
        self.b.eval_at(n, ctx)
    }

    pub fn a_prime_at(&self, n: u64, ctx: &PrecisionContext) -> Complex {
        self.a_prime.eval_at(n, ctx)
    }

    pub fn b_prime_at(&self, n: u64, ctx: &PrecisionContext) -> Complex {
        self.b_prime.eval_at(n, ctx)
    }

    /// Partial quotient number `index >= 1` of the interleaved sequence:
    /// odd `2m - 1` is `a_m / b_m`, even `2m` is `a'_m / b'_m`.
    pub fn quotient(&self, index: u64, ctx: &PrecisionContext) -> (Complex, Complex) {
        let m = index.div_ceil(2);
        if index % 2 == 1 {
            (self.a_at(m, ctx), self.b_at(m, ctx))
        } else {
            (self.a_prime_at(m, ctx), self.b_prime_at(m, ctx))
        }
    }

    /// Folds the prefix quotients around a core value.
    pub fn apply_prefix(&self, core: Complex) -> Result<Complex> {
        let mut value = core;
        for (depth, q) in self.prefix.iter().enumerate().rev() {
            let den = q.denominator.clone() + &value;
            if is_zero(&den) {
                return Err(Error::ZeroDenominator(Position::new("prefix", depth as u64)));
            }
            value = q.numerator.clone() / den;
        }
        Ok(value)
    }

    pub fn to_json(&self) -> Value {
        let poly = |p: &Poly| Value::Array(p.coeffs().iter().map(complex_to_json).collect());
        let mut obj = Map::new();
        obj.insert("schema".into(), json!(SCHEMA));
        obj.insert("label".into(), json!(self.label));
        obj.insert("b0_prime".into(), complex_to_json(&self.b0_prime));
        obj.insert("a".into(), poly(&self.a));
        obj.insert("b".into(), poly(&self.b));
        obj.insert("a_prime".into(), poly(&self.a_prime));
        obj.insert("b_prime".into(), poly(&self.b_prime));
        if !self.prefix.is_empty() {
            let prefix = self
                .prefix
                .iter()
                .map(|q| json!([complex_to_json(&q.numerator), complex_to_json(&q.denominator)]))
                .collect();
            obj.insert("prefix".into(), Value::Array(prefix));
        }
        Value::Object(obj)
    }

    pub fn from_json(value: &Value, ctx: &PrecisionContext) -> Result<Self> {
        let field = |name: &str| value.get(name).ok_or_else(|| Error::Parse(format!("missing field `{name}`")));
        if let Some(schema) = value.get("schema") {
            if schema != SCHEMA {
                return Err(Error::Parse(format!("unsupported schema {schema}")));
            }
        }
        let poly = |name: &str| -> Result<Poly> {
            let items = field(name)?.as_array().ok_or_else(|| Error::Parse(format!("`{name}` must be an array")))?;
            let coeffs = items.iter().map(|c| ctx.complex_from_json(c)).collect::<Result<Vec<_>>>()?;
            Ok(Poly::new(coeffs))
        };
        let label = value.get("label").and_then(Value::as_str).unwrap_or_default().to_string();
        let mut cf = TwoVariantCF {
            label,
            b0_prime: ctx.complex_from_json(field("b0_prime")?)?,
            a: poly("a")?,
            b: poly("b")?,
            a_prime: poly("a_prime")?,
            b_prime: poly("b_prime")?,
            prefix: Vec::new(),
        };
        if let Some(prefix) = value.get("prefix") {
            let items = prefix.as_array().ok_or_else(|| Error::Parse("`prefix` must be an array".into()))?;
            for item in items {
                match item.as_array().map(Vec::as_slice) {
                    Some([num, den]) => cf.prefix.push(PrefixQuotient {
                        numerator: ctx.complex_from_json(num)?,
                        denominator: ctx.complex_from_json(den)?,
                    }),
                    _ => return Err(Error::Parse("prefix entries are [numerator, denominator]".into())),
                }
            }
        }
        cf.validate(ctx)?;
        Ok(cf)
    }
}

/// Core approximant without the prefix: `b0' + q_1/(... + q_n/(... + omega))`.
fn core_approximant(cf: &TwoVariantCF, n: u64, omega: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let mut value = ctx.convert(omega);
    for index in (1..=n).rev() {
        let (num, den) = cf.quotient(index, ctx);
        let den = den + &value;
        if is_zero(&den) {
            return Err(Error::ZeroDenominator(Position::new("approximant fold", index)));
        }
        value = num / den;
    }
    Ok(value + &cf.b0_prime)
}

/// `S_n(omega)`: the first `n` partial quotients of the core with `omega`
/// substituted for the rest, wrapped in the prefix quotients.
pub fn modified_approximant(cf: &TwoVariantCF, n: u64, omega: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    cf.apply_prefix(core_approximant(cf, n, omega, ctx)?)
}

/// `S_n(0)`.
pub fn classical_approximant(cf: &TwoVariantCF, n: u64, ctx: &PrecisionContext) -> Result<Complex> {
    modified_approximant(cf, n, &ctx.zero(), ctx)
}

/// `a'_n / (b'_n + a_{n+1} / (b_{n+1} + u_next))`, the odd-tail recurrence
/// applied to an approximation of `u_{n+1}`.
pub fn u_plus(cf: &TwoVariantCF, n: u64, u_next: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let inner = cf.b_at(n + 1, ctx) + u_next;
    if is_zero(&inner) {
        return Err(Error::ZeroDenominator(Position::new("u_plus inner", n)));
    }
    let outer = cf.b_prime_at(n, ctx) + cf.a_at(n + 1, ctx) / inner;
    if is_zero(&outer) {
        return Err(Error::ZeroDenominator(Position::new("u_plus outer", n)));
    }
    Ok(cf.a_prime_at(n, ctx) / outer)
}

/// Left-hand side of the odd-tail equation
/// `(b'_n b_{n+1} + a_{n+1}) X_n + b'_n X_n X_{n+1} - a'_n X_{n+1} - a'_n b_{n+1}`.
pub fn odd_tail_residual(
    cf: &TwoVariantCF,
    n: u64,
    x_n: &Complex,
    x_next: &Complex,
    ctx: &PrecisionContext,
) -> Complex {
    let (terms, _) = odd_tail_terms(cf, n, x_n, x_next, ctx);
    terms
}

/// The residual together with the largest modulus among its four terms.
pub(crate) fn odd_tail_terms(
    cf: &TwoVariantCF,
    n: u64,
    x_n: &Complex,
    x_next: &Complex,
    ctx: &PrecisionContext,
) -> (Complex, rug::Float) {
    let a1 = cf.a_at(n + 1, ctx);
    let b1 = cf.b_at(n + 1, ctx);
    let ap = cf.a_prime_at(n, ctx);
    let bp = cf.b_prime_at(n, ctx);
    let t1 = (bp.clone() * &b1 + &a1) * x_n;
    let t2 = bp * x_n * x_next;
    let t3 = ap.clone() * x_next;
    let t4 = ap * b1;
    let scale = [&t1, &t2, &t3, &t4].iter().map(|t| crate::mp::abs(t)).fold(ctx.real_zero(), |m, x| m.max(&x));
    (t1 + t2 - t3 - t4, scale)
}

/// Regroups a one-variant fraction `b0 + K(c_m / d_m)` into two-variant
/// form: `a(n) = c(2n-1)`, `b(n) = d(2n-1)`, `a'(n) = c(2n)`, `b'(n) = d(2n)`.
pub fn regroup_one_variant(
    label: impl Into<String>,
    b0: Complex,
    c: &Poly,
    d: &Poly,
    ctx: &PrecisionContext,
) -> Result<TwoVariantCF> {
    TwoVariantCF::new(
        label,
        b0,
        c.compose_affine(2, -1, ctx),
        d.compose_affine(2, -1, ctx),
        c.compose_affine(2, 0, ctx),
        d.compose_affine(2, 0, ctx),
        ctx,
    )
}
