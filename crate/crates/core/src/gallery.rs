//! Named continued fractions with parameters and independent reference values.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Complex, Float};
use serde_json::{json, Value};

use crate::cf::{regroup_one_variant, TwoVariantCF};
use crate::error::{Error, Result};
use crate::mp::{abs, complex_to_json, is_nonpositive_real, is_zero, Poly, PrecisionContext};
use crate::special;

/// Parameter values by name, defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: BTreeMap<String, Complex>,
}

impl Params {
    /// Parses `name=value` assignments for `entry`, rejecting unknown names.
    pub fn parse<S: AsRef<str>>(entry: &GalleryEntry, assignments: &[S], ctx: &PrecisionContext) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (name, default) in entry.params {
            values.insert((*name).to_string(), ctx.parse_complex(default)?);
        }
        for item in assignments {
            let item = item.as_ref();
            let (name, text) =
                item.split_once('=').ok_or_else(|| Error::Parse(format!("expected name=value, got `{item}`")))?;
            let name = name.trim();
            if !values.contains_key(name) {
                return Err(Error::Parse(format!("`{}` has no parameter `{name}`", entry.id)));
            }
            values.insert(name.to_string(), ctx.parse_complex(text.trim())?);
        }
        Ok(Params { values })
    }

    pub fn defaults(entry: &GalleryEntry, ctx: &PrecisionContext) -> Result<Self> {
        Self::parse::<&str>(entry, &[], ctx)
    }

    pub fn get(&self, name: &str, ctx: &PrecisionContext) -> Complex {
        ctx.convert(&self.values[name])
    }

    /// The parameter as a real, or a domain error if it has an imaginary part.
    pub fn real(&self, name: &str, ctx: &PrecisionContext) -> Result<Float> {
        let v = self.get(name, ctx);
        if !v.imag().is_zero() {
            return Err(Error::Domain(format!("parameter `{name}` must be real")));
        }
        Ok(v.real().clone())
    }

    fn key(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={}", complex_to_json(v))).collect::<Vec<_>>().join(";")
    }

    pub fn to_json(&self) -> Value {
        let map: serde_json::Map<String, Value> =
            self.values.iter().map(|(k, v)| (k.clone(), complex_to_json(v))).collect();
        Value::Object(map)
    }
}

type Builder = fn(&Params, &PrecisionContext) -> Result<TwoVariantCF>;
type Oracle = fn(&Params, &PrecisionContext) -> Result<Complex>;

pub struct GalleryEntry {
    pub id: &'static str,
    pub summary: &'static str,
    /// `(name, default)` pairs.
    pub params: &'static [(&'static str, &'static str)],
    builder: Builder,
    oracle: Oracle,
}

impl GalleryEntry {
    pub fn build(&self, params: &Params, ctx: &PrecisionContext) -> Result<TwoVariantCF> {
        (self.builder)(params, ctx)
    }

    /// Reference value, memoized per `(id, params, digits)`.
    pub fn oracle(&self, params: &Params, ctx: &PrecisionContext) -> Result<Complex> {
        let key = (self.id.to_string(), params.key(), ctx.digits());
        let cache = ORACLE_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = cache.lock().expect("oracle cache poisoned").get(&key) {
            return Ok(v.clone());
        }
        let value = (self.oracle)(params, ctx)?;
        cache.lock().expect("oracle cache poisoned").insert(key, value.clone());
        Ok(value)
    }

    pub fn to_json(&self) -> Value {
        let params: serde_json::Map<String, Value> =
            self.params.iter().map(|(k, v)| ((*k).to_string(), json!(v))).collect();
        json!({ "id": self.id, "summary": self.summary, "params": params })
    }
}

type OracleKey = (String, String, u32);

static ORACLE_CACHE: OnceLock<Mutex<HashMap<OracleKey, Complex>>> = OnceLock::new();

pub static ENTRIES: [GalleryEntry; 5] = [
    GalleryEntry {
        id: "perron_digamma",
        summary: "x + K((2n-1)^2 - nu^2 / x ; (2n)^2 / x), a digamma quotient, Re x > 0",
        params: &[("x", "1"), ("nu", "1/2")],
        builder: build_digamma,
        oracle: oracle_digamma,
    },
    GalleryEntry {
        id: "perron_incgamma",
        summary: "z + K(n + alpha - 1 / 1 ; n / z), inverse scaled incomplete gamma, z > 0",
        params: &[("z", "1/16"), ("alpha", "4")],
        builder: build_incgamma,
        oracle: oracle_incgamma,
    },
    GalleryEntry {
        id: "perron_log",
        summary: "1 + K(n^2 x / 2n ; n^2 x / 2n + 1) = x / log(1 + x)",
        params: &[("x", "1")],
        builder: build_log,
        oracle: oracle_log,
    },
    GalleryEntry {
        id: "perron_cn",
        summary: "1/(x + K((2n-1)^2 / x ; (2n)^2 k^2 / x)), Laplace transform of cn(t; k)",
        params: &[("x", "4/5"), ("k", "9/10")],
        builder: build_cn,
        oracle: oracle_cn,
    },
    GalleryEntry {
        id: "arctan_cf",
        summary: "x / (1 + K((2m-1)^2 x^2 / 2m+1 - (2m-1) x^2)) = arctan x, |x| <= 1",
        params: &[("x", "1")],
        builder: build_arctan,
        oracle: oracle_arctan,
    },
];

pub fn entries() -> &'static [GalleryEntry] {
    &ENTRIES
}

pub fn find(id: &str) -> Result<&'static GalleryEntry> {
    ENTRIES.iter().find(|e| e.id == id).ok_or_else(|| Error::Parse(format!("unknown gallery entry `{id}`")))
}

/// Builds `id` from `name=value` assignments.
pub fn build<S: AsRef<str>>(id: &str, assignments: &[S], ctx: &PrecisionContext) -> Result<(TwoVariantCF, Params)> {
    let entry = find(id)?;
    let params = Params::parse(entry, assignments, ctx)?;
    let cf = entry.build(&params, ctx)?;
    Ok((cf, params))
}

fn short(v: &Complex) -> String {
    let (re, im) = (v.real().to_f64(), v.imag().to_f64());
    match (re, im) {
        (re, 0.0) => format!("{re}"),
        (0.0, im) => format!("{im}i"),
        (re, im) if im < 0.0 => format!("{re}{im}i"),
        (re, im) => format!("{re}+{im}i"),
    }
}

fn label(id: &str, params: &Params) -> String {
    let list: Vec<String> = params.values.iter().map(|(k, v)| format!("{k}={}", short(v))).collect();
    format!("{id}({})", list.join(", "))
}

fn build_digamma(params: &Params, ctx: &PrecisionContext) -> Result<TwoVariantCF> {
    let x = params.get("x", ctx);
    let nu = params.get("nu", ctx);
    if *x.real() <= 0 {
        return Err(Error::Domain("perron_digamma needs Re x > 0".into()));
    }
    let a = Poly::new(vec![ctx.int(1) - nu.clone() * &nu, ctx.int(-4), ctx.int(4)]);
    TwoVariantCF::new(
        label("perron_digamma", params),
        x.clone(),
        a,
        Poly::constant(x.clone()),
        Poly::from_ints(&[0, 0, 4], ctx),
        Poly::constant(x),
        ctx,
    )
}

fn oracle_digamma(params: &Params, ctx: &PrecisionContext) -> Result<Complex> {
    build_digamma(params, ctx)?;
    let x = params.get("x", ctx);
    let nu = params.get("nu", ctx);
    let arg = |shift: u32, sign: i32| {
        let s = if sign > 0 { x.clone() + shift + &nu } else { x.clone() + shift - &nu };
        s / 4u32
    };
    let sum = special::digamma(&arg(3, 1), ctx)? + special::digamma(&arg(3, -1), ctx)?
        - special::digamma(&arg(1, 1), ctx)?
        - special::digamma(&arg(1, -1), ctx)?;
    if is_zero(&sum) {
        return Err(Error::Domain("digamma combination vanishes".into()));
    }
    Ok(ctx.int(4) / sum)
}

fn build_incgamma(params: &Params, ctx: &PrecisionContext) -> Result<TwoVariantCF> {
    let z = params.real("z", ctx)?;
    let alpha = params.real("alpha", ctx)?;
    if z <= 0 {
        return Err(Error::Domain("perron_incgamma needs z > 0".into()));
    }
    let z = ctx.from_real(&z);
    let alpha = ctx.from_real(&alpha);
    TwoVariantCF::new(
        label("perron_incgamma", params),
        z.clone(),
        Poly::new(vec![alpha - 1u32, ctx.int(1)]),
        Poly::from_ints(&[1], ctx),
        Poly::from_ints(&[0, 1], ctx),
        Poly::constant(z),
        ctx,
    )
}

fn oracle_incgamma(params: &Params, ctx: &PrecisionContext) -> Result<Complex> {
    build_incgamma(params, ctx)?;
    let z = params.real("z", ctx)?;
    let alpha = params.real("alpha", ctx)?;
    let bits = ctx.bits();
    let integral = special::upper_incomplete_integral(&z, &alpha, ctx)?;
    // 1 / (z^{alpha-1} e^z integral)
    let scale =
        Float::with_val(bits, (&z).pow(&Float::with_val(bits, &alpha - 1u32))) * Float::with_val(bits, z.exp_ref());
    Ok(ctx.from_real(&(Float::with_val(bits, scale * integral).recip())))
}

fn check_log_domain(x: &Complex, ctx: &PrecisionContext) -> Result<()> {
    if is_zero(x) {
        return Err(Error::Domain("perron_log degenerates at x = 0".into()));
    }
    let shifted = x.clone() + 1u32;
    if is_zero(&shifted) || is_nonpositive_real(&shifted, ctx) {
        return Err(Error::Domain("perron_log needs x outside (-inf, -1]".into()));
    }
    Ok(())
}

fn build_log(params: &Params, ctx: &PrecisionContext) -> Result<TwoVariantCF> {
    let x = params.get("x", ctx);
    check_log_domain(&x, ctx)?;
    let a = Poly::new(vec![ctx.zero(), ctx.zero(), x]);
    TwoVariantCF::new(
        label("perron_log", params),
        ctx.int(1),
        a.clone(),
        Poly::from_ints(&[0, 2], ctx),
        a,
        Poly::from_ints(&[1, 2], ctx),
        ctx,
    )
}

fn oracle_log(params: &Params, ctx: &PrecisionContext) -> Result<Complex> {
    let x = params.get("x", ctx);
    check_log_domain(&x, ctx)?;
    let work = ctx.scaled(1.1);
    let ln = Complex::with_val(work.bits(), &x + 1u32).ln();
    Ok(ctx.convert(&(Complex::with_val(work.bits(), &x) / ln)))
}

fn cn_params(params: &Params, ctx: &PrecisionContext) -> Result<(Float, Float)> {
    let x = params.real("x", ctx)?;
    let k = params.real("k", ctx)?;
    if x <= 0 {
        return Err(Error::Domain("perron_cn needs x > 0".into()));
    }
    if k <= 0 || k >= 1 {
        return Err(Error::Domain("perron_cn needs 0 < k < 1".into()));
    }
    Ok((x, k))
}

fn build_cn(params: &Params, ctx: &PrecisionContext) -> Result<TwoVariantCF> {
    let (x, k) = cn_params(params, ctx)?;
    let x = ctx.from_real(&x);
    let k2 = ctx.from_real(&Float::with_val(ctx.bits(), k.square_ref()));
    let cf = TwoVariantCF::new(
        label("perron_cn", params),
        ctx.zero(),
        Poly::from_ints(&[1, -4, 4], ctx),
        Poly::constant(x.clone()),
        Poly::from_ints(&[0, 0, 4], ctx).scale(&k2),
        Poly::constant(x.clone()),
        ctx,
    )?;
    Ok(cf.with_prefix(ctx.int(1), x))
}

fn oracle_cn(params: &Params, ctx: &PrecisionContext) -> Result<Complex> {
    let (x, k) = cn_params(params, ctx)?;
    Ok(ctx.from_real(&special::laplace_cn(&x, &k, ctx)?))
}

fn check_arctan_domain(x: &Complex, ctx: &PrecisionContext) -> Result<()> {
    if is_zero(x) {
        return Err(Error::Domain("arctan_cf degenerates at x = 0".into()));
    }
    if abs(x) > Float::with_val(ctx.bits(), 1) + ctx.eps_rel() {
        return Err(Error::Domain("arctan_cf needs |x| <= 1".into()));
    }
    if is_zero(&(x.clone().square() + 1u32)) {
        return Err(Error::Domain("arctan_cf is singular at x = +-i".into()));
    }
    Ok(())
}

fn build_arctan(params: &Params, ctx: &PrecisionContext) -> Result<TwoVariantCF> {
    let x = params.get("x", ctx);
    check_arctan_domain(&x, ctx)?;
    let x2 = x.clone().square();
    // c(m) = (2m-1)^2 x^2, d(m) = (2m+1) - (2m-1) x^2
    let c = Poly::from_ints(&[1, -4, 4], ctx).scale(&x2);
    let d = Poly::new(vec![x2.clone() + 1u32, ctx.int(2) - x2 * 2u32]);
    let cf = regroup_one_variant(label("arctan_cf", params), ctx.zero(), &c, &d, ctx)?;
    Ok(cf.with_prefix(x, ctx.int(1)))
}

fn oracle_arctan(params: &Params, ctx: &PrecisionContext) -> Result<Complex> {
    let x = params.get("x", ctx);
    check_arctan_domain(&x, ctx)?;
    special::arctan(&x, ctx)
}
