//! Brute-force tails and the checks built on them: residuals of the
//! coefficient equations, branch choice, empirical orders.

use std::collections::BTreeMap;

use rug::{Complex, Float};
use serde_json::{json, Value};

use crate::accel::{iterate, iterate_once, phi_psi_gap, TailRow};
use crate::cf::{modified_approximant, odd_tail_terms, u_plus, TwoVariantCF, SCHEMA};
use crate::classify::{ShiftedCoeffs, Subclass, SubclassTag};
use crate::error::{Error, Result};
use crate::mp::{abs, is_zero, PrecisionContext};
use crate::tail::{extended_coefficients, tail_model, TailModel};

/// Innermost value of the truncated backward fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSeed {
    Zero,
    /// `u_{N,0}` from the initial model.
    Initial,
    /// `u_{N,J}` after `iterations` acceleration steps on `u_{N..N+J,0}`.
    Accelerated {
        iterations: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailOracleConfig {
    /// Starting truncation depth `D`.
    pub depth: u64,
    /// Give up once `D` would exceed this.
    pub max_depth: u64,
    pub seed: TailSeed,
}

impl TailOracleConfig {
    pub fn for_context(ctx: &PrecisionContext) -> Self {
        let digits = u64::from(ctx.digits());
        TailOracleConfig {
            depth: 4 * digits,
            max_depth: 128 * digits,
            seed: TailSeed::Accelerated { iterations: (ctx.digits() / 4) as usize },
        }
    }
}

/// Tails `u_1, ..., u_{n_max}` with the certification that produced them.
#[derive(Debug, Clone)]
pub struct NumericTails {
    values: Vec<Complex>,
    /// Depth of the returned fold.
    pub depth: u64,
    /// Largest relative change between depth `D/2` and `D`.
    pub change: Float,
    pub seed: TailSeed,
}

impl NumericTails {
    /// `u_n` for `1 <= n <= n_max`.
    pub fn get(&self, n: u64) -> &Complex {
        &self.values[(n - 1) as usize]
    }

    pub fn n_max(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n_max": self.n_max(),
            "depth": self.depth,
            "relative_change": self.change.to_f64(),
            "seed": format!("{:?}", self.seed),
        })
    }
}

fn seed_value(
    cf: &TwoVariantCF,
    model: &TailModel,
    big_n: u64,
    seed: TailSeed,
    ctx: &PrecisionContext,
) -> (Complex, TailSeed) {
    if let TailSeed::Accelerated { iterations } = seed {
        // each step divides by phi - psi, which can be as small as 1/n
        let lost = iterations as u32 * ((big_n as f64).log10().ceil() as u32);
        if let Ok(hi) = PrecisionContext::new(ctx.digits() + lost + 8) {
            let row = TailRow::initial(model, big_n, iterations + 1, &hi);
            if let Ok(row) = iterate(cf, model, row, iterations, &hi) {
                return (Complex::with_val(ctx.bits(), &row.values[0]), seed);
            }
        }
    }
    match seed {
        TailSeed::Zero => (ctx.zero(), TailSeed::Zero),
        _ => (model.eval_initial(big_n, ctx), TailSeed::Initial),
    }
}

fn fold_from(cf: &TwoVariantCF, n_max: u64, big_n: u64, seed: Complex, ctx: &PrecisionContext) -> Result<Vec<Complex>> {
    let mut u = seed;
    let mut values = vec![ctx.zero(); n_max as usize];
    for k in (1..big_n).rev() {
        u = u_plus(cf, k, &u, ctx)?;
        if k <= n_max {
            values[(k - 1) as usize] = u.clone();
        }
    }
    Ok(values)
}

fn fold_tails(
    cf: &TwoVariantCF,
    model: &TailModel,
    n_max: u64,
    depth: u64,
    seed: TailSeed,
    ctx: &PrecisionContext,
) -> Result<(Vec<Complex>, TailSeed)> {
    let big_n = n_max + depth;
    let (u, used) = seed_value(cf, model, big_n, seed, ctx);
    match fold_from(cf, n_max, big_n, u, ctx) {
        Err(Error::ZeroDenominator(_)) if used != TailSeed::Zero => {
            Ok((fold_from(cf, n_max, big_n, ctx.zero(), ctx)?, TailSeed::Zero))
        }
        other => Ok((other?, used)),
    }
}

fn relative_change(a: &[Complex], b: &[Complex], ctx: &PrecisionContext) -> Float {
    let mut worst = ctx.real_zero();
    for (x, y) in a.iter().zip(b) {
        let diff = abs(&(x.clone() - y));
        let scale = abs(y);
        let rel = if is_zero(y) { diff } else { diff / scale };
        worst = worst.max(&rel);
    }
    worst
}

/// Odd tails by truncated backward evaluation, doubling the depth until two
/// consecutive depths agree to `10 eps_rel`.
pub fn numeric_tails(
    cf: &TwoVariantCF,
    model: &TailModel,
    n_max: u64,
    config: &TailOracleConfig,
    ctx: &PrecisionContext,
) -> Result<NumericTails> {
    if n_max == 0 {
        return Err(Error::DegenerateInput("need n_max >= 1".into()));
    }
    let limit = Float::with_val(ctx.bits(), ctx.eps_rel() * 10u32);
    let mut depth = config.depth.max(1);
    let (mut previous, _) = fold_tails(cf, model, n_max, depth, config.seed, ctx)?;
    loop {
        let next_depth = depth * 2;
        if next_depth > config.max_depth.max(2) {
            return Err(Error::NoConvergence(format!("tail fold still changes after depth {depth} (n_max = {n_max})")));
        }
        let (current, used) = fold_tails(cf, model, n_max, next_depth, config.seed, ctx)?;
        let change = relative_change(&previous, &current, ctx);
        if change <= limit {
            return Ok(NumericTails { values: current, depth: next_depth, change, seed: used });
        }
        previous = current;
        depth = next_depth;
    }
}

/// Single tail `u_n`.
pub fn numeric_tail(
    cf: &TwoVariantCF,
    model: &TailModel,
    n: u64,
    config: &TailOracleConfig,
    ctx: &PrecisionContext,
) -> Result<Complex> {
    Ok(numeric_tails(cf, model, n, config, ctx)?.get(n).clone())
}

/// Least-squares slope of `ln |error|` against `ln n`.
pub fn fit_order(errors: &[(u64, Float)]) -> Result<f64> {
    if errors.len() < 4 {
        return Err(Error::DegenerateInput(format!("need at least 4 samples, got {}", errors.len())));
    }
    let mut xs = Vec::with_capacity(errors.len());
    let mut ys = Vec::with_capacity(errors.len());
    for (n, e) in errors {
        if e.is_zero() {
            return Err(Error::DegenerateInput(format!("error vanishes at n = {n}")));
        }
        xs.push((*n as f64).ln());
        ys.push(Float::with_val(e.prec(), e.abs_ref()).ln().to_f64());
    }
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Residual indices with a closed form for `class`.
pub fn implemented_residuals(class: Subclass) -> &'static [i32] {
    match class {
        Subclass::De10 => &[-10, -9, -8, -7, -4, -2, -1],
        Subclass::Dn10 => &[-10, -9, -8, -7, -4],
        Subclass::D11 => &[-10, -9, -8, -7, -6],
        Subclass::De20 => &[-10, -9, -8, -7, -4, -2],
        Subclass::Dn20 => &[-10, -9, -8, -7],
        Subclass::Dt21 => &[-10, -9, -8, -7, -6],
    }
}

fn residual_terms(
    tag: &SubclassTag,
    sc: &ShiftedCoeffs,
    tau: &BTreeMap<i32, Complex>,
    m: i32,
    ctx: &PrecisionContext,
) -> Result<Vec<Complex>> {
    if !implemented_residuals(tag.class).contains(&m) {
        return Err(Error::UnsupportedResidual { tag: tag.class.name().into(), m });
    }
    let t = |j: i32| tau.get(&j).cloned().unwrap_or_else(|| ctx.zero());
    let (p, pp, q, qp) = (|i| sc.p(i), |i| sc.pp(i), |i| sc.q(i), |i| sc.qp(i));
    let terms = match (tag.class, m) {
        (_, -10) => vec![qp(-1) * t(-4) * t(-4)],
        (_, -9) => vec![qp(-1) * t(-4) * t(-3) * 2u32],
        (_, -8) => vec![
            qp(-1) * q(-1) * t(-4),
            qp(-1) * t(-4) * (t(-4) * 2u32 + t(-2)),
            qp(-1) * t(-3) * t(-3),
            qp(-1) * t(-2) * t(-4),
            qp(0) * t(-4) * t(-4),
            t(-4) * (p(-2) - pp(-2)),
        ],
        (_, -7) => vec![
            t(-3) * qp(-1) * q(-1),
            qp(-1) * t(-4) * (t(-1) + t(-3) * 3u32 / 2u32),
            qp(-1) * t(-3) * (t(-4) * 2u32 + t(-2)),
            t(-2) * qp(-1) * t(-3),
            t(-1) * qp(-1) * t(-4),
            t(-4) * qp(0) * t(-3) * 2u32,
            t(-3) * p(-2),
            -(pp(-2) * t(-3)),
        ],
        (Subclass::De10 | Subclass::Dn10, -4) => {
            vec![qp(0) * t(-2) * t(-2), -(pp(-1) * t(-2)), p(-1) * t(-2)]
        }
        (Subclass::De10, -2) => vec![qp(0) * t(-1) * t(-1), -(q(0) * p(-1))],
        (Subclass::De10, -1) => vec![
            t(-1) * pp(0) * 2u32,
            -(t(-1) * t(0) * qp(0) * 4u32),
            -(t(-1) * qp(0) * q(0) * 2u32),
            -(t(-1) * p(0) * 2u32),
            t(-1) * p(-1),
        ],
        (Subclass::D11, -6) => vec![t(-2) * qp(-1) * t(-2), t(-2) * qp(-1) * q(-1)],
        (Subclass::De20, -4) => vec![qp(0) * t(-2) * t(-2), (p(-1) - pp(-1) - p(-2)) * t(-2), -(p(-2) * q(0))],
        // tau_0 (2 tau_{-2} q'_0 + p_{-1} - p'_{-1}) minus the closed-form numerator
        (Subclass::De20, -2) => vec![
            t(0) * (t(-2) * qp(0) * 2u32 + p(-1) - pp(-1)),
            -(pp(-1) * q(0)),
            -(p(-2) * q(1)),
            (qp(1) + qp(0)) * t(-2) * t(-2),
            -((pp(-1) + pp(0) - p(0) - qp(0) * q(0)) * t(-2)),
        ],
        (Subclass::Dt21, -6) => {
            vec![qp(-1) * t(-2) * t(-2), (p(-2) - pp(-2) + qp(-1) * q(-1)) * t(-2), -(pp(-2) * q(-1))]
        }
        _ => unreachable!("listed in implemented_residuals"),
    };
    Ok(terms)
}

/// `c_m` at the given coefficients.
pub fn cm_residual(
    tag: &SubclassTag,
    sc: &ShiftedCoeffs,
    tau: &BTreeMap<i32, Complex>,
    m: i32,
    ctx: &PrecisionContext,
) -> Result<Complex> {
    Ok(cm_residual_scaled(tag, sc, tau, m, ctx)?.0)
}

/// `c_m` and the largest modulus among its terms.
pub fn cm_residual_scaled(
    tag: &SubclassTag,
    sc: &ShiftedCoeffs,
    tau: &BTreeMap<i32, Complex>,
    m: i32,
    ctx: &PrecisionContext,
) -> Result<(Complex, Float)> {
    let terms = residual_terms(tag, sc, tau, m, ctx)?;
    let scale = terms.iter().map(abs).fold(ctx.real_zero(), |a, b| a.max(&b));
    let sum = terms.into_iter().fold(ctx.zero(), |a, b| a + b);
    Ok((sum, scale))
}

/// Leading behaviour of `I_n = a_{n+1} u_n / (b_{n+1} + u_{n+1})` when the
/// beginning coefficient is `tau`.
fn product_leading_form(class: Subclass, sc: &ShiftedCoeffs, tau: &Complex, n: u64, ctx: &PrecisionContext) -> Complex {
    let nf = Float::with_val(ctx.bits(), n);
    let n2 = Float::with_val(ctx.bits(), &nf * &nf);
    let zero = is_zero(tau);
    match class {
        Subclass::De10 => {
            let root = Float::with_val(ctx.bits(), nf.sqrt_ref());
            sc.p(-1) * &nf - sc.p(-1) * sc.q(0) / tau * root
        }
        Subclass::Dn10 => {
            if zero {
                sc.pp(-1) * nf
            } else {
                sc.p(-1) * nf
            }
        }
        Subclass::D11 => {
            if zero {
                sc.pp(-1) * sc.p(-1) / (sc.qp(-1) * sc.q(-1))
            } else {
                sc.qp(-1) * sc.q(-1) * n2
            }
        }
        Subclass::De20 => sc.p(-2) * n2 + (sc.p(-1) - sc.p(-2) - sc.p(-2) * sc.q(0) / tau) * nf,
        Subclass::Dn20 => {
            if zero {
                sc.pp(-2) * n2
            } else {
                sc.p(-2) * n2
            }
        }
        Subclass::Dt21 => tau.clone() * sc.p(-2) / (tau.clone() + sc.q(-1)) * n2,
    }
}

/// The beginning coefficient the model did not pick.
pub fn alternative_beginning(model: &TailModel, sc: &ShiftedCoeffs, ctx: &PrecisionContext) -> Complex {
    let tau = model.beginning(ctx);
    match model.class() {
        Subclass::De10 => -tau,
        Subclass::De20 | Subclass::Dt21 => model.gamma.clone() / (model.alpha.clone() * tau),
        Subclass::Dn10 => {
            if is_zero(&tau) {
                (sc.pp(-1) - sc.p(-1)) / sc.qp(0)
            } else {
                ctx.zero()
            }
        }
        Subclass::Dn20 => {
            if is_zero(&tau) {
                (sc.pp(-2) - sc.p(-2)) / sc.qp(0)
            } else {
                ctx.zero()
            }
        }
        Subclass::D11 => {
            if is_zero(&tau) {
                -sc.q(-1)
            } else {
                ctx.zero()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchSample {
    pub n: u64,
    pub chosen_error: Float,
    pub rejected_error: Float,
}

#[derive(Debug, Clone)]
pub struct BranchReport {
    pub samples: Vec<BranchSample>,
    pub pass: bool,
}

impl BranchReport {
    pub fn to_json(&self) -> Value {
        let samples: Vec<Value> = self
            .samples
            .iter()
            .map(|s| {
                json!({
                    "n": s.n,
                    "chosen_error": s.chosen_error.to_f64(),
                    "rejected_error": s.rejected_error.to_f64(),
                })
            })
            .collect();
        json!({ "pass": self.pass, "samples": samples })
    }
}

/// Compares the numerically computed products `I_n` with the leading forms
/// implied by the chosen and by the rejected beginning coefficient.
pub fn branch_check(
    cf: &TwoVariantCF,
    sc: &ShiftedCoeffs,
    model: &TailModel,
    tails: &NumericTails,
    samples: &[u64],
    ctx: &PrecisionContext,
) -> Result<BranchReport> {
    let chosen = model.beginning(ctx);
    let rejected = alternative_beginning(model, sc, ctx);
    let mut out = Vec::new();
    for &n in samples {
        if n + 1 > tails.n_max() {
            return Err(Error::DegenerateInput(format!("tails end before n = {}", n + 1)));
        }
        let den = cf.b_at(n + 1, ctx) + tails.get(n + 1);
        let product = cf.a_at(n + 1, ctx) * tails.get(n) / den;
        let err = |tau: &Complex| abs(&(product.clone() - product_leading_form(model.class(), sc, tau, n, ctx)));
        out.push(BranchSample { n, chosen_error: err(&chosen), rejected_error: err(&rejected) });
    }
    let pass = out.iter().all(|s| s.chosen_error < s.rejected_error);
    Ok(BranchReport { samples: out, pass })
}

#[derive(Debug, Clone)]
pub struct OrderFit {
    pub j: usize,
    pub expected: f64,
    pub slope: f64,
    pub pass: bool,
}

/// Slope of `|u_{nj} - u_n|` against `n` for `j = 0..=max_j`.
pub fn order_fits(
    cf: &TwoVariantCF,
    model: &TailModel,
    tails: &NumericTails,
    samples: &[u64],
    max_j: usize,
    tolerance: f64,
    ctx: &PrecisionContext,
) -> Result<Vec<OrderFit>> {
    let mut errors: Vec<Vec<(u64, Float)>> = vec![Vec::new(); max_j + 1];
    for &n in samples {
        if n > tails.n_max() {
            return Err(Error::DegenerateInput(format!("tails end before n = {n}")));
        }
        let mut row = TailRow::initial(model, n, max_j + 1, ctx);
        for (j, errs) in errors.iter_mut().enumerate() {
            if j > 0 {
                row = iterate_once(cf, model, &row, ctx)?;
            }
            errs.push((n, abs(&(row.values[0].clone() - tails.get(n)))));
        }
    }
    errors
        .iter()
        .enumerate()
        .map(|(j, errs)| {
            let slope = fit_order(errs)?;
            let expected = -(model.order_halves(j) as f64) / 2.0;
            Ok(OrderFit { j, expected, slope, pass: (slope - expected).abs() <= tolerance })
        })
        .collect()
}

/// Decay rate `eta` of `|phi_n^{(0)} - psi_n^{(0)}|`.
pub fn expected_eta(class: Subclass) -> f64 {
    match class {
        Subclass::De10 => 0.5,
        Subclass::De20 => 1.0,
        _ => 0.0,
    }
}

/// Fitted slope of `ln |phi_n^{(0)} - psi_n^{(0)}|` at the given `n`; errors
/// if the gap vanishes.
pub fn gap_slope(cf: &TwoVariantCF, model: &TailModel, samples: &[u64], ctx: &PrecisionContext) -> Result<f64> {
    let mut gaps = Vec::new();
    for &n in samples {
        let u_next = model.eval_initial(n + 1, ctx);
        gaps.push((n, abs(&phi_psi_gap(cf, model, n, 0, &u_next, ctx)?)));
    }
    fit_order(&gaps)
}

/// Least-squares fit of `u_n - tau_{-2} n` by `c_0 + c_1 / n`; returns `c_0`.
pub fn fit_constant_term(
    model: &TailModel,
    tails: &NumericTails,
    range: std::ops::RangeInclusive<u64>,
    ctx: &PrecisionContext,
) -> Result<Complex> {
    let bits = ctx.bits();
    let lead = model.tau(-2, ctx);
    // normal equations for the basis {1, 1/n}
    let (mut s00, mut s01, mut s11) = (ctx.real_zero(), ctx.real_zero(), ctx.real_zero());
    let (mut r0, mut r1) = (ctx.zero(), ctx.zero());
    for n in range {
        if n > tails.n_max() {
            return Err(Error::DegenerateInput(format!("tails end before n = {n}")));
        }
        let inv = Float::with_val(bits, n).recip();
        let y = tails.get(n).clone() - lead.clone() * n;
        s00 += 1u32;
        s01 += &inv;
        s11 += Float::with_val(bits, inv.square_ref());
        r0 += &y;
        r1 += y * &inv;
    }
    let det = Float::with_val(bits, &s00 * &s11) - Float::with_val(bits, &s01 * &s01);
    if det.is_zero() {
        return Err(Error::DegenerateInput("constant-term fit needs two distinct n".into()));
    }
    Ok((r0 * s11 - r1 * s01) / det)
}

/// One named pass/fail line of a verification run.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub label: String,
    pub tag: Subclass,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> =
            self.checks.iter().map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail })).collect();
        json!({
            "schema": SCHEMA,
            "label": self.label,
            "tag": self.tag.name(),
            "pass": self.pass(),
            "checks": checks,
        })
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub tails: TailOracleConfig,
    /// Sample points of the order fits.
    pub order_samples: Vec<u64>,
    pub order_tolerance: f64,
    pub branch_samples: Vec<u64>,
    pub gap_samples: Vec<u64>,
    pub gap_tolerance: f64,
}

impl VerifyConfig {
    pub fn for_context(ctx: &PrecisionContext) -> Self {
        VerifyConfig {
            tails: TailOracleConfig::for_context(ctx),
            order_samples: vec![128, 256, 512, 1024],
            order_tolerance: 0.5,
            branch_samples: vec![16, 32, 64],
            gap_samples: vec![4, 8, 16, 32, 64],
            gap_tolerance: 0.3,
        }
    }
}

fn check(name: impl Into<String>, pass: bool, detail: Value) -> Check {
    Check { name: name.into(), pass, detail }
}

fn scaled_small(value: &Complex, scale: &Float, ctx: &PrecisionContext) -> bool {
    abs(value) <= Float::with_val(ctx.bits(), scale * ctx.eps_rel())
}

/// Runs every check against `cf`.
pub fn verify(cf: &TwoVariantCF, config: &VerifyConfig, ctx: &PrecisionContext) -> Result<VerifyReport> {
    let (sc, model) = tail_model(cf, ctx)?;
    let mut checks = Vec::new();

    let (res, scale) = model.quadratic_residual(ctx);
    checks.push(check(
        "quadratic_residual",
        scaled_small(&res, &scale, ctx),
        json!({ "residual": abs(&res).to_f64(), "scale": scale.to_f64() }),
    ));

    let mut tau = extended_coefficients(&model.tag, &sc, ctx)?;
    for (j, t) in &model.tau {
        tau.entry(*j).or_insert_with(|| t.clone());
    }
    for &m in implemented_residuals(model.class()) {
        let (res, scale) = cm_residual_scaled(&model.tag, &sc, &tau, m, ctx)?;
        checks.push(check(
            format!("residual_c{m}"),
            scaled_small(&res, &scale, ctx),
            json!({ "residual": abs(&res).to_f64(), "scale": scale.to_f64() }),
        ));
    }

    let n_max = config.order_samples.iter().chain(&config.branch_samples).max().copied().unwrap_or(1).max(128) + 1;
    let tails = match numeric_tails(cf, &model, n_max, &config.tails, ctx) {
        Ok(t) => t,
        Err(e @ Error::NoConvergence(_)) => {
            checks.push(check("tail_certification", false, json!({ "error": e.to_string() })));
            return Ok(VerifyReport { label: cf.label.clone(), tag: model.class(), checks });
        }
        Err(e) => return Err(e),
    };
    checks.push(check("tail_certification", true, tails.to_json()));

    let s1 = modified_approximant(cf, 1, tails.get(1), ctx)?;
    let (res, scale) = odd_tail_terms(cf, 1, tails.get(1), tails.get(2), ctx);
    checks.push(check(
        "tail_equation",
        abs(&res) <= Float::with_val(ctx.bits(), &scale * ctx.eps_rel()) * 10u32,
        json!({ "residual": abs(&res).to_f64(), "value": crate::mp::complex_to_json(&s1) }),
    ));

    let fixed = fixed_point_drift(cf, &model, &tails, 16, 8, ctx)?;
    let fixed_pass = fixed <= Float::with_val(ctx.bits(), ctx.eps_rel() * 10u32);
    checks.push(check("exact_tail_fixed_point", fixed_pass, json!({ "relative_drift": fixed.to_f64() })));

    for fit in order_fits(cf, &model, &tails, &config.order_samples, 2, config.order_tolerance, ctx)? {
        checks.push(check(
            format!("order_j{}", fit.j),
            fit.pass,
            json!({ "expected": fit.expected, "slope": fit.slope, "samples": config.order_samples }),
        ));
    }

    let branch = branch_check(cf, &sc, &model, &tails, &config.branch_samples, ctx)?;
    checks.push(check("branch", branch.pass, branch.to_json()));

    let eta = expected_eta(model.class());
    let slope = gap_slope(cf, &model, &config.gap_samples, ctx)?;
    checks.push(check(
        "gap_decay",
        (slope + eta).abs() <= config.gap_tolerance,
        json!({ "expected": -eta, "slope": slope }),
    ));

    if model.class() == Subclass::De20 {
        let fitted = fit_constant_term(&model, &tails, 16..=128, ctx)?;
        let closed = &tau[&0];
        let rel = abs(&(fitted.clone() - closed)) / abs(closed);
        checks.push(check(
            "constant_term_fit",
            rel.to_f64() < 5e-4,
            json!({
                "closed_form": crate::mp::complex_to_json(closed),
                "fitted": crate::mp::complex_to_json(&fitted),
            }),
        ));
    }

    Ok(VerifyReport { label: cf.label.clone(), tag: model.class(), checks })
}

/// Largest relative move of `u_n` when a row of exact tails is iterated once,
/// over `n = start, ..., start + count - 1`.
pub fn fixed_point_drift(
    cf: &TwoVariantCF,
    model: &TailModel,
    tails: &NumericTails,
    start: u64,
    count: usize,
    ctx: &PrecisionContext,
) -> Result<Float> {
    let values = (start..=start + count as u64).map(|n| tails.get(n).clone()).collect();
    let mut worst = ctx.real_zero();
    for j in 0..3 {
        let row = TailRow { start, j, values: Vec::clone(&values) };
        let next = iterate_once(cf, model, &row, ctx)?;
        for (i, v) in next.values.iter().enumerate() {
            let exact = tails.get(start + i as u64);
            let rel = abs(&(v.clone() - exact)) / abs(exact);
            worst = worst.max(&rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::mp::rel_eq;
    use rug::ops::Pow;

    #[test]
    fn synthetic_power_law() {
        let c = PrecisionContext::new(30).unwrap();
        let errors: Vec<(u64, Float)> =
            [8u64, 16, 32, 64].iter().map(|&n| (n, Float::with_val(c.bits(), n).pow(-3i32) * 7u32)).collect();
        assert!((fit_order(&errors).unwrap() + 3.0).abs() < 1e-6);
        assert!(matches!(fit_order(&errors[..3]), Err(Error::DegenerateInput(_))));
        let mut with_zero = errors.clone();
        with_zero[1].1 = Float::new(c.bits());
        assert!(matches!(fit_order(&with_zero), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn digamma_tail_gives_value() {
        let c = PrecisionContext::new(64).unwrap();
        let (cf, _) = gallery::build("perron_digamma", &["x=1", "nu=1/2"], &c).unwrap();
        let (_, model) = tail_model(&cf, &c).unwrap();
        let tails = numeric_tails(&cf, &model, 4, &TailOracleConfig::for_context(&c), &c).unwrap();
        let s1 = modified_approximant(&cf, 1, tails.get(1), &c).unwrap();
        let v = c.parse_complex("1.327052799890558739735").unwrap();
        assert!(crate::mp::acc(&s1, &v, &c).unwrap() >= 20.0);
        let r = crate::cf::odd_tail_residual(&cf, 2, tails.get(2), tails.get(3), &c);
        assert!(abs(&r) < 1e-25);
    }

    #[test]
    fn d11_tail_tends_to_constant() {
        let c = PrecisionContext::new(40).unwrap();
        let cf = TwoVariantCF::new(
            "d11",
            c.zero(),
            crate::mp::Poly::from_ints(&[1, 1], &c),
            crate::mp::Poly::from_ints(&[1, 1], &c),
            crate::mp::Poly::from_ints(&[0, 3], &c),
            crate::mp::Poly::from_ints(&[0, 2], &c),
            &c,
        )
        .unwrap();
        let (_, model) = tail_model(&cf, &c).unwrap();
        let tails = numeric_tails(&cf, &model, 400, &TailOracleConfig::for_context(&c), &c).unwrap();
        let gap = |n: u64| abs(&(tails.get(n).clone() - c.ratio(3, 2))).to_f64();
        assert!(gap(400) < 1.0 / 400.0, "gap {}", gap(400));
        assert!(gap(400) < gap(200) * 0.6);
    }

    #[test]
    fn residuals_vanish_for_log() {
        let c = PrecisionContext::new(50).unwrap();
        let (cf, _) = gallery::build("perron_log", &["x=1"], &c).unwrap();
        let (sc, model) = tail_model(&cf, &c).unwrap();
        let tau = extended_coefficients(&model.tag, &sc, &c).unwrap();
        for &m in implemented_residuals(model.class()) {
            let (r, s) = cm_residual_scaled(&model.tag, &sc, &tau, m, &c).unwrap();
            assert!(scaled_small(&r, &s, &c), "m = {m}");
        }
        assert!(matches!(cm_residual(&model.tag, &sc, &tau, -3, &c), Err(Error::UnsupportedResidual { m: -3, .. })));
    }

    #[test]
    fn negated_de10_coefficient_keeps_quadratic_residual() {
        let c = PrecisionContext::new(50).unwrap();
        let (cf, _) = gallery::build("perron_incgamma", &[] as &[&str], &c).unwrap();
        let (sc, model) = tail_model(&cf, &c).unwrap();
        let mut tau = extended_coefficients(&model.tag, &sc, &c).unwrap();
        let t = tau[&-1].clone();
        tau.insert(-1, -t);
        let (r, s) = cm_residual_scaled(&model.tag, &sc, &tau, -2, &c).unwrap();
        assert!(scaled_small(&r, &s, &c));
    }

    #[test]
    fn branch_check_detects_swapped_root() {
        let c = PrecisionContext::new(64).unwrap();
        let (cf, _) = gallery::build("perron_digamma", &["x=1", "nu=1/2"], &c).unwrap();
        let (sc, model) = tail_model(&cf, &c).unwrap();
        let tails = numeric_tails(&cf, &model, 65, &TailOracleConfig::for_context(&c), &c).unwrap();
        assert!(branch_check(&cf, &sc, &model, &tails, &[16, 32, 64], &c).unwrap().pass);
        let mut swapped = model.clone();
        swapped.tau.insert(-2, alternative_beginning(&model, &sc, &c));
        assert!(rel_eq(&swapped.beginning(&c), &c.int(-2), &c));
        assert!(!branch_check(&cf, &sc, &swapped, &tails, &[16, 32, 64], &c).unwrap().pass);
    }

    #[test]
    fn constant_term_fit_matches_closed_form() {
        let c = PrecisionContext::new(64).unwrap();
        let (cf, _) = gallery::build("perron_digamma", &["x=1", "nu=1/2"], &c).unwrap();
        let (_, model) = tail_model(&cf, &c).unwrap();
        let tails = numeric_tails(&cf, &model, 128, &TailOracleConfig::for_context(&c), &c).unwrap();
        let fitted = fit_constant_term(&model, &tails, 16..=128, &c).unwrap();
        assert!((fitted.real().to_f64() + 0.9375).abs() < 1e-4);
    }
}
