//! The triangular array `u_{nj}` of improved tail approximations.

use rug::Complex;
use serde_json::{json, Value};

use crate::cf::{modified_approximant, u_plus, TwoVariantCF, SCHEMA};
use crate::error::{Error, Position, Result};
use crate::mp::{acc, complex_to_json, is_zero, PrecisionContext};
use crate::tail::{tail_model, TailModel};

/// `values[i]` approximates `u_{start + i}` after `j` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct TailRow {
    pub start: u64,
    pub j: usize,
    pub values: Vec<Complex>,
}

impl TailRow {
    /// Row 0 on `n = start, ..., start + len - 1`.
    pub fn initial(model: &TailModel, start: u64, len: usize, ctx: &PrecisionContext) -> Self {
        let values = (0..len as u64).map(|i| model.eval_initial(start + i, ctx)).collect();
        TailRow { start, j: 0, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `u_{nj}`, if `n` lies in the row.
    pub fn get(&self, n: u64) -> Option<&Complex> {
        n.checked_sub(self.start).and_then(|i| self.values.get(i as usize))
    }
}

/// `phi_n^{(j)} = 1 + (m/2 + j theta) / n`, formed as one exact quotient.
pub fn phi(model: &TailModel, n: u64, j: usize, ctx: &PrecisionContext) -> Complex {
    let num = 2 * n + model.order_halves(j);
    Complex::with_val(ctx.bits(), num) / (2 * n)
}

/// `psi_n^{(j)} = a'_n a_{n+1} / (a_{n+1} + b'_n b_{n+1} + b'_n u_{n+1,j})^2`.
pub fn psi(cf: &TwoVariantCF, n: u64, j: usize, u_next: &Complex, ctx: &PrecisionContext) -> Result<Complex> {
    let a1 = cf.a_at(n + 1, ctx);
    let bp = cf.b_prime_at(n, ctx);
    let den = a1.clone() + bp.clone() * cf.b_at(n + 1, ctx) + bp * u_next;
    if is_zero(&den) {
        return Err(Error::ZeroDenominator(Position::with_iteration("psi", n, j)));
    }
    Ok(cf.a_prime_at(n, ctx) * a1 / den.square())
}

/// `phi_n^{(j)} - psi_n^{(j)}`, the divisor of the combination step.
pub fn phi_psi_gap(
    cf: &TwoVariantCF,
    model: &TailModel,
    n: u64,
    j: usize,
    u_next: &Complex,
    ctx: &PrecisionContext,
) -> Result<Complex> {
    Ok(phi(model, n, j, ctx) - psi(cf, n, j, u_next, ctx)?)
}

/// One step `u_{n,j+1} = (phi u^+ - psi u) / (phi - psi)`.
pub fn iterate_once(cf: &TwoVariantCF, model: &TailModel, row: &TailRow, ctx: &PrecisionContext) -> Result<TailRow> {
    if row.len() < 2 {
        return Err(Error::RowExhausted(row.len()));
    }
    let j = row.j;
    let mut values = Vec::with_capacity(row.len() - 1);
    for (i, pair) in row.values.windows(2).enumerate() {
        let n = row.start + i as u64;
        let (u, u_next) = (&pair[0], &pair[1]);
        let up = u_plus(cf, n, u_next, ctx).map_err(|e| match e {
            Error::ZeroDenominator(p) => Error::ZeroDenominator(Position::with_iteration(p.stage, n, j)),
            other => other,
        })?;
        let f = phi(model, n, j, ctx);
        let s = psi(cf, n, j, u_next, ctx)?;
        let gap = f.clone() - &s;
        if is_zero(&gap) {
            return Err(Error::ZeroDenominator(Position::with_iteration("phi - psi", n, j)));
        }
        values.push((f * up - s * u) / gap);
    }
    Ok(TailRow { start: row.start, j: j + 1, values })
}

/// Applies [`iterate_once`] `iterations` times.
pub fn iterate(
    cf: &TwoVariantCF,
    model: &TailModel,
    row: TailRow,
    iterations: usize,
    ctx: &PrecisionContext,
) -> Result<TailRow> {
    let mut row = row;
    for _ in 0..iterations {
        row = iterate_once(cf, model, &row, ctx)?;
    }
    Ok(row)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccelConfig {
    /// Length `N` of row 0.
    pub rows: usize,
    /// Number `J` of iterations, at most `N - 1`.
    pub iterations: usize,
    /// Retain every row rather than only the last.
    pub keep_rows: bool,
}

impl AccelConfig {
    pub fn new(rows: usize, iterations: usize) -> Self {
        AccelConfig { rows, iterations, keep_rows: false }
    }

    pub fn keep_rows(mut self) -> Self {
        self.keep_rows = true;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.rows < self.iterations + 1 {
            return Err(Error::DegenerateInput(format!(
                "need N >= J + 1, got N = {} and J = {}",
                self.rows, self.iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AccelResult {
    /// `S_1(u_{1,J})`.
    pub value: Complex,
    pub model: TailModel,
    pub config: AccelConfig,
    /// Rows `0..=J` when retained, otherwise only row `J`.
    pub rows: Vec<TailRow>,
    pub deltas: Option<DeltaTable>,
}

impl AccelResult {
    pub fn last_row(&self) -> &TailRow {
        self.rows.last().expect("at least one row")
    }

    pub fn to_json(&self, ctx: &PrecisionContext) -> Value {
        let mut out = json!({
            "schema": SCHEMA,
            "value": complex_to_json(&self.value),
            "N": self.config.rows,
            "J": self.config.iterations,
            "digits": ctx.digits(),
            "tag": self.model.class().name(),
        });
        if let Some(d) = &self.deltas {
            if let Some(v) = d.get(1, self.config.iterations) {
                out["acc"] = json!(v);
            }
        }
        out
    }
}

/// Classifies `cf`, builds row 0 and iterates.
pub fn accelerate(
    cf: &TwoVariantCF,
    config: AccelConfig,
    ctx: &PrecisionContext,
    reference: Option<&Complex>,
) -> Result<AccelResult> {
    let (_, model) = tail_model(cf, ctx)?;
    accelerate_with_model(cf, model, config, ctx, reference)
}

pub fn accelerate_with_model(
    cf: &TwoVariantCF,
    model: TailModel,
    config: AccelConfig,
    ctx: &PrecisionContext,
    reference: Option<&Complex>,
) -> Result<AccelResult> {
    config.check()?;
    if let Some(v) = reference {
        if is_zero(v) {
            return Err(Error::Domain("reference value is zero".into()));
        }
    }
    let keep = config.keep_rows || reference.is_some();
    let mut rows = vec![TailRow::initial(&model, 1, config.rows, ctx)];
    for _ in 0..config.iterations {
        let next = iterate_once(cf, &model, rows.last().expect("nonempty"), ctx)?;
        if !keep {
            rows.clear();
        }
        rows.push(next);
    }
    let u = rows.last().expect("nonempty").values[0].clone();
    let value = modified_approximant(cf, 1, &u, ctx)?;
    let mut result = AccelResult { value, model, config, rows, deltas: None };
    if let Some(v) = reference {
        result.deltas = Some(delta_table(cf, &result, v, ctx)?);
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaCell {
    pub n: u64,
    pub j: usize,
    /// `acc(S_{2n-1}(u_{nj}))` at full precision.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeltaTable {
    pub cells: Vec<DeltaCell>,
}

impl DeltaTable {
    pub fn get(&self, n: u64, j: usize) -> Option<f64> {
        self.cells.iter().find(|c| c.n == n && c.j == j).map(|c| c.delta)
    }

    /// Cells ordered by `n`, then `j`.
    pub fn sorted(&self) -> Vec<DeltaCell> {
        let mut cells = self.cells.clone();
        cells.sort_by_key(|c| (c.n, c.j));
        cells
    }

    /// `n,j,delta` with two decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,j,delta\n");
        for c in self.sorted() {
            out.push_str(&format!("{},{},{}\n", c.n, c.j, format_delta(c.delta, 2)));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let cells: Vec<Value> = self
            .sorted()
            .iter()
            .map(|c| json!({ "n": c.n, "j": c.j, "delta": c.delta, "display": format_delta(c.delta, 2) }))
            .collect();
        json!({ "schema": SCHEMA, "cells": cells })
    }
}

/// Rounds half away from zero to `places` decimals.
pub fn round_half_away(value: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (value * scale).round() / scale
}

pub fn format_delta(value: f64, places: usize) -> String {
    if value.is_infinite() {
        return if value > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded = round_half_away(value, places as i32);
    let text = format!("{rounded:.places$}");
    // avoid "-0.00"
    if rounded == 0.0 {
        format!("{:.places$}", 0.0)
    } else {
        text
    }
}

/// `delta_{nj} = acc(S_{2n-1}(u_{nj}))` for every retained cell.
pub fn delta_table(
    cf: &TwoVariantCF,
    result: &AccelResult,
    reference: &Complex,
    ctx: &PrecisionContext,
) -> Result<DeltaTable> {
    if is_zero(reference) {
        return Err(Error::Domain("reference value is zero".into()));
    }
    let mut cells = Vec::new();
    for row in &result.rows {
        for (i, u) in row.values.iter().enumerate() {
            let n = row.start + i as u64;
            let s = modified_approximant(cf, 2 * n - 1, u, ctx)?;
            cells.push(DeltaCell { n, j: row.j, delta: acc(&s, reference, ctx)? });
        }
    }
    Ok(DeltaTable { cells })
}
