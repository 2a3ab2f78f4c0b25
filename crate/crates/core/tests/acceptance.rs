//! End-to-end reproduction targets. Prints one line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Complex, Float};

use tvcf::accel::{accelerate, round_half_away, AccelConfig, DeltaTable};
use tvcf::cf::{classical_approximant, modified_approximant, u_plus};
use tvcf::gallery;
use tvcf::mp::{abs, acc};
use tvcf::validation::{verify, VerifyConfig};
use tvcf::PrecisionContext;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const DIGAMMA_DELTAS: [&[f64]; 11] = [
    &[1.24, 2.40, 3.24, 4.04, 4.82, 5.62, 6.44, 7.29, 8.17, 9.10, 10.08],
    &[1.79, 3.03, 3.90, 4.72, 5.53, 6.36, 7.22, 8.10, 9.03, 10.01],
    &[2.13, 3.46, 4.38, 5.25, 6.11, 6.98, 7.87, 8.80, 9.78],
    &[2.38, 3.78, 4.76, 5.68, 6.58, 7.49, 8.43, 9.40],
    &[2.57, 4.04, 5.08, 6.04, 6.98, 7.94, 8.91],
    &[2.73, 4.25, 5.34, 6.34, 7.33, 8.32],
    &[2.86, 4.44, 5.57, 6.61, 7.64],
    &[2.98, 4.60, 5.77, 6.85],
    &[3.08, 4.74, 5.95],
    &[3.17, 4.87],
    &[3.25],
];

const LOG_DELTAS: [&[f64]; 15] = [
    &[1.1, 2.4, 3.4, 5.0, 5.8, 6.9, 7.9, 9.0, 10.0, 11.1, 12.1, 13.1, 14.2, 15.2, 16.2],
    &[1.8, 3.1, 4.4, 5.8, 6.7, 7.9, 8.9, 10.0, 11.0, 12.1, 13.1, 14.1, 15.2, 16.2],
    &[2.2, 3.6, 5.2, 6.4, 7.6, 8.7, 9.8, 10.9, 11.9, 13.0, 14.0, 15.1, 16.1],
    &[2.5, 4.0, 5.8, 6.9, 8.3, 9.4, 10.6, 11.6, 12.8, 13.8, 14.9, 16.0],
    &[2.7, 4.3, 6.3, 7.4, 8.9, 10.0, 11.3, 12.4, 13.5, 14.6, 15.7],
    &[2.9, 4.6, 6.7, 7.9, 9.4, 10.6, 11.9, 13.1, 14.2, 15.4],
    &[3.0, 4.8, 7.1, 8.3, 9.9, 11.1, 12.4, 13.7, 14.9],
    &[3.2, 5.0, 7.4, 8.7, 10.3, 11.6, 13.0, 14.2],
    &[3.3, 5.2, 7.7, 9.0, 10.7, 12.1, 13.4],
    &[3.4, 5.4, 7.9, 9.3, 11.0, 12.5],
    &[3.5, 5.6, 8.1, 9.6, 11.4],
    &[3.6, 5.7, 8.4, 9.9],
    &[3.7, 5.9, 8.5],
    &[3.7, 6.0],
    &[3.8],
];

fn ctx128() -> PrecisionContext {
    PrecisionContext::new(128).expect("valid precision")
}

fn table(id: &str, params: &[&str], rows: usize, ctx: &PrecisionContext) -> Result<DeltaTable, String> {
    let (cf, p) = gallery::build(id, params, ctx).map_err(|e| e.to_string())?;
    let reference = gallery::find(id).unwrap().oracle(&p, ctx).map_err(|e| e.to_string())?;
    let result = accelerate(&cf, AccelConfig::new(rows, rows - 1), ctx, Some(&reference)).map_err(|e| e.to_string())?;
    Ok(result.deltas.unwrap_or_default())
}

fn compare_table(deltas: &DeltaTable, printed: &[&[f64]], tol: f64, places: Option<i32>) -> Outcome {
    let mut worst = 0.0f64;
    let mut cells = 0;
    for (i, row) in printed.iter().enumerate() {
        for (j, &want) in row.iter().enumerate() {
            let n = i as u64 + 1;
            let got = deltas.get(n, j).ok_or(format!("missing cell ({n},{j})"))?;
            let got = places.map_or(got, |p| round_half_away(got, p));
            let err = (got - want).abs();
            if err > tol + 1e-9 {
                return Err(format!("cell ({n},{j}) = {got:.3}, printed {want}"));
            }
            worst = worst.max(err);
            cells += 1;
        }
    }
    Ok(format!("{cells} cells, worst deviation {worst:.3}"))
}

fn timed(limit_s: f64, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let secs = start.elapsed().as_secs_f64();
    if secs > limit_s {
        return Err(format!("{detail}; took {secs:.1} s, target {limit_s} s"));
    }
    Ok(format!("{detail}; {secs:.2} s"))
}

fn within(label: &str, got: f64, want: f64, tol: f64) -> Outcome {
    if (got - want).abs() <= tol + 1e-9 {
        Ok(format!("{label} = {got:.3}"))
    } else {
        Err(format!("{label} = {got:.3}, expected {want} +- {tol}"))
    }
}

fn classical_accuracies(id: &str, params: &[&str], ns: &[(u64, f64)], tol: f64, ctx: &PrecisionContext) -> Outcome {
    let (cf, p) = gallery::build(id, params, ctx).map_err(|e| e.to_string())?;
    let v = gallery::find(id).unwrap().oracle(&p, ctx).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for &(n, want) in ns {
        let s = classical_approximant(&cf, n, ctx).map_err(|e| e.to_string())?;
        let got = acc(&s, &v, ctx).map_err(|e| e.to_string())?;
        parts.push(within(&format!("delta_{n}"), got, want, tol)?);
    }
    Ok(parts.join(", "))
}

fn criterion_1() -> Outcome {
    let ctx = ctx128();
    timed(10.0, || {
        compare_table(&table("perron_digamma", &["x=1", "nu=1/2"], 11, &ctx)?, &DIGAMMA_DELTAS, 0.01, Some(2))
    })
}

fn criterion_2() -> Outcome {
    let ctx = ctx128();
    timed(30.0, || {
        classical_accuracies(
            "perron_digamma",
            &["x=1", "nu=1/2"],
            &[(100, 2.25), (1000, 3.24), (10000, 4.24)],
            0.01,
            &ctx,
        )
    })
}

fn criterion_3() -> Outcome {
    let ctx = ctx128();
    let printed = [1.02, 2.15, 3.00, 3.82, 4.65, 5.51, 6.41, 7.33, 8.29, 9.29, 10.32];
    let deltas = table("perron_digamma", &["x=1/2", "nu=1/2"], 11, &ctx)?;
    let row: Vec<&[f64]> = vec![&printed];
    compare_table(&deltas, &row, 0.01, Some(2))
}

fn criterion_4() -> Outcome {
    let ctx = ctx128();
    timed(60.0, || {
        let (cf, p) = gallery::build("perron_incgamma", &["z=1/16", "alpha=4"], &ctx).map_err(|e| e.to_string())?;
        let v = gallery::find("perron_incgamma").unwrap().oracle(&p, &ctx).map_err(|e| e.to_string())?;
        let r = accelerate(&cf, AccelConfig::new(80, 79), &ctx, None).map_err(|e| e.to_string())?;
        let head = within("delta_{1,79}", acc(&r.value, &v, &ctx).map_err(|e| e.to_string())?, 26.23, 0.2)?;
        let tail = classical_accuracies(
            "perron_incgamma",
            &["z=1/16", "alpha=4"],
            &[(10, 0.61), (50, 3.02), (100, 4.45)],
            0.01,
            &ctx,
        )?;
        Ok(format!("{head}, {tail}"))
    })
}

fn criterion_5() -> Outcome {
    let ctx = ctx128();
    let params = ["x=-1.5+0.01i"];
    let cells = compare_table(&table("perron_log", &params, 15, &ctx)?, &LOG_DELTAS, 0.1, None)?;
    let baseline = classical_accuracies("perron_log", &params, &[(100, 0.1), (300, 0.9)], 0.05, &ctx)?;
    Ok(format!("{cells}; {baseline}"))
}

fn approximant_identity(cases: usize, ctx: &PrecisionContext) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7cf);
    let entries = gallery::entries();
    let mut checked = 0;
    let mut skipped = 0;
    while checked < cases {
        let entry = &entries[rng.gen_range(0..entries.len())];
        let (cf, _) = gallery::build(entry.id, &[] as &[&str], ctx).map_err(|e| e.to_string())?;
        let n = rng.gen_range(1..=20u64);
        let r: f64 = rng.gen_range(0.0..10.0);
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let w = ctx.from_f64(r * t.cos(), r * t.sin());
        let Ok(up) = u_plus(&cf, n, &w, ctx) else {
            skipped += 1;
            continue;
        };
        let lhs = modified_approximant(&cf, 2 * n - 1, &up, ctx).map_err(|e| e.to_string())?;
        let rhs = modified_approximant(&cf, 2 * n + 1, &w, ctx).map_err(|e| e.to_string())?;
        let diff: Float = abs(&(lhs - &rhs));
        let bound = Float::with_val(ctx.bits(), abs(&rhs) * ctx.eps_rel());
        if diff > bound {
            return Err(format!("{} n = {n}: identity off by {}", entry.id, diff.to_f64()));
        }
        checked += 1;
    }
    Ok(format!("approximant identity on {checked} cases ({skipped} singular draws skipped)"))
}

fn criterion_6() -> Outcome {
    let ctx = ctx128();
    timed(120.0, || {
        let mut parts = vec![approximant_identity(200, &ctx)?];
        let config = VerifyConfig::for_context(&ctx);
        for entry in gallery::entries() {
            let (cf, _) = gallery::build(entry.id, &[] as &[&str], &ctx).map_err(|e| e.to_string())?;
            let report = verify(&cf, &config, &ctx).map_err(|e| format!("{}: {e}", entry.id))?;
            let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            if !failed.is_empty() {
                return Err(format!("{} failed {}", entry.id, failed.join(", ")));
            }
            parts.push(format!("{} {} checks", entry.id, report.checks.len()));
        }
        Ok(parts.join("; "))
    })
}

fn matches_literal(label: &str, got: &Complex, literal: &str, decimals: i32, ctx: &PrecisionContext) -> Outcome {
    let want = ctx.parse_complex(literal).map_err(|e| e.to_string())?;
    let err = abs(&(got.clone() - &want));
    let half_ulp = Float::with_val(ctx.bits(), Float::i_pow_u(10, decimals as u32)).recip() / 2u32;
    if err <= half_ulp {
        Ok(format!("{label} ok"))
    } else {
        Err(format!("{label} off by {}", err.to_f64()))
    }
}

fn criterion_7() -> Outcome {
    let ctx = ctx128();
    let oracle = |id: &str, params: &[&str]| -> Result<Complex, String> {
        let entry = gallery::find(id).map_err(|e| e.to_string())?;
        let p = gallery::Params::parse(entry, params, &ctx).map_err(|e| e.to_string())?;
        entry.oracle(&p, &ctx).map_err(|e| e.to_string())
    };
    let parts = [
        matches_literal(
            "digamma x=1",
            &oracle("perron_digamma", &["x=1", "nu=1/2"])?,
            "1.327052799890558739735",
            21,
            &ctx,
        )?,
        matches_literal("digamma x=1/2", &oracle("perron_digamma", &["x=1/2", "nu=1/2"])?, "0.883414269615", 12, &ctx)?,
        matches_literal(
            "incomplete gamma",
            &oracle("perron_incgamma", &["z=1/16", "alpha=4"])?,
            "3.09147726049419952742569567195",
            29,
            &ctx,
        )?,
    ];
    let quarter_pi = Complex::with_val(ctx.bits(), ctx.pi() / 4u32);
    let digits = acc(&oracle("arctan_cf", &["x=1"])?, &quarter_pi, &ctx).map_err(|e| e.to_string())?;
    if digits < 60.0 {
        return Err(format!("arctan(1) agrees with pi/4 to {digits:.1} digits"));
    }
    Ok(format!("{}, arctan(1) {digits:.1} digits", parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 digamma delta table", criterion_1),
        ("2 classical approximants, digamma x=1", criterion_2),
        ("3 delta_{1,j}, digamma x=1/2", criterion_3),
        ("4 incomplete gamma N=80 J=79", criterion_4),
        ("5 log delta table, x=-1.5+0.01i", criterion_5),
        ("6 property suite", criterion_6),
        ("7 oracle cross-checks", criterion_7),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(detail) => {
                failures += 1;
                println!("criterion {name}: FAIL ({detail})");
            }
        }
    }
    println!("acceptance: {} of 7 passed", 7 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
