use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Complex;
use serde_json::{json, Value};

use tvcf::accel::{accelerate, AccelConfig};
use tvcf::cf::{modified_approximant, SCHEMA};
use tvcf::classify::classify_cf;
use tvcf::gallery::{self, GalleryEntry, Params};
use tvcf::mp::{acc, complex_to_json};
use tvcf::tail::initial_tail;
use tvcf::validation::{verify, VerifyConfig};
use tvcf::{Error, PrecisionContext, Result, TwoVariantCF};

/// Evaluate and accelerate two-variant continued fractions.
#[derive(Parser)]
#[command(name = "tvcf", version)]
struct Cli {
    /// Working precision in significant decimal digits.
    #[arg(long, global = true, env = "TVCF_DIGITS", default_value_t = PrecisionContext::DEFAULT_DIGITS)]
    digits: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the subclass tag and its witness.
    Classify {
        #[command(flatten)]
        input: Input,
        /// Include the initial tail model.
        #[arg(long)]
        with_tail: bool,
        /// Print the continued fraction as a TVCF JSON file instead.
        #[arg(long)]
        dump_cf: bool,
    },
    /// Evaluate the modified approximant S_n(omega).
    Eval {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        n: u64,
        /// Tail substitute, `a+bi` syntax.
        #[arg(long, default_value = "0")]
        omega: String,
        #[command(flatten)]
        reference: ReferenceArg,
    },
    /// Run the acceleration and print S_1(u_{1,J}).
    Accelerate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        reference: ReferenceArg,
    },
    /// Print the accuracy table delta_{nj}.
    Table {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        reference: ReferenceArg,
        /// CSV with two-decimal cells, or JSON with full-precision accuracies.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Browse the built-in continued fractions.
    Gallery {
        #[command(subcommand)]
        command: GalleryCommand,
    },
    /// Run the residual, branch and order checks.
    Verify {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Subcommand)]
enum GalleryCommand {
    /// List entries with their parameters and defaults.
    List,
    /// Print the reference value of an entry.
    Eval {
        id: String,
        /// Parameter assignments `name=value`.
        params: Vec<String>,
        /// Same as a positional assignment, repeatable.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        param: Vec<String>,
    },
}

#[derive(Args)]
struct Input {
    /// Gallery id, see `tvcf gallery list`.
    #[arg(required_unless_present = "input")]
    id: Option<String>,
    /// Parameter assignments `name=value`.
    params: Vec<String>,
    /// Same as a positional assignment, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    param: Vec<String>,
    /// Read a TVCF JSON file instead of a gallery entry.
    #[arg(long, conflicts_with = "id")]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct Shape {
    /// Number N of initial tail approximations.
    #[arg(long, default_value_t = 11)]
    rows: usize,
    /// Number J of iterations, defaults to N - 1.
    #[arg(long)]
    iters: Option<usize>,
}

impl Shape {
    fn config(&self) -> Result<AccelConfig> {
        let iterations = self.iters.unwrap_or(self.rows.saturating_sub(1));
        let config = AccelConfig::new(self.rows, iterations);
        config.check()?;
        Ok(config)
    }
}

#[derive(Args)]
struct ReferenceArg {
    /// `none`, `oracle` or `literal:VALUE`. Defaults to `oracle` for
    /// gallery input and `none` for files.
    #[arg(long)]
    reference: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

struct Loaded {
    cf: TwoVariantCF,
    gallery: Option<(&'static GalleryEntry, Params)>,
}

impl Input {
    fn load(&self, ctx: &PrecisionContext) -> Result<Loaded> {
        if let Some(path) = &self.input {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
            let value: Value = serde_json::from_str(&text)?;
            return Ok(Loaded { cf: TwoVariantCF::from_json(&value, ctx)?, gallery: None });
        }
        let id = self.id.as_deref().ok_or_else(|| Error::Parse("no input given".into()))?;
        let entry = gallery::find(id)?;
        let assignments: Vec<&String> = self.params.iter().chain(&self.param).collect();
        let params = Params::parse(entry, &assignments, ctx)?;
        let cf = entry.build(&params, ctx)?;
        Ok(Loaded { cf, gallery: Some((entry, params)) })
    }
}

impl ReferenceArg {
    fn resolve(&self, loaded: &Loaded, ctx: &PrecisionContext) -> Result<Option<Complex>> {
        let choice = match (&self.reference, &loaded.gallery) {
            (Some(s), _) => s.as_str(),
            (None, Some(_)) => "oracle",
            (None, None) => "none",
        };
        match choice {
            "none" => Ok(None),
            "oracle" => match &loaded.gallery {
                Some((entry, params)) => Ok(Some(entry.oracle(params, ctx)?)),
                None => Err(Error::DegenerateInput("`oracle` reference needs a gallery entry".into())),
            },
            other => match other.strip_prefix("literal:") {
                Some(text) => Ok(Some(ctx.parse_complex(text)?)),
                None => Err(Error::Parse(format!("unknown reference `{other}`"))),
            },
        }
    }
}

enum Output {
    Json(Value),
    Text(String),
}

fn with_header(mut value: Value, label: &str, ctx: &PrecisionContext) -> Value {
    if let Value::Object(map) = &mut value {
        map.insert("schema".into(), json!(SCHEMA));
        map.insert("label".into(), json!(label));
        map.insert("digits".into(), json!(ctx.digits()));
    }
    value
}

fn run(cli: &Cli) -> Result<Output> {
    let ctx = PrecisionContext::new(cli.digits)?;
    let ctx = &ctx;
    match &cli.command {
        Command::Classify { input, with_tail, dump_cf } => {
            let loaded = input.load(ctx)?;
            if *dump_cf {
                return Ok(Output::Json(loaded.cf.to_json()));
            }
            let (sc, tag) = classify_cf(&loaded.cf, ctx)?;
            let mut out = json!({
                "tag": tag.class.name(),
                "witness": tag.to_json()["witness"].clone(),
                "shifted": sc.to_json(),
            });
            if *with_tail {
                out["tail"] = initial_tail(&tag, &sc, ctx)?.to_json();
            }
            Ok(Output::Json(with_header(out, &loaded.cf.label, ctx)))
        }
        Command::Eval { input, n, omega, reference } => {
            let loaded = input.load(ctx)?;
            let omega = ctx.parse_complex(omega)?;
            let value = modified_approximant(&loaded.cf, *n, &omega, ctx)?;
            let mut out = json!({
                "n": n,
                "omega": complex_to_json(&omega),
                "value": complex_to_json(&value),
            });
            if let Some(v) = reference.resolve(&loaded, ctx)? {
                out["acc"] = json!(acc(&value, &v, ctx)?);
            }
            Ok(Output::Json(with_header(out, &loaded.cf.label, ctx)))
        }
        Command::Accelerate { input, shape, reference } => {
            let config = shape.config()?;
            let loaded = input.load(ctx)?;
            let reference = reference.resolve(&loaded, ctx)?;
            let result = accelerate(&loaded.cf, config, ctx, None)?;
            let mut out = result.to_json(ctx);
            if let Some(v) = reference {
                out["acc"] = json!(acc(&result.value, &v, ctx)?);
            }
            Ok(Output::Json(with_header(out, &loaded.cf.label, ctx)))
        }
        Command::Table { input, shape, reference, format } => {
            let config = shape.config()?;
            let loaded = input.load(ctx)?;
            let reference = reference
                .resolve(&loaded, ctx)?
                .ok_or_else(|| Error::DegenerateInput("`table` needs a reference value".into()))?;
            let result = accelerate(&loaded.cf, config, ctx, Some(&reference))?;
            let table = result.deltas.unwrap_or_default();
            match format {
                Format::Csv => Ok(Output::Text(table.to_csv())),
                Format::Json => {
                    let mut out = table.to_json();
                    out["N"] = json!(config.rows);
                    out["J"] = json!(config.iterations);
                    out["reference"] = complex_to_json(&reference);
                    Ok(Output::Json(with_header(out, &loaded.cf.label, ctx)))
                }
            }
        }
        Command::Gallery { command: GalleryCommand::List } => {
            let entries: Vec<Value> = gallery::entries().iter().map(GalleryEntry::to_json).collect();
            Ok(Output::Json(json!({ "schema": SCHEMA, "entries": entries })))
        }
        Command::Gallery { command: GalleryCommand::Eval { id, params, param } } => {
            let entry = gallery::find(id)?;
            let assignments: Vec<&String> = params.iter().chain(param).collect();
            let params = Params::parse(entry, &assignments, ctx)?;
            let value = entry.oracle(&params, ctx)?;
            let out = json!({ "id": entry.id, "params": params.to_json(), "value": complex_to_json(&value) });
            Ok(Output::Json(with_header(out, entry.id, ctx)))
        }
        Command::Verify { input } => {
            let loaded = input.load(ctx)?;
            let report = verify(&loaded.cf, &VerifyConfig::for_context(ctx), ctx)?;
            Ok(Output::Json(with_header(report.to_json(), &loaded.cf.label, ctx)))
        }
    }
}

fn error_object(code: &str, message: &str) -> String {
    let value = json!({ "schema": SCHEMA, "error": { "code": code, "message": message } });
    serde_json::to_string_pretty(&value).expect("serializable")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            println!("{}", error_object("PARSE_ERROR", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    let (text, status) = match run(&cli) {
        Ok(Output::Json(value)) => {
            (serde_json::to_string_pretty(&value).expect("serializable") + "\n", ExitCode::SUCCESS)
        }
        Ok(Output::Text(text)) => (text, ExitCode::SUCCESS),
        Err(e) => (error_object(e.code(), &e.to_string()) + "\n", ExitCode::FAILURE),
    };
    // a closed pipe downstream is not an error of ours
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    status
}
