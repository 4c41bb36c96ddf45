//! `multigerm`: command-line front end for the classification engine.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use multigerm::catalog::{fingerprint, Catalog, CATALOG_ENV};
use multigerm::classify::{library_family, nonsimple_library, ClassificationReport, ClassifyOptions, Classifier};
use multigerm::family::AffineFamily;
use multigerm::mather::{mather_check, merge_parameter};
use multigerm::semigroup::{invariant_pair, value_semigroup};
use multigerm::tangent::{family_deficiency, tangent_space, GroupFilter};
use multigerm::transversal::complete_transversal;
use multigerm::verify::{verify_catalog, VerifyOptions};
use multigerm::{Error, Multigerm};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "multigerm", version, about = "Classify multigerms of parametrized curves up to right-left equivalence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Sample points per tangent-space check.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Catalog file replacing the built-in table.
    #[arg(long, global = true, env = CATALOG_ENV)]
    catalog: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Debug)]
struct GermInput {
    /// Multigerm JSON, inline or as a file path.
    #[arg(long)]
    input: String,
    /// Override the truncation order of the input.
    #[arg(long)]
    truncation: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multiplicities, invariant pairs, semigroups and the fingerprint.
    Invariants {
        #[command(flatten)]
        germ: GermInput,
        /// Orbit depth of the fingerprint (default: min(6, truncation)).
        #[arg(long)]
        level: Option<u32>,
    },
    /// Complete transversal of the fixed `level`-jet in degree `level + 1`.
    Transversal {
        #[command(flatten)]
        germ: GermInput,
        #[arg(long)]
        level: u32,
    },
    /// Orbit tangent space at a jet level.
    Tangent {
        #[command(flatten)]
        germ: GermInput,
        #[arg(long)]
        level: u32,
        /// full, subgroup:R, left, right, left-min:D or right-min:D.
        #[arg(long, default_value = "full")]
        filter: String,
        /// Include an echelon basis of the tangent space.
        #[arg(long)]
        basis: bool,
    },
    /// Orbit membership of an affine family; one-parameter families are merged when possible.
    Mather {
        /// Family JSON, inline or as a file path.
        #[arg(long)]
        input: String,
        #[arg(long)]
        level: u32,
        #[arg(long, default_value = "full")]
        filter: String,
    },
    /// Dimension count of a family against orbit tangent spaces.
    Modality {
        /// A library key (see `--list`), or family JSON inline or as a file path.
        #[arg(long, required_unless_present = "list")]
        input: Option<String>,
        /// Jet level; required for family JSON, defaults to the library level.
        #[arg(long)]
        level: Option<u32>,
        /// List the built-in obstruction families.
        #[arg(long)]
        list: bool,
    },
    /// Recognize a catalog normal form or gather non-simplicity evidence.
    Classify {
        #[command(flatten)]
        germ: GermInput,
        /// Highest jet level used (default: truncation - 1).
        #[arg(long)]
        level: Option<u32>,
        /// Exit with status 1 unless the verdict is simple.
        #[arg(long)]
        expect_simple: bool,
    },
    /// Round-trip, determinacy and distinctness checks over the catalog.
    CatalogVerify {
        #[arg(long, default_value_t = 9)]
        weight_bound: u32,
        /// Restrict to entries whose id starts with this section, e.g. `1.2`.
        #[arg(long)]
        filter: Option<String>,
    },
}

/// Outcome of a command: a report and whether it counts as an analytic refusal.
struct Outcome {
    report: Value,
    refused: bool,
}

fn ok(report: impl Serialize) -> Result<Outcome, Error> {
    Ok(Outcome {
        report: to_value(report)?,
        refused: false,
    })
}

fn to_value(v: impl Serialize) -> Result<Value, Error> {
    serde_json::to_value(v).map_err(|e| Error::Internal(format!("serialization failed: {e}")))
}

fn read_source(input: &str) -> Result<String, Error> {
    let trimmed = input.trim_start();
    if trimmed.starts_with('{') {
        return Ok(input.to_string());
    }
    std::fs::read_to_string(input).map_err(|e| Error::Parse(format!("cannot read {input}: {e}")))
}

fn load_germ(g: &GermInput) -> Result<Multigerm, Error> {
    let f = Multigerm::from_json_str(&read_source(&g.input)?)?;
    let f = match g.truncation {
        Some(t) if t < 2 => {
            return Err(Error::InvalidArgument("truncation must be at least 2".into()));
        }
        Some(t) => f.with_truncation(t),
        None => f,
    };
    f.check_nondegenerate()?;
    Ok(f)
}

fn parse_filter(s: &str) -> Result<GroupFilter, Error> {
    s.parse()
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let c = &cli.common;
    match &cli.command {
        Command::Invariants { germ, level } => {
            let f = load_germ(germ)?;
            let depth = level.unwrap_or(6.min(f.truncation()));
            let (reduced, kept) = f.reduce_embedding();
            let mut components = Vec::new();
            for (i, comp) in f.components().iter().enumerate() {
                let entry = json!({
                    "index": i,
                    "multiplicity": comp.multiplicity()?,
                    "pair": invariant_pair(comp)?,
                    "s0": value_semigroup(comp, 0, f.truncation())?.report(),
                    "s1": value_semigroup(comp, 1, f.truncation())?.report(),
                });
                components.push(entry);
            }
            ok(json!({
                "input": f.to_json(),
                "embedding_dim": reduced.ambient_dim(),
                "kept_coordinates": kept,
                "components": components,
                "fingerprint": fingerprint(&f, depth)?,
            }))
        }
        Command::Transversal { germ, level } => {
            let f = load_germ(germ)?;
            if *level == 0 {
                return Err(Error::InvalidArgument("level must be at least 1".into()));
            }
            let t = complete_transversal(&f, *level)?;
            ok(json!({ "input": f.to_json(), "jet_level": level, "transversal": t.report() }))
        }
        Command::Tangent {
            germ,
            level,
            filter,
            basis,
        } => {
            let f = load_germ(germ)?;
            let t = tangent_space(&f, *level, parse_filter(filter)?)?;
            ok(json!({ "input": f.to_json(), "tangent": t.report(*basis) }))
        }
        Command::Mather { input, level, filter } => {
            let fam = AffineFamily::from_json_str(&read_source(input)?)?;
            let filter = parse_filter(filter)?;
            let samples = c.samples.unwrap_or(5);
            if fam.dim() == 1 {
                ok(merge_parameter(&fam, *level, filter, samples, c.seed)?)
            } else {
                ok(mather_check(&fam, *level, filter, samples, c.seed)?)
            }
        }
        Command::Modality { input, level, list } => {
            if *list {
                let keys: Vec<Value> = nonsimple_library()
                    .iter()
                    .map(|l| json!({ "key": l.key, "description": l.description, "level": l.level }))
                    .collect();
                return ok(keys);
            }
            let input = input.as_deref().unwrap_or_default();
            let samples = c.samples.unwrap_or(3);
            let trimmed = input.trim_start();
            if !trimmed.starts_with('{') && !std::path::Path::new(input).exists() {
                let mut lib = library_family(input)?;
                if let Some(l) = level {
                    lib.level = *l;
                }
                return ok(lib.replay(samples, c.seed)?);
            }
            let fam = AffineFamily::from_json_str(&read_source(input)?)?;
            let level = level.ok_or_else(|| Error::InvalidArgument("--level is required for a family".into()))?;
            ok(family_deficiency(&fam, level, GroupFilter::FullA, samples, c.seed)?)
        }
        Command::Classify {
            germ,
            level,
            expect_simple,
        } => {
            let f = load_germ(germ)?;
            let catalog = Catalog::load(c.catalog.as_deref())?;
            let cl = Classifier::new(&catalog);
            let mut opts = ClassifyOptions::new(level.unwrap_or(f.truncation() - 1), c.seed);
            if let Some(s) = c.samples {
                opts.samples = s;
            }
            let report: ClassificationReport = cl.classify(&f, &opts)?;
            let refused = *expect_simple && !report.verdict.is_simple();
            Ok(Outcome {
                report: to_value(report)?,
                refused,
            })
        }
        Command::CatalogVerify { weight_bound, filter } => {
            let catalog = Catalog::load(c.catalog.as_deref())?;
            if let Some(f) = filter {
                if !catalog.entries().iter().any(|e| e.id == *f || e.id.starts_with(&format!("{f}."))) {
                    return Err(Error::UnknownEntry(f.clone()));
                }
            }
            let cl = Classifier::new(&catalog);
            let mut opts = VerifyOptions::new(c.seed);
            if let Some(s) = c.samples {
                opts.samples = s;
            }
            let v = verify_catalog(&cl, *weight_bound, filter.as_deref(), &opts);
            let refused = !v.passed;
            Ok(Outcome {
                report: to_value(v)?,
                refused,
            })
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Invariants { .. } => "invariants",
        Command::Transversal { .. } => "transversal",
        Command::Tangent { .. } => "tangent",
        Command::Mather { .. } => "mather",
        Command::Modality { .. } => "modality",
        Command::Classify { .. } => "classify",
        Command::CatalogVerify { .. } => "catalog-verify",
    }
}

/// Indented `key: value` rendering of a JSON report.
fn render_text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                if is_scalar(val) {
                    out.push_str(&format!("{pad}{k}: {}\n", scalar(val)));
                } else {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render_text(val, indent + 1, out);
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                if is_scalar(item) {
                    out.push_str(&format!("{pad}- {}\n", scalar(item)));
                } else {
                    out.push_str(&format!("{pad}-\n"));
                    render_text(item, indent + 1, out);
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn is_scalar(v: &Value) -> bool {
    match v {
        Value::Array(a) => a.iter().all(|x| !x.is_object() && !x.is_array()) && a.len() <= 16,
        Value::Object(_) => false,
        _ => true,
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => format!("[{}]", a.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    match run(&cli) {
        Ok(outcome) => {
            let mut out = String::new();
            let doc = json!({
                "command": name,
                "seed": cli.common.seed,
                "report": outcome.report,
            });
            match cli.common.format {
                Format::Json => {
                    out = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
                    out.push('\n');
                }
                Format::Text => render_text(&doc, 0, &mut out),
            }
            // A closed pipe downstream is not an engine failure.
            let _ = std::io::stdout().lock().write_all(out.as_bytes());
            if outcome.refused {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
