use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pfr_core::instances::{lovett_regev_radius, make_ap, make_gap, make_lovett_regev, make_random_convex_progression, Instance};
use pfr_core::lattice::enumerate_lattice;
use pfr_core::progressions::{gaussian_correlation, gaussian_density, image_set, progression_size, AmbientGroup, Frame};
use pfr_core::setops::{doubling_constant, greedy_cover, sumset, verify_cover, CoverCheck};
use pfr_core::transfer::{rbm_ratio, transfer_pipeline, TransferConfig};
use pfr_core::{BodyKind, Q};
use serde::Serialize;
use serde_json::{json, Value};

use crate::json::*;

#[derive(Debug, Parser)]
#[command(name = "pfr", version, about = "Convex progressions, covers and the ellipsoid transfer")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Global {
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples.
    #[arg(long, global = true, default_value_t = pfr_core::bodies::DEFAULT_MC_SAMPLES)]
    samples: usize,
    /// Lattice enumeration limit.
    #[arg(long, global = true, default_value_t = pfr_core::lattice::DEFAULT_LIMIT)]
    limit: usize,
    /// Ellipsoid fitting tolerance.
    #[arg(long, global = true, default_value_t = pfr_core::fitting::MVEE_EPS)]
    tol: f64,
    /// Tail mass dropped by the Gaussian density.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tail_eps: f64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Lattice points of a body around a center.
    Enumerate {
        #[arg(long)]
        body: PathBuf,
        /// Comma-separated rationals; defaults to the origin.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
    },
    /// Number of coefficient vectors of a progression.
    Size {
        #[arg(long)]
        prog: PathBuf,
    },
    /// Image set of a progression.
    Image {
        #[arg(long)]
        prog: PathBuf,
    },
    Sumset {
        #[arg(long)]
        set: PathBuf,
        /// Second summand; defaults to the first.
        #[arg(long)]
        other: Option<PathBuf>,
    },
    Doubling {
        #[arg(long)]
        set: PathBuf,
    },
    VerifyCover {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        prog: PathBuf,
        #[arg(long)]
        cover: PathBuf,
    },
    GreedyCover {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        prog: PathBuf,
    },
    /// Replaces a convex progression cover by an ellipsoid progression cover.
    Transfer {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        prog: PathBuf,
        #[arg(long)]
        cover: PathBuf,
        /// Samples for the covering-volume bounds; 0 skips them. Defaults to --samples.
        #[arg(long)]
        bound_samples: Option<usize>,
        /// Optional Brunn–Minkowski grid, e.g. "1,1;2,1".
        #[arg(long)]
        grid: Option<String>,
    },
    /// Reverse Brunn–Minkowski ratio of two equal-volume bodies.
    Rbm {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        other: PathBuf,
        #[arg(long, default_value = "1,1;2,1;1,2")]
        grid: String,
    },
    /// Gaussian correlation of a set with the density of an ellipsoid progression.
    GaussCorr {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        prog: PathBuf,
    },
    #[command(subcommand)]
    Gen(Gen),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Gen {
    Ap {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        step: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        base: String,
    },
    Gap {
        /// Generators separated by ';', coordinates by ','.
        #[arg(long, allow_hyphen_values = true)]
        gens: String,
        #[arg(long)]
        lengths: String,
        #[arg(long, allow_hyphen_values = true)]
        base: Option<String>,
    },
    RandomConvex {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        scale: String,
    },
    LovettRegev {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        h: i64,
        /// Ball radius; omitted means search for a size in --target.
        #[arg(long, allow_hyphen_values = true)]
        radius: Option<String>,
        #[arg(long, default_value = "50,500")]
        target: String,
    },
}

/// Outcome of one invocation: exit code and the newline-terminated JSON document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub json: String,
}

/// Parses `argv` (program name first), runs the command and renders the report.
/// With `--out` the report goes to that file and `json` is empty.
pub fn run_command<I, T>(argv: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if code == EXIT_OK {
                return Output { code, json: e.to_string() };
            }
            let err = CliError::usage(e.to_string().trim_end());
            return Output {
                code,
                json: render(&json!({ "error": err.to_json() })),
            };
        }
    };
    if let Command::Transfer {
        bound_samples: b @ None, ..
    } = &mut cli.command
    {
        *b = Some(cli.global.samples);
    }
    let config = config_json(&cli);
    let (code, mut doc) = match dispatch(&cli) {
        Ok((code, body)) => (code, body),
        Err(e) => (e.code, json!({ "error": e.to_json() })),
    };
    if let Value::Object(m) = &mut doc {
        m.insert("command".into(), Value::String(command_name(&cli.command).into()));
        m.insert("config".into(), config);
    }
    let text = render(&doc);
    match &cli.global.out {
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => Output { code, json: String::new() },
            Err(e) => {
                let err = CliError::usage(format!("cannot write {}: {e}", path.display()));
                Output {
                    code: EXIT_USAGE,
                    json: render(&json!({ "error": err.to_json() })),
                }
            }
        },
        None => Output { code, json: text },
    }
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string(v).unwrap_or_else(|_| String::from("{}"));
    s.push('\n');
    s
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Enumerate { .. } => "enumerate",
        Command::Size { .. } => "size",
        Command::Image { .. } => "image",
        Command::Sumset { .. } => "sumset",
        Command::Doubling { .. } => "doubling",
        Command::VerifyCover { .. } => "verify-cover",
        Command::GreedyCover { .. } => "greedy-cover",
        Command::Transfer { .. } => "transfer",
        Command::Rbm { .. } => "rbm",
        Command::GaussCorr { .. } => "gauss-corr",
        Command::Gen(Gen::Ap { .. }) => "gen ap",
        Command::Gen(Gen::Gap { .. }) => "gen gap",
        Command::Gen(Gen::RandomConvex { .. }) => "gen random-convex",
        Command::Gen(Gen::LovettRegev { .. }) => "gen lovett-regev",
    }
}

fn config_json(cli: &Cli) -> Value {
    let mut c = serde_json::to_value(&cli.global).unwrap_or(Value::Null);
    if let (Value::Object(m), Ok(Value::Object(args))) = (&mut c, serde_json::to_value(&cli.command)) {
        // externally tagged enum: {"variant": {fields}}
        for fields in args
            .into_values()
            .filter_map(|v| if let Value::Object(f) = v { Some(f) } else { None })
        {
            for (k, v) in fields {
                match v {
                    // nested `gen` variant
                    Value::Object(inner) => m.extend(inner),
                    v => {
                        m.insert(k, v);
                    }
                }
            }
        }
    }
    c
}

fn read_doc(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::format(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(format!("{}: {e}", path.display())))
}

fn load_set(path: &Path, key: &str) -> CliResult<pfr_core::setops::FiniteSet> {
    set_from(pick(&read_doc(path)?, key))
}

fn load_prog(path: &Path) -> CliResult<pfr_core::progressions::Progression> {
    progression_from(pick(&read_doc(path)?, "prog"))
}

fn load_body(path: &Path) -> CliResult<pfr_core::SymmetricBody> {
    body_from(pick(&read_doc(path)?, "body"))
}

fn parse_list(s: &str) -> CliResult<Vec<Q>> {
    s.split(',').map(parse_rat).collect()
}

fn parse_rows(s: &str) -> CliResult<Vec<Vec<Q>>> {
    s.split(';').map(parse_list).collect()
}

fn parse_grid(s: &str) -> CliResult<Vec<(f64, f64)>> {
    s.split(';')
        .map(|pair| {
            let v: Vec<f64> = pair
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::usage(format!("bad grid point {pair:?}")))?;
            match v[..] {
                [a, b] if a > 0.0 && b > 0.0 => Ok((a, b)),
                _ => Err(CliError::usage(format!("grid point {pair:?} needs two positive numbers"))),
            }
        })
        .collect()
}

fn instance_json(i: &Instance) -> Value {
    json!({ "set": set_json(&i.a), "prog": progression_json(&i.p), "cover": set_json(&i.x), "set_size": i.a.len() })
}

fn ok(v: Value) -> CliResult<(i32, Value)> {
    Ok((EXIT_OK, v))
}

fn dispatch(cli: &Cli) -> CliResult<(i32, Value)> {
    let g = &cli.global;
    match &cli.command {
        Command::Enumerate { body, center } => {
            let b = load_body(body)?;
            let c = match center {
                Some(s) => parse_list(s)?,
                None => vec![Q::from_integer(0.into()); b.dim()],
            };
            let set = enumerate_lattice(&b, &c, g.limit)?;
            let code = if set.truncated { EXIT_LIMIT } else { EXIT_OK };
            let mut v = points_json(&set);
            v["count"] = json!(set.len());
            v["center"] = rat_vec(&c);
            Ok((code, v))
        }
        Command::Size { prog } => ok(json!({ "size": progression_size(&load_prog(prog)?, g.limit)? })),
        Command::Image { prog } => {
            let r = image_set(&load_prog(prog)?, g.limit)?;
            ok(json!({ "set": set_json(&r.set), "size": r.size, "cardinality": r.cardinality, "improper": r.improper }))
        }
        Command::Sumset { set, other } => {
            let a = load_set(set, "set")?;
            let b = match other {
                Some(p) => load_set(p, "set")?,
                None => a.clone(),
            };
            let s = sumset(&a, &b)?;
            ok(json!({ "set": set_json(&s), "size": s.len() }))
        }
        Command::Doubling { set } => {
            let a = load_set(set, "set")?;
            let k = doubling_constant(&a)?;
            ok(json!({ "K": rat(&k), "set_size": a.len(), "sumset_size": sumset(&a, &a)?.len() }))
        }
        Command::VerifyCover { set, prog, cover } => {
            let (a, p, x) = (load_set(set, "set")?, load_prog(prog)?, load_set(cover, "cover")?);
            match verify_cover(&a, &p, &x, g.limit)? {
                CoverCheck::Covered => ok(json!({ "covered": true })),
                CoverCheck::Uncovered { witness } => Ok((EXIT_FAILED, json!({ "covered": false, "witness": rat_vec(&witness) }))),
            }
        }
        Command::GreedyCover { set, prog } => {
            let x = greedy_cover(&load_set(set, "set")?, &load_prog(prog)?, g.limit)?;
            ok(json!({ "cover": set_json(&x), "size": x.len() }))
        }
        Command::Transfer {
            set,
            prog,
            cover,
            bound_samples,
            grid,
        } => {
            let (a, p, x) = (load_set(set, "set")?, load_prog(prog)?, load_set(cover, "cover")?);
            let cfg = TransferConfig {
                limit: g.limit,
                mc_samples: g.samples,
                bound_samples: bound_samples.unwrap_or(g.samples),
                fit_eps: g.tol,
                seed: g.seed,
                t_grid: match grid {
                    Some(s) => parse_grid(s)?,
                    None => Vec::new(),
                },
            };
            let r = transfer_pipeline(&a, &p, &x, &cfg)?;
            Ok((if r.verified { EXIT_OK } else { EXIT_FAILED }, transfer_json(&r)))
        }
        Command::Rbm { body, other, grid } => {
            let r = rbm_ratio(&load_body(body)?, &load_body(other)?, &parse_grid(grid)?, g.samples, g.seed)?;
            ok(rbm_json(&r))
        }
        Command::GaussCorr { set, prog } => {
            let a = load_set(set, "set")?;
            let p = load_prog(prog)?;
            if p.body().kind() != BodyKind::Ellipsoid {
                return Err(CliError::usage("gauss-corr needs an ellipsoid progression"));
            }
            let gram = p.body().gram().cloned().unwrap_or_default();
            let th = gaussian_density(p.frame(), &gram, g.tail_eps, g.limit)?;
            let rho = gaussian_correlation(&a, &th)?;
            ok(json!({
                "rho": rho,
                "total_mass": th.total_mass(),
                "dropped": th.total_dropped(),
                "truncation_bound": th.truncation_bound(),
                "support_size": th.support().len(),
            }))
        }
        Command::Gen(gen) => run_gen(gen, g),
    }
}

fn run_gen(gen: &Gen, g: &Global) -> CliResult<(i32, Value)> {
    match gen {
        Gen::Ap { n, step, base } => ok(instance_json(&make_ap(*n, &parse_rat(step)?, &parse_rat(base)?)?)),
        Gen::Gap { gens, lengths, base } => {
            let gens = parse_rows(gens)?;
            let m = gens.first().map_or(0, Vec::len);
            let a0 = match base {
                Some(b) => parse_list(b)?,
                None => vec![Q::from_integer(0.into()); m],
            };
            let integral = gens.iter().flatten().chain(&a0).all(|v| v.is_integer());
            let group = if integral {
                AmbientGroup::integer(m)
            } else {
                AmbientGroup::rational(m)
            };
            let lengths: Vec<u64> = lengths
                .split(',')
                .map(|s| s.trim().parse::<u64>().map_err(|_| CliError::usage(format!("bad length {s:?}"))))
                .collect::<CliResult<_>>()?;
            ok(instance_json(&make_gap(Frame::new(group, a0, gens)?, &lengths)?))
        }
        Gen::RandomConvex { d, k, scale } => {
            let p = make_random_convex_progression(*d, *k, g.seed, &parse_rat(scale)?)?;
            ok(json!({ "prog": progression_json(&p), "size": progression_size(&p, g.limit)? }))
        }
        Gen::LovettRegev { m, h, radius, target } => {
            let r = match radius {
                Some(r) => parse_rat(r)?,
                None => {
                    let t: Vec<usize> = target
                        .split(',')
                        .map(|s| s.trim().parse::<usize>().map_err(|_| CliError::usage(format!("bad target {s:?}"))))
                        .collect::<CliResult<_>>()?;
                    match t[..] {
                        [lo, hi] if lo <= hi => lovett_regev_radius(*m, *h, g.seed, lo, hi)?,
                        _ => return Err(CliError::usage("--target takes \"lo,hi\"")),
                    }
                }
            };
            let mut v = instance_json(&make_lovett_regev(*m, &r, *h, g.seed)?);
            v["radius"] = rat(&r);
            ok(v)
        }
    }
}
