//! Command-line front end: deterministic, scriptable, machine-readable.
//!
//! Every run echoes its configuration and the library version in the output.
//! Exit codes: 0 success, 2 usage error, 3 budget exceeded, 4 internal
//! invariant violation.

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use torsorcount::error::Error;
use torsorcount::fq::FqSpec;
use torsorcount::global::{
    adelic_series, fit_exponents, places_up_to, ratio_exponent, GlobalCtx,
    HeightMode, HeightSpec,
};
use torsorcount::invariants::{
    ab_invariants, conductor_spec, ct_construct, flag_count_bound, flag_enumerate,
    strongly_suitable_check, v_ab, v_spec, ABResult, RepSpec,
};
use torsorcount::poly::{addition_polys, Caps, WeightedPoly};
use torsorcount::selftest;
use torsorcount::torsor::{local_class_count, GroupSpec, LocalCtx, WittTail};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const DEFAULT_BUDGET: u64 = 1 << 24;

#[derive(Parser)]
#[command(name = "torsorcount", version, about = "Torsor classification and counting over function fields")]
struct Cli {
    /// Worker threads for parallel enumeration (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Seed for randomized self tests.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Enumeration budget; overrides the TORSORCOUNT_BUDGET environment variable.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Run the owning module's invariant suite instead of the subcommand.
    #[arg(long, global = true, default_value_t = false)]
    selftest: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FieldArgs {
    /// Group specification p:e1,e2,...
    #[arg(long)]
    group: String,
    /// Residue field cardinality q = p^k (a power of the group prime).
    #[arg(long, default_value_t = 0)]
    q: u64,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Print the Witt addition and inverse polynomial systems.
    WittPolys {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        e: usize,
        /// Also print the d-ary sum system.
        #[arg(long)]
        d: Option<usize>,
        /// Also print the multiplication-by-k system.
        #[arg(long)]
        k: Option<u64>,
    },
    /// Canonical form of a Witt tail (class, conductor, disc, flag record).
    Reduce {
        #[command(flatten)]
        field: FieldArgs,
        /// Tail in the textual syntax, coordinates joined by ',' and factors by '|'.
        #[arg(long)]
        input: String,
    },
    /// Conductor exponent of a Witt tail.
    Conductor {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        input: String,
    },
    /// Discriminant exponent of a Witt tail.
    Disc {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        input: String,
    },
    /// Long flag of a Witt tail, or enumeration of flags with a given disc.
    Flags {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        input: Option<String>,
        /// Enumerate all flags with this disc value instead of reducing an input.
        #[arg(long)]
        enumerate: Option<u64>,
    },
    /// a/b-invariants of a raising function.
    Invariants {
        #[arg(long)]
        group: String,
        /// conductor | vfun | ct
        #[arg(long)]
        function: String,
        /// Summand dimensions for vfun, e.g. 2,2.
        #[arg(long)]
        dims: Option<String>,
        /// Component target for ct.
        #[arg(long)]
        m: Option<u64>,
        /// Rescale parameter for ct, as num/den.
        #[arg(long)]
        t: Option<String>,
    },
    /// a/b-invariants of the v-function of a Z/p-representation.
    Vfun {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        dims: String,
    },
    /// Construct a prescribed-b raising function and certify it.
    Ct {
        #[arg(long)]
        group: String,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value = "1/5")]
        t: String,
    },
    /// Local class counts by conductor bound.
    LocalCount {
        #[arg(long)]
        group: String,
        /// Residue cardinality.
        #[arg(long = "Q")]
        big_q: u64,
        #[arg(long)]
        n_max: u64,
    },
    /// Truncated adelic height series (CSV: level, coefficient, partial sum).
    EulerSeries {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        group: String,
        /// conductor | disc | vfun | ct
        #[arg(long, default_value = "conductor")]
        height: String,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        m: Option<u64>,
        #[arg(long)]
        t: Option<String>,
    },
    /// Brute-force global classes with heights (CSV), Witt length 1.
    GlobalCount {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        max_degree: usize,
        #[arg(long)]
        pole_bound: u64,
    },
    /// Fit counting exponents from a CSV of level,partial_sum rows.
    Fit {
        #[arg(long)]
        q: u64,
        /// Input path, or - for stdin.
        #[arg(long, default_value = "-")]
        input: String,
    },
    /// Exhaustive orbit oracle report for one configuration.
    OracleCheck {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        pole_bound: u64,
    },
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (e.g. `... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    // --selftest runs a module suite and ignores the subcommand's own
    // (possibly required) arguments, so it is resolved before full parsing.
    let argv: Vec<String> = std::env::args().collect();
    if argv.iter().any(|a| a == "--selftest") {
        let subcommand = argv.get(1).cloned().unwrap_or_default();
        let seed = argv
            .iter()
            .position(|a| a == "--seed")
            .and_then(|i| argv.get(i + 1))
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        return run_selftest_by_name(&subcommand, seed);
    }
    let cli = Cli::parse();
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let budget = cli
        .budget
        .or_else(|| std::env::var("TORSORCOUNT_BUDGET").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(DEFAULT_BUDGET);
    match dispatch(&cli, budget) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::BudgetExceeded(_) | Error::QTooLarge { .. } => 3,
                Error::Internal(_) => 4,
                _ => 2,
            })
        }
    }
}

fn run_selftest_by_name(subcommand: &str, seed: u64) -> ExitCode {
    let module = match subcommand {
        "witt-polys" => "witt",
        "reduce" | "conductor" | "disc" | "flags" | "local-count" | "oracle-check" => "torsor",
        "invariants" | "vfun" | "ct" => "invariants",
        "euler-series" | "global-count" | "fit" => "global",
        other => {
            eprintln!("error: unknown subcommand {other:?} for --selftest");
            return ExitCode::from(2);
        }
    };
    let mut suites = vec![module];
    if module == "torsor" {
        suites.push("local-field");
    }
    let mut all_pass = true;
    for suite in suites {
        for r in selftest::run_suite(suite, seed).unwrap() {
            println!("[{}] {} ... {}", suite, r.name, if r.pass { "ok" } else { "FAILED" });
            if !r.pass {
                println!("    {}", r.detail);
                all_pass = false;
            }
        }
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    }
}

fn parse_rational(s: &str) -> Result<num_rational::BigRational, Error> {
    let parse_int = |x: &str| {
        x.trim()
            .parse::<i64>()
            .map_err(|_| Error::InvalidInput(format!("bad rational component {x:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => Ok(num_rational::BigRational::new(
            parse_int(n)?.into(),
            parse_int(d)?.into(),
        )),
        None => Ok(num_rational::BigRational::from_integer(parse_int(s)?.into())),
    }
}

fn rational_str(r: &num_rational::BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_dims(s: &str) -> Result<Vec<u32>, Error> {
    s.split(',')
        .map(|d| d.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Error::InvalidInput(format!("bad dimension list {s:?}")))
}

/// Field context: q defaults to p when left at 0, and must be a power of p.
fn field_ctx(args: &FieldArgs) -> Result<(FqSpec, GroupSpec, LocalCtx), Error> {
    let group = GroupSpec::parse(&args.group)?;
    let p = group.p();
    let q = if args.q == 0 { p as u64 } else { args.q };
    let mut k = 0usize;
    let mut m = 1u64;
    while m < q {
        m *= p as u64;
        k += 1;
    }
    if m != q || k == 0 {
        return Err(Error::InvalidInput(format!("q = {q} is not a positive power of p = {p}")));
    }
    let fq = FqSpec::new(p, k)?;
    let ctx = LocalCtx::new(fq.clone(), group.clone(), &Caps::default())?;
    Ok((fq, group, ctx))
}

fn poly_json(p: &WeightedPoly) -> Value {
    json!({
        "vars": p.vars().iter().map(|v| json!({"name": v.name, "weight": v.weight})).collect::<Vec<_>>(),
        "terms": p.terms_sorted().iter().map(|(m, c)| json!({"exps": m, "coeff": c.to_string()})).collect::<Vec<_>>(),
        "display": p.to_string(),
    })
}

fn class_json(fq: &FqSpec, cls: &torsorcount::torsor::LocalClass) -> Value {
    let wild: Vec<Value> = cls
        .wild
        .iter()
        .enumerate()
        .flat_map(|(u, f)| {
            f.iter().enumerate().filter(|(_, m)| !m.is_empty()).map(move |(j, m)| (u, j, m))
        })
        .map(|(u, j, m)| {
            json!({
                "factor": u,
                "coord": j,
                "terms": m.iter().map(|(i, c)| json!({"pole": i, "coeff": fq.render(c)})).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "unram": cls.unram, "wild": wild })
}

fn ab_json(ab: &ABResult) -> Value {
    json!({
        "a": rational_str(&ab.a),
        "D": ab.d_values.iter().map(rational_str).collect::<Vec<_>>(),
        "b": ab.b,
        "epsilon_margin": rational_str(&ab.epsilon_margin),
        "certified": ab.certified,
    })
}

fn emit_json(config: Value, body: Value) {
    let mut out = json!({ "version": VERSION, "config": config });
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        for (k, v) in b {
            o.insert(k, v);
        }
    }
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
}

fn height_spec(
    group: &GroupSpec,
    height: &str,
    dims: &Option<String>,
    m: &Option<u64>,
    t: &Option<String>,
) -> Result<HeightSpec, Error> {
    let mode = match height {
        "conductor" => HeightMode::Conductor,
        "disc" => HeightMode::DiscCyclic,
        "vfun" => {
            let dims = dims
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("vfun needs --dims".into()))?;
            HeightMode::VFun(RepSpec::new(group.p(), parse_dims(dims)?)?)
        }
        "ct" => HeightMode::Ct {
            m: m.ok_or_else(|| Error::InvalidInput("ct needs --m".into()))?,
            t: parse_rational(t.as_deref().unwrap_or("1/5"))?,
        },
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown height {other:?}; use conductor, disc, vfun or ct"
            )))
        }
    };
    Ok(HeightSpec { group: group.clone(), mode })
}

fn dispatch(cli: &Cli, budget: u64) -> Result<(), Error> {
    match &cli.command {
        Command::WittPolys { p, e, d, k } => {
            let caps = Caps::default();
            let sys = addition_polys(*p, *e, &caps)?;
            let mut body = json!({
                "S": sys.add.iter().map(poly_json).collect::<Vec<_>>(),
                "I": sys.inv.iter().map(poly_json).collect::<Vec<_>>(),
            });
            if let Some(d) = d {
                body["dary"] =
                    Value::Array(sys.dary(*d, &caps)?.iter().map(poly_json).collect());
            }
            if let Some(k) = k {
                body["scalar"] =
                    Value::Array(sys.scalar(*k)?.iter().map(poly_json).collect());
            }
            emit_json(json!({"cmd": "witt-polys", "p": p, "e": e, "d": d, "k": k}), body);
        }
        Command::Reduce { field, input }
        | Command::Conductor { field, input }
        | Command::Disc { field, input } => {
            let (fq, group, ctx) = field_ctx(field)?;
            let tail = WittTail::parse(&fq, &group, input)?;
            let cls = ctx.reduce(&tail)?;
            let flag = ctx.long_flag_of(&cls)?;
            let disc = ctx.disc_exponent(&cls)?;
            let cmd = match &cli.command {
                Command::Reduce { .. } => "reduce",
                Command::Conductor { .. } => "conductor",
                _ => "disc",
            };
            emit_json(
                json!({"cmd": cmd, "group": group.to_string(), "q": fq.q(), "input": input}),
                json!({
                    "class": class_json(&fq, &cls),
                    "conductor": cls.conductor(),
                    "disc": disc,
                    "flag": flag_json(&flag),
                }),
            );
        }
        Command::Flags { field, input, enumerate } => {
            let (fq, group, ctx) = field_ctx(field)?;
            match (input, enumerate) {
                (Some(input), None) => {
                    let tail = WittTail::parse(&fq, &group, input)?;
                    let cls = ctx.reduce(&tail)?;
                    let flag = ctx.long_flag_of(&cls)?;
                    emit_json(
                        json!({"cmd": "flags", "group": group.to_string(), "q": fq.q(), "input": input}),
                        json!({
                            "class": class_json(&fq, &cls),
                            "conductor": cls.conductor(),
                            "disc": ctx.disc_exponent(&cls)?,
                            "flag": flag_json(&flag),
                        }),
                    );
                }
                (None, Some(n)) => {
                    let flags = flag_enumerate(&group, *n)?;
                    emit_json(
                        json!({"cmd": "flags", "group": group.to_string(), "enumerate": n}),
                        json!({
                            "count": flags.len(),
                            "bound": flag_count_bound(&group, *n)?.to_string(),
                            "flags": flags.iter().map(flag_json).collect::<Vec<_>>(),
                        }),
                    );
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "flags needs exactly one of --input or --enumerate".into(),
                    ))
                }
            }
        }
        Command::Invariants { group, function, dims, m, t } => {
            let group = GroupSpec::parse(group)?;
            let (spec, collisions) = match function.as_str() {
                "conductor" => (conductor_spec(&group), Vec::new()),
                "vfun" => {
                    let dims = dims
                        .as_ref()
                        .ok_or_else(|| Error::InvalidInput("vfun needs --dims".into()))?;
                    let rep = RepSpec::new(group.p(), parse_dims(dims)?)?;
                    let vs = v_spec(&rep)?;
                    v_ab(&rep)?; // cross-check the closed form
                    (vs.spec, vs.collisions)
                }
                "ct" => {
                    let m = m.ok_or_else(|| Error::InvalidInput("ct needs --m".into()))?;
                    let t = parse_rational(t.as_deref().unwrap_or("1/5"))?;
                    (ct_construct(&group, m, &t)?, Vec::new())
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown function {other:?}; use conductor, vfun or ct"
                    )))
                }
            };
            let ab = ab_invariants(&spec, 0)?;
            let (suitable, witness) = strongly_suitable_check(&spec, &ab)?;
            let mut body = ab_json(&ab);
            body["strongly_suitable"] = json!(suitable);
            if let Some((v, r)) = witness {
                body["best_other"] = json!({"value": rational_str(&v), "ratio": rational_str(&r)});
            }
            if !collisions.is_empty() {
                body["value_collisions"] = json!(collisions
                    .iter()
                    .map(|(v, js)| json!({"value": rational_str(v), "jumps": js}))
                    .collect::<Vec<_>>());
            }
            emit_json(
                json!({"cmd": "invariants", "group": group.to_string(), "function": function,
                       "dims": dims, "m": m, "t": t}),
                body,
            );
        }
        Command::Vfun { p, dims } => {
            let rep = RepSpec::new(*p, parse_dims(dims)?)?;
            let ab = v_ab(&rep)?;
            emit_json(
                json!({"cmd": "vfun", "p": p, "dims": dims, "D_V": rep.d_v()}),
                ab_json(&ab),
            );
        }
        Command::Ct { group, m, t } => {
            let group = GroupSpec::parse(group)?;
            let t = parse_rational(t)?;
            let spec = ct_construct(&group, *m, &t)?;
            let ab = ab_invariants(&spec, 0)?;
            let (suitable, _) = strongly_suitable_check(&spec, &ab)?;
            let mut body = ab_json(&ab);
            body["strongly_suitable"] = json!(suitable);
            emit_json(
                json!({"cmd": "ct", "group": group.to_string(), "m": m, "t": rational_str(&t)}),
                body,
            );
        }
        Command::LocalCount { group, big_q, n_max } => {
            let group = GroupSpec::parse(group)?;
            println!("# torsorcount v{VERSION} schema=local-count.v1 group={group} Q={big_q}");
            println!("n,dim,raw,measure");
            for n in 0..=*n_max {
                let dim = torsorcount::torsor::dim_of_ball(&group, n);
                let (raw, measure) = local_class_count(&group, *big_q, n)?;
                println!("{n},{dim},{raw},{measure}");
            }
        }
        Command::EulerSeries { q, group, height, levels, dims, m, t } => {
            let group = GroupSpec::parse(group)?;
            let h = height_spec(&group, height, dims, m, t)?;
            let series = adelic_series(*q, &h, *levels)?;
            let sums = series.partial_sums();
            println!(
                "# torsorcount v{VERSION} schema=euler-series.v1 q={q} group={group} height={height} levels={levels}"
            );
            println!("level,coefficient,partial_sum");
            for (n, c) in series.coeffs.iter().enumerate() {
                println!("{n},{c},{}", sums[n]);
            }
        }
        Command::GlobalCount { q, p, max_degree, pole_bound } => {
            let mut k = 0usize;
            let mut m = 1u64;
            while m < *q {
                m *= *p as u64;
                k += 1;
            }
            if m != *q || k == 0 {
                return Err(Error::InvalidInput(format!("q = {q} is not a power of p = {p}")));
            }
            let fq = FqSpec::new(*p, k)?;
            let places = places_up_to(&fq, *max_degree, budget)?;
            let bounds = vec![*pole_bound; places.len()];
            let ctx = GlobalCtx::new(fq.clone(), *p, places)?;
            let classes = ctx.enumerate_classes(&bounds, budget)?;
            println!(
                "# torsorcount v{VERSION} schema=global-count.v1 q={q} p={p} max_degree={max_degree} pole_bound={pole_bound}"
            );
            println!("class,height_level,height");
            for c in &classes {
                let lvl = ctx.height_level(c);
                let parts: Vec<String> = c
                    .wild
                    .iter()
                    .map(|(idx, m)| {
                        let place = ctx.places[*idx].render(&fq);
                        let body: Vec<String> = m
                            .iter()
                            .map(|(i, bytes)| {
                                let kv = ctx.residue_field(*idx);
                                let el = kv.from_coeffs(bytes).unwrap();
                                format!("{}*t^-{}", kv.render(&el), i)
                            })
                            .collect();
                        format!("[{place}]{}", body.join("+"))
                    })
                    .collect();
                let desc = format!("r{};{}", c.residue, parts.join(";"));
                println!("{desc},{lvl},{}", (*q as u128).pow(lvl as u32));
            }
        }
        Command::Fit { q, input } => {
            let mut text = String::new();
            if input == "-" {
                std::io::stdin()
                    .read_to_string(&mut text)
                    .map_err(|e| Error::InvalidInput(format!("stdin: {e}")))?;
            } else {
                text = std::fs::read_to_string(input)
                    .map_err(|e| Error::InvalidInput(format!("{input}: {e}")))?;
            }
            let mut sums: Vec<(usize, num_bigint::BigInt)> = Vec::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with("level") {
                    continue;
                }
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 2 {
                    continue;
                }
                let level: usize = cols[0]
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad level {line:?}")))?;
                let sum = cols[cols.len() - 1]
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad count {line:?}")))?;
                sums.push((level, sum));
            }
            sums.sort();
            let max_level = sums.last().map(|(l, _)| *l).unwrap_or(0);
            let mut series = vec![num_bigint::BigInt::from(0); max_level + 1];
            for (l, s) in sums {
                series[l] = s;
            }
            let fit = fit_exponents(&series, *q)?;
            let ratio = ratio_exponent(&series, *q).ok();
            emit_json(
                json!({"cmd": "fit", "q": q, "input": input}),
                json!({
                    "a_hat": fit.a_hat,
                    "b_hat": fit.b_hat,
                    "ratio_a": ratio,
                    "rms_residual": fit.rms_residual,
                    "window": fit.window,
                    "points": fit.points,
                }),
            );
        }
        Command::OracleCheck { field, pole_bound } => {
            let (fq, group, ctx) = field_ctx(field)?;
            let parts = ctx.orbit_partition(*pole_bound, budget)?;
            // Every coset must reduce to a single canonical class, distinct
            // across cosets, and conductor counts must match the closed form.
            let mut classes = Vec::new();
            let mut unique = std::collections::BTreeSet::new();
            let mut coherent = true;
            for members in &parts {
                let first = ctx.reduce(&members[0])?;
                for x in members {
                    if ctx.reduce(x)? != first {
                        coherent = false;
                    }
                }
                unique.insert(format!("{first:?}"));
                classes.push((first, members.len()));
            }
            let mut count_rows = Vec::new();
            let mut counts_ok = true;
            for n in 0..=pole_bound + 1 {
                let got = classes.iter().filter(|(c, _)| c.conductor() <= n).count();
                let (raw, _) = local_class_count(&group, fq.q(), n)?;
                if num_bigint::BigInt::from(got) != raw {
                    counts_ok = false;
                }
                count_rows.push(json!({"n": n, "classes": got, "formula": raw.to_string()}));
            }
            emit_json(
                json!({"cmd": "oracle-check", "group": group.to_string(), "q": fq.q(),
                       "pole_bound": pole_bound}),
                json!({
                    "classes": parts.len(),
                    "reduce_injective": unique.len() == parts.len(),
                    "reduce_constant_on_cosets": coherent,
                    "conductor_counts": count_rows,
                    "conductor_counts_match": counts_ok,
                }),
            );
        }
    }
    Ok(())
}

fn flag_json(flag: &torsorcount::torsor::LongFlag) -> Value {
    json!({
        "jumps": flag.jumps(),
        "levels": flag
            .entries
            .iter()
            .map(|(n, level)| json!({"jump": n, "size": level.len(),
                "characters": level.iter().map(|c| c.values.clone()).collect::<Vec<_>>()}))
            .collect::<Vec<_>>(),
        "disc": flag.disc(),
    })
}
