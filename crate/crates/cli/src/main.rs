use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use illume_core::certify::{
    boundary_sample, certify_directions, certify_vertices, enumerate_vertices, illuminate_auto, integer_pool,
    min_illumination_search, AutoOptions, IlluminationCertificate, Mode,
};
use illume_core::directions::parse_directions;
use illume_core::randomized::{
    bound_chain, build_rk, check_ek, estimate_threshold_n, monte_carlo_hits, trial_success_prob, CoverageMode,
    EK_EXHAUSTIVE_CAP,
};
use illume_core::rational::{fmt_q, parse_q, to_f64};
use illume_core::{gen_direction_set, parse_body, DirectionLabel, DirectionSet, SymBody};

mod audit;

/// Seed used when `--seed` is absent.
const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Parser)]
#[command(name = "illume", version, about = "Illumination certificates for 1-symmetric convex bodies")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Certify illumination of a body, by a named family, a file or the automatic pipeline.
    Illuminate {
        #[arg(long)]
        body: PathBuf,
        /// `T`, `T1`, `T2`, `CubeCorners` or a directions file. Omit for the automatic pipeline.
        #[arg(long)]
        directions: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Adaptive)]
        mode: ModeArg,
        /// Largest dimension for vertex enumeration.
        #[arg(long, default_value_t = 8)]
        vertex_cap: usize,
        /// Random boundary points checked for smooth bodies.
        #[arg(long, default_value_t = 2000)]
        lp_samples: usize,
        /// Certificate output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Direction list output path.
        #[arg(long)]
        directions_out: Option<PathBuf>,
    },
    /// Audit the sign, ordering and norm-implication lemmas and the norm axioms.
    Audit {
        #[arg(long)]
        body: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        vertex_cap: usize,
    },
    /// Probability tables for the random direction sets.
    Simulate {
        #[arg(long)]
        n: Option<usize>,
        /// Single `k`; all `1..=ceil(n/2)` when omitted.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Bound-chain table for `2 <= n <= n-max`.
        #[arg(long)]
        chain: bool,
        /// Threshold scan for `2 <= n <= n-max`.
        #[arg(long)]
        threshold: bool,
        #[arg(long, default_value_t = 128)]
        n_max: usize,
    },
    /// List the vertices of a polyhedral body.
    Vertices {
        #[arg(long)]
        body: PathBuf,
        #[arg(long, default_value_t = 8)]
        cap: usize,
    },
    /// Evaluate the norm at a comma-separated point.
    Norm {
        #[arg(long)]
        body: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Distance to the cube, `||(1,…,1)|| / ||e_1||`.
    Distance {
        #[arg(long)]
        body: PathBuf,
    },
    /// Smallest illuminating subset of a direction pool.
    MinIll {
        #[arg(long)]
        body: PathBuf,
        /// Directions file; defaults to primitive vectors in `{-r..r}^n`.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        radius: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Faithful,
    Adaptive,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Faithful => Mode::Faithful,
            ModeArg::Adaptive => Mode::Adaptive,
        }
    }
}

fn load_body(path: &Path) -> anyhow::Result<SymBody> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_body(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_directions(spec: &str, n: usize) -> anyhow::Result<DirectionSet> {
    if let Ok(label) = spec.parse::<DirectionLabel>() {
        if !matches!(label, DirectionLabel::Custom | DirectionLabel::Random) {
            return Ok(gen_direction_set(label, n)?);
        }
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading directions {spec}"))?;
    Ok(parse_directions(&text, n)?)
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn point_text(x: &[illume_core::Q]) -> String {
    x.iter().map(fmt_q).collect::<Vec<_>>().join(",")
}

fn illuminate_summary(format: Format, strategy: &str, cert: &IlluminationCertificate) -> String {
    let uncovered: Vec<String> = cert.uncovered().iter().map(|x| point_text(x)).collect();
    let status = if cert.is_certified() { "certified" } else { "uncovered" };
    match format {
        Format::Json => {
            let v = json!({
                "strategy": strategy,
                "directions": cert.distinct_direction_count(),
                "points": cert.points.len(),
                "exhaustive": cert.exhaustive,
                "status": status,
                "uncovered": uncovered,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap())
        }
        Format::Csv => {
            let mut s = String::from("key,value\n");
            let _ = writeln!(s, "strategy,{strategy}");
            let _ = writeln!(s, "directions,{}", cert.distinct_direction_count());
            let _ = writeln!(s, "points,{}", cert.points.len());
            let _ = writeln!(s, "exhaustive,{}", cert.exhaustive);
            let _ = writeln!(s, "status,{status}");
            for u in uncovered {
                let _ = writeln!(s, "uncovered,\"{u}\"");
            }
            s
        }
    }
}

fn csv_or_json<T: serde::Serialize>(format: Format, header: &str, rows: &[T], line: impl Fn(&T) -> String) -> String {
    match format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(rows).unwrap()),
        Format::Csv => {
            let mut s = format!("{header}\n");
            for r in rows {
                s.push_str(&line(r));
                s.push('\n');
            }
            s
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_illuminate(
    format: Format,
    body: &Path,
    directions: Option<&str>,
    seed: u64,
    mode: ModeArg,
    vertex_cap: usize,
    lp_samples: usize,
    out: Option<&Path>,
    directions_out: Option<&Path>,
) -> anyhow::Result<u8> {
    let body = load_body(body)?;
    let (strategy, set, cert) = match directions {
        Some(spec) => {
            let set = load_directions(spec, body.dim())?;
            let cert = if body.is_piecewise_linear() {
                certify_vertices(&body, &set, vertex_cap)?
            } else {
                let pts = boundary_sample(&body, lp_samples, seed)?;
                certify_directions(&body, &set, Some(&pts))?
            };
            (set.label.to_string(), set, cert)
        }
        None => {
            let opts = AutoOptions { mode: mode.into(), vertex_cap, lp_samples, ..AutoOptions::default() };
            let out = illuminate_auto(&body, seed, &opts)?;
            (out.strategy.to_string(), out.directions, out.certificate)
        }
    };
    if let Some(p) = out {
        write_file(p, &cert.to_json())?;
    }
    if let Some(p) = directions_out {
        write_file(p, &set.to_text())?;
    }
    print!("{}", illuminate_summary(format, &strategy, &cert));
    Ok(if cert.is_certified() { 0 } else { 1 })
}

fn cmd_audit(format: Format, body: &Path, samples: u64, seed: u64, vertex_cap: usize) -> anyhow::Result<u8> {
    let body = load_body(body)?;
    let rows = audit::run(&body, samples, seed, vertex_cap)?;
    print!(
        "{}",
        csv_or_json(format, "check,samples,violations", &rows, |r| format!(
            "{},{},{}",
            r.check, r.samples, r.violations
        ))
    );
    Ok(if rows.iter().all(|r| r.violations == 0) { 0 } else { 1 })
}

#[derive(serde::Serialize)]
struct SimRow {
    n: usize,
    k: usize,
    q: String,
    q_float: f64,
    trials: u64,
    hits: u64,
    frequency: f64,
    sigma: f64,
    within_3_sigma: bool,
    rk_trials: usize,
    rk_distinct: usize,
    ek_covered: Option<bool>,
    ek_missing: Option<u64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    format: Format,
    n: Option<usize>,
    k: Option<usize>,
    trials: u64,
    seed: u64,
    chain: bool,
    threshold: bool,
    n_max: usize,
) -> anyhow::Result<u8> {
    if chain {
        if !(2..=10_000).contains(&n_max) {
            bail!("--n-max must lie in 2..=10000");
        }
        let rows = (2..=n_max)
            .flat_map(|n| (1..=n.div_ceil(2)).map(move |k| bound_chain(n, k)))
            .collect::<Result<Vec<_>, _>>()?;
        print!(
            "{}",
            csv_or_json(
                format,
                "n,k,ln_q,ln_stirling,ln_final,q_ge_stirling,stirling_ge_final,chain_holds",
                &rows,
                |r| format!(
                    "{},{},{:e},{:e},{:e},{},{},{}",
                    r.n,
                    r.k,
                    r.ln_q,
                    r.ln_stirling,
                    r.ln_final,
                    r.q_ge_stirling,
                    r.stirling_ge_final,
                    r.chain_holds()
                )
            )
        );
        return Ok(0);
    }
    if threshold {
        let scan = estimate_threshold_n(2..=n_max)?;
        match format {
            Format::Json => println!("{}", serde_json::to_string_pretty(&scan)?),
            Format::Csv => {
                println!("n,worst_k,worst_margin,holds_all_k,union_bound_ok");
                for r in &scan.rows {
                    println!("{},{},{:e},{},{}", r.n, r.worst_k, r.worst_margin, r.holds_all_k, r.union_bound_ok);
                }
                println!("n0,{}", scan.n0.map_or("none".to_string(), |v| v.to_string()));
            }
        }
        return Ok(0);
    }
    let Some(n) = n else { bail!("--n is required unless --chain or --threshold is given") };
    let ks: Vec<usize> = match k {
        Some(k) => vec![k],
        None => (1..=n.div_ceil(2)).collect(),
    };
    let mut rows = Vec::new();
    for k in ks {
        let q = trial_success_prob(n, k)?;
        let qf = to_f64(&q);
        // fixed pattern: the first k coordinates, alternating signs
        let pattern: Vec<i8> = (0..n)
            .map(|i| {
                if i >= k {
                    0
                } else if i % 2 == 0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let mc = monte_carlo_hits(n, k, &pattern, trials, seed)?;
        let rk = build_rk(n, k, None, seed)?;
        let ek = if n <= EK_EXHAUSTIVE_CAP { Some(check_ek(&rk, CoverageMode::default())?) } else { None };
        rows.push(SimRow {
            n,
            k,
            q: fmt_q(&q),
            q_float: qf,
            trials,
            hits: mc.hits,
            frequency: mc.frequency,
            sigma: mc.sigma,
            within_3_sigma: mc.within_sigmas(qf, 3.0),
            rk_trials: rk.len(),
            rk_distinct: rk.distinct_count(),
            ek_covered: ek.as_ref().map(|e| e.covered),
            ek_missing: ek.as_ref().map(|e| e.missing_count),
        });
    }
    let opt = |v: Option<String>| v.unwrap_or_default();
    print!(
        "{}",
        csv_or_json(
            format,
            "n,k,q,q_float,trials,hits,frequency,sigma,within_3_sigma,rk_trials,rk_distinct,ek_covered,ek_missing",
            &rows,
            |r| format!(
                "{},{},{},{:e},{},{},{:e},{:e},{},{},{},{},{}",
                r.n,
                r.k,
                r.q,
                r.q_float,
                r.trials,
                r.hits,
                r.frequency,
                r.sigma,
                r.within_3_sigma,
                r.rk_trials,
                r.rk_distinct,
                opt(r.ek_covered.map(|v| v.to_string())),
                opt(r.ek_missing.map(|v| v.to_string()))
            )
        )
    );
    Ok(0)
}

fn cmd_vertices(format: Format, body: &Path, cap: usize) -> anyhow::Result<u8> {
    let body = load_body(body)?;
    let verts = enumerate_vertices(&body, cap)?;
    let rows: Vec<Vec<String>> = verts.iter().map(|v| v.iter().map(fmt_q).collect()).collect();
    let header: String = (1..=body.dim()).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    print!("{}", csv_or_json(format, &header, &rows, |r| r.join(",")));
    Ok(0)
}

fn cmd_norm(format: Format, body: &Path, point: &str) -> anyhow::Result<u8> {
    let body = load_body(body)?;
    let x = point.split(',').map(|s| parse_q(s.trim())).collect::<Result<Vec<_>, _>>()?;
    let value = body.norm(&x)?;
    match format {
        Format::Json => println!("{}", json!({ "point": point_text(&x), "norm": value.to_string() })),
        Format::Csv => println!("point,norm\n\"{}\",{value}", point_text(&x)),
    }
    Ok(0)
}

fn cmd_distance(format: Format, body: &Path) -> anyhow::Result<u8> {
    let body = load_body(body)?;
    let d = body.distance_to_cube();
    match format {
        Format::Json => println!("{}", json!({ "n": body.dim(), "distance": d.to_string(), "cube": body.is_cube() })),
        Format::Csv => println!("n,distance,cube\n{},{d},{}", body.dim(), body.is_cube()),
    }
    Ok(0)
}

fn cmd_min_ill(
    format: Format,
    body: &Path,
    pool: Option<&Path>,
    radius: i64,
    out: Option<&Path>,
) -> anyhow::Result<u8> {
    let body = load_body(body)?;
    let pool = match pool {
        Some(p) => {
            parse_directions(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?, body.dim())?
        }
        None => {
            if !(1..=4).contains(&radius) {
                bail!("--radius must lie in 1..=4");
            }
            integer_pool(body.dim(), radius)?
        }
    };
    let found = match min_illumination_search(&body, &pool) {
        Ok(m) => m,
        Err(illume_core::Error::Uncoverable(v)) => {
            eprintln!("no pool direction illuminates vertex {v}");
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(p) = out {
        write_file(p, &found.subset.to_text())?;
    }
    match format {
        Format::Json => {
            let v = json!({ "size": found.size, "pool": pool.len(), "directions": found.subset.vectors() });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Format::Csv => {
            println!("size,{}", found.size);
            for d in found.subset.vectors() {
                println!("{}", d.iter().map(i64::to_string).collect::<Vec<_>>().join(","));
            }
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let f = cli.format;
    match cli.command {
        Command::Illuminate { body, directions, seed, mode, vertex_cap, lp_samples, out, directions_out } => {
            cmd_illuminate(
                f,
                &body,
                directions.as_deref(),
                seed,
                mode,
                vertex_cap,
                lp_samples,
                out.as_deref(),
                directions_out.as_deref(),
            )
        }
        Command::Audit { body, samples, seed, vertex_cap } => cmd_audit(f, &body, samples, seed, vertex_cap),
        Command::Simulate { n, k, trials, seed, chain, threshold, n_max } => {
            cmd_simulate(f, n, k, trials, seed, chain, threshold, n_max)
        }
        Command::Vertices { body, cap } => cmd_vertices(f, &body, cap),
        Command::Norm { body, point } => cmd_norm(f, &body, &point),
        Command::Distance { body } => cmd_distance(f, &body),
        Command::MinIll { body, pool, radius, out } => cmd_min_ill(f, &body, pool.as_deref(), radius, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
