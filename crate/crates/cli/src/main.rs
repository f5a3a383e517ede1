//! `ukh`: universal Khovanov homology from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 malformed input, 3 a violated
//! internal invariant (d² ≠ 0, benchmark arms disagreeing, failed selftest).

mod selftest;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ukh_core::cobordism::{parse_surface, reduce_half_t, reduce_z};
use ukh_core::complex::build_cube;
use ukh_core::diagram::{parse_pd, Basepoint, LinkDiagram};
use ukh_core::homology::{naive_numeric, promote_numeric, state_sum, HomologyTable};
use ukh_core::links;
use ukh_core::promote::{load_promotion, NumericPromotion, PresetSpec};
use ukh_core::reduce::{reduce_pipeline, ReducedComplex};
use ukh_core::{QT, ZH};

#[derive(Parser)]
#[command(name = "ukh", version, about = "Exact universal Khovanov homology of links")]
struct Cli {
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, env = "UKH_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Homology table of a promoted reduced complex.
    Homology {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        promo: Promo,
    },
    /// Unnormalized Jones polynomial from the Kauffman state sum.
    Jones {
        #[command(flatten)]
        input: Input,
    },
    /// Minimal complex over Z[H].
    Reduce {
        #[command(flatten)]
        input: Input,
    },
    /// Normal form of a surface expression such as "S(g=2;in0)".
    Surface {
        #[arg(long, value_enum, default_value_t = SurfaceRing::ZH)]
        ring: SurfaceRing,
        expr: String,
    },
    /// Times the naive TQFT complex against the reduction pipeline.
    Bench {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "standard")]
        preset: String,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
    /// Runs the built-in invariant suite.
    Selftest,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SurfaceRing {
    #[value(name = "ZH")]
    ZH,
    #[value(name = "ZhalfT")]
    ZhalfT,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source")]
struct Source {
    /// PD code, e.g. "PD[X[1,5,2,4],X[3,1,4,6],X[5,3,6,2]]" or "U".
    #[arg(long)]
    pd: Option<String>,
    /// Name from the bundled link table.
    #[arg(long)]
    link: Option<String>,
    /// File holding a PD code.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct Input {
    #[command(flatten)]
    source: Source,
    /// Edge label (or `U<k>` for a free loop) carrying the basepoint.
    #[arg(long)]
    basepoint: Option<String>,
}

#[derive(Args)]
struct Promo {
    /// Preset such as standard, lee, f_h(H=2), f_ht(h=1,t=-2), genus_le(2).
    #[arg(long, conflicts_with = "promotion")]
    preset: Option<String>,
    /// JSON file with a custom promotion.
    #[arg(long)]
    promotion: Option<PathBuf>,
    /// Values for the variables of a custom promotion, e.g. `--set H=2`.
    #[arg(long = "set", value_name = "VAR=VALUE")]
    set: Vec<String>,
}

enum Failure {
    Io(String),
    Parse(String),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Parse(m) | Failure::Invariant(m) => m,
        }
    }
}

fn parse_err(e: impl std::fmt::Display) -> Failure {
    Failure::Parse(e.to_string())
}

fn invariant_err(e: impl std::fmt::Display) -> Failure {
    Failure::Invariant(e.to_string())
}

fn load_diagram(input: &Input) -> Result<(String, LinkDiagram), Failure> {
    let s = &input.source;
    let (label, d) = if let Some(pd) = &s.pd {
        (pd.clone(), parse_pd(pd).map_err(parse_err)?)
    } else if let Some(name) = &s.link {
        let e = links::entry(name).ok_or_else(|| {
            Failure::Parse(format!("unknown link {name:?}; known: {}", links::names().join(", ")))
        })?;
        (e.name.clone(), parse_pd(&e.pd).map_err(parse_err)?)
    } else if let Some(path) = &s.file {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        (path.display().to_string(), parse_pd(text.trim()).map_err(parse_err)?)
    } else {
        unreachable!("clap enforces one input source")
    };
    let d = match &input.basepoint {
        Some(bp) => d.with_basepoint(bp.parse::<Basepoint>().map_err(parse_err)?).map_err(parse_err)?,
        None => d,
    };
    Ok((label, d))
}

fn reduced(d: &LinkDiagram) -> Result<ReducedComplex, Failure> {
    let rc = reduce_pipeline(&build_cube(d)).map_err(invariant_err)?;
    rc.check_invariants().map_err(Failure::Invariant)?;
    Ok(rc)
}

fn load_promo(p: &Promo) -> Result<(String, NumericPromotion), Failure> {
    if let Some(path) = &p.promotion {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let any = load_promotion(&text).map_err(parse_err)?;
        let mut values = std::collections::BTreeMap::new();
        for kv in &p.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Parse(format!("expected VAR=VALUE, got {kv:?}")))?;
            let mut chars = k.trim().chars();
            let (Some(var), None) = (chars.next(), chars.next()) else {
                return Err(Failure::Parse(format!("variable name {k:?} must be one letter")));
            };
            values.insert(var, v.trim().parse().map_err(|_| Failure::Parse(format!("bad value {v:?}")))?);
        }
        let label = format!("custom({})", path.display());
        return Ok((label, any.specialize(&values).map_err(parse_err)?));
    }
    if !p.set.is_empty() {
        return Err(Failure::Parse("--set applies only to --promotion; give preset values inline".into()));
    }
    let spec: PresetSpec = p.preset.as_deref().unwrap_or("standard").parse().map_err(parse_err)?;
    Ok((spec.to_string(), spec.promotion().map_err(parse_err)?))
}

fn homology_table(rc: &ReducedComplex, p: &NumericPromotion) -> Result<HomologyTable, Failure> {
    let c = promote_numeric(rc, p);
    c.check_d_squared().map_err(|f| Failure::Invariant(format!("d² ≠ 0 after promotion: {f:?}")))?;
    c.homology().map_err(invariant_err)
}

fn ring_name(p: &NumericPromotion) -> &'static str {
    match p {
        NumericPromotion::Z(_) => "Z",
        NumericPromotion::Q(_) => "Q",
    }
}

fn graded(p: &NumericPromotion) -> bool {
    match p {
        NumericPromotion::Z(z) => z.graded,
        NumericPromotion::Q(q) => q.graded,
    }
}

fn cmd_homology(input: &Input, promo: &Promo, fmt: Format) -> Result<String, Failure> {
    let (label, d) = load_diagram(input)?;
    let (preset, p) = load_promo(promo)?;
    let table = homology_table(&reduced(&d)?, &p)?;
    Ok(match fmt {
        Format::Json => pretty(&json!({
            "link": label,
            "basepoint": d.basepoint().to_string(),
            "preset": preset,
            "ring": ring_name(&p),
            "graded": graded(&p),
            "homology": table.to_json(),
        })),
        Format::Text => {
            let mut s = format!("# {label}  preset {preset} over {}\n", ring_name(&p));
            s.push_str(&table.to_text_over(ring_name(&p)));
            s.push_str(&format!("poincare: {}\n", table.poincare()));
            s
        }
    })
}

fn cmd_jones(input: &Input, fmt: Format) -> Result<String, Failure> {
    let (label, d) = load_diagram(input)?;
    let j = state_sum(&d);
    Ok(match fmt {
        Format::Json => pretty(&json!({"link": label, "jones": j.to_string()})),
        Format::Text => format!("{j}\n"),
    })
}

fn cmd_reduce(input: &Input, fmt: Format) -> Result<String, Failure> {
    let (label, d) = load_diagram(input)?;
    let rc = reduced(&d)?;
    Ok(match fmt {
        Format::Json => pretty(&rc.complex.to_json()),
        Format::Text => {
            let c = &rc.complex;
            let mut s = format!("# {label}: {} generators over Z[H]\n", rc.n_generators());
            for k in 0..c.q.len() {
                let qs: Vec<String> = c.q[k].iter().map(|q| q.to_string()).collect();
                s.push_str(&format!("h={}: rank {} q=[{}]\n", c.h_min + k as i64, c.rank(k), qs.join(",")));
            }
            for (k, m) in c.diffs.iter().enumerate() {
                for (r, col, x) in m.iter() {
                    s.push_str(&format!("d{}[{r},{col}] = {x}\n", c.h_min + k as i64));
                }
            }
            s
        }
    })
}

fn cmd_surface(ring: SurfaceRing, expr: &str, fmt: Format) -> Result<String, Failure> {
    let (ring_label, nf) = match ring {
        SurfaceRing::ZH => {
            let m = parse_surface::<ZH>(expr).map_err(parse_err)?;
            ("ZH", reduce_z(&m).map_err(invariant_err)?.to_string())
        }
        SurfaceRing::ZhalfT => {
            let m = parse_surface::<QT>(expr).map_err(parse_err)?;
            ("ZhalfT", reduce_half_t(&m).to_string())
        }
    };
    Ok(match fmt {
        Format::Json => pretty(&json!({"ring": ring_label, "input": expr, "normal_form": nf})),
        Format::Text => format!("{nf}\n"),
    })
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn cmd_bench(input: &Input, preset: &str, runs: usize, fmt: Format) -> Result<String, Failure> {
    let (label, d) = load_diagram(input)?;
    if d.n_crossings() > 12 {
        return Err(Failure::Parse(format!("naive arm limited to 12 crossings, got {}", d.n_crossings())));
    }
    let spec: PresetSpec = preset.parse().map_err(parse_err)?;
    let p = spec.promotion().map_err(parse_err)?;
    let f = spec
        .frobenius()
        .map_err(parse_err)?
        .ok_or_else(|| Failure::Parse(format!("preset {spec} has no rank-2 Frobenius algebra to compare against")))?;
    let runs = runs.max(1);
    let cube = build_cube(&d);
    let (mut naive_t, mut fast_t) = (Vec::new(), Vec::new());
    let (mut naive, mut fast) = (None, None);
    for _ in 0..runs {
        let t = Instant::now();
        let h = naive_numeric(&cube, &f).map_err(invariant_err)?.homology().map_err(invariant_err)?;
        naive_t.push(t.elapsed());
        naive = Some(h);
        let t = Instant::now();
        let rc = reduce_pipeline(&cube).map_err(invariant_err)?;
        let h = promote_numeric(&rc, &p).homology().map_err(invariant_err)?;
        fast_t.push(t.elapsed());
        fast = Some(h);
    }
    let (naive, fast) = (naive.unwrap(), fast.unwrap());
    if naive != fast {
        return Err(Failure::Invariant(format!(
            "arms disagree on {label}:\nnaive:\n{}\npipeline:\n{}",
            naive.to_text(),
            fast.to_text()
        )));
    }
    let (tn, tp) = (median(naive_t), median(fast_t));
    let ratio = tn.as_secs_f64() / tp.as_secs_f64().max(1e-9);
    // Timings vary between runs, so only the json form carries them raw.
    Ok(match fmt {
        Format::Json => pretty(&json!({
            "link": label,
            "crossings": d.n_crossings(),
            "preset": spec.to_string(),
            "runs": runs,
            "agree": true,
            "naive_ms": tn.as_secs_f64() * 1e3,
            "pipeline_ms": tp.as_secs_f64() * 1e3,
            "speedup": ratio,
        })),
        Format::Text => format!(
            "{label} ({} crossings, preset {spec}): arms agree\nnaive    {tn:>12.3?}\npipeline {tp:>12.3?}\nspeedup  {ratio:.1}x\n",
            d.n_crossings()
        ),
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Homology { input, promo } => cmd_homology(input, promo, cli.format),
        Command::Jones { input } => cmd_jones(input, cli.format),
        Command::Reduce { input } => cmd_reduce(input, cli.format),
        Command::Surface { ring, expr } => cmd_surface(*ring, expr, cli.format),
        Command::Bench { input, preset, runs } => cmd_bench(input, preset, *runs, cli.format),
        Command::Selftest => {
            let (report, ok) = selftest::run(cli.format == Format::Json);
            if ok {
                Ok(report)
            } else {
                print!("{report}");
                Err(Failure::Invariant("selftest failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("ukh: cannot size thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let out = match run(&cli) {
        Ok(s) => s,
        Err(f) => {
            eprintln!("ukh: {}", f.message());
            return ExitCode::from(f.code());
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, out) {
                eprintln!("ukh: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{out}"),
    }
    ExitCode::SUCCESS
}
