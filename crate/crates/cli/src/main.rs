//! `pdbrep`: batch front end over the JSON formats of the `pdbrep` library.
//!
//! Exit codes: 0 success / holds / equal, 1 property violated or
//! distributions unequal, 2 usage or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use pdbrep::compilers::{
    assign_divergent_probs, assign_representable_probs, compile_bid, compile_bid_to_ti, dagger_check,
    dagger_compile, eliminate_condition, monotone_to_sjfcq, verify_representation_at, DaggerInput, DaggerVerdict,
    Representation,
};
use pdbrep::diagnostics::{
    disjoint_bound_table, edge_graph_cq_rep, edge_graph_ti, edge_graph_ucq_rep, finite_moments_report,
    image_moment_bound, max_world_check, moment_inequality_check, mutual_exclusive_witness, view_prob_bound,
    EdgeGraphSpec,
};
use pdbrep::io;
use pdbrep::probspace::{
    condition_distribution, enumerate_worlds, pushforward, sample, Distribution,
    FactFamily, Pdb, Truncation, DEFAULT_PRECISION,
};
use pdbrep::relmodel::{apply_view, classify_fragment, format_formula, parse_formula, satisfies, Formula, View};

#[derive(Parser)]
#[command(name = "pdbrep", version, about = "Exact tools for probabilistic database representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Source {
    /// PDB spec file.
    #[arg(long)]
    pdb: Option<PathBuf>,
    /// View file (named queries).
    #[arg(long)]
    view: Option<PathBuf>,
    /// Condition sentence applied before the view.
    #[arg(long)]
    condition: Option<String>,
    /// Number of leading facts/blocks/worlds of a countable PDB.
    #[arg(long)]
    truncate: Option<usize>,
}

impl Source {
    fn trunc(&self) -> Truncation {
        self.truncate.map_or(Truncation::Full, Truncation::First)
    }

    fn pdb(&self) -> Result<Pdb> {
        let path = self.pdb.as_deref().ok_or_else(|| anyhow!("--pdb is required"))?;
        Ok(io::parse_pdb(&read_json(path)?)?)
    }

    fn view(&self) -> Result<Option<View>> {
        self.view.as_deref().map(|p| Ok(io::parse_view(&read_json(p)?)?)).transpose()
    }

    fn condition(&self) -> Result<Option<Formula>> {
        self.condition.as_deref().map(|c| Ok(io::parse_condition(c)?)).transpose()
    }

    /// Window law of the PDB, conditioned and pushed forward as requested.
    fn law(&self) -> Result<Distribution> {
        let mut d = enumerate_worlds(&self.pdb()?, self.trunc())?;
        if let Some(c) = self.condition()? {
            d = condition_distribution(&d, &c)?;
        }
        if let Some(v) = self.view()? {
            d = pushforward(&d, &v)?;
        }
        Ok(d)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    /// Unconditioned TI representation.
    Ti,
    /// Conditioned TI representation.
    Cti,
    /// Self-join-free CQ over TI (monotone views only).
    SjfcqTi,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagKind {
    MomentInequality,
    ViewBound,
    Moments,
    Mutex,
    MaxWorld,
    EdgeTi,
    EdgeUcq,
    EdgeCq,
    DisjointTable,
    AssignRepresentable,
    AssignDivergent,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and print its normal rendering and fragment.
    Parse { formula: String },
    /// Evaluate a view (or a sentence given by --condition) on an instance.
    Eval {
        #[command(flatten)]
        src: Source,
        /// Instance file (array of facts).
        #[arg(long)]
        instance: PathBuf,
    },
    /// Enumerate the possible worlds of a PDB window.
    Worlds {
        #[command(flatten)]
        src: Source,
    },
    /// Push a PDB (optionally conditioned) through a view.
    Push {
        #[command(flatten)]
        src: Source,
    },
    /// Compile a PDB into a representation and verify it.
    Compile {
        #[command(flatten)]
        src: Source,
        #[arg(long, value_enum)]
        target: Target,
        /// Segment size for explicit PDBs.
        #[arg(long, default_value_t = 1)]
        c: usize,
        #[arg(long)]
        no_verify: bool,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u32,
    },
    /// Compare a representation's law with a PDB (optionally conditioned / pushed forward).
    Verify {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        rep: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: u32,
    },
    /// Moments E(|D|^j) for j = 1..=k (of the view image, if --view is given).
    Moments {
        #[command(flatten)]
        src: Source,
        #[arg(short = 'k', default_value_t = 1)]
        k: u32,
    },
    /// Check the summability condition for segment size c.
    CheckDagger {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 1)]
        c: usize,
        /// Horizon of the partial sums.
        #[arg(short = 'n', default_value_t = 20)]
        n: usize,
    },
    /// Draw instances.
    Sample {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'n', default_value_t = 1)]
        n: usize,
    },
    /// Bounds, witnesses and fixture constructions.
    Diag {
        #[arg(value_enum)]
        kind: DiagKind,
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        instance: Option<PathBuf>,
        /// World list file (array of instances).
        #[arg(long)]
        worlds: Option<PathBuf>,
        #[arg(short = 'k', default_value_t = 4)]
        k: u32,
        /// Arity constant of the domain-disjoint table.
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(short = 'n', default_value_t = 12)]
        n: usize,
    },
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    io::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Result of a command: JSON for stdout and whether the checked property held.
struct Outcome {
    out: Value,
    ok: bool,
}

impl Outcome {
    fn ok(out: Value) -> Self {
        Outcome { out, ok: true }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Parse { formula } => {
            let f = parse_formula(&formula)?;
            Ok(Outcome::ok(json!({
                "formula": format_formula(&f),
                "fragment": format!("{:?}", classify_fragment(&f)),
                "free_variables": f.free_variables(),
                "sentence": f.is_sentence(),
            })))
        }
        Command::Eval { src, instance } => {
            let inst = io::parse_instance(&read_json(&instance)?)?;
            match (src.view()?, src.condition()?) {
                (Some(v), _) => Ok(Outcome::ok(io::instance_json(&apply_view(&v, &inst)?))),
                (None, Some(c)) => {
                    let holds = satisfies(&c, &inst)?;
                    Ok(Outcome { out: json!({ "satisfied": holds }), ok: holds })
                }
                (None, None) => bail!("eval needs --view or --condition"),
            }
        }
        Command::Worlds { src } => Ok(Outcome::ok(io::distribution_json(&enumerate_worlds(&src.pdb()?, src.trunc())?))),
        Command::Push { src } => Ok(Outcome::ok(io::distribution_json(&src.law()?))),
        Command::Compile { src, target, c, no_verify, precision } => compile(&src, target, c, no_verify, precision),
        Command::Verify { src, rep, precision } => {
            let rep = io::parse_representation(&read_json(&rep)?)?;
            let eq = verify_representation_at(&src.law()?, &rep, src.trunc(), precision)?;
            Ok(Outcome { ok: eq.is_equal(), out: io::equality_json(&eq) })
        }
        Command::Moments { src, k } => {
            let pdb = src.pdb()?;
            let out = match src.view()? {
                None => finite_moments_report(&pdb, k, src.trunc())?.iter().map(io::moment_report_json).collect(),
                Some(v) => {
                    let schema = match &pdb {
                        Pdb::Ti(t) => t.schema.clone(),
                        Pdb::Bid(b) => b.schema.clone(),
                        _ => bail!("image moment bounds need a TI or BID base"),
                    };
                    (1..=k)
                        .map(|j| Ok(io::image_moment_json(&image_moment_bound(&pdb, &schema, &v, j, src.trunc())?)))
                        .collect::<Result<Vec<_>>>()?
                }
            };
            Ok(Outcome::ok(Value::Array(out)))
        }
        Command::CheckDagger { src, c, n } => {
            if c == 0 {
                bail!("--c must be positive");
            }
            let pdb = src.pdb()?;
            let report = match &pdb {
                Pdb::Ti(ti) => match &ti.family {
                    FactFamily::Parametric { kind, .. } => dagger_check(DaggerInput::Ti(kind), c, n),
                    FactFamily::Explicit(_) => {
                        dagger_check(DaggerInput::Explicit(&enumerate_worlds(&pdb, Truncation::Full)?), c, n)
                    }
                },
                Pdb::Family(f) => dagger_check(DaggerInput::Worlds(*f), c, n),
                _ => dagger_check(DaggerInput::Explicit(&enumerate_worlds(&pdb, Truncation::Full)?), c, n),
            };
            Ok(Outcome { ok: report.verdict == DaggerVerdict::Holds, out: io::dagger_report_json(&report) })
        }
        Command::Sample { src, seed, n } => {
            let pdb = src.pdb()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws = (0..n)
                .map(|_| Ok(io::instance_json(&sample(&pdb, src.trunc(), &mut rng)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome::ok(Value::Array(draws)))
        }
        Command::Diag { kind, src, instance, worlds, k, r, n } => diag(kind, &src, instance, worlds, k, r, n),
    }
}

fn compile(src: &Source, target: Target, c: usize, no_verify: bool, precision: u32) -> Result<Outcome> {
    let pdb = src.pdb()?;
    let (rep, report): (Representation, Value) = match (target, &pdb) {
        (Target::Cti, Pdb::Bid(bid)) => {
            let (rep, r) = compile_bid(bid)?;
            (rep, io::bid_report_json(&r))
        }
        (Target::Ti, Pdb::Bid(bid)) => {
            let (rep, r, e) = compile_bid_to_ti(bid)?;
            (rep, json!({ "bid": io::bid_report_json(&r), "elimination": io::elimination_json(&e) }))
        }
        (Target::Ti, Pdb::Ti(ti)) => {
            let cond = src.condition()?.ok_or_else(|| anyhow!("compiling a TI to ti needs --condition"))?;
            let (rep, e) = eliminate_condition(ti, &cond)?;
            (rep, io::elimination_json(&e))
        }
        (Target::Cti, Pdb::Explicit(d)) => {
            let (rep, r) = dagger_compile(d, c)?;
            (rep, io::segmentation_report_json(&r))
        }
        (Target::Ti, Pdb::Explicit(d)) => {
            let (cond, r) = dagger_compile(d, c)?;
            let (rep, e) = eliminate_condition(&cond.base, cond.condition.as_ref().expect("conditioned"))?;
            let view = pdbrep::compilers::compose_views(&cond.view, &rep.view)?;
            let rep = Representation::new(rep.base, None, view)?;
            (rep, json!({ "segmentation": io::segmentation_report_json(&r), "elimination": io::elimination_json(&e) }))
        }
        (Target::SjfcqTi, Pdb::Ti(ti)) => {
            let view = src.view()?.ok_or_else(|| anyhow!("sjfcq-ti needs --view"))?;
            (monotone_to_sjfcq(ti, &view)?, Value::Null)
        }
        _ => bail!("unsupported combination of target and PDB kind"),
    };
    let mut out = json!({ "representation": io::representation_json(&rep), "report": report });
    if no_verify {
        return Ok(Outcome::ok(out));
    }
    // The source law: a compiled TI absorbs --condition; sjfcq absorbs --view.
    let mut law = enumerate_worlds(&pdb, src.trunc())?;
    if let Some(cond) = src.condition()? {
        law = condition_distribution(&law, &cond)?;
    }
    if let (Target::SjfcqTi, Some(v)) = (target, src.view()?) {
        law = pushforward(&law, &v)?;
    }
    let eq = verify_representation_at(&law, &rep, Truncation::Full, precision)?;
    out["verify"] = io::equality_json(&eq);
    Ok(Outcome { ok: eq.is_equal(), out })
}

fn edge_spec(src: &Source) -> Result<(EdgeGraphSpec, String)> {
    let Pdb::Ti(ti) = src.pdb()? else { bail!("edge graphs are given as a TI over one binary relation") };
    let rels: Vec<(String, usize)> = ti.schema.relations().map(|(r, a)| (r.to_string(), a)).collect();
    match rels.as_slice() {
        [(r, 2)] => Ok((EdgeGraphSpec::from_ti(&ti)?, r.clone())),
        _ => bail!("edge graphs are given as a TI over one binary relation"),
    }
}

fn world_list(path: Option<PathBuf>) -> Result<Vec<pdbrep::relmodel::Instance>> {
    let path = path.ok_or_else(|| anyhow!("--worlds is required"))?;
    let v = read_json(&path)?;
    let arr = v.as_array().ok_or_else(|| anyhow!("world list must be an array of instances"))?;
    Ok(arr.iter().map(io::parse_instance).collect::<Result<_, _>>()?)
}

fn diag(
    kind: DiagKind,
    src: &Source,
    instance: Option<PathBuf>,
    worlds: Option<PathBuf>,
    k: u32,
    r: u32,
    n: usize,
) -> Result<Outcome> {
    let ti = || -> Result<pdbrep::probspace::TiPdb> {
        match src.pdb()? {
            Pdb::Ti(t) => Ok(t),
            _ => bail!("this diagnostic needs a TI-PDB"),
        }
    };
    match kind {
        DiagKind::MomentInequality => {
            let checks = moment_inequality_check(&ti()?, k)?;
            let ok = checks.iter().all(|c| c.holds);
            Ok(Outcome { ok, out: Value::Array(checks.iter().map(io::moment_check_json).collect()) })
        }
        DiagKind::ViewBound => {
            let view = src.view()?.ok_or_else(|| anyhow!("--view is required"))?;
            let target = io::parse_instance(&read_json(&instance.ok_or_else(|| anyhow!("--instance is required"))?)?)?;
            let rep = view_prob_bound(&ti()?, &view, &target)?;
            Ok(Outcome { ok: rep.holds, out: io::bound_report_json(&rep) })
        }
        DiagKind::Moments => {
            let reps = finite_moments_report(&src.pdb()?, k, src.trunc())?;
            Ok(Outcome::ok(Value::Array(reps.iter().map(io::moment_report_json).collect())))
        }
        DiagKind::Mutex => {
            let w = mutual_exclusive_witness(&src.law()?);
            Ok(Outcome::ok(json!({ "witness": w.as_ref().map(io::witness_json) })))
        }
        DiagKind::MaxWorld => Ok(Outcome::ok(io::witness_json(&max_world_check(&src.law()?)))),
        DiagKind::EdgeTi => {
            let (spec, rel) = edge_spec(src)?;
            Ok(Outcome::ok(io::ti_json(&edge_graph_ti(&spec, &rel)?)))
        }
        DiagKind::EdgeUcq | DiagKind::EdgeCq => {
            let (spec, rel) = edge_spec(src)?;
            let rep = if matches!(kind, DiagKind::EdgeUcq) {
                edge_graph_ucq_rep(&spec, &rel)?
            } else {
                edge_graph_cq_rep(&spec, &rel)?
            };
            Ok(Outcome::ok(io::representation_json(&rep)))
        }
        DiagKind::DisjointTable => {
            let ns: Vec<f64> = (1..=n as i32).map(|j| 10f64.powi(j)).collect();
            Ok(Outcome::ok(io::disjoint_rows_json(&disjoint_bound_table(r, &ns))))
        }
        DiagKind::AssignRepresentable => {
            let a = assign_representable_probs(&world_list(worlds)?)?;
            Ok(Outcome::ok(io::representable_json(&a)))
        }
        DiagKind::AssignDivergent => {
            let a = assign_divergent_probs(&world_list(worlds)?)?;
            Ok(Outcome::ok(io::divergent_json(&a)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) => {
            println!("{}", io::to_string(&o.out));
            if o.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
