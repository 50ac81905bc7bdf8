//! `rssl`: dimensions, learners, constructions, bounds and experiments over
//! JSON problem instances.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rssl_core::bench::{
    self, agnostic_multiplier_experiment, proper_rule_lower_bound, separation_experiment, ExperimentConfig,
    LearnerId, Prepared, SampleBudget, SeparationConfig,
};
use rssl_core::compress::{bernstein_bound, graepel_bound};
use rssl_core::constructions::{self, Construction};
use rssl_core::dims::{self, SearchLimits};
use rssl_core::io;
use rssl_core::partial::{partial_realizable_learn, to_partial};
use rssl_core::robust::{learn_known_support, Grass, RobustLearner};
use rssl_core::sample::{derive_seed, sample, sample_marginal};
use rssl_core::{PacParams, Predictor, ProblemInstance};

#[derive(Parser)]
#[command(name = "rssl", version, about = "Robust semi-supervised learning over finite classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// VC, dual VC, VC_U and RS_U dimensions of an instance.
    Dims(DimsArgs),
    /// Run a learner on an instance.
    Learn(LearnArgs),
    /// Generate a construction.
    Construct {
        #[command(subcommand)]
        family: ConstructCmd,
    },
    /// Tabulate compression generalization bounds.
    Bounds(BoundsArgs),
    /// Run experiments.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentCmd,
    },
}

#[derive(Args)]
struct DimsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, conflicts_with = "table")]
    json: bool,
    #[arg(long)]
    table: bool,
    #[arg(long)]
    witnesses: bool,
    /// Lift the exhaustive-search size guard.
    #[arg(long)]
    override_guard: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    PartialRealizable,
    Grass,
    RobustSupervised,
    KnownSupport,
    #[value(name = "robust-01")]
    Robust01,
}

impl From<LearnerArg> for LearnerId {
    fn from(l: LearnerArg) -> Self {
        match l {
            LearnerArg::PartialRealizable => LearnerId::PartialRealizable,
            LearnerArg::Grass => LearnerId::Grass,
            LearnerArg::RobustSupervised => LearnerId::RobustSupervised,
            LearnerArg::KnownSupport => LearnerId::KnownSupport,
            LearnerArg::Robust01 => LearnerId::Robust01,
        }
    }
}

#[derive(Args)]
struct LearnArgs {
    #[arg(value_enum)]
    learner: LearnerArg,
    #[arg(long)]
    input: PathBuf,
    /// Labeled sample file `[[x, y], ...]`; drawn from the instance's
    /// distribution when absent.
    #[arg(long)]
    sample: Option<PathBuf>,
    /// Unlabeled sample file `[x, ...]`; drawn when absent.
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    ml: usize,
    #[arg(long, default_value_t = 400)]
    mu: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_factor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Support for known-support learning; defaults to the distribution's.
    #[arg(long, value_delimiter = ',')]
    support: Option<Vec<usize>>,
    #[arg(long)]
    emit_provenance: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ConstructCmd {
    Gap {
        #[arg(long)]
        n: usize,
        /// Target labels per block as a 0/1 string.
        #[arg(long)]
        sigma: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    Allfns {
        #[arg(long)]
        m: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Writes one instance per member plus `manifest.json` into a directory.
    Improper {
        #[arg(long)]
        m: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Writes one instance per member plus `manifest.json` into a directory.
    AgnosticSigma {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    ThreeHalves {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct BoundsArgs {
    /// Compression set size.
    #[arg(long, default_value_t = 4)]
    kappa: usize,
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024,4096")]
    m: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    empirical_risk: f64,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Minimal-budget search from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Labeled budgets of GRASS and the supervised learner on the gap family.
    Separation {
        #[arg(long, value_delimiter = ',', default_value = "4,8,12")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Unlabeled budget; defaults to 50 * n * ceil(1 / epsilon).
        #[arg(long)]
        mu: Option<usize>,
        #[arg(long, default_value_t = 4096)]
        max_labeled: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// GRASS risk against the optimum on a noisy family.
    Agnostic {
        #[arg(long, value_enum, default_value = "agnostic-sigma")]
        family: NoisyFamily,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 3.0)]
        alpha_factor: f64,
        #[arg(long, default_value_t = 20)]
        ml: usize,
        #[arg(long, default_value_t = 200)]
        mu: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exhaustive failure bound for proper rules on the improper family.
    ProperBound {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0.125)]
        risk_threshold: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NoisyFamily {
    AgnosticSigma,
    ThreeHalves,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Dims(a) => dims_cmd(a),
        Command::Learn(a) => learn_cmd(a),
        Command::Construct { family } => construct_cmd(family),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Experiment { kind } => experiment_cmd(kind),
    }
}

fn read_instance(path: &Path) -> Result<ProblemInstance> {
    io::read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn dims_cmd(a: DimsArgs) -> Result<()> {
    let inst = read_instance(&a.input)?;
    let limits = SearchLimits {
        override_guard: a.override_guard,
        ..SearchLimits::default()
    };
    let report = dims::dimension_report(&inst.hypotheses, &inst.perturbation, limits)?;
    if a.json {
        let mut v = serde_json::to_value(&report)?;
        if !a.witnesses {
            v.as_object_mut().expect("report is an object").remove("witnesses");
        }
        println!("{}", serde_json::to_string_pretty(&v)?);
        return Ok(());
    }
    let w = &report.witnesses;
    let rows = [
        ("vc", report.vc, format!("{:?}", w.vc)),
        ("dual_vc", report.dual_vc, format!("rows {:?}", w.dual_vc)),
        ("vc_u", report.vc_u, format!("{:?}", w.vc_u)),
        (
            "rs_u",
            report.rs_u,
            format!("{:?} z+ {:?} z- {:?}", w.rs_u.points, w.rs_u.z_plus, w.rs_u.z_minus),
        ),
    ];
    for (name, value, witness) in rows {
        if a.witnesses {
            println!("{name:<8} {value:>3}  {witness}");
        } else {
            println!("{name:<8} {value:>3}");
        }
    }
    Ok(())
}

fn learn_cmd(a: LearnArgs) -> Result<()> {
    let inst = read_instance(&a.input)?;
    let learner = LearnerId::from(a.learner);
    let params = PacParams::new(a.epsilon, a.delta, a.alpha_factor)?;
    let d = &inst.distribution;
    let s_l = match &a.sample {
        Some(p) => io::read_sample(p).with_context(|| format!("reading sample {}", p.display()))?,
        None => sample(d, a.ml, derive_seed(a.seed, 0)),
    };
    let s_u = match &a.unlabeled {
        Some(p) => io::read_unlabeled(p).with_context(|| format!("reading unlabeled sample {}", p.display()))?,
        None if learner == LearnerId::Grass => sample_marginal(d, a.mu, derive_seed(a.seed, 1)),
        None => Vec::new(),
    };
    let seed = derive_seed(a.seed, 2);
    let (h, u) = (&inst.hypotheses, &inst.perturbation);
    let pred: Predictor = match learner {
        LearnerId::Grass => Grass::new(h, u)?.learn(&s_l, &s_u, &params, seed)?,
        LearnerId::RobustSupervised => {
            let r = RobustLearner::new(h, u)?;
            if s_l.is_empty() {
                r.learn_realizable(&s_l, seed)?.predictor
            } else {
                r.learn_agnostic(&s_l, seed)?.predictor
            }
        }
        LearnerId::KnownSupport => {
            let support = a.support.clone().unwrap_or_else(|| d.support());
            learn_known_support(h, u, &support, &s_l)?
        }
        LearnerId::Robust01 => rssl_core::robust::learn_01_robustly_realizable(h, u, &s_l, &params, seed)?,
        LearnerId::PartialRealizable => partial_realizable_learn(&to_partial(h, u)?, &s_l, &params, seed)?,
    };
    let prepared = Prepared::new(learner, &inst)?;
    let kind = if learner.robust_loss() { "robust" } else { "0-1" };
    eprintln!(
        "{learner}: m_l={} m_u={} {kind} risk {:.6} (class optimum {:.6})",
        s_l.len(),
        s_u.len(),
        prepared.risk(&pred.outputs),
        prepared.optimal_risk()
    );
    if let Some(p) = &a.emit_provenance {
        fs::write(p, serde_json::to_string_pretty(&pred.provenance)? + "\n")?;
    }
    match &a.output {
        Some(p) => io::write_predictor(p, &pred)?,
        None => println!("{}", io::predictor_to_json(&pred)?),
    }
    Ok(())
}

fn write_family(dir: &Path, family: &str, members: &[Construction], extra: serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(members.len());
    for (j, c) in members.iter().enumerate() {
        let file = format!("member_{j:03}.json");
        io::write_instance(dir.join(&file), &c.instance)?;
        entries.push(json!({"file": file, "meta": c.meta}));
    }
    let manifest = json!({"family": family, "members": entries, "extra": extra});
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    eprintln!("wrote {} members to {}", members.len(), dir.display());
    Ok(())
}

fn write_single(path: &Path, c: &Construction) -> Result<()> {
    io::write_instance(path, &c.instance)?;
    println!("{}", serde_json::to_string_pretty(&c.meta)?);
    Ok(())
}

fn parse_sigma(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => bail!("sigma must be a 0/1 string, got {s:?}"),
        })
        .collect()
}

fn construct_cmd(cmd: ConstructCmd) -> Result<()> {
    match cmd {
        ConstructCmd::Gap { n, sigma, output } => {
            let c = match sigma {
                Some(s) => constructions::gen_gap_with_target(n, &parse_sigma(&s)?)?,
                None => constructions::gen_gap(n)?,
            };
            write_single(&output, &c)
        }
        ConstructCmd::Allfns { m, output } => write_single(&output, &constructions::gen_allfns_overlap(m)?),
        ConstructCmd::ThreeHalves { n, output } => write_single(&output, &constructions::gen_three_halves(n)?),
        ConstructCmd::Improper { m, output } => {
            let fam = constructions::gen_improper(m)?;
            let extra = json!({"base_points": fam.base_points, "row_failures": fam.row_failures});
            write_family(&output, "improper", &fam.members, extra)
        }
        ConstructCmd::AgnosticSigma { k, alpha, output } => {
            let fam = constructions::gen_agnostic_sigma(k, alpha)?;
            write_family(&output, "agnostic-sigma", &fam, json!({"k": k, "alpha": alpha}))
        }
    }
}

fn bounds_cmd(a: BoundsArgs) -> Result<()> {
    println!("kappa,m,delta,empirical_risk,graepel,bernstein");
    for &m in &a.m {
        let g = graepel_bound(a.kappa, m, a.delta)?;
        let b = bernstein_bound(a.kappa, m, a.delta, a.empirical_risk)?;
        println!("{},{m},{},{},{g:.6},{b:.6}", a.kappa, a.delta, a.empirical_risk);
    }
    Ok(())
}

fn emit_csv(rows: &[bench::CsvRow], output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => {
            bench::write_csv_file(p, rows)?;
            eprintln!("wrote {} rows to {}", rows.len(), p.display());
        }
        None => print!("{}", bench::csv_string(rows)?),
    }
    Ok(())
}

fn experiment_cmd(kind: ExperimentCmd) -> Result<()> {
    match kind {
        ExperimentCmd::Run { config, output } => {
            let cfg = ExperimentConfig::read(&config).with_context(|| format!("reading config {}", config.display()))?;
            let runs = cfg.run(config.parent())?;
            for r in &runs {
                eprintln!("{} {}: minimal budget {:?}", r.family, r.learner, r.minimal);
            }
            let rows: Vec<_> = runs.iter().flat_map(|r| r.csv_rows()).collect();
            let out = output.or_else(|| {
                cfg.output.as_ref().map(|p| match config.parent() {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.clone(),
                })
            });
            emit_csv(&rows, out.as_deref())
        }
        ExperimentCmd::Separation {
            n,
            epsilon,
            delta,
            trials,
            seed,
            mu,
            max_labeled,
            output,
        } => {
            let mut cfg = SeparationConfig::new(n, epsilon, delta, trials, seed);
            cfg.unlabeled = mu;
            cfg.max_labeled = max_labeled;
            let report = separation_experiment(&cfg)?;
            for p in &report.curves {
                let m = p.m_l_star.map_or("none".to_string(), |m| m.to_string());
                eprintln!("n={:<3} {:<18} m_l*={m:<6} worst {}", p.n, p.learner.as_str(), p.worst_family);
            }
            emit_csv(&report.csv_rows(), output.as_deref())
        }
        ExperimentCmd::Agnostic {
            family,
            k,
            alpha,
            epsilon,
            delta,
            alpha_factor,
            ml,
            mu,
            trials,
            seed,
            output,
        } => {
            let members = match family {
                NoisyFamily::AgnosticSigma => constructions::gen_agnostic_sigma(k, alpha)?,
                NoisyFamily::ThreeHalves => vec![constructions::gen_three_halves(k)?],
            };
            let params = PacParams::new(epsilon, delta, alpha_factor)?;
            let report = agnostic_multiplier_experiment(&members, &params, SampleBudget::new(ml, mu), trials, seed)?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            match output {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        ExperimentCmd::ProperBound { m, risk_threshold } => {
            let fam = constructions::gen_improper(m)?;
            let b = proper_rule_lower_bound(&fam.members, m, risk_threshold)?;
            println!("{}", serde_json::to_string_pretty(&b)?);
            Ok(())
        }
    }
}
