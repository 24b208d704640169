//! `fairuse`: audit personalized classifiers for fair use of group attributes.
//!
//! Exit codes: 0 clean, 3 fair use violation, 1 usage or input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairuse::audit::{audit, AuditConfig, FairUseReport, TestSelection, DEFAULT_ALPHA, DEFAULT_BOOTSTRAP};
use fairuse::dataset::{load_csv, save_csv, split, tally, CsvSchema, Dataset};
use fairuse::interventions::{assign_best_of_three, assign_generic_on_violation, AssignmentPlan, Strictness};
use fairuse::metrics::{MetricKind, DEFAULT_ECE_BINS};
use fairuse::models::{train_personalized, Loss, Strategy, TrainConfig};
use fairuse::replicate::{golden, replicate_all};
use fairuse::synth::{self, RandomParams, SynthKind, SynthSpec};

const EXIT_VIOLATION: u8 = 3;
const EXIT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(name = "fairuse", version, about = "Audit whether personalized classifiers make fair use of group attributes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train generic and personalized models and audit them for fair use.
    Audit(AuditArgs),
    /// Write a synthetic dataset as CSV plus a JSON sidecar with its expected table.
    Synth(SynthArgs),
    /// Turn an audit report into a per-group model assignment plan.
    Intervene(InterveneArgs),
    /// Regenerate every worked example table and diff it against the embedded goldens.
    ReplicatePaper(ReplicateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Mode {
    /// Exit 3 only on a significant violation.
    Significant,
    /// Exit 3 on any negative point estimate.
    Point,
}

impl Mode {
    fn strictness(self) -> Strictness {
        match self {
            Mode::Significant => Strictness::Significant,
            Mode::Point => Strictness::Point,
        }
    }
}

#[derive(Args)]
struct AuditArgs {
    /// Training CSV (group columns prefixed `g:`, label column `y`).
    #[arg(long)]
    data: PathBuf,
    /// Evaluation CSV. Without it the data is split by `--train-fraction`.
    #[arg(long, conflicts_with = "eval_on_train")]
    eval: Option<PathBuf>,
    /// Evaluate on the training data itself (p-values then assume nothing).
    #[arg(long)]
    eval_on_train: bool,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    #[arg(long, default_value = "onehot", value_parser = parse_strategy)]
    strategy: Strategy,
    /// Metric to audit; repeat for several. The first is primary.
    #[arg(long = "metric", value_parser = parse_metric)]
    metrics: Vec<MetricKind>,
    #[arg(long, default_value = "logistic", value_parser = parse_loss)]
    loss: Loss,
    /// L2 penalty on feature weights (default 1e-4; hinge needs > 0).
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    bootstrap: usize,
    #[arg(long, default_value_t = DEFAULT_ECE_BINS)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Test procedures: bootstrap, mcnemar or both.
    #[arg(long = "test", default_value = "both", value_parser = parse_tests)]
    tests: TestSelection,
    #[arg(long, value_enum, default_value_t = Mode::Significant)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    label: String,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_parser = parse_kind)]
    kind: SynthKind,
    /// CSV path; the sidecar goes next to it with a `.json` extension.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 250)]
    n_per_group: usize,
    #[arg(long, default_value_t = -0.15, allow_hyphen_values = true)]
    gap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum PlanStrategy {
    /// Serve violating groups with the generic model.
    Generic,
    /// Per group, the best of generic, personalized and decoupled on validation data.
    Best3,
}

#[derive(Args)]
struct InterveneArgs {
    /// Audit report in JSON.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum, default_value_t = PlanStrategy::Generic)]
    strategy: PlanStrategy,
    #[arg(long, value_enum, default_value_t = Mode::Point)]
    mode: Mode,
    /// Metric the plan optimizes; defaults to the report's primary metric.
    #[arg(long, value_parser = parse_metric)]
    metric: Option<MetricKind>,
    /// Training CSV; required by `best3`, which carves a validation split from it.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    validation_fraction: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplicateArgs {
    /// Directory for `bundle.json`; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: fairuse::Error| e.to_string())
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: fairuse::Error| e.to_string())
}

fn parse_loss(s: &str) -> Result<Loss, String> {
    s.parse().map_err(|e: fairuse::Error| e.to_string())
}

fn parse_tests(s: &str) -> Result<TestSelection, String> {
    s.parse().map_err(|e: fairuse::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<SynthKind, String> {
    s.parse().map_err(|e: fairuse::Error| e.to_string())
}

type CliResult<T> = Result<T, String>;

fn context<T>(r: fairuse::Result<T>, what: impl FnOnce() -> String) -> CliResult<T> {
    r.map_err(|e| format!("{}: {e}", what()))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

fn load(path: &Path, schema: &CsvSchema) -> CliResult<Dataset> {
    context(load_csv(path, schema), || format!("reading {}", path.display()))
}

fn report_csv(report: &FairUseReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "metric", "group", "n", "personalized", "generic", "rationality_gain", "envy_min_gain", "envy_argmin", "test",
        "rationality_verdict", "rationality_p_adjusted",
    ];
    w.write_record(header).map_err(|e| e.to_string())?;
    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &report.metrics {
        for g in &r.groups {
            let tests: Vec<_> =
                r.hypotheses.iter().filter(|h| h.kind.is_rationality() && h.kind.group() == g.group).collect();
            let base = [
                r.metric.to_string(),
                g.group.clone(),
                g.n.to_string(),
                num(g.personalized),
                num(g.generic),
                num(g.rationality_gain),
                num(g.envy_min_gain),
                g.envy_argmin.clone().unwrap_or_default(),
            ];
            if tests.is_empty() {
                let mut rec = base.to_vec();
                rec.extend(["".into(), "".into(), "".into()]);
                w.write_record(&rec).map_err(|e| e.to_string())?;
            }
            for h in tests {
                let mut rec = base.to_vec();
                rec.push(format!("{:?}", h.test).to_lowercase());
                rec.push(serde_json::to_value(h.verdict).unwrap().as_str().unwrap_or_default().to_string());
                rec.push(h.p_violation_adjusted.min(h.p_gain_adjusted).to_string());
                w.write_record(&rec).map_err(|e| e.to_string())?;
            }
        }
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn cmd_audit(a: &AuditArgs) -> CliResult<u8> {
    let schema = CsvSchema { label: Some(a.label.clone()), ..CsvSchema::default() };
    let data = load(&a.data, &schema)?;
    let (train, test, mut warnings) = if a.eval_on_train {
        (data.clone(), data, Vec::new())
    } else if let Some(path) = &a.eval {
        let schema = CsvSchema { label: Some(a.label.clone()), ..CsvSchema::with_domains(data.space()) };
        let test = load(path, &schema)?;
        (data, test, Vec::new())
    } else {
        let s = context(split(&data, a.train_fraction, a.seed), || "splitting data".into())?;
        (s.train, s.test, s.warnings)
    };
    let mut train_cfg = TrainConfig { seed: a.seed, ..TrainConfig::default().with_loss(a.loss) };
    if let Some(l2) = a.l2 {
        train_cfg = train_cfg.with_l2(l2);
    }
    let cfg = AuditConfig {
        strategy: a.strategy,
        metrics: if a.metrics.is_empty() { vec![MetricKind::ErrorRate] } else { a.metrics.clone() },
        train: train_cfg,
        bootstrap: a.bootstrap,
        alpha: a.alpha,
        seed: a.seed,
        ece_bins: a.bins,
        tests: a.tests,
        ..AuditConfig::default()
    };
    let mut report = context(audit(&train, &test, &cfg), || "audit".into())?;
    if a.eval_on_train {
        warnings.push("evaluated on the training data".into());
    }
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    if let Some(metric) = report.interventions.as_ref().map(|iv| iv.metric) {
        let plan = context(assign_generic_on_violation(&report, metric, a.mode.strictness()), || "planning".into())?;
        if let Some(iv) = report.interventions.as_mut() {
            iv.plan = plan;
        }
    }
    let text = match a.format {
        Format::Json => report.to_json_string(),
        Format::Markdown => report.to_markdown(),
        Format::Csv => report_csv(&report)?,
    };
    emit(a.out.as_deref(), &text)?;
    let violated = match a.mode {
        Mode::Significant => report.violation,
        Mode::Point => report.violation || report.point_violation,
    };
    Ok(if violated { EXIT_VIOLATION } else { 0 })
}

fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_else(|| "data".into());
    out.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_synth(a: &SynthArgs) -> CliResult<u8> {
    let params = RandomParams { m: a.m, n_per_group: a.n_per_group, gap: a.gap, seed: a.seed };
    let spec = SynthSpec { kind: a.kind, params };
    let s = context(spec.generate(), || format!("generating {}", a.kind))?;
    context(save_csv(&s.data, &a.out), || format!("writing {}", a.out.display()))?;
    let mut sidecar = serde_json::json!({
        "kind": a.kind,
        "rows": s.data.n(),
        "tally": tally(&s.data).to_json(),
    });
    if let Some(truth) = &s.truth {
        let path = sidecar_path(&a.out, ".truth.csv");
        context(save_csv(truth, &path), || format!("writing {}", path.display()))?;
        sidecar["truth_csv"] = path.file_name().map(|f| f.to_string_lossy().to_string()).into();
        sidecar["truth_tally"] = tally(truth).to_json();
    }
    if let Some(c) = &s.constraint {
        sidecar["constraint"] = serde_json::to_value(c).unwrap();
    }
    if a.kind.is_worked() {
        sidecar["expected"] = serde_json::to_value(context(golden(a.kind), || "golden table".into())?).unwrap();
    } else {
        sidecar["params"] = serde_json::to_value(params).unwrap();
        if a.kind == SynthKind::PlantedViolation {
            sidecar["expected"] = serde_json::json!({
                "planted_group": synth::random_space(a.m).map(|s| s.label_of(synth::PLANTED_CELL)).unwrap_or_default(),
                "positive_rates": synth::planted_rates(a.gap),
                "population_rationality_gain": a.gap,
            });
        } else {
            sidecar["expected"] = serde_json::json!({ "population_rationality_gain": 0.0 });
        }
    }
    let path = sidecar_path(&a.out, ".json");
    emit(Some(&path), &(serde_json::to_string_pretty(&sidecar).unwrap() + "\n"))?;
    Ok(0)
}

fn cmd_intervene(a: &InterveneArgs) -> CliResult<u8> {
    let text = fs::read_to_string(&a.report).map_err(|e| format!("reading {}: {e}", a.report.display()))?;
    let report = context(FairUseReport::from_json_str(&text), || format!("parsing {}", a.report.display()))?;
    let metric = a.metric.unwrap_or(report.primary().metric);
    let plan: AssignmentPlan = match a.strategy {
        PlanStrategy::Generic => context(assign_generic_on_violation(&report, metric, a.mode.strictness()), || "planning".into())?,
        PlanStrategy::Best3 => {
            let path = a.data.as_ref().ok_or("best3 needs --data with the training CSV")?;
            let data = load(path, &CsvSchema::with_domains(&report.space))?;
            let parts = context(split(&data, 1.0 - a.validation_fraction, report.config.seed), || "validation split".into())?;
            let cfg = &report.config.train;
            let pers = context(train_personalized(&parts.train, report.config.strategy, cfg), || "training".into())?;
            let dcp = context(train_personalized(&parts.train, Strategy::Decoupled, cfg), || "training decoupled".into())?;
            context(assign_best_of_three(&report, &pers, &dcp, &parts.test, metric), || "planning".into())?
        }
    };
    emit(a.out.as_deref(), &(plan.to_json_string() + "\n"))?;
    Ok(0)
}

fn cmd_replicate(a: &ReplicateArgs) -> CliResult<u8> {
    let bundle = context(replicate_all(), || "replicating".into())?;
    let text = bundle.to_json_string() + "\n";
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
            emit(Some(&dir.join("bundle.json")), &text)?;
        }
        None => emit(None, &text)?,
    }
    for t in &bundle.tables {
        let bad = bundle.mismatches.iter().filter(|m| m.table == t.name).count();
        eprintln!("{}: {}", t.name, if bad == 0 { "matches".to_string() } else { format!("{bad} mismatching cells") });
    }
    for m in &bundle.mismatches {
        eprintln!("mismatch: {m}");
    }
    Ok(if bundle.ok() { 0 } else { EXIT_ERROR })
}

fn configure_threads() {
    if let Ok(v) = std::env::var("FAIRUSE_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("FAIRUSE_THREADS ignored: {e}");
                }
            }
            _ => log::warn!("FAIRUSE_THREADS must be a positive integer, got `{v}`"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Audit(a) => cmd_audit(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Intervene(a) => cmd_intervene(a),
        Command::ReplicatePaper(a) => cmd_replicate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
