//! Command-line front end.
//!
//! Every command resolves a typed [`RunConfig`] from schema defaults, an
//! optional `--config` file and `--set key=value` overrides (plus a few
//! shorthand flags). CSV outputs begin with a `# config-sha256:` line.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active::{run_active, ActiveConfig, ExperimentRun};
use crate::config::{key, KeySpec, RunConfig, ValueType as T};
use crate::coverage::{run_coverage, CoverageConfig, CoverageReport};
use crate::epu::{ConformalScorer, Strategy};
use crate::error::{Error, Result};
use crate::imprecise::{PlausibilityMeasure, UncertaintyReport};
use crate::models::{gaussian_blobs, load_matrix, load_proba_matrix, BlobSpec, Dataset, LearnerKind};
use crate::oracle::{run_suite, SuiteConfig};
use crate::rng;
use crate::scores::{ProbVector, ScoreKind, ScoreSpec};
use crate::selective::{run_selective, synthetic_probabilities, ArcCurve, SelectiveConfig, SyntheticSpec};
use crate::stats::{mean, standard_error, wilcoxon_signed_rank};
use crate::transducer::{CalibrationSet, PValueProfile};

#[derive(Debug, Parser)]
#[command(name = "mmicp", version, about = "Conformal prediction with credal-set epistemic uncertainty")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a labelled calibration split and save the calibration set as JSON.
    Calibrate(CommonArgs),
    /// Per-instance MMI-TV, MMI-pi and prediction-set sizes.
    Mmi(CommonArgs),
    /// Conformal prediction sets at each requested level.
    PredictSet(CommonArgs),
    /// Monte-Carlo marginal coverage and uniform validity on synthetic blobs.
    Coverage(CommonArgs),
    /// Compare closed forms against brute-force imprecise-probability oracles.
    OracleCheck(CommonArgs),
    /// Active-learning runs over seeds and strategies.
    Active(CommonArgs),
    /// Accuracy-rejection curves over seeds and strategies.
    Arc(CommonArgs),
    /// Accuracy-rejection areas for each nonconformity score.
    AblateScores(CommonArgs),
    /// Accuracy-rejection areas for each calibration-set size.
    AblateNcal(CommonArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &CommonArgs) {
        match self {
            Command::Calibrate(a) => ("calibrate", a),
            Command::Mmi(a) => ("mmi", a),
            Command::PredictSet(a) => ("predict-set", a),
            Command::Coverage(a) => ("coverage", a),
            Command::OracleCheck(a) => ("oracle-check", a),
            Command::Active(a) => ("active", a),
            Command::Arc(a) => ("arc", a),
            Command::AblateScores(a) => ("ablate-scores", a),
            Command::AblateNcal(a) => ("ablate-ncal", a),
        }
    }
}

/// Flags shared by every command. Shorthand flags map onto config keys of
/// the same name and are rejected where the command has no such key.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file of `key: type = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Print the resolved config and exit.
    #[arg(long)]
    pub print_config: bool,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub score: Option<String>,
    #[arg(long)]
    pub strategies: Option<String>,
    #[arg(long)]
    pub proba: Option<String>,
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long)]
    pub calibration: Option<String>,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub max_labels: Option<String>,
    /// Perturb one closed form so `oracle-check` must fail.
    #[arg(long)]
    pub inject_fault: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
            out.push((k.trim().to_string(), v.to_string()));
        }
        let shorthand = [
            ("seed", &self.seed),
            ("seeds", &self.seeds),
            ("alphas", &self.alphas),
            ("score", &self.score),
            ("strategies", &self.strategies),
            ("proba", &self.proba),
            ("labels", &self.labels),
            ("calibration", &self.calibration),
            ("data", &self.data),
            ("out", &self.out),
            ("trials", &self.trials),
            ("max_labels", &self.max_labels),
        ];
        for (k, v) in shorthand {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        }
        if self.inject_fault {
            out.push(("inject_fault".into(), "true".into()));
        }
        Ok(out)
    }
}

/// How a successful invocation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ChecksFailed,
}

const ALPHAS: &str = "0.01,0.05,0.1,0.2,0.3";
const STRATEGIES: &str = "mmi_pi,mmi_tv,set_size:0.01,set_size:0.05,set_size:0.1,set_size:0.2,set_size:0.3,random";

const SCORE_KEYS: &[KeySpec] = &[
    key("score", T::Str, "aps", "lac, aps, raps or margin"),
    key("raps_lambda", T::Float, "0.01", "RAPS rank penalty"),
    key("raps_kreg", T::Int, "1", "RAPS penalty-free ranks"),
    key("aps_randomized", T::Bool, "false", "randomized APS/RAPS"),
    key("jitter", T::Float, "0", "absolute calibration jitter; 0 means 1e-9 x score range"),
];

const BLOB_KEYS: &[KeySpec] = &[
    key("classes", T::Int, "10", "synthetic classes"),
    key("dim", T::Int, "10", "synthetic feature dimension"),
    key("center_scale", T::Float, "1", "spread of class centres"),
    key("noise", T::Float, "1", "within-class standard deviation"),
];

const LEARNER_KEYS: &[KeySpec] = &[
    key("learner", T::Str, "softmax", "softmax or knn"),
    key("knn_k", T::Int, "15", "neighbours for knn"),
    key("learning_rate", T::Float, "0.5", "softmax step size"),
    key("epochs", T::Int, "200", "softmax gradient steps"),
    key("l2", T::Float, "0.001", "softmax weight decay"),
];

const EXPERIMENT_KEYS: &[KeySpec] = &[
    key("seed", T::Int, "0", "root seed"),
    key("seeds", T::Int, "10", "repetitions"),
    key("strategies", T::StrList, STRATEGIES, "mmi_pi, mmi_tv, set_size:<alpha>, random"),
];

const SELECTIVE_KEYS: &[KeySpec] = &[
    key("proba", T::Path, "", "probability matrix; synthetic blobs when empty"),
    key("labels", T::Path, "", "labels for the probability matrix"),
    key("n_train", T::Int, "500", "synthetic training rows"),
    key("n_eval", T::Int, "1500", "synthetic calibration + test rows"),
];

fn schema(command: &str) -> Vec<KeySpec> {
    let mut keys: Vec<KeySpec> = Vec::new();
    let with = |keys: &mut Vec<KeySpec>, extra: &[KeySpec]| keys.extend_from_slice(extra);
    match command {
        "calibrate" => {
            with(&mut keys, SCORE_KEYS);
            with(&mut keys, &[
                key("proba", T::Path, "", "calibration probabilities"),
                key("labels", T::Path, "", "calibration labels"),
                key("seed", T::Int, "0", "jitter and randomization seed"),
                key("out", T::Path, "", "output file; stdout when empty"),
            ]);
        }
        "mmi" | "predict-set" => {
            with(&mut keys, SCORE_KEYS);
            with(&mut keys, &[
                key("proba", T::Path, "", "test probabilities"),
                key("scores", T::Path, "", "test nonconformity scores, instead of probabilities"),
                key("calibration", T::Path, "", "JSON written by `calibrate`"),
                key("cal_proba", T::Path, "", "calibration probabilities, instead of a JSON"),
                key("cal_labels", T::Path, "", "calibration labels"),
                key("alphas", T::FloatList, ALPHAS, "miscoverage levels"),
                key("seed", T::Int, "0", "jitter and randomization seed"),
                key("out", T::Path, "", "output file; stdout when empty"),
            ]);
            if command == "mmi" {
                with(&mut keys, &[key("format", T::Str, "csv", "csv or json")]);
            } else {
                with(&mut keys, &[key("consonant", T::Bool, "false", "stretch the top p-value to 1 first")]);
            }
        }
        "coverage" => {
            with(&mut keys, SCORE_KEYS);
            with(&mut keys, BLOB_KEYS);
            with(&mut keys, &[
                key("n_cals", T::IntList, "20,100", "calibration sizes"),
                key("trials", T::Int, "10000", "Monte-Carlo trials per size"),
                key("alphas", T::FloatList, "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5", "levels"),
                key("seed", T::Int, "0", "root seed"),
                key("out", T::Path, "", "output file; stdout when empty"),
            ]);
        }
        "oracle-check" => {
            with(&mut keys, &[
                key("max_labels", T::Int, "10", "largest label space, at most 12"),
                key("profiles", T::Int, "500", "random profiles"),
                key("seed", T::Int, "0", "root seed"),
                key("inject_fault", T::Bool, "false", "self-test: perturb one closed form"),
                key("out", T::Path, "", "output file; stdout when empty"),
            ]);
        }
        "active" => {
            with(&mut keys, SCORE_KEYS);
            with(&mut keys, BLOB_KEYS);
            with(&mut keys, LEARNER_KEYS);
            with(&mut keys, EXPERIMENT_KEYS);
            with(&mut keys, &[
                key("data", T::Path, "", "dataset CSV; synthetic blobs when empty"),
                key("rounds", T::Int, "300", "queries per run"),
                key("initial_train", T::Int, "100", "initially labelled rows"),
                key("pool_size", T::Int, "2000", "unlabelled pool rows"),
                key("test_size", T::Int, "1000", "held-out test rows"),
                key("train_fraction", T::Float, "0.7", "fit share of the labelled set"),
                key("out", T::Path, "active_out", "output directory"),
            ]);
        }
        "arc" | "ablate-scores" | "ablate-ncal" => {
            with(&mut keys, SCORE_KEYS);
            with(&mut keys, BLOB_KEYS);
            with(&mut keys, LEARNER_KEYS);
            with(&mut keys, EXPERIMENT_KEYS);
            with(&mut keys, SELECTIVE_KEYS);
            match command {
                "arc" => with(&mut keys, &[
                    key("n_cal", T::Int, "500", "calibration rows"),
                    key("n_test", T::Int, "1000", "test rows; 0 uses the rest"),
                    key("out", T::Path, "arc_out", "output directory"),
                ]),
                "ablate-scores" => {
                    keys.retain(|k| k.key != "score");
                    with(&mut keys, &[
                        key("scores", T::StrList, "lac,aps,raps,margin", "scores to compare"),
                        key("n_cal", T::Int, "500", "calibration rows"),
                        key("n_test", T::Int, "1000", "test rows; 0 uses the rest"),
                        key("out", T::Path, "ablate_scores_out", "output directory"),
                    ]);
                }
                _ => with(&mut keys, &[
                    key("n_cals", T::IntList, "100,250,500,1000", "calibration sizes"),
                    key("n_test", T::Int, "500", "test rows"),
                    key("out", T::Path, "ablate_ncal_out", "output directory"),
                ]),
            }
        }
        other => unreachable!("no schema for `{other}`"),
    }
    keys
}

/// Parses arguments, runs the command, and maps the result to an exit code:
/// 0 on success, 1 when a check fails, 2 on any error.
pub fn main_with_args<I, S>(args: I) -> std::process::ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return std::process::ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Outcome::Success) => std::process::ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => std::process::ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(2)
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let (name, args) = cli.command.parts();
    let config = RunConfig::resolve(name, &schema(name), args.config.as_deref(), &args.overrides()?)?;
    if args.print_config {
        print!("{}", config.canonical());
        return Ok(Outcome::Success);
    }
    match cli.command {
        Command::Calibrate(_) => cmd_calibrate(&config),
        Command::Mmi(_) => cmd_mmi(&config),
        Command::PredictSet(_) => cmd_predict_set(&config),
        Command::Coverage(_) => cmd_coverage(&config),
        Command::OracleCheck(_) => cmd_oracle_check(&config),
        Command::Active(_) => cmd_active(&config),
        Command::Arc(_) => cmd_arc(&config),
        Command::AblateScores(_) => cmd_ablate_scores(&config),
        Command::AblateNcal(_) => cmd_ablate_ncal(&config),
    }
}

fn score_spec(config: &RunConfig, kind: &str) -> Result<ScoreSpec> {
    let kind: ScoreKind = kind.parse()?;
    if !kind.is_classification() {
        return Err(Error::WrongScoreKind(kind));
    }
    let spec = ScoreSpec {
        kind,
        raps_lambda: config.float("raps_lambda"),
        raps_kreg: config.usize("raps_kreg")?,
        aps_randomized: config.bool("aps_randomized"),
    };
    spec.validate()?;
    Ok(spec)
}

fn jitter(config: &RunConfig) -> Result<Option<f64>> {
    match config.float("jitter") {
        j if j == 0.0 => Ok(None),
        j if j > 0.0 => Ok(Some(j)),
        j => Err(Error::InvalidJitter(j)),
    }
}

fn alphas(config: &RunConfig) -> Result<Vec<f64>> {
    let alphas = config.floats("alphas").to_vec();
    if alphas.is_empty() {
        return Err(Error::Config("`alphas` must not be empty".into()));
    }
    if let Some(&a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidAlpha(a));
    }
    Ok(alphas)
}

fn strategies(config: &RunConfig) -> Result<Vec<Strategy>> {
    let out: Vec<Strategy> = config.strs("strategies").iter().map(|s| s.parse()).collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config("`strategies` must not be empty".into()));
    }
    Ok(out)
}

fn blob_spec(config: &RunConfig) -> Result<BlobSpec> {
    Ok(BlobSpec {
        classes: config.usize("classes")?,
        dim: config.usize("dim")?,
        center_scale: config.float("center_scale"),
        noise: config.float("noise"),
    })
}

fn learner(config: &RunConfig) -> Result<LearnerKind> {
    match config.str("learner") {
        "softmax" => Ok(LearnerKind::SoftmaxLinear {
            learning_rate: config.float("learning_rate"),
            epochs: config.usize("epochs")?,
            l2: config.float("l2"),
        }),
        "knn" => Ok(LearnerKind::knn(config.usize("knn_k")?)),
        other => Err(Error::Config(format!("unknown learner `{other}` (softmax or knn)"))),
    }
}

fn seed_list(config: &RunConfig) -> Result<Vec<u64>> {
    let root = config.u64("seed")?;
    let n = config.usize("seeds")?;
    if n == 0 {
        return Err(Error::Config("`seeds` must be positive".into()));
    }
    Ok((0..n as u64).map(|i| rng::derive_seed(root, "seed", i)).collect())
}

/// Writes `body` to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(p, body).map_err(|e| Error::io(p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn csv_body(config: &RunConfig, header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut body = format!("{}\n{header}\n", config.header_line());
    for row in rows {
        body.push_str(&row);
        body.push('\n');
    }
    body
}

fn out_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.required_path("out")?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Saved by `calibrate`, read by `mmi` and `predict-set`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub config_sha256: String,
    pub score: ScoreSpec,
    pub calibration: CalibrationSet,
}

fn labelled_matrix(proba: &Path, labels: &Path) -> Result<(Vec<ProbVector>, Vec<usize>)> {
    let (probs, labels) = load_proba_matrix(proba, Some(labels))?;
    Ok((probs, labels.expect("labels were requested")))
}

fn cmd_calibrate(config: &RunConfig) -> Result<Outcome> {
    let spec = score_spec(config, config.str("score"))?;
    let (probs, labels) = labelled_matrix(&config.required_path("proba")?, &config.required_path("labels")?)?;
    let scorer = ConformalScorer::fit(&probs, &labels, spec, jitter(config)?, config.u64("seed")?)?;
    let file = CalibrationFile {
        config_sha256: config.sha256(),
        score: spec,
        calibration: scorer.calibration().clone(),
    };
    emit(config.path("out").as_deref(), &(serde_json::to_string_pretty(&file)? + "\n"))?;
    Ok(Outcome::Success)
}

/// Raw p-value profiles for the test inputs of `mmi` / `predict-set`.
fn test_profiles(config: &RunConfig) -> Result<Vec<PValueProfile>> {
    let spec = score_spec(config, config.str("score"))?;
    let seed = config.u64("seed")?;
    let scorer = match (config.path("calibration"), config.path("cal_proba")) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either `calibration` or `cal_proba`, not both".into()));
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let file: CalibrationFile = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.to_string()))?;
            file.calibration.validate()?;
            if file.score != spec {
                return Err(Error::Config(format!(
                    "score settings {:?} differ from those stored in {}: {:?}",
                    spec,
                    path.display(),
                    file.score
                )));
            }
            ConformalScorer::from_calibration(file.calibration, spec, seed)?
        }
        (None, Some(cal_proba)) => {
            let (probs, labels) = labelled_matrix(&cal_proba, &config.required_path("cal_labels")?)?;
            ConformalScorer::fit(&probs, &labels, spec, jitter(config)?, seed)?
        }
        (None, None) => return Err(Error::Config("one of `calibration` or `cal_proba` is required".into())),
    };
    match (config.path("proba"), config.path("scores")) {
        (Some(proba), None) => {
            let (probs, _) = load_proba_matrix(&proba, None)?;
            probs
                .par_iter()
                .enumerate()
                .map(|(i, p)| scorer.profile(p, i as u64))
                .collect()
        }
        (None, Some(scores)) => load_matrix(&scores)?
            .iter()
            .map(|row| scorer.calibration().profile(row))
            .collect(),
        _ => Err(Error::Config("exactly one of `proba` or `scores` is required".into())),
    }
}

fn cmd_mmi(config: &RunConfig) -> Result<Outcome> {
    let alphas = alphas(config)?;
    let reports = test_profiles(config)?
        .into_iter()
        .map(|p| PlausibilityMeasure::new(p.enforce_consonance())?.report(&alphas))
        .collect::<Result<Vec<UncertaintyReport>>>()?;
    let body = match config.str("format") {
        "csv" => csv_body(
            config,
            &UncertaintyReport::csv_header(&alphas),
            reports.iter().enumerate().map(|(i, r)| r.csv_row(i)),
        ),
        "json" => {
            #[derive(Serialize)]
            struct Row<'a> {
                instance_id: usize,
                #[serde(flatten)]
                report: &'a UncertaintyReport,
            }
            #[derive(Serialize)]
            struct Doc<'a> {
                config_sha256: String,
                reports: Vec<Row<'a>>,
            }
            let doc = Doc {
                config_sha256: config.sha256(),
                reports: reports
                    .iter()
                    .enumerate()
                    .map(|(instance_id, report)| Row { instance_id, report })
                    .collect(),
            };
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        other => return Err(Error::Config(format!("unknown format `{other}` (csv or json)"))),
    };
    emit(config.path("out").as_deref(), &body)?;
    Ok(Outcome::Success)
}

fn cmd_predict_set(config: &RunConfig) -> Result<Outcome> {
    let alphas = alphas(config)?;
    let consonant = config.bool("consonant");
    let mut rows = Vec::new();
    for (i, profile) in test_profiles(config)?.into_iter().enumerate() {
        let profile = if consonant { profile.enforce_consonance() } else { profile };
        for &alpha in &alphas {
            let set = profile.prediction_set(alpha)?;
            let labels: Vec<String> = set.labels.iter().map(ToString::to_string).collect();
            rows.push(format!("{i},{alpha},{},{}", set.len(), labels.join(";")));
        }
    }
    emit(config.path("out").as_deref(), &csv_body(config, "instance_id,alpha,size,labels", rows))?;
    Ok(Outcome::Success)
}

fn cmd_coverage(config: &RunConfig) -> Result<Outcome> {
    let coverage = CoverageConfig {
        blobs: blob_spec(config)?,
        n_cals: config.usizes("n_cals")?,
        trials: config.usize("trials")?,
        alphas: alphas(config)?,
        score: score_spec(config, config.str("score"))?,
        jitter: jitter(config)?,
    };
    let report: CoverageReport = run_coverage(&coverage, config.u64("seed")?)?;
    emit(config.path("out").as_deref(), &csv_body(config, CoverageReport::CSV_HEADER, report.csv_rows()))?;
    eprintln!(
        "lattice comparisons: {}, empty raw sets: {}, consonance violations: {}",
        report.lattice_checks, report.empty_raw_sets, report.consonance_violations
    );
    if report.passed() {
        eprintln!("coverage: PASS");
        Ok(Outcome::Success)
    } else {
        eprintln!("coverage: FAIL");
        Ok(Outcome::ChecksFailed)
    }
}

fn cmd_oracle_check(config: &RunConfig) -> Result<Outcome> {
    let suite = SuiteConfig {
        max_labels: config.usize("max_labels")?,
        profiles: config.usize("profiles")?,
        seed: config.u64("seed")?,
        inject_fault: config.bool("inject_fault"),
    };
    let results = run_suite(&suite)?;
    let mut table = String::new();
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            table,
            "{status}  {:<width$}  cases={:<6} failures={:<6} max_error={:e}",
            r.name, r.cases, r.failures, r.max_error
        );
    }
    emit(config.path("out").as_deref(), &table)?;
    let failed: Vec<_> = results.iter().filter(|r| !r.passed()).collect();
    for r in &failed {
        eprintln!("{}: first offending profile {}", r.name, r.first_failure.as_deref().unwrap_or("?"));
    }
    Ok(if failed.is_empty() { Outcome::Success } else { Outcome::ChecksFailed })
}

/// Mean, standard error and the pairwise one-sided Wilcoxon matrix for
/// per-seed metrics. Cell `(i, j)` tests "row i beats column j".
fn comparison_tables(config: &RunConfig, names: &[String], metric: &[Vec<f64>], label: &str) -> (String, String) {
    let table = csv_body(
        config,
        &format!("{label},mean,standard_error"),
        names
            .iter()
            .zip(metric)
            .map(|(n, xs)| format!("{n},{},{}", mean(xs), standard_error(xs))),
    );
    let rows = names.iter().enumerate().map(|(i, n)| {
        let cells: Vec<String> = (0..names.len())
            .map(|j| match (i != j).then(|| wilcoxon_signed_rank(&metric[i], &metric[j])) {
                Some(Ok(r)) => r.p_value.to_string(),
                _ => "n/a".into(),
            })
            .collect();
        format!("{n},{}", cells.join(","))
    });
    let matrix = csv_body(config, &format!("{label},{}", names.join(",")), rows);
    (table, matrix)
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<()> {
    emit(Some(&dir.join(name)), body)
}

fn cmd_active(config: &RunConfig) -> Result<Outcome> {
    let strategies = strategies(config)?;
    let seeds = seed_list(config)?;
    let learner = learner(config)?;
    let active = ActiveConfig {
        initial_train: config.usize("initial_train")?,
        pool_size: config.usize("pool_size")?,
        test_size: config.usize("test_size")?,
        rounds: config.usize("rounds")?,
        train_fraction: config.float("train_fraction"),
        score: score_spec(config, config.str("score"))?,
        jitter: jitter(config)?,
    };
    let shared = match config.path("data") {
        Some(path) => Some(Dataset::from_csv_path(&path, None)?),
        None => None,
    };
    let blobs = blob_spec(config)?;
    let n_needed = active.initial_train + active.pool_size + active.test_size;
    let datasets: Vec<Dataset> = seeds
        .iter()
        .map(|&s| match &shared {
            Some(d) => Ok(d.clone()),
            None => gaussian_blobs(blobs, n_needed, rng::derive_seed(s, "data", 0)),
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..seeds.len())
        .flat_map(|s| (0..strategies.len()).map(move |k| (s, k)))
        .collect();
    let runs: Vec<ExperimentRun> = jobs
        .par_iter()
        .map(|&(s, k)| run_active(&datasets[s], strategies[k], learner, &active, seeds[s]))
        .collect::<Result<_>>()?;

    let dir = out_dir(config)?;
    write_file(&dir, "runs.json", &(serde_json::to_string_pretty(&runs)? + "\n"))?;
    let mut curve_rows = Vec::new();
    for run in &runs {
        for (round, acc) in run.accuracies.iter().enumerate() {
            curve_rows.push(format!("{},{},{round},{acc}", run.seed, run.strategy));
        }
    }
    write_file(&dir, "accuracy.csv", &csv_body(config, "seed,strategy,round,accuracy", curve_rows))?;
    let names: Vec<String> = strategies.iter().map(ToString::to_string).collect();
    let finals: Vec<Vec<f64>> = (0..strategies.len())
        .map(|k| (0..seeds.len()).map(|s| runs[s * strategies.len() + k].final_accuracy()).collect())
        .collect();
    let summary = (0..strategies.len()).flat_map(|k| {
        let (names, finals, seeds) = (&names, &finals, &seeds);
        (0..seeds.len()).map(move |s| format!("{},{},{}", names[k], seeds[s], finals[k][s]))
    });
    write_file(&dir, "summary.csv", &csv_body(config, "strategy,seed,final_accuracy", summary))?;
    let (table, matrix) = comparison_tables(config, &names, &finals, "strategy");
    write_file(&dir, "table.csv", &table)?;
    write_file(&dir, "pvalues.csv", &matrix)?;
    print!("{table}\n{matrix}");
    Ok(Outcome::Success)
}

/// Probability matrices for each seed: the shared input, or a fresh
/// synthetic problem per seed.
fn selective_inputs(config: &RunConfig, seeds: &[u64]) -> Result<Vec<(Vec<ProbVector>, Vec<usize>)>> {
    match config.path("proba") {
        Some(proba) => {
            let input = labelled_matrix(&proba, &config.required_path("labels")?)?;
            Ok(seeds.iter().map(|_| input.clone()).collect())
        }
        None => {
            let spec = SyntheticSpec {
                blobs: blob_spec(config)?,
                learner: learner(config)?,
                n_train: config.usize("n_train")?,
                n_eval: config.usize("n_eval")?,
            };
            seeds.iter().map(|&s| synthetic_probabilities(&spec, s)).collect()
        }
    }
}

fn n_test(config: &RunConfig) -> Result<Option<usize>> {
    Ok(match config.usize("n_test")? {
        0 => None,
        n => Some(n),
    })
}

/// Runs every `(variant, seed)` pair; returns curves indexed
/// `[variant][seed][strategy]`.
fn selective_grid(
    inputs: &[(Vec<ProbVector>, Vec<usize>)],
    seeds: &[u64],
    variants: &[SelectiveConfig],
    strategies: &[Strategy],
) -> Result<Vec<Vec<Vec<ArcCurve>>>> {
    variants
        .iter()
        .map(|variant| {
            inputs
                .par_iter()
                .zip(seeds.par_iter())
                .map(|((probs, labels), &seed)| run_selective(probs, labels, strategies, variant, seed))
                .collect()
        })
        .collect()
}

fn auarc_rows(prefix: &str, names: &[String], seeds: &[u64], curves: &[Vec<ArcCurve>]) -> Vec<String> {
    let mut rows = Vec::new();
    for (k, name) in names.iter().enumerate() {
        for (s, seed) in seeds.iter().enumerate() {
            let c = &curves[s][k];
            rows.push(format!("{prefix}{name},{seed},{},{}", c.auarc, c.auarc_percent()));
        }
    }
    rows
}

fn per_strategy(curves: &[Vec<ArcCurve>], strategies: usize) -> Vec<Vec<f64>> {
    (0..strategies).map(|k| curves.iter().map(|seed| seed[k].auarc).collect()).collect()
}

fn cmd_arc(config: &RunConfig) -> Result<Outcome> {
    let strategies = strategies(config)?;
    let seeds = seed_list(config)?;
    let inputs = selective_inputs(config, &seeds)?;
    let variant = SelectiveConfig {
        n_cal: config.usize("n_cal")?,
        n_test: n_test(config)?,
        score: score_spec(config, config.str("score"))?,
        jitter: jitter(config)?,
    };
    let curves = selective_grid(&inputs, &seeds, &[variant], &strategies)?.remove(0);
    let names: Vec<String> = strategies.iter().map(ToString::to_string).collect();

    let dir = out_dir(config)?;
    let mut curve_rows = Vec::new();
    for (s, seed) in seeds.iter().enumerate() {
        for (k, name) in names.iter().enumerate() {
            let c = &curves[s][k];
            for (r, a) in c.rejection_rates.iter().zip(&c.accuracies) {
                curve_rows.push(format!("{seed},{name},{r},{a}"));
            }
        }
    }
    write_file(&dir, "curves.csv", &csv_body(config, "seed,strategy,rejection_rate,accuracy", curve_rows))?;
    write_file(
        &dir,
        "summary.csv",
        &csv_body(config, "strategy,seed,auarc,auarc_100", auarc_rows("", &names, &seeds, &curves)),
    )?;
    let (table, matrix) = comparison_tables(config, &names, &per_strategy(&curves, strategies.len()), "strategy");
    write_file(&dir, "table.csv", &table)?;
    write_file(&dir, "pvalues.csv", &matrix)?;
    print!("{table}\n{matrix}");
    Ok(Outcome::Success)
}

fn cmd_ablate_scores(config: &RunConfig) -> Result<Outcome> {
    let strategies = strategies(config)?;
    let seeds = seed_list(config)?;
    let inputs = selective_inputs(config, &seeds)?;
    let score_names = config.strs("scores").to_vec();
    let variants = score_names
        .iter()
        .map(|s| {
            Ok(SelectiveConfig {
                n_cal: config.usize("n_cal")?,
                n_test: n_test(config)?,
                score: score_spec(config, s)?,
                jitter: jitter(config)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ablation_outputs(config, "score", &score_names, &variants, &inputs, &seeds, &strategies)
}

fn cmd_ablate_ncal(config: &RunConfig) -> Result<Outcome> {
    let strategies = strategies(config)?;
    let seeds = seed_list(config)?;
    let inputs = selective_inputs(config, &seeds)?;
    let n_cals = config.usizes("n_cals")?;
    let variants = n_cals
        .iter()
        .map(|&n_cal| {
            Ok(SelectiveConfig {
                n_cal,
                n_test: n_test(config)?,
                score: score_spec(config, config.str("score"))?,
                jitter: jitter(config)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = n_cals.iter().map(ToString::to_string).collect();
    ablation_outputs(config, "n_cal", &labels, &variants, &inputs, &seeds, &strategies)
}

fn ablation_outputs(
    config: &RunConfig,
    axis: &str,
    labels: &[String],
    variants: &[SelectiveConfig],
    inputs: &[(Vec<ProbVector>, Vec<usize>)],
    seeds: &[u64],
    strategies: &[Strategy],
) -> Result<Outcome> {
    if variants.is_empty() {
        return Err(Error::Config(format!("no {axis} values to compare")));
    }
    let grid = selective_grid(inputs, seeds, variants, strategies)?;
    let names: Vec<String> = strategies.iter().map(ToString::to_string).collect();
    let mut summary = Vec::new();
    let mut table_rows = Vec::new();
    for (label, curves) in labels.iter().zip(&grid) {
        summary.extend(auarc_rows(&format!("{label},"), &names, seeds, curves));
        for (name, xs) in names.iter().zip(per_strategy(curves, strategies.len())) {
            table_rows.push(format!("{label},{name},{},{}", mean(&xs), standard_error(&xs)));
        }
    }
    let dir = out_dir(config)?;
    write_file(
        &dir,
        "summary.csv",
        &csv_body(config, &format!("{axis},strategy,seed,auarc,auarc_100"), summary),
    )?;
    let table = csv_body(config, &format!("{axis},strategy,mean,standard_error"), table_rows);
    write_file(&dir, "table.csv", &table)?;
    print!("{table}");
    Ok(Outcome::Success)
}
