//! Command-line front end for the correction pipeline.
//!
//! Every subcommand reads its settings from one flat `key = value`
//! configuration, assembled from an optional `--config` file plus repeated
//! `--set key=value` overrides, and echoes the effective settings to the
//! diagnostic stream before doing any work. Exit codes: 0 on success, 1 for
//! usage problems (bad flags, unknown or malformed settings, missing input
//! files), 2 for data problems (unparseable or inconsistent inputs).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use gectune::corpus::{
    adapt_error_rate, make_folds, parse_m2, tokens, write_m2, Corpus, Token,
};
use gectune::decoder::{render_nbest, DecoderConfig, GecSystem, SparseFamily};
use gectune::editops::OpAlphabet;
use gectune::features::{DenseFeature, FeatureToggles, WeightVec};
use gectune::metric::{bleu, corpus_m2, AnnotatorMode, MetricConfig};
use gectune::ngram::{moore_lewis, ClassMap, NGramModel};
use gectune::phrasetable::{train_table, PhraseTable};
use gectune::tuner::{crossfold_tune, reference, Optimizer, TuneMetric, TuningPlan};

#[derive(Parser)]
#[command(name = "gectune", version, about = "Grammatical error correction pipeline")]
struct Cli {
    /// configuration file of `key = value` lines
    #[arg(long, global = true)]
    config: Option<String>,
    /// override one setting, e.g. --set beam=50
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Score a hypothesis file against M2 gold annotations
    Score,
    /// BLEU of a hypothesis file against the reference corrections
    Bleu,
    /// Train an n-gram language model and save it as ARPA
    TrainLm,
    /// Train a phrase table from an annotated parallel corpus
    TrainTm,
    /// Correct sentences with a trained system
    Decode,
    /// Tune feature weights by cross-validation
    Tune,
    /// Trim a devset until it reaches a target error rate
    AdaptDevset,
    /// Split a corpus into k folds
    MakeFolds,
    /// Select in-domain sentences from a general corpus
    FilterMono,
    /// Summarize a tuning log as plot-ready TSV
    Report,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl From<gectune::Error> for CliError {
    fn from(e: gectune::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// One setting: name and default (None marks it required when read).
struct KeySpec {
    name: &'static str,
    default: Option<&'static str>,
}

const fn key(name: &'static str, default: Option<&'static str>) -> KeySpec {
    KeySpec { name, default }
}

const fn path_key(name: &'static str) -> KeySpec {
    KeySpec { name, default: None }
}

const KEYS: &[KeySpec] = &[
    // inputs
    path_key("gold"),
    path_key("hyp"),
    path_key("source"),
    path_key("corpus"),
    path_key("mono"),
    path_key("in_domain"),
    path_key("classes"),
    path_key("table"),
    path_key("lm"),
    path_key("class_lm"),
    path_key("osm"),
    path_key("weights"),
    path_key("tuning_log"),
    // outputs
    key("out", None),
    key("out_prefix", None),
    key("lm_out", None),
    key("table_out", None),
    key("weights_out", None),
    key("nbest_out", None),
    key("report_out", None),
    key("scores_out", None),
    // metric
    key("beta", Some("0.5")),
    key("max_unchanged", Some("2")),
    key("annotator_mode", Some("per-sentence")),
    // models
    key("order", Some("3")),
    key("em_iterations", Some("5")),
    key("max_phrase_len", Some("3")),
    // decoding
    key("beam", Some("100")),
    key("k", Some("1")),
    key("features", Some("edit-ops")),
    key("sparse", Some("none")),
    key("osm_alphabet", Some("plain")),
    // tuning
    key("optimizer", Some("mert")),
    key("metric", Some("m2")),
    key("folds", Some("4")),
    key("reps", Some("5")),
    key("iterations", Some("10")),
    key("pool_size", Some("100")),
    // devset adaptation
    key("target_rate", None),
    key("annotator", Some("0")),
    // run control
    key("seed", Some("1")),
    key("jobs", Some("0")),
];

fn key_spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// Flat settings merged from the config file and `--set` overrides.
struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    fn assemble(file: Option<&str>, sets: &[String]) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = file {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {path}: {e}")))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| usage(format!("{path}:{}: expected `key = value`", lineno + 1)))?;
                insert_setting(&mut values, k.trim(), v.trim())?;
            }
        }
        for s in sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| usage(format!("--set {s}: expected KEY=VALUE")))?;
            insert_setting(&mut values, k.trim(), v.trim())?;
        }
        Ok(RunConfig { values })
    }

    /// The effective value of a setting.
    fn get(&self, name: &str) -> CliResult<Option<String>> {
        let spec = key_spec(name).expect("setting not registered");
        Ok(match self.values.get(name) {
            Some(v) => Some(v.clone()),
            None => spec.default.map(str::to_owned),
        })
    }

    fn require(&self, name: &str) -> CliResult<String> {
        self.get(name)?
            .ok_or_else(|| usage(format!("missing required setting `{name}`")))
    }

    /// Required input file path, checked for existence up front.
    fn input_path(&self, name: &str) -> CliResult<String> {
        let path = self.require(name)?;
        if !Path::new(&path).is_file() {
            return Err(usage(format!("{name} = {path}: no such file")));
        }
        Ok(path)
    }

    fn optional_input_path(&self, name: &str) -> CliResult<Option<String>> {
        match self.get(name)? {
            None => Ok(None),
            Some(path) => {
                if !Path::new(&path).is_file() {
                    return Err(usage(format!("{name} = {path}: no such file")));
                }
                Ok(Some(path))
            }
        }
    }

    fn parse<T: std::str::FromStr>(&self, name: &str) -> CliResult<T> {
        let raw = self.require(name)?;
        raw.parse()
            .map_err(|_| usage(format!("setting `{name}`: cannot parse `{raw}`")))
    }

    /// `key = value` lines for every setting the subcommand reads, in
    /// registry order; unset optional settings are omitted.
    fn echo(&self, keys: &[&str]) -> String {
        let mut out = String::from("# effective configuration\n");
        for spec in KEYS {
            if !keys.contains(&spec.name) {
                continue;
            }
            if let Ok(Some(v)) = self.get(spec.name) {
                out.push_str(&format!("{} = {v}\n", spec.name));
            }
        }
        out
    }
}

/// Settings each subcommand reads, for the startup echo.
fn keys_read(cmd: Command) -> &'static [&'static str] {
    match cmd {
        Command::Score => &["hyp", "gold", "beta", "max_unchanged", "annotator_mode", "scores_out", "jobs"],
        Command::Bleu => &["hyp", "gold", "jobs"],
        Command::TrainLm => &["mono", "classes", "order", "lm_out", "jobs"],
        Command::TrainTm => &["corpus", "em_iterations", "max_phrase_len", "table_out", "jobs"],
        Command::Decode => &[
            "source", "table", "lm", "class_lm", "osm", "classes", "weights", "beam", "k",
            "features", "sparse", "osm_alphabet", "nbest_out", "jobs",
        ],
        Command::Tune => &[
            "corpus", "table", "lm", "class_lm", "osm", "classes", "beam", "k", "features",
            "sparse", "osm_alphabet", "optimizer", "metric", "beta", "max_unchanged",
            "annotator_mode", "folds", "reps", "iterations", "pool_size", "seed",
            "weights_out", "report_out", "jobs",
        ],
        Command::AdaptDevset => &["corpus", "annotator", "target_rate", "out", "jobs"],
        Command::MakeFolds => &["corpus", "folds", "seed", "out_prefix", "jobs"],
        Command::FilterMono => &["mono", "in_domain", "order", "out", "scores_out", "jobs"],
        Command::Report => &["tuning_log", "jobs"],
    }
}

fn insert_setting(
    values: &mut BTreeMap<String, String>,
    k: &str,
    v: &str,
) -> CliResult<()> {
    if key_spec(k).is_none() {
        return Err(usage(format!("unknown setting `{k}`")));
    }
    values.insert(k.to_string(), v.to_string());
    Ok(())
}

fn read_lines(path: &str) -> CliResult<Vec<Vec<Token>>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    Ok(text.lines().map(tokens).collect())
}

fn read_corpus(cfg: &RunConfig, name: &str) -> CliResult<Corpus> {
    let path = cfg.input_path(name)?;
    let text = fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    Ok(parse_m2(&text)?)
}

fn write_output(path: &str, content: &str) -> CliResult<()> {
    fs::write(path, content).map_err(|e| CliError::Data(format!("{path}: {e}")))
}

fn metric_config(cfg: &RunConfig) -> CliResult<MetricConfig> {
    let annotator_mode = match cfg.require("annotator_mode")?.as_str() {
        "per-sentence" => AnnotatorMode::PerSentence,
        "cumulative" => AnnotatorMode::Cumulative,
        other => return Err(usage(format!("annotator_mode = {other}: expected per-sentence or cumulative"))),
    };
    Ok(MetricConfig {
        beta: cfg.parse("beta")?,
        max_unchanged: cfg.parse("max_unchanged")?,
        annotator_mode,
    })
}

fn feature_toggles(cfg: &RunConfig) -> CliResult<FeatureToggles> {
    let raw = cfg.require("features")?;
    match raw.as_str() {
        "vanilla" => return Ok(FeatureToggles::vanilla()),
        "edit-distance" => return Ok(FeatureToggles::with_edit_distance()),
        "edit-ops" => return Ok(FeatureToggles::with_edit_ops()),
        "all" => return Ok(FeatureToggles::all()),
        _ => {}
    }
    let mut toggles = FeatureToggles::none();
    for name in raw.split(',') {
        let name = name.trim();
        let f = DenseFeature::ALL
            .iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| usage(format!("features: unknown feature `{name}`")))?;
        toggles = toggles.with(*f);
    }
    Ok(toggles)
}

fn sparse_family(cfg: &RunConfig) -> CliResult<Option<SparseFamily>> {
    let raw = cfg.require("sparse")?;
    if raw == "none" {
        return Ok(None);
    }
    SparseFamily::ALL
        .iter()
        .find(|f| f.name() == raw)
        .copied()
        .map(Some)
        .ok_or_else(|| usage(format!("sparse = {raw}: expected none or a family name")))
}

fn load_weights(cfg: &RunConfig, toggles: FeatureToggles) -> CliResult<WeightVec> {
    match cfg.optional_input_path("weights")? {
        None => Ok(WeightVec::uniform(toggles)),
        Some(path) => {
            let text =
                fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
            Ok(WeightVec::parse(&text)?)
        }
    }
}

fn load_arpa(path: &str) -> CliResult<NGramModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    Ok(NGramModel::load_arpa(&text)?)
}

/// Assemble a decoding system from the model settings.
fn load_system(cfg: &RunConfig) -> CliResult<GecSystem> {
    let table_path = cfg.input_path("table")?;
    let table_text =
        fs::read_to_string(&table_path).map_err(|e| CliError::Data(format!("{table_path}: {e}")))?;
    let table = PhraseTable::load(&table_text)?;
    let lm = cfg.optional_input_path("lm")?.map(|p| load_arpa(&p)).transpose()?;
    let class_lm = cfg.optional_input_path("class_lm")?.map(|p| load_arpa(&p)).transpose()?;
    let osm = cfg.optional_input_path("osm")?.map(|p| load_arpa(&p)).transpose()?;
    let classmap = match cfg.optional_input_path("classes")? {
        None => None,
        Some(path) => {
            let text =
                fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
            Some(ClassMap::parse(&text)?)
        }
    };
    let osm_alphabet = match cfg.require("osm_alphabet")?.as_str() {
        "plain" => OpAlphabet::Plain,
        "lexicalized" => OpAlphabet::Lexicalized,
        other => return Err(usage(format!("osm_alphabet = {other}: expected plain or lexicalized"))),
    };
    let config = DecoderConfig {
        beam: cfg.parse("beam")?,
        k_best: cfg.parse("k")?,
        toggles: feature_toggles(cfg)?,
        sparse: sparse_family(cfg)?,
        osm_alphabet,
        ..DecoderConfig::default()
    };
    Ok(GecSystem { table, lm, class_lm, osm, classmap, config })
}

fn tune_metric(cfg: &RunConfig) -> CliResult<TuneMetric> {
    match cfg.require("metric")?.as_str() {
        "m2" => Ok(TuneMetric::M2(metric_config(cfg)?)),
        "bleu" => Ok(TuneMetric::Bleu),
        other => Err(usage(format!("metric = {other}: expected m2 or bleu"))),
    }
}

fn cmd_score(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let hyps = read_lines(&cfg.input_path("hyp")?)?;
    let gold = read_corpus(cfg, "gold")?;
    let report = corpus_m2(&gold, &hyps, &metric_config(cfg)?)?;
    let _ = write!(out, "{}", report.render());
    if let Some(path) = cfg.get("scores_out")? {
        write_output(&path, &report.render_per_sentence())?;
    }
    Ok(())
}

fn cmd_bleu(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let hyps = read_lines(&cfg.input_path("hyp")?)?;
    let gold = read_corpus(cfg, "gold")?;
    let refs: Vec<Vec<Token>> = gold.sentences.iter().map(reference).collect();
    let (score, _) = bleu(&hyps, &refs)?;
    let _ = writeln!(out, "BLEU : {score:.4}");
    Ok(())
}

fn cmd_train_lm(cfg: &RunConfig) -> CliResult<()> {
    let mut corpus = read_lines(&cfg.input_path("mono")?)?;
    if let Some(path) = cfg.optional_input_path("classes")? {
        let text = fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
        let classmap = ClassMap::parse(&text)?;
        corpus = corpus.iter().map(|s| classmap.project(s)).collect();
    }
    let model = NGramModel::train(&corpus, cfg.parse("order")?, None)?;
    write_output(&cfg.require("lm_out")?, &model.save_arpa())
}

fn cmd_train_tm(cfg: &RunConfig) -> CliResult<()> {
    let corpus = read_corpus(cfg, "corpus")?;
    let pairs = corpus.pairs();
    let (_, _, table) = train_table(&pairs, cfg.parse("em_iterations")?, cfg.parse("max_phrase_len")?)?;
    write_output(&cfg.require("table_out")?, &table.save())
}

fn cmd_decode(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let sources = read_lines(&cfg.input_path("source")?)?;
    let system = load_system(cfg)?;
    let weights = load_weights(cfg, system.config.toggles)?;
    let k = system.config.k_best;
    let mut nbest = String::new();
    for (sid, src) in sources.iter().enumerate() {
        let cands = system.decode(src, &weights, k)?;
        let best: Vec<&str> = cands[0].tokens.iter().map(|t| t.as_ref()).collect();
        let _ = writeln!(out, "{}", best.join(" "));
        nbest.push_str(&render_nbest(sid, &cands));
    }
    if let Some(path) = cfg.get("nbest_out")? {
        write_output(&path, &nbest)?;
    }
    Ok(())
}

fn cmd_tune(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let dev = read_corpus(cfg, "corpus")?;
    let system = load_system(cfg)?;
    let optimizer = match cfg.require("optimizer")?.as_str() {
        "mert" => Optimizer::Mert,
        "pro" => Optimizer::Pro,
        "mira" => Optimizer::Mira,
        other => return Err(usage(format!("optimizer = {other}: expected mert, pro or mira"))),
    };
    let plan = TuningPlan {
        folds: cfg.parse("folds")?,
        reps: cfg.parse("reps")?,
        optimizer,
        metric: tune_metric(cfg)?,
        toggles: system.config.toggles,
        k_best: cfg.parse("pool_size")?,
        max_iterations: cfg.parse("iterations")?,
        seed: cfg.parse("seed")?,
    };
    let weights_out = cfg.require("weights_out")?;
    let report_out = cfg.get("report_out")?;
    let outcome = crossfold_tune(&dev, &plan, |_, _| Ok(&system))?;
    write_output(&weights_out, &outcome.weights.render())?;
    if let Some(path) = report_out {
        write_output(&path, &outcome.report())?;
    }
    let s = &outcome.summary;
    let _ = writeln!(
        out,
        "dev metric over {} runs: mean {:.4} min {:.4} max {:.4} stddev {:.4}",
        outcome.runs.len(),
        s.mean,
        s.min,
        s.max,
        s.stddev
    );
    Ok(())
}

fn cmd_adapt_devset(cfg: &RunConfig, err: &mut dyn Write) -> CliResult<()> {
    let corpus = read_corpus(cfg, "corpus")?;
    let annotator: u32 = cfg.parse("annotator")?;
    let target: f64 = cfg.parse("target_rate")?;
    let adapted = adapt_error_rate(&corpus, annotator, target)?;
    if !adapted.reached {
        let _ = writeln!(
            err,
            "warning: target rate {target} not reachable, stopped at {:.4}",
            adapted.rate
        );
    }
    write_output(&cfg.require("out")?, &write_m2(&adapted.corpus))
}

fn cmd_make_folds(cfg: &RunConfig) -> CliResult<()> {
    let corpus = read_corpus(cfg, "corpus")?;
    let folds = make_folds(&corpus, cfg.parse("folds")?, cfg.parse("seed")?)?;
    let prefix = cfg.require("out_prefix")?;
    for (i, fold) in folds.iter().enumerate() {
        write_output(&format!("{prefix}{i}.m2"), &write_m2(fold))?;
    }
    Ok(())
}

fn cmd_filter_mono(cfg: &RunConfig) -> CliResult<()> {
    let mono_path = cfg.input_path("mono")?;
    let mono = read_lines(&mono_path)?;
    let in_domain = read_lines(&cfg.input_path("in_domain")?)?;
    let order = cfg.parse("order")?;
    let lm_in = NGramModel::train(&in_domain, order, None)?;
    let lm_gen = NGramModel::train(&mono, order, None)?;
    let (scores, kept) = moore_lewis(&mono, &lm_in, &lm_gen)?;
    let text = fs::read_to_string(&mono_path).map_err(|e| CliError::Data(format!("{mono_path}: {e}")))?;
    let lines: Vec<&str> = text.lines().collect();
    let mut out = String::new();
    for &i in &kept {
        out.push_str(lines[i]);
        out.push('\n');
    }
    write_output(&cfg.require("out")?, &out)?;
    if let Some(path) = cfg.get("scores_out")? {
        let mut tsv = String::from("sentence\tscore\tkept\n");
        for (i, s) in scores.iter().enumerate() {
            tsv.push_str(&format!("{i}\t{s:.6}\t{}\n", kept.contains(&i) as u8));
        }
        write_output(&path, &tsv)?;
    }
    Ok(())
}

fn cmd_report(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let path = cfg.input_path("tuning_log")?;
    let text = fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    let mut per_rep: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') || line.starts_with("run\t") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CliError::Data(format!("{path}:{}: expected 3 columns", lineno + 1)));
        }
        let rep: usize = fields[0]
            .parse()
            .map_err(|_| CliError::Data(format!("{path}:{}: bad run id", lineno + 1)))?;
        let metric: f64 = fields[2]
            .parse()
            .map_err(|_| CliError::Data(format!("{path}:{}: bad metric", lineno + 1)))?;
        per_rep.entry(rep).or_default().push(metric);
    }
    if per_rep.is_empty() {
        return Err(CliError::Data(format!("{path}: no tuning runs found")));
    }
    let _ = writeln!(out, "run\tfolds\tmean\tmin\tmax");
    for (rep, vals) in &per_rep {
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(out, "{rep}\t{}\t{mean:.4}\t{min:.4}\t{max:.4}", vals.len());
    }
    Ok(())
}

/// Cap rayon's worker count. Later calls with the same process keep the
/// first pool, which is fine for a cap.
fn configure_jobs(cfg: &RunConfig) -> CliResult<()> {
    let jobs: usize = match std::env::var("GECTUNE_JOBS") {
        Ok(v) => v
            .parse()
            .map_err(|_| usage(format!("GECTUNE_JOBS = {v}: expected a number")))?,
        Err(_) => cfg.parse("jobs")?,
    };
    if jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    Ok(())
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let cfg = RunConfig::assemble(cli.config.as_deref(), &cli.sets)?;
    configure_jobs(&cfg)?;
    let _ = write!(err, "{}", cfg.echo(keys_read(cli.command)));
    match cli.command {
        Command::Score => cmd_score(&cfg, out),
        Command::Bleu => cmd_bleu(&cfg, out),
        Command::TrainLm => cmd_train_lm(&cfg),
        Command::TrainTm => cmd_train_tm(&cfg),
        Command::Decode => cmd_decode(&cfg, out),
        Command::Tune => cmd_tune(&cfg, out),
        Command::AdaptDevset => cmd_adapt_devset(&cfg, err),
        Command::MakeFolds => cmd_make_folds(&cfg),
        Command::FilterMono => cmd_filter_mono(&cfg),
        Command::Report => cmd_report(&cfg, out),
    }
}

/// Run the command line and return the process exit code.
///
/// `out` receives the subcommand's primary output, `err` the configuration
/// echo and diagnostics.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let kind = e.kind();
            if kind == ErrorKind::DisplayHelp || kind == ErrorKind::DisplayVersion {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{e}");
            return 1;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}
