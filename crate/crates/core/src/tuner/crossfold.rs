//! Cross-fold tuning: tune on each fold against models built from the
//! remaining folds, average the fold vectors, repeat, and average the
//! repetition centroids. The per-run dev metrics feed a variance report,
//! since all three optimizers are stochastic enough to scatter.

use super::{average_weights, mert, mira, pro, MertConfig, MiraConfig, ProConfig, System, TuneMetric, TuneOutcome};
use crate::corpus::{make_folds, Corpus};
use crate::errors::{Error, Result};
use crate::features::{FeatureToggles, WeightVec, NUM_DENSE};
use crate::util::derive_seed;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Optimizer {
    Mert,
    Pro,
    Mira,
}

#[derive(Clone, Debug)]
pub struct TuningPlan {
    pub folds: usize,
    pub reps: usize,
    pub optimizer: Optimizer,
    pub metric: TuneMetric,
    pub toggles: FeatureToggles,
    pub k_best: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for TuningPlan {
    fn default() -> Self {
        TuningPlan {
            folds: 4,
            reps: 5,
            optimizer: Optimizer::Mert,
            metric: TuneMetric::m2(),
            toggles: FeatureToggles::default(),
            k_best: 100,
            max_iterations: 10,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunRecord {
    pub rep: usize,
    pub fold: usize,
    pub dev_metric: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct VarianceSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Clone, Debug)]
pub struct CrossfoldOutcome {
    pub weights: WeightVec,
    pub runs: Vec<RunRecord>,
    pub summary: VarianceSummary,
}

impl CrossfoldOutcome {
    /// Variance report: TSV rows per tuning run plus a summary comment.
    pub fn report(&self) -> String {
        let mut out = String::from("run\tfold\tdev_metric\n");
        for r in &self.runs {
            out.push_str(&format!("{}\t{}\t{:.4}\n", r.rep, r.fold, r.dev_metric));
        }
        let s = &self.summary;
        out.push_str(&format!(
            "# min={:.4} max={:.4} mean={:.4} stddev={:.4}\n",
            s.min, s.max, s.mean, s.stddev
        ));
        out
    }
}

fn summarize(runs: &[RunRecord]) -> VarianceSummary {
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r.dev_metric).sum::<f64>() / n;
    let var = runs.iter().map(|r| (r.dev_metric - mean).powi(2)).sum::<f64>() / n;
    VarianceSummary {
        min: runs.iter().map(|r| r.dev_metric).fold(f64::INFINITY, f64::min),
        max: runs.iter().map(|r| r.dev_metric).fold(f64::NEG_INFINITY, f64::max),
        mean,
        stddev: var.sqrt(),
    }
}

/// Plain per-coordinate mean; the fold centroids are already normalized.
fn mean_weights(runs: &[WeightVec]) -> WeightVec {
    let n = runs.len() as f64;
    let mut out = WeightVec::zeros();
    for run in runs {
        for i in 0..NUM_DENSE {
            out.dense[i] += run.dense[i] / n;
        }
        for (name, v) in &run.sparse {
            *out.sparse.entry(name.clone()).or_insert(0.0) += v / n;
        }
    }
    out
}

/// Split the corpus into folds, tune each fold against a system built from
/// the others, and average: fold vectors into a repetition centroid, then
/// centroids across repetitions. `build` receives the training folds and
/// the fold index.
pub fn crossfold_tune<S, F>(
    corpus: &Corpus,
    plan: &TuningPlan,
    build: F,
) -> Result<CrossfoldOutcome>
where
    S: System,
    F: Fn(&Corpus, usize) -> Result<S>,
{
    if plan.folds < 2 {
        return Err(Error::config("need at least two folds"));
    }
    if plan.reps == 0 {
        return Err(Error::config("need at least one repetition"));
    }
    let folds = make_folds(corpus, plan.folds, derive_seed(plan.seed, "folds", 0, 0))?;
    let init = WeightVec::uniform(plan.toggles);
    let mut runs = Vec::new();
    let mut centroids = Vec::new();
    for rep in 0..plan.reps {
        let mut fold_weights = Vec::new();
        for f in 0..plan.folds {
            let train = Corpus::new(
                folds
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != f)
                    .flat_map(|(_, c)| c.sentences.iter().cloned())
                    .collect(),
            );
            let system = build(&train, f)?;
            let seed = derive_seed(plan.seed, "tune", rep as u64, f as u64);
            let outcome = run_optimizer(&system, &folds[f], &init, plan, seed)?;
            runs.push(RunRecord {
                rep,
                fold: f,
                dev_metric: outcome.dev_metric,
            });
            fold_weights.push(outcome.weights);
        }
        centroids.push(average_weights(&fold_weights)?);
    }
    Ok(CrossfoldOutcome {
        weights: mean_weights(&centroids),
        summary: summarize(&runs),
        runs,
    })
}

fn run_optimizer<S: System>(
    system: &S,
    dev: &Corpus,
    init: &WeightVec,
    plan: &TuningPlan,
    seed: u64,
) -> Result<TuneOutcome> {
    match plan.optimizer {
        Optimizer::Mert => mert(
            system,
            dev,
            init,
            &MertConfig {
                metric: plan.metric.clone(),
                toggles: plan.toggles,
                max_iterations: plan.max_iterations,
                k_best: plan.k_best,
                seed,
                ..MertConfig::default()
            },
        ),
        Optimizer::Pro => pro(
            system,
            dev,
            init,
            &ProConfig {
                metric: plan.metric.clone(),
                max_iterations: plan.max_iterations,
                k_best: plan.k_best,
                seed,
                ..ProConfig::default()
            },
        ),
        Optimizer::Mira => mira(
            system,
            dev,
            init,
            &MiraConfig {
                metric: plan.metric.clone(),
                epochs: plan.max_iterations,
                k_best: plan.k_best,
                seed,
                ..MiraConfig::default()
            },
        ),
    }
}
