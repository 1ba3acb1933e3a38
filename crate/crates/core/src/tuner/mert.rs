//! Minimum error rate training: exact line search over the upper envelope
//! of per-sentence hypothesis scores.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{decode_all, pool_metric, PoolEntry, StatsCache, StatsTotal, System, TuneMetric, TuneOutcome, TunePool};
use crate::corpus::Corpus;
use crate::errors::{Error, Result};
use crate::features::{FeatureToggles, WeightVec};

#[derive(Clone, Debug)]
pub struct MertConfig {
    pub metric: TuneMetric,
    /// coordinate directions are generated for these dense slots
    pub toggles: FeatureToggles,
    pub max_iterations: usize,
    pub k_best: usize,
    pub random_directions: usize,
    /// cap on accepted line searches per decode round
    pub inner_limit: usize,
    pub seed: u64,
}

impl Default for MertConfig {
    fn default() -> Self {
        MertConfig {
            metric: TuneMetric::m2(),
            toggles: FeatureToggles::default(),
            max_iterations: 10,
            k_best: 100,
            random_directions: 20,
            inner_limit: 50,
            seed: 1,
        }
    }
}

/// Upper envelope of lines (a + γ·b): segments as (line index, left
/// boundary), left boundary of the first being −∞.
fn envelope(lines: &[(f64, f64)]) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = (0..lines.len()).collect();
    // slope asc, then intercept asc; equal lines keep the lower index first
    order.sort_by(|&x, &y| {
        lines[x]
            .1
            .total_cmp(&lines[y].1)
            .then(lines[x].0.total_cmp(&lines[y].0))
            .then(x.cmp(&y))
    });
    let mut hull: Vec<(usize, f64)> = Vec::new();
    'lines: for &li in &order {
        let (a, b) = lines[li];
        while let Some(&(ti, start)) = hull.last() {
            let (ta, tb) = lines[ti];
            if b == tb {
                if a <= ta {
                    // parallel at or below the hull line: never on top
                    continue 'lines;
                }
                hull.pop();
                continue;
            }
            let x = (ta - a) / (b - tb);
            if x <= start {
                hull.pop();
                continue;
            }
            hull.push((li, x));
            continue 'lines;
        }
        hull.push((li, f64::NEG_INFINITY));
    }
    hull
}

fn interval_mid(left: f64, right: f64) -> f64 {
    match (left.is_finite(), right.is_finite()) {
        (true, true) => 0.5 * (left + right),
        (false, true) => right - 1.0,
        (true, false) => left + 1.0,
        (false, false) => 0.0,
    }
}

/// Exact line search along `direction` from `weights`: each hypothesis's
/// score is linear in the step γ, so per sentence the maximizer changes
/// only at envelope breakpoints. Sweeping the merged breakpoints with
/// running stat totals yields the exact corpus metric on every interval.
/// Returns (γ*, metric at γ*), γ* being the midpoint of the best interval
/// (ties resolved toward the smallest |γ|).
pub fn mert_line_search(
    pool: &[Vec<PoolEntry>],
    metric: &TuneMetric,
    weights: &WeightVec,
    direction: &WeightVec,
) -> (f64, f64) {
    let mut total = StatsTotal::zero(metric);
    // (breakpoint, sentence, segment before, segment after)
    let mut events: Vec<(f64, usize, usize, usize)> = Vec::new();
    for (sid, sent) in pool.iter().enumerate() {
        if sent.is_empty() {
            continue;
        }
        let lines: Vec<(f64, f64)> = sent
            .iter()
            .map(|e| (weights.dot(&e.feats), direction.dot(&e.feats)))
            .collect();
        let hull = envelope(&lines);
        total.add(&sent[hull[0].0].stats);
        for pair in hull.windows(2) {
            events.push((pair[1].1, sid, pair[0].0, pair[1].0));
        }
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut best = (f64::NEG_INFINITY, 0.0f64); // (metric, γ)
    let consider = |m: f64, g: f64, best: &mut (f64, f64)| {
        if m > best.0
            || (m == best.0
                && (g.abs() < best.1.abs() || (g.abs() == best.1.abs() && g < best.1)))
        {
            *best = (m, g);
        }
    };
    let mut left = f64::NEG_INFINITY;
    let mut i = 0;
    loop {
        let right = events.get(i).map_or(f64::INFINITY, |e| e.0);
        consider(total.metric(metric), interval_mid(left, right), &mut best);
        if i == events.len() {
            break;
        }
        let g = events[i].0;
        while i < events.len() && events[i].0 == g {
            let (_, sid, from, to) = events[i];
            total.sub(&pool[sid][from].stats);
            total.add(&pool[sid][to].stats);
            i += 1;
        }
        left = g;
    }
    (best.1, best.0)
}

/// Iterative MERT: decode, merge the n-best into the pool, then greedily
/// accept improving line searches over coordinate plus random directions
/// until none helps. Stops when the pool stops growing or after
/// `max_iterations` rounds; returns the best weights seen by pool metric.
pub fn mert<S: System + ?Sized>(
    system: &S,
    dev: &Corpus,
    init: &WeightVec,
    config: &MertConfig,
) -> Result<TuneOutcome> {
    if config.max_iterations == 0 {
        return Err(Error::config("mert needs at least one iteration"));
    }
    let metric = &config.metric;
    let mut cache = StatsCache::default();
    let mut pool = TunePool::new(dev.sentences.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = init.clone();
    let mut log = String::new();
    let mut best: Option<(f64, WeightVec)> = None;

    for iter in 0..config.max_iterations {
        let nbests = decode_all(system, dev, &w, config.k_best)?;
        let grew = pool.merge(dev, &nbests, metric, &mut cache)?;
        if iter > 0 && !grew {
            break;
        }
        let mut cur = pool_metric(&pool, metric, &w);
        for _ in 0..config.inner_limit {
            let mut dirs: Vec<WeightVec> = config
                .toggles
                .iter()
                .map(|f| {
                    let mut d = WeightVec::zeros();
                    d.set(f, 1.0);
                    d
                })
                .collect();
            for _ in 0..config.random_directions {
                let mut d = WeightVec::zeros();
                for f in config.toggles.iter() {
                    d.set(f, rng.gen_range(-1.0..=1.0));
                }
                dirs.push(d);
            }
            let mut step: Option<(f64, f64, usize)> = None; // (metric, γ, dir)
            for (di, d) in dirs.iter().enumerate() {
                let (g, m) = mert_line_search(&pool.entries, metric, &w, d);
                let better = match step {
                    None => true,
                    Some((bm, bg, _)) => m > bm || (m == bm && g.abs() < bg.abs()),
                };
                if better {
                    step = Some((m, g, di));
                }
            }
            match step {
                Some((m, g, di)) if m > cur + 1e-12 => {
                    w = w.plus_scaled(&dirs[di], g);
                    cur = m;
                }
                _ => break,
            }
        }
        log.push_str(&format!("{iter}\t{cur:.4}\t{}\n", pool.size()));
        if best.as_ref().map_or(true, |(bm, _)| cur > *bm) {
            best = Some((cur, w.clone()));
        }
    }
    let (dev_metric, weights) = best.expect("at least one iteration ran");
    Ok(TuneOutcome {
        weights,
        dev_metric,
        log,
    })
}
