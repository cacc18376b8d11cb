//! Streaming evaluation harness: split, time-ordered feed, periodic
//! checkpoints comparing the static recomputation against AAF and AAS.
//!
//! All metrics are individual-based and averaged over eligible users. AUC is
//! the exact pair statistic (ties count one half), never a sampled estimate.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adaptive::{AdaptiveEngine, AdaptiveKind, SparseColumnStore};
use crate::diffusion::{
    hybrid_score, hybrid_score_static, recommend_top_k, score_user_static, ColumnProvider,
    ScoreVector,
};
use crate::error::{CoreError, Result};
use crate::graph::{BipartiteGraph, EdgeEvent, EdgeOp, ItemId, UserId};

/// How the random train/test partition is drawn.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Self {
        SplitSpec {
            test_fraction,
            seed,
        }
    }
}

/// Uniform random partition of an add-only event list; the training side is
/// re-sorted by (timestamp, input order), the test side is returned in input
/// order.
pub fn split_edges(
    events: &[EdgeEvent],
    spec: &SplitSpec,
) -> Result<(Vec<EdgeEvent>, Vec<EdgeEvent>)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    if events.iter().any(|e| e.op == EdgeOp::Remove) {
        return Err(CoreError::InvalidParameter(
            "split requires an add-only event list".into(),
        ));
    }
    if events.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let n = events.len();
    let want = ((spec.test_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let picked = rand::seq::index::sample(&mut rng, n, want);
    let mut is_test = vec![false; n];
    for idx in picked.iter() {
        is_test[idx] = true;
    }
    let mut train = Vec::with_capacity(n - want);
    let mut test = Vec::with_capacity(want);
    for (idx, ev) in events.iter().enumerate() {
        if is_test[idx] {
            test.push(ev.clone());
        } else {
            train.push(ev.clone());
        }
    }
    // Input order is preserved by the partition; a stable sort by timestamp
    // keeps it as the tiebreak.
    train.sort_by_key(|e| e.ts);
    Ok((train, test))
}

/// Held-out edges grouped by user label.
#[derive(Debug, Clone, Default)]
pub struct TestIndex {
    by_user: HashMap<String, Vec<String>>,
}

impl TestIndex {
    pub fn new(test: &[EdgeEvent]) -> Self {
        let mut by_user: HashMap<String, Vec<String>> = HashMap::new();
        for ev in test {
            by_user.entry(ev.user.clone()).or_default().push(ev.item.clone());
        }
        TestIndex { by_user }
    }

    pub fn items_of(&self, user_label: &str) -> &[String] {
        self.by_user
            .get(user_label)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Per-user evaluation sets at one checkpoint. The candidate universe is the
/// set of items registered in the training graph; F is its complement of
/// T and the profile and is kept implicit.
#[derive(Debug, Clone)]
pub struct UserEvalSets {
    pub user: UserId,
    /// Gamma_i: training profile, sorted.
    pub collected: Vec<ItemId>,
    /// T_i: held-out items currently present in the universe, sorted.
    pub test_items: Vec<ItemId>,
    /// Size of the item universe.
    pub universe: usize,
}

impl UserEvalSets {
    pub fn f_count(&self) -> usize {
        self.universe - self.collected.len() - self.test_items.len()
    }

    /// A user enters the averages only when all three sets are non-empty.
    pub fn eligible(&self) -> bool {
        !self.collected.is_empty() && !self.test_items.is_empty() && self.f_count() > 0
    }
}

/// Builds the evaluation sets of one user against the current graph. A test
/// item that also sits in the training profile (possible only when the event
/// list was not deduplicated) counts as known and is dropped from T.
pub fn user_eval_sets(g: &BipartiteGraph, test: &TestIndex, user: UserId) -> UserEvalSets {
    let collected = g.items_of(user).to_vec();
    let mut test_items: Vec<ItemId> = test
        .items_of(g.user_label(user))
        .iter()
        .filter_map(|label| g.item_id(label))
        .filter(|i| collected.binary_search(i).is_err())
        .collect();
    test_items.sort_unstable();
    test_items.dedup();
    UserEvalSets {
        user,
        collected,
        test_items,
        universe: g.item_count(),
    }
}

/// Exact AUC pair statistic: P(test item ranked above non-relevant item),
/// ties counting one half. None when either set is empty.
pub fn auc_user(scores: &ScoreVector, sets: &UserEvalSets) -> Option<f64> {
    if sets.test_items.is_empty() || sets.f_count() == 0 {
        return None;
    }
    let n = scores.scores.len();
    let mut in_profile = vec![false; n];
    for &i in &sets.collected {
        in_profile[i.index()] = true;
    }
    let mut in_test = vec![false; n];
    for &i in &sets.test_items {
        in_test[i.index()] = true;
    }
    let mut f_scores: Vec<f64> = Vec::with_capacity(sets.f_count());
    let mut t_scores: Vec<f64> = Vec::with_capacity(sets.test_items.len());
    for idx in 0..n {
        if in_profile[idx] {
            continue;
        }
        if in_test[idx] {
            t_scores.push(scores.scores[idx]);
        } else {
            f_scores.push(scores.scores[idx]);
        }
    }
    f_scores.sort_by(f64::total_cmp);
    let mut sum = 0.0f64;
    for &t in &t_scores {
        let below = f_scores.partition_point(|&f| f < t);
        let below_or_eq = f_scores.partition_point(|&f| f <= t);
        sum += below as f64 + 0.5 * (below_or_eq - below) as f64;
    }
    Some(sum / (t_scores.len() as f64 * f_scores.len() as f64))
}

/// Precision and recall of a ranked list against the user's test set; None
/// when the test set is empty. Precision divides by the configured K.
pub fn precision_recall_user(
    ranked: &[ItemId],
    sets: &UserEvalSets,
    k: usize,
) -> Option<(f64, f64)> {
    if sets.test_items.is_empty() {
        return None;
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|i| sets.test_items.binary_search(i).is_ok())
        .count();
    Some((
        hits as f64 / k as f64,
        hits as f64 / sets.test_items.len() as f64,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgoId {
    Static,
    Aaf,
    Aas,
}

impl AlgoId {
    pub fn name(self) -> &'static str {
        match self {
            AlgoId::Static => "static",
            AlgoId::Aaf => "aaf",
            AlgoId::Aas => "aas",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmStart {
    /// Feed the graph only until the start threshold, then set the store
    /// exactly with one bulk pass (the paper's protocol).
    ExactInit,
    /// Run the adaptive updates from the empty graph, accepting early
    /// residue.
    Replay,
}

#[derive(Debug, Clone)]
pub struct StreamConfig {
    pub checkpoint_interval: u64,
    pub start_threshold: u64,
    pub ks: Vec<usize>,
    pub lambda: Option<f64>,
    pub warm_start: WarmStart,
    /// Cap gating desk-scale-only paths (adaptive hybrid reads).
    pub dense_cap: usize,
    /// Timing is measured wall-clock and therefore excluded from determinism
    /// guarantees; disable it to make reports bit-reproducible.
    pub measure_timing: bool,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            checkpoint_interval: 5000,
            start_threshold: 5000,
            ks: vec![100, 300, 500],
            lambda: None,
            warm_start: WarmStart::ExactInit,
            dense_cap: crate::diffusion::DENSE_CAP_DEFAULT,
            measure_timing: true,
        }
    }
}

/// Metrics of one algorithm at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoMetrics {
    pub algo: AlgoId,
    pub auc: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub users_evaluated: usize,
    pub users_excluded: usize,
    /// Amortized update cost over the events since the previous checkpoint,
    /// in microseconds; 0 when timing is off.
    pub us_per_event: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointReport {
    pub edges_fed: u64,
    pub metrics: Vec<AlgoMetrics>,
}

/// One engine in the stream: the static comparator is just the graph (it
/// rescoring users from scratch at checkpoints), adaptive engines carry
/// their store.
pub enum StreamEngine {
    Static(BipartiteGraph),
    Adaptive(AdaptiveEngine),
}

impl StreamEngine {
    fn graph(&self) -> &BipartiteGraph {
        match self {
            StreamEngine::Static(g) => g,
            StreamEngine::Adaptive(e) => &e.graph,
        }
    }
}

/// Restorable engine state paired with the stream position.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineSnapshot {
    pub algo: AlgoId,
    pub events_fed: u64,
    pub graph: BipartiteGraph,
    pub store: Option<SparseColumnStore>,
}

pub struct StreamRunner {
    engines: Vec<(AlgoId, StreamEngine)>,
    cfg: StreamConfig,
    test: TestIndex,
    fed: u64,
    feed_time: Vec<std::time::Duration>,
    window_events: u64,
}

impl StreamRunner {
    pub fn new(algos: &[AlgoId], test: &[EdgeEvent], cfg: StreamConfig) -> Result<Self> {
        if algos.is_empty() {
            return Err(CoreError::InvalidParameter(
                "at least one algorithm is required".into(),
            ));
        }
        if let Some(lambda) = cfg.lambda {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(CoreError::InvalidParameter(format!(
                    "lambda must lie in [0, 1], got {lambda}"
                )));
            }
        }
        let engines = algos
            .iter()
            .map(|&a| {
                let engine = match a {
                    AlgoId::Static => StreamEngine::Static(BipartiteGraph::new()),
                    AlgoId::Aaf => StreamEngine::Adaptive(AdaptiveEngine::new(AdaptiveKind::Aaf)),
                    AlgoId::Aas => StreamEngine::Adaptive(AdaptiveEngine::new(AdaptiveKind::Aas)),
                };
                (a, engine)
            })
            .collect::<Vec<_>>();
        let feed_time = vec![std::time::Duration::ZERO; engines.len()];
        Ok(StreamRunner {
            engines,
            cfg,
            test: TestIndex::new(test),
            fed: 0,
            feed_time,
            window_events: 0,
        })
    }

    /// Rebuilds a runner from engine snapshots taken mid-stream; all
    /// snapshots must sit at the same position.
    pub fn resume(
        snapshots: Vec<EngineSnapshot>,
        test: &[EdgeEvent],
        cfg: StreamConfig,
    ) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(CoreError::InvalidParameter(
                "no snapshots to resume from".into(),
            ));
        }
        let fed = snapshots[0].events_fed;
        if snapshots.iter().any(|s| s.events_fed != fed) {
            return Err(CoreError::InvalidParameter(
                "snapshots disagree on stream position".into(),
            ));
        }
        let n = snapshots.len();
        let engines = snapshots
            .into_iter()
            .map(|s| {
                let engine = match (s.algo, s.store) {
                    (AlgoId::Static, _) => StreamEngine::Static(s.graph),
                    (_, Some(store)) => {
                        StreamEngine::Adaptive(AdaptiveEngine::from_parts(s.graph, store))
                    }
                    (algo, None) => {
                        return Err(CoreError::SnapshotCorrupt(format!(
                            "{} snapshot lacks a store",
                            algo.name()
                        )))
                    }
                };
                Ok((s.algo, engine))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StreamRunner {
            engines,
            cfg,
            test: TestIndex::new(test),
            fed,
            feed_time: vec![std::time::Duration::ZERO; n],
            window_events: 0,
        })
    }

    pub fn events_fed(&self) -> u64 {
        self.fed
    }

    pub fn snapshots(&self) -> Vec<EngineSnapshot> {
        self.engines
            .iter()
            .map(|(algo, e)| match e {
                StreamEngine::Static(g) => EngineSnapshot {
                    algo: *algo,
                    events_fed: self.fed,
                    graph: g.clone(),
                    store: None,
                },
                StreamEngine::Adaptive(ae) => EngineSnapshot {
                    algo: *algo,
                    events_fed: self.fed,
                    graph: ae.graph.clone(),
                    store: Some(ae.store.clone()),
                },
            })
            .collect()
    }

    fn feed_one(&mut self, ev: &EdgeEvent) -> Result<()> {
        let l_after = self.fed + 1;
        let exact_init = self.cfg.warm_start == WarmStart::ExactInit;
        for (idx, (_, engine)) in self.engines.iter_mut().enumerate() {
            let warm = exact_init && l_after <= self.cfg.start_threshold;
            let start = if self.cfg.measure_timing {
                Some(std::time::Instant::now())
            } else {
                None
            };
            match engine {
                StreamEngine::Static(g) => {
                    g.apply(ev)?;
                }
                StreamEngine::Adaptive(e) => {
                    if warm {
                        e.warm_feed(ev)?;
                    } else {
                        e.apply(ev)?;
                    }
                }
            }
            if let Some(start) = start {
                self.feed_time[idx] += start.elapsed();
            }
            // Warm-start setup cost stays out of the per-event numbers.
            if warm && l_after == self.cfg.start_threshold {
                if let StreamEngine::Adaptive(e) = engine {
                    e.bulk_initialize()?;
                }
            }
        }
        self.fed = l_after;
        self.window_events += 1;
        Ok(())
    }

    fn due_checkpoint(&self) -> bool {
        let l = self.fed;
        l >= self.cfg.start_threshold
            && (l - self.cfg.start_threshold) % self.cfg.checkpoint_interval == 0
    }

    /// Feeds the remaining training events, collecting a report at every due
    /// checkpoint.
    pub fn run(&mut self, train: &[EdgeEvent]) -> Result<Vec<CheckpointReport>> {
        self.run_until(train, train.len() as u64)
    }

    /// Feeds events until `stop_at` events have been applied in total.
    pub fn run_until(&mut self, train: &[EdgeEvent], stop_at: u64) -> Result<Vec<CheckpointReport>> {
        let stop = stop_at.min(train.len() as u64);
        let mut reports = Vec::new();
        while self.fed < stop {
            let ev = &train[self.fed as usize];
            self.feed_one(ev)?;
            if self.due_checkpoint() {
                reports.push(self.checkpoint()?);
            }
        }
        Ok(reports)
    }

    fn checkpoint(&mut self) -> Result<CheckpointReport> {
        let reference = self.engines[0].1.graph();
        reference.audit()?;
        for (_, e) in &self.engines[1..] {
            let g = e.graph();
            g.audit()?;
            if g.edge_count() != reference.edge_count()
                || g.user_count() != reference.user_count()
                || g.item_count() != reference.item_count()
            {
                return Err(CoreError::InconsistentGraph(
                    "engines disagree on graph shape".into(),
                ));
            }
        }
        let window = self.window_events.max(1);
        let mut metrics = Vec::with_capacity(self.engines.len());
        for (idx, (algo, engine)) in self.engines.iter().enumerate() {
            let us = if self.cfg.measure_timing {
                self.feed_time[idx].as_secs_f64() * 1e6 / window as f64
            } else {
                0.0
            };
            metrics.push(evaluate_engine(
                *algo,
                engine,
                &self.test,
                &self.cfg,
                us,
            )?);
        }
        for t in &mut self.feed_time {
            *t = std::time::Duration::ZERO;
        }
        self.window_events = 0;
        Ok(CheckpointReport {
            edges_fed: self.fed,
            metrics,
        })
    }
}

/// Convenience wrapper: split-fed streaming run start to finish.
pub fn run_stream(
    algos: &[AlgoId],
    train: &[EdgeEvent],
    test: &[EdgeEvent],
    cfg: StreamConfig,
) -> Result<Vec<CheckpointReport>> {
    let mut runner = StreamRunner::new(algos, test, cfg)?;
    runner.run(train)
}

struct UserOutcome {
    auc: f64,
    precision: Vec<f64>,
    recall: Vec<f64>,
}

fn evaluate_engine(
    algo: AlgoId,
    engine: &StreamEngine,
    test: &TestIndex,
    cfg: &StreamConfig,
    us_per_event: f64,
) -> Result<AlgoMetrics> {
    let g = engine.graph();
    let transpose = match (engine, cfg.lambda) {
        (StreamEngine::Adaptive(e), Some(_)) => {
            if g.item_count() > cfg.dense_cap {
                return Err(CoreError::SizeCap {
                    items: g.item_count(),
                    cap: cfg.dense_cap,
                });
            }
            Some(e.store.transpose())
        }
        _ => None,
    };
    let kmax = cfg.ks.iter().copied().max().unwrap_or(0);
    let score_and_judge = |uid: u32| -> Result<Option<UserOutcome>> {
        let user = UserId(uid);
        let sets = user_eval_sets(g, test, user);
        if !sets.eligible() {
            return Ok(None);
        }
        let scores = match engine {
            StreamEngine::Static(g) => match cfg.lambda {
                None => score_user_static(g, user)?,
                Some(lambda) => hybrid_score_static(g, user, lambda)?,
            },
            StreamEngine::Adaptive(e) => match cfg.lambda {
                None => e.score(user)?,
                Some(lambda) => {
                    let view = TransposeView(transpose.as_ref().unwrap());
                    hybrid_score(&e.store, &view, g, user, lambda)?
                }
            },
        };
        let auc = auc_user(&scores, &sets).expect("eligibility checked");
        let ranked = recommend_top_k(&scores, &sets.collected, kmax);
        let mut precision = Vec::with_capacity(cfg.ks.len());
        let mut recall = Vec::with_capacity(cfg.ks.len());
        for &k in &cfg.ks {
            let (p, r) = precision_recall_user(&ranked, &sets, k).expect("non-empty test set");
            precision.push(p);
            recall.push(r);
        }
        Ok(Some(UserOutcome {
            auc,
            precision,
            recall,
        }))
    };

    let outcomes = map_users(g.user_count(), &score_and_judge)?;

    let mut included = 0usize;
    let mut auc_sum = 0.0;
    let mut p_sum = vec![0.0; cfg.ks.len()];
    let mut r_sum = vec![0.0; cfg.ks.len()];
    for outcome in outcomes.into_iter().flatten() {
        included += 1;
        auc_sum += outcome.auc;
        for (i, v) in outcome.precision.iter().enumerate() {
            p_sum[i] += v;
        }
        for (i, v) in outcome.recall.iter().enumerate() {
            r_sum[i] += v;
        }
    }
    let denom = included.max(1) as f64;
    Ok(AlgoMetrics {
        algo,
        auc: auc_sum / denom,
        precision: p_sum.iter().map(|v| v / denom).collect(),
        recall: r_sum.iter().map(|v| v / denom).collect(),
        users_evaluated: included,
        users_excluded: g.user_count() - included,
        us_per_event,
    })
}

/// Checkpoint fan-out across users; parallel off-wasm, ordered either way so
/// the final averaging order is fixed.
#[cfg(not(target_arch = "wasm32"))]
fn map_users<F>(n: usize, f: &F) -> Result<Vec<Option<UserOutcome>>>
where
    F: Fn(u32) -> Result<Option<UserOutcome>> + Sync,
{
    use rayon::prelude::*;
    (0..n as u32).into_par_iter().map(f).collect()
}

#[cfg(target_arch = "wasm32")]
fn map_users<F>(n: usize, f: &F) -> Result<Vec<Option<UserOutcome>>>
where
    F: Fn(u32) -> Result<Option<UserOutcome>>,
{
    (0..n as u32).map(f).collect()
}

/// Column view over a row-major transpose produced by
/// `SparseColumnStore::transpose`; column gamma of H is row gamma of M.
struct TransposeView<'a>(&'a Vec<Vec<(u32, f64)>>);

impl ColumnProvider for TransposeView<'_> {
    fn item_count(&self) -> usize {
        self.0.len()
    }

    fn for_each_in_column(&self, item: ItemId, f: &mut dyn FnMut(ItemId, f64)) {
        for &(col, v) in &self.0[item.index()] {
            f(ItemId(col), v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn add_events(n: usize) -> Vec<EdgeEvent> {
        (0..n)
            .map(|t| EdgeEvent::add(format!("u{}", t % 7), format!("i{}", t % 11), t as i64))
            .collect()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let events: Vec<EdgeEvent> = (0..100)
            .map(|t| EdgeEvent::add(format!("u{t}"), format!("i{t}"), t as i64))
            .collect();
        let spec = SplitSpec::new(0.10, 7);
        let (train, test) = split_edges(&events, &spec).unwrap();
        assert_eq!(test.len(), 10);
        assert_eq!(train.len(), 90);
        let (train2, test2) = split_edges(&events, &spec).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        // Partition: every event lands on exactly one side.
        assert_eq!(train.len() + test.len(), events.len());
    }

    #[test]
    fn split_keeps_at_least_one_test_edge() {
        let events: Vec<EdgeEvent> = (0..10)
            .map(|t| EdgeEvent::add(format!("u{t}"), "x", t as i64))
            .collect();
        let (_, test) = split_edges(&events, &SplitSpec::new(0.001, 1)).unwrap();
        assert_eq!(test.len(), 1);
    }

    #[test]
    fn split_rejects_removals_and_bad_fractions() {
        let evs = vec![EdgeEvent::remove("u", "i", 0)];
        assert!(split_edges(&evs, &SplitSpec::new(0.1, 0)).is_err());
        let evs = vec![EdgeEvent::add("u", "i", 0)];
        assert!(split_edges(&evs, &SplitSpec::new(0.0, 0)).is_err());
        assert!(split_edges(&evs, &SplitSpec::new(1.0, 0)).is_err());
    }

    fn sets_for(scores: &[f64], t: &[u32], collected: &[u32]) -> (ScoreVector, UserEvalSets) {
        let sv = ScoreVector {
            user: UserId(0),
            l: 0,
            scores: scores.to_vec(),
            degenerate: false,
        };
        let sets = UserEvalSets {
            user: UserId(0),
            collected: collected.iter().map(|&i| ItemId(i)).collect(),
            test_items: t.iter().map(|&i| ItemId(i)).collect(),
            universe: scores.len(),
        };
        (sv, sets)
    }

    #[test]
    fn auc_perfect_separation() {
        let (sv, sets) = sets_for(&[0.9, 0.4, 0.1], &[0], &[]);
        assert_eq!(auc_user(&sv, &sets), Some(1.0));
    }

    #[test]
    fn auc_tie_counts_half() {
        let (sv, sets) = sets_for(&[0.5, 0.5], &[0], &[]);
        assert_eq!(auc_user(&sv, &sets), Some(0.5));
    }

    #[test]
    fn auc_undefined_without_both_sets() {
        let (sv, sets) = sets_for(&[0.5, 0.5], &[0, 1], &[]);
        assert_eq!(auc_user(&sv, &sets), None);
    }

    #[test]
    fn auc_matches_monte_carlo_pair_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..1.0)).collect();
        let t: Vec<u32> = (0..12).collect();
        let (sv, sets) = sets_for(&scores, &t, &[]);
        let exact = auc_user(&sv, &sets).unwrap();
        let mut wins = 0.0;
        let trials = 200_000;
        for _ in 0..trials {
            let ti = sets.test_items[rng.random_range(0..sets.test_items.len())];
            let fi = loop {
                let c = rng.random_range(0..scores.len());
                if !t.contains(&(c as u32)) {
                    break c;
                }
            };
            let (st, sf) = (scores[ti.index()], scores[fi]);
            if st > sf {
                wins += 1.0;
            } else if st == sf {
                wins += 0.5;
            }
        }
        let mc = wins / trials as f64;
        assert!((mc - exact).abs() < 0.01, "mc {mc} vs exact {exact}");
    }

    #[test]
    fn metrics_invariant_under_monotone_transform() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scores: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..1.0)).collect();
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s + 1.0).exp()).collect();
        let t: Vec<u32> = vec![1, 5, 9];
        let collected: Vec<u32> = vec![0, 2];
        let (sv1, sets) = sets_for(&scores, &t, &collected);
        let (sv2, _) = sets_for(&transformed, &t, &collected);
        assert_eq!(auc_user(&sv1, &sets), auc_user(&sv2, &sets));
        let r1 = recommend_top_k(&sv1, &sets.collected, 10);
        let r2 = recommend_top_k(&sv2, &sets.collected, 10);
        assert_eq!(r1, r2);
        assert_eq!(
            precision_recall_user(&r1, &sets, 10),
            precision_recall_user(&r2, &sets, 10)
        );
    }

    #[test]
    fn precision_recall_worked_example() {
        // T = {c, d}; ranked = [c, e]; K = 2.
        let sets = UserEvalSets {
            user: UserId(0),
            collected: vec![],
            test_items: vec![ItemId(2), ItemId(3)],
            universe: 6,
        };
        let ranked = vec![ItemId(2), ItemId(4)];
        let (p, r) = precision_recall_user(&ranked, &sets, 2).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(r, 0.5);
    }

    #[test]
    fn precision_recall_all_hits_and_empty_test() {
        let sets = UserEvalSets {
            user: UserId(0),
            collected: vec![],
            test_items: vec![ItemId(0), ItemId(1), ItemId(2)],
            universe: 8,
        };
        let ranked = vec![ItemId(0), ItemId(1)];
        let (p, r) = precision_recall_user(&ranked, &sets, 2).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(r, 2.0 / 3.0);

        let empty = UserEvalSets {
            user: UserId(0),
            collected: vec![],
            test_items: vec![],
            universe: 8,
        };
        assert_eq!(precision_recall_user(&ranked, &empty, 2), None);
    }

    #[test]
    fn stream_with_threshold_beyond_train_is_empty() {
        let events = add_events(40);
        let (train, test) = split_edges(&events, &SplitSpec::new(0.2, 1)).unwrap();
        let cfg = StreamConfig {
            checkpoint_interval: 10,
            start_threshold: 10_000,
            ks: vec![2],
            measure_timing: false,
            ..StreamConfig::default()
        };
        let reports = run_stream(&[AlgoId::Static], &train, &test, cfg).unwrap();
        assert!(reports.is_empty());
    }

    #[test]
    fn stream_checkpoints_are_deterministic_and_adaptive_tracks_static() {
        let events = add_events(120);
        let (train, test) = split_edges(&events, &SplitSpec::new(0.15, 9)).unwrap();
        let cfg = StreamConfig {
            checkpoint_interval: 20,
            start_threshold: 30,
            ks: vec![2, 4],
            measure_timing: false,
            ..StreamConfig::default()
        };
        let algos = [AlgoId::Static, AlgoId::Aaf, AlgoId::Aas];
        let a = run_stream(&algos, &train, &test, cfg.clone()).unwrap();
        let b = run_stream(&algos, &train, &test, cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        for report in &a {
            assert_eq!(report.metrics.len(), 3);
            for m in &report.metrics {
                assert!(m.auc >= 0.0 && m.auc <= 1.0);
                for v in m.precision.iter().chain(&m.recall) {
                    assert!(*v >= 0.0 && *v <= 1.0);
                }
            }
        }
    }

    #[test]
    fn snapshot_resume_reproduces_reports() {
        let events = add_events(150);
        let (train, test) = split_edges(&events, &SplitSpec::new(0.1, 4)).unwrap();
        let cfg = StreamConfig {
            checkpoint_interval: 15,
            start_threshold: 20,
            ks: vec![3],
            measure_timing: false,
            ..StreamConfig::default()
        };
        let algos = [AlgoId::Static, AlgoId::Aas];
        let full = run_stream(&algos, &train, &test, cfg.clone()).unwrap();

        let mut head = StreamRunner::new(&algos, &test, cfg.clone()).unwrap();
        let mut reports = head.run_until(&train, 50).unwrap();
        let snaps = head.snapshots();
        let mut tail = StreamRunner::resume(snaps, &test, cfg).unwrap();
        reports.extend(tail.run(&train).unwrap());
        assert_eq!(full, reports);
    }

    #[test]
    fn hybrid_stream_runs_on_fixture_scale() {
        let mut events = fixtures::g5_events();
        events.extend(add_events(30));
        let (train, test) = split_edges(&events, &SplitSpec::new(0.2, 2)).unwrap();
        let cfg = StreamConfig {
            checkpoint_interval: 5,
            start_threshold: 5,
            ks: vec![2],
            lambda: Some(0.5),
            measure_timing: false,
            ..StreamConfig::default()
        };
        let reports =
            run_stream(&[AlgoId::Static, AlgoId::Aas], &train, &test, cfg).unwrap();
        assert!(!reports.is_empty());
    }
}
