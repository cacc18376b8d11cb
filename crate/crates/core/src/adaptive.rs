//! The adaptive engines AAF and AAS.
//!
//! Both keep a compressed, column-keyed approximation of the MD propagation
//! matrix. Per edge event touching item alpha:
//!
//! * AAF replaces column alpha with one MD pass (Types I and II exact,
//!   III and IV left stale);
//! * AAS additionally rewrites row alpha with one HC pass (Type III exact
//!   too), leaving only Type IV residue.
//!
//! Event cost is proportional to the two-hop neighborhood of alpha; nothing
//! scales with |I| or |U|.

use std::collections::BTreeMap;

use crate::diffusion::{hc_from_item, md_from_item, ColumnProvider, DensePropMatrix, ScoreVector};
use crate::error::{CoreError, Result};
use crate::graph::{BipartiteGraph, EdgeEvent, EdgeOp, EdgeOutcome, ItemId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptiveKind {
    Aaf,
    Aas,
}

/// Entrywise deviation of a store from an exact matrix.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub l: u64,
    pub max_abs: f64,
    pub worst: Option<(ItemId, ItemId)>,
    /// Every position whose |store - exact| exceeds the noise floor.
    pub positions: Vec<(ItemId, ItemId, f64)>,
}

/// Noise floor separating genuine approximation residue from float rounding
/// between summation orders.
pub const ERROR_FLOOR: f64 = 1e-12;

/// Column-keyed sparse approximation of M. Columns are ordered maps so every
/// iteration (and therefore every float summation) is deterministic.
#[derive(Debug, Clone)]
pub struct SparseColumnStore {
    kind: AdaptiveKind,
    columns: Vec<BTreeMap<u32, f64>>,
    events: u64,
    value_writes: u64,
}

/// Equality is over engine state; the write counter is instrumentation.
impl PartialEq for SparseColumnStore {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.events == other.events && self.columns == other.columns
    }
}

impl SparseColumnStore {
    pub fn new(kind: AdaptiveKind) -> Self {
        SparseColumnStore {
            kind,
            columns: Vec::new(),
            events: 0,
            value_writes: 0,
        }
    }

    pub fn kind(&self) -> AdaptiveKind {
        self.kind
    }

    /// Events processed so far.
    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.len()).sum()
    }

    /// Deterministic count of stored-value writes, used to audit the
    /// complexity contract without wall clocks.
    pub fn value_writes(&self) -> u64 {
        self.value_writes
    }

    pub fn get(&self, row: ItemId, col: ItemId) -> f64 {
        self.columns
            .get(col.index())
            .and_then(|c| c.get(&row.0))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn column(&self, col: ItemId) -> impl Iterator<Item = (ItemId, f64)> + '_ {
        self.columns[col.index()]
            .iter()
            .map(|(&r, &v)| (ItemId(r), v))
    }

    /// Row alpha gathered by scanning every column; desk-scale helper.
    pub fn row_scan(&self, row: ItemId) -> Vec<(ItemId, f64)> {
        let mut out = Vec::new();
        for (c, col) in self.columns.iter().enumerate() {
            if let Some(&v) = col.get(&row.0) {
                out.push((ItemId(c as u32), v));
            }
        }
        out
    }

    /// Full transpose as row-major adjacency, one O(nnz) scan. Rows come out
    /// with ascending column ids.
    pub fn transpose(&self) -> Vec<Vec<(u32, f64)>> {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.columns.len()];
        for (c, col) in self.columns.iter().enumerate() {
            for (&r, &v) in col {
                rows[r as usize].push((c as u32, v));
            }
        }
        rows
    }

    fn ensure_columns(&mut self, n: usize) {
        while self.columns.len() < n {
            self.columns.push(BTreeMap::new());
        }
    }

    /// Snapshot restore: resets the store shell before columns stream in.
    pub fn restore_begin(&mut self, column_count: usize, events: u64) {
        self.columns = vec![BTreeMap::new(); column_count];
        self.events = events;
        self.value_writes = 0;
    }

    /// Snapshot restore: installs one column verbatim.
    pub fn restore_column(&mut self, col: ItemId, entries: Vec<(u32, f64)>) {
        self.columns[col.index()] = entries.into_iter().collect();
    }

    /// Sets every column of the store to one exact MD pass on `g`; after
    /// this the store equals the exact matrix.
    pub fn bulk_initialize(&mut self, g: &BipartiteGraph) -> Result<()> {
        self.columns.clear();
        self.ensure_columns(g.item_count());
        for c in 0..g.item_count() {
            let alpha = ItemId(c as u32);
            if g.item_degree(alpha) == 0 {
                continue;
            }
            self.replace_column(g, alpha)?;
        }
        Ok(())
    }

    fn replace_column(&mut self, g: &BipartiteGraph, alpha: ItemId) -> Result<()> {
        let v = md_from_item(g, alpha)?;
        let col = &mut self.columns[alpha.index()];
        col.clear();
        for (row, val) in v.entries {
            col.insert(row.0, val);
            self.value_writes += 1;
        }
        Ok(())
    }

    /// Feeds one event: mutates `g` first, then refreshes the touched column
    /// (and, for AAS, the touched row). Duplicate adds leave both graph and
    /// store untouched; removing a missing edge is an error.
    pub fn apply_event(&mut self, g: &mut BipartiteGraph, ev: &EdgeEvent) -> Result<EdgeOutcome> {
        // Row support can shrink only on removals; remember it while the
        // pre-event graph is still around.
        let old_row_support: Vec<ItemId> = match (self.kind, ev.op) {
            (AdaptiveKind::Aas, EdgeOp::Remove) => {
                let alpha = g
                    .item_id(&ev.item)
                    .ok_or_else(|| CoreError::MissingEdge {
                        user: ev.user.clone(),
                        item: ev.item.clone(),
                    })?;
                let mut set = std::collections::BTreeSet::new();
                for &j in g.users_of(alpha) {
                    for &beta in g.items_of(j) {
                        set.insert(beta);
                    }
                }
                set.into_iter().collect()
            }
            _ => Vec::new(),
        };

        let outcome = g.apply(ev)?;
        if outcome.duplicate {
            return Ok(outcome);
        }
        self.ensure_columns(g.item_count());
        let alpha = outcome.item;
        self.replace_column(g, alpha)?;

        if self.kind == AdaptiveKind::Aas {
            let row = hc_from_item(g, alpha)?;
            for &(beta, v) in &row.entries {
                if beta == alpha {
                    continue; // diagonal already exact from the MD pass
                }
                self.columns[beta.index()].insert(alpha.0, v);
                self.value_writes += 1;
            }
            for beta in old_row_support {
                if beta != alpha && row.get(beta) == 0.0 {
                    self.columns[beta.index()].remove(&alpha.0);
                }
            }
        }
        self.events += 1;
        Ok(outcome)
    }

    /// Recommendation scores for `user` out of the approximate store.
    pub fn score(&self, g: &BipartiteGraph, user: UserId) -> Result<ScoreVector> {
        crate::diffusion::score_user(self, g, user)
    }

    /// Entrywise comparison against an exact matrix of the same dimension.
    /// Diagonal positions are skipped: they fall outside the four-type
    /// taxonomy and recommendation never reads them (collected items are
    /// excluded from every ranking and metric).
    pub fn error_report(&self, exact: &DensePropMatrix) -> Result<ErrorReport> {
        if exact.n() != self.columns.len() {
            return Err(CoreError::DimensionMismatch {
                left: self.columns.len(),
                right: exact.n(),
            });
        }
        let n = exact.n();
        let mut report = ErrorReport {
            l: self.events,
            max_abs: 0.0,
            worst: None,
            positions: Vec::new(),
        };
        for c in 0..n {
            let col = ItemId(c as u32);
            for r in 0..n {
                if r == c {
                    continue;
                }
                let row = ItemId(r as u32);
                let d = (self.get(row, col) - exact.get(row, col)).abs();
                if d > ERROR_FLOOR {
                    report.positions.push((row, col, d));
                }
                if d > report.max_abs {
                    report.max_abs = d;
                    report.worst = Some((row, col));
                }
            }
        }
        Ok(report)
    }
}

impl ColumnProvider for SparseColumnStore {
    fn item_count(&self) -> usize {
        self.columns.len()
    }

    fn for_each_in_column(&self, item: ItemId, f: &mut dyn FnMut(ItemId, f64)) {
        for (&r, &v) in &self.columns[item.index()] {
            f(ItemId(r), v);
        }
    }
}

/// Store plus the graph it tracks; the unit the evaluation harness feeds.
#[derive(Debug, Clone)]
pub struct AdaptiveEngine {
    pub graph: BipartiteGraph,
    pub store: SparseColumnStore,
}

impl AdaptiveEngine {
    pub fn new(kind: AdaptiveKind) -> Self {
        AdaptiveEngine {
            graph: BipartiteGraph::new(),
            store: SparseColumnStore::new(kind),
        }
    }

    pub fn from_parts(graph: BipartiteGraph, store: SparseColumnStore) -> Self {
        AdaptiveEngine { graph, store }
    }

    /// Applies the event to the graph only; used during exact-init warm-up.
    pub fn warm_feed(&mut self, ev: &EdgeEvent) -> Result<EdgeOutcome> {
        self.graph.apply(ev)
    }

    pub fn bulk_initialize(&mut self) -> Result<()> {
        self.store.bulk_initialize(&self.graph)
    }

    pub fn apply(&mut self, ev: &EdgeEvent) -> Result<EdgeOutcome> {
        self.store.apply_event(&mut self.graph, ev)
    }

    pub fn score(&self, user: UserId) -> Result<ScoreVector> {
        self.store.score(&self.graph, user)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::DENSE_CAP_DEFAULT;
    use crate::fixtures;
    use crate::oracle::recompute_bruteforce;

    const TOL: f64 = 1e-12;

    fn exact_g4_engine(kind: AdaptiveKind) -> AdaptiveEngine {
        let mut e = AdaptiveEngine::new(kind);
        for ev in fixtures::g4_events() {
            e.warm_feed(&ev).unwrap();
        }
        e.bulk_initialize().unwrap();
        e
    }

    fn item(g: &BipartiteGraph, l: &str) -> ItemId {
        g.item_id(l).unwrap()
    }

    #[test]
    fn bulk_initialize_reproduces_the_exact_matrix() {
        let e = exact_g4_engine(AdaptiveKind::Aaf);
        let exact = recompute_bruteforce(&e.graph, DENSE_CAP_DEFAULT).unwrap();
        let report = e.store.error_report(&exact).unwrap();
        assert_eq!(report.max_abs, 0.0);
        assert!(report.positions.is_empty());
    }

    #[test]
    fn bulk_initialize_is_idempotent_and_empty_on_empty_graph() {
        let mut e = exact_g4_engine(AdaptiveKind::Aas);
        let once = e.store.clone();
        e.bulk_initialize().unwrap();
        assert_eq!(once.nnz(), e.store.nnz());
        let g = e.graph.clone();
        for c in 0..g.item_count() {
            let col = ItemId(c as u32);
            for (r, v) in once.column(col) {
                assert_eq!(e.store.get(r, col), v);
            }
        }

        let mut empty = AdaptiveEngine::new(AdaptiveKind::Aaf);
        empty.bulk_initialize().unwrap();
        assert_eq!(empty.store.nnz(), 0);
    }

    #[test]
    fn aaf_event_leaves_type_iii_and_iv_stale() {
        let mut e = exact_g4_engine(AdaptiveKind::Aaf);
        e.apply(&EdgeEvent::add("u2", "a", 5)).unwrap();
        let g = &e.graph;
        let (a, b, c) = (item(g, "a"), item(g, "b"), item(g, "c"));

        // Column a replaced wholesale.
        assert!((e.store.get(a, a) - 5.0 / 12.0).abs() < TOL);
        assert!((e.store.get(b, a) - 5.0 / 12.0).abs() < TOL);
        assert!((e.store.get(c, a) - 1.0 / 6.0).abs() < TOL);
        // Stale Type III entry: error is the Eq.-5 magnitude.
        assert!((e.store.get(a, b) - 0.25).abs() < TOL);
        let exact = recompute_bruteforce(g, DENSE_CAP_DEFAULT).unwrap();
        assert!(((e.store.get(a, b) - exact.get(a, b)).abs() - 1.0 / 6.0).abs() < TOL);
        // Stale Type IV entry: Eq.-6 magnitude.
        assert!(((e.store.get(c, b) - exact.get(c, b)).abs() - 1.0 / 12.0).abs() < TOL);

        let report = e.store.error_report(&exact).unwrap();
        assert!((report.max_abs - 1.0 / 3.0).abs() < TOL);
        assert_eq!(report.worst, Some((a, c)));
    }

    #[test]
    fn aas_event_leaves_only_type_iv_residue() {
        let mut e = exact_g4_engine(AdaptiveKind::Aas);
        e.apply(&EdgeEvent::add("u2", "a", 5)).unwrap();
        let g = &e.graph;
        let (a, b, c) = (item(g, "a"), item(g, "b"), item(g, "c"));

        // Row a exact after the HC pass.
        assert!((e.store.get(a, b) - 5.0 / 12.0).abs() < TOL);
        assert!((e.store.get(a, c) - 1.0 / 3.0).abs() < TOL);

        let exact = recompute_bruteforce(g, DENSE_CAP_DEFAULT).unwrap();
        let report = e.store.error_report(&exact).unwrap();
        let mut positions: Vec<(ItemId, ItemId)> =
            report.positions.iter().map(|p| (p.0, p.1)).collect();
        positions.sort();
        assert_eq!(positions, vec![(b, c), (c, b)]);
        assert!((report.max_abs - 1.0 / 6.0).abs() < TOL);
        assert_eq!(report.worst, Some((b, c)));
        assert!((e.store.get(c, b) - exact.get(c, b) - 1.0 / 12.0).abs() < TOL);
    }

    #[test]
    fn later_event_on_stale_item_clears_its_residue() {
        let mut e = exact_g4_engine(AdaptiveKind::Aas);
        e.apply(&EdgeEvent::add("u2", "a", 5)).unwrap();
        // Residue currently sits at (c,b) and (b,c); an event touching b
        // rewrites column b and row b.
        e.apply(&EdgeEvent::add("u3", "b", 6)).unwrap();
        let exact = recompute_bruteforce(&e.graph, DENSE_CAP_DEFAULT).unwrap();
        let g = &e.graph;
        let (b, c) = (item(g, "b"), item(g, "c"));
        assert!((e.store.get(c, b) - exact.get(c, b)).abs() < TOL);
        assert!((e.store.get(b, c) - exact.get(b, c)).abs() < TOL);
    }

    #[test]
    fn new_user_and_new_item_only_materializes_a_column() {
        let mut e = exact_g4_engine(AdaptiveKind::Aas);
        let before_nnz = e.store.nnz();
        let out = e.apply(&EdgeEvent::add("u9", "z", 7)).unwrap();
        assert!(out.new_user && out.new_item);
        assert_eq!(e.store.column_count(), 4);
        // The new column holds only the self-return entry; old entries are
        // untouched.
        let z = item(&e.graph, "z");
        assert_eq!(e.store.column(z).collect::<Vec<_>>(), vec![(z, 1.0)]);
        assert_eq!(e.store.nnz(), before_nnz + 1);
        let exact = recompute_bruteforce(&e.graph, DENSE_CAP_DEFAULT).unwrap();
        assert_eq!(e.store.error_report(&exact).unwrap().max_abs, 0.0);
    }

    #[test]
    fn duplicate_add_is_a_noop_for_the_store() {
        let mut e = exact_g4_engine(AdaptiveKind::Aas);
        let before = e.store.clone();
        let out = e.apply(&EdgeEvent::add("u1", "a", 8)).unwrap();
        assert!(out.duplicate);
        assert_eq!(e.store, before);
        assert!(e
            .apply(&EdgeEvent::remove("u1", "c", 9))
            .is_err());
        assert_eq!(e.store, before);
    }

    #[test]
    fn removal_keeps_touched_row_and_column_exact() {
        let mut e = AdaptiveEngine::new(AdaptiveKind::Aas);
        for ev in fixtures::g5_events() {
            e.warm_feed(&ev).unwrap();
        }
        e.bulk_initialize().unwrap();
        e.apply(&EdgeEvent::remove("u2", "a", 9)).unwrap();

        let exact = recompute_bruteforce(&e.graph, DENSE_CAP_DEFAULT).unwrap();
        let g = &e.graph;
        let a = item(g, "a");
        // Row and column a exact; residue may only sit in the removal's
        // Type-IV mirror positions.
        for r in 0..g.item_count() {
            let r = ItemId(r as u32);
            assert!((e.store.get(r, a) - exact.get(r, a)).abs() < TOL);
            assert!((e.store.get(a, r) - exact.get(a, r)).abs() < TOL);
        }
        let report = e.store.error_report(&exact).unwrap();
        for (row, col, _) in &report.positions {
            assert!(*row != a && *col != a);
        }
    }

    #[test]
    fn removal_to_degree_zero_empties_the_column() {
        let mut e = exact_g4_engine(AdaptiveKind::Aas);
        e.apply(&EdgeEvent::remove("u1", "a", 5)).unwrap();
        let a = item(&e.graph, "a");
        assert_eq!(e.store.column(a).count(), 0);
        assert_eq!(e.store.row_scan(a).len(), 0);
    }

    #[test]
    fn store_scoring_matches_static_on_exact_store() {
        let e = exact_g4_engine(AdaptiveKind::Aaf);
        let u1 = e.graph.user_id("u1").unwrap();
        let s = e.score(u1).unwrap();
        assert!((s.scores[0] - 0.75).abs() < TOL);
        assert!((s.scores[1] - 1.0).abs() < TOL);
        assert!((s.scores[2] - 0.25).abs() < TOL);
    }

    #[test]
    fn aas_error_never_exceeds_aaf_error() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut aaf = AdaptiveEngine::new(AdaptiveKind::Aaf);
        let mut aas = AdaptiveEngine::new(AdaptiveKind::Aas);
        let mut oracle = crate::oracle::OracleEngine::new(DENSE_CAP_DEFAULT);
        for t in 0..300 {
            let ev = EdgeEvent::add(
                format!("u{}", rng.random_range(0..20)),
                format!("i{}", rng.random_range(0..30)),
                t,
            );
            aaf.apply(&ev).unwrap();
            aas.apply(&ev).unwrap();
            oracle.apply(&ev).unwrap();
            if t % 25 == 0 {
                let aaf_err = aaf.store.error_report(oracle.matrix()).unwrap().max_abs;
                let aas_err = aas.store.error_report(oracle.matrix()).unwrap().max_abs;
                assert!(aas_err <= aaf_err + 1e-9, "event {t}: {aas_err} > {aaf_err}");
            }
        }
    }
}
