//! Static diffusion kernels.
//!
//! Mass diffusion (MD) splits each node's resource equally among neighbors;
//! heat conduction (HC) gives each node the mean of its neighbors. Both run
//! item -> users -> items in one step. The two propagation matrices are
//! transposes of each other, which `build_dense_hc` exploits directly.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::graph::{BipartiteGraph, ItemId, UserId};

/// Default cap on the item count for dense matrix construction. Dense storage
/// is O(|I|^2) and meant for desk-scale verification only.
pub const DENSE_CAP_DEFAULT: usize = 20_000;

/// One column (MD) or row (HC) of the propagation matrix, sparse and sorted
/// by item id. Entries are nonzero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseItemVector {
    pub source: ItemId,
    pub entries: Vec<(ItemId, f64)>,
    /// Set when the source item had degree zero and no diffusion took place.
    pub degenerate: bool,
}

impl SparseItemVector {
    pub fn get(&self, item: ItemId) -> f64 {
        match self.entries.binary_search_by_key(&item, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Final resource distribution over all registered items for one target user.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub user: UserId,
    /// Edge count of the graph at computation time.
    pub l: u64,
    pub scores: Vec<f64>,
    /// Set when the target user had an empty profile.
    pub degenerate: bool,
}

/// Column access used by scoring, implemented by the dense oracle matrix and
/// the adaptive sparse store alike.
pub trait ColumnProvider {
    fn item_count(&self) -> usize;

    /// Visits the nonzero entries of column `item` in ascending row order.
    fn for_each_in_column(&self, item: ItemId, f: &mut dyn FnMut(ItemId, f64));
}

/// Dense item x item propagation matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePropMatrix {
    n: usize,
    data: Vec<f64>,
    /// Edge count this matrix corresponds to.
    pub l: u64,
}

impl DensePropMatrix {
    pub fn zeros(n: usize) -> Self {
        DensePropMatrix {
            n,
            data: vec![0.0; n * n],
            l: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: ItemId, col: ItemId) -> f64 {
        self.data[row.index() * self.n + col.index()]
    }

    #[inline]
    pub fn set(&mut self, row: ItemId, col: ItemId, v: f64) {
        self.data[row.index() * self.n + col.index()] = v;
    }

    #[inline]
    pub fn add(&mut self, row: ItemId, col: ItemId, delta: f64) {
        self.data[row.index() * self.n + col.index()] += delta;
    }

    /// Grows the matrix to `new_n`, zero-padding the appended rows/columns.
    pub fn expand(&mut self, new_n: usize) {
        assert!(new_n >= self.n);
        if new_n == self.n {
            return;
        }
        let mut data = vec![0.0; new_n * new_n];
        for r in 0..self.n {
            data[r * new_n..r * new_n + self.n]
                .copy_from_slice(&self.data[r * self.n..(r + 1) * self.n]);
        }
        self.n = new_n;
        self.data = data;
    }

    pub fn transposed(&self) -> Self {
        let mut out = DensePropMatrix::zeros(self.n);
        out.l = self.l;
        for r in 0..self.n {
            for c in 0..self.n {
                out.data[c * self.n + r] = self.data[r * self.n + c];
            }
        }
        out
    }

    pub fn column_sum(&self, col: ItemId) -> f64 {
        (0..self.n).map(|r| self.data[r * self.n + col.index()]).sum()
    }

    /// Largest entrywise |self - other| and its position.
    pub fn max_abs_diff(&self, other: &Self) -> Result<(f64, Option<(ItemId, ItemId)>)> {
        if self.n != other.n {
            return Err(CoreError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut max = 0.0f64;
        let mut pos = None;
        for r in 0..self.n {
            for c in 0..self.n {
                let d = (self.data[r * self.n + c] - other.data[r * self.n + c]).abs();
                if d > max {
                    max = d;
                    pos = Some((ItemId(r as u32), ItemId(c as u32)));
                }
            }
        }
        Ok((max, pos))
    }
}

impl ColumnProvider for DensePropMatrix {
    fn item_count(&self) -> usize {
        self.n
    }

    fn for_each_in_column(&self, item: ItemId, f: &mut dyn FnMut(ItemId, f64)) {
        let c = item.index();
        for r in 0..self.n {
            let v = self.data[r * self.n + c];
            if v != 0.0 {
                f(ItemId(r as u32), v);
            }
        }
    }
}

/// Reads columns of H = M^T out of an MD column provider's rows; desk-scale
/// (each column visit scans the whole store).
pub struct TransposedColumns<'a, P: ColumnProvider>(pub &'a P);

impl<P: ColumnProvider> ColumnProvider for TransposedColumns<'_, P> {
    fn item_count(&self) -> usize {
        self.0.item_count()
    }

    fn for_each_in_column(&self, item: ItemId, f: &mut dyn FnMut(ItemId, f64)) {
        for c in 0..self.0.item_count() {
            let col = ItemId(c as u32);
            self.0.for_each_in_column(col, &mut |row, v| {
                if row == item {
                    f(col, v);
                }
            });
        }
    }
}

fn check_item(g: &BipartiteGraph, item: ItemId) -> Result<()> {
    if item.index() >= g.item_count() {
        return Err(CoreError::UnknownItemId(item.0));
    }
    Ok(())
}

fn check_user(g: &BipartiteGraph, user: UserId) -> Result<()> {
    if user.index() >= g.user_count() {
        return Err(CoreError::UnknownUserId(user.0));
    }
    Ok(())
}

/// One MD pass from `source`: returns column `source` of M, i.e. entry beta
/// holds the fraction of the unit resource placed on `source` that ends up on
/// beta. Entries sum to 1 for non-degenerate sources.
pub fn md_from_item(g: &BipartiteGraph, source: ItemId) -> Result<SparseItemVector> {
    check_item(g, source)?;
    let k_src = g.item_degree(source);
    if k_src == 0 {
        return Ok(SparseItemVector {
            source,
            entries: Vec::new(),
            degenerate: true,
        });
    }
    let inv_src = 1.0 / k_src as f64;
    let mut acc: BTreeMap<ItemId, f64> = BTreeMap::new();
    for &j in g.users_of(source) {
        let share = inv_src / g.user_degree(j) as f64;
        for &beta in g.items_of(j) {
            *acc.entry(beta).or_insert(0.0) += share;
        }
    }
    Ok(SparseItemVector {
        source,
        entries: acc.into_iter().collect(),
        degenerate: false,
    })
}

/// One HC pass from `source`: entry beta holds m_{source,beta}, i.e. row
/// `source` of M (users average their items, items average their users).
pub fn hc_from_item(g: &BipartiteGraph, source: ItemId) -> Result<SparseItemVector> {
    check_item(g, source)?;
    if g.item_degree(source) == 0 {
        return Ok(SparseItemVector {
            source,
            entries: Vec::new(),
            degenerate: true,
        });
    }
    let mut acc: BTreeMap<ItemId, f64> = BTreeMap::new();
    for &j in g.users_of(source) {
        let share = 1.0 / g.user_degree(j) as f64;
        for &beta in g.items_of(j) {
            *acc.entry(beta).or_insert(0.0) += share;
        }
    }
    let entries = acc
        .into_iter()
        .map(|(beta, v)| (beta, v / g.item_degree(beta) as f64))
        .collect();
    Ok(SparseItemVector {
        source,
        entries,
        degenerate: false,
    })
}

/// Full MD propagation matrix; desk-scale only, gated by `cap`.
pub fn build_dense_md(g: &BipartiteGraph, cap: usize) -> Result<DensePropMatrix> {
    let n = g.item_count();
    if n > cap {
        return Err(CoreError::SizeCap { items: n, cap });
    }
    let mut m = DensePropMatrix::zeros(n);
    m.l = g.edge_count();
    for c in 0..n {
        let col = ItemId(c as u32);
        let v = md_from_item(g, col)?;
        for (row, val) in v.entries {
            m.set(row, col, val);
        }
    }
    Ok(m)
}

/// Full HC propagation matrix: the exact transpose of `build_dense_md`.
pub fn build_dense_hc(g: &BipartiteGraph, cap: usize) -> Result<DensePropMatrix> {
    Ok(build_dense_md(g, cap)?.transposed())
}

/// Scores every item for `user` by summing the provider's columns over the
/// user's profile: f'_alpha = sum_{beta in profile} m_{alpha,beta}.
pub fn score_user<P: ColumnProvider + ?Sized>(
    provider: &P,
    g: &BipartiteGraph,
    user: UserId,
) -> Result<ScoreVector> {
    check_user(g, user)?;
    let n = provider.item_count();
    if n != g.item_count() {
        return Err(CoreError::DimensionMismatch {
            left: n,
            right: g.item_count(),
        });
    }
    let mut scores = vec![0.0; n];
    let profile = g.items_of(user);
    for &beta in profile {
        provider.for_each_in_column(beta, &mut |row, v| scores[row.index()] += v);
    }
    Ok(ScoreVector {
        user,
        l: g.edge_count(),
        scores,
        degenerate: profile.is_empty(),
    })
}

/// MD scoring straight from the graph in two spread passes; mathematically
/// identical to summing columns of M but never materializes them.
pub fn score_user_static(g: &BipartiteGraph, user: UserId) -> Result<ScoreVector> {
    check_user(g, user)?;
    let profile = g.items_of(user);
    let mut scores = vec![0.0; g.item_count()];
    let mut user_acc = vec![0.0; g.user_count()];
    let mut touched: Vec<u32> = Vec::new();
    for &beta in profile {
        let w = 1.0 / g.item_degree(beta) as f64;
        for &j in g.users_of(beta) {
            if user_acc[j.index()] == 0.0 {
                touched.push(j.0);
            }
            user_acc[j.index()] += w;
        }
    }
    touched.sort_unstable();
    for &j in &touched {
        let u = UserId(j);
        let v = user_acc[u.index()] / g.user_degree(u) as f64;
        for &alpha in g.items_of(u) {
            scores[alpha.index()] += v;
        }
    }
    Ok(ScoreVector {
        user,
        l: g.edge_count(),
        scores,
        degenerate: profile.is_empty(),
    })
}

/// HC scoring straight from the graph: f'_beta = sum_{gamma in profile}
/// m_{gamma,beta}.
pub fn score_user_static_hc(g: &BipartiteGraph, user: UserId) -> Result<ScoreVector> {
    check_user(g, user)?;
    let profile = g.items_of(user);
    let mut scores = vec![0.0; g.item_count()];
    let mut user_acc = vec![0.0; g.user_count()];
    let mut touched: Vec<u32> = Vec::new();
    for &gamma in profile {
        for &j in g.users_of(gamma) {
            if user_acc[j.index()] == 0.0 {
                touched.push(j.0);
            }
            user_acc[j.index()] += 1.0;
        }
    }
    touched.sort_unstable();
    for &j in &touched {
        let u = UserId(j);
        let v = user_acc[u.index()] / g.user_degree(u) as f64;
        for &beta in g.items_of(u) {
            scores[beta.index()] += v;
        }
    }
    for (idx, s) in scores.iter_mut().enumerate() {
        if *s != 0.0 {
            *s /= g.item_degree(ItemId(idx as u32)) as f64;
        }
    }
    Ok(ScoreVector {
        user,
        l: g.edge_count(),
        scores,
        degenerate: profile.is_empty(),
    })
}

/// Linear MD/HC hybrid: lambda * MD + (1 - lambda) * HC.
pub fn hybrid_score<P: ColumnProvider + ?Sized, Q: ColumnProvider + ?Sized>(
    columns_md: &P,
    columns_hc: &Q,
    g: &BipartiteGraph,
    user: UserId,
    lambda: f64,
) -> Result<ScoreVector> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(CoreError::InvalidParameter(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let md = score_user(columns_md, g, user)?;
    let hc = score_user(columns_hc, g, user)?;
    Ok(blend(md, &hc, lambda))
}

/// Hybrid scoring from the graph alone.
pub fn hybrid_score_static(g: &BipartiteGraph, user: UserId, lambda: f64) -> Result<ScoreVector> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(CoreError::InvalidParameter(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let md = score_user_static(g, user)?;
    let hc = score_user_static_hc(g, user)?;
    Ok(blend(md, &hc, lambda))
}

fn blend(mut md: ScoreVector, hc: &ScoreVector, lambda: f64) -> ScoreVector {
    for (m, h) in md.scores.iter_mut().zip(&hc.scores) {
        *m = lambda * *m + (1.0 - lambda) * h;
    }
    md
}

/// Ranks uncollected items by score descending, ties broken by ascending
/// item id; returns at most `k` items.
pub fn recommend_top_k(scores: &ScoreVector, collected: &[ItemId], k: usize) -> Vec<ItemId> {
    let mut mask = vec![false; scores.scores.len()];
    for &i in collected {
        if i.index() < mask.len() {
            mask[i.index()] = true;
        }
    }
    let mut candidates: Vec<u32> = (0..scores.scores.len() as u32)
        .filter(|&i| !mask[i as usize])
        .collect();
    candidates.sort_by(|&x, &y| {
        scores.scores[y as usize]
            .total_cmp(&scores.scores[x as usize])
            .then(x.cmp(&y))
    });
    candidates.truncate(k);
    candidates.into_iter().map(ItemId).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::EdgeEvent;

    const TOL: f64 = 1e-12;

    fn assert_vec(v: &SparseItemVector, g: &BipartiteGraph, expected: &[(&str, f64)]) {
        assert_eq!(v.len(), expected.len(), "support size");
        for &(label, val) in expected {
            let id = g.item_id(label).unwrap();
            assert!(
                (v.get(id) - val).abs() < TOL,
                "entry {label}: got {}, want {val}",
                v.get(id)
            );
        }
    }

    #[test]
    fn md_from_a_on_g4() {
        let g = fixtures::g4();
        let v = md_from_item(&g, g.item_id("a").unwrap()).unwrap();
        assert_vec(&v, &g, &[("a", 0.5), ("b", 0.5)]);
        assert!((v.sum() - 1.0).abs() < TOL);
    }

    #[test]
    fn md_from_b_on_g4() {
        let g = fixtures::g4();
        let v = md_from_item(&g, g.item_id("b").unwrap()).unwrap();
        assert_vec(&v, &g, &[("a", 0.25), ("b", 0.5), ("c", 0.25)]);
    }

    #[test]
    fn md_single_edge_returns_to_source() {
        let g = BipartiteGraph::from_events(&[EdgeEvent::add("u1", "a", 0)]).unwrap();
        let v = md_from_item(&g, g.item_id("a").unwrap()).unwrap();
        assert_vec(&v, &g, &[("a", 1.0)]);
    }

    #[test]
    fn md_degree_zero_source_is_degenerate() {
        let mut g = fixtures::g4();
        g.add_edge("u9", "z");
        g.remove_edge("u9", "z").unwrap();
        let v = md_from_item(&g, g.item_id("z").unwrap()).unwrap();
        assert!(v.degenerate && v.is_empty());
    }

    #[test]
    fn hc_from_a_on_g4_is_row_a() {
        let g = fixtures::g4();
        let v = hc_from_item(&g, g.item_id("a").unwrap()).unwrap();
        assert_vec(&v, &g, &[("a", 0.5), ("b", 0.25)]);
    }

    #[test]
    fn hc_from_a_on_g5() {
        let g = fixtures::g5();
        let v = hc_from_item(&g, g.item_id("a").unwrap()).unwrap();
        assert_vec(
            &v,
            &g,
            &[("a", 5.0 / 12.0), ("b", 5.0 / 12.0), ("c", 1.0 / 3.0)],
        );
    }

    #[test]
    fn hc_equals_md_transposed_entrywise() {
        let g = fixtures::g5();
        for a in 0..g.item_count() {
            for b in 0..g.item_count() {
                let alpha = ItemId(a as u32);
                let beta = ItemId(b as u32);
                let hc = hc_from_item(&g, alpha).unwrap().get(beta);
                let md = md_from_item(&g, beta).unwrap().get(alpha);
                assert!((hc - md).abs() < TOL);
            }
        }
    }

    #[test]
    fn dense_md_matches_g4_fixture() {
        let g = fixtures::g4();
        let m = build_dense_md(&g, DENSE_CAP_DEFAULT).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!(
                    (m.get(ItemId(r), ItemId(c)) - fixtures::G4_MATRIX[r as usize][c as usize])
                        .abs()
                        < TOL
                );
            }
        }
    }

    #[test]
    fn dense_hc_is_exact_transpose() {
        let g = fixtures::g5();
        let m = build_dense_md(&g, DENSE_CAP_DEFAULT).unwrap();
        let h = build_dense_hc(&g, DENSE_CAP_DEFAULT).unwrap();
        for r in 0..g.item_count() {
            for c in 0..g.item_count() {
                let (r, c) = (ItemId(r as u32), ItemId(c as u32));
                assert_eq!(h.get(r, c).to_bits(), m.get(c, r).to_bits());
            }
        }
    }

    #[test]
    fn dense_columns_sum_to_one_on_g5() {
        let g = fixtures::g5();
        let m = build_dense_md(&g, DENSE_CAP_DEFAULT).unwrap();
        for c in 0..g.item_count() {
            assert!((m.column_sum(ItemId(c as u32)) - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        let g = fixtures::g4();
        assert!(matches!(
            build_dense_md(&g, 2),
            Err(CoreError::SizeCap { items: 3, cap: 2 })
        ));
    }

    #[test]
    fn score_user_matches_fixture() {
        let g = fixtures::g4();
        let m = build_dense_md(&g, DENSE_CAP_DEFAULT).unwrap();
        let s = score_user(&m, &g, g.user_id("u1").unwrap()).unwrap();
        assert!((s.scores[0] - 0.75).abs() < TOL);
        assert!((s.scores[1] - 1.0).abs() < TOL);
        assert!((s.scores[2] - 0.25).abs() < TOL);
        let s2 = score_user(&m, &g, g.user_id("u2").unwrap()).unwrap();
        assert!((s2.scores[0] - 0.25).abs() < TOL);
        assert!((s2.scores[1] - 1.0).abs() < TOL);
        assert!((s2.scores[2] - 0.75).abs() < TOL);
    }

    #[test]
    fn static_scoring_agrees_with_matrix_scoring() {
        let g = fixtures::g5();
        let m = build_dense_md(&g, DENSE_CAP_DEFAULT).unwrap();
        for u in 0..g.user_count() {
            let user = UserId(u as u32);
            let a = score_user(&m, &g, user).unwrap();
            let b = score_user_static(&g, user).unwrap();
            for (x, y) in a.scores.iter().zip(&b.scores) {
                assert!((x - y).abs() < TOL);
            }
        }
    }

    #[test]
    fn empty_profile_scores_zero_and_degenerate() {
        let mut g = fixtures::g4();
        g.add_edge("u3", "a");
        g.remove_edge("u3", "a").unwrap();
        let s = score_user_static(&g, g.user_id("u3").unwrap()).unwrap();
        assert!(s.degenerate);
        assert!(s.scores.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn top_k_excludes_collected_and_breaks_ties_by_id() {
        let g = fixtures::g4();
        let u1 = g.user_id("u1").unwrap();
        let s = score_user_static(&g, u1).unwrap();
        let rec = recommend_top_k(&s, g.items_of(u1), 1);
        assert_eq!(rec, vec![g.item_id("c").unwrap()]);

        let zero = ScoreVector {
            user: u1,
            l: 0,
            scores: vec![0.0; 3],
            degenerate: false,
        };
        assert_eq!(
            recommend_top_k(&zero, &[], 2),
            vec![ItemId(0), ItemId(1)]
        );
        assert_eq!(recommend_top_k(&zero, &[], 10).len(), 3);
    }

    #[test]
    fn hybrid_endpoints_reduce_to_pure_algorithms() {
        let g = fixtures::g4();
        let u1 = g.user_id("u1").unwrap();
        let md = score_user_static(&g, u1).unwrap();
        let hc = score_user_static_hc(&g, u1).unwrap();
        let h1 = hybrid_score_static(&g, u1, 1.0).unwrap();
        let h0 = hybrid_score_static(&g, u1, 0.0).unwrap();
        assert_eq!(h1.scores, md.scores);
        assert_eq!(h0.scores, hc.scores);
        let h5 = hybrid_score_static(&g, u1, 0.5).unwrap();
        for i in 0..3 {
            assert!((h5.scores[i] - 0.5 * (md.scores[i] + hc.scores[i])).abs() < TOL);
        }
        assert!(hybrid_score_static(&g, u1, 1.5).is_err());
    }

    #[test]
    fn hc_static_matches_transposed_matrix_scoring() {
        let g = fixtures::g5();
        let h = build_dense_hc(&g, DENSE_CAP_DEFAULT).unwrap();
        for u in 0..g.user_count() {
            let user = UserId(u as u32);
            let a = score_user(&h, &g, user).unwrap();
            let b = score_user_static_hc(&g, user).unwrap();
            for (x, y) in a.scores.iter().zip(&b.scores) {
                assert!((x - y).abs() < TOL);
            }
        }
    }
}
