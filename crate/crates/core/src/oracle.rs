//! Exact incremental maintenance of the dense propagation matrix.
//!
//! Adding edge (i, alpha) changes four classes of off-diagonal entries:
//!
//! * Type I   — (beta, alpha) for beta collected by i,
//! * Type II  — (gamma, alpha) for gamma co-collected with alpha by users
//!              other than i,
//! * Type III — (alpha, beta) for beta collected by i,
//! * Type IV  — (mu, beta) for mu, beta both collected by i.
//!
//! The per-entry deltas are closed-form in the old entry and the degrees of
//! i and alpha. Affected diagonal entries fall outside the taxonomy and are
//! recomputed from their neighborhoods directly. Removals recompute row
//! alpha, column alpha and the profile-by-profile block in place, which are
//! the only positions a removal can touch.

use std::collections::BTreeSet;

use crate::diffusion::{md_from_item, DensePropMatrix};
use crate::error::{CoreError, Result};
use crate::graph::{BipartiteGraph, EdgeEvent, EdgeOp, EdgeOutcome, ItemId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChangeType {
    I,
    II,
    III,
    IV,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeEntry {
    pub row: ItemId,
    pub col: ItemId,
    pub ty: ChangeType,
    pub delta: f64,
}

/// Off-diagonal changes caused by one addition, in deterministic order
/// (Type I, II, III, IV; ids ascending within each type).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChangeLedger {
    pub entries: Vec<ChangeEntry>,
}

impl ChangeLedger {
    pub fn of_type(&self, ty: ChangeType) -> impl Iterator<Item = &ChangeEntry> {
        self.entries.iter().filter(move |e| e.ty == ty)
    }

    pub fn position(&self, row: ItemId, col: ItemId) -> Option<&ChangeEntry> {
        self.entries.iter().find(|e| e.row == row && e.col == col)
    }
}

/// The event decomposed against the pre-event graph.
struct AddContext {
    user: Option<UserId>,
    item: ItemId,
    item_is_new: bool,
    /// Items of the user before the event, excluding alpha (it cannot be a
    /// neighbor yet for a non-duplicate add).
    profile: Vec<ItemId>,
    /// Items co-collected with alpha by users other than i, minus profile.
    co_collected: Vec<ItemId>,
    k_user_old: usize,
    k_item_old: usize,
}

fn add_context(g_before: &BipartiteGraph, user: &str, item: &str) -> AddContext {
    let uid = g_before.user_id(user);
    let iid = g_before.item_id(item);
    let item_is_new = iid.is_none();
    let alpha = iid.unwrap_or(ItemId(g_before.item_count() as u32));
    let profile: Vec<ItemId> = match uid {
        Some(u) => g_before.items_of(u).to_vec(),
        None => Vec::new(),
    };
    debug_assert!(!profile.contains(&alpha), "duplicate add passed to oracle");
    let mut co: BTreeSet<ItemId> = BTreeSet::new();
    if let Some(alpha_old) = iid {
        for &j in g_before.users_of(alpha_old) {
            for &gamma in g_before.items_of(j) {
                co.insert(gamma);
            }
        }
        co.remove(&alpha_old);
        for beta in &profile {
            co.remove(beta);
        }
    }
    AddContext {
        user: uid,
        item: alpha,
        item_is_new,
        co_collected: co.into_iter().collect(),
        k_user_old: uid.map_or(0, |u| g_before.user_degree(u)),
        k_item_old: iid.map_or(0, |i| g_before.item_degree(i)),
        profile,
    }
}

/// Positions and types changed by adding edge (user, item) to `g_before`.
/// A brand-new item takes the next append-only index.
pub fn classify_changes(
    g_before: &BipartiteGraph,
    user: &str,
    item: &str,
) -> Vec<(ItemId, ItemId, ChangeType)> {
    let ctx = add_context(g_before, user, item);
    let alpha = ctx.item;
    let mut out = Vec::new();
    for &beta in &ctx.profile {
        out.push((beta, alpha, ChangeType::I));
    }
    for &gamma in &ctx.co_collected {
        out.push((gamma, alpha, ChangeType::II));
    }
    for &beta in &ctx.profile {
        out.push((alpha, beta, ChangeType::III));
    }
    for &beta in &ctx.profile {
        for &mu in &ctx.profile {
            if mu != beta {
                out.push((mu, beta, ChangeType::IV));
            }
        }
    }
    out
}

/// Applies the add-event update rules to `m`, which must be the exact matrix
/// of `g_before`; the caller applies the event to the graph afterwards.
/// Returns the ledger of off-diagonal deltas.
pub fn apply_add(
    m: &mut DensePropMatrix,
    g_before: &BipartiteGraph,
    user: &str,
    item: &str,
) -> Result<ChangeLedger> {
    if m.n() != g_before.item_count() {
        return Err(CoreError::DimensionMismatch {
            left: m.n(),
            right: g_before.item_count(),
        });
    }
    let ctx = add_context(g_before, user, item);
    if ctx.item_is_new {
        m.expand(m.n() + 1);
    }
    let alpha = ctx.item;
    let k_item_new = (ctx.k_item_old + 1) as f64;
    let k_user_new = (ctx.k_user_old + 1) as f64;
    let k_user_old = ctx.k_user_old as f64;

    let mut ledger = ChangeLedger::default();

    // Type I: column alpha at the user's profile rows.
    for &beta in &ctx.profile {
        let delta = -m.get(beta, alpha) / k_item_new + 1.0 / (k_item_new * k_user_new);
        m.add(beta, alpha, delta);
        ledger.entries.push(ChangeEntry {
            row: beta,
            col: alpha,
            ty: ChangeType::I,
            delta,
        });
    }
    // Type II: rest of column alpha with prior co-collectors.
    for &gamma in &ctx.co_collected {
        let delta = -m.get(gamma, alpha) / k_item_new;
        m.add(gamma, alpha, delta);
        ledger.entries.push(ChangeEntry {
            row: gamma,
            col: alpha,
            ty: ChangeType::II,
            delta,
        });
    }
    // Type III: row alpha at the profile columns (k_beta is untouched by
    // this event).
    for &beta in &ctx.profile {
        let k_beta = g_before.item_degree(beta) as f64;
        let delta = 1.0 / (k_beta * k_user_new);
        m.add(alpha, beta, delta);
        ledger.entries.push(ChangeEntry {
            row: alpha,
            col: beta,
            ty: ChangeType::III,
            delta,
        });
    }
    // Type IV: profile-by-profile cross entries, driven by the user's degree
    // bump alone.
    for &beta in &ctx.profile {
        let k_beta = g_before.item_degree(beta) as f64;
        let delta = -1.0 / (k_beta * k_user_old * k_user_new);
        for &mu in &ctx.profile {
            if mu != beta {
                m.add(mu, beta, delta);
                ledger.entries.push(ChangeEntry {
                    row: mu,
                    col: beta,
                    ty: ChangeType::IV,
                    delta,
                });
            }
        }
    }

    // Diagonals sit outside the four types; recompute them from the
    // post-event neighborhoods.
    let mut diag_alpha = 1.0 / k_user_new;
    if !ctx.item_is_new {
        let alpha_old = ItemId(alpha.0);
        for &j in g_before.users_of(alpha_old) {
            diag_alpha += 1.0 / g_before.user_degree(j) as f64;
        }
    }
    m.set(alpha, alpha, diag_alpha / k_item_new);
    for &beta in &ctx.profile {
        let mut s = 0.0;
        for &j in g_before.users_of(beta) {
            let k_j = if Some(j) == ctx.user {
                k_user_new
            } else {
                g_before.user_degree(j) as f64
            };
            s += 1.0 / k_j;
        }
        m.set(beta, beta, s / g_before.item_degree(beta) as f64);
    }

    m.l += 1;
    Ok(ledger)
}

/// Repairs `m` after an edge removal; `g_after` is the graph with the edge
/// already gone and (user, item) identify the removed edge. Only row alpha,
/// column alpha and the remaining-profile block can differ, so those are
/// recomputed from scratch.
pub fn apply_remove(
    m: &mut DensePropMatrix,
    g_after: &BipartiteGraph,
    user: UserId,
    item: ItemId,
) -> Result<()> {
    if m.n() != g_after.item_count() {
        return Err(CoreError::DimensionMismatch {
            left: m.n(),
            right: g_after.item_count(),
        });
    }
    let n = m.n();
    let alpha = item;
    // Column alpha, full overwrite.
    let col = md_from_item(g_after, alpha)?;
    for r in 0..n {
        m.set(ItemId(r as u32), alpha, 0.0);
    }
    for (row, v) in col.entries {
        m.set(row, alpha, v);
    }
    // Row alpha, full overwrite via one spread from alpha's remaining users.
    let mut acc = vec![0.0; n];
    for &j in g_after.users_of(alpha) {
        let share = 1.0 / g_after.user_degree(j) as f64;
        for &beta in g_after.items_of(j) {
            acc[beta.index()] += share;
        }
    }
    for c in 0..n {
        let beta = ItemId(c as u32);
        if beta == alpha {
            continue; // column pass already set the diagonal
        }
        let v = if acc[c] != 0.0 {
            acc[c] / g_after.item_degree(beta) as f64
        } else {
            0.0
        };
        m.set(alpha, beta, v);
    }
    // Remaining profile block (diagonal included): the user's degree drop
    // reaches every pair of their still-collected items.
    let profile = g_after.items_of(user).to_vec();
    for &beta in &profile {
        let k_beta = g_after.item_degree(beta) as f64;
        for &mu in &profile {
            let v = pair_entry(g_after, mu, beta, k_beta);
            m.set(mu, beta, v);
        }
    }
    m.l -= 1;
    Ok(())
}

/// m_{mu,beta} by direct intersection of the two user lists.
fn pair_entry(g: &BipartiteGraph, mu: ItemId, beta: ItemId, k_beta: f64) -> f64 {
    let us_mu = g.users_of(mu);
    let us_beta = g.users_of(beta);
    let mut s = 0.0;
    let (mut a, mut b) = (0, 0);
    while a < us_mu.len() && b < us_beta.len() {
        match us_mu[a].cmp(&us_beta[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                s += 1.0 / g.user_degree(us_mu[a]) as f64;
                a += 1;
                b += 1;
            }
        }
    }
    s / k_beta
}

/// Ground-truth matrix straight from the definition, entry by entry. Kept
/// independent of the diffusion-pass construction on purpose: the two routes
/// cross-check each other.
pub fn recompute_bruteforce(g: &BipartiteGraph, cap: usize) -> Result<DensePropMatrix> {
    let n = g.item_count();
    if n > cap {
        return Err(CoreError::SizeCap { items: n, cap });
    }
    let mut m = DensePropMatrix::zeros(n);
    m.l = g.edge_count();
    for c in 0..n {
        let beta = ItemId(c as u32);
        let k_beta = g.item_degree(beta);
        if k_beta == 0 {
            continue;
        }
        for r in 0..n {
            let alpha = ItemId(r as u32);
            let v = pair_entry(g, alpha, beta, k_beta as f64);
            if v != 0.0 {
                m.set(alpha, beta, v);
            }
        }
    }
    Ok(m)
}

/// Dense matrix kept exactly in sync with a graph by the incremental rules.
pub struct OracleEngine {
    graph: BipartiteGraph,
    matrix: DensePropMatrix,
    cap: usize,
}

/// Result of feeding one event to the oracle.
pub struct OracleOutcome {
    pub edge: EdgeOutcome,
    /// Off-diagonal ledger for non-duplicate adds, None for removals.
    pub ledger: Option<ChangeLedger>,
}

impl OracleEngine {
    pub fn new(cap: usize) -> Self {
        OracleEngine {
            graph: BipartiteGraph::new(),
            matrix: DensePropMatrix::zeros(0),
            cap,
        }
    }

    /// Starts from an existing graph with a brute-force exact matrix.
    pub fn from_graph(graph: BipartiteGraph, cap: usize) -> Result<Self> {
        let matrix = recompute_bruteforce(&graph, cap)?;
        Ok(OracleEngine { graph, matrix, cap })
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn matrix(&self) -> &DensePropMatrix {
        &self.matrix
    }

    pub fn apply(&mut self, ev: &EdgeEvent) -> Result<OracleOutcome> {
        match ev.op {
            EdgeOp::Add => {
                if let (Some(u), Some(i)) = (
                    self.graph.user_id(&ev.user),
                    self.graph.item_id(&ev.item),
                ) {
                    if self.graph.has_edge(u, i) {
                        let edge = self.graph.add_edge(&ev.user, &ev.item);
                        debug_assert!(edge.duplicate);
                        return Ok(OracleOutcome { edge, ledger: None });
                    }
                }
                if self.graph.item_id(&ev.item).is_none()
                    && self.graph.item_count() + 1 > self.cap
                {
                    return Err(CoreError::SizeCap {
                        items: self.graph.item_count() + 1,
                        cap: self.cap,
                    });
                }
                let ledger = apply_add(&mut self.matrix, &self.graph, &ev.user, &ev.item)?;
                let edge = self.graph.add_edge(&ev.user, &ev.item);
                Ok(OracleOutcome {
                    edge,
                    ledger: Some(ledger),
                })
            }
            EdgeOp::Remove => {
                let edge = self.graph.remove_edge(&ev.user, &ev.item)?;
                apply_remove(&mut self.matrix, &self.graph, edge.user, edge.item)?;
                Ok(OracleOutcome { edge, ledger: None })
            }
        }
    }
}
