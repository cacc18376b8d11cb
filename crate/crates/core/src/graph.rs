//! Dynamic bipartite user-item network.
//!
//! Adjacency is kept in both directions (user -> items, item -> users) as
//! sorted lists of internal ids, so diffusion passes can walk neighborhoods
//! sequentially. Ids are appended on first sight and never reused; a node
//! whose degree drops to zero stays registered so downstream matrix indexing
//! remains stable.

use std::collections::HashMap;

use crate::error::{CoreError, Result};

/// Internal user index, contiguous and append-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserId(pub u32);

/// Internal item index, contiguous and append-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemId(pub u32);

impl UserId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOp {
    Add,
    Remove,
}

/// One unit change to the network, identified by external labels so an event
/// stream can be built before any graph exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeEvent {
    pub user: String,
    pub item: String,
    pub ts: i64,
    pub op: EdgeOp,
}

impl EdgeEvent {
    pub fn add(user: impl Into<String>, item: impl Into<String>, ts: i64) -> Self {
        EdgeEvent {
            user: user.into(),
            item: item.into(),
            ts,
            op: EdgeOp::Add,
        }
    }

    pub fn remove(user: impl Into<String>, item: impl Into<String>, ts: i64) -> Self {
        EdgeEvent {
            user: user.into(),
            item: item.into(),
            ts,
            op: EdgeOp::Remove,
        }
    }
}

/// What applying an add-event did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeOutcome {
    pub user: UserId,
    pub item: ItemId,
    pub new_user: bool,
    pub new_item: bool,
    /// The edge already existed; state was left untouched.
    pub duplicate: bool,
    /// False for add-events, true when this outcome describes a removal.
    pub removed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Registry {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Registry {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    /// Returns (id, was_new).
    fn intern(&mut self, label: &str) -> (u32, bool) {
        if let Some(id) = self.index.get(label) {
            return (*id, false);
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        (id, true)
    }
}

/// Dynamic bipartite graph with dual sorted adjacency and O(degree) mutation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BipartiteGraph {
    users: Registry,
    items: Registry,
    items_of_user: Vec<Vec<ItemId>>,
    users_of_item: Vec<Vec<UserId>>,
    edges: u64,
}

impl BipartiteGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph by applying add-events in order; panics on removal of a
    /// missing edge (use `apply` for fallible streams).
    pub fn from_events(events: &[EdgeEvent]) -> Result<Self> {
        let mut g = Self::new();
        for ev in events {
            g.apply(ev)?;
        }
        Ok(g)
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn edge_count(&self) -> u64 {
        self.edges
    }

    pub fn user_id(&self, label: &str) -> Option<UserId> {
        self.users.get(label).map(UserId)
    }

    pub fn item_id(&self, label: &str) -> Option<ItemId> {
        self.items.get(label).map(ItemId)
    }

    pub fn user_label(&self, u: UserId) -> &str {
        self.users.label(u.0)
    }

    pub fn item_label(&self, i: ItemId) -> &str {
        self.items.label(i.0)
    }

    #[inline]
    pub fn user_degree(&self, u: UserId) -> usize {
        self.items_of_user[u.index()].len()
    }

    #[inline]
    pub fn item_degree(&self, i: ItemId) -> usize {
        self.users_of_item[i.index()].len()
    }

    /// Sorted items collected by `u`.
    #[inline]
    pub fn items_of(&self, u: UserId) -> &[ItemId] {
        &self.items_of_user[u.index()]
    }

    /// Sorted users that collected `i`.
    #[inline]
    pub fn users_of(&self, i: ItemId) -> &[UserId] {
        &self.users_of_item[i.index()]
    }

    pub fn neighbors_of_user(&self, label: &str) -> Result<&[ItemId]> {
        let u = self
            .user_id(label)
            .ok_or_else(|| CoreError::UnknownUser(label.to_owned()))?;
        Ok(self.items_of(u))
    }

    pub fn neighbors_of_item(&self, label: &str) -> Result<&[UserId]> {
        let i = self
            .item_id(label)
            .ok_or_else(|| CoreError::UnknownItem(label.to_owned()))?;
        Ok(self.users_of(i))
    }

    pub fn has_edge(&self, u: UserId, i: ItemId) -> bool {
        self.items_of_user[u.index()].binary_search(&i).is_ok()
    }

    /// Registers a user without any edge; used by snapshot restore to keep
    /// degree-zero nodes in their original id slots.
    pub fn register_user(&mut self, label: &str) -> UserId {
        let (id, new) = self.users.intern(label);
        if new {
            self.items_of_user.push(Vec::new());
        }
        UserId(id)
    }

    /// Registers an item without any edge; see `register_user`.
    pub fn register_item(&mut self, label: &str) -> ItemId {
        let (id, new) = self.items.intern(label);
        if new {
            self.users_of_item.push(Vec::new());
        }
        ItemId(id)
    }

    /// Adds an edge, registering unseen labels. Duplicate edges are reported
    /// in the outcome and leave the graph untouched.
    pub fn add_edge(&mut self, user: &str, item: &str) -> EdgeOutcome {
        let (uid, new_user) = self.users.intern(user);
        if new_user {
            self.items_of_user.push(Vec::new());
        }
        let (iid, new_item) = self.items.intern(item);
        if new_item {
            self.users_of_item.push(Vec::new());
        }
        let u = UserId(uid);
        let i = ItemId(iid);
        let items = &mut self.items_of_user[u.index()];
        match items.binary_search(&i) {
            Ok(_) => EdgeOutcome {
                user: u,
                item: i,
                new_user,
                new_item,
                duplicate: true,
                removed: false,
            },
            Err(pos) => {
                items.insert(pos, i);
                let users = &mut self.users_of_item[i.index()];
                let upos = users.binary_search(&u).unwrap_err();
                users.insert(upos, u);
                self.edges += 1;
                EdgeOutcome {
                    user: u,
                    item: i,
                    new_user,
                    new_item,
                    duplicate: false,
                    removed: false,
                }
            }
        }
    }

    /// Removes an existing edge; node registrations are kept even at degree
    /// zero.
    pub fn remove_edge(&mut self, user: &str, item: &str) -> Result<EdgeOutcome> {
        let missing = || CoreError::MissingEdge {
            user: user.to_owned(),
            item: item.to_owned(),
        };
        let u = self.user_id(user).ok_or_else(missing)?;
        let i = self.item_id(item).ok_or_else(missing)?;
        let items = &mut self.items_of_user[u.index()];
        let pos = items.binary_search(&i).map_err(|_| missing())?;
        items.remove(pos);
        let users = &mut self.users_of_item[i.index()];
        let upos = users
            .binary_search(&u)
            .expect("dual adjacency out of sync");
        users.remove(upos);
        self.edges -= 1;
        Ok(EdgeOutcome {
            user: u,
            item: i,
            new_user: false,
            new_item: false,
            duplicate: false,
            removed: true,
        })
    }

    /// Applies one event; `Remove` of an absent edge is an error.
    pub fn apply(&mut self, ev: &EdgeEvent) -> Result<EdgeOutcome> {
        match ev.op {
            EdgeOp::Add => Ok(self.add_edge(&ev.user, &ev.item)),
            EdgeOp::Remove => self.remove_edge(&ev.user, &ev.item),
        }
    }

    /// Full-scan consistency audit: dual membership, sortedness, degree and
    /// edge-count bookkeeping.
    pub fn audit(&self) -> Result<()> {
        let fail = |msg: String| Err(CoreError::InconsistentGraph(msg));
        if self.items_of_user.len() != self.users.len()
            || self.users_of_item.len() != self.items.len()
        {
            return fail("adjacency table length differs from registry".into());
        }
        let mut total_u = 0u64;
        for (u, items) in self.items_of_user.iter().enumerate() {
            if items.windows(2).any(|w| w[0] >= w[1]) {
                return fail(format!("items of user {u} not strictly sorted"));
            }
            total_u += items.len() as u64;
            for &i in items {
                if self.users_of_item[i.index()]
                    .binary_search(&UserId(u as u32))
                    .is_err()
                {
                    return fail(format!("edge ({u}, {}) missing reverse link", i.0));
                }
            }
        }
        let mut total_i = 0u64;
        for (i, users) in self.users_of_item.iter().enumerate() {
            if users.windows(2).any(|w| w[0] >= w[1]) {
                return fail(format!("users of item {i} not strictly sorted"));
            }
            total_i += users.len() as u64;
            for &u in users {
                if self.items_of_user[u.index()]
                    .binary_search(&ItemId(i as u32))
                    .is_err()
                {
                    return fail(format!("edge ({}, {i}) missing forward link", u.0));
                }
            }
        }
        if total_u != self.edges || total_i != self.edges {
            return fail(format!(
                "degree sums {total_u}/{total_i} disagree with edge count {}",
                self.edges
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn first_edge_registers_both_nodes() {
        let mut g = BipartiteGraph::new();
        let out = g.add_edge("u1", "a");
        assert!(out.new_user && out.new_item && !out.duplicate);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.user_degree(out.user), 1);
        assert_eq!(g.item_degree(out.item), 1);
    }

    #[test]
    fn duplicate_add_is_reported_not_applied() {
        let mut g = fixtures::g4();
        let out = g.add_edge("u1", "a");
        assert!(out.duplicate);
        assert_eq!(g.edge_count(), 4);
        g.audit().unwrap();
    }

    #[test]
    fn g4_plus_u2a_updates_degrees() {
        let mut g = fixtures::g4();
        let out = g.add_edge("u2", "a");
        assert!(!out.new_user && !out.new_item && !out.duplicate);
        assert_eq!(g.edge_count(), 5);
        assert_eq!(g.item_degree(out.item), 2);
        assert_eq!(g.user_degree(out.user), 3);
    }

    #[test]
    fn remove_restores_prior_state() {
        let g4 = fixtures::g4();
        let mut g = fixtures::g5();
        g.remove_edge("u2", "a").unwrap();
        assert_eq!(g.edge_count(), g4.edge_count());
        for label in ["u1", "u2"] {
            assert_eq!(
                g.neighbors_of_user(label).unwrap(),
                g4.neighbors_of_user(label).unwrap()
            );
        }
        g.audit().unwrap();
    }

    #[test]
    fn degree_zero_item_stays_registered() {
        let mut g = fixtures::g4();
        g.remove_edge("u1", "a").unwrap();
        let a = g.item_id("a").unwrap();
        assert_eq!(g.item_degree(a), 0);
        assert_eq!(g.item_label(a), "a");
        g.audit().unwrap();
    }

    #[test]
    fn remove_missing_edge_errors() {
        let mut g = fixtures::g4();
        let err = g.remove_edge("u1", "c").unwrap_err();
        assert!(matches!(err, CoreError::MissingEdge { .. }));
    }

    #[test]
    fn neighbor_lists_are_sorted_and_exact() {
        let g = fixtures::g4();
        let b_users: Vec<&str> = g
            .neighbors_of_item("b")
            .unwrap()
            .iter()
            .map(|&u| g.user_label(u))
            .collect();
        assert_eq!(b_users, ["u1", "u2"]);
        let u2_items: Vec<&str> = g
            .neighbors_of_user("u2")
            .unwrap()
            .iter()
            .map(|&i| g.item_label(i))
            .collect();
        assert_eq!(u2_items, ["b", "c"]);
    }

    #[test]
    fn unknown_label_errors() {
        let g = fixtures::g4();
        assert!(matches!(
            g.neighbors_of_user("nobody"),
            Err(CoreError::UnknownUser(_))
        ));
        assert!(matches!(
            g.neighbors_of_item("nothing"),
            Err(CoreError::UnknownItem(_))
        ));
    }

    #[test]
    fn fresh_item_has_no_neighbors() {
        let mut g = fixtures::g4();
        g.add_edge("u9", "z");
        g.remove_edge("u9", "z").unwrap();
        assert!(g.neighbors_of_item("z").unwrap().is_empty());
    }
}
