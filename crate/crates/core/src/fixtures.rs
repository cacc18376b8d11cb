//! Small worked graphs shared by tests and the browser demo.
//!
//! G4: users {u1, u2}, items {a, b, c}, edges {(u1,a), (u1,b), (u2,b), (u2,c)}.
//! G5 = G4 + (u2, a).

use crate::graph::{BipartiteGraph, EdgeEvent};

pub fn g4_events() -> Vec<EdgeEvent> {
    vec![
        EdgeEvent::add("u1", "a", 1),
        EdgeEvent::add("u1", "b", 2),
        EdgeEvent::add("u2", "b", 3),
        EdgeEvent::add("u2", "c", 4),
    ]
}

pub fn g5_events() -> Vec<EdgeEvent> {
    let mut evs = g4_events();
    evs.push(EdgeEvent::add("u2", "a", 5));
    evs
}

pub fn g4() -> BipartiteGraph {
    BipartiteGraph::from_events(&g4_events()).unwrap()
}

pub fn g5() -> BipartiteGraph {
    BipartiteGraph::from_events(&g5_events()).unwrap()
}

/// Propagation matrix of G4, rows/cols ordered a, b, c.
pub const G4_MATRIX: [[f64; 3]; 3] = [
    [1.0 / 2.0, 1.0 / 4.0, 0.0],
    [1.0 / 2.0, 1.0 / 2.0, 1.0 / 2.0],
    [0.0, 1.0 / 4.0, 1.0 / 2.0],
];

/// Propagation matrix of G5, rows/cols ordered a, b, c.
pub const G5_MATRIX: [[f64; 3]; 3] = [
    [5.0 / 12.0, 5.0 / 12.0, 1.0 / 3.0],
    [5.0 / 12.0, 5.0 / 12.0, 1.0 / 3.0],
    [1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0],
];
