//! Seeded random fixtures and brute-force oracles.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hydrograph::geo::{Point, Polygon};
use hydrograph::{Comid, FlowEdge, HucCode, NodeKind};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type Rng8 = ChaCha8Rng;

pub fn id(n: u64) -> Comid {
    Comid::new(n).unwrap()
}

pub fn edge(a: u64, b: u64) -> FlowEdge {
    FlowEdge::new(id(a), id(b))
}

/// A tagged river network: a random DAG over `1..=n` where every node drains
/// into at most two higher-numbered nodes, with some nodes marked as
/// waterbodies and every node labelled with one of a few HUC12 codes.
pub struct Network {
    pub n: u64,
    pub edges: Vec<FlowEdge>,
    pub kinds: BTreeMap<Comid, NodeKind>,
    pub hucs: BTreeMap<Comid, HucCode>,
}

pub fn random_network(rng: &mut Rng8) -> Network {
    let n: u64 = rng.gen_range(30..=80);
    let lakes = rng.gen_range(3..=10);
    let labels = rng.gen_range(2..=5);
    let codes: Vec<HucCode> = (0..labels).map(|i| HucCode::new(&format!("0709000205{i:02}")).unwrap()).collect();

    let mut edges = Vec::new();
    for a in 1..n {
        let outs = if rng.gen_bool(0.15) { 2 } else { 1 };
        for _ in 0..outs {
            if rng.gen_bool(0.9) {
                let span = rng.gen_range(1..=4.min(n - a));
                edges.push(edge(a, a + span));
            }
        }
    }
    edges.sort();
    edges.dedup();

    let mut ids: Vec<u64> = (1..=n).collect();
    ids.shuffle(rng);
    let kinds = ids[..lakes].iter().map(|&c| (id(c), NodeKind::Waterbody)).collect();
    // Contiguous runs of ids share a label, like real watersheds.
    let mut hucs = BTreeMap::new();
    let mut label = 0;
    for c in 1..=n {
        if rng.gen_bool(0.1) {
            label = rng.gen_range(0..labels);
        }
        hucs.insert(id(c), codes[label].clone());
    }
    Network { n, edges, kinds, hucs }
}

/// Arbitrary digraph on `1..=n`, cycles and self-loops included.
pub fn random_digraph(rng: &mut Rng8) -> (u64, Vec<FlowEdge>) {
    let n: u64 = rng.gen_range(1..=50);
    let p = rng.gen_range(0.0..0.12);
    let mut edges = Vec::new();
    for a in 1..=n {
        for b in 1..=n {
            if a != b && rng.gen_bool(p) {
                edges.push(edge(a, b));
            }
        }
    }
    (n, edges)
}

/// Boolean transitive closure (Warshall).
pub fn transitive_closure(n: u64, edges: &[FlowEdge]) -> Vec<Vec<bool>> {
    let n = n as usize;
    let mut r = vec![vec![false; n + 1]; n + 1];
    for e in edges {
        r[e.from.get() as usize][e.to.get() as usize] = true;
    }
    for k in 1..=n {
        let via = r[k].clone();
        for row in r.iter_mut().skip(1) {
            if row[k] {
                for (cell, &step) in row.iter_mut().zip(&via) {
                    *cell |= step;
                }
            }
        }
    }
    r
}

/// Closed star-shaped simple ring around `(cx, cy)` with radii in `[r0, r1)`.
pub fn star_ring(rng: &mut Rng8, cx: f64, cy: f64, r0: f64, r1: f64) -> Vec<Point<f64>> {
    let k = rng.gen_range(3..=12);
    let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    if angles.len() < 3 {
        angles = vec![0.0, 2.1, 4.2];
    }
    let mut ring: Vec<Point<f64>> = angles
        .into_iter()
        .map(|t| {
            let r = rng.gen_range(r0..r1);
            Point::new(cx + r * t.cos(), cy + r * t.sin())
        })
        .collect();
    ring.push(ring[0]);
    ring
}

/// Winding number of `ring` around `p`.
pub fn winding_number(p: &Point<f64>, ring: &[Point<f64>]) -> i32 {
    let cross = |a: &Point<f64>, b: &Point<f64>| (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    let mut w = 0;
    for i in 0..ring.len() {
        let a = &ring[i];
        let b = &ring[(i + 1) % ring.len()];
        if a.y <= p.y {
            if b.y > p.y && cross(a, b) > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && cross(a, b) < 0.0 {
            w -= 1;
        }
    }
    w
}

pub fn polygon(ring: Vec<Point<f64>>, holes: Vec<Vec<Point<f64>>>) -> Polygon<f64> {
    Polygon::new(ring, holes).unwrap()
}
