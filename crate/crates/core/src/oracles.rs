//! Brute-force references used by test suites.

use std::collections::BTreeMap;

/// Exact state of the lifted quadratic flow under bang-zero-bang controls
/// `ω ∈ {−8, 0, 8}` with step `1/40`, in units `x = i/5`, `w = W/400`,
/// `y = Y/3000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Exact {
    i: i64,
    w: i64,
    y: i64,
}

pub const REACH_STEPS: usize = 40;
pub const REACH_GRID: usize = 17;

#[derive(Debug, Clone)]
pub struct Reachability {
    /// Reached states in `(x, w, y, t)` order.
    pub states: Vec<[f64; 4]>,
    /// Grid nodes of the `17⁴` lattice on `[−1, 1]⁴` hit by some state.
    pub nodes: Vec<[usize; 4]>,
}

fn node(v: f64) -> usize {
    ((v + 1.0) * (REACH_GRID - 1) as f64 / 2.0).round() as usize
}

/// Enumerates states reachable from the origin while staying in `[−1, 1]⁴`,
/// keeping one representative per lattice cell and step.
pub fn quadratic_reachability() -> Reachability {
    let mut frontier = vec![Exact { i: 0, w: 0, y: 0 }];
    let mut states = vec![[0.0, 0.0, 0.0, 0.0]];
    let mut nodes = vec![[node(0.0); 4]];
    for k in 1..=REACH_STEPS {
        let t = -(k as f64) / 40.0;
        let mut next: BTreeMap<[usize; 3], Exact> = BTreeMap::new();
        for s in &frontier {
            for c in [-1i64, 0, 1] {
                let e = Exact { i: s.i + c, w: s.w + 2 * s.i + c, y: s.y + 3 * s.i * s.i + 3 * s.i * c + c * c };
                if e.i.abs() > 5 || e.w.abs() > 400 || e.y > 3000 {
                    continue;
                }
                let p = [e.i as f64 / 5.0, e.w as f64 / 400.0, e.y as f64 / 3000.0];
                next.entry([node(p[0]), node(p[1]), node(p[2])]).or_insert(e);
            }
        }
        frontier = next.values().copied().collect();
        for (cell, e) in &next {
            states.push([e.i as f64 / 5.0, e.w as f64 / 400.0, e.y as f64 / 3000.0, t]);
            nodes.push([cell[0], cell[1], cell[2], node(t)]);
        }
    }
    nodes.sort_unstable();
    nodes.dedup();
    Reachability { states, nodes }
}
