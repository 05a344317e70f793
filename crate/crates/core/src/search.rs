//! Best-first A* over an implicit graph.
//!
//! Nodes receive an id in generation order; among open nodes with equal
//! `f = g + h` the smallest id is expanded first. A node reached again by a
//! cheaper route takes the new parent and `g`; closed nodes are reopened on
//! such an improvement unless `allow_reopen` is off.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::hash::Hash;
use std::time::{Duration, Instant};

use indexmap::map::Entry;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::SearchError;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    pub time_limit: Option<Duration>,
    pub allow_reopen: bool,
    /// Record the `f` value of every expansion in [`SearchResult::trace`].
    pub trace: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            time_limit: None,
            allow_reopen: true,
            trace: false,
        }
    }
}

impl SearchOptions {
    pub fn with_time_limit(limit: Duration) -> Self {
        SearchOptions {
            time_limit: Some(limit),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Distinct nodes expanded (closed at least once).
    pub explored: usize,
    /// Distinct nodes ever generated; the largest node id plus one.
    pub generated: usize,
    /// Expansions of previously closed nodes.
    pub reopened: usize,
    pub elapsed_s: f64,
    pub f_initial: f64,
    pub f_final: f64,
}

#[derive(Clone, Debug)]
pub struct SearchResult<N> {
    pub path: Vec<N>,
    pub cost: f64,
    pub stats: SearchStats,
    /// `f` at each expansion, in order; empty unless tracing was requested.
    pub trace: Vec<f64>,
}

struct Record {
    g: f64,
    h: f64,
    parent: Option<usize>,
    closed: bool,
    expanded_once: bool,
}

#[derive(Clone, Copy)]
struct OpenEntry {
    f: f64,
    g: f64,
    id: usize,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    // BinaryHeap is a max-heap: reverse so the smallest (f, id) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.id.cmp(&self.id))
    }
}

/// Runs A* from `start` until a node satisfying `is_goal` is expanded.
///
/// `successors` yields `(child, edge_cost)` pairs; `heuristic` is evaluated
/// once per distinct node and cached.
pub fn astar<N, G, S, I, H>(
    start: N,
    mut is_goal: G,
    mut successors: S,
    mut heuristic: H,
    opts: &SearchOptions,
) -> Result<SearchResult<N>, SearchError>
where
    N: Clone + Eq + Hash,
    G: FnMut(&N) -> bool,
    S: FnMut(&N) -> I,
    I: IntoIterator<Item = (N, f64)>,
    H: FnMut(&N) -> f64,
{
    let started = Instant::now();
    let mut stats = SearchStats::default();
    let mut nodes: IndexMap<N, Record> = IndexMap::new();
    let mut open = BinaryHeap::new();
    let mut trace = Vec::new();

    let h0 = heuristic(&start);
    stats.f_initial = h0;
    nodes.insert(
        start,
        Record {
            g: 0.0,
            h: h0,
            parent: None,
            closed: false,
            expanded_once: false,
        },
    );
    open.push(OpenEntry { f: h0, g: 0.0, id: 0 });

    let finish = |mut stats: SearchStats, nodes: &IndexMap<N, Record>| {
        stats.generated = nodes.len();
        stats.elapsed_s = started.elapsed().as_secs_f64();
        stats
    };

    while let Some(entry) = open.pop() {
        let (node, rec) = nodes.get_index_mut(entry.id).expect("open ids are valid");
        if rec.closed || entry.g > rec.g {
            continue;
        }
        if let Some(limit) = opts.time_limit {
            if started.elapsed() >= limit {
                return Err(SearchError::TimedOut(finish(stats, &nodes)));
            }
        }
        rec.closed = true;
        if rec.expanded_once {
            stats.reopened += 1;
        } else {
            rec.expanded_once = true;
            stats.explored += 1;
        }
        let g = rec.g;
        let node = node.clone();
        if opts.trace {
            trace.push(entry.f);
        }

        if is_goal(&node) {
            stats.f_final = entry.f;
            let mut path = vec![node];
            let mut cursor = nodes[entry.id].parent;
            while let Some(id) = cursor {
                let (n, r) = nodes.get_index(id).expect("parent ids are valid");
                path.push(n.clone());
                cursor = r.parent;
            }
            path.reverse();
            return Ok(SearchResult {
                path,
                cost: g,
                stats: finish(stats, &nodes),
                trace,
            });
        }

        for (child, cost) in successors(&node) {
            let g2 = g + cost;
            match nodes.entry(child) {
                Entry::Vacant(slot) => {
                    let id = slot.index();
                    let h = heuristic(slot.key());
                    slot.insert(Record {
                        g: g2,
                        h,
                        parent: Some(entry.id),
                        closed: false,
                        expanded_once: false,
                    });
                    open.push(OpenEntry { f: g2 + h, g: g2, id });
                }
                Entry::Occupied(mut slot) => {
                    let id = slot.index();
                    let rec = slot.get_mut();
                    if g2 >= rec.g {
                        continue;
                    }
                    if rec.closed {
                        if !opts.allow_reopen {
                            continue;
                        }
                        rec.closed = false;
                    }
                    rec.g = g2;
                    rec.parent = Some(entry.id);
                    open.push(OpenEntry { f: g2 + rec.h, g: g2, id });
                }
            }
        }
    }

    Err(SearchError::NoPath(finish(stats, &nodes)))
}
