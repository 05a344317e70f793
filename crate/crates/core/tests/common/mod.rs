//! Shared oracles and instance generators for the integration tests.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use platoon_sort::cost::edge_cost;
use platoon_sort::grid::{GridSpec, PlatoonState, StateKey, Vehicle};
use platoon_sort::{CostParams, SortingPath};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy)]
struct Cost(f64);

impl PartialEq for Cost {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub struct UcsResult {
    /// Optimal cost to the nearest goal, if any is reachable.
    pub cost: Option<f64>,
    /// Every state settled before the search stopped.
    pub settled: Vec<PlatoonState>,
}

/// Plain Dijkstra over full states, built only from `legal_moves`,
/// `apply_move` and `edge_cost`. Goals are matched on occupancy.
pub fn ucs(initial: &PlatoonState, goals: &[PlatoonState], params: &CostParams) -> UcsResult {
    let mut dist: HashMap<StateKey, f64> = HashMap::new();
    let mut states: HashMap<StateKey, PlatoonState> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut counter = 0u64;
    let k0 = initial.state_key();
    dist.insert(k0.clone(), 0.0);
    states.insert(k0.clone(), initial.clone());
    heap.push(Reverse((Cost(0.0), counter, k0)));
    let mut settled = Vec::new();
    let mut done = std::collections::HashSet::new();

    while let Some(Reverse((Cost(d), _, key))) = heap.pop() {
        if !done.insert(key.clone()) {
            continue;
        }
        let s = states[&key].clone();
        settled.push(s.clone());
        if goals.iter().any(|g| g.same_occupancy(&s)) {
            return UcsResult { cost: Some(d), settled };
        }
        for mv in s.legal_moves() {
            let next = s.apply_move(&mv, params).expect("legal move applies");
            let c = edge_cost(&s, &next, params).expect("adjacent states");
            let nk = next.state_key();
            let nd = d + c;
            if dist.get(&nk).is_none_or(|&old| nd < old) {
                dist.insert(nk.clone(), nd);
                states.insert(nk.clone(), next);
                counter += 1;
                heap.push(Reverse((Cost(nd), counter, nk)));
            }
        }
    }
    UcsResult { cost: None, settled }
}

/// Edge weights whose every path cost is a multiple of `C_min`.
pub const BETA_CHOICES: [(f64, f64); 4] = [(1.0, 1.0), (0.5, 1.0), (1.0, 0.5), (0.5, 0.5)];

pub struct Instance {
    pub initial: PlatoonState,
    pub goal: PlatoonState,
    pub params: CostParams,
}

const IDS: [&str; 4] = ["A", "B", "C", "D"];

/// Random layout of 1..=4 vehicles (at most cells - 1) on a grid of at most 4x3, speeds 0.
pub fn random_state<R: Rng>(rng: &mut R, spec: GridSpec, n: usize) -> PlatoonState {
    let mut cells: Vec<usize> = (1..=spec.cell_count()).collect();
    cells.shuffle(rng);
    PlatoonState::new(
        spec,
        IDS[..n].iter().zip(&cells).map(|(id, &c)| (Vehicle::new(*id, "x", 0.0), c)),
    )
    .unwrap()
}

pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let rows = rng.random_range(2..=4);
    let cols = rng.random_range(1..=3);
    let spec = GridSpec::new(rows, cols, 7.0).unwrap();
    let n = rng.random_range(1..=4.min(spec.cell_count() - 1));
    let initial = random_state(rng, spec, n);
    let goal = random_state(rng, spec, n);
    let (beta_long, beta_lc) = BETA_CHOICES[rng.random_range(0..BETA_CHOICES.len())];
    Instance {
        initial,
        goal,
        params: CostParams {
            beta_long,
            beta_lc,
            ..Default::default()
        },
    }
}

/// Random walk of up to `len` legal moves.
pub fn random_walk<R: Rng>(rng: &mut R, start: &PlatoonState, len: usize, params: &CostParams) -> Vec<PlatoonState> {
    let mut states = vec![start.clone()];
    for _ in 0..len {
        let cur = states.last().unwrap();
        let moves = cur.legal_moves();
        if moves.is_empty() {
            break;
        }
        let mv = &moves[rng.random_range(0..moves.len())];
        let next = cur.apply_move(mv, params).unwrap();
        states.push(next);
    }
    states
}

pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

/// Random walk of 1..=`max_moves` moves by 1..=8 vehicles on the 4x3 grid.
pub fn random_path(seed: u64, max_moves: usize) -> SortingPath {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let spec = GridSpec::new(4, 3, 7.0).unwrap();
    let n = 1 + (seed % 8) as usize;
    let initial = {
        let ids = ["A", "B", "C", "D", "E", "F", "G", "H"];
        let mut cells: Vec<usize> = (1..=12).collect();
        cells.shuffle(&mut r);
        PlatoonState::new(spec, ids[..n].iter().zip(&cells).map(|(id, &c)| (Vehicle::new(*id, "x", 0.0), c))).unwrap()
    };
    let len = r.random_range(1..=max_moves);
    let states = random_walk(&mut r, &initial, len, &CostParams::default());
    let moves: Vec<_> = states.windows(2).map(|w| w[0].move_to(&w[1]).unwrap()).collect();
    SortingPath::replay(&initial, &moves, &CostParams::default()).unwrap()
}
