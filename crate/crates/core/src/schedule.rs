//! Compression of a stepwise path into parallel movement steps.
//!
//! Every non-hold move of the path becomes a variable `T >= 1`. Two kinds of
//! precedence keep the schedule conflict-free and faithful to the path:
//! a vehicle's own moves stay in order (strict), and in every cell the
//! vehicle that leaves precedes the next, different vehicle that enters.
//! In conservative mode the cell must be empty at the end of the previous
//! step (strict); in aggressive mode it may be vacated and refilled within
//! one step (weak). Both systems are pure difference constraints, so the
//! longest-path levelling is pointwise minimal and therefore minimizes both
//! the sum of final-move steps and the makespan.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Move, PlatoonState, VehicleId};
use crate::sorting::SortingPath;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulingMode {
    Conservative,
    Aggressive,
}

impl SchedulingMode {
    pub const ALL: [SchedulingMode; 2] = [SchedulingMode::Conservative, SchedulingMode::Aggressive];
}

impl fmt::Display for SchedulingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedulingMode::Conservative => "conservative",
            SchedulingMode::Aggressive => "aggressive",
        })
    }
}

impl FromStr for SchedulingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "conservative" => Ok(SchedulingMode::Conservative),
            "aggressive" => Ok(SchedulingMode::Aggressive),
            other => Err(format!("unknown mode '{other}' (expected conservative or aggressive)")),
        }
    }
}

/// One position change `T_vehicle(from, to)` of the stepwise path.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MoveRecord {
    pub vehicle: VehicleId,
    pub from: usize,
    pub to: usize,
    /// 1-based index in the stepwise path.
    pub seq: usize,
}

pub fn extract_moves(path: &SortingPath) -> Vec<MoveRecord> {
    records_from_moves(&path.moves)
}

pub fn records_from_moves(moves: &[Move]) -> Vec<MoveRecord> {
    moves
        .iter()
        .filter(|m| m.from != m.to)
        .enumerate()
        .map(|(i, m)| MoveRecord {
            vehicle: m.vehicle.clone(),
            from: m.from,
            to: m.to,
            seq: i + 1,
        })
        .collect()
}

/// `before` and `after` are 0-based indices into the move list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecedenceEdge {
    pub before: usize,
    pub after: usize,
    pub strict: bool,
}

#[derive(Clone, Debug)]
pub struct PrecedenceDag {
    pub mode: SchedulingMode,
    pub moves: Vec<MoveRecord>,
    pub edges: Vec<PrecedenceEdge>,
}

impl PrecedenceDag {
    pub fn has_edge(&self, before: usize, after: usize) -> bool {
        self.edges.iter().any(|e| e.before == before && e.after == after)
    }

    /// Topological order of the moves, or `CyclicPrecedence`.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.moves.len();
        let mut indegree = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            indegree[e.after] += 1;
            out[e.before].push(e.after);
        }
        let mut ready: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_front() {
            order.push(i);
            for &j in &out[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push_back(j);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(Error::CyclicPrecedence)
        }
    }
}

pub fn build_precedence(moves: &[MoveRecord], mode: SchedulingMode) -> PrecedenceDag {
    let cell_strict = mode == SchedulingMode::Conservative;
    let mut edges = Vec::new();
    let mut last_own: HashMap<&VehicleId, usize> = HashMap::new();
    // most recent departure from a cell not yet followed by an arrival
    let mut pending_departure: HashMap<usize, usize> = HashMap::new();

    for (i, m) in moves.iter().enumerate() {
        if let Some(prev) = last_own.insert(&m.vehicle, i) {
            edges.push(PrecedenceEdge {
                before: prev,
                after: i,
                strict: true,
            });
        }
        if let Some(dep) = pending_departure.remove(&m.to) {
            if moves[dep].vehicle != m.vehicle {
                edges.push(PrecedenceEdge {
                    before: dep,
                    after: i,
                    strict: cell_strict,
                });
            }
        }
        pending_departure.insert(m.from, i);
    }

    PrecedenceDag {
        mode,
        moves: moves.to_vec(),
        edges,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: SchedulingMode,
    pub moves: Vec<MoveRecord>,
    /// Step of each move, aligned with `moves`.
    pub steps: Vec<u32>,
    pub makespan: u32,
    /// Sum over vehicles of the step of their last move.
    pub objective: u64,
}

impl Schedule {
    pub fn new(mode: SchedulingMode, moves: Vec<MoveRecord>, steps: Vec<u32>) -> Self {
        assert_eq!(moves.len(), steps.len(), "one step per move");
        let makespan = steps.iter().copied().max().unwrap_or(0);
        let objective = final_step_sum(&moves, &steps);
        Schedule {
            mode,
            moves,
            steps,
            makespan,
            objective,
        }
    }

    pub fn step_of(&self, seq: usize) -> Option<u32> {
        self.moves.iter().position(|m| m.seq == seq).map(|i| self.steps[i])
    }

    /// Moves grouped by step, in ascending step order.
    pub fn by_step(&self) -> BTreeMap<u32, Vec<&MoveRecord>> {
        let mut map: BTreeMap<u32, Vec<&MoveRecord>> = BTreeMap::new();
        for (m, &s) in self.moves.iter().zip(&self.steps) {
            map.entry(s).or_default().push(m);
        }
        map
    }
}

fn final_step_sum(moves: &[MoveRecord], steps: &[u32]) -> u64 {
    let mut last: HashMap<&VehicleId, u32> = HashMap::new();
    for (m, &s) in moves.iter().zip(steps) {
        let e = last.entry(&m.vehicle).or_insert(0);
        *e = (*e).max(s);
    }
    last.values().map(|&s| s as u64).sum()
}

/// Longest-path levelling of the precedence graph.
pub fn earliest_schedule(dag: &PrecedenceDag) -> Result<Schedule> {
    let order = dag.topological_order()?;
    let mut preds: Vec<Vec<(usize, bool)>> = vec![Vec::new(); dag.moves.len()];
    for e in &dag.edges {
        preds[e.after].push((e.before, e.strict));
    }
    let mut steps = vec![0u32; dag.moves.len()];
    for i in order {
        steps[i] = preds[i]
            .iter()
            .map(|&(p, strict)| steps[p] + u32::from(strict))
            .fold(1, u32::max);
    }
    Ok(Schedule::new(dag.mode, dag.moves.clone(), steps))
}

pub fn schedule_path(path: &SortingPath, mode: SchedulingMode) -> Result<Schedule> {
    earliest_schedule(&build_precedence(&extract_moves(path), mode))
}

/// Exhaustive search over integer step assignments up to `step_bound`,
/// minimizing the final-move step sum and then the makespan. Meant as an
/// oracle for small move lists.
pub fn brute_force_schedule(moves: &[MoveRecord], mode: SchedulingMode, step_bound: u32) -> Result<Schedule> {
    let n = moves.len();
    // constraints[j] = (i, strict) with i < j, derived pairwise from the ILP rules
    let mut constraints: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..j {
            let (a, b) = (&moves[i], &moves[j]);
            let own_consecutive = a.vehicle == b.vehicle && !moves[i + 1..j].iter().any(|m| m.vehicle == a.vehicle);
            if own_consecutive {
                constraints[j].push((i, true));
            }
            // b enters the cell a left, with no departure or arrival there in between
            let next_occupant = a.vehicle != b.vehicle
                && b.to == a.from
                && !moves[i + 1..j].iter().any(|m| m.to == a.from || m.from == a.from);
            if next_occupant {
                constraints[j].push((i, mode == SchedulingMode::Conservative));
            }
        }
    }
    let is_final: Vec<bool> = (0..n)
        .map(|i| !moves[i + 1..].iter().any(|m| m.vehicle == moves[i].vehicle))
        .collect();

    struct Search<'a> {
        constraints: &'a [Vec<(usize, bool)>],
        is_final: &'a [bool],
        bound: u32,
        steps: Vec<u32>,
        best: Option<(u64, u32, Vec<u32>)>,
    }

    impl Search<'_> {
        fn go(&mut self, j: usize, objective: u64, makespan: u32, finals_left: u64) {
            if let Some((best_obj, best_span, _)) = &self.best {
                let lower = objective + finals_left;
                if lower > *best_obj || (lower == *best_obj && makespan >= *best_span) {
                    return;
                }
            }
            if j == self.steps.len() {
                self.best = Some((objective, makespan, self.steps.clone()));
                return;
            }
            let lo = self.constraints[j]
                .iter()
                .map(|&(i, strict)| self.steps[i] + u32::from(strict))
                .fold(1, u32::max);
            for s in lo..=self.bound {
                self.steps[j] = s;
                let (obj, left) = if self.is_final[j] {
                    (objective + s as u64, finals_left - 1)
                } else {
                    (objective, finals_left)
                };
                self.go(j + 1, obj, makespan.max(s), left);
            }
        }
    }

    let mut search = Search {
        constraints: &constraints,
        is_final: &is_final,
        bound: step_bound,
        steps: vec![0; n],
        best: None,
    };
    let finals = is_final.iter().filter(|f| **f).count() as u64;
    search.go(0, 0, 0, finals);
    match search.best {
        Some((_, _, steps)) => Ok(Schedule::new(mode, moves.to_vec(), steps)),
        None => Err(Error::BoundTooSmall(step_bound)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub step: u32,
    pub cell: usize,
    pub vehicles: Vec<VehicleId>,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.vehicles.iter().map(|v| v.as_str()).collect();
        write!(f, "step {} cell {} [{}]: {}", self.step, self.cell, ids.join(","), self.reason)
    }
}

/// Occupancy after each step (frame 0 is `initial`), or every conflict found.
/// Speeds are carried over from `initial` unchanged.
pub fn replay_schedule(initial: &PlatoonState, schedule: &Schedule) -> std::result::Result<Vec<PlatoonState>, Vec<Violation>> {
    let spec = *initial.spec();
    let mut violations = Vec::new();
    let mut positions: Vec<usize> = initial.positions().to_vec();
    let mut frames = vec![initial.clone()];
    let by_step = schedule.by_step();

    if let Some(&s) = by_step.keys().next() {
        if s == 0 {
            violations.push(Violation {
                step: 0,
                cell: 0,
                vehicles: by_step[&0].iter().map(|m| m.vehicle.clone()).collect(),
                reason: "step indices start at 1".into(),
            });
        }
    }

    for step in 1..=schedule.makespan {
        let movers = by_step.get(&step).cloned().unwrap_or_default();
        let mut occupant: HashMap<usize, usize> = positions.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut moved = HashMap::new();
        let mut resolved = Vec::new();

        for m in &movers {
            let Some(idx) = initial.index_of(&m.vehicle) else {
                violations.push(Violation {
                    step,
                    cell: m.from,
                    vehicles: vec![m.vehicle.clone()],
                    reason: "unknown vehicle".into(),
                });
                continue;
            };
            if moved.insert(idx, m).is_some() {
                violations.push(Violation {
                    step,
                    cell: m.from,
                    vehicles: vec![m.vehicle.clone()],
                    reason: "vehicle moves twice in one step".into(),
                });
                continue;
            }
            if positions[idx] != m.from {
                violations.push(Violation {
                    step,
                    cell: m.from,
                    vehicles: vec![m.vehicle.clone()],
                    reason: format!("vehicle is in cell {}, not {}", positions[idx], m.from),
                });
                continue;
            }
            if spec.classify(m.from, m.to).is_none() || m.from == m.to {
                violations.push(Violation {
                    step,
                    cell: m.to,
                    vehicles: vec![m.vehicle.clone()],
                    reason: format!("cells {} and {} are not adjacent", m.from, m.to),
                });
                continue;
            }
            resolved.push((idx, *m));
        }

        let vacated: HashMap<usize, usize> = resolved.iter().map(|&(idx, m)| (m.from, idx)).collect();
        let mut entering: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(idx, m) in &resolved {
            entering.entry(m.to).or_default().push(idx);
        }
        for (&cell, who) in &entering {
            if who.len() > 1 {
                violations.push(Violation {
                    step,
                    cell,
                    vehicles: who.iter().map(|&i| initial.roster()[i].id.clone()).collect(),
                    reason: "two vehicles enter the same cell".into(),
                });
            }
        }

        for &(_, m) in &resolved {
            let Some(&holder) = occupant.get(&m.to) else { continue };
            let freed_same_step = vacated.get(&m.to).is_some_and(|&v| v == holder);
            let ok = match schedule.mode {
                SchedulingMode::Conservative => false,
                SchedulingMode::Aggressive => freed_same_step,
            };
            if !ok {
                violations.push(Violation {
                    step,
                    cell: m.to,
                    vehicles: vec![m.vehicle.clone(), initial.roster()[holder].id.clone()],
                    reason: if freed_same_step {
                        "cell is vacated and refilled in the same step".into()
                    } else {
                        "target cell is occupied".into()
                    },
                });
            }
        }

        if schedule.mode == SchedulingMode::Aggressive {
            // each mover follows the vehicle whose cell it takes; a cycle is a swap or rotation
            let follows: HashMap<usize, usize> = resolved
                .iter()
                .filter_map(|&(idx, m)| vacated.get(&m.to).map(|&v| (idx, v)))
                .collect();
            let mut reported = std::collections::HashSet::new();
            for &(start, _) in &resolved {
                let mut seen = vec![start];
                let mut cur = start;
                while let Some(&next) = follows.get(&cur) {
                    if next == start {
                        if seen.iter().all(|v| reported.insert(*v)) {
                            violations.push(Violation {
                                step,
                                cell: positions[start],
                                vehicles: seen.iter().map(|&i| initial.roster()[i].id.clone()).collect(),
                                reason: "simultaneous moves form a cycle".into(),
                            });
                        }
                        break;
                    }
                    if seen.contains(&next) {
                        break;
                    }
                    seen.push(next);
                    cur = next;
                }
            }
        }

        for &(idx, m) in &resolved {
            occupant.remove(&m.from);
            positions[idx] = m.to;
        }
        for &(idx, m) in &resolved {
            occupant.insert(m.to, idx);
        }
        let mut seen = HashMap::new();
        for (i, &c) in positions.iter().enumerate() {
            if let Some(j) = seen.insert(c, i) {
                violations.push(Violation {
                    step,
                    cell: c,
                    vehicles: vec![initial.roster()[j].id.clone(), initial.roster()[i].id.clone()],
                    reason: "two vehicles share a cell at the end of the step".into(),
                });
            }
        }
        if violations.is_empty() {
            frames.push(initial.with_layout(positions.clone(), initial.speeds().to_vec()));
        }
    }

    if violations.is_empty() {
        Ok(frames)
    } else {
        Err(violations)
    }
}

pub fn validate_schedule(initial: &PlatoonState, schedule: &Schedule) -> std::result::Result<(), Vec<Violation>> {
    replay_schedule(initial, schedule).map(|_| ())
}

/// Fixed-width text frames, one block per step, `.` for vacant cells.
pub fn render_frames(frames: &[PlatoonState]) -> String {
    let Some(first) = frames.first() else {
        return String::new();
    };
    let spec = first.spec();
    let width = first.roster().iter().map(|t| t.id.as_str().len()).max().unwrap_or(1).max(1);
    let mut out = String::new();
    for (step, frame) in frames.iter().enumerate() {
        out.push_str(&format!("step {step}\n"));
        for row in 1..=spec.rows {
            let cells: Vec<String> = (1..=spec.cols)
                .map(|col| {
                    let label = frame.occupant(spec.cell_at(row, col)).map_or(".", |v| v.as_str());
                    format!("{label:<width$}")
                })
                .collect();
            out.push_str(cells.join(" ").trim_end());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Parses text produced by [`render_frames`] back into per-step occupant grids
/// (`cells[i]` is cell `i + 1`).
pub fn parse_frames(text: &str) -> Result<Vec<Vec<Option<String>>>> {
    let mut frames = Vec::new();
    let mut current: Option<Vec<Option<String>>> = None;
    let mut cols = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("step ") {
            rest.trim()
                .parse::<u32>()
                .map_err(|_| Error::parse(format!("line {}", lineno + 1), "bad step header"))?;
            if let Some(f) = current.take() {
                frames.push(f);
            }
            current = Some(Vec::new());
            continue;
        }
        let frame = current
            .as_mut()
            .ok_or_else(|| Error::parse(format!("line {}", lineno + 1), "grid row before a step header"))?;
        let row: Vec<Option<String>> = line
            .split_whitespace()
            .map(|t| (t != ".").then(|| t.to_owned()))
            .collect();
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::parse(format!("line {}", lineno + 1), format!("expected {c} cells, found {}", row.len())))
            }
            _ => {}
        }
        frame.extend(row);
    }
    if let Some(f) = current {
        frames.push(f);
    }
    Ok(frames)
}

/// Reconstructs a schedule from consecutive frames: every vehicle whose cell
/// differs between frame `s - 1` and frame `s` moved at step `s`.
pub fn frames_to_schedule(frames: &[Vec<Option<String>>], mode: SchedulingMode) -> Result<Schedule> {
    let locate = |frame: &[Option<String>]| -> BTreeMap<String, usize> {
        frame
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.clone().map(|id| (id, i + 1)))
            .collect()
    };
    let mut moves = Vec::new();
    let mut steps = Vec::new();
    for (s, pair) in frames.windows(2).enumerate() {
        let (before, after) = (locate(&pair[0]), locate(&pair[1]));
        if before.keys().ne(after.keys()) {
            return Err(Error::parse(format!("step {}", s + 1), "vehicle set changed between frames"));
        }
        let mut changed: Vec<(String, usize, usize)> = before
            .iter()
            .filter(|(id, &c)| after[*id] != c)
            .map(|(id, &c)| (id.clone(), c, after[id]))
            .collect();
        // vacating moves first, so a chain reads in path order
        changed.sort_by_key(|(_, _, to)| usize::from(before.values().any(|c| c == to)));
        for (id, from, to) in changed {
            moves.push(MoveRecord {
                vehicle: VehicleId(id),
                from,
                to,
                seq: moves.len() + 1,
            });
            steps.push(s as u32 + 1);
        }
    }
    Ok(Schedule::new(mode, moves, steps))
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    #[serde(rename = "move")]
    seq: usize,
    vehicle: String,
    from: usize,
    to: usize,
    step: u32,
}

/// `move,vehicle,from,to,step` rows in move order.
pub fn schedule_to_csv(schedule: &Schedule) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (m, &s) in schedule.moves.iter().zip(&schedule.steps) {
        w.serialize(CsvRow {
            seq: m.seq,
            vehicle: m.vehicle.0.clone(),
            from: m.from,
            to: m.to,
            step: s,
        })
        .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

pub fn schedule_from_csv(text: &str, mode: SchedulingMode) -> Result<Schedule> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut moves = Vec::new();
    let mut steps = Vec::new();
    for (i, row) in r.deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|e| Error::parse(format!("csv record {}", i + 1), e.to_string()))?;
        moves.push(MoveRecord {
            vehicle: VehicleId(row.vehicle),
            from: row.from,
            to: row.to,
            seq: row.seq,
        });
        steps.push(row.step);
    }
    Ok(Schedule::new(mode, moves, steps))
}
