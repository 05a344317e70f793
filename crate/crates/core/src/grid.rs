//! Discretized platoon: grid geometry, vehicle placement and single-vehicle moves.
//!
//! Cells are numbered `1..=rows*cols` in row-major order. Row 1 is the
//! downstream front of the platoon; columns are lanes.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::cost::{speed_update, CostParams};
use crate::error::{Error, Result};

/// Relative speeds are compared on this grid (m/s) when deciding node identity.
pub const SPEED_QUANTUM: f64 = 0.01;

pub fn quantize_speed(v: f64) -> i32 {
    (v / SPEED_QUANTUM).round() as i32
}

pub fn dequantize_speed(q: i32) -> f64 {
    q as f64 * SPEED_QUANTUM
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Cell length `L` in meters.
    pub cell_length: f64,
    /// Informational only.
    pub lane_width: f64,
}

impl GridSpec {
    pub const DEFAULT_CELL_LENGTH: f64 = 7.0;
    pub const DEFAULT_LANE_WIDTH: f64 = 3.5;

    pub fn new(rows: usize, cols: usize, cell_length: f64) -> Result<Self> {
        let spec = GridSpec {
            rows,
            cols,
            cell_length,
            lane_width: Self::DEFAULT_LANE_WIDTH,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidGrid(format!(
                "grid must have at least one row and one column, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.cell_length > 0.0 && self.cell_length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "cell length must be positive, got {}",
                self.cell_length
            )));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, cell: usize) -> bool {
        cell >= 1 && cell <= self.cell_count()
    }

    /// 1-based `(row, col)` of a cell.
    pub fn row_col(&self, cell: usize) -> (usize, usize) {
        debug_assert!(self.contains(cell));
        ((cell - 1) / self.cols + 1, (cell - 1) % self.cols + 1)
    }

    pub fn cell_at(&self, row: usize, col: usize) -> usize {
        (row - 1) * self.cols + col
    }

    /// Longitudinal coordinate, increasing toward the front (row 1 is largest).
    pub fn longitudinal(&self, cell: usize) -> usize {
        self.rows - self.row_col(cell).0
    }

    /// Neighbour of `cell` in `dir`, if it lies inside the grid.
    pub fn neighbor(&self, cell: usize, dir: Direction) -> Option<usize> {
        let (r, c) = self.row_col(cell);
        let (r, c) = match dir {
            Direction::Up if r > 1 => (r - 1, c),
            Direction::Down if r < self.rows => (r + 1, c),
            Direction::Left if c > 1 => (r, c - 1),
            Direction::Right if c < self.cols => (r, c + 1),
            _ => return None,
        };
        Some(self.cell_at(r, c))
    }

    /// Classifies the relation between two cells as a move kind.
    pub fn classify(&self, from: usize, to: usize) -> Option<MoveKind> {
        if !self.contains(from) || !self.contains(to) {
            return None;
        }
        let (r0, c0) = self.row_col(from);
        let (r1, c1) = self.row_col(to);
        match (r0.abs_diff(r1), c0.abs_diff(c1)) {
            (0, 0) => Some(MoveKind::Hold),
            (1, 0) => Some(MoveKind::Longitudinal),
            (0, 1) => Some(MoveKind::Lateral),
            _ => None,
        }
    }
}

/// Direction order used for move enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Toward row 1 (downstream).
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub String);

impl VehicleId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VehicleId {
    fn from(s: &str) -> Self {
        VehicleId(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    /// Movement class tag, e.g. `left` or `through`.
    pub class: String,
    /// Speed relative to the cruising speed, m/s.
    pub rel_speed: f64,
}

impl Vehicle {
    pub fn new(id: impl Into<String>, class: impl Into<String>, rel_speed: f64) -> Self {
        Vehicle {
            id: VehicleId(id.into()),
            class: class.into(),
            rel_speed,
        }
    }
}

/// Identity part of a vehicle, shared by every state of one problem.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VehicleTag {
    pub id: VehicleId,
    pub class: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Hold,
    Longitudinal,
    Lateral,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub vehicle: VehicleId,
    pub from: usize,
    pub to: usize,
    pub kind: MoveKind,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}->{}", self.vehicle, self.from, self.to)
    }
}

/// Canonical node identity: cell of every vehicle (roster order) followed by
/// the quantized relative speeds. The encoding is injective.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Box<[u32]>);

impl StateKey {
    pub(crate) fn encode(positions: impl IntoIterator<Item = usize>, speeds: &[i32]) -> Self {
        let mut words: Vec<u32> = positions.into_iter().map(|p| p as u32).collect();
        words.extend(speeds.iter().map(|&q| q as u32));
        StateKey(words.into_boxed_slice())
    }

    pub fn words(&self) -> &[u32] {
        &self.0
    }

    pub(crate) fn vehicle_count(&self) -> usize {
        self.0.len() / 2
    }

    pub fn positions(&self) -> &[u32] {
        &self.0[..self.vehicle_count()]
    }

    pub fn quantized_speeds(&self) -> impl Iterator<Item = i32> + '_ {
        self.0[self.vehicle_count()..].iter().map(|&w| w as i32)
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u32] {
        &mut self.0
    }
}

/// Grid occupancy plus per-vehicle relative speeds. Vehicles are kept in
/// ascending id order.
#[derive(Clone, Debug)]
pub struct PlatoonState {
    spec: GridSpec,
    roster: Arc<[VehicleTag]>,
    positions: Vec<usize>,
    speeds: Vec<f64>,
    occupancy: Vec<Option<usize>>,
}

impl PartialEq for PlatoonState {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.roster == other.roster
            && self.positions == other.positions
            && self
                .speeds
                .iter()
                .zip(&other.speeds)
                .all(|(a, b)| quantize_speed(*a) == quantize_speed(*b))
    }
}

impl PlatoonState {
    pub fn new(spec: GridSpec, placements: impl IntoIterator<Item = (Vehicle, usize)>) -> Result<Self> {
        spec.validate()?;
        let mut placed: Vec<(Vehicle, usize)> = placements.into_iter().collect();
        placed.sort_by(|a, b| a.0.id.cmp(&b.0.id));

        let mut ids = HashSet::new();
        let mut occupancy = vec![None; spec.cell_count()];
        for (idx, (v, cell)) in placed.iter().enumerate() {
            if !ids.insert(v.id.clone()) {
                return Err(Error::InvariantViolation(format!("duplicate vehicle id {}", v.id)));
            }
            if !spec.contains(*cell) {
                return Err(Error::InvariantViolation(format!(
                    "vehicle {} placed in cell {} outside 1..={}",
                    v.id,
                    cell,
                    spec.cell_count()
                )));
            }
            if !v.rel_speed.is_finite() {
                return Err(Error::InvariantViolation(format!("vehicle {} has non-finite speed", v.id)));
            }
            if let Some(other) = occupancy[cell - 1] {
                let other: &(Vehicle, usize) = &placed[other];
                return Err(Error::InvariantViolation(format!(
                    "cell {} occupied by both {} and {}",
                    cell, other.0.id, v.id
                )));
            }
            occupancy[cell - 1] = Some(idx);
        }

        let roster: Arc<[VehicleTag]> = placed
            .iter()
            .map(|(v, _)| VehicleTag {
                id: v.id.clone(),
                class: v.class.clone(),
            })
            .collect();
        Ok(PlatoonState {
            spec,
            roster,
            positions: placed.iter().map(|(_, c)| *c).collect(),
            speeds: placed.iter().map(|(v, _)| v.rel_speed).collect(),
            occupancy,
        })
    }

    /// Same roster and grid, new placement and speeds (roster order).
    pub(crate) fn with_layout(&self, positions: Vec<usize>, speeds: Vec<f64>) -> Self {
        let mut occupancy = vec![None; self.spec.cell_count()];
        for (idx, &cell) in positions.iter().enumerate() {
            debug_assert!(occupancy[cell - 1].is_none());
            occupancy[cell - 1] = Some(idx);
        }
        PlatoonState {
            spec: self.spec,
            roster: Arc::clone(&self.roster),
            positions,
            speeds,
            occupancy,
        }
    }

    /// Rebuilds a state of this problem from a key.
    pub fn from_key(&self, key: &StateKey) -> Self {
        let positions = key.positions().iter().map(|&p| p as usize).collect();
        let speeds = key.quantized_speeds().map(dequantize_speed).collect();
        self.with_layout(positions, speeds)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn roster(&self) -> &[VehicleTag] {
        &self.roster
    }

    pub fn vehicle_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn index_of(&self, id: &VehicleId) -> Option<usize> {
        self.roster.binary_search_by(|t| t.id.cmp(id)).ok()
    }

    pub fn position_of(&self, id: &VehicleId) -> Option<usize> {
        self.index_of(id).map(|i| self.positions[i])
    }

    pub fn occupant(&self, cell: usize) -> Option<&VehicleId> {
        self.occupancy
            .get(cell.wrapping_sub(1))
            .copied()
            .flatten()
            .map(|i| &self.roster[i].id)
    }

    pub fn is_vacant(&self, cell: usize) -> bool {
        self.spec.contains(cell) && self.occupancy[cell - 1].is_none()
    }

    pub fn vehicles(&self) -> impl Iterator<Item = (Vehicle, usize)> + '_ {
        self.roster.iter().enumerate().map(|(i, tag)| {
            (
                Vehicle {
                    id: tag.id.clone(),
                    class: tag.class.clone(),
                    rel_speed: self.speeds[i],
                },
                self.positions[i],
            )
        })
    }

    /// Same vehicles (ids and classes) on the same grid.
    pub fn same_problem(&self, other: &PlatoonState) -> bool {
        self.spec == other.spec && self.roster == other.roster
    }

    pub fn same_occupancy(&self, other: &PlatoonState) -> bool {
        self.same_problem(other) && self.positions == other.positions
    }

    pub fn vacant_cells(&self) -> usize {
        self.spec.cell_count() - self.vehicle_count()
    }

    /// Warning text when there are fewer vacant cells than vehicles.
    pub fn vacancy_warning(&self) -> Option<String> {
        (self.vacant_cells() < self.vehicle_count()).then(|| {
            format!(
                "only {} vacant cells for {} vehicles; consider adding buffer rows",
                self.vacant_cells(),
                self.vehicle_count()
            )
        })
    }

    pub fn state_key(&self) -> StateKey {
        let q: Vec<i32> = self.speeds.iter().map(|&v| quantize_speed(v)).collect();
        StateKey::encode(self.positions.iter().copied(), &q)
    }

    /// Every single-vehicle move into a 4-adjacent vacant cell, by ascending
    /// vehicle id then up/down/left/right.
    pub fn legal_moves(&self) -> Vec<Move> {
        let mut moves = Vec::new();
        for (idx, tag) in self.roster.iter().enumerate() {
            let from = self.positions[idx];
            for dir in Direction::ALL {
                if let Some(to) = self.spec.neighbor(from, dir) {
                    if self.occupancy[to - 1].is_none() {
                        let kind = match dir {
                            Direction::Up | Direction::Down => MoveKind::Longitudinal,
                            Direction::Left | Direction::Right => MoveKind::Lateral,
                        };
                        moves.push(Move {
                            vehicle: tag.id.clone(),
                            from,
                            to,
                            kind,
                        });
                    }
                }
            }
        }
        moves
    }

    /// Applies one move (or a hold) and relaxes every vehicle's speed.
    pub fn apply_move(&self, mv: &Move, params: &CostParams) -> Result<PlatoonState> {
        let idx = self
            .index_of(&mv.vehicle)
            .ok_or_else(|| Error::IllegalMove(format!("unknown vehicle {}", mv.vehicle)))?;
        if self.positions[idx] != mv.from {
            return Err(Error::IllegalMove(format!(
                "{} is in cell {}, not {}",
                mv.vehicle, self.positions[idx], mv.from
            )));
        }
        let kind = self
            .spec
            .classify(mv.from, mv.to)
            .ok_or(Error::NonAdjacent { from: mv.from, to: mv.to })?;
        if kind != mv.kind {
            return Err(Error::IllegalMove(format!(
                "{mv} is a {kind:?} move, labelled {:?}",
                mv.kind
            )));
        }
        if kind != MoveKind::Hold && !self.is_vacant(mv.to) {
            return Err(Error::IllegalMove(format!("target cell {} is occupied", mv.to)));
        }
        let mut positions = self.positions.clone();
        positions[idx] = mv.to;
        let speeds = self.speeds.iter().map(|&v| speed_update(v, params)).collect();
        Ok(self.with_layout(positions, speeds))
    }

    /// Move that turns `self` into `next`, if exactly one vehicle changed cell
    /// to an adjacent one.
    pub fn move_to(&self, next: &PlatoonState) -> Result<Move> {
        if !self.same_problem(next) {
            return Err(Error::NotAdjacentStates("different vehicles or grids".into()));
        }
        let mut changed = self
            .positions
            .iter()
            .zip(&next.positions)
            .enumerate()
            .filter(|(_, (a, b))| a != b);
        let (idx, (&from, &to)) = changed
            .next()
            .ok_or_else(|| Error::NotAdjacentStates("no vehicle moved".into()))?;
        if changed.next().is_some() {
            return Err(Error::NotAdjacentStates("more than one vehicle moved".into()));
        }
        let kind = self
            .spec
            .classify(from, to)
            .ok_or_else(|| Error::NotAdjacentStates(format!("cells {from} and {to} are not adjacent")))?;
        Ok(Move {
            vehicle: self.roster[idx].id.clone(),
            from,
            to,
            kind,
        })
    }

    /// Every arrangement of this state's vehicles consistent with `template`,
    /// at zero relative speed.
    pub fn enumerate_goal_set(&self, template: &GoalTemplate) -> Result<Vec<PlatoonState>> {
        let mut used_rows = HashSet::new();
        let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, tag) in self.roster.iter().enumerate() {
            by_class.entry(tag.class.as_str()).or_default().push(i);
        }

        let mut blocks: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let mut seen_classes = HashSet::new();
        for set in &template.row_sets {
            if !seen_classes.insert(set.class.as_str()) {
                return Err(Error::InfeasibleTemplate(format!(
                    "class {} appears in more than one row set",
                    set.class
                )));
            }
            let mut cells = Vec::new();
            for &row in &set.rows {
                if row == 0 || row > self.spec.rows {
                    return Err(Error::InfeasibleTemplate(format!("row {row} outside the grid")));
                }
                if !used_rows.insert(row) {
                    return Err(Error::InfeasibleTemplate(format!("row {row} used by two row sets")));
                }
                cells.extend((1..=self.spec.cols).map(|c| self.spec.cell_at(row, c)));
            }
            cells.sort_unstable();
            let members = by_class.get(set.class.as_str()).cloned().unwrap_or_default();
            if members.len() != cells.len() {
                return Err(Error::InfeasibleTemplate(format!(
                    "class {} has {} vehicles but its rows hold {} cells",
                    set.class,
                    members.len(),
                    cells.len()
                )));
            }
            blocks.push((members, cells));
        }
        if let Some(class) = by_class.keys().find(|c| !seen_classes.contains(*c)) {
            return Err(Error::InfeasibleTemplate(format!("class {class} has no row set")));
        }

        let per_block: Vec<Vec<Vec<(usize, usize)>>> = blocks
            .iter()
            .map(|(members, cells)| {
                cells
                    .iter()
                    .copied()
                    .permutations(cells.len())
                    .map(|perm| members.iter().copied().zip(perm).collect())
                    .collect()
            })
            .collect();

        let zero = vec![0.0; self.vehicle_count()];
        let goals = per_block
            .into_iter()
            .multi_cartesian_product()
            .map(|choice| {
                let mut positions = vec![0; self.vehicle_count()];
                for (vehicle, cell) in choice.into_iter().flatten() {
                    positions[vehicle] = cell;
                }
                self.with_layout(positions, zero.clone())
            })
            .collect::<Vec<_>>();
        // multi_cartesian_product yields nothing for zero blocks
        if goals.is_empty() && self.vehicle_count() == 0 {
            return Ok(vec![self.with_layout(Vec::new(), Vec::new())]);
        }
        Ok(goals)
    }
}

/// Class-ordering goal: every vehicle of `class` must sit somewhere in
/// the cells of `rows`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowSet {
    pub rows: Vec<usize>,
    pub class: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalTemplate {
    pub row_sets: Vec<RowSet>,
}
