//! Transition costs between adjacent platoon states.
//!
//! A vehicle that keeps its longitudinal cell pays `exp(gamma*|v|) - 1`; one
//! that changes row pays `beta_long + |v| * exp(v * (x_k - x_k1))`, where `x`
//! is the longitudinal coordinate increasing toward the front. A lane change
//! adds `beta_lc`. The edge cost sums this over every vehicle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MoveKind, PlatoonState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostParams {
    pub beta_long: f64,
    pub beta_lc: f64,
    pub gamma: f64,
    /// Maximum acceleration, m/s², positive.
    pub a_max_accel: f64,
    /// Minimum (most negative) deceleration, m/s², negative.
    pub a_min_decel: f64,
    /// Cell length `L`, meters.
    pub cell_length: f64,
    /// Cruising speed of the sorted platoon, m/s. Reference frame only.
    pub cruise_speed: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            beta_long: 1.0,
            beta_lc: 1.0,
            gamma: 1.0,
            a_max_accel: 3.0,
            a_min_decel: -5.0,
            cell_length: GridSpec::DEFAULT_CELL_LENGTH,
            cruise_speed: 15.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.beta_long > 0.0 && self.beta_long <= 1.0) {
            return bad(format!("beta_long must lie in (0, 1], got {}", self.beta_long));
        }
        if !(self.beta_lc > 0.0 && self.beta_lc <= 1.0) {
            return bad(format!("beta_lc must lie in (0, 1], got {}", self.beta_lc));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.a_max_accel > 0.0 && self.a_max_accel.is_finite()) {
            return bad(format!("a_max_accel must be positive, got {}", self.a_max_accel));
        }
        if !(self.a_min_decel < 0.0 && self.a_min_decel.is_finite()) {
            return bad(format!("a_min_decel must be negative, got {}", self.a_min_decel));
        }
        if !(self.cell_length > 0.0 && self.cell_length.is_finite()) {
            return bad(format!("cell_length must be positive, got {}", self.cell_length));
        }
        Ok(())
    }

    /// Minimum possible edge cost.
    pub fn c_min(&self) -> f64 {
        self.beta_long.min(self.beta_lc)
    }
}

/// Acceleration bound that applies to a vehicle with relative speed `v`.
fn accel_limit(v: f64, params: &CostParams) -> f64 {
    if v >= 0.0 {
        params.a_max_accel
    } else {
        params.a_min_decel
    }
}

/// Relative speed after one movement step. Speeds that can be cancelled
/// within one cell length drop to zero; larger magnitudes shrink.
pub fn speed_update(v: f64, params: &CostParams) -> f64 {
    let limit = accel_limit(v, params).abs();
    let two_l = 2.0 * params.cell_length;
    if v * v / two_l <= limit {
        0.0
    } else {
        v.signum() * (v * v - limit * two_l).sqrt()
    }
}

/// Cost for one vehicle going from `(row_from, col_from)` to `(row_to, col_to)`
/// with relative speed `v`. Rows are 1-based from the front.
pub(crate) fn transition_cost(
    row_from: usize,
    col_from: usize,
    row_to: usize,
    col_to: usize,
    v: f64,
    params: &CostParams,
) -> f64 {
    let speed = v.abs();
    let longitudinal = if row_from == row_to {
        (params.gamma * speed).exp() - 1.0
    } else {
        // x = rows - row, so x_k - x_{k+1} = row_to - row_from
        let dx = row_to as f64 - row_from as f64;
        params.beta_long + speed * (v * dx).exp()
    };
    let lane_change = if col_from != col_to { params.beta_lc } else { 0.0 };
    longitudinal + lane_change
}

/// Cost of keeping the current cell with relative speed `v`.
pub(crate) fn hold_cost(v: f64, params: &CostParams) -> f64 {
    (params.gamma * v.abs()).exp() - 1.0
}

/// Per-vehicle cost for moving (or holding) from `from_cell` to `to_cell`.
pub fn vehicle_cost(spec: &GridSpec, from_cell: usize, to_cell: usize, speed: f64, params: &CostParams) -> Result<f64> {
    spec.classify(from_cell, to_cell).ok_or(Error::NonAdjacent {
        from: from_cell,
        to: to_cell,
    })?;
    let (r0, c0) = spec.row_col(from_cell);
    let (r1, c1) = spec.row_col(to_cell);
    Ok(transition_cost(r0, c0, r1, c1, speed, params))
}

/// Edge cost between two states that differ by one single-vehicle move:
/// the sum of every vehicle's cost, movers and holders alike.
pub fn edge_cost(from: &PlatoonState, to: &PlatoonState, params: &CostParams) -> Result<f64> {
    let mv = from.move_to(to)?;
    debug_assert_ne!(mv.kind, MoveKind::Hold);
    let spec = from.spec();
    from.positions()
        .iter()
        .zip(to.positions())
        .zip(from.speeds())
        .map(|((&a, &b), &v)| vehicle_cost(spec, a, b, v, params))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Vehicle;

    fn spec() -> GridSpec {
        GridSpec::new(4, 3, 7.0).unwrap()
    }

    #[test]
    fn zero_speed_hold_is_free() {
        assert_eq!(vehicle_cost(&spec(), 5, 5, 0.0, &CostParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn zero_speed_lateral_costs_beta_lc() {
        assert_eq!(vehicle_cost(&spec(), 5, 6, 0.0, &CostParams::default()).unwrap(), 1.0);
    }

    #[test]
    fn hold_at_speed_two() {
        let c = vehicle_cost(&spec(), 5, 5, 2.0, &CostParams::default()).unwrap();
        assert!((c - (2.0f64.exp() - 1.0)).abs() < 1e-12);
        assert!((c - 6.389).abs() < 1e-3);
    }

    #[test]
    fn moving_against_speed_is_expensive() {
        // v > 0 drifts toward the front; row 2 -> row 3 is backwards
        let c = vehicle_cost(&spec(), 5, 8, 2.0, &CostParams::default()).unwrap();
        assert!((c - (1.0 + 2.0 * 2.0f64.exp())).abs() < 1e-12);
        assert!((c - 15.778).abs() < 1e-3);
        let with = vehicle_cost(&spec(), 5, 2, 2.0, &CostParams::default()).unwrap();
        assert!(with < c);
    }

    #[test]
    fn diagonal_is_rejected() {
        assert!(matches!(
            vehicle_cost(&spec(), 5, 9, 0.0, &CostParams::default()),
            Err(Error::NonAdjacent { from: 5, to: 9 })
        ));
    }

    #[test]
    fn speed_update_cases() {
        let p = CostParams::default();
        assert_eq!(speed_update(0.0, &p), 0.0);
        // 4 / 14 <= 3
        assert_eq!(speed_update(2.0, &p), 0.0);
        let decel = CostParams {
            a_min_decel: -5.0,
            a_max_accel: 5.0,
            cell_length: 7.0,
            ..p
        };
        assert!((speed_update(10.0, &decel) - 30.0f64.sqrt()).abs() < 1e-12);
        assert!((speed_update(-10.0, &decel) + 30.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn c_min_is_smaller_beta() {
        let mut p = CostParams::default();
        assert_eq!(p.c_min(), 1.0);
        p.beta_long = 0.4;
        p.beta_lc = 0.9;
        assert_eq!(p.c_min(), 0.4);
        p.beta_long = 0.5;
        p.beta_lc = 0.5;
        assert_eq!(p.c_min(), 0.5);
    }

    #[test]
    fn params_validation() {
        assert!(CostParams::default().validate().is_ok());
        let zero_beta = CostParams {
            beta_lc: 0.0,
            ..Default::default()
        };
        assert!(zero_beta.validate().is_err());
        let bad_gamma = CostParams {
            gamma: 0.0,
            ..Default::default()
        };
        assert!(bad_gamma.validate().is_err());
    }

    #[test]
    fn edge_cost_zero_speed() {
        let p = CostParams {
            beta_lc: 0.5,
            ..Default::default()
        };
        let s = PlatoonState::new(spec(), [(Vehicle::new("A", "x", 0.0), 5), (Vehicle::new("B", "x", 0.0), 1)]).unwrap();
        for mv in s.legal_moves() {
            let next = s.apply_move(&mv, &p).unwrap();
            let expected = match mv.kind {
                MoveKind::Longitudinal => p.beta_long,
                MoveKind::Lateral => p.beta_lc,
                MoveKind::Hold => unreachable!(),
            };
            assert_eq!(edge_cost(&s, &next, &p).unwrap(), expected);
        }
        assert!(matches!(edge_cost(&s, &s, &p), Err(Error::NotAdjacentStates(_))));
    }
}
