mod common;

use std::collections::HashMap;

use itertools::Itertools;
use platoon_sort::cost::{edge_cost, speed_update, vehicle_cost};
use platoon_sort::format::{parse_state, serialize_state};
use platoon_sort::grid::{GoalTemplate, GridSpec, MoveKind, PlatoonState, RowSet, StateKey, Vehicle};
use platoon_sort::heuristics::{manhattan, misplaced, multi_goal, perturb, epsilon_interval, stochastic_wrap};
use platoon_sort::schedule::{
    brute_force_schedule, build_precedence, earliest_schedule, records_from_moves, replay_schedule, schedule_from_csv,
    schedule_to_csv, validate_schedule, SchedulingMode,
};
use platoon_sort::search::astar;
use platoon_sort::{
    solve_sorting, BaseHeuristic, CostParams, GoalSpec, HeuristicKind, SearchOptions,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{approx_eq, random_instance, random_path, random_state, random_walk, ucs};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_speed_state(seed: u64) -> PlatoonState {
    let mut r = rng(seed);
    let inst = random_instance(&mut r);
    let speeds: Vec<f64> = (0..inst.initial.vehicle_count())
        .map(|i| ((seed >> (i * 8)) % 13) as f64 - 6.0)
        .collect();
    let placements: Vec<_> = inst
        .initial
        .vehicles()
        .zip(speeds)
        .map(|((v, c), s)| (Vehicle::new(v.id.0, v.class, s), c))
        .collect();
    PlatoonState::new(*inst.initial.spec(), placements).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn legal_moves_are_adjacent_vacant_and_apply(seed in any::<u64>()) {
        let s = random_speed_state(seed);
        let params = CostParams::default();
        let spec = *s.spec();
        for mv in s.legal_moves() {
            prop_assert!(s.is_vacant(mv.to));
            let (r0, c0) = spec.row_col(mv.from);
            let (r1, c1) = spec.row_col(mv.to);
            prop_assert_eq!(r0.abs_diff(r1) + c0.abs_diff(c1), 1);
            let next = s.apply_move(&mv, &params).unwrap();
            prop_assert_eq!(next.vehicle_count(), s.vehicle_count());
            let ids_before: Vec<_> = s.roster().iter().map(|t| t.id.clone()).collect();
            let ids_after: Vec<_> = next.roster().iter().map(|t| t.id.clone()).collect();
            prop_assert_eq!(ids_before, ids_after);
            prop_assert!(next.positions().iter().all_unique());
            let rebuilt = PlatoonState::new(spec, next.vehicles()).unwrap();
            prop_assert_eq!(rebuilt, next);
        }
    }

    #[test]
    fn state_key_equality_matches_state_equality(a in any::<u64>(), b in any::<u64>()) {
        let sa = random_speed_state(a);
        let sb = random_speed_state(b);
        if sa.same_problem(&sb) {
            prop_assert_eq!(sa == sb, sa.state_key() == sb.state_key());
        }
        prop_assert!(sa.state_key() == sa.clone().state_key());
        let back = sa.from_key(&sa.state_key());
        prop_assert_eq!(back, sa);
    }

    #[test]
    fn instance_text_round_trips(seed in any::<u64>()) {
        let s = random_speed_state(seed);
        let text = serialize_state(&s);
        prop_assert_eq!(parse_state(&text).unwrap(), s);
    }

    #[test]
    fn goal_set_size_is_product_of_factorials(cols in 1usize..=3, left_first in any::<bool>(), split in any::<bool>()) {
        let spec = GridSpec::new(4, cols, 7.0).unwrap();
        let mut placements = Vec::new();
        let names = ["a", "b", "c", "d", "e", "f"];
        for (i, name) in names.iter().take(2 * cols).enumerate() {
            let class = if i < cols { "left" } else { "through" };
            placements.push((Vehicle::new(*name, class, 0.0), i + 1));
        }
        let s = PlatoonState::new(spec, placements).unwrap();
        let template = if split {
            let (r_left, r_through) = if left_first { (2, 3) } else { (3, 2) };
            GoalTemplate { row_sets: vec![
                RowSet { rows: vec![r_left], class: "left".into() },
                RowSet { rows: vec![r_through], class: "through".into() },
            ] }
        } else {
            // a single class may not span two rows of unequal count, so relabel
            let placements: Vec<_> = s.vehicles().map(|(v, c)| (Vehicle::new(v.id.0, "any", 0.0), c)).collect();
            let s2 = PlatoonState::new(spec, placements).unwrap();
            let t = GoalTemplate { row_sets: vec![RowSet { rows: vec![2, 3], class: "any".into() }] };
            let goals = s2.enumerate_goal_set(&t).unwrap();
            let cells: Vec<usize> = (cols + 1..=3 * cols).collect();
            let brute = cells.iter().permutations(2 * cols).count();
            prop_assert_eq!(goals.len(), brute);
            return Ok(());
        };
        let goals = s.enumerate_goal_set(&template).unwrap();
        let fact = |n: usize| (1..=n).product::<usize>();
        prop_assert_eq!(goals.len(), fact(cols) * fact(cols));
        // brute force: every assignment of the 2*cols vehicles to rows 2..=3 honouring classes
        let cells: Vec<usize> = (cols + 1..=3 * cols).collect();
        let mut count = 0;
        for perm in cells.iter().permutations(2 * cols) {
            let ok = s.roster().iter().zip(&perm).all(|(tag, &&cell)| {
                let row = spec.row_col(cell).0;
                template.row_sets.iter().any(|rs| rs.class == tag.class && rs.rows.contains(&row))
            });
            if ok { count += 1; }
        }
        prop_assert_eq!(goals.len(), count);
    }

    #[test]
    fn vehicle_cost_signs(v in -20.0f64..20.0, from in 1usize..=12, dir in 0usize..5) {
        let spec = GridSpec::new(4, 3, 7.0).unwrap();
        let params = CostParams::default();
        let to = match dir {
            0 => Some(from),
            d => spec.neighbor(from, platoon_sort::Direction::ALL[d - 1]),
        };
        if let Some(to) = to {
            let c = vehicle_cost(&spec, from, to, v, &params).unwrap();
            prop_assert!(c >= 0.0);
            prop_assert_eq!(c == 0.0, from == to && v == 0.0);
        }
    }

    #[test]
    fn hold_cost_increases_with_speed(a in 0.0f64..10.0, b in 0.0f64..10.0) {
        prop_assume!(a < b);
        let spec = GridSpec::new(4, 3, 7.0).unwrap();
        let p = CostParams::default();
        for sign in [1.0, -1.0] {
            prop_assert!(vehicle_cost(&spec, 5, 5, sign * a, &p).unwrap() < vehicle_cost(&spec, 5, 5, sign * b, &p).unwrap());
        }
    }

    #[test]
    fn moving_against_speed_costs_more(v in 0.01f64..10.0) {
        let spec = GridSpec::new(4, 3, 7.0).unwrap();
        let p = CostParams::default();
        // positive speed carries the vehicle toward the front (row 1)
        let with = vehicle_cost(&spec, 8, 5, v, &p).unwrap();
        let against = vehicle_cost(&spec, 5, 8, v, &p).unwrap();
        prop_assert!(against > with);
    }

    #[test]
    fn speed_relaxation_never_overshoots(v in -60.0f64..60.0, a in 0.5f64..8.0, d in -8.0f64..-0.5) {
        let p = CostParams { a_max_accel: a, a_min_decel: d, ..Default::default() };
        let u = speed_update(v, &p);
        prop_assert!(u.abs() <= v.abs());
        prop_assert!(u == 0.0 || u.signum() == v.signum());
    }

    #[test]
    fn zero_speed_edges_cost_one_beta(seed in any::<u64>(), bl in 0.1f64..=1.0, bc in 0.1f64..=1.0) {
        let inst = random_instance(&mut rng(seed));
        let p = CostParams { beta_long: bl, beta_lc: bc, ..Default::default() };
        for mv in inst.initial.legal_moves() {
            let next = inst.initial.apply_move(&mv, &p).unwrap();
            let c = edge_cost(&inst.initial, &next, &p).unwrap();
            let expected = if mv.kind == MoveKind::Lateral { bc } else { bl };
            prop_assert!(approx_eq(c, expected));
        }
    }

    #[test]
    fn heuristics_are_admissible_and_consistent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r);
        let p = &inst.params;
        let goals = GoalSpec::from_states(&inst.initial, vec![inst.goal.clone()]).unwrap();
        let walk = random_walk(&mut r, &inst.initial, 6, p);
        for s in &walk {
            let exact = ucs(s, std::slice::from_ref(&inst.goal), p).cost;
            let hm = manhattan(s, &inst.goal, p).unwrap();
            let hp = misplaced(s, &inst.goal, p).unwrap();
            prop_assert!(hp <= hm + 1e-9);
            prop_assert!(approx_eq(multi_goal(s, &goals, BaseHeuristic::Manhattan, p).unwrap(), hm));
            if let Some(opt) = exact {
                prop_assert!(hm <= opt + 1e-9, "manhattan {} > optimum {}", hm, opt);
                prop_assert!(hp <= opt + 1e-9);
            }
            for mv in s.legal_moves() {
                let n = s.apply_move(&mv, p).unwrap();
                let c = edge_cost(s, &n, p).unwrap();
                prop_assert!(hm <= c + manhattan(&n, &inst.goal, p).unwrap() + 1e-9);
                prop_assert!(hp <= c + misplaced(&n, &inst.goal, p).unwrap() + 1e-9);
            }
        }
    }

    #[test]
    fn multi_goal_is_min_over_goals(seed in any::<u64>(), w0 in 0.0f64..3.0, w1 in 0.0f64..3.0) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r);
        let other = random_state(&mut r, *inst.initial.spec(), inst.initial.vehicle_count());
        let p = &inst.params;
        let spec = GoalSpec::weighted(&inst.initial, vec![inst.goal.clone(), other.clone()], vec![w0, w1]).unwrap();
        for base in [BaseHeuristic::Manhattan, BaseHeuristic::Misplaced] {
            let single = |g: &PlatoonState| match base {
                BaseHeuristic::Manhattan => manhattan(&inst.initial, g, p).unwrap(),
                BaseHeuristic::Misplaced => misplaced(&inst.initial, g, p).unwrap(),
            };
            let expected = (single(&inst.goal) + w0).min(single(&other) + w1);
            prop_assert!(approx_eq(multi_goal(&inst.initial, &spec, base, p).unwrap(), expected));
        }
    }

    #[test]
    fn stochastic_wrapper_stays_within_c_min(seed in any::<u64>(), run in any::<u64>()) {
        let inst = random_instance(&mut rng(seed));
        let c_min = inst.params.c_min();
        for s in random_walk(&mut rng(seed ^ 1), &inst.initial, 10, &inst.params) {
            let h = manhattan(&s, &inst.goal, &inst.params).unwrap();
            let w = stochastic_wrap(h, c_min, &s.state_key(), run).unwrap();
            prop_assert!(h - w > 0.0 && h - w < c_min);
        }
    }

    #[test]
    fn layered_ordering_of_perturbed_f(c_min in 0.1f64..3.0, hi in 0.0f64..25.0, gap in 0.0f64..10.0, f in 0.0f64..40.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, up) = epsilon_interval(c_min).unwrap();
        let h_inner = hi + c_min + gap;
        let h_outer = hi;
        let (ei, ej) = (lo + a * (up - lo), lo + b * (up - lo));
        // equal unperturbed F: g = F - h
        let f_inner = (f - h_inner) + perturb(h_inner, c_min, ei);
        let f_outer = (f - h_outer) + perturb(h_outer, c_min, ej);
        prop_assert!(f_outer < f_inner);
    }
}

fn solve_cost(inst: &common::Instance, kind: HeuristicKind, seed: u64) -> Option<f64> {
    let goals = GoalSpec::from_states(&inst.initial, vec![inst.goal.clone()]).unwrap();
    match solve_sorting(&inst.initial, &goals, &inst.params, kind, &SearchOptions::default(), Some(seed)) {
        Ok((path, _)) => Some(path.total_cost),
        Err(platoon_sort::Error::Search(platoon_sort::SearchError::NoPath(_))) => None,
        Err(e) => panic!("unexpected error {e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn astar_matches_uniform_cost_oracle(seed in any::<u64>(), run in any::<u64>()) {
        let inst = random_instance(&mut rng(seed));
        let oracle = ucs(&inst.initial, std::slice::from_ref(&inst.goal), &inst.params).cost;
        for base in [BaseHeuristic::Manhattan, BaseHeuristic::Misplaced] {
            for stochastic in [false, true] {
                let got = solve_cost(&inst, HeuristicKind { base, stochastic }, run);
                match (got, oracle) {
                    (Some(a), Some(b)) => prop_assert!(approx_eq(a, b), "{} {}: {} vs {}", base, stochastic, a, b),
                    (None, None) => {}
                    other => prop_assert!(false, "reachability differs: {:?}", other),
                }
            }
        }
    }

    #[test]
    fn returned_paths_are_stepwise(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed));
        let goals = GoalSpec::from_states(&inst.initial, vec![inst.goal.clone()]).unwrap();
        let Ok((path, _)) = solve_sorting(&inst.initial, &goals, &inst.params, HeuristicKind::default(), &SearchOptions::default(), None) else {
            return Ok(());
        };
        let mut total = 0.0;
        for w in path.states.windows(2) {
            let moved = w[0].positions().iter().zip(w[1].positions()).filter(|(a, b)| a != b).count();
            prop_assert_eq!(moved, 1);
            total += edge_cost(&w[0], &w[1], &inst.params).unwrap();
        }
        prop_assert!(approx_eq(total, path.total_cost));
        prop_assert!(path.final_state().same_occupancy(&inst.goal));
        for s in &path.states {
            prop_assert!(s.legal_moves().len() <= 4 * s.vehicle_count());
        }
    }

    #[test]
    fn consistent_heuristic_expands_in_nondecreasing_f(seed in any::<u64>(), misplaced_h in any::<bool>()) {
        let inst = random_instance(&mut rng(seed));
        let p = inst.params;
        let goal = inst.goal.clone();
        let init = inst.initial.clone();
        let h = |k: &StateKey| {
            let s = init.from_key(k);
            if misplaced_h { misplaced(&s, &goal, &p).unwrap() } else { manhattan(&s, &goal, &p).unwrap() }
        };
        let r = astar(
            inst.initial.state_key(),
            |k: &StateKey| init.from_key(k).same_occupancy(&goal),
            |k: &StateKey| {
                let s = init.from_key(k);
                s.legal_moves().into_iter().map(|m| {
                    let n = s.apply_move(&m, &p).unwrap();
                    let c = edge_cost(&s, &n, &p).unwrap();
                    (n.state_key(), c)
                }).collect::<Vec<_>>()
            },
            h,
            &SearchOptions { trace: true, ..Default::default() },
        );
        if let Ok(r) = r {
            prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{:?}", r.trace);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(160))]

    #[test]
    fn earliest_schedule_is_exact(seed in any::<u64>()) {
        let path = random_path(seed, 8);
        let moves = records_from_moves(&path.moves);
        for mode in SchedulingMode::ALL {
            let dag = build_precedence(&moves, mode);
            prop_assert!(dag.edges.iter().all(|e| e.before < e.after));
            dag.topological_order().unwrap();
            let fast = earliest_schedule(&dag).unwrap();
            let slow = brute_force_schedule(&moves, mode, moves.len() as u32).unwrap();
            prop_assert_eq!((fast.objective, fast.makespan), (slow.objective, slow.makespan));
            validate_schedule(path.initial(), &slow).unwrap();
        }
    }

    #[test]
    fn schedules_validate_and_conserve(seed in any::<u64>()) {
        let path = random_path(seed, 30);
        let moves = records_from_moves(&path.moves);
        let mut spans = HashMap::new();
        for mode in SchedulingMode::ALL {
            let s = earliest_schedule(&build_precedence(&moves, mode)).unwrap();
            for e in &build_precedence(&moves, mode).edges {
                let (a, b) = (s.steps[e.before], s.steps[e.after]);
                let ok = if e.strict { a < b } else { a <= b };
                prop_assert!(ok);
            }
            let frames = replay_schedule(path.initial(), &s).map_err(|v| TestCaseError::fail(format!("{v:?}")))?;
            prop_assert!(frames.last().unwrap().same_occupancy(path.final_state()));
            prop_assert_eq!(schedule_from_csv(&schedule_to_csv(&s), mode).unwrap(), s.clone());
            spans.insert(mode, s.makespan);
        }
        prop_assert!(spans[&SchedulingMode::Aggressive] <= spans[&SchedulingMode::Conservative]);
        prop_assert!(spans[&SchedulingMode::Conservative] as usize <= moves.len());
    }
}
