//! Selection-stack properties checked against first principles: the exact
//! solver against exhaustive enumeration of every assignment, energies
//! against their closed-form recomputation, and the hard constraints
//! against the selected set itself.

use floorplan_core::floorplan::{
    build_arrangement, build_selection_problem, solve_selection, FloorplanConfig, WallSegment2D,
};
use floorplan_core::geometry::Segment2;
use nalgebra::{Point2, Vector2};
use proptest::prelude::*;

/// A synthetic projected wall: a segment plus support scattered along it.
fn wall(center: (f64, f64), angle: f64, half_len: f64, scatter: &[(f64, f64)]) -> WallSegment2D {
    let dir = Vector2::new(angle.cos(), angle.sin());
    let normal = Vector2::new(-dir.y, dir.x);
    let c = Point2::new(center.0, center.1);
    let support2d = scatter
        .iter()
        .map(|&(t, off)| c + dir * (t * half_len) + normal * (off * 0.02))
        .collect();
    WallSegment2D {
        seg: Segment2::new(c - dir * half_len, c + dir * half_len),
        support2d,
        source_landmarks: vec![0],
    }
}

fn wall_strategy() -> impl Strategy<Value = WallSegment2D> {
    (
        (-3.0f64..3.0, -3.0f64..3.0),
        0.0f64..std::f64::consts::PI,
        0.8f64..2.5,
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12..40),
    )
        .prop_map(|(center, angle, half_len, scatter)| wall(center, angle, half_len, &scatter))
}

fn layout_strategy() -> impl Strategy<Value = (Vec<WallSegment2D>, Vec<Point2<f64>>)> {
    let walls = prop::collection::vec(wall_strategy(), 2..5);
    let path = prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 0..4)
        .prop_map(|pts| pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect());
    (walls, path)
}

/// Minimum objective over every feasible assignment, by enumeration.
fn brute_force(problem: &floorplan_core::floorplan::SelectionProblem) -> f64 {
    let n = problem.candidates.len();
    assert!(n <= 18, "enumeration requires a small instance");
    let mut best = f64::INFINITY;
    for mask in 0u32..(1u32 << n) {
        let selected: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if let Some((value, energies)) = problem.evaluate(&selected) {
            for term in [energies.fitting, energies.coverage, energies.complexity] {
                assert!(
                    (-1e-12..=1.0 + 1e-12).contains(&term),
                    "energy term {term} outside [0,1]"
                );
            }
            best = best.min(value);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// The branch-and-bound selection equals exhaustive enumeration, the
    /// recomputed energies stay in [0,1], and the hard constraints hold
    /// on the returned plan.
    #[test]
    fn selection_matches_exhaustive_enumeration(
        (walls, path) in layout_strategy()
    ) {
        let cfg = FloorplanConfig::default();
        let (candidates, vertices) = build_arrangement(&walls, &path, cfg.extension);
        prop_assume!(!candidates.is_empty() && candidates.len() <= 18);
        let problem = build_selection_problem(candidates, vertices, &cfg);

        let best = brute_force(&problem);
        let model = solve_selection(&problem, &cfg, 0, 0).unwrap();
        prop_assert!(
            (model.objective - best).abs() <= 1e-9,
            "solver objective {} vs enumeration {}",
            model.objective,
            best
        );

        // Eq.-style hard constraints hold on the selected set.
        for w in &model.walls {
            prop_assert!(!w.crossed_by_trajectory);
        }
        for v in &problem.vertices {
            let mut incident = v.incident.clone();
            incident.sort_unstable();
            incident.dedup();
            let crossed = incident
                .iter()
                .filter(|&&i| problem.candidates[i].crossed_by_trajectory)
                .count();
            let degree = incident
                .iter()
                .filter(|&&i| model.selected[i])
                .count();
            if crossed == 0 {
                prop_assert!(degree == 0 || (2..=4).contains(&degree));
            } else {
                prop_assert!(degree <= 4usize.saturating_sub(crossed));
            }
        }

        // Same snapshot, same plan: selection is deterministic.
        let again = solve_selection(&problem, &cfg, 0, 0).unwrap();
        prop_assert_eq!(model.selected, again.selected);
    }
}
