//! Hard constraints and auxiliary variables for the selection program.
//!
//! Three families of rows are appended to the program: trajectory-crossed
//! candidates are summed to zero, every intersection vertex gets a degree
//! rule, and sharp corners are linearized with AND/OR auxiliaries so the
//! complexity term stays linear.

use crate::blp::{BinaryProgram, Constraint, Relation};

use super::candidates::{CandidateSegment, IntersectionVertex};

/// Appends all hard-constraint rows and auxiliary variables. Variables
/// 0..candidates.len() must already exist with their data-term objective
/// coefficients; this adds degree activators (z), sharp-pair indicators
/// (y), and per-vertex sharpness variables (s) after them, in that order
/// per vertex. Returns the ids of vertices whose crossed-candidate count
/// exceeds four (their degree cap is clamped to zero).
pub(super) fn append_constraints(
    program: &mut BinaryProgram,
    candidates: &[CandidateSegment],
    vertices: &[IntersectionVertex],
    collinear_tol_deg: f64,
    complexity_per_pair: bool,
    lambda_complexity: f64,
) -> Vec<usize> {
    let tol = collinear_tol_deg.to_radians();
    let vertex_norm = vertices.len().max(1) as f64;
    let mut infeasible = Vec::new();

    let incidents: Vec<Vec<usize>> = vertices
        .iter()
        .map(|v| {
            let mut inc = v.incident.clone();
            inc.sort_unstable();
            inc.dedup();
            inc
        })
        .collect();

    // Eq-style exclusion of every trajectory-crossed candidate.
    let crossed: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].crossed_by_trajectory)
        .collect();
    if !crossed.is_empty() {
        program.constraints.push(Constraint {
            terms: crossed.iter().map(|&i| (i, 1.0)).collect(),
            relation: Relation::Eq,
            rhs: 0.0,
        });
    }

    // Degree rules. Vertices untouched by the trajectory may have degree
    // 0 or 2..4, encoded with an activation variable z: selecting any
    // incident candidate forces z = 1, which in turn demands degree >= 2.
    // Vertices with crossed incidents lose one degree slot per crossing.
    for (v, incident) in vertices.iter().zip(&incidents) {
        let crossed_count = incident
            .iter()
            .filter(|&&i| candidates[i].crossed_by_trajectory)
            .count();
        let open: Vec<usize> = incident
            .iter()
            .copied()
            .filter(|&i| !candidates[i].crossed_by_trajectory)
            .collect();
        if crossed_count == 0 {
            if open.is_empty() {
                continue;
            }
            let z = program.num_vars;
            program.num_vars += 1;
            program.objective.push(0.0);
            let mut ge: Vec<(usize, f64)> = open.iter().map(|&i| (i, 1.0)).collect();
            ge.push((z, -2.0));
            program.constraints.push(Constraint {
                terms: ge,
                relation: Relation::Ge,
                rhs: 0.0,
            });
            let mut le: Vec<(usize, f64)> = open.iter().map(|&i| (i, 1.0)).collect();
            le.push((z, -4.0));
            program.constraints.push(Constraint {
                terms: le,
                relation: Relation::Le,
                rhs: 0.0,
            });
        } else {
            if crossed_count > 4 {
                infeasible.push(v.id);
            }
            let cap = 4usize.saturating_sub(crossed_count) as f64;
            if !open.is_empty() {
                program.constraints.push(Constraint {
                    terms: open.iter().map(|&i| (i, 1.0)).collect(),
                    relation: Relation::Le,
                    rhs: cap,
                });
            }
        }
    }

    // Sharpness linearization: one AND variable per non-collinear incident
    // pair (y = x_a AND x_b), and per vertex an OR variable s over its
    // pair indicators. In per-pair mode the pair indicators carry the
    // complexity cost directly and no s variable is created.
    for incident in &incidents {
        let mut pair_vars = Vec::new();
        for ai in 0..incident.len() {
            for bi in (ai + 1)..incident.len() {
                let (a, b) = (incident[ai], incident[bi]);
                if candidates[a].seg.line_angle(&candidates[b].seg) <= tol {
                    continue;
                }
                let y = program.num_vars;
                program.num_vars += 1;
                program.objective.push(if complexity_per_pair {
                    lambda_complexity / vertex_norm
                } else {
                    0.0
                });
                program.constraints.push(Constraint {
                    terms: vec![(y, 1.0), (a, -1.0), (b, -1.0)],
                    relation: Relation::Ge,
                    rhs: -1.0,
                });
                program.constraints.push(Constraint {
                    terms: vec![(y, 1.0), (a, -1.0)],
                    relation: Relation::Le,
                    rhs: 0.0,
                });
                program.constraints.push(Constraint {
                    terms: vec![(y, 1.0), (b, -1.0)],
                    relation: Relation::Le,
                    rhs: 0.0,
                });
                pair_vars.push(y);
            }
        }
        if !complexity_per_pair && !pair_vars.is_empty() {
            let s = program.num_vars;
            program.num_vars += 1;
            program.objective.push(lambda_complexity / vertex_norm);
            for &y in &pair_vars {
                program.constraints.push(Constraint {
                    terms: vec![(s, 1.0), (y, -1.0)],
                    relation: Relation::Ge,
                    rhs: 0.0,
                });
            }
            let mut or_cap: Vec<(usize, f64)> = vec![(s, 1.0)];
            or_cap.extend(pair_vars.iter().map(|&y| (y, -1.0)));
            program.constraints.push(Constraint {
                terms: or_cap,
                relation: Relation::Le,
                rhs: 0.0,
            });
        }
    }

    infeasible
}
