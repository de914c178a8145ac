//! Shared builders for the integration suites.
//!
//! Each integration target compiles its own copy, so helpers unused by a
//! particular target are expected.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use odimdp_core::data::{Corpus, DeliveryRecord, MatchRecord, Provenance, Winner};
use odimdp_core::policy::{Counts, TransitionModel};
use odimdp_core::state::GameState;

pub fn provenance() -> Provenance {
    Provenance {
        source: "synthetic".into(),
        ingested_at: "2026-01-01T00:00:00Z".into(),
    }
}

/// An innings of identical legal deliveries.
pub fn constant_innings(innings_no: u8, runs: u8, balls: usize) -> Vec<DeliveryRecord> {
    (0..balls)
        .map(|i| DeliveryRecord {
            innings_no,
            over: (i / 6) as u8,
            ball_in_over: (i % 6) as u8,
            runs_batted: runs,
            is_extra: false,
            is_wicket: false,
        })
        .collect()
}

/// A randomized but legal innings: occasional extras stay on their ball,
/// wickets may fall, and the innings always scores.
pub fn random_innings(rng: &mut ChaCha8Rng, innings_no: u8) -> Vec<DeliveryRecord> {
    let legal_balls = rng.gen_range(60..=300usize);
    let mut out = Vec::new();
    let mut wickets = 0u8;
    'outer: for position in 0..legal_balls {
        let over = (position / 6) as u8;
        let ball = (position % 6) as u8;
        // A burst of extras before the legal delivery.
        while rng.gen_bool(0.04) {
            out.push(DeliveryRecord {
                innings_no,
                over,
                ball_in_over: ball,
                runs_batted: 1,
                is_extra: true,
                is_wicket: false,
            });
        }
        let wicket = rng.gen_bool(0.01) && wickets < 10;
        let runs = if wicket {
            0
        } else {
            *pick(rng, &[0, 0, 0, 1, 1, 1, 1, 2, 4, 6])
        };
        out.push(DeliveryRecord {
            innings_no,
            over,
            ball_in_over: ball,
            runs_batted: runs,
            is_extra: false,
            is_wicket: wicket,
        });
        if wicket {
            wickets += 1;
            if wickets == 10 {
                break 'outer;
            }
        }
    }
    if out.iter().map(|d| d.runs_batted as u32).sum::<u32>() == 0 {
        out[0].runs_batted = 1;
    }
    out
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, values: &'a [T]) -> &'a T {
    &values[rng.gen_range(0..values.len())]
}

pub fn match_of(
    id: &str,
    winner: Winner,
    innings1: Vec<DeliveryRecord>,
    innings2: Vec<DeliveryRecord>,
) -> MatchRecord {
    MatchRecord::from_innings(
        id.into(),
        "A".into(),
        "B".into(),
        winner,
        [innings1, innings2],
    )
    .expect("synthetic match is valid")
}

pub fn corpus_of(matches: Vec<MatchRecord>) -> Corpus {
    Corpus::new(matches, provenance()).expect("unique ids")
}

// --- LP oracles ---------------------------------------------------------------

use odimdp_core::irl::{Condition, COEFF_COUNT};

pub fn penalty(v: f64) -> f64 {
    if v >= 0.0 {
        v
    } else {
        2.0 * v
    }
}

pub fn pool_objective(pool: &[Condition], c: &[f64; COEFF_COUNT]) -> f64 {
    pool.iter()
        .map(|d| penalty(d.0.iter().zip(c).map(|(a, b)| a * b).sum()))
        .sum()
}

/// Solve a small linear system by Gaussian elimination; `None` if singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// All candidate vertices of the arrangement of box faces and condition
/// hyperplanes over the active coordinates, as full coefficient vectors with
/// the inactive coordinates at -1 (the lexicographic floor).
pub fn vertex_candidates(pool: &[Condition], active: &[usize]) -> Vec<[f64; COEFF_COUNT]> {
    let k = active.len();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (slot, _) in active.iter().enumerate() {
        let mut face = vec![0.0; k];
        face[slot] = 1.0;
        planes.push((face.clone(), 1.0));
        planes.push((face, -1.0));
    }
    for d in pool {
        let normal: Vec<f64> = active.iter().map(|&c| d.0[c]).collect();
        if normal.iter().any(|v| v.abs() > 0.0) {
            planes.push((normal, 0.0));
        }
    }

    let mut candidates = Vec::new();
    let m = planes.len();
    let mut chosen = vec![0usize; k];
    fn combos(
        m: usize,
        k: usize,
        start: usize,
        depth: usize,
        chosen: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if depth == k {
            visit(chosen);
            return;
        }
        for i in start..m {
            chosen[depth] = i;
            combos(m, k, i + 1, depth + 1, chosen, visit);
        }
    }
    combos(m, k, 0, 0, &mut chosen, &mut |subset| {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| planes[i].1).collect();
        if let Some(point) = gauss_solve(a, b) {
            if point.iter().all(|v| v.abs() <= 1.0 + 1e-9) {
                let mut c = [-1.0f64; COEFF_COUNT];
                for (slot, &coord) in active.iter().enumerate() {
                    c[coord] = point[slot].clamp(-1.0, 1.0);
                }
                candidates.push(c);
            }
        }
    });
    candidates
}

/// Exact maximum of the pooled objective over the box (active coordinates).
pub fn vertex_oracle(pool: &[Condition], active: &[usize]) -> f64 {
    vertex_candidates(pool, active)
        .iter()
        .map(|c| pool_objective(pool, c))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A state-independent transition model from run weights (per action slot,
/// runs 0,1,2,3,4,6) and a wicket probability in thousandths.
pub fn flat_model<S: GameState>(
    run_weights: [u64; 6],
    wicket_per_mille: u64,
) -> TransitionModel<S> {
    let scoring: u64 = run_weights.iter().sum();
    let global = if scoring == 0 {
        // Pure-wicket model.
        Counts {
            visits: 1000,
            wickets: 1000,
            runs: [0; 6],
        }
    } else {
        let total = scoring * 1000 / (1000 - wicket_per_mille).max(1);
        Counts {
            visits: total.max(scoring),
            wickets: total.saturating_sub(scoring),
            runs: run_weights,
        }
    };
    TransitionModel::from_counts(HashMap::new(), HashMap::new(), global, 1)
        .expect("non-empty counts")
}
