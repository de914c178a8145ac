//! Linear reward recovery from winning-team play.
//!
//! The reward is linear in ten bounded coefficients: five state weights
//! (over, wickets, score band, ball, extra flag) and five action weights for
//! runs 1, 2, 3, 4 and 6. A non-dot action contributes its weight times
//! `1000 * runs`; a dot ball adds no action term.
//!
//! First-innings trajectories of match winners are the expert set, those of
//! losers the non-expert set. Each non-expert trajectory yields one
//! condition, the difference between the mean expert feature totals and its
//! own. The pool of conditions grows one at a time, re-solving
//!
//! `maximize sum_i p(c . d_i)` over `c in [-1, 1]^10`,
//!
//! where `p(v) = v` for `v >= 0` and `2v` otherwise, so violations of the
//! expert-beats-non-expert ordering are punished twice as hard. The penalty
//! linearizes with one auxiliary variable per condition (`t_i <= c . d_i`,
//! `t_i <= 2 c . d_i`, maximize the sum of `t_i`), keeping the whole problem
//! a linear program. Ties between optima resolve to the lexicographically
//! smallest coefficient vector.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::data::Corpus;
use crate::par;
use crate::simplex::{LpError, Simplex};
use crate::state::{build_first_innings, Action, FirstInningsState, GameState, Trajectory};

#[derive(Debug, thiserror::Error)]
pub enum IrlError {
    #[error("no expert trajectories: cannot form conditions")]
    NoExpert,
    #[error("empty condition pool")]
    EmptyPool,
    #[error("lp solve failed: {0}")]
    Lp(#[from] LpError),
}

/// Number of reward coefficients: five state weights plus five action weights.
pub const COEFF_COUNT: usize = 10;

/// Action slots in coefficient order (runs 1, 2, 3, 4, 6).
pub const ACTION_RUNS: [u8; 5] = [1, 2, 3, 4, 6];

/// The ten bounded reward coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardCoefficients {
    /// State weights: over, wickets, score band, ball, extra flag.
    pub x: [f64; 5],
    /// Action weights for runs 1, 2, 3, 4, 6.
    pub y: [f64; 5],
}

impl RewardCoefficients {
    pub fn ones() -> Self {
        RewardCoefficients {
            x: [1.0; 5],
            y: [1.0; 5],
        }
    }

    pub fn zeros() -> Self {
        RewardCoefficients {
            x: [0.0; 5],
            y: [0.0; 5],
        }
    }

    fn from_flat(flat: &[f64]) -> Self {
        let mut out = RewardCoefficients::zeros();
        out.x.copy_from_slice(&flat[..5]);
        out.y.copy_from_slice(&flat[5..10]);
        out
    }

    /// Action weight slot for a non-dot action.
    fn y_slot(action: Action) -> Option<usize> {
        match action {
            Action::Dot => None,
            Action::One => Some(0),
            Action::Two => Some(1),
            Action::Three => Some(2),
            Action::Four => Some(3),
            Action::Six => Some(4),
        }
    }

    pub fn y_for(&self, action: Action) -> f64 {
        Self::y_slot(action).map_or(0.0, |slot| self.y[slot])
    }
}

/// Reward of taking `action` in `state` under the given coefficients.
pub fn reward(state: &FirstInningsState, action: Action, coeffs: &RewardCoefficients) -> f64 {
    let base = coeffs.x[0] * state.over as f64
        + coeffs.x[1] * state.wickets as f64
        + coeffs.x[2] * state.score_band as f64
        + coeffs.x[3] * state.ball as f64
        + coeffs.x[4] * if state.extra_flag() { 1.0 } else { 0.0 };
    match RewardCoefficients::y_slot(action) {
        None => base,
        Some(slot) => base + coeffs.y[slot] * 1000.0 * action.runs() as f64,
    }
}

/// Undiscounted per-feature sums over a trajectory, aligned with
/// [`RewardCoefficients`]: state slots accumulate raw components, action
/// slots accumulate `1000 * runs` per occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureTotals(pub [f64; COEFF_COUNT]);

impl FeatureTotals {
    pub fn add(&mut self, other: &FeatureTotals) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

pub fn feature_totals(trajectory: &Trajectory<FirstInningsState>) -> FeatureTotals {
    let mut totals = [0.0f64; COEFF_COUNT];
    for step in &trajectory.steps {
        let s = &step.state;
        totals[0] += s.over as f64;
        totals[1] += s.wickets as f64;
        totals[2] += s.score_band as f64;
        totals[3] += s.ball as f64;
        totals[4] += if s.extra_flag() { 1.0 } else { 0.0 };
        if let Some(slot) = RewardCoefficients::y_slot(step.action) {
            totals[5 + slot] += 1000.0 * step.action.runs() as f64;
        }
    }
    FeatureTotals(totals)
}

/// One condition of the growing pool: mean expert totals minus one
/// non-expert trajectory's totals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition(pub [f64; COEFF_COUNT]);

/// Split a corpus into expert and non-expert first-innings trajectories.
///
/// A match contributes its first innings to the expert set when the side
/// batting first won, to the non-expert set when it lost, and to neither on
/// a tie, a no-result, or an innings unusable for modeling.
pub struct ExpertPartition {
    pub expert: Vec<Trajectory<FirstInningsState>>,
    pub non_expert: Vec<Trajectory<FirstInningsState>>,
    pub excluded: usize,
}

pub fn partition_expert(corpus: &Corpus) -> ExpertPartition {
    enum Labeled {
        Expert(Trajectory<FirstInningsState>),
        NonExpert(Trajectory<FirstInningsState>),
        Excluded,
    }
    let labeled = par::map_slice(&corpus.matches, |record| {
        let winner = match record.winner_team() {
            Some(w) => w,
            None => return Labeled::Excluded,
        };
        match build_first_innings(record) {
            Ok(traj) if winner == record.team_first => Labeled::Expert(traj),
            Ok(traj) => Labeled::NonExpert(traj),
            Err(_) => Labeled::Excluded,
        }
    });
    let mut out = ExpertPartition {
        expert: Vec::new(),
        non_expert: Vec::new(),
        excluded: 0,
    };
    for l in labeled {
        match l {
            Labeled::Expert(t) => out.expert.push(t),
            Labeled::NonExpert(t) => out.non_expert.push(t),
            Labeled::Excluded => out.excluded += 1,
        }
    }
    out
}

/// Result of one LP solve over a condition pool.
#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub coefficients: RewardCoefficients,
    pub objective: f64,
}

/// Solve the pooled optimization exactly, with the lexicographic tie-break.
pub fn solve_lp(pool: &[Condition]) -> Result<LpOutcome, IrlError> {
    if pool.is_empty() {
        return Err(IrlError::EmptyPool);
    }
    let scale = pool_scale(pool);
    let mut lp = Simplex::new(&[(-1.0, 1.0); COEFF_COUNT])?;
    let mut objective = Vec::with_capacity(pool.len());
    for condition in pool {
        objective.push((push_condition(&mut lp, condition, scale)?, 1.0));
    }
    let z = lp.maximize(&objective)?;
    lex_refine(&mut lp, &objective)?;
    Ok(LpOutcome {
        coefficients: read_coefficients(&lp),
        objective: z * scale,
    })
}

/// A common positive rescale keeps tableau entries near unity without moving
/// the argmax; the objective scales back linearly.
fn pool_scale(pool: &[Condition]) -> f64 {
    let scale = pool
        .iter()
        .flat_map(|c| c.0.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        scale
    } else {
        1.0
    }
}

/// Add one condition's auxiliary variable and its two rows; returns the
/// auxiliary variable index.
fn push_condition(lp: &mut Simplex, condition: &Condition, scale: f64) -> Result<usize, LpError> {
    let d: Vec<f64> = condition.0.iter().map(|v| v / scale).collect();
    let l1: f64 = d.iter().map(|v| v.abs()).sum();
    // t = min(c.d, 2 c.d) at the optimum; these bounds cannot cut it off.
    let t = lp.add_variable(-2.0 * l1 - 1.0, l1 + 1.0)?;
    let mut row: Vec<(usize, f64)> = vec![(t, 1.0)];
    let mut row2: Vec<(usize, f64)> = vec![(t, 1.0)];
    for (j, &dj) in d.iter().enumerate() {
        if dj != 0.0 {
            row.push((j, -dj));
            row2.push((j, -2.0 * dj));
        }
    }
    lp.add_le(&row, 0.0)?;
    lp.add_le(&row2, 0.0)?;
    Ok(t)
}

/// Pin the objective at its optimum, then settle each coefficient to its
/// smallest optimal value in index order. The result is the
/// lexicographically smallest optimal vertex, independent of the pivot path
/// that reached the optimum.
fn lex_refine(lp: &mut Simplex, objective: &[(usize, f64)]) -> Result<(), LpError> {
    lp.add_eq_pinned(objective, lp.objective_value())?;
    for j in 0..COEFF_COUNT {
        lp.maximize(&[(j, -1.0)])?;
        lp.add_eq_pinned(&[(j, 1.0)], lp.value(j))?;
    }
    Ok(())
}

fn read_coefficients(lp: &Simplex) -> RewardCoefficients {
    let flat: Vec<f64> = (0..COEFF_COUNT)
        .map(|j| lp.value(j).clamp(-1.0, 1.0))
        .collect();
    RewardCoefficients::from_flat(&flat)
}

/// Full inverse procedure over a corpus partition.
#[derive(Debug, Clone, PartialEq)]
pub struct IrlResult {
    pub coefficients: RewardCoefficients,
    pub objective: f64,
    /// Optimal objective after each condition was added, in corpus order.
    pub iteration_objectives: Vec<f64>,
    pub warning: Option<String>,
}

/// Grow the condition pool one non-expert trajectory at a time, re-solving
/// the LP over the whole pool at each step.
pub fn run_irl(
    expert: &[Trajectory<FirstInningsState>],
    non_expert: &[Trajectory<FirstInningsState>],
) -> Result<IrlResult, IrlError> {
    if expert.is_empty() {
        return Err(IrlError::NoExpert);
    }
    if non_expert.is_empty() {
        return Ok(IrlResult {
            coefficients: RewardCoefficients::ones(),
            objective: 0.0,
            iteration_objectives: Vec::new(),
            warning: Some("no non-expert trajectories: keeping the all-ones initialization".into()),
        });
    }

    let expert_totals = par::map_slice(expert, feature_totals);
    let mut mean = FeatureTotals::default();
    for t in &expert_totals {
        mean.add(t);
    }
    for v in mean.0.iter_mut() {
        *v /= expert.len() as f64;
    }

    let non_expert_totals = par::map_slice(non_expert, feature_totals);
    let conditions: Vec<Condition> = non_expert_totals
        .iter()
        .map(|totals| {
            let mut d = [0.0f64; COEFF_COUNT];
            for (slot, value) in d.iter_mut().enumerate() {
                *value = mean.0[slot] - totals.0[slot];
            }
            Condition(d)
        })
        .collect();

    // The pool grows one condition at a time, re-optimizing the same tableau:
    // the previous optimum stays feasible (the new auxiliary variable starts
    // at its lower bound), so each re-solve is a warm start. Intermediate
    // solutions are only logged, so the tie-break refinement runs once, on
    // the final pool.
    let scale = pool_scale(&conditions);
    let mut lp = Simplex::new(&[(-1.0, 1.0); COEFF_COUNT])?;
    let mut objective = Vec::with_capacity(conditions.len());
    let mut iteration_objectives = Vec::with_capacity(conditions.len());
    for condition in &conditions {
        objective.push((push_condition(&mut lp, condition, scale)?, 1.0));
        let z = lp.maximize(&objective)?;
        iteration_objectives.push(z * scale);
    }
    lex_refine(&mut lp, &objective)?;
    Ok(IrlResult {
        coefficients: read_coefficients(&lp),
        objective: *iteration_objectives
            .last()
            .expect("at least one condition was solved"),
        iteration_objectives,
        warning: None,
    })
}

/// Serialized coefficients file: `x` in state order, `y` keyed by runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientsPayload {
    pub x: Vec<f64>,
    pub y: BTreeMap<String, f64>,
    pub objective: f64,
    pub iterations: Vec<f64>,
}

impl CoefficientsPayload {
    pub fn from_result(result: &IrlResult) -> CoefficientsPayload {
        let y = ACTION_RUNS
            .iter()
            .zip(&result.coefficients.y)
            .map(|(runs, value)| (runs.to_string(), *value))
            .collect();
        CoefficientsPayload {
            x: result.coefficients.x.to_vec(),
            y,
            objective: result.objective,
            iterations: result.iteration_objectives.clone(),
        }
    }

    pub fn coefficients(&self) -> Result<RewardCoefficients, String> {
        if self.x.len() != 5 {
            return Err(format!("expected 5 state weights, found {}", self.x.len()));
        }
        let mut out = RewardCoefficients::zeros();
        out.x.copy_from_slice(&self.x);
        for (slot, runs) in ACTION_RUNS.iter().enumerate() {
            out.y[slot] = *self
                .y
                .get(&runs.to_string())
                .ok_or_else(|| format!("missing action weight for {runs} runs"))?;
        }
        Ok(out)
    }
}
