//! The interruption experiment.
//!
//! An innings is interrupted at a state drawn uniformly among its ball
//! positions past the 20th over. The resources-left ratio `r`, from either
//! the value network or the DLS table, projects the final score as
//! `ceil(score / (1 - r))`, compared to the actual total as a signed percent
//! error. Ten-fold cross-validation trains on nine tenths of the eligible
//! matches and interrupts each held-out match once; the DLS column never
//! depends on the network configuration, only on fold membership.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Corpus;
use crate::dls::{DlsError, DlsTable};
use crate::net::{self, NetError, NetworkConfig};
use crate::par;
use crate::seed;
use crate::state::{mc_targets, GameState, McSample, StateError, Trajectory};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("resources-left ratio {0} is negative")]
    NegativeResources(f64),
    #[error("resources-left ratio {0} leaves no scoring resources model (r >= 1)")]
    Saturated(f64),
    #[error("actual final score must be positive")]
    ZeroActual,
    #[error("cross-validation needs at least 10 eligible matches, found {found}")]
    TooFewMatches { found: usize },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Dls(#[from] DlsError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Project the final score from the score so far and the resources left.
///
/// The ceiling is taken with a 1e-9 slack so that an `r` which is exactly
/// `(actual - score) / actual` reproduces `actual` despite float rounding.
pub fn predicted_final_score(score_at_interruption: u32, r: f64) -> Result<u32, EvalError> {
    if r < 0.0 {
        return Err(EvalError::NegativeResources(r));
    }
    if r >= 1.0 {
        return Err(EvalError::Saturated(r));
    }
    let quotient = score_at_interruption as f64 / (1.0 - r);
    Ok((quotient - 1e-9).ceil().max(0.0) as u32)
}

/// Signed percent error of a prediction against the actual total.
pub fn percent_error(predicted: f64, actual: u32) -> Result<f64, EvalError> {
    if actual == 0 {
        return Err(EvalError::ZeroActual);
    }
    Ok((predicted - actual as f64) / actual as f64 * 100.0)
}

/// A random mid-innings stop, strictly after the 20th over.
#[derive(Debug, Clone, PartialEq)]
pub struct Interruption<S: GameState> {
    pub match_id: String,
    pub innings_no: u8,
    pub state: S,
    pub score_at_interruption: u32,
    pub actual_final_score: u32,
}

/// Draw an interruption uniformly over trajectory positions with at least 20
/// completed overs. `None` signals an ineligible innings (too short or
/// scoreless), which callers skip.
pub fn draw_interruption<S: GameState>(
    trajectory: &Trajectory<S>,
    match_id: &str,
    rng: &mut ChaCha8Rng,
) -> Option<Interruption<S>> {
    if trajectory.final_score == 0 {
        return None;
    }
    let eligible: Vec<usize> = trajectory
        .steps
        .iter()
        .enumerate()
        .filter(|(_, step)| step.state.over() >= 20)
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return None;
    }
    let position = eligible[rng.gen_range(0..eligible.len())];
    let score = trajectory.prior_scores()[position];
    Some(Interruption {
        match_id: match_id.to_string(),
        innings_no: S::INNINGS_NO,
        state: trajectory.steps[position].state,
        score_at_interruption: score,
        actual_final_score: trajectory.final_score,
    })
}

/// Per-method statistics within one fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodFold {
    pub mean_error_pct: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldEntry {
    pub fold: usize,
    pub model: MethodFold,
    pub dls: MethodFold,
    /// Interruptions at score 0: recorded, excluded from the means.
    pub degenerate: usize,
}

/// Cross-validation report: ten folds and the cross-fold summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub innings_no: u8,
    pub folds: Vec<FoldEntry>,
    pub model_mean: f64,
    pub model_std: f64,
    pub dls_mean: f64,
    pub dls_std: f64,
    pub eligible_matches: usize,
    pub seed: u64,
}

impl FoldReport {
    /// CSV export with one row per (fold, method).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,method,mean_error_pct,n\n");
        for entry in &self.folds {
            out.push_str(&format!(
                "{},model,{},{}\n",
                entry.fold, entry.model.mean_error_pct, entry.model.n
            ));
            out.push_str(&format!(
                "{},dls,{},{}\n",
                entry.fold, entry.dls.mean_error_pct, entry.dls.n
            ));
        }
        out
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    (values
        .iter()
        .map(|v| {
            let d = v - mean;
            d * d
        })
        .sum::<f64>()
        / (values.len() - 1) as f64)
        .sqrt()
}

/// Ten-fold cross-validation of the value network against the DLS baseline.
///
/// Eligibility requires an innings that converts to a trajectory, scores at
/// least one run, and reaches the 21st over. Folds partition the eligible
/// matches after a seeded shuffle. The training seed is shared across folds
/// and the interruption stream depends only on the position within a fold,
/// so a corpus of identical matches yields identical folds.
pub fn cross_validate<S: GameState>(
    corpus: &Corpus,
    network_config: &NetworkConfig,
    dls_table: &DlsTable,
    master_seed: u64,
) -> Result<FoldReport, EvalError> {
    if network_config.input_width != S::INPUT_WIDTH {
        return Err(EvalError::Net(NetError::Config(format!(
            "innings {} needs input width {}, config says {}",
            S::INNINGS_NO,
            S::INPUT_WIDTH,
            network_config.input_width
        ))));
    }

    let innings = S::INNINGS_NO as u64;
    let trajectories: Vec<Trajectory<S>> =
        par::map_slice(&corpus.matches, |record| S::build_trajectory(record).ok())
            .into_iter()
            .flatten()
            .filter(|t| t.final_score > 0 && t.steps.iter().any(|s| s.state.over() >= 20))
            .collect();

    let eligible = trajectories.len();
    if eligible < 10 {
        return Err(EvalError::TooFewMatches { found: eligible });
    }

    // Seeded shuffle, then contiguous split into 10 folds.
    let mut order: Vec<usize> = (0..eligible).collect();
    let mut shuffle_rng = seed::rng(master_seed, &[seed::FOLD_SHUFFLE, innings]);
    for i in (1..order.len()).rev() {
        let j = shuffle_rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let base = eligible / 10;
    let remainder = eligible % 10;
    let mut folds: Vec<Vec<usize>> = Vec::with_capacity(10);
    let mut cursor = 0usize;
    for fold in 0..10 {
        let size = base + usize::from(fold < remainder);
        folds.push(order[cursor..cursor + size].to_vec());
        cursor += size;
    }

    let train_seed = seed::derive(master_seed, &[seed::TRAIN, innings]);
    let samples: Vec<Vec<McSample>> = trajectories
        .iter()
        .map(|t| mc_targets(t, t.final_score))
        .collect::<Result<_, _>>()?;

    let fold_results: Vec<Result<FoldEntry, EvalError>> = par::map_range(10, |fold| {
        let mut training = Vec::new();
        for (other, members) in folds.iter().enumerate() {
            if other != fold {
                for &m in members {
                    training.extend(samples[m].iter().cloned());
                }
            }
        }
        let mut config = network_config.clone();
        config.seed = train_seed;
        let (network, _) = net::train(&config, &training)?;

        let mut model_errors = Vec::new();
        let mut dls_errors = Vec::new();
        let mut degenerate = 0usize;
        for (pos_in_fold, &member) in folds[fold].iter().enumerate() {
            let trajectory = &trajectories[member];
            let mut rng = seed::rng(master_seed, &[seed::INTERRUPT, innings, pos_in_fold as u64]);
            let interruption = draw_interruption(trajectory, "cv", &mut rng)
                .expect("eligibility guarantees an interruptible position");
            if interruption.score_at_interruption == 0 {
                degenerate += 1;
                continue;
            }
            let features = interruption.state.features();
            let model_r = network.forward(&features)?;
            let model_pred = predicted_final_score(interruption.score_at_interruption, model_r)?;
            model_errors.push(percent_error(
                model_pred as f64,
                interruption.actual_final_score,
            )?);

            let overs_remaining = 50 - interruption.state.over();
            let dls_r = dls_table.resources_left(overs_remaining, interruption.state.wickets())?;
            let dls_pred = predicted_final_score(interruption.score_at_interruption, dls_r)?;
            dls_errors.push(percent_error(
                dls_pred as f64,
                interruption.actual_final_score,
            )?);
        }
        Ok(FoldEntry {
            fold,
            model: MethodFold {
                mean_error_pct: if model_errors.is_empty() {
                    0.0
                } else {
                    mean(&model_errors)
                },
                n: model_errors.len(),
            },
            dls: MethodFold {
                mean_error_pct: if dls_errors.is_empty() {
                    0.0
                } else {
                    mean(&dls_errors)
                },
                n: dls_errors.len(),
            },
            degenerate,
        })
    });

    let mut entries = Vec::with_capacity(10);
    for result in fold_results {
        entries.push(result?);
    }
    let model_means: Vec<f64> = entries.iter().map(|e| e.model.mean_error_pct).collect();
    let dls_means: Vec<f64> = entries.iter().map(|e| e.dls.mean_error_pct).collect();
    let model_mean = mean(&model_means);
    let dls_mean = mean(&dls_means);
    Ok(FoldReport {
        innings_no: S::INNINGS_NO,
        folds: entries,
        model_mean,
        model_std: sample_std(&model_means, model_mean),
        dls_mean,
        dls_std: sample_std(&dls_means, dls_mean),
        eligible_matches: eligible,
        seed: master_seed,
    })
}
