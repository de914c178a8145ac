//! Command implementations: merge flags with the config file, run the core
//! pipeline, and persist artifacts with provenance.

use anyhow::{bail, Context, Result};
use std::fs;
use std::path::{Path, PathBuf};

use odimdp_core::artifact::{self, ArtifactKind, ArtifactMeta};
use odimdp_core::cricsheet;
use odimdp_core::data::{self, Corpus, Provenance};
use odimdp_core::dls::DlsTable;
use odimdp_core::eval;
use odimdp_core::irl::{self, CoefficientsPayload};
use odimdp_core::net::{self, ModelPayload, NetworkConfig};
use odimdp_core::policy::{
    compute_q, estimate_transitions, nonoptimal_rate, optimal_policy, PolicyPayload,
    TransitionModel, TransitionModelPayload,
};
use odimdp_core::sim::{
    posterior_first, posterior_second, sample_trajectories, sample_trajectories_second,
    InningsStart, SimMode, SimulationConfig,
};
use odimdp_core::state::{
    mc_targets, score_band, FirstInningsState, GameState, McSample, SecondInningsState,
};

use crate::{merge, require};

fn check_innings(innings: u8) -> Result<u8> {
    if innings == 1 || innings == 2 {
        Ok(innings)
    } else {
        bail!("--innings must be 1 or 2, got {innings}")
    }
}

fn parse_hidden(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .with_context(|| format!("bad hidden width `{part}`"))
        })
        .collect()
}

fn load_corpus(path: &Path) -> Result<(Corpus, String)> {
    let corpus = Corpus::load_dir(path)
        .with_context(|| format!("loading corpus from {}", path.display()))?;
    let hash = Corpus::manifest_sha256(path)?;
    Ok((corpus, hash))
}

fn collect_samples<S: GameState>(corpus: &Corpus) -> Vec<McSample> {
    let mut samples = Vec::new();
    for record in &corpus.matches {
        if let Ok(trajectory) = S::build_trajectory(record) {
            if let Ok(mut s) = mc_targets(&trajectory, trajectory.final_score) {
                samples.append(&mut s);
            }
        }
    }
    samples
}

// --- ingest -------------------------------------------------------------------

pub fn ingest(cli: crate::IngestArgs, file: Option<crate::IngestArgs>) -> Result<()> {
    let file = file.unwrap_or_default();
    let input = require(merge(cli.input, file.input), "input")?;
    let out = require(merge(cli.out, file.out), "out")?;
    let from = merge(cli.from, file.from).unwrap_or_else(|| "cricsheet".to_string());
    let exclude_dls = merge(cli.exclude_dls_decided, file.exclude_dls_decided).unwrap_or(false);

    if out.exists() {
        bail!("output directory {} already exists", out.display());
    }

    let (matches, skipped, dls_excluded) = match from.as_str() {
        "cricsheet" => {
            let summary = cricsheet::ingest_dir(&input, exclude_dls)
                .with_context(|| format!("reading {}", input.display()))?;
            (summary.matches, summary.skipped, summary.dls_excluded)
        }
        "canonical" => {
            let mut files: Vec<PathBuf> = fs::read_dir(&input)
                .with_context(|| format!("reading {}", input.display()))?
                .filter_map(|entry| {
                    let path = entry.ok()?.path();
                    (path.extension().is_some_and(|e| e == "json")
                        && path.file_name().is_some_and(|n| n != "manifest.json"))
                    .then_some(path)
                })
                .collect();
            files.sort();
            let mut matches = Vec::new();
            let mut skipped = Vec::new();
            for path in files {
                let bytes = fs::read(&path)?;
                match data::parse_match(&bytes) {
                    Ok(record) => matches.push(record),
                    Err(e) => skipped.push((path.display().to_string(), e.to_string())),
                }
            }
            (matches, skipped, 0)
        }
        other => bail!("--from must be `cricsheet` or `canonical`, got `{other}`"),
    };

    for (path, error) in skipped.iter().take(5) {
        eprintln!("skipped {path}: {error}");
    }
    if skipped.len() > 5 {
        eprintln!("... and {} more skipped files", skipped.len() - 5);
    }
    if matches.is_empty() {
        bail!("no matches ingested from {}", input.display());
    }

    let corpus = Corpus::new(
        matches,
        Provenance {
            source: input.display().to_string(),
            ingested_at: chrono::Utc::now().to_rfc3339(),
        },
    )?;
    let violations = data::validate_corpus(&corpus);
    for violation in violations.iter().take(10) {
        eprintln!("invariant violation: {violation}");
    }

    // Build the directory aside and rename it into place.
    let staging = staging_dir(&out)?;
    corpus.save_dir(&staging)?;
    fs::rename(&staging, &out).with_context(|| format!("moving corpus into {}", out.display()))?;

    println!(
        "ingested {} matches into {} ({} skipped, {} DLS-decided excluded, {} violations)",
        corpus.len(),
        out.display(),
        skipped.len(),
        dls_excluded,
        violations.len()
    );
    Ok(())
}

fn staging_dir(target: &Path) -> Result<PathBuf> {
    let parent = target.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(parent)?;
    let name = target
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "corpus".to_string());
    Ok(parent.join(format!(".{name}.staging-{}", std::process::id())))
}

// --- train --------------------------------------------------------------------

pub fn train(cli: crate::TrainArgs, file: Option<crate::TrainArgs>) -> Result<()> {
    let file = file.unwrap_or_default();
    let corpus_path = require(merge(cli.corpus, file.corpus), "corpus")?;
    let innings = check_innings(require(merge(cli.innings, file.innings), "innings")?)?;
    let hidden = parse_hidden(&merge(cli.hidden, file.hidden).unwrap_or_else(|| "64,32".into()))?;
    let epochs = merge(cli.epochs, file.epochs).unwrap_or(30);
    let learning_rate = merge(cli.learning_rate, file.learning_rate).unwrap_or(0.05);
    let batch_size = merge(cli.batch_size, file.batch_size).unwrap_or(256);
    let seed = require(merge(cli.seed, file.seed), "seed")?;
    let out = require(merge(cli.out, file.out), "out")?;
    let report_path = merge(cli.report, file.report);

    let (corpus, manifest_hash) = load_corpus(&corpus_path)?;
    let input_width = if innings == 1 { 5 } else { 6 };
    let config = NetworkConfig::new(input_width, hidden, epochs, learning_rate, batch_size, seed)?;
    let samples = if innings == 1 {
        collect_samples::<FirstInningsState>(&corpus)
    } else {
        collect_samples::<SecondInningsState>(&corpus)
    };
    if samples.is_empty() {
        bail!("no usable innings-{innings} samples in the corpus");
    }

    let (network, report) = net::train(&config, &samples)?;
    let config_echo = serde_json::to_value(&config)?;
    let meta = ArtifactMeta {
        seed: Some(seed),
        config: Some(config_echo.clone()),
        corpus_manifest_sha256: Some(manifest_hash.clone()),
    };
    artifact::save(
        &out,
        ArtifactKind::Model,
        meta.clone(),
        &ModelPayload::from_network(&network, &config),
    )?;
    if let Some(path) = report_path {
        artifact::save(&path, ArtifactKind::TrainingReport, meta, &report)?;
    }
    println!(
        "trained on {} samples from {} matches; final mse {:.6}; model written to {}",
        samples.len(),
        corpus.len(),
        report.final_mse,
        out.display()
    );
    Ok(())
}

// --- evaluate -----------------------------------------------------------------

pub fn evaluate(cli: crate::EvaluateArgs, file: Option<crate::EvaluateArgs>) -> Result<()> {
    let file = file.unwrap_or_default();
    let corpus_path = require(merge(cli.corpus, file.corpus), "corpus")?;
    let innings = check_innings(require(merge(cli.innings, file.innings), "innings")?)?;
    let dls_path = require(merge(cli.dls, file.dls), "dls")?;
    let hidden = parse_hidden(&merge(cli.hidden, file.hidden).unwrap_or_else(|| "64,32".into()))?;
    let epochs = merge(cli.epochs, file.epochs).unwrap_or(30);
    let learning_rate = merge(cli.learning_rate, file.learning_rate).unwrap_or(0.05);
    let batch_size = merge(cli.batch_size, file.batch_size).unwrap_or(256);
    let seed = require(merge(cli.seed, file.seed), "seed")?;
    let out = require(merge(cli.out, file.out), "out")?;
    let csv_path = merge(cli.csv, file.csv);

    let (corpus, manifest_hash) = load_corpus(&corpus_path)?;
    let dls_bytes =
        fs::read(&dls_path).with_context(|| format!("reading DLS table {}", dls_path.display()))?;
    let (dls, warnings) = DlsTable::parse_csv(&dls_bytes[..])?;
    for warning in &warnings {
        eprintln!("dls table warning: {warning}");
    }

    let input_width = if innings == 1 { 5 } else { 6 };
    let config = NetworkConfig::new(input_width, hidden, epochs, learning_rate, batch_size, seed)?;
    let report = if innings == 1 {
        eval::cross_validate::<FirstInningsState>(&corpus, &config, &dls, seed)?
    } else {
        eval::cross_validate::<SecondInningsState>(&corpus, &config, &dls, seed)?
    };

    let meta = ArtifactMeta {
        seed: Some(seed),
        config: Some(serde_json::to_value(&config)?),
        corpus_manifest_sha256: Some(manifest_hash),
    };
    artifact::save(&out, ArtifactKind::Report, meta, &report)?;
    if let Some(path) = csv_path {
        artifact::write_atomic(&path, report.to_csv().as_bytes())?;
    }

    println!(
        "innings {}: model mean error {:+.3}% (std {:.3}), DLS mean error {:+.3}% (std {:.3}) over {} eligible matches",
        report.innings_no,
        report.model_mean,
        report.model_std,
        report.dls_mean,
        report.dls_std,
        report.eligible_matches
    );
    for entry in &report.folds {
        println!(
            "  fold {}: model {:+.3}% (n={}), dls {:+.3}% (n={}), degenerate {}",
            entry.fold,
            entry.model.mean_error_pct,
            entry.model.n,
            entry.dls.mean_error_pct,
            entry.dls.n,
            entry.degenerate
        );
    }
    Ok(())
}

// --- predict ------------------------------------------------------------------

pub fn predict(cli: crate::PredictArgs, file: Option<crate::PredictArgs>) -> Result<()> {
    let file = file.unwrap_or_default();
    let model_path = require(merge(cli.model, file.model), "model")?;
    let innings = check_innings(require(merge(cli.innings, file.innings), "innings")?)?;
    let over = require(merge(cli.over, file.over), "over")?;
    let wickets = require(merge(cli.wickets, file.wickets), "wickets")?;
    let score = require(merge(cli.score, file.score), "score")?;
    let ball = merge(cli.ball, file.ball).unwrap_or(0);
    let extra = merge(cli.extra, file.extra).unwrap_or(false);
    let target = merge(cli.target, file.target);

    let (payload, _meta): (ModelPayload, _) = artifact::load(&model_path, ArtifactKind::Model)?;
    let (network, config) = payload.into_network()?;
    let expected_width = if innings == 1 { 5 } else { 6 };
    if config.input_width != expected_width {
        bail!(
            "model expects input width {} but innings {innings} needs {expected_width}",
            config.input_width
        );
    }

    let features = if innings == 1 {
        FirstInningsState::new(over, wickets, score_band(score), ball, extra as u8)?.features()
    } else {
        let target = require(target, "target")?;
        SecondInningsState::new(
            over,
            wickets,
            score_band(score),
            score_band(target),
            ball,
            extra as u8,
        )?
        .features()
    };
    let r = network.forward(&features)?;
    let predicted = eval::predicted_final_score(score, r)?;
    println!("r = {r:.6}");
    println!("predicted_final_score = {predicted}");
    if score == 0 {
        eprintln!("note: score 0 at the interruption makes the projection degenerate");
    }
    Ok(())
}

// --- irl ----------------------------------------------------------------------

pub fn irl(cli: crate::IrlArgs, file: Option<crate::IrlArgs>) -> Result<()> {
    let file = file.unwrap_or_default();
    let corpus_path = require(merge(cli.corpus, file.corpus), "corpus")?;
    let out = require(merge(cli.out, file.out), "out")?;

    let (corpus, manifest_hash) = load_corpus(&corpus_path)?;
    let partition = irl::partition_expert(&corpus);
    println!(
        "expert trajectories: {}, non-expert: {}, excluded: {}",
        partition.expert.len(),
        partition.non_expert.len(),
        partition.excluded
    );
    let result = irl::run_irl(&partition.expert, &partition.non_expert)?;
    if let Some(warning) = &result.warning {
        eprintln!("warning: {warning}");
    }

    let payload = CoefficientsPayload::from_result(&result);
    let meta = ArtifactMeta {
        seed: None,
        config: Some(serde_json::json!({
            "expert": partition.expert.len(),
            "non_expert": partition.non_expert.len(),
        })),
        corpus_manifest_sha256: Some(manifest_hash),
    };
    artifact::save(&out, ArtifactKind::Coefficients, meta, &payload)?;

    let names = ["over", "wickets", "score_band", "ball", "extra_flag"];
    for (name, value) in names.iter().zip(&result.coefficients.x) {
        println!("x[{name}] = {value:+.4}");
    }
    for (runs, value) in irl::ACTION_RUNS.iter().zip(&result.coefficients.y) {
        println!("y[{runs}] = {value:+.4}");
    }
    println!(
        "objective = {:.4} after {} conditions",
        result.objective,
        result.iteration_objectives.len()
    );
    Ok(())
}

// --- policy -------------------------------------------------------------------

pub fn policy(cli: crate::PolicyArgs, file: Option<crate::PolicyArgs>) -> Result<()> {
    let file = file.unwrap_or_default();
    let corpus_path = require(merge(cli.corpus, file.corpus), "corpus")?;
    let coeffs_path = require(merge(cli.coeffs, file.coeffs), "coeffs")?;
    let out_transitions = require(
        merge(cli.out_transitions, file.out_transitions),
        "out-transitions",
    )?;
    let out_policy = require(merge(cli.out_policy, file.out_policy), "out-policy")?;
    let out_transitions2 = merge(cli.out_transitions2, file.out_transitions2);

    let (corpus, manifest_hash) = load_corpus(&corpus_path)?;
    let (coeffs_payload, _): (CoefficientsPayload, _) =
        artifact::load(&coeffs_path, ArtifactKind::Coefficients)?;
    let coefficients = coeffs_payload
        .coefficients()
        .map_err(|e| anyhow::anyhow!("bad coefficients file: {e}"))?;

    let mut model = estimate_transitions::<FirstInningsState>(&corpus)?;
    let q = compute_q(&coefficients, &model)?;
    let policy_table = optimal_policy(&q);
    let rates = nonoptimal_rate(&corpus, &policy_table)?;
    model.set_nonoptimal(rates);

    let meta = ArtifactMeta {
        seed: None,
        config: Some(serde_json::json!({"coeffs": coeffs_path.display().to_string()})),
        corpus_manifest_sha256: Some(manifest_hash),
    };
    artifact::save(
        &out_transitions,
        ArtifactKind::Transitions,
        meta.clone(),
        &model.to_payload(),
    )?;
    artifact::save(
        &out_policy,
        ArtifactKind::Policy,
        meta.clone(),
        &PolicyPayload::from_tables(&policy_table, &q),
    )?;
    println!(
        "first innings: {} matches, {} visited states; transitions -> {}, policy -> {}",
        model.matches_used(),
        model.visited_states(),
        out_transitions.display(),
        out_policy.display()
    );

    if let Some(path) = out_transitions2 {
        let model2 = estimate_transitions::<SecondInningsState>(&corpus)?;
        artifact::save(&path, ArtifactKind::Transitions, meta, &model2.to_payload())?;
        println!(
            "second innings: {} matches, {} visited states; transitions -> {}",
            model2.matches_used(),
            model2.visited_states(),
            path.display()
        );
    }
    Ok(())
}

// --- simulate -----------------------------------------------------------------

pub fn simulate(cli: crate::SimulateArgs, file: Option<crate::SimulateArgs>) -> Result<()> {
    let file = file.unwrap_or_default();
    let transitions_path = require(merge(cli.transitions, file.transitions), "transitions")?;
    let innings = check_innings(require(merge(cli.innings, file.innings), "innings")?)?;
    let mode = match merge(cli.mode, file.mode)
        .unwrap_or_else(|| "behavioral".into())
        .as_str()
    {
        "behavioral" => SimMode::Behavioral,
        "optimal" => SimMode::Optimal,
        other => bail!("--mode must be `behavioral` or `optimal`, got `{other}`"),
    };
    let policy_path = merge(cli.policy, file.policy);
    let over = merge(cli.over, file.over).unwrap_or(0);
    let wickets = merge(cli.wickets, file.wickets).unwrap_or(0);
    let score = merge(cli.score, file.score).unwrap_or(0);
    let ball = merge(cli.ball, file.ball).unwrap_or(0);
    let extra = merge(cli.extra, file.extra).unwrap_or(false);
    let target = merge(cli.target, file.target);
    let n_sims = merge(cli.n_sims, file.n_sims).unwrap_or(100);
    let seed = require(merge(cli.seed, file.seed), "seed")?;
    let out = require(merge(cli.out, file.out), "out")?;
    let csv_path = merge(cli.csv, file.csv);
    let dump_path = merge(cli.dump_trajectories, file.dump_trajectories);

    if mode == SimMode::Optimal && policy_path.is_none() {
        bail!("--mode optimal requires --policy");
    }
    let config = SimulationConfig { n_sims, seed, mode };
    let (payload, _): (TransitionModelPayload, _) =
        artifact::load(&transitions_path, ArtifactKind::Transitions)?;

    let distribution = if innings == 1 {
        let model = TransitionModel::<FirstInningsState>::from_payload(payload)?;
        let policy_table = match &policy_path {
            Some(path) => {
                let (policy_payload, _): (PolicyPayload, _) =
                    artifact::load(path, ArtifactKind::Policy)?;
                Some(policy_payload.into_tables()?.0)
            }
            None => None,
        };
        let state = FirstInningsState::new(over, wickets, score_band(score), ball, extra as u8)?;
        let start = InningsStart::new(state, score, None)?;
        if let Some(path) = &dump_path {
            let trajectories = sample_trajectories(&model, policy_table.as_ref(), &start, &config)?;
            let mut dump = String::new();
            for trajectory in &trajectories {
                dump.push_str(&trajectory.to_jsonl());
            }
            artifact::write_atomic(path, dump.as_bytes())?;
        }
        posterior_first(&model, policy_table.as_ref(), &start, &config)?
    } else {
        let target = require(target, "target")?;
        let model = TransitionModel::<SecondInningsState>::from_payload(payload)?;
        let state = SecondInningsState::new(
            over,
            wickets,
            score_band(score),
            score_band(target),
            ball,
            extra as u8,
        )?;
        let start = InningsStart::new(state, score, Some(target))?;
        if let Some(path) = &dump_path {
            let trajectories = sample_trajectories_second(&model, &start, &config)?;
            let mut dump = String::new();
            for trajectory in &trajectories {
                dump.push_str(&trajectory.to_jsonl());
            }
            artifact::write_atomic(path, dump.as_bytes())?;
        }
        posterior_second(&model, &start, &config)?
    };

    let meta = ArtifactMeta {
        seed: Some(seed),
        config: Some(serde_json::json!({
            "innings": innings, "mode": mode, "n_sims": n_sims,
            "over": over, "wickets": wickets, "score": score,
            "ball": ball, "extra": extra, "target": target,
        })),
        corpus_manifest_sha256: None,
    };
    artifact::save(&out, ArtifactKind::Distribution, meta, &distribution)?;
    if let Some(path) = csv_path {
        artifact::write_atomic(&path, distribution.to_csv().as_bytes())?;
    }
    println!(
        "{} simulations: mean {:.2}, std {:.2}; distribution -> {}",
        distribution.n,
        distribution.mean,
        distribution.std,
        out.display()
    );
    Ok(())
}
