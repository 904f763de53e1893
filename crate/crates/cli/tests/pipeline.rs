mod common;

use std::collections::BTreeSet;
use std::fs;

use common::*;
use ibe_cli::artifacts::{read_json, read_jsonl, FeatureRecord, Manifest};
use ibe_cli::evaluate::Evaluation;
use ibe_cli::{Outcome, Pipeline, PipelineConfig, RunOptions, Stage};
use ibe_core::Feature;

fn pipeline(s: &Setup, options: RunOptions) -> Pipeline {
    Pipeline::new(PipelineConfig::load(&s.config).unwrap(), options).unwrap()
}

fn run_all(p: &Pipeline) -> Vec<Outcome> {
    p.run_all(&Stage::ALL)
        .unwrap()
        .into_iter()
        .map(|(_, o)| o)
        .collect()
}

#[test]
fn runs_are_byte_identical_across_thread_counts() {
    let a = setup(1, JUDGE);
    let b = setup(8, JUDGE);
    let (pa, pb) = (
        pipeline(&a, RunOptions::default()),
        pipeline(&b, RunOptions::default()),
    );
    run_all(&pa);
    run_all(&pb);
    assert_eq!(pa.fingerprint(), pb.fingerprint());
    let (ta, tb) = (tree(&pa.run.root), tree(&pb.run.root));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{k} differs");
    }
    assert!(ta.contains_key("report/ablation.csv"));
}

#[test]
fn second_run_is_cached_and_force_recomputes() {
    let s = setup(2, "");
    let p = pipeline(&s, RunOptions::default());
    assert!(run_all(&p).iter().all(|o| *o == Outcome::Ran));
    assert!(run_all(&p).iter().all(|o| *o == Outcome::Cached));
    let forced = pipeline(
        &s,
        RunOptions {
            force: true,
            ..Default::default()
        },
    );
    let before = tree(&p.run.root);
    assert_eq!(forced.run_stage(Stage::Fit).unwrap(), Outcome::Ran);
    assert_eq!(tree(&p.run.root), before);
}

#[test]
fn deleted_report_regenerates_identically() {
    let s = setup(2, "");
    let p = pipeline(&s, RunOptions::default());
    run_all(&p);
    let before = tree(&p.run.report_dir());
    fs::remove_dir_all(p.run.report_dir()).unwrap();
    assert_eq!(p.run_stage(Stage::Report).unwrap(), Outcome::Ran);
    assert_eq!(tree(&p.run.report_dir()), before);
    // Upstream stages are untouched.
    assert_eq!(p.run_stage(Stage::Evaluate).unwrap(), Outcome::Cached);
}

#[test]
fn edited_upstream_artifact_makes_stage_stale() {
    let s = setup(2, "");
    let p = pipeline(&s, RunOptions::default());
    run_all(&p);
    let path = p.run.features();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(0, 1);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert_eq!(p.run_stage(Stage::Fit).unwrap(), Outcome::Ran);
    let manifest: Manifest = read_json(&p.run.manifest("fit")).unwrap();
    assert_eq!(
        manifest.inputs["features.jsonl"],
        ibe_cli::artifacts::sha256_file(&path).unwrap()
    );
}

#[test]
fn fixture_outcomes() {
    let s = setup(2, JUDGE);
    let p = pipeline(&s, RunOptions::default());
    run_all(&p);
    let rows: Vec<FeatureRecord> = read_jsonl(&p.run.features()).unwrap();
    assert_eq!(rows.len(), 40);
    assert!(rows
        .iter()
        .all(|r| r.self_evident == (r.features.depth == 1 && r.features.drift == 0)));
    assert!(rows.iter().any(|r| r.self_evident));
    assert!(rows.iter().any(|r| r.features.consistency == 0));

    let e: Evaluation = read_json(&p.run.evaluation()).unwrap();
    assert_eq!(e.datasets, vec!["ecare".to_string()]);
    assert_eq!(e.accuracy["all"].n, 10);
    assert_eq!(e.ablation.len(), 11);
    assert_eq!(e.ablation[5].label, "Random");
    assert_eq!(e.ablation[5].accuracy["all"], 0.5);
    // The last composed row uses every feature, as the selection model does.
    assert_eq!(e.ablation[10].accuracy["all"], e.accuracy["all"].accuracy);

    // One scripted verdict cannot be parsed; it counts as a miss.
    let judge = e.judge.as_ref().unwrap();
    assert_eq!(judge["all"].n, 10);
    assert!(e.examples.iter().filter(|x| x.judge.is_none()).count() == 1);
    let manifest: Manifest = read_json(&p.run.manifest("evaluate")).unwrap();
    assert!(
        manifest.notes.iter().any(|n| n.contains("judge miss")),
        "{:?}",
        manifest.notes
    );
    let csv = fs::read_to_string(p.run.report_dir().join("ablation.csv")).unwrap();
    assert!(
        csv.starts_with("block,label,features,ecare,all\nbaseline,Judge,,"),
        "{csv}"
    );
}

#[test]
fn example_filter_limits_per_example_stages() {
    let s = setup(2, "");
    let options = RunOptions {
        examples: Some(BTreeSet::from([
            "ecare-dev-1".to_string(),
            "copa-2".to_string(),
        ])),
        ..Default::default()
    };
    let p = pipeline(&s, options);
    for stage in [
        Stage::Generate,
        Stage::Formalize,
        Stage::Prove,
        Stage::Features,
    ] {
        p.run_stage(stage).unwrap();
    }
    let rows: Vec<FeatureRecord> = read_jsonl(&p.run.features()).unwrap();
    let ids: BTreeSet<&str> = rows.iter().map(|r| r.example_id.as_str()).collect();
    assert_eq!(ids, BTreeSet::from(["copa-2", "ecare-dev-1"]));
    // The unfiltered run sees different params and recomputes.
    let full = pipeline(&s, RunOptions::default());
    assert_eq!(full.run_stage(Stage::Generate).unwrap(), Outcome::Ran);
}

#[test]
fn feature_override_reaches_fit_and_evaluation() {
    let s = setup(2, "");
    let options = RunOptions {
        features: Some(vec![Feature::Drift, Feature::Depth]),
        ..Default::default()
    };
    let p = pipeline(&s, options);
    run_all(&p);
    let e: Evaluation = read_json(&p.run.evaluation()).unwrap();
    assert_eq!(e.features, vec![Feature::Drift, Feature::Depth]);
    assert_eq!(e.ablation.len(), 2 + 1 + 2);
    assert_eq!(e.ablation.last().unwrap().label, "+ Depth");

    // Evaluating with a different selection than the fit is refused.
    let other = pipeline(
        &s,
        RunOptions {
            features: Some(vec![Feature::Drift]),
            ..Default::default()
        },
    );
    let err = other.run_stage(Stage::Evaluate).unwrap_err();
    assert_eq!(err.exit_code(), 1, "{err}");
}

#[test]
fn per_dataset_scope_needs_matching_training_source() {
    let s = setup(2, "[model]\nfit_scope = \"per_dataset\"\n");
    let p = pipeline(&s, RunOptions::default());
    for stage in &Stage::ALL[..5] {
        p.run_stage(*stage).unwrap();
    }
    let model: serde_json::Value = read_json(&p.run.model()).unwrap();
    assert!(model["models"]["copa"].is_object());
    let err = p.run_stage(Stage::Evaluate).unwrap_err().to_string();
    assert!(err.contains("no model fit for source `ecare`"), "{err}");
}

#[test]
fn capability_error_falls_back_and_is_recorded() {
    let url = sidecar_without_certainty();
    let extra =
        format!("[scorers]\nbackend = \"sidecar\"\ntransport = \"http\"\nurl = \"{url}\"\n");
    let s = setup(2, &extra);
    let p = pipeline(&s, RunOptions::default());
    for stage in &Stage::ALL[..4] {
        p.run_stage(*stage).unwrap();
    }
    let manifest: Manifest = read_json(&p.run.manifest("features")).unwrap();
    assert_eq!(
        manifest.substitutions.len(),
        1,
        "{:?}",
        manifest.substitutions
    );
    assert!(manifest.substitutions[0].contains("certainty"));

    // Certainty came from the local scorer; coherence from the sidecar.
    let local = setup(2, "");
    let q = pipeline(&local, RunOptions::default());
    for stage in &Stage::ALL[..4] {
        q.run_stage(*stage).unwrap();
    }
    let remote: Vec<FeatureRecord> = read_jsonl(&p.run.features()).unwrap();
    let fallback: Vec<FeatureRecord> = read_jsonl(&q.run.features()).unwrap();
    for (r, f) in remote.iter().zip(&fallback) {
        assert_eq!(r.features.uncertainty, f.features.uncertainty);
        assert!((r.features.coherence - 0.5).abs() < 1e-12);
    }
}

#[test]
fn empty_transcripts_are_a_replay_miss() {
    let s = setup(1, "");
    let empty = s.dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let text = fs::read_to_string(&s.config).unwrap();
    let transcripts = fixtures().join("transcripts.jsonl").display().to_string();
    fs::write(
        &s.config,
        text.replace(&transcripts, &empty.display().to_string()),
    )
    .unwrap();
    let out = ibe_eval(&["generate", "--config", s.config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("replay miss"), "{}", stderr(&out));
}
