//! CLI integration: the full default pipeline at desk scale, identity
//! evaluation, idempotence, and exit-code categories.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_affectcast"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn run_ok(args: &[&str], dir: &Path) {
    let status = bin().args(args).current_dir(dir).status().unwrap();
    assert!(status.success(), "command failed: {args:?}");
}

fn exit_code(args: &[&str], dir: &Path) -> i32 {
    bin().args(args).current_dir(dir).status().unwrap().code().unwrap()
}

/// The whole default pipeline on 50 users x 20 entries: synthesize,
/// annotate, train the autoencoder, fit the transition MaxEnt model over
/// its full 225 * 2^10 state space with default settings, predict, and
/// evaluate — comfortably inside five minutes.
#[test]
fn default_pipeline_at_desk_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let start = Instant::now();
    run_ok(
        &["synth", "--users", "50", "--entries-min", "20", "--entries-max", "20", "--seed", "7", "-o", "d.jsonl"],
        dir,
    );
    run_ok(&["annotate", "--data", "d.jsonl", "-o", "ann.jsonl"], dir);
    run_ok(&["train-ae", "--data", "ann.jsonl", "-o", "ae.json"], dir);
    run_ok(
        &["train-maxent", "--data", "d.jsonl", "--mode", "transition", "--ae", "ae.json", "-o", "maxent.json"],
        dir,
    );
    run_ok(&["predict", "--model", "maxent.json", "--data", "d.jsonl", "-o", "preds.jsonl"], dir);
    run_ok(
        &["evaluate", "--pred", "preds.jsonl", "--gold", "d.jsonl", "-o", "report.json"],
        dir,
    );
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 300,
        "pipeline took {elapsed:?}, expected under five minutes"
    );

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let r_v = report["report"]["valence"]["r"].as_f64().unwrap();
    let r_a = report["report"]["arousal"]["r"].as_f64().unwrap();
    assert!(r_v > 0.2, "valence r {r_v}");
    assert!(r_a > 0.2, "arousal r {r_a}");
}

/// MaxEnt without latent bits needs no autoencoder in either mode.
#[test]
fn latent_free_maxent_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run_ok(&["synth", "--users", "12", "--seed", "5", "-o", "d.jsonl"], dir);
    run_ok(
        &["train-maxent", "--data", "d.jsonl", "--mode", "transition", "--latent-bits", "0", "-o", "mt.json"],
        dir,
    );
    run_ok(&["predict", "--model", "mt.json", "--data", "d.jsonl", "-o", "pt.jsonl"], dir);
    run_ok(&["evaluate", "--pred", "pt.jsonl", "--gold", "d.jsonl"], dir);

    run_ok(
        &["train-maxent", "--data", "d.jsonl", "--mode", "assessment", "--latent-bits", "0", "-o", "ma.json"],
        dir,
    );
    run_ok(&["predict", "--model", "ma.json", "--data", "d.jsonl", "-o", "pa.jsonl"], dir);
    run_ok(
        &["evaluate", "--pred", "pa.jsonl", "--gold", "d.jsonl", "--task", "assessment"],
        dir,
    );
    // Without latents, every assessment prediction is the same marginal
    // expectation.
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(dir.join("pa.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let first = lines[0]["v_hat"].as_f64().unwrap();
    assert!(lines.iter().all(|l| l["v_hat"].as_f64().unwrap() == first));
}

#[test]
fn synth_is_idempotent_and_inputs_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run_ok(&["synth", "--users", "20", "--seed", "7", "-o", "a.jsonl"], dir);
    run_ok(&["synth", "--users", "20", "--seed", "7", "-o", "b.jsonl"], dir);
    let a = std::fs::read(dir.join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.join("b.jsonl")).unwrap();
    assert_eq!(a, b);

    // Annotation writes a new file; the input stays byte-identical.
    run_ok(&["annotate", "--data", "a.jsonl", "-o", "ann.jsonl"], dir);
    assert_eq!(std::fs::read(dir.join("a.jsonl")).unwrap(), a);
}

/// Predictions copied from gold score (clamped) perfectly.
#[test]
fn evaluate_identity_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run_ok(&["synth", "--users", "10", "--seed", "3", "-o", "d.jsonl"], dir);
    let gold = std::fs::read_to_string(dir.join("d.jsonl")).unwrap();
    let mut preds = String::new();
    for line in gold.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        preds.push_str(
            &serde_json::json!({
                "user_id": v["user_id"],
                "seq": v["seq"],
                "v_hat": v["valence"].as_f64().unwrap(),
                "a_hat": v["arousal"].as_f64().unwrap(),
            })
            .to_string(),
        );
        preds.push('\n');
    }
    std::fs::write(dir.join("p.jsonl"), preds).unwrap();
    run_ok(
        &["evaluate", "--pred", "p.jsonl", "--gold", "d.jsonl", "-o", "report.json"],
        dir,
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    for target in ["valence", "arousal"] {
        let t = &report["report"][target];
        // Perfect per-user correlations clamp at 1 - 1e-6 in z-space.
        assert!(t["r_composite"].as_f64().unwrap() > 0.9999);
        assert_eq!(t["mae_composite"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn exit_codes_by_category() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    // 2: config errors.
    assert_eq!(
        exit_code(&["train-forecaster", "--data", "x.jsonl", "--preset", "bogus", "-o", "m.json"], dir),
        2
    );
    run_ok(&["synth", "--users", "5", "--seed", "1", "-o", "d.jsonl"], dir);
    assert_eq!(
        exit_code(
            &["train-maxent", "--data", "d.jsonl", "--mode", "transition", "--latent-bits", "4", "-o", "m.json"],
            dir
        ),
        2,
        "latent bits without an autoencoder is a config error"
    );

    // 3: data errors.
    assert_eq!(
        exit_code(&["annotate", "--data", "missing.jsonl", "-o", "x.jsonl"], dir),
        3
    );
    std::fs::write(
        dir.join("bad.jsonl"),
        r#"{"user_id":"u","seq":0,"kind":"essay","text":"a","valence":7,"arousal":1}"#,
    )
    .unwrap();
    assert_eq!(exit_code(&["annotate", "--data", "bad.jsonl", "-o", "x.jsonl"], dir), 3);

    // 4: numeric errors (rank-deficient ridge at lambda 0).
    let mut collinear = String::new();
    for (i, v) in [(0u32, 1u8), (1, 2), (2, 3), (3, 2)] {
        collinear.push_str(&format!(
            "{}\n",
            serde_json::json!({
                "user_id": "u", "seq": i, "kind": "essay", "text": "x",
                "valence": v, "arousal": 1, "features": [2.0, 2.0]
            })
        ));
    }
    std::fs::write(dir.join("collinear.jsonl"), collinear).unwrap();
    assert_eq!(
        exit_code(
            &["train-baseline", "--data", "collinear.jsonl", "--kind", "features-prev", "--lambda", "0", "-o", "r.json"],
            dir
        ),
        4
    );

    // Unknown dataset keys only fail under --strict.
    std::fs::write(
        dir.join("extra.jsonl"),
        r#"{"user_id":"u","seq":0,"kind":"essay","text":"a","mood":"fine"}"#,
    )
    .unwrap();
    assert_eq!(exit_code(&["annotate", "--data", "extra.jsonl", "-o", "x.jsonl"], dir), 0);
    assert_eq!(
        exit_code(&["--strict", "annotate", "--data", "extra.jsonl", "-o", "x.jsonl"], dir),
        3
    );
}

#[test]
fn config_file_resolution_and_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("run.toml"), "[synth]\nusers = 7\nseed = 11\n").unwrap();
    run_ok(&["--config", "run.toml", "synth", "-o", "a.jsonl"], dir);
    let users = std::fs::read_to_string(dir.join("a.jsonl"))
        .unwrap()
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .map(|v| v["user_id"].as_str().unwrap().to_string())
        .collect::<std::collections::HashSet<_>>();
    assert_eq!(users.len(), 7);

    // Flags beat the file.
    run_ok(&["--config", "run.toml", "synth", "--users", "3", "-o", "b.jsonl"], dir);
    let users_b = std::fs::read_to_string(dir.join("b.jsonl"))
        .unwrap()
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .map(|v| v["user_id"].as_str().unwrap().to_string())
        .collect::<std::collections::HashSet<_>>();
    assert_eq!(users_b.len(), 3);

    // Unknown config keys are errors.
    std::fs::write(dir.join("bad.toml"), "[synth]\nuserz = 7\n").unwrap();
    assert_eq!(exit_code(&["--config", "bad.toml", "synth", "-o", "c.jsonl"], dir), 2);
}
