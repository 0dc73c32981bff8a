//! Stage orchestration over the offline fixture configuration.

use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use vmwe_core::extract::Category;
use vmwe_core::mt::Lang;
use vmwe_core::pipeline::{
    read_stream, run_all, run_stage, Manifest, PipelineConfig, PipelineError, Record, Stage, StageOptions, UnitRole,
};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");

fn fixture_toml() -> String {
    fs::read_to_string(format!("{FIXTURES}/pipeline.toml")).unwrap()
}

fn config_with(extra: &str) -> PipelineConfig {
    PipelineConfig::from_toml(&format!("{}\n{extra}", fixture_toml()), FIXTURES).unwrap()
}

fn config() -> PipelineConfig {
    PipelineConfig::load(Path::new(&format!("{FIXTURES}/pipeline.toml"))).unwrap()
}

fn opts(stage_in: Option<PathBuf>, stage_out: PathBuf) -> StageOptions {
    StageOptions {
        stage_in,
        stage_out,
        ..StageOptions::default()
    }
}

/// Run stages up to and including `last`, returning each stream path.
fn run_until(cfg: &PipelineConfig, dir: &Path, last: Stage) -> Vec<PathBuf> {
    let mut prev = None;
    let mut outs = Vec::new();
    for stage in Stage::ALL {
        let out = if stage == Stage::Report {
            dir.join("report")
        } else {
            dir.join(format!("{stage}.jsonl"))
        };
        let summary = run_stage(stage, cfg, &opts(prev.clone(), out.clone())).unwrap();
        assert_eq!(summary.exit_code(), 0, "{stage}: {summary:?}");
        outs.push(out.clone());
        prev = Some(out);
        if stage == last {
            break;
        }
    }
    outs
}

fn closed_port() -> u16 {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    l.local_addr().unwrap().port()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn fixture_config_validates() {
    let cfg = config();
    cfg.validate().unwrap();
    assert_eq!(cfg.seed, 42);
    assert_eq!(cfg.target_langs, [Lang::De, Lang::Es]);
}

#[test]
fn stage_by_stage_matches_run_all() {
    let cfg = config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_until(&cfg, a.path(), Stage::Report);
    let summaries = run_all(&cfg, &opts(None, b.path().to_path_buf())).unwrap();
    assert_eq!(summaries.len(), 6);
    assert!(summaries.iter().all(|s| s.exit_code() == 0));
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.iter().map(|f| &f.0).collect::<Vec<_>>(), tb.iter().map(|f| &f.0).collect::<Vec<_>>());
    for ((name, x), (_, y)) in ta.iter().zip(&tb) {
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn extract_stream_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_until(&config(), dir.path(), Stage::Extract).remove(0);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        r#"{"kind":"header","schema_version":1,"stage":"extract"}"#
    );
    let s = read_stream(&out).unwrap();
    assert_eq!(s.stage, Stage::Extract);
    // only sentences with a candidate or a control role are carried forward
    assert_eq!(s.sentences().count(), 16 + 5);
    assert_eq!(s.candidates().count(), 17);
    assert_eq!(s.controls().collect::<Vec<_>>(), ["s15", "s19", "s21", "s22", "s23"]);
    // each candidate follows its own sentence
    let mut current = String::new();
    for r in &s.records {
        match r {
            Record::Sentence(x) => current = x.id.clone(),
            Record::Candidate(c) => assert_eq!(c.sentence_id, current),
            Record::Control { sentence_id } => assert_eq!(*sentence_id, current),
            other => panic!("unexpected record {other:?}"),
        }
    }
}

#[test]
fn manifest_records_inputs_seed_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_until(&config(), dir.path(), Stage::Extract).remove(0);
    let m = Manifest::read(&Manifest::path_for(&out, Stage::Extract)).unwrap();
    assert_eq!(m.stage, Stage::Extract);
    assert_eq!(m.seed, 42);
    assert_eq!(m.failures, 0);
    let corpus = m.inputs.iter().find(|i| i.name == "corpus.conllu").unwrap();
    let bytes = fs::read(format!("{FIXTURES}/corpus.conllu")).unwrap();
    assert_eq!(corpus.sha256, hex::encode(Sha256::digest(&bytes)));
    assert!(m.inputs.iter().any(|i| i.name == "idioms.txt"));
    assert!(m.inputs.iter().all(|i| !i.name.contains('/')));
    assert_eq!(m.counts["candidates_vpc"], 6);
    assert_eq!(m.counts["candidates_lvc"], 7);
    assert_eq!(m.counts["candidates_vid"], 4);
    assert_eq!(m.counts["controls"], 5);
    assert_eq!(m.config["seed"], 42);
    let raw = fs::read_to_string(Manifest::path_for(&out, Stage::Extract)).unwrap();
    assert!(!raw.contains(dir.path().to_str().unwrap()), "manifest leaks run directory");
}

#[test]
fn seed_override_is_recorded_and_changes_sample() {
    let dir = tempfile::tempdir().unwrap();
    let mut o = opts(None, dir.path().join("x.jsonl"));
    o.seed = Some(3);
    let picks = |o: &StageOptions| {
        run_stage(Stage::Extract, &config(), o).unwrap();
        read_stream(&o.stage_out).unwrap().controls().map(String::from).collect::<Vec<_>>()
    };
    let three = picks(&o);
    let m = Manifest::read(&Manifest::path_for(&o.stage_out, Stage::Extract)).unwrap();
    assert_eq!(m.seed, 3);
    assert_eq!(three.len(), 5);
    let mut other = Vec::new();
    for seed in 0..10 {
        o.seed = Some(seed);
        other.push(picks(&o));
    }
    assert!(other.iter().any(|p| *p != three));
}

#[test]
fn category_filter_limits_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let mut o = opts(None, dir.path().join("e.jsonl"));
    o.categories = Some(vec![Category::Vpc]);
    let summary = run_stage(Stage::Extract, &config(), &o).unwrap();
    let s = read_stream(&o.stage_out).unwrap();
    assert!(s.candidates().all(|c| c.category == Category::Vpc));
    assert_eq!(s.candidates().count(), 6);
    assert_eq!(summary.counts.get("candidates_lvc").copied().unwrap_or(0), 0);
}

#[test]
fn target_lang_override_limits_translations() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    let outs = run_until(&cfg, dir.path(), Stage::Paraphrase);
    let mut o = opts(Some(outs[2].clone()), dir.path().join("t.jsonl"));
    o.target_langs = Some(vec![Lang::De]);
    run_stage(Stage::Translate, &cfg, &o).unwrap();
    let s = read_stream(&o.stage_out).unwrap();
    assert!(s.translations().count() > 0);
    assert!(s.translations().all(|t| t.record.target_lang == Lang::De));
}

#[test]
fn translation_units_cover_vmwe_control_and_paraphrase() {
    let dir = tempfile::tempdir().unwrap();
    let outs = run_until(&config(), dir.path(), Stage::Translate);
    let s = read_stream(&outs[3]).unwrap();
    let count = |role| s.translations().filter(|t| t.role == role).count();
    // 3 systems x 2 languages
    assert_eq!(count(UnitRole::Control), 5 * 6);
    assert_eq!(count(UnitRole::Paraphrase), 14 * 6);
    assert_eq!(s.translations().count(), 192);
    assert!(s.translations().all(|t| t.record.validity.is_some()));
}

#[test]
fn wrong_predecessor_is_rejected() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    let outs = run_until(&cfg, dir.path(), Stage::Classify);
    let err = run_stage(Stage::Translate, &cfg, &opts(Some(outs[1].clone()), dir.path().join("t.jsonl"))).unwrap_err();
    assert!(matches!(err, PipelineError::Contract(_)), "{err}");
    assert!(err.to_string().contains("classify"), "{err}");
}

#[test]
fn missing_stage_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_stage(Stage::Classify, &config(), &opts(None, dir.path().join("c.jsonl"))).unwrap_err();
    assert!(matches!(err, PipelineError::Contract(_)));
    let gone = dir.path().join("nope.jsonl");
    let err = run_stage(Stage::Classify, &config(), &opts(Some(gone), dir.path().join("c.jsonl"))).unwrap_err();
    assert!(matches!(err, PipelineError::Io { .. }));
}

#[test]
fn backend_override_must_exist_with_matching_role() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    let outs = run_until(&cfg, dir.path(), Stage::Extract);
    let mut o = opts(Some(outs[0].clone()), dir.path().join("c.jsonl"));
    o.backend = Some("nobody".into());
    assert!(run_stage(Stage::Classify, &cfg, &o).is_err());
    o.backend = Some("alpha".into());
    let err = run_stage(Stage::Classify, &cfg, &o).unwrap_err();
    assert!(matches!(err, PipelineError::Contract(_)));
}

#[test]
fn run_all_rejects_backend_override() {
    let dir = tempfile::tempdir().unwrap();
    let mut o = opts(None, dir.path().to_path_buf());
    o.backend = Some("alpha".into());
    assert!(run_all(&config(), &o).is_err());
}

#[test]
fn undefined_stage_backend_fails_validation() {
    let text = fixture_toml().replace(r#"translate = ["alpha", "beta", "gamma"]"#, r#"translate = ["alpha", "delta"]"#);
    let err = PipelineConfig::from_toml(&text, FIXTURES).unwrap_err();
    assert!(err.to_string().contains("delta"), "{err}");
}

#[test]
fn unreachable_mt_backend_exits_with_transport_code() {
    let port = closed_port();
    let cfg = config_with(&format!(
        "[[backends]]\nname = \"remote\"\nkind = \"mt\"\nmodel = \"remote-mt\"\nurl = \"http://127.0.0.1:{port}/translate\"\n"
    ));
    let dir = tempfile::tempdir().unwrap();
    let outs = run_until(&cfg, dir.path(), Stage::Paraphrase);
    let mut o = opts(Some(outs[2].clone()), dir.path().join("t.jsonl"));
    o.backend = Some("remote".into());
    let summary = run_stage(Stage::Translate, &cfg, &o).unwrap();
    assert_eq!(summary.exit_code(), 2);
    assert!(summary.transport_failures > 0);
    assert_eq!(summary.failures, summary.transport_failures);
    let s = read_stream(&o.stage_out).unwrap();
    assert_eq!(s.translations().count(), 0);
    let failures: Vec<_> = s
        .records
        .iter()
        .filter_map(|r| match r {
            Record::Failure(f) => Some(f),
            _ => None,
        })
        .collect();
    assert_eq!(failures.len(), summary.failures);
    assert!(failures.iter().all(|f| f.transport && f.stage == Stage::Translate));
    let m = Manifest::read(&Manifest::path_for(&o.stage_out, Stage::Translate)).unwrap();
    assert_eq!(m.transport_failures, summary.transport_failures);
}

#[test]
fn run_all_stops_after_transport_failure() {
    let port = closed_port();
    let text = fixture_toml().replace(r#"translate = ["alpha", "beta", "gamma"]"#, r#"translate = ["remote"]"#)
        + &format!("\n[[backends]]\nname = \"remote\"\nkind = \"mt\"\nmodel = \"r\"\nurl = \"http://127.0.0.1:{port}/\"\n");
    let cfg = PipelineConfig::from_toml(&text, FIXTURES).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summaries = run_all(&cfg, &opts(None, dir.path().to_path_buf())).unwrap();
    assert_eq!(summaries.last().unwrap().stage, Some(Stage::Translate));
    assert_eq!(summaries.last().unwrap().exit_code(), 2);
    assert!(!dir.path().join("score.jsonl").exists());
}

#[test]
fn missing_credential_names_the_variable() {
    let cfg = config_with(
        "[[backends]]\nname = \"remote\"\nkind = \"mt\"\nmodel = \"r\"\nurl = \"http://127.0.0.1:9/\"\ncredential_env = \"VMWE_PIPELINE_TEST_NO_SUCH_KEY\"\n",
    );
    let dir = tempfile::tempdir().unwrap();
    let outs = run_until(&cfg, dir.path(), Stage::Paraphrase);
    let mut o = opts(Some(outs[2].clone()), dir.path().join("t.jsonl"));
    o.backend = Some("remote".into());
    let err = run_stage(Stage::Translate, &cfg, &o).unwrap_err();
    assert!(err.to_string().contains("VMWE_PIPELINE_TEST_NO_SUCH_KEY"), "{err}");
}

#[test]
fn report_directory_contents() {
    let dir = tempfile::tempdir().unwrap();
    let outs = run_until(&config(), dir.path(), Stage::Report);
    let report = &outs[5];
    for name in ["report.json", "manifest.json", "error_rates.csv", "diagnostics.csv", "classifier.csv", "z_gap_de.csv"] {
        assert!(report.join(name).exists(), "{name} missing");
    }
    let bundle: serde_json::Value = serde_json::from_slice(&fs::read(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(bundle["schema_version"], 1);
    let rates = fs::read_to_string(report.join("error_rates.csv")).unwrap();
    let gamma_es = rates.lines().find(|l| l.starts_with("gamma,es")).unwrap();
    assert!(gamma_es.contains("77.78"), "{gamma_es}");
    let ranking = fs::read_to_string(report.join("ranking_metricx-mock.csv")).unwrap();
    let gamma = ranking.lines().find(|l| l.contains("gamma")).unwrap();
    assert!(!gamma.contains("es"), "excluded pair used in ranking: {gamma}");
}
