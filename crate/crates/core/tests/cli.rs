use std::path::Path;
use std::process::{Command, Output};

use exem::dataio::{self, DatasetBundle};
use exem::exemplar::normalize_semantics;

fn exem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exem")).args(args).output().unwrap()
}

fn exem_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exem")).args(args).env(key, value).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, extra: &[&str]) -> String {
    let path = dir.join("ds");
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["synth", "--out", &p, "--seed", "2"];
    args.extend_from_slice(extra);
    let o = exem(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    p
}

#[test]
fn help_exits_zero_with_usage() {
    let o = exem(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for sub in ["synth", "pca", "exemplars", "train", "predict", "classify", "eval", "cv", "pipeline"] {
        assert!(text.contains(sub), "missing {sub} in help");
    }
    let o = exem(&["pipeline", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("--lambda"));
}

#[test]
fn unknown_flag_or_subcommand_is_a_usage_error() {
    let o = exem(&["train-everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = exem(&["pipeline", "--data", "x", "--lambada", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn missing_input_exits_one_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    let o = exem(&["pipeline", "--data", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(missing.to_str().unwrap()), "{}", stderr(&o));

    let data = synth(dir.path(), &[]);
    let pca = dir.path().join("absent.bin");
    let o = exem(&["exemplars", "--data", &data, "--pca", pca.to_str().unwrap(), "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.bin"));
}

#[test]
fn pipeline_on_synthetic_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--format", "csv"]);
    let o = exem(&["pipeline", "--data", &data, "--d", "16", "--k", "1,3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["report"]["per_class_accuracy"].as_f64().unwrap() >= 0.9);
    assert_eq!(v["d"], 16);
    assert_eq!(v["mode"], "1nn");
    assert!(v["report"]["flat_hit"]["3"].as_f64().unwrap() >= v["report"]["flat_hit"]["1"].as_f64().unwrap());
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let args = ["pipeline", "--data", &data, "--d", "12"];
    let one = exem_env(&args, "EXEM_THREADS", "1");
    let auto = exem_env(&args, "EXEM_THREADS", "0");
    assert!(one.status.success());
    assert_eq!(one.stdout, auto.stdout);
    let bad = exem_env(&args, "EXEM_THREADS", "many");
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "d = 10\nlambda = 8.0\nnu = 0.25\nmode = \"1nn-scaled\"\nk = [1, 2]\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = exem(&["pipeline", "--data", &data, "--config", cfg, "--nu", "0.75"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["d"], 10);
    assert_eq!(v["lambda"], 8.0);
    assert_eq!(v["nu"], 0.75);
    assert_eq!(v["mode"], "1nn-scaled");
    assert!(v["report"]["flat_hit"].get("5").is_none());
}

#[test]
fn staged_commands_match_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (pca, pred, preds) = (p("pca.bin"), p("pred.bin"), p("preds.tsv"));
    for args in [
        vec!["pca", "--data", &data, "--d", "16", "--out", &pca],
        vec!["train", "--data", &data, "--pca", &pca, "--out", &pred],
        vec!["classify", "--data", &data, "--pca", &pca, "--predictor", &pred, "--mode", "1nn-scaled", "--k", "1,2", "--out", &preds],
    ] {
        let o = exem(&args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    }
    let staged = exem(&["eval", "--data", &data, "--preds", &preds, "--k", "1,2"]);
    assert!(staged.status.success(), "{}", stderr(&staged));
    let whole = exem(&["pipeline", "--data", &data, "--d", "16", "--mode", "1nn-scaled", "--k", "1,2"]);
    let staged: serde_json::Value = serde_json::from_slice(&staged.stdout).unwrap();
    let whole: serde_json::Value = serde_json::from_slice(&whole.stdout).unwrap();
    assert_eq!(staged, whole["report"]);
}

#[test]
fn predicted_exemplar_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (pca, pred, ex, sim) = (p("pca.bin"), p("pred.bin"), p("ex.csv"), p("sim.csv"));
    for args in [
        vec!["pca", "--data", &data, "--d", "8", "--out", &pca],
        vec!["train", "--data", &data, "--pca", &pca, "--out", &pred],
        vec!["predict", "--data", &data, "--predictor", &pred, "--classes", "all", "--out", &ex, "--similarity-out", &sim, "--scale", "2"],
    ] {
        let o = exem(&args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    }
    let bundle = DatasetBundle::load(Path::new(&data)).unwrap();
    let predictor = dataio::load_predictor(Path::new(&pred)).unwrap();
    let written = dataio::load_class_table(Path::new(&ex), &bundle.index).unwrap();
    assert_eq!(written.len(), 25);
    assert_eq!(written.dim(), predictor.output_dim());
    let a = normalize_semantics(&bundle.semantics.select(&written.class_ids).unwrap().values).unwrap();
    let direct = predictor.predict_matrix(&a).unwrap();
    for (x, y) in direct.as_slice().iter().zip(written.values.as_slice()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
    let sims = dataio::load_class_table(Path::new(&sim), &bundle.index).unwrap();
    assert_eq!(sims.dim(), bundle.seen.len());
    for row in sims.values.row_iter() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn hierarchy_metrics_and_hop_restriction() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--classes", "8", "--seen", "5", "--dim", "12", "--samples", "10"]);
    let bundle = DatasetBundle::load(Path::new(&data)).unwrap();
    // every class shares one parent except the last, which hangs far away
    let names = bundle.index.names().to_vec();
    let mut tsv = String::new();
    for (i, n) in names.iter().enumerate() {
        let parent = if i == names.len() - 1 { "deep" } else { "group" };
        tsv.push_str(&format!("{n}\t{parent}\n"));
    }
    tsv.push_str("deep\tmid\nmid\tfar\nfar\troot\ngroup\troot\n");
    std::fs::write(Path::new(&data).join("hierarchy.tsv"), tsv).unwrap();

    let o = exem(&["pipeline", "--data", &data, "--k", "1,2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["hier_precision"]["1"], v["report"]["flat_hit"]["1"]);
    assert_eq!(v["unseen_classes"], 3);

    let o = exem(&["pipeline", "--data", &data, "--k", "1", "--max-hops", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let restricted = v["unseen_classes"].as_u64().unwrap();
    let last_unseen = bundle.unseen.contains(&(names.len() as u32 - 1));
    assert_eq!(restricted, if last_unseen { 2 } else { 3 });
}

#[test]
fn cv_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--classes", "10", "--seen", "8", "--samples", "10", "--dim", "12"]);
    let table = dir.path().join("cv.csv");
    let o = exem(&[
        "cv", "--data", &data, "--folds", "4", "--lambdas", "8,32", "--nus", "0.5", "--gammas", "0.5,1", "--d", "6",
        "--table-out", table.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["grid_size"], 4);
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 4);
    assert!(text.starts_with("grid_index,fold,lambda,nu,gamma,d,objective"));
}
