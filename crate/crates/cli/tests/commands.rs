use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::array;
use tempfile::TempDir;

use ngram_graph::ingest::write_json_graphs;
use ngram_graph::rng::seeded;
use ngram_graph::synth::{planted_schema, planted_walk_corpus, predictable_corpus, random_graph};
use ngram_graph::vertex::{read_embedding, save_embedding};
use ngram_graph::{AttributeSchema, MolecularGraph, Provenance, VertexEmbeddingMatrix};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn ngg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ngg"))
        .args(args)
        .env_remove("NGG_SEED")
        .output()
        .expect("ngg runs")
}

fn ok(args: &[&str]) -> Output {
    let out = ngg(args);
    assert!(
        out.status.success(),
        "ngg {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn sha(path: &Path) -> Vec<u8> {
    use sha2::{Digest, Sha256};
    Sha256::digest(fs::read(path).unwrap()).to_vec()
}

fn write_graphs(path: &Path, graphs: &[MolecularGraph], schema: &AttributeSchema) {
    write_json_graphs(fs::File::create(path).unwrap(), graphs, schema).unwrap();
}

fn write_schema(path: &Path, schema: &AttributeSchema) {
    fs::write(path, serde_json::to_string(schema).unwrap()).unwrap();
}

fn small_corpus(dir: &TempDir) -> PathBuf {
    let out = dir.path().join("small.jsonl");
    ok(&["featurize", "-i", p(&data("small.sdf")), "-o", p(&out), "--label-field", "active"]);
    out
}

#[test]
fn featurize_water_gives_one_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("water.jsonl");
    let res = ok(&["featurize", "-i", p(&data("water.sdf")), "-o", p(&out)]);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("parsed 1, failed 0"));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("water.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["run"]["seed"], 0);
    assert!(manifest["input_hashes"].as_object().unwrap().len() == 1);
}

#[test]
fn featurize_empty_or_missing_input_is_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.sdf");
    fs::write(&empty, "").unwrap();
    let out = dir.path().join("o.jsonl");
    assert_eq!(ngg(&["featurize", "-i", p(&empty), "-o", p(&out)]).status.code(), Some(2));
    let missing = dir.path().join("absent.sdf");
    assert_eq!(ngg(&["featurize", "-i", p(&missing), "-o", p(&out)]).status.code(), Some(2));
}

#[test]
fn featurize_mixed_records_keeps_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mixed.jsonl");
    let res = ok(&["featurize", "-i", p(&data("mixed.sdf")), "-o", p(&out)]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("parsed 2, failed 1"));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 2);
}

#[test]
fn smiles_input_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let smi = dir.path().join("a.smi");
    fs::write(&smi, "CCO\n").unwrap();
    let out = ngg(&["featurize", "-i", p(&smi), "-o", p(&dir.path().join("o.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SMILES"));
}

#[test]
fn train_vertex_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let graphs = small_corpus(&dir);
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    let args = |o: &Path| vec!["train-vertex".to_string(), "-g".into(), p(&graphs).into(), "-o".into(), p(o).into(), "--r".into(), "6".into(), "--epochs".into(), "4".into(), "--hidden".into(), "5".into(), "--seed".into(), "11".into()];
    ok(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    ok(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(sha(&a), sha(&b));
    let other = dir.path().join("c.bin");
    let mut c = args(&other);
    c[12] = "12".into();
    ok(&c.iter().map(String::as_str).collect::<Vec<_>>());
    assert_ne!(sha(&a), sha(&other));
}

#[test]
fn seed_comes_from_env_when_no_flag() {
    let dir = tempfile::tempdir().unwrap();
    let graphs = small_corpus(&dir);
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    ok(&["train-vertex", "-g", p(&graphs), "-o", p(&a), "--r", "4", "--epochs", "1", "--seed", "7"]);
    let out = Command::new(env!("CARGO_BIN_EXE_ngg"))
        .args(["train-vertex", "-g", p(&graphs), "-o", p(&b), "--r", "4", "--epochs", "1"])
        .env("NGG_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(sha(&a), sha(&b));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("b.bin.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["run"]["seed"], 7);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let graphs = small_corpus(&dir);
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 3, "r": 9, "epochs": 1, "hidden": [4]}"#).unwrap();
    let out = dir.path().join("w.bin");
    ok(&["train-vertex", "--config", p(&cfg), "-g", p(&graphs), "-o", p(&out), "--r", "5"]);
    let (w, _) = read_embedding(&out).unwrap();
    assert_eq!(w.dim(), 5);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("w.bin.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["run"]["seed"], 3);
    assert_eq!(manifest["run"]["settings"]["epochs"], 1);
}

#[test]
fn zero_epochs_writes_random_init() {
    let dir = tempfile::tempdir().unwrap();
    let graphs = small_corpus(&dir);
    let out = dir.path().join("w.bin");
    ok(&["train-vertex", "-g", p(&graphs), "-o", p(&out), "--r", "4", "--epochs", "0"]);
    let (w, _) = read_embedding(&out).unwrap();
    assert_eq!(w.dim(), 4);
    assert!(w.weights().iter().all(|x| x.is_finite()));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("w.bin.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["training"]["epochs"].as_array().unwrap().len(), 0);
}

fn hand_example(dir: &TempDir) -> (PathBuf, PathBuf, PathBuf) {
    let schema = AttributeSchema::uniform("hand", &[3]).unwrap();
    let g = MolecularGraph::new(&schema, vec![vec![0], vec![1], vec![2]], &[(0, 1), (1, 2)]).unwrap().with_id("path3");
    let w = VertexEmbeddingMatrix::new(array![[1.0, 2.0, 3.0]], &schema, Provenance::External { description: "hand".into() }).unwrap();
    let (sp, gp, wp) = (dir.path().join("schema.json"), dir.path().join("g.jsonl"), dir.path().join("w.bin"));
    write_schema(&sp, &schema);
    write_graphs(&gp, &[g], &schema);
    save_embedding(&wp, &w).unwrap();
    (sp, gp, wp)
}

#[test]
fn embed_hand_example() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, graphs, w) = hand_example(&dir);
    let out = dir.path().join("feat");
    ok(&["embed", "-g", p(&graphs), "-e", p(&w), "--schema", p(&schema), "--T", "3", "-o", p(&out)]);
    let csv = fs::read_to_string(out.join("features.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let values: Vec<f64> = row.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert_eq!(values, vec![6.0, 16.0, 48.0]);

    let one = dir.path().join("one");
    ok(&["embed", "-g", p(&graphs), "-e", p(&w), "--schema", p(&schema), "--t", "1", "-o", p(&one)]);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(one.join("features.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["width"], 1);
}

#[test]
fn embed_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let graphs = small_corpus(&dir);
    let w = dir.path().join("w.bin");
    ok(&["train-vertex", "-g", p(&graphs), "-o", p(&w), "--r", "8", "--epochs", "2"]);
    let a = dir.path().join("a");
    let run = || ok(&["embed", "-g", p(&graphs), "-e", p(&w), "-o", p(&a), "--normalize", "unit-l2"]);
    run();
    let first: Vec<Vec<u8>> = ["features.csv", "features.bin"].iter().map(|f| fs::read(a.join(f)).unwrap()).collect();
    run();
    let second: Vec<Vec<u8>> = ["features.csv", "features.bin"].iter().map(|f| fs::read(a.join(f)).unwrap()).collect();
    assert_eq!(first, second);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("features.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["width"], 48);
    assert_eq!(manifest["config"]["subcommand"], "embed");
    assert_eq!(manifest["input_hashes"].as_object().unwrap().len(), 2);
}

#[test]
fn oracle_check_random_corpus_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let schema = AttributeSchema::full();
    let mut rng = seeded(4);
    let graphs: Vec<_> = (1..=10).map(|m| random_graph(&schema, m, 0.4, &mut rng)).collect();
    let path = dir.path().join("g.jsonl");
    write_graphs(&path, &graphs, &schema);
    let out = ok(&["oracle-check", "-g", p(&path), "--T", "4"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("exact: max residual 0e0"), "{text}");
    ok(&["oracle-check", "-g", p(&path), "--T", "3", "--variant", "path"]);
}

#[test]
fn oracle_check_rejects_asymmetric_adjacency() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.jsonl");
    let doc = serde_json::json!({
        "schema_id": AttributeSchema::full().id(),
        "num_vertices": 2,
        "attributes": [[0, 0, 0, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0, 0, 0]],
        "adjacency": [[0, 1], [0, 0]],
    });
    fs::write(&path, doc.to_string()).unwrap();
    let out = ngg(&["oracle-check", "-g", p(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("asymmetric"));
}

#[test]
fn oracle_check_refuses_large_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let schema = AttributeSchema::full();
    let g = random_graph(&schema, 20, 0.2, &mut seeded(1));
    let path = dir.path().join("g.jsonl");
    write_graphs(&path, &[g], &schema);
    let out = ngg(&["oracle-check", "-g", p(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn recover_zero_sparsity_always_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rec.csv");
    ok(&["recover", "-o", p(&out), "--r", "10,20", "--k", "8", "--s", "0", "--trials", "5"]);
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,k,n,s,trials,successes"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ends_with(",5,5")));
}

#[test]
fn bundled_recovery_config_parses() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/recovery.json");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rec.csv");
    ok(&["recover", "--config", p(&cfg), "-o", p(&out), "--trials", "3", "--r", "200"]);
    let rows: Vec<String> = fs::read_to_string(&out).unwrap().lines().skip(1).map(String::from).collect();
    assert_eq!(rows, vec!["200,40,2,5,3,3".to_string()]);
}

#[test]
fn fit_eval_round_trip_reproduces_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let graphs = small_corpus(&dir);
    let w = dir.path().join("w.bin");
    ok(&["train-vertex", "-g", p(&graphs), "-o", p(&w), "--r", "4", "--epochs", "2"]);
    let feats = dir.path().join("feat");
    ok(&["embed", "-g", p(&graphs), "-e", p(&w), "-o", p(&feats), "--T", "3", "--normalize", "unit-l2"]);
    let model = dir.path().join("model.json");
    let preds = dir.path().join("train.txt");
    let bin = feats.join("features.bin");
    ok(&["fit", "-f", p(&bin), "-o", p(&model), "--predictions", p(&preds), "--lambda", "0.01"]);
    let expected: Vec<f64> = fs::read_to_string(&preds).unwrap().lines().map(|l| l.parse().unwrap()).collect();

    for features in [bin, feats.join("features.csv")] {
        let report = dir.path().join("report.json");
        ok(&["eval", "-m", p(&model), "-f", p(&features), "-o", p(&report)]);
        let rep: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
        let got: Vec<f64> = rep["predictions"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(got, expected);
        assert_eq!(rep["metrics"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn fit_needs_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, graphs, w) = hand_example(&dir);
    let feats = dir.path().join("feat");
    ok(&["embed", "-g", p(&graphs), "-e", p(&w), "--schema", p(&schema), "-o", p(&feats), "--T", "2"]);
    let out = ngg(&["fit", "-f", p(&feats.join("features.bin")), "-o", p(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

fn planted(dir: &TempDir, n: usize) -> (PathBuf, PathBuf) {
    let schema = planted_schema();
    let (sp, gp) = (dir.path().join("schema.json"), dir.path().join("planted.jsonl"));
    write_schema(&sp, &schema);
    write_graphs(&gp, &planted_walk_corpus(n, 2), &schema);
    (sp, gp)
}

#[test]
fn sweep_grid_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, graphs) = planted(&dir, 60);
    let out = dir.path().join("sweep.csv");
    ok(&["sweep", "-g", p(&graphs), "--schema", p(&schema), "--r", "50,100", "--T", "2,4,6", "--folds", "3", "-o", p(&out)]);
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,T,metric,fold_1,fold_2,fold_3,mean,std"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("50,2,ROC-AUC,"));
    assert!(rows[5].starts_with("100,6,ROC-AUC,"));
}

#[test]
fn sweep_longer_walks_help_on_planted_task() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, graphs) = planted(&dir, 400);
    let out = dir.path().join("sweep.csv");
    ok(&[
        "sweep", "-g", p(&graphs), "--schema", p(&schema), "--r", "100", "--T", "1,4", "--variant", "path", "--lambda",
        "1e-4", "-o", p(&out),
    ]);
    let means: Vec<f64> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(means.len(), 2);
    assert!((means[0] - 0.5).abs() < 0.05, "T=1 should be chance: {means:?}");
    assert!(means[1] >= means[0] + 0.2, "{means:?}");
}

#[test]
fn eval_cross_validates_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let (schema, graphs) = planted(&dir, 100);
    let out = dir.path().join("cv.json");
    let res = ok(&["eval", "-g", p(&graphs), "--schema", p(&schema), "--r", "20", "--T", "3", "--folds", "4", "--stratified", "-o", p(&out)]);
    assert!(String::from_utf8_lossy(&res.stdout).contains("ROC-AUC"));
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(rep["reports"][0]["folds"].as_array().unwrap().len(), 4);
}

#[test]
fn train_vertex_learns_predictable_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let schema = AttributeSchema::uniform("predictable", &[5, 4, 3]).unwrap();
    let (sp, gp) = (dir.path().join("schema.json"), dir.path().join("g.jsonl"));
    write_schema(&sp, &schema);
    write_graphs(&gp, &predictable_corpus(&schema, 300, 7), &schema);
    let out = dir.path().join("w.bin");
    ok(&[
        "train-vertex", "-g", p(&gp), "--schema", p(&sp), "-o", p(&out), "--r", "32", "--hidden", "32", "--epochs", "30",
        "--aggregator", "mean", "--lr", "1e-2",
    ]);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("w.bin.manifest.json")).unwrap()).unwrap();
    let acc = manifest["training"]["heldout_accuracy"]["mean"].as_f64().unwrap();
    assert!(acc >= 0.99, "held-out accuracy {acc}");
}
