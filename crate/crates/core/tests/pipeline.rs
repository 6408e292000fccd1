use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use corrnet::pipeline::{compare_windows, manifest_digests, run_pipeline, MatrixSelector, PipelineConfig};
use corrnet::synth::SynthSpec;
use corrnet::timeseries::WindowSpec;

fn small_market() -> SynthSpec {
    SynthSpec { n_stocks: 24, n_obs: 600, n_sectors: 3, seed: 3, ..SynthSpec::default() }
}

fn config(out: &Path) -> PipelineConfig {
    PipelineConfig { synth: vec![small_market()], output: out.to_path_buf(), ..PipelineConfig::default() }
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_corrnet")).args(args).output().expect("binary runs")
}

fn cli_ok(args: &[&str]) {
    let out = cli(args);
    assert!(out.status.success(), "corrnet {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn reruns_give_identical_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_pipeline(&config(&tmp.path().join("a"))).unwrap();
    let b = run_pipeline(&config(&tmp.path().join("b"))).unwrap();
    let da = manifest_digests(&a.dir).unwrap();
    let db = manifest_digests(&b.dir).unwrap();
    assert!(da.len() > 30);
    assert_eq!(da, db);
    assert_eq!(read(a.dir.join("manifest.json")), read(b.dir.join("manifest.json")));
    for f in ["correlation_full.csv", "spectrum.csv", "graph_sector.graphml", "domains.csv", "report.kv"] {
        assert!(da.contains_key(f), "{f} missing from the manifest");
    }
}

#[test]
fn stage_commands_compose_to_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let t = |p: &str| tmp.path().join(p).to_string_lossy().into_owned();
    let spec = small_market();
    let out = run_pipeline(&config(&tmp.path().join("run"))).unwrap();
    let run = &out.dir;

    cli_ok(&[
        "synth", "--n-stocks", "24", "--n-obs", "600", "--n-sectors", "3", "--seed", "3", "--out-dir", &t("syn"),
    ]);
    assert_eq!(read(t("syn/prices.csv")), read(run.join("prices.csv")));
    assert_eq!(read(t("syn/labels.csv")), read(run.join("labels.csv")));
    cli_ok(&["returns", "--prices", &t("syn/prices.csv"), "--out", &t("returns.csv")]);
    assert_eq!(read(t("returns.csv")), read(run.join("returns.csv")));
    cli_ok(&["correlate", "--prices", &t("syn/prices.csv"), "--out", &t("full.csv")]);
    assert_eq!(read(t("full.csv")), read(run.join("correlation_full.csv")));
    let obs = spec.n_obs.to_string();
    cli_ok(&["spectrum", "--corr", &t("full.csv"), "--obs", &obs, "--out-dir", &t("spec")]);
    assert_eq!(read(t("spec/spectrum.csv")), read(run.join("spectrum.csv")));
    assert_eq!(read(t("spec/eigenvectors.csv")), read(run.join("eigenvectors.csv")));
    cli_ok(&["modes", "--corr", &t("full.csv"), "--obs", &obs, "--out-dir", &t("modes")]);
    for f in ["correlation_sector-mode.csv", "correlation_abs-sector-mode.csv", "correlation_market-mode.csv"] {
        assert_eq!(read(tmp.path().join("modes").join(f)), read(run.join(f)), "{f}");
    }
    cli_ok(&["pmfg", "--corr", &t("modes/correlation_abs-sector-mode.csv"), "--out", &t("sector_graph")]);
    assert_eq!(read(t("sector_graph.csv")), read(run.join("graph_sector.csv")));
    assert_eq!(read(t("sector_graph.graphml")), read(run.join("graph_sector.graphml")));
    cli_ok(&[
        "communities",
        "--corr",
        &t("modes/correlation_abs-sector-mode.csv"),
        "--sector-corr",
        &t("modes/correlation_sector-mode.csv"),
        "--out-dir",
        &t("comm"),
    ]);
    assert_eq!(read(t("comm/partition.csv")), read(run.join("partition_sector.csv")));
    assert_eq!(read(t("comm/communities.csv")), read(run.join("communities_sector.csv")));
    assert_eq!(read(t("comm/cluster_pairs.csv")), read(run.join("cluster_pairs.csv")));
    cli_ok(&["domains", "--corr", &t("modes/correlation_sector-mode.csv"), "--out-dir", &t("dom")]);
    for f in ["domains.csv", "domain_sizes_positive.csv", "sign_matrix.csv"] {
        assert_eq!(read(tmp.path().join("dom").join(f)), read(run.join(f)), "{f}");
    }
    cli_ok(&["mst", "--corr", &t("full.csv"), "--out", &t("mst")]);
    assert_eq!(read(t("mst.csv")).lines().count(), 24);
}

#[test]
fn run_subcommand_matches_library_call() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("cfg.toml");
    fs::write(
        &cfg_path,
        "[[synth]]\nn_stocks = 24\nn_obs = 600\nn_sectors = 3\nmarket_beta = 0.6\nsector_beta = 0.5\nnoise_sigma = 1.0\nseed = 3\n",
    )
    .unwrap();
    let cli_dir = tmp.path().join("cli");
    cli_ok(&["run", "--config", cfg_path.to_str().unwrap(), "--output", cli_dir.to_str().unwrap()]);
    let lib = run_pipeline(&config(&tmp.path().join("lib"))).unwrap();
    assert_eq!(manifest_digests(&cli_dir).unwrap(), manifest_digests(&lib.dir).unwrap());
}

#[test]
fn equal_windows_get_their_own_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(&tmp.path().join("w"));
    cfg.synth[0].n_obs = 1600;
    cfg.windows = Some(WindowSpec::Equal(4));
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.windows.len(), 4);
    for k in 0..4 {
        assert!(out.dir.join(format!("window_{k:02}/manifest.json")).exists());
    }
    let cmp = out.comparison.unwrap();
    assert_eq!(cmp.windows.len(), 4);
    assert!(cmp.windows[0].agreement_with_previous.is_none());
    assert!(cmp.windows[1..].iter().all(|w| w.agreement_with_previous.is_some()));
    assert!(out.dir.join("compare.csv").exists());
    let digests = manifest_digests(&out.dir).unwrap();
    assert!(digests.contains_key("window_03/manifest.json"));
}

#[test]
fn comparison_preconditions() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_pipeline(&config(&tmp.path().join("a"))).unwrap().dir;
    let same = compare_windows(&[a.clone(), a.clone()]).unwrap();
    assert_eq!(same.windows[1].agreement_with_previous, Some(1.0));
    assert!(compare_windows(&[a.clone()]).is_err());
    let mut other = config(&tmp.path().join("b"));
    other.synth[0].n_stocks = 25;
    let b = run_pipeline(&other).unwrap().dir;
    assert!(matches!(compare_windows(&[a, b]), Err(corrnet::Error::Conflict(_))));
}

#[test]
fn selectors_change_the_exported_partition() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(&tmp.path().join("m"));
    cfg.matrix = MatrixSelector::Market;
    cfg.graph = corrnet::filtergraph::GraphKind::Mst;
    let out = run_pipeline(&cfg).unwrap();
    assert!(out.dir.join("graph_market.csv").exists());
    assert_eq!(read(out.dir.join("graph_market.csv")).lines().count(), 24);
    assert_eq!(out.windows[0].selected.matrix.kind, corrnet::correlation::MatrixKind::MarketMode);
}

#[test]
fn full_selector_tolerates_missing_sector_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(&tmp.path().join("f"));
    cfg.synth[0].sector_beta = 0.0;
    assert!(run_pipeline(&cfg).is_err());
    cfg.matrix = MatrixSelector::Full;
    let out = run_pipeline(&cfg).unwrap();
    assert!(out.windows[0].sector.is_none());
    assert!(!out.dir.join("cluster_pairs.csv").exists());
}

#[test]
fn two_markets_are_tagged() {
    let tmp = tempfile::tempdir().unwrap();
    let mk = |name: &str, seed: u64| -> PathBuf {
        let dir = tmp.path().join(name);
        let m = corrnet::synth::generate(&SynthSpec { seed, ..small_market() }).unwrap();
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("prices.csv");
        let mut buf = Vec::new();
        m.panel.write_wide(&mut buf).unwrap();
        fs::write(&p, buf).unwrap();
        p
    };
    let (a, b) = (mk("a", 1), mk("b", 2));
    let cfg = PipelineConfig {
        input: vec![a, b],
        tags: vec!["NY".into(), "SH".into()],
        output: tmp.path().join("out"),
        ..PipelineConfig::default()
    };
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.windows[0].tickers.len(), 48);
    assert!(out.windows[0].tickers.iter().any(|t| t == "SH:S000"));
    let gml = read(out.dir.join("graph_full.graphml"));
    assert!(gml.contains(">NY<") && gml.contains(">SH<"));
}

#[test]
fn cli_failures_name_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let out = cli(&["run", "--input", missing.to_str().unwrap(), "--output", tmp.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config"), "stderr: {err}");

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "date,A,B\n2020-01-01,1,2\n2020-01-02,x,3\n").unwrap();
    let out = cli(&["returns", "--prices", bad.to_str().unwrap(), "--out", tmp.path().join("r.csv").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("returns") && err.contains("line 3"), "stderr: {err}");

    let out = cli(&["compare", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
}
