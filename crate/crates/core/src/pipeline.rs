//! End-to-end analysis: prices to correlations, spectra, mode matrices,
//! filtered graphs, communities, domains and the metrics report, written to
//! a deterministic output directory with a digest manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::community::{
    adjusted_rand_index, betweenness, community_graph, detect_cluster_pairs, detect_communities, read_partition,
    write_partition, ClusterPair, CommunityGraph, Partition,
};
use crate::correlation::{correlation_matrix, element_histogram, CorrelationMatrix};
use crate::domains::{
    build_domain_graph, domain_size_histogram, extract_domains, write_domains, write_sign_triples, Sign,
    SignDomainSet,
};
use crate::error::{Error, Result};
use crate::filtergraph::{build_graph, write_dot, write_edge_csv, write_graphml, FilteredGraph, GraphKind};
use crate::metrics::{sector_metrics, Table, TableReport};
use crate::rmt::{
    abs_matrix, default_mode_spec, eigendecompose, mode_matrix, mp_bounds, mp_density, subsector_split, EigenSystem,
    Mode, ModeOverrides, ModeSpec, MpBounds, SubsectorSplit,
};
use crate::synth::{generate_regimes, SynthSpec};
use crate::timeseries::{combine_universes, load_prices, prepare_returns, split_windows, Layout, PricePanel, ReturnPanel, WindowSpec};

pub const MANIFEST: &str = "manifest.json";
pub const PARTITION_FILE: &str = "partition.csv";
pub const COMMUNITIES_FILE: &str = "communities.csv";
/// Minimum dates in a window handed to the analysis stages.
pub const MIN_ANALYSIS_DATES: usize = 3;

/// Matrix whose filtered graph and communities are the primary output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixSelector {
    Full,
    Sector,
    AbsSector,
    Market,
    Random,
}

impl MatrixSelector {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixSelector::Full => "full",
            MatrixSelector::Sector => "sector",
            MatrixSelector::AbsSector => "abs-sector",
            MatrixSelector::Market => "market",
            MatrixSelector::Random => "random",
        }
    }
}

impl fmt::Display for MatrixSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatrixSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MatrixSelector::Full),
            "sector" | "sector-mode" => Ok(MatrixSelector::Sector),
            "abs-sector" | "abs-sector-mode" => Ok(MatrixSelector::AbsSector),
            "market" | "market-mode" => Ok(MatrixSelector::Market),
            "random" | "random-mode" => Ok(MatrixSelector::Random),
            other => Err(Error::invalid(format!("unknown matrix selector `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// One price file, or two to be combined into a single universe.
    pub input: Vec<PathBuf>,
    /// Market tags for a two-file combination.
    pub tags: Vec<String>,
    pub layout: Layout,
    pub delimiter: char,
    pub dt: usize,
    pub windows: Option<WindowSpec>,
    pub sector_range: Option<(usize, usize)>,
    pub random_range: Option<(usize, usize)>,
    pub random_start: Option<usize>,
    /// Eigenvalue-weighted mode matrices.
    pub weighted: bool,
    pub graph: GraphKind,
    pub matrix: MatrixSelector,
    /// Community-detection seed.
    pub seed: u64,
    /// Minimum side size of a cluster pair.
    pub min_side: usize,
    /// Filtered-graph edges needed to link two communities.
    pub link_min_edges: usize,
    /// Bins of the element histograms.
    pub bins: usize,
    /// Synthetic regimes, concatenated in time; replaces `input` when set.
    pub synth: Vec<SynthSpec>,
    #[serde(skip_serializing)]
    pub output: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: Vec::new(),
            tags: Vec::new(),
            layout: Layout::Wide,
            delimiter: ',',
            dt: 1,
            windows: None,
            sector_range: None,
            random_range: None,
            random_start: None,
            weighted: true,
            graph: GraphKind::Pmfg,
            matrix: MatrixSelector::Sector,
            seed: crate::community::DEFAULT_SEED,
            min_side: crate::community::DEFAULT_MIN_SIDE,
            link_min_edges: 1,
            bins: 50,
            synth: Vec::new(),
            output: PathBuf::from("corrnet-out"),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse { line: 0, message: format!("config: {e}") })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn overrides(&self) -> ModeOverrides {
        ModeOverrides { sector: self.sector_range, random: self.random_range, random_start: self.random_start }
    }

    pub fn validate(&self) -> Result<()> {
        if self.synth.is_empty() {
            if self.input.is_empty() || self.input.len() > 2 {
                return Err(Error::invalid("give one or two input files, or a synthetic market"));
            }
            for p in &self.input {
                if !p.exists() {
                    return Err(Error::invalid(format!("input file {} does not exist", p.display())));
                }
            }
            if self.input.len() == 2 && !self.tags.is_empty() && self.tags.len() != 2 {
                return Err(Error::invalid("two inputs need exactly two market tags"));
            }
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::invalid("delimiter must be a single ASCII character"));
        }
        if self.dt == 0 {
            return Err(Error::invalid("dt must be at least 1"));
        }
        if self.bins == 0 {
            return Err(Error::invalid("histogram bin count must be positive"));
        }
        Ok(())
    }
}

/// Collects files written into one directory together with their digests.
struct Emitter {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Emitter { dir: dir.to_path_buf(), files: BTreeMap::new() })
    }

    fn emit(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = self.dir.join(name);
        fs::write(&path, &buf).map_err(|e| Error::io(&path, e))?;
        self.files.insert(name.to_string(), hex::encode(Sha256::digest(&buf)));
        Ok(())
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Loads the configured input, or generates the synthetic market.
pub fn load_input(cfg: &PipelineConfig) -> Result<(PricePanel, Option<crate::synth::SynthMarket>)> {
    if !cfg.synth.is_empty() {
        let m = stage("synth", generate_regimes(&cfg.synth))?;
        return Ok((m.panel.clone(), Some(m)));
    }
    let delim = cfg.delimiter as u8;
    let first = stage("ingest", load_prices(&cfg.input[0], cfg.layout, delim))?;
    if cfg.input.len() == 1 {
        return Ok((first, None));
    }
    let second = stage("ingest", load_prices(&cfg.input[1], cfg.layout, delim))?;
    let (ta, tb) = match cfg.tags.as_slice() {
        [a, b] => (a.clone(), b.clone()),
        _ => ("A".to_string(), "B".to_string()),
    };
    Ok((stage("ingest", combine_universes(&first, &ta, &second, &tb))?, None))
}

/// Matrix tag used in file names.
fn file_tag(c: &CorrelationMatrix) -> &'static str {
    c.kind.as_str()
}

pub fn write_correlation(c: &CorrelationMatrix, out: &mut Vec<u8>) -> Result<()> {
    c.write_csv(out)
}

pub fn write_returns(r: &ReturnPanel, out: &mut Vec<u8>) -> Result<()> {
    let mut s = String::from("ticker");
    for t in 0..r.n_obs() {
        s.push_str(&format!(",r{t}"));
    }
    s.push('\n');
    for (i, t) in r.tickers.iter().enumerate() {
        s.push_str(t);
        for x in &r.returns[i] {
            s.push_str(&format!(",{x}"));
        }
        s.push('\n');
    }
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<returns>", e))
}

pub fn write_mp_density(bounds: &MpBounds, points: usize, out: &mut Vec<u8>) -> Result<()> {
    let mut s = format!("# q: {}\n# lambda_min: {}\n# lambda_max: {}\nlambda,density\n", bounds.q, bounds.lambda_min, bounds.lambda_max);
    let span = bounds.lambda_max - bounds.lambda_min;
    for k in 0..=points {
        let l = bounds.lambda_min + span * k as f64 / points as f64;
        s.push_str(&format!("{l},{}\n", mp_density(l, bounds.q)));
    }
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<mp density>", e))
}

pub fn write_cluster_pairs(tickers: &[String], pairs: &[ClusterPair], out: &mut Vec<u8>) -> Result<()> {
    let mut s = String::from("community,side_a,side_b,inter_mean\n");
    let names = |v: &[usize]| v.iter().map(|&i| tickers[i].as_str()).collect::<Vec<_>>().join(" ");
    for p in pairs {
        s.push_str(&format!("{},{},{},{:e}\n", p.community, names(&p.side_a), names(&p.side_b), p.inter_mean));
    }
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<cluster pairs>", e))
}

pub fn write_subsectors(tickers: &[String], splits: &[SubsectorSplit], out: &mut Vec<u8>) -> Result<()> {
    let mut s = String::from("eigen_index,ticker,side\n");
    for sp in splits {
        for &i in &sp.positive {
            s.push_str(&format!("{},{},+\n", sp.eigen_index, tickers[i]));
        }
        for &i in &sp.negative {
            s.push_str(&format!("{},{},-\n", sp.eigen_index, tickers[i]));
        }
    }
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<subsectors>", e))
}

/// Filtered graph, communities and their community-level graph for one matrix.
#[derive(Debug, Clone)]
pub struct GraphAnalysis {
    pub matrix: CorrelationMatrix,
    pub graph: FilteredGraph,
    pub partition: Partition,
    pub community_graph: CommunityGraph,
}

pub fn analyze_graph(c: &CorrelationMatrix, kind: GraphKind, seed: u64) -> Result<GraphAnalysis> {
    let graph = stage(kind.as_str(), build_graph(c, kind))?;
    let partition = stage("communities", detect_communities(&graph, seed))?;
    let cg = stage("communities", community_graph(&graph, &partition))?;
    Ok(GraphAnalysis { matrix: c.clone(), graph, partition, community_graph: cg })
}

fn emit_graph(em: &mut Emitter, g: &GraphAnalysis, pairs: &[ClusterPair], tag: &str) -> Result<()> {
    em.emit(&format!("graph_{tag}.graphml"), |w| write_graphml(&g.graph, w))?;
    em.emit(&format!("graph_{tag}.dot"), |w| write_dot(&g.graph, w))?;
    em.emit(&format!("graph_{tag}.csv"), |w| write_edge_csv(&g.graph, w))?;
    em.emit(&format!("partition_{tag}.csv"), |w| write_partition(&g.matrix.tickers, &g.partition, pairs, w))?;
    em.emit(&format!("communities_{tag}.csv"), |w| g.community_graph.write_csv(w))
}

/// Sector-mode products of one window.
#[derive(Debug, Clone)]
pub struct SectorAnalysis {
    pub spec: ModeSpec,
    pub sector: CorrelationMatrix,
    pub abs_sector: CorrelationMatrix,
    pub graph: GraphAnalysis,
    pub cluster_pairs: Vec<ClusterPair>,
    pub subsectors: Vec<SubsectorSplit>,
    pub positive_domains: SignDomainSet,
    pub negative_domains: SignDomainSet,
}

/// In-memory results of one analysed window.
#[derive(Debug, Clone)]
pub struct WindowResult {
    pub label: String,
    pub dir: PathBuf,
    pub tickers: Vec<String>,
    pub n_obs: usize,
    pub full: GraphAnalysis,
    pub sector: Option<SectorAnalysis>,
    /// Analysis of the selected matrix (may alias `full` or `sector.graph`).
    pub selected: GraphAnalysis,
    pub report: TableReport,
    pub files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct WindowManifest<'a> {
    tool: &'static str,
    version: &'static str,
    window: &'a str,
    config: &'a PipelineConfig,
    seeds: Seeds,
    tickers: usize,
    observations: usize,
    dates: (String, String),
    dropped: Vec<(String, String)>,
    mode_spec: Option<ModeSpec>,
    mp_bounds: MpBounds,
    files: &'a BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Seeds {
    community: u64,
    synth: Vec<u64>,
}

fn seeds(cfg: &PipelineConfig) -> Seeds {
    Seeds { community: cfg.seed, synth: cfg.synth.iter().map(|s| s.seed).collect() }
}

fn splits_of(pairs: &[ClusterPair]) -> Vec<(Vec<usize>, Vec<usize>)> {
    pairs.iter().map(|p| (p.side_a.clone(), p.side_b.clone())).collect()
}

/// Runs every stage on one price panel and writes the results into `dir`.
pub fn run_window(panel: &PricePanel, cfg: &PipelineConfig, label: &str, dir: &Path) -> Result<WindowResult> {
    run_window_with(panel, cfg, label, dir, BTreeMap::new())
}

/// [`run_window`] with digests of files already written into `dir`.
fn run_window_with(
    panel: &PricePanel,
    cfg: &PipelineConfig,
    label: &str,
    dir: &Path,
    existing: BTreeMap<String, String>,
) -> Result<WindowResult> {
    if panel.n_dates() < MIN_ANALYSIS_DATES {
        return Err(Error::invalid(format!("window {label} has {} dates (< {MIN_ANALYSIS_DATES})", panel.n_dates())).in_stage("windows"));
    }
    info!("window {label}: {} tickers, {} dates", panel.n_tickers(), panel.n_dates());
    let mut em = Emitter::new(dir)?;
    em.files = existing;
    em.emit("prices.csv", |w| panel.write_wide(w))?;

    let (returns, dropped) = stage("returns", prepare_returns(panel, cfg.dt))?;
    em.emit("returns.csv", |w| write_returns(&returns, w))?;
    em.emit("dropped.csv", |w| {
        let mut s = String::from("ticker,reason\n");
        dropped.iter().for_each(|d| s.push_str(&format!("{},{}\n", d.ticker, d.reason)));
        w.write_all(s.as_bytes()).map_err(|e| Error::io("<dropped>", e))
    })?;

    let full = stage("correlate", correlation_matrix(&returns))?;
    em.emit("correlation_full.csv", |w| write_correlation(&full, w))?;
    let hist = stage("correlate", element_histogram(&full, cfg.bins))?;
    em.emit("histogram_full.csv", |w| hist.write_csv(w))?;

    let es: EigenSystem = stage("spectrum", eigendecompose(&full))?;
    let bounds = stage("spectrum", mp_bounds(full.n(), returns.n_obs()))?;
    em.emit("spectrum.csv", |w| es.write_spectrum(w))?;
    em.emit("eigenvectors.csv", |w| es.write_eigenvectors(w))?;
    em.emit("mp_density.csv", |w| write_mp_density(&bounds, 200, w))?;

    let spec = match default_mode_spec(&es, &bounds, &cfg.overrides()) {
        Ok(s) => Some(s),
        Err(Error::EmptySector) if cfg.matrix == MatrixSelector::Full => {
            warn!("window {label}: no sector mode above the noise band; sector-mode outputs skipped");
            None
        }
        Err(e) => return Err(e.in_stage("modes")),
    };

    let mut mode_mats = BTreeMap::new();
    if let Some(spec) = &spec {
        for mode in [Mode::Market, Mode::Sector, Mode::Random] {
            let m = stage("modes", mode_matrix(&es, spec, mode, cfg.weighted))?;
            em.emit(&format!("correlation_{}.csv", file_tag(&m)), |w| write_correlation(&m, w))?;
            let h = stage("modes", element_histogram(&m, cfg.bins))?;
            em.emit(&format!("histogram_{}.csv", file_tag(&m)), |w| h.write_csv(w))?;
            mode_mats.insert(mode, m);
        }
        let abs = abs_matrix(&mode_mats[&Mode::Sector]);
        em.emit(&format!("correlation_{}.csv", file_tag(&abs)), |w| write_correlation(&abs, w))?;
    }

    let full_graph = analyze_graph(&full, cfg.graph, cfg.seed)?;
    emit_graph(&mut em, &full_graph, &[], "full")?;

    let sector = match &spec {
        Some(spec) => {
            let c_sec = mode_mats[&Mode::Sector].clone();
            let abs = abs_matrix(&c_sec);
            let g = analyze_graph(&abs, cfg.graph, cfg.seed)?;
            let pairs = stage("communities", detect_cluster_pairs(&g.partition, &c_sec, cfg.min_side))?;
            emit_graph(&mut em, &g, &pairs, "sector")?;
            em.emit("cluster_pairs.csv", |w| write_cluster_pairs(&c_sec.tickers, &pairs, w))?;
            let mut subsectors = Vec::new();
            for a in spec.indices(Mode::Sector) {
                subsectors.push(stage("modes", subsector_split(&es, a, None))?);
            }
            em.emit("subsectors.csv", |w| write_subsectors(&c_sec.tickers, &subsectors, w))?;
            let pos = extract_domains(&c_sec, Sign::Positive);
            let neg = extract_domains(&c_sec, Sign::Negative);
            em.emit("domains.csv", |w| write_domains(&c_sec.tickers, &[&pos, &neg], w))?;
            em.emit("domain_sizes_positive.csv", |w| domain_size_histogram(&pos).write_csv(w))?;
            em.emit("domain_sizes_negative.csv", |w| domain_size_histogram(&neg).write_csv(w))?;
            em.emit("sign_matrix.csv", |w| write_sign_triples(&c_sec, &pos, w))?;
            if pos.domains.len() >= 2 {
                let dg = stage("domains", build_domain_graph(&c_sec, &pos))?;
                em.emit("domain_graph.dot", |w| dg.write_dot(&c_sec.tickers, w))?;
                em.emit("domain_pairs.csv", |w| dg.write_pair_means(w))?;
            }
            Some(SectorAnalysis {
                spec: *spec,
                sector: c_sec,
                abs_sector: abs,
                graph: g,
                cluster_pairs: pairs,
                subsectors,
                positive_domains: pos,
                negative_domains: neg,
            })
        }
        None => None,
    };

    let selected = match cfg.matrix {
        MatrixSelector::Full => full_graph.clone(),
        MatrixSelector::Sector | MatrixSelector::AbsSector => {
            sector.as_ref().expect("sector analysis present unless selector is full").graph.clone()
        }
        MatrixSelector::Market | MatrixSelector::Random => {
            let m = &mode_mats[if cfg.matrix == MatrixSelector::Market { &Mode::Market } else { &Mode::Random }];
            let g = analyze_graph(m, cfg.graph, cfg.seed)?;
            emit_graph(&mut em, &g, &[], cfg.matrix.as_str())?;
            g
        }
    };
    let selected_pairs: &[ClusterPair] = match (&sector, cfg.matrix) {
        (Some(s), MatrixSelector::Sector | MatrixSelector::AbsSector) => &s.cluster_pairs,
        _ => &[],
    };
    em.emit(PARTITION_FILE, |w| write_partition(&selected.matrix.tickers, &selected.partition, selected_pairs, w))?;
    em.emit(COMMUNITIES_FILE, |w| selected.community_graph.write_csv(w))?;

    let report = stage("metrics", build_report(cfg, &full_graph, sector.as_ref()))?;
    em.emit("report.txt", |w| report.write_text(w))?;
    em.emit("report.kv", |w| report.write_key_value(w))?;

    let manifest = WindowManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        window: label,
        config: cfg,
        seeds: seeds(cfg),
        tickers: returns.n_tickers(),
        observations: returns.n_obs(),
        dates: (panel.dates[0].to_string(), panel.dates[panel.n_dates() - 1].to_string()),
        dropped: dropped.iter().map(|d| (d.ticker.clone(), d.reason.clone())).collect(),
        mode_spec: spec,
        mp_bounds: bounds,
        files: &em.files,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::invalid(format!("manifest: {e}")))?;
    let path = dir.join(MANIFEST);
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;

    Ok(WindowResult {
        label: label.to_string(),
        dir: dir.to_path_buf(),
        tickers: returns.tickers.clone(),
        n_obs: returns.n_obs(),
        full: full_graph,
        sector,
        selected,
        report,
        files: em.files,
    })
}

fn build_report(cfg: &PipelineConfig, full: &GraphAnalysis, sector: Option<&SectorAnalysis>) -> Result<TableReport> {
    let mut r = TableReport::default();
    let method = format!("{} communities", cfg.graph.as_str().to_uppercase());
    let links = full.community_graph.linked_pairs(cfg.link_min_edges);
    r.push(Table::Interaction, &method, sector_metrics(&full.matrix, &full.partition.groups, Some(&links), &[])?);
    if let Some(s) = sector {
        let halves: Vec<Vec<usize>> = s
            .subsectors
            .iter()
            .flat_map(|sp| [sp.positive.clone(), sp.negative.clone()])
            .filter(|g| !g.is_empty())
            .collect();
        let sub_splits: Vec<(Vec<usize>, Vec<usize>)> =
            s.subsectors.iter().map(|sp| (sp.positive.clone(), sp.negative.clone())).collect();
        r.push(Table::Interaction, "RMT subsectors", sector_metrics(&full.matrix, &halves, None, &sub_splits)?);

        let links = s.graph.community_graph.linked_pairs(cfg.link_min_edges);
        let pair_splits = splits_of(&s.cluster_pairs);
        for c in [&s.sector, &s.abs_sector] {
            r.push(Table::SectorMode, &method, sector_metrics(c, &s.graph.partition.groups, Some(&links), &pair_splits)?);
        }
        r.push(Table::SectorMode, "RMT subsectors", sector_metrics(&s.sector, &halves, None, &sub_splits)?);
        if s.positive_domains.domains.len() >= 2 {
            let dg = build_domain_graph(&s.sector, &s.positive_domains)?;
            r.push(Table::SectorMode, "sign domains", sector_metrics(&s.sector, &dg.domains, Some(&dg.links), &[])?);
        }
    }
    Ok(r)
}

/// Output of [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub dir: PathBuf,
    pub windows: Vec<WindowResult>,
    pub comparison: Option<WindowComparison>,
}

/// Runs the configured analysis into `cfg.output`. Windows are processed in
/// parallel, each in its own `window_XX` subdirectory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    stage("config", cfg.validate())?;
    let out = cfg.output.clone();
    let (panel, synth) = load_input(cfg)?;
    let mut em = Emitter::new(&out)?;
    if let Some(m) = &synth {
        em.emit("labels.csv", |w| m.write_labels(w))?;
    }
    let Some(spec) = &cfg.windows else {
        let w = run_window_with(&panel, cfg, "all", &out, em.files)?;
        return Ok(PipelineOutput { dir: out, windows: vec![w], comparison: None });
    };
    let panels = stage("windows", split_windows(&panel, spec))?;
    let results: Vec<Result<WindowResult>> = panels
        .par_iter()
        .enumerate()
        .map(|(k, p)| run_window(p, cfg, &format!("window_{k:02}"), &out.join(format!("window_{k:02}"))))
        .collect();
    let windows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let comparison = if windows.len() >= 2 {
        let dirs: Vec<PathBuf> = windows.iter().map(|w| w.dir.clone()).collect();
        let cmp = stage("compare", compare_windows(&dirs))?;
        em.emit("compare.csv", |w| cmp.write_csv(w))?;
        Some(cmp)
    } else {
        None
    };
    let mut files = em.files.clone();
    for w in &windows {
        let path = w.dir.join(MANIFEST);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        files.insert(format!("{}/{MANIFEST}", w.label), hex::encode(Sha256::digest(&bytes)));
    }
    #[derive(Serialize)]
    struct TopManifest<'a> {
        tool: &'static str,
        version: &'static str,
        config: &'a PipelineConfig,
        seeds: Seeds,
        windows: Vec<&'a str>,
        files: &'a BTreeMap<String, String>,
    }
    let top = TopManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        seeds: seeds(cfg),
        windows: windows.iter().map(|w| w.label.as_str()).collect(),
        files: &files,
    };
    let text = serde_json::to_string_pretty(&top).map_err(|e| Error::invalid(format!("manifest: {e}")))?;
    let path = out.join(MANIFEST);
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(PipelineOutput { dir: out, windows, comparison })
}

/// Reads the file digests recorded in a manifest.
pub fn manifest_digests(dir: &Path) -> Result<BTreeMap<String, String>> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::invalid(format!("manifest: {e}")))?;
    serde_json::from_value(v["files"].clone()).map_err(|e| Error::invalid(format!("manifest files: {e}")))
}

/// Structural summary of one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSummary {
    pub dir: PathBuf,
    pub communities: usize,
    pub sizes: Vec<usize>,
    /// Community with the largest betweenness in the community-level graph.
    pub hub: usize,
    pub hub_betweenness: f64,
    /// Adjusted Rand index against the previous window.
    pub agreement_with_previous: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowComparison {
    pub tickers: Vec<String>,
    pub windows: Vec<WindowSummary>,
}

impl WindowComparison {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::from("window,communities,sizes,hub,hub_betweenness,agreement_with_previous\n");
        for w in &self.windows {
            let name = w.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let sizes: Vec<String> = w.sizes.iter().map(|x| x.to_string()).collect();
            let agr = w.agreement_with_previous.map(|a| a.to_string()).unwrap_or_default();
            s.push_str(&format!("{name},{},{},{},{},{agr}\n", w.communities, sizes.join(" "), w.hub, w.hub_betweenness));
        }
        out.write_all(s.as_bytes()).map_err(|e| Error::io("<comparison>", e))
    }
}

fn read_partition_tickers(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#') && !l.starts_with("ticker,"))
        .filter_map(|l| l.split(',').next().map(str::to_string))
        .collect()
}

/// Reads the link section of a community summary file.
pub fn read_community_links(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut in_links = false;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.starts_with("community_a,") {
            in_links = true;
            continue;
        }
        if !in_links || line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut f = line.split(',');
        let parse = |s: Option<&str>| -> Result<usize> {
            s.and_then(|x| x.trim().parse().ok())
                .ok_or_else(|| Error::Parse { line: ln + 1, message: "bad community link".into() })
        };
        out.push((parse(f.next())?, parse(f.next())?));
    }
    Ok(out)
}

/// Compares completed window directories over the same ticker universe.
pub fn compare_windows(dirs: &[PathBuf]) -> Result<WindowComparison> {
    if dirs.len() < 2 {
        return Err(Error::invalid(format!("comparison needs at least 2 windows, got {}", dirs.len())));
    }
    let mut universe: Option<Vec<String>> = None;
    let mut windows = Vec::new();
    let mut prev: Option<Vec<usize>> = None;
    for dir in dirs {
        let ppath = dir.join(PARTITION_FILE);
        let ptext = fs::read_to_string(&ppath).map_err(|e| Error::io(&ppath, e))?;
        let tickers = read_partition_tickers(&ptext);
        let uni = universe.get_or_insert_with(|| {
            let mut t = tickers.clone();
            t.sort();
            t
        });
        let mut sorted = tickers.clone();
        sorted.sort();
        if &sorted != uni {
            return Err(Error::Conflict(format!("window {} covers a different ticker universe", dir.display())));
        }
        let partition = read_partition(uni, &ptext)?;
        let cpath = dir.join(COMMUNITIES_FILE);
        let ctext = fs::read_to_string(&cpath).map_err(|e| Error::io(&cpath, e))?;
        let mut links = read_community_links(&ctext)?;
        // the communities file numbers groups as written; the partition read
        // back renumbers them, so map through one shared node
        let written = written_assignment(&ptext, uni)?;
        let assign = partition.assignment();
        let mut remap = BTreeMap::new();
        for (i, &w) in written.iter().enumerate() {
            remap.insert(w, assign[i]);
        }
        for l in &mut links {
            *l = (remap[&l.0], remap[&l.1]);
        }
        let k = partition.groups.len();
        let bc = betweenness(k, &links);
        let sizes = partition.sizes();
        let hub = (0..k)
            .max_by(|&a, &b| bc[a].total_cmp(&bc[b]).then(sizes[a].cmp(&sizes[b])).then(b.cmp(&a)))
            .unwrap_or(0);
        let agreement = prev.as_ref().map(|p| adjusted_rand_index(p, &assign));
        windows.push(WindowSummary {
            dir: dir.clone(),
            communities: k,
            sizes,
            hub,
            hub_betweenness: bc.get(hub).copied().unwrap_or(0.0),
            agreement_with_previous: agreement,
        });
        prev = Some(assign);
    }
    Ok(WindowComparison { tickers: universe.unwrap_or_default(), windows })
}

fn written_assignment(text: &str, tickers: &[String]) -> Result<Vec<usize>> {
    let index: BTreeMap<&str, usize> = tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut out = vec![0; tickers.len()];
    for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#') && !l.starts_with("ticker,")) {
        let mut f = line.split(',');
        let t = f.next().unwrap_or("");
        let c: usize = f
            .next()
            .and_then(|x| x.trim().parse().ok())
            .ok_or_else(|| Error::invalid(format!("bad partition line `{line}`")))?;
        out[index[t]] = c;
    }
    Ok(out)
}
