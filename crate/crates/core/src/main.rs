use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use corrnet::community::{community_graph, detect_cluster_pairs, detect_communities, read_partition, write_partition};
use corrnet::correlation::{correlation_matrix, element_histogram, CorrelationMatrix};
use corrnet::domains::{
    build_domain_graph, domain_size_histogram, extract_domains, write_domains, write_sign_triples, Sign,
};
use corrnet::filtergraph::{build_graph, write_dot, write_edge_csv, write_graphml, GraphKind};
use corrnet::metrics::{sector_metrics, Table, TableReport};
use corrnet::pipeline::{
    compare_windows, read_community_links, run_pipeline, write_cluster_pairs, write_correlation, write_mp_density,
    write_returns, MatrixSelector, PipelineConfig,
};
use corrnet::rmt::{abs_matrix, default_mode_spec, eigendecompose, mode_matrix, mp_bounds, Mode, ModeOverrides};
use corrnet::synth::{generate, SynthSpec};
use corrnet::timeseries::{fill_missing, load_prices, prepare_returns, Layout, WindowSpec};
use corrnet::{Error, Result};

#[derive(Parser)]
#[command(name = "corrnet", version, about = "Correlation-network analysis of stock markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PriceInput {
    /// Price table.
    #[arg(long)]
    prices: PathBuf,
    #[arg(long, default_value = "wide")]
    layout: Layout,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Subcommand)]
enum Command {
    /// Load a price table, carry gaps forward and write it in wide layout.
    Ingest {
        #[command(flatten)]
        input: PriceInput,
        #[arg(long)]
        out: PathBuf,
    },
    /// Normalized log returns.
    Returns {
        #[command(flatten)]
        input: PriceInput,
        #[arg(long, default_value_t = 1)]
        dt: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full correlation matrix and its element histogram.
    Correlate {
        #[command(flatten)]
        input: PriceInput,
        #[arg(long, default_value_t = 1)]
        dt: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Eigenvalues, eigenvectors and the noise-band density.
    Spectrum {
        #[arg(long)]
        corr: PathBuf,
        /// Number of return observations behind the matrix.
        #[arg(long)]
        obs: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Market, sector and random mode matrices.
    Modes {
        #[arg(long)]
        corr: PathBuf,
        #[arg(long)]
        obs: usize,
        /// Inclusive sector eigen-index range, e.g. 1:11.
        #[arg(long, value_parser = parse_range)]
        sector: Option<(usize, usize)>,
        #[arg(long, value_parser = parse_range)]
        random: Option<(usize, usize)>,
        #[arg(long)]
        random_start: Option<usize>,
        /// Sum eigenvector outer products without eigenvalue weights.
        #[arg(long)]
        unweighted: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Maximum spanning tree.
    Mst {
        #[arg(long)]
        corr: PathBuf,
        /// Output path without extension; .graphml, .dot and .csv are written.
        #[arg(long)]
        out: PathBuf,
    },
    /// Planar maximally filtered graph.
    Pmfg {
        #[arg(long)]
        corr: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map-equation communities of a filtered graph built from a matrix.
    Communities {
        #[arg(long)]
        corr: PathBuf,
        #[arg(long, default_value = "pmfg")]
        graph: GraphKind,
        #[arg(long, default_value_t = corrnet::community::DEFAULT_SEED)]
        seed: u64,
        /// Signed sector-mode matrix; enables cluster-pair detection.
        #[arg(long)]
        sector_corr: Option<PathBuf>,
        #[arg(long, default_value_t = corrnet::community::DEFAULT_MIN_SIDE)]
        min_side: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Same-sign domains, their size distributions and the domain graph.
    Domains {
        #[arg(long)]
        corr: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Average correlations inside and between the groups of a partition.
    Metrics {
        #[arg(long)]
        corr: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        /// Community summary whose links split between-group pairs.
        #[arg(long)]
        links: Option<PathBuf>,
        #[arg(long, default_value = "partition")]
        method: String,
        /// Report in the sector-mode layout (values x 10^2).
        #[arg(long)]
        sector_table: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic factor-model market.
    Synth {
        /// TOML file with the generator parameters.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        n_stocks: Option<usize>,
        #[arg(long)]
        n_obs: Option<usize>,
        #[arg(long)]
        n_sectors: Option<usize>,
        #[arg(long)]
        market_beta: Option<f64>,
        #[arg(long)]
        sector_beta: Option<f64>,
        #[arg(long)]
        noise_sigma: Option<f64>,
        /// Anti-correlated sector pair, e.g. 0:1 (repeatable).
        #[arg(long = "anti-pair", value_parser = parse_range)]
        anti_pairs: Vec<(usize, usize)>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Full pipeline over equal time windows, followed by a window comparison.
    Windows {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Structural change between completed window directories.
    Compare {
        dirs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline from a config file and/or flags.
    Run {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Declarative TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Price file; give two to combine markets (replaces synthetic input).
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Market tag per input file.
    #[arg(long)]
    tag: Vec<String>,
    /// wide or long.
    #[arg(long)]
    layout: Option<Layout>,
    /// Return horizon in time steps.
    #[arg(long)]
    dt: Option<usize>,
    /// Sector mode indices, e.g. 1:5.
    #[arg(long, value_parser = parse_range)]
    sector: Option<(usize, usize)>,
    /// Random mode indices, e.g. 50:258.
    #[arg(long, value_parser = parse_range)]
    random: Option<(usize, usize)>,
    /// Unit weights instead of eigenvalues in the mode matrices.
    #[arg(long)]
    unweighted: bool,
    /// mst or pmfg.
    #[arg(long)]
    graph: Option<GraphKind>,
    /// Primary matrix: full, sector, abs-sector, market or random.
    #[arg(long)]
    matrix: Option<MatrixSelector>,
    /// Community-detection seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if !self.input.is_empty() {
            cfg.input = self.input.clone();
            cfg.synth.clear();
        }
        if !self.tag.is_empty() {
            cfg.tags = self.tag.clone();
        }
        if let Some(l) = self.layout {
            cfg.layout = l;
        }
        if let Some(d) = self.dt {
            cfg.dt = d;
        }
        if self.sector.is_some() {
            cfg.sector_range = self.sector;
        }
        if self.random.is_some() {
            cfg.random_range = self.random;
        }
        if self.unweighted {
            cfg.weighted = false;
        }
        if let Some(g) = self.graph {
            cfg.graph = g;
        }
        if let Some(m) = self.matrix {
            cfg.matrix = m;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.output {
            cfg.output = o.clone();
        }
        Ok(cfg)
    }
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad start in `{s}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad end in `{s}`"))?;
    Ok((a, b))
}

fn write(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.to_path_buf(), source: e })?;
    }
    fs::write(path, buf).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn read_matrix(path: &Path) -> Result<CorrelationMatrix> {
    let f = fs::File::open(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    CorrelationMatrix::read_csv(f)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn load(input: &PriceInput) -> Result<corrnet::timeseries::PricePanel> {
    if !input.delimiter.is_ascii() {
        return Err(Error::InvalidInput("delimiter must be ASCII".into()));
    }
    load_prices(&input.prices, input.layout, input.delimiter as u8)
}

fn tagged<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

fn graph_outputs(g: &corrnet::filtergraph::FilteredGraph, out: &Path) -> Result<()> {
    write(&out.with_extension("graphml"), |w| write_graphml(g, w))?;
    write(&out.with_extension("dot"), |w| write_dot(g, w))?;
    write(&out.with_extension("csv"), |w| write_edge_csv(g, w))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input, out } => tagged("ingest", {
            load(&input).and_then(|p| {
                let (filled, gaps) = fill_missing(&p)?;
                println!("{} tickers, {} dates, {gaps} gaps filled", filled.n_tickers(), filled.n_dates());
                write(&out, |w| filled.write_wide(w))
            })
        }),
        Command::Returns { input, dt, out } => tagged("returns", {
            load(&input).and_then(|p| {
                let (r, dropped) = prepare_returns(&p, dt)?;
                for d in &dropped {
                    eprintln!("dropped {}: {}", d.ticker, d.reason);
                }
                println!("{} tickers, {} observations", r.n_tickers(), r.n_obs());
                write(&out, |w| write_returns(&r, w))
            })
        }),
        Command::Correlate { input, dt, out, histogram, bins } => tagged("correlate", {
            load(&input).and_then(|p| {
                let (r, _) = prepare_returns(&p, dt)?;
                let c = correlation_matrix(&r)?;
                println!("{} x {} correlation matrix from {} observations", c.n(), c.n(), r.n_obs());
                write(&out, |w| write_correlation(&c, w))?;
                if let Some(h) = histogram {
                    let hist = element_histogram(&c, bins)?;
                    write(&h, |w| hist.write_csv(w))?;
                }
                Ok(())
            })
        }),
        Command::Spectrum { corr, obs, out_dir } => tagged("spectrum", {
            read_matrix(&corr).and_then(|c| {
                let es = eigendecompose(&c)?;
                let b = mp_bounds(c.n(), obs)?;
                println!("Q = {:.4}, noise band [{:.4}, {:.4}]", b.q, b.lambda_min, b.lambda_max);
                let above = es.eigenvalues.iter().filter(|&&l| l > b.lambda_max).count();
                println!("largest eigenvalue {:.4}; {above} above the band", es.eigenvalues[0]);
                write(&out_dir.join("spectrum.csv"), |w| es.write_spectrum(w))?;
                write(&out_dir.join("eigenvectors.csv"), |w| es.write_eigenvectors(w))?;
                write(&out_dir.join("mp_density.csv"), |w| write_mp_density(&b, 200, w))
            })
        }),
        Command::Modes { corr, obs, sector, random, random_start, unweighted, out_dir } => tagged("modes", {
            read_matrix(&corr).and_then(|c| {
                let es = eigendecompose(&c)?;
                let b = mp_bounds(c.n(), obs)?;
                let spec = default_mode_spec(&es, &b, &ModeOverrides { sector, random, random_start })?;
                println!("sector modes {:?}, random modes {:?}", spec.sector, spec.random);
                for mode in [Mode::Market, Mode::Sector, Mode::Random] {
                    let m = mode_matrix(&es, &spec, mode, !unweighted)?;
                    write(&out_dir.join(format!("correlation_{}.csv", m.kind)), |w| write_correlation(&m, w))?;
                    if mode == Mode::Sector {
                        let a = abs_matrix(&m);
                        write(&out_dir.join(format!("correlation_{}.csv", a.kind)), |w| write_correlation(&a, w))?;
                    }
                }
                Ok(())
            })
        }),
        Command::Mst { corr, out } => tagged("mst", {
            read_matrix(&corr).and_then(|c| {
                let g = build_graph(&c, GraphKind::Mst)?;
                println!("{} edges, weight sum {:.6}", g.edges.len(), g.total_weight());
                graph_outputs(&g, &out)
            })
        }),
        Command::Pmfg { corr, out } => tagged("pmfg", {
            read_matrix(&corr).and_then(|c| {
                let g = build_graph(&c, GraphKind::Pmfg)?;
                println!("{} edges, weight sum {:.6}", g.edges.len(), g.total_weight());
                graph_outputs(&g, &out)
            })
        }),
        Command::Communities { corr, graph, seed, sector_corr, min_side, out_dir } => tagged("communities", {
            read_matrix(&corr).and_then(|c| {
                let g = build_graph(&c, graph)?;
                let p = detect_communities(&g, seed)?;
                let cg = community_graph(&g, &p)?;
                println!("{} communities, codelength {:.6} bits (seed {seed})", p.groups.len(), p.codelength.unwrap_or(0.0));
                let pairs = match sector_corr {
                    Some(path) => {
                        let sec = read_matrix(&path)?;
                        let pairs = detect_cluster_pairs(&p, &sec, min_side)?;
                        println!("{} cluster pairs", pairs.len());
                        write(&out_dir.join("cluster_pairs.csv"), |w| write_cluster_pairs(&sec.tickers, &pairs, w))?;
                        pairs
                    }
                    None => Vec::new(),
                };
                write(&out_dir.join("partition.csv"), |w| write_partition(&c.tickers, &p, &pairs, w))?;
                write(&out_dir.join("communities.csv"), |w| cg.write_csv(w))?;
                graph_outputs(&g, &out_dir.join(format!("graph_{graph}")))
            })
        }),
        Command::Domains { corr, out_dir } => tagged("domains", {
            read_matrix(&corr).and_then(|c| {
                let pos = extract_domains(&c, Sign::Positive);
                let neg = extract_domains(&c, Sign::Negative);
                let hp = domain_size_histogram(&pos);
                let hn = domain_size_histogram(&neg);
                println!("positive: {} domains, max {}, mean {:.2}", hp.count, hp.max, hp.mean);
                println!("negative: {} domains, max {}, mean {:.2}", hn.count, hn.max, hn.mean);
                write(&out_dir.join("domains.csv"), |w| write_domains(&c.tickers, &[&pos, &neg], w))?;
                write(&out_dir.join("domain_sizes_positive.csv"), |w| hp.write_csv(w))?;
                write(&out_dir.join("domain_sizes_negative.csv"), |w| hn.write_csv(w))?;
                write(&out_dir.join("sign_matrix.csv"), |w| write_sign_triples(&c, &pos, w))?;
                if pos.domains.len() >= 2 {
                    let dg = build_domain_graph(&c, &pos)?;
                    println!("domain graph: {} links", dg.links.len());
                    write(&out_dir.join("domain_graph.dot"), |w| dg.write_dot(&c.tickers, w))?;
                    write(&out_dir.join("domain_pairs.csv"), |w| dg.write_pair_means(w))?;
                }
                Ok(())
            })
        }),
        Command::Metrics { corr, partition, links, method, sector_table, out } => tagged("metrics", {
            read_matrix(&corr).and_then(|c| {
                let p = read_partition(&c.tickers, &read_text(&partition)?)?;
                let links = match links {
                    Some(path) => Some(read_community_links(&read_text(&path)?)?),
                    None => None,
                };
                let m = sector_metrics(&c, &p.groups, links.as_deref(), &[])?;
                let mut r = TableReport::default();
                r.push(if sector_table { Table::SectorMode } else { Table::Interaction }, method, m);
                print!("{}", r.to_text());
                match out {
                    Some(o) => write(&o, |w| r.write_key_value(w)),
                    None => Ok(()),
                }
            })
        }),
        Command::Synth {
            spec,
            n_stocks,
            n_obs,
            n_sectors,
            market_beta,
            sector_beta,
            noise_sigma,
            anti_pairs,
            seed,
            out_dir,
        } => tagged("synth", {
            let base = match spec {
                Some(p) => toml::from_str::<SynthSpec>(&read_text(&p)?)
                    .map_err(|e| Error::Parse { line: 0, message: e.to_string() }),
                None => Ok(SynthSpec::default()),
            };
            base.and_then(|mut s| {
                if let Some(v) = n_stocks {
                    s.n_stocks = v;
                }
                if let Some(v) = n_obs {
                    s.n_obs = v;
                }
                if let Some(v) = n_sectors {
                    s.n_sectors = v;
                }
                if let Some(v) = market_beta {
                    s.market_beta = v;
                }
                if let Some(v) = sector_beta {
                    s.sector_beta = v;
                }
                if let Some(v) = noise_sigma {
                    s.noise_sigma = v;
                }
                if !anti_pairs.is_empty() {
                    s.anti_pairs = anti_pairs;
                }
                if let Some(v) = seed {
                    s.seed = v;
                }
                let m = generate(&s)?;
                println!("{} stocks, {} dates, {} sectors", m.panel.n_tickers(), m.panel.n_dates(), s.n_sectors);
                write(&out_dir.join("prices.csv"), |w| m.panel.write_wide(w))?;
                write(&out_dir.join("labels.csv"), |w| m.write_labels(w))
            })
        }),
        Command::Windows { run, count } => {
            let mut cfg = run.config()?;
            if let Some(k) = count {
                cfg.windows = Some(WindowSpec::Equal(k));
            }
            if cfg.windows.is_none() {
                return Err(Error::InvalidInput("no window spec: pass --count or set `windows` in the config".into())
                    .in_stage("windows"));
            }
            let out = run_pipeline(&cfg)?;
            if let Some(cmp) = &out.comparison {
                print!("{}", comparison_text(cmp));
            }
            println!("wrote {}", out.dir.display());
            Ok(())
        }
        Command::Compare { dirs, out } => tagged("compare", {
            compare_windows(&dirs).and_then(|cmp| {
                print!("{}", comparison_text(&cmp));
                match out {
                    Some(o) => write(&o, |w| cmp.write_csv(w)),
                    None => Ok(()),
                }
            })
        }),
        Command::Run { run } => {
            let cfg = run.config()?;
            let out = run_pipeline(&cfg)?;
            for w in &out.windows {
                println!(
                    "{}: {} tickers, {} observations, {} communities (codelength {:.4} bits)",
                    w.label,
                    w.tickers.len(),
                    w.n_obs,
                    w.selected.partition.groups.len(),
                    w.selected.partition.codelength.unwrap_or(0.0)
                );
            }
            if let Some(cmp) = &out.comparison {
                print!("{}", comparison_text(cmp));
            }
            println!("wrote {}", out.dir.display());
            Ok(())
        }
    }
}

fn comparison_text(cmp: &corrnet::pipeline::WindowComparison) -> String {
    let mut s = String::new();
    for w in &cmp.windows {
        let agr = w.agreement_with_previous.map(|a| format!("{a:.3}")).unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{}: {} communities, sizes {:?}, hub {}, agreement {agr}\n",
            w.dir.display(),
            w.communities,
            w.sizes,
            w.hub
        ));
    }
    s
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
