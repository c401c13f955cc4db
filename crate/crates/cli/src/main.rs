mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nbspec_core::suites::{SuiteConfig, SuiteContext, SuiteRegistry};
use nbspec_core::{corpus, load_graph, Error, Graph, C64};

use render::{GraphRun, Output};

#[derive(Parser)]
#[command(name = "nbspec", version, about = "Non-backtracking spectral checks on finite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate edge lists, printing a one-line summary per graph.
    Validate(RunArgs),
    /// Turn-sum spectrum, spectral radius and regularity verdict.
    Spectrum(RunArgs),
    /// Vertex/edge correspondence, transfer matrices and contraction bounds.
    Correspond(RunArgs),
    /// Dual eigen-measures and degeneracy of the pairing.
    Dual(RunArgs),
    /// Universal-cover checks: horocycles, Poisson transform, lift diagram.
    Cover(RunArgs),
    /// Every suite.
    Report(RunArgs),
    /// Selected suites by name.
    Run {
        #[arg(long = "suite", required = true)]
        suites: Vec<String>,
        #[command(flatten)]
        args: RunArgs,
    },
    /// List the available suites.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Edge-list file; repeatable. Without it the bundled corpus is used.
    #[arg(long = "graph", value_name = "PATH")]
    graphs: Vec<PathBuf>,
    /// Bundled corpus graph by name (c3, c4, k4, k23, petersen); repeatable.
    #[arg(long = "corpus", value_name = "NAME")]
    corpus: Vec<String>,
    #[arg(long, default_value_t = 0.25)]
    theta: f64,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Extra spectral parameter as `re,im`; repeatable.
    #[arg(long = "z", value_name = "RE,IM", value_parser = parse_complex, allow_hyphen_values = true)]
    z: Vec<C64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let re: f64 = re.trim().parse().map_err(|e| format!("bad real part `{re}`: {e}"))?;
    let im: f64 = im.trim().parse().map_err(|e| format!("bad imaginary part `{im}`: {e}"))?;
    Ok(C64::new(re, im))
}

impl RunArgs {
    fn config(&self) -> Result<SuiteConfig, Error> {
        let cfg = SuiteConfig {
            theta: self.theta,
            depth: self.depth,
            tol: self.tol,
            seed: self.seed,
            z_values: self.z.clone(),
            ..SuiteConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn load(&self) -> Result<Vec<(String, String, Graph)>, Error> {
        let mut out = Vec::new();
        for name in &self.corpus {
            let g = corpus::graph(name).ok_or_else(|| Error::Config(format!("no bundled graph named `{name}`")))?;
            out.push((name.clone(), format!("corpus:{name}"), g));
        }
        for path in &self.graphs {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            out.push((name, path.display().to_string(), load_graph(path)?));
        }
        if out.is_empty() {
            for (name, g) in corpus::all() {
                out.push((name.to_string(), format!("corpus:{name}"), g));
            }
        }
        Ok(out)
    }
}

fn suites_for(command: &Command, registry: &SuiteRegistry) -> Vec<String> {
    let pick = |names: &[&str]| names.iter().map(|s| s.to_string()).collect();
    match command {
        Command::Validate(_) | Command::List => Vec::new(),
        Command::Spectrum(_) => pick(&["spectrum"]),
        Command::Correspond(_) => pick(&["identity", "correspond", "locconst", "bounds"]),
        Command::Dual(_) => pick(&["dual", "degeneracy"]),
        Command::Cover(_) => pick(&["cover"]),
        Command::Report(_) => registry.names().iter().map(|s| s.to_string()).collect(),
        Command::Run { suites, .. } => suites.clone(),
    }
}

fn execute(cli: &Cli) -> Result<bool, Error> {
    let registry = SuiteRegistry::builtin();
    let (name, args) = match &cli.command {
        Command::List => {
            for n in registry.names() {
                println!("{n:<12} {}", registry.get(n)?.description());
            }
            return Ok(true);
        }
        Command::Validate(a) => ("validate", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Correspond(a) => ("correspond", a),
        Command::Dual(a) => ("dual", a),
        Command::Cover(a) => ("cover", a),
        Command::Report(a) => ("report", a),
        Command::Run { args, .. } => ("run", args),
    };
    let config = args.config()?;
    let suites = suites_for(&cli.command, &registry);
    for s in &suites {
        registry.get(s)?;
    }
    let graphs = args.load()?;

    let mut runs = Vec::new();
    for (gname, path, g) in &graphs {
        let ctx = SuiteContext { graph: g, graph_name: gname, config: &config };
        let reports = suites.iter().map(|s| registry.run(s, &ctx)).collect::<Result<Vec<_>, _>>()?;
        runs.push(GraphRun { name: gname.clone(), path: path.clone(), summary: g.summary(), reports });
    }
    let output = Output { command: name, config: &config, graphs: runs };
    let text = output.render(args.format)?;
    match &args.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io { path: p.display().to_string(), source: e })?,
        None => print!("{text}"),
    }
    Ok(output.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
