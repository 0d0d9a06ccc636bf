//! `r3bp` command-line front end.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use config::*;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    /// Config rejected; `pointer` locates the offending field.
    Config { pointer: String, message: String },
    Precondition(String),
    Convergence(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Precondition(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config { pointer, message } => write!(f, "config error at {pointer}: {message}"),
            CliError::Precondition(m) => write!(f, "{m}"),
            CliError::Convergence(m) => write!(f, "convergence failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<r3bp_core::Error> for CliError {
    fn from(e: r3bp_core::Error) -> Self {
        if e.is_convergence() {
            CliError::Convergence(e.to_string())
        } else {
            CliError::Precondition(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

const CSV_HELP: &str = "\
Trajectory CSV files (shoot, continue; written with --out) have the columns
  t,z1,z2,w1,w2,K
with t the regularized time, (z1, z2, w1, w2) the Birkhoff coordinates and K
the regularized Hamiltonian at that state. Rows are integrator step
boundaries over the full symmetric orbit [0, 2 tau].

Exit codes: 0 success, 2 invalid config or violated precondition, 3
convergence failure (the result document is still written).";

#[derive(Parser, Debug)]
#[command(name = "r3bp", version, about = "Collision orbits of the regularized restricted three-body problem", after_help = CSV_HELP)]
pub struct Cli {
    /// JSON config for the subcommand; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for the result document and CSV files; stdout otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed for sampling commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for seed grids and sampling.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct EnergyArgs {
    #[arg(long)]
    pub mu: Option<f64>,
    /// Absolute energy level.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "d_offset")]
    pub d: Option<f64>,
    /// Energy level above H(L1).
    #[arg(long, allow_hyphen_values = true)]
    pub d_offset: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct SearchArgs {
    #[arg(long, value_enum)]
    pub primary: Option<PrimaryArg>,
    #[arg(long)]
    pub n_psi: Option<usize>,
    #[arg(long)]
    pub t_max: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lagrange points and critical values.
    Lagrange {
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long, value_enum)]
        frame: Option<FrameArg>,
    },
    /// Critical values and the regime of an energy level.
    Energies {
        #[command(flatten)]
        energy: EnergyArgs,
    },
    /// Sampled Liouville pairings on a regularized energy surface.
    Transversality {
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, value_enum)]
        surface: Option<SurfaceArg>,
        #[arg(long, allow_hyphen_values = true)]
        level: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Pullback identity and collision-locus extension on random samples.
    Regcheck {
        #[arg(long)]
        states: Option<usize>,
    },
    /// Reeb chords between meridians of S^1 x S^2.
    Chords {
        #[arg(long)]
        phi0: Option<f64>,
        #[arg(long)]
        action_bound: Option<f64>,
        #[arg(long, value_enum)]
        homotopy: Option<HomotopyArg>,
    },
    /// Robbin-Salamon index of the linearized flow over [0, k pi].
    Index {
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Forced GF(2) chain complex and its homology.
    Homology {
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        window: Option<Vec<i32>>,
        #[arg(long)]
        equivariant: bool,
    },
    /// Symmetric collision orbits by shooting.
    Shoot {
        #[command(flatten)]
        energy: EnergyArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Initial fiber angle; with --t, a single solve.
        #[arg(long, requires = "t", allow_hyphen_values = true)]
        psi: Option<f64>,
        #[arg(long, requires = "psi")]
        t: Option<f64>,
    },
    /// Continuation of a symmetric orbit in mu.
    Continue {
        #[command(flatten)]
        energy: EnergyArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        mu_target: Option<f64>,
        #[arg(long, requires = "t", allow_hyphen_values = true)]
        psi: Option<f64>,
        #[arg(long, requires = "psi")]
        t: Option<f64>,
    },
    /// Period and periodicity of the rotating Kepler problem.
    Kepler {
        #[arg(long, allow_hyphen_values = true)]
        d: Option<f64>,
    },
    /// Distinct classes and periodicity of found orbits.
    Classify {
        #[command(flatten)]
        energy: EnergyArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Print the JSON schema of a subcommand's config.
    Schema { name: String },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lagrange { .. } => "lagrange",
            Command::Energies { .. } => "energies",
            Command::Transversality { .. } => "transversality",
            Command::Regcheck { .. } => "regcheck",
            Command::Chords { .. } => "chords",
            Command::Index { .. } => "index",
            Command::Homology { .. } => "homology",
            Command::Shoot { .. } => "shoot",
            Command::Continue { .. } => "continue",
            Command::Kepler { .. } => "kepler",
            Command::Classify { .. } => "classify",
            Command::Schema { .. } => "schema",
        }
    }
}

/// Config schemas by subcommand name.
pub fn schemas() -> Vec<(&'static str, schemars::schema::RootSchema)> {
    use schemars::schema_for;
    vec![
        ("lagrange", schema_for!(LagrangeConfig)),
        ("energies", schema_for!(EnergiesConfig)),
        ("transversality", schema_for!(TransversalityConfig)),
        ("regcheck", schema_for!(RegcheckConfig)),
        ("chords", schema_for!(ChordsConfig)),
        ("index", schema_for!(IndexConfig)),
        ("homology", schema_for!(HomologyConfig)),
        ("shoot", schema_for!(ShootConfig)),
        ("continue", schema_for!(ContinueConfig)),
        ("kepler", schema_for!(KeplerConfig)),
        ("classify", schema_for!(ClassifyConfig)),
    ]
}

struct Overrides(Vec<(&'static str, Value)>, Vec<&'static str>);

impl Overrides {
    fn set<T: Serialize>(&mut self, pointer: &'static str, v: Option<T>) {
        if let Some(v) = v {
            self.0.push((pointer, serde_json::to_value(v).expect("flag value")));
        }
    }

    fn energy(&mut self, e: &EnergyArgs) {
        self.set("/mu", e.mu);
        if e.d.is_some() {
            self.1.push("/d_offset");
        }
        if e.d_offset.is_some() {
            self.1.push("/d");
        }
        self.set("/d", e.d);
        self.set("/d_offset", e.d_offset);
    }

    fn search(&mut self, s: &SearchArgs) {
        self.set("/primary", s.primary);
        self.set("/seed_grid/n_psi", s.n_psi);
        self.set("/seed_grid/t_max", s.t_max);
    }

    fn guess(&mut self, psi: Option<f64>, t: Option<f64>) {
        if let (Some(psi), Some(t)) = (psi, t) {
            self.0.push(("/guess", json!({ "psi": psi, "t": t })));
        }
    }
}

fn overrides(cli: &Cli) -> Overrides {
    let mut o = Overrides(Vec::new(), Vec::new());
    match &cli.command {
        Command::Lagrange { mu, frame } => {
            o.set("/mu", *mu);
            o.set("/frame", *frame);
        }
        Command::Energies { energy } => o.energy(energy),
        Command::Transversality { mu, surface, level, samples } => {
            o.set("/mu", *mu);
            o.set("/surface", *surface);
            o.set("/level", *level);
            o.set("/sampling/n_samples", *samples);
            o.set("/sampling/seed", cli.seed);
        }
        Command::Regcheck { states } => {
            o.set("/n_states", *states);
            o.set("/seed", cli.seed);
        }
        Command::Chords { phi0, action_bound, homotopy } => {
            o.set("/phi0", *phi0);
            o.set("/action_bound", *action_bound);
            o.set("/homotopy", *homotopy);
        }
        Command::Index { family, k } => {
            o.set("/family", *family);
            o.set("/k", *k);
        }
        Command::Homology { window, equivariant } => {
            o.set("/window", window.clone());
            if *equivariant {
                o.set("/equivariant", Some(true));
            }
        }
        Command::Shoot { energy, search, psi, t } => {
            o.energy(energy);
            o.search(search);
            o.guess(*psi, *t);
        }
        Command::Continue { energy, search, mu_target, psi, t } => {
            o.energy(energy);
            o.search(search);
            o.set("/mu_target", *mu_target);
            o.guess(*psi, *t);
        }
        Command::Kepler { d } => o.set("/d", *d),
        Command::Classify { energy, search, horizon } => {
            o.energy(energy);
            o.search(search);
            o.set("/classify/periodicity_horizon", *horizon);
        }
        Command::Schema { .. } => {}
    }
    o
}

fn load_config(cli: &Cli) -> Result<Value, CliError> {
    let mut v = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config { pointer: String::new(), message: e.to_string() })?
        }
        None => json!({}),
    };
    if !v.is_object() {
        return Err(CliError::Config { pointer: String::new(), message: "config must be a JSON object".into() });
    }
    let o = overrides(cli);
    for p in o.1 {
        remove_pointer(&mut v, p);
    }
    for (p, x) in o.0 {
        set_pointer(&mut v, p, x);
    }
    Ok(v)
}

/// Parses the config, then re-serializes it with all defaults filled in.
fn resolved<C: serde::de::DeserializeOwned + Serialize>(raw: &Value) -> Result<(C, Value), CliError> {
    let c: C = parse(raw)?;
    let v = serde_json::to_value(&c).expect("config");
    Ok((c, v))
}

fn dispatch(cli: &Cli, raw: &Value) -> Result<(Value, commands::Outcome), CliError> {
    let csv = cli.out.is_some();
    macro_rules! run {
        ($ty:ty, $f:expr) => {{
            let (c, v): ($ty, Value) = resolved(raw)?;
            let out = $f(&c)?;
            Ok((v, out))
        }};
    }
    match &cli.command {
        Command::Lagrange { .. } => run!(LagrangeConfig, commands::lagrange),
        Command::Energies { .. } => run!(EnergiesConfig, commands::energies),
        Command::Transversality { .. } => run!(TransversalityConfig, commands::transversality),
        Command::Regcheck { .. } => run!(RegcheckConfig, commands::regcheck),
        Command::Chords { .. } => run!(ChordsConfig, commands::chords),
        Command::Index { .. } => run!(IndexConfig, commands::index),
        Command::Homology { .. } => run!(HomologyConfig, commands::homology_cmd),
        Command::Shoot { .. } => run!(ShootConfig, |c| commands::shoot_cmd(c, csv)),
        Command::Continue { .. } => run!(ContinueConfig, |c| commands::continue_cmd(c, csv)),
        Command::Kepler { .. } => run!(KeplerConfig, commands::kepler),
        Command::Classify { .. } => run!(ClassifyConfig, commands::classify),
        Command::Schema { .. } => unreachable!("handled before dispatch"),
    }
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match try_run(&cli) {
        Ok(failure) => failure.map_or(0, |e| {
            eprintln!("r3bp: {e}");
            e.exit_code()
        }),
        Err(e) => {
            eprintln!("r3bp: {e}");
            e.exit_code()
        }
    }
}

fn try_run(cli: &Cli) -> Result<Option<CliError>, CliError> {
    if let Command::Schema { name } = &cli.command {
        let (_, s) = schemas()
            .into_iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| CliError::Precondition(format!("precondition violated: no subcommand named {name}")))?;
        print!("{}", String::from_utf8(output::to_json_bytes(&s)).expect("utf8"));
        return Ok(None);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Precondition("precondition violated: --threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Precondition(e.to_string()))?;
    }
    let raw = load_config(cli)?;
    let (config, outcome) = dispatch(cli, &raw)?;
    let status = match &outcome.failure {
        None => "ok",
        Some(CliError::Convergence(_)) => "convergence_failure",
        Some(_) => "failed",
    };
    let doc = output::Document {
        command: cli.command.name(),
        version: VERSION,
        config_hash: output::config_hash(&config),
        config: &config,
        status,
        result: outcome.result,
    };
    let bytes = output::to_json_bytes(&doc);
    match &cli.out {
        Some(dir) => {
            output::write_file(dir, &format!("{}.json", cli.command.name()), &bytes)?;
            for (name, text) in &outcome.files {
                output::write_file(dir, name, text.as_bytes())?;
            }
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(outcome.failure)
}
