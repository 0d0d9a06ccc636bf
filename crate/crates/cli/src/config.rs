use schemars::JsonSchema;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use r3bp_core::dynamics::{Frame, Primary};
use r3bp_core::orbit::{ClassifyOptions, ContinuationOptions, EnergySpec, IntegrationOptions, ShootOptions};
use r3bp_core::reeb::{ChordFamily, Homotopy};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FrameArg {
    Centered,
    Original,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Frame {
        match f {
            FrameArg::Centered => Frame::Centered,
            FrameArg::Original => Frame::Original,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PrimaryArg {
    Earth,
    Moon,
}

impl From<PrimaryArg> for Primary {
    fn from(p: PrimaryArg) -> Primary {
        match p {
            PrimaryArg::Earth => Primary::Earth,
            PrimaryArg::Moon => Primary::Moon,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceArg {
    MoserEarth,
    MoserMoon,
    MoserConnected,
    BirkhoffLifted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    G1,
    G2,
}

impl From<FamilyArg> for ChordFamily {
    fn from(f: FamilyArg) -> ChordFamily {
        match f {
            FamilyArg::G1 => ChordFamily::G1,
            FamilyArg::G2 => ChordFamily::G2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum HomotopyArg {
    TrivialOnly,
    All,
}

impl From<HomotopyArg> for Homotopy {
    fn from(h: HomotopyArg) -> Homotopy {
        match h {
            HomotopyArg::TrivialOnly => Homotopy::TrivialOnly,
            HomotopyArg::All => Homotopy::All,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct LagrangeConfig {
    pub mu: f64,
    pub frame: FrameArg,
}

impl Default for LagrangeConfig {
    fn default() -> Self {
        LagrangeConfig { mu: 0.01, frame: FrameArg::Centered }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct EnergiesConfig {
    pub mu: f64,
    /// Absolute level. Exclusive with `d_offset`.
    pub d: Option<f64>,
    /// Level above `H(L1)`, resolved per `mu`.
    pub d_offset: Option<f64>,
}

impl Default for EnergiesConfig {
    fn default() -> Self {
        EnergiesConfig { mu: 0.01, d: None, d_offset: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub delta: Option<f64>,
    pub neck_radius: Option<f64>,
    pub neck_fraction: f64,
    pub ray_max: f64,
    pub ray_steps: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let s = r3bp_core::regularization::SamplingSpec::default();
        SamplingConfig {
            n_samples: s.n_samples,
            seed: s.seed,
            delta: s.delta,
            neck_radius: s.neck_radius,
            neck_fraction: s.neck_fraction,
            ray_max: s.ray_max,
            ray_steps: s.ray_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct TransversalityConfig {
    pub mu: f64,
    pub surface: SurfaceArg,
    /// Absolute level; overrides `level_fraction`.
    pub level: Option<f64>,
    /// Level as `H(L1) +- fraction (H(L2) - H(L1))`, above for the connected
    /// surfaces and below for the single components.
    pub level_fraction: f64,
    pub sampling: SamplingConfig,
}

impl Default for TransversalityConfig {
    fn default() -> Self {
        TransversalityConfig {
            mu: 0.5,
            surface: SurfaceArg::MoserConnected,
            level: None,
            level_fraction: 1e-3,
            sampling: SamplingConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct RegcheckConfig {
    pub seed: u64,
    /// Random states per parameter pair.
    pub n_states: usize,
    pub n_params: usize,
    pub mu_range: [f64; 2],
    pub d_range: [f64; 2],
    /// Fiber momenta for the collision-extension check.
    pub n_fiber: usize,
}

impl Default for RegcheckConfig {
    fn default() -> Self {
        RegcheckConfig { seed: 0, n_states: 10_000, n_params: 5, mu_range: [0.01, 0.99], d_range: [-2.5, -1.3], n_fiber: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ChordsConfig {
    pub phi0: f64,
    pub action_bound: f64,
    pub homotopy: HomotopyArg,
}

impl Default for ChordsConfig {
    fn default() -> Self {
        ChordsConfig { phi0: 0.0, action_bound: 10.0, homotopy: HomotopyArg::TrivialOnly }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct IndexConfig {
    pub family: FamilyArg,
    /// Path over `[0, k pi]`.
    pub k: u32,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig { family: FamilyArg::G1, k: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct HomologyConfig {
    pub window: [i32; 2],
    pub equivariant: bool,
}

impl Default for HomologyConfig {
    fn default() -> Self {
        HomologyConfig { window: [-8, 9], equivariant: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SeedGrid {
    pub n_psi: usize,
    /// Upper bound on regularized chord time.
    pub t_max: f64,
}

impl Default for SeedGrid {
    fn default() -> Self {
        SeedGrid { n_psi: 64, t_max: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub newton_tol: f64,
    pub max_iter: usize,
    pub min_time: f64,
    pub fd_step: f64,
    pub require_own_component: bool,
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub drift_tol: f64,
    pub project: bool,
    pub singular_radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = ShootOptions::<f64>::default();
        let i = s.integration;
        Tolerances {
            newton_tol: s.tol,
            max_iter: s.max_iter,
            min_time: s.min_time,
            fd_step: s.fd_step,
            require_own_component: s.require_own_component,
            rtol: i.rtol,
            atol: i.atol,
            h_max: i.h_max,
            max_steps: i.max_steps,
            drift_tol: i.drift_tol,
            project: i.project,
            singular_radius: i.singular_radius,
        }
    }
}

impl Tolerances {
    pub fn integration(&self) -> IntegrationOptions<f64> {
        IntegrationOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.h_max,
            max_steps: self.max_steps,
            drift_tol: self.drift_tol,
            project: self.project,
            singular_radius: self.singular_radius,
        }
    }

    pub fn shoot(&self) -> ShootOptions<f64> {
        ShootOptions {
            tol: self.newton_tol,
            max_iter: self.max_iter,
            min_time: self.min_time,
            fd_step: self.fd_step,
            require_own_component: self.require_own_component,
            integration: self.integration(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Guess {
    pub psi: f64,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ShootConfig {
    pub mu: f64,
    pub d: Option<f64>,
    pub d_offset: Option<f64>,
    pub primary: PrimaryArg,
    pub seed_grid: SeedGrid,
    /// Single Newton solve from this guess instead of a grid search.
    pub guess: Option<Guess>,
    pub tolerances: Tolerances,
    /// Write one trajectory CSV per orbit (needs `--out`).
    pub csv: bool,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            mu: 0.0,
            d: None,
            d_offset: None,
            primary: PrimaryArg::Moon,
            seed_grid: SeedGrid::default(),
            guess: None,
            tolerances: Tolerances::default(),
            csv: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub fold_condition: f64,
    pub fold_growth: f64,
    pub jump_factor: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        let c = ContinuationOptions::<f64>::default();
        ContinuationConfig {
            initial_step: c.initial_step,
            min_step: c.min_step,
            max_step: c.max_step,
            fold_condition: c.fold_condition,
            fold_growth: c.fold_growth,
            jump_factor: c.jump_factor,
        }
    }
}

impl ContinuationConfig {
    pub fn options(&self) -> ContinuationOptions<f64> {
        ContinuationOptions {
            initial_step: self.initial_step,
            min_step: self.min_step,
            max_step: self.max_step,
            fold_condition: self.fold_condition,
            fold_growth: self.fold_growth,
            jump_factor: self.jump_factor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ContinueConfig {
    pub mu: f64,
    pub mu_target: f64,
    pub d: Option<f64>,
    pub d_offset: Option<f64>,
    pub primary: PrimaryArg,
    /// Starting orbit; without it, the first consecutive orbit of a grid
    /// search at `mu` is used.
    pub guess: Option<Guess>,
    pub seed_grid: SeedGrid,
    pub tolerances: Tolerances,
    pub continuation: ContinuationConfig,
    pub csv: bool,
}

impl Default for ContinueConfig {
    fn default() -> Self {
        ContinueConfig {
            mu: 0.0,
            mu_target: 0.01,
            d: None,
            d_offset: None,
            primary: PrimaryArg::Moon,
            guess: None,
            seed_grid: SeedGrid::default(),
            tolerances: Tolerances::default(),
            continuation: ContinuationConfig::default(),
            csv: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct KeplerConfig {
    pub d: f64,
    pub tol: f64,
    pub max_den: u64,
}

impl Default for KeplerConfig {
    fn default() -> Self {
        KeplerConfig { d: (8.0 * std::f64::consts::PI).powf(-1.0 / 3.0), tol: 1e-12, max_den: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySettings {
    pub quantum: f64,
    pub periodicity_horizon: f64,
    pub periodicity_tol: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        let c = ClassifyOptions::<f64>::default();
        ClassifySettings { quantum: c.quantum, periodicity_horizon: c.periodicity_horizon, periodicity_tol: c.periodicity_tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub mu: f64,
    pub d: Option<f64>,
    pub d_offset: Option<f64>,
    pub primary: PrimaryArg,
    pub seed_grid: SeedGrid,
    pub tolerances: Tolerances,
    pub classify: ClassifySettings,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            mu: 0.0,
            d: None,
            d_offset: None,
            primary: PrimaryArg::Moon,
            seed_grid: SeedGrid::default(),
            tolerances: Tolerances::default(),
            classify: ClassifySettings::default(),
        }
    }
}

pub const DEFAULT_D_OFFSET: f64 = 1e-3;

/// `d` and `d_offset` are exclusive; neither means the default offset.
pub fn energy_spec(d: Option<f64>, d_offset: Option<f64>) -> Result<EnergySpec<f64>, CliError> {
    match (d, d_offset) {
        (Some(_), Some(_)) => Err(CliError::Config { pointer: "/d".into(), message: "d and d_offset are exclusive".into() }),
        (Some(d), None) => Ok(EnergySpec::Absolute(d)),
        (None, Some(o)) => Ok(EnergySpec::OffsetAboveL1(o)),
        (None, None) => Ok(EnergySpec::OffsetAboveL1(DEFAULT_D_OFFSET)),
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut s = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => s.push_str(&format!("/{index}")),
            Segment::Map { key } => s.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => s.push_str(&format!("/{variant}")),
            Segment::Unknown => s.push_str("/?"),
        }
    }
    s
}

/// Typed config from a JSON value; errors carry the JSON pointer of the
/// offending field.
pub fn parse<C: DeserializeOwned>(value: &Value) -> Result<C, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| CliError::Config {
        pointer: pointer_of(e.path()),
        message: e.inner().to_string(),
    })
}

/// Sets `pointer` in `root`, creating intermediate objects.
pub fn set_pointer(root: &mut Value, pointer: &str, v: Value) {
    let mut cur = root;
    let keys: Vec<&str> = pointer.trim_start_matches('/').split('/').collect();
    for (i, k) in keys.iter().enumerate() {
        if !cur.is_object() {
            *cur = Value::Object(Default::default());
        }
        let map = cur.as_object_mut().expect("object");
        if i + 1 == keys.len() {
            map.insert((*k).to_string(), v);
            return;
        }
        cur = map.entry((*k).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
}

pub fn remove_pointer(root: &mut Value, pointer: &str) {
    let (parent, key) = pointer.rsplit_once('/').expect("pointer");
    let p = if parent.is_empty() { Some(&mut *root) } else { root.pointer_mut(parent) };
    if let Some(Value::Object(m)) = p {
        m.remove(key);
    }
}
