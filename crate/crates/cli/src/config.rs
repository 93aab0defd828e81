//! JSON run configuration and its translation into core objects.

use std::path::Path;

use memkernel::classical::classical_semimarkov_pair;
use memkernel::constructors::{
    collision_pair, dynamical_semigroup, generalized_collision_pair, hadamard_semimarkov_pair,
    noncommutative_collision_pair, projective_channel, reduced_semigroup_pair, semigroup_pair, semimarkov_pair,
    GkslSpec, WaitingTime,
};
use memkernel::random::{random_channel, random_density_matrix};
use memkernel::solver::{check_commuting_default, generalized_collision_kernel, semigroup_kernel, Kernel};
use memkernel::{
    CMat64, ClassicalPair64, DensityMatrix64, KrausSet64, LegitimatePair64, MapFamily64, Superoperator64, TimeGrid64,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::CliError;

/// Complex matrix as separate real and imaginary row arrays; `im` defaults
/// to zero.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixConfig {
    pub fn build(&self, d: usize, what: &str) -> Result<CMat64, CliError> {
        let rows = self.re.len();
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|r| r.len() == d);
        if !shape_ok(&self.re) || self.im.as_ref().is_some_and(|im| !shape_ok(im)) {
            return Err(CliError::validation(format!(
                "{what}: expected a {d}x{d} matrix, got {rows} rows"
            )));
        }
        Ok(CMat64::from_fn(d, d, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            Complex64::new(self.re[i][j], im)
        }))
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub n_steps: usize,
}

/// Density matrices. Basis indices are 0-based (`{"basis": 1}` is `|1><1|`).
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateConfig {
    Basis(usize),
    Density(MatrixConfig),
    MaximallyMixed,
    /// Drawn from the run's seeded generator.
    Random,
}

impl StateConfig {
    pub fn build(&self, d: usize, rng: &mut ChaCha8Rng, what: &str) -> Result<DensityMatrix64, CliError> {
        match self {
            Self::Basis(k) if *k < d => Ok(DensityMatrix64::basis(d, *k)),
            Self::Basis(k) => Err(CliError::validation(format!("{what}: basis index {k} out of range for d = {d}"))),
            Self::Density(m) => DensityMatrix64::new(m.build(d, what)?).map_err(|e| CliError::from_core(e, what)),
            Self::MaximallyMixed => Ok(DensityMatrix64::maximally_mixed(d)),
            Self::Random => Ok(random_density_matrix(rng, d)),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelConfig {
    Identity,
    Kraus(Vec<MatrixConfig>),
    Unitary(MatrixConfig),
    /// `rho -> sigma Tr(rho)`.
    Replacement(StateConfig),
    Random { rank: usize },
}

impl ChannelConfig {
    pub fn build(&self, d: usize, rng: &mut ChaCha8Rng, what: &str) -> Result<Superoperator64, CliError> {
        match self {
            Self::Identity => Ok(Superoperator64::identity(d)),
            Self::Kraus(ks) => {
                let ops = ks
                    .iter()
                    .enumerate()
                    .map(|(i, k)| k.build(d, &format!("{what} Kraus operator {i}")))
                    .collect::<Result<Vec<_>, _>>()?;
                let set = KrausSet64::new(ops).map_err(|e| CliError::from_core(e, what))?;
                Ok(Superoperator64::from_kraus(&set))
            }
            Self::Unitary(u) => Ok(Superoperator64::conjugation(&u.build(d, what)?)),
            Self::Replacement(s) => Ok(projective_channel(&s.build(d, rng, what)?)),
            Self::Random { rank } if *rank >= 1 => Ok(Superoperator64::from_kraus(&random_channel(rng, d, *rank))),
            Self::Random { .. } => Err(CliError::validation(format!("{what}: Kraus rank must be at least 1"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaitingConfig {
    Exponential { rate: f64 },
    Oscillating { omega: f64 },
    /// Density sampled on the run grid, one value per node.
    Tabulated { density: Vec<f64> },
}

impl WaitingConfig {
    pub fn build(&self, grid: TimeGrid64) -> Result<WaitingTime<f64>, CliError> {
        match self {
            Self::Exponential { rate } => WaitingTime::exponential(*rate),
            Self::Oscillating { omega } => WaitingTime::oscillating(*omega),
            Self::Tabulated { density } => WaitingTime::tabulated(grid, density.clone()),
        }
        .map_err(|e| CliError::from_core(e, "waiting time"))
    }
}

/// GKSL data: `H` (zero when absent) and jump operators.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GkslConfig {
    #[serde(default)]
    pub hamiltonian: Option<MatrixConfig>,
    #[serde(default)]
    pub jumps: Vec<MatrixConfig>,
}

impl GkslConfig {
    pub fn build(&self, d: usize, what: &str) -> Result<GkslSpec<f64>, CliError> {
        let h = match &self.hamiltonian {
            Some(h) => h.build(d, &format!("{what} Hamiltonian"))?,
            None => CMat64::zeros(d, d),
        };
        let jumps = self
            .jumps
            .iter()
            .enumerate()
            .map(|(i, k)| k.build(d, &format!("{what} jump operator {i}")))
            .collect::<Result<Vec<_>, _>>()?;
        GkslSpec::new(h, jumps).map_err(|e| CliError::from_core(e, what))
    }
}

/// Dynamical map `F(t)` used by the collision models.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyConfig {
    Identity,
    /// `F(t) = e^{Lt}` for the given GKSL generator.
    Gksl(GkslConfig),
}

impl FamilyConfig {
    fn build(&self, d: usize, grid: TimeGrid64) -> Result<(MapFamily64, MapFamily64), CliError> {
        match self {
            Self::Identity => Ok((MapFamily64::identity(grid, d), MapFamily64::zero(grid, d))),
            Self::Gksl(g) => Ok(dynamical_semigroup(&g.build(d, "family generator")?.generator(), grid)),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Semigroup {
        dim: usize,
        #[serde(default)]
        hamiltonian: Option<MatrixConfig>,
        #[serde(default)]
        jumps: Vec<MatrixConfig>,
        /// Second generator folded into the no-jump part.
        #[serde(default)]
        extra: Option<GkslConfig>,
    },
    ReducedSemigroup {
        system_dim: usize,
        env_dim: usize,
        #[serde(default)]
        hamiltonian: Option<MatrixConfig>,
        #[serde(default)]
        jumps: Vec<MatrixConfig>,
        environment_state: StateConfig,
    },
    Semimarkov {
        dim: usize,
        channel: ChannelConfig,
        waiting: WaitingConfig,
    },
    HadamardSemimarkov {
        dim: usize,
        dephasing: f64,
        channel: ChannelConfig,
        waiting: WaitingConfig,
    },
    Collision {
        dim: usize,
        rate: f64,
        family: FamilyConfig,
    },
    GeneralizedCollision {
        dim: usize,
        family: FamilyConfig,
        channel: ChannelConfig,
        waiting: WaitingConfig,
    },
    NoncommutativeCollision {
        dim: usize,
        /// Kraus-form jump operators of the constant CP family `Φ`.
        phi: Vec<MatrixConfig>,
        #[serde(default)]
        hamiltonian: Option<MatrixConfig>,
        family: FamilyConfig,
        channel: ChannelConfig,
    },
    ClassicalSemimarkov {
        /// Column-stochastic: `jump[i][j]` is the probability of `j -> i`.
        jump: Vec<Vec<f64>>,
        waiting: WaitingConfig,
    },
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Semigroup { .. } => "semigroup",
            Self::ReducedSemigroup { .. } => "reduced_semigroup",
            Self::Semimarkov { .. } => "semimarkov",
            Self::HadamardSemimarkov { .. } => "hadamard_semimarkov",
            Self::Collision { .. } => "collision",
            Self::GeneralizedCollision { .. } => "generalized_collision",
            Self::NoncommutativeCollision { .. } => "noncommutative_collision",
            Self::ClassicalSemimarkov { .. } => "classical_semimarkov",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub trajectory_csv: Option<String>,
    #[serde(default)]
    pub report_json: Option<String>,
    #[serde(default)]
    pub laplace_s_list: Option<Vec<f64>>,
}

pub const DEFAULT_S_LIST: [f64; 3] = [0.5, 1.0, 2.0];
pub const DEFAULT_SERIES_ORDER: usize = 30;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub method: Option<String>,
    /// Series order used by `--method all`.
    #[serde(default)]
    pub series_order: Option<usize>,
    #[serde(default)]
    pub initial_state: Option<StateConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("invalid config: {e}")))
    }

    pub fn time_grid(&self) -> Result<TimeGrid64, CliError> {
        TimeGrid64::new(self.grid.t_max, self.grid.n_steps).map_err(|e| CliError::from_core(e, "grid"))
    }

    pub fn s_list(&self) -> Result<Vec<f64>, CliError> {
        let s = self.outputs.laplace_s_list.clone().unwrap_or_else(|| DEFAULT_S_LIST.to_vec());
        if s.is_empty() || s.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(CliError::validation("laplace_s_list must hold positive finite values"));
        }
        Ok(s)
    }
}

/// A quantum pair together with the kernel form of its dynamics when one is
/// known in closed form.
pub struct QuantumModel {
    pub pair: LegitimatePair64,
    pub kernel: Option<(Kernel<f64>, MapFamily64)>,
}

pub enum Model {
    Quantum(QuantumModel),
    Classical(ClassicalPair64),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Self::Quantum(q) => q.pair.dim(),
            Self::Classical(c) => c.dim(),
        }
    }
}

fn require_dim(d: usize) -> Result<(), CliError> {
    if d == 0 {
        Err(CliError::validation("dimension must be positive"))
    } else {
        Ok(())
    }
}

/// Build the pair described by `cfg.model` on `grid`.
pub fn build_model(cfg: &RunConfig, grid: TimeGrid64, rng: &mut ChaCha8Rng) -> Result<Model, CliError> {
    let core = |e| CliError::from_core(e, cfg.model.name());
    let quantum = |pair, kernel| Ok(Model::Quantum(QuantumModel { pair, kernel }));
    match &cfg.model {
        ModelConfig::Semigroup {
            dim,
            hamiltonian,
            jumps,
            extra,
        } => {
            require_dim(*dim)?;
            let spec = GkslConfig {
                hamiltonian: hamiltonian.clone(),
                jumps: jumps.clone(),
            }
            .build(*dim, "generator")?;
            match extra {
                None => {
                    let pair = semigroup_pair(&spec, grid, None).map_err(core)?;
                    let kernel = semigroup_kernel(&spec, grid).map_err(core)?;
                    quantum(pair, Some(kernel))
                }
                Some(x) => {
                    let l2 = x.build(*dim, "extra generator")?.generator();
                    quantum(semigroup_pair(&spec, grid, Some(&l2)).map_err(core)?, None)
                }
            }
        }
        ModelConfig::ReducedSemigroup {
            system_dim,
            env_dim,
            hamiltonian,
            jumps,
            environment_state,
        } => {
            require_dim(*system_dim)?;
            require_dim(*env_dim)?;
            let spec = GkslConfig {
                hamiltonian: hamiltonian.clone(),
                jumps: jumps.clone(),
            }
            .build(system_dim * env_dim, "composite generator")?;
            let omega = environment_state.build(*env_dim, rng, "environment state")?;
            quantum(reduced_semigroup_pair(&spec, &omega, grid).map_err(core)?, None)
        }
        ModelConfig::Semimarkov { dim, channel, waiting } => {
            require_dim(*dim)?;
            let e = channel.build(*dim, rng, "channel")?;
            let w = waiting.build(grid)?;
            quantum(semimarkov_pair(&e, &w, grid).map_err(core)?, None)
        }
        ModelConfig::HadamardSemimarkov {
            dim,
            dephasing,
            channel,
            waiting,
        } => {
            require_dim(*dim)?;
            let e = channel.build(*dim, rng, "channel")?;
            let w = waiting.build(grid)?;
            quantum(hadamard_semimarkov_pair(*dephasing, &e, &w, grid).map_err(core)?, None)
        }
        ModelConfig::Collision { dim, rate, family } => {
            require_dim(*dim)?;
            let (f, fd) = family.build(*dim, grid)?;
            let pair = collision_pair(&f, Some(&fd), *rate).map_err(core)?;
            let w = WaitingTime::exponential(*rate).map_err(core)?;
            let kernel = generalized_collision_kernel(&f, Some(&fd), &Superoperator64::identity(*dim), &w).map_err(core)?;
            quantum(pair, Some(kernel))
        }
        ModelConfig::GeneralizedCollision {
            dim,
            family,
            channel,
            waiting,
        } => {
            require_dim(*dim)?;
            let (f, fd) = family.build(*dim, grid)?;
            let e = channel.build(*dim, rng, "channel")?;
            let w = waiting.build(grid)?;
            let pair = generalized_collision_pair(&f, Some(&fd), &e, &w).map_err(core)?;
            // The closed-form kernel acts from the left, so it describes the
            // same dynamics only when the transforms commute.
            let kernel = match check_commuting_default(&pair) {
                Ok(()) => Some(generalized_collision_kernel(&f, Some(&fd), &e, &w).map_err(core)?),
                Err(_) => None,
            };
            quantum(pair, kernel)
        }
        ModelConfig::NoncommutativeCollision {
            dim,
            phi,
            hamiltonian,
            family,
            channel,
        } => {
            require_dim(*dim)?;
            let d = *dim;
            let phi_map = GkslConfig {
                hamiltonian: None,
                jumps: phi.clone(),
            }
            .build(d, "phi")?
            .jump_map();
            let phi_family = MapFamily64::constant(grid, &phi_map);
            let h = match hamiltonian {
                Some(h) => h.build(d, "Hamiltonian")?,
                None => CMat64::zeros(d, d),
            };
            let (f, fd) = family.build(d, grid)?;
            let e = channel.build(d, rng, "channel")?;
            let nc = noncommutative_collision_pair(&phi_family, |_| h.clone(), &f, Some(&fd), &e).map_err(core)?;
            quantum(nc.pair, None)
        }
        ModelConfig::ClassicalSemimarkov { jump, waiting } => {
            let m = jump.len();
            require_dim(m)?;
            if jump.iter().any(|r| r.len() != m) {
                return Err(CliError::validation(format!("jump matrix must be {m}x{m}")));
            }
            let pi = DMatrix::from_fn(m, m, |i, j| jump[i][j]);
            let w = waiting.build(grid)?;
            Ok(Model::Classical(classical_semimarkov_pair(&pi, &w, grid).map_err(core)?))
        }
    }
}
