//! TOML run configuration.
//!
//! ```toml
//! dim = 2
//! m = 8
//! k_list = [1, 2]
//! boundary = "dirichlet"          # or "periodic"
//! strains = [[0.5, 0.1, -0.2]]    # upper triangles, row by row
//! deltas = [1.0, 0.1, 0.01, 0.0]
//! t_schedule = [1.0, 10.0, 100.0, 1000.0]
//! output_dir = "out"
//!
//! [density]
//! name = "laminate-two-phase"
//! params = [1.0, 4.0]
//! alpha = 1.0                     # optional growth overrides
//! beta = 4.0
//!
//! [solver]
//! tolerance = 1e-7
//! max_iters = 2000
//! restarts = 2
//! seed = 0
//! ```
//!
//! Optional tables `[recession]`, `[dual]`, `[decompose]` and `[verify]`
//! configure the matching subcommands.

use hencky_core::analysis::default_deltas;
use hencky_core::cell::{Boundary, ConjugateConfig, SolverConfig};
use hencky_core::density::{make_builtin, Growth, MicroDensity, BUILTIN_NAMES};
use hencky_core::tensor::sym_len;
use hencky_core::{MicroDensity64, SymTensor64};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err<T>(field: &str, msg: impl std::fmt::Display) -> Result<T, ConfigError> {
    Err(ConfigError(format!("config field `{field}`: {msg}")))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: Option<f64>,
    pub max_iters: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RecessionSection {
    pub directions: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DualSection {
    pub stresses: Option<Vec<Vec<f64>>>,
    pub radius: Option<f64>,
    pub grid: Option<usize>,
    pub resolution: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DecomposeSection {
    /// Each entry is `random`, `gradient` or `solenoidal`.
    pub fields: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub growth_samples: Option<usize>,
    pub lemma_samples: Option<usize>,
    pub rank_one_samples: Option<usize>,
    pub dual_m: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub density: DensitySection,
    pub dim: usize,
    #[serde(default)]
    pub strains: Vec<Vec<f64>>,
    pub k_list: Option<Vec<usize>>,
    pub m: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub t_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverSection,
    pub boundary: Option<String>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub recession: RecessionSection,
    #[serde(default)]
    pub dual: DualSection,
    #[serde(default)]
    pub decompose: DecomposeSection,
    #[serde(default)]
    pub verify: VerifySection,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub density_name: String,
    pub params: Vec<f64>,
    pub density: MicroDensity64,
    pub dim: usize,
    pub strains: Vec<SymTensor64>,
    pub k_list: Vec<usize>,
    pub m: usize,
    pub deltas: Vec<f64>,
    pub t_schedule: Vec<f64>,
    pub solver: SolverConfig<f64>,
    pub boundary: Boundary,
    pub output_dir: PathBuf,
    pub directions: Vec<SymTensor64>,
    pub stresses: Vec<SymTensor64>,
    pub conjugate: ConjugateConfig<f64>,
    pub fields: Vec<FieldKind>,
    pub growth_samples: usize,
    pub lemma_samples: usize,
    pub rank_one_samples: usize,
    pub dual_m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Random,
    Gradient,
    Solenoidal,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Random => "random",
            FieldKind::Gradient => "gradient",
            FieldKind::Solenoidal => "solenoidal",
        }
    }
}

/// Built-in configuration used when no file is given.
pub const DEFAULT_CONFIG: &str = r#"
dim = 2
m = 8
k_list = [1]
boundary = "periodic"
strains = [
    [1.0, 0.0, 1.0],
    [0.5, 0.3, -0.2],
    [0.2, -0.7, 0.4],
]
deltas = [1.0, 0.1, 0.01, 0.001, 0.0001, 0.0]
t_schedule = [1.0, 10.0, 100.0, 1000.0]

[density]
name = "laminate-two-phase"
params = [1.0, 4.0]

[solver]
tolerance = 1e-7
max_iters = 2000
restarts = 2
seed = 0

[recession]
directions = [[1.0, 0.0, -1.0], [0.0, 1.0, 0.0]]

[dual]
stresses = [[0.0, 0.0, 0.0], [1.0, 0.5, 1.0]]

[decompose]
fields = ["random", "gradient", "solenoidal"]
"#;

fn tensors(field: &str, rows: &[Vec<f64>], dim: usize) -> Result<Vec<SymTensor64>, ConfigError> {
    let want = sym_len(dim);
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let name = format!("{field}[{i}]");
            if r.len() != want {
                return err(&name, format!("expected {want} upper-triangle entries for dim {dim}, got {}", r.len()));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return err(&name, "entries must be finite");
            }
            SymTensor64::from_upper(dim, r).or_else(|e| err(&name, e))
        })
        .collect()
}

fn positive_list(field: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return err(field, "entries must be positive and finite");
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let dim = raw.dim;
        if dim != 2 && dim != 3 {
            return err("dim", format!("must be 2 or 3, got {dim}"));
        }
        let d = &raw.density;
        if !BUILTIN_NAMES.contains(&d.name.as_str()) {
            return err("density.name", format!("unknown density '{}' (known: {})", d.name, BUILTIN_NAMES.join(", ")));
        }
        let mut density: MicroDensity64 = make_builtin(&d.name, &d.params, dim).or_else(|e| err("density.params", e))?;
        if d.alpha.is_some() || d.beta.is_some() {
            let g = density.growth();
            let growth = Growth::new(d.alpha.unwrap_or(g.alpha), d.beta.unwrap_or(g.beta))
                .or_else(|e| err("density.alpha", e))?;
            density = density.with_growth(growth);
        }

        let strains = tensors("strains", &raw.strains, dim)?;
        let k_list = raw.k_list.unwrap_or_else(|| vec![1]);
        if k_list.is_empty() || k_list.contains(&0) {
            return err("k_list", "must be a non-empty list of positive integers");
        }
        if k_list.windows(2).any(|w| w[1] <= w[0]) {
            return err("k_list", "must be strictly ascending");
        }
        let m = raw.m.unwrap_or(8);
        if m < 2 {
            return err("m", "must be at least 2");
        }
        let deltas = raw.deltas.unwrap_or_else(default_deltas);
        if deltas.is_empty() || deltas.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return err("deltas", "must be a non-empty list of non-negative numbers");
        }
        if deltas.windows(2).any(|w| w[1] >= w[0]) {
            return err("deltas", "must be strictly descending");
        }
        if *deltas.last().unwrap() != 0.0 {
            return err("deltas", "last entry must be 0");
        }
        let t_schedule = raw.t_schedule.unwrap_or_else(|| vec![1.0, 10.0, 100.0, 1000.0]);
        positive_list("t_schedule", &t_schedule)?;
        if t_schedule.len() < 3 || t_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return err("t_schedule", "need at least three strictly increasing entries");
        }

        let defaults = SolverConfig::<f64>::default();
        let s = &raw.solver;
        let solver = SolverConfig {
            tolerance: s.tolerance.unwrap_or(defaults.tolerance),
            max_iters: s.max_iters.unwrap_or(defaults.max_iters),
            restarts: s.restarts.unwrap_or(defaults.restarts),
            seed: s.seed.unwrap_or(defaults.seed),
            smoothing: defaults.smoothing,
        };
        if !(solver.tolerance > 0.0) || !solver.tolerance.is_finite() {
            return err("solver.tolerance", "must be positive");
        }
        if solver.max_iters == 0 {
            return err("solver.max_iters", "must be positive");
        }
        if solver.restarts == 0 {
            return err("solver.restarts", "must be at least 1");
        }

        let boundary = match raw.boundary.as_deref().unwrap_or("dirichlet") {
            "dirichlet" => Boundary::Dirichlet,
            "periodic" => Boundary::Periodic,
            other => return err("boundary", format!("expected 'dirichlet' or 'periodic', got '{other}'")),
        };

        let directions = match &raw.recession.directions {
            Some(rows) => tensors("recession.directions", rows, dim)?,
            None => strains.iter().map(|s| s.dev()).filter(|p| p.norm() > 0.0).collect(),
        };
        for (i, p) in directions.iter().enumerate() {
            if p.trace().abs() > 1e-12 * p.norm().max(1.0) {
                return err(&format!("recession.directions[{i}]"), "must be traceless");
            }
        }
        let stresses = match &raw.dual.stresses {
            Some(rows) => tensors("dual.stresses", rows, dim)?,
            None => vec![SymTensor64::zeros(dim).expect("valid dim")],
        };
        let cd = ConjugateConfig::<f64>::default();
        let conjugate = ConjugateConfig {
            radius: raw.dual.radius.unwrap_or(cd.radius),
            grid: raw.dual.grid.unwrap_or(cd.grid),
            resolution: raw.dual.resolution.unwrap_or(cd.resolution),
            ..cd
        };
        conjugate.validate().or_else(|e| err("dual", e))?;

        let fields = raw
            .decompose
            .fields
            .clone()
            .unwrap_or_else(|| vec!["random".into(), "gradient".into(), "solenoidal".into()])
            .iter()
            .enumerate()
            .map(|(i, f)| match f.as_str() {
                "random" => Ok(FieldKind::Random),
                "gradient" => Ok(FieldKind::Gradient),
                "solenoidal" => Ok(FieldKind::Solenoidal),
                other => err(
                    &format!("decompose.fields[{i}]"),
                    format!("expected random, gradient or solenoidal, got '{other}'"),
                ),
            })
            .collect::<Result<Vec<_>, _>>()?;

        let v = &raw.verify;
        let dual_m = v.dual_m.unwrap_or(4);
        if dual_m < 2 {
            return err("verify.dual_m", "must be at least 2");
        }
        Ok(Self {
            density_name: d.name.clone(),
            params: d.params.clone(),
            density,
            dim,
            strains,
            k_list,
            m,
            deltas,
            t_schedule,
            solver,
            boundary,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            directions,
            stresses,
            conjugate,
            fields,
            growth_samples: v.growth_samples.unwrap_or(10_000),
            lemma_samples: v.lemma_samples.unwrap_or(10_000),
            rank_one_samples: v.rank_one_samples.unwrap_or(10_000),
            dual_m,
        })
    }

    pub fn default_config() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("built-in config is valid")
    }

    pub fn density(&self) -> &MicroDensity<f64> {
        &self.density
    }
}
