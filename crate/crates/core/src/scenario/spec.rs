//! Scenario schema.

use crate::cutoff::CutoffSpec;
use crate::error::{CalcError, Result};
use crate::model::{build_model, ModelSpec, OperatorKind};
use crate::resolvent::ContourSpec;
use crate::traces::{FitSettings, HeatSettings};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    #[serde(default = "default_operator")]
    pub operator: OperatorSpec,
    #[serde(default)]
    pub settings: NumericSettings,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

fn default_operator() -> OperatorSpec {
    OperatorSpec::Named(OperatorKind::TransverseLaplacian)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSpec {
    Named(OperatorKind),
    /// serialized symbol document, inline
    Symbol(serde_json::Value),
    /// serialized symbol document, path relative to the scenario file
    SymbolFile(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    #[serde(default = "one")]
    pub nx: usize,
    #[serde(default = "one")]
    pub ny: usize,
    #[serde(default = "circle_nodes")]
    pub circle_nodes: usize,
    #[serde(default = "cutoff")]
    pub cutoff: [f64; 2],
}

fn one() -> usize {
    1
}

fn circle_nodes() -> usize {
    crate::homogeneous::DEFAULT_CIRCLE_NODES
}

fn cutoff() -> [f64; 2] {
    [0.5, 0.9]
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { nx: 1, ny: 1, circle_nodes: circle_nodes(), cutoff: cutoff() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSettings {
    #[serde(default)]
    pub grid: GridSettings,
    /// transverse mode bound `|n| <= N`
    #[serde(default = "truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub leaf_truncation: usize,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub contour: ContourSpec,
    #[serde(default)]
    pub fit: FitSettings,
    #[serde(default)]
    pub heat: HeatSettings,
}

fn truncation() -> usize {
    512
}

impl Default for NumericSettings {
    fn default() -> Self {
        NumericSettings {
            grid: GridSettings::default(),
            truncation: truncation(),
            leaf_truncation: 0,
            depth: None,
            contour: ContourSpec::default(),
            fit: FitSettings::default(),
            heat: HeatSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `w / Lx^p` on the leaf diagonal blocks
    LeafProjection {
        #[serde(default = "unit_weight")]
        weight: f64,
    },
    /// random band-limited convolution kernel (seed offset from the scenario seed)
    Random {
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        y_dependent: bool,
    },
    /// periodic heat kernel along the leaves
    Unit { width: f64 },
    /// random modulated-Gaussian kernel on a Kronecker model
    KroneckerRandom {
        #[serde(default)]
        seed: u64,
        #[serde(default = "two")]
        count: usize,
        #[serde(default = "one_i")]
        max_shift: i64,
    },
}

fn unit_weight() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

fn one_i() -> i64 {
    1
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::LeafProjection { weight: 1.0 }
    }
}

/// A tangential kernel times `theta |eta|^order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolSource {
    Operator,
    Weight(WeightSpec),
    Inline(serde_json::Value),
    File(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleFunction {
    Heat { t: f64 },
    Zeta { z: [f64; 2] },
}

fn default_window() -> [f64; 2] {
    [-1.1, 1.2]
}

fn default_iterates() -> usize {
    1
}

fn default_depth() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Compose {
        left: SymbolSource,
        right: SymbolSource,
    },
    Parametrix {
        #[serde(default = "default_depth")]
        depth: usize,
    },
    Power {
        z: [f64; 2],
        #[serde(default = "default_depth")]
        depth: usize,
    },
    Tr {
        symbol: SymbolSource,
    },
    Residue {
        symbol: SymbolSource,
    },
    ZetaTable {
        #[serde(default)]
        weight: WeightSpec,
        #[serde(default = "default_window")]
        window: [f64; 2],
    },
    Heat {
        #[serde(default)]
        kernel: KernelSpec,
    },
    DimensionSpectrum {
        #[serde(default)]
        weights: Vec<WeightSpec>,
        #[serde(default = "default_iterates")]
        iterates: usize,
        #[serde(default)]
        window: Option<[f64; 2]>,
    },
    Sobolev {
        #[serde(default)]
        weight: WeightSpec,
        s: f64,
        k: f64,
    },
    Seminorm {
        #[serde(default)]
        weight: WeightSpec,
        s: f64,
        t: f64,
        l: f64,
    },
    CommutatorStudy {
        #[serde(default)]
        operator: Option<OperatorKind>,
        #[serde(default)]
        kernel: KernelSpec,
        truncations: Vec<usize>,
    },
    SchattenStudy {
        #[serde(default)]
        operator: Option<OperatorKind>,
        #[serde(default)]
        kernel: KernelSpec,
        truncation: usize,
    },
    Oracle {
        function: OracleFunction,
        #[serde(default)]
        kernel: Option<KernelSpec>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Compose { .. } => "compose",
            Task::Parametrix { .. } => "parametrix",
            Task::Power { .. } => "power",
            Task::Tr { .. } => "tr",
            Task::Residue { .. } => "residue",
            Task::ZetaTable { .. } => "zeta_table",
            Task::Heat { .. } => "heat",
            Task::DimensionSpectrum { .. } => "dimension_spectrum",
            Task::Sobolev { .. } => "sobolev",
            Task::Seminorm { .. } => "seminorm",
            Task::CommutatorStudy { .. } => "commutator_study",
            Task::SchattenStudy { .. } => "schatten_study",
            Task::Oracle { .. } => "oracle",
        }
    }
}

fn bad(msg: String) -> CalcError {
    CalcError::Precondition(msg)
}

impl KernelSpec {
    fn check(&self, product: bool) -> std::result::Result<(), String> {
        match self {
            KernelSpec::KroneckerRandom { count, .. } => {
                if product {
                    return Err("kronecker_random kernel on a product model".into());
                }
                if *count == 0 {
                    return Err("kronecker_random kernel with zero terms".into());
                }
            }
            _ if !product => return Err(format!("{self:?} kernel needs a product model")),
            KernelSpec::Unit { width } if !(*width > 0.0) => return Err(format!("unit kernel width {width} must be positive")),
            _ => {}
        }
        Ok(())
    }
}

fn window_ok(w: [f64; 2]) -> std::result::Result<(), String> {
    if w[0].is_finite() && w[1].is_finite() && w[0] < w[1] {
        Ok(())
    } else {
        Err(format!("empty window [{}, {}]", w[0], w[1]))
    }
}

impl Scenario {
    /// Checks everything decidable without numerics: schema version, model,
    /// grid and per-task preconditions.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let model = build_model(&self.model)?;
        let g = &self.settings.grid;
        if g.nx % 2 == 0 || g.ny % 2 == 0 {
            return Err(bad(format!("settings.grid: nx and ny must be odd, got {} and {}", g.nx, g.ny)));
        }
        CutoffSpec::new(g.cutoff[0], g.cutoff[1]).map_err(|e| bad(format!("settings.grid.cutoff: {e}")))?;
        if self.settings.truncation == 0 {
            return Err(bad("settings.truncation must be positive".into()));
        }
        let product = model.is_product();
        let named = matches!(self.operator, OperatorSpec::Named(_));
        for (i, t) in self.tasks.iter().enumerate() {
            let check = || -> std::result::Result<(), String> {
                let weight = |w: &WeightSpec| {
                    if !w.order.is_finite() {
                        return Err("weight order must be finite".to_string());
                    }
                    if !product {
                        return Err("weights need a product model".to_string());
                    }
                    w.kernel.check(true)
                };
                match t {
                    Task::Compose { left, right } => {
                        for s in [left, right] {
                            if let SymbolSource::Weight(w) = s {
                                weight(w)?;
                            }
                        }
                    }
                    Task::Tr { symbol } | Task::Residue { symbol } => {
                        if let SymbolSource::Weight(w) = symbol {
                            weight(w)?;
                        }
                    }
                    Task::Parametrix { .. } => {}
                    Task::Power { z, .. } => {
                        if !(z[0].is_finite() && z[1].is_finite()) {
                            return Err("power exponent must be finite".into());
                        }
                    }
                    Task::ZetaTable { weight: w, window } => {
                        weight(w)?;
                        window_ok(*window)?;
                    }
                    Task::Heat { kernel } => {
                        if !named {
                            return Err("heat needs a named model operator".into());
                        }
                        kernel.check(product)?;
                        let h = &self.settings.heat;
                        if !(h.t_min > 0.0 && h.t_max > 10.0 * h.t_min) {
                            return Err(format!("heat window [{}, {}] spans less than a decade", h.t_min, h.t_max));
                        }
                    }
                    Task::DimensionSpectrum { weights, window, .. } => {
                        weights.iter().try_for_each(weight)?;
                        if weights.is_empty() && !product {
                            return Err("default weight needs a product model".into());
                        }
                        if let Some(w) = window {
                            window_ok(*w)?;
                        }
                    }
                    Task::Sobolev { weight: w, s, k } => {
                        weight(w)?;
                        if !(*s > model.q as f64 && *k > model.p as f64) {
                            return Err(format!("trace-class check needs s > {} and k > {}, got s = {s}, k = {k}", model.q, model.p));
                        }
                    }
                    Task::Seminorm { weight: w, .. } => weight(w)?,
                    Task::CommutatorStudy { operator, kernel, truncations } => {
                        if operator.is_none() && !named {
                            return Err("commutator study needs a named model operator".into());
                        }
                        kernel.check(product)?;
                        if truncations.is_empty() || truncations.contains(&0) {
                            return Err("truncations must be nonempty and positive".into());
                        }
                    }
                    Task::SchattenStudy { operator, kernel, truncation } => {
                        if operator.is_none() && !named {
                            return Err("schatten study needs a named model operator".into());
                        }
                        kernel.check(product)?;
                        if *truncation == 0 {
                            return Err("truncation must be positive".into());
                        }
                    }
                    Task::Oracle { function, kernel } => {
                        if !named {
                            return Err("oracle needs a named model operator".into());
                        }
                        if let Some(k) = kernel {
                            k.check(product)?;
                        }
                        if let OracleFunction::Heat { t } = function {
                            if !(*t > 0.0) {
                                return Err(format!("heat time {t} must be positive"));
                            }
                        }
                    }
                }
                Ok(())
            };
            check().map_err(|m| bad(format!("tasks[{i}] ({}): {m}", t.name())))?;
        }
        Ok(())
    }
}
