//! TOML scenario configuration for the `crossfield` binary.
//!
//! A config file has up to four sections — `[params]`, `[grid]`, `[evolver]`
//! — plus exactly one `[scenario.<kind>]` table naming what to run:
//!
//! * `verify-solutions` — Schrödinger residuals of the closed-form families.
//! * `evolve-oracle`    — split-step propagation against the analytic state.
//! * `lorentz-check`    — Ehrenfest force balance on a coherent packet.
//! * `resistivity-scan` — Hall quantization ladder and longitudinal profile.
//! * `fourier-check`    — momentum-space identity of the envelopes.
//! * `general-solution` — residuals of operator-built superpositions.
//!
//! Every section is optional except the scenario; omitted fields take the
//! defaults baked into this module, so the empty sections and a bare
//! `[scenario.verify-solutions]` line are already a complete config. Unknown
//! keys are rejected, not ignored — a typo fails the parse with the key named
//! rather than silently running something else.
//!
//! The resolved config is re-emitted verbatim as `manifest.toml` next to the
//! scenario outputs; feeding that manifest back through `--config` reproduces
//! the run.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::params::PhysicalParams;
use crate::states::Family;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Version stamp written into every `summary.json`.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable giving the default output root; the scenario kind is
/// appended as a subdirectory. `--out` and `output_dir` both take precedence.
pub const OUTPUT_ENV_VAR: &str = "CROSSFIELD_OUT";

/// Fallback output root when neither flag, config, nor environment names one.
pub const DEFAULT_OUTPUT_ROOT: &str = "crossfield-out";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Where to write outputs; overridden by `--out`, defaulted from
    /// [`OUTPUT_ENV_VAR`] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub evolver: EvolverSection,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub mass: f64,
    pub charge: f64,
    pub light_speed: f64,
    pub hbar: f64,
    pub field_b: f64,
    pub field_e: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let p = PhysicalParams::natural(1.0, 1.0);
        Self {
            mass: p.mass,
            charge: p.charge,
            light_speed: p.light_speed,
            hbar: p.hbar,
            field_b: p.field_b,
            field_e: p.field_e,
        }
    }
}

impl ParamsSection {
    pub fn to_params(self) -> PhysicalParams {
        PhysicalParams {
            mass: self.mass,
            charge: self.charge,
            light_speed: self.light_speed,
            hbar: self.hbar,
            field_b: self.field_b,
            field_e: self.field_e,
        }
    }
}

/// Doubly periodic window [−half_width, half_width) on each axis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub half_width: f64,
    pub n_x: usize,
    pub n_y: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { half_width: 12.8, n_x: 256, n_y: 256 }
    }
}

impl GridSection {
    pub fn to_grid(self) -> GridSpec {
        GridSpec {
            x_min: -self.half_width,
            x_max: self.half_width,
            y_min: -self.half_width,
            y_max: self.half_width,
            n_x: self.n_x,
            n_y: self.n_y,
            periodic_x: true,
            periodic_y: true,
        }
    }
}

/// Split-step settings shared by the propagation scenarios.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolverSection {
    /// Time step as a fraction of the cyclotron period.
    pub dt_fraction: f64,
    /// Run length in cyclotron periods.
    pub periods: f64,
    /// Trajectory record cadence in steps; the step count is rounded up to a
    /// multiple so records stay uniformly spaced.
    pub record_every: usize,
}

impl Default for EvolverSection {
    fn default() -> Self {
        Self { dt_fraction: 5e-4, periods: 1.0, record_every: 50 }
    }
}

/// One scenario table, keyed by kind: `[scenario.verify-solutions]` etc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "verify-solutions")]
    VerifySolutions(VerifyConfig),
    #[serde(rename = "evolve-oracle")]
    EvolveOracle(EvolveConfig),
    #[serde(rename = "lorentz-check")]
    LorentzCheck(LorentzConfig),
    #[serde(rename = "resistivity-scan")]
    ResistivityScan(ResistivityConfig),
    #[serde(rename = "fourier-check")]
    FourierCheck(FourierConfig),
    #[serde(rename = "general-solution")]
    GeneralSolution(GeneralConfig),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::VerifySolutions(_) => "verify-solutions",
            Scenario::EvolveOracle(_) => "evolve-oracle",
            Scenario::LorentzCheck(_) => "lorentz-check",
            Scenario::ResistivityScan(_) => "resistivity-scan",
            Scenario::FourierCheck(_) => "fourier-check",
            Scenario::GeneralSolution(_) => "general-solution",
        }
    }

    /// Overwrite the scenario's primary tolerance (the one `--tolerance`
    /// adjusts); secondary gates keep their configured values.
    pub fn set_primary_tolerance(&mut self, tol: f64) {
        match self {
            Scenario::VerifySolutions(c) => c.tolerance = tol,
            Scenario::EvolveOracle(c) => c.overlap_threshold = tol,
            Scenario::LorentzCheck(c) => c.tolerance = tol,
            Scenario::ResistivityScan(c) => c.tolerance = tol,
            Scenario::FourierCheck(c) => c.tolerance = tol,
            Scenario::GeneralSolution(c) => c.tolerance = tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub families: Vec<String>,
    pub levels: Vec<usize>,
    /// Check times as fractions of the cyclotron period.
    pub time_fractions: Vec<f64>,
    /// Family offset where one applies: δy for `psi`, δx for `psi-bar`,
    /// (δx, δt) for `ground`.
    pub offset: f64,
    /// Residual gate ‖Ĥψ − iħ∂ₜψ‖/‖ψ‖.
    pub tolerance: f64,
    /// Row/column stride of the emitted current-density CSV; 0 disables it.
    pub current_stride: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            families: ["psi", "psi-bar", "zeta", "zeta-bar"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            levels: vec![0, 1, 2],
            time_fractions: vec![0.0, 0.3, 0.7],
            offset: 0.5,
            tolerance: 1e-5,
            current_stride: 4,
        }
    }
}

/// The propagation method follows the family's compact axis: y-compact
/// families run on the full 2-D grid; the x-envelope families (uniform in
/// |Ψ|² along y, so no window contains them) run as a 1-D drift-frame
/// propagation of their reduced x-factor, which writes per-checkpoint
/// tracking numbers instead of the trajectory CSV and state dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub family: String,
    pub level: usize,
    /// |⟨numeric, analytic⟩| / (‖numeric‖‖analytic‖) at the final time.
    pub overlap_threshold: f64,
    /// Allowed |‖ψ(t_f)‖ − ‖ψ(0)‖|.
    pub norm_tolerance: f64,
    /// Re-run at Δ/2 and demand the terminal error drop like a second-order
    /// method (ratio in [3, 5]).
    pub convergence_check: bool,
    /// Write the evolved state as `final_state.bin` (2-D path only).
    pub write_final_state: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            family: "ground".into(),
            level: 0,
            overlap_threshold: 0.999,
            norm_tolerance: 1e-9,
            convergence_check: false,
            write_final_state: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LorentzConfig {
    /// Packet center (x₀, y₀).
    pub center: [f64; 2],
    /// Plane-wave kick (kₓ, k_y).
    pub kick: [f64; 2],
    /// Force-balance defect gate, relative to the run's own force scale.
    pub tolerance: f64,
    /// Generator drift gate in units of mω_cℓ.
    pub generator_tolerance: f64,
}

impl Default for LorentzConfig {
    fn default() -> Self {
        Self {
            center: [0.0, 1.0],
            kick: [0.0, 0.0],
            tolerance: 1e-3,
            generator_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResistivityConfig {
    pub l_min: u32,
    pub l_max: u32,
    /// Time winding shared by every row.
    pub k: u32,
    /// Hall cell height; must be an integer number of grid steps for the
    /// translation-return measurement.
    pub delta_y: f64,
    /// Midpoint subdivisions per cell axis in the quadrature cross-check.
    pub subdivisions: usize,
    /// Gate on |ρ_H/ρ_K − l| and on the quadrature/algebra mismatch.
    pub tolerance: f64,
    /// Gate on the translation-return phase defect.
    pub invariance_tolerance: f64,
    /// Sample count of the longitudinal profile; 0 skips it.
    pub longitudinal_points: usize,
    /// Probe offset Δx ahead of the drifting envelope center.
    pub longitudinal_delta_x: f64,
}

impl Default for ResistivityConfig {
    fn default() -> Self {
        Self {
            l_min: 1,
            l_max: 5,
            k: 1,
            delta_y: 2.5,
            subdivisions: 64,
            tolerance: 1e-9,
            invariance_tolerance: 1e-8,
            longitudinal_points: 10,
            longitudinal_delta_x: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourierConfig {
    pub levels: Vec<usize>,
    /// Drift offsets a in F{e^{iaξ}φ_n} = iⁿφ_n(·+a).
    pub shifts: Vec<f64>,
    pub points: usize,
    pub half_width: f64,
    pub tolerance: f64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self {
            levels: vec![0, 1, 2, 3],
            shifts: vec![0.0, 0.25, 1.0],
            points: 4096,
            half_width: 14.0,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneralConfig {
    /// Terms built on the y-envelope ladder (π̂′_y powers).
    pub y_branch: Vec<TermConfig>,
    /// Terms built on the x-envelope ladder (p̂ₓ powers).
    pub x_branch: Vec<TermConfig>,
    pub time_fractions: Vec<f64>,
    pub tolerance: f64,
}

impl Default for GeneralConfig {
    fn default() -> Self {
        // Same-branch mix: the two branches sample different spectral
        // structure, and mixing them costs grid bandwidth (see
        // `ops::general_solution`), so the default stays on one ladder.
        Self {
            y_branch: Vec::new(),
            x_branch: vec![
                TermConfig { coeff_re: 1.0, ..TermConfig::level(0) },
                TermConfig { coeff_im: 0.7, energies: 1, ..TermConfig::level(1) },
            ],
            time_fractions: vec![0.0, 0.3],
            tolerance: 1e-5,
        }
    }
}

/// One superposition term: coeff · (generator)^translations (Ê)^energies
/// applied to the level-n base state of its branch.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TermConfig {
    pub coeff_re: f64,
    pub coeff_im: f64,
    pub n: usize,
    pub translations: u32,
    pub energies: u32,
}

impl TermConfig {
    fn level(n: usize) -> Self {
        Self { n, ..Default::default() }
    }
}

impl Default for TermConfig {
    fn default() -> Self {
        Self { coeff_re: 0.0, coeff_im: 0.0, n: 0, translations: 0, energies: 0 }
    }
}

impl ScenarioConfig {
    /// Built-in config for a scenario kind; what the CLI runs when no
    /// `--config` is given. `default_for("verify-solutions")` etc.
    pub fn default_for(kind: &str) -> Result<Self> {
        let scenario = match kind {
            "verify-solutions" => Scenario::VerifySolutions(VerifyConfig::default()),
            "evolve-oracle" => Scenario::EvolveOracle(EvolveConfig::default()),
            "lorentz-check" => Scenario::LorentzCheck(LorentzConfig::default()),
            "resistivity-scan" => Scenario::ResistivityScan(ResistivityConfig::default()),
            "fourier-check" => Scenario::FourierCheck(FourierConfig::default()),
            "general-solution" => Scenario::GeneralSolution(GeneralConfig::default()),
            other => {
                return Err(Error::Config(format!("unknown scenario kind `{other}`")));
            }
        };
        Ok(Self {
            output_dir: None,
            params: ParamsSection::default(),
            grid: GridSection::default(),
            evolver: EvolverSection::default(),
            scenario,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The resolved config as TOML, suitable for `manifest.toml`.
    pub fn to_manifest_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> PhysicalParams {
        self.params.to_params()
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.to_grid()
    }

    /// Semantic checks beyond the schema. Everything reported here is a
    /// config error (exit code 2), as opposed to a failed run (exit code 1).
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |msg: String| Error::Config(msg);
        self.params()
            .validate()
            .map_err(|e| cfg_err(format!("[params] {e}")))?;
        self.grid_spec()
            .validate()
            .map_err(|e| cfg_err(format!("[grid] {e}")))?;
        let ev = &self.evolver;
        if !(ev.dt_fraction > 0.0 && ev.dt_fraction <= crate::evolve::MAX_DT_FRACTION) {
            return Err(cfg_err(format!(
                "[evolver] dt_fraction must lie in (0, {}], got {}",
                crate::evolve::MAX_DT_FRACTION,
                ev.dt_fraction
            )));
        }
        if !(ev.periods > 0.0 && ev.periods.is_finite()) {
            return Err(cfg_err(format!("[evolver] periods must be > 0, got {}", ev.periods)));
        }

        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(cfg_err(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let nonempty = |name: &str, len: usize| -> Result<()> {
            if len == 0 {
                Err(cfg_err(format!("{name} must not be empty")))
            } else {
                Ok(())
            }
        };

        match &self.scenario {
            Scenario::VerifySolutions(c) => {
                nonempty("[scenario] families", c.families.len())?;
                nonempty("[scenario] levels", c.levels.len())?;
                nonempty("[scenario] time_fractions", c.time_fractions.len())?;
                for f in &c.families {
                    Family::from_label(f).map_err(|e| cfg_err(format!("[scenario] {e}")))?;
                }
                if c.time_fractions.iter().any(|t| !t.is_finite() || *t < 0.0) {
                    return Err(cfg_err("[scenario] time_fractions must be finite and >= 0".into()));
                }
                if !c.offset.is_finite() {
                    return Err(cfg_err(format!("[scenario] offset must be finite, got {}", c.offset)));
                }
                positive("[scenario] tolerance", c.tolerance)
            }
            Scenario::EvolveOracle(c) => {
                Family::from_label(&c.family).map_err(|e| cfg_err(format!("[scenario] {e}")))?;
                if c.family == "ground" && c.level != 0 {
                    return Err(cfg_err(format!(
                        "[scenario] the ground family has no level {}, only 0",
                        c.level
                    )));
                }
                if !(c.overlap_threshold > 0.0 && c.overlap_threshold <= 1.0) {
                    return Err(cfg_err(format!(
                        "[scenario] overlap_threshold must lie in (0, 1], got {}",
                        c.overlap_threshold
                    )));
                }
                positive("[scenario] norm_tolerance", c.norm_tolerance)
            }
            Scenario::LorentzCheck(c) => {
                for v in c.center.iter().chain(c.kick.iter()) {
                    if !v.is_finite() {
                        return Err(cfg_err("[scenario] center/kick must be finite".into()));
                    }
                }
                if ev.record_every == 0 {
                    return Err(cfg_err(
                        "[evolver] record_every must be >= 1: the force balance is \
                         differenced from the recorded trajectory"
                            .into(),
                    ));
                }
                positive("[scenario] tolerance", c.tolerance)?;
                positive("[scenario] generator_tolerance", c.generator_tolerance)
            }
            Scenario::ResistivityScan(c) => {
                if c.l_min == 0 || c.l_min > c.l_max {
                    return Err(cfg_err(format!(
                        "[scenario] need 1 <= l_min <= l_max, got {}..{}",
                        c.l_min, c.l_max
                    )));
                }
                positive("[scenario] delta_y", c.delta_y)?;
                // Both the time winding and the quadrature cross-check divide
                // by the driven current, so the scan needs a drive.
                if self.params.field_e == 0.0 {
                    return Err(cfg_err(
                        "[scenario] resistivity-scan requires field_e > 0".into(),
                    ));
                }
                // The translation return rolls the grid, so the cell height
                // must land on a whole number of y steps.
                let h_y = self.grid_spec().step_y();
                let steps = c.delta_y / h_y;
                if (steps - steps.round()).abs() > 1e-9 {
                    return Err(cfg_err(format!(
                        "[scenario] delta_y = {} is not an integer multiple of the grid step {h_y}",
                        c.delta_y
                    )));
                }
                if c.subdivisions < 4 {
                    return Err(cfg_err(format!(
                        "[scenario] subdivisions must be >= 4, got {}",
                        c.subdivisions
                    )));
                }
                if c.longitudinal_points == 1 {
                    return Err(cfg_err(
                        "[scenario] longitudinal_points must be 0 (skip) or >= 2".into(),
                    ));
                }
                positive("[scenario] tolerance", c.tolerance)?;
                positive("[scenario] invariance_tolerance", c.invariance_tolerance)?;
                positive("[scenario] longitudinal_delta_x", c.longitudinal_delta_x)
            }
            Scenario::FourierCheck(c) => {
                nonempty("[scenario] levels", c.levels.len())?;
                nonempty("[scenario] shifts", c.shifts.len())?;
                if c.shifts.iter().any(|a| !a.is_finite()) {
                    return Err(cfg_err("[scenario] shifts must be finite".into()));
                }
                if c.points < 64 {
                    return Err(cfg_err(format!(
                        "[scenario] points must be >= 64, got {}",
                        c.points
                    )));
                }
                positive("[scenario] half_width", c.half_width)?;
                positive("[scenario] tolerance", c.tolerance)
            }
            Scenario::GeneralSolution(c) => {
                nonempty(
                    "[scenario] y_branch + x_branch",
                    c.y_branch.len() + c.x_branch.len(),
                )?;
                for (branch, terms) in [("y_branch", &c.y_branch), ("x_branch", &c.x_branch)] {
                    for (i, term) in terms.iter().enumerate() {
                        if term.coeff_re == 0.0 && term.coeff_im == 0.0 {
                            return Err(cfg_err(format!(
                                "[scenario] {branch}[{i}] has a zero coefficient"
                            )));
                        }
                        let order = term.translations + term.energies;
                        if order > crate::ops::SOLUTION_TERM_MAX_ORDER {
                            return Err(cfg_err(format!(
                                "[scenario] {branch}[{i}] has operator order {order}, max {}",
                                crate::ops::SOLUTION_TERM_MAX_ORDER
                            )));
                        }
                    }
                }
                nonempty("[scenario] time_fractions", c.time_fractions.len())?;
                if c.time_fractions.iter().any(|t| !t.is_finite() || *t < 0.0) {
                    return Err(cfg_err("[scenario] time_fractions must be finite and >= 0".into()));
                }
                positive("[scenario] tolerance", c.tolerance)
            }
        }
    }
}

/// Output directory precedence: explicit flag, then the config's
/// `output_dir`, then `$CROSSFIELD_OUT/<kind>`, then
/// `crossfield-out/<kind>` under the working directory.
pub fn resolve_output_dir(cfg: &ScenarioConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output_dir {
        return p.clone();
    }
    let root = std::env::var_os(OUTPUT_ENV_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
    root.join(cfg.scenario.kind())
}
