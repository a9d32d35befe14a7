//! Versioned run configuration for the verification suites and the
//! command-line tools.
//!
//! The schema is JSON with an explicit `version` field; unknown keys are
//! rejected so a config file always means what it says. Tolerances ship
//! with per-suite defaults and can be overridden per run. The canonical
//! serialisation (stable field order, shortest-roundtrip floats) is hashed
//! into run manifests.

use serde::{Deserialize, Serialize};

use crate::deform::MultiplicativeDeformation;
use crate::error::{Error, Result};
use crate::grid::SpacetimeGrid;
use crate::integrable::ScatteringFunction;
use crate::qmatrix::QMatrix;
use crate::quadrature::OnShellRule;
use crate::rfunc::DeformationFunction;

pub const CONFIG_VERSION: u32 = 1;

pub const SUITE_NAMES: [&str; 6] = [
    "algebra",
    "deformation",
    "state-compatibility",
    "wedge-locality",
    "fock",
    "integrable",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub grid: GridSpec,
    pub state: ShellSpec,
    pub fock: FockSpec,
    pub deformation: DeformationSpec,
    #[serde(default = "default_suites")]
    pub suites: Vec<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub d: usize,
    pub points_per_axis: usize,
    pub extent: f64,
    pub truncation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleSpec {
    #[serde(rename = "uniform-rapidity")]
    UniformRapidity,
    #[serde(rename = "gauss-legendre")]
    GaussLegendre,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub mass: f64,
    pub rule: RuleSpec,
    pub nodes: usize,
    pub span: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockSpec {
    pub particle_cap: usize,
    pub rule: RuleSpec,
    pub nodes: usize,
    pub span: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationSpec {
    pub c: f64,
    /// Blaschke zeros as `[re, im]` pairs, `im > 0`, closed under
    /// reflection across the imaginary axis.
    pub zeros: Vec<[f64; 2]>,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub d: usize,
    pub lambda_ladder: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "d_r_relations")]
    pub r_relations: f64,
    #[serde(default = "d_algebra")]
    pub algebra: f64,
    #[serde(default = "d_compatibility")]
    pub compatibility: f64,
    #[serde(default = "d_compat_mutation_floor")]
    pub compatibility_mutation_floor: f64,
    #[serde(default = "d_necessity_exponential")]
    pub necessity_exponential: f64,
    #[serde(default = "d_necessity_witness_floor")]
    pub necessity_witness_floor: f64,
    #[serde(default = "d_tau_outside")]
    pub tau_outside: f64,
    #[serde(default = "d_locality")]
    pub locality: f64,
    #[serde(default = "d_locality_witness_factor")]
    pub locality_witness_factor: f64,
    #[serde(default = "d_fock_ccr")]
    pub fock_ccr: f64,
    #[serde(default = "d_fock_twisted")]
    pub fock_twisted: f64,
    #[serde(default = "d_fock_gns")]
    pub fock_gns: f64,
    #[serde(default = "d_smatrix_pipeline")]
    pub smatrix_pipeline: f64,
    #[serde(default = "d_smatrix_modulus")]
    pub smatrix_modulus: f64,
    #[serde(default = "d_smatrix_phase_floor")]
    pub smatrix_phase_floor: f64,
    #[serde(default = "d_integrable_relations")]
    pub integrable_relations: f64,
    #[serde(default = "d_integrable_zf")]
    pub integrable_zf: f64,
}

fn d_r_relations() -> f64 {
    1e-12
}
fn d_algebra() -> f64 {
    1e-10
}
fn d_compatibility() -> f64 {
    1e-6
}
fn d_compat_mutation_floor() -> f64 {
    1e-2
}
fn d_necessity_exponential() -> f64 {
    1e-12
}
fn d_necessity_witness_floor() -> f64 {
    0.1
}
fn d_tau_outside() -> f64 {
    2e-2
}
fn d_locality() -> f64 {
    1e-5
}
fn d_locality_witness_factor() -> f64 {
    10.0
}
fn d_fock_ccr() -> f64 {
    1e-10
}
fn d_fock_twisted() -> f64 {
    1e-9
}
fn d_fock_gns() -> f64 {
    1e-8
}
fn d_smatrix_pipeline() -> f64 {
    1e-6
}
fn d_smatrix_modulus() -> f64 {
    1e-10
}
fn d_smatrix_phase_floor() -> f64 {
    1e-3
}
fn d_integrable_relations() -> f64 {
    1e-10
}
fn d_integrable_zf() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            r_relations: d_r_relations(),
            algebra: d_algebra(),
            compatibility: d_compatibility(),
            compatibility_mutation_floor: d_compat_mutation_floor(),
            necessity_exponential: d_necessity_exponential(),
            necessity_witness_floor: d_necessity_witness_floor(),
            tau_outside: d_tau_outside(),
            locality: d_locality(),
            locality_witness_factor: d_locality_witness_factor(),
            fock_ccr: d_fock_ccr(),
            fock_twisted: d_fock_twisted(),
            fock_gns: d_fock_gns(),
            smatrix_pipeline: d_smatrix_pipeline(),
            smatrix_modulus: d_smatrix_modulus(),
            smatrix_phase_floor: d_smatrix_phase_floor(),
            integrable_relations: d_integrable_relations(),
            integrable_zf: d_integrable_zf(),
        }
    }
}

fn default_seed() -> u64 {
    20260815
}

fn default_suites() -> Vec<String> {
    SUITE_NAMES.iter().map(|s| s.to_string()).collect()
}

fn default_output_dir() -> String {
    "out".to_string()
}

impl RunConfig {
    /// The default desk-scale configuration.
    pub fn shipped_default() -> RunConfig {
        RunConfig {
            version: CONFIG_VERSION,
            seed: default_seed(),
            grid: GridSpec {
                d: 2,
                points_per_axis: 128,
                extent: 10.0,
                truncation: 4,
            },
            state: ShellSpec {
                mass: 1.0,
                rule: RuleSpec::UniformRapidity,
                nodes: 64,
                span: 3.0,
            },
            fock: FockSpec {
                particle_cap: 3,
                rule: RuleSpec::UniformRapidity,
                nodes: 64,
                span: 3.0,
            },
            deformation: DeformationSpec {
                c: 0.25,
                zeros: vec![[0.0, 2.0], [1.0, 0.5], [-1.0, 0.5]],
                kappa: 1.0,
                kappa_prime: 0.0,
                d: 2,
                lambda_ladder: vec![1.0, 0.3, 0.1, 0.03, 0.01],
            },
            suites: default_suites(),
            output_dir: default_output_dir(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::ConfigInvalid(format!("config does not parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<RunConfig> {
        RunConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::ConfigInvalid(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.grid.d != self.deformation.d {
            return Err(Error::ConfigInvalid(
                "grid and deformation dimensions disagree".into(),
            ));
        }
        for s in &self.suites {
            if !SUITE_NAMES.contains(&s.as_str()) {
                return Err(Error::ConfigInvalid(format!(
                    "unknown suite '{s}' (known: {})",
                    SUITE_NAMES.join(", ")
                )));
            }
        }
        if self.deformation.lambda_ladder.is_empty() {
            return Err(Error::ConfigInvalid("lambda ladder must be nonempty".into()));
        }
        // Constructors check the numeric invariants.
        self.spacetime_grid()?;
        self.state_rule()?;
        self.fock_rule()?;
        self.base_deformation()?;
        Ok(())
    }

    pub fn spacetime_grid(&self) -> Result<SpacetimeGrid> {
        SpacetimeGrid::new(
            self.grid.d,
            self.grid.points_per_axis,
            self.grid.extent,
            self.grid.truncation,
        )
    }

    fn build_rule(&self, spec_rule: RuleSpec, nodes: usize, span: f64) -> Result<OnShellRule> {
        match spec_rule {
            RuleSpec::UniformRapidity => {
                OnShellRule::uniform_rapidity(self.state.mass, nodes, span)
            }
            RuleSpec::GaussLegendre => OnShellRule::gauss_legendre(self.state.mass, nodes, span),
        }
    }

    pub fn state_rule(&self) -> Result<OnShellRule> {
        self.build_rule(self.state.rule, self.state.nodes, self.state.span)
    }

    pub fn fock_rule(&self) -> Result<OnShellRule> {
        self.build_rule(self.fock.rule, self.fock.nodes, self.fock.span)
    }

    pub fn deformation_function(&self) -> Result<DeformationFunction> {
        DeformationFunction::new(
            self.deformation.c,
            self.deformation
                .zeros
                .iter()
                .map(|z| num_complex::Complex64::new(z[0], z[1]))
                .collect(),
        )
    }

    pub fn base_deformation(&self) -> Result<MultiplicativeDeformation> {
        Ok(MultiplicativeDeformation::new(
            self.deformation_function()?,
            QMatrix::new(
                self.deformation.d,
                self.deformation.kappa,
                self.deformation.kappa_prime,
            )?,
        ))
    }

    pub fn scattering_function(&self, lambda: f64) -> Result<ScatteringFunction> {
        ScatteringFunction::from_deformation(&self.base_deformation()?, self.state.mass, lambda)
    }

    /// Canonical serialisation: declared field order, shortest-roundtrip
    /// floats. Hashed into manifests.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn config_hash(&self) -> String {
        crate::container::hex_digest(self.canonical_json().as_bytes())
    }
}
