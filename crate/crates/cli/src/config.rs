use std::path::{Path, PathBuf};

use kdv_core::{
    discretize::{to_blocks, DiscretizationRule, SampledPotential},
    BlockPotential, BoundStateMethod, NormingMethod,
};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// Where the potential comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `V = −amplitude·sech²((x − center)/width)` on `domain`.
    Sech2 {
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// `V = value` on `[left, right]`.
    Block { value: f64, left: f64, right: f64 },
    /// Two-column `x,v` file with a header.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|j| self.min + step * j as f64).collect()
    }

    fn check(&self, key: &str) -> Result<(), Failure> {
        if self.count == 0 || !(self.max >= self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Failure::invalid(format!(
                "{key} needs finite min <= max and count >= 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    /// Collocation points of the spectral matrix; 0 turns the spectral
    /// seeds off and the search scans the whole axis instead.
    #[serde(default = "default_seed_grid")]
    pub grid: usize,
    /// Periodic domain of the spectral matrix. Defaults to the support
    /// widened by half its width on each side.
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            grid: default_seed_grid(),
            domain: None,
            scan_points: default_scan_points(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest accepted `|κ|` difference between bound-state methods.
    #[serde(default = "default_agreement")]
    pub method_agreement: f64,
    /// Step of the second difference in the determinant formula.
    #[serde(default = "default_dx")]
    pub dx: f64,
    /// RK4 step of the ODE oracles in `compare`.
    #[serde(default = "default_ode_step")]
    pub ode_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            method_agreement: default_agreement(),
            dx: default_dx(),
            ode_step: default_ode_step(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitStepConfig {
    #[serde(default = "default_split_dt")]
    pub dt: f64,
    #[serde(default = "default_split_grid")]
    pub grid: usize,
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarConfig {
    #[serde(default = "default_level")]
    pub level: u32,
    /// Drop coefficients below this magnitude.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Or keep this fraction of the largest ones.
    #[serde(default)]
    pub keep_fraction: Option<f64>,
    /// Recompute the spectrum of the compressed potential.
    #[serde(default)]
    pub respectrum: bool,
}

impl Default for HaarConfig {
    fn default() -> Self {
        Self {
            level: default_level(),
            threshold: None,
            keep_fraction: None,
            respectrum: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileSpec,
    /// Support of a `sech2` profile.
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    #[serde(default = "default_blocks")]
    pub n_blocks: usize,
    /// Block width; when set, `n_blocks` is the support width over `h`.
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default = "default_rule")]
    pub rule: String,
    #[serde(default = "default_bound")]
    pub bound_method: String,
    #[serde(default = "default_norming")]
    pub norming_method: String,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_xgrid")]
    pub xgrid: Grid,
    /// Real wavenumbers for `scatter`.
    #[serde(default = "default_kgrid")]
    pub kgrid: Grid,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Adds a split-step column to `solve` when present.
    #[serde(default)]
    pub splitstep: Option<SplitStepConfig>,
    #[serde(default)]
    pub haar: HaarConfig,
}

fn one() -> f64 {
    1.0
}
fn default_seed_grid() -> usize {
    256
}
fn default_scan_points() -> usize {
    400
}
fn default_agreement() -> f64 {
    1e-8
}
fn default_dx() -> f64 {
    1e-3
}
fn default_ode_step() -> f64 {
    1e-3
}
fn default_split_dt() -> f64 {
    1e-5
}
fn default_split_grid() -> usize {
    4096
}
fn default_level() -> u32 {
    10
}
fn default_blocks() -> usize {
    1000
}
fn default_rule() -> String {
    "midpoint".into()
}
fn default_bound() -> String {
    "invR".into()
}
fn default_norming() -> String {
    "residue".into()
}
fn default_eta() -> f64 {
    1e-3
}
fn default_times() -> Vec<f64> {
    vec![0.0]
}
fn default_xgrid() -> Grid {
    Grid { min: -20.0, max: 20.0, count: 2001 }
}
fn default_kgrid() -> Grid {
    Grid { min: 0.05, max: 10.0, count: 200 }
}
fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub n_blocks: Option<usize>,
    pub h: Option<f64>,
    pub rule: Option<String>,
    pub bound_method: Option<String>,
    pub norming_method: Option<String>,
    pub eta: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub domain: Option<[f64; 2]>,
    pub outputs: Option<PathBuf>,
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`. Relative CSV
    /// paths are resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg: RunConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        };
        if let ProfileSpec::Csv { path: csv } = &mut cfg.profile {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.n_blocks {
            self.n_blocks = v;
            self.h = None;
        }
        if let Some(v) = o.h {
            self.h = Some(v);
        }
        if let Some(v) = &o.rule {
            self.rule = v.clone();
        }
        if let Some(v) = &o.bound_method {
            self.bound_method = v.clone();
        }
        if let Some(v) = &o.norming_method {
            self.norming_method = v.clone();
        }
        if let Some(v) = o.eta {
            self.eta = v;
        }
        if let Some(v) = &o.times {
            self.times = v.clone();
        }
        if let Some(v) = o.domain {
            self.domain = Some(v);
        }
        if let Some(v) = &o.outputs {
            self.outputs = v.clone();
        }
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.n_blocks == 0 {
            return Err(Failure::invalid("n_blocks must be >= 1"));
        }
        if let Some(h) = self.h {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Failure::invalid(format!("h = {h} must be positive")));
            }
        }
        self.rule()?;
        self.bound_method()?;
        self.norming_method()?;
        if !(self.eta > 0.0) {
            return Err(Failure::invalid(format!("eta = {} must be positive", self.eta)));
        }
        if let Some(t) = self.times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Failure::invalid(format!("time {t} must be finite and >= 0")));
        }
        self.xgrid.check("xgrid")?;
        self.kgrid.check("kgrid")?;
        for (name, v) in [
            ("tolerances.method_agreement", self.tolerances.method_agreement),
            ("tolerances.dx", self.tolerances.dx),
            ("tolerances.ode_step", self.tolerances.ode_step),
        ] {
            if !(v > 0.0) {
                return Err(Failure::invalid(format!("{name} = {v} must be positive")));
            }
        }
        if let Some(s) = &self.splitstep {
            if !(s.dt > 0.0) || s.grid < 16 || !s.grid.is_power_of_two() {
                return Err(Failure::invalid(
                    "splitstep needs dt > 0 and a power-of-two grid >= 16",
                ));
            }
        }
        if let (Some(_), Some(_)) = (self.haar.threshold, self.haar.keep_fraction) {
            return Err(Failure::invalid("give haar.threshold or haar.keep_fraction, not both"));
        }
        if matches!(self.profile, ProfileSpec::Sech2 { .. }) && self.domain.is_none() {
            return Err(Failure::invalid("a sech2 profile needs domain = [left, right]"));
        }
        Ok(())
    }

    pub fn rule(&self) -> Result<DiscretizationRule, Failure> {
        self.rule.parse().map_err(Failure::from)
    }

    pub fn bound_method(&self) -> Result<BoundStateMethod, Failure> {
        self.bound_method.parse().map_err(Failure::from)
    }

    pub fn norming_method(&self) -> Result<NormingMethod<f64>, Failure> {
        norming_by_name(&self.norming_method, self.eta)
    }

    pub fn profile(&self) -> Result<SampledPotential<f64>, Failure> {
        let p = match &self.profile {
            ProfileSpec::Sech2 { amplitude, width, center } => {
                let [lo, hi] = self.domain.ok_or_else(|| Failure::invalid("sech2 needs a domain"))?;
                SampledPotential::sech2(*amplitude, *width, *center, (lo, hi))
            }
            ProfileSpec::Block { value, left, right } => SampledPotential::block(*value, *left, *right),
            ProfileSpec::Csv { path } => SampledPotential::from_csv(path),
        };
        p.map_err(Failure::from)
    }

    pub fn potential(&self) -> Result<(SampledPotential<f64>, BlockPotential<f64>), Failure> {
        let profile = self.profile()?;
        let n = match self.h {
            Some(h) => {
                let (lo, hi) = profile.support();
                (((hi - lo) / h).round() as usize).max(1)
            }
            None => self.n_blocks,
        };
        let pot = to_blocks(&profile, n, self.rule()?)?;
        Ok((profile, pot))
    }

    /// Spectral-matrix domain: the configured one, or the support widened
    /// by half its width on each side.
    pub fn seed_domain(&self, pot: &BlockPotential<f64>) -> (f64, f64) {
        match self.seeds.domain {
            Some([lo, hi]) => (lo, hi),
            None => {
                let (lo, hi) = pot.support();
                let pad = 0.5 * (hi - lo);
                (lo - pad, hi + pad)
            }
        }
    }
}

pub fn norming_by_name(name: &str, eta: f64) -> Result<NormingMethod<f64>, Failure> {
    match name.to_ascii_lowercase().as_str() {
        "residue" => Ok(NormingMethod::Residue),
        "ab" | "ab_ratio" => Ok(NormingMethod::AbRatio { eta }),
        other => Err(Failure::invalid(format!(
            "unknown norming method {other:?} (expected residue or ab)"
        ))),
    }
}
