use std::path::{Path, PathBuf};

use clap::Args;
use lockdown::ingest::{read_bundle, Scenario};
use lockdown::model::{build_flow_matrix, DiseaseParams, FlowFactors, ModelFamily};
use lockdown::presets::Preset;
use lockdown::spectral::calibrate_beta;

use crate::failure::Failure;

/// Bundle and disease parameters shared by most commands.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Canonical bundle directory.
    #[arg(long)]
    pub bundle: PathBuf,
    /// Preset name (bertozzi, giordano, birge) or a parameters TOML file.
    #[arg(long, default_value = "bertozzi")]
    pub params: String,
    /// Model family; defaults to covid for presets and to the file's family.
    #[arg(long)]
    pub model: Option<ModelFamily>,
    /// Calibrate transmission to this initial growth rate (per day).
    #[arg(long)]
    pub target_growth: Option<f64>,
    /// Target decay rate (per day); overrides the value in the parameters.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
}

/// Parameters resolved from a preset or file, before calibration.
#[derive(Debug, Clone)]
pub struct Template {
    pub params: DiseaseParams,
    /// True when transmission still has to be calibrated.
    pub needs_calibration: bool,
}

pub fn load_params(spec: &str, model: Option<ModelFamily>) -> Result<Template, Failure> {
    if let Ok(preset) = spec.parse::<Preset>() {
        let family = model.unwrap_or(ModelFamily::Covid);
        return Ok(Template { params: preset.params(family, 0.0), needs_calibration: true });
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Failure::usage(format!(
            "invalid input for `params`: `{spec}` is neither a preset (bertozzi, giordano, birge) nor a file"
        )));
    }
    let body = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let params: DiseaseParams =
        toml::from_str(&body).map_err(|e| Failure::usage(format!("invalid input for `params` in {}: {e}", path.display())))?;
    if let Some(m) = model {
        if m != params.family {
            return Err(Failure::usage(format!(
                "invalid input for `model`: `{m}` conflicts with family `{}` in {}",
                params.family,
                path.display()
            )));
        }
    }
    params.validate()?;
    Ok(Template { params, needs_calibration: false })
}

pub fn params_toml(p: &DiseaseParams) -> Result<String, Failure> {
    toml::to_string(p).map_err(|e| Failure::usage(format!("serializing parameters: {e}")))
}

/// A bundle with calibrated parameters at the requested decay rate.
pub struct Setup {
    pub scenario: Scenario,
    pub factors: FlowFactors,
    pub template: DiseaseParams,
    pub params: DiseaseParams,
}

impl ModelArgs {
    pub fn load(&self) -> Result<Setup, Failure> {
        let scenario = read_bundle(&self.bundle)?;
        self.with_scenario(scenario)
    }

    pub fn with_scenario(&self, scenario: Scenario) -> Result<Setup, Failure> {
        let factors = build_flow_matrix(&scenario.net)?;
        let t = load_params(&self.params, self.model)?;
        let mut template = t.params;
        if let Some(a) = self.alpha {
            template = template.with_alpha(a);
        }
        let params = match self.target_growth {
            Some(g) => calibrate_beta(&factors, &template, scenario.s0(), g)?,
            None if t.needs_calibration => {
                return Err(Failure::usage(format!(
                    "invalid input for `target-growth`: preset `{}` carries no transmission rate; pass --target-growth or a calibrated parameters file",
                    self.params
                )))
            }
            None => template,
        };
        params.validate()?;
        Ok(Setup { scenario, factors, template, params })
    }
}

impl Setup {
    pub fn require_alpha(&self, args: &ModelArgs) -> Result<(), Failure> {
        if args.alpha.is_none() && self.params.alpha == 0.0 {
            eprintln!("note: decay rate alpha = 0 (pass --alpha to change)");
        }
        self.params.check_alpha(self.params.alpha)?;
        Ok(())
    }
}
