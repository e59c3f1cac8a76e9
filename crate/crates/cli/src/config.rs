//! Run configuration: a TOML file of nested tables, or one of the presets.
//!
//! Every key is required when reading a file; [`RunConfig::preset`] with
//! `wnrefl preset <name>` prints a complete starting point.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wnrefl_core::bem::Medium;
use wnrefl_core::estimation::LambdaRule;
use wnrefl_core::geometry::{
    fibonacci_source_layout, make_plate_mesh, make_receiver_grid, make_slit_mesh, make_surface_mesh, Mesh,
    ReceiverGrid, SourceLayout,
};
use wnrefl_core::wavespace::{fibonacci_wavenumber_grid, WavenumberGrid};
use wnrefl_core::{Error, Result, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub medium: MediumConfig,
    pub geometry: GeometryConfig,
    pub sources: SourceConfig,
    pub receivers: ReceiverConfig,
    pub grid: GridConfig,
    pub estimator: EstimatorConfig,
    pub directivity: DirectivityConfig,
    pub bem: BemConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub c: f64,
    pub rho: f64,
    pub f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Reflector {
    Flat,
    Slit,
}

impl Reflector {
    pub fn name(self) -> &'static str {
        match self {
            Reflector::Flat => "flat",
            Reflector::Slit => "slit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub reflector: Reflector,
    /// Side of the square plate, and of the open surface used by the
    /// nonlocal BEM.
    pub plate_side: f64,
    pub thickness: f64,
    pub edge: f64,
    pub bar_width: f64,
    pub bar_pitch: f64,
    pub bar_count: usize,
    pub bar_length: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub count: usize,
    pub radius: f64,
    pub center_height: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub height: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Estimation grid size; also the modes of the nonlocal boundary
    /// condition, since `B` lives on this grid.
    pub modes: usize,
    /// Display grid size for directivity maps.
    pub fine_modes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pinv,
    Lasso,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaRuleConfig {
    Min,
    OneSe,
}

impl From<LambdaRuleConfig> for LambdaRule {
    fn from(r: LambdaRuleConfig) -> Self {
        match r {
            LambdaRuleConfig::Min => LambdaRule::MinResidual,
            LambdaRuleConfig::OneSe => LambdaRule::OneStandardError,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub method: Method,
    /// Fixed penalty; when absent, chosen from `lambda_fractions` of
    /// `lambda_max` by held-out residual.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub lambda_fractions: Vec<f64>,
    pub lambda_rule: LambdaRuleConfig,
    pub max_iter: usize,
    pub tol: f64,
    /// Half-width of the band counted by the diagonal energy ratio.
    pub diagonal_band: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectivityConfig {
    pub angles_deg: Vec<f64>,
    pub aperture: f64,
    /// Pixels per side of the kx-ky heatmap.
    pub image_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BemConfig {
    pub source: Vec3,
    /// Sections span `[-half_width, half_width]` horizontally.
    pub half_width: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub spacing: f64,
}

impl RunConfig {
    /// `desk` (0.8 m reflectors at 1.7 kHz) or `full` (1.5 m at 3.4 kHz).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(Error::InvalidInput(format!("unknown preset {other:?} (expected desk or full)"))),
        }
    }

    pub fn desk() -> Self {
        Self {
            medium: MediumConfig {
                c: 343.5,
                rho: 1.205,
                f: 1700.0,
            },
            geometry: GeometryConfig {
                reflector: Reflector::Flat,
                plate_side: 0.8,
                thickness: 0.06,
                edge: 0.04,
                bar_width: 0.1,
                bar_pitch: 0.2,
                bar_count: 4,
                bar_length: 0.8,
            },
            sources: SourceConfig {
                count: 100,
                radius: 0.75,
                center_height: 0.1,
            },
            receivers: ReceiverConfig {
                nx: 20,
                ny: 20,
                spacing: 0.04,
                height: 0.01,
            },
            grid: GridConfig {
                modes: 100,
                fine_modes: 2401,
            },
            estimator: EstimatorConfig {
                method: Method::Lasso,
                lambda: None,
                lambda_fractions: default_fractions(),
                lambda_rule: LambdaRuleConfig::OneSe,
                max_iter: 20_000,
                tol: 1e-9,
                diagonal_band: 0,
            },
            directivity: DirectivityConfig {
                angles_deg: vec![0.0, 30.0, 60.0],
                aperture: 0.8,
                image_size: 101,
            },
            bem: BemConfig {
                source: [0.0, 0.0, 0.4],
                half_width: 0.75,
                z_min: 0.075,
                z_max: 1.075,
                spacing: 0.05,
            },
        }
    }

    pub fn full() -> Self {
        let mut c = Self::desk();
        c.medium.f = 3400.0;
        c.geometry = GeometryConfig {
            reflector: Reflector::Flat,
            plate_side: 1.5,
            thickness: 0.06,
            edge: 0.03,
            bar_width: 0.05,
            bar_pitch: 0.1,
            bar_count: 15,
            bar_length: 1.5,
        };
        c.grid.modes = 400;
        c.directivity.aperture = 1.5;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Format(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.medium()?;
        let g = &self.geometry;
        let positive = [
            ("geometry.plate_side", g.plate_side),
            ("geometry.thickness", g.thickness),
            ("geometry.edge", g.edge),
            ("geometry.bar_width", g.bar_width),
            ("geometry.bar_pitch", g.bar_pitch),
            ("geometry.bar_length", g.bar_length),
            ("sources.radius", self.sources.radius),
            ("receivers.spacing", self.receivers.spacing),
            ("receivers.height", self.receivers.height),
            ("estimator.tol", self.estimator.tol),
            ("directivity.aperture", self.directivity.aperture),
            ("bem.half_width", self.bem.half_width),
            ("bem.spacing", self.bem.spacing),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("geometry.bar_count", g.bar_count),
            ("sources.count", self.sources.count),
            ("receivers.nx", self.receivers.nx),
            ("receivers.ny", self.receivers.ny),
            ("grid.modes", self.grid.modes),
            ("grid.fine_modes", self.grid.fine_modes),
            ("estimator.max_iter", self.estimator.max_iter),
            ("directivity.image_size", self.directivity.image_size),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidInput(format!("{name} must be at least 1")));
            }
        }
        if let Some(l) = self.estimator.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidInput(format!("estimator.lambda must be >= 0, got {l}")));
            }
        } else if self.estimator.lambda_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::InvalidInput("estimator.lambda_fractions must lie in (0, 1]".into()));
        }
        if !(self.bem.z_max > self.bem.z_min && self.bem.z_min > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bem section needs 0 < z_min < z_max, got {} and {}",
                self.bem.z_min, self.bem.z_max
            )));
        }
        if self.directivity.angles_deg.iter().any(|a| !(0.0..90.0).contains(a)) {
            return Err(Error::InvalidInput("directivity angles must lie in [0, 90) degrees".into()));
        }
        Ok(())
    }

    pub fn medium(&self) -> Result<Medium> {
        Medium::new(self.medium.c, self.medium.rho, self.medium.f)
    }

    /// Closed mesh of the configured reflector.
    pub fn reflector_mesh(&self) -> Result<Mesh> {
        self.mesh_for(self.geometry.reflector)
    }

    pub fn mesh_for(&self, reflector: Reflector) -> Result<Mesh> {
        let g = &self.geometry;
        match reflector {
            Reflector::Flat => make_plate_mesh(g.plate_side, g.plate_side, g.thickness, g.edge),
            Reflector::Slit => make_slit_mesh(g.bar_width, g.bar_pitch, g.bar_count, g.bar_length, g.thickness, g.edge),
        }
    }

    /// Open surface `z = 0` carrying the nonlocal boundary condition.
    pub fn surface_mesh(&self) -> Result<Mesh> {
        make_surface_mesh(self.geometry.plate_side, self.geometry.plate_side, self.geometry.edge)
    }

    pub fn source_layout(&self) -> Result<SourceLayout> {
        fibonacci_source_layout(self.sources.count, self.sources.radius, self.sources.center_height)
    }

    pub fn receiver_grid(&self) -> Result<ReceiverGrid> {
        let r = &self.receivers;
        make_receiver_grid(r.nx, r.ny, r.spacing, r.height)
    }

    pub fn estimation_grid(&self) -> Result<WavenumberGrid> {
        fibonacci_wavenumber_grid(self.grid.modes, self.medium()?.k())
    }

    pub fn fine_grid(&self) -> Result<WavenumberGrid> {
        fibonacci_wavenumber_grid(self.grid.fine_modes, self.medium()?.k())
    }
}

fn default_fractions() -> Vec<f64> {
    wnrefl_core::estimation::default_lambda_fractions(10, 1e-4, 1e-1)
}
