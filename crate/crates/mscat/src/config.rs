//! TOML experiment configuration.

use std::fmt;
use std::path::Path;

use mscat_core::geometry::{Curve, FourierCurve, Scene, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Bundled scenario files, by name.
pub const BUNDLED: [(&str, &str); 4] = [
    ("circles_paper", include_str!("../configs/circles_paper.toml")),
    ("ellipses_paper", include_str!("../configs/ellipses_paper.toml")),
    ("circles_desk", include_str!("../configs/circles_desk.toml")),
    ("ellipses_desk", include_str!("../configs/ellipses_desk.toml")),
];

/// A config file holds one or more `[[scenario]]` tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "scenario")]
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    Neumann,
    Pade,
    KrylovBinomial,
    KrylovStable,
    KrylovKirchhoff,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Neumann, Method::Pade, Method::KrylovBinomial, Method::KrylovStable, Method::KrylovKirchhoff];

    pub fn name(self) -> &'static str {
        match self {
            Method::Neumann => "neumann",
            Method::Pade => "pade",
            Method::KrylovBinomial => "krylov_binomial",
            Method::KrylovStable => "krylov_stable",
            Method::KrylovKirchhoff => "krylov_kirchhoff",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether ellipse `axes` are semi-axes or full axis lengths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxesConvention {
    #[default]
    Semi,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleConfig {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        /// Lengths along the (rotated) x and y axes.
        axes: [f64; 2],
        #[serde(default)]
        axes_convention: AxesConvention,
        /// Counterclockwise rotation in radians.
        #[serde(default)]
        rotation: f64,
    },
    Fourier {
        center: [f64; 2],
        /// `[a_m, b_m]` of `x(t) = c_x + Σ a_m cos(mt) + b_m sin(mt)`, from `m = 1`.
        x_coeffs: Vec<[f64; 2]>,
        y_coeffs: Vec<[f64; 2]>,
    },
}

impl ObstacleConfig {
    pub fn curve(&self) -> Curve {
        let v = |c: &[f64; 2]| Vec2::new(c[0], c[1]);
        match self {
            ObstacleConfig::Circle { center, radius } => Curve::circle(v(center), *radius),
            ObstacleConfig::Ellipse { center, axes, axes_convention, rotation } => {
                let s = match axes_convention {
                    AxesConvention::Semi => 1.0,
                    AxesConvention::Full => 0.5,
                };
                Curve::Ellipse { center: v(center), semi_x: s * axes[0], semi_y: s * axes[1], rotation: *rotation }
            }
            ObstacleConfig::Fourier { center, x_coeffs, y_coeffs } => Curve::Fourier(FourierCurve {
                center: v(center),
                x_coeffs: x_coeffs.iter().map(|c| (c[0], c[1])).collect(),
                y_coeffs: y_coeffs.iter().map(|c| (c[0], c[1])).collect(),
            }),
        }
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_max_reflections() -> usize {
    120
}
fn default_krylov_iterations() -> usize {
    40
}
fn default_tol() -> f64 {
    1e-12
}
fn default_kirchhoff_terms() -> Vec<usize> {
    vec![12, 24]
}
fn default_kirchhoff_iterations() -> usize {
    8
}
fn default_rate_window() -> [usize; 2] {
    [10, 20]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub wavenumber: f64,
    /// Incidence direction; normalized on load.
    pub direction: [f64; 2],
    /// Nodes per wavelength on every obstacle (exclusive with `nodes`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_wavelength: Option<f64>,
    /// Explicit node count per obstacle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Reflections for the Neumann and Padé histories.
    #[serde(default = "default_max_reflections")]
    pub max_reflections: usize,
    /// ORTHODIR iterations for the two unpreconditioned Krylov variants.
    #[serde(default = "default_krylov_iterations")]
    pub krylov_iterations: usize,
    /// Target relative error, used for predicted iteration counts.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Kirchhoff truncations `N`; one history per entry.
    #[serde(default = "default_kirchhoff_terms")]
    pub kirchhoff_terms: Vec<usize>,
    /// Right-hand side truncation `M`; equal to `N` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kirchhoff_rhs_terms: Option<usize>,
    #[serde(default = "default_kirchhoff_iterations")]
    pub kirchhoff_iterations: usize,
    /// Reflection window `[m_lo, m_hi]` of the empirical rate fit.
    #[serde(default = "default_rate_window")]
    pub rate_window: [usize; 2],
    /// Recorded in metadata; the solver itself is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub obstacles: Vec<ObstacleConfig>,
}

impl ScenarioConfig {
    pub fn direction(&self) -> Vec2 {
        Vec2::new(self.direction[0], self.direction[1]).normalized()
    }

    pub fn curves(&self) -> Vec<Curve> {
        self.obstacles.iter().map(ObstacleConfig::curve).collect()
    }

    /// `M` for a given `N`.
    pub fn rhs_terms(&self, n: usize) -> usize {
        self.kirchhoff_rhs_terms.unwrap_or(n)
    }

    /// Builds the scene; geometric failures are reported as config errors.
    pub fn scene(&self) -> Result<Scene, CliError> {
        Scene::new(self.curves(), self.direction(), self.wavenumber)
            .map_err(|e| CliError::Config(format!("scenario `{}`: {e}", self.name)))
    }

    /// Field-level checks that the schema cannot express.
    pub fn check(&self, path: &str) -> Result<(), CliError> {
        let mut problems = Vec::new();
        let mut bad = |field: &str, msg: &str| problems.push(format!("{path}.{field}: {msg}"));
        if !(self.wavenumber > 0.0) || !self.wavenumber.is_finite() {
            bad("wavenumber", "must be positive and finite");
        }
        let d = self.direction;
        if !(d[0].hypot(d[1]) > 0.0) || !d[0].is_finite() || !d[1].is_finite() {
            bad("direction", "must be a nonzero finite vector");
        }
        match (&self.points_per_wavelength, &self.nodes) {
            (Some(_), Some(_)) => bad("nodes", "give either nodes or points_per_wavelength, not both"),
            (None, None) => bad("points_per_wavelength", "one of points_per_wavelength or nodes is required"),
            (Some(p), None) if !(*p > 0.0) => bad("points_per_wavelength", "must be positive"),
            (None, Some(n)) if n.len() != self.obstacles.len() => {
                bad("nodes", "needs one entry per obstacle")
            }
            _ => {}
        }
        if self.max_reflections < 1 {
            bad("max_reflections", "must be at least 1");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            bad("tol", "must lie in (0, 1)");
        }
        if self.rate_window[1] < self.rate_window[0] + 4 {
            bad("rate_window", "needs m_hi >= m_lo + 4");
        }
        if self.obstacles.is_empty() {
            bad("obstacles", "at least one obstacle is required");
        }
        if self.methods.contains(&Method::KrylovKirchhoff) {
            if self.obstacles.len() != 2 {
                bad("methods", "krylov_kirchhoff needs exactly two obstacles");
            }
            if self.kirchhoff_terms.is_empty() {
                bad("kirchhoff_terms", "must list at least one truncation");
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            match o {
                ObstacleConfig::Circle { radius, .. } if !(*radius > 0.0) => {
                    bad(&format!("obstacles[{i}].radius"), "must be positive")
                }
                ObstacleConfig::Ellipse { axes, .. } if !(axes[0] > 0.0 && axes[1] > 0.0) => {
                    bad(&format!("obstacles[{i}].axes"), "must be positive")
                }
                ObstacleConfig::Fourier { x_coeffs, y_coeffs, .. } if x_coeffs.is_empty() || y_coeffs.is_empty() => {
                    bad(&format!("obstacles[{i}]"), "x_coeffs and y_coeffs must be nonempty")
                }
                _ => {}
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("\n")))
        }
    }
}

impl ConfigFile {
    /// Parses and checks a config; errors name the offending field path.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
        let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner().message()))
        })?;
        if file.scenarios.is_empty() {
            return Err(CliError::Config("scenario: at least one [[scenario]] table is required".into()));
        }
        for (i, s) in file.scenarios.iter().enumerate() {
            s.check(&format!("scenario[{i}]"))?;
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The named scenario, or the only one when `name` is `None`.
    pub fn select(&self, name: Option<&str>) -> Result<&ScenarioConfig, CliError> {
        match name {
            Some(n) => self.scenarios.iter().find(|s| s.name == n).ok_or_else(|| {
                let names: Vec<&str> = self.scenarios.iter().map(|s| s.name.as_str()).collect();
                CliError::Config(format!("no scenario `{n}`; available: {}", names.join(", ")))
            }),
            None if self.scenarios.len() == 1 => Ok(&self.scenarios[0]),
            None => Err(CliError::Config("config holds several scenarios; pick one with --scenario".into())),
        }
    }
}

/// A bundled scenario by name.
pub fn bundled(name: &str) -> Result<ScenarioConfig, CliError> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::Config(format!("no bundled scenario `{name}`")))?;
    Ok(ConfigFile::parse(text)?.select(Some(name))?.clone())
}
