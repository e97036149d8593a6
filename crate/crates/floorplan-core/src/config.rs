//! Plain-text pipeline configuration: `key = value` lines grouped under
//! `[section]` headers.
//!
//! Every tunable in the pipeline has a default here and can be overridden
//! from a file, so parameter sweeps never need a rebuild. The parser is
//! strict: unknown sections or keys, duplicate keys, out-of-range values,
//! and non-finite numbers are errors with the offending line number.
//! Blank lines are skipped and `#` starts a comment, whole-line or
//! trailing.

use std::time::Duration;

use thiserror::Error;

use crate::extraction::ExtractionConfig;
use crate::floorplan::FloorplanConfig;
use crate::landmarks::LandmarkConfig;
use crate::mesh::MeshGates;

/// What `run` does when a frame line fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MalformedPolicy {
    /// Stop with an error naming the line.
    Abort,
    /// Log the line number and keep going.
    Skip,
}

/// Everything the pipeline reads, one struct per stage plus scheduling.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mesh: MeshGates,
    pub extraction: ExtractionConfig,
    pub landmarks: LandmarkConfig,
    pub floorplan: FloorplanConfig,
    /// Reconstruct after every this-many frames (and once at the end).
    pub cadence: usize,
    /// Every this-many-th frame becomes a keyframe, starting with the
    /// first.
    pub keyframe_stride: usize,
    pub on_malformed: MalformedPolicy,
    /// Run reconstruction on a worker thread, latest snapshot wins.
    /// Intermediate floorplan output then depends on timing; the final
    /// one does not.
    pub threaded_reconstruction: bool,
    /// Sample count for Hausdorff evaluation.
    pub eval_samples: usize,
    pub eval_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mesh: MeshGates::default(),
            extraction: ExtractionConfig::default(),
            landmarks: LandmarkConfig::default(),
            floorplan: FloorplanConfig::default(),
            cadence: 5,
            keyframe_stride: 5,
            on_malformed: MalformedPolicy::Abort,
            threaded_reconstruction: false,
            eval_samples: crate::eval::DEFAULT_EVAL_SAMPLES,
            eval_seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: key `{key}` appears before any [section] header")]
    KeyOutsideSection { line: usize, key: String },
    #[error("line {line}: `{key}` was already set")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: `{key}`: {message}")]
    InvalidValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("{0}")]
    Semantic(String),
    #[error(transparent)]
    File(#[from] std::io::Error),
}

struct Raw<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Raw<'_> {
    fn invalid(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            line: self.line,
            key: self.key.to_string(),
            message: message.into(),
        }
    }

    fn f64(&self, min: f64, max: f64) -> Result<f64, ConfigError> {
        let v: f64 = self
            .value
            .parse()
            .map_err(|_| self.invalid(format!("`{}` is not a number", self.value)))?;
        if !v.is_finite() {
            return Err(self.invalid("value must be finite"));
        }
        if v < min || v > max {
            return Err(self.invalid(format!("{v} outside [{min}, {max}]")));
        }
        Ok(v)
    }

    fn usize(&self, min: usize) -> Result<usize, ConfigError> {
        let v: usize = self
            .value
            .parse()
            .map_err(|_| self.invalid(format!("`{}` is not a non-negative integer", self.value)))?;
        if v < min {
            return Err(self.invalid(format!("{v} below the minimum of {min}")));
        }
        Ok(v)
    }

    fn u64(&self) -> Result<u64, ConfigError> {
        self.value
            .parse()
            .map_err(|_| self.invalid(format!("`{}` is not a non-negative integer", self.value)))
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        match self.value {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(self.invalid(format!("`{other}` is not `true` or `false`"))),
        }
    }
}

/// Applies `text` on top of the defaults.
pub fn parse_config(text: &str) -> Result<PipelineConfig, ConfigError> {
    parse_config_over(text, PipelineConfig::default())
}

/// Applies `text` on top of an existing configuration.
pub fn parse_config_over(
    text: &str,
    mut cfg: PipelineConfig,
) -> Result<PipelineConfig, ConfigError> {
    let mut section: Option<String> = None;
    let mut seen: Vec<String> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax {
                    line,
                    text: content.to_string(),
                })?
                .trim();
            if !KNOWN_SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    name: name.to_string(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            text: content.to_string(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: content.to_string(),
            });
        }
        let section = section.as_deref().ok_or_else(|| {
            ConfigError::KeyOutsideSection {
                line,
                key: key.to_string(),
            }
        })?;
        let qualified = format!("{section}.{key}");
        if seen.contains(&qualified) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: qualified,
            });
        }
        let raw = Raw { line, key, value };
        apply_key(&mut cfg, section, &raw)?;
        seen.push(qualified);
    }
    let w = cfg.floorplan.weights;
    if w.fitting + w.coverage + w.complexity <= 0.0 {
        return Err(ConfigError::Semantic(
            "the three floorplan energy weights sum to zero".into(),
        ));
    }
    Ok(cfg)
}

const KNOWN_SECTIONS: [&str; 6] = [
    "mesh",
    "extraction",
    "landmarks",
    "floorplan",
    "pipeline",
    "eval",
];

fn apply_key(cfg: &mut PipelineConfig, section: &str, raw: &Raw) -> Result<(), ConfigError> {
    let unknown = || {
        Err(ConfigError::UnknownKey {
            line: raw.line,
            section: section.to_string(),
            key: raw.key.to_string(),
        })
    };
    match section {
        "mesh" => match raw.key {
            "max_edge" => cfg.mesh.max_edge = raw.f64(1e-6, 1e6)?,
            "max_aspect" => cfg.mesh.max_aspect = raw.f64(1.0, 1e6)?,
            "min_angle_deg" => cfg.mesh.min_angle_deg = raw.f64(0.0, 59.0)?,
            _ => return unknown(),
        },
        "extraction" => match raw.key {
            "pps_azimuth_weight" => cfg.extraction.pps_weights.azimuth = raw.f64(1e-9, 1e6)?,
            "pps_elevation_weight" => cfg.extraction.pps_weights.elevation = raw.f64(1e-9, 1e6)?,
            "pps_offset_weight" => cfg.extraction.pps_weights.offset = raw.f64(1e-9, 1e6)?,
            "dbscan_eps" => cfg.extraction.dbscan_eps = raw.f64(1e-9, 1e6)?,
            "dbscan_min_pts" => cfg.extraction.dbscan_min_pts = raw.usize(1)?,
            "ransac_iterations" => cfg.extraction.ransac.iterations = raw.usize(1)?,
            "ransac_dist_gate" => cfg.extraction.ransac.dist_gate = raw.f64(1e-9, 1e6)?,
            "ransac_min_inlier_ratio" => {
                cfg.extraction.ransac.min_inlier_ratio = raw.f64(1e-9, 1.0)?
            }
            "ransac_seed" => cfg.extraction.ransac.seed = raw.u64()?,
            _ => return unknown(),
        },
        "landmarks" => match raw.key {
            "match_angle_deg" => cfg.landmarks.theta_m_deg = raw.f64(1e-9, 90.0)?,
            "match_distance" => cfg.landmarks.d_m = raw.f64(1e-9, 1e6)?,
            "promote_frames" => cfg.landmarks.promote_frames = raw.u64()?,
            "promote_keyframes" => cfg.landmarks.promote_keyframes = raw.usize(0)?,
            "support_cap" => cfg.landmarks.support_cap = raw.usize(3)?,
            "refit_iterations" => cfg.landmarks.refit_iterations = raw.usize(1)?,
            "seed" => cfg.landmarks.seed = raw.u64()?,
            _ => return unknown(),
        },
        "floorplan" => match raw.key {
            "vertical_tol_deg" => cfg.floorplan.vertical_tol_deg = raw.f64(0.0, 45.0)?,
            "min_extent" => cfg.floorplan.min_extent = raw.f64(1e-9, 1e6)?,
            "support_line_gate" => cfg.floorplan.support_line_gate = raw.f64(1e-9, 1e6)?,
            "merge_angle_deg" => cfg.floorplan.merge_angle_deg = raw.f64(0.0, 45.0)?,
            "merge_close_gate" => cfg.floorplan.merge_close_gate = raw.f64(1e-9, 1e6)?,
            "extension" => cfg.floorplan.extension = raw.f64(0.0, 1e6)?,
            "collinear_tol_deg" => cfg.floorplan.collinear_tol_deg = raw.f64(0.0, 45.0)?,
            "fitting_weight" => cfg.floorplan.weights.fitting = raw.f64(0.0, 1e6)?,
            "coverage_weight" => cfg.floorplan.weights.coverage = raw.f64(0.0, 1e6)?,
            "complexity_weight" => cfg.floorplan.weights.complexity = raw.f64(0.0, 1e6)?,
            "complexity_per_pair" => cfg.floorplan.complexity_per_pair = raw.bool()?,
            "epsilon_fitting" => cfg.floorplan.epsilon_fitting = raw.f64(0.0, 1e6)?,
            "epsilon_coverage" => cfg.floorplan.epsilon_coverage = raw.f64(0.0, 1e6)?,
            "solver_budget_ms" => {
                cfg.floorplan.solver_budget = Duration::from_millis(raw.u64()?.max(1))
            }
            "trajectory_constraint" => cfg.floorplan.trajectory_constraint = raw.bool()?,
            _ => return unknown(),
        },
        "pipeline" => match raw.key {
            "cadence" => cfg.cadence = raw.usize(1)?,
            "keyframe_stride" => cfg.keyframe_stride = raw.usize(1)?,
            "on_malformed" => {
                cfg.on_malformed = match raw.value {
                    "abort" => MalformedPolicy::Abort,
                    "skip" => MalformedPolicy::Skip,
                    other => return Err(raw.invalid(format!("`{other}` is not `abort` or `skip`"))),
                }
            }
            "threaded_reconstruction" => cfg.threaded_reconstruction = raw.bool()?,
            _ => return unknown(),
        },
        "eval" => match raw.key {
            "samples" => cfg.eval_samples = raw.usize(1)?,
            "seed" => cfg.eval_seed = raw.u64()?,
            _ => return unknown(),
        },
        _ => unreachable!("section names are vetted at the header"),
    }
    Ok(())
}

/// Renders the full effective configuration, every key explicit. Parsing
/// the output reproduces the input config, which doubles as the reference
/// list of recognized keys.
pub fn render_config(cfg: &PipelineConfig) -> String {
    let mut out = String::new();
    let mut push = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    push("[mesh]".into());
    push(format!("max_edge = {}", cfg.mesh.max_edge));
    push(format!("max_aspect = {}", cfg.mesh.max_aspect));
    push(format!("min_angle_deg = {}", cfg.mesh.min_angle_deg));
    push(String::new());
    push("[extraction]".into());
    push(format!(
        "pps_azimuth_weight = {}",
        cfg.extraction.pps_weights.azimuth
    ));
    push(format!(
        "pps_elevation_weight = {}",
        cfg.extraction.pps_weights.elevation
    ));
    push(format!(
        "pps_offset_weight = {}",
        cfg.extraction.pps_weights.offset
    ));
    push(format!("dbscan_eps = {}", cfg.extraction.dbscan_eps));
    push(format!("dbscan_min_pts = {}", cfg.extraction.dbscan_min_pts));
    push(format!(
        "ransac_iterations = {}",
        cfg.extraction.ransac.iterations
    ));
    push(format!(
        "ransac_dist_gate = {}",
        cfg.extraction.ransac.dist_gate
    ));
    push(format!(
        "ransac_min_inlier_ratio = {}",
        cfg.extraction.ransac.min_inlier_ratio
    ));
    push(format!("ransac_seed = {}", cfg.extraction.ransac.seed));
    push(String::new());
    push("[landmarks]".into());
    push(format!("match_angle_deg = {}", cfg.landmarks.theta_m_deg));
    push(format!("match_distance = {}", cfg.landmarks.d_m));
    push(format!("promote_frames = {}", cfg.landmarks.promote_frames));
    push(format!(
        "promote_keyframes = {}",
        cfg.landmarks.promote_keyframes
    ));
    push(format!("support_cap = {}", cfg.landmarks.support_cap));
    push(format!(
        "refit_iterations = {}",
        cfg.landmarks.refit_iterations
    ));
    push(format!("seed = {}", cfg.landmarks.seed));
    push(String::new());
    push("[floorplan]".into());
    push(format!(
        "vertical_tol_deg = {}",
        cfg.floorplan.vertical_tol_deg
    ));
    push(format!("min_extent = {}", cfg.floorplan.min_extent));
    push(format!(
        "support_line_gate = {}",
        cfg.floorplan.support_line_gate
    ));
    push(format!("merge_angle_deg = {}", cfg.floorplan.merge_angle_deg));
    push(format!(
        "merge_close_gate = {}",
        cfg.floorplan.merge_close_gate
    ));
    push(format!("extension = {}", cfg.floorplan.extension));
    push(format!(
        "collinear_tol_deg = {}",
        cfg.floorplan.collinear_tol_deg
    ));
    push(format!("fitting_weight = {}", cfg.floorplan.weights.fitting));
    push(format!(
        "coverage_weight = {}",
        cfg.floorplan.weights.coverage
    ));
    push(format!(
        "complexity_weight = {}",
        cfg.floorplan.weights.complexity
    ));
    push(format!(
        "complexity_per_pair = {}",
        cfg.floorplan.complexity_per_pair
    ));
    push(format!("epsilon_fitting = {}", cfg.floorplan.epsilon_fitting));
    push(format!(
        "epsilon_coverage = {}",
        cfg.floorplan.epsilon_coverage
    ));
    push(format!(
        "solver_budget_ms = {}",
        cfg.floorplan.solver_budget.as_millis()
    ));
    push(format!(
        "trajectory_constraint = {}",
        cfg.floorplan.trajectory_constraint
    ));
    push(String::new());
    push("[pipeline]".into());
    push(format!("cadence = {}", cfg.cadence));
    push(format!("keyframe_stride = {}", cfg.keyframe_stride));
    push(format!(
        "on_malformed = {}",
        match cfg.on_malformed {
            MalformedPolicy::Abort => "abort",
            MalformedPolicy::Skip => "skip",
        }
    ));
    push(format!(
        "threaded_reconstruction = {}",
        cfg.threaded_reconstruction
    ));
    push(String::new());
    push("[eval]".into());
    push(format!("samples = {}", cfg.eval_samples));
    push(format!("seed = {}", cfg.eval_seed));
    out
}
