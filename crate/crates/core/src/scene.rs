//! Strict JSON scene files.
//!
//! Positions and probe dimensions are in nanometres, fields in teslas,
//! frequencies in hertz and spin moments in Bohr magnetons. Every section
//! except `sample` is optional and falls back to documented defaults;
//! unknown keys are rejected. Parsing distinguishes syntax errors, unknown
//! keys, type errors and invariant violations, and each carries the path of
//! the offending key.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{BOHR_MAGNETON, G_ELECTRON};
use crate::field::{Sample, SpinDipole};
use crate::probe::{LevelScheme, LinewidthPreset, OdmrLine, Probe};
use crate::scanner::{
    DetectabilityOptions, Modality, ModalityKind, Observable, ProbeGeometry, ScanSpec, SensingPoint,
};
use crate::spectrum::{NoiseSpec, SweepMode, SweepSpec};
use crate::vec3::Vec3;

const NM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key at `{path}`: {message}")]
    UnknownKey { path: String, message: String },
    #[error("type error at `{path}`: {message}")]
    Type { path: String, message: String },
    #[error("{} invariant violation(s): {}", .0.len(), join(.0))]
    Invariant(Vec<Violation>),
    #[error("cannot read scene file: {0}")]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl SceneError {
    /// Stable machine-readable class name.
    pub fn class(&self) -> &'static str {
        match self {
            SceneError::Syntax { .. } => "syntax",
            SceneError::UnknownKey { .. } => "unknown_key",
            SceneError::Type { .. } => "type",
            SceneError::Invariant(_) => "invariant",
            SceneError::Io(_) => "io",
        }
    }

    /// Paths of every offending key.
    pub fn paths(&self) -> Vec<String> {
        match self {
            SceneError::UnknownKey { path, .. } | SceneError::Type { path, .. } => {
                vec![path.clone()]
            }
            SceneError::Invariant(v) => v.iter().map(|x| x.path.clone()).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub sample: SampleConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub modality: ModalityConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    #[serde(rename = "bias_field_T", default = "default_bias")]
    pub bias_field: [f64; 3],
    pub spins: Vec<SpinConfig>,
}

fn default_bias() -> [f64; 3] {
    [0.0, 0.0, 0.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinConfig {
    pub position_nm: [f64; 3],
    #[serde(default = "default_direction")]
    pub moment_direction: [f64; 3],
    /// Bohr magnetons; the default g_e/2 is one unpaired electron.
    #[serde(default = "default_moment")]
    pub moment_magnitude_bohr: f64,
}

fn default_direction() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_moment() -> f64 {
    0.5 * G_ELECTRON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub id: String,
    pub geometry: GeometryConfig,
    pub scheme: SchemeConfig,
    pub line: LineConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            id: "nanoprobe".into(),
            geometry: GeometryConfig::default(),
            scheme: SchemeConfig::default(),
            line: LineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub diameter_nm: f64,
    pub standoff_nm: f64,
    pub sensing_point: SensingPoint,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            diameter_nm: 1.0,
            standoff_nm: 0.5,
            sensing_point: SensingPoint::Edge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branching {
    pub bright: f64,
    pub dark: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub pump_rate: f64,
    pub nonradiative_rate: f64,
    pub branching: Branching,
    pub radiative_rate: f64,
    pub dark_decay_rate: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        let s = LevelScheme::default();
        Self {
            pump_rate: s.pump_rate,
            nonradiative_rate: s.nonradiative_rate,
            branching: Branching {
                bright: s.branching_bright,
                dark: s.branching_dark,
            },
            radiative_rate: s.radiative_rate,
            dark_decay_rate: s.dark_decay_rate,
        }
    }
}

/// A linewidth given in teslas or by preset name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Linewidth {
    Tesla(f64),
    Preset(LinewidthPreset),
}

impl Linewidth {
    pub fn tesla(self) -> f64 {
        match self {
            Linewidth::Tesla(t) => t,
            Linewidth::Preset(p) => p.fwhm_tesla(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineConfig {
    pub g_factor: f64,
    #[serde(rename = "linewidth_T")]
    pub linewidth: Linewidth,
    pub max_rf_rate: f64,
    #[serde(rename = "rf_frequency_Hz")]
    pub rf_frequency: f64,
    pub rf_amplitude_scale: f64,
}

impl Default for LineConfig {
    fn default() -> Self {
        let l = OdmrLine::default();
        Self {
            g_factor: l.g_factor,
            linewidth: Linewidth::Tesla(l.linewidth_fwhm),
            max_rf_rate: l.max_rf_rate,
            rf_frequency: l.rf_frequency,
            rf_amplitude_scale: l.rf_amplitude_scale,
        }
    }
}

/// `start`/`stop` in T for field sweeps, Hz for frequency sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub mode: SweepMode,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(rename = "dwell_time_s")]
    pub dwell_time: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            mode: SweepMode::FieldSweep,
            start: 0.0,
            stop: 0.2,
            points: 201,
            dwell_time: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub center_nm: [f64; 2],
    pub x_range_nm: f64,
    pub y_range_nm: f64,
    pub nx: usize,
    pub ny: usize,
    pub observable: Observable,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            center_nm: [0.0, 0.0],
            x_range_nm: 10.0,
            y_range_nm: 10.0,
            nx: 33,
            ny: 33,
            observable: Observable::ShiftMap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModalityConfig {
    pub kind: ModalityKind,
    /// Overrides the platform preset when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positioning_jitter_rms_nm: Option<f64>,
}

impl Default for ModalityConfig {
    fn default() -> Self {
        Self {
            kind: ModalityKind::AfmNsom,
            positioning_jitter_rms_nm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub photon_budget: f64,
    pub threshold_fraction: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            photon_budget: 1.0e6,
            threshold_fraction: 1.0,
        }
    }
}

/// A validated scene in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub sample: Sample,
    pub probe: Probe,
    pub sweep: SweepSpec,
    pub scan: ScanSpec,
    pub modality: Modality,
    pub photon_budget: f64,
    pub detectability: DetectabilityOptions,
}

/// Parses and validates a scene file.
pub fn parse_scene_file(path: impl AsRef<Path>) -> Result<SceneConfig, SceneError> {
    parse_scene(&std::fs::read_to_string(path)?)
}

/// Parses and validates scene JSON text.
pub fn parse_scene(text: &str) -> Result<SceneConfig, SceneError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| SceneError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let config: SceneConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        if message.starts_with("unknown field") {
            SceneError::UnknownKey { path, message }
        } else {
            SceneError::Type { path, message }
        }
    })?;
    let violations = config.violations();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(SceneError::Invariant(violations))
    }
}

struct Checker(Vec<Violation>);

impl Checker {
    fn check(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.0.push(Violation {
                path: path.into(),
                message: message.into(),
            });
        }
    }

    fn finite3(&mut self, v: [f64; 3], path: String) -> bool {
        let ok = v.iter().all(|c| c.is_finite());
        self.check(ok, path, "components must be finite");
        ok
    }

    fn positive(&mut self, v: f64, path: &str) {
        self.check(
            v.is_finite() && v > 0.0,
            path,
            format!("must be finite and > 0, got {v}"),
        );
    }

    fn non_negative(&mut self, v: f64, path: &str) {
        self.check(
            v.is_finite() && v >= 0.0,
            path,
            format!("must be finite and >= 0, got {v}"),
        );
    }
}

impl SceneConfig {
    /// Every invariant violation, each with the path to its key.
    pub fn violations(&self) -> Vec<Violation> {
        let mut c = Checker(Vec::new());

        c.finite3(self.sample.bias_field, "sample.bias_field_T".into());
        for (i, spin) in self.sample.spins.iter().enumerate() {
            let base = format!("sample.spins[{i}]");
            c.finite3(spin.position_nm, format!("{base}.position_nm"));
            if c.finite3(spin.moment_direction, format!("{base}.moment_direction")) {
                c.check(
                    Vec3::from(spin.moment_direction).norm() > 0.0,
                    format!("{base}.moment_direction"),
                    "must be non-zero",
                );
            }
            c.positive(
                spin.moment_magnitude_bohr,
                &format!("{base}.moment_magnitude_bohr"),
            );
            for j in 0..i {
                c.check(
                    spin.position_nm != self.sample.spins[j].position_nm,
                    format!("{base}.position_nm"),
                    format!("coincides with sample.spins[{j}]"),
                );
            }
        }

        let g = &self.probe.geometry;
        c.check(
            g.diameter_nm.is_finite() && (0.1..=100.0).contains(&g.diameter_nm),
            "probe.geometry.diameter_nm",
            format!("must lie in [0.1, 100] nm, got {}", g.diameter_nm),
        );
        c.positive(g.standoff_nm, "probe.geometry.standoff_nm");
        c.check(
            g.sensing_point != SensingPoint::VolumeAverage(0),
            "probe.geometry.sensing_point",
            "volume average needs at least one point",
        );

        let s = &self.probe.scheme;
        c.non_negative(s.pump_rate, "probe.scheme.pump_rate");
        c.non_negative(s.nonradiative_rate, "probe.scheme.nonradiative_rate");
        c.positive(s.radiative_rate, "probe.scheme.radiative_rate");
        c.non_negative(s.dark_decay_rate, "probe.scheme.dark_decay_rate");
        let b = &s.branching;
        c.check(
            (0.0..=1.0).contains(&b.bright) && (0.0..=1.0).contains(&b.dark),
            "probe.scheme.branching",
            "bright and dark must each lie in [0, 1]",
        );
        c.check(
            (b.bright + b.dark - 1.0).abs() <= 1e-12,
            "probe.scheme.branching",
            format!("bright + dark must equal 1, got {}", b.bright + b.dark),
        );

        let l = &self.probe.line;
        c.positive(l.g_factor, "probe.line.g_factor");
        c.positive(l.linewidth.tesla(), "probe.line.linewidth_T");
        c.non_negative(l.max_rf_rate, "probe.line.max_rf_rate");
        c.non_negative(l.rf_frequency, "probe.line.rf_frequency_Hz");
        c.non_negative(l.rf_amplitude_scale, "probe.line.rf_amplitude_scale");

        let w = &self.sweep;
        c.check(
            w.start.is_finite() && w.stop.is_finite() && w.start < w.stop,
            "sweep",
            "start must be finite and below stop",
        );
        c.non_negative(w.start, "sweep.start");
        c.check(w.points >= 3, "sweep.points", "at least 3 points required");
        c.positive(w.dwell_time, "sweep.dwell_time_s");

        let sc = &self.scan;
        c.check(
            sc.center_nm.iter().all(|v| v.is_finite()),
            "scan.center_nm",
            "must be finite",
        );
        c.positive(sc.x_range_nm, "scan.x_range_nm");
        c.positive(sc.y_range_nm, "scan.y_range_nm");
        c.check(sc.nx >= 1, "scan.nx", "must be >= 1");
        c.check(sc.ny >= 1, "scan.ny", "must be >= 1");

        c.non_negative(self.noise.photon_rate_scale, "noise.photon_rate_scale");
        if let Some(j) = self.modality.positioning_jitter_rms_nm {
            c.non_negative(j, "modality.positioning_jitter_rms_nm");
        }
        c.positive(self.report.photon_budget, "report.photon_budget");
        c.non_negative(self.report.threshold_fraction, "report.threshold_fraction");
        c.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// Converts to SI domain objects.
    pub fn build(&self) -> Result<Scene, SceneError> {
        let violations = self.violations();
        if !violations.is_empty() {
            return Err(SceneError::Invariant(violations));
        }
        let invariant = |path: &str, e: crate::Error| {
            SceneError::Invariant(vec![Violation {
                path: path.into(),
                message: e.to_string(),
            }])
        };

        let spins = self
            .sample
            .spins
            .iter()
            .map(|s| {
                let dir = Vec3::from(s.moment_direction)
                    .normalized()
                    .unwrap_or(Vec3::Z);
                SpinDipole::new(
                    Vec3::from(s.position_nm) * NM,
                    dir * (s.moment_magnitude_bohr * BOHR_MAGNETON),
                )
            })
            .collect();
        let sample = Sample::new(spins, Vec3::from(self.sample.bias_field))
            .map_err(|e| invariant("sample.spins", e))?;

        let p = &self.probe;
        let probe = Probe {
            id: p.id.clone(),
            geometry: ProbeGeometry {
                diameter: p.geometry.diameter_nm * NM,
                standoff: p.geometry.standoff_nm * NM,
                sensing_point: p.geometry.sensing_point,
            },
            scheme: LevelScheme {
                pump_rate: p.scheme.pump_rate,
                nonradiative_rate: p.scheme.nonradiative_rate,
                branching_bright: p.scheme.branching.bright,
                branching_dark: p.scheme.branching.dark,
                radiative_rate: p.scheme.radiative_rate,
                dark_decay_rate: p.scheme.dark_decay_rate,
            },
            line: OdmrLine {
                g_factor: p.line.g_factor,
                linewidth_fwhm: p.line.linewidth.tesla(),
                max_rf_rate: p.line.max_rf_rate,
                rf_frequency: p.line.rf_frequency,
                rf_amplitude_scale: p.line.rf_amplitude_scale,
            },
        };
        probe.validate().map_err(|e| invariant("probe", e))?;

        let sweep = SweepSpec {
            mode: self.sweep.mode,
            start: self.sweep.start,
            stop: self.sweep.stop,
            points: self.sweep.points,
            dwell_time: self.sweep.dwell_time,
        };
        let sc = &self.scan;
        let scan = ScanSpec {
            center: [sc.center_nm[0] * NM, sc.center_nm[1] * NM],
            x_range: sc.x_range_nm * NM,
            y_range: sc.y_range_nm * NM,
            nx: sc.nx,
            ny: sc.ny,
            sweep,
            noise: self.noise,
            observable: sc.observable,
        };
        let mut modality = Modality::preset(self.modality.kind);
        if let Some(j) = self.modality.positioning_jitter_rms_nm {
            modality.positioning_jitter_rms = j * NM;
        }

        Ok(Scene {
            sample,
            probe,
            sweep,
            scan,
            modality,
            photon_budget: self.report.photon_budget,
            detectability: DetectabilityOptions {
                spin_moment: crate::constants::ELECTRON_SPIN_MOMENT,
                threshold_fraction: self.report.threshold_fraction,
            },
        })
    }
}
