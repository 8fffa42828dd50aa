use serde::{Deserialize, Serialize};

use crate::constants::ELECTRON_SPIN_MOMENT;
use crate::error::{Error, Result};
use crate::field::{resonant_field, Sample, SpinDipole};
use crate::probe::{observed_linewidth, odmr_contrast, LevelScheme, OdmrLine};
use crate::vec3::Vec3;

use super::geometry::{sensing_position, ProbeGeometry};

pub const SENSITIVITY_MODEL: &str =
    "shot-noise limit: min_detectable_field = linewidth / (|contrast| * sqrt(photon_budget))";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectabilityOptions {
    /// Moment of the single sample spin, J/T.
    pub spin_moment: f64,
    /// The shift must exceed this fraction of the linewidth.
    pub threshold_fraction: f64,
}

impl Default for DetectabilityOptions {
    fn default() -> Self {
        Self {
            spin_moment: ELECTRON_SPIN_MOMENT,
            threshold_fraction: 1.0,
        }
    }
}

/// Single-spin field against the ODMR linewidth and the shot-noise floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectabilityReport {
    /// Single-spin field magnitude at the sensing point, T.
    #[serde(rename = "field_T")]
    pub field: f64,
    /// Configured linewidth, T.
    #[serde(rename = "linewidth_T")]
    pub linewidth: f64,
    /// `field / linewidth`.
    pub ratio: f64,
    /// Saturation-broadened width of the PL line, T.
    #[serde(rename = "observed_linewidth_T")]
    pub observed_linewidth: Option<f64>,
    pub contrast: f64,
    pub photon_budget: f64,
    /// Shot-noise-limited minimum detectable field, T; absent without contrast.
    #[serde(rename = "min_detectable_field_T")]
    pub min_detectable_field: Option<f64>,
    #[serde(rename = "threshold_T")]
    pub threshold: f64,
    pub detectable: bool,
    pub verdict: String,
    pub flags: Vec<String>,
    pub sensitivity_model: String,
    pub sensing_height_m: f64,
}

/// Report for one electron spin perpendicular to the surface directly below
/// the tip, with the default options.
pub fn detectability_report(
    geometry: &ProbeGeometry,
    line: &OdmrLine,
    scheme: &LevelScheme,
    photon_budget: f64,
) -> Result<DetectabilityReport> {
    detectability_report_with(
        geometry,
        line,
        scheme,
        photon_budget,
        &DetectabilityOptions::default(),
    )
}

pub fn detectability_report_with(
    geometry: &ProbeGeometry,
    line: &OdmrLine,
    scheme: &LevelScheme,
    photon_budget: f64,
    options: &DetectabilityOptions,
) -> Result<DetectabilityReport> {
    geometry.validate()?;
    line.validate()?;
    scheme.validate()?;
    if !(photon_budget.is_finite() && photon_budget > 0.0) {
        return Err(Error::invalid("photon_budget", "must be finite and > 0"));
    }
    if !(options.spin_moment.is_finite() && options.spin_moment > 0.0) {
        return Err(Error::invalid("spin_moment", "must be finite and > 0"));
    }
    if !(options.threshold_fraction.is_finite() && options.threshold_fraction >= 0.0) {
        return Err(Error::invalid(
            "threshold_fraction",
            "must be finite and >= 0",
        ));
    }

    let spin = SpinDipole::new(Vec3::ZERO, Vec3::Z * options.spin_moment);
    let sample = Sample::new(vec![spin], Vec3::ZERO)?;
    let points = sensing_position(geometry, Vec3::ZERO);
    let mut mean = Vec3::ZERO;
    for &p in &points {
        mean += sample.spin_field(p)?;
    }
    let field = (mean / points.len() as f64).norm();

    let linewidth = line.linewidth_fwhm;
    let mut flags = Vec::new();
    let b_res = resonant_field(line.rf_frequency, line.g_factor)?;
    let contrast = match odmr_contrast(scheme, line, b_res) {
        Ok(c) => c,
        Err(Error::Domain(_)) => {
            flags.push("probe emits no photons without rf drive".to_string());
            0.0
        }
        Err(e) => return Err(e),
    };
    let min_detectable_field = if contrast.abs() > 1e-12 {
        Some(linewidth / (contrast.abs() * photon_budget.sqrt()))
    } else {
        flags.push("no ODMR contrast".to_string());
        None
    };
    let threshold = options.threshold_fraction * linewidth;
    let detectable = min_detectable_field.is_some_and(|db| field > threshold.max(db));
    let verdict = if min_detectable_field.is_none() {
        "no ODMR contrast"
    } else if detectable {
        "detectable"
    } else {
        "not detectable"
    };

    Ok(DetectabilityReport {
        field,
        linewidth,
        ratio: field / linewidth,
        observed_linewidth: observed_linewidth(scheme, line),
        contrast,
        photon_budget,
        min_detectable_field,
        threshold,
        detectable,
        verdict: verdict.to_string(),
        flags,
        sensitivity_model: SENSITIVITY_MODEL.to_string(),
        sensing_height_m: geometry.sensing_height(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::LinewidthPreset;
    use approx::assert_relative_eq;

    fn estimate_options() -> DetectabilityOptions {
        DetectabilityOptions {
            spin_moment: 9.28e-24,
            ..DetectabilityOptions::default()
        }
    }

    #[test]
    fn narrow_line_is_detectable() {
        let r = detectability_report_with(
            &ProbeGeometry::default(),
            &OdmrLine::default(),
            &LevelScheme::default(),
            1e6,
            &estimate_options(),
        )
        .unwrap();
        assert_relative_eq!(r.field, 1.4848e-2, max_relative = 1e-12);
        assert_relative_eq!(r.ratio, 7.424, max_relative = 1e-12);
        assert!(r.detectable);
        assert_eq!(r.verdict, "detectable");
    }

    #[test]
    fn broad_line_is_not_detectable_by_shift() {
        let line = OdmrLine {
            linewidth_fwhm: LinewidthPreset::QuantumDotBroad.fwhm_tesla(),
            ..OdmrLine::default()
        };
        let r = detectability_report_with(
            &ProbeGeometry::default(),
            &line,
            &LevelScheme::default(),
            1e6,
            &estimate_options(),
        )
        .unwrap();
        assert_relative_eq!(r.ratio, 0.14848, max_relative = 1e-12);
        assert!(!r.detectable);
        assert_eq!(r.verdict, "not detectable");
    }

    #[test]
    fn symmetric_scheme_is_flagged() {
        let scheme = LevelScheme {
            branching_bright: 0.5,
            branching_dark: 0.5,
            dark_decay_rate: 1e8,
            ..LevelScheme::default()
        };
        let r = detectability_report(
            &ProbeGeometry::default(),
            &OdmrLine::default(),
            &scheme,
            1e6,
        )
        .unwrap();
        assert!(r.min_detectable_field.is_none());
        assert!(!r.detectable);
        assert_eq!(r.verdict, "no ODMR contrast");
        assert!(r.flags.iter().any(|f| f == "no ODMR contrast"));
    }

    #[test]
    fn shot_noise_floor_formula() {
        let r = detectability_report(
            &ProbeGeometry::default(),
            &OdmrLine::default(),
            &LevelScheme::default(),
            1e4,
        )
        .unwrap();
        let expected = 2e-3 / (r.contrast.abs() * 100.0);
        assert_relative_eq!(
            r.min_detectable_field.unwrap(),
            expected,
            max_relative = 1e-14
        );
    }
}
