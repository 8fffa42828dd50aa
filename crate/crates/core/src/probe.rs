//! Steady-state photoluminescence of the nanoprobe.
//!
//! Level 1 is the ground state, level 2 the optically pumped state, and the
//! luminescent manifold 3 is split into a bright sublevel that decays
//! radiatively to level 1 and a dark sublevel that returns without emitting.
//! The rf field mixes the two sublevels at a Lorentzian rate centred on the
//! Zeeman resonance. The PL rises on resonance when β_d·k_r exceeds β_b·k_d
//! and falls when it is smaller; equal products give no contrast.

use serde::{Deserialize, Serialize};

use crate::constants::{PhysicalConstants, G_ELECTRON};
use crate::error::{Error, Result};
use crate::field::zeeman_frequency;
use crate::scanner::ProbeGeometry;

/// Rates of the four-level scheme, all in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    /// Optical pump 1 → 2.
    pub pump_rate: f64,
    /// Non-radiative 2 → 3.
    pub nonradiative_rate: f64,
    /// Fraction of 2 → 3 feeding the bright sublevel.
    pub branching_bright: f64,
    /// Fraction of 2 → 3 feeding the dark sublevel.
    pub branching_dark: f64,
    /// Bright sublevel → 1, photon-emitting.
    pub radiative_rate: f64,
    /// Dark sublevel → 1, non-emitting.
    pub dark_decay_rate: f64,
}

impl Default for LevelScheme {
    fn default() -> Self {
        Self {
            pump_rate: 1.0e6,
            nonradiative_rate: 1.0e9,
            branching_bright: 0.7,
            branching_dark: 0.3,
            radiative_rate: 1.0e8,
            dark_decay_rate: 1.0e5,
        }
    }
}

impl LevelScheme {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("pump_rate", self.pump_rate),
            ("nonradiative_rate", self.nonradiative_rate),
            ("radiative_rate", self.radiative_rate),
            ("dark_decay_rate", self.dark_decay_rate),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        if self.radiative_rate <= 0.0 {
            return Err(Error::invalid("radiative_rate", "must be > 0"));
        }
        for (name, v) in [
            ("branching_bright", self.branching_bright),
            ("branching_dark", self.branching_dark),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        let sum = self.branching_bright + self.branching_dark;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "branching",
                format!("bright + dark must equal 1, got {sum}"),
            ));
        }
        Ok(())
    }

    fn max_rate(&self, mixing: f64) -> f64 {
        [
            self.pump_rate,
            self.nonradiative_rate,
            self.radiative_rate,
            self.dark_decay_rate,
            mixing,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Quoted ODMR widths, teslas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinewidthPreset {
    /// Broad end of the quantum-dot range, 0.1 T.
    QuantumDotBroad,
    /// Sharp end of the quantum-dot range, 0.002 T.
    QuantumDotNarrow,
    /// Low-temperature dye molecule, 0.001 T.
    DyeMolecule,
}

impl LinewidthPreset {
    pub const ALL: [LinewidthPreset; 3] = [
        LinewidthPreset::QuantumDotBroad,
        LinewidthPreset::QuantumDotNarrow,
        LinewidthPreset::DyeMolecule,
    ];

    pub fn fwhm_tesla(self) -> f64 {
        match self {
            LinewidthPreset::QuantumDotBroad => 0.1,
            LinewidthPreset::QuantumDotNarrow => 0.002,
            LinewidthPreset::DyeMolecule => 0.001,
        }
    }
}

/// The probe's magnetic-resonance line and rf drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdmrLine {
    pub g_factor: f64,
    /// FWHM in field units, T.
    pub linewidth_fwhm: f64,
    /// Sublevel mixing rate at exact resonance for unit drive, s⁻¹.
    pub max_rf_rate: f64,
    /// rf frequency, Hz.
    pub rf_frequency: f64,
    /// Multiplier on `max_rf_rate`; scales as the square of the rf amplitude.
    pub rf_amplitude_scale: f64,
}

impl Default for OdmrLine {
    /// g = 2.0023, 2 mT width, W0 = 1e8 s⁻¹, rf resonant with 0.1 T.
    fn default() -> Self {
        Self {
            g_factor: G_ELECTRON,
            linewidth_fwhm: LinewidthPreset::QuantumDotNarrow.fwhm_tesla(),
            max_rf_rate: 1.0e8,
            rf_frequency: PhysicalConstants::SI.hz_per_tesla(G_ELECTRON) * 0.1,
            rf_amplitude_scale: 1.0,
        }
    }
}

impl OdmrLine {
    pub fn validate(&self) -> Result<()> {
        if !(self.g_factor.is_finite() && self.g_factor > 0.0) {
            return Err(Error::invalid("g_factor", "must be finite and > 0"));
        }
        if !(self.linewidth_fwhm.is_finite() && self.linewidth_fwhm > 0.0) {
            return Err(Error::invalid("linewidth_fwhm", "must be finite and > 0"));
        }
        if !(self.max_rf_rate.is_finite() && self.max_rf_rate >= 0.0) {
            return Err(Error::invalid("max_rf_rate", "must be finite and >= 0"));
        }
        if !(self.rf_frequency.is_finite() && self.rf_frequency >= 0.0) {
            return Err(Error::invalid("rf_frequency", "must be finite and >= 0"));
        }
        if !(self.rf_amplitude_scale.is_finite() && self.rf_amplitude_scale >= 0.0) {
            return Err(Error::invalid(
                "rf_amplitude_scale",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Linewidth converted to frequency units, Hz.
    pub fn linewidth_hz(&self) -> f64 {
        PhysicalConstants::SI.hz_per_tesla(self.g_factor) * self.linewidth_fwhm
    }

    pub fn peak_rf_rate(&self) -> f64 {
        self.max_rf_rate * self.rf_amplitude_scale
    }

    pub fn with_rf_frequency(mut self, rf_frequency: f64) -> Self {
        self.rf_frequency = rf_frequency;
        self
    }
}

/// Occupation probabilities of the four levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Populations {
    pub ground: f64,
    pub pumped: f64,
    pub bright: f64,
    pub dark: f64,
}

impl Populations {
    pub fn total(&self) -> f64 {
        self.ground + self.pumped + self.bright + self.dark
    }

    /// Time derivatives of the rate equations at these populations. All four
    /// vanish at the stationary point.
    pub fn rate_residuals(&self, scheme: &LevelScheme, mixing_rate: f64) -> [f64; 4] {
        let s = scheme;
        let w = mixing_rate;
        [
            -s.pump_rate * self.ground
                + s.radiative_rate * self.bright
                + s.dark_decay_rate * self.dark,
            s.pump_rate * self.ground - s.nonradiative_rate * self.pumped,
            s.branching_bright * s.nonradiative_rate * self.pumped - s.radiative_rate * self.bright
                + w * (self.dark - self.bright),
            s.branching_dark * s.nonradiative_rate * self.pumped - s.dark_decay_rate * self.dark
                + w * (self.bright - self.dark),
        ]
    }
}

/// A complete probe: identifier, geometry, level scheme and ODMR line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub id: String,
    pub geometry: ProbeGeometry,
    pub scheme: LevelScheme,
    pub line: OdmrLine,
}

impl Default for Probe {
    fn default() -> Self {
        Self {
            id: "nanoprobe".into(),
            geometry: ProbeGeometry::default(),
            scheme: LevelScheme::default(),
            line: OdmrLine::default(),
        }
    }
}

impl Probe {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.scheme.validate()?;
        self.line.validate()
    }
}

/// Unit-peak Lorentzian (Γ/2)²/(δ² + (Γ/2)²).
#[inline]
pub(crate) fn unit_lorentzian(detuning: f64, fwhm: f64) -> f64 {
    let hw2 = 0.25 * fwhm * fwhm;
    hw2 / (detuning * detuning + hw2)
}

/// Sublevel mixing rate W induced by the rf field at a local field magnitude.
pub fn rf_mixing_rate(line: &OdmrLine, local_field: f64) -> Result<f64> {
    let resonance = zeeman_frequency(local_field, line.g_factor)?;
    Ok(line.peak_rf_rate() * unit_lorentzian(line.rf_frequency - resonance, line.linewidth_hz()))
}

/// Stationary populations of the rate equations at mixing rate `mixing_rate`.
///
/// `pump_rate == 0` yields the all-ground solution. Otherwise the 4×4 system
/// (three rate equations plus normalization) is solved directly; a singular
/// system is an error.
pub fn steady_state(scheme: &LevelScheme, mixing_rate: f64) -> Result<Populations> {
    scheme.validate()?;
    if !(mixing_rate.is_finite() && mixing_rate >= 0.0) {
        return Err(Error::invalid(
            "mixing_rate",
            format!("must be >= 0, got {mixing_rate}"),
        ));
    }
    if scheme.pump_rate == 0.0 {
        return Ok(Populations {
            ground: 1.0,
            pumped: 0.0,
            bright: 0.0,
            dark: 0.0,
        });
    }

    let s = scheme;
    let w = mixing_rate;
    // rate rows are divided by the largest rate to keep the system O(1)
    let inv = 1.0 / s.max_rate(w);
    let k23 = s.nonradiative_rate * inv;
    let p = s.pump_rate * inv;
    let kr = s.radiative_rate * inv;
    let kd = s.dark_decay_rate * inv;
    let wn = w * inv;
    let a = [
        [1.0, 1.0, 1.0, 1.0],
        [p, -k23, 0.0, 0.0],
        [0.0, s.branching_bright * k23, -(kr + wn), wn],
        [0.0, s.branching_dark * k23, wn, -(kd + wn)],
    ];
    let n = crate::linalg::solve(a, [1.0, 0.0, 0.0, 0.0], 1e-14).ok_or(Error::SingularSystem)?;
    Ok(Populations {
        ground: n[0].max(0.0),
        pumped: n[1].max(0.0),
        bright: n[2].max(0.0),
        dark: n[3].max(0.0),
    })
}

fn emission_rate(scheme: &LevelScheme, mixing_rate: f64) -> Result<f64> {
    Ok(scheme.radiative_rate * steady_state(scheme, mixing_rate)?.bright)
}

/// Photon emission rate k_r·n_bright, s⁻¹, at a local field magnitude.
pub fn pl_intensity(scheme: &LevelScheme, line: &OdmrLine, local_field: f64) -> Result<f64> {
    emission_rate(scheme, rf_mixing_rate(line, local_field)?)
}

/// Emission rate with the rf drive off.
pub fn baseline_intensity(scheme: &LevelScheme) -> Result<f64> {
    emission_rate(scheme, 0.0)
}

/// Relative PL change on exact resonance, (I_on − I_off)/I_off. The rf
/// frequency is taken resonant with `local_field_at_resonance`.
pub fn odmr_contrast(
    scheme: &LevelScheme,
    line: &OdmrLine,
    local_field_at_resonance: f64,
) -> Result<f64> {
    let off = baseline_intensity(scheme)?;
    if off <= 0.0 {
        return Err(Error::Domain("undriven PL intensity is zero".into()));
    }
    let tuned = line.with_rf_frequency(zeeman_frequency(local_field_at_resonance, line.g_factor)?);
    let on = pl_intensity(scheme, &tuned, local_field_at_resonance)?;
    Ok((on - off) / off)
}

/// Saturation-broadened FWHM of the PL resonance in teslas.
///
/// PL is a linear-fractional function of the mixing rate, so a Lorentzian
/// mixing rate yields a Lorentzian PL line, widened by √(1 + s) where s is
/// the saturation parameter of the drive. `None` when the pump or the
/// non-radiative step is off.
pub fn observed_linewidth(scheme: &LevelScheme, line: &OdmrLine) -> Option<f64> {
    let s = scheme;
    if s.pump_rate <= 0.0 || s.nonradiative_rate <= 0.0 {
        return None;
    }
    let a = 1.0 / s.pump_rate + 1.0 / s.nonradiative_rate;
    let kr = s.radiative_rate;
    let kd = s.dark_decay_rate;
    let c = a * kr * kd + s.branching_bright * kd + s.branching_dark * kr;
    let d = a * (kr + kd) + 2.0;
    let saturation = line.peak_rf_rate() * d / c;
    saturation
        .is_finite()
        .then(|| line.linewidth_fwhm * (1.0 + saturation).sqrt())
}
