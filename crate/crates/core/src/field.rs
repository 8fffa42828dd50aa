//! Point-dipole magnetostatics and the Zeeman resonance relation.

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Evaluation points closer than this to a spin are rejected.
pub const EXCLUSION_RADIUS: f64 = 1.0e-12;

/// A static point magnetic moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinDipole {
    /// Position, m.
    pub position: Vec3,
    /// Moment, J/T.
    pub moment: Vec3,
}

impl SpinDipole {
    pub fn new(position: Vec3, moment: Vec3) -> Self {
        Self { position, moment }
    }

    /// A single unpaired electron at `position` with its moment along `direction`.
    pub fn electron(position: Vec3, direction: Vec3) -> Result<Self> {
        let unit = direction
            .normalized()
            .ok_or_else(|| Error::invalid("direction", "moment direction must be non-zero"))?;
        Ok(Self::new(
            position,
            unit * crate::constants::ELECTRON_SPIN_MOMENT,
        ))
    }
}

/// Point spins plus the uniform permanent-magnet bias field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    spins: Vec<SpinDipole>,
    bias_field: Vec3,
}

impl Sample {
    /// Checks finiteness, non-zero moments and pairwise-distinct positions.
    pub fn new(spins: Vec<SpinDipole>, bias_field: Vec3) -> Result<Self> {
        if !bias_field.is_finite() {
            return Err(Error::invalid("bias_field", "components must be finite"));
        }
        for (i, s) in spins.iter().enumerate() {
            if !s.position.is_finite() || !s.moment.is_finite() {
                return Err(Error::invalid(
                    "spins",
                    format!("spin {i} has non-finite position or moment"),
                ));
            }
            if s.moment.norm() <= 0.0 {
                return Err(Error::invalid("spins", format!("spin {i} has zero moment")));
            }
        }
        for i in 0..spins.len() {
            for j in (i + 1)..spins.len() {
                if (spins[i].position - spins[j].position).norm() <= EXCLUSION_RADIUS {
                    return Err(Error::invalid(
                        "spins",
                        format!("spins {i} and {j} share a position"),
                    ));
                }
            }
        }
        Ok(Self { spins, bias_field })
    }

    pub fn empty(bias_field: Vec3) -> Self {
        Self {
            spins: Vec::new(),
            bias_field,
        }
    }

    pub fn spins(&self) -> &[SpinDipole] {
        &self.spins
    }

    pub fn bias_field(&self) -> Vec3 {
        self.bias_field
    }

    /// Same bias field, no spins. Used for reference resonances.
    pub fn without_spins(&self) -> Sample {
        Sample::empty(self.bias_field)
    }

    pub fn with_bias(&self, bias_field: Vec3) -> Sample {
        Sample {
            spins: self.spins.clone(),
            bias_field,
        }
    }

    /// Field of the spins alone at `point` (no bias).
    pub fn spin_field(&self, point: Vec3) -> Result<Vec3> {
        let mut acc = Vec3::ZERO;
        for spin in &self.spins {
            let d = point - spin.position;
            if d.norm() <= EXCLUSION_RADIUS {
                return Err(Error::CoincidentPoint {
                    point: point.to_array(),
                    spin: spin.position.to_array(),
                });
            }
            acc += dipole_field_unchecked(spin.moment, d);
        }
        Ok(acc)
    }

    /// Stable FNV-1a hash of the scene's bit patterns, recorded in output metadata.
    pub fn content_hash(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut feed = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for v in self.bias_field.to_array() {
            feed(v);
        }
        for s in &self.spins {
            for v in s.position.to_array().into_iter().chain(s.moment.to_array()) {
                feed(v);
            }
        }
        h
    }
}

/// Field of a point dipole `moment` (J/T) at `displacement` (m) from it:
/// (μ0/4π)·(3n(m·n) − m)/r³.
pub fn dipole_field(moment: Vec3, displacement: Vec3) -> Result<Vec3> {
    if !moment.is_finite() || !displacement.is_finite() {
        return Err(Error::Domain("non-finite moment or displacement".into()));
    }
    if displacement.norm() <= EXCLUSION_RADIUS {
        return Err(Error::Domain(format!(
            "displacement {:?} is inside the {EXCLUSION_RADIUS:e} m exclusion radius",
            displacement.to_array()
        )));
    }
    Ok(dipole_field_unchecked(moment, displacement))
}

#[inline]
fn dipole_field_unchecked(moment: Vec3, displacement: Vec3) -> Vec3 {
    let r2 = displacement.norm_squared();
    let r = r2.sqrt();
    let n = displacement / r;
    let r3 = r2 * r;
    (3.0 * moment.dot(n) * n - moment) * (PhysicalConstants::SI.mu0_over_4pi() / r3)
}

/// Bias field plus the superposed dipole fields of every spin in the sample.
pub fn total_field(sample: &Sample, point: Vec3) -> Result<Vec3> {
    if !point.is_finite() {
        return Err(Error::Domain("non-finite evaluation point".into()));
    }
    Ok(sample.bias_field + sample.spin_field(point)?)
}

/// Resonance frequency ν = g·μ_B·B/h, Hz.
pub fn zeeman_frequency(field_magnitude: f64, g_factor: f64) -> Result<f64> {
    if !field_magnitude.is_finite() || field_magnitude < 0.0 {
        return Err(Error::Domain(format!(
            "field magnitude must be finite and non-negative, got {field_magnitude}"
        )));
    }
    if !g_factor.is_finite() {
        return Err(Error::Domain("non-finite g-factor".into()));
    }
    Ok(PhysicalConstants::SI.hz_per_tesla(g_factor) * field_magnitude)
}

/// Inverse of [`zeeman_frequency`]: field magnitude resonant with `frequency`.
pub fn resonant_field(frequency: f64, g_factor: f64) -> Result<f64> {
    if !frequency.is_finite() || frequency < 0.0 {
        return Err(Error::Domain(format!(
            "frequency must be finite and non-negative, got {frequency}"
        )));
    }
    if !(g_factor.is_finite() && g_factor > 0.0) {
        return Err(Error::Domain("g-factor must be positive".into()));
    }
    Ok(frequency / PhysicalConstants::SI.hz_per_tesla(g_factor))
}
