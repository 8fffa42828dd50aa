use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Where inside the probe the field is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingPoint {
    /// Near edge of the probe, `standoff` above the surface.
    Edge,
    /// Probe centre, `standoff + diameter/2` above the surface.
    Center,
    /// PL averaged over this many quasi-uniform points inside the probe.
    VolumeAverage(usize),
}

/// Spherical probe at the tip apex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeGeometry {
    /// m
    pub diameter: f64,
    /// Gap between the probe's near edge and the surface, m.
    pub standoff: f64,
    pub sensing_point: SensingPoint,
}

impl Default for ProbeGeometry {
    /// 1 nm probe, 5 Å gap, edge sensing.
    fn default() -> Self {
        Self {
            diameter: 1.0e-9,
            standoff: 5.0e-10,
            sensing_point: SensingPoint::Edge,
        }
    }
}

impl ProbeGeometry {
    pub const MIN_DIAMETER: f64 = 1.0e-10;
    pub const MAX_DIAMETER: f64 = 1.0e-7;

    pub fn validate(&self) -> Result<()> {
        if !(self.diameter.is_finite()
            && (Self::MIN_DIAMETER..=Self::MAX_DIAMETER).contains(&self.diameter))
        {
            return Err(Error::invalid(
                "diameter",
                format!("must lie in [1e-10, 1e-7] m, got {}", self.diameter),
            ));
        }
        if !(self.standoff.is_finite() && self.standoff > 0.0) {
            return Err(Error::invalid("standoff", "must be finite and > 0"));
        }
        if self.sensing_point == SensingPoint::VolumeAverage(0) {
            return Err(Error::invalid(
                "sensing_point",
                "volume average needs at least one point",
            ));
        }
        Ok(())
    }

    /// Height of the sensing point (or probe centre, for volume averaging).
    pub fn sensing_height(&self) -> f64 {
        match self.sensing_point {
            SensingPoint::Edge => self.standoff,
            SensingPoint::Center | SensingPoint::VolumeAverage(_) => {
                self.standoff + 0.5 * self.diameter
            }
        }
    }
}

/// Field sampling points for a tip whose axis meets the surface at
/// `(tip.x, tip.y)`; `tip.z` lifts the whole probe.
pub fn sensing_position(geometry: &ProbeGeometry, tip: Vec3) -> Vec<Vec3> {
    let center = Vec3::new(
        tip.x,
        tip.y,
        tip.z + geometry.standoff + 0.5 * geometry.diameter,
    );
    match geometry.sensing_point {
        SensingPoint::Edge => vec![Vec3::new(tip.x, tip.y, tip.z + geometry.standoff)],
        SensingPoint::Center | SensingPoint::VolumeAverage(0 | 1) => vec![center],
        SensingPoint::VolumeAverage(n) => {
            let radius = 0.5 * geometry.diameter;
            (1..=n as u64)
                .map(|i| {
                    // Halton (2, 3, 5) mapped to a uniform ball
                    let r = radius * halton(i, 2).cbrt();
                    let cos_theta = 2.0 * halton(i, 3) - 1.0;
                    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
                    let phi = std::f64::consts::TAU * halton(i, 5);
                    center
                        + Vec3::new(
                            r * sin_theta * phi.cos(),
                            r * sin_theta * phi.sin(),
                            r * cos_theta,
                        )
                })
                .collect()
        }
    }
}

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut out = 0.0;
    while index > 0 {
        f /= base as f64;
        out += f * (index % base) as f64;
        index /= base;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModalityKind {
    /// Apertureless AFM/NSOM tip; resolution set by the probe size.
    AfmNsom,
    /// Cantilevered optical fibre; resolution set by positioning accuracy.
    CantileveredFiber,
    /// STM tip; resolution set by the probe size.
    Stm,
}

/// Scanning platform and its lateral positioning error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modality {
    pub kind: ModalityKind,
    /// RMS lateral displacement per axis, m.
    pub positioning_jitter_rms: f64,
}

impl Modality {
    pub fn preset(kind: ModalityKind) -> Self {
        let positioning_jitter_rms = match kind {
            ModalityKind::AfmNsom | ModalityKind::Stm => 0.0,
            ModalityKind::CantileveredFiber => 2.0e-8,
        };
        Self {
            kind,
            positioning_jitter_rms,
        }
    }

    pub fn with_jitter(mut self, rms: f64) -> Self {
        self.positioning_jitter_rms = rms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.positioning_jitter_rms.is_finite() && self.positioning_jitter_rms >= 0.0) {
            return Err(Error::invalid(
                "positioning_jitter_rms",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

impl Default for Modality {
    fn default() -> Self {
        Self::preset(ModalityKind::AfmNsom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_and_center_heights() {
        let g = ProbeGeometry::default();
        assert_eq!(
            sensing_position(&g, Vec3::ZERO),
            vec![Vec3::new(0.0, 0.0, 5e-10)]
        );
        let c = ProbeGeometry {
            sensing_point: SensingPoint::Center,
            ..g
        };
        assert_eq!(
            sensing_position(&c, Vec3::ZERO),
            vec![Vec3::new(0.0, 0.0, 1e-9)]
        );
        let v1 = ProbeGeometry {
            sensing_point: SensingPoint::VolumeAverage(1),
            ..g
        };
        assert_eq!(
            sensing_position(&v1, Vec3::ZERO),
            vec![Vec3::new(0.0, 0.0, 1e-9)]
        );
    }

    #[test]
    fn volume_points_fill_the_ball() {
        let g = ProbeGeometry {
            sensing_point: SensingPoint::VolumeAverage(400),
            ..ProbeGeometry::default()
        };
        let pts = sensing_position(&g, Vec3::new(1e-9, 2e-9, 0.0));
        assert_eq!(pts.len(), 400);
        let center = Vec3::new(1e-9, 2e-9, 1e-9);
        let mut mean = Vec3::ZERO;
        for p in &pts {
            assert!((*p - center).norm() <= 0.5e-9 * (1.0 + 1e-12));
            mean += (*p - center) / 400.0;
        }
        // quasi-uniform: centroid near the centre
        assert!(mean.norm() < 0.03e-9);
        assert_eq!(pts, sensing_position(&g, Vec3::new(1e-9, 2e-9, 0.0)));
    }

    #[test]
    fn geometry_limits() {
        let g = ProbeGeometry::default();
        assert!(g.validate().is_ok());
        assert!(ProbeGeometry {
            diameter: 5e-11,
            ..g
        }
        .validate()
        .is_err());
        assert!(ProbeGeometry {
            diameter: 2e-7,
            ..g
        }
        .validate()
        .is_err());
        assert!(ProbeGeometry { standoff: 0.0, ..g }.validate().is_err());
    }

    #[test]
    fn modality_presets() {
        assert_eq!(
            Modality::preset(ModalityKind::Stm).positioning_jitter_rms,
            0.0
        );
        assert_eq!(
            Modality::preset(ModalityKind::AfmNsom).positioning_jitter_rms,
            0.0
        );
        assert_eq!(
            Modality::preset(ModalityKind::CantileveredFiber).positioning_jitter_rms,
            2e-8
        );
        assert!(Modality::default().with_jitter(-1.0).validate().is_err());
    }
}
