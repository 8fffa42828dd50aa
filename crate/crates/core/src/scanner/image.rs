use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use crate::fit::FitResult;

use super::geometry::Modality;
use super::scan::{Observable, ScanSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageMetadata {
    pub probe_id: String,
    pub sample_hash: u64,
    pub seed: u64,
    pub noise_enabled: bool,
    pub modality: Modality,
    pub spec: ScanSpec,
    /// Spin-free reference fit the shifts are measured against.
    pub reference: FitResult,
}

/// Per-pixel observable on an `nx × ny` grid, row-major with `y` as the row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanImage {
    pub nx: usize,
    pub ny: usize,
    /// Pixel centre coordinates, m.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub values: Vec<f64>,
    /// `false` marks a pixel whose fit did not converge; its value is the
    /// best-so-far estimate.
    pub converged: Vec<bool>,
    pub observable: Observable,
    pub units: String,
    pub meta: ImageMetadata,
}

impl ScanImage {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn row(&self, iy: usize) -> &[f64] {
        &self.values[iy * self.nx..(iy + 1) * self.nx]
    }

    pub fn failed_pixels(&self) -> Vec<[usize; 2]> {
        self.converged
            .iter()
            .enumerate()
            .filter(|(_, ok)| !**ok)
            .map(|(k, _)| [k % self.nx, k / self.nx])
            .collect()
    }

    /// Finite min and max over the image; (0, 0) when nothing is finite.
    pub fn value_range(&self) -> (f64, f64) {
        let (lo, hi) = self
            .values
            .iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if lo.is_finite() {
            (lo, hi)
        } else {
            (0.0, 0.0)
        }
    }

    /// Plain-text matrix: `ny` lines of `nx` comma-separated values.
    pub fn to_matrix_csv(&self) -> String {
        let mut out = String::new();
        for iy in 0..self.ny {
            for (ix, v) in self.row(iy).iter().enumerate() {
                if ix > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Binary 16-bit PGM (P5, big-endian), linear min–max normalization.
    /// Non-finite pixels map to 0.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (lo, hi) = self.value_range();
        let span = hi - lo;
        let mut out = format!("P5\n{} {}\n65535\n", self.nx, self.ny).into_bytes();
        out.reserve(2 * self.values.len());
        for &v in &self.values {
            let level = if v.is_finite() && span > 0.0 {
                (((v - lo) / span) * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            };
            out.extend_from_slice(&level.to_be_bytes());
        }
        out
    }

    /// Companion metadata for the CSV and PGM outputs.
    pub fn metadata_json(&self) -> serde_json::Value {
        let (min, max) = self.value_range();
        json!({
            "min": min,
            "max": max,
            "units": self.units,
            "observable": self.observable,
            "nx": self.nx,
            "ny": self.ny,
            "x_m": self.x,
            "y_m": self.y,
            "seed": self.meta.seed,
            "noise_enabled": self.meta.noise_enabled,
            "probe_id": self.meta.probe_id,
            "sample_hash": format!("{:#018x}", self.meta.sample_hash),
            "modality": self.meta.modality,
            "spec": self.meta.spec,
            "reference_fit": self.meta.reference,
            "nonconverged_pixels": self.failed_pixels(),
            "pgm_normalization": "linear: level = round(65535 * (value - min) / (max - min))",
        })
    }
}
