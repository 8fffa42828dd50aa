use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Sample;
use crate::fit::{fit_lorentzian, FitResult};
use crate::probe::Probe;
use crate::rng::{position_stream, CounterRng, JITTER_INDEX, REFERENCE_STREAM};
use crate::spectrum::{add_shot_noise, sweep_keyed, NoiseSpec, SweepSpec};
use crate::vec3::Vec3;

use super::geometry::Modality;
use super::image::{ImageMetadata, ScanImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Signed resonance shift relative to the spin-free reference, T or Hz.
    ShiftMap,
    /// Relative PL change at the reference resonance position, dimensionless.
    ContrastMap,
}

/// Raster definition. Pixel centres span `center ± range/2` on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    /// Lateral scan centre (x, y), m.
    pub center: [f64; 2],
    /// m
    pub x_range: f64,
    /// m
    pub y_range: f64,
    pub nx: usize,
    pub ny: usize,
    pub sweep: SweepSpec,
    pub noise: NoiseSpec,
    pub observable: Observable,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::invalid("scan", "nx and ny must be >= 1"));
        }
        if !(self.x_range.is_finite() && self.x_range > 0.0)
            || !(self.y_range.is_finite() && self.y_range > 0.0)
        {
            return Err(Error::invalid("scan", "ranges must be finite and > 0"));
        }
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            return Err(Error::invalid("scan", "centre must be finite"));
        }
        self.sweep.validate()?;
        self.noise.validate()
    }

    pub fn x_coordinates(&self) -> Vec<f64> {
        pixel_coordinates(self.center[0], self.x_range, self.nx)
    }

    pub fn y_coordinates(&self) -> Vec<f64> {
        pixel_coordinates(self.center[1], self.y_range, self.ny)
    }
}

/// Pixel centres `center + (2i − (n − 1))·range / (2(n − 1))`. The integer
/// numerator makes the grid exactly mirror-symmetric about `center`.
pub fn pixel_coordinates(center: f64, range: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![center];
    }
    let step = range / (2 * (n - 1)) as f64;
    (0..n)
        .map(|i| center + (2 * i as i64 - (n as i64 - 1)) as f64 * step)
        .collect()
}

/// Raster-scans the probe and records the configured observable per pixel.
///
/// The spin-free reference resonance is fitted once. Each pixel draws its
/// lateral jitter and shot noise from counter streams keyed on the pixel's
/// nominal position, so pixels are independent and parallel evaluation is
/// bit-identical to sequential evaluation. Non-converged pixels are flagged;
/// more than half failing aborts the scan.
pub fn scan(
    sample: &Sample,
    probe: &Probe,
    spec: &ScanSpec,
    modality: &Modality,
) -> Result<ScanImage> {
    spec.validate()?;
    probe.validate()?;
    modality.validate()?;

    let reference = reference_fit(sample, probe, spec)?;
    let xs = spec.x_coordinates();
    let ys = spec.y_coordinates();

    let pixels: Vec<(f64, bool)> = (0..spec.nx * spec.ny)
        .into_par_iter()
        .map(|k| {
            let (ix, iy) = (k % spec.nx, k / spec.nx);
            measure_pixel(sample, probe, spec, modality, &reference, xs[ix], ys[iy])
        })
        .collect::<Result<_>>()?;

    let total = pixels.len();
    let failed = pixels.iter().filter(|(_, ok)| !ok).count();
    if 2 * failed > total {
        return Err(Error::ScanFailed { failed, total });
    }
    let (values, converged) = pixels.into_iter().unzip();
    Ok(ScanImage {
        nx: spec.nx,
        ny: spec.ny,
        x: xs,
        y: ys,
        values,
        converged,
        observable: spec.observable,
        units: match spec.observable {
            Observable::ShiftMap => spec.sweep.mode.unit().to_string(),
            Observable::ContrastMap => "1".to_string(),
        },
        meta: ImageMetadata {
            probe_id: probe.id.clone(),
            sample_hash: sample.content_hash(),
            seed: spec.noise.rng_seed,
            noise_enabled: spec.noise.enabled,
            modality: *modality,
            spec: *spec,
            reference,
        },
    })
}

fn reference_fit(sample: &Sample, probe: &Probe, spec: &ScanSpec) -> Result<FitResult> {
    let bare = sample.without_spins();
    let tip = Vec3::new(spec.center[0], spec.center[1], 0.0);
    let clean = sweep_keyed(&bare, probe, &spec.sweep, tip, REFERENCE_STREAM)?;
    let measured = add_shot_noise(&clean, &spec.noise)?;
    let fit = fit_lorentzian(&measured, None)?;
    if !fit.converged {
        return Err(Error::ReferenceFit(Box::new(fit)));
    }
    Ok(fit)
}

fn measure_pixel(
    sample: &Sample,
    probe: &Probe,
    spec: &ScanSpec,
    modality: &Modality,
    reference: &FitResult,
    x: f64,
    y: f64,
) -> Result<(f64, bool)> {
    let stream = position_stream(x, y);
    let mut tip = Vec3::new(x, y, 0.0);
    let sigma = modality.positioning_jitter_rms;
    if sigma > 0.0 {
        let mut rng = CounterRng::new(spec.noise.rng_seed, stream, JITTER_INDEX);
        let dx: f64 = StandardNormal.sample(&mut rng);
        let dy: f64 = StandardNormal.sample(&mut rng);
        tip += Vec3::new(sigma * dx, sigma * dy, 0.0);
    }
    let clean = sweep_keyed(sample, probe, &spec.sweep, tip, stream)?;
    let measured = add_shot_noise(&clean, &spec.noise)?;
    let fit = fit_lorentzian(&measured, None)?;
    let value = match spec.observable {
        Observable::ShiftMap => fit.center - reference.center,
        Observable::ContrastMap => {
            if fit.offset > 0.0 {
                (fit.shape().eval(reference.center) - fit.offset) / fit.offset
            } else {
                f64::NAN
            }
        }
    };
    let ok = fit.converged && value.is_finite();
    Ok((value, ok))
}
