use crate::error::{Error, Result};

use super::image::ScanImage;

/// Peak must exceed this multiple of the border RMS.
const PEAK_TO_BORDER: f64 = 3.0;

/// Full width at half maximum of the |value| profile along the row through
/// the image's strongest pixel, between the outermost half-maximum crossings
/// on either side, with linear interpolation between pixels.
///
/// The off-peak level is the RMS over the image border (the row ends when the
/// image is a single line).
pub fn lateral_resolution(image: &ScanImage) -> Result<f64> {
    if image.nx < 3 {
        return Err(Error::NoPeak("need at least 3 pixels along x".into()));
    }
    let magnitude = |v: f64| if v.is_finite() { v.abs() } else { 0.0 };
    let (peak_idx, peak) = image
        .values
        .iter()
        .enumerate()
        .filter(|(k, _)| image.converged[*k])
        .map(|(k, &v)| (k, magnitude(v)))
        .fold((0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });

    let border: Vec<f64> = (0..image.ny)
        .flat_map(|iy| (0..image.nx).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| {
            ix == 0 || ix + 1 == image.nx || (image.ny > 1 && (iy == 0 || iy + 1 == image.ny))
        })
        .map(|(ix, iy)| magnitude(image.get(ix, iy)))
        .collect();
    let rms = (border.iter().map(|v| v * v).sum::<f64>() / border.len() as f64).sqrt();
    if peak.is_nan() || peak <= PEAK_TO_BORDER * rms {
        return Err(Error::NoPeak(format!(
            "peak {peak:e} does not exceed {PEAK_TO_BORDER} x border RMS {rms:e}"
        )));
    }

    let (px, py) = (peak_idx % image.nx, peak_idx / image.nx);
    let row: Vec<f64> = image.row(py).iter().map(|&v| magnitude(v)).collect();
    let half = 0.5 * peak;
    let x = &image.x;
    let interpolate = |inside: usize, outside: usize| {
        let frac = (row[inside] - half) / (row[inside] - row[outside]);
        x[inside] + frac * (x[outside] - x[inside])
    };
    // Outermost crossings: noise near the flanks can dip below half maximum
    // early, and stopping there would report a sharper feature than measured.
    let left = (0..px)
        .find(|&i| row[i + 1] >= half && row[i] < half)
        .map(|i| interpolate(i + 1, i));
    let right = ((px + 1)..image.nx)
        .rev()
        .find(|&i| row[i - 1] >= half && row[i] < half)
        .map(|i| interpolate(i - 1, i));
    match (left, right) {
        (Some(l), Some(r)) => Ok(r - l),
        _ => Err(Error::NoPeak(
            "profile does not fall to half maximum inside the image".into(),
        )),
    }
}
