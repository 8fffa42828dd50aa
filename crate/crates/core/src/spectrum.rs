//! ODMR spectra in both measurement modes, plus photon shot noise.
//!
//! In a field sweep the rf frequency stays at the line's setting and the
//! magnitude of the permanent field is stepped along the bias direction. In
//! a frequency sweep the permanent field stays fixed and the rf frequency is
//! stepped. Intensities are expected photon counts, PL rate × dwell time.

use std::fmt::Write as _;
use std::str::FromStr;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Sample;
use crate::probe::{pl_intensity, Probe};
use crate::rng::{position_stream, CounterRng};
use crate::scanner::sensing_position;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Permanent-field magnitude varied, rf frequency fixed. Abscissa in T.
    FieldSweep,
    /// rf frequency varied, permanent field fixed. Abscissa in Hz.
    FrequencySweep,
}

impl SweepMode {
    pub fn unit(self) -> &'static str {
        match self {
            SweepMode::FieldSweep => "T",
            SweepMode::FrequencySweep => "Hz",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::FieldSweep => "field_sweep",
            SweepMode::FrequencySweep => "frequency_sweep",
        }
    }
}

impl FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "field_sweep" => Ok(SweepMode::FieldSweep),
            "frequency_sweep" => Ok(SweepMode::FrequencySweep),
            other => Err(Error::Format(format!("unknown sweep mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: SweepMode,
    /// T or Hz per mode.
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Seconds per point.
    pub dwell_time: f64,
}

impl SweepSpec {
    /// Sweep of `points` samples spanning `center ± half_span`.
    pub fn centered(
        mode: SweepMode,
        center: f64,
        half_span: f64,
        points: usize,
        dwell_time: f64,
    ) -> Self {
        Self {
            mode,
            start: center - half_span,
            stop: center + half_span,
            points,
            dwell_time,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Error::invalid(
                "sweep",
                "start must be finite and below stop",
            ));
        }
        if self.mode == SweepMode::FieldSweep && self.start < 0.0 {
            return Err(Error::invalid("sweep", "field magnitudes must be >= 0"));
        }
        if self.mode == SweepMode::FrequencySweep && self.start < 0.0 {
            return Err(Error::invalid("sweep", "frequencies must be >= 0"));
        }
        if self.points < 3 {
            return Err(Error::invalid("sweep", "at least 3 points required"));
        }
        if !(self.dwell_time.is_finite() && self.dwell_time > 0.0) {
            return Err(Error::invalid("sweep", "dwell_time must be > 0"));
        }
        Ok(())
    }

    /// Linearly spaced abscissa, endpoints exact.
    pub fn abscissa(&self) -> Vec<f64> {
        let n = self.points;
        let step = (self.stop - self.start) / (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.stop
                } else {
                    self.start + k as f64 * step
                }
            })
            .collect()
    }
}

/// Provenance carried alongside the samples and written to the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub mode: SweepMode,
    pub probe_id: String,
    pub sample_hash: u64,
    /// Noise seed, when shot noise has been applied.
    pub seed: Option<u64>,
    /// Noise stream (pixel) key.
    pub stream: u64,
    pub dwell_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    abscissa: Vec<f64>,
    intensity: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn new(abscissa: Vec<f64>, intensity: Vec<f64>, meta: SpectrumMeta) -> Result<Self> {
        if abscissa.len() != intensity.len() {
            return Err(Error::Format(format!(
                "abscissa has {} points but intensity has {}",
                abscissa.len(),
                intensity.len()
            )));
        }
        if abscissa.iter().any(|x| !x.is_finite()) || abscissa.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Format(
                "abscissa must be finite and strictly increasing".into(),
            ));
        }
        if intensity.iter().any(|y| !(y.is_finite() && *y >= 0.0)) {
            return Err(Error::Format("intensities must be finite and >= 0".into()));
        }
        Ok(Self {
            abscissa,
            intensity,
            meta,
        })
    }

    pub fn abscissa(&self) -> &[f64] {
        &self.abscissa
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn mode(&self) -> SweepMode {
        self.meta.mode
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    /// Two-column CSV with a `#`-prefixed metadata header.
    pub fn to_csv(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        let _ = writeln!(out, "# mode: {}", m.mode.as_str());
        let _ = writeln!(out, "# columns: abscissa_{},counts", m.mode.unit());
        let _ = writeln!(out, "# probe: {}", m.probe_id);
        let _ = writeln!(out, "# sample_hash: {:#018x}", m.sample_hash);
        match m.seed {
            Some(seed) => {
                let _ = writeln!(out, "# seed: {seed}");
            }
            None => out.push_str("# seed: none\n"),
        }
        let _ = writeln!(out, "# stream: {:#018x}", m.stream);
        let _ = writeln!(out, "# dwell_time_s: {}", m.dwell_time);
        for (x, y) in self.abscissa.iter().zip(&self.intensity) {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }

    /// Parses the format written by [`Spectrum::to_csv`]. Missing metadata
    /// keys fall back to field-sweep mode and empty provenance.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = SpectrumMeta {
            mode: SweepMode::FieldSweep,
            probe_id: String::new(),
            sample_hash: 0,
            seed: None,
            stream: 0,
            dwell_time: 1.0,
        };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                if let Some((key, value)) = header.split_once(':') {
                    let value = value.trim();
                    match key.trim() {
                        "mode" => meta.mode = value.parse()?,
                        "probe" => meta.probe_id = value.to_string(),
                        "sample_hash" => meta.sample_hash = parse_u64(value)?,
                        "seed" if value == "none" => meta.seed = None,
                        "seed" => meta.seed = Some(parse_u64(value)?),
                        "stream" => meta.stream = parse_u64(value)?,
                        "dwell_time_s" => {
                            meta.dwell_time = value
                                .parse()
                                .map_err(|_| Error::Format(format!("bad dwell time `{value}`")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let mut cols = line.split(',');
            let (Some(x), Some(y), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Format(format!(
                    "line {}: expected two comma-separated columns",
                    lineno + 1
                )));
            };
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::Format(format!(
                        "line {}: `{}` is not a number",
                        lineno + 1,
                        s.trim()
                    ))
                })
            };
            xs.push(parse(x)?);
            ys.push(parse(y)?);
        }
        Spectrum::new(xs, ys, meta)
    }
}

fn parse_u64(s: &str) -> Result<u64> {
    let parsed = match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| Error::Format(format!("`{s}` is not an unsigned integer")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub enabled: bool,
    pub rng_seed: u64,
    /// Detection efficiency applied to expected counts before the Poisson draw.
    pub photon_rate_scale: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            rng_seed: 0,
            photon_rate_scale: 1.0,
        }
    }
}

impl NoiseSpec {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.photon_rate_scale.is_finite() && self.photon_rate_scale >= 0.0) {
            return Err(Error::invalid(
                "photon_rate_scale",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

/// Synthesizes the expected-count spectrum seen with the tip at `tip`.
///
/// `tip` is the lateral tip axis position on the surface; its `z` component
/// lifts the probe above the nominal standoff.
pub fn sweep(sample: &Sample, probe: &Probe, spec: &SweepSpec, tip: Vec3) -> Result<Spectrum> {
    sweep_keyed(sample, probe, spec, tip, position_stream(tip.x, tip.y))
}

/// [`sweep`] with an explicit noise stream key.
pub(crate) fn sweep_keyed(
    sample: &Sample,
    probe: &Probe,
    spec: &SweepSpec,
    tip: Vec3,
    stream: u64,
) -> Result<Spectrum> {
    spec.validate()?;
    probe.validate()?;
    let points = sensing_position(&probe.geometry, tip);
    let spin_fields = points
        .iter()
        .map(|&p| sample.spin_field(p))
        .collect::<Result<Vec<_>>>()?;
    let abscissa = spec.abscissa();
    let intensity = synthesize(sample.bias_field(), &spin_fields, probe, spec, &abscissa)?;
    Spectrum::new(
        abscissa,
        intensity,
        SpectrumMeta {
            mode: spec.mode,
            probe_id: probe.id.clone(),
            sample_hash: sample.content_hash(),
            seed: None,
            stream,
            dwell_time: spec.dwell_time,
        },
    )
}

/// Expected counts for each abscissa value, averaged over the sensing points
/// whose sample fields (bias excluded) are `spin_fields`.
pub(crate) fn synthesize(
    bias: Vec3,
    spin_fields: &[Vec3],
    probe: &Probe,
    spec: &SweepSpec,
    abscissa: &[f64],
) -> Result<Vec<f64>> {
    let axis = bias.normalized().unwrap_or(Vec3::Z);
    let weight = spec.dwell_time / spin_fields.len() as f64;
    abscissa
        .iter()
        .map(|&x| {
            let mut rate = 0.0;
            for &b in spin_fields {
                rate += match spec.mode {
                    SweepMode::FieldSweep => {
                        pl_intensity(&probe.scheme, &probe.line, (axis * x + b).norm())?
                    }
                    SweepMode::FrequencySweep => pl_intensity(
                        &probe.scheme,
                        &probe.line.with_rf_frequency(x),
                        (bias + b).norm(),
                    )?,
                };
            }
            Ok(rate * weight)
        })
        .collect()
}

/// Replaces every point by a Poisson draw of mean `intensity × photon_rate_scale`.
/// Draw `i` uses the counter stream keyed by `(seed, spectrum stream, i)`.
pub fn add_shot_noise(spectrum: &Spectrum, noise: &NoiseSpec) -> Result<Spectrum> {
    if !noise.enabled {
        return Ok(spectrum.clone());
    }
    noise.validate()?;
    let stream = spectrum.meta.stream;
    let intensity = spectrum
        .intensity
        .iter()
        .enumerate()
        .map(|(i, &mean)| {
            let mut rng = CounterRng::new(noise.rng_seed, stream, i as u64);
            poisson_draw(mean * noise.photon_rate_scale, &mut rng)
        })
        .collect();
    let mut meta = spectrum.meta.clone();
    meta.seed = Some(noise.rng_seed);
    Ok(Spectrum {
        abscissa: spectrum.abscissa.clone(),
        intensity,
        meta,
    })
}

fn poisson_draw(mean: f64, rng: &mut CounterRng) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    match Poisson::new(mean) {
        Ok(dist) => dist.sample(rng),
        // beyond the sampler's range the normal limit is exact to f64 precision
        Err(_) => mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{zeeman_frequency, SpinDipole};
    use crate::probe::{baseline_intensity, OdmrLine};
    use approx::assert_relative_eq;

    fn meta() -> SpectrumMeta {
        SpectrumMeta {
            mode: SweepMode::FrequencySweep,
            probe_id: "t".into(),
            sample_hash: 0,
            seed: None,
            stream: 9,
            dwell_time: 1.0,
        }
    }

    #[test]
    fn spec_validation() {
        let ok = SweepSpec::centered(SweepMode::FieldSweep, 0.1, 0.05, 3, 1e-3);
        assert!(ok.validate().is_ok());
        assert!(SweepSpec { points: 2, ..ok }.validate().is_err());
        assert!(SweepSpec { stop: 0.0, ..ok }.validate().is_err());
        assert!(SweepSpec {
            dwell_time: 0.0,
            ..ok
        }
        .validate()
        .is_err());
        let x = SweepSpec::centered(SweepMode::FieldSweep, 0.1, 0.05, 11, 1.0).abscissa();
        assert_eq!(x.len(), 11);
        assert_eq!(x[0], 0.05);
        assert_eq!(x[10], 0.15000000000000002);
    }

    #[test]
    fn spectrum_invariants_enforced() {
        assert!(Spectrum::new(vec![0.0, 1.0], vec![1.0], meta()).is_err());
        assert!(Spectrum::new(vec![1.0, 1.0], vec![1.0, 1.0], meta()).is_err());
        assert!(Spectrum::new(vec![0.0, 1.0], vec![1.0, -1.0], meta()).is_err());
    }

    #[test]
    fn undriven_sweep_is_flat_baseline() {
        let probe = Probe {
            line: OdmrLine {
                max_rf_rate: 0.0,
                ..OdmrLine::default()
            },
            ..Probe::default()
        };
        let sample = Sample::empty(Vec3::new(0.0, 0.0, 0.1));
        let spec = SweepSpec::centered(SweepMode::FieldSweep, 0.1, 0.05, 21, 1e-3);
        let s = sweep(&sample, &probe, &spec, Vec3::ZERO).unwrap();
        let expected = baseline_intensity(&probe.scheme).unwrap() * 1e-3;
        for y in s.intensity() {
            assert_relative_eq!(*y, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn frequency_sweep_peaks_at_zeeman_frequency() {
        let probe = Probe::default();
        let b0 = 0.23;
        let sample = Sample::empty(Vec3::new(0.0, 0.0, b0));
        let nu0 = zeeman_frequency(b0, probe.line.g_factor).unwrap();
        let gamma = probe.line.linewidth_hz();
        // grid offset so ν0 is not a sample point
        let spec = SweepSpec::centered(
            SweepMode::FrequencySweep,
            nu0 + 0.013 * gamma,
            5.0 * gamma,
            101,
            1e-3,
        );
        let s = sweep(&sample, &probe, &spec, Vec3::ZERO).unwrap();
        let argmax = (0..s.len())
            .max_by(|&a, &b| s.intensity()[a].total_cmp(&s.intensity()[b]))
            .unwrap();
        let nearest = (0..s.len())
            .min_by(|&a, &b| {
                (s.abscissa()[a] - nu0)
                    .abs()
                    .total_cmp(&(s.abscissa()[b] - nu0).abs())
            })
            .unwrap();
        assert_eq!(argmax, nearest);
    }

    #[test]
    fn coincident_tip_is_rejected() {
        let probe = Probe::default();
        // spin placed exactly at the edge sensing point above the origin
        let spin = SpinDipole::electron(Vec3::new(0.0, 0.0, 5e-10), Vec3::Z).unwrap();
        let sample = Sample::new(vec![spin], Vec3::new(0.0, 0.0, 0.1)).unwrap();
        let spec = SweepSpec::centered(SweepMode::FieldSweep, 0.1, 0.05, 11, 1e-3);
        assert!(matches!(
            sweep(&sample, &probe, &spec, Vec3::ZERO),
            Err(Error::CoincidentPoint { .. })
        ));
    }

    #[test]
    fn noise_disabled_is_identity_and_zero_mean_stays_zero() {
        let s = Spectrum::new(vec![0.0, 1.0, 2.0], vec![0.0, 5.0, 1e4], meta()).unwrap();
        assert_eq!(add_shot_noise(&s, &NoiseSpec::disabled()).unwrap(), s);
        for seed in 0..50 {
            let noisy = add_shot_noise(
                &s,
                &NoiseSpec {
                    rng_seed: seed,
                    ..NoiseSpec::default()
                },
            )
            .unwrap();
            assert_eq!(noisy.intensity()[0], 0.0);
            assert_eq!(noisy.meta.seed, Some(seed));
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let s = Spectrum::new(vec![0.0, 1.0, 2.0], vec![10.0, 50.0, 1e4], meta()).unwrap();
        let n1 = NoiseSpec {
            rng_seed: 3,
            ..NoiseSpec::default()
        };
        let a = add_shot_noise(&s, &n1).unwrap();
        let b = add_shot_noise(&s, &n1).unwrap();
        assert_eq!(a, b);
        let c = add_shot_noise(&s, &NoiseSpec { rng_seed: 4, ..n1 }).unwrap();
        assert_ne!(a.intensity(), c.intensity());
    }

    #[test]
    fn csv_round_trip() {
        let probe = Probe::default();
        let sample = Sample::empty(Vec3::new(0.0, 0.0, 0.1));
        let spec = SweepSpec::centered(SweepMode::FieldSweep, 0.1, 0.05, 17, 1e-3);
        let clean = sweep(&sample, &probe, &spec, Vec3::new(1e-9, -2e-9, 0.0)).unwrap();
        let noisy = add_shot_noise(&clean, &NoiseSpec::default()).unwrap();
        for s in [clean, noisy] {
            let text = s.to_csv();
            assert!(text.starts_with("# mode: field_sweep\n"));
            assert_eq!(Spectrum::from_csv(&text).unwrap(), s);
        }
        assert!(Spectrum::from_csv("1,2,3\n").is_err());
        assert!(Spectrum::from_csv("# mode: sideways\n1,2\n").is_err());
    }
}
