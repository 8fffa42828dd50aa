//! Helpers and independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix4, Vector4};
use rand_distr::{Distribution, Uniform};
use scanscope_core::field::resonant_field;
use scanscope_core::probe::observed_linewidth;
use scanscope_core::rng::CounterRng;
use scanscope_core::{
    LevelScheme, OdmrLine, Probe, ProbeGeometry, Sample, SensingPoint, Spectrum, SpinDipole, Vec3,
};

/// Moment used in the worked single-spin estimate, J/T.
pub const ESTIMATE_MOMENT: f64 = 9.28e-24;
pub const ESTIMATE_BIAS: f64 = 0.1;

pub struct Draw(CounterRng);

impl Draw {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self(CounterRng::new(seed, stream, 0))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        Uniform::new(lo, hi).unwrap().sample(&mut self.0)
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform(lo.ln(), hi.ln()).exp()
    }

    pub fn unit_vector(&mut self) -> Vec3 {
        loop {
            let v = Vec3::new(
                self.uniform(-1.0, 1.0),
                self.uniform(-1.0, 1.0),
                self.uniform(-1.0, 1.0),
            );
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                return v / n;
            }
        }
    }
}

/// 1 nm probe, 0.5 nm standoff, edge sensing, 2 mT line with a gentle drive,
/// rf resonant at the bias field.
pub fn estimate_probe() -> Probe {
    let line = OdmrLine {
        linewidth_fwhm: 2e-3,
        max_rf_rate: 1e5,
        ..OdmrLine::default()
    };
    let line = line.with_rf_frequency(ESTIMATE_BIAS * hz_per_tesla(line.g_factor));
    Probe {
        id: "estimate".into(),
        geometry: ProbeGeometry {
            diameter: 1e-9,
            standoff: 5e-10,
            sensing_point: SensingPoint::Edge,
        },
        scheme: LevelScheme::default(),
        line,
    }
}

pub fn estimate_sample(moment: f64) -> Sample {
    let spin = SpinDipole::new(Vec3::ZERO, Vec3::Z * moment);
    Sample::new(vec![spin], Vec3::Z * ESTIMATE_BIAS).unwrap()
}

/// Zeeman slope written out from the constants, independent of the crate.
pub fn hz_per_tesla(g: f64) -> f64 {
    g * 9.274e-24 / 6.626e-34
}

pub fn observed_width(probe: &Probe) -> f64 {
    observed_linewidth(&probe.scheme, &probe.line).unwrap()
}

pub fn resonance_field(probe: &Probe) -> f64 {
    resonant_field(probe.line.rf_frequency, probe.line.g_factor).unwrap()
}

/// Stationary populations from a general LU solve of the full rate matrix
/// with the first row replaced by normalization.
pub fn oracle_steady_state(s: &LevelScheme, w: f64) -> [f64; 4] {
    let (p, k23, kr, kd) = (
        s.pump_rate,
        s.nonradiative_rate,
        s.radiative_rate,
        s.dark_decay_rate,
    );
    let (bb, bd) = (s.branching_bright, s.branching_dark);
    #[rustfmt::skip]
    let rates = Matrix4::new(
        -p,  0.0,       kr,        kd,
         p, -k23,       0.0,       0.0,
        0.0, bb * k23, -(kr + w),  w,
        0.0, bd * k23,  w,        -(kd + w),
    );
    let mut a = rates;
    a.set_row(0, &nalgebra::RowVector4::new(1.0, 1.0, 1.0, 1.0));
    let n = a
        .lu()
        .solve(&Vector4::new(1.0, 0.0, 0.0, 0.0))
        .expect("non-singular");
    [n[0], n[1], n[2], n[3]]
}

/// Sum of squared residuals after the best offset and amplitude for a fixed
/// center and width (2×2 normal equations).
fn profiled_cost(x: &[f64], y: &[f64], center: f64, fwhm: f64) -> f64 {
    let hw2 = 0.25 * fwhm * fwhm;
    let (mut s1, mut sf, mut sff, mut sy, mut sfy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let phi: Vec<f64> = x
        .iter()
        .map(|&xi| hw2 / ((xi - center) * (xi - center) + hw2))
        .collect();
    for (&f, &yi) in phi.iter().zip(y) {
        s1 += 1.0;
        sf += f;
        sff += f * f;
        sy += yi;
        sfy += f * yi;
    }
    let det = s1 * sff - sf * sf;
    let (offset, amp) = if det.abs() > 1e-300 {
        ((sff * sy - sf * sfy) / det, (s1 * sfy - sf * sy) / det)
    } else {
        (sy / s1, 0.0)
    };
    phi.iter()
        .zip(y)
        .map(|(&f, &yi)| {
            let r = yi - offset - amp * f;
            r * r
        })
        .sum()
}

/// Width that minimizes the profiled cost at a fixed center: coarse log grid
/// then golden-section refinement in log width.
fn best_width_cost(x: &[f64], y: &[f64], center: f64, lo: f64, hi: f64) -> f64 {
    const N: usize = 60;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let at = |k: usize| llo + (lhi - llo) * k as f64 / (N - 1) as f64;
    let cost = |lw: f64| profiled_cost(x, y, center, lw.exp());
    let mut best = (0, f64::INFINITY);
    for k in 0..N {
        let c = cost(at(k));
        if c < best.1 {
            best = (k, c);
        }
    }
    let (mut a, mut b) = (at(best.0.saturating_sub(1)), at((best.0 + 1).min(N - 1)));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (cost(c), cost(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = cost(d);
        }
    }
    best.1.min(fc).min(fd)
}

/// Exhaustive center search on a grid ten times finer than the abscissa,
/// returning `(center, grid_step)`.
pub fn grid_search_center(spectrum: &Spectrum) -> (f64, f64) {
    let x = spectrum.abscissa();
    let y = spectrum.intensity();
    let n = x.len();
    let spacing = (x[n - 1] - x[0]) / (n - 1) as f64;
    let step = spacing / 10.0;
    let (lo, hi) = (0.5 * spacing, 10.0 * (x[n - 1] - x[0]));
    let mut best = (x[0], f64::INFINITY);
    let mut k = 0;
    loop {
        let c = x[0] + k as f64 * step;
        if c > x[n - 1] + 0.5 * step {
            break;
        }
        let cost = best_width_cost(x, y, c, lo, hi);
        if cost < best.1 {
            best = (c, cost);
        }
        k += 1;
    }
    (best.0, step)
}
