//! Lorentzian least-squares fitting and resonance-shift measurement.
//!
//! The model is `offset + amplitude·(Γ/2)²/((x − center)² + (Γ/2)²)`. Fitting
//! runs a damped Gauss–Newton (Levenberg–Marquardt) iteration with an
//! analytic Jacobian on abscissa and counts rescaled to O(1), so spectra in
//! GHz and in mT behave identically. A dip is simply a negative amplitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectrum::Spectrum;

pub const MAX_ITERATIONS: usize = 200;
/// Relative parameter step below which the iteration has converged.
pub const STEP_TOLERANCE: f64 = 1e-10;
const COST_TOLERANCE: f64 = 1e-15;
const MAX_DAMPING: f64 = 1e12;

/// Parameters of one Lorentzian line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineShape {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
}

impl LineShape {
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.center;
        let hw2 = 0.25 * self.fwhm * self.fwhm;
        self.offset + self.amplitude * hw2 / (d * d + hw2)
    }

    /// Partial derivatives at `x`, ordered (center, fwhm, amplitude, offset).
    pub fn jacobian(&self, x: f64) -> [f64; 4] {
        let d = x - self.center;
        let hw = 0.5 * self.fwhm;
        let hw2 = hw * hw;
        let denom = d * d + hw2;
        let denom2 = denom * denom;
        [
            2.0 * self.amplitude * hw2 * d / denom2,
            self.amplitude * hw * d * d / denom2,
            hw2 / denom,
            1.0,
        ]
    }

    fn from_array([center, fwhm, amplitude, offset]: [f64; 4]) -> Self {
        Self {
            center,
            fwhm,
            amplitude,
            offset,
        }
    }
}

/// Fitted line parameters in the spectrum's own units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// √Σ(data − model)², counts.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn shape(&self) -> LineShape {
        LineShape {
            center: self.center,
            fwhm: self.fwhm,
            amplitude: self.amplitude,
            offset: self.offset,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("FitResult serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Affine map between spectrum units and the normalized fitting frame.
struct Frame {
    x_mid: f64,
    x_scale: f64,
    y_lo: f64,
    y_scale: f64,
}

impl Frame {
    fn to_unit(&self, s: LineShape) -> [f64; 4] {
        [
            (s.center - self.x_mid) / self.x_scale,
            s.fwhm / self.x_scale,
            s.amplitude / self.y_scale,
            (s.offset - self.y_lo) / self.y_scale,
        ]
    }

    fn shape_of(&self, p: [f64; 4]) -> LineShape {
        LineShape {
            center: self.x_mid + p[0] * self.x_scale,
            fwhm: p[1] * self.x_scale,
            amplitude: p[2] * self.y_scale,
            offset: self.y_lo + p[3] * self.y_scale,
        }
    }
}

/// Fits a single Lorentzian to `spectrum`. Without `initial_guess` the start
/// point comes from the extremum, its half-maximum crossings and the median
/// of the spectrum edges.
///
/// Non-convergence is reported through `converged = false` with the best
/// parameters found. A perfectly flat spectrum has no line to fit and
/// returns amplitude 0, FWHM equal to the sweep span, `converged = false`.
pub fn fit_lorentzian(spectrum: &Spectrum, initial_guess: Option<&FitResult>) -> Result<FitResult> {
    let xs = spectrum.abscissa();
    let ys = spectrum.intensity();
    let n = xs.len();
    if n < 5 {
        return Err(Error::Domain(format!(
            "fitting needs at least 5 points, got {n}"
        )));
    }
    let span = xs[n - 1] - xs[0];
    let (y_lo, y_hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            (lo.min(y), hi.max(y))
        });
    if y_hi == y_lo {
        return Ok(FitResult {
            center: 0.5 * (xs[0] + xs[n - 1]),
            fwhm: span,
            amplitude: 0.0,
            offset: y_lo,
            residual_norm: 0.0,
            converged: false,
            iterations: 0,
        });
    }

    let frame = Frame {
        x_mid: 0.5 * (xs[0] + xs[n - 1]),
        x_scale: 0.5 * span,
        y_lo,
        y_scale: y_hi - y_lo,
    };
    let t: Vec<f64> = xs
        .iter()
        .map(|x| (x - frame.x_mid) / frame.x_scale)
        .collect();
    let u: Vec<f64> = ys
        .iter()
        .map(|y| (y - frame.y_lo) / frame.y_scale)
        .collect();

    // FWHM bounded below by half a sample spacing and above by ten spans
    let min_spacing = t
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let bounds = FwhmBounds {
        lo: 0.5 * min_spacing,
        hi: 20.0,
    };

    let start = match initial_guess {
        Some(g) => frame.to_unit(g.shape()),
        None => self_seed(&t, &u),
    };
    let start = bounds.clamp(start);
    let outcome = levenberg_marquardt(&t, &u, start, &bounds);

    let shape = frame.shape_of(outcome.params);
    let residual_norm = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - shape.eval(x);
            r * r
        })
        .sum::<f64>()
        .sqrt();
    Ok(FitResult {
        center: shape.center,
        fwhm: shape.fwhm,
        amplitude: shape.amplitude,
        offset: shape.offset,
        residual_norm,
        converged: outcome.converged && shape.fwhm > 0.0,
        iterations: outcome.iterations,
    })
}

struct FwhmBounds {
    lo: f64,
    hi: f64,
}

impl FwhmBounds {
    fn clamp(&self, mut p: [f64; 4]) -> [f64; 4] {
        p[1] = p[1].abs().clamp(self.lo, self.hi);
        p
    }
}

struct Outcome {
    params: [f64; 4],
    converged: bool,
    iterations: usize,
}

fn cost(t: &[f64], u: &[f64], p: [f64; 4]) -> f64 {
    let shape = LineShape::from_array(p);
    t.iter()
        .zip(u)
        .map(|(&x, &y)| {
            let r = y - shape.eval(x);
            r * r
        })
        .sum::<f64>()
        * 0.5
}

fn levenberg_marquardt(t: &[f64], u: &[f64], start: [f64; 4], bounds: &FwhmBounds) -> Outcome {
    let mut p = start;
    let mut current = cost(t, u, p);
    let mut damping = 1e-3;

    for iteration in 1..=MAX_ITERATIONS {
        let shape = LineShape::from_array(p);
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (&x, &y) in t.iter().zip(u) {
            let j = shape.jacobian(x);
            let r = y - shape.eval(x);
            for a in 0..4 {
                jtr[a] += j[a] * r;
                for b in a..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        for a in 0..4 {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        let diag_floor = 1e-12 * (0..4).map(|k| jtj[k][k]).fold(0.0, f64::max);

        loop {
            let mut lhs = jtj;
            for (k, row) in lhs.iter_mut().enumerate() {
                row[k] += damping * jtj[k][k].max(diag_floor);
            }
            let step = linalg::solve(lhs, jtr, 1e-300);
            let candidate = step.map(|d| bounds.clamp(std::array::from_fn(|k| p[k] + d[k])));
            let trial = candidate.map(|c| (c, cost(t, u, c)));
            match trial {
                Some((c, trial_cost)) if trial_cost < current => {
                    let step_norm = norm(std::array::from_fn(|k| c[k] - p[k]));
                    let rel_step = step_norm / (norm(p) + 1e-12);
                    let rel_cost = (current - trial_cost) / current.max(f64::MIN_POSITIVE);
                    p = c;
                    current = trial_cost;
                    damping = (damping * 0.1).max(1e-12);
                    if rel_step < STEP_TOLERANCE || rel_cost < COST_TOLERANCE {
                        return Outcome {
                            params: p,
                            converged: true,
                            iterations: iteration,
                        };
                    }
                    break;
                }
                _ => {
                    damping *= 10.0;
                    if damping > MAX_DAMPING {
                        // no descent direction left: the residual is stationary
                        return Outcome {
                            params: p,
                            converged: true,
                            iterations: iteration,
                        };
                    }
                }
            }
        }
    }
    Outcome {
        params: p,
        converged: false,
        iterations: MAX_ITERATIONS,
    }
}

fn norm(v: [f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn self_seed(t: &[f64], u: &[f64]) -> [f64; 4] {
    let n = t.len();
    let k = (n / 10).max(2).min(n / 2);
    let edges: Vec<f64> = u[..k].iter().chain(&u[n - k..]).copied().collect();
    let offset = median(edges);

    let (imax, imin) = (0..n).fold((0, 0), |(hi, lo), i| {
        (
            if u[i] > u[hi] { i } else { hi },
            if u[i] < u[lo] { i } else { lo },
        )
    });
    let peak = if u[imax] - offset >= offset - u[imin] {
        imax
    } else {
        imin
    };
    let amplitude = u[peak] - offset;
    let half = offset + 0.5 * amplitude;
    let above = |i: usize| (u[i] - half) * amplitude.signum() > 0.0;
    let crossing = |inside: usize, outside: usize| {
        let (ui, uo) = (u[inside], u[outside]);
        let frac = if ui != uo {
            (ui - half) / (ui - uo)
        } else {
            0.5
        };
        t[inside] + frac * (t[outside] - t[inside])
    };

    let left = (0..peak)
        .rev()
        .find(|&i| !above(i))
        .map(|i| crossing(i + 1, i));
    let right = ((peak + 1)..n)
        .find(|&i| !above(i))
        .map(|i| crossing(i - 1, i));
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (t[peak] - l),
        (None, Some(r)) => 2.0 * (r - t[peak]),
        (None, None) => 2.0,
    };
    [t[peak], fwhm, amplitude, offset]
}

/// Signed resonance shift: centre with the sample minus centre of the reference.
pub fn resonance_shift(with_sample: &Spectrum, reference: &Spectrum) -> Result<f64> {
    if with_sample.mode() != reference.mode() {
        return Err(Error::Domain(
            "spectra were taken in different sweep modes".into(),
        ));
    }
    if with_sample.abscissa() != reference.abscissa() {
        return Err(Error::Domain("spectra have different abscissae".into()));
    }
    let a = fit_lorentzian(with_sample, None)?;
    let b = fit_lorentzian(reference, None)?;
    if !(a.converged && b.converged) {
        return Err(Error::FitFailed {
            with_sample: Box::new(a),
            reference: Box::new(b),
        });
    }
    Ok(a.center - b.center)
}
