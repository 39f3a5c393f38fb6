//! Band-limited signals on an equidistant grid `tₙ = n·π/ω_max` and their
//! sinc-series reconstruction.
//!
//! The infinite series is truncated to the stored samples, or to a symmetric
//! window `|n| ≤ N`; every reconstruction reports the window it used.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// `sin(x)/x`, with the two-term Taylor form `1 − x²/6` for |x| < 1e-12.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Samples of a signal with bandwidth `omega_max`, keyed by grid index.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    omega_max: f64,
    samples: BTreeMap<i64, Complex64>,
}

impl SampledSignal {
    pub fn new(
        omega_max: f64,
        samples: impl IntoIterator<Item = (i64, Complex64)>,
    ) -> Result<Self> {
        check_bandwidth(omega_max)?;
        let mut map = BTreeMap::new();
        for (n, value) in samples {
            if map.insert(n, value).is_some() {
                return Err(Error::Contract(format!("duplicate sample index {n}")));
            }
        }
        if map.is_empty() {
            return Err(Error::Degenerate(
                "a signal needs at least one sample".into(),
            ));
        }
        Ok(SampledSignal {
            omega_max,
            samples: map,
        })
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// Grid spacing `l = π/ω_max`.
    pub fn spacing(&self) -> f64 {
        PI / self.omega_max
    }

    pub fn time_of(&self, n: i64) -> f64 {
        n as f64 * self.spacing()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, n: i64) -> Option<Complex64> {
        self.samples.get(&n).copied()
    }

    /// `(n, tₙ, f(tₙ))` in increasing `n`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64, Complex64)> + '_ {
        self.samples.iter().map(|(&n, &v)| (n, self.time_of(n), v))
    }

    /// Smallest and largest stored index.
    pub fn index_range(&self) -> (i64, i64) {
        let lo = *self.samples.keys().next().expect("non-empty");
        let hi = *self.samples.keys().next_back().expect("non-empty");
        (lo, hi)
    }

    /// Rows for the `n, t_n, re, im` CSV layout.
    pub fn rows(&self) -> Vec<SampleRow> {
        self.iter()
            .map(|(n, t_n, v)| SampleRow {
                n,
                t_n,
                re: v.re,
                im: v.im,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRow {
    pub n: i64,
    pub t_n: f64,
    pub re: f64,
    pub im: f64,
}

fn check_bandwidth(omega_max: f64) -> Result<()> {
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::Contract(format!(
            "omega_max must be positive, got {omega_max}"
        )));
    }
    Ok(())
}

/// Samples `f` at `tₙ = n·π/ω_max` for every `n` in `range`.
pub fn sample(
    f: impl Fn(f64) -> Complex64,
    omega_max: f64,
    range: RangeInclusive<i64>,
) -> Result<SampledSignal> {
    check_bandwidth(omega_max)?;
    if range.is_empty() {
        return Err(Error::Degenerate("empty sample range".into()));
    }
    let l = PI / omega_max;
    SampledSignal::new(omega_max, range.map(|n| (n, f(n as f64 * l))))
}

/// Real-valued convenience wrapper around [`sample`].
pub fn sample_real(
    f: impl Fn(f64) -> f64,
    omega_max: f64,
    range: RangeInclusive<i64>,
) -> Result<SampledSignal> {
    sample(|t| Complex64::new(f(t), 0.0), omega_max, range)
}

/// A reconstructed value and the index window that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Reconstruction {
    pub value: Complex64,
    pub window: (i64, i64),
}

/// `Σₙ f(tₙ) sinc(ω_max (t − tₙ))` over all stored samples.
pub fn reconstruct(signal: &SampledSignal, t: f64) -> Reconstruction {
    let window = signal.index_range();
    Reconstruction {
        value: partial_sum(signal, t, window),
        window,
    }
}

/// The same series restricted to the symmetric window `|n| ≤ half_width`.
pub fn reconstruct_window(signal: &SampledSignal, t: f64, half_width: i64) -> Reconstruction {
    let window = (-half_width, half_width);
    Reconstruction {
        value: partial_sum(signal, t, window),
        window,
    }
}

/// `sin(πx)`, reduced so that integer `x` gives exactly zero.
fn sin_pi(x: f64) -> f64 {
    let k = x.round();
    let r = x - k;
    let s = (PI * r).sin();
    if k.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

/// `sin(πx)/(πx)`, the kernel in units of the grid spacing.
fn sinc_index(x: f64) -> f64 {
    let arg = PI * x;
    if arg.abs() < 1e-12 {
        1.0 - arg * arg / 6.0
    } else {
        sin_pi(x) / arg
    }
}

fn partial_sum(signal: &SampledSignal, t: f64, (lo, hi): (i64, i64)) -> Complex64 {
    let mut u = t / signal.spacing();
    let nearest = u.round();
    if (u - nearest).abs() <= 4.0 * f64::EPSILON * nearest.abs().max(1.0) {
        u = nearest;
    }
    signal
        .samples
        .range(lo..=hi)
        .map(|(&n, &v)| v * sinc_index(u - n as f64))
        .sum()
}

/// `tₙ = n·T`.
pub fn automaton_time_bridge(timestep: f64, n: i64) -> Result<f64> {
    if !(timestep.is_finite() && timestep > 0.0) {
        return Err(Error::Contract(format!(
            "time step must be positive, got {timestep}"
        )));
    }
    Ok(n as f64 * timestep)
}

/// One row of a reconstruction sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
}

/// Reconstructs on every point of `grid`, comparing against `oracle` when given.
pub fn reconstruction_sweep(
    signal: &SampledSignal,
    grid: &[f64],
    oracle: Option<&dyn Fn(f64) -> Complex64>,
) -> Vec<SweepPoint> {
    grid.iter()
        .map(|&t| {
            let value = reconstruct(signal, t).value;
            SweepPoint {
                t,
                re: value.re,
                im: value.im,
                abs_error: oracle.map(|f| (value - f(t)).norm()),
            }
        })
        .collect()
}

/// Maximum off-node error for growing symmetric windows.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub omega_max: f64,
    pub half_widths: Vec<i64>,
    pub max_errors: Vec<f64>,
    /// Errors shrink strictly and the last one is at most half the first.
    pub converging: bool,
    /// Set when the series does not converge to the signal: a sign that the
    /// signal carries frequencies above `omega_max`.
    pub aliasing_suspected: bool,
    /// Largest deviation at the stored nodes of the widest window.
    pub node_error: f64,
}

/// Samples `f` on `|n| ≤ max(half_widths)` and measures the reconstruction
/// error on `grid` for each window.
pub fn convergence_study(
    f: &dyn Fn(f64) -> Complex64,
    omega_max: f64,
    half_widths: &[i64],
    grid: &[f64],
) -> Result<ConvergenceReport> {
    let widest = *half_widths
        .iter()
        .max()
        .ok_or_else(|| Error::Degenerate("no window sizes given".into()))?;
    if grid.is_empty() {
        return Err(Error::Degenerate("empty test grid".into()));
    }
    let signal = sample(f, omega_max, -widest..=widest)?;
    let max_errors: Vec<f64> = half_widths
        .iter()
        .map(|&h| {
            grid.iter()
                .map(|&t| (reconstruct_window(&signal, t, h).value - f(t)).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let node_error = signal
        .iter()
        .map(|(_, t_n, v)| (reconstruct(&signal, t_n).value - v).norm())
        .fold(0.0, f64::max);
    let strictly_decreasing = max_errors.windows(2).all(|w| w[1] < w[0]);
    let converging = strictly_decreasing
        && max_errors.len() > 1
        && max_errors[max_errors.len() - 1] <= 0.5 * max_errors[0];
    Ok(ConvergenceReport {
        omega_max,
        half_widths: half_widths.to_vec(),
        max_errors,
        converging,
        aliasing_suspected: !converging,
        node_error,
    })
}

/// `n` evenly spaced points on `[a, b]`, each shifted by `offset`.
pub fn test_grid(a: f64, b: f64, n: usize, offset: f64) -> Vec<f64> {
    if n == 1 {
        return vec![a + offset];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64 + offset)
        .collect()
}
