//! Lorentzian peak fitting, background estimation and band integration on
//! periodograms.
//!
//! The peak model is `B + A (Γ/2)² / ((Γ/2)² + (ν - ν0)²)`: a flat background
//! `B`, a peak height `A` above it, centre `ν0` and full width `Γ`. Fits are
//! weighted least squares with per-bin variance `model² / n_avg`, which is the
//! variance of an `n_avg`-averaged periodogram. Because the weights scale with
//! the data, multiplying a periodogram by any gain leaves centre, width and
//! chi² unchanged and scales `A` and `B` by the same gain.

mod solver;

use alloc::vec::Vec;

// Shadowed by the inherent methods whenever std is in the build graph.
#[allow(unused_imports)]
use num_traits::Float;

pub use solver::FitOptions;
pub(crate) use solver::{solve, Model, Sample, Solution};

use crate::spectrum::Periodogram;
use crate::{Error, Result};

/// Number of free parameters of the single-peak model.
pub const PEAK_PARAMS: usize = 4;

/// Minimum number of fitted bins per parameter.
const BINS_PER_PARAM: usize = 5;

/// Widths below this many resolution bandwidths are flagged as
/// resolution-limited.
pub const RESOLUTION_LIMIT: f64 = 3.0;

const SMOOTHING_BINS: usize = 5;
const FLATNESS_SIGMAS: f64 = 3.0;
const CONTAMINATION_SIGMAS: f64 = 5.0;

/// Frequency range used by a fit, with sub-ranges removed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitWindow {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub exclusions: Vec<(f64, f64)>,
}

impl FitWindow {
    pub fn new(lo_hz: f64, hi_hz: f64) -> Result<Self> {
        if !(lo_hz < hi_hz) {
            return Err(Error::Config(alloc::format!(
                "fit window needs lo < hi, got [{lo_hz}, {hi_hz}]"
            )));
        }
        Ok(FitWindow {
            lo_hz,
            hi_hz,
            exclusions: Vec::new(),
        })
    }

    /// Window spanning a whole periodogram.
    pub fn covering(pg: &Periodogram) -> Self {
        FitWindow {
            lo_hz: pg.lo_hz(),
            hi_hz: pg.hi_hz(),
            exclusions: Vec::new(),
        }
    }

    pub fn exclude(mut self, lo_hz: f64, hi_hz: f64) -> Result<Self> {
        if !(lo_hz < hi_hz) || lo_hz < self.lo_hz || hi_hz > self.hi_hz {
            return Err(Error::Config(alloc::format!(
                "exclusion [{lo_hz}, {hi_hz}] must lie inside [{}, {}]",
                self.lo_hz,
                self.hi_hz
            )));
        }
        self.exclusions.push((lo_hz, hi_hz));
        Ok(self)
    }

    pub fn contains(&self, freq_hz: f64) -> bool {
        freq_hz >= self.lo_hz
            && freq_hz <= self.hi_hz
            && !self
                .exclusions
                .iter()
                .any(|&(lo, hi)| freq_hz >= lo && freq_hz <= hi)
    }

    /// The same window reflected to the other side of the carrier.
    pub fn mirrored(&self) -> Self {
        FitWindow {
            lo_hz: -self.hi_hz,
            hi_hz: -self.lo_hz,
            exclusions: self.exclusions.iter().map(|&(lo, hi)| (-hi, -lo)).collect(),
        }
    }

    /// Indices of the periodogram bins used by the fit.
    pub fn included(&self, pg: &Periodogram) -> Vec<usize> {
        (0..pg.len())
            .filter(|&i| self.contains(pg.freqs_hz[i]))
            .collect()
    }

    pub(crate) fn checked_bins(&self, pg: &Periodogram) -> Result<Vec<usize>> {
        let idx = self.included(pg);
        if idx.len() < BINS_PER_PARAM * PEAK_PARAMS {
            return Err(Error::Config(alloc::format!(
                "fit window keeps {} bins, needs at least {}",
                idx.len(),
                BINS_PER_PARAM * PEAK_PARAMS
            )));
        }
        Ok(idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeakParams {
    pub amplitude: f64,
    pub center_hz: f64,
    pub gamma_hz: f64,
    pub background: f64,
}

impl PeakParams {
    pub fn to_array(self) -> [f64; PEAK_PARAMS] {
        [
            self.amplitude,
            self.center_hz,
            self.gamma_hz,
            self.background,
        ]
    }

    pub fn from_array(p: [f64; PEAK_PARAMS]) -> Self {
        PeakParams {
            amplitude: p[0],
            center_hz: p[1],
            gamma_hz: p[2],
            background: p[3],
        }
    }

    pub fn eval(&self, freq_hz: f64) -> f64 {
        lorentzian_peak(freq_hz, &self.to_array())
    }
}

/// `B + A (Γ/2)² / ((Γ/2)² + (ν - ν0)²)` for `p = [A, ν0, Γ, B]`.
pub fn lorentzian_peak(freq_hz: f64, p: &[f64; PEAK_PARAMS]) -> f64 {
    let [a, c, g, b] = *p;
    let h2 = 0.25 * g * g;
    let d = freq_hz - c;
    b + a * h2 / (h2 + d * d)
}

/// Analytic gradient of [`lorentzian_peak`] with respect to `[A, ν0, Γ, B]`.
pub fn lorentzian_jacobian(freq_hz: f64, p: &[f64; PEAK_PARAMS]) -> [f64; PEAK_PARAMS] {
    let [a, c, g, _] = *p;
    let h2 = 0.25 * g * g;
    let d = freq_hz - c;
    let denom = h2 + d * d;
    let shape = h2 / denom;
    let d_center = a * h2 * 2.0 * d / (denom * denom);
    let d_gamma = a * 0.5 * g * d * d / (denom * denom);
    [shape, d_center, d_gamma, 1.0]
}

/// Area of a peak of height `amplitude` between `lo_hz` and `hi_hz`.
pub fn lorentzian_band_area(
    amplitude: f64,
    center_hz: f64,
    gamma_hz: f64,
    lo_hz: f64,
    hi_hz: f64,
) -> f64 {
    let half = 0.5 * gamma_hz;
    amplitude * half * (((hi_hz - center_hz) / half).atan() - ((lo_hz - center_hz) / half).atan())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LorentzianFit {
    pub amplitude: f64,
    pub center_hz: f64,
    /// Full width at half maximum.
    pub gamma_hz: f64,
    pub background: f64,
    /// Covariance of `[A, ν0, Γ, B]`.
    pub covariance: [[f64; PEAK_PARAMS]; PEAK_PARAMS],
    pub residual_chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Width below [`RESOLUTION_LIMIT`] resolution bandwidths: the width is
    /// biased and band integration is the better estimator.
    pub resolution_limited: bool,
    pub window: FitWindow,
}

impl LorentzianFit {
    pub fn params(&self) -> PeakParams {
        PeakParams {
            amplitude: self.amplitude,
            center_hz: self.center_hz,
            gamma_hz: self.gamma_hz,
            background: self.background,
        }
    }

    pub fn sigma(&self, index: usize) -> f64 {
        self.covariance[index][index].sqrt()
    }

    pub fn amplitude_sigma(&self) -> f64 {
        self.sigma(0)
    }

    pub fn gamma_sigma(&self) -> f64 {
        self.sigma(2)
    }

    pub fn background_sigma(&self) -> f64 {
        self.sigma(3)
    }
}

struct SinglePeak;

impl Model<PEAK_PARAMS> for SinglePeak {
    fn eval(&self, p: &[f64; PEAK_PARAMS], s: &Sample) -> (f64, [f64; PEAK_PARAMS]) {
        (lorentzian_peak(s.x, p), lorentzian_jacobian(s.x, p))
    }

    fn scale(&self, p: &[f64; PEAK_PARAMS]) -> [f64; PEAK_PARAMS] {
        let [a, _, g, b] = *p;
        [a.abs(), g, g, b.abs().max(1e-3 * a.abs())]
    }

    fn feasible(&self, p: &[f64; PEAK_PARAMS]) -> bool {
        p[0] >= 0.0 && p[2] > 0.0
    }
}

pub(crate) fn samples(pg: &Periodogram, idx: &[usize], channel: usize) -> Vec<Sample> {
    idx.iter()
        .map(|&i| Sample {
            x: pg.freqs_hz[i],
            y: pg.values[i],
            channel,
            n_avg: pg.n_avg as f64,
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Starting point for [`fit_lorentzian`]: median background, the highest
/// point of a lightly smoothed trace as centre, half-maximum crossings for
/// the width (at least three bins).
pub fn initial_guess(pg: &Periodogram, window: &FitWindow) -> Result<PeakParams> {
    let idx = window.checked_bins(pg)?;
    let raw: Vec<f64> = idx.iter().map(|&i| pg.values[i]).collect();
    let freqs: Vec<f64> = idx.iter().map(|&i| pg.freqs_hz[i]).collect();

    let mut sorted = raw.clone();
    let background = median(&mut sorted);
    // Bin-to-bin scatter: insensitive to a peak that fills the window.
    let mut steps: Vec<f64> = raw.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let scatter = if steps.is_empty() {
        0.0
    } else {
        1.4826 * median(&mut steps) / core::f64::consts::SQRT_2
    };

    let half = SMOOTHING_BINS / 2;
    let smooth: Vec<f64> = (0..raw.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(raw.len());
            raw[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();

    // First maximum wins, i.e. the lowest frequency on exact ties.
    let mut peak = 0;
    for (i, v) in smooth.iter().enumerate() {
        if *v > smooth[peak] {
            peak = i;
        }
    }
    if !(smooth[peak] - background >= FLATNESS_SIGMAS * scatter) || smooth[peak] <= background {
        return Err(Error::FlatSpectrum);
    }
    let near = peak.saturating_sub(half)..(peak + half + 1).min(raw.len());
    let top = raw[near].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let amplitude = top - background;

    let level = background + 0.5 * (smooth[peak] - background);
    let crossing = |step: isize| -> Option<f64> {
        let mut i = peak as isize;
        loop {
            let j = i + step;
            if j < 0 || j as usize >= smooth.len() {
                return None;
            }
            let (a, b) = (smooth[i as usize], smooth[j as usize]);
            if b < level {
                let t = (a - level) / (a - b);
                let fa = freqs[i as usize];
                let fb = freqs[j as usize];
                return Some((fa + t * (fb - fa) - freqs[peak]).abs());
            }
            i = j;
        }
    };
    let width = match (crossing(-1), crossing(1)) {
        (Some(l), Some(r)) => l + r,
        (Some(one), None) | (None, Some(one)) => 2.0 * one,
        (None, None) => 0.5 * (window.hi_hz - window.lo_hz),
    };
    Ok(PeakParams {
        amplitude,
        center_hz: freqs[peak],
        gamma_hz: width.max(3.0 * pg.rbw_hz),
        background,
    })
}

/// Weighted least-squares fit of one Lorentzian on a flat background.
pub fn fit_lorentzian(
    pg: &Periodogram,
    window: &FitWindow,
    guess: &PeakParams,
    opts: &FitOptions,
) -> Result<LorentzianFit> {
    let idx = window.checked_bins(pg)?;
    let data = samples(pg, &idx, 0);
    let sol = solve(&SinglePeak, &data, guess.to_array(), opts)?;
    if !sol.converged {
        return Err(Error::NoConvergence {
            iterations: sol.iterations,
        });
    }
    Ok(lorentzian_fit_from(
        sol,
        data.len(),
        pg.rbw_hz,
        window.clone(),
    ))
}

fn lorentzian_fit_from(
    sol: Solution<PEAK_PARAMS>,
    n_bins: usize,
    rbw_hz: f64,
    window: FitWindow,
) -> LorentzianFit {
    let [amplitude, center_hz, gamma_hz, background] = sol.params;
    LorentzianFit {
        amplitude,
        center_hz,
        gamma_hz,
        background,
        covariance: sol.covariance,
        residual_chi2: sol.chi2,
        dof: n_bins - PEAK_PARAMS,
        converged: true,
        iterations: sol.iterations,
        resolution_limited: gamma_hz < RESOLUTION_LIMIT * rbw_hz,
        window,
    }
}

/// Guess then fit.
pub fn fit_peak(pg: &Periodogram, window: &FitWindow, opts: &FitOptions) -> Result<LorentzianFit> {
    let guess = initial_guess(pg, window)?;
    fit_lorentzian(pg, window, &guess, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BackgroundEstimate {
    pub level: f64,
    /// Standard error of the level.
    pub sigma: f64,
    /// Set when a quiet region shows structure (slope or offset) at five
    /// standard errors or more, e.g. a peak tail leaking in.
    pub contaminated: bool,
}

impl BackgroundEstimate {
    pub fn exact(level: f64) -> Self {
        BackgroundEstimate {
            level,
            sigma: 0.0,
            contaminated: false,
        }
    }
}

fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Slope significance of an ordinary least-squares line through the points.
fn slope_z(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 3 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let slope = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / sxx;
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let s2 = resid / (n - 2.0);
    let se = (s2 / sxx).sqrt();
    if se == 0.0 {
        if slope == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        slope / se
    }
}

/// Mean level of the bins inside `quiet_regions` with its standard error.
pub fn estimate_background(
    pg: &Periodogram,
    quiet_regions: &[(f64, f64)],
) -> Result<BackgroundEstimate> {
    let mut pooled = Vec::new();
    let mut regions = Vec::new();
    for &(lo, hi) in quiet_regions {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            pg.iter().filter(|(f, _)| *f >= lo && *f <= hi).unzip();
        pooled.extend_from_slice(&ys);
        regions.push((xs, ys));
    }
    if pooled.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (level, sigma) = mean_and_error(&pooled);
    let contaminated = regions.iter().filter(|(x, _)| !x.is_empty()).any(|(x, y)| {
        let (m, e) = mean_and_error(y);
        let offset = if regions.len() > 1 && e > 0.0 {
            (m - level).abs() / (e * e + sigma * sigma).sqrt()
        } else {
            0.0
        };
        offset >= CONTAMINATION_SIGMAS || slope_z(x, y).abs() >= CONTAMINATION_SIGMAS
    });
    Ok(BackgroundEstimate {
        level,
        sigma,
        contaminated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandIntegral {
    pub area: f64,
    pub sigma: f64,
    pub bins: usize,
}

/// Rectangle-rule area of `bin - background` over bins centred within
/// `center_hz ± half_width_hz`. Each bin contributes variance
/// `value² / n_avg`; the background error is fully correlated across bins.
pub fn integrate_band(
    pg: &Periodogram,
    center_hz: f64,
    half_width_hz: f64,
    background: &BackgroundEstimate,
) -> Result<BandIntegral> {
    let lo = center_hz - half_width_hz;
    let hi = center_hz + half_width_hz;
    let edge = 0.5 * pg.rbw_hz;
    if !(half_width_hz > 0.0) || lo < pg.lo_hz() - edge || hi > pg.hi_hz() + edge {
        return Err(Error::BandOutsideWindow {
            lo_hz: lo,
            hi_hz: hi,
        });
    }
    let n_avg = pg.n_avg as f64;
    let mut area = 0.0;
    let mut var = 0.0;
    let mut bins = 0;
    for (_, v) in pg.iter().filter(|(f, _)| *f >= lo && *f <= hi) {
        area += (v - background.level) * pg.rbw_hz;
        var += v * v / n_avg * pg.rbw_hz * pg.rbw_hz;
        bins += 1;
    }
    let bg_term = bins as f64 * pg.rbw_hz * background.sigma;
    Ok(BandIntegral {
        area,
        sigma: (var + bg_term * bg_term).sqrt(),
        bins,
    })
}
