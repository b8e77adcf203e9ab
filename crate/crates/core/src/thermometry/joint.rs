//! Simultaneous fit of both sidebands of one mechanical mode: separate
//! heights and backgrounds, one shared linewidth and one shared |centre|.

use alloc::vec::Vec;

// Shadowed by the inherent methods whenever std is in the build graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::fit::{
    initial_guess, lorentzian_jacobian, lorentzian_peak, samples, solve, FitOptions, FitWindow,
    Model, Sample, RESOLUTION_LIMIT,
};
use crate::spectrum::Periodogram;
use crate::{Error, Result};

pub const PAIR_PARAMS: usize = 6;

const STOKES: usize = 0;
const ANTI_STOKES: usize = 1;

/// Parameter order of [`SidebandFit::covariance`].
pub mod index {
    pub const STOKES_AMPLITUDE: usize = 0;
    pub const ANTI_STOKES_AMPLITUDE: usize = 1;
    pub const CENTER: usize = 2;
    pub const GAMMA: usize = 3;
    pub const STOKES_BACKGROUND: usize = 4;
    pub const ANTI_STOKES_BACKGROUND: usize = 5;
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SidebandFit {
    pub stokes_amplitude: f64,
    pub antistokes_amplitude: f64,
    /// Mechanical frequency; the Stokes peak sits at `-center_hz`.
    pub center_hz: f64,
    pub gamma_hz: f64,
    pub stokes_background: f64,
    pub antistokes_background: f64,
    pub covariance: [[f64; PAIR_PARAMS]; PAIR_PARAMS],
    pub residual_chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    pub resolution_limited: bool,
    /// Anti-Stokes side window; the Stokes side uses its mirror image.
    pub window: FitWindow,
}

impl SidebandFit {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[i][i].sqrt()
    }

    pub fn params(&self) -> [f64; PAIR_PARAMS] {
        [
            self.stokes_amplitude,
            self.antistokes_amplitude,
            self.center_hz,
            self.gamma_hz,
            self.stokes_background,
            self.antistokes_background,
        ]
    }
}

struct SidebandPair;

impl Model<PAIR_PARAMS> for SidebandPair {
    fn eval(&self, p: &[f64; PAIR_PARAMS], s: &Sample) -> (f64, [f64; PAIR_PARAMS]) {
        let [a_s, a_as, c, g, b_s, b_as] = *p;
        let mut grad = [0.0; PAIR_PARAMS];
        // The Stokes window is evaluated on mirrored abscissae so both
        // channels share the centre parameter with the same sign.
        let (x, a, b, amp_i, bg_i) = match s.channel {
            STOKES => (-s.x, a_s, b_s, 0, 4),
            _ => (s.x, a_as, b_as, 1, 5),
        };
        let q = [a, c, g, b];
        let j = lorentzian_jacobian(x, &q);
        grad[amp_i] = j[0];
        grad[2] = j[1];
        grad[3] = j[2];
        grad[bg_i] = j[3];
        (lorentzian_peak(x, &q), grad)
    }

    fn scale(&self, p: &[f64; PAIR_PARAMS]) -> [f64; PAIR_PARAMS] {
        let [a_s, a_as, _, g, b_s, b_as] = *p;
        let a = a_s.abs().max(a_as.abs());
        [
            a_s.abs().max(1e-3 * a),
            a_as.abs().max(1e-3 * a),
            g,
            g,
            b_s.abs().max(1e-3 * a),
            b_as.abs().max(1e-3 * a),
        ]
    }

    fn feasible(&self, p: &[f64; PAIR_PARAMS]) -> bool {
        p[0] >= 0.0 && p[1] >= 0.0 && p[3] > 0.0
    }
}

/// Fit both sidebands at once. `window` selects anti-Stokes bins; its mirror
/// image selects Stokes bins. Both periodograms must share `rbw` and `n_avg`
/// conventions (each bin carries its own `n_avg`).
pub fn fit_sideband_pair(
    stokes: &Periodogram,
    antistokes: &Periodogram,
    window: &FitWindow,
    opts: &FitOptions,
) -> Result<SidebandFit> {
    let mirrored = window.mirrored();
    let idx_s = mirrored.checked_bins(stokes)?;
    let idx_as = window.checked_bins(antistokes)?;

    let guess_s = initial_guess(stokes, &mirrored)?;
    // A nearly empty mode has no visible anti-Stokes peak; the Stokes side
    // then supplies the shape.
    let (amp_as, bg_as) = match initial_guess(antistokes, window) {
        Ok(g) if (g.center_hz + guess_s.center_hz).abs() < guess_s.gamma_hz => {
            (g.amplitude, g.background)
        }
        Ok(g) => (0.1 * guess_s.amplitude, g.background),
        Err(Error::FlatSpectrum) => {
            let mut v: Vec<f64> = idx_as.iter().map(|&i| antistokes.values[i]).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            (0.1 * guess_s.amplitude, v[v.len() / 2])
        }
        Err(e) => return Err(e),
    };
    let init = [
        guess_s.amplitude,
        amp_as,
        -guess_s.center_hz,
        guess_s.gamma_hz,
        guess_s.background,
        bg_as,
    ];

    let mut data = samples(stokes, &idx_s, STOKES);
    data.extend(samples(antistokes, &idx_as, ANTI_STOKES));
    let sol = solve(&SidebandPair, &data, init, opts)?;
    let [a_s, a_as, c, g, b_s, b_as] = sol.params;
    let rbw = stokes.rbw_hz.max(antistokes.rbw_hz);
    let resolution_limited = g < RESOLUTION_LIMIT * rbw;
    // An unresolved line leaves amplitude and width degenerate; the centre
    // and backgrounds that band integration needs are still determined.
    if !sol.converged && !resolution_limited {
        return Err(Error::NoConvergence {
            iterations: sol.iterations,
        });
    }
    Ok(SidebandFit {
        stokes_amplitude: a_s,
        antistokes_amplitude: a_as,
        center_hz: c,
        gamma_hz: g,
        stokes_background: b_s,
        antistokes_background: b_as,
        covariance: sol.covariance,
        residual_chi2: sol.chi2,
        dof: data.len() - PAIR_PARAMS,
        converged: sol.converged,
        iterations: sol.iterations,
        resolution_limited,
        window: window.clone(),
    })
}
