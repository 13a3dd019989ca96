//! Direction guessing, guessing fidelities and weakness sweeps.
//!
//! The guess reads the two pointers as one planar pointer: its direction
//! `θg = atan2(x, z)` becomes the guessed state `cos(θg/2)|0⟩ + sin(θg/2)|1⟩`.
//! The average fidelity integrates `|⟨ψg|ψ⟩|²` against the outcome density.
//!
//! The continuous model is integrated in polar coordinates: the density has
//! a thin ring of width ~Δ at radius δ in the strong regime, which a radial
//! adaptive rule resolves far more cheaply than a Cartesian one. Trotter
//! densities are Gaussian mixtures and go through the Cartesian plane rule.
//! [`avg_fidelity_cartesian`] keeps the Cartesian route available for the
//! continuous model as a cross-check.

use std::cell::RefCell;
use std::f64::consts::{PI, SQRT_2, TAU};

use rayon::prelude::*;

use crate::continuous::{prob_density, radial_integrals};
use crate::error::{Error, Result};
use crate::model::{Geometry, MeasurementConfig, QubitState};
use crate::quadrature::{integrate_interval, integrate_periodic_vec, integrate_plane, Estimate, QuadSpec, Rect};
use crate::trotter::{evolve, DensityEvaluator};

/// Guessed state from a pointer reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guess {
    pub theta_g: f64,
    pub sigma_z_g: f64,
    pub sigma_x_g: f64,
}

/// Direction guess for the outcome `(z, x)`. The origin, a null set under
/// every density here, maps to `θg = 0`.
pub fn guess_from_point(z: f64, x: f64) -> Guess {
    let theta_g = if z == 0.0 && x == 0.0 {
        0.0
    } else {
        let t = x.atan2(z).rem_euclid(TAU);
        if t >= TAU {
            0.0
        } else {
            t
        }
    };
    Guess {
        theta_g,
        sigma_z_g: theta_g.cos(),
        sigma_x_g: theta_g.sin(),
    }
}

/// Coordinates of `(z, x)` in the oblique basis `{ê_z, (ê_z + ê_x)/√2}`, so
/// that σz and diagonal σx displacements become orthogonal axes.
pub fn diag_to_orth(z: f64, x: f64) -> (f64, f64) {
    (z - x, SQRT_2 * x)
}

/// `|⟨ψg|ψi⟩|² = cos²((θi − θg)/2)`.
pub fn pointwise_fidelity(theta_i: f64, theta_g: f64) -> f64 {
    let c = (0.5 * (theta_i - theta_g)).cos();
    c * c
}

/// Coordinates the direction guess is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GuessFrame {
    /// Raw pointer coordinates.
    Orthogonal,
    /// Pointer coordinates mapped through [`diag_to_orth`] first.
    Oblique,
}

impl GuessFrame {
    /// Oblique for the 45° geometry, orthogonal otherwise.
    pub fn for_geometry(geometry: Geometry) -> Self {
        match geometry {
            Geometry::Diagonal45 => GuessFrame::Oblique,
            _ => GuessFrame::Orthogonal,
        }
    }

    pub fn guess(&self, z: f64, x: f64) -> Guess {
        match self {
            GuessFrame::Orthogonal => guess_from_point(z, x),
            GuessFrame::Oblique => {
                let (u, v) = diag_to_orth(z, x);
                guess_from_point(u, v)
            }
        }
    }
}

/// Radial cutoff / half-width of the integration window: the mass lies
/// within `reach + 8Δ` of the origin.
fn window_half_width(reach: f64, cfg: &MeasurementConfig) -> f64 {
    reach + 8.0 * cfg.spread
}

const RADIAL_SPEC: QuadSpec = QuadSpec {
    abs_tol: 1e-9,
    rel_tol: 1e-10,
    max_refinements: 4000,
};

const ANGULAR_SPEC: QuadSpec = QuadSpec {
    abs_tol: 1e-12,
    rel_tol: 1e-11,
    max_refinements: 10,
};

const PLANE_SPEC: QuadSpec = QuadSpec {
    abs_tol: 1e-10,
    rel_tol: 1e-10,
    max_refinements: 4000,
};

// Errors raised inside integrand closures are parked here and surfaced after
// the integrator returns.
struct Deferred(RefCell<Option<Error>>);

impl Deferred {
    fn new() -> Self {
        Deferred(RefCell::new(None))
    }

    fn value(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                let mut slot = self.0.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                f64::NAN
            }
        }
    }

    fn finish(self, r: Result<Estimate>) -> Result<Estimate> {
        if let Some(e) = self.0.into_inner() {
            return Err(e);
        }
        r
    }
}

/// `∫∫ P(z, x | ψ) w(z, x) dz dx` for the geometry in `cfg`.
pub fn outcome_integral<W>(psi: &QubitState, cfg: &MeasurementConfig, weight: W) -> Result<Estimate>
where
    W: Fn(f64, f64) -> f64,
{
    cfg.validate()?;
    match cfg.geometry {
        Geometry::Continuous => continuous_polar_integral(psi, cfg, weight),
        _ => trotter_cartesian_integral(psi, cfg, weight),
    }
}

fn continuous_polar_integral<W>(psi: &QubitState, cfg: &MeasurementConfig, weight: W) -> Result<Estimate>
where
    W: Fn(f64, f64) -> f64,
{
    let delta = cfg.coupling;
    let spread = cfg.spread;
    let r_max = window_half_width(delta, cfg);
    let breaks: Vec<f64> = [-4.0, -1.0, 0.0, 1.0, 4.0]
        .iter()
        .map(|k| delta + k * spread)
        .collect();
    let deferred = Deferred::new();
    let radial = integrate_interval(
        |r| {
            if r == 0.0 {
                return 0.0;
            }
            let angular = integrate_periodic_vec(
                |theta| {
                    let (s, c) = theta.sin_cos();
                    let (z, x) = (r * c, r * s);
                    match prob_density(z, x, psi, cfg) {
                        Ok(p) => [p * weight(z, x)],
                        Err(e) => [deferred.value(Err(e))],
                    }
                },
                8,
                &ANGULAR_SPEC,
            );
            match angular {
                Ok([e]) => r * e.value,
                Err(e) => deferred.value(Err(e)),
            }
        },
        0.0,
        r_max,
        &breaks,
        &RADIAL_SPEC,
    );
    deferred.finish(radial)
}

fn trotter_window(grid_bounds: (f64, f64, f64, f64), cfg: &MeasurementConfig) -> Rect {
    let pad = 8.0 * cfg.spread;
    let (z0, z1, x0, x1) = grid_bounds;
    Rect::new((z0 - pad, z1 + pad), (x0 - pad, x1 + pad)).with_breaks(vec![0.0], vec![0.0])
}

fn trotter_cartesian_integral<W>(psi: &QubitState, cfg: &MeasurementConfig, weight: W) -> Result<Estimate>
where
    W: Fn(f64, f64) -> f64,
{
    let grid = evolve(psi, cfg)?;
    let window = trotter_window(grid.center_bounds(), cfg);
    let eval = DensityEvaluator::new(&grid);
    integrate_plane(|z, x| eval.density(z, x) * weight(z, x), &window, &PLANE_SPEC)
}

/// Total outcome probability, 1 up to quadrature and truncation error.
pub fn total_probability(psi: &QubitState, cfg: &MeasurementConfig) -> Result<f64> {
    Ok(outcome_integral(psi, cfg, |_, _| 1.0)?.value)
}

/// Average guessing fidelity with the default frame for the geometry.
pub fn avg_fidelity(psi: &QubitState, cfg: &MeasurementConfig) -> Result<f64> {
    avg_fidelity_in_frame(psi, cfg, GuessFrame::for_geometry(cfg.geometry))
}

/// Average guessing fidelity with the guess taken in `frame`.
pub fn avg_fidelity_in_frame(psi: &QubitState, cfg: &MeasurementConfig, frame: GuessFrame) -> Result<f64> {
    let theta_i = psi.theta();
    let e = outcome_integral(psi, cfg, |z, x| pointwise_fidelity(theta_i, frame.guess(z, x).theta_g))?;
    Ok(e.value)
}

/// Average fidelity through the Cartesian plane rule for any geometry. For the
/// continuous model this is slow at small weakness and exists to cross-check
/// the polar route.
pub fn avg_fidelity_cartesian(psi: &QubitState, cfg: &MeasurementConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.geometry.is_trotter() {
        return avg_fidelity(psi, cfg);
    }
    let theta_i = psi.theta();
    let half = window_half_width(cfg.coupling, cfg);
    let window = Rect::centered(half).with_breaks(vec![0.0], vec![0.0]);
    let deferred = Deferred::new();
    let spec = QuadSpec {
        abs_tol: 1e-8,
        rel_tol: 1e-8,
        max_refinements: 4000,
    };
    let r = integrate_plane(
        |z, x| {
            let p = deferred.value(prob_density(z, x, psi, cfg));
            p * pointwise_fidelity(theta_i, guess_from_point(z, x).theta_g)
        },
        &window,
        &spec,
    );
    Ok(deferred.finish(r)?.value)
}

/// Continuous-model average fidelity from the radial profile alone:
/// `1/2 + π ∫ r I1(r) H(r) dr`. The angular integral of the guess is done in
/// closed form, which presumes rotational covariance; the general routes do
/// not.
pub fn avg_fidelity_radial(cfg: &MeasurementConfig) -> Result<f64> {
    cfg.require(Geometry::Continuous)?;
    let delta = cfg.coupling;
    let r_max = window_half_width(delta, cfg);
    let breaks: Vec<f64> = [-4.0, -1.0, 0.0, 1.0, 4.0]
        .iter()
        .map(|k| delta + k * cfg.spread)
        .collect();
    let deferred = Deferred::new();
    let e = integrate_interval(
        |r| {
            let (i1, h) = match radial_integrals(r, cfg) {
                Ok(v) => v,
                Err(e) => return deferred.value(Err(e)),
            };
            r * i1 * h
        },
        0.0,
        r_max,
        &breaks,
        &RADIAL_SPEC,
    );
    Ok(0.5 + PI * deferred.finish(e)?.value)
}

/// One input state's average fidelity across weakness values.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurve {
    pub geometry: Geometry,
    pub theta_i: f64,
    /// `(Δ/δ, F_avg)`, strictly increasing in Δ/δ.
    pub samples: Vec<(f64, f64)>,
}

/// An interior local minimum followed by the highest interior local maximum
/// after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondWind {
    pub minimum: (f64, f64),
    pub maximum: (f64, f64),
}

impl FidelityCurve {
    fn interior(&self, better: impl Fn(f64, f64) -> bool) -> Vec<usize> {
        let s = &self.samples;
        (1..s.len().saturating_sub(1))
            .filter(|&i| better(s[i].1, s[i - 1].1) && better(s[i].1, s[i + 1].1))
            .collect()
    }

    /// Indices of strict interior local minima.
    pub fn local_minima(&self) -> Vec<usize> {
        self.interior(|a, b| a < b)
    }

    /// Indices of strict interior local maxima.
    pub fn local_maxima(&self) -> Vec<usize> {
        self.interior(|a, b| a > b)
    }

    pub fn second_wind(&self) -> Option<SecondWind> {
        let first_min = *self.local_minima().first()?;
        let peak = self
            .local_maxima()
            .into_iter()
            .filter(|&i| i > first_min)
            .max_by(|&a, &b| self.samples[a].1.total_cmp(&self.samples[b].1))?;
        Some(SecondWind {
            minimum: self.samples[first_min],
            maximum: self.samples[peak],
        })
    }
}

/// Average fidelity at each weakness in `weakness_grid` (strictly increasing,
/// positive), evaluated in parallel and reported in grid order.
pub fn fidelity_curve(
    psi: &QubitState,
    cfg_base: &MeasurementConfig,
    weakness_grid: &[f64],
) -> Result<FidelityCurve> {
    if weakness_grid.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::invalid("weakness values must be positive and finite"));
    }
    if weakness_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("weakness grid must be strictly increasing"));
    }
    let values: Vec<Result<f64>> = weakness_grid
        .par_iter()
        .map(|&w| {
            let cfg = cfg_base.with_weakness(w)?;
            avg_fidelity(psi, &cfg)
        })
        .collect();
    let mut samples = Vec::with_capacity(values.len());
    for (&w, v) in weakness_grid.iter().zip(values) {
        match v {
            Ok(f) => samples.push((w, f)),
            Err(e) => {
                return Err(Error::CurvePoint {
                    weakness: w,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(FidelityCurve {
        geometry: cfg_base.geometry,
        theta_i: psi.theta(),
        samples,
    })
}

/// `count` log-spaced points from `min` to `max` inclusive.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && min.is_finite() && max.is_finite()) {
        return Err(Error::invalid(format!("bad range [{min}, {max}]")));
    }
    match count {
        0 => Err(Error::invalid("count must be positive")),
        1 => Ok(vec![min]),
        _ => {
            let (a, b) = (min.ln(), max.ln());
            Ok((0..count)
                .map(|i| {
                    if i + 1 == count {
                        max
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect())
        }
    }
}
