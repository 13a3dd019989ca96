//! Trotterized measurement: the joint state stays a finite coherent sum of
//! displaced Gaussian beams, one real polarization amplitude pair per centre.
//!
//! A σ-coupled displacement step splits every beam along the eigenbasis of
//! the coupled observable and translates the +1 branch by `+d·ê`, the −1
//! branch by `−d·ê`. Centres are always integer combinations of the step
//! vectors used so far, so sites are keyed by those integer counts and
//! merging never compares floating-point positions.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::model::{Geometry, MeasurementConfig, QubitState};
use crate::specfun::gaussian_amp_unchecked;

/// Amplitudes below this are exact cancellations, not physics.
const PRUNE: f64 = 1e-15;

/// Polarization amplitudes `(a_H, a_V)` of one beam.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Amplitude {
    pub h: f64,
    pub v: f64,
}

impl Amplitude {
    pub fn new(h: f64, v: f64) -> Self {
        Amplitude { h, v }
    }
}

/// Integer step counts along each registered displacement vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeIndex(Vec<i32>);

/// Coherent superposition of equal-width Gaussian beams.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGrid {
    spread: f64,
    axes: Vec<[f64; 2]>,
    sites: BTreeMap<LatticeIndex, Amplitude>,
}

impl BeamGrid {
    /// A single beam at the origin carrying the qubit state.
    pub fn from_state(psi: &QubitState, spread: f64) -> Result<Self> {
        Self::single(Amplitude::new(psi.alpha(), psi.beta()), spread)
    }

    pub fn single(amp: Amplitude, spread: f64) -> Result<Self> {
        if !(spread > 0.0 && spread.is_finite()) {
            return Err(Error::invalid(format!("spread must be positive, got {spread}")));
        }
        let mut sites = BTreeMap::new();
        sites.insert(LatticeIndex(Vec::new()), amp);
        Ok(BeamGrid {
            spread,
            axes: Vec::new(),
            sites,
        })
    }

    /// Builds a grid from explicit centres. Each centre becomes its own axis,
    /// so no merging happens between the given sites.
    pub fn from_sites(sites: &[([f64; 2], Amplitude)], spread: f64) -> Result<Self> {
        let mut grid = BeamGrid::single(Amplitude::default(), spread)?;
        grid.sites.clear();
        let n = sites.len();
        for (k, (c, a)) in sites.iter().enumerate() {
            grid.axes.push(*c);
            let mut idx = vec![0; n];
            idx[k] = 1;
            grid.sites.insert(LatticeIndex(idx), *a);
        }
        Ok(grid)
    }

    pub fn spread(&self) -> f64 {
        self.spread
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    fn center_of(&self, idx: &LatticeIndex) -> [f64; 2] {
        let mut c = [0.0, 0.0];
        for (k, &n) in idx.0.iter().enumerate() {
            c[0] += n as f64 * self.axes[k][0];
            c[1] += n as f64 * self.axes[k][1];
        }
        c
    }

    /// Sites as `(centre, amplitude)` in lattice order.
    pub fn sites(&self) -> Vec<([f64; 2], Amplitude)> {
        self.sites
            .iter()
            .map(|(idx, a)| (self.center_of(idx), *a))
            .collect()
    }

    /// Index of the axis with this exact step vector, registering it if new.
    fn axis(&mut self, step: [f64; 2]) -> usize {
        if let Some(k) = self.axes.iter().position(|a| *a == step) {
            return k;
        }
        self.axes.push(step);
        let n = self.axes.len();
        let old = std::mem::take(&mut self.sites);
        self.sites = old
            .into_iter()
            .map(|(mut idx, a)| {
                idx.0.resize(n, 0);
                (idx, a)
            })
            .collect();
        n - 1
    }

    /// Splits every site into the `±1` eigenbranches `(e0, e1)` of a
    /// displacement along `step` and recombines coinciding centres.
    fn displace(&mut self, step: [f64; 2], plus: [f64; 2]) {
        let k = self.axis(step);
        let minus = [plus[1], -plus[0]];
        let mut next: BTreeMap<LatticeIndex, Amplitude> = BTreeMap::new();
        for (idx, a) in &self.sites {
            for (dir, e) in [(1, plus), (-1, minus)] {
                let proj = a.h * e[0] + a.v * e[1];
                if proj.abs() < PRUNE {
                    continue;
                }
                let mut j = idx.clone();
                j.0[k] += dir;
                let slot = next.entry(j).or_default();
                slot.h += proj * e[0];
                slot.v += proj * e[1];
            }
        }
        next.retain(|_, a| a.h.abs() >= PRUNE || a.v.abs() >= PRUNE);
        self.sites = next;
    }

    /// Overlap-weighted squared norm
    /// `Σ_{s,s'} (aH aH' + aV aV') exp(-|r_s - r_s'|² / 8Δ²)`.
    pub fn norm_sqr(&self) -> f64 {
        let sites = self.sites();
        let inv = 1.0 / (8.0 * self.spread * self.spread);
        let mut total = 0.0;
        for (i, (ci, ai)) in sites.iter().enumerate() {
            total += ai.h * ai.h + ai.v * ai.v;
            for (cj, aj) in &sites[i + 1..] {
                let d2 = (ci[0] - cj[0]).powi(2) + (ci[1] - cj[1]).powi(2);
                total += 2.0 * (ai.h * aj.h + ai.v * aj.v) * (-d2 * inv).exp();
            }
        }
        total
    }

    /// Axis-aligned bounding box of the beam centres: `(zmin, zmax, xmin, xmax)`.
    pub fn center_bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (c, _) in self.sites() {
            b.0 = b.0.min(c[0]);
            b.1 = b.1.max(c[0]);
            b.2 = b.2.min(c[1]);
            b.3 = b.3.max(c[1]);
        }
        b
    }
}

fn check_step(d: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::invalid(format!("displacement must be positive, got {d}")));
    }
    Ok(())
}

/// σz step: the H amplitude moves to `(z0 + d, x0)`, the V amplitude to `(z0 − d, x0)`.
pub fn step_z(grid: &BeamGrid, d: f64) -> Result<BeamGrid> {
    check_step(d)?;
    let mut g = grid.clone();
    g.displace([d, 0.0], [1.0, 0.0]);
    Ok(g)
}

/// σx step along x: `(α+β)/2 (1, 1)` moves to `(z0, x0 + d)`,
/// `(α−β)/2 (1, −1)` to `(z0, x0 − d)`.
pub fn step_x_orthogonal(grid: &BeamGrid, d: f64) -> Result<BeamGrid> {
    check_step(d)?;
    let mut g = grid.clone();
    g.displace([0.0, d], [FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    Ok(g)
}

/// σx step along the direction at `angle` from the z axis: the `|+⟩` branch
/// moves by `+d (cos angle, sin angle)`, the `|−⟩` branch by the opposite.
pub fn step_x_diagonal(grid: &BeamGrid, d: f64, angle: f64) -> Result<BeamGrid> {
    check_step(d)?;
    if !angle.is_finite() {
        return Err(Error::invalid("angle must be finite"));
    }
    let mut g = grid.clone();
    let (s, c) = angle.sin_cos();
    g.displace([d * c, d * s], [FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    Ok(g)
}

/// Applies `n` rounds of (σz step, then σx step) with centre displacement
/// `δ/n` per step, half the crystal's relative displacement `2δ/n`.
pub fn evolve(psi: &QubitState, cfg: &MeasurementConfig) -> Result<BeamGrid> {
    cfg.validate()?;
    if !cfg.geometry.is_trotter() {
        return Err(Error::Geometry {
            expected: "trotter90 or trotter45",
            found: cfg.geometry.name(),
        });
    }
    let d = cfg.step_displacement();
    let mut grid = BeamGrid::from_state(psi, cfg.spread)?;
    let angle = std::f64::consts::FRAC_PI_4;
    let sign = cfg.diagonal_sign.factor();
    for _ in 0..cfg.trotter_depth {
        grid.displace([d, 0.0], [1.0, 0.0]);
        match cfg.geometry {
            Geometry::Orthogonal90 => grid.displace([0.0, d], [FRAC_1_SQRT_2, FRAC_1_SQRT_2]),
            Geometry::Diagonal45 => grid.displace(
                [sign * d * angle.cos(), sign * d * angle.sin()],
                [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            ),
            Geometry::Continuous => unreachable!(),
        }
    }
    Ok(grid)
}

/// Outcome density: amplitudes are summed coherently per polarization, then
/// squared.
pub fn density_at(grid: &BeamGrid, z: f64, x: f64) -> f64 {
    let mut h = 0.0;
    let mut v = 0.0;
    for (c, a) in grid.sites() {
        let g = gaussian_amp_unchecked(z - c[0], grid.spread) * gaussian_amp_unchecked(x - c[1], grid.spread);
        h += a.h * g;
        v += a.v * g;
    }
    h * h + v * v
}

/// Precomputed centres for repeated density evaluation of one grid.
#[derive(Debug, Clone)]
pub struct DensityEvaluator {
    spread: f64,
    centers: Vec<[f64; 2]>,
    amps: Vec<Amplitude>,
}

impl DensityEvaluator {
    pub fn new(grid: &BeamGrid) -> Self {
        let (centers, amps) = grid.sites().into_iter().unzip();
        DensityEvaluator {
            spread: grid.spread,
            centers,
            amps,
        }
    }

    pub fn density(&self, z: f64, x: f64) -> f64 {
        let inv = 1.0 / (4.0 * self.spread * self.spread);
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * self.spread);
        let mut h = 0.0;
        let mut v = 0.0;
        for (c, a) in self.centers.iter().zip(&self.amps) {
            let d2 = (z - c[0]).powi(2) + (x - c[1]).powi(2);
            let g = (-d2 * inv).exp();
            h += a.h * g;
            v += a.v * g;
        }
        norm * norm * (h * h + v * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn site_list(g: &BeamGrid) -> Vec<([f64; 2], Amplitude)> {
        g.sites()
    }

    fn close(a: [f64; 2], b: [f64; 2]) -> bool {
        (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12
    }

    #[test]
    fn z_step_translates_eigenstates() {
        let g = BeamGrid::single(Amplitude::new(1.0, 0.0), 0.3).unwrap();
        let s = site_list(&step_z(&g, 0.5).unwrap());
        assert_eq!(s.len(), 1);
        assert!(close(s[0].0, [0.5, 0.0]));
        assert_eq!(s[0].1, Amplitude::new(1.0, 0.0));

        let g = BeamGrid::single(Amplitude::new(0.0, 1.0), 0.3).unwrap();
        let s = site_list(&step_z(&g, 0.5).unwrap());
        assert!(close(s[0].0, [-0.5, 0.0]));
        assert_eq!(s[0].1, Amplitude::new(0.0, 1.0));
    }

    #[test]
    fn z_step_splits_superposition() {
        let g = BeamGrid::single(Amplitude::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2), 0.2).unwrap();
        let out = step_z(&g, 0.4).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_step_examples() {
        let plus = BeamGrid::single(Amplitude::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2), 0.3).unwrap();
        let s = site_list(&step_x_orthogonal(&plus, 0.5).unwrap());
        assert_eq!(s.len(), 1);
        assert!(close(s[0].0, [0.0, 0.5]));
        assert!((s[0].1.h - FRAC_1_SQRT_2).abs() < 1e-15 && (s[0].1.v - FRAC_1_SQRT_2).abs() < 1e-15);

        let h = BeamGrid::single(Amplitude::new(1.0, 0.0), 0.3).unwrap();
        let s = site_list(&step_x_orthogonal(&h, 0.5).unwrap());
        assert_eq!(s.len(), 2);
        // Lattice order puts the -d site first.
        assert!(close(s[0].0, [0.0, -0.5]));
        assert!((s[0].1.h - 0.5).abs() < 1e-15 && (s[0].1.v + 0.5).abs() < 1e-15);
        assert!(close(s[1].0, [0.0, 0.5]));
        assert!((s[1].1.h - 0.5).abs() < 1e-15 && (s[1].1.v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diagonal_step_examples() {
        let plus = BeamGrid::single(Amplitude::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2), 0.3).unwrap();
        let s = site_list(&step_x_diagonal(&plus, 1.0, FRAC_PI_4).unwrap());
        assert_eq!(s.len(), 1);
        assert!(close(s[0].0, [FRAC_1_SQRT_2, FRAC_1_SQRT_2]));

        let g = BeamGrid::single(Amplitude::new(0.8, -0.6), 0.3).unwrap();
        let a = site_list(&step_x_diagonal(&g, 0.7, FRAC_PI_2).unwrap());
        let b = site_list(&step_x_orthogonal(&g, 0.7).unwrap());
        assert_eq!(a.len(), b.len());
        for (sa, sb) in a.iter().zip(&b) {
            assert!(close(sa.0, sb.0));
            assert_eq!(sa.1, sb.1);
        }
    }

    #[test]
    fn evolve_single_round() {
        let cfg = MeasurementConfig::orthogonal(0.3, 1).unwrap();
        let g = evolve(&QubitState::zero(), &cfg).unwrap();
        let s = site_list(&g);
        assert_eq!(s.len(), 2);
        assert!(close(s[0].0, [1.0, -1.0]));
        assert!(close(s[1].0, [1.0, 1.0]));
        assert!((s[1].1.h - 0.5).abs() < 1e-15 && (s[0].1.v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn evolve_rejects_continuous() {
        let cfg = MeasurementConfig::continuous(0.3).unwrap();
        assert!(evolve(&QubitState::zero(), &cfg).is_err());
        assert!(step_z(&BeamGrid::single(Amplitude::new(1.0, 0.0), 1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn site_count_bound() {
        for n in 1..=20 {
            for theta in [0.0, 0.9, PI / 2.0] {
                let cfg = MeasurementConfig::orthogonal(0.2, n).unwrap();
                let g = evolve(&QubitState::new(theta).unwrap(), &cfg).unwrap();
                assert!(g.len() <= (n + 1) * (n + 1), "n={n}: {}", g.len());
            }
        }
    }

    #[test]
    fn centers_on_lattice() {
        let cfg = MeasurementConfig::diagonal(0.2, 5).unwrap();
        let g = evolve(&QubitState::new(0.3).unwrap(), &cfg).unwrap();
        let d = cfg.step_displacement();
        for (c, _) in g.sites() {
            // c = i d ez + j d (1,1)/√2
            let j = c[1] / (d * FRAC_1_SQRT_2);
            let i = (c[0] - c[1]) / d;
            assert!((j - j.round()).abs() < 1e-9 && (i - i.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn single_site_density_is_product_gaussian() {
        let g = BeamGrid::single(Amplitude::new(1.0, 0.0), 0.4).unwrap();
        for &(z, x) in &[(0.0, 0.0), (0.3, -0.5), (1.0, 0.2)] {
            let expected = gaussian_amp_unchecked(z, 0.4).powi(2) * gaussian_amp_unchecked(x, 0.4).powi(2);
            assert!((density_at(&g, z, x) - expected).abs() < 1e-15);
            assert!((DensityEvaluator::new(&g).density(z, x) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn destructive_interference_at_midpoint() {
        let g = BeamGrid::from_sites(
            &[([-0.4, 0.0], Amplitude::new(0.5, 0.0)), ([0.4, 0.0], Amplitude::new(-0.5, 0.0))],
            0.3,
        )
        .unwrap();
        assert!(density_at(&g, 0.0, 0.0).abs() < 1e-30);
        assert!(density_at(&g, 0.4, 0.0) > 0.0);
    }
}
