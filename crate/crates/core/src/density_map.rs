//! Discretised outcome densities and their CSV / PGM encodings.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::continuous::prob_density;
use crate::error::{Error, Result};
use crate::model::{Geometry, MeasurementConfig, QubitState};
use crate::trotter::{evolve, DensityEvaluator};

/// Run parameters carried alongside a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapMeta {
    pub geometry: Geometry,
    pub theta_i: f64,
    pub weakness: f64,
    pub trotter_depth: usize,
}

/// `P(z, x | ψ)` sampled at cell centres. Row 0 is the top of the image
/// (largest x); columns run in increasing z.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub nz: usize,
    pub nx: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub values: Vec<f64>,
    pub meta: MapMeta,
}

/// Farthest branch centre from the origin, in units of δ.
pub fn reach(geometry: Geometry) -> f64 {
    match geometry {
        Geometry::Diagonal45 => 1.0 + std::f64::consts::FRAC_1_SQRT_2,
        _ => 1.0,
    }
}

/// Default square half-width `reach·δ + 5Δ`.
pub fn default_half_width(cfg: &MeasurementConfig) -> f64 {
    reach(cfg.geometry) * cfg.coupling + 5.0 * cfg.spread
}

impl DensityMap {
    /// Samples the density of `psi` on an `nz × nx` grid over the window.
    pub fn compute(
        psi: &QubitState,
        cfg: &MeasurementConfig,
        z: (f64, f64),
        x: (f64, f64),
        nz: usize,
        nx: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        if nz == 0 || nx == 0 {
            return Err(Error::invalid("resolution must be positive"));
        }
        if !(z.0 < z.1 && x.0 < x.1 && z.0.is_finite() && z.1.is_finite() && x.0.is_finite() && x.1.is_finite()) {
            return Err(Error::invalid("window bounds must be finite and increasing"));
        }
        let hz = (z.1 - z.0) / nz as f64;
        let hx = (x.1 - x.0) / nx as f64;
        let zc = |j: usize| z.0 + (j as f64 + 0.5) * hz;
        let xc = |i: usize| x.1 - (i as f64 + 0.5) * hx;

        let values: Vec<f64> = match cfg.geometry {
            Geometry::Continuous => {
                let rows: Result<Vec<Vec<f64>>> = (0..nx)
                    .into_par_iter()
                    .map(|i| (0..nz).map(|j| prob_density(zc(j), xc(i), psi, cfg)).collect())
                    .collect();
                rows?.into_iter().flatten().collect()
            }
            _ => {
                let eval = DensityEvaluator::new(&evolve(psi, cfg)?);
                (0..nx)
                    .into_par_iter()
                    .flat_map_iter(|i| {
                        let eval = &eval;
                        (0..nz).map(move |j| eval.density(zc(j), xc(i)))
                    })
                    .collect()
            }
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Quadrature {
                value: *v,
                err_est: f64::INFINITY,
                target: 0.0,
            });
        }
        Ok(DensityMap {
            nz,
            nx,
            z_min: z.0,
            z_max: z.1,
            x_min: x.0,
            x_max: x.1,
            values,
            meta: MapMeta {
                geometry: cfg.geometry,
                theta_i: psi.theta(),
                weakness: cfg.weakness(),
                trotter_depth: cfg.trotter_depth,
            },
        })
    }

    pub fn cell_area(&self) -> f64 {
        (self.z_max - self.z_min) / self.nz as f64 * (self.x_max - self.x_min) / self.nx as f64
    }

    /// Midpoint-rule mass of the map.
    pub fn riemann_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn z_center(&self, j: usize) -> f64 {
        self.z_min + (j as f64 + 0.5) * (self.z_max - self.z_min) / self.nz as f64
    }

    pub fn x_center(&self, i: usize) -> f64 {
        self.x_max - (i as f64 + 0.5) * (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.nz + col]
    }

    fn meta_line(&self) -> String {
        let m = &self.meta;
        format!(
            "model={} theta_i={:.16e} weakness={:.16e} n={} z=[{:.16e},{:.16e}] x=[{:.16e},{:.16e}] res={}x{} norm=max max={:.16e}",
            m.geometry,
            m.theta_i,
            m.weakness,
            if m.geometry.is_trotter() { m.trotter_depth } else { 0 },
            self.z_min,
            self.z_max,
            self.x_min,
            self.x_max,
            self.nz,
            self.nx,
            self.max_value()
        )
    }

    /// `z,x,density` rows in image order.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * self.values.len() + 16);
        s.push_str("z,x,density\n");
        for i in 0..self.nx {
            let x = self.x_center(i);
            for j in 0..self.nz {
                let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", self.z_center(j), x, self.at(i, j));
            }
        }
        s
    }

    /// Binary 16-bit PGM scaled so the largest cell maps to 65535.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n# pointerlab meta: {}\n{} {}\n65535\n", self.meta_line(), self.nz, self.nx).into_bytes();
        let max = self.max_value();
        out.reserve(2 * self.values.len());
        for &v in &self.values {
            let level = if max > 0.0 {
                (v / max * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            };
            out.extend_from_slice(&level.to_be_bytes());
        }
        out
    }

    /// Writes `<stem>.csv` and `<stem>.pgm`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        write_atomic(&with_suffix(stem, "csv"), self.to_csv().as_bytes())?;
        write_atomic(&with_suffix(stem, "pgm"), &self.to_pgm())
    }
}

/// `stem` with `.ext` appended (not substituted).
pub fn with_suffix(stem: &Path, ext: &str) -> std::path::PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    s.into()
}

/// Writes through a temporary file in the target directory and renames it
/// into place; on failure nothing is left at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    // Temp files are created owner-only; outputs get the usual mode.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(cfg: &MeasurementConfig, res: usize) -> DensityMap {
        let h = default_half_width(cfg);
        DensityMap::compute(&QubitState::zero(), cfg, (-h, h), (-h, h), res, res).unwrap()
    }

    #[test]
    fn orientation() {
        let cfg = MeasurementConfig::orthogonal(0.1, 1).unwrap();
        // |0⟩ after one round: lobes at (1, ±1).
        let m = small(&cfg, 40);
        let (mut best, mut at) = (0.0, (0, 0));
        for i in 0..m.nx {
            for j in 0..m.nz {
                if m.at(i, j) > best {
                    best = m.at(i, j);
                    at = (i, j);
                }
            }
        }
        assert!(m.z_center(at.1) > 0.5);
        assert!(m.x_center(0) > m.x_center(m.nx - 1));
    }

    #[test]
    fn riemann_mass_is_one() {
        for cfg in [
            MeasurementConfig::continuous(0.3).unwrap(),
            MeasurementConfig::orthogonal(0.15, 6).unwrap(),
            MeasurementConfig::diagonal(0.03, 6).unwrap(),
        ] {
            let m = small(&cfg, 256);
            assert!((m.riemann_mass() - 1.0).abs() < 1e-3, "{} {}", cfg.geometry, m.riemann_mass());
            assert!(m.values.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn encodings() {
        let cfg = MeasurementConfig::orthogonal(0.5, 2).unwrap();
        let m = small(&cfg, 8);
        let csv = m.to_csv();
        assert!(csv.starts_with("z,x,density\n"));
        assert_eq!(csv.lines().count(), 65);
        assert!(!csv.contains('\r'));
        let first = csv.lines().nth(1).unwrap();
        assert_eq!(first.split(',').count(), 3);
        let pgm = m.to_pgm();
        let text = String::from_utf8_lossy(&pgm[..80]);
        assert!(text.starts_with("P5\n# pointerlab meta: model=trotter90"));
        let header_len = pgm.len() - 2 * 64;
        assert!(std::str::from_utf8(&pgm[..header_len]).unwrap().ends_with("8 8\n65535\n"));
        let levels: Vec<u16> = pgm[header_len..].chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        assert_eq!(*levels.iter().max().unwrap(), 65535);
    }

    #[test]
    fn rejects_bad_window() {
        let cfg = MeasurementConfig::continuous(0.3).unwrap();
        let psi = QubitState::zero();
        assert!(DensityMap::compute(&psi, &cfg, (1.0, -1.0), (-1.0, 1.0), 4, 4).is_err());
        assert!(DensityMap::compute(&psi, &cfg, (-1.0, 1.0), (-1.0, 1.0), 0, 4).is_err());
    }

    #[test]
    fn atomic_write_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("map");
        let cfg = MeasurementConfig::orthogonal(0.5, 2).unwrap();
        small(&cfg, 6).write(&stem).unwrap();
        assert!(with_suffix(&stem, "csv").exists());
        assert!(with_suffix(&stem, "pgm").exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    }
}
