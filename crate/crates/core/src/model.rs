//! Input states and measurement configurations shared by both models.

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::{Error, Result};

/// A pure qubit state in the x–z plane of the Bloch sphere,
/// `cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    theta: f64,
}

impl QubitState {
    /// Builds the state with polar angle `theta`, normalised to `[0, 2π)`.
    ///
    /// Note that `θ` and `θ + 2π` differ by a global sign, which no density or
    /// fidelity can see.
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::invalid(format!("theta must be finite, got {theta}")));
        }
        let mut t = theta.rem_euclid(TAU);
        if t >= TAU {
            t = 0.0;
        }
        Ok(QubitState { theta: t })
    }

    /// |0⟩, also written |H⟩.
    pub fn zero() -> Self {
        QubitState { theta: 0.0 }
    }
    /// |1⟩, also written |V⟩.
    pub fn one() -> Self {
        QubitState { theta: PI }
    }
    /// |+⟩ = (|0⟩ + |1⟩)/√2, also written |D⟩.
    pub fn plus() -> Self {
        QubitState { theta: PI / 2.0 }
    }
    /// |−⟩ = (|0⟩ − |1⟩)/√2 up to global phase, also written |A⟩.
    pub fn minus() -> Self {
        QubitState { theta: 1.5 * PI }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Amplitude on |0⟩.
    pub fn alpha(&self) -> f64 {
        (0.5 * self.theta).cos()
    }

    /// Amplitude on |1⟩.
    pub fn beta(&self) -> f64 {
        (0.5 * self.theta).sin()
    }

    /// ⟨σz⟩ = cos θ.
    pub fn sigma_z(&self) -> f64 {
        self.theta.cos()
    }

    /// ⟨σx⟩ = sin θ.
    pub fn sigma_x(&self) -> f64 {
        self.theta.sin()
    }
}

/// Unnormalised real qubit vector `c0|0⟩ + c1|1⟩`; its squared norm is the
/// outcome density at the point it was conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnnormalizedQubit {
    pub c0: f64,
    pub c1: f64,
}

impl UnnormalizedQubit {
    pub fn new(c0: f64, c1: f64) -> Self {
        UnnormalizedQubit { c0, c1 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0 * self.c0 + self.c1 * self.c1
    }

    pub fn norm(&self) -> f64 {
        self.c0.hypot(self.c1)
    }

    pub fn distance(&self, other: &UnnormalizedQubit) -> f64 {
        (self.c0 - other.c0).hypot(self.c1 - other.c1)
    }
}

/// How the two observables are coupled to the pointers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// Simultaneous coupling, exact evolution under σz⊗p̂z + σx⊗p̂x.
    Continuous,
    /// Alternating σz and σx displacements along orthogonal axes.
    Orthogonal90,
    /// Alternating displacements with the σx step along the 45° diagonal,
    /// as produced by a beam displacer rotated by 45°.
    Diagonal45,
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Continuous => "continuous",
            Geometry::Orthogonal90 => "trotter90",
            Geometry::Diagonal45 => "trotter45",
        }
    }

    pub fn is_trotter(&self) -> bool {
        !matches!(self, Geometry::Continuous)
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which diagonal the σx = +1 branch takes in the 45° geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DiagonalSign {
    /// Eigenvalue +1 moves toward `+(cos a, sin a)`, same as the other steps.
    #[default]
    Positive,
    /// Eigenvalue +1 moves toward `-(cos a, sin a)`.
    Negative,
}

impl DiagonalSign {
    pub fn factor(&self) -> f64 {
        match self {
            DiagonalSign::Positive => 1.0,
            DiagonalSign::Negative => -1.0,
        }
    }
}

/// Pointer spread Δ, total coupling δ, geometry and Trotter depth.
///
/// Lengths are in arbitrary units; every observable depends only on the
/// weakness Δ/δ, and the convenience constructors fix δ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    pub spread: f64,
    pub coupling: f64,
    pub geometry: Geometry,
    /// Number of Trotter rounds; ignored by the continuous model.
    pub trotter_depth: usize,
    pub diagonal_sign: DiagonalSign,
}

impl MeasurementConfig {
    pub fn new(spread: f64, coupling: f64, geometry: Geometry, trotter_depth: usize) -> Result<Self> {
        let cfg = MeasurementConfig {
            spread,
            coupling,
            geometry,
            trotter_depth,
            diagonal_sign: DiagonalSign::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn continuous(weakness: f64) -> Result<Self> {
        Self::new(weakness, 1.0, Geometry::Continuous, 1)
    }

    pub fn orthogonal(weakness: f64, depth: usize) -> Result<Self> {
        Self::new(weakness, 1.0, Geometry::Orthogonal90, depth)
    }

    pub fn diagonal(weakness: f64, depth: usize) -> Result<Self> {
        Self::new(weakness, 1.0, Geometry::Diagonal45, depth)
    }

    pub fn with_diagonal_sign(mut self, sign: DiagonalSign) -> Self {
        self.diagonal_sign = sign;
        self
    }

    /// Same coupling, geometry and depth at a different weakness Δ/δ.
    pub fn with_weakness(&self, weakness: f64) -> Result<Self> {
        let cfg = MeasurementConfig {
            spread: weakness * self.coupling,
            ..*self
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::invalid(format!("spread must be positive, got {}", self.spread)));
        }
        if !(self.coupling > 0.0 && self.coupling.is_finite()) {
            return Err(Error::invalid(format!(
                "coupling must be positive, got {}",
                self.coupling
            )));
        }
        if self.geometry.is_trotter() && self.trotter_depth == 0 {
            return Err(Error::invalid("Trotter depth must be at least 1"));
        }
        Ok(())
    }

    /// Δ/δ.
    pub fn weakness(&self) -> f64 {
        self.spread / self.coupling
    }

    /// Relative displacement between the two branches of one crystal, 2δ/n.
    pub fn crystal_displacement(&self) -> f64 {
        2.0 * self.coupling / self.trotter_depth as f64
    }

    /// Centre displacement of each branch per step in the symmetric frame, δ/n.
    pub fn step_displacement(&self) -> f64 {
        0.5 * self.crystal_displacement()
    }

    pub(crate) fn require(&self, geometry: Geometry) -> Result<()> {
        if self.geometry != geometry {
            return Err(Error::Geometry {
                expected: geometry.name(),
                found: self.geometry.name(),
            });
        }
        Ok(())
    }
}
