//! Core types for the three-level (three-mode) system.
//!
//! Frequencies are stored in units of a reference coupling Ω₀ and time in
//! units of 1/Ω₀. Physical quantities are converted at the boundary through
//! [`UnitSystem`].

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Amplitudes of the three levels, or of the three bosonic modes
/// `[a1, b, a2]`; the equation of motion is the same linear ODE in both cases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexState3(pub [C64; 3]);

impl ComplexState3 {
    pub const ZERO: Self = Self([C64::new(0.0, 0.0); 3]);

    /// Basis state |k⟩ for k ∈ {1, 2, 3}.
    pub fn basis(level: usize) -> Self {
        assert!((1..=3).contains(&level), "level must be 1, 2 or 3");
        let mut v = Self::ZERO;
        v.0[level - 1] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_real(v: [f64; 3]) -> Self {
        Self(v.map(|x| C64::new(x, 0.0)))
    }

    pub fn populations(&self) -> [f64; 3] {
        self.0.map(|a| a.norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self, other⟩, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self(self.0.map(|a| alpha * a))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for ComplexState3 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for ComplexState3 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl Mul<f64> for ComplexState3 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self(self.0.map(|a| a * rhs))
    }
}

/// Rotating-frame Hamiltonian
///
/// ```text
///     | δ1  Ω1  0  |
/// H = | Ω1  0   Ω2 |
///     | 0   Ω2  δ2 |
/// ```
///
/// All entries are real, so the matrix is Hermitian for any field values.
/// The couplings may go slightly negative under the dressed-state scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hamiltonian3 {
    pub delta1: f64,
    pub delta2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl Hamiltonian3 {
    pub fn new(delta1: f64, delta2: f64, omega1: f64, omega2: f64) -> Self {
        Self {
            delta1,
            delta2,
            omega1,
            omega2,
        }
    }

    pub fn resonant(omega1: f64, omega2: f64) -> Self {
        Self::new(0.0, 0.0, omega1, omega2)
    }

    pub fn apply(&self, v: &ComplexState3) -> ComplexState3 {
        let [a, b, c] = v.0;
        ComplexState3([
            a * self.delta1 + b * self.omega1,
            a * self.omega1 + c * self.omega2,
            b * self.omega2 + c * self.delta2,
        ])
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.delta1, self.omega1, 0.0],
            [self.omega1, 0.0, self.omega2],
            [0.0, self.omega2, self.delta2],
        ]
    }

    /// ⟨v, Hv⟩.
    pub fn expectation(&self, v: &ComplexState3) -> C64 {
        v.inner(&self.apply(v))
    }
}

/// Free-function form of [`Hamiltonian3::apply`].
pub fn hamiltonian_apply(h: &Hamiltonian3, v: &ComplexState3) -> ComplexState3 {
    h.apply(v)
}

/// Eigenvalues and eigenvectors of the resonant Hamiltonian, ordered as
/// dark (λ = 0), bright+ (λ = +Ω₀), bright− (λ = −Ω₀).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigensystem {
    pub values: [f64; 3],
    pub vectors: [[f64; 3]; 3],
}

impl Eigensystem {
    pub fn dark(&self) -> [f64; 3] {
        self.vectors[0]
    }
}

/// Closed-form eigensystem of the resonant (δ1 = δ2 = 0) Hamiltonian.
///
/// Phase convention: the dark state is `[−Ω2/Ω0, 0, Ω1/Ω0]` and the bright
/// states are `[Ω1/Ω0, ±1, Ω2/Ω0]/√2`, all real.
pub fn eigensystem_resonant(omega1: f64, omega2: f64) -> Result<Eigensystem> {
    let omega0 = omega1.hypot(omega2);
    if omega0 == 0.0 {
        return Err(Error::DegenerateCoupling);
    }
    let (s, c) = (omega1 / omega0, omega2 / omega0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Ok(Eigensystem {
        values: [0.0, omega0, -omega0],
        vectors: [[-c, 0.0, s], [s * r, r, c * r], [s * r, -r, c * r]],
    })
}

/// How a quoted "MHz" value is turned into an angular frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrequencyConvention {
    /// ω = 2π × f, i.e. the quoted value is an ordinary frequency.
    Cyclic,
    /// ω = f × 10⁶ rad/s, i.e. the quoted value is already angular.
    Angular,
}

impl FrequencyConvention {
    pub fn mhz_to_rad_per_s(self, mhz: f64) -> f64 {
        match self {
            FrequencyConvention::Cyclic => TAU * mhz * 1e6,
            FrequencyConvention::Angular => mhz * 1e6,
        }
    }

    pub fn rad_per_s_to_mhz(self, rad_per_s: f64) -> f64 {
        match self {
            FrequencyConvention::Cyclic => rad_per_s / (TAU * 1e6),
            FrequencyConvention::Angular => rad_per_s / 1e6,
        }
    }
}

/// Bridge between internal (Ω₀-scaled) units and SI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnitSystem {
    Dimensionless,
    Physical {
        omega0_mhz: f64,
        convention: FrequencyConvention,
    },
}

impl UnitSystem {
    pub fn physical(omega0_mhz: f64, convention: FrequencyConvention) -> Result<Self> {
        if !(omega0_mhz > 0.0) || !omega0_mhz.is_finite() {
            return Err(Error::NonPositive {
                what: "omega0",
                value: omega0_mhz,
            });
        }
        Ok(UnitSystem::Physical {
            omega0_mhz,
            convention,
        })
    }

    /// Reference coupling Ω₀ in rad/s (1 in dimensionless mode).
    pub fn omega0_rad_per_s(&self) -> f64 {
        match *self {
            UnitSystem::Dimensionless => 1.0,
            UnitSystem::Physical {
                omega0_mhz,
                convention,
            } => convention.mhz_to_rad_per_s(omega0_mhz),
        }
    }

    pub fn frequency_to_internal(&self, rad_per_s: f64) -> f64 {
        rad_per_s / self.omega0_rad_per_s()
    }

    pub fn frequency_from_internal(&self, internal: f64) -> f64 {
        internal * self.omega0_rad_per_s()
    }

    pub fn time_to_internal(&self, seconds: f64) -> f64 {
        seconds * self.omega0_rad_per_s()
    }

    pub fn time_from_internal(&self, internal: f64) -> f64 {
        internal / self.omega0_rad_per_s()
    }
}
