//! Pump/Stokes envelopes: the logistic ("Vitanov") mixing-angle pair and its
//! dressed-states-driving (DSD) correction.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ratio Ω₀·τ_m of the fastest faithful DSD transfer.
pub const TAU_MIN_FACTOR: f64 = 2.63;

/// Default half-width of the integration window in units of τ.
pub const DEFAULT_WINDOW_MULTIPLIER: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Plain,
    Dsd,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Plain => "plain",
            Scheme::Dsd => "dsd",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Scheme::Plain),
            "dsd" => Ok(Scheme::Dsd),
            other => Err(Error::InvalidInput(format!(
                "unknown scheme {other:?} (expected \"plain\" or \"dsd\")"
            ))),
        }
    }
}

/// Logistic mixing angle θ(t) = (π/2) / (1 + e^(−t/τ)), in (0, π/2).
pub fn theta(t: f64, tau: f64) -> f64 {
    let x = t / tau;
    let logistic = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    FRAC_PI_2 * logistic
}

/// Returns (θ̇, θ̈).
pub fn theta_derivatives(t: f64, tau: f64) -> (f64, f64) {
    let u = t / (2.0 * tau);
    let sech2 = {
        let s = 1.0 / u.cosh();
        s * s
    };
    let theta_dot = PI / (8.0 * tau) * sech2;
    let theta_ddot = -PI / (8.0 * tau * tau) * sech2 * u.tanh();
    (theta_dot, theta_ddot)
}

/// τ_m = 1 / (2.63 Ω₀).
pub fn tau_min(omega0: f64) -> Result<f64> {
    if !(omega0 > 0.0) || !omega0.is_finite() {
        return Err(Error::NonPositive {
            what: "omega0",
            value: omega0,
        });
    }
    Ok(1.0 / (TAU_MIN_FACTOR * omega0))
}

/// A pulse pair over a finite window `[t_start, t_end]` with `t_start < 0 < t_end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSchedule {
    scheme: Scheme,
    omega0: f64,
    tau: f64,
    window: (f64, f64),
}

impl PulseSchedule {
    /// Schedule with the default window `[−10τ, 10τ]`.
    ///
    /// `omega0 = 0` is accepted and yields identically vanishing couplings.
    pub fn new(scheme: Scheme, omega0: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::NonPositive {
                what: "tau",
                value: tau,
            });
        }
        if !(omega0 >= 0.0) || !omega0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "omega0 must be finite and non-negative, got {omega0}"
            )));
        }
        let half = DEFAULT_WINDOW_MULTIPLIER * tau;
        Ok(Self {
            scheme,
            omega0,
            tau,
            window: (-half, half),
        })
    }

    /// Unit-amplitude schedule with τ given as a multiple of τ_m.
    pub fn in_tau_min_units(scheme: Scheme, tau_over_taum: f64) -> Result<Self> {
        Self::new(scheme, 1.0, tau_over_taum * tau_min(1.0)?)
    }

    pub fn with_window(mut self, t_start: f64, t_end: f64) -> Result<Self> {
        if !(t_start < 0.0 && 0.0 < t_end) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidWindow {
                start: t_start,
                end: t_end,
            });
        }
        self.window = (t_start, t_end);
        Ok(self)
    }

    /// Symmetric window `[−kτ, kτ]`.
    pub fn with_window_multiplier(self, k: f64) -> Result<Self> {
        self.with_window(-k * self.tau, k * self.tau)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Mixing angle and amplitude actually applied at time t.
    pub fn mixing(&self, t: f64) -> (f64, f64) {
        let th = theta(t, self.tau);
        match self.scheme {
            Scheme::Plain => (th, self.omega0),
            Scheme::Dsd => {
                if self.omega0 == 0.0 {
                    return (th, 0.0);
                }
                let gx = self.dsd_gx(t);
                (
                    th - (gx / self.omega0).atan(),
                    self.omega0.hypot(gx),
                )
            }
        }
    }

    /// (Ω₁(t), Ω₂(t)) for this schedule's scheme.
    pub fn envelope(&self, t: f64) -> (f64, f64) {
        let (th, amp) = self.mixing(t);
        let (s, c) = th.sin_cos();
        (amp * s, amp * c)
    }

    /// Dressing angle μ(t) = −arctan(θ̇ / Ω₀).
    pub fn dsd_mu(&self, t: f64) -> f64 {
        let (theta_dot, _) = theta_derivatives(t, self.tau);
        -(theta_dot / self.omega0).atan()
    }

    /// gₓ(t) = μ̇(t) = −θ̈ Ω₀ / (Ω₀² + θ̇²).
    pub fn dsd_gx(&self, t: f64) -> f64 {
        let (theta_dot, theta_ddot) = theta_derivatives(t, self.tau);
        -theta_ddot * self.omega0 / (self.omega0 * self.omega0 + theta_dot * theta_dot)
    }

    /// Upper bound on √(Ω₁² + Ω₂²) over all t.
    pub fn peak_amplitude(&self) -> f64 {
        match self.scheme {
            Scheme::Plain => self.omega0,
            Scheme::Dsd if self.omega0 == 0.0 => 0.0,
            Scheme::Dsd => {
                // max over x of sech²(x)·tanh(x) is 2/(3√3)
                let ddot_max = PI / (8.0 * self.tau * self.tau) * 2.0 / (3.0 * 3f64.sqrt());
                self.omega0.hypot(ddot_max / self.omega0)
            }
        }
    }

    /// Writes `t,omega1,omega2` at `n` evenly spaced times across the window.
    pub fn write_waveform_csv<W: Write>(&self, mut out: W, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        writeln!(out, "# scheme = {}", self.scheme)?;
        writeln!(out, "# omega0 = {}", self.omega0)?;
        writeln!(out, "# tau = {}", self.tau)?;
        writeln!(out, "t,omega1,omega2")?;
        let (t0, t1) = self.window;
        for k in 0..n {
            let t = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
            let (o1, o2) = self.envelope(t);
            writeln!(out, "{t},{o1},{o2}")?;
        }
        Ok(())
    }
}

/// Ω₁, Ω₂ of the plain scheme, regardless of the schedule's own scheme.
pub fn plain_envelope(t: f64, s: &PulseSchedule) -> (f64, f64) {
    let (sn, cs) = theta(t, s.tau()).sin_cos();
    (s.omega0() * sn, s.omega0() * cs)
}

/// Ω̃₁, Ω̃₂ of the dressed-states scheme, regardless of the schedule's own scheme.
pub fn dsd_envelope(t: f64, s: &PulseSchedule) -> (f64, f64) {
    PulseSchedule { scheme: Scheme::Dsd, ..*s }.envelope(t)
}
