//! Fixed-step RK4 integration of `i dv/dt = H(t) v` across the pulse window.
//!
//! The envelope is sampled once per [`Propagator`] at every half step, so a
//! sweep that shares one step size across its grid pays for the envelope only
//! once. No renormalisation is applied; the final norm drift is reported.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::pulses::PulseSchedule;
use crate::qcore::ComplexState3;
use crate::sweeps::DetuningPair;

/// Steps per min(τ, 1/Λ), where Λ bounds the spectral radius of H.
const STEPS_PER_SCALE: f64 = 100.0;
/// Refinement levels tried by [`StepPolicy::Auto`] before giving up.
const MAX_HALVINGS: u32 = 6;
/// Default trajectory sample count when one is requested.
pub const DEFAULT_TRAJECTORY_SAMPLES: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepPolicy {
    Fixed(f64),
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub step_policy: StepPolicy,
    pub norm_tolerance: f64,
    /// Overrides the schedule's window with `[−kτ, kτ]` when set.
    pub window_multiplier: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step_policy: StepPolicy::Auto,
            norm_tolerance: 1e-8,
            window_multiplier: Some(crate::pulses::DEFAULT_WINDOW_MULTIPLIER),
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(step: f64) -> Self {
        Self {
            step_policy: StepPolicy::Fixed(step),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let StepPolicy::Fixed(h) = self.step_policy {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::NonPositive {
                    what: "step",
                    value: h,
                });
            }
        }
        if !(self.norm_tolerance > 0.0) {
            return Err(Error::NonPositive {
                what: "norm_tolerance",
                value: self.norm_tolerance,
            });
        }
        if let Some(k) = self.window_multiplier {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::NonPositive {
                    what: "window_multiplier",
                    value: k,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub populations: [f64; 3],
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionResult {
    pub final_state: ComplexState3,
    pub populations: [f64; 3],
    pub norm_drift: f64,
    /// Step size actually used (after any refinement).
    pub step: f64,
    pub trajectory: Option<Vec<TrajectorySample>>,
}

impl EvolutionResult {
    pub fn p3(&self) -> f64 {
        self.populations[2]
    }

    /// Writes `t,p1,p2,p3,norm`; errors if no trajectory was recorded.
    pub fn write_trajectory_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let traj = self
            .trajectory
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("no trajectory was recorded".into()))?;
        writeln!(out, "t,p1,p2,p3,norm")?;
        for s in traj {
            let [p1, p2, p3] = s.populations;
            writeln!(out, "{},{},{},{},{}", s.t, p1, p2, p3, s.norm)?;
        }
        Ok(())
    }
}

/// Pre-sampled envelope on a uniform grid, reusable for any detuning whose
/// magnitude does not exceed the one it was built for.
#[derive(Clone, Debug)]
pub struct Propagator {
    cfg: IntegratorConfig,
    t_start: f64,
    span: f64,
    step: f64,
    n_steps: usize,
    /// (Ω₁, Ω₂) at t_start + k·step/2, k = 0..=2·n_steps.
    samples: Vec<(f64, f64)>,
    rebuild: Rebuild,
    halvings: u32,
}

#[derive(Clone, Debug)]
enum Rebuild {
    Schedule(PulseSchedule),
    Fixed,
}

impl Propagator {
    pub fn new(schedule: &PulseSchedule, max_detuning: f64, cfg: &IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        let schedule = match cfg.window_multiplier {
            Some(k) => schedule.with_window_multiplier(k)?,
            None => *schedule,
        };
        let step = match cfg.step_policy {
            StepPolicy::Fixed(h) => h,
            StepPolicy::Auto => {
                default_step(schedule.tau(), schedule.peak_amplitude(), max_detuning)
            }
        };
        let (t0, t1) = schedule.window();
        Ok(Self::build(
            |t| schedule.envelope(t),
            t0,
            t1,
            step,
            *cfg,
            Rebuild::Schedule(schedule),
        ))
    }

    /// Propagator over an arbitrary envelope with an explicit step size.
    /// Automatic refinement is unavailable for custom envelopes.
    pub fn custom<F: Fn(f64) -> (f64, f64)>(
        envelope: F,
        window: (f64, f64),
        step: f64,
        norm_tolerance: f64,
    ) -> Result<Self> {
        let (t0, t1) = window;
        if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidWindow { start: t0, end: t1 });
        }
        let cfg = IntegratorConfig {
            step_policy: StepPolicy::Fixed(step),
            norm_tolerance,
            window_multiplier: None,
        };
        cfg.validate()?;
        Ok(Self::build(envelope, t0, t1, step, cfg, Rebuild::Fixed))
    }

    fn build<F: Fn(f64) -> (f64, f64)>(
        envelope: F,
        t0: f64,
        t1: f64,
        step: f64,
        cfg: IntegratorConfig,
        rebuild: Rebuild,
    ) -> Self {
        let span = t1 - t0;
        let n_steps = ((span / step).ceil() as usize).max(1);
        let step = span / n_steps as f64;
        let half = step / 2.0;
        let samples = (0..=2 * n_steps)
            .map(|k| envelope(t0 + half * k as f64))
            .collect();
        Self {
            cfg,
            t_start: t0,
            span,
            step,
            n_steps,
            samples,
            rebuild,
            halvings: 0,
        }
    }

    fn refined(&self) -> Option<Self> {
        match (&self.rebuild, self.cfg.step_policy) {
            (Rebuild::Schedule(s), StepPolicy::Auto) if self.halvings < MAX_HALVINGS => {
                let mut next = Self::build(
                    |t| s.envelope(t),
                    self.t_start,
                    self.t_start + self.span,
                    self.step / 2.0,
                    self.cfg,
                    self.rebuild.clone(),
                );
                next.halvings = self.halvings + 1;
                Some(next)
            }
            _ => None,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t_start, self.t_start + self.span)
    }

    /// Integrates from `init`, recording `trajectory_samples` evenly spaced
    /// points when requested.
    pub fn evolve(
        &self,
        detuning: DetuningPair,
        init: &ComplexState3,
        trajectory_samples: Option<usize>,
    ) -> Result<EvolutionResult> {
        let init_norm = init.norm();
        if (init_norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "initial state must be unit-norm, got norm {init_norm}"
            )));
        }
        if let Some(n) = trajectory_samples {
            if n < 2 {
                return Err(Error::TooFewSamples { needed: 2, got: n });
            }
        }
        let mut current = std::borrow::Cow::Borrowed(self);
        loop {
            let result = current.integrate(detuning, init, trajectory_samples);
            if result.norm_drift <= self.cfg.norm_tolerance {
                return Ok(result);
            }
            match current.refined() {
                Some(next) => current = std::borrow::Cow::Owned(next),
                None => {
                    return Err(Error::StepSize {
                        norm_drift: result.norm_drift,
                        tolerance: self.cfg.norm_tolerance,
                        step: current.step,
                    })
                }
            }
        }
    }

    fn integrate(
        &self,
        detuning: DetuningPair,
        init: &ComplexState3,
        trajectory_samples: Option<usize>,
    ) -> EvolutionResult {
        let (d1, d2) = (detuning.delta1, detuning.delta2);
        let h = self.step;
        let minus_i = C64::new(0.0, -1.0);
        // dv/dt = −i H v
        let rhs = |(o1, o2): (f64, f64), v: &[C64; 3]| -> [C64; 3] {
            [
                minus_i * (v[0] * d1 + v[1] * o1),
                minus_i * (v[0] * o1 + v[2] * o2),
                minus_i * (v[1] * o2 + v[2] * d2),
            ]
        };
        let axpy = |v: &[C64; 3], a: f64, k: &[C64; 3]| -> [C64; 3] {
            [v[0] + k[0] * a, v[1] + k[1] * a, v[2] + k[2] * a]
        };

        let marks: Vec<usize> = match trajectory_samples {
            Some(n) => (0..n)
                .map(|i| ((i as f64) * self.n_steps as f64 / (n - 1) as f64).round() as usize)
                .collect(),
            None => Vec::new(),
        };
        let mut trajectory = trajectory_samples.map(Vec::with_capacity);
        let mut next_mark = 0;
        let mut record = |k: usize, v: &[C64; 3], traj: &mut Option<Vec<TrajectorySample>>| {
            if let Some(traj) = traj.as_mut() {
                while next_mark < marks.len() && marks[next_mark] == k {
                    let s = ComplexState3(*v);
                    traj.push(TrajectorySample {
                        t: self.t_start + h * k as f64,
                        populations: s.populations(),
                        norm: s.norm(),
                    });
                    next_mark += 1;
                }
            }
        };

        let mut v = init.0;
        record(0, &v, &mut trajectory);
        for k in 0..self.n_steps {
            let e0 = self.samples[2 * k];
            let em = self.samples[2 * k + 1];
            let e1 = self.samples[2 * k + 2];
            let k1 = rhs(e0, &v);
            let k2 = rhs(em, &axpy(&v, h / 2.0, &k1));
            let k3 = rhs(em, &axpy(&v, h / 2.0, &k2));
            let k4 = rhs(e1, &axpy(&v, h, &k3));
            for i in 0..3 {
                v[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
            record(k + 1, &v, &mut trajectory);
        }

        let final_state = ComplexState3(v);
        EvolutionResult {
            populations: final_state.populations(),
            norm_drift: (final_state.norm() - 1.0).abs(),
            final_state,
            step: h,
            trajectory,
        }
    }
}

/// h = min(τ, 1/Λ)/100 with Λ = peak coupling + largest |detuning|.
pub fn default_step(tau: f64, peak_amplitude: f64, max_detuning: f64) -> f64 {
    let lambda = peak_amplitude + max_detuning.abs();
    let scale = if lambda > 0.0 { tau.min(1.0 / lambda) } else { tau };
    scale / STEPS_PER_SCALE
}

pub fn propagate(
    schedule: &PulseSchedule,
    detuning: DetuningPair,
    init: &ComplexState3,
    cfg: &IntegratorConfig,
) -> Result<EvolutionResult> {
    Propagator::new(schedule, detuning.max_abs(), cfg)?.evolve(detuning, init, None)
}

/// Like [`propagate`], also recording a trajectory with `samples` points.
pub fn propagate_with_trajectory(
    schedule: &PulseSchedule,
    detuning: DetuningPair,
    init: &ComplexState3,
    cfg: &IntegratorConfig,
    samples: usize,
) -> Result<EvolutionResult> {
    Propagator::new(schedule, detuning.max_abs(), cfg)?.evolve(detuning, init, Some(samples))
}

/// P₃ after propagating from |1⟩.
pub fn transfer_population(
    schedule: &PulseSchedule,
    detuning: DetuningPair,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    Ok(propagate(schedule, detuning, &ComplexState3::basis(1), cfg)?.p3())
}
