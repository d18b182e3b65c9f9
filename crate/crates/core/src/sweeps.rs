//! Detuning sweeps: 2-D population maps over (δ1, δ2), line cuts along the
//! degenerate (δ1 = δ2) and non-degenerate (δ1 = −δ2) diagonals, and slope
//! extraction on the cuts.
//!
//! All detunings are in units of Ω₀. Cells are independent propagations that
//! may run on any number of threads; results land in pre-assigned slots, so
//! the output does not depend on the thread count.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagator::{IntegratorConfig, Propagator, StepPolicy};
use crate::pulses::{PulseSchedule, Scheme};
use crate::qcore::ComplexState3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Color {
    Degenerate,
    Nondegenerate,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetuningPair {
    pub delta1: f64,
    pub delta2: f64,
}

impl DetuningPair {
    pub fn new(delta1: f64, delta2: f64) -> Self {
        Self { delta1, delta2 }
    }

    pub fn degenerate(delta: f64) -> Self {
        Self::new(delta, delta)
    }

    pub fn nondegenerate(delta: f64) -> Self {
        Self::new(delta, -delta)
    }

    /// Exact comparison; pairs built through [`CutAxis::pair`] classify exactly.
    /// The zero pair counts as degenerate.
    pub fn color(&self) -> Color {
        if self.delta1 == self.delta2 {
            Color::Degenerate
        } else if self.delta1 == -self.delta2 {
            Color::Nondegenerate
        } else {
            Color::General
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.delta1.abs().max(self.delta2.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CutAxis {
    /// δ = δ1 = δ2
    Degenerate,
    /// δ = δ1 = −δ2
    Nondegenerate,
}

impl CutAxis {
    pub fn pair(self, delta: f64) -> DetuningPair {
        match self {
            CutAxis::Degenerate => DetuningPair::degenerate(delta),
            CutAxis::Nondegenerate => DetuningPair::nondegenerate(delta),
        }
    }
}

impl fmt::Display for CutAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutAxis::Degenerate => "degenerate",
            CutAxis::Nondegenerate => "nondegenerate",
        })
    }
}

impl FromStr for CutAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degenerate" => Ok(CutAxis::Degenerate),
            "nondegenerate" => Ok(CutAxis::Nondegenerate),
            other => Err(Error::InvalidInput(format!(
                "unknown axis {other:?} (expected \"degenerate\" or \"nondegenerate\")"
            ))),
        }
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl DeltaRange {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let r = Self { lo, hi, n };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: self.n,
            });
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "range requires lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// Grid values. When `lo = −hi` the grid is exactly symmetric about zero.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if self.lo == -self.hi {
                    let j = 2 * i as i64 - (self.n - 1) as i64;
                    self.hi * j as f64 / last
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / last
                }
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }
}

/// Runs `f` over `0..n` on a pool of `threads` workers (0 = all cores),
/// preserving index order in the output.
pub(crate) fn par_map_indexed<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationMap {
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    /// Row-major: index `i * delta2.len() + j` holds (P1, P2, P3) at (delta1[i], delta2[j]).
    pub cells: Vec<[f64; 3]>,
    pub scheme: Scheme,
    pub tau_over_taum: f64,
    pub integrator: IntegratorConfig,
}

impl PopulationMap {
    pub fn populations(&self, i: usize, j: usize) -> [f64; 3] {
        self.cells[i * self.delta2.len() + j]
    }

    pub fn p3(&self, i: usize, j: usize) -> f64 {
        self.populations(i, j)[2]
    }

    /// P3 along δ1 = δ2 (requires identical axes).
    pub fn diagonal(&self) -> Vec<(f64, f64)> {
        self.assert_square();
        (0..self.delta1.len())
            .map(|i| (self.delta1[i], self.p3(i, i)))
            .collect()
    }

    /// P3 along δ1 = −δ2 (requires identical axes symmetric about zero).
    pub fn antidiagonal(&self) -> Vec<(f64, f64)> {
        self.assert_square();
        let n = self.delta1.len();
        (0..n)
            .map(|i| (self.delta1[i], self.p3(i, n - 1 - i)))
            .collect()
    }

    fn assert_square(&self) {
        assert_eq!(self.delta1, self.delta2, "diagonals need identical axes");
    }

    /// Length (in Ω₀) of the part of a diagonal with P3 above `threshold`,
    /// counted as cells × grid spacing.
    pub fn bright_extent(samples: &[(f64, f64)], threshold: f64) -> f64 {
        if samples.len() < 2 {
            return 0.0;
        }
        let spacing = (samples[samples.len() - 1].0 - samples[0].0) / (samples.len() - 1) as f64;
        samples.iter().filter(|(_, p)| *p > threshold).count() as f64 * spacing
    }

    pub fn max_population_sum_error(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| (c.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write_metadata(&mut out, self.scheme, self.tau_over_taum, &self.integrator)?;
        writeln!(out, "delta1,delta2,p1,p2,p3")?;
        for (i, d1) in self.delta1.iter().enumerate() {
            for (j, d2) in self.delta2.iter().enumerate() {
                let [p1, p2, p3] = self.populations(i, j);
                writeln!(out, "{d1},{d2},{p1},{p2},{p3}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineCut {
    pub axis: CutAxis,
    pub tau_over_taum: f64,
    /// (δ, P3), δ strictly increasing.
    pub samples: Vec<(f64, f64)>,
}

impl LineCut {
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        scheme: Scheme,
        integrator: &IntegratorConfig,
    ) -> Result<()> {
        write_metadata(&mut out, scheme, self.tau_over_taum, integrator)?;
        writeln!(out, "# axis = {}", self.axis)?;
        writeln!(out, "delta,p3")?;
        for (d, p) in &self.samples {
            writeln!(out, "{d},{p}")?;
        }
        Ok(())
    }
}

fn write_metadata<W: Write>(
    out: &mut W,
    scheme: Scheme,
    tau_over_taum: f64,
    cfg: &IntegratorConfig,
) -> Result<()> {
    writeln!(out, "# scheme = {scheme}")?;
    writeln!(out, "# tau_over_taum = {tau_over_taum}")?;
    writeln!(out, "# omega0 = 1")?;
    match cfg.step_policy {
        StepPolicy::Auto => writeln!(out, "# step = auto")?,
        StepPolicy::Fixed(h) => writeln!(out, "# step = {h}")?,
    }
    writeln!(out, "# norm_tolerance = {}", cfg.norm_tolerance)?;
    if let Some(k) = cfg.window_multiplier {
        writeln!(out, "# window_multiplier = {k}")?;
    }
    Ok(())
}

fn sweep_propagator(
    scheme: Scheme,
    tau_over_taum: f64,
    max_detuning: f64,
    cfg: &IntegratorConfig,
) -> Result<Propagator> {
    if !(tau_over_taum > 0.0) {
        return Err(Error::NonPositive {
            what: "tau_over_taum",
            value: tau_over_taum,
        });
    }
    let schedule = PulseSchedule::in_tau_min_units(scheme, tau_over_taum)?;
    Propagator::new(&schedule, max_detuning, cfg)
}

fn run_cell(prop: &Propagator, pair: DetuningPair) -> Result<[f64; 3]> {
    prop.evolve(pair, &ComplexState3::basis(1), None)
        .map(|r| r.populations)
        .map_err(|e| Error::AtDetuning {
            delta1: pair.delta1,
            delta2: pair.delta2,
            source: Box::new(e),
        })
}

/// Population map over the Cartesian grid `range × range`.
pub fn sweep_2d(
    scheme: Scheme,
    tau_over_taum: f64,
    range: DeltaRange,
    cfg: &IntegratorConfig,
    threads: usize,
) -> Result<PopulationMap> {
    range.validate()?;
    let prop = sweep_propagator(scheme, tau_over_taum, range.max_abs(), cfg)?;
    let axis = range.values();
    let n = axis.len();
    let cells = par_map_indexed(n * n, threads, |k| {
        run_cell(&prop, DetuningPair::new(axis[k / n], axis[k % n]))
    })?;
    Ok(PopulationMap {
        delta1: axis.clone(),
        delta2: axis,
        cells,
        scheme,
        tau_over_taum,
        integrator: *cfg,
    })
}

/// P3 sampled along one color diagonal.
pub fn line_cut(
    scheme: Scheme,
    tau_over_taum: f64,
    axis: CutAxis,
    range: DeltaRange,
    cfg: &IntegratorConfig,
    threads: usize,
) -> Result<LineCut> {
    range.validate()?;
    let prop = sweep_propagator(scheme, tau_over_taum, range.max_abs(), cfg)?;
    let deltas = range.values();
    let p3 = par_map_indexed(deltas.len(), threads, |k| {
        run_cell(&prop, axis.pair(deltas[k])).map(|p| p[2])
    })?;
    Ok(LineCut {
        axis,
        tau_over_taum,
        samples: deltas.into_iter().zip(p3).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slope {
    pub delta: f64,
    /// Signed dP3/dδ at `delta`.
    pub slope: f64,
}

/// Largest |dP3/dδ| over the interior samples, from second-order central
/// differences. Ties resolve to the first (smallest δ) location.
pub fn max_slope(cut: &LineCut) -> Result<Slope> {
    max_slope_of(&cut.samples)
}

pub fn max_slope_of(samples: &[(f64, f64)]) -> Result<Slope> {
    central_slopes(samples)?
        .into_iter()
        .fold(None, |best: Option<Slope>, s| match best {
            Some(b) if b.slope.abs() >= s.slope.abs() => Some(b),
            _ => Some(s),
        })
        .ok_or(Error::TooFewSamples {
            needed: 3,
            got: samples.len(),
        })
}

/// Central-difference slope at every interior sample.
pub fn central_slopes(samples: &[(f64, f64)]) -> Result<Vec<Slope>> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    Ok(samples
        .windows(3)
        .map(|w| Slope {
            delta: w[1].0,
            slope: (w[2].1 - w[0].1) / (w[2].0 - w[0].0),
        })
        .collect())
}
