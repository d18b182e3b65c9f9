//! Sensor models built on the detuning response of the transfer.
//!
//! A sensor maps a physical quantity X onto a shift along one color axis:
//!
//! * mass: a deposited mass δm lowers the mechanical frequency by R·δm with
//!   R = ω_m / 2m, detuning both beam-splitter couplings by −R·δm
//!   (degenerate axis);
//! * field: a static field B splits m_s = ±1 by γₑB, giving δ1 = −γₑB and
//!   δ2 = +γₑB (non-degenerate axis).
//!
//! The sensor runs at an operating offset along that axis, chosen by the
//! two-round calibration in [`calibrate_operating_point`].

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::propagator::{IntegratorConfig, Propagator};
use crate::pulses::{PulseSchedule, Scheme};
use crate::qcore::{ComplexState3, FrequencyConvention, UnitSystem};
use crate::sweeps::{self, CutAxis, DeltaRange, DetuningPair, Slope};

/// Electronic gyromagnetic ratio of the NV centre, MHz per Gauss (cyclic).
pub const NV_GAMMA_E_MHZ_PER_GAUSS: f64 = 2.8025;

/// Default minimum |dP3/dδ| (per Ω₀ of detuning) accepted at an operating point.
pub const DEFAULT_RESOLUTION_THRESHOLD: f64 = 0.25;

/// Detuning step (Ω₀) of the round-one slope probe.
pub const PROBE_STEP: f64 = 0.05;

pub trait SensorModel: Sync {
    fn axis(&self) -> CutAxis;

    fn scheme(&self) -> Scheme {
        Scheme::Dsd
    }

    fn tau_over_taum(&self) -> f64;

    /// Column name of the quantity in CSV output.
    fn quantity_label(&self) -> &'static str;

    /// Shift along [`SensorModel::axis`], in Ω₀, produced by quantity `x`.
    fn axis_shift(&self, x: f64) -> Result<f64>;

    /// Inverse of [`SensorModel::axis_shift`].
    fn quantity_from_shift(&self, delta: f64) -> f64;

    fn schedule(&self) -> Result<PulseSchedule> {
        PulseSchedule::in_tau_min_units(self.scheme(), self.tau_over_taum())
    }

    /// Detuning pair seen by the system at quantity `x` and operating offset.
    fn detuning(&self, x: f64, offset: f64) -> Result<DetuningPair> {
        Ok(self.axis().pair(offset + self.axis_shift(x)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassSensorModel {
    /// Mechanical angular frequency, rad/s.
    pub omega_m: f64,
    /// Resonator mass, g.
    pub m_resonator: f64,
    pub units: UnitSystem,
    pub tau_over_taum: f64,
    responsivity: f64,
}

impl MassSensorModel {
    pub fn new(omega_m: f64, m_resonator: f64, units: UnitSystem, tau_over_taum: f64) -> Result<Self> {
        if !(m_resonator > 0.0) {
            return Err(Error::NonPositive {
                what: "m_resonator",
                value: m_resonator,
            });
        }
        if !(omega_m > 0.0) {
            return Err(Error::NonPositive {
                what: "omega_m",
                value: omega_m,
            });
        }
        if !(tau_over_taum > 0.0) {
            return Err(Error::NonPositive {
                what: "tau_over_taum",
                value: tau_over_taum,
            });
        }
        Ok(Self {
            omega_m,
            m_resonator,
            units,
            tau_over_taum,
            responsivity: omega_m / (2.0 * m_resonator),
        })
    }

    /// ω_m = 2π × 6 GHz, m = 1e-15 g, G₀ = 1 MHz (as 10⁶ rad/s), τ = τ_m.
    pub fn paper_defaults() -> Self {
        Self::new(
            TAU * 6.0e9,
            1.0e-15,
            UnitSystem::Physical {
                omega0_mhz: 1.0,
                convention: FrequencyConvention::Angular,
            },
            1.0,
        )
        .expect("valid preset")
    }

    /// R = ω_m / 2m in rad s⁻¹ g⁻¹.
    pub fn responsivity(&self) -> f64 {
        self.responsivity
    }

    /// δω_m = R δm in rad/s.
    pub fn frequency_shift(&self, delta_m: f64) -> f64 {
        self.responsivity * delta_m
    }
}

impl SensorModel for MassSensorModel {
    fn axis(&self) -> CutAxis {
        CutAxis::Degenerate
    }

    fn tau_over_taum(&self) -> f64 {
        self.tau_over_taum
    }

    fn quantity_label(&self) -> &'static str {
        "delta_m_grams"
    }

    fn axis_shift(&self, delta_m: f64) -> Result<f64> {
        if delta_m < 0.0 {
            return Err(Error::NegativeMass(delta_m));
        }
        Ok(-self.units.frequency_to_internal(self.frequency_shift(delta_m)))
    }

    fn quantity_from_shift(&self, delta: f64) -> f64 {
        -self.units.frequency_from_internal(delta) / self.responsivity
    }
}

/// Degenerate pair δ1 = δ2 = −R δm, in Ω₀.
pub fn mass_to_detuning(model: &MassSensorModel, delta_m: f64) -> Result<DetuningPair> {
    model.detuning(delta_m, 0.0)
}

/// Deposited mass (g) producing degenerate detuning `delta` (Ω₀).
pub fn detuning_to_mass(model: &MassSensorModel, delta: f64) -> f64 {
    model.quantity_from_shift(delta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSensorModel {
    pub gamma_e_mhz_per_gauss: f64,
    pub units: UnitSystem,
    pub tau_over_taum: f64,
}

impl FieldSensorModel {
    pub fn new(units: UnitSystem, tau_over_taum: f64) -> Result<Self> {
        if !(tau_over_taum > 0.0) {
            return Err(Error::NonPositive {
                what: "tau_over_taum",
                value: tau_over_taum,
            });
        }
        Ok(Self {
            gamma_e_mhz_per_gauss: NV_GAMMA_E_MHZ_PER_GAUSS,
            units,
            tau_over_taum,
        })
    }

    /// Ω₀ = 1 MHz (as 10⁶ rad/s), τ = 10 τ_m.
    pub fn paper_defaults() -> Self {
        Self::new(
            UnitSystem::Physical {
                omega0_mhz: 1.0,
                convention: FrequencyConvention::Angular,
            },
            10.0,
        )
        .expect("valid preset")
    }

    /// γₑ B in MHz (ordinary frequency).
    pub fn zeeman_shift_mhz(&self, b_gauss: f64) -> f64 {
        self.gamma_e_mhz_per_gauss * b_gauss
    }

    /// γₑ B in Ω₀.
    fn zeeman_internal(&self, b_gauss: f64) -> f64 {
        let rad_per_s = FrequencyConvention::Cyclic.mhz_to_rad_per_s(self.zeeman_shift_mhz(b_gauss));
        self.units.frequency_to_internal(rad_per_s)
    }
}

impl SensorModel for FieldSensorModel {
    fn axis(&self) -> CutAxis {
        CutAxis::Nondegenerate
    }

    fn tau_over_taum(&self) -> f64 {
        self.tau_over_taum
    }

    fn quantity_label(&self) -> &'static str {
        "b_gauss"
    }

    /// Axis coordinate is δ1 = −γₑB.
    fn axis_shift(&self, b_gauss: f64) -> Result<f64> {
        Ok(-self.zeeman_internal(b_gauss))
    }

    fn quantity_from_shift(&self, delta: f64) -> f64 {
        -delta / self.zeeman_internal(1.0)
    }
}

/// Non-degenerate pair δ1 = −γₑB, δ2 = +γₑB, in Ω₀.
pub fn field_to_detuning(model: &FieldSensorModel, b_gauss: f64) -> DetuningPair {
    let d = model.zeeman_internal(b_gauss);
    DetuningPair::new(-d, d)
}

/// Sensing curve P3 = f(X).
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseCurve {
    pub quantity_label: &'static str,
    pub offset: f64,
    /// (X, P3), X strictly increasing.
    pub samples: Vec<(f64, f64)>,
}

impl ResponseCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# operating_offset = {}", self.offset)?;
        writeln!(out, "{},p3", self.quantity_label)?;
        for (x, p) in &self.samples {
            writeln!(out, "{x},{p}")?;
        }
        Ok(())
    }

    fn nearest(&self, x0: f64) -> usize {
        self.samples
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 .0 - x0).abs().total_cmp(&(b.1 .0 - x0).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Index range `[lo, hi]` around the sample nearest `x0` on which P3 is
    /// strictly monotone.
    pub fn monotone_window(&self, x0: f64) -> Option<(usize, usize)> {
        let n = self.samples.len();
        if n < 2 {
            return None;
        }
        let p = |i: usize| self.samples[i].1;
        let i0 = self.nearest(x0);
        let seg = if i0 + 1 < n { i0 } else { i0 - 1 };
        let dir = (p(seg + 1) - p(seg)).signum();
        if p(seg + 1) == p(seg) {
            return None;
        }
        let same = |i: usize| p(i + 1) != p(i) && (p(i + 1) - p(i)).signum() == dir;
        let mut lo = seg;
        while lo > 0 && same(lo - 1) {
            lo -= 1;
        }
        let mut hi = seg + 1;
        while hi + 1 < n && same(hi) {
            hi += 1;
        }
        Some((lo, hi))
    }

    /// P3 at `x` by linear interpolation.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        self.samples.windows(2).find_map(|w| {
            let ((x0, p0), (x1, p1)) = (w[0], w[1]);
            (x0 <= x && x <= x1).then(|| p0 + (p1 - p0) * (x - x0) / (x1 - x0))
        })
    }

    /// X = f⁻¹(P3) inside the monotone window around `x0`, by linear
    /// (hence monotone) interpolation.
    pub fn invert(&self, p3: f64, x0: f64) -> Option<f64> {
        let (lo, hi) = self.monotone_window(x0)?;
        self.samples[lo..=hi].windows(2).find_map(|w| {
            let ((x0, p0), (x1, p1)) = (w[0], w[1]);
            let (a, b) = if p0 <= p1 { (p0, p1) } else { (p1, p0) };
            (a <= p3 && p3 <= b).then(|| x0 + (x1 - x0) * (p3 - p0) / (p1 - p0))
        })
    }

    /// Smallest |ΔX| from `x0` that changes P3 by `dp` in either direction.
    pub fn quantity_step(&self, x0: f64, dp: f64) -> Option<f64> {
        let p0 = self.value_at(x0)?;
        [p0 + dp, p0 - dp]
            .into_iter()
            .filter_map(|p| self.invert(p, x0))
            .map(|x| (x - x0).abs())
            .min_by(f64::total_cmp)
    }

    /// |X(P3 = lo) − X(P3 = hi)| within the monotone window around `x0`.
    pub fn steep_span(&self, x0: f64, lo: f64, hi: f64) -> Option<f64> {
        Some((self.invert(hi, x0)? - self.invert(lo, x0)?).abs())
    }
}

fn sensor_propagator<M: SensorModel + ?Sized>(
    model: &M,
    max_detuning: f64,
    cfg: &IntegratorConfig,
) -> Result<Propagator> {
    Propagator::new(&model.schedule()?, max_detuning, cfg)
}

fn p3_at(prop: &Propagator, pair: DetuningPair) -> Result<f64> {
    Ok(prop.evolve(pair, &ComplexState3::basis(1), None)?.p3())
}

/// P3 over `n` evenly spaced X in `[x_lo, x_hi]`, at operating offset `offset`.
pub fn sensor_response_curve<M: SensorModel + ?Sized>(
    model: &M,
    offset: f64,
    x_range: (f64, f64),
    n: usize,
    cfg: &IntegratorConfig,
    threads: usize,
) -> Result<ResponseCurve> {
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let (x_lo, x_hi) = x_range;
    if !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
        return Err(Error::InvalidInput(format!(
            "quantity range requires lo < hi, got [{x_lo}, {x_hi}]"
        )));
    }
    let max_det = model
        .detuning(x_lo, offset)?
        .max_abs()
        .max(model.detuning(x_hi, offset)?.max_abs());
    let prop = sensor_propagator(model, max_det, cfg)?;
    let xs: Vec<f64> = (0..n)
        .map(|i| x_lo + (x_hi - x_lo) * i as f64 / (n - 1) as f64)
        .collect();
    let p3 = sweeps::par_map_indexed(n, threads, |k| {
        let x = xs[k];
        model
            .detuning(x, offset)
            .and_then(|pair| p3_at(&prop, pair))
            .map_err(|e| Error::AtQuantity {
                x,
                source: Box::new(e),
            })
    })?;
    Ok(ResponseCurve {
        quantity_label: model.quantity_label(),
        offset,
        samples: xs.into_iter().zip(p3).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    /// Offset along the model's color axis, Ω₀.
    pub detuning_offset: f64,
    /// dP3/dδ at the offset.
    pub slope_at_point: f64,
    pub round: u32,
}

/// Detuning scan used in round two.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationScan {
    pub range: DeltaRange,
    pub threads: usize,
}

impl Default for CalibrationScan {
    fn default() -> Self {
        Self {
            range: DeltaRange {
                lo: -5.0,
                hi: 5.0,
                n: 201,
            },
            threads: 0,
        }
    }
}

/// Local dP3/dδ at `offset` from a 3-point probe with step [`PROBE_STEP`].
pub fn probe_slope<M: SensorModel + ?Sized>(
    model: &M,
    offset: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let axis = model.axis();
    let prop = sensor_propagator(model, offset.abs() + PROBE_STEP, cfg)?;
    let lo = p3_at(&prop, axis.pair(offset - PROBE_STEP))?;
    let hi = p3_at(&prop, axis.pair(offset + PROBE_STEP))?;
    Ok((hi - lo) / (2.0 * PROBE_STEP))
}

/// Two-round calibration: keep the current offset if its local slope meets
/// `threshold`, otherwise move to the steepest point of a detuning scan along
/// the model's color axis.
pub fn calibrate_operating_point<M: SensorModel + ?Sized>(
    model: &M,
    current_offset: f64,
    measured_p3: f64,
    threshold: f64,
    cfg: &IntegratorConfig,
    scan: &CalibrationScan,
) -> Result<OperatingPoint> {
    if !(0.0..=1.0).contains(&measured_p3) {
        return Err(Error::InvalidInput(format!(
            "measured P3 must lie in [0, 1], got {measured_p3}"
        )));
    }
    if !(threshold > 0.0) {
        return Err(Error::NonPositive {
            what: "threshold",
            value: threshold,
        });
    }
    let local = probe_slope(model, current_offset, cfg)?;
    if local.abs() >= threshold {
        return Ok(OperatingPoint {
            detuning_offset: current_offset,
            slope_at_point: local,
            round: 1,
        });
    }
    let cut = sweeps::line_cut(
        model.scheme(),
        model.tau_over_taum(),
        model.axis(),
        scan.range,
        cfg,
        scan.threads,
    )?;
    let Slope { delta, slope } = sweeps::max_slope(&cut)?;
    if slope.abs() < threshold {
        return Err(Error::ThresholdUnachievable {
            threshold,
            max_slope: slope.abs(),
        });
    }
    Ok(OperatingPoint {
        detuning_offset: delta,
        slope_at_point: slope,
        round: 2,
    })
}

/// Text block summarising a calibration.
pub struct CalibrationReport<'a> {
    pub point: &'a OperatingPoint,
    pub threshold: f64,
    pub measured_p3: f64,
    pub axis: CutAxis,
}

impl fmt::Display for CalibrationReport<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "round = {}", self.point.round)?;
        writeln!(f, "axis = {}", self.axis)?;
        writeln!(f, "offset = {}", self.point.detuning_offset)?;
        writeln!(f, "slope = {}", self.point.slope_at_point)?;
        writeln!(f, "threshold = {}", self.threshold)?;
        write!(f, "measured_p3 = {}", self.measured_p3)
    }
}
