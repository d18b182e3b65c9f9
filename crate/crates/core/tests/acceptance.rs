//! Exit criteria. Each test prints one `[acceptance] Cn ... PASS|FAIL` line;
//! run with `cargo test -p dsd-core --test acceptance -- --nocapture` to see them.

mod common;

use std::collections::HashMap;
use std::sync::OnceLock;

use dsd_core::propagator::{propagate, transfer_population, IntegratorConfig, Propagator};
use dsd_core::pulses::{plain_envelope, theta, theta_derivatives};
use dsd_core::qcore::{eigensystem_resonant, ComplexState3, Hamiltonian3};
use dsd_core::sensors::{
    calibrate_operating_point, sensor_response_curve, CalibrationScan, FieldSensorModel,
    MassSensorModel, DEFAULT_RESOLUTION_THRESHOLD,
};
use dsd_core::sweeps::{line_cut, max_slope, sweep_2d, LineCut, PopulationMap};
use dsd_core::{CutAxis, DeltaRange, DetuningPair, PulseSchedule, Scheme};

use common::{central, oracle_populations, report};

const TAUS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
const CUT_RANGE: DeltaRange = DeltaRange { lo: -5.0, hi: 5.0, n: 201 };
const MAP_RANGE: DeltaRange = DeltaRange { lo: -5.0, hi: 5.0, n: 41 };

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn cuts(axis: CutAxis) -> &'static [LineCut] {
    static CUTS: OnceLock<HashMap<CutAxis, Vec<LineCut>>> = OnceLock::new();
    &CUTS.get_or_init(|| {
        [CutAxis::Degenerate, CutAxis::Nondegenerate]
            .into_iter()
            .map(|axis| {
                let v = TAUS
                    .iter()
                    .map(|&m| line_cut(Scheme::Dsd, m, axis, CUT_RANGE, &cfg(), 0).unwrap())
                    .collect();
                (axis, v)
            })
            .collect()
    })[&axis]
}

fn maps() -> &'static [PopulationMap] {
    static MAPS: OnceLock<Vec<PopulationMap>> = OnceLock::new();
    MAPS.get_or_init(|| {
        TAUS.iter()
            .map(|&m| sweep_2d(Scheme::Dsd, m, MAP_RANGE, &cfg(), 0).unwrap())
            .collect()
    })
}

fn strictly(values: &[f64], increasing: bool) -> bool {
    values
        .windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

#[test]
fn c1_resonant_transfer() {
    let zero = DetuningPair::new(0.0, 0.0);
    let plain10 = PulseSchedule::in_tau_min_units(Scheme::Plain, 10.0).unwrap();
    let dsd1 = PulseSchedule::in_tau_min_units(Scheme::Dsd, 1.0).unwrap();
    let plain1 = PulseSchedule::in_tau_min_units(Scheme::Plain, 1.0).unwrap();

    let p_plain10 = transfer_population(&plain10, zero, &cfg()).unwrap();
    let p_dsd1 = transfer_population(&dsd1, zero, &cfg()).unwrap();
    let p_plain1 = transfer_population(&plain1, zero, &cfg()).unwrap();
    let o_plain10 = oracle_populations(&plain10, 0.0, 0.0)[2];
    let o_dsd1 = oracle_populations(&dsd1, 0.0, 0.0)[2];
    let o_plain1 = oracle_populations(&plain1, 0.0, 0.0)[2];

    let agree = [(p_plain10, o_plain10), (p_dsd1, o_dsd1), (p_plain1, o_plain1)]
        .iter()
        .all(|(a, b)| (a - b).abs() < 1e-8);
    let pass = p_plain10 >= 0.999
        && o_plain10 >= 0.999
        && p_dsd1 >= 0.99
        && o_dsd1 >= 0.99
        && p_plain1 < p_dsd1
        && agree;
    report(
        "C1",
        "resonant transfer",
        pass,
        &format!(
            "plain 10τm P3={p_plain10:.9}, dsd 1τm P3={p_dsd1:.9}, plain 1τm P3={p_plain1:.6}; oracle agreement={agree}"
        ),
    );
    assert!(pass);
}

fn slopes(axis: CutAxis) -> Vec<f64> {
    cuts(axis)
        .iter()
        .map(|c| max_slope(c).unwrap().slope.abs())
        .collect()
}

#[test]
fn c2_degenerate_slope_ordering() {
    let s = slopes(CutAxis::Degenerate);
    let pass = strictly(&s, false);
    report("C2", "degenerate slope ordering (τ = 1,2,5,10 τm)", pass, &format!("max |dP3/dδ| = {s:.4?}"));
    assert!(pass);
}

#[test]
fn c3_nondegenerate_slope_ordering() {
    let s = slopes(CutAxis::Nondegenerate);
    let pass = strictly(&s, true);
    report("C3", "non-degenerate slope ordering (τ = 1,2,5,10 τm)", pass, &format!("max |dP3/dδ| = {s:.4?}"));
    assert!(pass);
}

#[test]
fn c4_bright_area_ordering() {
    let diag: Vec<f64> = maps()
        .iter()
        .map(|m| PopulationMap::bright_extent(&m.diagonal(), 0.9))
        .collect();
    let anti: Vec<f64> = maps()
        .iter()
        .map(|m| PopulationMap::bright_extent(&m.antidiagonal(), 0.9))
        .collect();
    let diag_ok = strictly(&diag, true);
    let anti_ok = strictly(&anti, false);
    report(
        "C4a",
        "bright extent {P3>0.9} along δ1=δ2 grows with τ",
        diag_ok,
        &format!("extent (Ω0) = {diag:?}"),
    );
    report(
        "C4b",
        "bright extent {P3>0.9} along δ1=−δ2 shrinks with τ",
        anti_ok,
        &format!("extent (Ω0) = {anti:?}"),
    );
    assert!(diag_ok, "degenerate diagonal: {diag:?}");
    assert!(anti_ok, "anti-diagonal: {anti:?}");
}

#[test]
fn c5_mass_sensor_scale() {
    let model = MassSensorModel::paper_defaults();
    let op = calibrate_operating_point(
        &model,
        0.0,
        transfer_population(&PulseSchedule::in_tau_min_units(Scheme::Dsd, 1.0).unwrap(), DetuningPair::new(0.0, 0.0), &cfg()).unwrap(),
        DEFAULT_RESOLUTION_THRESHOLD,
        &cfg(),
        &CalibrationScan::default(),
    )
    .unwrap();
    let curve = sensor_response_curve(&model, op.detuning_offset, (0.0, 2e-19), 401, &cfg(), 0).unwrap();
    let dm = curve.quantity_step(0.0, 0.1).unwrap();
    let pass = (1e-20 / 3.0..=3e-20).contains(&dm);
    report(
        "C5",
        "mass resolution for ΔP3 = 0.1",
        pass,
        &format!(
            "round {}, offset {:.3} Ω0, slope {:.4}; δm = {dm:.3e} g (target 1e-20 g, factor 3)",
            op.round, op.detuning_offset, op.slope_at_point
        ),
    );
    assert!(pass);
}

#[test]
fn c6_magnetometer_scale() {
    let model = FieldSensorModel::paper_defaults();
    let op = calibrate_operating_point(
        &model,
        0.0,
        1.0,
        DEFAULT_RESOLUTION_THRESHOLD,
        &cfg(),
        &CalibrationScan::default(),
    )
    .unwrap();
    let curve = sensor_response_curve(&model, op.detuning_offset, (-0.1, 0.1), 801, &cfg(), 0).unwrap();
    let span = curve.steep_span(0.0, 0.1, 0.9).unwrap();
    let pass = (1e-2 / 3.0..=3e-2).contains(&span);
    report(
        "C6",
        "magnetometer steep window (P3 0.1 → 0.9)",
        pass,
        &format!(
            "round {}, offset {:.3} Ω0; field span = {span:.3e} G (target 1e-2 G, factor 3)",
            op.round, op.detuning_offset
        ),
    );
    assert!(pass);
}

#[test]
fn c7_numerical_hygiene() {
    let mut failures = Vec::new();

    // Norm drift and step halving over the sweep extremes for every τ.
    let mut worst_drift: f64 = 0.0;
    let mut worst_halving: f64 = 0.0;
    for &m in &TAUS {
        let s = PulseSchedule::in_tau_min_units(Scheme::Dsd, m).unwrap();
        let base = Propagator::new(&s, 5.0, &cfg()).unwrap();
        let halved = Propagator::new(&s, 5.0, &IntegratorConfig::fixed(base.step() / 2.0)).unwrap();
        for pair in [
            DetuningPair::new(0.0, 0.0),
            DetuningPair::degenerate(5.0),
            DetuningPair::nondegenerate(-5.0),
            DetuningPair::degenerate(-1.0),
            DetuningPair::nondegenerate(0.6),
            DetuningPair::new(5.0, -2.5),
        ] {
            let a = base.evolve(pair, &ComplexState3::basis(1), None).unwrap();
            let b = halved.evolve(pair, &ComplexState3::basis(1), None).unwrap();
            worst_drift = worst_drift.max(a.norm_drift).max(b.norm_drift);
            worst_halving = worst_halving.max((a.p3() - b.p3()).abs());
        }
    }
    if worst_drift > 1e-8 {
        failures.push(format!("norm drift {worst_drift:e}"));
    }
    if worst_halving > 1e-8 {
        failures.push(format!("step halving ΔP3 {worst_halving:e}"));
    }

    // Analytic derivatives against finite differences.
    let mut worst_fd: f64 = 0.0;
    for &m in &TAUS {
        let s = PulseSchedule::in_tau_min_units(Scheme::Dsd, m).unwrap();
        let tau = s.tau();
        let h = 1e-5 * tau;
        for k in [-3.0, -2.0, -0.5, 0.3, 0.5, 2.0, 4.0] {
            let t = k * tau;
            let (d, dd) = theta_derivatives(t, tau);
            let fd_d = central(|x| theta(x, tau), t, h);
            let fd_dd = central(|x| theta_derivatives(x, tau).0, t, h);
            let fd_gx = central(|x| s.dsd_mu(x), t, h);
            for (a, b) in [(d, fd_d), (dd, fd_dd), (s.dsd_gx(t), fd_gx)] {
                worst_fd = worst_fd.max((a - b).abs() / b.abs());
            }
        }
    }
    if worst_fd > 1e-6 {
        failures.push(format!("finite-difference mismatch {worst_fd:e}"));
    }

    // Dark-state annihilation.
    let mut worst_dark: f64 = 0.0;
    for (o1, o2) in [(3.0, 4.0), (0.0, 1.0), (1.0, 0.0), (0.2, 7.5), (1.3, 1.3)] {
        let d = eigensystem_resonant(o1, o2).unwrap().dark();
        let hd = Hamiltonian3::resonant(o1, o2).apply(&ComplexState3::from_real(d));
        worst_dark = worst_dark.max(hd.norm());
    }
    if worst_dark > 1e-12 {
        failures.push(format!("dark state residual {worst_dark:e}"));
    }

    // DSD → plain convergence: sup_t |Ω̃ − Ω| strictly decreasing in τ.
    let sup_diff: Vec<f64> = TAUS
        .iter()
        .map(|&m| {
            let s = PulseSchedule::in_tau_min_units(Scheme::Dsd, m).unwrap();
            let (t0, t1) = s.window();
            (0..=4000)
                .map(|k| t0 + (t1 - t0) * k as f64 / 4000.0)
                .map(|t| {
                    let (a, b) = s.envelope(t);
                    let (p, q) = plain_envelope(t, &s);
                    (a - p).abs().max((b - q).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    if !strictly(&sup_diff, false) {
        failures.push(format!("DSD→plain not monotone: {sup_diff:?}"));
    }

    // Map cells stay normalised.
    let worst_sum = maps()
        .iter()
        .map(|m| m.max_population_sum_error())
        .fold(0.0, f64::max);
    if worst_sum > 1e-8 {
        failures.push(format!("map population sum error {worst_sum:e}"));
    }

    let pass = failures.is_empty();
    report(
        "C7",
        "numerical hygiene",
        pass,
        &format!(
            "drift {worst_drift:.1e}, halving {worst_halving:.1e}, fd {worst_fd:.1e}, dark {worst_dark:.1e}, map sum {worst_sum:.1e}, dsd-plain {sup_diff:.3?}{}",
            if pass { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    );
    assert!(pass);
}

#[test]
fn c8_parallel_determinism() {
    let csv = |threads: usize| {
        let map = sweep_2d(Scheme::Dsd, 2.0, MAP_RANGE, &cfg(), threads).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        let cut = line_cut(Scheme::Dsd, 2.0, CutAxis::Nondegenerate, CUT_RANGE, &cfg(), threads).unwrap();
        cut.write_csv(&mut buf, Scheme::Dsd, &cfg()).unwrap();
        buf
    };
    let reference = csv(1);
    let pass = [4, 8].iter().all(|&n| csv(n) == reference);
    report("C8", "bitwise determinism across 1/4/8 threads", pass, &format!("{} bytes", reference.len()));
    assert!(pass);
}

#[test]
fn resonant_propagation_norm() {
    // Sanity companion to C1: the plain run conserves the norm on its own.
    let s = PulseSchedule::in_tau_min_units(Scheme::Plain, 10.0).unwrap();
    let r = propagate(&s, DetuningPair::new(0.0, 0.0), &ComplexState3::basis(1), &cfg()).unwrap();
    assert!(r.norm_drift <= 1e-8);
}
