//! Test-only reference integrator: adaptive Dormand–Prince 5(4) with its own
//! Hamiltonian assembly, sharing nothing with the library's RK4 path except
//! the envelope functions.

#![allow(dead_code)]

use num_complex::Complex64 as C64;

type V3 = [C64; 3];

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn deriv<F: Fn(f64) -> (f64, f64)>(env: &F, d1: f64, d2: f64, t: f64, v: &V3) -> V3 {
    let (o1, o2) = env(t);
    let h = [[d1, o1, 0.0], [o1, 0.0, o2], [0.0, o2, d2]];
    let mut out = [C64::new(0.0, 0.0); 3];
    for r in 0..3 {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..3 {
            acc += v[c] * h[r][c];
        }
        // -i * acc
        out[r] = C64::new(acc.im, -acc.re);
    }
    out
}

/// Integrates i dv/dt = H(t) v from `t0` to `t1` with error control at
/// relative tolerance `rtol`.
pub fn dopri<F: Fn(f64) -> (f64, f64)>(
    env: F,
    d1: f64,
    d2: f64,
    init: V3,
    t0: f64,
    t1: f64,
    rtol: f64,
) -> V3 {
    let atol = rtol * 1e-2;
    let mut t = t0;
    let mut v = init;
    let mut h = (t1 - t0) * 1e-4;
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let mut k = [[C64::new(0.0, 0.0); 3]; 7];
        for s in 0..7 {
            let mut y = v;
            for j in 0..s {
                for i in 0..3 {
                    y[i] += k[j][i] * (h * A[s][j]);
                }
            }
            k[s] = deriv(&env, d1, d2, t + C[s] * h, &y);
        }
        let mut y5 = v;
        let mut err: f64 = 0.0;
        for i in 0..3 {
            let mut e = C64::new(0.0, 0.0);
            for s in 0..7 {
                y5[i] += k[s][i] * (h * B5[s]);
                e += k[s][i] * (h * (B5[s] - B4[s]));
            }
            let scale = atol + rtol * v[i].norm().max(y5[i].norm());
            err = err.max(e.norm() / scale);
        }
        if err <= 1.0 {
            t += h;
            v = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    v
}

/// Final populations from |1⟩ for a schedule's envelope over its default window.
pub fn oracle_populations(schedule: &dsd_core::PulseSchedule, d1: f64, d2: f64) -> [f64; 3] {
    let (t0, t1) = schedule.window();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let v = dopri(|t| schedule.envelope(t), d1, d2, [one, zero, zero], t0, t1, 1e-11);
    v.map(|a| a.norm_sqr())
}

/// Central difference with step h.
pub fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn report(id: &str, name: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {id} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}
