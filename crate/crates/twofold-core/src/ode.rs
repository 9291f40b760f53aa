//! Explicit Dormand-Prince 5(4) integration with FSAL step reuse, the
//! standard quartic dense-output interpolant, and event location on the
//! dense output to 1e-12 in time.
//!
//! The state dimension is a const generic so plain planar flows and
//! quadrature-augmented flows share one implementation. Time may run
//! backwards (t1 < t0).

use crate::error::{Error, Result};

/// Integration controls. Defaults: rtol 1e-10, atol 1e-12, automatic initial
/// step, no dense sampling grid (samples land on accepted steps).
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; chosen automatically when absent.
    pub h0: Option<f64>,
    /// Largest permitted step magnitude.
    pub h_max: f64,
    pub max_steps: usize,
    /// When set, output samples are taken on a uniform grid of this spacing
    /// (via the interpolant) instead of at accepted steps.
    pub sample_dt: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
            sample_dt: None,
        }
    }
}

/// Event function g with crossing direction and terminality. A crossing at
/// the start of a step with g exactly 0 is treated as a departure, not a
/// crossing, so integrations may start on their own section.
pub struct EventSpec<'a, const N: usize> {
    pub g: &'a dyn Fn(f64, &[f64; N]) -> f64,
    /// +1: only negative-to-positive crossings; -1: the reverse; 0: both.
    pub direction: i8,
    pub terminal: bool,
}

/// One located event occurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub t: f64,
    pub y: [f64; N],
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeStatus {
    ReachedEnd,
    TerminalEvent,
}

/// Integration output: samples, located events, termination status.
#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub events: Vec<EventHit<N>>,
    pub status: OdeStatus,
}

impl<const N: usize> OdeSolution<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
/// Fifth-order weights (also the final stage position: FSAL).
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Embedded fourth-order weights.
const BS: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
/// Dense-output weights for the fifth stage of the interpolant.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn axpy<const N: usize>(y: &[f64; N], h: f64, coeffs: &[f64], k: &[[f64; N]]) -> [f64; N] {
    let mut out = *y;
    for (c, ki) in coeffs.iter().zip(k.iter()) {
        if *c == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] += h * c * ki[i];
        }
    }
    out
}

/// Dense-output polynomial for one accepted step.
struct StepInterpolant<const N: usize> {
    t0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> StepInterpolant<N> {
    fn new(t0: f64, h: f64, y0: &[f64; N], y1: &[f64; N], k: &[[f64; N]; 7]) -> Self {
        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            let dy = y1[i] - y0[i];
            let bspl = h * k[0][i] - dy;
            r[0][i] = y0[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * k[6][i] - bspl;
            let mut acc = 0.0;
            for j in 0..7 {
                acc += D[j] * k[j][i];
            }
            r[4][i] = h * acc;
        }
        StepInterpolant { t0, h, r }
    }

    fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.r[0][i]
                + th
                    * (self.r[1][i]
                        + th1 * (self.r[2][i] + th * (self.r[3][i] + th1 * self.r[4][i])));
        }
        out
    }
}

/// Integrates dy/dt = f(t, y) from (t0, y0) to t1, locating events on the
/// way. Terminal events stop the integration at the event time.
pub fn integrate<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &OdeOptions,
    events: &[EventSpec<'_, N>],
) -> Result<OdeSolution<N>> {
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return Err(Error::DomainViolation { detail: "zero-length time span".into() });
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = dir
        * opts
            .h0
            .unwrap_or_else(|| initial_step(f, t, &y, &k1, dir, opts))
            .abs()
            .min(opts.h_max)
            .min(span);

    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y0],
        events: Vec::new(),
        status: OdeStatus::ReachedEnd,
    };
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut next_sample = opts.sample_dt.map(|dt| t0 + dir * dt);

    let mut steps = 0usize;
    loop {
        if steps >= opts.max_steps {
            return Err(Error::MaxStepsExceeded { t, max_steps: opts.max_steps });
        }
        steps += 1;
        // Do not step past the end.
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }

        let k2 = f(t + C[1] * h, &axpy(&y, h, &A2, std::slice::from_ref(&k1)));
        let k3 = f(t + C[2] * h, &axpy(&y, h, &A3, &[k1, k2]));
        let k4 = f(t + C[3] * h, &axpy(&y, h, &A4, &[k1, k2, k3]));
        let k5 = f(t + C[4] * h, &axpy(&y, h, &A5, &[k1, k2, k3, k4]));
        let k6 = f(t + C[5] * h, &axpy(&y, h, &A6, &[k1, k2, k3, k4, k5]));
        let y1 = axpy(&y, h, &B, &[k1, k2, k3, k4, k5, k6]);
        let k7 = f(t + h, &y1);
        let ks = [k1, k2, k3, k4, k5, k6, k7];

        // Error estimate against the embedded fourth-order result.
        let mut err_sq = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for j in 0..7 {
                e += (if j < 6 { B[j] } else { 0.0 } - BS[j]) * ks[j][i];
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();

        if !err.is_finite() {
            h *= 0.25;
            continue;
        }
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }

        // Accepted. Build the interpolant, look for events.
        let interp = StepInterpolant::new(t, h, &y, &y1, &ks);
        let t_new = t + h;
        let mut terminal_hit: Option<EventHit<N>> = None;
        for (idx, ev) in events.iter().enumerate() {
            let g0 = g_prev[idx];
            let g1 = (ev.g)(t_new, &y1);
            let hit_t = locate_crossing(ev, g0, g1, t, t_new, &interp);
            if let Some(te) = hit_t {
                let ye = interp.eval(te);
                let hit = EventHit { index: idx, t: te, y: ye };
                if ev.terminal {
                    match &terminal_hit {
                        Some(prev) if (prev.t - t) * dir <= (te - t) * dir => {}
                        _ => terminal_hit = Some(hit),
                    }
                } else {
                    sol.events.push(hit);
                }
            }
            g_prev[idx] = g1;
        }

        if let Some(hit) = terminal_hit {
            // Drop any nonterminal hits recorded after the stop time.
            sol.events.retain(|e| (e.t - hit.t) * dir <= 0.0);
            emit_samples(&mut sol, &interp, &mut next_sample, hit.t, dir, opts);
            if sol.t.last() != Some(&hit.t) {
                sol.t.push(hit.t);
                sol.y.push(hit.y);
            }
            sol.events.push(hit);
            sol.status = OdeStatus::TerminalEvent;
            return Ok(sol);
        }

        emit_samples(&mut sol, &interp, &mut next_sample, t_new, dir, opts);
        if opts.sample_dt.is_none() {
            sol.t.push(t_new);
            sol.y.push(y1);
        }

        t = t_new;
        y = y1;
        k1 = k7;

        if (t - t1) * dir >= 0.0 {
            if opts.sample_dt.is_some() && sol.t.last() != Some(&t) {
                sol.t.push(t);
                sol.y.push(y);
            }
            return Ok(sol);
        }

        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).clamp(-opts.h_max, opts.h_max);
        if h == 0.0 {
            return Err(Error::StepUnderflow { t, h });
        }
    }
}

/// Pushes uniform-grid samples that fall inside (previous, t_limit].
fn emit_samples<const N: usize>(
    sol: &mut OdeSolution<N>,
    interp: &StepInterpolant<N>,
    next_sample: &mut Option<f64>,
    t_limit: f64,
    dir: f64,
    opts: &OdeOptions,
) {
    let (Some(ts), Some(dt)) = (next_sample.as_mut(), opts.sample_dt) else {
        return;
    };
    while (*ts - t_limit) * dir <= 0.0 {
        sol.t.push(*ts);
        sol.y.push(interp.eval(*ts));
        *ts += dir * dt;
    }
}

/// Finds the first admissible root of an event on one accepted step, or None.
/// Departure rule: g exactly 0 at the left endpoint is not a crossing.
fn locate_crossing<const N: usize>(
    ev: &EventSpec<'_, N>,
    g0: f64,
    g1: f64,
    t0: f64,
    t1: f64,
    interp: &StepInterpolant<N>,
) -> Option<f64> {
    let g = |t: f64| (ev.g)(t, &interp.eval(t));
    let admissible = |ga: f64, gb: f64| -> bool {
        if ga * gb > 0.0 || (ga == 0.0 && gb == 0.0) {
            return false;
        }
        match ev.direction {
            1 => ga < 0.0 || (ga == 0.0 && gb > 0.0),
            -1 => ga > 0.0 || (ga == 0.0 && gb < 0.0),
            _ => true,
        }
    };
    // Subdivide to catch a sign change that reverses within the step, and to
    // step over a departure from g = 0 at t0.
    const PARTS: usize = 8;
    let mut ta = t0;
    let mut ga = g0;
    for p in 1..=PARTS {
        let tb = t0 + (t1 - t0) * p as f64 / PARTS as f64;
        let gb = if p == PARTS { g1 } else { g(tb) };
        let skip_departure = p == 1 && g0 == 0.0;
        if !skip_departure && admissible(ga, gb) {
            let te = if ga == 0.0 {
                ta
            } else if gb == 0.0 {
                tb
            } else {
                crate::roots::brent(&g, ta, tb, 1e-12)
            };
            return Some(te);
        }
        ta = tb;
        ga = gb;
    }
    None
}

/// Conventional initial-step heuristic from the local derivative scale.
fn initial_step<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    dir: f64,
    opts: &OdeOptions,
) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sc) * (y[i] / sc);
        d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    let (d0, d1) = (d0.sqrt(), d1.sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    // One Euler probe to estimate the second derivative scale.
    let mut y1 = *y;
    for i in 0..N {
        y1[i] += dir * h0 * k1[i];
    }
    let k2 = f(t + dir * h0, &y1);
    let mut d2: f64 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d2 += ((k2[i] - k1[i]) / sc) * ((k2[i] - k1[i]) / sc);
    }
    let d2 = d2.sqrt() / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1)
}
