//! Limit-cycle continuation in the scaling chart: numeric Hopf location,
//! shooting with pseudo-arclength steps, Floquet multipliers through a
//! scalar section map, fold detection on a computed branch, and bisection
//! for the canard explosion.
//!
//! The shooting vector is z = (x2(0), yhat(0), T, mu2) with the phase fixed
//! by requiring x2'(0) = 0, so every cycle is anchored at its rightmost
//! excursion. Continuation runs in rescaled coordinates (T damped, mu2
//! amplified) so that arclength steps spend their budget on geometry rather
//! than on the period drift near the canard wall.

use crate::chart::{equilibrium_k2, hopf_mu2_over_r2, linearize_k2, Kappa2Field};
use crate::dynamics::DEFAULT_RHO;
use crate::error::{Error, Result};
use crate::model::NormalFormModel;
use crate::ode::{integrate, EventSpec, OdeOptions, OdeStatus};
use crate::phi::{critical_manifold, Phi};
use nalgebra::{Matrix4, Vector4};

/// Rescaling applied to the shooting vector for arclength bookkeeping.
const WEIGHTS: [f64; 4] = [1.0, 1.0, 0.1, 10.0];

/// Orbits reaching this |x2| during a shot are treated as escaped.
const ESCAPE_X2: f64 = 1e3;

/// One converged cycle on a branch.
#[derive(Debug, Clone, Copy)]
pub struct BranchPoint {
    pub mu2: f64,
    /// Cycle anchor: rightmost excursion in x2.
    pub x2_0: f64,
    pub y_hat_0: f64,
    pub period: f64,
    /// Half peak-to-peak amplitude in x2.
    pub amp_x2: f64,
    /// Half peak-to-peak amplitude in yhat.
    pub amp_y: f64,
    /// Nontrivial Floquet multiplier from the section return map; NaN when
    /// the monodromy was too ill-conditioned to difference.
    pub floquet: f64,
    pub stable: bool,
}

/// A continued family of cycles at fixed blowup radius.
#[derive(Debug, Clone)]
pub struct Branch {
    pub r2: f64,
    pub points: Vec<BranchPoint>,
}

impl Branch {
    /// Linear interpolation of mu2 at a requested x2 amplitude, used for
    /// matched-amplitude comparisons. None if the amplitude is off-branch.
    pub fn mu2_at_amp(&self, amp: f64) -> Option<f64> {
        for w in self.points.windows(2) {
            let (a0, a1) = (w[0].amp_x2, w[1].amp_x2);
            if (a0 - amp) * (a1 - amp) <= 0.0 && a0 != a1 {
                let s = (amp - a0) / (a1 - a0);
                return Some(w[0].mu2 + s * (w[1].mu2 - w[0].mu2));
            }
        }
        None
    }
}

/// Saddle-node of cycles located on a branch.
#[derive(Debug, Clone, Copy)]
pub struct Fold {
    pub mu2: f64,
    pub amp_x2: f64,
    /// Index of the branch point nearest the fold.
    pub index: usize,
}

/// Bracket produced by the explosion bisection.
#[derive(Debug, Clone, Copy)]
pub struct ExplosionBracket {
    pub lo: f64,
    pub hi: f64,
}

impl ExplosionBracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Knobs for `continue_branch`.
#[derive(Debug, Clone, Copy)]
pub struct ContinueOptions {
    /// Initial arclength step in rescaled coordinates.
    pub ds0: f64,
    pub ds_max: f64,
    pub max_points: usize,
    /// Stop once the x2 amplitude exceeds this.
    pub amp_target: f64,
    /// Stop once the period exceeds this (canard wall).
    pub t_cap: f64,
    /// Stop once mu2 leaves this window.
    pub mu2_window: (f64, f64),
    /// Anchor amplitude of the first cycle off the Hopf point.
    pub seed_amp: f64,
}

impl Default for ContinueOptions {
    fn default() -> Self {
        ContinueOptions {
            ds0: 0.05,
            ds_max: 0.4,
            max_points: 500,
            amp_target: 25.0,
            t_cap: 400.0,
            mu2_window: (f64::NEG_INFINITY, f64::INFINITY),
            seed_amp: 0.1,
        }
    }
}

/// Locates the Hopf value of mu2 at finite radius as the zero of the
/// equilibrium trace, bracketed around the closed-form leading order.
pub fn numeric_hopf_mu2(model: &NormalFormModel, phi: &Phi, r2: f64) -> Result<f64> {
    if !(r2 > 0.0) {
        return Err(Error::OutOfDomain { what: "blowup radius", value: r2 });
    }
    let seed = r2 * hopf_mu2_over_r2(model, phi)?;
    let trace_at = |mu2: f64| -> Result<f64> {
        let field = Kappa2Field { model, phi, r2, mu2 };
        let eq = equilibrium_k2(&field)?;
        Ok(linearize_k2(&field, eq[0], eq[1]).trace)
    };
    let mut w = 0.2 * seed.abs() + 1e-3 * r2;
    for _ in 0..6 {
        let (a, b) = (seed - w, seed + w);
        let (fa, fb) = (trace_at(a)?, trace_at(b)?);
        if fa * fb < 0.0 {
            let f = |m: f64| trace_at(m).unwrap_or(f64::NAN);
            return Ok(crate::roots::brent(&f, a, b, 1e-13));
        }
        w *= 1.6;
    }
    Err(Error::NoHopf {
        reason: format!("no trace sign change near mu2 = {seed} at r2 = {r2}"),
    })
}

/// Why a shooting solve failed, before it is dressed with the partial branch.
enum PointFail {
    Newton,
    Escape { mu2: f64 },
    Hard(Error),
}

fn shoot(
    model: &NormalFormModel,
    phi: &Phi,
    r2: f64,
    z: &[f64; 4],
) -> std::result::Result<[f64; 2], PointFail> {
    let field = Kappa2Field { model, phi, r2, mu2: z[3] };
    let f = |_t: f64, s: &[f64; 2]| field.eval(s[0], s[1]);
    let g_escape = |_t: f64, s: &[f64; 2]| s[0].abs() - ESCAPE_X2;
    let ev = EventSpec { g: &g_escape, direction: 1, terminal: true };
    let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, ..OdeOptions::default() };
    if !(z[2] > 0.0) {
        return Err(PointFail::Newton);
    }
    match integrate(&f, 0.0, z[2], [z[0], z[1]], &opts, &[ev]) {
        Ok(sol) if sol.status == OdeStatus::TerminalEvent => {
            Err(PointFail::Escape { mu2: z[3] })
        }
        Ok(sol) => {
            let (_, s) = sol.last();
            Ok(s)
        }
        Err(Error::StepUnderflow { .. }) | Err(Error::MaxStepsExceeded { .. }) => {
            Err(PointFail::Escape { mu2: z[3] })
        }
        Err(e) => Err(PointFail::Hard(e)),
    }
}

/// Residual of the shooting system. The last component is supplied by the
/// caller: an anchor on x2(0) for the first points, the arclength condition
/// afterwards.
fn residual(
    model: &NormalFormModel,
    phi: &Phi,
    r2: f64,
    z: &[f64; 4],
    last: &dyn Fn(&[f64; 4]) -> f64,
) -> std::result::Result<Vector4<f64>, PointFail> {
    let end = shoot(model, phi, r2, z)?;
    let field = Kappa2Field { model, phi, r2, mu2: z[3] };
    let f0 = field.eval(z[0], z[1]);
    Ok(Vector4::new(end[0] - z[0], end[1] - z[1], f0[0], last(z)))
}

/// Newton with forward-difference Jacobian on the 4D shooting system.
fn solve_point(
    model: &NormalFormModel,
    phi: &Phi,
    r2: f64,
    seed: [f64; 4],
    last: &dyn Fn(&[f64; 4]) -> f64,
) -> std::result::Result<[f64; 4], PointFail> {
    let mut z = seed;
    for _ in 0..20 {
        let f = residual(model, phi, r2, &z, last)?;
        let norm = f.amax();
        if norm < 3e-9 {
            return Ok(z);
        }
        // Differencing step balances truncation against the integration
        // noise floor: too small and the columns are noise, especially for
        // cycles that cross the band-edge derivative kinks.
        let mut jac = Matrix4::zeros();
        for j in 0..4 {
            let h = 1e-6 * z[j].abs().max(1.0);
            let mut zp = z;
            zp[j] += h;
            let fp = residual(model, phi, r2, &zp, last)?;
            jac.set_column(j, &((fp - f) / h));
        }
        let delta = jac.lu().solve(&f).ok_or(PointFail::Newton)?;
        for j in 0..4 {
            z[j] -= delta[j];
        }
        if !z.iter().all(|v| v.is_finite()) {
            return Err(PointFail::Newton);
        }
        // Cycles straddling the corners of a low-smoothness phi flatten the
        // convergence rate near the flow-map noise floor. Once the update is
        // below that floor a better iterate is not attainable; take it.
        if delta.amax() < 1e-10 * (1.0 + z.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            && norm < 1e-6
        {
            return Ok(z);
        }
    }
    Err(PointFail::Newton)
}

/// Samples one converged cycle and fills in amplitudes.
fn cycle_metrics(
    model: &NormalFormModel,
    phi: &Phi,
    r2: f64,
    z: &[f64; 4],
) -> Result<(f64, f64)> {
    let field = Kappa2Field { model, phi, r2, mu2: z[3] };
    let f = |_t: f64, s: &[f64; 2]| field.eval(s[0], s[1]);
    let opts = OdeOptions {
        rtol: 1e-10,
        atol: 1e-12,
        sample_dt: Some(z[2] / 512.0),
        ..OdeOptions::default()
    };
    let sol = integrate(&f, 0.0, z[2], [z[0], z[1]], &opts, &[])?;
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for s in &sol.y {
        xmin = xmin.min(s[0]);
        xmax = xmax.max(s[0]);
        ymin = ymin.min(s[1]);
        ymax = ymax.max(s[1]);
    }
    Ok((0.5 * (xmax - xmin), 0.5 * (ymax - ymin)))
}

/// Nontrivial Floquet multiplier by central differencing of the scalar
/// return map on the section {yhat = yhat(0)} taken with the cycle's own
/// crossing direction.
pub fn floquet(model: &NormalFormModel, phi: &Phi, r2: f64, pt: &BranchPoint) -> Result<f64> {
    let field = Kappa2Field { model, phi, r2, mu2: pt.mu2 };
    let ydot0 = field.eval(pt.x2_0, pt.y_hat_0)[1];
    if ydot0 == 0.0 {
        return Err(Error::MonodromyIllConditioned { estimate: f64::INFINITY });
    }
    let dir: i8 = if ydot0 > 0.0 { 1 } else { -1 };
    let ret = |x: f64| -> Result<f64> {
        let f = |_t: f64, s: &[f64; 2]| field.eval(s[0], s[1]);
        let g = |_t: f64, s: &[f64; 2]| s[1] - pt.y_hat_0;
        let ev = EventSpec { g: &g, direction: dir, terminal: true };
        let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, ..OdeOptions::default() };
        let sol = integrate(&f, 0.0, 3.0 * pt.period + 10.0, [x, pt.y_hat_0], &opts, &[ev])?;
        if sol.status != OdeStatus::TerminalEvent {
            return Err(Error::MonodromyIllConditioned { estimate: f64::INFINITY });
        }
        Ok(sol.last().1[0])
    };
    let h = 1e-6 * pt.x2_0.abs().max(1.0);
    let m = (ret(pt.x2_0 + h)? - ret(pt.x2_0 - h)?) / (2.0 * h);
    if !m.is_finite() {
        return Err(Error::MonodromyIllConditioned { estimate: m });
    }
    Ok(m)
}

fn to_scaled(z: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| z[i] * WEIGHTS[i])
}

fn from_scaled(s: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| s[i] / WEIGHTS[i])
}

/// Solves the first cycle off the Hopf point at a fixed anchor amplitude.
/// Returns the numeric Hopf mu2 and the converged shooting vector.
pub fn hopf_start(
    model: &NormalFormModel,
    phi: &Phi,
    r2: f64,
    seed_amp: f64,
) -> Result<(f64, [f64; 4])> {
    let mu2_h = numeric_hopf_mu2(model, phi, r2)?;
    let field = Kappa2Field { model, phi, r2, mu2: mu2_h };
    let eq = equilibrium_k2(&field)?;
    let lin = linearize_k2(&field, eq[0], eq[1]);
    if lin.det <= 0.0 {
        return Err(Error::NoHopf {
            reason: format!("equilibrium at the trace zero is not a focus (det = {})", lin.det),
        });
    }
    let omega = lin.det.sqrt();
    let anchor = eq[0] + seed_amp;
    let seed = [anchor, eq[1], 2.0 * std::f64::consts::PI / omega, mu2_h];
    let last = move |z: &[f64; 4]| z[0] - anchor;
    match solve_point(model, phi, r2, seed, &last) {
        Ok(z) => Ok((mu2_h, z)),
        Err(PointFail::Hard(e)) => Err(e),
        Err(PointFail::Escape { mu2 }) => Err(Error::SeedDiverged {
            reason: format!("seed cycle escaped at mu2 = {mu2}"),
        }),
        Err(PointFail::Newton) => Err(Error::SeedDiverged {
            reason: format!("shooting Newton failed at the anchor amplitude {seed_amp}"),
        }),
    }
}

/// Continues the cycle family born at the Hopf point toward larger
/// amplitude with pseudo-arclength steps, recording one `BranchPoint` per
/// converged cycle until a stop condition or failure.
pub fn continue_branch(
    model: &NormalFormModel,
    phi: &Phi,
    r2: f64,
    opts: &ContinueOptions,
) -> Result<Branch> {
    let mut branch = Branch { r2, points: Vec::new() };

    let record = |branch: &mut Branch, z: &[f64; 4]| -> Result<()> {
        let (amp_x2, amp_y) = cycle_metrics(model, phi, r2, z)?;
        let mut pt = BranchPoint {
            mu2: z[3],
            x2_0: z[0],
            y_hat_0: z[1],
            period: z[2],
            amp_x2,
            amp_y,
            floquet: f64::NAN,
            stable: false,
        };
        match floquet(model, phi, r2, &pt) {
            Ok(m) => {
                pt.floquet = m;
                pt.stable = m.abs() < 1.0;
            }
            Err(_) => {
                pt.floquet = f64::NAN;
                pt.stable = false;
            }
        }
        branch.points.push(pt);
        Ok(())
    };

    // Two anchored cycles to establish the marching direction.
    let (_, z1) = hopf_start(model, phi, r2, opts.seed_amp)?;
    record(&mut branch, &z1)?;
    let anchor2 = z1[0] + 0.6 * opts.seed_amp;
    let last2 = move |z: &[f64; 4]| z[0] - anchor2;
    let mut seed2 = z1;
    seed2[0] = anchor2;
    let z2 = match solve_point(model, phi, r2, seed2, &last2) {
        Ok(z) => z,
        Err(PointFail::Hard(e)) => return Err(e),
        Err(_) => {
            return Err(Error::SeedDiverged {
                reason: "second anchored cycle did not converge".to_string(),
            })
        }
    };
    record(&mut branch, &z2)?;

    let mut z_prev = z1;
    let mut z_cur = z2;
    let mut ds = opts.ds0;

    while branch.points.len() < opts.max_points {
        let p = branch.points.last().unwrap();
        if p.amp_x2 >= opts.amp_target
            || p.period >= opts.t_cap
            || p.mu2 < opts.mu2_window.0
            || p.mu2 > opts.mu2_window.1
        {
            break;
        }

        let sc = to_scaled(&z_cur);
        let sp = to_scaled(&z_prev);
        let mut tau = [0.0; 4];
        let mut norm = 0.0;
        for i in 0..4 {
            tau[i] = sc[i] - sp[i];
            norm += tau[i] * tau[i];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Err(Error::StepFailure {
                halvings: 0,
                points_done: branch.points.len(),
                partial: Box::new(branch),
            });
        }
        for t in &mut tau {
            *t /= norm;
        }

        let mut halvings = 0u32;
        let solved = loop {
            let pred_scaled: [f64; 4] = std::array::from_fn(|i| sc[i] + ds * tau[i]);
            let pred = from_scaled(&pred_scaled);
            let base = sc;
            let last = move |z: &[f64; 4]| {
                let zs = to_scaled(z);
                let mut acc = -ds;
                for i in 0..4 {
                    acc += tau[i] * (zs[i] - base[i]);
                }
                acc
            };
            match solve_point(model, phi, r2, pred, &last) {
                Ok(z) => break Some(z),
                Err(PointFail::Hard(e)) => return Err(e),
                Err(PointFail::Escape { mu2 }) if halvings >= 8 => {
                    let amp = branch.points.last().unwrap().amp_x2;
                    return Err(Error::BranchEscape { mu2, amp, partial: Box::new(branch) });
                }
                Err(_) if halvings >= 8 => break None,
                Err(_) => {
                    halvings += 1;
                    ds *= 0.5;
                }
            }
        };
        let Some(z_new) = solved else {
            return Err(Error::StepFailure {
                halvings: 8,
                points_done: branch.points.len(),
                partial: Box::new(branch),
            });
        };
        record(&mut branch, &z_new)?;
        z_prev = z_cur;
        z_cur = z_new;
        ds = (ds * 1.3).min(opts.ds_max);
    }
    Ok(branch)
}

/// Finds the first saddle-node of cycles along a branch: an interior
/// extremum of mu2, refined by the vertex of the parabola through the three
/// surrounding points in the (amplitude, mu2) plane.
pub fn locate_fold(branch: &Branch) -> Result<Fold> {
    let pts = &branch.points;
    for i in 1..pts.len().saturating_sub(1) {
        let (m0, m1, m2) = (pts[i - 1].mu2, pts[i].mu2, pts[i + 1].mu2);
        if (m1 - m0) * (m2 - m1) < 0.0 {
            let (x1, y1) = (pts[i - 1].amp_x2, m0);
            let (x2, y2) = (pts[i].amp_x2, m1);
            let (x3, y3) = (pts[i + 1].amp_x2, m2);
            let d = (x1 - x2) * (x1 - x3) * (x2 - x3);
            let a = (x3 * (y2 - y1) + x2 * (y1 - y3) + x1 * (y3 - y2)) / d;
            let b = (x3 * x3 * (y1 - y2) + x2 * x2 * (y3 - y1) + x1 * x1 * (y2 - y3)) / d;
            if a == 0.0 {
                return Ok(Fold { mu2: m1, amp_x2: x2, index: i });
            }
            let xv = -b / (2.0 * a);
            let c = y2 - a * x2 * x2 - b * x2;
            return Ok(Fold { mu2: a * xv * xv + b * xv + c, amp_x2: xv, index: i });
        }
    }
    Err(Error::NoFold { points: pts.len() })
}

/// Knobs for `locate_explosion`.
#[derive(Debug, Clone, Copy)]
pub struct ExplosionOptions {
    /// Observation horizon for each amplitude-response run.
    pub t_max: f64,
    /// Final bracket width.
    pub bracket_tol: f64,
    /// Launch distance on the attracting critical manifold.
    pub rho: f64,
}

impl Default for ExplosionOptions {
    fn default() -> Self {
        ExplosionOptions { t_max: 2e4, bracket_tol: 1e-9, rho: DEFAULT_RHO }
    }
}

/// Locates the canard explosion by bisection on the amplitude response:
/// launch on the attracting slow manifold, observe whether |x2| stays near
/// the bounded response of the `lo` end or escapes past a threshold set from
/// it. The returned bracket pins the transition to `bracket_tol`.
pub fn locate_explosion(
    model: &NormalFormModel,
    phi: &Phi,
    r2: f64,
    lo: f64,
    hi: f64,
    opts: &ExplosionOptions,
) -> Result<ExplosionBracket> {
    if !(lo < hi) {
        return Err(Error::DomainViolation {
            detail: format!("invalid explosion bracket [{lo}, {hi}]"),
        });
    }
    let run = |mu2: f64, threshold: Option<f64>| -> Result<(f64, bool)> {
        let mu = r2 * mu2;
        let x_launch = -opts.rho;
        let cp = critical_manifold(model, phi, mu, x_launch)?;
        let field = Kappa2Field { model, phi, r2, mu2 };
        let f = |_t: f64, s: &[f64; 2]| field.eval(s[0], s[1]);
        let thr = threshold.unwrap_or(f64::INFINITY);
        let g = |_t: f64, s: &[f64; 2]| s[0].abs() - thr;
        let events = [EventSpec { g: &g, direction: 1, terminal: true }];
        let ode_opts = OdeOptions {
            rtol: 1e-9,
            atol: 1e-11,
            max_steps: 50_000_000,
            sample_dt: Some(0.25),
            ..OdeOptions::default()
        };
        let sol = integrate(&f, 0.0, opts.t_max, [x_launch / r2, cp.y_hat], &ode_opts, &events)?;
        let m = sol.y.iter().fold(0.0f64, |m, s| m.max(s[0].abs()));
        Ok((m, sol.status == OdeStatus::TerminalEvent))
    };

    let (m_lo, _) = run(lo, None)?;
    let threshold = (3.0 * m_lo).max(m_lo + 2.0);
    let (_, hi_escapes) = run(hi, Some(threshold))?;
    if !hi_escapes {
        return Err(Error::NoExplosion {
            lo,
            hi,
            reason: format!(
                "upper end stayed within |x2| < {threshold} for {} time units",
                opts.t_max
            ),
        });
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > opts.bracket_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (_, escaped) = run(mid, Some(threshold))?;
        if escaped {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ExplosionBracket { lo, hi })
}
