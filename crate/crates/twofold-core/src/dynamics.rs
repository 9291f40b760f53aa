//! Hybrid integration of the piecewise-smooth system under the Filippov
//! convention, exact-flow section maps of the invisible-invisible case, the
//! regularized return map, and slow-manifold extension in the scaling chart.
//!
//! The hybrid loop alternates smooth half-plane arcs with sliding legs on
//! the switching line, classifying each arrival by the exact signs of the
//! two tangency components. At mu = 0 the sliding field is integrated in
//! factored form, which is smooth through the two-fold; a passage through it
//! is recorded as a sliding-exit/sliding-enter pair plus a diagnostic note,
//! since the Filippov forward solution is not unique there and the
//! continuation taken is the distinguished one along the switching line.

use crate::error::{Error, Result};
use crate::model::{region_at, NormalFormModel, RegionKind};
use crate::ode::{integrate, EventSpec, OdeOptions, OdeStatus};
use crate::phi::{critical_manifold, Phi, RegularizedField};

/// Default launch distance of slow-manifold extension.
pub const DEFAULT_RHO: f64 = 0.2;

/// Escape bound for slow-manifold extension in chart height.
const BLOWUP_BOUND: f64 = 2.0;

/// Cap on hybrid legs in one integration.
const MAX_LEGS: usize = 200_000;

/// Which dynamical regime a trajectory piece runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    UpperHalf,
    LowerHalf,
    Sliding,
}

/// Discrete happenings along a hybrid trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    CrossUp,
    CrossDown,
    SlidingEnter,
    SlidingExit,
    SectionHit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajEvent {
    pub t: f64,
    pub kind: EventKind,
    pub x: f64,
    pub y: f64,
}

/// One maximal time interval spent in a single mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpan {
    pub t_start: f64,
    pub t_end: f64,
    pub mode: Mode,
}

/// Sampled hybrid trajectory with its event and mode history.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub events: Vec<TrajEvent>,
    pub modes: Vec<ModeSpan>,
    /// Notes about points where the forward evolution was not unique and a
    /// distinguished continuation was taken.
    pub diagnostics: Vec<String>,
}

impl Trajectory {
    fn push_leg<const N: usize>(&mut self, sol: &crate::ode::OdeSolution<N>, pick: impl Fn(&[f64; N]) -> (f64, f64)) {
        for (t, s) in sol.t.iter().zip(sol.y.iter()) {
            if self.t.last().is_some_and(|last| *t <= *last) {
                continue;
            }
            let (x, y) = pick(s);
            self.t.push(*t);
            self.x.push(x);
            self.y.push(y);
        }
    }

    fn record_mode(&mut self, t_start: f64, t_end: f64, mode: Mode) {
        if t_end <= t_start {
            return;
        }
        match self.modes.last_mut() {
            Some(span) if span.mode == mode && span.t_end == t_start => span.t_end = t_end,
            _ => self.modes.push(ModeSpan { t_start, t_end, mode }),
        }
    }
}

/// Integrates one smooth planar field, recording samples only (no events,
/// no mode history). The workhorse behind regularized simulation.
pub fn integrate_smooth(
    f: &dyn Fn(f64, &[f64; 2]) -> [f64; 2],
    t0: f64,
    t1: f64,
    start: [f64; 2],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    let sol = integrate(f, t0, t1, start, opts, &[])?;
    let mut traj = Trajectory::default();
    traj.push_leg(&sol, |s| (s[0], s[1]));
    Ok(traj)
}

/// What the hybrid loop decided to do next from a point on the switching
/// line.
enum SigmaDecision {
    Up,
    Down,
    Slide,
    /// Sliding continuation chosen at a genuinely non-unique point.
    SlideNonUnique(String),
}

/// Classifies forward evolution from (x, 0). Tangency points are resolved by
/// the fold curvature of the vanishing component; the double tangency at the
/// two-fold defers to the sliding extension when one exists.
fn decide_on_sigma(model: &NormalFormModel, mu: f64, x: f64, t: f64) -> Result<SigmaDecision> {
    let sp = model.xplus.f2.eval(x, 0.0);
    let sm = model.xminus.f2.eval(x - mu, 0.0);
    if sp == 0.0 && sm == 0.0 {
        // The two-fold itself. A sliding extension through it exists exactly
        // when the line adjacent to it slides (beta > 0).
        let c = model.coefficients()?;
        if c.beta > 0.0 {
            return Ok(SigmaDecision::SlideNonUnique(format!(
                "t = {t}: two-fold at x = {x}; forward evolution is not unique, continuing \
                 along the sliding extension"
            )));
        }
        return Err(Error::ForwardNonUnique { t, x });
    }
    if sp == 0.0 {
        // Upper fold: the grazing field decides by its curvature; when it
        // curves back down, the lower component settles crossing vs sliding.
        return Ok(if lie2_upper(model, x) > 0.0 {
            SigmaDecision::Up
        } else if sm > 0.0 {
            SigmaDecision::Slide
        } else {
            SigmaDecision::Down
        });
    }
    if sm == 0.0 {
        return Ok(if lie2_lower(model, mu, x) < 0.0 {
            SigmaDecision::Down
        } else if sp < 0.0 {
            SigmaDecision::Slide
        } else {
            SigmaDecision::Up
        });
    }
    Ok(match region_at(model, mu, x).unwrap() {
        RegionKind::CrossingUp => SigmaDecision::Up,
        RegionKind::CrossingDown => SigmaDecision::Down,
        RegionKind::StableSliding => SigmaDecision::Slide,
        RegionKind::UnstableSliding => SigmaDecision::SlideNonUnique(format!(
            "t = {t}: start on repelling sliding at x = {x}; forward evolution is not \
             unique, continuing along the sliding field"
        )),
    })
}

/// Second Lie derivative sign helper: d/dt X2+(x(t), y(t)) along X+ at y=0.
fn lie2_upper(model: &NormalFormModel, x: f64) -> f64 {
    let (f1, f2) = model.xplus.eval(x, 0.0);
    model.xplus.f2.d_da().eval(x, 0.0) * f1 + model.xplus.f2.d_db().eval(x, 0.0) * f2
}

fn lie2_lower(model: &NormalFormModel, mu: f64, x: f64) -> f64 {
    let (f1, f2) = model.xminus.eval(x - mu, 0.0);
    model.xminus.f2.d_da().eval(x - mu, 0.0) * f1 + model.xminus.f2.d_db().eval(x - mu, 0.0) * f2
}

/// Right-hand side of the sliding flow. For mu = 0 the factored quotient is
/// used, smooth through the two-fold.
fn sliding_x_dot(model: &NormalFormModel, mu: f64, x: f64) -> f64 {
    if mu == 0.0 {
        let gp = model.tangency_plus().div_a().expect("validated on entry").eval(x, 0.0);
        let gm = model.tangency_minus().div_a().expect("validated on entry").eval(x, 0.0);
        let x1p = model.xplus.f1.eval(x, 0.0);
        let x1m = model.xminus.f1.eval(x, 0.0);
        (gm * x1p - gp * x1m) / (gm - gp)
    } else {
        let sp = model.xplus.f2.eval(x, 0.0);
        let sm = model.xminus.f2.eval(x - mu, 0.0);
        let sigma = sm / (sm - sp);
        sigma * model.xplus.f1.eval(x, 0.0) + (1.0 - sigma) * model.xminus.f1.eval(x - mu, 0.0)
    }
}

/// Integrates the piecewise-smooth system from `start` over [t0, t1] under
/// the Filippov convention.
pub fn integrate_filippov(
    model: &NormalFormModel,
    mu: f64,
    t0: f64,
    t1: f64,
    start: [f64; 2],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    model.coefficients()?;
    if t1 <= t0 {
        return Err(Error::DomainViolation { detail: format!("time span [{t0}, {t1}] is empty") });
    }
    let mut traj = Trajectory::default();
    let mut t = t0;
    let mut state = start;
    traj.t.push(t);
    traj.x.push(state[0]);
    traj.y.push(state[1]);

    let mut mode = if state[1] > 0.0 {
        Mode::UpperHalf
    } else if state[1] < 0.0 {
        Mode::LowerHalf
    } else {
        match decide_on_sigma(model, mu, state[0], t)? {
            SigmaDecision::Up => Mode::UpperHalf,
            SigmaDecision::Down => Mode::LowerHalf,
            SigmaDecision::Slide => Mode::Sliding,
            SigmaDecision::SlideNonUnique(note) => {
                traj.diagnostics.push(note);
                Mode::Sliding
            }
        }
    };

    for _leg in 0..MAX_LEGS {
        if t >= t1 {
            break;
        }
        match mode {
            Mode::UpperHalf | Mode::LowerHalf => {
                let upper = mode == Mode::UpperHalf;
                let f = |_tt: f64, s: &[f64; 2]| -> [f64; 2] {
                    let (f1, f2) = if upper {
                        model.xplus.eval(s[0], s[1])
                    } else {
                        model.xminus.eval(s[0] - mu, s[1])
                    };
                    [f1, f2]
                };
                let g_section = |_tt: f64, s: &[f64; 2]| s[1];
                let ev = EventSpec {
                    g: &g_section,
                    direction: if upper { -1 } else { 1 },
                    terminal: true,
                };
                let sol = integrate(&f, t, t1, state, opts, &[ev])?;
                traj.push_leg(&sol, |s| (s[0], s[1]));
                let (te, se) = sol.last();
                traj.record_mode(t, te, mode);
                if sol.status == OdeStatus::ReachedEnd {
                    return Ok(traj);
                }
                // Arrived on the switching line.
                let xe = se[0];
                t = te;
                state = [xe, 0.0];
                *traj.y.last_mut().unwrap() = 0.0;
                let decision = decide_on_sigma(model, mu, xe, te)?;
                mode = match decision {
                    SigmaDecision::Up => {
                        if upper {
                            // Arriving downward but pushed back up: grazing
                            // contact, not possible with a directional event;
                            // treat as crossing refusal.
                            return Err(Error::ForwardNonUnique { t: te, x: xe });
                        }
                        traj.events.push(TrajEvent { t: te, kind: EventKind::CrossUp, x: xe, y: 0.0 });
                        Mode::UpperHalf
                    }
                    SigmaDecision::Down => {
                        if !upper {
                            return Err(Error::ForwardNonUnique { t: te, x: xe });
                        }
                        traj.events.push(TrajEvent { t: te, kind: EventKind::CrossDown, x: xe, y: 0.0 });
                        Mode::LowerHalf
                    }
                    SigmaDecision::Slide => {
                        traj.events.push(TrajEvent { t: te, kind: EventKind::SlidingEnter, x: xe, y: 0.0 });
                        Mode::Sliding
                    }
                    SigmaDecision::SlideNonUnique(_) => {
                        // A smooth arc cannot land inside repelling sliding;
                        // reaching this means the event landed on the wrong
                        // side of a boundary root by rounding.
                        return Err(Error::ForwardNonUnique { t: te, x: xe });
                    }
                };
            }
            Mode::Sliding => {
                let f = |_tt: f64, s: &[f64; 1]| [sliding_x_dot(model, mu, s[0])];
                // Exit boundaries: roots of the tangency components; in the
                // factored mu = 0 case, roots of the reduced quotients (the
                // two-fold itself is a regular interior point there).
                let (tp, tm) = if mu == 0.0 {
                    (model.tangency_plus().div_a()?, model.tangency_minus().div_a()?)
                } else {
                    (model.tangency_plus(), model.tangency_minus())
                };
                let g_plus = |_tt: f64, s: &[f64; 1]| tp.eval(s[0], 0.0);
                let g_minus = |_tt: f64, s: &[f64; 1]| tm.eval(s[0] - if mu == 0.0 { 0.0 } else { mu }, 0.0);
                let g_origin = |_tt: f64, s: &[f64; 1]| s[0];
                let mut events = vec![
                    EventSpec { g: &g_plus, direction: 0, terminal: true },
                    EventSpec { g: &g_minus, direction: 0, terminal: true },
                ];
                if mu == 0.0 {
                    events.push(EventSpec { g: &g_origin, direction: 0, terminal: false });
                }
                let sol = integrate(&f, t, t1, [state[0]], opts, &events)?;
                traj.push_leg(&sol, |s| (s[0], 0.0));
                // Two-fold passages recorded from the nonterminal hits.
                for hit in sol.events.iter().filter(|h| h.index == 2) {
                    traj.events.push(TrajEvent { t: hit.t, kind: EventKind::SlidingExit, x: hit.y[0], y: 0.0 });
                    traj.events.push(TrajEvent { t: hit.t, kind: EventKind::SlidingEnter, x: hit.y[0], y: 0.0 });
                    traj.diagnostics.push(format!(
                        "t = {}: sliding passage through the two-fold; forward evolution is \
                         not unique, continuing along the sliding extension",
                        hit.t
                    ));
                }
                let (te, se) = sol.last();
                traj.record_mode(t, te, Mode::Sliding);
                if sol.status == OdeStatus::ReachedEnd {
                    return Ok(traj);
                }
                let xe = se[0];
                t = te;
                state = [xe, 0.0];
                let terminal = sol.events.last().unwrap();
                traj.events.push(TrajEvent { t: te, kind: EventKind::SlidingExit, x: xe, y: 0.0 });
                mode = if terminal.index == 0 { Mode::UpperHalf } else { Mode::LowerHalf };
            }
        }
    }
    if t < t1 {
        return Err(Error::MaxStepsExceeded { t, max_steps: MAX_LEGS });
    }
    Ok(traj)
}

/// Result of a section-to-section map evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionMapResult {
    /// Arrival abscissa on the section.
    pub x: f64,
    /// Total flight time.
    pub time: f64,
}

/// Exact-flow return map of the invisible-invisible case on the switching
/// line: the X+ half arc from (x0, 0), then the X- half arc, both located by
/// event detection at tight tolerance.
pub fn p0_numeric(model: &NormalFormModel, x0: f64, mu: f64) -> Result<SectionMapResult> {
    let cls = model.classify()?;
    if cls.class != crate::model::Class::II2 {
        return Err(Error::WrongClass { expected: "II2", found: cls.class.to_string() });
    }
    if x0 <= 0.0 {
        return Err(Error::OutOfDomain { what: "return-map argument", value: x0 });
    }
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-13, ..OdeOptions::default() };

    let fp = |_t: f64, s: &[f64; 2]| {
        let (a, b) = model.xplus.eval(s[0], s[1]);
        [a, b]
    };
    let g = |_t: f64, s: &[f64; 2]| s[1];
    let ev_down = EventSpec { g: &g, direction: -1, terminal: true };
    let sol = integrate(&fp, 0.0, 1e3, [x0, 0.0], &opts, &[ev_down])?;
    if sol.status != OdeStatus::TerminalEvent {
        return Err(Error::DomainViolation {
            detail: format!("upper half arc from x0 = {x0} never returned to the line"),
        });
    }
    let (t_up, s1) = sol.last();
    let x1 = s1[0];
    if x1 >= mu {
        return Err(Error::DomainViolation {
            detail: format!("half-map image x1 = {x1} is not below mu = {mu}"),
        });
    }

    let fm = |_t: f64, s: &[f64; 2]| {
        let (a, b) = model.xminus.eval(s[0] - mu, s[1]);
        [a, b]
    };
    let ev_up = EventSpec { g: &g, direction: 1, terminal: true };
    let sol = integrate(&fm, 0.0, 1e3, [x1, 0.0], &opts, &[ev_up])?;
    if sol.status != OdeStatus::TerminalEvent {
        return Err(Error::DomainViolation {
            detail: format!("lower half arc from x1 = {x1} never returned to the line"),
        });
    }
    let (t_down, s2) = sol.last();
    Ok(SectionMapResult { x: s2[0], time: t_up + t_down })
}

/// The fold abscissa of the upper field on the section {y = eps}: the root
/// of X2+(x, eps) near the origin. The regularized upper half map is defined
/// to its right.
pub fn fold_threshold_upper(model: &NormalFormModel, eps: f64) -> Result<f64> {
    let c = model.coefficients()?;
    let f = |x: f64| model.xplus.f2.eval(x, eps);
    crate::roots::newton_1d(&f, -c.chi_p * eps, 1e-14, 50)
}

/// Return map of the regularized system on the section {y = eps, x > 0}:
/// integrates the blended field from (x0, eps) until the next upward
/// crossing of the section. Orbits that fail to make it back (captured by
/// the fold inside the band) are reported as `FoldCapture`.
pub fn p_eps(
    model: &NormalFormModel,
    phi: &Phi,
    eps: f64,
    x0: f64,
    mu: f64,
) -> Result<SectionMapResult> {
    let cls = model.classify()?;
    if cls.class != crate::model::Class::II2 {
        return Err(Error::WrongClass { expected: "II2", found: cls.class.to_string() });
    }
    if !(eps > 0.0) {
        return Err(Error::OutOfDomain { what: "regularization scale", value: eps });
    }
    let xf = fold_threshold_upper(model, eps)?;
    if x0 <= xf {
        return Err(Error::FoldCapture { x: x0, t: 0.0 });
    }
    let field = RegularizedField { model, phi, eps, mu };
    let f = |_t: f64, s: &[f64; 2]| field.eval(s[0], s[1]);
    let g = |_t: f64, s: &[f64; 2]| s[1] - eps;
    let ev = EventSpec { g: &g, direction: 1, terminal: true };
    let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, ..OdeOptions::default() };
    let t_cap = 400.0 * x0.max(0.05);
    let sol = integrate(&f, 0.0, t_cap, [x0, eps], &opts, &[ev])?;
    let (te, se) = sol.last();
    if sol.status != OdeStatus::TerminalEvent || se[0] <= 0.0 {
        return Err(Error::FoldCapture { x: se[0], t: te });
    }
    Ok(SectionMapResult { x: se[0], time: te })
}

/// Which slow-manifold branch to extend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldSide {
    Attracting,
    Repelling,
}

/// Launches on the critical manifold at x = -rho (attracting) or x = +rho
/// (repelling), integrates the chart flow forward respectively backward to
/// the section x2 = 0, and returns the arrival height. Escapes beyond
/// |yhat| = 2 are reported as `BlowupEscape`.
pub fn slow_manifold_extend(
    model: &NormalFormModel,
    phi: &Phi,
    r2: f64,
    mu2: f64,
    side: ManifoldSide,
    rho: f64,
) -> Result<f64> {
    let c = model.coefficients()?;
    if c.beta <= 0.0 {
        return Err(Error::NoCanard { beta: c.beta });
    }
    if !(rho > 0.0) || !(r2 > 0.0) {
        return Err(Error::OutOfDomain { what: "launch distance or blowup radius", value: rho.min(r2) });
    }
    let mu = r2 * mu2;
    let x_launch = match side {
        ManifoldSide::Attracting => -rho,
        ManifoldSide::Repelling => rho,
    };
    let cp = critical_manifold(model, phi, mu, x_launch)?;
    let field = crate::chart::Kappa2Field { model, phi, r2, mu2 };
    let f = |_t: f64, s: &[f64; 2]| field.eval(s[0], s[1]);
    let g_section = |_t: f64, s: &[f64; 2]| s[0];
    let g_escape = |_t: f64, s: &[f64; 2]| s[1].abs() - BLOWUP_BOUND;
    let events = [
        EventSpec { g: &g_section, direction: 0, terminal: true },
        EventSpec { g: &g_escape, direction: 1, terminal: true },
    ];
    let t_end = match side {
        ManifoldSide::Attracting => 1e4,
        ManifoldSide::Repelling => -1e4,
    };
    let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, ..OdeOptions::default() };
    let sol = integrate(&f, 0.0, t_end, [x_launch / r2, cp.y_hat], &opts, &events)?;
    let (te, se) = sol.last();
    match sol.status {
        OdeStatus::TerminalEvent if sol.events.last().unwrap().index == 0 => Ok(se[1]),
        OdeStatus::TerminalEvent => {
            Err(Error::BlowupEscape { t: te, y_hat: se[1], bound: BLOWUP_BOUND })
        }
        OdeStatus::ReachedEnd => Err(Error::DomainViolation {
            detail: format!("slow-manifold leg never reached x2 = 0 by t2 = {te}"),
        }),
    }
}

/// Signed gap between the attracting and repelling slow-manifold extensions
/// at x2 = 0. Its zero in mu2 is the maximal canard.
pub fn canard_gap(
    model: &NormalFormModel,
    phi: &Phi,
    r2: f64,
    mu2: f64,
    rho: f64,
) -> Result<f64> {
    let fwd = slow_manifold_extend(model, phi, r2, mu2, ManifoldSide::Attracting, rho)?;
    let bwd = slow_manifold_extend(model, phi, r2, mu2, ManifoldSide::Repelling, rho)?;
    Ok(fwd - bwd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vrai_canard_passage() {
        // Start on stable sliding, slide through the two-fold onto the
        // repelling branch. Passage and arrival times frozen from an
        // independent high-order quadrature of the sliding field.
        let m = NormalFormModel::example_vi3();
        let traj = integrate_filippov(
            &m,
            0.0,
            0.0,
            0.45280339127193,
            [-0.1, 0.0],
            &OdeOptions::default(),
        )
        .unwrap();
        let (xf, yf) = (*traj.x.last().unwrap(), *traj.y.last().unwrap());
        assert_relative_eq!(xf, 0.05, epsilon = 1e-8);
        assert_eq!(yf, 0.0);
        // One sliding span covering the whole run.
        assert_eq!(traj.modes.len(), 1);
        assert_eq!(traj.modes[0].mode, Mode::Sliding);
        // Passage recorded as exit + enter at the origin at the frozen time.
        let exits: Vec<_> = traj
            .events
            .iter()
            .filter(|e| e.kind == EventKind::SlidingExit)
            .collect();
        assert_eq!(exits.len(), 1);
        assert_relative_eq!(exits[0].t, 0.304156699283715, epsilon = 1e-8);
        assert!(exits[0].x.abs() < 1e-9);
        assert!(!traj.diagnostics.is_empty());
    }

    #[test]
    fn crossing_composition_stays_smooth() {
        // Invisible-invisible arcs cross the line without sliding.
        let m = NormalFormModel::example_ii2();
        let traj = integrate_filippov(
            &m,
            0.01,
            0.0,
            0.19,
            [0.05, 0.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!(traj.events.iter().all(|e| matches!(e.kind, EventKind::CrossUp | EventKind::CrossDown)));
        assert!(traj.modes.iter().all(|s| s.mode != Mode::Sliding));
        assert!(!traj.events.is_empty());
        // Event times strictly increase.
        assert!(traj.events.windows(2).all(|w| w[1].t > w[0].t));
        assert!(traj.t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn pure_smooth_arc_no_events() {
        // Far from the line with X+ pointing away: nothing happens.
        let m = NormalFormModel::example_ii2();
        let traj =
            integrate_filippov(&m, 0.0, 0.0, 0.05, [0.4, 0.5], &OdeOptions::default()).unwrap();
        assert!(traj.events.is_empty());
        assert_eq!(traj.modes.len(), 1);
        assert_eq!(traj.modes[0].mode, Mode::UpperHalf);
    }

    #[test]
    fn half_map_flows_match_external_integrator() {
        // sigma+ then sigma- of the invisible-invisible study model at
        // mu = 0.01, x0 = 0.05, frozen from DOP853 at 1e-12/1e-14.
        let m = NormalFormModel::example_ii2();
        let r = p0_numeric(&m, 0.05, 0.01).unwrap();
        assert_relative_eq!(r.x, 0.0562049998191454, epsilon = 2e-9);
        assert_relative_eq!(r.time, 0.0937215736701 + 0.0999661788781, epsilon = 1e-8);
    }

    #[test]
    fn return_map_fixed_point_defect() {
        // Newton on the exact-flow return map from the quadratic prediction.
        let m = NormalFormModel::example_ii2();
        let mu = 0.01;
        let seed = crate::model::pws_cycle(&m, mu).unwrap().x0;
        let f = |x: f64| p0_numeric(&m, x, mu).unwrap().x - x;
        let fp = crate::roots::newton_1d(&f, seed, 1e-11, 30).unwrap();
        assert!(f(fp).abs() < 1e-8, "defect {}", f(fp));
        // The quadratic prediction is close at this mu.
        assert!((fp - seed).abs() < 0.02, "fp = {fp}, seed = {seed}");
    }

    #[test]
    fn return_map_quadratic_coefficient() {
        // (P0(x) - x)/x^2 at mu = 0 approaches the discriminant -6 as
        // x0 -> 0; values frozen from the external integrator.
        let m = NormalFormModel::example_ii2();
        let r1 = (p0_numeric(&m, 0.05, 0.0).unwrap().x - 0.05) / (0.05 * 0.05);
        let r2 = (p0_numeric(&m, 0.025, 0.0).unwrap().x - 0.025) / (0.025 * 0.025);
        assert_relative_eq!(r1, -4.651112927155, epsilon = 1e-6);
        assert_relative_eq!(r2, -5.230196174921, epsilon = 1e-6);
        // The defect against the discriminant shrinks roughly linearly.
        let shrink = (r2 + 6.0).abs() / (r1 + 6.0).abs();
        assert!((0.4..0.7).contains(&shrink), "shrink factor {shrink}");
    }

    #[test]
    fn domain_violation_past_the_lower_fold() {
        let m = NormalFormModel::example_ii2();
        // Large x0 sends the upper arc image beyond mu.
        let e = p0_numeric(&m, 0.05, -0.2);
        assert!(matches!(e, Err(Error::DomainViolation { .. })));
        assert!(matches!(
            p0_numeric(&NormalFormModel::example_vi3(), 0.05, 0.0),
            Err(Error::WrongClass { .. })
        ));
        assert!(matches!(
            p0_numeric(&m, -0.1, 0.0),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn regularized_return_map_converges_linearly() {
        // |P_eps - P_0| at a fixed argument decays like eps. Mild model,
        // cubic transition; reference values frozen from the exact-flow map.
        let m = NormalFormModel::gentle_ii2();
        let phi = Phi::cubic();
        let (x0, mu) = (0.3, 0.05);
        let p0 = p0_numeric(&m, x0, mu).unwrap().x;
        assert_relative_eq!(p0, 0.297531017522, epsilon = 1e-8);
        let mut diffs = Vec::new();
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let pe = p_eps(&m, &phi, eps, x0, mu).unwrap().x;
            diffs.push((pe - p0).abs());
        }
        let s1 = (diffs[0] / diffs[1]).log2();
        let s2 = (diffs[1] / diffs[2]).log2();
        assert!((s1 - 1.0).abs() < 0.15, "slope {s1}");
        assert!((s2 - 1.0).abs() < 0.15, "slope {s2}");
    }

    #[test]
    fn fold_capture_below_threshold() {
        let m = NormalFormModel::gentle_ii2();
        let phi = Phi::cubic();
        let xf = fold_threshold_upper(&m, 1e-2).unwrap();
        // chi+ = 0: threshold at the origin.
        assert!(xf.abs() < 1e-10);
        assert!(matches!(
            p_eps(&m, &phi, 1e-2, xf - 1e-3, 0.05),
            Err(Error::FoldCapture { .. })
        ));
    }

    #[test]
    fn slow_manifold_gap_brackets_the_canard() {
        // Signs of the gap on either side of the maximal canard, frozen from
        // the independent chart integration.
        let m = NormalFormModel::example_vi3();
        let phi = Phi::cubic();
        let g_lo = canard_gap(&m, &phi, 0.1, -8.2e-3, DEFAULT_RHO).unwrap();
        let g_hi = canard_gap(&m, &phi, 0.1, -7.5e-3, DEFAULT_RHO).unwrap();
        assert!(g_lo < 0.0 && g_hi > 0.0, "gap({}) = {g_lo}, gap({}) = {g_hi}", -8.2e-3, -7.5e-3);
        assert_relative_eq!(g_lo, -0.000719268, epsilon = 5e-7);
        assert_relative_eq!(g_hi, 0.000665991, epsilon = 5e-7);
    }

    #[test]
    fn repelling_sliding_start_is_diagnosed_not_fatal() {
        let m = NormalFormModel::example_vi3();
        // x = 0.3 > mu = 0.1 sits on the repelling branch.
        let traj =
            integrate_filippov(&m, 0.1, 0.0, 0.2, [0.3, 0.0], &OdeOptions::default()).unwrap();
        assert!(!traj.diagnostics.is_empty());
        assert_eq!(traj.modes.first().map(|s| s.mode), Some(Mode::Sliding));
    }
}
