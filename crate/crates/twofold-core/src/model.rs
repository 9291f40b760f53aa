//! Piecewise-smooth normal-form models at a planar two-fold singularity and
//! the exact (epsilon = 0) Filippov objects attached to them: singularity
//! classification, sliding regions and the sliding flow, pseudo-equilibria,
//! singular canards, and the quadratic half maps of the invisible-invisible
//! case.
//!
//! A model is a pair of polynomial vector fields: the upper field in (x, y),
//! the lower field in (x - mu, y). Both tangency components vanish at their
//! fold and the upper one has unit x-coefficient; the fold offset mu is not
//! part of the model but a parameter passed to each operation, so one model
//! file serves a whole parameter sweep.

use std::fmt;

use crate::error::{Error, Result};
use crate::poly::Poly2;

/// Tolerance for normal-form-structure checks on load (unit coefficient,
/// delta in {-1, +1}, nonzero alpha, beta, Omega).
const STRUCT_TOL: f64 = 1e-12;

/// Default half-width of the x-window used when scanning sliding regions.
pub const DEFAULT_WINDOW: f64 = 0.5;

/// One smooth vector field (f1, f2) = (x-dot, y-dot) with polynomial
/// components. For lower fields the first polynomial variable is x - mu.
#[derive(Debug, Clone, PartialEq)]
pub struct PwsField {
    pub f1: Poly2,
    pub f2: Poly2,
}

impl PwsField {
    pub fn eval(&self, a: f64, b: f64) -> (f64, f64) {
        (self.f1.eval(a, b), self.f2.eval(a, b))
    }
}

/// A two-fold normal-form model: upper field X+ in (x, y), lower field X- in
/// (x - mu, y).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormModel {
    pub xplus: PwsField,
    pub xminus: PwsField,
}

/// Leading normal-form coefficients read off a model.
///
/// Upper field: x-dot = delta + zeta_p x + ..., y-dot = x + eta_p x^2 +
/// chi_p y + ...; lower field in u = x - mu: x-dot = alpha + zeta_m u + ...,
/// y-dot = -beta u + eta_m u^2 + chi_m y + ....
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub zeta_p: f64,
    pub zeta_m: f64,
    pub eta_p: f64,
    pub eta_m: f64,
    pub chi_p: f64,
    pub chi_m: f64,
}

impl Coefficients {
    /// The organizing quantity Omega = beta * delta + alpha; its sign decides
    /// saddle versus node structure throughout.
    pub fn omega(&self) -> f64 {
        self.beta * self.delta + self.alpha
    }
}

/// The seven two-fold singularity classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    VV1,
    VV2,
    VI1,
    VI2,
    VI3,
    II1,
    II2,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Class::VV1 => "VV1",
            Class::VV2 => "VV2",
            Class::VI1 => "VI1",
            Class::VI2 => "VI2",
            Class::VI3 => "VI3",
            Class::II1 => "II1",
            Class::II2 => "II2",
        };
        f.write_str(s)
    }
}

/// Whether a fold's parabolic arc lies in its own half plane (visible) or in
/// the opposite one (invisible).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tangency {
    Visible,
    Invisible,
}

/// Saddle or node structure of a pseudo-equilibrium, decided by sign(Omega).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PseudoKind {
    Saddle,
    /// `attracting` is meant in the planar Filippov sense: true exactly when
    /// the node sits on the stable sliding branch.
    Node { attracting: bool },
}

/// Orientation of a singular canard: vrai slides from the stable onto the
/// unstable branch, faux the other way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanardKind {
    Vrai,
    Faux,
}

/// Which limit-cycle phenomenon the class supports near the two-fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitCycleSupport {
    None,
    /// A cycle of the piecewise-smooth system itself (invisible-invisible).
    Pws,
    /// Cycles appear only after regularization (vrai canard with node).
    RegularizedOnly,
}

/// Full classification report for a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: Class,
    pub omega: f64,
    pub upper_tangency: Tangency,
    pub lower_tangency: Tangency,
    /// Present iff alpha * delta < 0.
    pub pseudo_equilibrium: Option<PseudoKind>,
    /// Present iff beta > 0.
    pub singular_canard: Option<CanardKind>,
    pub limit_cycles: LimitCycleSupport,
}

impl NormalFormModel {
    /// Reads the leading coefficients and validates the normal-form
    /// structure: both tangency constants are exactly zero, the upper
    /// tangency has unit x-coefficient, delta is +1 or -1, and alpha, beta,
    /// Omega are nonzero.
    pub fn coefficients(&self) -> Result<Coefficients> {
        let fail = |reason: String| Err(Error::DegenerateModel { reason });
        if self.xplus.f2.coeff(0, 0) != 0.0 {
            return fail("upper tangency component has a constant term".into());
        }
        if self.xminus.f2.coeff(0, 0) != 0.0 {
            return fail("lower tangency component has a constant term".into());
        }
        let c10 = self.xplus.f2.coeff(1, 0);
        if (c10 - 1.0).abs() > STRUCT_TOL {
            return fail(format!("upper tangency x-coefficient is {c10}, expected 1"));
        }
        let delta = self.xplus.f1.coeff(0, 0);
        if (delta.abs() - 1.0).abs() > STRUCT_TOL {
            return fail(format!("delta = {delta} is not +1 or -1"));
        }
        let alpha = self.xminus.f1.coeff(0, 0);
        let beta = -self.xminus.f2.coeff(1, 0);
        if alpha.abs() <= STRUCT_TOL || beta.abs() <= STRUCT_TOL {
            return fail(format!("alpha = {alpha}, beta = {beta}: both must be nonzero"));
        }
        let c = Coefficients {
            delta: delta.signum(),
            alpha,
            beta,
            zeta_p: self.xplus.f1.coeff(1, 0),
            zeta_m: self.xminus.f1.coeff(1, 0),
            eta_p: self.xplus.f2.coeff(2, 0),
            eta_m: self.xminus.f2.coeff(2, 0),
            chi_p: self.xplus.f2.coeff(0, 1),
            chi_m: self.xminus.f2.coeff(0, 1),
        };
        if c.omega().abs() <= STRUCT_TOL {
            return fail(format!("Omega = {} vanishes", c.omega()));
        }
        Ok(c)
    }

    /// Classifies the two-fold by the signs (delta, alpha, beta, Omega).
    ///
    /// Five of the eight sign patterns match a canonical class row directly;
    /// the remaining two (delta = -1 with alpha*beta > 0) reduce to canonical
    /// rows under the orientation-preserving renormalization that flips y and
    /// swaps the two fields (it maps delta -> sign(alpha*beta), beta -> 1/beta
    /// and preserves sign(Omega)), so classification is total on nondegenerate
    /// sign data.
    pub fn classify(&self) -> Result<Classification> {
        let c = self.coefficients()?;
        let omega = c.omega();
        let pos = |v: f64| v > 0.0;
        let class = match (c.delta > 0.0, pos(c.alpha), pos(c.beta), pos(omega)) {
            (true, true, true, _) => Class::VV1,
            (true, false, false, _) => Class::VV2,
            (true, true, false, _) => Class::VI1,
            (true, false, true, false) => Class::VI2,
            (true, false, true, true) => Class::VI3,
            (false, false, true, _) => Class::II1,
            (false, true, false, _) => Class::II2,
            (false, true, true, false) => Class::VI2,
            (false, true, true, true) => Class::VI3,
            (false, false, false, _) => Class::VI1,
        };
        let pseudo_equilibrium = if c.alpha * c.delta < 0.0 {
            Some(if omega < 0.0 {
                PseudoKind::Saddle
            } else {
                // Attracting exactly when the node lies on the stable branch,
                // i.e. beta*delta*mu/Omega < 0; that is mu-dependent, so the
                // class-level report marks the mu > 0 representative.
                PseudoKind::Node {
                    attracting: c.beta * c.delta / omega < 0.0,
                }
            })
        } else {
            None
        };
        let singular_canard = if c.beta > 0.0 {
            Some(if omega > 0.0 { CanardKind::Vrai } else { CanardKind::Faux })
        } else {
            None
        };
        let limit_cycles = match class {
            Class::II2 => LimitCycleSupport::Pws,
            Class::VI3 => LimitCycleSupport::RegularizedOnly,
            _ => LimitCycleSupport::None,
        };
        Ok(Classification {
            class,
            omega,
            upper_tangency: if c.delta > 0.0 { Tangency::Visible } else { Tangency::Invisible },
            lower_tangency: if c.alpha * c.beta > 0.0 {
                Tangency::Visible
            } else {
                Tangency::Invisible
            },
            pseudo_equilibrium,
            singular_canard,
            limit_cycles,
        })
    }

    /// Tangency component of the upper field restricted to y = 0, as a
    /// univariate polynomial in x.
    pub fn tangency_plus(&self) -> Poly2 {
        self.xplus.f2.restrict_b0()
    }

    /// Tangency component of the lower field restricted to y = 0, as a
    /// univariate polynomial in u = x - mu.
    pub fn tangency_minus(&self) -> Poly2 {
        self.xminus.f2.restrict_b0()
    }
}

/// Character of a switching-line interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// Both fields point toward the line (attracting sliding).
    StableSliding,
    /// Both fields point away from the line (repelling sliding).
    UnstableSliding,
    /// Both fields cross upward.
    CrossingUp,
    /// Both fields cross downward.
    CrossingDown,
}

/// One maximal interval of constant character on the switching line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x_left: f64,
    pub x_right: f64,
    pub kind: RegionKind,
}

/// Partition of a switching-line window into sliding and crossing intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingRegions {
    pub segments: Vec<Segment>,
    /// Tangency abscissae separating the segments (roots of either tangency
    /// polynomial inside the window).
    pub boundaries: Vec<f64>,
}

/// The switching-line character at a single x, from exact sign evaluation of
/// the two tangency polynomials. `None` on a tangency root.
pub fn region_at(model: &NormalFormModel, mu: f64, x: f64) -> Option<RegionKind> {
    let sp = model.xplus.f2.eval(x, 0.0);
    let sm = model.xminus.f2.eval(x - mu, 0.0);
    if sp == 0.0 || sm == 0.0 {
        return None;
    }
    Some(match (sp > 0.0, sm > 0.0) {
        (false, true) => RegionKind::StableSliding,
        (true, false) => RegionKind::UnstableSliding,
        (true, true) => RegionKind::CrossingUp,
        (false, false) => RegionKind::CrossingDown,
    })
}

/// Scans [-window, window] and returns the exact sliding/crossing partition.
///
/// Tangency roots are located by a sign-change scan of each tangency
/// polynomial on a fine grid followed by bisection to machine precision, so
/// segment boundaries are the polynomial roots themselves, not a tolerance
/// band around sigma.
pub fn sliding_regions(model: &NormalFormModel, mu: f64, window: f64) -> Result<SlidingRegions> {
    model.coefficients()?;
    let tp = model.tangency_plus();
    let tm = model.tangency_minus();
    let mut boundaries = Vec::new();
    boundaries.extend(poly_roots_in(&tp, -window, window, 0.0));
    boundaries.extend(poly_roots_in(&tm, -window, window, mu));
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    boundaries.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let mut cuts = vec![-window];
    cuts.extend(boundaries.iter().copied());
    cuts.push(window);
    let mut segments = Vec::new();
    for pair in cuts.windows(2) {
        let (l, r) = (pair[0], pair[1]);
        if r - l < 1e-13 {
            continue;
        }
        if let Some(kind) = region_at(model, mu, 0.5 * (l + r)) {
            match segments.last_mut() {
                Some(Segment { x_right, kind: k, .. }) if *k == kind => *x_right = r,
                _ => segments.push(Segment { x_left: l, x_right: r, kind }),
            }
        }
    }
    Ok(SlidingRegions { segments, boundaries })
}

/// Roots of a univariate polynomial (in its first variable) on [lo, hi],
/// where the evaluation argument is x - shift. Grid scan plus bisection.
fn poly_roots_in(p: &Poly2, lo: f64, hi: f64, shift: f64) -> Vec<f64> {
    const N: usize = 4096;
    let f = |x: f64| p.eval(x - shift, 0.0);
    let mut roots = Vec::new();
    let mut xa = lo;
    let mut fa = f(xa);
    for k in 1..=N {
        let xb = lo + (hi - lo) * k as f64 / N as f64;
        let fb = f(xb);
        if fa == 0.0 {
            roots.push(xa);
        } else if fa * fb < 0.0 {
            roots.push(crate::roots::bisect(&f, xa, xb, 1e-15));
        }
        xa = xb;
        fa = fb;
    }
    if fa == 0.0 {
        roots.push(xa);
    }
    roots
}

/// Sliding flow sample: the convex weight sigma on the upper field and the
/// resulting scalar velocity along the switching line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingSample {
    pub sigma: f64,
    pub x_dot: f64,
}

/// Evaluates the Filippov sliding field at x.
///
/// Inside a sliding region this is the convex combination annihilating the
/// normal component. At the two-fold itself (mu = 0, x = 0) both tangency
/// polynomials factor through x; the quotient field extends the sliding flow
/// through the singularity with the finite passage velocity Omega / (1+beta),
/// which requires beta != -1.
pub fn sliding_field(model: &NormalFormModel, mu: f64, x: f64) -> Result<SlidingSample> {
    match region_at(model, mu, x) {
        Some(RegionKind::StableSliding) | Some(RegionKind::UnstableSliding) | None => {}
        _ => return Err(Error::NotSliding { x }),
    }
    let x2p = model.xplus.f2.eval(x, 0.0);
    let x2m = model.xminus.f2.eval(x - mu, 0.0);
    let x1p = model.xplus.f1.eval(x, 0.0);
    let x1m = model.xminus.f1.eval(x - mu, 0.0);
    if mu == 0.0 {
        // Factored form: sigma and x-dot are smooth through x = 0.
        let gp = model.tangency_plus().div_a()?;
        let gm = model.tangency_minus().div_a()?;
        let (gp, gm) = (gp.eval(x, 0.0), gm.eval(x, 0.0));
        let den = gm - gp;
        if den == 0.0 {
            return Err(Error::SingularDenominator { what: "sliding field", at: x });
        }
        return Ok(SlidingSample {
            sigma: gm / den,
            x_dot: (gm * x1p - gp * x1m) / den,
        });
    }
    let den = x2m - x2p;
    if den == 0.0 {
        return Err(Error::SingularDenominator { what: "sliding field", at: x });
    }
    let sigma = x2m / den;
    Ok(SlidingSample {
        sigma,
        x_dot: sigma * x1p + (1.0 - sigma) * x1m,
    })
}

/// Which sliding branch a point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlidingBranch {
    Stable,
    Unstable,
}

/// A zero of the sliding flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoEquilibrium {
    pub x: f64,
    pub kind: PseudoKind,
    pub branch: SlidingBranch,
}

/// Locates the pseudo-equilibrium for mu != 0 by Newton on the desingularized
/// sliding numerator F = X2- X1+ - X2+ X1-, seeded at the leading-order
/// position beta*delta*mu/Omega.
///
/// Exists only when alpha*delta < 0; tolerance 1e-12 on x, at most 50
/// iterations.
pub fn pseudo_equilibrium(model: &NormalFormModel, mu: f64) -> Result<PseudoEquilibrium> {
    let c = model.coefficients()?;
    if c.alpha * c.delta >= 0.0 {
        return Err(Error::NoPseudoEquilibrium { alpha_delta: c.alpha * c.delta });
    }
    let omega = c.omega();
    let f = |x: f64| {
        model.xminus.f2.eval(x - mu, 0.0) * model.xplus.f1.eval(x, 0.0)
            - model.xplus.f2.eval(x, 0.0) * model.xminus.f1.eval(x - mu, 0.0)
    };
    let seed = c.beta * c.delta / omega * mu;
    let x = crate::roots::newton_1d(&f, seed, 1e-12, 50)?;
    let branch = match region_at(model, mu, x) {
        Some(RegionKind::StableSliding) => SlidingBranch::Stable,
        Some(RegionKind::UnstableSliding) => SlidingBranch::Unstable,
        _ => {
            return Err(Error::DomainViolation {
                detail: format!("pseudo-equilibrium root x = {x} left the sliding set"),
            })
        }
    };
    let kind = if omega < 0.0 {
        PseudoKind::Saddle
    } else {
        PseudoKind::Node { attracting: branch == SlidingBranch::Stable }
    };
    Ok(PseudoEquilibrium { x, kind, branch })
}

/// Existence and orientation of the singular canard through the two-fold.
///
/// Requires beta > 0 (sliding on both sides of the fold at mu = 0); vrai for
/// Omega > 0, faux for Omega < 0.
pub fn singular_canard(model: &NormalFormModel) -> Result<CanardKind> {
    let c = model.coefficients()?;
    if c.beta <= 0.0 {
        return Err(Error::NoCanard { beta: c.beta });
    }
    Ok(if c.omega() > 0.0 { CanardKind::Vrai } else { CanardKind::Faux })
}

/// Quadratic truncations of the two half maps of an invisible-invisible
/// two-fold: sigma0+(x0) = -x0 + a_plus x0^2 and
/// sigma0-(x1) = -x1 + 2 mu + a_minus x1^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfMaps {
    pub a_plus: f64,
    pub a_minus: f64,
}

impl HalfMaps {
    pub fn sigma_plus(&self, x0: f64) -> f64 {
        -x0 + self.a_plus * x0 * x0
    }

    pub fn sigma_minus(&self, x1: f64, mu: f64) -> f64 {
        -x1 + 2.0 * mu + self.a_minus * x1 * x1
    }

    /// Quadratic truncation of the composed return map,
    /// P0(x0) = x0 + 2 mu + discriminant * x0^2.
    pub fn discriminant(&self) -> f64 {
        self.a_minus - self.a_plus
    }
}

/// Half-map coefficients for an invisible-invisible model:
/// a_plus = -(2/3)(eta_p + zeta_p + chi_p),
/// a_minus = (2/(3 alpha beta))(alpha eta_m + beta (zeta_m + chi_m)).
pub fn half_maps(model: &NormalFormModel) -> Result<HalfMaps> {
    let cls = model.classify()?;
    if cls.class != Class::II2 {
        return Err(Error::WrongClass { expected: "II2", found: cls.class.to_string() });
    }
    let c = model.coefficients()?;
    Ok(HalfMaps {
        a_plus: -(2.0 / 3.0) * (c.eta_p + c.zeta_p + c.chi_p),
        a_minus: 2.0 / (3.0 * c.alpha * c.beta)
            * (c.alpha * c.eta_m + c.beta * (c.zeta_m + c.chi_m)),
    })
}

/// The crossing limit cycle of an invisible-invisible two-fold at quadratic
/// order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwsCycle {
    /// Starting abscissa of the cycle on the switching line, x0 > 0.
    pub x0: f64,
    pub discriminant: f64,
    pub attracting: bool,
}

/// Fixed point x0(mu) = sqrt(-2 mu / discriminant) of the quadratic return
/// map, with its stability.
///
/// Requires class II2, a cycle-bearing sign combination (mu / discriminant
/// < 0), and the half-map domain condition sigma0+(x0) < mu.
pub fn pws_cycle(model: &NormalFormModel, mu: f64) -> Result<PwsCycle> {
    let hm = half_maps(model)?;
    let disc = hm.discriminant();
    if disc == 0.0 {
        return Err(Error::DegenerateModel { reason: "zero cycle discriminant".into() });
    }
    let ratio = -2.0 * mu / disc;
    if ratio <= 0.0 {
        return Err(Error::NoCycle {
            reason: format!("-2 mu / discriminant = {ratio} is not positive"),
        });
    }
    let x0 = ratio.sqrt();
    if hm.sigma_plus(x0) >= mu {
        return Err(Error::DomainViolation {
            detail: format!("half-map image sigma0+({x0}) >= mu = {mu}"),
        });
    }
    Ok(PwsCycle { x0, discriminant: disc, attracting: disc < 0.0 })
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------

/// Parse failure with the 1-based line it occurred on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ModelParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ModelParseError {}

/// Parses the plain-text model format.
///
/// One assignment per line, `#` comments, blank lines ignored:
///
/// ```text
/// # upper field, polynomials in (x, y)
/// xplus.f1.1 = -1
/// xplus.f1.x = -7
/// xplus.f2.x = 1
/// xplus.f2.x2 = 2
/// # lower field, polynomials in (x - mu, y)
/// xminus.f1.1 = 1
/// xminus.f2.x = 1
/// ```
///
/// Keys are `<side>.<component>.<monomial>` with side `xplus`/`xminus`,
/// component `f1`/`f2`, and monomial keys as in [`Poly2::parse_key`].
/// Duplicate keys are rejected. Values use standard float syntax and
/// round-trip exactly through [`serialize_model`].
pub fn parse_model(text: &str) -> std::result::Result<NormalFormModel, ModelParseError> {
    let mut xplus = PwsField { f1: Poly2::new(), f2: Poly2::new() };
    let mut xminus = PwsField { f1: Poly2::new(), f2: Poly2::new() };
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| ModelParseError { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        let coeff: f64 = value
            .parse()
            .map_err(|_| err(format!("`{value}` is not a number")))?;
        if !coeff.is_finite() {
            return Err(err(format!("coefficient `{value}` is not finite")));
        }
        let mut parts = key.split('.');
        let (side, comp, mono) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(s), Some(c), Some(m), None) => (s, c, m),
            _ => return Err(err(format!("key `{key}` is not `side.component.monomial`"))),
        };
        let field = match side {
            "xplus" => &mut xplus,
            "xminus" => &mut xminus,
            _ => return Err(err(format!("unknown side `{side}` (expected xplus or xminus)"))),
        };
        let poly = match comp {
            "f1" => &mut field.f1,
            "f2" => &mut field.f2,
            _ => return Err(err(format!("unknown component `{comp}` (expected f1 or f2)"))),
        };
        let (i, j) = Poly2::parse_key(mono)
            .ok_or_else(|| err(format!("`{mono}` is not a monomial key")))?;
        if !seen.insert((side.to_string(), comp.to_string(), i, j)) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        poly.add_term(i, j, coeff);
    }
    Ok(NormalFormModel { xplus, xminus })
}

/// Writes a model back out in the canonical key order; parsing the output
/// reproduces the model bit for bit (coefficients print in shortest
/// round-trip form).
pub fn serialize_model(model: &NormalFormModel) -> String {
    let mut out = String::new();
    for (side, field) in [("xplus", &model.xplus), ("xminus", &model.xminus)] {
        for (comp, poly) in [("f1", &field.f1), ("f2", &field.f2)] {
            for (i, j, c) in poly.terms() {
                out.push_str(&format!("{side}.{comp}.{} = {c}\n", Poly2::format_key(i, j)));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Example models
// ---------------------------------------------------------------------------

impl NormalFormModel {
    /// Invisible-invisible study example with a crossing limit cycle:
    /// X+ = (-1 - 7x, x + 2x^2), X- = (1 - 6u, u - 2u^2) in u = x - mu.
    pub fn example_ii2() -> Self {
        NormalFormModel {
            xplus: PwsField {
                f1: Poly2::from_terms([(0, 0, -1.0), (1, 0, -7.0)]),
                f2: Poly2::from_terms([(1, 0, 1.0), (2, 0, 2.0)]),
            },
            xminus: PwsField {
                f1: Poly2::from_terms([(0, 0, 1.0), (1, 0, -6.0)]),
                f2: Poly2::from_terms([(1, 0, 1.0), (2, 0, -2.0)]),
            },
        }
    }

    /// Visible-invisible study example with a vrai canard and regularized
    /// cycles: X+ = (1 + x/2, x - x^3), X- = (-1, -2u + u^2) in u = x - mu.
    pub fn example_vi3() -> Self {
        NormalFormModel {
            xplus: PwsField {
                f1: Poly2::from_terms([(0, 0, 1.0), (1, 0, 0.5)]),
                f2: Poly2::from_terms([(1, 0, 1.0), (3, 0, -1.0)]),
            },
            xminus: PwsField {
                f1: Poly2::from_terms([(0, 0, -1.0)]),
                f2: Poly2::from_terms([(1, 0, -2.0), (2, 0, 1.0)]),
            },
        }
    }

    /// Mild invisible-invisible model with unit drift and pure quadratic
    /// tangencies: X+ = (-1, x - x^2), X- = (1, u + u^2). Useful where the
    /// study example's strong drift coefficients obscure an asymptotic
    /// regime.
    pub fn gentle_ii2() -> Self {
        NormalFormModel {
            xplus: PwsField {
                f1: Poly2::from_terms([(0, 0, -1.0)]),
                f2: Poly2::from_terms([(1, 0, 1.0), (2, 0, -1.0)]),
            },
            xminus: PwsField {
                f1: Poly2::from_terms([(0, 0, 1.0)]),
                f2: Poly2::from_terms([(1, 0, 1.0), (2, 0, 1.0)]),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coefficients_of_study_models() {
        let c = NormalFormModel::example_ii2().coefficients().unwrap();
        assert_eq!(
            (c.delta, c.alpha, c.beta, c.zeta_p, c.zeta_m, c.eta_p, c.eta_m),
            (-1.0, 1.0, -1.0, -7.0, -6.0, 2.0, -2.0)
        );
        assert_eq!((c.chi_p, c.chi_m), (0.0, 0.0));
        assert_eq!(c.omega(), 2.0);

        let c = NormalFormModel::example_vi3().coefficients().unwrap();
        assert_eq!(
            (c.delta, c.alpha, c.beta, c.zeta_p, c.zeta_m, c.eta_p, c.eta_m),
            (1.0, -1.0, 2.0, 0.5, 0.0, 0.0, 1.0)
        );
        assert_eq!(c.omega(), 1.0);
    }

    #[test]
    fn degenerate_models_are_rejected() {
        let mut m = NormalFormModel::example_ii2();
        m.xplus.f2.add_term(0, 0, 0.5);
        assert!(matches!(m.coefficients(), Err(Error::DegenerateModel { .. })));

        let mut m = NormalFormModel::example_ii2();
        m.xplus.f1.add_term(0, 0, 0.5); // delta = -0.5
        assert!(matches!(m.coefficients(), Err(Error::DegenerateModel { .. })));

        // Omega = beta*delta + alpha = 0
        let m = NormalFormModel {
            xplus: PwsField {
                f1: Poly2::from_terms([(0, 0, 1.0)]),
                f2: Poly2::from_terms([(1, 0, 1.0)]),
            },
            xminus: PwsField {
                f1: Poly2::from_terms([(0, 0, -2.0)]),
                f2: Poly2::from_terms([(1, 0, -2.0)]),
            },
        };
        assert!(matches!(m.coefficients(), Err(Error::DegenerateModel { .. })));
    }

    /// Minimal model with prescribed sign data: delta, alpha, beta free,
    /// everything else zero.
    fn signs_model(delta: f64, alpha: f64, beta: f64) -> NormalFormModel {
        NormalFormModel {
            xplus: PwsField {
                f1: Poly2::from_terms([(0, 0, delta)]),
                f2: Poly2::from_terms([(1, 0, 1.0)]),
            },
            xminus: PwsField {
                f1: Poly2::from_terms([(0, 0, alpha)]),
                f2: Poly2::from_terms([(1, 0, -beta)]),
            },
        }
    }

    #[test]
    fn classification_covers_all_sign_patterns() {
        // Canonical rows.
        let rows = [
            (1.0, 1.0, 1.0, Class::VV1),
            (1.0, -1.0, -2.0, Class::VV2),
            (1.0, 1.0, -0.5, Class::VI1),
            (1.0, -1.0, 0.5, Class::VI2),  // Omega = -0.5
            (1.0, -1.0, 2.0, Class::VI3),  // Omega = +1
            (-1.0, -1.0, 2.0, Class::II1),
            (-1.0, 1.0, -1.0, Class::II2),
        ];
        for (d, a, b, want) in rows {
            let got = signs_model(d, a, b).classify().unwrap();
            assert_eq!(got.class, want, "delta={d} alpha={a} beta={b}");
        }
        // Non-canonical sign patterns reduce to VI rows.
        assert_eq!(signs_model(-1.0, 1.0, 2.0).classify().unwrap().class, Class::VI2); // Omega = -1
        assert_eq!(signs_model(-1.0, 3.0, 2.0).classify().unwrap().class, Class::VI3); // Omega = +1
        assert_eq!(signs_model(-1.0, -1.0, -2.0).classify().unwrap().class, Class::VI1);
    }

    #[test]
    fn classification_auxiliary_flags() {
        let cls = NormalFormModel::example_ii2().classify().unwrap();
        assert_eq!(cls.class, Class::II2);
        assert_eq!(cls.upper_tangency, Tangency::Invisible);
        assert_eq!(cls.lower_tangency, Tangency::Invisible);
        assert_eq!(cls.pseudo_equilibrium, Some(PseudoKind::Node { attracting: false }));
        assert_eq!(cls.singular_canard, None);
        assert_eq!(cls.limit_cycles, LimitCycleSupport::Pws);

        let cls = NormalFormModel::example_vi3().classify().unwrap();
        assert_eq!(cls.class, Class::VI3);
        assert_eq!(cls.upper_tangency, Tangency::Visible);
        assert_eq!(cls.lower_tangency, Tangency::Invisible);
        assert_eq!(cls.pseudo_equilibrium, Some(PseudoKind::Node { attracting: false }));
        assert_eq!(cls.singular_canard, Some(CanardKind::Vrai));
        assert_eq!(cls.limit_cycles, LimitCycleSupport::RegularizedOnly);
    }

    #[test]
    fn sliding_partition_vi3() {
        let m = NormalFormModel::example_vi3();
        // beta x (x - mu) > 0 at leading order: stable for x < 0, crossing on
        // (0, mu), unstable for x > mu (the cubic upper tangency closes the
        // unstable interval at x = 1).
        let sr = sliding_regions(&m, 0.2, DEFAULT_WINDOW).unwrap();
        let kinds: Vec<_> = sr.segments.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![
                RegionKind::StableSliding,
                RegionKind::CrossingUp,
                RegionKind::UnstableSliding,
            ]
        );
        assert_relative_eq!(sr.segments[0].x_right, 0.0, epsilon = 1e-12);
        assert_relative_eq!(sr.segments[1].x_right, 0.2, epsilon = 1e-12);
        assert_eq!(sr.segments[2].x_right, DEFAULT_WINDOW);

        // At mu = 0 the crossing interval collapses: stable then unstable.
        let sr = sliding_regions(&m, 0.0, DEFAULT_WINDOW).unwrap();
        let kinds: Vec<_> = sr.segments.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![RegionKind::StableSliding, RegionKind::UnstableSliding]);
    }

    #[test]
    fn sliding_partition_ii2_is_crossing_at_mu0() {
        let sr = sliding_regions(&NormalFormModel::example_ii2(), 0.0, 0.2).unwrap();
        // beta < 0: no sliding at mu = 0; the line is crossing everywhere,
        // split by the double tangency at the origin.
        assert!(sr
            .segments
            .iter()
            .all(|s| matches!(s.kind, RegionKind::CrossingUp | RegionKind::CrossingDown)));
    }

    #[test]
    fn sliding_field_through_the_two_fold() {
        let m = NormalFormModel::example_vi3();
        // Passage velocity Omega/(1+beta) = 1/3 and weight beta/(1+beta)
        // = 2/3 at the two-fold.
        let s = sliding_field(&m, 0.0, 0.0).unwrap();
        assert_relative_eq!(s.x_dot, 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(s.sigma, 2.0 / 3.0, epsilon = 1e-14);
        // Interior sample, frozen from the closed-form quotient
        // (-1 - x^2/2)/(x^2 + x - 3) at x = -0.1.
        let s = sliding_field(&m, 0.0, -0.1).unwrap();
        assert_relative_eq!(s.x_dot, 0.3252427184466019, epsilon = 1e-14);
        assert_relative_eq!(s.sigma, 0.679611650485437, epsilon = 1e-12);
        // Crossing region: not sliding.
        assert!(matches!(
            sliding_field(&m, 0.2, 0.1),
            Err(Error::NotSliding { .. })
        ));
    }

    #[test]
    fn pseudo_equilibria_of_study_models() {
        let pe = pseudo_equilibrium(&NormalFormModel::example_vi3(), 0.1).unwrap();
        // Leading order beta*delta*mu/Omega = 0.2, exact root nearby on the
        // unstable branch; Omega > 0 makes it a node, repelling there.
        assert!((pe.x - 0.2).abs() < 0.05, "x_ps = {}", pe.x);
        assert_eq!(pe.branch, SlidingBranch::Unstable);
        assert_eq!(pe.kind, PseudoKind::Node { attracting: false });

        let pe = pseudo_equilibrium(&NormalFormModel::example_ii2(), 0.01).unwrap();
        assert!((pe.x - 0.005).abs() < 5e-4, "x_ps = {}", pe.x);
        assert_eq!(pe.branch, SlidingBranch::Unstable);
        assert_eq!(pe.kind, PseudoKind::Node { attracting: false });

        // VV1 signs: alpha*delta > 0, no pseudo-equilibrium.
        let m = signs_model(1.0, 1.0, 1.0);
        assert!(matches!(
            pseudo_equilibrium(&m, 0.1),
            Err(Error::NoPseudoEquilibrium { .. })
        ));
    }

    #[test]
    fn canard_existence() {
        assert_eq!(singular_canard(&NormalFormModel::example_vi3()).unwrap(), CanardKind::Vrai);
        assert!(matches!(
            singular_canard(&NormalFormModel::example_ii2()),
            Err(Error::NoCanard { .. })
        ));
        // VI2 signs: beta > 0 but Omega < 0.
        assert_eq!(signs_model(1.0, -1.0, 0.5).classify().unwrap().class, Class::VI2);
        assert_eq!(singular_canard(&signs_model(1.0, -1.0, 0.5)).unwrap(), CanardKind::Faux);
    }

    #[test]
    fn half_maps_and_cycle() {
        let hm = half_maps(&NormalFormModel::example_ii2()).unwrap();
        assert_relative_eq!(hm.a_plus, 10.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(hm.a_minus, -8.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(hm.discriminant(), -6.0, epsilon = 1e-14);

        let cyc = pws_cycle(&NormalFormModel::example_ii2(), 0.01).unwrap();
        assert_relative_eq!(cyc.x0, (0.02f64 / 6.0).sqrt(), epsilon = 1e-14);
        assert!(cyc.attracting);

        assert!(matches!(
            pws_cycle(&NormalFormModel::example_ii2(), -0.01),
            Err(Error::NoCycle { .. })
        ));
        assert!(matches!(
            half_maps(&NormalFormModel::example_vi3()),
            Err(Error::WrongClass { .. })
        ));
    }

    #[test]
    fn model_file_round_trip() {
        for m in [
            NormalFormModel::example_ii2(),
            NormalFormModel::example_vi3(),
            NormalFormModel::gentle_ii2(),
        ] {
            let text = serialize_model(&m);
            let back = parse_model(&text).unwrap();
            assert_eq!(back, m);
            // Serialization is a fixed point.
            assert_eq!(serialize_model(&back), text);
        }
    }

    #[test]
    fn model_parse_errors_carry_line_numbers() {
        let e = parse_model("xplus.f1.1 = -1\nxplus.f2.q = 3\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_model("\n\nxplus.f1.1 == 2\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_model("xplus.f1.1 = 1\nxplus.f1.1 = 2\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("duplicate"));
        let e = parse_model("xmid.f1.1 = 1\n").unwrap_err();
        assert!(e.message.contains("side"));
    }
}
