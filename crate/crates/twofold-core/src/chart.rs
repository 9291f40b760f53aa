//! The scaling chart of the blowup at the two-fold: x = r2*x2, y = r2^2*yhat,
//! mu = r2*mu2, eps = r2^2. In chart time the flow is
//!
//!   x2'   = X1+(r2 x2, r2^2 yhat) (1 + phi(yhat)) + X1-(...) (1 - phi(yhat))
//!   yhat' = [X2+/r2] (1 + phi)    + [X2-/r2] (1 - phi)
//!
//! where the tangency components divide by r2 exactly because they have no
//! constant term. At r2 = 0 the system is integrable with Hamiltonian
//! H = x2^2/2 + V(yhat); the closed-form Hopf, Lyapunov, canard, and
//! discriminant quantities of this module are the leading coefficients of
//! the bifurcation analysis around that limit, and the Melnikov integrals
//! select which h-level orbits persist for r2 > 0.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::model::{Class, Coefficients, NormalFormModel};
use crate::phi::Phi;

/// How close the upper turning point may approach the potential's pole
/// height before the level set is rejected.
const POLE_EXCLUSION: f64 = 1e-6;

/// The chart vector field at fixed (r2, mu2). r2 = 0 is a valid member of
/// the family (the integrable limit), evaluated without division.
pub struct Kappa2Field<'a> {
    pub model: &'a NormalFormModel,
    pub phi: &'a Phi,
    pub r2: f64,
    pub mu2: f64,
}

impl Kappa2Field<'_> {
    pub fn eval(&self, x2: f64, y_hat: f64) -> [f64; 2] {
        let p = self.phi.value(y_hat);
        let (x, y) = (self.r2 * x2, self.r2 * self.r2 * y_hat);
        let u2 = x2 - self.mu2;
        let f1 = self.model.xplus.f1.eval(x, y) * (1.0 + p)
            + self.model.xminus.f1.eval(self.r2 * u2, y) * (1.0 - p);
        let f2 = self.model.xplus.f2.eval_scaled_over_r(x2, y_hat, self.r2) * (1.0 + p)
            + self.model.xminus.f2.eval_scaled_over_r(u2, y_hat, self.r2) * (1.0 - p);
        [f1, f2]
    }

    pub fn rhs(&self) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
        move |_t, s| self.eval(s[0], s[1])
    }
}

/// Interior equilibrium of the chart flow, found by damped 2D Newton from
/// the leading-order seed (beta*delta*mu2/Omega, yhat0*).
pub fn equilibrium_k2(field: &Kappa2Field<'_>) -> Result<[f64; 2]> {
    let c = field.model.coefficients()?;
    let y_star = crate::phi::y_hat_star0(field.model, field.phi).map_err(|_| {
        Error::NoEquilibrium {
            reason: format!(
                "alpha*delta = {} >= 0: no interior equilibrium height",
                c.alpha * c.delta
            ),
        }
    })?;
    let seed = [c.beta * c.delta / c.omega() * field.mu2, y_star];
    let mut s = Vector2::new(seed[0], seed[1]);
    for _ in 0..60 {
        let f = field.eval(s[0], s[1]);
        if f[0].abs().max(f[1].abs()) < 1e-13 {
            return Ok([s[0], s[1]]);
        }
        let j = fd_jacobian(field, s[0], s[1], 1e-7);
        let step = j
            .lu()
            .solve(&Vector2::new(f[0], f[1]))
            .ok_or(Error::SingularDenominator { what: "chart Jacobian", at: s[0] })?;
        s -= step;
        if s[1].abs() >= 1.0 {
            return Err(Error::SeedDiverged {
                reason: format!("Newton iterate left the band at yhat = {}", s[1]),
            });
        }
    }
    let f = field.eval(s[0], s[1]);
    Err(Error::NewtonDiverged { iterations: 60, residual: f[0].abs().max(f[1].abs()) })
}

fn fd_jacobian(field: &Kappa2Field<'_>, x2: f64, y_hat: f64, h: f64) -> Matrix2<f64> {
    let fxp = field.eval(x2 + h, y_hat);
    let fxm = field.eval(x2 - h, y_hat);
    let fyp = field.eval(x2, y_hat + h);
    let fym = field.eval(x2, y_hat - h);
    Matrix2::new(
        (fxp[0] - fxm[0]) / (2.0 * h),
        (fyp[0] - fym[0]) / (2.0 * h),
        (fxp[1] - fxm[1]) / (2.0 * h),
        (fyp[1] - fym[1]) / (2.0 * h),
    )
}

/// Linear type of a planar equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Saddle,
    Node,
    Focus,
    /// Zero trace with complex eigenvalues; the borderline the Hopf analysis
    /// perturbs from.
    Center,
}

/// Linearization report at a chart equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub jacobian: Matrix2<f64>,
    pub trace: f64,
    pub det: f64,
    pub regime: Regime,
}

/// Central finite-difference linearization (h = 1e-6) at a point.
pub fn linearize_k2(field: &Kappa2Field<'_>, x2: f64, y_hat: f64) -> Linearization {
    let j = fd_jacobian(field, x2, y_hat, 1e-6);
    let trace = j[(0, 0)] + j[(1, 1)];
    let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
    let disc = trace * trace - 4.0 * det;
    let regime = if det < 0.0 {
        Regime::Saddle
    } else if disc >= 0.0 {
        Regime::Node
    } else if trace == 0.0 {
        Regime::Center
    } else {
        Regime::Focus
    };
    Linearization { jacobian: j, trace, det, regime }
}

/// Checks the structural requirements shared by the closed-form chart
/// quantities: interior drift-balance height (alpha*delta < 0) and focus
/// structure there (Omega > 0).
fn hopf_context(model: &NormalFormModel, phi: &Phi) -> Result<(Coefficients, f64)> {
    let c = model.coefficients()?;
    if c.alpha * c.delta >= 0.0 {
        return Err(Error::NoHopf {
            reason: format!("alpha*delta = {} >= 0: no interior equilibrium", c.alpha * c.delta),
        });
    }
    if c.omega() <= 0.0 {
        return Err(Error::NoHopf {
            reason: format!("Omega = {} <= 0: equilibrium is a saddle, not a focus", c.omega()),
        });
    }
    let y_star = crate::phi::y_hat_star0(model, phi)?;
    Ok((c, y_star))
}

/// Leading Hopf location mu2_H / r2 of the chart equilibrium:
///
///   (1/beta) [ 2 (alpha(zeta+ + chi+) - delta(zeta- + chi-)) Omega
///              / ((alpha - delta)^2 phi'(yhat0*))
///              - (chi- + beta chi+) yhat0* ].
pub fn hopf_mu2_over_r2(model: &NormalFormModel, phi: &Phi) -> Result<f64> {
    let (c, y_star) = hopf_context(model, phi)?;
    let phi1 = phi.slope(y_star);
    let omega = c.omega();
    let ad = c.alpha - c.delta;
    Ok((2.0 * (c.alpha * (c.zeta_p + c.chi_p) - c.delta * (c.zeta_m + c.chi_m)) * omega
        / (ad * ad * phi1)
        - (c.chi_m + c.beta * c.chi_p) * y_star)
        / c.beta)
}

/// First Lyapunov coefficient of that Hopf bifurcation. Its sign decides
/// super- versus subcritical; zero is a degenerate case the formula reports
/// as is.
pub fn lyapunov_a2(model: &NormalFormModel, phi: &Phi) -> Result<f64> {
    let (c, y_star) = hopf_context(model, phi)?;
    let phi1 = phi.eval(y_star, 1)?;
    let phi2 = phi.eval(y_star, 2)?;
    let phi3 = phi.eval(y_star, 3)?;
    let omega = c.omega();
    let ad = c.alpha - c.delta;
    let b1 = c.beta + 1.0;
    let term1 = ad * phi1 * phi1 / (16.0 * omega * omega)
        * (b1 * b1 * (c.delta * c.zeta_m - c.alpha * c.zeta_p)
            - ad * ad * (c.eta_m + c.beta * c.eta_p));
    let term2 = b1 * phi2 / (16.0 * omega) * (c.delta * c.chi_m - c.alpha * c.chi_p);
    let term3 = (phi3 / (phi1 * ad) - phi2 * phi2 / (phi1 * phi1 * ad) - b1 * phi2 / omega)
        / 8.0
        * (c.delta * (c.zeta_m + c.chi_m) - c.alpha * (c.zeta_p + c.chi_p));
    Ok(term1 + term2 + term3)
}

/// Leading maximal-canard location mu2_c / r2:
///
///   -(1/beta) [ 2 Omega (eta- + beta eta+) / ((beta + 1)^2 phi'(yhat_c))
///               + yhat_c (chi- + beta chi+) ].
pub fn canard_mu2_over_r2(model: &NormalFormModel, phi: &Phi) -> Result<f64> {
    let c = model.coefficients()?;
    let y_c = crate::phi::y_hat_c(model, phi)?;
    let phi1 = phi.slope(y_c);
    let b1 = c.beta + 1.0;
    Ok(-(2.0 * c.omega() * (c.eta_m + c.beta * c.eta_p) / (b1 * b1 * phi1)
        + y_c * (c.chi_m + c.beta * c.chi_p))
        / c.beta)
}

/// Focus/node boundary of the chart equilibrium at r2 = 0:
///
///   mu2_F = 2 Omega^(3/2) / (sqrt(-w'(yhat0*)) |alpha beta|),
///
/// where w is the layer weight ratio (1 - phi)/(1 + phi). The equilibrium
/// is a focus for |mu2| < mu2_F and a node beyond; the boundary perturbs by
/// O(r2) for r2 != 0. Requires the same sign data as the Hopf bifurcation
/// (alpha*delta < 0, Omega > 0).
pub fn focus_node_mu2(model: &NormalFormModel, phi: &Phi) -> Result<f64> {
    let (c, y_star) = hopf_context(model, phi)?;
    let wp = phi.w_slope(y_star);
    Ok(2.0 * c.omega().powf(1.5) / ((-wp).sqrt() * (c.alpha * c.beta).abs()))
}

/// Stability discriminant of the O(1) cycle family. For the
/// invisible-invisible class this is the quadratic coefficient of the
/// crossing return map (also a_minus - a_plus of the half maps); for the
/// cycle-bearing visible-invisible class it is the analogous quantity with
/// the sliding-return weight (beta + 1) on the lower drift.
pub fn cycle_discriminant(model: &NormalFormModel) -> Result<f64> {
    let cls = model.classify()?;
    let c = model.coefficients()?;
    let common = 2.0 / (3.0 * c.alpha * c.beta);
    match cls.class {
        Class::II2 => Ok(common
            * (c.alpha * (c.eta_m + c.beta * c.eta_p)
                + c.beta * (c.zeta_m + c.chi_m + c.alpha * (c.zeta_p + c.chi_p)))),
        Class::VI3 => Ok(common
            * (c.alpha * (c.eta_m + c.beta * c.eta_p)
                + c.beta * (c.beta + 1.0) * (c.zeta_m + c.chi_m))),
        other => Err(Error::WrongClass { expected: "II2 or VI3", found: other.to_string() }),
    }
}

// ---------------------------------------------------------------------------
// The integrable r2 = 0 limit
// ---------------------------------------------------------------------------

/// The r2 = 0 chart system at mu2 = 0 and its conserved energy
/// H(x2, yhat) = x2^2/2 + V(yhat), where
///
///   V(yhat) = int_{yhat0*}^{yhat} (delta(1+phi) + alpha(1-phi))
///                                 / (beta(1-phi) - (1+phi)) ds.
///
/// For beta > 0 the denominator vanishes at yhat_c and V grows
/// logarithmically below it, so level sets are confined to yhat < yhat_c;
/// for beta < 0 the denominator has one sign and V grows linearly outside
/// the band.
pub struct ChartHamiltonian<'a> {
    phi: &'a Phi,
    coeffs: Coefficients,
    /// Lower integration limit of the potential: the drift-balance height.
    pub y_star: f64,
    /// Pole height of the potential for beta > 0.
    pub y_pole: Option<f64>,
}

impl<'a> ChartHamiltonian<'a> {
    /// Requires the same structure as the Hopf analysis (alpha*delta < 0,
    /// Omega > 0): level sets are nested around the chart center, and those
    /// conditions also place the pole height strictly above it.
    pub fn new(model: &'a NormalFormModel, phi: &'a Phi) -> Result<Self> {
        let (coeffs, y_star) = hopf_context(model, phi)?;
        let y_pole = if coeffs.beta > 0.0 {
            Some(crate::phi::y_hat_c(model, phi)?)
        } else {
            None
        };
        Ok(ChartHamiltonian { phi, coeffs, y_star, y_pole })
    }

    /// The blended tangency slope beta(1-phi) - (1+phi), the denominator of
    /// both the potential integrand and the yhat equation.
    pub fn denominator(&self, y_hat: f64) -> f64 {
        let p = self.phi.value(y_hat);
        self.coeffs.beta * (1.0 - p) - (1.0 + p)
    }

    fn integrand(&self, s: f64) -> f64 {
        let p = self.phi.value(s);
        let num = self.coeffs.delta * (1.0 + p) + self.coeffs.alpha * (1.0 - p);
        num / (self.coeffs.beta * (1.0 - p) - (1.0 + p))
    }

    /// Potential V(yhat) by adaptive quadrature from the drift-balance
    /// height, split at band edges. Heights at or beyond the pole (minus the
    /// exclusion margin) are out of range.
    pub fn potential(&self, y_hat: f64) -> Result<f64> {
        if let Some(yc) = self.y_pole {
            if y_hat > yc - POLE_EXCLUSION {
                return Err(Error::OutOfDomain { what: "potential height beyond pole", value: y_hat });
            }
        }
        let (v, _) = crate::quad::integrate_with_breakpoints(
            &|s| self.integrand(s),
            self.y_star,
            y_hat,
            &[-1.0, 1.0],
            1e-12,
        );
        Ok(v)
    }

    /// Conserved energy of the r2 = 0 flow.
    pub fn energy(&self, x2: f64, y_hat: f64) -> Result<f64> {
        Ok(0.5 * x2 * x2 + self.potential(y_hat)?)
    }

    /// The two heights where the h-level orbit turns (x2 = 0): the lower one
    /// below y_star, the upper one above. Errors: `OpenLevelSet` when V
    /// saturates below h on an unbounded side, `CanardObstruction` when the
    /// upper turning point would fall inside the pole exclusion.
    pub fn turning_points(&self, h: f64) -> Result<(f64, f64)> {
        if !(h > 0.0) {
            return Err(Error::OutOfDomain { what: "level-set energy", value: h });
        }
        let lower = self.turning_on_side(h, -1.0)?;
        let upper = match self.y_pole {
            Some(yc) => {
                let edge = yc - POLE_EXCLUSION;
                let v_edge = self.potential(edge)?;
                if v_edge <= h {
                    return Err(Error::CanardObstruction { h, y_hat_c: yc });
                }
                crate::roots::brent(
                    &|y| self.potential(y).unwrap() - h,
                    self.y_star,
                    edge,
                    1e-14,
                )
            }
            None => self.turning_on_side(h, 1.0)?,
        };
        Ok((lower, upper))
    }

    fn turning_on_side(&self, h: f64, dir: f64) -> Result<f64> {
        let mut d = 0.25;
        let side = if dir > 0.0 { "upper" } else { "lower" };
        loop {
            let y = self.y_star + dir * d;
            let v = self.potential(y)?;
            if v >= h {
                return Ok(crate::roots::brent(
                    &|yy| self.potential(yy).unwrap() - h,
                    self.y_star,
                    y,
                    1e-14,
                ));
            }
            d *= 2.0;
            if d > 2048.0 {
                return Err(Error::OpenLevelSet { h, side });
            }
        }
    }
}

/// One evaluation of the Melnikov pair on an h-level orbit of the r2 = 0
/// system: the persistence condition D_r2 + (mu2/r2) D_mu2 = 0 solved as
/// mu2(h)/r2 = -D_r2/D_mu2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelnikovPoint {
    pub h: f64,
    pub mu2_over_r2: f64,
    pub d_mu2: f64,
    pub d_r2: f64,
    /// Turning heights of the orbit.
    pub y_lower: f64,
    pub y_upper: f64,
    /// Half peak-to-peak x2 amplitude of the orbit, sqrt(2h).
    pub amp_x2: f64,
    /// Largest |yhat| over the orbit.
    pub amp_y_hat: f64,
}

/// Computes the Melnikov point of the h-level orbit by quadrature in yhat
/// over the half orbit with x2 of one sign (the integrands are even in x2
/// up to the orientation factor, so one half suffices; D_r2 doubles it).
pub fn melnikov_mu2(model: &NormalFormModel, phi: &Phi, h: f64) -> Result<MelnikovPoint> {
    let ham = ChartHamiltonian::new(model, phi)?;
    let c = ham.coeffs;
    let (y0, y1) = ham.turning_points(h)?;
    // Orientation: yhat' = -x2 * denominator, and the half orbit rising from
    // y0 to y1 needs yhat' > 0.
    let sgn = if ham.denominator(ham.y_star) < 0.0 { 1.0 } else { -1.0 };
    let x2_of = |y: f64| -> f64 {
        let v = ham.potential(y).unwrap_or(h);
        sgn * (2.0 * (h - v)).max(0.0).sqrt()
    };
    let breaks = [-1.0, 1.0];

    let dmu2_integrand = |y: f64| {
        let den = ham.denominator(y);
        -4.0 * c.beta * phi.slope(y) * x2_of(y) / (den * den)
    };
    let (d_mu2, _) = crate::quad::integrate_with_breakpoints(&dmu2_integrand, y0, y1, &breaks, 1e-9);

    let dr2_integrand = |y: f64| {
        let p = phi.value(y);
        let x2 = x2_of(y);
        let den = ham.denominator(y);
        let dvdy = (c.delta * (1.0 + p) + c.alpha * (1.0 - p)) / den;
        let g = (c.zeta_p * (1.0 + p) + c.zeta_m * (1.0 - p)) * x2 * x2
            + dvdy
                * ((c.eta_p * x2 * x2 + c.chi_p * y) * (1.0 + p)
                    + (c.eta_m * x2 * x2 + c.chi_m * y) * (1.0 - p));
        let y_dot = -x2 * den;
        g / y_dot
    };
    let (half, _) = crate::quad::integrate_with_breakpoints(&dr2_integrand, y0, y1, &breaks, 1e-9);
    let d_r2 = 2.0 * half;

    if d_mu2 == 0.0 {
        return Err(Error::SingularDenominator { what: "Melnikov normal integral", at: h });
    }
    Ok(MelnikovPoint {
        h,
        mu2_over_r2: -d_r2 / d_mu2,
        d_mu2,
        d_r2,
        y_lower: y0,
        y_upper: y1,
        amp_x2: (2.0 * h).sqrt(),
        amp_y_hat: y0.abs().max(y1.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{integrate, OdeOptions};
    use approx::assert_relative_eq;

    #[test]
    fn chart_field_r2_zero_limit() {
        let m = NormalFormModel::example_ii2();
        let phi = Phi::linear();
        let f = Kappa2Field { model: &m, phi: &phi, r2: 0.0, mu2: 0.5 };
        // x2' = delta(1+phi) + alpha(1-phi), yhat' = x2(1+phi) - beta(x2-mu2)(1-phi).
        let v = f.eval(0.3, 0.25);
        assert_relative_eq!(v[0], -1.0 * 1.25 + 1.0 * 0.75, epsilon = 1e-15);
        assert_relative_eq!(v[1], 0.3 * 1.25 + (0.3 - 0.5) * 0.75, epsilon = 1e-15);
    }

    #[test]
    fn chart_field_matches_unscaled_flow() {
        // For r2 > 0 the chart field is the blended field in scaled
        // variables: check the exact algebraic identity at a point.
        let m = NormalFormModel::example_vi3();
        let phi = Phi::cubic();
        let (r2, mu2) = (0.1, -0.05);
        let f = Kappa2Field { model: &m, phi: &phi, r2, mu2 };
        let (x2, yh) = (0.7, -0.4);
        let v = f.eval(x2, yh);
        let p = phi.value(yh);
        let (x, y, mu) = (r2 * x2, r2 * r2 * yh, r2 * mu2);
        let (p1, p2) = m.xplus.eval(x, y);
        let (m1, m2) = m.xminus.eval(x - mu, y);
        assert_relative_eq!(v[0], p1 * (1.0 + p) + m1 * (1.0 - p), epsilon = 1e-14);
        assert_relative_eq!(v[1], (p2 * (1.0 + p) + m2 * (1.0 - p)) / r2, epsilon = 1e-12);
    }

    #[test]
    fn equilibrium_and_regime() {
        let m = NormalFormModel::example_ii2();
        let phi = Phi::linear();
        let f = Kappa2Field { model: &m, phi: &phi, r2: 0.01, mu2: 0.2 };
        let eq = equilibrium_k2(&f).unwrap();
        let v = f.eval(eq[0], eq[1]);
        assert!(v[0].abs().max(v[1].abs()) < 1e-13);
        // Leading order: x2* = beta*delta*mu2/Omega = 0.1, yhat* = 0.
        assert!((eq[0] - 0.1).abs() < 0.02, "x2* = {}", eq[0]);
        assert!(eq[1].abs() < 0.05, "yhat* = {}", eq[1]);
        let lin = linearize_k2(&f, eq[0], eq[1]);
        // At r2 = 0, mu2 = 0: det = -Omega w'(0) = 4, trace = 0.
        let f0 = Kappa2Field { model: &m, phi: &phi, r2: 0.0, mu2: 0.0 };
        let lin0 = linearize_k2(&f0, 0.0, 0.0);
        assert_relative_eq!(lin0.det, 4.0, epsilon = 1e-8);
        assert!(lin0.trace.abs() < 1e-9);
        // Slightly past the Hopf value the focus is unstable but still a focus.
        assert_eq!(lin.regime, Regime::Focus);
        assert!(lin.trace > 0.0);
    }

    #[test]
    fn closed_form_hopf_values() {
        let ii2 = NormalFormModel::example_ii2();
        let vi3 = NormalFormModel::example_vi3();
        assert_relative_eq!(hopf_mu2_over_r2(&ii2, &Phi::linear()).unwrap(), 13.0, epsilon = 1e-12);
        assert_relative_eq!(
            hopf_mu2_over_r2(&ii2, &Phi::cubic()).unwrap(),
            26.0 / 3.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            hopf_mu2_over_r2(&vi3, &Phi::cubic()).unwrap(),
            -1.0 / 12.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            hopf_mu2_over_r2(&vi3, &Phi::septic()).unwrap(),
            -1.0 / 8.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn closed_form_lyapunov_values() {
        let ii2 = NormalFormModel::example_ii2();
        let vi3 = NormalFormModel::example_vi3();
        assert_relative_eq!(lyapunov_a2(&ii2, &Phi::linear()).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(lyapunov_a2(&ii2, &Phi::cubic()).unwrap(), -0.5, epsilon = 1e-12);
        assert_relative_eq!(lyapunov_a2(&vi3, &Phi::cubic()).unwrap(), -5.0 / 64.0, epsilon = 1e-12);
        // The septic value from the same formula; see the acceptance suite
        // for the external expectation this is compared against.
        assert_relative_eq!(lyapunov_a2(&vi3, &Phi::septic()).unwrap(), 5.0 / 144.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_canard_values() {
        let vi3 = NormalFormModel::example_vi3();
        assert_relative_eq!(
            canard_mu2_over_r2(&vi3, &Phi::cubic()).unwrap(),
            -0.0780638654723813585445214317351,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            canard_mu2_over_r2(&vi3, &Phi::septic()).unwrap(),
            -0.121877085902250657540025576506,
            epsilon = 1e-12
        );
        assert!(matches!(
            canard_mu2_over_r2(&NormalFormModel::example_ii2(), &Phi::linear()),
            Err(Error::NoCanard { .. })
        ));
    }

    #[test]
    fn discriminants() {
        assert_relative_eq!(
            cycle_discriminant(&NormalFormModel::example_ii2()).unwrap(),
            -6.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            cycle_discriminant(&NormalFormModel::example_vi3()).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-12
        );
        // Agreement with the half-map route (two independent formulas).
        let hm = crate::model::half_maps(&NormalFormModel::example_ii2()).unwrap();
        assert_relative_eq!(
            hm.discriminant(),
            cycle_discriminant(&NormalFormModel::example_ii2()).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn linear_potential_closed_form() {
        // II2 with linear phi: V = yhat^2/2 in the band, 1/2 + (|yhat|-1)
        // outside.
        let m = NormalFormModel::example_ii2();
        let phi = Phi::linear();
        let ham = ChartHamiltonian::new(&m, &phi).unwrap();
        for y in [-0.8, -0.3, 0.0, 0.4, 0.99] {
            assert_relative_eq!(ham.potential(y).unwrap(), 0.5 * y * y, epsilon = 1e-10);
        }
        for y in [-2.5, 1.7, 3.0] {
            assert_relative_eq!(
                ham.potential(y).unwrap(),
                0.5 + (y.abs() - 1.0),
                epsilon = 1e-10
            );
        }
        let (y0, y1) = ham.turning_points(0.3).unwrap();
        assert_relative_eq!(y0, -(0.6f64).sqrt(), epsilon = 1e-10);
        assert_relative_eq!(y1, (0.6f64).sqrt(), epsilon = 1e-10);
        // h above the band: linear growth region.
        let (y0, y1) = ham.turning_points(2.0).unwrap();
        assert_relative_eq!(y0, -2.5, epsilon = 1e-9);
        assert_relative_eq!(y1, 2.5, epsilon = 1e-9);
    }

    #[test]
    fn pole_confines_the_level_sets() {
        let m = NormalFormModel::example_vi3();
        let phi = Phi::cubic();
        let ham = ChartHamiltonian::new(&m, &phi).unwrap();
        let yc = ham.y_pole.unwrap();
        assert_relative_eq!(yc, 0.226073713789207990914305415592, epsilon = 1e-12);
        // Moderate level: upper turning point strictly below the pole.
        let (y0, y1) = ham.turning_points(0.2).unwrap();
        assert!(y0 < 0.0 && y1 < yc);
        // Far beyond the logarithmic wall: rejected.
        assert!(matches!(
            ham.turning_points(50.0),
            Err(Error::CanardObstruction { .. })
        ));
        assert!(matches!(
            ham.potential(yc),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn hamiltonian_is_conserved_along_the_flow() {
        // Integrate the r2 = 0 chart flow for one loop and watch H.
        let m = NormalFormModel::example_vi3();
        let phi = Phi::cubic();
        let ham = ChartHamiltonian::new(&m, &phi).unwrap();
        let field = Kappa2Field { model: &m, phi: &phi, r2: 0.0, mu2: 0.0 };
        let h0 = ham.energy(0.6, 0.0).unwrap();
        let rhs = field.rhs();
        let sol = integrate(&rhs, 0.0, 8.0, [0.6, 0.0], &OdeOptions::default(), &[]).unwrap();
        for (t, s) in sol.t.iter().zip(sol.y.iter()) {
            let h = ham.energy(s[0], s[1]).unwrap();
            assert!((h - h0).abs() < 1e-8, "H drift {} at t = {t}", h - h0);
        }
    }

    #[test]
    fn melnikov_closed_forms_linear_ii2() {
        let m = NormalFormModel::example_ii2();
        let phi = Phi::linear();
        // Inside the band (h <= 1/2): D_mu2 = pi*h and mu2/r2 = 13 - 2h.
        for h in [0.3, 0.5] {
            let p = melnikov_mu2(&m, &phi, h).unwrap();
            assert_relative_eq!(p.d_mu2, std::f64::consts::PI * h, epsilon = 1e-7);
            assert_relative_eq!(p.mu2_over_r2, 13.0 - 2.0 * h, epsilon = 1e-6);
            assert_relative_eq!(p.amp_x2, (2.0 * h).sqrt(), epsilon = 1e-15);
        }
        // A level above the band, frozen from the independent quadrature
        // oracle.
        let p = melnikov_mu2(&m, &phi, 2.0).unwrap();
        assert_relative_eq!(p.mu2_over_r2, 19.863663138, epsilon = 1e-6, max_relative = 1e-6);
        assert_relative_eq!(p.y_lower, -2.5, epsilon = 1e-9);
        assert_relative_eq!(p.y_upper, 2.5, epsilon = 1e-9);
    }

    #[test]
    fn melnikov_small_h_approaches_hopf() {
        let cases: [(NormalFormModel, Phi, f64); 4] = [
            (NormalFormModel::example_ii2(), Phi::linear(), 13.0),
            (NormalFormModel::example_ii2(), Phi::cubic(), 26.0 / 3.0),
            (NormalFormModel::example_vi3(), Phi::cubic(), -1.0 / 12.0),
            (NormalFormModel::example_vi3(), Phi::septic(), -1.0 / 8.0),
        ];
        for (m, phi, hopf) in cases {
            let p = melnikov_mu2(&m, &phi, 1e-4).unwrap();
            assert_relative_eq!(p.mu2_over_r2, hopf, epsilon = 2e-4, max_relative = 2e-3);
        }
    }

    #[test]
    fn melnikov_large_h_slope() {
        // Large levels: mu2/r2 approaches -discriminant * h.
        let m = NormalFormModel::example_ii2();
        let h = 200.0;
        for phi in [Phi::linear(), Phi::cubic()] {
            let p = melnikov_mu2(&m, &phi, h).unwrap();
            let ratio = p.mu2_over_r2 / (6.0 * h);
            assert!((ratio - 1.0).abs() < 0.01, "ratio = {ratio}");
        }
    }

    #[test]
    fn focus_node_boundary_flips_the_regime() {
        // Study model, linear profile: Omega = 2, w'(0) = -2, |alpha beta|
        // = 1, so the boundary sits at 2 * 2^(3/2) / sqrt(2) = 4.
        let m = NormalFormModel::example_ii2();
        let phi = Phi::linear();
        let f = focus_node_mu2(&m, &phi).unwrap();
        assert_relative_eq!(f, 4.0, epsilon = 1e-12);
        for (mu2, expect) in [(0.98 * f, Regime::Focus), (1.02 * f, Regime::Node)] {
            let field = Kappa2Field { model: &m, phi: &phi, r2: 0.0, mu2 };
            let eq = equilibrium_k2(&field).unwrap();
            let lin = linearize_k2(&field, eq[0], eq[1]);
            assert_eq!(lin.regime, expect, "mu2 = {mu2}");
        }
    }
}
