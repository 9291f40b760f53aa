//! Transition functions for Sotomayor-Teixeira regularization and the
//! objects built directly on them: the clamped blended field, the layer
//! equation's critical manifold, and the distinguished heights where the
//! blended tangency or drift balances.
//!
//! A transition function is an odd polynomial in ascending odd powers,
//! strictly increasing on (-1, 1) with phi(1) = 1, extended by +-1 outside
//! the band. Inside evaluations use the polynomial; outside, the clamp.
//! Evaluations exactly at +-1 use the polynomial, so band-edge derivative
//! values are the one-sided inside limits.

use crate::error::{Error, Result};
use crate::model::{NormalFormModel, RegionKind};

/// Number of interior sample points used to certify monotonicity on load.
const MONOTONE_GRID: usize = 10_000;

/// An odd polynomial transition function phi with its clamped extension.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    /// odd[k] multiplies yhat^(2k+1).
    odd: Vec<f64>,
}

impl Phi {
    /// phi(yhat) = yhat. Continuous but not C^1 at the band edge.
    pub fn linear() -> Self {
        Phi { odd: vec![1.0] }
    }

    /// phi(yhat) = (3/2) yhat - (1/2) yhat^3. C^1 at the band edge.
    pub fn cubic() -> Self {
        Phi { odd: vec![1.5, -0.5] }
    }

    /// phi(yhat) = yhat - (14/27) yhat^3 + (83/54) yhat^5 - (55/54) yhat^7.
    /// C^1 at the band edge with phi'(0) = 1.
    pub fn septic() -> Self {
        Phi { odd: vec![1.0, -14.0 / 27.0, 83.0 / 54.0, -55.0 / 54.0] }
    }

    /// Builds a transition function from ascending odd-power coefficients
    /// (index k multiplies yhat^(2k+1)). Validates phi(1) = 1 to 1e-12 and
    /// strict monotonicity on an interior grid of 10^4 points.
    pub fn from_odd_coefficients(odd: Vec<f64>) -> Result<Self> {
        if odd.is_empty() || odd.iter().any(|c| !c.is_finite()) {
            return Err(Error::DomainViolation {
                detail: "transition function needs at least one finite coefficient".into(),
            });
        }
        let phi = Phi { odd };
        let at_one: f64 = phi.odd.iter().sum();
        if (at_one - 1.0).abs() > 1e-12 {
            return Err(Error::DomainViolation {
                detail: format!("phi(1) = {at_one}, expected 1"),
            });
        }
        for k in 0..MONOTONE_GRID {
            let y = -1.0 + 2.0 * (k as f64 + 0.5) / MONOTONE_GRID as f64;
            let d = phi.poly_derivative(y, 1);
            if d <= 0.0 {
                return Err(Error::DomainViolation {
                    detail: format!("phi'({y}) = {d} is not positive inside the band"),
                });
            }
        }
        Ok(phi)
    }

    /// Raw polynomial value, no clamp.
    fn poly_value(&self, y: f64) -> f64 {
        let y2 = y * y;
        let mut acc = 0.0;
        for &c in self.odd.iter().rev() {
            acc = acc * y2 + c;
        }
        acc * y
    }

    /// Raw polynomial derivative of the given order, no clamp.
    fn poly_derivative(&self, y: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.odd.iter().enumerate() {
            let p = 2 * k + 1;
            if p < order {
                continue;
            }
            let mut fall = 1.0;
            for j in 0..order {
                fall *= (p - j) as f64;
            }
            acc += c * fall * y.powi((p - order) as i32);
        }
        acc
    }

    /// Clamped evaluation of derivative `order` (0 = value). Orders above 3
    /// are not provided.
    pub fn eval(&self, y_hat: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(Error::OrderUnavailable { order: order as u32 });
        }
        if y_hat.abs() > 1.0 {
            return Ok(if order == 0 { 1.0f64.copysign(y_hat) } else { 0.0 });
        }
        Ok(if order == 0 { self.poly_value(y_hat) } else { self.poly_derivative(y_hat, order) })
    }

    /// Clamped value, the order-0 evaluation.
    pub fn value(&self, y_hat: f64) -> f64 {
        if y_hat.abs() > 1.0 {
            1.0f64.copysign(y_hat)
        } else {
            self.poly_value(y_hat)
        }
    }

    /// Clamped first derivative.
    pub fn slope(&self, y_hat: f64) -> f64 {
        if y_hat.abs() > 1.0 {
            0.0
        } else {
            self.poly_derivative(y_hat, 1)
        }
    }

    /// Continuity class of the clamped extension at the band edge: the
    /// largest k such that derivatives 1..=k vanish at yhat = 1 (0 for the
    /// linear function, 1 for the cubic and septic ones).
    pub fn smoothness(&self) -> usize {
        for order in 1..=3 {
            if self.poly_derivative(1.0, order).abs() > 1e-12 {
                return order - 1;
            }
        }
        3
    }

    /// Inverse of phi on [-1, 1]; `v` must lie in [-1, 1].
    pub fn inverse(&self, v: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::OutOfDomain { what: "phi inverse argument", value: v });
        }
        Ok(crate::roots::brent(&|y| self.poly_value(y) - v, -1.0, 1.0, 1e-15))
    }

    /// The layer-equation weight ratio w(yhat) = (1 - phi)/(1 + phi),
    /// decreasing from +inf at yhat = -1 to 0 at yhat = 1.
    pub fn w(&self, y_hat: f64) -> f64 {
        let p = self.value(y_hat);
        (1.0 - p) / (1.0 + p)
    }

    /// Derivative of w, defined inside the band.
    pub fn w_slope(&self, y_hat: f64) -> f64 {
        let p = self.value(y_hat);
        -2.0 * self.slope(y_hat) / ((1.0 + p) * (1.0 + p))
    }

    /// Inverse of w for z > 0: the unique yhat in (-1, 1) with
    /// (1 - phi)/(1 + phi) = z.
    pub fn w_inverse(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::OutOfDomain { what: "w inverse argument", value: z });
        }
        // w = z <=> phi = (1 - z)/(1 + z), always in (-1, 1) for z > 0.
        self.inverse((1.0 - z) / (1.0 + z))
    }
}

/// Height where the blended drift delta(1+phi) + alpha(1-phi) vanishes: the
/// interior equilibrium height of the scaling-chart flow. Exists iff
/// alpha*delta < 0.
pub fn y_hat_star0(model: &NormalFormModel, phi: &Phi) -> Result<f64> {
    let c = model.coefficients()?;
    if c.alpha * c.delta >= 0.0 {
        return Err(Error::NoEquilibrium {
            reason: format!(
                "alpha*delta = {} >= 0: the blended drift never vanishes",
                c.alpha * c.delta
            ),
        });
    }
    let q = c.delta / c.alpha;
    phi.inverse((1.0 + q) / (1.0 - q))
}

/// Height where the blended tangency slope beta(1-phi) - (1+phi) vanishes:
/// the pole height of the chart potential, present only for beta > 0.
pub fn y_hat_c(model: &NormalFormModel, phi: &Phi) -> Result<f64> {
    let c = model.coefficients()?;
    if c.beta <= 0.0 {
        return Err(Error::NoCanard { beta: c.beta });
    }
    phi.inverse((c.beta - 1.0) / (c.beta + 1.0))
}

/// The regularized vector field
/// X_eps = (1/2) X+ (1 + phi(y/eps)) + (1/2) X- (1 - phi(y/eps)),
/// equal to X+ above the band and X- below it.
pub struct RegularizedField<'a> {
    pub model: &'a NormalFormModel,
    pub phi: &'a Phi,
    pub eps: f64,
    pub mu: f64,
}

impl RegularizedField<'_> {
    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        let p = self.phi.value(y / self.eps);
        let (up1, up2) = self.model.xplus.eval(x, y);
        let (lo1, lo2) = self.model.xminus.eval(x - self.mu, y);
        [
            0.5 * (up1 * (1.0 + p) + lo1 * (1.0 - p)),
            0.5 * (up2 * (1.0 + p) + lo2 * (1.0 - p)),
        ]
    }
}

/// A point of the layer equation's critical manifold over abscissa x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub y_hat: f64,
    /// True over stable sliding (the fast layer flow contracts onto it).
    pub attracting: bool,
}

/// Solves the layer equation (1+phi) X2+(x, 0) + (1-phi) X2-(x-mu, 0) = 0
/// for yhat over a sliding abscissa. Over crossing regions there is no
/// solution and the point is reported as not sliding.
pub fn critical_manifold(
    model: &NormalFormModel,
    phi: &Phi,
    mu: f64,
    x: f64,
) -> Result<CriticalPoint> {
    let region = crate::model::region_at(model, mu, x);
    let attracting = match region {
        Some(RegionKind::StableSliding) => true,
        Some(RegionKind::UnstableSliding) => false,
        _ => return Err(Error::NotSliding { x }),
    };
    let up = model.xplus.f2.eval(x, 0.0);
    let lo = model.xminus.f2.eval(x - mu, 0.0);
    // Opposing signs make the ratio positive, so w_inverse applies.
    let y_hat = phi.w_inverse(up / (-lo))?;
    Ok(CriticalPoint { y_hat, attracting })
}
