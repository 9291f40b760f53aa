//! Analysis of planar piecewise-smooth systems near a two-fold of the
//! switching line, and of their smooth regularizations.
//!
//! The library covers the full pipeline on one normal form: classification
//! of the singularity from sign data, the Filippov sliding flow with its
//! pseudo-equilibria, closed-form bifurcation quantities of the regularized
//! slow-fast system in the scaling chart (Hopf offset, first Lyapunov
//! quantity, maximal-canard offset, return-map discriminant), hybrid and
//! regularized simulation, and shooting-based continuation of the limit
//! cycles born in the chart, including saddle-node detection and the canard
//! explosion.
//!
//! Modules build bottom-up: [`poly`] and [`model`] define the normal form
//! and its exact classification; [`phi`] the transition functions and the
//! regularized field; [`roots`], [`quad`], [`ode`] the numerical kernels;
//! [`chart`] the scaling-chart analysis; [`dynamics`] hybrid integration
//! and section maps; [`continuation`] the cycle branches.

pub mod chart;
pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod ode;
pub mod phi;
pub mod poly;
pub mod quad;
pub mod roots;

pub use chart::{
    canard_mu2_over_r2, cycle_discriminant, equilibrium_k2, focus_node_mu2, hopf_mu2_over_r2,
    linearize_k2, lyapunov_a2, melnikov_mu2, ChartHamiltonian, Kappa2Field, Linearization,
    MelnikovPoint, Regime,
};
pub use continuation::{
    continue_branch, floquet, hopf_start, locate_explosion, locate_fold, numeric_hopf_mu2,
    Branch, BranchPoint, ContinueOptions, ExplosionBracket, ExplosionOptions, Fold,
};
pub use dynamics::{
    canard_gap, fold_threshold_upper, integrate_filippov, integrate_smooth, p0_numeric, p_eps,
    slow_manifold_extend, EventKind, ManifoldSide, Mode, ModeSpan, SectionMapResult, TrajEvent,
    Trajectory, DEFAULT_RHO,
};
pub use error::{Error, Result};
pub use model::{
    half_maps, parse_model, pseudo_equilibrium, pws_cycle, region_at, serialize_model,
    singular_canard, sliding_field, sliding_regions, CanardKind, Class, Classification,
    Coefficients, HalfMaps, LimitCycleSupport, ModelParseError, NormalFormModel,
    PseudoEquilibrium, PseudoKind, PwsCycle, PwsField, RegionKind, Segment, SlidingBranch,
    SlidingRegions, SlidingSample, Tangency,
};
pub use ode::{integrate, EventHit, EventSpec, OdeOptions, OdeSolution, OdeStatus};
pub use poly::Poly2;
pub use phi::{critical_manifold, y_hat_c, y_hat_star0, CriticalPoint, Phi, RegularizedField};
