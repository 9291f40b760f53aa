use thiserror::Error;

/// Errors across the analysis pipeline.
///
/// Variants carry enough context to diagnose a failure without re-running:
/// offending inputs, iteration counts, residuals, or the partial result when
/// one exists (branch continuation keeps everything computed so far).
#[derive(Debug, Error)]
pub enum Error {
    /// Model data violates the normal-form contract: tangency constants not
    /// zero, the unit x-coefficient missing, delta not in {-1, +1}, a zero
    /// alpha*beta product, a zero Omega, or an invalid transition function.
    #[error("degenerate model data: {reason}")]
    DegenerateModel { reason: String },

    /// A sliding-flow quantity was requested at a point off the closure of
    /// the sliding set.
    #[error("x = {x} is not in the closure of a sliding region")]
    NotSliding { x: f64 },

    /// Pseudo-equilibria require alpha*delta < 0; this model has none.
    #[error("no pseudo-equilibrium: alpha*delta = {alpha_delta} is not negative")]
    NoPseudoEquilibrium { alpha_delta: f64 },

    /// Operation is restricted to a singularity class the model is not in.
    #[error("operation requires class {expected}, model is {found}")]
    WrongClass { expected: &'static str, found: String },

    /// No admissible closed orbit for the requested data (sign conditions of
    /// the return-map fixed point fail).
    #[error("no limit cycle: {reason}")]
    NoCycle { reason: String },

    /// Transition-function derivative order outside the supported range 0..=3.
    #[error("derivative order {order} unavailable (supported: 0..=3)")]
    OrderUnavailable { order: u32 },

    /// Argument outside the domain of a transition-function transform.
    #[error("argument {value} outside the domain of {what}")]
    OutOfDomain { what: &'static str, value: f64 },

    /// The slow-scale equilibrium does not exist for this model (the blended
    /// vector field has no interior zero; requires alpha*delta < 0).
    #[error("no slow-scale equilibrium: {reason}")]
    NoEquilibrium { reason: String },

    /// Newton iteration failed to reach tolerance.
    #[error("Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged { iterations: u32, residual: f64 },

    /// Hopf analysis applies only in the focus regime (Omega > 0 with an
    /// interior equilibrium).
    #[error("no Hopf point: {reason}")]
    NoHopf { reason: String },

    /// The transition function is not smooth enough at the evaluation point
    /// for the requested quantity.
    #[error("insufficient smoothness: {reason}")]
    InsufficientSmoothness { reason: String },

    /// Singular canards require beta > 0.
    #[error("no singular canard: beta = {beta} is not positive")]
    NoCanard { beta: f64 },

    /// A denominator of the slow flow vanished inside the evaluation range.
    #[error("singular denominator in {what} at {at}")]
    SingularDenominator { what: &'static str, at: f64 },

    /// An energy level set failed to close (no turning point found within the
    /// search range).
    #[error("level set h = {h} is not closed on the {side} side")]
    OpenLevelSet { h: f64, side: &'static str },

    /// The requested energy level reaches the canard obstruction (the pole of
    /// the slow potential); quantities there are not defined.
    #[error("level h = {h} reaches the canard obstruction near y_hat = {y_hat_c}")]
    CanardObstruction { h: f64, y_hat_c: f64 },

    /// Adaptive step size fell below the floor.
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    /// Step budget exhausted before reaching the end of the integration span.
    #[error("exceeded {max_steps} steps at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },

    /// Filippov forward evolution is not unique at this point and no
    /// distinguished continuation exists.
    #[error("Filippov forward evolution not unique at t = {t}, x = {x}")]
    ForwardNonUnique { t: f64, x: f64 },

    /// Input outside the validity domain of a return map.
    #[error("domain violation: {detail}")]
    DomainViolation { detail: String },

    /// The regularized orbit was captured near a fold and never exited the
    /// band to complete the return.
    #[error("fold capture: orbit failed to return (last x = {x}, t = {t})")]
    FoldCapture { x: f64, t: f64 },

    /// A slow-manifold extension left the trusted window before reaching the
    /// target section.
    #[error("orbit escaped |y_hat| <= {bound} at t = {t} (y_hat = {y_hat})")]
    BlowupEscape { t: f64, y_hat: f64, bound: f64 },

    /// The cycle seeding Newton near the Hopf point failed.
    #[error("cycle seed diverged: {reason}")]
    SeedDiverged { reason: String },

    /// Continuation step failed after the full halving schedule. Carries the
    /// branch computed so far.
    #[error("continuation step failed after {halvings} halvings at point {points_done}")]
    StepFailure {
        halvings: u32,
        points_done: usize,
        partial: Box<crate::continuation::Branch>,
    },

    /// The branch left the trust window (amplitude bound). Carries the branch
    /// computed so far.
    #[error("branch escaped the trust window at mu2 = {mu2} (amplitude {amp})")]
    BranchEscape {
        mu2: f64,
        amp: f64,
        partial: Box<crate::continuation::Branch>,
    },

    /// No fold (sign change of d mu2 / ds) on the branch.
    #[error("no fold detected along the branch ({points} points)")]
    NoFold { points: usize },

    /// The explosion bracket does not separate the two amplitude responses.
    #[error("no explosion in bracket [{lo}, {hi}]: {reason}")]
    NoExplosion { lo: f64, hi: f64, reason: String },

    /// The return-map derivative is numerically unreliable (strong canard
    /// segments make the monodromy exponentially ill-conditioned).
    #[error("monodromy ill-conditioned (estimate {estimate:.3e})")]
    MonodromyIllConditioned { estimate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
