//! Randomized invariants of the model layer, the transition functions, and
//! the scaling-chart flow.

use proptest::prelude::*;
use twofold_core::{
    integrate, pseudo_equilibrium, region_at, sliding_field, sliding_regions, CanardKind,
    ChartHamiltonian, Class, Kappa2Field, LimitCycleSupport, NormalFormModel, OdeOptions, Phi,
    Poly2, PseudoKind, PwsField, RegionKind, Tangency,
};

fn nonzero() -> impl Strategy<Value = f64> {
    prop_oneof![0.05..3.0f64, -3.0..-0.05f64]
}

/// A structurally valid model with random leading signs and random small
/// higher-order terms: f1 = lead + zeta x, f2 = x + eta x^2 + chi y on each
/// side (lower side in u = x - mu with leading -beta u).
fn random_model() -> impl Strategy<Value = NormalFormModel> {
    (
        prop_oneof![Just(-1.0), Just(1.0)],
        nonzero(),
        nonzero(),
        proptest::array::uniform6(-0.5..0.5f64),
    )
        .prop_map(|(delta, alpha, beta, [zp, zm, ep, em, cp, cm])| NormalFormModel {
            xplus: PwsField {
                f1: Poly2::from_terms([(0, 0, delta), (1, 0, zp)]),
                f2: Poly2::from_terms([(1, 0, 1.0), (2, 0, ep), (0, 1, cp)]),
            },
            xminus: PwsField {
                f1: Poly2::from_terms([(0, 0, alpha), (1, 0, zm)]),
                f2: Poly2::from_terms([(1, 0, -beta), (2, 0, em), (0, 1, cm)]),
            },
        })
}

/// Coefficient spanning many magnitudes with both signs.
fn coeff() -> impl Strategy<Value = f64> {
    (prop_oneof![Just(-1.0), Just(1.0)], -12.0..12.0f64, 1.0..10.0f64)
        .prop_map(|(s, e, m)| s * m * 10f64.powf(e))
}

fn random_poly() -> impl Strategy<Value = Poly2> {
    prop::collection::vec(((0u32..5), (0u32..4), coeff()), 0..6).prop_map(Poly2::from_terms)
}

proptest! {
    /// The class must follow from tangency visibility alone: two visible
    /// tangencies split by the canard's existence (beta sign), none split
    /// the same way, one visible splits on beta then on Omega. This is a
    /// different formulation than the classifier's sign match, so a
    /// disagreement flags a broken row.
    #[test]
    fn classification_matches_visibility_rules(m in random_model()) {
        let c = match m.coefficients() {
            Ok(c) => c,
            Err(_) => return Ok(()), // Omega within tolerance of zero
        };
        let cls = m.classify().unwrap();
        let up = c.delta > 0.0;
        let lo = c.alpha * c.beta > 0.0;
        let expected = match (up, lo) {
            (true, true) => if c.beta > 0.0 { Class::VV1 } else { Class::VV2 },
            (false, false) => if c.beta > 0.0 { Class::II1 } else { Class::II2 },
            _ => {
                if c.beta < 0.0 {
                    Class::VI1
                } else if c.omega() < 0.0 {
                    Class::VI2
                } else {
                    Class::VI3
                }
            }
        };
        prop_assert_eq!(cls.class, expected);
        prop_assert_eq!(cls.upper_tangency == Tangency::Visible, up);
        prop_assert_eq!(cls.lower_tangency == Tangency::Visible, lo);
        prop_assert_eq!(cls.singular_canard.is_some(), c.beta > 0.0);
        if let Some(k) = cls.singular_canard {
            prop_assert_eq!(k == CanardKind::Vrai, c.omega() > 0.0);
        }
        prop_assert_eq!(cls.pseudo_equilibrium.is_some(), c.alpha * c.delta < 0.0);
        if let Some(k) = cls.pseudo_equilibrium {
            prop_assert_eq!(matches!(k, PseudoKind::Saddle), c.omega() < 0.0);
        }
        let support = match cls.class {
            Class::II2 => LimitCycleSupport::Pws,
            Class::VI3 => LimitCycleSupport::RegularizedOnly,
            _ => LimitCycleSupport::None,
        };
        prop_assert_eq!(cls.limit_cycles, support);
    }

    /// Serialization prints shortest-round-trip floats, so one full cycle
    /// must reproduce the model exactly, monomial for monomial.
    #[test]
    fn model_text_round_trips(
        f1p in random_poly(), f2p in random_poly(),
        f1m in random_poly(), f2m in random_poly(),
    ) {
        let m = NormalFormModel {
            xplus: PwsField { f1: f1p, f2: f2p },
            xminus: PwsField { f1: f1m, f2: f2m },
        };
        let text = twofold_core::serialize_model(&m);
        let back = twofold_core::parse_model(&text).unwrap();
        prop_assert_eq!(&back, &m);
        // A second pass through text must be byte-identical.
        prop_assert_eq!(twofold_core::serialize_model(&back), text);
    }

    /// The clamped transition functions are odd, monotone, and pinned to
    /// +-1 outside the band.
    #[test]
    fn transition_functions_stay_monotone_in_band(
        which in 0usize..3,
        a in -5.0..5.0f64,
        b in -5.0..5.0f64,
    ) {
        let phi = [Phi::linear(), Phi::cubic(), Phi::septic()][which].clone();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(phi.value(lo) <= phi.value(hi) + 1e-15);
        for y in [lo, hi] {
            prop_assert!(phi.value(y).abs() <= 1.0 + 1e-15);
            prop_assert!((phi.value(y) + phi.value(-y)).abs() <= 1e-12);
            if y.abs() > 1.0 {
                prop_assert_eq!(phi.value(y), 1.0f64.copysign(y));
                prop_assert_eq!(phi.slope(y), 0.0);
            } else {
                prop_assert!(phi.slope(y) >= 0.0);
            }
        }
    }

    /// phi and the layer weight ratio w invert cleanly away from the band
    /// edges, where the C^1 profiles have vanishing slope and no inverse
    /// can be better conditioned than sqrt of machine precision.
    #[test]
    fn transition_inverses_round_trip(which in 0usize..3, y in -0.9..0.9f64) {
        let phi = [Phi::linear(), Phi::cubic(), Phi::septic()][which].clone();
        let v = phi.value(y);
        prop_assert!((phi.inverse(v).unwrap() - y).abs() <= 1e-8);
        let z = phi.w(y);
        prop_assert!(z > 0.0);
        prop_assert!((phi.w_inverse(z).unwrap() - y).abs() <= 1e-7);
    }

    /// The sliding/crossing partition must tile the window, alternate in
    /// kind at shared endpoints, and agree with the pointwise sign rule in
    /// each segment's interior. On sliding segments the Filippov convex
    /// weight has to cancel the normal components of the two raw fields;
    /// on crossing segments the sliding field must refuse to evaluate.
    #[test]
    fn sliding_partition_is_coherent(m in random_model(), mu in -0.2..0.2f64) {
        if m.coefficients().is_err() {
            return Ok(());
        }
        let w = 1.0;
        let regions = sliding_regions(&m, mu, w).unwrap();
        let segs = &regions.segments;
        prop_assert!(!segs.is_empty());
        prop_assert!((segs.first().unwrap().x_left + w).abs() <= 1e-12);
        prop_assert!((segs.last().unwrap().x_right - w).abs() <= 1e-12);
        for pair in segs.windows(2) {
            prop_assert!((pair[0].x_right - pair[1].x_left).abs() <= 1e-12);
            prop_assert!(pair[0].kind != pair[1].kind);
        }
        for s in segs {
            prop_assert!(s.x_left < s.x_right);
            for k in 1..=3 {
                let x = s.x_left + (s.x_right - s.x_left) * k as f64 / 4.0;
                if let Some(kind) = region_at(&m, mu, x) {
                    prop_assert_eq!(kind, s.kind);
                }
                let sp = m.xplus.f2.eval(x, 0.0);
                let sm = m.xminus.f2.eval(x - mu, 0.0);
                match s.kind {
                    RegionKind::StableSliding | RegionKind::UnstableSliding => {
                        let fs = sliding_field(&m, mu, x).unwrap();
                        prop_assert!((0.0..=1.0).contains(&fs.sigma));
                        let normal = fs.sigma * sp + (1.0 - fs.sigma) * sm;
                        prop_assert!(normal.abs() <= 1e-9 * (1.0 + sp.abs() + sm.abs()));
                        let along = fs.sigma * m.xplus.f1.eval(x, 0.0)
                            + (1.0 - fs.sigma) * m.xminus.f1.eval(x - mu, 0.0);
                        prop_assert!((fs.x_dot - along).abs() <= 1e-9 * (1.0 + along.abs()));
                    }
                    _ => {
                        prop_assert!(sliding_field(&m, mu, x).is_err());
                    }
                }
            }
        }
    }

    /// A pseudo-equilibrium is a standstill of the sliding flow: the
    /// velocity there must vanish at full polynomial order, not just in
    /// the leading truncation.
    #[test]
    fn pseudo_equilibrium_stops_the_sliding_flow(
        study in 0usize..2,
        mag in 0.001..0.1f64,
        sign in prop_oneof![Just(-1.0), Just(1.0)],
    ) {
        let m = if study == 0 { NormalFormModel::example_ii2() } else { NormalFormModel::example_vi3() };
        let mu = sign * mag;
        let pe = match pseudo_equilibrium(&m, mu) {
            Ok(pe) => pe,
            Err(_) => return Ok(()), // wrong mu sign for this model's branch
        };
        let fs = sliding_field(&m, mu, pe.x).unwrap();
        prop_assert!(fs.x_dot.abs() <= 1e-9, "residual velocity {} at x = {}", fs.x_dot, pe.x);
        // Both study models sit in rows whose pseudo-equilibrium is a node.
        let is_node = matches!(pe.kind, PseudoKind::Node { .. });
        prop_assert!(is_node);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// The unperturbed chart flow is Hamiltonian; a high-accuracy arc must
    /// hold the energy to within integrator noise at any admissible level.
    #[test]
    fn chart_energy_is_conserved_along_arcs(
        study in 0usize..2,
        h in 0.05..0.8f64,
    ) {
        let (m, phi) = if study == 0 {
            (NormalFormModel::example_ii2(), Phi::linear())
        } else {
            (NormalFormModel::example_vi3(), Phi::cubic())
        };
        let ham = ChartHamiltonian::new(&m, &phi).unwrap();
        let y0 = twofold_core::y_hat_star0(&m, &phi).unwrap();
        let v0 = ham.potential(y0).unwrap();
        prop_assume!(h > v0 + 1e-3);
        let x20 = (2.0 * (h - v0)).sqrt();
        let field = Kappa2Field { model: &m, phi: &phi, r2: 0.0, mu2: 0.0 };
        let rhs = |_t: f64, s: &[f64; 2]| field.eval(s[0], s[1]);
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..OdeOptions::default() };
        let sol = integrate(&rhs, 0.0, 0.8, [x20, y0], &opts, &[]).unwrap();
        let (_, end) = sol.last();
        let drift = (ham.energy(end[0], end[1]).unwrap() - h).abs();
        prop_assert!(drift <= 1e-9, "energy drift {drift:.3e} at level {h}");
    }
}
