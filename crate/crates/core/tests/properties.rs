use std::collections::BTreeSet;

use proptest::prelude::*;

use symop::algebra::{normal_order, LadderOperator, OperatorPolynomial, OperatorWord};
use symop::devices::{
    apply_filter, beam_splitter, phase_shifter, polarization_rotator, FilterSpec, LossyChannel,
    ModeRegistry,
};
use symop::experiments::run_hom;
use symop::modes::{mode_overlap, ModeLabel, PathId, Polarization, C64};
use symop::states::{number_operator, path_number_operator, DensityOperator, KetState};

fn polarization() -> impl Strategy<Value = Polarization> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU).prop_map(|(theta, phi)| {
        let (s, c) = (theta / 2.0).sin_cos();
        Polarization::new(C64::new(c, 0.0), C64::from_polar(s, phi)).unwrap()
    })
}

fn mode(path: &'static str) -> impl Strategy<Value = ModeLabel> {
    (0.5..2.0f64, -1.5..1.5f64, -2.0..2.0f64, polarization())
        .prop_map(move |(s, t, w, p)| ModeLabel::gaussian(path, s, t, w, p).unwrap())
}

fn amplitude() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

/// Up to three product terms of one or two photons spread over paths `a` and `b`.
fn ket() -> impl Strategy<Value = KetState> {
    let photon = prop_oneof![mode("a"), mode("b")];
    prop::collection::vec((prop::collection::vec(photon, 1..=2), amplitude()), 1..=3).prop_filter_map(
        "zero state",
        |terms| {
            let mut psi = KetState::from_polynomial(OperatorPolynomial::zero()).unwrap();
            for (modes, c) in terms {
                psi = psi.add(&KetState::product(&modes).scale(c));
            }
            psi.normalize().ok()
        },
    )
}

fn total_number(rho: &DensityOperator) -> f64 {
    let modes: Vec<ModeLabel> = rho.modes().into_iter().collect();
    rho.expectation(&number_operator(&modes).unwrap()).unwrap().re
}

fn word(ops: &[(bool, ModeLabel)]) -> OperatorPolynomial {
    let w: OperatorWord = ops
        .iter()
        .map(|(cr, m)| {
            if *cr {
                LadderOperator::creation(m.clone())
            } else {
                LadderOperator::annihilation(m.clone())
            }
        })
        .collect();
    normal_order(&w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn overlap_is_hermitian_and_bounded(m in mode("a"), n in mode("a")) {
        let ab = mode_overlap(&m, &n).unwrap();
        let ba = mode_overlap(&n, &m).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-14);
        prop_assert!(ab.norm() <= 1.0 + 1e-12);
        prop_assert!((mode_overlap(&m, &m).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn passive_devices_preserve_norm_and_photon_number(
        psi in ket(),
        theta in 0.0..std::f64::consts::FRAC_PI_2,
        phi in -3.0..3.0f64,
        rot in -3.0..3.0f64,
    ) {
        let (a, b) = (PathId::named("a"), PathId::named("b"));
        let reg = ModeRegistry::from_ket(&psi);
        let (s, c) = theta.sin_cos();
        let bs = beam_splitter(C64::new(c, 0.0), C64::new(s, 0.0), &a, &b, &reg).unwrap();
        let out = bs.apply(&psi).unwrap();
        let out = phase_shifter(phi, &a, &ModeRegistry::from_ket(&out)).unwrap().apply(&out).unwrap();
        let out = polarization_rotator(rot, &b, &ModeRegistry::from_ket(&out)).unwrap().apply(&out).unwrap();
        prop_assert!((out.norm_sqr().unwrap() - 1.0).abs() < 1e-10);
        let before = total_number(&DensityOperator::from_ket(&psi));
        let after = total_number(&DensityOperator::from_ket(&out));
        prop_assert!((before - after).abs() < 1e-10, "{before} vs {after}");
    }

    #[test]
    fn loss_scales_mean_photon_number(psi in ket(), eta in 0.0..=1.0f64) {
        let a = PathId::named("a");
        let rho = DensityOperator::from_ket(&psi);
        let n = path_number_operator(&rho.modes(), &a).unwrap();
        let before = rho.expectation(&n).unwrap().re;
        let out = LossyChannel::new(eta, a.clone()).unwrap().apply(&psi).unwrap();
        let env: BTreeSet<PathId> = [out.environment.clone()].into_iter().collect();
        let reduced = DensityOperator::from_ket(&out.state).partial_trace(&env).unwrap();
        prop_assert!((reduced.trace().unwrap() - 1.0).norm() < 1e-10);
        prop_assert!((reduced.expectation(&n).unwrap().re - eta * before).abs() < 1e-10);
        prop_assert!(reduced.hermiticity_error() < 1e-10);
    }

    #[test]
    fn loss_is_linear_in_the_density_operator(
        phi in ket(),
        chi in ket(),
        w in 0.0..=1.0f64,
        eta in 0.0..=1.0f64,
    ) {
        let a = PathId::named("a");
        let channel = LossyChannel::new(eta, a).unwrap();
        let (rp, rc) = (DensityOperator::from_ket(&phi), DensityOperator::from_ket(&chi));
        let mixed = rp.scale(C64::new(w, 0.0)).add(&rc.scale(C64::new(1.0 - w, 0.0)));
        let lhs = channel.apply_density(&mixed).unwrap();
        let rhs = channel
            .apply_density(&rp)
            .unwrap()
            .scale(C64::new(w, 0.0))
            .add(&channel.apply_density(&rc).unwrap().scale(C64::new(1.0 - w, 0.0)));
        let diff = lhs.add(&rhs.scale(C64::new(-1.0, 0.0)));
        let worst = diff.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn filter_transmission_is_bounded(m in mode("a"), p in polarization(), width in 0.3..3.0f64, shift in -2.0..2.0f64) {
        let psi = KetState::single_photon(m);
        let a = PathId::named("a");
        let pol = apply_filter(&FilterSpec::polarizer(&p), &a, &psi).unwrap();
        let spec = FilterSpec::spectral(move |w: f64| C64::new((-(w - shift).powi(2) / (2.0 * width * width)).exp(), 0.0));
        let spectral = apply_filter(&spec, &a, &psi).unwrap();
        for out in [pol, spectral] {
            for (_, f) in &out.modes {
                prop_assert!(f.transmission.norm() <= 1.0 + 1e-9);
            }
            prop_assert!((out.state.norm_sqr().unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn polarizer_follows_malus_law(theta in -3.2..3.2f64, m in mode("a")) {
        let a = PathId::named("a");
        let psi = KetState::single_photon(m.with_polarization(Polarization::horizontal()));
        let analyser = Polarization::horizontal().rotated(theta);
        let expected = theta.cos().powi(2);
        match apply_filter(&FilterSpec::polarizer(&analyser), &a, &psi).unwrap().postselect_transmitted() {
            Ok((p, _)) => prop_assert!((p - expected).abs() < 1e-10, "{p} vs {expected}"),
            Err(_) => prop_assert!(expected < 1e-12),
        }
    }

    #[test]
    fn hom_is_symmetric_and_bounded(m1 in mode("in1"), m2 in mode("in2")) {
        let forward = run_hom(&m1, &m2).unwrap();
        let swapped = run_hom(&m2.with_path(PathId::named("in1")), &m1.with_path(PathId::named("in2"))).unwrap();
        prop_assert!((forward.p_coinc - swapped.p_coinc).abs() < 1e-12);
        prop_assert!(forward.p_coinc >= -1e-12 && forward.p_coinc <= 0.5 + 1e-12);
        let expected = 0.5 * (1.0 - forward.gamma.norm_sqr());
        prop_assert!((forward.p_coinc - expected).abs() < 1e-12);
    }

    #[test]
    fn adjoint_identities(
        ops_a in prop::collection::vec((any::<bool>(), mode("a")), 1..=3),
        ops_b in prop::collection::vec((any::<bool>(), mode("a")), 1..=3),
        c in amplitude(),
    ) {
        let (x, y) = (word(&ops_a).scale(c), word(&ops_b));
        prop_assert!(x.adjoint().adjoint().max_abs_diff(&x) < 1e-12);
        let lhs = x.multiply(&y).unwrap().adjoint();
        let rhs = y.adjoint().multiply(&x.adjoint()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn normal_ordering_is_idempotent(ops in prop::collection::vec((any::<bool>(), mode("a")), 1..=4)) {
        let once = word(&ops);
        let mut twice = OperatorPolynomial::zero();
        for (m, c) in once.terms() {
            let w: OperatorWord = m.to_word();
            twice = &twice + &normal_order(&w).unwrap().scale(*c);
        }
        prop_assert!(once.max_abs_diff(&twice) < 1e-12);
    }
}
