//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symop::algebra::{normal_order, vacuum_contraction, LadderOperator, OperatorWord};
use symop::devices::{
    apply_filter, beam_splitter, phase_shifter, polarization_rotator, BogoliubovMap, FilterSpec,
    LinearMap, LossyChannel, ModeRegistry,
};
use symop::experiments::{hom_vacuum_terms, linspace, run_hom, sweep_hom, HomConfig};
use symop::modes::{GaussianEnvelope, ModeLabel, PathId, Polarization, C64};
use symop::oracle::{permanent, permanent_naive};
use symop::par::Execution;
use symop::selfcheck::{random_mode, run_selfcheck, run_suite, Suite};
use symop::states::{inner_product, path_number_operator, DensityOperator, KetState};

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(lines: &[Line]) -> bool {
    for l in lines {
        println!(
            "criterion {} [{}] {}: {}",
            l.id,
            if l.pass { "PASS" } else { "FAIL" },
            l.name,
            l.detail
        );
    }
    lines.iter().all(|l| l.pass)
}

// ---------- independent reference values ----------

/// |γ|² for Gaussian photons from the closed form of the envelope overlap.
fn analytic_gamma_sq(s1: f64, s2: f64, dtau: f64, domega: f64, pol_sq: f64) -> f64 {
    let ss = s1 * s1 + s2 * s2;
    (2.0 * s1 * s2 / ss)
        * (-dtau * dtau / (2.0 * ss) - 2.0 * s1 * s1 * s2 * s2 * domega * domega / ss).exp()
        * pol_sq
}

/// `∫ conj(ζ_a(t)) ζ_b(t) dt` by the trapezoid rule, written out here
/// without touching the library's overlap routines.
fn trapezoid_overlap(a: &GaussianEnvelope, b: &GaussianEnvelope) -> C64 {
    let zeta = |g: &GaussianEnvelope, t: f64| {
        let s = g.sigma();
        let x = t - g.tau();
        let amp = (2.0 * PI * s * s).powf(-0.25) * (-x * x / (4.0 * s * s)).exp();
        C64::from_polar(amp, -g.omega0() * x)
    };
    let lo = (a.tau() - 12.0 * a.sigma()).min(b.tau() - 12.0 * b.sigma());
    let hi = (a.tau() + 12.0 * a.sigma()).max(b.tau() + 12.0 * b.sigma());
    let n = 1 << 14;
    let dt = (hi - lo) / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..=n {
        let t = lo + i as f64 * dt;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += zeta(a, t).conj() * zeta(b, t) * w;
    }
    acc * dt
}

fn reference_overlap(a: &ModeLabel, b: &ModeLabel) -> C64 {
    if a.path() != b.path() {
        return C64::new(0.0, 0.0);
    }
    let (ga, gb) = match (a.envelope(), b.envelope()) {
        (symop::modes::Envelope::Gaussian(x), symop::modes::Envelope::Gaussian(y)) => (x, y),
        _ => unreachable!("acceptance cases use Gaussian envelopes"),
    };
    let (pa, pb) = (a.polarization(), b.polarization());
    let pol = pa.h().conj() * pb.h() + pa.v().conj() * pb.v();
    trapezoid_overlap(ga, gb) * pol
}

// ---------- criteria ----------

fn hom_dip() -> Line {
    let h = Polarization::horizontal();
    let config = HomConfig {
        sigma1: 1.0,
        sigma2: 1.0,
        omega0: 3.0,
        pol1: h,
        pol2: h,
        delta_tau: linspace(-5.0, 5.0, 41),
        delta_omega: linspace(-5.0, 5.0, 41),
    };
    let start = Instant::now();
    let result = sweep_hom(&config, Execution::Parallel);
    let elapsed = start.elapsed().as_secs_f64();
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            return Line {
                id: 1,
                name: "HOM dip sweep",
                pass: false,
                detail: format!("sweep failed: {e}"),
            }
        }
    };
    let mut max_err: f64 = 0.0;
    let mut origin = f64::NAN;
    let mut far: f64 = 0.0;
    for c in &result.cells {
        let expected = 0.5 * (1.0 - analytic_gamma_sq(1.0, 1.0, c.delta_tau, c.delta_omega, 1.0));
        max_err = max_err.max((c.p_coinc - expected).abs());
        if c.delta_tau == 0.0 && c.delta_omega == 0.0 {
            origin = c.p_coinc.abs();
        }
        if c.delta_omega.abs() == 5.0 {
            far = far.max((c.p_coinc - 0.5).abs());
        }
    }
    let pass = result.cells.len() == 41 * 41 && max_err < 1e-10 && origin < 1e-12 && far < 1e-10 && elapsed < 10.0;
    Line {
        id: 1,
        name: "HOM dip sweep",
        pass,
        detail: format!(
            "41x41 cells, max |P - P_analytic| = {max_err:.2e} (< 1e-10), P(0,0) = {origin:.2e} (< 1e-12), \
             max |P - 0.5| at |dw| = 5 is {far:.2e} (< 1e-10), {elapsed:.2} s (< 10 s)"
        ),
    }
}

fn two_photon_inner_product() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let cases = 120;
    let mut inner_err: f64 = 0.0;
    let mut term_err: f64 = 0.0;
    let mut combo_err: f64 = 0.0;
    for _ in 0..cases {
        let m: Vec<ModeLabel> = (0..2).map(|_| random_mode(&mut rng, "p")).collect();
        let n: Vec<ModeLabel> = (0..2).map(|_| random_mode(&mut rng, "p")).collect();
        let ov = reference_overlap;
        let expected = ov(&m[0], &n[0]) * ov(&m[1], &n[1]) + ov(&m[0], &n[1]) * ov(&m[1], &n[0]);
        let got = inner_product(&KetState::product(&m), &KetState::product(&n)).unwrap();
        inner_err = inner_err.max((got - expected).norm());

        // photons on two input arms for the four-term check
        let p1 = random_mode(&mut rng, "arm1");
        let p2 = random_mode(&mut rng, "arm2");
        let gamma = reference_overlap(&p1.with_path(PathId::named("arm2")), &p2);
        let g2 = gamma.norm_sqr();
        let terms = hom_vacuum_terms(&p1, &p2).unwrap();
        let expected_terms = [1.0, 1.0, g2, g2];
        for (t, e) in terms.iter().zip(expected_terms) {
            term_err = term_err.max((t - e).norm());
        }
        let combined = ((terms[0] + terms[1] - terms[2] - terms[3]) / 4.0).re;
        let hom = run_hom(&p1, &p2).unwrap();
        combo_err = combo_err
            .max((combined - 0.5 * (1.0 - g2)).abs())
            .max((hom.p_coinc - combined).abs());
    }
    Line {
        id: 2,
        name: "two-photon inner product and HOM terms",
        pass: inner_err < 1e-10 && term_err < 1e-10 && combo_err < 1e-10,
        detail: format!(
            "{cases} random pairs, inner product err {inner_err:.2e}, four-term err {term_err:.2e}, \
             P_coinc combination err {combo_err:.2e} (all < 1e-10)"
        ),
    }
}

fn permanent_identity() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9E2);
    let per_n = 200;
    let mut max_err: f64 = 0.0;
    let mut ryser_vs_naive: f64 = 0.0;
    let mut mismatched_nonzero = 0;
    for n in 1..=5usize {
        for _ in 0..per_n {
            let ann: Vec<ModeLabel> = (0..n).map(|_| random_mode(&mut rng, "p")).collect();
            let cre: Vec<ModeLabel> = (0..n).map(|_| random_mode(&mut rng, "p")).collect();
            let gram = DMatrix::from_fn(n, n, |i, j| reference_overlap(&ann[i], &cre[j]));
            let perm = permanent(&gram).unwrap();
            if n <= 4 {
                ryser_vs_naive = ryser_vs_naive.max((perm - permanent_naive(&gram).unwrap()).norm());
            }
            let word: OperatorWord = ann
                .iter()
                .cloned()
                .map(LadderOperator::annihilation)
                .chain(cre.iter().cloned().map(LadderOperator::creation))
                .collect();
            let symbolic = normal_order(&word).unwrap().vacuum_expectation();
            max_err = max_err.max((symbolic - perm).norm());
            let extra = random_mode(&mut rng, "p");
            let mut longer = cre.clone();
            longer.push(extra);
            if vacuum_contraction(&ann, &longer).unwrap() != C64::new(0.0, 0.0) {
                mismatched_nonzero += 1;
            }
            let short: OperatorWord = ann
                .iter()
                .skip(1)
                .cloned()
                .map(LadderOperator::annihilation)
                .chain(cre.iter().cloned().map(LadderOperator::creation))
                .collect();
            if normal_order(&short).unwrap().vacuum_expectation() != C64::new(0.0, 0.0) {
                mismatched_nonzero += 1;
            }
        }
    }
    Line {
        id: 3,
        name: "permanent oracle equivalence",
        pass: max_err < 1e-9 && ryser_vs_naive < 1e-12 && mismatched_nonzero == 0,
        detail: format!(
            "n = 1..5 x {per_n} cases, max err {max_err:.2e} (< 1e-9), Ryser vs naive {ryser_vs_naive:.2e} \
             (< 1e-12), nonzero mismatched-count expectations: {mismatched_nonzero}"
        ),
    }
}

fn fock_oracle() -> Line {
    let seed = 0xF0C4;
    let cases = 150;
    let suites = [Suite::FockInnerProduct, Suite::BeamSplitter, Suite::Expectation];
    let reports: Vec<_> = suites
        .iter()
        .map(|&s| run_suite(s, seed, cases, Execution::Parallel))
        .collect();
    let pass = reports.iter().all(|r| r.passed() && r.max_error < 1e-9);
    let detail = reports
        .iter()
        .map(|r| format!("{} {:.2e}", r.suite.name(), r.max_error))
        .collect::<Vec<_>>()
        .join(", ");
    Line {
        id: 4,
        name: "truncated Fock oracle equivalence",
        pass,
        detail: format!("{cases} seeded cases each: {detail} (all < 1e-9)"),
    }
}

fn channels() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1055);
    let a = PathId::named("a");
    let mut scale_err: f64 = 0.0;
    let mut trace_err: f64 = 0.0;
    let mut states = Vec::new();
    for photons in [1usize, 2] {
        for _ in 0..10 {
            let pool: Vec<ModeLabel> = (0..3).map(|_| random_mode(&mut rng, "a")).collect();
            let bystander = random_mode(&mut rng, "b");
            let mut psi = KetState::from_polynomial(symop::algebra::OperatorPolynomial::zero()).unwrap();
            for _ in 0..rng.random_range(1..=3) {
                let mut modes: Vec<ModeLabel> =
                    (0..photons).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
                if rng.random_bool(0.3) {
                    modes.push(bystander.clone());
                }
                let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                psi = psi.add(&KetState::product(&modes).scale(c));
            }
            states.push(psi.normalize().unwrap());
        }
    }
    for psi in &states {
        let rho = DensityOperator::from_ket(psi);
        let n = path_number_operator(&rho.modes(), &a).unwrap();
        let before = rho.expectation(&n).unwrap().re;
        for eta in [0.0, 0.25, 0.5, 1.0] {
            let out = LossyChannel::new(eta, a.clone()).unwrap().apply(psi).unwrap();
            let env: BTreeSet<PathId> = [out.environment.clone()].into_iter().collect();
            let reduced = DensityOperator::from_ket(&out.state).partial_trace(&env).unwrap();
            let after = reduced.expectation(&n).unwrap().re;
            scale_err = scale_err.max((after - eta * before).abs());
            trace_err = trace_err.max((reduced.trace().unwrap() - 1.0).norm());
        }
    }
    let diag = KetState::single_photon(
        ModeLabel::gaussian("a", 1.0, 0.0, 2.0, Polarization::diagonal()).unwrap(),
    );
    let polarizer = FilterSpec::polarizer(&Polarization::horizontal());
    let (p, _) = apply_filter(&polarizer, &a, &diag)
        .unwrap()
        .postselect_transmitted()
        .unwrap();
    let pol_err = (p - 0.5).abs();
    Line {
        id: 5,
        name: "channel properties",
        pass: scale_err < 1e-10 && trace_err < 1e-10 && pol_err < 1e-12,
        detail: format!(
            "{} states (1 and 2 photons) x eta in {{0, 0.25, 0.5, 1}}: <n> scaling err {scale_err:.2e}, \
             trace err {trace_err:.2e} (< 1e-10); polarizer transmission err {pol_err:.2e} (< 1e-12)",
            states.len()
        ),
    }
}

fn invariants() -> Line {
    let (a, b) = (PathId::named("a"), PathId::named("b"));
    let modes = vec![
        ModeLabel::gaussian("a", 1.0, 0.0, 1.0, Polarization::horizontal()).unwrap(),
        ModeLabel::gaussian("a", 1.3, 0.4, 1.2, Polarization::diagonal()).unwrap(),
        ModeLabel::gaussian("b", 0.8, -0.3, 0.9, Polarization::right_circular()).unwrap(),
    ];
    let reg = ModeRegistry::new(modes.clone());
    let half = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut devices_ok = beam_splitter(half, half, &a, &b, &reg).is_ok()
        && phase_shifter(0.7, &a, &reg).is_ok()
        && polarization_rotator(0.3, &b, &reg).is_ok()
        && BogoliubovMap::amplifier(2.0, &a, &reg).is_ok()
        && LossyChannel::new(0.4, b.clone()).unwrap().bogoliubov(&reg).is_ok();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let shear = DMatrix::from_row_slice(2, 2, &[one, one, zero, one]);
    let orthogonal = vec![modes[0].clone(), modes[2].clone()];
    let rejected = LinearMap::new(orthogonal, shear).is_err();
    devices_ok &= rejected;

    let report = run_selfcheck(20240917, 100, Execution::Parallel);
    for line in report.to_string().lines() {
        println!("    {line}");
    }
    Line {
        id: 6,
        name: "algebraic invariant suite",
        pass: devices_ok && report.passed() && report.suites.len() == Suite::ALL.len(),
        detail: format!(
            "standard devices accepted and non-unitary 2x2 rejected: {devices_ok}; selfcheck seed 20240917 \
             x 100 cases over {} suites passed: {}",
            report.suites.len(),
            report.passed()
        ),
    }
}

fn main() -> ExitCode {
    let lines = vec![
        hom_dip(),
        two_photon_inner_product(),
        permanent_identity(),
        fock_oracle(),
        channels(),
        invariants(),
    ];
    if report(&lines) {
        println!("acceptance: all {} criteria passed", lines.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
