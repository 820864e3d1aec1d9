//! Seeded randomized cross-checks of the symbolic engine against the oracle
//! and against algebraic identities.
//!
//! Every case draws from its own ChaCha8 stream derived from
//! `(seed, suite, case)`, so a failing case can be replayed alone and the
//! report is identical for sequential and parallel runs.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{
    normal_order, vacuum_contraction, LadderOperator, NormalMonomial, OperatorPolynomial, OperatorWord,
};
use crate::devices::{
    beam_splitter, outcome_probability, phase_shifter, polarization_rotator, BogoliubovMap, LinearMap,
    LossyChannel, ModeRegistry, PovmOutcome,
};
use crate::error::Result;
use crate::linalg::{gram_matrix, min_eigenvalue, overlap_matrix};
use crate::modes::{Envelope, ModeLabel, PathId, Polarization, C64};
use crate::oracle::{self, embed_ket, oracle_expectation, permanent, GramBasis};
use crate::par::Execution;
use crate::states::{inner_product, DensityOperator, KetState};

/// One named family of randomized checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    PermanentIdentity,
    FockInnerProduct,
    BeamSplitter,
    Expectation,
    CcrDevices,
    Adjoint,
    NormalOrder,
    PovmCompleteness,
    GramPsd,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::PermanentIdentity,
        Suite::FockInnerProduct,
        Suite::BeamSplitter,
        Suite::Expectation,
        Suite::CcrDevices,
        Suite::Adjoint,
        Suite::NormalOrder,
        Suite::PovmCompleteness,
        Suite::GramPsd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::PermanentIdentity => "permanent-identity",
            Suite::FockInnerProduct => "fock-inner-product",
            Suite::BeamSplitter => "fock-beam-splitter",
            Suite::Expectation => "fock-expectation",
            Suite::CcrDevices => "ccr-devices",
            Suite::Adjoint => "adjoint",
            Suite::NormalOrder => "normal-order-idempotence",
            Suite::PovmCompleteness => "povm-completeness",
            Suite::GramPsd => "gram-psd",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Suite::PermanentIdentity
            | Suite::FockInnerProduct
            | Suite::BeamSplitter
            | Suite::Expectation
            | Suite::GramPsd => 1e-9,
            Suite::CcrDevices | Suite::PovmCompleteness => 1e-10,
            Suite::Adjoint | Suite::NormalOrder => 1e-12,
        }
    }

    fn index(self) -> u64 {
        Suite::ALL.iter().position(|s| *s == self).unwrap_or(0) as u64
    }

    fn run_case(self, rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
        match self {
            Suite::PermanentIdentity => permanent_case(rng),
            Suite::FockInnerProduct => inner_product_case(rng),
            Suite::BeamSplitter => beam_splitter_case(rng),
            Suite::Expectation => expectation_case(rng),
            Suite::CcrDevices => ccr_case(rng),
            Suite::Adjoint => adjoint_case(rng),
            Suite::NormalOrder => normal_order_case(rng),
            Suite::PovmCompleteness => povm_case(rng),
            Suite::GramPsd => gram_case(rng),
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the RNG stream for one case.
pub fn case_seed(seed: u64, suite: Suite, case: usize) -> u64 {
    splitmix(seed ^ splitmix((suite.index() << 32) | case as u64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseFailure {
    pub case: usize,
    pub case_seed: u64,
    pub error: f64,
    pub params: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub max_error: f64,
    /// First case over tolerance (or raising an error), by case index.
    pub failure: Option<CaseFailure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfcheckReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, s: Suite) -> Option<&SuiteReport> {
        self.suites.iter().find(|r| r.suite == s)
    }
}

impl fmt::Display for SelfcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.suites {
            writeln!(
                f,
                "{:<26} cases={:<5} max_error={:.3e} tol={:.0e} {}",
                r.suite.name(),
                r.cases,
                r.max_error,
                r.suite.tolerance(),
                if r.passed() { "ok" } else { "FAIL" }
            )?;
            if let Some(fail) = &r.failure {
                writeln!(
                    f,
                    "  failing case {} (case seed {:#018x}) error={:.3e}: {}",
                    fail.case, fail.case_seed, fail.error, fail.params
                )?;
            }
        }
        Ok(())
    }
}

/// Runs one suite for `cases` seeded cases.
pub fn run_suite(suite: Suite, seed: u64, cases: usize, exec: Execution) -> SuiteReport {
    let idx: Vec<usize> = (0..cases).collect();
    let results = exec.map(&idx, |&case| {
        let s = case_seed(seed, suite, case);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        match suite.run_case(&mut rng) {
            Ok((err, params)) => (err, params, s),
            Err(e) => (f64::INFINITY, format!("raised: {e}"), s),
        }
    });
    let mut max_error: f64 = 0.0;
    let mut failure = None;
    for (case, (err, params, s)) in results.into_iter().enumerate() {
        max_error = max_error.max(err);
        let bad = err.is_nan() || err > suite.tolerance();
        if bad && failure.is_none() {
            failure = Some(CaseFailure {
                case,
                case_seed: s,
                error: err,
                params,
            });
        }
    }
    SuiteReport {
        suite,
        cases,
        max_error,
        failure,
    }
}

/// Runs every suite; `cases = 0` yields an empty report.
pub fn run_selfcheck(seed: u64, cases: usize, exec: Execution) -> SelfcheckReport {
    let suites = if cases == 0 {
        Vec::new()
    } else {
        Suite::ALL.iter().map(|&s| run_suite(s, seed, cases, exec)).collect()
    };
    SelfcheckReport { seed, suites }
}

// ---- random generators ----

fn random_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_polarization<R: Rng>(rng: &mut R) -> Polarization {
    loop {
        if let Ok(p) = Polarization::normalized(random_c64(rng), random_c64(rng)) {
            return p;
        }
    }
}

/// Gaussian label with parameters spread enough to give overlaps well away from 0 and 1.
pub fn random_mode<R: Rng>(rng: &mut R, path: &str) -> ModeLabel {
    ModeLabel::gaussian(
        path,
        rng.random_range(0.6..1.8),
        rng.random_range(-1.2..1.2),
        rng.random_range(-1.5..1.5),
        random_polarization(rng),
    )
    .expect("parameters are in range")
}

fn random_pool<R: Rng>(rng: &mut R, path: &str, max: usize) -> Vec<ModeLabel> {
    let n = rng.random_range(1..=max);
    let mut pool: Vec<ModeLabel> = (0..n).map(|_| random_mode(rng, path)).collect();
    pool.sort();
    pool.dedup();
    pool
}

fn pick<'a, R: Rng, T>(rng: &mut R, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// Up to three terms of up to `max_photons` photons each, drawn from the pools.
fn random_ket<R: Rng>(rng: &mut R, pools: &[Vec<ModeLabel>], max_photons: usize) -> KetState {
    let terms = rng.random_range(1..=3);
    let mut psi = KetState::from_polynomial(OperatorPolynomial::zero()).expect("zero is a ket");
    for _ in 0..terms {
        let k = rng.random_range(1..=max_photons);
        let modes: Vec<ModeLabel> = (0..k)
            .map(|_| {
                let pool = pick(rng, pools);
                pick(rng, pool).clone()
            })
            .collect();
        psi = psi.add(&KetState::product(&modes).scale(random_c64(rng)));
    }
    psi
}

fn describe(modes: &[ModeLabel]) -> String {
    modes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("; ")
}

// ---- cases ----

fn permanent_case(rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let n = rng.random_range(1..=5);
    let ann: Vec<ModeLabel> = (0..n).map(|_| random_mode(rng, "p")).collect();
    let cre: Vec<ModeLabel> = (0..n).map(|_| random_mode(rng, "p")).collect();
    let expected = permanent(&overlap_matrix(&ann, &cre)?)?;
    let word: OperatorWord = ann
        .iter()
        .cloned()
        .map(LadderOperator::annihilation)
        .chain(cre.iter().cloned().map(LadderOperator::creation))
        .collect();
    let symbolic = normal_order(&word)?.vacuum_expectation();
    let dp = vacuum_contraction(&ann, &cre)?;
    // unequal counts contract to exactly zero
    let short = vacuum_contraction(&ann[1..], &cre)?;
    let mut err = (symbolic - expected).norm().max((dp - expected).norm());
    if short != C64::new(0.0, 0.0) {
        err = f64::INFINITY;
    }
    Ok((err, format!("n={n} annihilators [{}] creators [{}]", describe(&ann), describe(&cre))))
}

fn two_path_pools(rng: &mut ChaCha8Rng) -> Vec<Vec<ModeLabel>> {
    vec![random_pool(rng, "a", 3), random_pool(rng, "b", 3)]
}

fn inner_product_case(rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let pools = two_path_pools(rng);
    let psi = random_ket(rng, &pools, 3);
    let phi = random_ket(rng, &pools, 3);
    let basis = GramBasis::new(pools.concat())?;
    let symbolic = inner_product(&psi, &phi)?;
    let dense = embed_ket(&psi, &basis, 3)?.inner(&embed_ket(&phi, &basis, 3)?);
    let err = (symbolic - dense).norm() / (1.0 + dense.norm());
    Ok((err, format!("psi = {} | phi = {}", psi.polynomial(), phi.polynomial())))
}

fn beam_splitter_case(rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let (pa, pb) = (PathId::named("a"), PathId::named("b"));
    let internal = random_pool(rng, "a", 3);
    let pools = vec![
        internal.clone(),
        internal.iter().map(|m| m.with_path(pb.clone())).collect(),
    ];
    let psi = random_ket(rng, &pools, 3);
    let theta = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
    let phase = C64::from_polar(1.0, rng.random_range(-3.0..3.0));
    let (c, s) = (phase * theta.cos(), phase * theta.sin());

    let bs = beam_splitter(c, s, &pa, &pb, &ModeRegistry::from_ket(&psi))?;
    let symbolic = bs.apply(&psi)?;

    let arm = GramBasis::new(internal)?;
    let basis = GramBasis::block_diagonal(&[arm.clone(), arm.relocated(&pb)]);
    let w = oracle::beam_splitter_modes(c, s, arm.rank());
    let dense = embed_ket(&psi, &basis, 3)?.apply_mode_unitary(&w)?;
    let err = embed_ket(&symbolic, &basis, 3)?.max_abs_diff(&dense);
    Ok((err, format!("c={c} s={s} psi = {}", psi.polynomial())))
}

fn random_quadratic(rng: &mut ChaCha8Rng, modes: &[ModeLabel]) -> OperatorPolynomial {
    let terms = rng.random_range(1..=4);
    OperatorPolynomial::from_terms((0..terms).map(|_| {
        let k = pick(rng, modes).clone();
        let l = pick(rng, modes).clone();
        (NormalMonomial::new(vec![k], vec![l]), random_c64(rng))
    }))
}

fn expectation_case(rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let pools = two_path_pools(rng);
    let all = pools.concat();
    let psi = random_ket(rng, &pools, 3);
    let obs = random_quadratic(rng, &all);
    let rho = DensityOperator::from_ket(&psi);
    let basis = GramBasis::new(all)?;
    let symbolic = rho.expectation(&obs)?;
    let dense = oracle_expectation(&rho, &obs, &basis, 3)?;
    let err = (symbolic - dense).norm() / (1.0 + dense.norm());
    Ok((err, format!("psi = {} | O = {}", psi.polynomial(), obs)))
}

fn ccr_case(rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let (pa, pb) = (PathId::named("a"), PathId::named("b"));
    let pools = two_path_pools(rng);
    let registry = ModeRegistry::new(pools.concat());
    let theta = rng.random_range(0.0..std::f64::consts::PI);
    let phi = rng.random_range(-3.0..3.0);
    let (c, s) = (C64::from_polar(theta.cos(), phi), C64::from_polar(theta.sin(), phi));
    let mut worst: f64 = 0.0;
    for map in [
        beam_splitter(c, s, &pa, &pb, &registry)?,
        phase_shifter(phi, &pa, &registry)?,
        polarization_rotator(theta, &pb, &registry)?,
    ] {
        worst = worst.max(map.ccr_residual()?);
    }
    let gain = rng.random_range(1.0..5.0);
    let eta = rng.random_range(0.0..1.0);
    BogoliubovMap::amplifier(gain, &pa, &registry)?;
    LossyChannel::new(eta, pb.clone())?.bogoliubov(&registry)?;
    // a shear on two orthogonal modes must be refused
    let ortho = vec![pools[0][0].clone(), pools[1][0].clone()];
    let one = C64::new(1.0, 0.0);
    let shear = DMatrix::from_row_slice(2, 2, &[one, C64::new(0.5, 0.0), C64::new(0.0, 0.0), one]);
    if LinearMap::new(ortho, shear).is_ok() {
        worst = f64::INFINITY;
    }
    Ok((
        worst,
        format!("c={c} s={s} phi={phi} theta={theta} gain={gain} eta={eta} modes [{}]", describe(&pools.concat())),
    ))
}

fn random_polynomial(rng: &mut ChaCha8Rng, modes: &[ModeLabel]) -> OperatorPolynomial {
    let terms = rng.random_range(1..=3);
    OperatorPolynomial::from_terms((0..terms).map(|_| {
        let nc = rng.random_range(0..=2);
        let na = rng.random_range(0..=2);
        let cr = (0..nc).map(|_| pick(rng, modes).clone()).collect();
        let an = (0..na).map(|_| pick(rng, modes).clone()).collect();
        (NormalMonomial::new(cr, an), random_c64(rng))
    }))
}

fn adjoint_case(rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let modes = random_pool(rng, "a", 3);
    let p = random_polynomial(rng, &modes);
    let q = random_polynomial(rng, &modes);
    let involution = p.adjoint().adjoint().max_abs_diff(&p);
    let lhs = p.multiply(&q)?.adjoint();
    let rhs = q.adjoint().multiply(&p.adjoint())?;
    Ok((involution.max(lhs.max_abs_diff(&rhs)), format!("P = {p} | Q = {q}")))
}

fn normal_order_case(rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let modes = random_pool(rng, "a", 3);
    let len = rng.random_range(1..=8);
    let word: OperatorWord = (0..len)
        .map(|_| {
            let m = pick(rng, &modes).clone();
            if rng.random_bool(0.5) {
                LadderOperator::creation(m)
            } else {
                LadderOperator::annihilation(m)
            }
        })
        .collect();
    let once = normal_order(&word)?;
    let mut twice = OperatorPolynomial::zero();
    for (mono, c) in once.terms() {
        twice = &twice + &normal_order(&mono.to_word())?.scale(*c);
    }
    Ok((twice.max_abs_diff(&once), format!("word of {len} over [{}]", describe(&modes))))
}

fn povm_case(rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let pools = two_path_pools(rng);
    let psi = random_ket(rng, &pools, 3).normalize()?;
    let rho = DensityOperator::from_ket(&psi);
    let pa = PathId::named("a");
    let mut number_total = 0.0;
    for n in 0..=psi.max_photons() {
        number_total += outcome_probability(&rho, &PovmOutcome::number(pa.clone(), n))?;
    }
    let threshold_total = outcome_probability(&rho, &PovmOutcome::on(pa.clone()))?
        + outcome_probability(&rho, &PovmOutcome::off(pa))?;
    let err = (number_total - 1.0).abs().max((threshold_total - 1.0).abs());
    Ok((err, format!("psi = {}", psi.polynomial())))
}

fn gram_case(rng: &mut ChaCha8Rng) -> Result<(f64, String)> {
    let n = rng.random_range(1..=6);
    let mut modes: Vec<ModeLabel> = (0..n).map(|_| random_mode(rng, "a")).collect();
    if rng.random_bool(0.5) {
        // near-duplicate to stress the rank cut
        if let Envelope::Gaussian(g) = modes[0].envelope() {
            let shifted = Envelope::gaussian(g.sigma(), g.tau() + 1e-7, g.omega0())?;
            modes.push(modes[0].with_envelope(shifted));
        }
        modes.push(random_mode(rng, "b"));
    }
    let g = gram_matrix(&modes)?;
    let negativity = (-min_eigenvalue(&g)).max(0.0);
    let basis = GramBasis::new(modes.clone())?;
    Ok((negativity.max(basis.reconstruction_error()), describe(&modes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cases_is_empty() {
        let r = run_selfcheck(7, 0, Execution::Sequential);
        assert!(r.suites.is_empty());
        assert!(r.passed());
        assert_eq!(r.to_string(), "");
    }

    #[test]
    fn small_run_passes_and_is_deterministic() {
        let a = run_selfcheck(11, 6, Execution::Sequential);
        let b = run_selfcheck(11, 6, Execution::Parallel);
        assert!(a.passed(), "{a}");
        assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn case_seeds_differ() {
        assert_ne!(case_seed(1, Suite::Adjoint, 0), case_seed(1, Suite::Adjoint, 1));
        assert_ne!(case_seed(1, Suite::Adjoint, 0), case_seed(1, Suite::GramPsd, 0));
    }
}
