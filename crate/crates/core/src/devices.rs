//! Optical devices as rewrite rules on ladder operators.
//!
//! Every device is built against a [`ModeRegistry`], the set of mode labels
//! present in the state it will act on, so a device acting on a path knows
//! which internal modes travel along it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::FftPlanner;

use crate::algebra::{NormalMonomial, OperatorPolynomial, Substitution};
use crate::error::{Error, Result};
use crate::linalg::{gram_matrix, hermitian_eigenvalues, max_abs_deviation};
use crate::modes::{Envelope, ModeLabel, PathId, Polarization, SampledEnvelope, C64};
use crate::states::{DensityOperator, DensityTerm, KetState, ZERO_NORM_THRESHOLD};

/// Tolerance for commutation-relation and unitarity checks.
pub const CCR_TOLERANCE: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
/// Filter branches carrying less probability than this are dropped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-12;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Mode labels present in a state, grouped for device construction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModeRegistry {
    modes: BTreeSet<ModeLabel>,
}

impl ModeRegistry {
    pub fn new<I: IntoIterator<Item = ModeLabel>>(modes: I) -> Self {
        ModeRegistry {
            modes: modes.into_iter().collect(),
        }
    }

    pub fn from_ket(psi: &KetState) -> Self {
        ModeRegistry { modes: psi.modes() }
    }

    pub fn from_density(rho: &DensityOperator) -> Self {
        ModeRegistry { modes: rho.modes() }
    }

    pub fn from_polynomial(p: &OperatorPolynomial) -> Self {
        ModeRegistry { modes: p.modes() }
    }

    pub fn insert(&mut self, m: ModeLabel) {
        self.modes.insert(m);
    }

    pub fn modes(&self) -> &BTreeSet<ModeLabel> {
        &self.modes
    }

    pub fn modes_on(&self, path: &PathId) -> Vec<ModeLabel> {
        self.modes.iter().filter(|m| m.path() == path).cloned().collect()
    }

    /// Distinct internal states found on any of `paths`, relocated onto `onto`.
    pub fn internal_modes(&self, paths: &[&PathId], onto: &PathId) -> Vec<ModeLabel> {
        let set: BTreeSet<ModeLabel> = self
            .modes
            .iter()
            .filter(|m| paths.contains(&m.path()))
            .map(|m| m.with_path(onto.clone()))
            .collect();
        set.into_iter().collect()
    }

    /// An environment path not used by any registered mode.
    pub fn fresh_environment_path(&self) -> PathId {
        let next = self
            .modes
            .iter()
            .filter_map(|m| match m.path() {
                PathId::Environment(k) => Some(k + 1),
                PathId::Named(_) => None,
            })
            .max()
            .unwrap_or(0);
        PathId::Environment(next)
    }
}

/// Passive map `â†(in_k) → Σ_j U*_{jk} â†(out_j)` (equivalently
/// `â(in_k) → Σ_j U_{jk} â(out_j)`).
///
/// Most devices map a mode tuple onto itself; the polarization rotator maps
/// each label onto a relabelled copy, so inputs and outputs are kept apart.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    inputs: Vec<ModeLabel>,
    outputs: Vec<ModeLabel>,
    matrix: DMatrix<C64>,
}

impl LinearMap {
    pub fn new(modes: Vec<ModeLabel>, matrix: DMatrix<C64>) -> Result<Self> {
        Self::between(modes.clone(), modes, matrix)
    }

    /// `matrix` is `outputs.len() × inputs.len()`.
    pub fn between(
        inputs: Vec<ModeLabel>,
        outputs: Vec<ModeLabel>,
        matrix: DMatrix<C64>,
    ) -> Result<Self> {
        if matrix.nrows() != outputs.len() || matrix.ncols() != inputs.len() {
            return Err(Error::Validation(format!(
                "matrix is {}×{} but the map has {} outputs and {} inputs",
                matrix.nrows(),
                matrix.ncols(),
                outputs.len(),
                inputs.len()
            )));
        }
        let distinct: BTreeSet<&ModeLabel> = inputs.iter().collect();
        if distinct.len() != inputs.len() {
            return Err(Error::Validation("input modes repeat".into()));
        }
        // Σ_{kl} U_{ki} U*_{lj} ⟨out_k, out_l⟩ = ⟨in_i, in_j⟩
        let g_in = gram_matrix(&inputs)?;
        let g_out = gram_matrix(&outputs)?;
        let transported = matrix.transpose() * g_out * matrix.conjugate();
        let (deviation, i, j) = max_abs_deviation(&transported, &g_in);
        if deviation > CCR_TOLERANCE {
            return Err(Error::CcrViolation { i, j, deviation });
        }
        Ok(LinearMap {
            inputs,
            outputs,
            matrix,
        })
    }

    pub fn identity(modes: Vec<ModeLabel>) -> Self {
        let n = modes.len();
        LinearMap {
            inputs: modes.clone(),
            outputs: modes,
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn inputs(&self) -> &[ModeLabel] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[ModeLabel] {
        &self.outputs
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// `‖Uᵀ G_out U* − G_in‖_max`, zero for a valid map up to rounding.
    pub fn ccr_residual(&self) -> Result<f64> {
        let g_in = gram_matrix(&self.inputs)?;
        let g_out = gram_matrix(&self.outputs)?;
        let t = self.matrix.transpose() * g_out * self.matrix.conjugate();
        Ok(max_abs_deviation(&t, &g_in).0)
    }

    pub fn substitution(&self) -> Substitution {
        let mut subst = Substitution::new();
        for (k, input) in self.inputs.iter().enumerate() {
            let image = OperatorPolynomial::from_terms(self.outputs.iter().enumerate().filter_map(
                |(j, out)| {
                    let c = self.matrix[(j, k)].conj();
                    (c != ZERO).then(|| {
(NormalMonomial::new(vec![out.clone()], vec![]), c)
                    })
                },
            ));
            subst.set_creation(input.clone(), image);
        }
        subst
    }

    pub fn apply(&self, psi: &KetState) -> Result<KetState> {
        KetState::from_polynomial(psi.polynomial().substitute(&self.substitution())?)
    }

    pub fn apply_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let subst = self.substitution();
        map_density(rho, |list| {
            KetState::from_polynomial(KetState::product(list).polynomial().substitute(&subst)?)
        })
    }
}

/// Applies a ket-level map to both sides of every factor of `rho`.
pub fn map_density<F>(rho: &DensityOperator, f: F) -> Result<DensityOperator>
where
    F: Fn(&[ModeLabel]) -> Result<KetState>,
{
    let mut cache: BTreeMap<Vec<ModeLabel>, Vec<(Vec<ModeLabel>, C64)>> = BTreeMap::new();
    let mut image = |list: &[ModeLabel]| -> Result<Vec<(Vec<ModeLabel>, C64)>> {
        if let Some(v) = cache.get(list) {
            return Ok(v.clone());
        }
        let v: Vec<_> = f(list)?.terms().map(|(m, c)| (m.to_vec(), c)).collect();
        cache.insert(list.to_vec(), v.clone());
        Ok(v)
    };
    let mut out = Vec::new();
    for (term, c) in rho.terms() {
        let kets = image(term.ket())?;
        let bras = image(term.bra())?;
        for (k, ck) in &kets {
            for (b, cb) in &bras {
                out.push((DensityTerm::new(k.clone(), b.clone()), c * ck * cb.conj()));
            }
        }
    }
    Ok(DensityOperator::from_terms(out))
}

/// Beam splitter `[[c, s], [−s, c]]` between `path_a` and `path_b`, acting
/// identically on every internal mode the registry holds on either path.
/// Outputs reuse the input path names.
pub fn beam_splitter(
    c: C64,
    s: C64,
    path_a: &PathId,
    path_b: &PathId,
    registry: &ModeRegistry,
) -> Result<LinearMap> {
    let norm = c.norm_sqr() + s.norm_sqr();
    if (norm - 1.0).abs() > CCR_TOLERANCE {
        return Err(Error::Validation(format!(
            "beam splitter needs |c|² + |s|² = 1, got {norm}"
        )));
    }
    // off-diagonal of U U† is 2i·Im(s c*)
    let skew = (s * c.conj()).im;
    if skew.abs() > CCR_TOLERANCE {
        return Err(Error::Validation(format!(
            "beam splitter [[c, s], [−s, c]] is not unitary unless c and s share a phase (Im(s c*) = {skew})"
        )));
    }
    if path_a == path_b {
        return Err(Error::Validation("beam splitter needs two distinct paths".into()));
    }
    let internal = registry.internal_modes(&[path_a, path_b], path_a);
    let n = internal.len();
    let mut modes = Vec::with_capacity(2 * n);
    for m in &internal {
        modes.push(m.clone());
        modes.push(m.with_path(path_b.clone()));
    }
    let mut u = DMatrix::from_element(2 * n, 2 * n, ZERO);
    for k in 0..n {
        let (a, b) = (2 * k, 2 * k + 1);
        u[(a, a)] = c;
        u[(a, b)] = s;
        u[(b, a)] = -s;
        u[(b, b)] = c;
    }
    LinearMap::new(modes, u)
}

/// Phase `â†(m) → e^{iφ} â†(m)` on every mode of the path.
pub fn phase_shifter(phi: f64, path: &PathId, registry: &ModeRegistry) -> Result<LinearMap> {
    let modes = registry.modes_on(path);
    let n = modes.len();
    let u = DMatrix::from_diagonal_element(n, n, C64::from_polar(1.0, -phi));
    LinearMap::new(modes, u)
}

/// Rotates the polarization of every mode on the path by
/// `R(θ) = [[cos θ, sin θ], [−sin θ, cos θ]]`.
pub fn polarization_rotator(theta: f64, path: &PathId, registry: &ModeRegistry) -> Result<LinearMap> {
    let inputs = registry.modes_on(path);
    let outputs: Vec<ModeLabel> = inputs
        .iter()
        .map(|m| m.with_polarization(m.polarization().rotated(theta)))
        .collect();
    let n = inputs.len();
    LinearMap::between(inputs, outputs, DMatrix::identity(n, n))
}

/// Single-photon source: `â†(m)|ψ⟩`.
pub fn source_single(psi: &KetState, m: &ModeLabel) -> KetState {
    psi.with_creation(m)
}

/// Pair source: `Σ f_ij â†(m_i) â†(m_j) |ψ⟩`; not renormalized.
pub fn source_pair(psi: &KetState, amplitudes: &[((ModeLabel, ModeLabel), C64)]) -> Result<KetState> {
    if amplitudes.is_empty() {
        return Err(Error::Validation("pair source needs at least one amplitude".into()));
    }
    let mut out = KetState::from_polynomial(OperatorPolynomial::zero())?;
    for ((mi, mj), f) in amplitudes {
        out = out.add(&psi.with_creation(mi).with_creation(mj).scale(*f));
    }
    Ok(out)
}

/// A state carrying environment modes, together with the path they live on.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelOutput {
    pub state: KetState,
    pub environment: PathId,
}

impl ChannelOutput {
    /// System density operator after tracing out the environment.
    pub fn reduced(&self) -> Result<DensityOperator> {
        let env: BTreeSet<PathId> = [self.environment.clone()].into_iter().collect();
        DensityOperator::from_ket(&self.state).partial_trace(&env)
    }
}

/// Loss on a path: `â†(m) → √η â†(m) + √(1−η) â†(m_env)`.
///
/// All modes of the path share one environment path and keep their internal
/// state there, so the environment copies have the same overlaps as the
/// originals.
#[derive(Clone, Debug, PartialEq)]
pub struct LossyChannel {
    eta: f64,
    path: PathId,
}

impl LossyChannel {
    pub fn new(eta: f64, path: PathId) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Validation(format!("loss transmission η = {eta} is outside [0, 1]")));
        }
        Ok(LossyChannel { eta, path })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn substitution(&self, registry: &ModeRegistry, env: &PathId) -> Substitution {
        let (t, r) = (self.eta.sqrt(), (1.0 - self.eta).sqrt());
        let mut subst = Substitution::new();
        for m in registry.modes_on(&self.path) {
            let mut image = OperatorPolynomial::creation(m.clone()).scale(re(t));
            if r > 0.0 {
                image = &image + &OperatorPolynomial::creation(m.with_path(env.clone())).scale(re(r));
            }
            subst.set_creation(m, image);
        }
        subst
    }

    pub fn apply(&self, psi: &KetState) -> Result<ChannelOutput> {
        let registry = ModeRegistry::from_ket(psi);
        let environment = registry.fresh_environment_path();
        let subst = self.substitution(&registry, &environment);
        let state = KetState::from_polynomial(psi.polynomial().substitute(&subst)?)?;
        Ok(ChannelOutput { state, environment })
    }

    /// Lossy density operator with the environment already traced out.
    pub fn apply_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let registry = ModeRegistry::from_density(rho);
        let environment = registry.fresh_environment_path();
        let subst = self.substitution(&registry, &environment);
        let dilated = map_density(rho, |list| {
            KetState::from_polynomial(KetState::product(list).polynomial().substitute(&subst)?)
        })?;
        let env: BTreeSet<PathId> = [environment].into_iter().collect();
        dilated.partial_trace(&env)
    }

    /// The same loss written as a Bogoliubov map with `V = 0`, acting on the
    /// path modes and their environment copies (which start in vacuum).
    pub fn bogoliubov(&self, registry: &ModeRegistry) -> Result<BogoliubovMap> {
        let env = registry.fresh_environment_path();
        let system = registry.modes_on(&self.path);
        let n = system.len();
        let mut modes = system.clone();
        modes.extend(system.iter().map(|m| m.with_path(env.clone())));
        let (t, r) = (re(self.eta.sqrt()), re((1.0 - self.eta).sqrt()));
        let mut u = DMatrix::from_element(2 * n, 2 * n, ZERO);
        for i in 0..n {
            u[(i, i)] = t;
            u[(i, n + i)] = r;
            u[(n + i, i)] = -r;
            u[(n + i, n + i)] = t;
        }
        BogoliubovMap::new(modes, u, DMatrix::from_element(2 * n, 2 * n, ZERO))
    }
}

/// Transfer function of a spectral filter, `ω ↦ T(ω)` with `|T(ω)| ≤ 1`.
pub type Transfer = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum FilterSpec {
    Spectral(Transfer),
    /// Polarization transfer matrix acting on `(pH, pV)`; needs `T†T ≤ 𝟙`.
    Polarization([[C64; 2]; 2]),
}

impl fmt::Debug for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterSpec::Spectral(_) => f.write_str("Spectral(<transfer>)"),
            FilterSpec::Polarization(t) => f.debug_tuple("Polarization").field(t).finish(),
        }
    }
}

impl FilterSpec {
    pub fn spectral<F: Fn(f64) -> C64 + Send + Sync + 'static>(t: F) -> Self {
        FilterSpec::Spectral(Arc::new(t))
    }

    /// Linear polarizer along `p`: `|p⟩⟨p|`.
    pub fn polarizer(p: &Polarization) -> Self {
        let v = [p.h(), p.v()];
        let mut t = [[ZERO; 2]; 2];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = v[i] * v[j].conj();
            }
        }
        FilterSpec::Polarization(t)
    }

    pub fn validate(&self) -> Result<()> {
        if let FilterSpec::Polarization(t) = self {
            let m = DMatrix::from_fn(2, 2, |i, j| t[i][j]);
            let slack = DMatrix::<C64>::identity(2, 2) - m.adjoint() * &m;
            let lowest = hermitian_eigenvalues(&slack)[0];
            if lowest < -CCR_TOLERANCE {
                return Err(Error::Validation(format!(
                    "polarization transfer amplifies: 𝟙 − T†T has eigenvalue {lowest:e}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-mode result of a filter: `â†(m) → coeff · â†(transmitted) + leak · â†(env copy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredMode {
    /// `T_i`
    pub transmission: C64,
    pub transmitted: Option<(ModeLabel, C64)>,
    pub leaked: Option<(ModeLabel, C64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutput {
    pub state: KetState,
    pub environment: PathId,
    pub modes: Vec<(ModeLabel, FilteredMode)>,
}

impl FilterOutput {
    pub fn reduced(&self) -> Result<DensityOperator> {
        ChannelOutput {
            state: self.state.clone(),
            environment: self.environment.clone(),
        }
        .reduced()
    }

    /// Component with no photon lost to the environment, normalized, with its probability.
    pub fn postselect_transmitted(&self) -> Result<(f64, KetState)> {
        if self.modes.iter().all(|(_, f)| f.transmitted.is_none()) {
            return Err(Error::FullyBlocked);
        }
        let kept = self.state.project_counts(&[(self.environment.clone(), 0)]);
        let p = kept.norm_sqr()? / self.state.norm_sqr()?;
        if p < ZERO_NORM_THRESHOLD {
            return Err(Error::FullyBlocked);
        }
        Ok((p, kept.normalize()?))
    }
}

/// Applies a filter to every mode on `path`.
pub fn apply_filter(spec: &FilterSpec, path: &PathId, psi: &KetState) -> Result<FilterOutput> {
    spec.validate()?;
    let registry = ModeRegistry::from_ket(psi);
    let environment = registry.fresh_environment_path();
    let mut subst = Substitution::new();
    let mut modes = Vec::new();
    for m in registry.modes_on(path) {
        let fm = filter_mode(spec, &m, &environment)?;
        let mut image = OperatorPolynomial::zero();
        for (label, c) in fm.transmitted.iter().chain(fm.leaked.iter()) {
            image = &image + &OperatorPolynomial::creation(label.clone()).scale(*c);
        }
        subst.set_creation(m.clone(), image);
        modes.push((m, fm));
    }
    let state = KetState::from_polynomial(psi.polynomial().substitute(&subst)?)?;
    Ok(FilterOutput {
        state,
        environment,
        modes,
    })
}

fn filter_mode(spec: &FilterSpec, m: &ModeLabel, env: &PathId) -> Result<FilteredMode> {
    match spec {
        FilterSpec::Polarization(t) => {
            let p = m.polarization();
            let (h, v) = p.transformed(t);
            let ti = (h.norm_sqr() + v.norm_sqr()).sqrt();
            let transmitted = if ti * ti > NEGLIGIBLE_WEIGHT {
                let q = Polarization::normalized(h, v)?;
                Some((m.with_polarization(q), re(ti)))
            } else {
                None
            };
            let leak = (1.0 - ti * ti).max(0.0).sqrt();
            let leaked = if leak * leak > NEGLIGIBLE_WEIGHT {
                // the lost part carries D|φ⟩ with D = √(𝟙 − T†T)
                let (dh, dv) = p.transformed(&complement_sqrt(t));
                let q = Polarization::normalized(dh, dv)?;
                Some((m.with_polarization(q).with_path(env.clone()), re(leak)))
            } else {
                None
            };
            Ok(FilteredMode {
                transmission: re(ti),
                transmitted,
                leaked,
            })
        }
        FilterSpec::Spectral(transfer) => {
            let reshaped = spectral_reshape(m.envelope(), transfer.as_ref())?;
            let ti = reshaped.transmission;
            let transmitted = reshaped
                .envelope
                .map(|(e, u)| (m.with_envelope(Envelope::Sampled(Arc::new(e))), ti.conj() * u));
            let leak = (1.0 - ti.norm_sqr()).max(0.0).sqrt();
            let leaked = (leak * leak > NEGLIGIBLE_WEIGHT).then(|| (m.with_path(env.clone()), re(leak)));
            Ok(FilteredMode {
                transmission: ti,
                transmitted,
                leaked,
            })
        }
    }
}

/// `√(𝟙 − T†T)` via the eigen-decomposition of the Hermitian slack matrix.
fn complement_sqrt(t: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let m = DMatrix::from_fn(2, 2, |i, j| t[i][j]);
    let slack = DMatrix::<C64>::identity(2, 2) - m.adjoint() * &m;
    let slack = (&slack + slack.adjoint()) * re(0.5);
    let eig = slack.symmetric_eigen();
    let mut out = DMatrix::from_element(2, 2, ZERO);
    for k in 0..2 {
        let lambda = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        out += (v * v.adjoint()) * re(lambda);
    }
    [[out[(0, 0)], out[(0, 1)]], [out[(1, 0)], out[(1, 1)]]]
}

/// Result of passing one envelope through a spectral transfer function.
#[derive(Clone, Debug)]
pub struct SpectralReshape {
    /// `T_i = ∫ T(ω) |f(ω)|² dω`
    pub transmission: C64,
    /// Normalized reshaped envelope and phase `u` with `T f / ‖T f‖ = u · stored`;
    /// `None` when nothing is transmitted.
    pub envelope: Option<(SampledEnvelope, C64)>,
}

/// Reshapes an envelope by `T(ω)` on an FFT grid.
///
/// The spectrum is `f(ω) = (2π)^{-1/2} ∫ f(t) e^{iωt} dt`, so a Gaussian
/// with carrier `ω₀` peaks at `ω = ω₀`.
pub fn spectral_reshape(envelope: &Envelope, transfer: &dyn Fn(f64) -> C64) -> Result<SpectralReshape> {
    let (t0, dt, mut buf) = time_grid(envelope);
    let n = buf.len();
    let mut planner = FftPlanner::<f64>::new();
    // e^{+iωt} kernel is rustfft's inverse direction
    planner.plan_fft_inverse(n).process(&mut buf);
    let dw = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let mut weight = 0.0;
    let mut transmission = ZERO;
    for (k, x) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let t = transfer(kk * dw);
        if t.norm() > 1.0 + CCR_TOLERANCE {
            return Err(Error::Validation(format!(
                "|T(ω)| = {} exceeds 1 at ω = {}",
                t.norm(),
                kk * dw
            )));
        }
        let p = x.norm_sqr();
        weight += p;
        transmission += t * p;
        *x *= t;
    }
    // Parseval: dt/N Σ|X_k|² = dt Σ|x_n|²
    let scale = dt / n as f64;
    transmission *= scale;
    weight *= scale;
    if (weight - 1.0).abs() > 1e-6 {
        return Err(Error::Precision(format!(
            "envelope grid carries norm {weight}, not 1"
        )));
    }
    planner.plan_fft_forward(n).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    let samples: Vec<C64> = buf.into_iter().map(|x| x * inv_n).collect();
    let energy: f64 = dt * samples.iter().map(|x| x.norm_sqr()).sum::<f64>();
    let envelope = if energy > ZERO_NORM_THRESHOLD {
        Some(SampledEnvelope::canonical(t0, dt, samples)?)
    } else {
        None
    };
    Ok(SpectralReshape {
        transmission,
        envelope,
    })
}

fn time_grid(envelope: &Envelope) -> (f64, f64, Vec<C64>) {
    match envelope {
        Envelope::Gaussian(g) => {
            let sigma = g.sigma();
            let bandwidth = g.omega0().abs() + 6.0 / sigma;
            let dt = (sigma / 8.0).min(std::f64::consts::PI / (2.0 * bandwidth));
            let span = 20.0 * sigma;
            let n = (((span / dt).ceil() as usize) + 1).next_power_of_two() * 4;
            let t0 = g.tau() - dt * (n / 2) as f64;
            let buf = (0..n).map(|i| g.value_at(t0 + i as f64 * dt)).collect();
            (t0, dt, buf)
        }
        Envelope::Sampled(s) => {
            let len = s.samples().len();
            let n = len.next_power_of_two() * 4;
            let pad = (n - len) / 2;
            let t0 = s.t_start() - pad as f64 * s.dt();
            let mut buf = vec![ZERO; n];
            buf[pad..pad + len].copy_from_slice(s.samples());
            (t0, s.dt(), buf)
        }
    }
}

/// `â(m_i) → Σ_j U_ij â(m_j) + V_ij â†(m_j)`, validated against both
/// commutation relations.
#[derive(Clone, Debug, PartialEq)]
pub struct BogoliubovMap {
    modes: Vec<ModeLabel>,
    u: DMatrix<C64>,
    v: DMatrix<C64>,
}

impl BogoliubovMap {
    pub fn new(modes: Vec<ModeLabel>, u: DMatrix<C64>, v: DMatrix<C64>) -> Result<Self> {
        let n = modes.len();
        if u.shape() != (n, n) || v.shape() != (n, n) {
            return Err(Error::Validation(format!(
                "Bogoliubov matrices must be {n}×{n}"
            )));
        }
        let g = gram_matrix(&modes)?;
        // [Φ(â_i), Φ(â_j)†] = Σ U_ik U*_jl ⟨k,l⟩ − V_ik V*_jl ⟨l,k⟩
        let commutator = &u * &g * u.adjoint() - &v * g.transpose() * v.adjoint();
        let (deviation, i, j) = max_abs_deviation(&commutator, &g);
        if deviation > CCR_TOLERANCE {
            return Err(Error::CcrViolation { i, j, deviation });
        }
        // [Φ(â_i), Φ(â_j)] = Σ U_ik V_jl ⟨k,l⟩ − V_ik U_jl ⟨l,k⟩
        let cross = &u * &g * v.transpose() - &v * g.transpose() * u.transpose();
        let zero = DMatrix::from_element(n, n, ZERO);
        let (deviation, i, j) = max_abs_deviation(&cross, &zero);
        if deviation > CCR_TOLERANCE {
            return Err(Error::CcrViolation { i, j, deviation });
        }
        Ok(BogoliubovMap { modes, u, v })
    }

    /// Phase-insensitive amplifier of gain `G ≥ 1` on every mode of `path`:
    /// `â(m) → √G â(m) + √(G−1) ê†(m*)`, where the environment partner
    /// carries the conjugate internal state.
    pub fn amplifier(gain: f64, path: &PathId, registry: &ModeRegistry) -> Result<Self> {
        if !gain.is_finite() || gain < 1.0 {
            return Err(Error::Validation(format!("amplifier gain {gain} is below 1")));
        }
        let env = registry.fresh_environment_path();
        let system = registry.modes_on(path);
        let n = system.len();
        let mut modes = system.clone();
        modes.extend(system.iter().map(|m| m.conjugate().with_path(env.clone())));
        let g = re(gain.sqrt());
        let k = re((gain - 1.0).sqrt());
        let u = DMatrix::from_diagonal_element(2 * n, 2 * n, g);
        let mut v = DMatrix::from_element(2 * n, 2 * n, ZERO);
        for i in 0..n {
            v[(i, n + i)] = k;
            v[(n + i, i)] = k;
        }
        Self::new(modes, u, v)
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn u(&self) -> &DMatrix<C64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<C64> {
        &self.v
    }

    pub fn substitution(&self) -> Substitution {
        let mut subst = Substitution::new();
        for (i, m) in self.modes.iter().enumerate() {
            let mut image = OperatorPolynomial::zero();
            for (j, mj) in self.modes.iter().enumerate() {
                if self.u[(i, j)] != ZERO {
                    image = &image + &OperatorPolynomial::annihilation(mj.clone()).scale(self.u[(i, j)]);
                }
                if self.v[(i, j)] != ZERO {
                    image = &image + &OperatorPolynomial::creation(mj.clone()).scale(self.v[(i, j)]);
                }
            }
            subst.set_annihilation(m.clone(), image);
        }
        subst
    }

    /// Heisenberg-picture image of an observable.
    pub fn apply_observable(&self, obs: &OperatorPolynomial) -> Result<OperatorPolynomial> {
        obs.substitute(&self.substitution())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PovmElement {
    Number(usize),
    ThresholdOn,
    ThresholdOff,
}

/// One outcome of a detector on a path. Every element is a projector that is
/// diagonal in the path's photon number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PovmOutcome {
    pub path: PathId,
    pub element: PovmElement,
}

impl PovmOutcome {
    pub fn number(path: PathId, n: usize) -> Self {
        PovmOutcome {
            path,
            element: PovmElement::Number(n),
        }
    }

    pub fn on(path: PathId) -> Self {
        PovmOutcome {
            path,
            element: PovmElement::ThresholdOn,
        }
    }

    pub fn off(path: PathId) -> Self {
        PovmOutcome {
            path,
            element: PovmElement::ThresholdOff,
        }
    }

    fn accepts(&self, list: &[ModeLabel]) -> bool {
        let n = list.iter().filter(|m| m.path() == &self.path).count();
        match self.element {
            PovmElement::Number(k) => n == k,
            PovmElement::ThresholdOn => n > 0,
            PovmElement::ThresholdOff => n == 0,
        }
    }

    fn project(&self, rho: &DensityOperator) -> DensityOperator {
        rho.filter_terms(|list| self.accepts(list))
    }
}

/// `p = Tr(M ρ)`
pub fn outcome_probability(rho: &DensityOperator, outcome: &PovmOutcome) -> Result<f64> {
    Ok(outcome.project(rho).trace()?.re)
}

/// Born probability and normalized post-measurement state `M ρ M / p`.
pub fn measure(rho: &DensityOperator, outcome: &PovmOutcome) -> Result<(f64, DensityOperator)> {
    let projected = outcome.project(rho);
    let p = projected.trace()?.re;
    if p < ZERO_NORM_THRESHOLD {
        return Err(Error::ZeroProbability(p));
    }
    Ok((p, projected.scale(re(1.0 / p))))
}
