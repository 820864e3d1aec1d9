//! Mode labels and their inner products.
//!
//! A [`ModeLabel`] is the triple (path, temporal envelope, polarization).
//! Labels on different paths are orthogonal; within one path the overlap is
//! the product of the envelope overlap and the polarization overlap, so two
//! labels on the same path are in general neither equal nor orthogonal.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Trapezoid window half-width, in units of the envelope width.
const WINDOW_SIGMAS: f64 = 8.0;
const QUADRATURE_START: usize = 1 << 14;
const QUADRATURE_MAX: usize = 1 << 21;
const QUADRATURE_TOL: f64 = 1e-9;
/// A sampled envelope must have decayed to this fraction of its peak at the grid edges.
const EDGE_FRACTION: f64 = 1e-6;

// -0.0 and 0.0 must compare equal structurally
fn canon(x: f64) -> f64 {
    x + 0.0
}

fn cmp_c64(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Optical path token. Environment paths come from a reserved namespace
/// and always sort after named system paths.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathId {
    Named(Arc<str>),
    Environment(u32),
}

impl PathId {
    pub fn named(name: &str) -> Self {
        PathId::Named(Arc::from(name))
    }

    pub fn is_environment(&self) -> bool {
        matches!(self, PathId::Environment(_))
    }
}

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathId::Named(name) => write!(f, "{name}"),
            PathId::Environment(idx) => write!(f, "env#{idx}"),
        }
    }
}

/// Normalized Gaussian wave packet
/// `ζ(t) = (2πσ²)^(-1/4) exp(-(t-τ)²/(4σ²)) exp(-iω₀(t-τ))`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianEnvelope {
    sigma: f64,
    tau: f64,
    omega0: f64,
}

impl GaussianEnvelope {
    pub fn new(sigma: f64, tau: f64, omega0: f64) -> Result<Self> {
        if !sigma.is_finite() || !tau.is_finite() || !omega0.is_finite() {
            return Err(Error::InvalidEnvelope(format!(
                "non-finite parameters (sigma={sigma}, tau={tau}, omega0={omega0})"
            )));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidEnvelope(format!(
                "sigma must be strictly positive, got {sigma}"
            )));
        }
        Ok(GaussianEnvelope {
            sigma,
            tau: canon(tau),
            omega0: canon(omega0),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn value_at(&self, t: f64) -> C64 {
        let x = t - self.tau;
        let amp = (2.0 * PI * self.sigma * self.sigma).powf(-0.25)
            * (-x * x / (4.0 * self.sigma * self.sigma)).exp();
        C64::from_polar(amp, -self.omega0 * x)
    }

    /// The complex conjugate envelope, which is again Gaussian with `ω₀ → -ω₀`.
    pub fn conjugate(&self) -> Self {
        GaussianEnvelope {
            omega0: canon(-self.omega0),
            ..*self
        }
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.tau
            .total_cmp(&other.tau)
            .then(self.omega0.total_cmp(&other.omega0))
            .then(self.sigma.total_cmp(&other.sigma))
    }
}

/// Closed-form `∫ ζ_a*(t) ζ_b(t) dt` for two Gaussian envelopes.
///
/// With `S² = σa² + σb²`, `Δτ = τa − τb`, `Δω = ωa − ωb` the magnitude is
/// `√(2σaσb/S²) exp(−Δτ²/(4S²) − σa²σb²Δω²/S²)` and the phase is
/// `−Δτ(σa²ωa + σb²ωb)/S²`.
pub fn gaussian_overlap(a: &GaussianEnvelope, b: &GaussianEnvelope) -> C64 {
    let (s1, s2) = (a.sigma, b.sigma);
    let ss = s1 * s1 + s2 * s2;
    let dtau = a.tau - b.tau;
    let domega = a.omega0 - b.omega0;
    let magnitude = (2.0 * s1 * s2 / ss).sqrt()
        * (-dtau * dtau / (4.0 * ss) - s1 * s1 * s2 * s2 * domega * domega / ss).exp();
    let phase = -dtau * (s1 * s1 * a.omega0 + s2 * s2 * b.omega0) / ss;
    C64::from_polar(magnitude, phase)
}

/// Envelope stored as samples on a uniform time grid.
///
/// Samples are renormalized on construction so that `dt·Σ|f|² = 1` and
/// rotated by a global phase that makes the largest-magnitude sample real
/// and positive. The inner product between sampled envelopes is the
/// zero-extended trapezoid sum `dt·Σ f*g`.
#[derive(Clone, Debug)]
pub struct SampledEnvelope {
    t_start: f64,
    dt: f64,
    samples: Vec<C64>,
    norm: f64,
}

impl SampledEnvelope {
    pub fn new(t_start: f64, dt: f64, samples: Vec<C64>) -> Result<Self> {
        Self::canonical(t_start, dt, samples).map(|(env, _)| env)
    }

    /// Builds the canonical envelope and returns the phase `u` such that the
    /// normalized input equals `u` times the stored samples.
    pub fn canonical(t_start: f64, dt: f64, mut samples: Vec<C64>) -> Result<(Self, C64)> {
        if !t_start.is_finite() || !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidEnvelope(format!(
                "bad grid (t_start={t_start}, dt={dt})"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidEnvelope("no samples".into()));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidEnvelope("non-finite sample".into()));
        }
        let (peak_idx, peak) = samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if peak == 0.0 {
            return Err(Error::InvalidEnvelope("all samples are zero".into()));
        }
        let first = samples[0].norm();
        let last = samples[samples.len() - 1].norm();
        if first > EDGE_FRACTION * peak || last > EDGE_FRACTION * peak {
            return Err(Error::InvalidEnvelope(format!(
                "grid truncates the envelope (edge/peak = {:.2e})",
                first.max(last) / peak
            )));
        }
        let norm = (dt * samples.iter().map(|s| s.norm_sqr()).sum::<f64>()).sqrt();
        let phase = samples[peak_idx] / peak;
        let scale = phase.conj() / norm;
        for s in samples.iter_mut() {
            *s *= scale;
            s.re = canon(s.re);
            s.im = canon(s.im);
        }
        let env = SampledEnvelope {
            t_start: canon(t_start),
            dt,
            samples,
            norm,
        };
        Ok((env, phase))
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// L² norm of the samples as they were passed in.
    pub fn original_norm(&self) -> f64 {
        self.norm
    }

    pub fn time_at(&self, idx: usize) -> f64 {
        self.t_start + idx as f64 * self.dt
    }

    pub fn conjugate(&self) -> Self {
        SampledEnvelope {
            samples: self.samples.iter().map(|s| s.conj()).collect(),
            ..self.clone()
        }
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.t_start
            .total_cmp(&other.t_start)
            .then(self.dt.total_cmp(&other.dt))
            .then(self.samples.len().cmp(&other.samples.len()))
            .then_with(|| {
                self.samples
                    .iter()
                    .zip(&other.samples)
                    .map(|(a, b)| cmp_c64(a, b))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }
}

#[derive(Clone, Debug)]
pub enum Envelope {
    Gaussian(GaussianEnvelope),
    Sampled(Arc<SampledEnvelope>),
}

impl Envelope {
    pub fn gaussian(sigma: f64, tau: f64, omega0: f64) -> Result<Self> {
        GaussianEnvelope::new(sigma, tau, omega0).map(Envelope::Gaussian)
    }

    pub fn conjugate(&self) -> Self {
        match self {
            Envelope::Gaussian(g) => Envelope::Gaussian(g.conjugate()),
            Envelope::Sampled(s) => Envelope::Sampled(Arc::new(s.conjugate())),
        }
    }

    pub fn value_at(&self, t: f64) -> C64 {
        match self {
            Envelope::Gaussian(g) => g.value_at(t),
            Envelope::Sampled(s) => {
                let x = (t - s.t_start) / s.dt;
                if x < 0.0 || x > (s.samples.len() - 1) as f64 {
                    return C64::new(0.0, 0.0);
                }
                let i = x.floor() as usize;
                let frac = x - i as f64;
                if i + 1 >= s.samples.len() {
                    s.samples[i]
                } else {
                    s.samples[i] * (1.0 - frac) + s.samples[i + 1] * frac
                }
            }
        }
    }
}

impl PartialEq for Envelope {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Envelope {}

impl PartialOrd for Envelope {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Envelope {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Envelope::Gaussian(a), Envelope::Gaussian(b)) => a.cmp_key(b),
            (Envelope::Gaussian(_), Envelope::Sampled(_)) => Ordering::Less,
            (Envelope::Sampled(_), Envelope::Gaussian(_)) => Ordering::Greater,
            (Envelope::Sampled(a), Envelope::Sampled(b)) => {
                if Arc::ptr_eq(a, b) {
                    Ordering::Equal
                } else {
                    a.cmp_key(b)
                }
            }
        }
    }
}

impl Hash for Envelope {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Envelope::Gaussian(g) => {
                0u8.hash(state);
                g.tau.to_bits().hash(state);
                g.omega0.to_bits().hash(state);
                g.sigma.to_bits().hash(state);
            }
            Envelope::Sampled(s) => {
                1u8.hash(state);
                s.t_start.to_bits().hash(state);
                s.dt.to_bits().hash(state);
                s.samples.len().hash(state);
            }
        }
    }
}

/// Trapezoid-rule approximation of `∫ a*(t) b(t) dt`.
///
/// Two Gaussians are sampled over `[min τ − 8σ, max τ + 8σ]` and the
/// resolution is doubled until successive estimates agree to 1e-9.
/// Sampled envelopes use their own grids; two sampled grids must be
/// nested (power-of-two step ratio, aligned starts).
pub fn quadrature_overlap(a: &Envelope, b: &Envelope) -> Result<C64> {
    match (a, b) {
        (Envelope::Gaussian(ga), Envelope::Gaussian(gb)) => gaussian_quadrature(ga, gb),
        (Envelope::Sampled(sa), Envelope::Sampled(sb)) => sampled_overlap(sa, sb),
        (Envelope::Sampled(s), Envelope::Gaussian(g)) => sampled_gaussian(s, g),
        (Envelope::Gaussian(g), Envelope::Sampled(s)) => sampled_gaussian(s, g).map(|z| z.conj()),
    }
}

fn gaussian_quadrature(a: &GaussianEnvelope, b: &GaussianEnvelope) -> Result<C64> {
    let lo = (a.tau - WINDOW_SIGMAS * a.sigma).min(b.tau - WINDOW_SIGMAS * b.sigma);
    let hi = (a.tau + WINDOW_SIGMAS * a.sigma).max(b.tau + WINDOW_SIGMAS * b.sigma);
    let trapezoid = |n: usize| -> C64 {
        let h = (hi - lo) / n as f64;
        let f = |t: f64| a.value_at(t).conj() * b.value_at(t);
        let inner: C64 = (1..n).map(|k| f(lo + k as f64 * h)).sum();
        (inner + (f(lo) + f(hi)) * 0.5) * h
    };
    let mut n = QUADRATURE_START;
    let mut prev = trapezoid(n);
    while n < QUADRATURE_MAX {
        n *= 2;
        let next = trapezoid(n);
        if (next - prev).norm() <= QUADRATURE_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Precision(format!(
        "trapezoid did not settle below {QUADRATURE_TOL:e} with {QUADRATURE_MAX} intervals"
    )))
}

fn sampled_gaussian(s: &SampledEnvelope, g: &GaussianEnvelope) -> Result<C64> {
    if s.dt > g.sigma / 4.0 {
        return Err(Error::Precision(format!(
            "grid step {} too coarse for a Gaussian of width {}",
            s.dt, g.sigma
        )));
    }
    let sum: C64 = s
        .samples
        .iter()
        .enumerate()
        .map(|(i, v)| v.conj() * g.value_at(s.time_at(i)))
        .sum();
    Ok(sum * s.dt)
}

fn sampled_overlap(a: &SampledEnvelope, b: &SampledEnvelope) -> Result<C64> {
    // iterate over the coarser grid; the finer one must contain its points
    let (coarse, fine, flip) = if a.dt >= b.dt { (a, b, false) } else { (b, a, true) };
    let ratio = coarse.dt / fine.dt;
    let stride = ratio.round();
    if (ratio - stride).abs() > 1e-9 * ratio || (stride as u64).count_ones() != 1 {
        return Err(Error::GridMismatch);
    }
    let stride = stride as i64;
    let offset = (coarse.t_start - fine.t_start) / fine.dt;
    let offset_i = offset.round();
    if (offset - offset_i).abs() > 1e-6 {
        return Err(Error::GridMismatch);
    }
    let offset_i = offset_i as i64;
    let n_fine = fine.samples.len() as i64;
    let mut sum = C64::new(0.0, 0.0);
    for (j, c) in coarse.samples.iter().enumerate() {
        let k = offset_i + j as i64 * stride;
        if (0..n_fine).contains(&k) {
            let f = fine.samples[k as usize];
            sum += if flip { f.conj() * c } else { c.conj() * f };
        }
    }
    Ok(sum * coarse.dt)
}

/// Envelope inner product: closed form for Gaussian pairs, quadrature otherwise.
pub fn envelope_overlap(a: &Envelope, b: &Envelope) -> Result<C64> {
    match (a, b) {
        (Envelope::Gaussian(ga), Envelope::Gaussian(gb)) => Ok(gaussian_overlap(ga, gb)),
        _ => quadrature_overlap(a, b),
    }
}

/// Polarization state `pH|H⟩ + pV|V⟩`.
#[derive(Clone, Copy, Debug)]
pub struct Polarization {
    h: C64,
    v: C64,
}

impl Polarization {
    pub fn new(h: C64, v: C64) -> Result<Self> {
        let n = h.norm_sqr() + v.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPolarization(format!(
                "|pH|^2 + |pV|^2 = {n}, expected 1"
            )));
        }
        Ok(Self::raw(h, v))
    }

    /// Rescales `(h, v)` to unit norm.
    pub fn normalized(h: C64, v: C64) -> Result<Self> {
        let n = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidPolarization("zero or non-finite vector".into()));
        }
        Ok(Self::raw(h / n, v / n))
    }

    fn raw(h: C64, v: C64) -> Self {
        let c = |z: C64| C64::new(canon(z.re), canon(z.im));
        Polarization { h: c(h), v: c(v) }
    }

    pub fn horizontal() -> Self {
        Self::raw(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn vertical() -> Self {
        Self::raw(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    /// (H + V)/√2
    pub fn diagonal() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::raw(C64::new(r, 0.0), C64::new(r, 0.0))
    }

    /// (H − V)/√2
    pub fn antidiagonal() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::raw(C64::new(r, 0.0), C64::new(-r, 0.0))
    }

    /// (H + iV)/√2
    pub fn right_circular() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::raw(C64::new(r, 0.0), C64::new(0.0, r))
    }

    /// (H − iV)/√2
    pub fn left_circular() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::raw(C64::new(r, 0.0), C64::new(0.0, -r))
    }

    pub fn h(&self) -> C64 {
        self.h
    }

    pub fn v(&self) -> C64 {
        self.v
    }

    pub fn conjugate(&self) -> Self {
        Self::raw(self.h.conj(), self.v.conj())
    }

    /// Applies `R(θ) = [[cos θ, sin θ], [−sin θ, cos θ]]` to `(pH, pV)`.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::raw(self.h * c + self.v * s, -self.h * s + self.v * c)
    }

    /// Applies a 2×2 matrix and returns the resulting unnormalized `(pH, pV)`.
    pub fn transformed(&self, m: &[[C64; 2]; 2]) -> (C64, C64) {
        (
            m[0][0] * self.h + m[0][1] * self.v,
            m[1][0] * self.h + m[1][1] * self.v,
        )
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        cmp_c64(&self.h, &other.h).then(cmp_c64(&self.v, &other.v))
    }
}

/// `⟨a|b⟩ = pH_a* pH_b + pV_a* pV_b`
pub fn polarization_overlap(a: &Polarization, b: &Polarization) -> C64 {
    a.h.conj() * b.h + a.v.conj() * b.v
}

impl PartialEq for Polarization {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}

impl Eq for Polarization {}

impl Hash for Polarization {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for x in [self.h.re, self.h.im, self.v.re, self.v.im] {
            x.to_bits().hash(state);
        }
    }
}

/// Single-photon mode: path, temporal envelope and polarization.
///
/// Labels are immutable values with structural equality. The total order is
/// lexicographic over (path, envelope, polarization, environment flag) with
/// Gaussian envelopes ordered by (τ, ω₀, σ) and sorted before sampled ones.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeLabel {
    path: PathId,
    envelope: Envelope,
    polarization: Polarization,
    environment: bool,
}

impl ModeLabel {
    pub fn new(path: PathId, envelope: Envelope, polarization: Polarization) -> Self {
        ModeLabel {
            path,
            envelope,
            polarization,
            environment: false,
        }
    }

    /// Convenience constructor for a Gaussian mode.
    pub fn gaussian(
        path: &str,
        sigma: f64,
        tau: f64,
        omega0: f64,
        polarization: Polarization,
    ) -> Result<Self> {
        Ok(Self::new(
            PathId::named(path),
            Envelope::gaussian(sigma, tau, omega0)?,
            polarization,
        ))
    }

    pub fn path(&self) -> &PathId {
        &self.path
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn polarization(&self) -> &Polarization {
        &self.polarization
    }

    pub fn is_environment(&self) -> bool {
        self.environment
    }

    /// Same internal state relocated to another path.
    pub fn with_path(&self, path: PathId) -> Self {
        ModeLabel {
            environment: path.is_environment(),
            path,
            ..self.clone()
        }
    }

    pub fn with_envelope(&self, envelope: Envelope) -> Self {
        ModeLabel {
            envelope,
            ..self.clone()
        }
    }

    pub fn with_polarization(&self, polarization: Polarization) -> Self {
        ModeLabel {
            polarization,
            ..self.clone()
        }
    }

    /// Label whose single-photon function is the complex conjugate of this one.
    pub fn conjugate(&self) -> Self {
        ModeLabel {
            envelope: self.envelope.conjugate(),
            polarization: self.polarization.conjugate(),
            ..self.clone()
        }
    }
}

impl PartialOrd for ModeLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ModeLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.path
            .cmp(&other.path)
            .then_with(|| self.envelope.cmp(&other.envelope))
            .then_with(|| self.polarization.cmp_key(&other.polarization))
            .then(self.environment.cmp(&other.environment))
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.envelope {
            Envelope::Gaussian(g) => write!(
                f,
                "{}[G(σ={}, τ={}, ω={})",
                self.path, g.sigma, g.tau, g.omega0
            )?,
            Envelope::Sampled(s) => write!(
                f,
                "{}[S(t0={}, dt={}, n={})",
                self.path,
                s.t_start,
                s.dt,
                s.samples.len()
            )?,
        }
        let p = &self.polarization;
        write!(f, ", pol=({:.4}, {:.4})]", p.h, p.v)
    }
}

/// `⟨a, b⟩ = δ(path) · ⟨env_a, env_b⟩ · ⟨pol_a|pol_b⟩`
pub fn mode_overlap(a: &ModeLabel, b: &ModeLabel) -> Result<C64> {
    if a.path != b.path {
        return Ok(C64::new(0.0, 0.0));
    }
    let pol = polarization_overlap(&a.polarization, &b.polarization);
    if pol == C64::new(0.0, 0.0) {
        return Ok(pol);
    }
    Ok(envelope_overlap(&a.envelope, &b.envelope)? * pol)
}
