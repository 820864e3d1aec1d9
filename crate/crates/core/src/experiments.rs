//! Hong–Ou–Mandel interference: coincidence operator, single runs and sweeps.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::algebra::{vacuum_contraction, OperatorPolynomial};
use crate::devices::{beam_splitter, ModeRegistry};
use crate::error::{Error, Result};
use crate::modes::{mode_overlap, ModeLabel, PathId, Polarization, C64};
use crate::par::Execution;
use crate::states::{number_operator, DensityOperator, KetState};

/// Largest allowed disagreement between the two coincidence routes.
pub const ROUTE_TOLERANCE: f64 = 1e-12;

/// `Ĉ = Π_p n̂_p` over the listed paths, with each `n̂_p` spanning the
/// listed modes of that path.
pub fn coincidence_operator(modes_by_path: &BTreeMap<PathId, Vec<ModeLabel>>) -> Result<OperatorPolynomial> {
    let mut c = OperatorPolynomial::identity();
    for (path, modes) in modes_by_path {
        if modes.is_empty() {
            return Err(Error::Validation(format!("no modes listed for path {path}")));
        }
        c = c.multiply(&number_operator(modes)?)?;
    }
    Ok(c)
}

/// Both evaluations of one HOM configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomOutcome {
    /// `⟨ψ′|Ĉ|ψ′⟩`
    pub p_coinc: f64,
    /// `‖ψ′_{1,1}‖²`, the one-photon-per-arm component
    pub p_postselected: f64,
    /// Internal overlap of the two photons.
    pub gamma: C64,
}

fn internal_overlap(m1: &ModeLabel, m2: &ModeLabel) -> Result<C64> {
    mode_overlap(&m1.with_path(m2.path().clone()), m2)
}

fn check_paths(m1: &ModeLabel, m2: &ModeLabel) -> Result<()> {
    if m1.path() == m2.path() {
        return Err(Error::Validation(format!(
            "HOM inputs must occupy different paths, both are on {}",
            m1.path()
        )));
    }
    Ok(())
}

/// Sends `â†(m₁)â†(m₂)|0⟩` through a balanced beam splitter and returns the
/// coincidence probability, computed with the coincidence operator and by
/// post-selection. Fails if the two disagree.
pub fn run_hom(m1: &ModeLabel, m2: &ModeLabel) -> Result<HomOutcome> {
    check_paths(m1, m2)?;
    let (pa, pb) = (m1.path().clone(), m2.path().clone());
    let psi = KetState::product(&[m1.clone(), m2.clone()]);
    let registry = ModeRegistry::from_ket(&psi);
    let half = C64::new(FRAC_1_SQRT_2, 0.0);
    let out = beam_splitter(half, half, &pa, &pb, &registry)?.apply(&psi)?;

    let mut by_path: BTreeMap<PathId, Vec<ModeLabel>> = BTreeMap::new();
    for m in out.modes() {
        by_path.entry(m.path().clone()).or_default().push(m);
    }
    by_path.entry(pa.clone()).or_default();
    by_path.entry(pb.clone()).or_default();
    let c = coincidence_operator(&by_path)?;
    let p_coinc = DensityOperator::from_ket(&out).expectation(&c)?.re;

    let p_postselected = out.project_counts(&[(pa, 1), (pb, 1)]).norm_sqr()?;
    if (p_coinc - p_postselected).abs() > ROUTE_TOLERANCE {
        return Err(Error::RouteMismatch {
            operator: p_coinc,
            postselected: p_postselected,
        });
    }
    Ok(HomOutcome {
        p_coinc,
        p_postselected,
        gamma: internal_overlap(m1, m2)?,
    })
}

/// The four vacuum terms `⟨O₁₂†O₁₂⟩, ⟨O₂₁†O₂₁⟩, ⟨O₁₂†O₂₁⟩, ⟨O₂₁†O₁₂⟩` with
/// `O₁₂ = â†(m₁ on arm 1) â†(m₂ on arm 2)` and `O₂₁` its arm swap.
pub fn hom_vacuum_terms(m1: &ModeLabel, m2: &ModeLabel) -> Result<[C64; 4]> {
    check_paths(m1, m2)?;
    let (p1, p2) = (m1.path().clone(), m2.path().clone());
    let o12 = [m1.clone(), m2.clone()];
    let o21 = [m1.with_path(p2), m2.with_path(p1)];
    Ok([
        vacuum_contraction(&o12, &o12)?,
        vacuum_contraction(&o21, &o21)?,
        vacuum_contraction(&o12, &o21)?,
        vacuum_contraction(&o21, &o12)?,
    ])
}

/// Fixed photon parameters and the delay/detuning grid of a sweep.
///
/// Cell `(Δτ, Δω)` uses photon 1 at `τ = Δτ/2, ω = ω₀ + Δω/2` on path
/// `in1` and photon 2 at `τ = −Δτ/2, ω = ω₀ − Δω/2` on path `in2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomConfig {
    pub sigma1: f64,
    pub sigma2: f64,
    pub omega0: f64,
    pub pol1: Polarization,
    pub pol2: Polarization,
    pub delta_tau: Vec<f64>,
    pub delta_omega: Vec<f64>,
}

impl HomConfig {
    pub fn modes(&self, delta_tau: f64, delta_omega: f64) -> Result<(ModeLabel, ModeLabel)> {
        let m1 = ModeLabel::gaussian(
            "in1",
            self.sigma1,
            delta_tau / 2.0,
            self.omega0 + delta_omega / 2.0,
            self.pol1,
        )?;
        let m2 = ModeLabel::gaussian(
            "in2",
            self.sigma2,
            -delta_tau / 2.0,
            self.omega0 - delta_omega / 2.0,
            self.pol2,
        )?;
        Ok((m1, m2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomCell {
    pub delta_tau: f64,
    pub delta_omega: f64,
    pub gamma_sq: f64,
    pub p_coinc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomResult {
    pub config: HomConfig,
    /// Row-major: `Δτ` outer, `Δω` inner.
    pub cells: Vec<HomCell>,
}

impl HomResult {
    pub fn rows(&self) -> usize {
        self.config.delta_tau.len()
    }

    pub fn cols(&self) -> usize {
        self.config.delta_omega.len()
    }

    pub fn cell(&self, i: usize, j: usize) -> &HomCell {
        &self.cells[i * self.cols() + j]
    }
}

pub fn sweep_hom(config: &HomConfig, exec: Execution) -> Result<HomResult> {
    let grid: Vec<(f64, f64)> = config
        .delta_tau
        .iter()
        .flat_map(|&t| config.delta_omega.iter().map(move |&w| (t, w)))
        .collect();
    let cells = exec
        .map(&grid, |&(delta_tau, delta_omega)| {
            let (m1, m2) = config.modes(delta_tau, delta_omega)?;
            let out = run_hom(&m1, &m2)?;
            Ok(HomCell {
                delta_tau,
                delta_omega,
                gamma_sq: out.gamma.norm_sqr(),
                p_coinc: out.p_coinc,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(HomResult {
        config: config.clone(),
        cells,
    })
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
