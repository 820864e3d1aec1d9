//! Brute-force numerical reference used to cross-check the symbolic engine.
//!
//! Mode labels are orthonormalized by pivoted Cholesky and states are
//! expanded into dense truncated Fock vectors. Nothing here calls the
//! symbolic contraction routines; only mode overlaps are shared.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::algebra::OperatorPolynomial;
use crate::error::{Error, Result};
use crate::linalg::gram_matrix;
use crate::modes::{ModeLabel, PathId, C64};
use crate::states::{DensityOperator, KetState};

/// Rank tolerance of the pivoted Cholesky factorization.
pub const RANK_TOLERANCE: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn check_square(m: &DMatrix<C64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Validation(format!(
            "permanent needs a square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Permanent by Ryser's inclusion–exclusion formula with Gray-code updates.
pub fn permanent(m: &DMatrix<C64>) -> Result<C64> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(ONE);
    }
    if n > 20 {
        return Err(Error::Validation(format!("permanent of size {n} is too large")));
    }
    let mut row_sums = vec![ZERO; n];
    let mut total = ZERO;
    let mut gray = 0usize;
    for k in 1usize..(1 << n) {
        let next = k ^ (k >> 1);
        let j = (gray ^ next).trailing_zeros() as usize;
        let sign = if next & (1 << j) != 0 { 1.0 } else { -1.0 };
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += m[(i, j)] * sign;
        }
        gray = next;
        let prod: C64 = row_sums.iter().product();
        if next.count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    Ok(if n % 2 == 1 { -total } else { total })
}

/// Permanent as the plain sum over all permutations.
pub fn permanent_naive(m: &DMatrix<C64>) -> Result<C64> {
    let n = check_square(m)?;
    if n > 9 {
        return Err(Error::Validation(format!("naive permanent of size {n} is too large")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = ZERO;
    permute(m, &mut perm, 0, &mut total);
    Ok(total)
}

fn permute(m: &DMatrix<C64>, perm: &mut Vec<usize>, k: usize, total: &mut C64) {
    if k == perm.len() {
        *total += perm.iter().enumerate().map(|(i, &j)| m[(i, j)]).product::<C64>();
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(m, perm, k + 1, total);
        perm.swap(k, i);
    }
}

/// Orthonormal expansion of a set of mode labels.
///
/// `coeffs` is `n × r` with `coeffs · coeffs† = gram`; label `i` creates
/// `â†(m_i) = Σ_k conj(coeffs[i,k]) b̂†_k` over orthonormal modes `b_k`.
#[derive(Clone, Debug)]
pub struct GramBasis {
    labels: Vec<ModeLabel>,
    index: BTreeMap<ModeLabel, usize>,
    gram: DMatrix<C64>,
    coeffs: DMatrix<C64>,
}

impl GramBasis {
    pub fn new<I: IntoIterator<Item = ModeLabel>>(labels: I) -> Result<Self> {
        let mut labels: Vec<ModeLabel> = labels.into_iter().collect();
        labels.sort();
        labels.dedup();
        let gram = gram_matrix(&labels)?;
        let coeffs = pivoted_cholesky(&gram, RANK_TOLERANCE);
        Ok(Self::assemble(labels, gram, coeffs))
    }

    fn assemble(labels: Vec<ModeLabel>, gram: DMatrix<C64>, coeffs: DMatrix<C64>) -> Self {
        let index = labels.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        GramBasis {
            labels,
            index,
            gram,
            coeffs,
        }
    }

    /// Direct sum of bases over mutually orthogonal label sets; orthonormal
    /// modes of each block keep their order and follow the previous block.
    pub fn block_diagonal(blocks: &[GramBasis]) -> Self {
        let n: usize = blocks.iter().map(|b| b.labels.len()).sum();
        let r: usize = blocks.iter().map(|b| b.rank()).sum();
        let mut gram = DMatrix::from_element(n, n, ZERO);
        let mut coeffs = DMatrix::from_element(n, r, ZERO);
        let mut labels = Vec::with_capacity(n);
        let (mut row, mut col) = (0, 0);
        for b in blocks {
            let (bn, br) = (b.labels.len(), b.rank());
            gram.view_mut((row, row), (bn, bn)).copy_from(&b.gram);
            coeffs.view_mut((row, col), (bn, br)).copy_from(&b.coeffs);
            labels.extend(b.labels.iter().cloned());
            row += bn;
            col += br;
        }
        Self::assemble(labels, gram, coeffs)
    }

    /// Same expansion with every label moved to `path`.
    pub fn relocated(&self, path: &PathId) -> Self {
        let labels = self.labels.iter().map(|m| m.with_path(path.clone())).collect();
        Self::assemble(labels, self.gram.clone(), self.coeffs.clone())
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn gram(&self) -> &DMatrix<C64> {
        &self.gram
    }

    pub fn coeffs(&self) -> &DMatrix<C64> {
        &self.coeffs
    }

    /// Number of orthonormal modes.
    pub fn rank(&self) -> usize {
        self.coeffs.ncols()
    }

    /// `max |coeffs·coeffs† − gram|`
    pub fn reconstruction_error(&self) -> f64 {
        let diff = &self.coeffs * self.coeffs.adjoint() - &self.gram;
        diff.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    fn row(&self, m: &ModeLabel) -> Result<usize> {
        self.index
            .get(m)
            .copied()
            .ok_or_else(|| Error::Validation(format!("mode {m} is not in the oracle basis")))
    }

    /// Coefficients of `â†(m)` over the orthonormal creators.
    pub fn creation_coeffs(&self, m: &ModeLabel) -> Result<Vec<C64>> {
        let i = self.row(m)?;
        Ok(self.coeffs.row(i).iter().map(|c| c.conj()).collect())
    }

    /// Coefficients of `â(m)` over the orthonormal annihilators.
    pub fn annihilation_coeffs(&self, m: &ModeLabel) -> Result<Vec<C64>> {
        let i = self.row(m)?;
        Ok(self.coeffs.row(i).iter().copied().collect())
    }
}

/// Lower-trapezoidal `L` (n × rank) with `L L† = G`, pivoting on the largest
/// remaining diagonal and stopping once it falls to `tol`.
pub fn pivoted_cholesky(g: &DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    let n = g.nrows();
    let mut l = DMatrix::from_element(n, n, ZERO);
    let mut diag: Vec<f64> = (0..n).map(|i| g[(i, i)].re).collect();
    let mut used = vec![false; n];
    let mut rank = 0;
    for k in 0..n {
        // first index wins ties, so orthonormal modes follow label order
        let mut pivot = None;
        for i in (0..n).filter(|&i| !used[i]) {
            if pivot.is_none_or(|p: usize| diag[i] > diag[p]) {
                pivot = Some(i);
            }
        }
        let Some(p) = pivot else { break };
        if diag[p] <= tol {
            break;
        }
        used[p] = true;
        let lpp = diag[p].sqrt();
        l[(p, k)] = C64::new(lpp, 0.0);
        for i in 0..n {
            if used[i] {
                continue;
            }
            let mut v = g[(i, p)];
            for c in 0..k {
                v -= l[(i, c)] * l[(p, c)].conj();
            }
            l[(i, k)] = v / lpp;
            diag[i] -= l[(i, k)].norm_sqr();
        }
        rank += 1;
    }
    l.columns(0, rank).into_owned()
}

/// Dense vector over occupation tuples of `modes` orthonormal modes, each
/// truncated at `n_max` photons.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    modes: usize,
    n_max: usize,
    amplitudes: Vec<C64>,
}

impl FockVector {
    pub fn vacuum(modes: usize, n_max: usize) -> Result<Self> {
        let size = (n_max + 1)
            .checked_pow(modes as u32)
            .filter(|s| *s <= 1 << 24)
            .ok_or_else(|| {
                Error::Validation(format!("Fock space of {modes} modes at n_max = {n_max} is too large"))
            })?;
        let mut amplitudes = vec![ZERO; size];
        amplitudes[0] = ONE;
        Ok(FockVector {
            modes,
            n_max,
            amplitudes,
        })
    }

    pub fn zero_like(&self) -> Self {
        FockVector {
            amplitudes: vec![ZERO; self.amplitudes.len()],
            ..*self
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Occupation tuple of a flat index.
    pub fn occupations(&self, mut idx: usize) -> Vec<usize> {
        let base = self.n_max + 1;
        (0..self.modes)
            .map(|_| {
                let n = idx % base;
                idx /= base;
                n
            })
            .collect()
    }

    fn stride(&self, k: usize) -> usize {
        (self.n_max + 1).pow(k as u32)
    }

    pub fn amplitude(&self, occupations: &[usize]) -> C64 {
        let idx: usize = occupations
            .iter()
            .enumerate()
            .map(|(k, n)| n * self.stride(k))
            .sum();
        self.amplitudes[idx]
    }

    /// `Σ_k c_k b̂†_k`
    pub fn create(&self, coeffs: &[C64]) -> Result<Self> {
        let mut out = self.zero_like();
        for (k, &c) in coeffs.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let stride = self.stride(k);
            for (idx, &a) in self.amplitudes.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let n = (idx / stride) % (self.n_max + 1);
                if n == self.n_max {
                    return Err(Error::Truncation {
                        photons: n + 1,
                        n_max: self.n_max,
                    });
                }
                out.amplitudes[idx + stride] += c * a * ((n + 1) as f64).sqrt();
            }
        }
        Ok(out)
    }

    /// `Σ_k c_k b̂_k`
    pub fn annihilate(&self, coeffs: &[C64]) -> Self {
        let mut out = self.zero_like();
        for (k, &c) in coeffs.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let stride = self.stride(k);
            for (idx, &a) in self.amplitudes.iter().enumerate() {
                let n = (idx / stride) % (self.n_max + 1);
                if a == ZERO || n == 0 {
                    continue;
                }
                out.amplitudes[idx - stride] += c * a * (n as f64).sqrt();
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, c: C64) {
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += c * b;
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).re
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Action of a single-particle unitary `b̂†_k → Σ_i w[i,k] b̂†_i`.
    pub fn apply_mode_unitary(&self, w: &DMatrix<C64>) -> Result<Self> {
        let mut out = self.zero_like();
        let mut fact = vec![1.0f64; self.n_max + 1];
        for n in 1..=self.n_max {
            fact[n] = fact[n - 1] * n as f64;
        }
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let occ = self.occupations(idx);
            let mut v = FockVector::vacuum(self.modes, self.n_max)?;
            let mut norm = 1.0;
            for (k, &n) in occ.iter().enumerate() {
                let col: Vec<C64> = w.column(k).iter().copied().collect();
                for _ in 0..n {
                    v = v.create(&col)?;
                }
                norm *= fact[n];
            }
            out.add_scaled(&v, a / norm.sqrt());
        }
        Ok(out)
    }
}

/// `Π_i â†(m_i) |0⟩` in the orthonormal Fock space of `basis`.
pub fn embed_product(modes: &[ModeLabel], basis: &GramBasis, n_max: usize) -> Result<FockVector> {
    if modes.len() > n_max {
        return Err(Error::Truncation {
            photons: modes.len(),
            n_max,
        });
    }
    let mut v = FockVector::vacuum(basis.rank(), n_max)?;
    for m in modes {
        v = v.create(&basis.creation_coeffs(m)?)?;
    }
    Ok(v)
}

pub fn embed_ket(psi: &KetState, basis: &GramBasis, n_max: usize) -> Result<FockVector> {
    let photons = psi.max_photons();
    if photons > n_max {
        return Err(Error::Truncation { photons, n_max });
    }
    let mut out = FockVector::vacuum(basis.rank(), n_max)?.zero_like();
    for (modes, c) in psi.terms() {
        out.add_scaled(&embed_product(modes, basis, n_max)?, c);
    }
    Ok(out)
}

fn apply_annihilators(v: &FockVector, modes: &[ModeLabel], basis: &GramBasis) -> Result<FockVector> {
    let mut out = v.clone();
    for m in modes.iter().rev() {
        out = out.annihilate(&basis.annihilation_coeffs(m)?);
    }
    Ok(out)
}

/// `⟨χ| O |φ⟩` for a normally ordered `O`, evaluated as `⟨a(K)χ, a(L)φ⟩` per term.
fn sandwich(chi: &FockVector, obs: &OperatorPolynomial, phi: &FockVector, basis: &GramBasis) -> Result<C64> {
    let mut acc = ZERO;
    for (mono, o) in obs.terms() {
        let left = apply_annihilators(chi, mono.creations(), basis)?;
        let right = apply_annihilators(phi, mono.annihilations(), basis)?;
        acc += o * left.inner(&right);
    }
    Ok(acc)
}

/// `⟨ψ|O|ψ⟩` in the truncated Fock space.
pub fn oracle_ket_expectation(
    psi: &KetState,
    obs: &OperatorPolynomial,
    basis: &GramBasis,
    n_max: usize,
) -> Result<C64> {
    let v = embed_ket(psi, basis, n_max)?;
    sandwich(&v, obs, &v, basis)
}

/// `Tr(ρ O)` in the truncated Fock space.
pub fn oracle_expectation(
    rho: &DensityOperator,
    obs: &OperatorPolynomial,
    basis: &GramBasis,
    n_max: usize,
) -> Result<C64> {
    let mut cache: BTreeMap<Vec<ModeLabel>, FockVector> = BTreeMap::new();
    let mut acc = ZERO;
    for (term, c) in rho.terms() {
        for list in [term.ket(), term.bra()] {
            if !cache.contains_key(list) {
                cache.insert(list.to_vec(), embed_product(list, basis, n_max)?);
            }
        }
        let (phi, chi) = (&cache[term.ket()], &cache[term.bra()]);
        acc += c * sandwich(chi, obs, phi, basis)?;
    }
    Ok(acc)
}

/// Single-particle matrix of the beam splitter `[[c, s], [−s, c]]` acting
/// blockwise on `r` orthonormal internal modes, with the first `r` modes on
/// one arm and the next `r` on the other.
pub fn beam_splitter_modes(c: C64, s: C64, r: usize) -> DMatrix<C64> {
    let mut w = DMatrix::from_element(2 * r, 2 * r, ZERO);
    for k in 0..r {
        w[(k, k)] = c.conj();
        w[(r + k, k)] = -s.conj();
        w[(k, r + k)] = s.conj();
        w[(r + k, r + k)] = c.conj();
    }
    w
}
