//! Kets, density operators and the contractions that evaluate them.
//!
//! A ket is a creation-only polynomial acting on the vacuum. A density
//! operator is kept in factored form `Σ c_{I,J} M(I|∅)|0⟩⟨0|M(J|∅)†`, keyed
//! by the pair of creation lists. Traces, partial traces and expectation
//! values all reduce to vacuum contractions of ladder words.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::algebra::{vacuum_contraction, NormalMonomial, OperatorPolynomial};
use crate::error::{Error, Result};
use crate::linalg::{gram_matrix, hermitian_pinv};
use crate::modes::{mode_overlap, ModeLabel, PathId, C64};

/// Squared norms below this are treated as an annihilated state.
pub const ZERO_NORM_THRESHOLD: f64 = 1e-14;
/// Gram eigenvalues at or below this are dropped when inverting.
const GRAM_RANK_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);

fn path_counts(modes: &[ModeLabel]) -> BTreeMap<&PathId, usize> {
    let mut counts = BTreeMap::new();
    for m in modes {
        *counts.entry(m.path()).or_insert(0) += 1;
    }
    counts
}

fn count_on(modes: &[ModeLabel], path: &PathId) -> usize {
    modes.iter().filter(|m| m.path() == path).count()
}

/// Pure state `Σ c_I M(I|∅)|0⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct KetState {
    poly: OperatorPolynomial,
}

impl KetState {
    pub fn vacuum() -> Self {
        KetState {
            poly: OperatorPolynomial::identity(),
        }
    }

    pub fn from_polynomial(poly: OperatorPolynomial) -> Result<Self> {
        if poly.terms().any(|(m, _)| !m.annihilations().is_empty()) {
            return Err(Error::NotAKet);
        }
        Ok(KetState { poly })
    }

    pub fn single_photon(m: ModeLabel) -> Self {
        KetState {
            poly: OperatorPolynomial::creation(m),
        }
    }

    /// `â†(m₁)…â†(m_k)|0⟩`
    pub fn product(modes: &[ModeLabel]) -> Self {
        KetState {
            poly: OperatorPolynomial::from_monomial(
                NormalMonomial::new(modes.to_vec(), vec![]),
                C64::new(1.0, 0.0),
            ),
        }
    }

    pub fn polynomial(&self) -> &OperatorPolynomial {
        &self.poly
    }

    pub fn into_polynomial(self) -> OperatorPolynomial {
        self.poly
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[ModeLabel], C64)> {
        self.poly.terms().map(|(m, c)| (m.creations(), *c))
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn modes(&self) -> BTreeSet<ModeLabel> {
        self.poly.modes()
    }

    /// Largest photon number among the terms.
    pub fn max_photons(&self) -> usize {
        self.terms().map(|(i, _)| i.len()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: C64) -> Self {
        KetState {
            poly: self.poly.scale(c),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        KetState {
            poly: &self.poly + &other.poly,
        }
    }

    /// `â†(m)|ψ⟩`
    pub fn with_creation(&self, m: &ModeLabel) -> Self {
        let poly = OperatorPolynomial::from_terms(self.poly.terms().map(|(mono, c)| {
            let mut creations = mono.creations().to_vec();
            creations.push(m.clone());
            (NormalMonomial::new(creations, vec![]), *c)
        }));
        KetState { poly }
    }

    /// Keeps only the terms with exactly the requested photon count on each listed path.
    pub fn project_counts(&self, counts: &[(PathId, usize)]) -> Self {
        let poly = OperatorPolynomial::from_terms(
            self.poly
                .terms()
                .filter(|(m, _)| counts.iter().all(|(p, n)| count_on(m.creations(), p) == *n))
                .map(|(m, c)| (m.clone(), *c)),
        );
        KetState { poly }
    }

    pub fn norm_sqr(&self) -> Result<f64> {
        Ok(inner_product(self, self)?.re)
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr()?;
        if n < ZERO_NORM_THRESHOLD {
            return Err(Error::ZeroNorm(n));
        }
        Ok(self.scale(C64::new(1.0 / n.sqrt(), 0.0)))
    }
}

/// `⟨a|b⟩ = Σ c_I* d_I' ⟨0|M(I|∅)† M(I'|∅)|0⟩`
pub fn inner_product(a: &KetState, b: &KetState) -> Result<C64> {
    let rhs: Vec<_> = b
        .terms()
        .map(|(modes, c)| (modes, c, path_counts(modes)))
        .collect();
    let mut acc = ZERO;
    for (left, cl) in a.terms() {
        let counts = path_counts(left);
        for (right, cr, rc) in &rhs {
            // different paths never contract
            if counts != *rc {
                continue;
            }
            acc += cl.conj() * cr * vacuum_contraction(left, right)?;
        }
    }
    Ok(acc)
}

/// Key of one factor `M(I|∅)|0⟩⟨0|M(J|∅)†`; both lists sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DensityTerm {
    ket: Vec<ModeLabel>,
    bra: Vec<ModeLabel>,
}

impl DensityTerm {
    pub fn new(mut ket: Vec<ModeLabel>, mut bra: Vec<ModeLabel>) -> Self {
        ket.sort();
        bra.sort();
        DensityTerm { ket, bra }
    }

    pub fn ket(&self) -> &[ModeLabel] {
        &self.ket
    }

    pub fn bra(&self) -> &[ModeLabel] {
        &self.bra
    }

    fn swapped(&self) -> Self {
        DensityTerm {
            ket: self.bra.clone(),
            bra: self.ket.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensityOperator {
    terms: BTreeMap<DensityTerm, C64>,
}

impl DensityOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn vacuum() -> Self {
        Self::from_ket(&KetState::vacuum())
    }

    /// `|ψ⟩⟨ψ|` with `c_{I,J} = c_I c_J*`.
    pub fn from_ket(psi: &KetState) -> Self {
        let terms: Vec<_> = psi.terms().collect();
        Self::from_terms(terms.iter().flat_map(|(i, ci)| {
            terms
                .iter()
                .map(move |(j, cj)| (DensityTerm::new(i.to_vec(), j.to_vec()), ci * cj.conj()))
        }))
    }

    pub fn from_terms<I: IntoIterator<Item = (DensityTerm, C64)>>(iter: I) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in iter {
            *terms.entry(k).or_insert(ZERO) += c;
        }
        terms.retain(|_, c: &mut C64| c.norm() >= crate::algebra::PRUNE_THRESHOLD);
        DensityOperator { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DensityTerm, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, ket: &[ModeLabel], bra: &[ModeLabel]) -> C64 {
        self.terms
            .get(&DensityTerm::new(ket.to_vec(), bra.to_vec()))
            .copied()
            .unwrap_or(ZERO)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_terms(self.terms.iter().map(|(k, v)| (k.clone(), v * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(k, v)| (k.clone(), *v)),
        )
    }

    pub fn modes(&self) -> BTreeSet<ModeLabel> {
        self.terms
            .keys()
            .flat_map(|k| k.ket.iter().chain(&k.bra))
            .cloned()
            .collect()
    }

    pub fn paths(&self) -> BTreeSet<PathId> {
        self.modes().into_iter().map(|m| m.path().clone()).collect()
    }

    /// Largest `|c_{I,J} − c_{J,I}*|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let partner = self.terms.get(&k.swapped()).copied().unwrap_or(ZERO);
                (c - partner.conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `Tr ρ = Σ c_{I,J} ⟨0|M(J|∅)† M(I|∅)|0⟩`
    pub fn trace(&self) -> Result<C64> {
        let mut acc = ZERO;
        for (k, c) in &self.terms {
            if path_counts(&k.ket) != path_counts(&k.bra) {
                continue;
            }
            acc += c * vacuum_contraction(&k.bra, &k.ket)?;
        }
        Ok(acc)
    }

    /// Rescales to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace()?.re;
        if t < ZERO_NORM_THRESHOLD {
            return Err(Error::ZeroNorm(t));
        }
        Ok(self.scale(C64::new(1.0 / t, 0.0)))
    }

    /// Traces out every mode living on one of `env_paths`.
    ///
    /// Each factor splits as `M(I_S|∅)M(I_E|∅)`; the environment parts
    /// contract to the scalar `⟨0|M(J_E|∅)† M(I_E|∅)|0⟩`.
    pub fn partial_trace(&self, env_paths: &BTreeSet<PathId>) -> Result<Self> {
        if env_paths.is_empty() {
            return Ok(self.clone());
        }
        let split = |list: &[ModeLabel]| -> (Vec<ModeLabel>, Vec<ModeLabel>) {
            list.iter().cloned().partition(|m| !env_paths.contains(m.path()))
        };
        let mut out = Vec::with_capacity(self.terms.len());
        for (k, c) in &self.terms {
            let (ket_s, ket_e) = split(&k.ket);
            let (bra_s, bra_e) = split(&k.bra);
            if path_counts(&ket_e) != path_counts(&bra_e) {
                continue;
            }
            let factor = vacuum_contraction(&bra_e, &ket_e)?;
            if factor != ZERO {
                out.push((DensityTerm::new(ket_s, bra_s), c * factor));
            }
        }
        Ok(Self::from_terms(out))
    }

    /// `Tr(ρ O) = Σ c_{I,J} ⟨0|M(J|∅)† O M(I|∅)|0⟩`
    pub fn expectation(&self, obs: &OperatorPolynomial) -> Result<C64> {
        let table = OverlapTable::new(
            self.terms
                .keys()
                .flat_map(|k| k.ket.iter().chain(&k.bra))
                .chain(obs.terms().flat_map(|(m, _)| m.creations().iter().chain(m.annihilations()))),
        )?;
        let indexed = |list: &[ModeLabel]| list.iter().map(|x| table.index(x)).collect::<Vec<_>>();
        let factors: Vec<_> = self.terms.iter().map(|(k, c)| (indexed(&k.ket), indexed(&k.bra), *c)).collect();
        let monomials: Vec<_> = obs
            .terms()
            .map(|(m, o)| (indexed(m.annihilations()), indexed(m.creations()), *o))
            .collect();
        let mut acc = ZERO;
        let mut word = Vec::new();
        let mut need = vec![[0i64; 4]; table.paths];
        for (ket, bra, c) in &factors {
            for (an, cr, o) in &monomials {
                // ⟨0|â† = 0: creators of O must be absorbed by the bra, annihilators by the ket
                if cr.len() > bra.len() || an.len() > ket.len() || bra.len() + an.len() != ket.len() + cr.len() {
                    continue;
                }
                // per path: â(L) needs photons in the ket, â†(K) in the bra, and the rest must balance
                need.iter_mut().for_each(|n| *n = [0; 4]);
                for (slot, list) in [ket, an, bra, cr].into_iter().enumerate() {
                    for &x in list {
                        need[table.path_of[x]][slot] += 1;
                    }
                }
                if need
                    .iter()
                    .any(|[ket, a, bra, c]| a > ket || c > bra || ket - a != bra - c)
                {
                    continue;
                }
                word.clear();
                word.extend(bra.iter().map(|&x| (false, x)));
                word.extend(cr.iter().map(|&x| (true, x)));
                word.extend(an.iter().map(|&x| (false, x)));
                word.extend(ket.iter().map(|&x| (true, x)));
                acc += c * o * table.contract(&word)?;
            }
        }
        Ok(acc)
    }

    /// Keeps the factors whose ket and bra lists both satisfy `keep`
    /// (the action of a projector that is diagonal in per-path photon number).
    pub fn filter_terms<F: Fn(&[ModeLabel]) -> bool>(&self, keep: F) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(k, _)| keep(&k.ket) && keep(&k.bra))
                .map(|(k, c)| (k.clone(), *c)),
        )
    }
}

/// Overlaps among a fixed set of modes, for repeated word contraction.
struct OverlapTable<'a> {
    index: BTreeMap<&'a ModeLabel, usize>,
    path_of: Vec<usize>,
    paths: usize,
    n: usize,
    overlaps: Vec<C64>,
}

impl<'a> OverlapTable<'a> {
    fn new(modes: impl Iterator<Item = &'a ModeLabel>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for m in modes {
            let next = index.len();
            index.entry(m).or_insert(next);
        }
        let mut labels = vec![None; index.len()];
        for (m, &i) in &index {
            labels[i] = Some(*m);
        }
        let labels: Vec<&ModeLabel> = labels.into_iter().flatten().collect();
        let n = labels.len();
        let mut overlaps = vec![ZERO; n * n];
        for i in 0..n {
            for j in i..n {
                let z = mode_overlap(labels[i], labels[j])?;
                overlaps[i * n + j] = z;
                overlaps[j * n + i] = z.conj();
            }
        }
        let mut path_ids: BTreeMap<&PathId, usize> = BTreeMap::new();
        let path_of = labels
            .iter()
            .map(|m| {
                let next = path_ids.len();
                *path_ids.entry(m.path()).or_insert(next)
            })
            .collect();
        Ok(Self {
            index,
            path_of,
            paths: path_ids.len(),
            n,
            overlaps,
        })
    }

    fn index(&self, m: &ModeLabel) -> usize {
        self.index[m]
    }

    /// `⟨0|w|0⟩` for a word of `(is_creation, mode index)` pairs.
    fn contract(&self, word: &[(bool, usize)]) -> Result<C64> {
        if word.len() > 64 {
            return Err(Error::Validation(format!(
                "word of {} operators is too long for contraction",
                word.len()
            )));
        }
        if 2 * word.iter().filter(|w| w.0).count() != word.len() {
            return Ok(ZERO);
        }
        let full = if word.len() == 64 { u64::MAX } else { (1u64 << word.len()) - 1 };
        // short words are cheaper to expand than to memoize
        let mut memo = (word.len() > 12).then(HashMap::new);
        Ok(self.contract_rest(word, full, &mut memo))
    }

    fn contract_rest(&self, word: &[(bool, usize)], remaining: u64, memo: &mut Option<HashMap<u64, C64>>) -> C64 {
        if remaining == 0 {
            return C64::new(1.0, 0.0);
        }
        if let Some(v) = memo.as_ref().and_then(|m| m.get(&remaining)) {
            return *v;
        }
        let p = remaining.trailing_zeros() as usize;
        let mut acc = ZERO;
        let (created, a) = word[p];
        if !created {
            let without_p = remaining & !(1u64 << p);
            let mut rest = without_p;
            while rest != 0 {
                let q = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if word[q].0 {
                    let ov = self.overlaps[a * self.n + word[q].1];
                    if ov != ZERO {
                        acc += ov * self.contract_rest(word, without_p & !(1u64 << q), memo);
                    }
                }
            }
        }
        if let Some(m) = memo {
            m.insert(remaining, acc);
        }
        acc
    }
}

/// Photon-number operator over the span of `modes`.
///
/// Modes are grouped by path; within a path the operator is
/// `Σ_{αβ} (G⁺)_{αβ} â†(m_α) â(m_β)` with `G` the Gram matrix, which equals
/// `Σ_k b̂†_k b̂_k` for any orthonormal basis `b_k` of the span and reduces to
/// `Σ_α â†(m_α) â(m_α)` when the modes are orthonormal.
pub fn number_operator(modes: &[ModeLabel]) -> Result<OperatorPolynomial> {
    let unique: BTreeSet<ModeLabel> = modes.iter().cloned().collect();
    let mut by_path: BTreeMap<PathId, Vec<ModeLabel>> = BTreeMap::new();
    for m in unique {
        by_path.entry(m.path().clone()).or_default().push(m);
    }
    let mut terms = Vec::new();
    for list in by_path.values() {
        let g = gram_matrix(list)?;
        let inv = hermitian_pinv(&g, GRAM_RANK_TOL);
        for (a, ma) in list.iter().enumerate() {
            for (b, mb) in list.iter().enumerate() {
                terms.push((
                    NormalMonomial::new(vec![ma.clone()], vec![mb.clone()]),
                    inv[(a, b)],
                ));
            }
        }
    }
    Ok(OperatorPolynomial::from_terms(terms))
}

/// Number operator for every mode of `state_modes` that lives on `path`.
pub fn path_number_operator(
    state_modes: &BTreeSet<ModeLabel>,
    path: &PathId,
) -> Result<OperatorPolynomial> {
    let on_path: Vec<ModeLabel> = state_modes
        .iter()
        .filter(|m| m.path() == path)
        .cloned()
        .collect();
    number_operator(&on_path)
}
