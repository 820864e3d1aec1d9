//! Ladder operators, normally ordered monomials and sparse polynomials over
//! the CCR algebra `[â(m), â†(n)] = ⟨m, n⟩𝟙`.
//!
//! Every [`OperatorPolynomial`] is kept in normal order with both operator
//! lists of each monomial sorted under the [`ModeLabel`] order, so equal
//! operators have identical term maps. Products are normal-ordered on the fly:
//! right-multiplying `M(I|J)` by `â†(c)` gives
//! `M(I+c|J) + Σ_r ⟨J_r, c⟩ M(I|J∖J_r)`, which is the commutation rule applied
//! once per annihilator that the creator has to pass.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::modes::{mode_overlap, ModeLabel, C64};

pub const DEFAULT_TERM_CAP: usize = 1_000_000;
/// Coefficients below this magnitude are dropped after every arithmetic pass.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LadderKind {
    Create,
    Annihilate,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LadderOperator {
    pub kind: LadderKind,
    pub mode: ModeLabel,
}

impl LadderOperator {
    pub fn creation(mode: ModeLabel) -> Self {
        LadderOperator {
            kind: LadderKind::Create,
            mode,
        }
    }

    pub fn annihilation(mode: ModeLabel) -> Self {
        LadderOperator {
            kind: LadderKind::Annihilate,
            mode,
        }
    }

    pub fn adjoint(&self) -> Self {
        let kind = match self.kind {
            LadderKind::Create => LadderKind::Annihilate,
            LadderKind::Annihilate => LadderKind::Create,
        };
        LadderOperator {
            kind,
            mode: self.mode.clone(),
        }
    }

    pub fn is_creation(&self) -> bool {
        self.kind == LadderKind::Create
    }
}

/// Product of ladder operators in arbitrary order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OperatorWord {
    ops: Vec<LadderOperator>,
}

impl OperatorWord {
    pub fn new(ops: Vec<LadderOperator>) -> Self {
        OperatorWord { ops }
    }

    pub fn ops(&self) -> &[LadderOperator] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

impl FromIterator<LadderOperator> for OperatorWord {
    fn from_iter<T: IntoIterator<Item = LadderOperator>>(iter: T) -> Self {
        OperatorWord::new(iter.into_iter().collect())
    }
}

/// `M(I|J)`: the creators `I` followed by the annihilators `J`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalMonomial {
    creations: Vec<ModeLabel>,
    annihilations: Vec<ModeLabel>,
}

impl NormalMonomial {
    pub fn new(mut creations: Vec<ModeLabel>, mut annihilations: Vec<ModeLabel>) -> Self {
        creations.sort();
        annihilations.sort();
        NormalMonomial {
            creations,
            annihilations,
        }
    }

    pub fn identity() -> Self {
        NormalMonomial::default()
    }

    pub fn creations(&self) -> &[ModeLabel] {
        &self.creations
    }

    pub fn annihilations(&self) -> &[ModeLabel] {
        &self.annihilations
    }

    pub fn is_identity(&self) -> bool {
        self.creations.is_empty() && self.annihilations.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.creations.len() + self.annihilations.len()
    }

    pub fn adjoint(&self) -> Self {
        NormalMonomial {
            creations: self.annihilations.clone(),
            annihilations: self.creations.clone(),
        }
    }

    pub fn to_word(&self) -> OperatorWord {
        self.creations
            .iter()
            .cloned()
            .map(LadderOperator::creation)
            .chain(self.annihilations.iter().cloned().map(LadderOperator::annihilation))
            .collect()
    }
}

impl fmt::Display for NormalMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "1");
        }
        let mut first = true;
        for m in &self.creations {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "a+({m})")?;
            first = false;
        }
        for m in &self.annihilations {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "a({m})")?;
            first = false;
        }
        Ok(())
    }
}

/// Sparse complex combination of normally ordered monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorPolynomial {
    terms: BTreeMap<NormalMonomial, C64>,
}

struct Partial {
    creations: Vec<ModeLabel>,
    annihilations: Vec<ModeLabel>,
    coeff: C64,
}

fn sorted_insert(list: &mut Vec<ModeLabel>, m: ModeLabel) {
    let pos = list.partition_point(|x| x <= &m);
    list.insert(pos, m);
}

/// Accumulates `coeff · left · right` in normal order into `out`.
fn expand_product(
    left: &NormalMonomial,
    coeff: C64,
    right: &NormalMonomial,
    cap: usize,
    out: &mut BTreeMap<NormalMonomial, C64>,
) -> Result<()> {
    let mut partials = vec![Partial {
        creations: left.creations.clone(),
        annihilations: left.annihilations.clone(),
        coeff,
    }];
    for c in &right.creations {
        let mut next = Vec::with_capacity(partials.len() * 2);
        for p in partials {
            for (r, a) in p.annihilations.iter().enumerate() {
                let ov = mode_overlap(a, c)?;
                if ov == ZERO {
                    continue;
                }
                let mut annihilations = p.annihilations.clone();
                annihilations.remove(r);
                next.push(Partial {
                    creations: p.creations.clone(),
                    annihilations,
                    coeff: p.coeff * ov,
                });
            }
            let mut creations = p.creations;
            sorted_insert(&mut creations, c.clone());
            next.push(Partial {
                creations,
                annihilations: p.annihilations,
                coeff: p.coeff,
            });
            if next.len() > cap {
                return Err(Error::Capacity {
                    terms: next.len(),
                    cap,
                });
            }
        }
        partials = next;
    }
    for mut p in partials {
        for a in &right.annihilations {
            sorted_insert(&mut p.annihilations, a.clone());
        }
        let key = NormalMonomial {
            creations: p.creations,
            annihilations: p.annihilations,
        };
        *out.entry(key).or_insert(ZERO) += p.coeff;
    }
    if out.len() > cap {
        return Err(Error::Capacity {
            terms: out.len(),
            cap,
        });
    }
    Ok(())
}

fn prune(terms: &mut BTreeMap<NormalMonomial, C64>) {
    terms.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
}

impl OperatorPolynomial {
    pub fn zero() -> Self {
        OperatorPolynomial::default()
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(c: C64) -> Self {
        Self::from_monomial(NormalMonomial::identity(), c)
    }

    pub fn from_monomial(m: NormalMonomial, c: C64) -> Self {
        let mut terms = BTreeMap::new();
        if c.norm() >= PRUNE_THRESHOLD {
            terms.insert(m, c);
        }
        OperatorPolynomial { terms }
    }

    pub fn creation(m: ModeLabel) -> Self {
        Self::from_monomial(NormalMonomial::new(vec![m], vec![]), ONE)
    }

    pub fn annihilation(m: ModeLabel) -> Self {
        Self::from_monomial(NormalMonomial::new(vec![], vec![m]), ONE)
    }

    pub fn ladder(op: &LadderOperator) -> Self {
        match op.kind {
            LadderKind::Create => Self::creation(op.mode.clone()),
            LadderKind::Annihilate => Self::annihilation(op.mode.clone()),
        }
    }

    /// Sums `(monomial, coefficient)` pairs, merging repeats.
    pub fn from_terms<I: IntoIterator<Item = (NormalMonomial, C64)>>(iter: I) -> Self {
        let mut terms = BTreeMap::new();
        for (m, c) in iter {
            *terms.entry(m).or_insert(ZERO) += c;
        }
        prune(&mut terms);
        OperatorPolynomial { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NormalMonomial, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &NormalMonomial) -> C64 {
        self.terms.get(m).copied().unwrap_or(ZERO)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `⟨0|P|0⟩`: only the identity monomial survives on the vacuum.
    pub fn vacuum_expectation(&self) -> C64 {
        self.coefficient(&NormalMonomial::identity())
    }

    pub fn modes(&self) -> BTreeSet<ModeLabel> {
        self.terms
            .keys()
            .flat_map(|m| m.creations.iter().chain(&m.annihilations))
            .cloned()
            .collect()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, v)| (m.clone(), v * c)))
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.multiply_with_cap(other, DEFAULT_TERM_CAP)
    }

    pub fn multiply_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (ml, cl) in &self.terms {
            for (mr, cr) in &other.terms {
                expand_product(ml, cl * cr, mr, cap, &mut out)?;
            }
        }
        prune(&mut out);
        Ok(OperatorPolynomial { terms: out })
    }

    /// `P† = Σ c* M(J|I)`
    pub fn adjoint(&self) -> Self {
        OperatorPolynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.adjoint(), c.conj()))
                .collect(),
        }
    }

    /// Replaces every ladder operator by its image under `subst` and
    /// re-normal-orders the expanded products.
    pub fn substitute(&self, subst: &Substitution) -> Result<Self> {
        self.substitute_with_cap(subst, DEFAULT_TERM_CAP)
    }

    pub fn substitute_with_cap(&self, subst: &Substitution, cap: usize) -> Result<Self> {
        let mut out = OperatorPolynomial::zero();
        for (m, c) in &self.terms {
            let mut acc = OperatorPolynomial::scalar(*c);
            for op in m.to_word().ops() {
                acc = acc.multiply_with_cap(&subst.image(op), cap)?;
            }
            out = &out + &acc;
            if out.len() > cap {
                return Err(Error::Capacity {
                    terms: out.len(),
                    cap,
                });
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let keys: BTreeSet<&NormalMonomial> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter()
            .map(|k| (self.coefficient(k) - other.coefficient(k)).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }
}

impl fmt::Display for OperatorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c:.6}) {m}")?;
        }
        Ok(())
    }
}

impl Add for &OperatorPolynomial {
    type Output = OperatorPolynomial;

    fn add(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        let mut terms = self.terms.clone();
        for (m, c) in &rhs.terms {
            *terms.entry(m.clone()).or_insert(ZERO) += c;
        }
        prune(&mut terms);
        OperatorPolynomial { terms }
    }
}

impl Sub for &OperatorPolynomial {
    type Output = OperatorPolynomial;

    fn sub(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &OperatorPolynomial {
    type Output = OperatorPolynomial;

    fn neg(self) -> OperatorPolynomial {
        OperatorPolynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul<C64> for &OperatorPolynomial {
    type Output = OperatorPolynomial;

    fn mul(self, rhs: C64) -> OperatorPolynomial {
        self.scale(rhs)
    }
}

/// Normal-orders an arbitrary product of ladder operators.
pub fn normal_order(word: &OperatorWord) -> Result<OperatorPolynomial> {
    normal_order_with_cap(word, DEFAULT_TERM_CAP)
}

pub fn normal_order_with_cap(word: &OperatorWord, cap: usize) -> Result<OperatorPolynomial> {
    let mut acc = OperatorPolynomial::identity();
    for op in word.ops() {
        acc = acc.multiply_with_cap(&OperatorPolynomial::ladder(op), cap)?;
    }
    Ok(acc)
}

/// `⟨0| â(a₁)…â(a_k) â†(c₁)…â†(c_k) |0⟩`, the sum over complete pairings of
/// annihilators with creators (the permanent of the cross-overlap matrix).
///
/// Evaluated by contracting annihilators one at a time, memoized on the set
/// of creators already used.
pub fn vacuum_contraction(annihilations: &[ModeLabel], creations: &[ModeLabel]) -> Result<C64> {
    let n = annihilations.len();
    if n != creations.len() {
        return Ok(ZERO);
    }
    if n == 0 {
        return Ok(ONE);
    }
    if n > 24 {
        return Err(Error::Validation(format!(
            "vacuum contraction of {n} photons exceeds the supported size"
        )));
    }
    let mut overlaps = vec![ZERO; n * n];
    for (i, a) in annihilations.iter().enumerate() {
        for (j, c) in creations.iter().enumerate() {
            overlaps[i * n + j] = mode_overlap(a, c)?;
        }
    }
    // table[mask] = contraction of the first popcount(mask) annihilators with the creators in mask
    let mut table = vec![ZERO; 1 << n];
    table[0] = ONE;
    for mask in 1usize..(1 << n) {
        let row = mask.count_ones() as usize - 1;
        let mut acc = ZERO;
        let mut bits = mask;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let ov = overlaps[row * n + j];
            if ov != ZERO {
                acc += ov * table[mask & !(1 << j)];
            }
        }
        table[mask] = acc;
    }
    Ok(table[(1 << n) - 1])
}

/// Vacuum expectation `⟨0|w|0⟩` of an arbitrary word, by recursive
/// contraction of the leftmost annihilator with every creator to its right.
pub fn word_vacuum_expectation(word: &OperatorWord) -> Result<C64> {
    let ops = word.ops();
    let n = ops.len();
    if n > 64 {
        return Err(Error::Validation(format!(
            "word of {n} operators is too long for contraction"
        )));
    }
    let creators = ops.iter().filter(|o| o.is_creation()).count();
    if 2 * creators != n {
        return Ok(ZERO);
    }
    let mut overlaps = HashMap::new();
    for (p, a) in ops.iter().enumerate().filter(|(_, o)| !o.is_creation()) {
        for (q, c) in ops.iter().enumerate().skip(p + 1).filter(|(_, o)| o.is_creation()) {
            let ov = mode_overlap(&a.mode, &c.mode)?;
            if ov != ZERO {
                overlaps.insert((p, q), ov);
            }
        }
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut memo = HashMap::new();
    Ok(contract_word(ops, full, &overlaps, &mut memo))
}

fn contract_word(
    ops: &[LadderOperator],
    remaining: u64,
    overlaps: &HashMap<(usize, usize), C64>,
    memo: &mut HashMap<u64, C64>,
) -> C64 {
    if remaining == 0 {
        return ONE;
    }
    if let Some(v) = memo.get(&remaining) {
        return *v;
    }
    let p = remaining.trailing_zeros() as usize;
    let mut acc = ZERO;
    if !ops[p].is_creation() {
        let mut rest = remaining & !(1u64 << p);
        let without_p = rest;
        while rest != 0 {
            let q = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if let Some(ov) = overlaps.get(&(p, q)) {
                acc += ov * contract_word(ops, without_p & !(1u64 << q), overlaps, memo);
            }
        }
    }
    memo.insert(remaining, acc);
    acc
}

/// Rewrite table for ladder operators; unmapped modes map to themselves.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    annihilation: BTreeMap<ModeLabel, OperatorPolynomial>,
    creation: BTreeMap<ModeLabel, OperatorPolynomial>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Explicit tables for `â(m)` and `â†(m)`.
    pub fn from_maps(
        annihilation: BTreeMap<ModeLabel, OperatorPolynomial>,
        creation: BTreeMap<ModeLabel, OperatorPolynomial>,
    ) -> Self {
        Substitution {
            annihilation,
            creation,
        }
    }

    /// Sets the image of `â†(m)`; the image of `â(m)` becomes its adjoint.
    pub fn set_creation(&mut self, m: ModeLabel, image: OperatorPolynomial) {
        self.annihilation.insert(m.clone(), image.adjoint());
        self.creation.insert(m, image);
    }

    /// Sets the image of `â(m)`; the image of `â†(m)` becomes its adjoint.
    pub fn set_annihilation(&mut self, m: ModeLabel, image: OperatorPolynomial) {
        self.creation.insert(m.clone(), image.adjoint());
        self.annihilation.insert(m, image);
    }

    pub fn image(&self, op: &LadderOperator) -> OperatorPolynomial {
        let table = match op.kind {
            LadderKind::Create => &self.creation,
            LadderKind::Annihilate => &self.annihilation,
        };
        table
            .get(&op.mode)
            .cloned()
            .unwrap_or_else(|| OperatorPolynomial::ladder(op))
    }

    /// True when some creator image contains annihilators (or vice versa).
    pub fn mixes_creation_and_annihilation(&self) -> bool {
        self.creation
            .values()
            .flat_map(|p| p.terms.keys())
            .any(|m| !m.annihilations.is_empty())
            || self
                .annihilation
                .values()
                .flat_map(|p| p.terms.keys())
                .any(|m| !m.creations.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{PathId, Polarization};

    fn mode(path: &str, tau: f64) -> ModeLabel {
        ModeLabel::gaussian(path, 1.0, tau, 0.7, Polarization::horizontal()).unwrap()
    }

    fn cr(m: &ModeLabel) -> LadderOperator {
        LadderOperator::creation(m.clone())
    }

    fn an(m: &ModeLabel) -> LadderOperator {
        LadderOperator::annihilation(m.clone())
    }

    #[test]
    fn single_creator_is_already_ordered() {
        let m = mode("a", 0.0);
        let p = normal_order(&OperatorWord::new(vec![cr(&m)])).unwrap();
        assert_eq!(p, OperatorPolynomial::creation(m));
    }

    #[test]
    fn annihilator_creator_swap() {
        let m = mode("a", 0.0);
        let p = normal_order(&OperatorWord::new(vec![an(&m), cr(&m)])).unwrap();
        let number = NormalMonomial::new(vec![m.clone()], vec![m.clone()]);
        assert_eq!(p.len(), 2);
        assert!((p.coefficient(&number) - 1.0).norm() < 1e-15);
        assert!((p.vacuum_expectation() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn two_photon_contraction_identity_term() {
        let (m1, m2) = (mode("a", 0.0), mode("a", 0.4));
        let (n1, n2) = (mode("a", -0.3), mode("a", 1.1));
        let word = OperatorWord::new(vec![an(&m2), an(&m1), cr(&n1), cr(&n2)]);
        let p = normal_order(&word).unwrap();
        let ov = |a: &ModeLabel, b: &ModeLabel| mode_overlap(a, b).unwrap();
        let expected = ov(&m1, &n1) * ov(&m2, &n2) + ov(&m1, &n2) * ov(&m2, &n1);
        assert!((p.vacuum_expectation() - expected).norm() < 1e-14);
        assert!((word_vacuum_expectation(&word).unwrap() - expected).norm() < 1e-14);
        let direct = vacuum_contraction(&[m2, m1], &[n1, n2]).unwrap();
        assert!((direct - expected).norm() < 1e-14);
    }

    #[test]
    fn multiply_identity_and_order() {
        let m = mode("a", 0.0);
        let c = OperatorPolynomial::creation(m.clone());
        let a = OperatorPolynomial::annihilation(m.clone());
        let one = OperatorPolynomial::identity();
        assert_eq!(one.multiply(&c).unwrap(), c);
        let ca = c.multiply(&a).unwrap();
        assert_eq!(ca.len(), 1);
        let ac = a.multiply(&c).unwrap();
        assert!(ac.approx_eq(&(&ca + &one), 1e-15));
    }

    #[test]
    fn adjoint_cases() {
        let (m, n) = (mode("a", 0.0), mode("b", 0.0));
        let i = C64::new(0.0, 1.0);
        let p = OperatorPolynomial::from_monomial(NormalMonomial::new(vec![m.clone()], vec![n.clone()]), i);
        let q = p.adjoint();
        assert_eq!(q.coefficient(&NormalMonomial::new(vec![n], vec![m])), -i);
        assert_eq!(OperatorPolynomial::identity().adjoint(), OperatorPolynomial::identity());
        assert_eq!(q.adjoint(), p);
    }

    #[test]
    fn vacuum_expectations() {
        let m = mode("a", 0.0);
        assert_eq!(OperatorPolynomial::identity().vacuum_expectation(), ONE);
        let number = OperatorPolynomial::creation(m.clone())
            .multiply(&OperatorPolynomial::annihilation(m))
            .unwrap();
        assert_eq!(number.vacuum_expectation(), ZERO);
    }

    #[test]
    fn creators_commute_exactly() {
        let (m1, m2) = (mode("a", 0.0), mode("a", 0.2));
        let p = normal_order(&OperatorWord::new(vec![cr(&m1), cr(&m2)])).unwrap();
        let q = normal_order(&OperatorWord::new(vec![cr(&m2), cr(&m1)])).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn capacity_error_is_reported() {
        let ms: Vec<_> = (0..4).map(|k| mode("a", k as f64 * 0.1)).collect();
        let word: OperatorWord = ms
            .iter()
            .map(an)
            .chain(ms.iter().map(cr))
            .collect();
        assert!(matches!(
            normal_order_with_cap(&word, 10),
            Err(Error::Capacity { cap: 10, .. })
        ));
    }

    #[test]
    fn substitution_linear_images() {
        let m1 = mode("a", 0.0);
        let out1 = m1.with_path(PathId::named("x"));
        let out2 = m1.with_path(PathId::named("y"));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let image = &OperatorPolynomial::creation(out1.clone()).scale(C64::new(r, 0.0))
            + &OperatorPolynomial::creation(out2.clone()).scale(C64::new(r, 0.0));
        let mut s = Substitution::new();
        s.set_creation(m1.clone(), image.clone());
        let p = OperatorPolynomial::creation(m1.clone());
        assert_eq!(p.substitute(&s).unwrap(), image);
        assert_eq!(p.substitute(&Substitution::new()).unwrap(), p);
        assert!(!s.mixes_creation_and_annihilation());
    }

    #[test]
    fn unequal_counts_contract_to_zero() {
        let m = mode("a", 0.0);
        assert_eq!(vacuum_contraction(std::slice::from_ref(&m), &[]).unwrap(), ZERO);
        let w = OperatorWord::new(vec![an(&m), cr(&m), cr(&m)]);
        assert_eq!(word_vacuum_expectation(&w).unwrap(), ZERO);
        assert_eq!(normal_order(&w).unwrap().vacuum_expectation(), ZERO);
    }
}
