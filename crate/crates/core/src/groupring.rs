//! Free-group words, the integral group ring of the free group, and Fox
//! differential calculus.
//!
//! Letters are signed 1-based generator indices: `3` is `S₃`, `-3` is `S₃⁻¹`.
//! Fox derivatives follow the left convention
//! `∂(uv)/∂Sᵢ = ∂u/∂Sᵢ + u·∂v/∂Sᵢ`, which matches the left-action cocycle
//! rule `d(γ₁γ₂) = d(γ₁) + γ₁·d(γ₂)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// A freely reduced word in the free group on generators `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<i32>);

impl Word {
    /// Build a word, freely reducing the letters.
    pub fn new(letters: impl IntoIterator<Item = i32>) -> Self {
        let mut out: Vec<i32> = Vec::new();
        for l in letters {
            assert!(l != 0, "letter 0 is not a generator");
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn generator(i: usize) -> Self {
        Word(vec![i as i32])
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    pub fn mul(&self, other: &Word) -> Word {
        Word::new(self.0.iter().chain(other.0.iter()).cloned())
    }

    pub fn pow(&self, k: i32) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    pub fn commutator(a: &Word, b: &Word) -> Word {
        a.mul(b).mul(&a.inverse()).mul(&b.inverse())
    }

    /// Largest generator index used, 0 for the empty word.
    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&l| {
                if l > 0 {
                    format!("S{l}")
                } else {
                    format!("S{}^-1", -l)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// `|w|`: the image of `w` under abelianization `π → Z`.
pub fn exponent_sum(w: &Word) -> i64 {
    w.letters().iter().map(|l| l.signum() as i64).sum()
}

/// Formal integer combination of free-group words.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FreeRingElement {
    terms: BTreeMap<Word, i64>,
}

impl FreeRingElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_word(Word::identity(), 1)
    }

    pub fn from_word(w: Word, coeff: i64) -> Self {
        let mut e = Self::zero();
        e.add_term(w, coeff);
        e
    }

    pub fn add_term(&mut self, w: Word, coeff: i64) {
        if coeff == 0 {
            return;
        }
        let v = self.terms.get(&w).copied().unwrap_or(0) + coeff;
        if v == 0 {
            self.terms.remove(&w);
        } else {
            self.terms.insert(w, v);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, i64)> {
        self.terms.iter().map(|(w, &c)| (w, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in other.terms() {
            out.add_term(w.clone(), c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (u, a) in self.terms() {
            for (v, b) in other.terms() {
                out.add_term(u.mul(v), a * b);
            }
        }
        out
    }

    /// Image under abelianization `Sᵢ ↦ t`: exponent → integer coefficient.
    pub fn abelianize(&self) -> BTreeMap<i64, i64> {
        let mut out = BTreeMap::new();
        for (w, c) in self.terms() {
            *out.entry(exponent_sum(w)).or_insert(0) += c;
        }
        out.retain(|_, v| *v != 0);
        out
    }
}

/// Fox derivative `∂w/∂Sᵢ` in one left-to-right pass over the word.
pub fn fox_derivative(w: &Word, i: usize) -> FreeRingElement {
    let gi = i as i32;
    let mut out = FreeRingElement::zero();
    let mut prefix: Vec<i32> = Vec::with_capacity(w.len());
    for &l in w.letters() {
        if l == gi {
            out.add_term(Word::new(prefix.iter().cloned()), 1);
        }
        prefix.push(l);
        if l == -gi {
            out.add_term(Word::new(prefix.iter().cloned()), -1);
        }
    }
    out
}

/// Invertible matrices assigned to the generators of a free group; the
/// ring-homomorphism extension evaluates words and group-ring elements.
#[derive(Debug, Clone)]
pub struct GeneratorImages {
    dim: usize,
    mats: Vec<CMat>,
    invs: Vec<CMat>,
}

impl GeneratorImages {
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        let dim = mats.first().map(|m| m.nrows()).unwrap_or(0);
        let mut invs = Vec::with_capacity(mats.len());
        for (k, m) in mats.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Dimension(format!(
                    "generator {} has shape {}x{}, expected {dim}x{dim}",
                    k + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            let inv = m
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Dimension(format!("generator {} is singular", k + 1)))?;
            invs.push(inv);
        }
        Ok(Self { dim, mats, invs })
    }

    /// Scalar character: every generator acts by the same nonzero number.
    pub fn scalar(n: usize, value: C64) -> Result<Self> {
        Self::new(vec![CMat::from_element(1, 1, value); n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_generators(&self) -> usize {
        self.mats.len()
    }

    pub fn generator(&self, i: usize) -> &CMat {
        &self.mats[i - 1]
    }

    pub fn generators(&self) -> &[CMat] {
        &self.mats
    }

    pub fn letter(&self, l: i32) -> &CMat {
        let i = l.unsigned_abs() as usize - 1;
        if l > 0 {
            &self.mats[i]
        } else {
            &self.invs[i]
        }
    }

    pub fn word(&self, w: &Word) -> CMat {
        let mut m = CMat::identity(self.dim, self.dim);
        for &l in w.letters() {
            m *= self.letter(l);
        }
        m
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        let g = w.max_generator();
        if g > self.mats.len() {
            return Err(Error::GeneratorRange {
                index: g,
                count: self.mats.len(),
            });
        }
        Ok(())
    }

    /// Evaluate a group-ring element: words map to products, sums to sums.
    pub fn evaluate(&self, e: &FreeRingElement) -> Result<CMat> {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (w, c) in e.terms() {
            self.check_word(w)?;
            out += self.word(w) * C64::new(c as f64, 0.0);
        }
        Ok(out)
    }

    /// All Fox derivatives of `w`, evaluated, in one pass: block `i-1` is
    /// the image of `∂w/∂Sᵢ`.
    pub fn fox_row(&self, w: &Word) -> Result<Vec<CMat>> {
        self.check_word(w)?;
        let d = self.dim;
        let mut blocks = vec![CMat::zeros(d, d); self.mats.len()];
        let mut prefix = CMat::identity(d, d);
        for &l in w.letters() {
            let i = l.unsigned_abs() as usize - 1;
            if l > 0 {
                blocks[i] += &prefix;
                prefix *= &self.mats[i];
            } else {
                prefix *= &self.invs[i];
                blocks[i] -= &prefix;
            }
        }
        Ok(blocks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cr;

    #[test]
    fn reduction_cancels_adjacent_pairs() {
        assert_eq!(Word::new([1, 2, -2, -1, 3]), Word::new([3]));
        assert!(Word::new([1, -1]).is_empty());
    }

    #[test]
    fn exponent_sums() {
        assert_eq!(exponent_sum(&Word::identity()), 0);
        assert_eq!(exponent_sum(&Word::new([1, 2, -1])), 1);
    }

    #[test]
    fn fox_product_and_inverse_rules() {
        let d = fox_derivative(&Word::new([1, 2]), 1);
        assert_eq!(d, FreeRingElement::one());
        let d = fox_derivative(&Word::new([-1]), 1);
        assert_eq!(d, FreeRingElement::from_word(Word::new([-1]), -1));
        let d = fox_derivative(&Word::new([1, 2, -1]), 2);
        assert_eq!(d, FreeRingElement::from_word(Word::new([1]), 1));
        assert!(fox_derivative(&Word::new([2]), 1).is_zero());
    }

    #[test]
    fn evaluate_under_character() {
        let alpha = C64::new(0.3, 0.7);
        let chi = GeneratorImages::scalar(2, alpha).unwrap();
        let one = chi.evaluate(&FreeRingElement::one()).unwrap();
        assert!((one[(0, 0)] - cr(1.0)).norm() < 1e-15);
        let d = fox_derivative(&Word::new([1, 2]), 2);
        let v = chi.evaluate(&d).unwrap();
        assert!((v[(0, 0)] - alpha).norm() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_out_of_range_generator() {
        let chi = GeneratorImages::scalar(1, cr(2.0)).unwrap();
        let e = FreeRingElement::from_word(Word::new([2]), 1);
        assert!(chi.evaluate(&e).is_err());
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let r = GeneratorImages::new(vec![CMat::identity(2, 2), CMat::identity(3, 3)]);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }
}
