//! Twisted cohomology of a presentation 2-complex.
//!
//! For a knot group the Wirtinger 2-complex is aspherical, so with
//! `C⁰ = A`, `C¹ = Aⁿ` (values on generators) and `C² = Aᵐ` (values on
//! relators) the cellular complex computes `H*(π, A)`:
//!
//! * `δ⁰ a = ((Sᵢ − 1)·a)ᵢ`
//! * `δ¹ u = (Σᵢ (∂Rⱼ/∂Sᵢ)·u(Sᵢ))ⱼ`
//!
//! Group 2-cochains `f: π × π → A` are transported to `C²` by
//! `R = x₁⋯x_m ↦ Σ_{i≥2} f(x₁⋯x_{i−1}, xᵢ) − Σ_{xᵢ = s⁻¹} x₁⋯x_{i−1}·f(s⁻¹, s)`,
//! which commutes with the coboundaries (for normalized cochains).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupring::{GeneratorImages, Word};
use crate::knotio::Presentation;
use crate::linalg::{self, CMat, CVec, C64};

/// Tolerance on relator images when validating a module.
pub const MODULE_TOL: f64 = 1e-9;

/// Relative residual below which a 2-cochain counts as a coboundary.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// A finite-dimensional `π`-module: one invertible matrix per generator.
#[derive(Debug, Clone)]
pub struct TwistedModule {
    pub name: String,
    images: GeneratorImages,
}

impl TwistedModule {
    pub fn new(name: impl Into<String>, mats: Vec<CMat>) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            images: GeneratorImages::new(mats)?,
        })
    }

    /// `C`: the trivial one-dimensional module.
    pub fn trivial(n: usize) -> Self {
        Self::character("C", n, C64::new(1.0, 0.0))
    }

    /// `C_α`: every Wirtinger generator acts by `α`.
    pub fn character(name: impl Into<String>, n: usize, alpha: C64) -> Self {
        Self {
            name: name.into(),
            images: GeneratorImages::scalar(n, alpha).expect("nonzero scalar"),
        }
    }

    pub fn dim(&self) -> usize {
        self.images.dim()
    }

    pub fn num_generators(&self) -> usize {
        self.images.num_generators()
    }

    pub fn images(&self) -> &GeneratorImages {
        &self.images
    }

    /// Action of a word.
    pub fn act(&self, w: &Word) -> CMat {
        self.images.word(w)
    }

    /// Largest deviation of a relator image from the identity.
    pub fn relator_defect(&self, p: &Presentation) -> f64 {
        let d = self.dim();
        p.relators
            .iter()
            .map(|r| linalg::max_abs_entry(&(self.act(r) - CMat::identity(d, d))))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self, p: &Presentation) -> Result<()> {
        if self.num_generators() != p.num_generators {
            return Err(Error::Dimension(format!(
                "module {} has {} generators, presentation has {}",
                self.name,
                self.num_generators(),
                p.num_generators
            )));
        }
        let defect = self.relator_defect(p);
        if defect > MODULE_TOL {
            return Err(Error::Residual {
                what: format!("relators of module {}", self.name),
                residual: defect,
            });
        }
        Ok(())
    }

    /// Restriction to the invariant subspace spanned by basis vectors `idx`.
    pub fn submodule(&self, name: impl Into<String>, idx: &[usize]) -> Result<Self> {
        let d = self.dim();
        for m in self.images.generators() {
            for r in (0..d).filter(|r| !idx.contains(r)) {
                for &c in idx {
                    if m[(r, c)].norm() > MODULE_TOL {
                        return Err(Error::Dimension("span is not invariant".into()));
                    }
                }
            }
        }
        Self::new(name, self.blocks(idx))
    }

    /// Quotient by the invariant span of the basis vectors not in `idx`,
    /// written in the images of the basis vectors `idx`.
    pub fn quotient(&self, name: impl Into<String>, idx: &[usize]) -> Result<Self> {
        let d = self.dim();
        let rest: Vec<usize> = (0..d).filter(|r| !idx.contains(r)).collect();
        for m in self.images.generators() {
            for &r in idx {
                for &c in &rest {
                    if m[(r, c)].norm() > MODULE_TOL {
                        return Err(Error::Dimension("complement is not invariant".into()));
                    }
                }
            }
        }
        Self::new(name, self.blocks(idx))
    }

    fn blocks(&self, idx: &[usize]) -> Vec<CMat> {
        self.images
            .generators()
            .iter()
            .map(|m| CMat::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]))
            .collect()
    }

    /// Restriction along a homomorphism given by the images of the target
    /// generators as words (e.g. `μ, λ` for the boundary torus).
    pub fn pullback(&self, name: impl Into<String>, words: &[Word]) -> Result<Self> {
        Self::new(name, words.iter().map(|w| self.act(w)).collect())
    }
}

/// `δ⁰`: blocks `M(Sᵢ) − I` stacked, shape `nd × d`.
pub fn coboundary_matrix(p: &Presentation, m: &TwistedModule) -> CMat {
    let d = m.dim();
    let n = p.num_generators;
    let mut out = CMat::zeros(n * d, d);
    for i in 0..n {
        let b = m.images().generator(i + 1) - CMat::identity(d, d);
        out.view_mut((i * d, 0), (d, d)).copy_from(&b);
    }
    out
}

/// `δ¹`: block `(j, i)` is `M(∂Rⱼ/∂Sᵢ)`, shape `md × nd`.
pub fn cocycle_matrix(p: &Presentation, m: &TwistedModule) -> Result<CMat> {
    let d = m.dim();
    let n = p.num_generators;
    let mut out = CMat::zeros(p.relators.len() * d, n * d);
    for (j, r) in p.relators.iter().enumerate() {
        for (i, b) in m.images().fox_row(r)?.into_iter().enumerate() {
            out.view_mut((j * d, i * d), (d, d)).copy_from(&b);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohomologyTable {
    pub h0: usize,
    pub h1: usize,
    pub h2: usize,
    pub z1: usize,
    pub b1: usize,
}

impl CohomologyTable {
    pub fn euler_characteristic(&self) -> i64 {
        self.h0 as i64 - self.h1 as i64 + self.h2 as i64
    }
}

pub fn cohomology_dims(p: &Presentation, m: &TwistedModule) -> Result<CohomologyTable> {
    m.validate(p)?;
    let d = m.dim();
    let n = p.num_generators;
    let b1 = linalg::rank(&coboundary_matrix(p, m))?;
    let rk = linalg::rank(&cocycle_matrix(p, m)?)?;
    let z1 = n * d - rk;
    Ok(CohomologyTable {
        h0: d - b1,
        h1: z1 - b1,
        h2: p.relators.len() * d - rk,
        z1,
        b1,
    })
}

/// One vector per generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cochain1 {
    pub values: Vec<CVec>,
}

impl Cochain1 {
    pub fn zero(n: usize, d: usize) -> Self {
        Self {
            values: vec![CVec::zeros(d); n],
        }
    }

    pub fn from_scalars(v: &[C64]) -> Self {
        Self {
            values: v.iter().map(|&x| CVec::from_element(1, x)).collect(),
        }
    }

    /// Split a stacked `nd` vector into per-generator values.
    pub fn from_stacked(v: &CVec, d: usize) -> Self {
        Self {
            values: (0..v.len() / d.max(1))
                .map(|i| v.rows(i * d, d).into_owned())
                .collect(),
        }
    }

    pub fn stacked(&self) -> CVec {
        let d = self.values.first().map(|v| v.len()).unwrap_or(0);
        let mut out = CVec::zeros(self.values.len() * d);
        for (i, v) in self.values.iter().enumerate() {
            out.rows_mut(i * d, d).copy_from(v);
        }
        out
    }

    pub fn scalar(&self, i: usize) -> C64 {
        self.values[i - 1][0]
    }

    pub fn scalars(&self) -> Vec<C64> {
        self.values.iter().map(|v| v[0]).collect()
    }

    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b * s)
                .collect(),
        }
    }
}

/// Bilinear coefficient pairing `A₁ × A₂ → A₃`, stored as a
/// `d₃ × (d₁·d₂)` matrix acting on `x ⊗ y`.
#[derive(Debug, Clone)]
pub struct Pairing {
    pub target: TwistedModule,
    pub tensor: CMat,
}

impl Pairing {
    /// Multiplication of scalars into a one-dimensional target.
    pub fn product(target: TwistedModule) -> Self {
        Self {
            target,
            tensor: CMat::from_element(1, 1, C64::new(1.0, 0.0)),
        }
    }

    pub fn apply(&self, x: &CVec, y: &CVec) -> Result<CVec> {
        let (d1, d2) = (x.len(), y.len());
        if self.tensor.ncols() != d1 * d2 || self.tensor.nrows() != self.target.dim() {
            return Err(Error::Dimension(format!(
                "pairing expects {} inputs, got {}x{}",
                self.tensor.ncols(),
                d1,
                d2
            )));
        }
        let mut xy = CVec::zeros(d1 * d2);
        for a in 0..d1 {
            for b in 0..d2 {
                xy[a * d2 + b] = x[a] * y[b];
            }
        }
        Ok(&self.tensor * xy)
    }
}

/// Correction `coeff · (left ∪ right)` in `δu + Σ coeff·(left ∪ right) = 0`.
#[derive(Debug, Clone)]
pub struct CupTerm {
    pub coeff: C64,
    pub left: Arc<GroupCochain>,
    pub right: Arc<GroupCochain>,
    pub pairing: Pairing,
}

impl CupTerm {
    fn eval(&self, a: &Word, b: &Word) -> Result<CVec> {
        let x = self.left.eval(a)?;
        let y = self.right.module.act(a) * self.right.eval(b)?;
        Ok(self.pairing.apply(&x, &y)? * self.coeff)
    }
}

/// A 1-cochain on the whole group, determined by its generator values and
/// its coboundary: cocycles extend by `u(ab) = u(a) + a·u(b)`; cochains with
/// `δu = −c` extend by `u(ab) = u(a) + a·u(b) + c(a, b)`.
#[derive(Debug, Clone)]
pub struct GroupCochain {
    pub module: TwistedModule,
    pub values: Cochain1,
    pub correction: Vec<CupTerm>,
}

impl GroupCochain {
    pub fn cocycle(module: TwistedModule, values: Cochain1) -> Self {
        Self {
            module,
            values,
            correction: Vec::new(),
        }
    }

    pub fn with_correction(module: TwistedModule, values: Cochain1, correction: Vec<CupTerm>) -> Self {
        Self {
            module,
            values,
            correction,
        }
    }

    fn correction_at(&self, a: &Word, b: &Word) -> Result<CVec> {
        let mut out = CVec::zeros(self.module.dim());
        for t in &self.correction {
            out += t.eval(a, b)?;
        }
        Ok(out)
    }

    fn letter_value(&self, l: i32) -> Result<CVec> {
        let s = l.unsigned_abs() as usize;
        if s == 0 || s > self.values.values.len() {
            return Err(Error::GeneratorRange {
                index: s,
                count: self.values.values.len(),
            });
        }
        let us = &self.values.values[s - 1];
        if l > 0 {
            return Ok(us.clone());
        }
        let inv = Word::new([l]);
        let fwd = Word::new([-l]);
        Ok(-(self.module.act(&inv) * us) - self.correction_at(&inv, &fwd)?)
    }

    pub fn eval(&self, w: &Word) -> Result<CVec> {
        let mut val = CVec::zeros(self.module.dim());
        let mut prefix = Word::identity();
        for &l in w.letters() {
            let x = Word::new([l]);
            val += self.module.act(&prefix) * self.letter_value(l)?;
            if !self.correction.is_empty() {
                val += self.correction_at(&prefix, &x)?;
            }
            prefix = prefix.mul(&x);
        }
        Ok(val)
    }
}

/// Transport a group 2-cochain to relator values (see module docs).
pub fn two_cochain_on_relators<F>(p: &Presentation, target: &TwistedModule, f: F) -> Result<CVec>
where
    F: Fn(&Word, &Word) -> Result<CVec>,
{
    let d = target.dim();
    let mut out = CVec::zeros(p.relators.len() * d);
    for (j, r) in p.relators.iter().enumerate() {
        let mut acc = CVec::zeros(d);
        let mut prefix = Word::identity();
        for (i, &l) in r.letters().iter().enumerate() {
            let x = Word::new([l]);
            if i > 0 {
                acc += f(&prefix, &x)?;
            }
            if l < 0 {
                acc -= target.act(&prefix) * f(&x, &Word::new([-l]))?;
            }
            prefix = prefix.mul(&x);
        }
        out.rows_mut(j * d, d).copy_from(&acc);
    }
    Ok(out)
}

/// Relator values of `u ∪ v` composed with `pairing`.
pub fn cup_product_on_relators(
    u: &GroupCochain,
    v: &GroupCochain,
    pairing: &Pairing,
    p: &Presentation,
) -> Result<CVec> {
    two_cochain_on_relators(p, &pairing.target, |a, b| {
        let x = u.eval(a)?;
        let y = v.module.act(a) * v.eval(b)?;
        pairing.apply(&x, &y)
    })
}

#[derive(Debug, Clone)]
pub struct Membership {
    pub is_coboundary: bool,
    pub witness: Cochain1,
    /// `‖δ¹w − c‖ / ‖c‖`.
    pub residual: f64,
}

/// Solve `δ¹ w = c` in least squares; `c` is a coboundary iff the relative
/// residual is below [`MEMBERSHIP_TOL`].
pub fn coboundary_membership(c2: &CVec, m: &TwistedModule, p: &Presentation) -> Result<Membership> {
    let j = cocycle_matrix(p, m)?;
    if c2.len() != j.nrows() {
        return Err(Error::Dimension(format!(
            "2-cochain has {} entries, expected {}",
            c2.len(),
            j.nrows()
        )));
    }
    let w = linalg::solve_min_norm(&j, c2);
    let residual = linalg::relative_residual(&j, &w, c2);
    Ok(Membership {
        is_coboundary: residual < MEMBERSHIP_TOL,
        witness: Cochain1::from_stacked(&w, m.dim()),
        residual,
    })
}
