//! Alexander matrix and polynomial from Fox calculus, squarefree
//! decomposition, numeric roots, and the `(t − α)`-torsion report that gates
//! the SL(3) construction.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groupring::{fox_derivative, GeneratorImages};
use crate::knotio::Presentation;
use crate::linalg::{self, CMat, C64};

/// Laurent polynomial in `t` with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, rat(1))
    }

    pub fn monomial(exp: i64, c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(exp, c);
        p
    }

    /// `t`.
    pub fn t() -> Self {
        Self::monomial(1, rat(1))
    }

    /// Integer coefficients from degree 0 upward.
    pub fn from_coeffs(coeffs: &[i64]) -> Self {
        let mut p = Self::zero();
        for (k, &c) in coeffs.iter().enumerate() {
            p.add_term(k as i64, rat(c));
        }
        p
    }

    pub fn from_int_map(m: &BTreeMap<i64, i64>) -> Self {
        let mut p = Self::zero();
        for (&e, &c) in m {
            p.add_term(e, rat(c));
        }
        p
    }

    pub fn add_term(&mut self, exp: i64, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let v = self.coeffs.remove(&exp).unwrap_or_else(BigRational::zero) + c;
        if !v.is_zero() {
            self.coeffs.insert(exp, v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Width of the exponent range; 0 for constants, -1 for zero.
    pub fn span(&self) -> i64 {
        match (self.min_exp(), self.max_exp()) {
            (Some(a), Some(b)) => b - a,
            _ => -1,
        }
    }

    pub fn coeff(&self, exp: i64) -> BigRational {
        self.coeffs.get(&exp).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigRational)> {
        self.coeffs.iter().map(|(&e, c)| (e, c))
    }

    pub fn leading(&self) -> BigRational {
        self.max_exp().map(|e| self.coeff(e)).unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut p = self.clone();
        for (e, c) in o.terms() {
            p.add_term(e, c.clone());
        }
        p
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(&e, c)| (e, -c.clone())).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut p = Self::zero();
        for (e1, c1) in self.terms() {
            for (e2, c2) in o.terms() {
                p.add_term(e1 + e2, c1 * c2);
            }
        }
        p
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut p = Self::zero();
        for (e, v) in self.terms() {
            p.add_term(e, v * c);
        }
        p
    }

    pub fn shift(&self, k: i64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(&e, c)| (e + k, c.clone())).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut p = Self::one();
        for _ in 0..k {
            p = p.mul(self);
        }
        p
    }

    /// `t ↦ 1/t`.
    pub fn reflect(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(&e, c)| (-e, c.clone())).collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        let mut p = Self::zero();
        for (e, c) in self.terms() {
            p.add_term(e - 1, c * rat(e));
        }
        p
    }

    pub fn eval(&self, t: C64) -> C64 {
        self.terms()
            .map(|(e, c)| t.powi(e as i32) * c.to_f64().unwrap_or(f64::NAN))
            .sum()
    }

    /// `Σ |cₖ| |t|^k`, the scale against which `|p(t)|` is judged.
    pub fn eval_scale(&self, t: C64) -> f64 {
        self.terms()
            .map(|(e, c)| t.norm().powi(e as i32) * c.to_f64().unwrap_or(f64::NAN).abs())
            .sum()
    }

    /// Shift so the lowest exponent is 0 and make the leading coefficient
    /// positive. Fixes the unit ambiguity `±tᵏ` of `Z[t, t⁻¹]`.
    pub fn normalized(&self) -> Self {
        let Some(m) = self.min_exp() else {
            return Self::zero();
        };
        let p = self.shift(-m);
        if p.leading().is_negative() {
            p.neg()
        } else {
            p
        }
    }

    /// Scale to a primitive integer polynomial with positive leading term.
    pub fn primitive(&self) -> Self {
        let p = self.normalized();
        if p.is_zero() {
            return p;
        }
        let mut den_lcm = BigInt::one();
        for (_, c) in p.terms() {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let scaled = p.scale(&BigRational::from_integer(den_lcm));
        let mut g = BigInt::zero();
        for (_, c) in scaled.terms() {
            g = g.gcd(c.numer());
        }
        scaled.scale(&BigRational::new(BigInt::one(), g))
    }

    pub fn is_integral(&self) -> bool {
        self.terms().all(|(_, c)| c.is_integer())
    }

    /// Dense integer coefficients from `min_exp` upward, if integral.
    pub fn int_coeffs(&self) -> Option<Vec<i64>> {
        let (lo, hi) = (self.min_exp()?, self.max_exp()?);
        (lo..=hi)
            .map(|e| {
                let c = self.coeff(e);
                if c.is_integer() {
                    c.to_integer().to_i64()
                } else {
                    None
                }
            })
            .collect()
    }

    /// Polynomial division with remainder; both sides are treated as
    /// ordinary polynomials after shifting to lowest exponent 0.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let dshift = d.min_exp().unwrap_or(0);
        let d = d.shift(-dshift);
        let nshift = self.min_exp().unwrap_or(0);
        let mut r = self.shift(-nshift);
        let dd = d.max_exp().unwrap_or(0);
        let lc = d.leading();
        let mut q = Self::zero();
        while let Some(rd) = r.max_exp() {
            if rd < dd {
                break;
            }
            let c = r.leading() / &lc;
            let term = Self::monomial(rd - dd, c);
            r = r.sub(&term.mul(&d));
            q = q.add(&term);
        }
        (q.shift(nshift - dshift), r.shift(nshift))
    }

    /// Exact quotient; panics if the division leaves a remainder.
    pub fn div_exact(&self, d: &Self) -> Self {
        let (q, r) = self.div_rem(d);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn monic(&self) -> Self {
        let p = self.shift(-self.min_exp().unwrap_or(0));
        let lc = p.leading();
        if lc.is_zero() {
            return p;
        }
        p.scale(&(BigRational::one() / lc))
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let mut a = self.shift(-self.min_exp().unwrap_or(0));
        let mut b = o.shift(-o.min_exp().unwrap_or(0));
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    pub fn degree(&self) -> i64 {
        self.span()
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.coeffs.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            let sign = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            let coef = if a.is_one() && *e != 0 {
                String::new()
            } else {
                a.to_string()
            };
            let var = match *e {
                0 => String::new(),
                1 => "t".to_string(),
                _ => format!("t^{e}"),
            };
            write!(f, "{sign}{coef}{var}")?;
            first = false;
        }
        Ok(())
    }
}

/// `(n−1)×n` matrix of abelianized Fox derivatives `∂Rⱼ/∂Sᵢ`.
pub fn alexander_matrix(p: &Presentation) -> Vec<Vec<LaurentPoly>> {
    p.relators
        .iter()
        .map(|r| {
            (1..=p.num_generators)
                .map(|i| LaurentPoly::from_int_map(&fox_derivative(r, i).abelianize()))
                .collect()
        })
        .collect()
}

/// Fraction-free (Bareiss) determinant over `Q[t, t⁻¹]`.
pub fn determinant(m: &[Vec<LaurentPoly>]) -> LaurentPoly {
    let n = m.len();
    if n == 0 {
        return LaurentPoly::one();
    }
    // clear negative exponents row by row, undone at the end
    let mut shift = 0i64;
    let mut a: Vec<Vec<LaurentPoly>> = m
        .iter()
        .map(|row| {
            let lo = row.iter().filter_map(|p| p.min_exp()).min().unwrap_or(0).min(0);
            shift += lo;
            row.iter().map(|p| p.shift(-lo)).collect()
        })
        .collect();
    let mut sign = 1i64;
    let mut prev = LaurentPoly::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                return LaurentPoly::zero();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[i][j].mul(&a[k][k]).sub(&a[i][k].mul(&a[k][j]));
                a[i][j] = num.div_exact(&prev);
            }
            a[i][k] = LaurentPoly::zero();
        }
        prev = a[k][k].clone();
    }
    a[n - 1][n - 1].shift(shift).scale(&rat(sign))
}

/// Alexander polynomial: the minor with the meridian column deleted,
/// normalized (lowest exponent 0, positive leading coefficient).
pub fn alexander_polynomial(p: &Presentation) -> Result<LaurentPoly> {
    let j = alexander_matrix(p);
    let drop = p.meridian - 1;
    let minor: Vec<Vec<LaurentPoly>> = j
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect();
    if minor.len() != p.num_generators - 1 {
        return Err(Error::Dimension(format!(
            "{} relators for {} generators",
            minor.len(),
            p.num_generators
        )));
    }
    let d = determinant(&minor);
    if d.is_zero() {
        return Err(Error::ZeroDeterminant);
    }
    Ok(d.normalized())
}

/// Yun's squarefree decomposition over `Q`: `f ≐ Π factorᵏ`. Factors are
/// primitive integer polynomials; constant factors are dropped.
pub fn squarefree_decomposition(f: &LaurentPoly) -> Vec<(LaurentPoly, u32)> {
    let f = f.normalized();
    if f.degree() <= 0 {
        return Vec::new();
    }
    let fp = f.derivative();
    let a0 = f.gcd(&fp);
    let mut b = f.div_exact(&a0);
    let mut c = fp.div_exact(&a0);
    let mut d = c.sub(&b.derivative());
    let mut out = Vec::new();
    let mut k = 1u32;
    loop {
        let a = b.gcd(&d);
        if a.degree() > 0 {
            out.push((a.primitive(), k));
        }
        b = b.div_exact(&a);
        if b.degree() <= 0 {
            break;
        }
        c = d.div_exact(&a);
        d = c.sub(&b.derivative());
        k += 1;
    }
    out
}

/// A numeric root with its multiplicity in the original polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: C64,
    pub multiplicity: u32,
}

/// Clamp a digits request to what hardware doubles deliver.
pub fn tolerance_for_digits(digits: u32) -> Result<f64> {
    if digits == 0 || digits > 16 {
        return Err(Error::Precision(digits));
    }
    Ok(10f64.powi(-(digits.min(15) as i32)).max(1e-15))
}

/// Aberth–Ehrlich iteration on a squarefree polynomial.
pub fn squarefree_roots(f: &LaurentPoly, digits: u32) -> Result<Vec<C64>> {
    let tol = tolerance_for_digits(digits)?;
    let f = f.normalized();
    let deg = f.degree();
    if deg < 1 {
        return Ok(Vec::new());
    }
    let deg = deg as usize;
    let lc = f.leading().to_f64().unwrap_or(1.0);
    let coeffs: Vec<C64> = (0..=deg as i64)
        .map(|e| C64::new(f.coeff(e).to_f64().unwrap_or(0.0) / lc, 0.0))
        .collect();
    let eval = |z: C64| -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    };
    // Cauchy bound for the initial circle
    let radius = 1.0 + coeffs[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..deg)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4;
            C64::from_polar(radius.clamp(0.5, 4.0), th)
        })
        .collect();
    const CAP: usize = 1000;
    let mut converged = false;
    for _ in 0..CAP {
        let mut max_step: f64 = 0.0;
        for k in 0..deg {
            let (p, dp) = eval(z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: C64 = (0..deg)
                .filter(|&j| j != k)
                .map(|j| C64::new(1.0, 0.0) / (z[k] - z[j]))
                .sum();
            let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
            z[k] -= w;
            max_step = max_step.max(w.norm() / z[k].norm().max(1.0));
        }
        if max_step < 1e-16 {
            converged = true;
            break;
        }
    }
    // Newton polish and residual check
    let scale = |x: C64| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(e, c)| c.norm() * x.norm().powi(e as i32))
            .sum()
    };
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval(*r);
            if dp.norm() > 0.0 {
                *r -= p / dp;
            }
        }
        let (p, _) = eval(*r);
        if p.norm() > tol.max(1e-13) * scale(*r) * 10.0 {
            return Err(Error::RootsNotConverged { iterations: CAP });
        }
    }
    let _ = converged;
    Ok(z)
}

/// Roots with multiplicities, sorted by multiplicity (desc) then argument
/// (asc, in `(−π, π]`).
pub fn polynomial_roots(f: &LaurentPoly, digits: u32) -> Result<Vec<Root>> {
    let mut out = Vec::new();
    for (factor, m) in squarefree_decomposition(f) {
        for z in squarefree_roots(&factor, digits)? {
            out.push(Root {
                value: z,
                multiplicity: m,
            });
        }
    }
    sort_roots(&mut out);
    Ok(out)
}

pub fn sort_roots(roots: &mut [Root]) {
    roots.sort_by(|a, b| {
        b.multiplicity.cmp(&a.multiplicity).then(
            a.value
                .arg()
                .partial_cmp(&b.value.arg())
                .unwrap_or(std::cmp::Ordering::Equal),
        )
    });
}

/// `J(α)`: the Alexander matrix evaluated at `t = α` (equivalently the
/// cocycle matrix of `C_α`).
pub fn alexander_matrix_at(p: &Presentation, alpha: C64) -> Result<CMat> {
    let chi = GeneratorImages::scalar(p.num_generators, alpha)?;
    let m = p.relators.len();
    let n = p.num_generators;
    let mut j = CMat::zeros(m, n);
    for (r, rel) in p.relators.iter().enumerate() {
        for (i, b) in chi.fox_row(rel)?.into_iter().enumerate() {
            j[(r, i)] = b[(0, 0)];
        }
    }
    Ok(j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionReport {
    pub alpha: C64,
    /// Primitive integer coefficients (degree 0 upward) of the squarefree
    /// factor vanishing at `alpha`.
    pub factor: Vec<i64>,
    pub r: u32,
    pub dim_h1: usize,
    pub cyclic: bool,
}

/// Relative tolerance for deciding `Δ(α) = 0`.
pub const ROOT_TOL: f64 = 1e-8;

pub fn is_root(delta: &LaurentPoly, alpha: C64) -> bool {
    delta.eval(alpha).norm() <= ROOT_TOL * delta.eval_scale(alpha).max(1.0)
}

/// `(t − α)`-torsion data: multiplicity from the squarefree decomposition
/// and `dim H¹(π, C_α) = dim ker J(α) − 1`.
pub fn torsion_report(p: &Presentation, alpha: C64) -> Result<TorsionReport> {
    if (alpha - C64::new(1.0, 0.0)).norm() < ROOT_TOL {
        return Err(Error::AlphaIsOne);
    }
    let delta = alexander_polynomial(p)?;
    if !is_root(&delta, alpha) {
        return Err(Error::NotARoot {
            residual: delta.eval(alpha).norm(),
        });
    }
    let (factor, r) = squarefree_decomposition(&delta)
        .into_iter()
        .min_by(|(f, _), (g, _)| {
            let a = f.eval(alpha).norm() / f.eval_scale(alpha);
            let b = g.eval(alpha).norm() / g.eval_scale(alpha);
            a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok_or(Error::NotARoot { residual: 0.0 })?;
    let j = alexander_matrix_at(p, alpha)?;
    let ker = p.num_generators - linalg::rank(&j)?;
    let dim_h1 = ker - 1;
    Ok(TorsionReport {
        alpha,
        factor: factor.int_coeffs().unwrap_or_default(),
        r,
        dim_h1,
        cyclic: dim_h1 == 1,
    })
}
