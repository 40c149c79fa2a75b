//! Reducible metabelian representations built from twisted cocycles.
//!
//! `φ(γ) = [[α^{|γ|}, z(γ)], [0, 1]]` for `z ∈ Z¹(π, C_α)` not a coboundary,
//! and, when the `(t − α)`-torsion is cyclic of order `r ≥ 2`,
//!
//! ```text
//! ρ₀(γ) = [[α^{|γ|}, z(γ), g(γ)],
//!          [0,       1,    h(γ)],
//!          [0,       0,    1   ]]      with δg + z∪h = 0.
//! ```
//!
//! Both are normalized into `SL` by a root of the character `α^{−|γ|}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::alexander::{alexander_matrix_at, alexander_polynomial, is_root, torsion_report};
use crate::cohomology::{
    coboundary_membership, cup_product_on_relators, Cochain1, CupTerm, GroupCochain, Pairing,
    TwistedModule,
};
use crate::error::{Error, Result};
use crate::groupring::{exponent_sum, GeneratorImages, Word};
use crate::knotio::Presentation;
use crate::linalg::{self, c, cr, CMat, CVec, C64};

/// Relator residual accepted for a constructed representation.
pub const REP_TOL: f64 = 1e-8;

/// Relative size below which a cocycle value counts as zero.
const ZERO_TOL: f64 = 1e-8;

/// Working precision in decimal digits (hardware double).
pub const DOUBLE_DIGITS: u32 = 16;

/// Generator values of the cochains a representation was built from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingredients {
    pub z: Vec<C64>,
    pub h: Vec<C64>,
    pub g: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RepJson", try_from = "RepJson")]
pub struct Rep {
    pub dim: usize,
    pub alpha: C64,
    pub generators: Vec<CMat>,
    pub ingredients: Ingredients,
    pub precision: u32,
}

impl Rep {
    pub fn new(alpha: C64, generators: Vec<CMat>) -> Result<Self> {
        let dim = generators.first().map(|m| m.nrows()).unwrap_or(0);
        GeneratorImages::new(generators.clone())?;
        Ok(Self {
            dim,
            alpha,
            generators,
            ingredients: Ingredients::default(),
            precision: DOUBLE_DIGITS,
        })
    }

    pub fn images(&self) -> Result<GeneratorImages> {
        GeneratorImages::new(self.generators.clone())
    }

    pub fn eval(&self, w: &Word) -> Result<CMat> {
        let im = self.images()?;
        if w.max_generator() > self.generators.len() {
            return Err(Error::GeneratorRange {
                index: w.max_generator(),
                count: self.generators.len(),
            });
        }
        Ok(im.word(w))
    }

    pub fn generator(&self, i: usize) -> &CMat {
        &self.generators[i - 1]
    }

    pub fn trace(&self, w: &Word) -> Result<C64> {
        Ok(self.eval(w)?.trace())
    }

    /// `A ρ A⁻¹`.
    pub fn conjugate(&self, a: &CMat) -> Result<Self> {
        let inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Dimension("conjugator is singular".into()))?;
        let mut out = self.clone();
        out.generators = self.generators.iter().map(|m| a * m * &inv).collect();
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct IngredientsJson {
    z: Vec<[f64; 2]>,
    h: Vec<[f64; 2]>,
    g: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct RepJson {
    dim: usize,
    alpha: ComplexJson,
    generators: Vec<Vec<Vec<[f64; 2]>>>,
    ingredients: IngredientsJson,
    precision: u32,
}

fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn unpairs(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| c(p[0], p[1])).collect()
}

impl From<Rep> for RepJson {
    fn from(r: Rep) -> Self {
        RepJson {
            dim: r.dim,
            alpha: ComplexJson {
                re: r.alpha.re,
                im: r.alpha.im,
            },
            generators: r
                .generators
                .iter()
                .map(|m| {
                    (0..m.nrows())
                        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                        .collect()
                })
                .collect(),
            ingredients: IngredientsJson {
                z: pairs(&r.ingredients.z),
                h: pairs(&r.ingredients.h),
                g: pairs(&r.ingredients.g),
            },
            precision: r.precision,
        }
    }
}

impl TryFrom<RepJson> for Rep {
    type Error = String;

    fn try_from(j: RepJson) -> std::result::Result<Self, String> {
        let mut generators = Vec::with_capacity(j.generators.len());
        for (k, rows) in j.generators.iter().enumerate() {
            if rows.len() != j.dim || rows.iter().any(|r| r.len() != j.dim) {
                return Err(format!("generator {} is not {}x{}", k + 1, j.dim, j.dim));
            }
            generators.push(CMat::from_fn(j.dim, j.dim, |a, b| {
                c(rows[a][b][0], rows[a][b][1])
            }));
        }
        Ok(Rep {
            dim: j.dim,
            alpha: c(j.alpha.re, j.alpha.im),
            generators,
            ingredients: Ingredients {
                z: unpairs(&j.ingredients.z),
                h: unpairs(&j.ingredients.h),
                g: unpairs(&j.ingredients.g),
            },
            precision: j.precision,
        })
    }
}

/// Principal branch of `α^{p}`.
pub fn principal_power(alpha: C64, p: f64) -> C64 {
    (alpha.ln() * p).exp()
}

/// A cocycle in `Z¹(π, C_β)` with `z(S₁) = 0`, rescaled so that its first
/// nonzero value is 1. Returns the values and the index of that generator.
pub fn normalized_twisted_cocycle(p: &Presentation, beta: C64) -> Result<(Vec<C64>, usize)> {
    let j = alexander_matrix_at(p, beta)?;
    let ker = linalg::kernel(&j)?;
    let n = p.num_generators;
    let mut best: Option<Vec<C64>> = None;
    let mut best_norm = 0.0;
    for col in ker.column_iter() {
        // constant vectors are the coboundaries of C_β
        let w: Vec<C64> = (0..n).map(|i| col[i] - col[0]).collect();
        let nm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nm > best_norm {
            best_norm = nm;
            best = Some(w);
        }
    }
    let w = match best {
        Some(w) if best_norm > ZERO_TOL => w,
        _ => {
            return Err(Error::Refused(
                "no cocycle outside the coboundaries: alpha is not a root".into(),
            ))
        }
    };
    let s2 = w
        .iter()
        .position(|x| x.norm() > ZERO_TOL * best_norm)
        .ok_or_else(|| Error::Inconsistent("no generator with z != 0".into()))?;
    let scale = w[s2];
    Ok((w.iter().map(|x| x / scale).collect(), s2 + 1))
}

/// Burde–de Rham representation normalized into `SL(2, C)`.
pub fn burde_derham_rep(p: &Presentation, alpha: C64) -> Result<Rep> {
    let delta = alexander_polynomial(p)?;
    if !is_root(&delta, alpha) {
        return Err(Error::NotARoot {
            residual: delta.eval(alpha).norm(),
        });
    }
    let (z, _) = normalized_twisted_cocycle(p, alpha)?;
    let xi = principal_power(alpha, -0.5);
    let gens = z
        .iter()
        .map(|&zi| CMat::from_row_slice(2, 2, &[alpha, zi, cr(0.0), cr(1.0)]) * xi)
        .collect();
    let mut rep = Rep::new(alpha, gens)?;
    rep.ingredients.z = z;
    rep.ingredients.h = vec![cr(1.0); p.num_generators];
    check_relators(p, &rep)?;
    Ok(rep)
}

/// `ρ₀` in `GL(3, C)` with `h(γ) = |γ|`.
pub fn build_metabelian_sl3(p: &Presentation, alpha: C64) -> Result<Rep> {
    build_metabelian_sl3_scaled(p, alpha, cr(1.0))
}

/// `ρ₀` with `h(γ) = s·|γ|`.
pub fn build_metabelian_sl3_scaled(p: &Presentation, alpha: C64, h_scale: C64) -> Result<Rep> {
    let tr = torsion_report(p, alpha)?;
    if tr.r < 2 || !tr.cyclic {
        return Err(Error::Refused(format!(
            "need a multiple root with cyclic torsion; got r = {}, dim H1(C_alpha) = {}",
            tr.r, tr.dim_h1
        )));
    }
    let n = p.num_generators;
    let (z, _) = normalized_twisted_cocycle(p, alpha)?;
    let h = vec![h_scale; n];
    let g = solve_g(p, alpha, &z, &h)?;
    let gens = (0..n)
        .map(|i| {
            CMat::from_row_slice(
                3,
                3,
                &[alpha, z[i], g[i], cr(0.0), cr(1.0), h[i], cr(0.0), cr(0.0), cr(1.0)],
            )
        })
        .collect();
    let mut rep = Rep::new(alpha, gens)?;
    rep.ingredients = Ingredients { z, h, g };
    check_relators(p, &rep)?;
    Ok(rep)
}

/// `g` with `δg + z∪h = 0` and `g(S₁) = 0`.
fn solve_g(p: &Presentation, alpha: C64, z: &[C64], h: &[C64]) -> Result<Vec<C64>> {
    let n = p.num_generators;
    let ca = TwistedModule::character("C_alpha", n, alpha);
    let triv = TwistedModule::trivial(n);
    let zc = GroupCochain::cocycle(ca.clone(), Cochain1::from_scalars(z));
    let hc = GroupCochain::cocycle(triv, Cochain1::from_scalars(h));
    let cup = cup_product_on_relators(&zc, &hc, &Pairing::product(ca.clone()), p)?;
    let m = coboundary_membership(&(-cup), &ca, p)?;
    if !m.is_coboundary {
        return Err(Error::Inconsistent(format!(
            "class of z∪h is nonzero (relative residual {:.3e})",
            m.residual
        )));
    }
    let g = m.witness.scalars();
    Ok(g.iter().map(|x| x - g[0]).collect())
}

/// `ρ̃(γ) = ξ^{|γ|} ρ₀(γ)` with `ξ` the principal cube root of `α⁻¹`.
pub fn normalize_to_sl3(rho0: &Rep) -> Rep {
    let xi = principal_power(rho0.alpha, -1.0 / 3.0);
    let mut out = rho0.clone();
    out.generators = rho0.generators.iter().map(|m| m * xi).collect();
    out
}

/// Residuals of a candidate representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepCheck {
    /// `max_j ‖ρ(Rⱼ) − I‖`, entrywise.
    pub relator: f64,
    /// `max_i |det ρ(Sᵢ) − 1|`.
    pub det: f64,
    /// `‖[ρ(μ), ρ(λ)]‖` when a longitude is known.
    pub boundary: Option<f64>,
}

impl RepCheck {
    pub fn max(&self) -> f64 {
        self.relator.max(self.det).max(self.boundary.unwrap_or(0.0))
    }
}

pub fn verify_representation(p: &Presentation, r: &Rep) -> Result<RepCheck> {
    if r.generators.len() != p.num_generators {
        return Err(Error::Dimension(format!(
            "representation has {} generators, presentation has {}",
            r.generators.len(),
            p.num_generators
        )));
    }
    let im = r.images()?;
    let d = r.dim;
    let id = CMat::identity(d, d);
    let mut relator = 0.0f64;
    for w in &p.relators {
        relator = relator.max(linalg::max_abs_entry(&(im.word(w) - &id)));
    }
    let det = r
        .generators
        .iter()
        .map(|m| (m.determinant() - cr(1.0)).norm())
        .fold(0.0, f64::max);
    let boundary = match &p.longitude {
        Some(l) => {
            let m = im.word(&p.meridian_word());
            let lm = im.word(l);
            Some(linalg::max_abs_entry(&(&m * &lm - &lm * &m)))
        }
        None => None,
    };
    Ok(RepCheck {
        relator,
        det,
        boundary,
    })
}

fn check_relators(p: &Presentation, r: &Rep) -> Result<()> {
    let chk = verify_representation(p, r)?;
    if chk.relator > REP_TOL {
        return Err(Error::Residual {
            what: "relators of constructed representation".into(),
            residual: chk.relator,
        });
    }
    Ok(())
}

/// Largest `‖ρ(w) − I‖` over double commutators `[[a, b], [c, d]]` of
/// generators and their conjugates; zero for metabelian representations.
pub fn second_derived_residual(r: &Rep) -> Result<f64> {
    let im = r.images()?;
    let n = r.generators.len();
    let mut firsts = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let cm = Word::commutator(&Word::generator(i), &Word::generator(j));
            firsts.push(cm.clone());
            let k = (j % n) + 1;
            let s = Word::generator(k);
            firsts.push(s.mul(&cm).mul(&s.inverse()));
        }
    }
    let mats: Vec<CMat> = firsts.iter().map(|w| im.word(w)).collect();
    let mut worst = 0.0f64;
    for a in 0..mats.len() {
        for b in (a + 1)..mats.len() {
            let (x, y) = (&mats[a], &mats[b]);
            let comm = x * y - y * x;
            worst = worst.max(linalg::max_abs_entry(&comm));
        }
    }
    Ok(worst)
}

/// `λ(s) ρ λ(s)⁻¹` with `λ(s) = diag(s, 1, 1/s)`.
pub fn one_parameter_conjugate(r: &Rep, s: f64) -> Result<Rep> {
    if r.dim != 3 {
        return Err(Error::Dimension("one-parameter limit needs dim 3".into()));
    }
    let lam = CMat::from_diagonal(&CVec::from_vec(vec![cr(s), cr(1.0), cr(1.0 / s)]));
    r.conjugate(&lam)
}

/// Diagonal representation `ρ_α(Sᵢ) = α^{−1/3} diag(α, 1, 1)`.
pub fn rho_alpha(n: usize, alpha: C64) -> Result<Rep> {
    let xi = principal_power(alpha, -1.0 / 3.0);
    let m = CMat::from_diagonal(&CVec::from_vec(vec![alpha * xi, xi, xi]));
    let mut r = Rep::new(alpha, vec![m; n])?;
    r.ingredients.h = vec![cr(1.0); n];
    Ok(r)
}

/// `α^{|w|}`, the character through which the diagonal entries factor.
pub fn abelian_character(alpha: C64, w: &Word) -> C64 {
    alpha.powi(exponent_sum(w) as i32)
}

/// Membership residuals of the three cup classes governing `b₊` and `C₋(3)`:
/// `{z∪h}` and `{h∪z₋}` vanish, `{z∪h₂ + g∪h}` does not, where
/// `δh₂ + h∪h = 0` in `C` and `δg + z∪h = 0` in `C_α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CupSuite {
    pub z_cup_h: f64,
    pub h_cup_z_minus: f64,
    pub z_cup_h2_plus_g_cup_h: f64,
}

impl CupSuite {
    /// The pattern required by the `sl(3)` dimension count.
    pub fn expected_pattern(&self) -> bool {
        self.z_cup_h < crate::cohomology::MEMBERSHIP_TOL
            && self.h_cup_z_minus < crate::cohomology::MEMBERSHIP_TOL
            && self.z_cup_h2_plus_g_cup_h > 1e-3
    }
}

pub fn cup_suite(p: &Presentation, alpha: C64) -> Result<CupSuite> {
    let n = p.num_generators;
    let triv = TwistedModule::trivial(n);
    let ca = TwistedModule::character("C_alpha", n, alpha);
    let cm = TwistedModule::character("C_alpha_inv", n, alpha.inv());
    let (z, _) = normalized_twisted_cocycle(p, alpha)?;
    let (zm, _) = normalized_twisted_cocycle(p, alpha.inv())?;
    let h = Arc::new(GroupCochain::cocycle(
        triv.clone(),
        Cochain1::from_scalars(&vec![cr(1.0); n]),
    ));
    let z = Arc::new(GroupCochain::cocycle(ca.clone(), Cochain1::from_scalars(&z)));
    let zm = GroupCochain::cocycle(cm.clone(), Cochain1::from_scalars(&zm));
    let on_ca = Pairing::product(ca.clone());
    let on_c = Pairing::product(triv.clone());

    let zh = cup_product_on_relators(&z, &h, &on_ca, p)?;
    let m_zh = coboundary_membership(&(-zh), &ca, p)?;
    let hzm = cup_product_on_relators(&h, &zm, &Pairing::product(cm.clone()), p)?;
    let m_hzm = coboundary_membership(&(-hzm), &cm, p)?;
    let hh = cup_product_on_relators(&h, &h, &on_c, p)?;
    let m_hh = coboundary_membership(&(-hh), &triv, p)?;
    if !m_hh.is_coboundary {
        return Err(Error::Inconsistent("class of h∪h is nonzero".into()));
    }

    let term = |left: &Arc<GroupCochain>, right: &Arc<GroupCochain>, pairing: &Pairing| CupTerm {
        coeff: cr(1.0),
        left: left.clone(),
        right: right.clone(),
        pairing: pairing.clone(),
    };
    let h2 = GroupCochain::with_correction(triv, m_hh.witness, vec![term(&h, &h, &on_c)]);
    let g = GroupCochain::with_correction(ca.clone(), m_zh.witness, vec![term(&z, &h, &on_ca)]);
    let obstruction = cup_product_on_relators(&z, &h2, &on_ca, p)?
        + cup_product_on_relators(&g, &h, &on_ca, p)?;
    let m_ob = coboundary_membership(&obstruction, &ca, p)?;
    Ok(CupSuite {
        z_cup_h: m_zh.residual,
        h_cup_z_minus: m_hzm.residual,
        z_cup_h2_plus_g_cup_h: m_ob.residual,
    })
}
