//! Deformations of `ρ̃` inside the `SL(3, C)` representation variety.
//!
//! Tangent vectors are adjoint cocycles `u(γ) = (dρ_ε(γ)/dε)|₀ ρ(γ)⁻¹`;
//! formal curves are `exp(Σ tᵏ uₖ(Sᵢ)) ρ̃(Sᵢ)`, solved order by order; numeric
//! curves come from Gauss–Newton on the relator equations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohomology::{
    coboundary_matrix, coboundary_membership, cocycle_matrix, cohomology_dims,
    cup_product_on_relators, Cochain1, CohomologyTable, GroupCochain, Pairing, TwistedModule,
};
use crate::error::{Error, Result};
use crate::groupring::Word;
use crate::knotio::Presentation;
use crate::linalg::{self, c, cr, CMat, CVec, C64};
use crate::metabel::{normalized_twisted_cocycle, Rep};

/// Basis `(D₁, D₂, E₁₂, E₁₃, E₂₁, E₂₃, E₃₁, E₃₂)` of `sl(3, C)`.
pub const SL3_LABELS: [&str; 8] = ["D1", "D2", "E12", "E13", "E21", "E23", "E31", "E32"];

const OFF_DIAGONAL: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

/// Indices of `C₊(3) = ⟨E₁₂, E₂₃, E₁₃⟩` in the basis.
pub const C_PLUS: [usize; 3] = [2, 5, 3];
/// Indices of the Borel subalgebra `b₊`.
pub const B_PLUS: [usize; 5] = [0, 1, 2, 5, 3];
/// Indices of `Ē₂₁, Ē₃₁, Ē₃₂`, a basis of `C₋(3) = sl(3)/b₊`.
pub const C_MINUS: [usize; 3] = [4, 6, 7];

/// Relative size above which a new matrix enlarges the Burnside span.
const SPAN_TOL: f64 = 1e-9;
const MAX_WORD_LENGTH: usize = 6;

/// Residual at which Newton stops.
pub const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX_ITER: usize = 60;

/// `|tr ρ(μ)|` above which an irreducible representation is non-metabelian.
pub const TRACE_TOL: f64 = 1e-6;

/// Residual for a least-squares fit to count as exact.
pub const FIT_TOL: f64 = 1e-8;

/// Eigenvalue separation required by the normal form.
const GAP_TOL: f64 = 1e-6;

pub fn sl3_basis() -> Vec<CMat> {
    let mut out = vec![
        CMat::from_diagonal(&CVec::from_vec(vec![cr(-2.0), cr(1.0), cr(1.0)])),
        CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0), cr(1.0), cr(-2.0)])),
    ];
    for &(i, j) in &OFF_DIAGONAL {
        let mut e = CMat::zeros(3, 3);
        e[(i, j)] = cr(1.0);
        out.push(e);
    }
    out
}

/// Coordinates of a traceless matrix in [`sl3_basis`].
pub fn sl3_coords(x: &CMat) -> CVec {
    let mut v = CVec::zeros(8);
    v[0] = (x[(1, 1)] - x[(0, 0)]) / 3.0;
    v[1] = (x[(1, 1)] - x[(2, 2)]) / 3.0;
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        v[k + 2] = x[(i, j)];
    }
    v
}

pub fn sl3_from_coords(v: &[C64]) -> CMat {
    sl3_basis()
        .iter()
        .zip(v)
        .fold(CMat::zeros(3, 3), |acc, (b, &x)| acc + b * x)
}

/// Matrix of `X ↦ g X g⁻¹` in [`sl3_basis`].
pub fn adjoint_matrix(g: &CMat) -> Result<CMat> {
    let inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Dimension("singular matrix in adjoint action".into()))?;
    let mut out = CMat::zeros(8, 8);
    for (m, b) in sl3_basis().iter().enumerate() {
        out.set_column(m, &sl3_coords(&(g * b * &inv)));
    }
    Ok(out)
}

/// `sl(3, C)` as a `π`-module via `Ad ∘ r`.
pub fn adjoint_module(r: &Rep) -> Result<TwistedModule> {
    if r.dim != 3 {
        return Err(Error::Dimension(format!("adjoint module needs dim 3, got {}", r.dim)));
    }
    let mats = r.generators.iter().map(adjoint_matrix).collect::<Result<Vec<_>>>()?;
    TwistedModule::new("sl3", mats)
}

fn stacked_to_matrices(v: &CVec) -> Vec<CMat> {
    (0..v.len() / 8)
        .map(|i| sl3_from_coords(v.rows(i * 8, 8).as_slice()))
        .collect()
}

fn matrices_to_stacked(ms: &[CMat]) -> CVec {
    let mut out = CVec::zeros(ms.len() * 8);
    for (i, m) in ms.iter().enumerate() {
        out.rows_mut(i * 8, 8).copy_from(&sl3_coords(m));
    }
    out
}

#[derive(Debug, Clone)]
pub struct NamedTable {
    pub module: String,
    pub table: CohomologyTable,
}

/// Dimension tables for `C, C_α, C_{α⁻¹}, C₊(3), b₊, C₋(3), sl(3)`.
pub fn module_tables(p: &Presentation, rt: &Rep) -> Result<Vec<NamedTable>> {
    let n = p.num_generators;
    let ad = adjoint_module(rt)?;
    let mods = vec![
        TwistedModule::trivial(n),
        TwistedModule::character("C_alpha", n, rt.alpha),
        TwistedModule::character("C_alpha_inv", n, rt.alpha.inv()),
        ad.submodule("C_plus3", &C_PLUS)?,
        ad.submodule("b_plus", &B_PLUS)?,
        ad.quotient("C_minus3", &C_MINUS)?,
        ad,
    ];
    mods.par_iter()
        .map(|m| {
            Ok(NamedTable {
                module: m.name.clone(),
                table: cohomology_dims(p, m)?,
            })
        })
        .collect()
}

/// Centralizer data for the peripheral subgroup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryReport {
    /// Cohomology of `⟨μ, λ | [μ, λ]⟩` with coefficients `Ad ∘ ρ`.
    pub table: CohomologyTable,
    /// `dim` of the centralizer of `ρ(μ)` in `sl(3)`.
    pub meridian_centralizer_dim: usize,
    pub meridian_centralizer_abelian: bool,
}

pub fn boundary_report(p: &Presentation, rt: &Rep) -> Result<BoundaryReport> {
    let l = p
        .longitude
        .clone()
        .ok_or_else(|| Error::Dimension("presentation has no longitude".into()))?;
    let ad = adjoint_module(rt)?;
    let torus = Presentation::boundary_torus();
    let bm = ad.pullback("sl3_boundary", &[p.meridian_word(), l])?;
    let table = cohomology_dims(&torus, &bm)?;
    let amu = ad.act(&p.meridian_word()) - CMat::identity(8, 8);
    let cen = linalg::kernel(&amu)?;
    let mats: Vec<CMat> = cen
        .column_iter()
        .map(|col| sl3_from_coords(col.as_slice()))
        .collect();
    let scale = mats.iter().map(linalg::max_abs_entry).fold(1.0, f64::max);
    let abelian = mats.iter().enumerate().all(|(i, a)| {
        mats[i + 1..]
            .iter()
            .all(|b| linalg::max_abs_entry(&(a * b - b * a)) < 1e-10 * scale * scale)
    });
    Ok(BoundaryReport {
        table,
        meridian_centralizer_dim: cen.ncols(),
        meridian_centralizer_abelian: abelian,
    })
}

/// Cochains attached to the Galois partner `α⁻¹`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaloisData {
    pub alpha: C64,
    /// `z ∈ Z¹(C_α)` as used in `ρ₀`.
    pub z: Vec<C64>,
    /// 1-based index of the first generator with `z ≠ 0`.
    pub s2: usize,
    pub z_minus: Vec<C64>,
    /// `δg₋ + h∪z₋ = 0`.
    pub g_minus: Vec<C64>,
    /// `δg₀ + z∪z₋ = 0`.
    pub g_zero: Vec<C64>,
    /// Membership residuals of `−h∪z₋` and `−z∪z₋`.
    pub residuals: [f64; 2],
}

pub fn galois_partner_data(p: &Presentation, alpha: C64) -> Result<GaloisData> {
    let n = p.num_generators;
    let ainv = alpha.inv();
    let kp = n - linalg::rank(&crate::alexander::alexander_matrix_at(p, alpha)?)?;
    let km = n - linalg::rank(&crate::alexander::alexander_matrix_at(p, ainv)?)?;
    if kp != km {
        return Err(Error::Inconsistent(format!(
            "dim ker J(alpha) = {kp} but dim ker J(1/alpha) = {km}"
        )));
    }
    let (z, s2) = normalized_twisted_cocycle(p, alpha)?;
    let (zm, _) = normalized_twisted_cocycle(p, ainv)?;
    if zm[s2 - 1].norm() < 1e-8 {
        return Err(Error::Inconsistent(format!("z_-(S{s2}) vanishes")));
    }
    let triv = TwistedModule::trivial(n);
    let ca = TwistedModule::character("C_alpha", n, alpha);
    let cm = TwistedModule::character("C_alpha_inv", n, ainv);
    let h = GroupCochain::cocycle(triv.clone(), Cochain1::from_scalars(&vec![cr(1.0); n]));
    let zc = GroupCochain::cocycle(ca, Cochain1::from_scalars(&z));
    let zmc = GroupCochain::cocycle(cm.clone(), Cochain1::from_scalars(&zm));

    let hz = cup_product_on_relators(&h, &zmc, &Pairing::product(cm.clone()), p)?;
    let m1 = coboundary_membership(&(-hz), &cm, p)?;
    let zz = cup_product_on_relators(&zc, &zmc, &Pairing::product(triv.clone()), p)?;
    let m2 = coboundary_membership(&(-zz), &triv, p)?;
    for (m, what) in [(&m1, "h∪z_-"), (&m2, "z∪z_-")] {
        if !m.is_coboundary {
            return Err(Error::Inconsistent(format!(
                "class of {what} is nonzero (relative residual {:.3e})",
                m.residual
            )));
        }
    }
    // shift by coboundaries (constants in C_{α⁻¹}) and cocycles (multiples of h in C)
    let gm = m1.witness.scalars();
    let gm: Vec<C64> = gm.iter().map(|x| x - gm[0]).collect();
    let g0 = m2.witness.scalars();
    let g0: Vec<C64> = g0.iter().map(|x| x - g0[0]).collect();
    Ok(GaloisData {
        alpha,
        z,
        s2,
        z_minus: zm,
        g_minus: gm,
        g_zero: g0,
        residuals: [m1.residual, m2.residual],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinates {
    pub t1: C64,
    pub t2: C64,
    pub t3: C64,
    pub residual: f64,
}

/// An adjoint 1-cocycle: one traceless matrix per generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointCocycle {
    #[serde(with = "matrix_list")]
    pub values: Vec<CMat>,
    pub coordinates: Option<Coordinates>,
}

impl AdjointCocycle {
    pub fn zero(n: usize) -> Self {
        Self {
            values: vec![CMat::zeros(3, 3); n],
            coordinates: None,
        }
    }

    pub fn stacked(&self) -> CVec {
        matrices_to_stacked(&self.values)
    }

    pub fn from_stacked(v: &CVec) -> Self {
        Self {
            values: stacked_to_matrices(v),
            coordinates: None,
        }
    }

    /// `δx(γ) = Ad ρ(γ) x − x`.
    pub fn coboundary(r: &Rep, x: &CMat) -> Result<Self> {
        let xc = sl3_coords(x);
        let values = r
            .generators
            .iter()
            .map(|g| Ok(sl3_from_coords((adjoint_matrix(g)? * &xc - &xc).as_slice())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            values,
            coordinates: None,
        })
    }

    /// `‖δ¹u‖` for the adjoint module of `r`.
    pub fn cocycle_residual(&self, p: &Presentation, r: &Rep) -> Result<f64> {
        let j = cocycle_matrix(p, &adjoint_module(r)?)?;
        Ok((j * self.stacked()).norm())
    }
}

/// Class of `u` in `H¹(π, C₋(3))` in the basis `z̄₁, z̄₂, z̄₃`, by least
/// squares on the lower-triangular entries:
/// `u₂₁ = t₁z₋ + t₃g₋ + δb₂₁`, `u₃₁ = t₃z₋ + δb₃₁`, `u₃₂ = t₂h − t₃g₀ + δb₃₂`
/// with `δb` the coboundaries of `C₋(3)`.
pub fn cocycle_coordinates(u: &AdjointCocycle, data: &GaloisData) -> Result<Coordinates> {
    let n = u.values.len();
    let ai = data.alpha.inv();
    let one = cr(1.0);
    let zero = cr(0.0);
    let mut a = CMat::zeros(3 * n, 5);
    let mut b = CVec::zeros(3 * n);
    for i in 0..n {
        let (r21, r31, r32) = (3 * i, 3 * i + 1, 3 * i + 2);
        // unknowns: t1, t2, t3, b21, b31
        let row21 = [data.z_minus[i], zero, data.g_minus[i], ai - one, ai];
        let row31 = [zero, zero, data.z_minus[i], zero, ai - one];
        let row32 = [zero, one, -data.g_zero[i], zero, -ai * data.z[i]];
        for k in 0..5 {
            a[(r21, k)] = row21[k];
            a[(r31, k)] = row31[k];
            a[(r32, k)] = row32[k];
        }
        b[r21] = u.values[i][(1, 0)];
        b[r31] = u.values[i][(2, 0)];
        b[r32] = u.values[i][(2, 1)];
    }
    let x = linalg::solve_min_norm(&a, &b);
    let residual = linalg::relative_residual(&a, &x, &b);
    if residual > FIT_TOL && b.norm() > FIT_TOL {
        return Err(Error::Residual {
            what: "projection to H1(C_minus(3))".into(),
            residual,
        });
    }
    Ok(Coordinates {
        t1: x[0],
        t2: x[1],
        t3: x[2],
        residual,
    })
}

/// Orthonormal basis of `Z¹(π, sl(3)_ρ)` as cocycles.
pub fn adjoint_cocycle_basis(p: &Presentation, rt: &Rep) -> Result<Vec<AdjointCocycle>> {
    let j = cocycle_matrix(p, &adjoint_module(rt)?)?;
    let ker = linalg::kernel(&j)?;
    Ok(ker
        .column_iter()
        .map(|c| AdjointCocycle::from_stacked(&c.into_owned()))
        .collect())
}

/// Minimal-norm cocycle with `t₃ = 1`.
pub fn select_direction(p: &Presentation, rt: &Rep, data: &GaloisData) -> Result<AdjointCocycle> {
    let basis = adjoint_cocycle_basis(p, rt)?;
    let t3: Vec<C64> = basis
        .iter()
        .map(|u| Ok(cocycle_coordinates(u, data)?.t3))
        .collect::<Result<_>>()?;
    let nrm: f64 = t3.iter().map(|x| x.norm_sqr()).sum();
    if nrm.sqrt() < FIT_TOL {
        return Err(Error::Inconsistent("no cocycle with t3 != 0".into()));
    }
    let mut v = CVec::zeros(p.num_generators * 8);
    for (u, &c3) in basis.iter().zip(&t3) {
        v += u.stacked() * (c3.conj() / nrm);
    }
    let mut u = AdjointCocycle::from_stacked(&v);
    u.coordinates = Some(cocycle_coordinates(&u, data)?);
    Ok(u)
}

type Series = Vec<CMat>;

fn series_mul(a: &Series, b: &Series, order: usize) -> Series {
    let d = a[0].nrows();
    let mut out = vec![CMat::zeros(d, d); order + 1];
    for (i, ai) in a.iter().enumerate().take(order + 1) {
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `exp(x)` for a series with vanishing constant term, exact to `order`.
fn series_exp(x: &Series, order: usize) -> Series {
    let d = x[0].nrows();
    let mut out = vec![CMat::zeros(d, d); order + 1];
    out[0] = CMat::identity(d, d);
    let mut pow = out.clone();
    for j in 1..=order {
        pow = series_mul(&pow, x, order);
        for (o, p) in out.iter_mut().zip(&pow) {
            *o += p / cr(factorial(j));
        }
    }
    out
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|k| k as f64).product()
}

fn constant(m: &CMat, order: usize) -> Series {
    let mut s = vec![CMat::zeros(m.nrows(), m.ncols()); order + 1];
    s[0] = m.clone();
    s
}

/// Truncated formal deformation `exp(−tX) exp(Σ tᵏ uₖ(Sᵢ)) ρ̃(Sᵢ) exp(tX)`.
///
/// `u₁` splits as `uₕ + δX` with `uₕ ⊥ B¹`; only `uₕ` is integrated order
/// by order and the coboundary part is carried by the gauge `X`, so pure
/// coboundary directions trace out conjugation orbits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormalCurve {
    pub order: usize,
    /// `terms[k − 1]` is `uₖ`, with `terms[0] = uₕ`.
    pub terms: Vec<AdjointCocycle>,
    pub gauge: CMat,
    /// Residual of the linear solve at orders `2..=K`; order 1 reports `‖δ¹u₁‖`.
    pub obstruction_residuals: Vec<f64>,
}

impl FormalCurve {
    fn generator_series(&self, rt: &Rep, order: usize) -> (Vec<Series>, Vec<Series>) {
        let n = rt.generators.len();
        let mut fwd = Vec::with_capacity(n);
        let mut inv = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = vec![CMat::zeros(3, 3); order + 1];
            for (k, u) in self.terms.iter().enumerate().take(order) {
                x[k + 1] = u.values[i].clone();
            }
            let neg: Series = x.iter().map(|m| -m).collect();
            let g = &rt.generators[i];
            let ginv = g.clone().try_inverse().expect("generator invertible");
            fwd.push(series_mul(&series_exp(&x, order), &constant(g, order), order));
            inv.push(series_mul(&constant(&ginv, order), &series_exp(&neg, order), order));
        }
        (fwd, inv)
    }

    /// Series of every relator, truncated at `order`.
    fn relator_series(&self, p: &Presentation, rt: &Rep, order: usize) -> Vec<Series> {
        let (fwd, inv) = self.generator_series(rt, order);
        p.relators
            .iter()
            .map(|w| {
                w.letters().iter().fold(constant(&CMat::identity(3, 3), order), |acc, &l| {
                    let i = l.unsigned_abs() as usize - 1;
                    let f = if l > 0 { &fwd[i] } else { &inv[i] };
                    series_mul(&acc, f, order)
                })
            })
            .collect()
    }

    /// Largest coefficient of `t¹..t^K` over all relators.
    pub fn truncation_defect(&self, p: &Presentation, rt: &Rep) -> f64 {
        self.relator_series(p, rt, self.order)
            .iter()
            .flat_map(|s| s[1..].iter().map(linalg::max_abs_entry))
            .fold(0.0, f64::max)
    }

    /// Numeric evaluation at parameter `t`.
    pub fn eval(&self, rt: &Rep, t: f64) -> Rep {
        let left = (&self.gauge * cr(-t)).exp();
        let right = (&self.gauge * cr(t)).exp();
        let mut out = rt.clone();
        for (i, g) in out.generators.iter_mut().enumerate() {
            let mut x = CMat::zeros(3, 3);
            for (k, u) in self.terms.iter().enumerate() {
                x += &u.values[i] * cr(t.powi(k as i32 + 1));
            }
            *g = &left * x.exp() * &rt.generators[i] * &right;
        }
        out
    }
}

/// `u = uₕ + δX` with `X` the least-squares gauge.
fn split_coboundary(rt: &Rep, u: &AdjointCocycle) -> Result<(CMat, AdjointCocycle)> {
    let n = u.values.len();
    let mut b = CMat::zeros(n * 8, 8);
    for k in 0..8 {
        let mut e = vec![cr(0.0); 8];
        e[k] = cr(1.0);
        let col = AdjointCocycle::coboundary(rt, &sl3_from_coords(&e))?.stacked();
        b.set_column(k, &col);
    }
    let x = linalg::solve_min_norm(&b, &u.stacked());
    let uh = AdjointCocycle::from_stacked(&(u.stacked() - &b * &x));
    Ok((sl3_from_coords(x.as_slice()), uh))
}

/// Solve the obstruction equations order by order up to `k_max`.
pub fn formal_deformation(
    p: &Presentation,
    rt: &Rep,
    u1: &AdjointCocycle,
    k_max: usize,
) -> Result<FormalCurve> {
    if k_max == 0 {
        return Err(Error::Dimension("formal order must be at least 1".into()));
    }
    let j = cocycle_matrix(p, &adjoint_module(rt)?)?;
    let first = (&j * u1.stacked()).norm() / u1.stacked().norm().max(1.0);
    if first > FIT_TOL {
        return Err(Error::Residual {
            what: "u1 is not a cocycle".into(),
            residual: first,
        });
    }
    let (gauge, uh) = split_coboundary(rt, u1)?;
    let mut curve = FormalCurve {
        order: 1,
        terms: vec![uh],
        gauge,
        obstruction_residuals: vec![first],
    };
    for k in 2..=k_max {
        curve.terms.push(AdjointCocycle::zero(p.num_generators));
        curve.order = k;
        let series = curve.relator_series(p, rt, k);
        let mut rhs = CVec::zeros(p.relators.len() * 8);
        let mut trace = 0.0f64;
        for (r, s) in series.iter().enumerate() {
            rhs.rows_mut(r * 8, 8).copy_from(&sl3_coords(&s[k]));
            trace += s[k].trace().norm_sqr();
        }
        let x = linalg::solve_min_norm(&j, &(-&rhs));
        let defect = ((&j * &x + &rhs).norm_squared() + trace).sqrt();
        let residual = defect / rhs.norm().max(1.0);
        curve.obstruction_residuals.push(residual);
        if residual > FIT_TOL {
            return Err(Error::Inconsistent(format!(
                "obstruction at order {k} does not vanish (residual {residual:.3e})"
            )));
        }
        *curve.terms.last_mut().expect("pushed") = AdjointCocycle::from_stacked(&x);
    }
    Ok(curve)
}

/// Entrywise relator residual `max_j ‖ρ(Rⱼ) − I‖`.
pub fn relator_residual(p: &Presentation, r: &Rep) -> Result<f64> {
    let im = r.images()?;
    let id = CMat::identity(r.dim, r.dim);
    Ok(p.relators
        .iter()
        .map(|w| linalg::max_abs_entry(&(im.word(w) - &id)))
        .fold(0.0, f64::max))
}

fn residual_vector(p: &Presentation, gens: &[CMat]) -> CVec {
    let mut out = CVec::zeros(p.relators.len() * 9);
    for (j, w) in p.relators.iter().enumerate() {
        let m = word_product(gens, w) - CMat::identity(3, 3);
        out.rows_mut(j * 9, 9).copy_from(&linalg::vectorize(&m));
    }
    out
}

fn word_product(gens: &[CMat], w: &Word) -> CMat {
    w.letters().iter().fold(CMat::identity(3, 3), |acc, &l| {
        let g = &gens[l.unsigned_abs() as usize - 1];
        if l > 0 {
            acc * g
        } else {
            acc * g.clone().try_inverse().expect("invertible")
        }
    })
}

/// Derivative of the residual under `ρ(Sᵢ) ← exp(Xᵢ) ρ(Sᵢ)`, `Xᵢ ∈ sl(3)`.
fn newton_jacobian(p: &Presentation, gens: &[CMat]) -> CMat {
    let n = gens.len();
    let basis = sl3_basis();
    let invs: Vec<CMat> = gens.iter().map(|g| g.clone().try_inverse().expect("invertible")).collect();
    let mut jac = CMat::zeros(p.relators.len() * 9, n * 8);
    for (j, w) in p.relators.iter().enumerate() {
        let letters = w.letters();
        let mats: Vec<&CMat> = letters
            .iter()
            .map(|&l| {
                let i = l.unsigned_abs() as usize - 1;
                if l > 0 {
                    &gens[i]
                } else {
                    &invs[i]
                }
            })
            .collect();
        // prefix[k] = x₁⋯x_k, suffix[k] = x_{k+1}⋯x_m
        let mut prefix = vec![CMat::identity(3, 3)];
        for m in &mats {
            let next = prefix.last().expect("nonempty") * *m;
            prefix.push(next);
        }
        let mut suffix = vec![CMat::identity(3, 3); mats.len() + 1];
        for k in (0..mats.len()).rev() {
            suffix[k] = mats[k] * &suffix[k + 1];
        }
        for (k, &l) in letters.iter().enumerate() {
            let i = l.unsigned_abs() as usize - 1;
            // x ↦ A X B
            let (a, b, sign) = if l > 0 {
                (&prefix[k], &suffix[k], 1.0)
            } else {
                (&prefix[k + 1], &suffix[k + 1], -1.0)
            };
            for (m, e) in basis.iter().enumerate() {
                let col = linalg::vectorize(&(a * e * b)) * cr(sign);
                let mut view = jac.view_mut((j * 9, i * 8 + m), (9, 1));
                view += col;
            }
        }
    }
    jac
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub rep: Rep,
    pub residual: f64,
    pub iterations: usize,
}

/// Gauss–Newton with minimal-norm steps from `start`.
pub fn newton_refine(p: &Presentation, start: &Rep, t: f64) -> Result<NewtonResult> {
    let mut gens = start.generators.clone();
    let mut f = residual_vector(p, &gens);
    let mut res = f.camax();
    let mut iterations = 0;
    while res > NEWTON_TOL {
        if iterations >= NEWTON_MAX_ITER {
            return Err(Error::NewtonFailed {
                t,
                reason: format!("no convergence after {iterations} iterations (residual {res:.3e})"),
            });
        }
        iterations += 1;
        let jac = newton_jacobian(p, &gens);
        let step = linalg::solve_min_norm(&jac, &(-&f));
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial: Vec<CMat> = gens
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let x = sl3_from_coords(step.rows(i * 8, 8).as_slice()) * cr(scale);
                    x.exp() * g
                })
                .collect();
            let ft = residual_vector(p, &trial);
            let rt = ft.camax();
            if rt < res {
                gens = trial;
                f = ft;
                res = rt;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            if res < 1e-11 {
                // rounding floor reached
                break;
            }
            return Err(Error::NewtonFailed {
                t,
                reason: format!("residual {res:.3e} failed to contract"),
            });
        }
    }
    let mut rep = start.clone();
    rep.generators = gens;
    Ok(NewtonResult {
        rep,
        residual: res,
        iterations,
    })
}

/// Burnside test: dimension of the algebra generated by the images.
pub fn irreducibility_check(r: &Rep) -> (bool, usize) {
    let d = r.dim;
    let full = d * d;
    let mut basis: Vec<CVec> = Vec::new();
    let mut members: Vec<CMat> = Vec::new();
    let add = |m: CMat, basis: &mut Vec<CVec>, members: &mut Vec<CMat>| {
        let v = linalg::vectorize(&m);
        let nv = v.norm();
        if nv == 0.0 {
            return;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
        }
        let nw = w.norm();
        if nw > SPAN_TOL * nv {
            basis.push(w / cr(nw));
            members.push(m);
        }
    };
    add(CMat::identity(d, d), &mut basis, &mut members);
    let mut frontier: Vec<CMat> = members.clone();
    let mut stable_runs = 0;
    for _ in 0..MAX_WORD_LENGTH {
        let before = basis.len();
        let mut next = Vec::new();
        for m in &frontier {
            for g in &r.generators {
                let prod = m * g;
                let len = basis.len();
                add(prod, &mut basis, &mut members);
                if basis.len() > len {
                    next.push(members.last().expect("just added").clone());
                }
            }
        }
        frontier = next;
        if basis.len() == before {
            stable_runs += 1;
            if stable_runs >= 2 || frontier.is_empty() {
                break;
            }
        } else {
            stable_runs = 0;
        }
        if basis.len() == full {
            break;
        }
    }
    (basis.len() == full, basis.len())
}

/// Stability and trace classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub irreducible: bool,
    pub algebra_dim: usize,
    /// `dim H⁰(π, sl(3)_ρ)`, the centralizer dimension.
    pub centralizer_dim: usize,
    pub meridian_trace: C64,
    pub stable: bool,
    pub nonmetabelian: bool,
}

pub fn classify(p: &Presentation, r: &Rep) -> Result<Classification> {
    let (irreducible, algebra_dim) = irreducibility_check(r);
    let ad = TwistedModule::new(
        "sl3",
        r.generators.iter().map(adjoint_matrix).collect::<Result<Vec<_>>>()?,
    )?;
    let centralizer_dim = 8 - linalg::rank(&coboundary_matrix(p, &ad))?;
    let meridian_trace = r.trace(&p.meridian_word())?;
    Ok(Classification {
        irreducible,
        algebra_dim,
        centralizer_dim,
        meridian_trace,
        stable: irreducible && centralizer_dim == 0,
        nonmetabelian: irreducible && meridian_trace.norm() > TRACE_TOL,
    })
}

/// `Ad_C ∘ r` with `r(S₁)` block diagonal `(1) ⊕ (2)`.
pub fn eigen_normal_form(r: &Rep) -> Result<(Rep, CMat)> {
    let a = r.generator(1).clone();
    let xi = crate::metabel::principal_power(r.alpha, -1.0 / 3.0);
    let target = xi * r.alpha;
    // characteristic polynomial λ³ + c₂λ² + c₁λ + c₀
    let tr = a.trace();
    let c2 = -tr;
    let c1 = (tr * tr - (&a * &a).trace()) / 2.0;
    let c0 = -a.determinant();
    let poly = |l: C64| ((l + c2) * l + c1) * l + c0;
    let dpoly = |l: C64| (l * 3.0 + c2 * 2.0) * l + c1;
    let mut lam = target;
    for _ in 0..50 {
        let d = dpoly(lam);
        if d.norm() == 0.0 {
            break;
        }
        let step = poly(lam) / d;
        lam -= step;
        if step.norm() < 1e-16 * lam.norm().max(1.0) {
            break;
        }
    }
    // remaining eigenvalues: roots of λ² + (c₂ + λ₀)λ + (c₁ + λ₀(c₂ + λ₀))
    let b = c2 + lam;
    let cc = c1 + lam * b;
    let disc = (b * b - cc * 4.0).sqrt();
    let others = [(-b + disc) / 2.0, (-b - disc) / 2.0];
    let gap = others.iter().map(|m| (m - lam).norm()).fold(f64::INFINITY, f64::min);
    if gap < GAP_TOL {
        return Err(Error::EigenvalueCollision { gap });
    }
    let shifted = &a - CMat::identity(3, 3) * lam;
    let m = shifted.view((1, 1), (2, 2)).into_owned();
    let rhs = -shifted.view((1, 0), (2, 1)).into_owned();
    let tail = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::EigenvalueCollision { gap })?;
    let mut q = CMat::identity(3, 3);
    q[(1, 0)] = tail[(0, 0)];
    q[(2, 0)] = tail[(1, 0)];
    let qinv = q.clone().try_inverse().expect("unit lower triangular");
    let a1 = &qinv * &a * &q;
    let a11 = a1[(0, 0)];
    let block = a1.view((1, 1), (2, 2)).into_owned() - CMat::identity(2, 2) * a11;
    let row = a1.view((0, 1), (1, 2)).into_owned();
    let binv = block
        .try_inverse()
        .ok_or(Error::EigenvalueCollision { gap })?;
    let xy = -row * binv;
    let mut pm = CMat::identity(3, 3);
    pm[(0, 1)] = xy[(0, 0)];
    pm[(0, 2)] = xy[(0, 1)];
    let conj = pm * qinv;
    Ok((r.conjugate(&conj)?, conj))
}

/// `g(t)` of the irreducibility criterion for `A = r(S₁)`, `B = r(S₂)` in
/// normal form.
pub fn burnside_minor(a: &CMat, b: &CMat) -> C64 {
    let (b21, b31) = (b[(1, 0)], b[(2, 0)]);
    b21 * (a[(2, 1)] * b21 + a[(2, 2)] * b31) - b31 * (a[(1, 1)] * b21 + a[(1, 2)] * b31)
}

/// One sample of a numeric deformation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub residual: f64,
    pub iterations: usize,
    pub algebra_dim: usize,
    pub irreducible: bool,
    pub centralizer_dim: usize,
    pub trace_mu: C64,
    pub stable: bool,
    pub nonmetabelian: bool,
    pub rep: Rep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Direction {
    pub t1: C64,
    pub t2: C64,
    pub t3: C64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeformCertificate {
    pub schema: u32,
    pub knot: String,
    pub alpha: C64,
    pub direction: Direction,
    pub orders: usize,
    pub obstruction_residuals: Vec<f64>,
    pub rho_tilde: Rep,
    pub u1: AdjointCocycle,
    pub samples: Vec<Sample>,
    pub stable: bool,
    pub nonmetabelian: bool,
}

/// Newton-converge the formal curve at each `t` (concurrently) and classify.
pub fn integrate_deformation(
    p: &Presentation,
    rt: &Rep,
    curve: &FormalCurve,
    t_values: &[f64],
) -> Result<Vec<Sample>> {
    t_values
        .par_iter()
        .map(|&t| {
            let seed = curve.eval(rt, t);
            let nr = newton_refine(p, &seed, t)?;
            let cl = classify(p, &nr.rep)?;
            Ok(Sample {
                t,
                residual: nr.residual,
                iterations: nr.iterations,
                algebra_dim: cl.algebra_dim,
                irreducible: cl.irreducible,
                centralizer_dim: cl.centralizer_dim,
                trace_mu: cl.meridian_trace,
                stable: cl.stable,
                nonmetabelian: cl.nonmetabelian,
                rep: nr.rep,
            })
        })
        .collect()
}

/// Full pipeline from `ρ̃`: direction with `t₃ = 1`, formal curve to order
/// `k_max`, numeric samples.
pub fn deform_certificate(
    knot: &str,
    p: &Presentation,
    rt: &Rep,
    k_max: usize,
    t_values: &[f64],
) -> Result<DeformCertificate> {
    let data = galois_partner_data(p, rt.alpha)?;
    let u1 = select_direction(p, rt, &data)?;
    let curve = formal_deformation(p, rt, &u1, k_max)?;
    let samples = integrate_deformation(p, rt, &curve, t_values)?;
    let co = u1.coordinates.expect("set by select_direction");
    Ok(DeformCertificate {
        schema: 1,
        knot: knot.to_string(),
        alpha: rt.alpha,
        direction: Direction {
            t1: co.t1,
            t2: co.t2,
            t3: co.t3,
        },
        orders: k_max,
        obstruction_residuals: curve.obstruction_residuals.clone(),
        rho_tilde: rt.clone(),
        stable: !samples.is_empty() && samples.iter().all(|s| s.stable),
        nonmetabelian: !samples.is_empty() && samples.iter().all(|s| s.nonmetabelian),
        u1,
        samples,
    })
}

/// Derivatives at `t = 0` from central differences with Richardson
/// extrapolation over `h` and `h/2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IrreducibilityDerivatives {
    pub b31_at_zero: C64,
    pub b31_prime: C64,
    pub g_at_zero: C64,
    pub g_second: C64,
    /// `α^{−1/3}` with the principal branch.
    pub xi: C64,
}

pub fn irreducibility_derivatives(
    p: &Presentation,
    rt: &Rep,
    curve: &FormalCurve,
    s2: usize,
    h: f64,
) -> Result<IrreducibilityDerivatives> {
    let at = |t: f64| -> Result<(C64, C64)> {
        let rep = if t == 0.0 {
            rt.clone()
        } else {
            newton_refine(p, &curve.eval(rt, t), t)?.rep
        };
        let (nf, _) = eigen_normal_form(&rep)?;
        let a = nf.generator(1);
        let b = nf.generator(s2);
        Ok((b[(2, 0)], burnside_minor(a, b)))
    };
    let hs = [h, h / 2.0];
    let ts: Vec<f64> = hs.iter().flat_map(|&x| [x, -x]).chain([0.0]).collect();
    let vals = ts
        .par_iter()
        .map(|&t| at(t))
        .collect::<Result<Vec<_>>>()?;
    let (b0, g0) = vals[4];
    let d1 = |k: usize| (vals[2 * k].0 - vals[2 * k + 1].0) / (2.0 * hs[k]);
    let d2 = |k: usize| (vals[2 * k].1 - g0 * 2.0 + vals[2 * k + 1].1) / (hs[k] * hs[k]);
    let rich = |a: C64, b: C64| (b * 4.0 - a) / 3.0;
    Ok(IrreducibilityDerivatives {
        b31_at_zero: b0,
        b31_prime: rich(d1(0), d1(1)),
        g_at_zero: g0,
        g_second: rich(d2(0), d2(1)),
        xi: crate::metabel::principal_power(rt.alpha, -1.0 / 3.0),
    })
}

/// `max_i ‖(ρ_t(Sᵢ)ρ̃(Sᵢ)⁻¹ − I)/t − u₁(Sᵢ)‖`.
pub fn leading_term_error(rt: &Rep, rep_t: &Rep, u1: &AdjointCocycle, t: f64) -> f64 {
    rep_t
        .generators
        .iter()
        .zip(&rt.generators)
        .zip(&u1.values)
        .map(|((a, b), u)| {
            let binv = b.clone().try_inverse().expect("invertible");
            let fd = (a * binv - CMat::identity(3, 3)) / cr(t);
            linalg::max_abs_entry(&(fd - u))
        })
        .fold(0.0, f64::max)
}

/// Recompute every recorded quantity of a certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Replay {
    pub obstruction_residuals: Vec<f64>,
    pub samples: Vec<Classification>,
    pub sample_residuals: Vec<f64>,
}

pub fn replay_certificate(p: &Presentation, cert: &DeformCertificate) -> Result<Replay> {
    let curve = formal_deformation(p, &cert.rho_tilde, &cert.u1, cert.orders)?;
    let mut samples = Vec::new();
    let mut sample_residuals = Vec::new();
    for s in &cert.samples {
        samples.push(classify(p, &s.rep)?);
        sample_residuals.push(residual_vector(p, &s.rep.generators).camax());
    }
    Ok(Replay {
        obstruction_residuals: curve.obstruction_residuals,
        samples,
        sample_residuals,
    })
}

/// `Δ(−2) ≠ 0`, so `tr ρ̃(μ) = α^{−1/3}(α + 2)` cannot vanish.
pub fn trace_obstruction_holds(delta: &crate::alexander::LaurentPoly) -> bool {
    delta.eval(cr(-2.0)).norm() > 0.5
}

pub(crate) mod matrix_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    type Raw = Vec<Vec<Vec<[f64; 2]>>>;

    pub fn serialize<S: Serializer>(v: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Raw = v
            .iter()
            .map(|m| {
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                    .collect()
            })
            .collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMat>, D::Error> {
        let raw = Raw::deserialize(d)?;
        Ok(raw
            .iter()
            .map(|rows| {
                let n = rows.len();
                CMat::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1]))
            })
            .collect())
    }
}
