#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_3;

use repvar::knotio::{catalog_lookup, wirtinger_presentation};
use repvar::linalg::{CMat, C64};
use repvar::metabel::{build_metabelian_sl3, normalize_to_sl3, Rep};
use repvar::Presentation;

pub fn pres(name: &str) -> Presentation {
    wirtinger_presentation(&catalog_lookup(name).unwrap()).unwrap()
}

/// `e^{iπ/3}`, a double root of `Δ_{8₂₀}`.
pub fn alpha_8_20() -> C64 {
    C64::from_polar(1.0, FRAC_PI_3)
}

pub fn rho_tilde(p: &Presentation, alpha: C64) -> Rep {
    normalize_to_sl3(&build_metabelian_sl3(p, alpha).unwrap())
}

/// Integer Laurent polynomial as exponent → coefficient.
pub type IntPoly = BTreeMap<i64, i64>;

fn poly_add(a: &IntPoly, b: &IntPoly, sign: i64) -> IntPoly {
    let mut out = a.clone();
    for (e, c) in b {
        *out.entry(*e).or_insert(0) += sign * c;
    }
    out.retain(|_, c| *c != 0);
    out
}

fn poly_mul(a: &IntPoly, b: &IntPoly) -> IntPoly {
    let mut out = IntPoly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            *out.entry(ea + eb).or_insert(0) += ca * cb;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Abelianized Fox derivative read directly off the letters:
/// `Sⱼ` at abelian position `e` gives `+tᵉ`, `Sⱼ⁻¹` gives `−t^{e−1}`.
pub fn oracle_fox(word: &[i32], j: i32) -> IntPoly {
    let mut out = IntPoly::new();
    let mut e = 0i64;
    for &l in word {
        if l == j {
            *out.entry(e).or_insert(0) += 1;
        } else if l == -j {
            *out.entry(e - 1).or_insert(0) -= 1;
        }
        e += l.signum() as i64;
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Determinant by cofactor expansion along the first row.
pub fn oracle_det(m: &[Vec<IntPoly>]) -> IntPoly {
    let n = m.len();
    if n == 0 {
        return IntPoly::from([(0, 1)]);
    }
    let mut out = IntPoly::new();
    for (col, entry) in m[0].iter().enumerate() {
        if entry.is_empty() {
            continue;
        }
        let minor: Vec<Vec<IntPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != col)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let term = poly_mul(entry, &oracle_det(&minor));
        out = poly_add(&out, &term, if col % 2 == 0 { 1 } else { -1 });
    }
    out
}

/// `Δ` from the Fox Jacobian with the meridian column removed, as dense
/// coefficients from degree 0 with positive constant term.
pub fn oracle_alexander(p: &Presentation) -> Vec<i64> {
    let cols: Vec<i32> = (1..=p.num_generators as i32)
        .filter(|&j| j as usize != p.meridian)
        .collect();
    let m: Vec<Vec<IntPoly>> = p
        .relators
        .iter()
        .map(|r| cols.iter().map(|&j| oracle_fox(r.letters(), j)).collect())
        .collect();
    normalize(&oracle_det(&m))
}

pub fn normalize(f: &IntPoly) -> Vec<i64> {
    let lo = *f.keys().next().expect("nonzero");
    let hi = *f.keys().last().unwrap();
    let mut v: Vec<i64> = (lo..=hi).map(|e| *f.get(&e).unwrap_or(&0)).collect();
    if v[0] < 0 {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    v
}

pub fn normalize_dense(v: &[i64]) -> Vec<i64> {
    let f: IntPoly = v
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0)
        .map(|(e, c)| (e as i64, *c))
        .collect();
    normalize(&f)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
