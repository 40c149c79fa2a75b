mod common;

use std::sync::OnceLock;

use common::*;
use proptest::prelude::*;
use repvar::deform::*;
use repvar::linalg::{c, cr, CMat};
use repvar::metabel::{principal_power, rho_alpha, Rep};
use repvar::{Presentation, Word};

struct Fixture {
    p: Presentation,
    rt: Rep,
    data: GaloisData,
    u1: AdjointCocycle,
    curve: FormalCurve,
    basis: Vec<AdjointCocycle>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let p = pres("8_20");
        let rt = rho_tilde(&p, alpha_8_20());
        let data = galois_partner_data(&p, rt.alpha).unwrap();
        let u1 = select_direction(&p, &rt, &data).unwrap();
        let curve = formal_deformation(&p, &rt, &u1, 4).unwrap();
        let basis = adjoint_cocycle_basis(&p, &rt).unwrap();
        Fixture { p, rt, data, u1, curve, basis }
    })
}

fn word_list() -> Vec<Word> {
    vec![
        Word::new([1]),
        Word::new([1, 2]),
        Word::new([2, -3, 4]),
        Word::new([1, 2, 3, 4, 5]),
        Word::new([5, -1, 7, 2]),
        Word::new([8, 6, -2]),
    ]
}

#[test]
fn zariski_tangent_space_has_dimension_ten() {
    let f = fixture();
    assert_eq!(f.basis.len(), 10);
    for u in &f.basis {
        assert!(u.cocycle_residual(&f.p, &f.rt).unwrap() < 1e-10);
    }
}

#[test]
fn selected_direction_has_unit_t3() {
    let f = fixture();
    let co = f.u1.coordinates.unwrap();
    assert!((co.t3 - cr(1.0)).norm() < 1e-10);
    assert!(co.residual < 1e-8);
    assert!(f.data.residuals.iter().all(|r| *r < 1e-10));
}

#[test]
fn coboundaries_have_vanishing_coordinates() {
    let f = fixture();
    let x = sl3_from_coords(&[c(0.3, 0.1), c(-0.2, 0.4), cr(1.0), c(0.0, 1.0), cr(0.5), cr(-0.7), c(0.2, 0.2), cr(0.9)]);
    let u = AdjointCocycle::coboundary(&f.rt, &x).unwrap();
    let co = cocycle_coordinates(&u, &f.data).unwrap();
    for t in [co.t1, co.t2, co.t3] {
        assert!(t.norm() < 1e-10, "{co:?}");
    }
}

#[test]
fn obstructions_vanish_to_order_four() {
    let f = fixture();
    assert_eq!(f.curve.obstruction_residuals.len(), 4);
    assert!(f.curve.obstruction_residuals.iter().all(|r| *r < 1e-8));
    assert!(f.curve.truncation_defect(&f.p, &f.rt) < 1e-10);
}

/// The `t²` coefficient of the relators along `exp(t u₁) ρ̃`, read off by
/// symmetric differences, must be cancelled by `J u₂`.
#[test]
fn second_order_term_solves_the_finite_difference_equation() {
    let f = fixture();
    let first = FormalCurve { order: 1, terms: vec![f.curve.terms[0].clone()], gauge: CMat::zeros(3, 3), obstruction_residuals: vec![0.0] };
    let second_coeff = |h: f64| -> Vec<CMat> {
        let (a, b) = (first.eval(&f.rt, h), first.eval(&f.rt, -h));
        f.p.relators
            .iter()
            .map(|r| (a.eval(r).unwrap() + b.eval(r).unwrap() - CMat::identity(3, 3) * cr(2.0)) / cr(2.0 * h * h))
            .collect()
    };
    let (c1, c2) = (second_coeff(1e-3), second_coeff(5e-4));
    let j = repvar::cohomology::cocycle_matrix(&f.p, &adjoint_module(&f.rt).unwrap()).unwrap();
    let ju2 = j * f.curve.terms[1].stacked();
    let mut worst = 0.0f64;
    for (k, (a, b)) in c1.iter().zip(&c2).enumerate() {
        let rich = (b * cr(4.0) - a) / cr(3.0);
        let want = -sl3_coords(&rich);
        let got = ju2.rows(k * 8, 8).into_owned();
        worst = worst.max((got - want).norm());
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn numeric_samples_are_stable_and_nonmetabelian() {
    let f = fixture();
    let samples = integrate_deformation(&f.p, &f.rt, &f.curve, &[0.0025, 0.005, 0.01]).unwrap();
    let xi = principal_power(f.rt.alpha, -1.0 / 3.0);
    let tr0 = xi * (f.rt.alpha + cr(2.0));
    for s in &samples {
        assert!(s.residual < 1e-10);
        assert_eq!(s.algebra_dim, 9);
        assert!(s.irreducible && s.stable && s.nonmetabelian);
        assert_eq!(s.centralizer_dim, 0);
        assert!(s.trace_mu.norm() > 0.5);
        assert!((s.trace_mu - tr0).norm() < 10.0 * s.t);
        let mu = s.rep.eval(&f.p.meridian_word()).unwrap();
        let la = s.rep.eval(f.p.longitude.as_ref().unwrap()).unwrap();
        assert!(max_abs(&(&mu * &la - &la * &mu)) < 1e-10);
    }
}

#[test]
fn reducible_and_diagonal_classification() {
    let f = fixture();
    let c0 = classify(&f.p, &f.rt).unwrap();
    assert!(!c0.irreducible && !c0.stable && !c0.nonmetabelian);
    assert!(c0.algebra_dim < 9);
    let ra = rho_alpha(f.p.num_generators, f.rt.alpha).unwrap();
    let ca = classify(&f.p, &ra).unwrap();
    assert_eq!(ca.algebra_dim, 2);
    // stabilizer GL(1) × GL(2) ∩ SL(3) has dimension 4, so the orbit is 4-dimensional
    assert_eq!(ca.centralizer_dim, 4);
    assert!(!ca.stable);
}

#[test]
fn eigen_normal_form_blocks() {
    let f = fixture();
    let (nf, conj) = eigen_normal_form(&f.rt).unwrap();
    assert!(max_abs(&(conj - CMat::identity(3, 3))) < 1e-12);
    assert!(max_abs(&(nf.generator(1) - f.rt.generator(1))) < 1e-12);
    let rep = newton_refine(&f.p, &f.curve.eval(&f.rt, 0.01), 0.01).unwrap().rep;
    let (nf, _) = eigen_normal_form(&rep).unwrap();
    let a = nf.generator(1);
    for (r, col) in [(1, 0), (2, 0), (0, 1), (0, 2)] {
        assert!(a[(r, col)].norm() < 1e-10, "({r},{col}) = {}", a[(r, col)]);
    }
}

/// With `A(0)` in block form, `g = det[[b₂₁, (Ab)₂₁], [b₃₁, (Ab)₃₁]]`
/// expands to `g″(0) = −2α^{−1/3} b′₃₁(0)²`.
#[test]
fn burnside_minor_second_derivative() {
    let f = fixture();
    let d = irreducibility_derivatives(&f.p, &f.rt, &f.curve, f.data.s2, 1e-3).unwrap();
    assert!(d.b31_at_zero.norm() < 1e-12);
    assert!(d.g_at_zero.norm() < 1e-12);
    assert!(d.b31_prime.norm() > 0.1);
    let corrected = -d.xi * d.b31_prime * d.b31_prime * cr(2.0);
    assert!((d.g_second - corrected).norm() < 1e-4 * corrected.norm());
}

#[test]
fn certificate_roundtrip_and_replay() {
    let f = fixture();
    let cert = deform_certificate("8_20", &f.p, &f.rt, 4, &[0.005, 0.01]).unwrap();
    let text = serde_json::to_string(&cert).unwrap();
    let back: DeformCertificate = serde_json::from_str(&text).unwrap();
    let replay = replay_certificate(&f.p, &back).unwrap();
    for (a, b) in cert.obstruction_residuals.iter().zip(&replay.obstruction_residuals) {
        assert!(*b <= 10.0 * a + 1e-12);
    }
    for ((s, cl), r) in cert.samples.iter().zip(&replay.samples).zip(&replay.sample_residuals) {
        assert!(*r <= 10.0 * s.residual + 1e-12);
        assert_eq!((cl.algebra_dim, cl.stable, cl.nonmetabelian), (s.algebra_dim, s.stable, s.nonmetabelian));
    }
    assert!(cert.stable && cert.nonmetabelian);
}

fn max_diff(a: &Rep, b: &Rep) -> f64 {
    a.generators.iter().zip(&b.generators).map(|(x, y)| max_abs(&(x - y))).fold(0.0, f64::max)
}

/// Newton-converged and truncated formal curves differ by `O(t^{K+1})`.
#[test]
fn formal_and_numeric_curves_agree_to_order() {
    let f = fixture();
    for k in [1usize, 2, 3] {
        let curve = formal_deformation(&f.p, &f.rt, &f.u1, k).unwrap();
        let gap = |t: f64| {
            let formal = curve.eval(&f.rt, t);
            max_diff(&newton_refine(&f.p, &formal, t).unwrap().rep, &formal)
        };
        let (g1, g2, g3) = (gap(1e-2), gap(5e-3), gap(2.5e-3));
        let slope = |a: f64, b: f64| (a / b).log2();
        let want = (k + 1) as f64;
        assert!((slope(g1, g2) - want).abs() < 0.3, "K = {k}: {g1} {g2}");
        assert!((slope(g2, g3) - want).abs() < 0.3, "K = {k}: {g2} {g3}");
    }
}

fn random_sl3() -> impl Strategy<Value = CMat> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8)
        .prop_map(|v| sl3_from_coords(&v.iter().map(|(a, b)| c(*a, *b)).collect::<Vec<_>>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Coboundary directions integrate to conjugation orbits: traces of a
    /// fixed word list stay at their `ρ̃` values.
    #[test]
    fn coboundary_directions_keep_characters(x in random_sl3(), k in 1usize..=4, t in 1e-3f64..2e-2) {
        let f = fixture();
        let u = AdjointCocycle::coboundary(&f.rt, &x).unwrap();
        let curve = formal_deformation(&f.p, &f.rt, &u, k).unwrap();
        let rep = newton_refine(&f.p, &curve.eval(&f.rt, t), t).unwrap().rep;
        for w in word_list() {
            let d = (rep.trace(&w).unwrap() - f.rt.trace(&w).unwrap()).norm();
            prop_assert!(d < 1e-9, "word {:?}: {}", w, d);
        }
    }

    /// `(ρ_t ρ̃⁻¹ − I)/t → u₁` at rate `O(t)` for random cocycle directions.
    #[test]
    fn leading_term_converges_linearly(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 10), t in 2e-3f64..1e-2) {
        let f = fixture();
        let mut v = f.basis[0].stacked() * cr(0.0);
        for (u, (a, b)) in f.basis.iter().zip(&coeffs) {
            v += u.stacked() * c(*a, *b);
        }
        let u1 = AdjointCocycle::from_stacked(&v);
        let curve = formal_deformation(&f.p, &f.rt, &u1, 2).unwrap();
        let err = |s: f64| {
            let rep = newton_refine(&f.p, &curve.eval(&f.rt, s), s).unwrap().rep;
            leading_term_error(&f.rt, &rep, &u1, s)
        };
        let (e1, e2) = (err(t), err(t / 2.0));
        let ratio = e1 / e2;
        prop_assert!((ratio - 2.0).abs() < 0.25, "ratio {ratio} ({e1}, {e2})");
    }
}

#[test]
fn trace_obstruction_on_catalog() {
    for name in repvar::knotio::catalog_names() {
        let d = repvar::alexander::alexander_polynomial(&pres(&name)).unwrap();
        assert!(trace_obstruction_holds(&d), "{name}");
    }
    let bad = repvar::alexander::LaurentPoly::from_coeffs(&[2, 1]);
    assert!(!trace_obstruction_holds(&bad));
}
