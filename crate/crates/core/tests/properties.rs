use magweyl::fields::{
    circulation, flux_triangle, gauge_transform, polynomial_potential, stokes_residual, MagneticField, Polynomial,
    ScalarPotential, Triangle, VectorPotential,
};
use magweyl::grid::{GridFunction, PhaseGrid};
use magweyl::moyal::{expansion, moyal_product};
use magweyl::quantize::{op_magnetic, op_minimal, op_weyl, Quantizer};
use magweyl::spectral::{fractional_power, sobolev_norm};
use magweyl::symbols::{gaussian, poisson, poisson_b, sample, Symbol, SymbolField};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 2)
}

fn coefficients(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, len)
}

/// Dense polynomial in two variables from a coefficient list.
fn poly(degree: u32, coef: &[f64]) -> Polynomial {
    let mut it = coef.iter().copied().cycle();
    Polynomial::dense(2, degree, || it.next().unwrap())
}

fn poly_potential(coef: &[f64]) -> VectorPotential {
    let half = coef.len() / 2;
    polynomial_potential(vec![poly(3, &coef[..half]), poly(3, &coef[half..])])
}

fn small_grid() -> PhaseGrid {
    PhaseGrid::new(2, 8, 4.0).unwrap()
}

/// Real, x- and ξ-dependent, bounded.
fn real_symbol(c: &[f64]) -> Symbol {
    let c = c.to_vec();
    Symbol::real(2, "r", move |x, k| {
        c[0] * (0.3 * x[0]).cos() + c[1] * (0.2 * x[1] + 0.4 * k[0]).sin() + c[2] * (-(k[1] * k[1]) * 0.3).exp()
    })
}

fn complex_gaussian(g: &PhaseGrid, c: &[f64]) -> SymbolField {
    let s = gaussian(&[c[0], c[1]], 1.2, &[c[2], c[3]], 0.9).scale(Complex64::new(1.0, c[4]));
    sample(&s, g).unwrap()
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn flux_flips_sign_under_transposition(a in point(), b in point(), c in point(), coef in coefficients(20)) {
        let p = poly(3, &coef);
        let field = MagneticField::planar(2, "poly", move |x| p.eval(x));
        let t = Triangle::new(&a, &b, &c);
        let f = flux_triangle(&field, &t);
        for swapped in [Triangle::new(&b, &a, &c), Triangle::new(&a, &c, &b), Triangle::new(&c, &b, &a)] {
            let g = flux_triangle(&field, &swapped);
            prop_assert!((f + g).abs() <= 1e-12 * (1.0 + f.abs()), "{f} vs {g}");
        }
    }
}

proptest! {
    #![proptest_config(config(40))]

    #[test]
    fn stokes_for_polynomial_potentials(a in point(), b in point(), c in point(), coef in coefficients(20)) {
        let pot = poly_potential(&coef);
        let field = MagneticField::from_potential(&pot).unwrap();
        let r = stokes_residual(&pot, &field, &Triangle::new(&a, &b, &c));
        prop_assert!(r <= 1e-10, "{r:e}");
    }

    #[test]
    fn circulation_is_antisymmetric(x in point(), y in point(), coef in coefficients(20)) {
        let pot = poly_potential(&coef);
        prop_assert_eq!(circulation(&pot, &x, &y), -circulation(&pot, &y, &x));
    }

    #[test]
    fn circulation_of_gradient(x in point(), y in point(), coef in coefficients(21)) {
        let phi = ScalarPotential::from_polynomial(poly(5, &coef));
        let pot = gauge_transform(&VectorPotential::zero(2), &phi);
        let got = circulation(&pot, &x, &y);
        let want = phi.value(&y) - phi.value(&x);
        prop_assert!((got - want).abs() <= 1e-10, "{got} vs {want}");
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn real_symbols_give_hermitian_matrices(c in coefficients(3), b in -1.0..1.0f64) {
        let g = small_grid();
        let f = sample(&real_symbol(&c), &g).unwrap();
        let a = Quantizer::new(&g, &magweyl::fields::transversal_gauge(&MagneticField::constant(2, b))).unwrap();
        prop_assert!(a.magnetic(&f).unwrap().hermiticity_defect() <= 1e-8);
    }

    #[test]
    fn quantizers_are_linear(c1 in coefficients(3), c2 in coefficients(3), al in -2.0..2.0f64, be in -2.0..2.0f64) {
        let g = small_grid();
        let pot = VectorPotential::new(2, "wavy", |x, out| {
            out[0] = 0.3 * x[1].sin();
            out[1] = -0.2 * x[0];
        });
        let (al, be) = (Complex64::new(al, 0.0), Complex64::new(0.0, be));
        let (s1, s2) = (real_symbol(&c1), real_symbol(&c2));
        let (f1, f2) = (sample(&s1, &g).unwrap(), sample(&s2, &g).unwrap());
        let combo = f1.scale(al).add(&f2.scale(be)).unwrap();
        let lhs = op_magnetic(&combo, &pot).unwrap();
        let rhs = op_magnetic(&f1, &pot).unwrap().scale(al).add(&op_magnetic(&f2, &pot).unwrap().scale(be)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().frobenius() <= 1e-12 * (1.0 + lhs.frobenius()));

        let combo_s = s1.scale(al).zip(&s2.scale(be), magweyl::symbols::BinOp::Add);
        let lhs = op_minimal(&combo_s, &g, &pot).unwrap();
        let rhs = op_minimal(&s1, &g, &pot).unwrap().scale(al).add(&op_minimal(&s2, &g, &pot).unwrap().scale(be)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().frobenius() <= 1e-12 * (1.0 + lhs.frobenius()));
    }

    #[test]
    fn brackets_are_antisymmetric_and_bilinear(c1 in coefficients(5), c2 in coefficients(5), c3 in coefficients(5), t in -2.0..2.0f64, b in -1.0..1.0f64) {
        let g = small_grid();
        let field = MagneticField::planar(2, "wave", move |x| b * (0.3 * x[0]).cos());
        let (f, h, k) = (complex_gaussian(&g, &c1), complex_gaussian(&g, &c2), complex_gaussian(&g, &c3));
        let t = Complex64::new(t, 0.0);
        let bracket_of = |u: &SymbolField, v: &SymbolField, magnetic: bool| {
            if magnetic { poisson_b(u, v, &field).unwrap() } else { poisson(u, v).unwrap() }
        };
        for magnetic in [false, true] {
            let fg = bracket_of(&f, &h, magnetic);
            let gf = bracket_of(&h, &f, magnetic);
            prop_assert!(fg.add(&gf).unwrap().max_abs() <= 1e-12 * (1.0 + fg.max_abs()));
            let lhs = bracket_of(&f.add(&k.scale(t)).unwrap(), &h, magnetic);
            let rhs = fg.add(&bracket_of(&k, &h, magnetic).scale(t)).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-10 * (1.0 + lhs.max_abs()));
        }
    }

    #[test]
    fn flat_magnetic_bracket_is_poisson(c1 in coefficients(5), c2 in coefficients(5)) {
        let g = small_grid();
        let (f, h) = (complex_gaussian(&g, &c1), complex_gaussian(&g, &c2));
        let a = poisson(&f, &h).unwrap();
        let b = poisson_b(&f, &h, &MagneticField::zero(2)).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn resampling_is_idempotent(c in coefficients(5)) {
        let g = small_grid();
        let f = complex_gaussian(&g, &c);
        let once = f.resample().unwrap();
        let twice = once.resample().unwrap();
        prop_assert_eq!(f.values(), once.values());
        prop_assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn first_order_term_is_antisymmetric(c1 in coefficients(5), c2 in coefficients(5), b in -1.0..1.0f64) {
        let g = small_grid();
        let field = MagneticField::constant(2, b);
        let (f, h) = (complex_gaussian(&g, &c1), complex_gaussian(&g, &c2));
        let fh = expansion(&f, &h, &field, 1).unwrap();
        let hf = expansion(&h, &f, &field, 1).unwrap();
        let s = fh.terms[1].add(&hf.terms[1]).unwrap();
        prop_assert!(s.max_abs() <= 1e-12 * (1.0 + fh.terms[1].max_abs()));
    }

    #[test]
    fn flat_quantizers_coincide(c in coefficients(3)) {
        let g = small_grid();
        let s = real_symbol(&c);
        let f = sample(&s, &g).unwrap();
        let zero = VectorPotential::zero(2);
        let w = op_weyl(&f).unwrap();
        let (m, p) = (op_magnetic(&f, &zero).unwrap(), op_minimal(&s, &g, &zero).unwrap());
        prop_assert_eq!(m.entries(), w.entries());
        prop_assert_eq!(p.entries(), w.entries());
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn powers_of_opposite_sign_are_inverse(c in coefficients(3), s in -1.0..1.0f64, b in -0.5..0.5f64) {
        let g = small_grid();
        let pot = magweyl::fields::transversal_gauge(&MagneticField::constant(2, b));
        let m = op_magnetic(&sample(&real_symbol(&c), &g).unwrap(), &pot).unwrap();
        let plus = fractional_power(&m, s).unwrap();
        let minus = fractional_power(&m, -s).unwrap();
        let prod = plus.matrix.entries() * minus.matrix.entries();
        let id = DMatrix::<Complex64>::identity(g.len(), g.len());
        let err = (prod - id).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8, "{err:e}");
    }

    #[test]
    fn unit_law(c in prop::collection::vec(-1.0..1.0f64, 3)) {
        let g = PhaseGrid::new(1, 64, 8.0).unwrap();
        let f = sample(&gaussian(&[c[0]], 1.0, &[c[1]], 1.0).scale(Complex64::new(1.0, c[2])), &g).unwrap();
        let one = sample(&Symbol::constant(1, Complex64::new(1.0, 0.0)), &g).unwrap();
        let pot = VectorPotential::zero(1);
        for p in [moyal_product(&f, &one, &pot).unwrap(), moyal_product(&one, &f, &pot).unwrap()] {
            let err = p.relative_l2_error(&f).unwrap();
            prop_assert!(err <= 1e-6, "{err:e}");
        }
    }

    #[test]
    fn magnetic_unit_law(c in prop::collection::vec(-0.5..0.5f64, 5), b in -0.5..0.5f64) {
        let g = PhaseGrid::new(2, 32, 8.0).unwrap();
        let f = complex_gaussian(&g, &c);
        let one = sample(&Symbol::constant(2, Complex64::new(1.0, 0.0)), &g).unwrap();
        let pot = magweyl::fields::transversal_gauge(&MagneticField::constant(2, b));
        let p = moyal_product(&f, &one, &pot).unwrap();
        let err = p.relative_l2_error(&f).unwrap();
        prop_assert!(err <= 1e-6, "{err:e}");
    }
}

/// One constant for the whole battery: ‖u‖_s ≤ C‖u‖_t for s ≤ t.
#[test]
fn sobolev_norms_are_monotone() {
    const C: f64 = 1.5;
    let g = PhaseGrid::new(2, 16, 8.0).unwrap();
    let pot = magweyl::fields::transversal_gauge(&MagneticField::constant(2, 0.5));
    let packets = [
        ([0.0, 0.0], 1.0, [0.0, 0.0]),
        ([1.0, -0.5], 0.8, [1.0, 0.5]),
        ([-1.5, 1.0], 1.2, [-0.7, 1.2]),
        ([0.5, 0.5], 0.9, [2.0, -1.0]),
    ];
    let orders = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0];
    let mut worst: f64 = 0.0;
    for (c, w, k) in packets {
        let u = GridFunction::wave_packet(&g, &c, w, &k).unwrap();
        let norms: Vec<f64> = orders.iter().map(|&s| sobolev_norm(&u, s, &pot).unwrap()).collect();
        for i in 0..orders.len() {
            for j in i..orders.len() {
                worst = worst.max(norms[i] / norms[j]);
            }
        }
    }
    assert!(worst <= C, "{worst}");
}
