//! Worked examples with independently known answers.

use qh_core::closed_form::i_function_coeff;
use qh_core::combinatorics::{compositions, generate_weights, validate_weights, WeightSpec, DEFAULT_MAX_ATTEMPTS};
use qh_core::localization::{w_marked, w_two_point, IntersectionQuery};
use qh_core::rational::{int, ratio, Rational};
use qh_core::residue::{w_two_point_residue, ResidueConfig};
use qh_core::verification::{check_corollary, check_hori, check_lambda_independence, check_pmain, Localization};
use qh_core::{Affine, EpsilonSeries, Error, TruncatedPoly};

fn weights(seed: u64, d: u32) -> WeightSpec {
    generate_weights(seed, d, DEFAULT_MAX_ATTEMPTS).unwrap()
}

fn h(nv: usize, cap: usize, i: usize) -> TruncatedPoly {
    TruncatedPoly::var(nv, cap, i)
}

fn binomial(n: u64, k: u64) -> Rational {
    (0..k).fold(int(1), |acc, i| acc * int((n - i) as i64) / int((i + 1) as i64))
}

#[test]
fn ring_examples() {
    let n = 5;
    let one = TruncatedPoly::one(2, n);
    let h0 = h(2, n, 0);
    let h1 = h(2, n, 1);
    assert!(h0.add(&h0.neg()).unwrap().is_zero());
    assert_eq!(h0.add(&TruncatedPoly::zero(2, n)).unwrap(), h0);
    let lhs = one.add(&h0).unwrap().add(&one.add(&h1).unwrap()).unwrap();
    assert_eq!(lhs.coeff(&[0, 0]), int(2));
    assert_eq!(lhs.coeff(&[1, 0]), int(1));
    assert_eq!(lhs.coeff(&[0, 1]), int(1));
    assert_eq!(h0.pow(n as i64 - 1).unwrap().mul(&h0).unwrap(), TruncatedPoly::zero(2, n));

    let n3 = TruncatedPoly::one(1, 3);
    let x = h(1, 3, 0);
    let prod = n3.add(&x).unwrap().mul(&n3.sub(&x).unwrap()).unwrap();
    assert_eq!(prod, n3.sub(&x.mul(&x).unwrap()).unwrap());
}

#[test]
fn inversion_examples() {
    let n = 6;
    let x = h(1, n, 0);
    let inv = TruncatedPoly::one(1, n).sub(&x).unwrap().invert_unit().unwrap();
    for m in 0..n {
        assert_eq!(inv.coeff(&[m]), int(1));
    }
    let c = TruncatedPoly::constant(3, n, ratio(-7, 3));
    assert_eq!(c.invert_unit().unwrap(), TruncatedPoly::constant(3, n, ratio(-3, 7)));
    let p = TruncatedPoly::from_affine(&Affine::new(int(2), vec![int(1), int(1)]), n);
    assert_eq!(p.mul(&p.invert_unit().unwrap()).unwrap(), TruncatedPoly::one(2, n));
    assert!(matches!(h(2, n, 0).invert_unit(), Err(Error::NonUnit(_))));
}

#[test]
fn power_and_integral_examples() {
    for n in 3..=6usize {
        let p = h(2, n, 0).add(&h(2, n, 1)).unwrap();
        assert_eq!(p.pow(0).unwrap(), TruncatedPoly::one(2, n));
        let q = p.pow(2 * n as i64 - 2).unwrap();
        let b = binomial(2 * n as u64 - 2, n as u64 - 1);
        assert_eq!(q.coeff(&[n - 1, n - 1]), b);
        assert_eq!(q.projective_integral(n, 2).unwrap(), b);
        let s = TruncatedPoly::one(1, n).add(&h(1, n, 0)).unwrap();
        assert_eq!(s.pow(-1).unwrap().mul(&s).unwrap(), TruncatedPoly::one(1, n));
        let top = TruncatedPoly::monomial(3, n, &[n - 1; 3], int(1)).unwrap();
        assert_eq!(top.projective_integral(n, 3).unwrap(), int(1));
        let low = TruncatedPoly::monomial(1, n, &[n - 2], int(1)).unwrap();
        assert_eq!(low.projective_integral(n, 1).unwrap(), int(0));
    }
}

#[test]
fn series_examples() {
    let s = EpsilonSeries::linear(5, int(1), int(1));
    assert_eq!(s.invert().unwrap().coeffs(), &[int(1), int(-1), int(1), int(-1), int(1)]);
    let num = EpsilonSeries::linear(2, int(1), int(2)).mul(&EpsilonSeries::linear(2, int(2), int(2))).unwrap();
    let den = EpsilonSeries::linear(2, int(1), int(1)).pow(2).unwrap();
    assert_eq!(*num.mul(&den.invert().unwrap()).unwrap().coeff(1).unwrap(), int(2));
}

#[test]
fn composition_and_weight_examples() {
    assert_eq!(compositions(1).unwrap().len(), 1);
    let three: Vec<Vec<u32>> = compositions(3).unwrap().iter().map(|c| c.parts().to_vec()).collect();
    assert_eq!(three, vec![vec![1, 1, 1], vec![1, 2], vec![2, 1], vec![3]]);
    assert_eq!(compositions(6).unwrap().len(), 32);

    for d in 2..=5 {
        let w = WeightSpec::new(0, (0..=d as i64).map(int).collect());
        assert!(!validate_weights(&w, d).unwrap().is_valid(), "d = {d}");
    }
    assert_eq!(weights(17, 4), weights(17, 4));
}

#[test]
fn degree_one_two_point_values() {
    // single locus, expanded by hand
    let q = IntersectionQuery::two_point(5, 1, 2, 0, 0);
    assert_eq!(w_two_point(&q, &weights(0, 1)).unwrap(), int(-5750));
    assert_eq!(w_two_point(&q, &weights(1, 1)).unwrap(), int(-5750));
}

#[test]
fn two_point_combination_at_degree_one() {
    let w = weights(0, 1);
    let v1 = w_two_point(&IntersectionQuery::two_point(5, 1, 1, 2, -1), &w).unwrap();
    let v2 = w_two_point(&IntersectionQuery::two_point(5, 1, 0, 3, -1), &w).unwrap();
    assert_eq!((v1 + v2) / int(5), int(770));
    assert_eq!(i_function_coeff(5, 1, 1).unwrap(), int(770));
}

#[test]
fn marked_spot_value_and_hori_triple() {
    let w = weights(2, 1);
    let q = IntersectionQuery::marked(5, 1, 1, 2, -1);
    let marked = w_marked(&q, &w).unwrap();
    assert_eq!(marked, int(3850));
    assert_eq!(marked / int(5), i_function_coeff(5, 1, 1).unwrap());
    for (n, d, j, a, b) in [(5, 2, 1, 1, 0), (5, 2, 2, 1, -1), (6, 2, 1, 2, 0), (4, 3, 1, 0, 0)] {
        let w = weights(9, d);
        let m = w_marked(&IntersectionQuery::marked(n, d, j, a, b), &w).unwrap();
        let t1 = w_two_point(&IntersectionQuery::two_point(n, d, j, a, b), &w).unwrap();
        let t2 = w_two_point(&IntersectionQuery::two_point(n, d, j - 1, a + 1, b), &w).unwrap();
        assert_eq!(m, int(d as i64) * t1 + t2, "({n},{d},{j},{a},{b})");
    }
}

#[test]
fn non_calabi_yau_hori() {
    // k = N - 1 moves the selection rule to j + a + b = N - 3 + d
    let (n, k, d) = (5, 4, 2);
    let w = weights(4, d);
    let m = IntersectionQuery::marked(n, d, 1, 2, 1).with_hypersurface_degree(k);
    assert!(m.satisfies_selection_rule());
    let t1 = IntersectionQuery::two_point(n, d, 1, 2, 1).with_hypersurface_degree(k);
    let t2 = IntersectionQuery::two_point(n, d, 0, 3, 1).with_hypersurface_degree(k);
    assert_eq!(
        w_marked(&m, &w).unwrap(),
        int(d as i64) * w_two_point(&t1, &w).unwrap() + w_two_point(&t2, &w).unwrap()
    );
}

#[test]
fn degree_three_reference_values() {
    // N = 4, d = 3 reference table
    let expected = [
        ((0, 0, 1), ratio(16567040, 3)),
        ((0, 1, 0), ratio(16567040, 3)),
        ((0, 2, -1), int(492800)),
        ((1, 0, 0), int(4068480)),
        ((1, 1, -1), ratio(21050240, 9)),
    ];
    let w = weights(21, 3);
    for ((j, a, b), v) in expected {
        let q = IntersectionQuery::two_point(4, 3, j, a, b);
        assert_eq!(w_two_point(&q, &w).unwrap(), v, "({j},{a},{b})");
        assert_eq!(w_two_point_residue(&q, &ResidueConfig::default()).unwrap(), v, "({j},{a},{b})");
    }
}

#[test]
fn degree_one_four_values() {
    let expected = [((0, 0, 1), 416), ((0, 1, 0), 416), ((0, 2, -1), 96), ((1, 0, 0), 0), ((1, 1, -1), 320)];
    let w = weights(3, 1);
    for ((j, a, b), v) in expected {
        let q = IntersectionQuery::two_point(4, 1, j, a, b);
        assert_eq!(w_two_point(&q, &w).unwrap(), int(v), "({j},{a},{b})");
    }
}

#[test]
fn precondition_errors() {
    let w = weights(0, 1);
    let q = IntersectionQuery::two_point(5, 1, 1, 0, 0);
    assert_eq!(w_two_point(&q, &w), Err(Error::SelectionRule { actual: 1, expected: 2 }));
    let q = IntersectionQuery::marked(5, 1, 0, 3, -1);
    assert!(matches!(w_marked(&q, &w), Err(Error::InvalidArgument(_))));
}

#[test]
fn j0_extension_is_the_divisor_equation() {
    for (n, d) in [(5, 1), (5, 2), (4, 3)] {
        let w = weights(6, d);
        let a = n - 2;
        let m = IntersectionQuery::marked(n, d, 0, a, -1).with_j0_extension();
        let t = IntersectionQuery::two_point(n, d, 0, a, -1);
        assert_eq!(
            w_marked(&m, &w).unwrap(),
            int(d as i64) * w_two_point(&t, &w).unwrap(),
            "N={n}, d={d}"
        );
    }
}

#[test]
fn residue_examples() {
    let cfg = ResidueConfig::default();
    let q = IntersectionQuery::two_point(5, 1, 2, 0, 0);
    assert_eq!(w_two_point_residue(&q, &cfg).unwrap(), int(-5750));
    for (j, a, b) in [(0, 0, 2), (0, 1, 1), (1, 1, 0), (2, 0, 0), (1, 2, -1), (0, 3, -1)] {
        let q = IntersectionQuery::two_point(5, 2, j, a, b);
        assert_eq!(
            w_two_point_residue(&q, &cfg).unwrap(),
            w_two_point(&q, &weights(8, 2)).unwrap(),
            "({j},{a},{b})"
        );
    }
    // z_0^N clears the only z_0 pole at d = 1
    let q = IntersectionQuery::two_point(5, 1, 0, 5, 0).forced();
    assert_eq!(w_two_point_residue(&q, &cfg).unwrap(), int(0));
}

#[test]
fn closed_form_examples() {
    assert_eq!(i_function_coeff(5, 1, 0).unwrap(), int(120));
    assert_eq!(i_function_coeff(5, 1, 1).unwrap(), int(770));
    assert_eq!(i_function_coeff(2, 1, 1).unwrap(), int(2));
}

#[test]
fn closed_form_matches_log_derivative_recurrence() {
    // f = f0 · exp(Σ_m c_m ε^m / m) with c_m the power sums of the log-derivative
    for (n, d) in [(3u32, 2u32), (5, 2), (4, 3)] {
        let order = 4;
        let mut c = vec![int(0); order + 1];
        for (m, cm) in c.iter_mut().enumerate().skip(1) {
            let sign = if m % 2 == 1 { int(1) } else { int(-1) };
            let mut acc = int(0);
            for r in 1..=(n * d) as i64 {
                acc += num_traits::pow(ratio(n as i64, r), m);
            }
            for r in 1..=d as i64 {
                acc -= int(n as i64) * num_traits::pow(ratio(1, r), m);
            }
            *cm = sign * acc;
        }
        let mut f = vec![i_function_coeff(n, d, 0).unwrap()];
        for k in 1..=order {
            let mut s = int(0);
            for m in 1..=k {
                s += &c[m] * &f[k - m];
            }
            f.push(s / int(k as i64));
        }
        for (j, fj) in f.iter().enumerate() {
            assert_eq!(i_function_coeff(n, d, j as u32).unwrap(), *fj, "N={n}, d={d}, j={j}");
        }
    }
}

#[test]
fn verification_examples() {
    let e = Localization::default();
    let seeds = [0, 1];
    assert!(check_hori(&e, &IntersectionQuery::marked(5, 2, 1, 1, 0), &seeds, false)
        .unwrap()
        .iter()
        .all(|r| r.pass));
    for (n, d, j) in [(5, 1, 1), (5, 2, 1), (6, 1, 2)] {
        assert!(check_pmain(&e, n, d, j, &seeds, false).unwrap().iter().all(|r| r.pass));
    }
    for (n, d, j) in [(5, 1, 1), (5, 2, 1), (4, 1, 1)] {
        assert!(check_corollary(&e, n, d, j, &seeds, false).unwrap().iter().all(|r| r.pass));
    }
    let q = IntersectionQuery::two_point(5, 1, 2, 0, 0);
    assert!(check_lambda_independence(&e, &q, &[0, 1, 2], false).unwrap().pass);
}
