mod common;

use markov_copula::algebra::{
    extract_pi_ordinal_structure, is_idempotent, iterate_to_limit, markov_product, power,
    quadrature_markov_product, si_sd_involution, to_grid,
};
use markov_copula::families::{archimedean_copula, ArchimedeanGenerator};
use markov_copula::grid::random_grid;
use markov_copula::operators::DiscreteMarkovOperator;
use markov_copula::{AlgebraConfig, CellSide, Copula, CopulaError, GridCopula, StepFunction};
use proptest::prelude::*;

use common::*;

fn cfg() -> AlgebraConfig {
    AlgebraConfig::default()
}

fn grid(c: &Copula) -> &GridCopula {
    c.as_grid().expect("checkerboard result")
}

#[test]
fn analytic_special_elements_act_symbolically() {
    let clayton = archimedean_copula(ArchimedeanGenerator::clayton(2.0).unwrap());
    assert_eq!(
        markov_product(&Copula::Upper, &clayton, &cfg()).unwrap(),
        clayton
    );
    assert_eq!(
        markov_product(&clayton, &Copula::Upper, &cfg()).unwrap(),
        clayton
    );
    assert_eq!(
        markov_product(&Copula::Product, &clayton, &cfg()).unwrap(),
        Copula::Product
    );
    assert_eq!(
        markov_product(&Copula::Lower, &Copula::Lower, &cfg()).unwrap(),
        Copula::Upper
    );
}

#[test]
fn reflection_of_an_analytic_copula_matches_its_formula() {
    // (C⁻ * C)(u, v) = v − C(1 − u, v)
    let c = archimedean_copula(ArchimedeanGenerator::gumbel(2.0).unwrap());
    let r = si_sd_involution(&c, &cfg()).unwrap();
    let n = grid(&r).resolution();
    for i in 0..=n {
        for j in 0..=n {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            assert!((r.value(u, v) - (v - c.value(1.0 - u, v))).abs() <= 1e-12);
        }
    }
}

#[test]
fn quadrature_agrees_with_analytic_products_approximately() {
    let a = archimedean_copula(ArchimedeanGenerator::clayton(1.0).unwrap());
    let b = archimedean_copula(ArchimedeanGenerator::frank(4.0).unwrap());
    let exact = markov_product(
        &a,
        &b,
        &AlgebraConfig {
            resolution: 256,
            ..cfg()
        },
    )
    .unwrap();
    let quad = quadrature_markov_product(&a, &b, 1024).unwrap();
    for (u, v) in [(0.2, 0.3), (0.5, 0.5), (0.9, 0.1), (0.7, 0.8)] {
        assert!(
            (exact.value(u, v) - quad.value(u, v)).abs() <= 1e-3,
            "({u},{v})"
        );
    }
}

#[test]
fn mixed_resolutions_multiply_on_the_common_refinement() {
    let mut r = rng(3);
    let a = Copula::Grid(random_grid(4, &mut r));
    let b = Copula::Grid(random_grid(6, &mut r));
    let p = markov_product(&a, &b, &cfg()).unwrap();
    assert_eq!(grid(&p).resolution(), 12);
    let q = quadrature_markov_product(&a, &b, 48).unwrap();
    for i in 0..=12 {
        for j in 0..=12 {
            let (u, v) = (i as f64 / 12.0, j as f64 / 12.0);
            assert!((p.value(u, v) - q.value(u, v)).abs() <= 1e-12);
        }
    }
}

#[test]
fn overflowing_products_are_refused() {
    let small = AlgebraConfig {
        grid_cap: 30,
        ..cfg()
    };
    let mut r = rng(4);
    let (a, b) = (
        Copula::Grid(random_grid(7, &mut r)),
        Copula::Grid(random_grid(5, &mut r)),
    );
    assert!(matches!(
        markov_product(&a, &b, &small),
        Err(CopulaError::ResolutionOverflow {
            resolution: 35,
            cap: 30
        })
    ));
}

#[test]
fn transition_kernel_matches_the_first_derivative() {
    // T_C applied to the indicator of [0, l/n] is ∂₁C(·, l/n)
    let mut r = rng(5);
    for n in [3, 5, 8] {
        let c = Copula::Grid(random_grid(n, &mut r));
        let op = DiscreteMarkovOperator::operator_of(&c, n).unwrap();
        for l in 0..=n {
            let image = op.apply(&StepFunction::lower_indicator(n, l)).unwrap();
            for i in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                let expected = c.partial_side(1, x, l as f64 / n as f64, CellSide::Right);
                assert!((image.values()[i] - expected).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn iterates_of_a_block_diagonal_matrix_keep_their_blocks() {
    let g = GridCopula::from_rows(&[
        vec![0.5, 0.5, 0.0, 0.0],
        vec![0.5, 0.5, 0.0, 0.0],
        vec![0.0, 0.0, 0.75, 0.25],
        vec![0.0, 0.0, 0.25, 0.75],
    ])
    .unwrap();
    let report = iterate_to_limit(&Copula::Grid(g), 1e-10, 500, &cfg()).unwrap();
    assert_eq!(report.intervals.intervals(), [(0.0, 0.5), (0.5, 1.0)]);
    assert!(report.monotone_decrease_violation <= 1e-12);
    assert!(report
        .history
        .windows(2)
        .all(|w| w[1].d_inf_gap <= w[0].d_inf_gap + 1e-15));
}

#[test]
fn non_si_input_is_rejected_before_iterating() {
    let c = Copula::Grid(asymmetric_checkerboard().transpose());
    assert!(matches!(
        iterate_to_limit(&c, 1e-8, 100, &cfg()),
        Err(CopulaError::NotStochasticallyIncreasing { .. })
    ));
}

#[test]
fn decomposition_of_special_copulas() {
    assert!(extract_pi_ordinal_structure(&Copula::Upper, 1e-6)
        .unwrap()
        .intervals
        .is_empty());
    assert_eq!(
        extract_pi_ordinal_structure(&Copula::Product, 1e-6)
            .unwrap()
            .intervals
            .intervals(),
        [(0.0, 1.0)]
    );
    let clayton = archimedean_copula(ArchimedeanGenerator::clayton(2.0).unwrap());
    assert!(matches!(
        extract_pi_ordinal_structure(&clayton, 1e-6),
        Err(CopulaError::VerificationFailed { .. })
    ));
}

#[test]
fn only_idempotents_pass_the_idempotency_check() {
    assert!(
        is_idempotent(&Copula::Upper, 1e-12, &cfg())
            .unwrap()
            .idempotent
    );
    assert!(
        !is_idempotent(&Copula::Lower, 1e-12, &cfg())
            .unwrap()
            .idempotent
    );
    assert!(
        !is_idempotent(&Copula::Grid(asymmetric_checkerboard()), 1e-9, &cfg())
            .unwrap()
            .idempotent
    );
    let limit = power(&Copula::Grid(asymmetric_checkerboard()), 64, &cfg()).unwrap();
    assert!(is_idempotent(&limit, 1e-12, &cfg()).unwrap().idempotent);
    let c = to_grid(&pi_ordinal_sum(&example_families()[0]), &cfg()).unwrap();
    assert!(
        is_idempotent(&Copula::Grid(c), 1e-12, &cfg())
            .unwrap()
            .idempotent
    );
}

fn grid_strategy(max_n: usize) -> impl Strategy<Value = GridCopula> {
    (1usize..=max_n, any::<u64>()).prop_map(|(n, seed)| random_grid(n, &mut rng(seed)))
}

fn triple(max_n: usize) -> impl Strategy<Value = (GridCopula, GridCopula, GridCopula)> {
    (1usize..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        let mut r = rng(seed);
        (
            random_grid(n, &mut r),
            random_grid(n, &mut r),
            random_grid(n, &mut r),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn products_are_associative((a, b, c) in triple(32)) {
        let left = a.product(&b).product(&c);
        let right = a.product(&b.product(&c));
        prop_assert!((left.matrix() - right.matrix()).amax() <= 1e-12);
    }

    #[test]
    fn products_of_grids_are_doubly_stochastic((a, b, _) in triple(16)) {
        prop_assert!(a.product(&b).margin_error() <= 1e-12);
    }

    #[test]
    fn upper_is_identity_and_product_annihilates(g in grid_strategy(16)) {
        let n = g.resolution();
        let c = Copula::Grid(g.clone());
        for other in [Copula::Upper, Copula::Grid(GridCopula::identity(n))] {
            prop_assert!(max_abs_diff(grid(&markov_product(&other, &c, &cfg()).unwrap()), &g) <= 1e-12);
            prop_assert!(max_abs_diff(grid(&markov_product(&c, &other, &cfg()).unwrap()), &g) <= 1e-12);
        }
        let pi = markov_product(&Copula::Grid(GridCopula::independence(n)), &c, &cfg()).unwrap();
        prop_assert!(max_abs_diff(grid(&pi), &GridCopula::independence(n)) <= 1e-12);
    }

    #[test]
    fn reflection_is_an_involution(g in grid_strategy(16)) {
        let c = Copula::Grid(g.clone());
        let twice = si_sd_involution(&si_sd_involution(&c, &cfg()).unwrap(), &cfg()).unwrap();
        prop_assert_eq!(grid(&twice).matrix(), g.matrix());
    }

    #[test]
    fn transpose_reverses_products((a, b, _) in triple(12)) {
        let (ca, cb) = (Copula::Grid(a), Copula::Grid(b));
        let lhs = markov_product(&ca, &cb, &cfg()).unwrap().transposed();
        let rhs = markov_product(&cb.transposed(), &ca.transposed(), &cfg()).unwrap();
        prop_assert!(max_abs_diff(grid(&lhs), grid(&rhs)) <= 1e-12);
    }

    #[test]
    fn power_agrees_with_repeated_multiplication(g in grid_strategy(8), k in 1usize..9) {
        let c = Copula::Grid(g);
        let mut acc = c.clone();
        for _ in 1..k {
            acc = markov_product(&acc, &c, &cfg()).unwrap();
        }
        prop_assert!(max_abs_diff(grid(&power(&c, k, &cfg()).unwrap()), grid(&acc)) <= 1e-12);
    }
}
