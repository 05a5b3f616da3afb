mod common;

use markov_copula::families::{
    archimedean_copula, extreme_value_copula, ArchimedeanGenerator, PickandsFunction,
};
use markov_copula::grid::random_grid;
use markov_copula::sampling::sample;
use markov_copula::spec::{read_matrix_csv, write_matrix_csv};
use markov_copula::{CellSide, Copula, CopulaError, GridCopula, IntervalFamily};
use proptest::prelude::*;

use common::*;

fn representatives() -> Vec<(&'static str, Copula)> {
    let mixed = markov_copula::families::ordinal_sum(
        IntervalFamily::new(vec![(0.0, 0.4), (0.4, 0.7)]).unwrap(),
        vec![
            archimedean_copula(ArchimedeanGenerator::clayton(2.0).unwrap()),
            Copula::Lower,
        ],
    )
    .unwrap();
    vec![
        ("grid", Copula::Grid(random_grids(5, 1, 11).remove(0))),
        ("product", Copula::Product),
        ("upper", Copula::Upper),
        ("lower", Copula::Lower),
        (
            "clayton 2",
            archimedean_copula(ArchimedeanGenerator::clayton(2.0).unwrap()),
        ),
        (
            "clayton -0.5",
            archimedean_copula(ArchimedeanGenerator::clayton(-0.5).unwrap()),
        ),
        (
            "gumbel 3",
            archimedean_copula(ArchimedeanGenerator::gumbel(3.0).unwrap()),
        ),
        (
            "frank 5",
            archimedean_copula(ArchimedeanGenerator::frank(5.0).unwrap()),
        ),
        (
            "frank -5",
            archimedean_copula(ArchimedeanGenerator::frank(-5.0).unwrap()),
        ),
        (
            "ev gumbel 2",
            extreme_value_copula(PickandsFunction::gumbel(2.0).unwrap()),
        ),
        ("ordinal sum", mixed.clone()),
        ("transposed ordinal sum", mixed.transposed()),
    ]
}

#[test]
fn frechet_bounds_and_margins_hold_everywhere() {
    for (name, c) in representatives() {
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            assert!(
                (c.value(u, 1.0) - u).abs() <= 1e-12,
                "{name}: margin u at {u}"
            );
            assert!(
                (c.value(1.0, u) - u).abs() <= 1e-12,
                "{name}: margin v at {u}"
            );
            assert!(c.value(u, 0.0).abs() <= 1e-12 && c.value(0.0, u).abs() <= 1e-12);
            for j in 0..=100 {
                let v = j as f64 / 100.0;
                let x = c.value(u, v);
                assert!(
                    x >= (u + v - 1.0).max(0.0) - 1e-12,
                    "{name}: below W at ({u},{v})"
                );
                assert!(x <= u.min(v) + 1e-12, "{name}: above M at ({u},{v})");
            }
        }
    }
}

#[test]
fn rectangles_carry_nonnegative_additive_mass() {
    for (name, c) in representatives() {
        let cuts = [0.0, 0.13, 0.4, 0.55, 0.71, 1.0];
        let mut total = 0.0;
        for w in cuts.windows(2) {
            for z in cuts.windows(2) {
                let m = c.h_volume(w[0], w[1], z[0], z[1]).unwrap();
                assert!(m >= -1e-12, "{name}: negative volume {m}");
                total += m;
            }
        }
        assert!((total - 1.0).abs() <= 1e-12, "{name}: total mass {total}");
    }
}

#[test]
fn evaluation_rejects_points_outside_the_square() {
    for (u, v) in [(-0.1, 0.5), (0.5, 1.1), (f64::NAN, 0.2)] {
        assert!(matches!(
            Copula::Product.eval(u, v),
            Err(CopulaError::Domain(_))
        ));
    }
    assert!(Copula::Product.partial_derivative(3, 0.5, 0.5).is_err());
}

#[test]
fn grid_derivatives_match_central_differences_inside_cells() {
    let mut r = rng(21);
    for n in [2, 3, 7, 10] {
        let c = Copula::Grid(random_grid(n, &mut r));
        for i in 0..n {
            for j in 0..n {
                let u = (i as f64 + 0.3) / n as f64;
                let v = (j as f64 + 0.6) / n as f64;
                for component in [1, 2] {
                    let exact = c.partial_derivative(component, u, v).unwrap();
                    let fd = c.finite_difference(component, u, v);
                    assert!((exact - fd).abs() <= 1e-9, "n={n} ({u},{v}) d{component}");
                }
            }
        }
    }
}

#[test]
fn one_sided_derivatives_differ_only_at_cell_edges() {
    let g = Copula::Grid(asymmetric_checkerboard());
    let right = g.partial_side(1, 0.5, 1.0 / 3.0, CellSide::Right);
    let left = g.partial_side(1, 0.5, 1.0 / 3.0, CellSide::Left);
    assert_eq!(right, left, "∂₁ is continuous in v inside a row");
    let right = g.partial_side(1, 1.0 / 3.0, 0.5, CellSide::Right);
    let left = g.partial_side(1, 1.0 / 3.0, 0.5, CellSide::Left);
    assert_ne!(right, left, "∂₁ jumps across a row boundary");
}

#[test]
fn discretization_is_a_projection() {
    for (name, c) in representatives() {
        let g = c.discretize(12).unwrap();
        assert!(g.margin_error() <= 1e-12, "{name}");
        let again = Copula::Grid(g.clone()).discretize(12).unwrap();
        assert_eq!(again.matrix(), g.matrix(), "{name}");
        for i in 0..=12 {
            for j in 0..=12 {
                let (u, v) = (i as f64 / 12.0, j as f64 / 12.0);
                assert!(
                    (g.value(u, v) - c.value(u, v)).abs() <= 1e-12,
                    "{name} at corner"
                );
            }
        }
    }
}

#[test]
fn special_elements_discretize_to_their_matrices() {
    assert_eq!(
        Copula::Upper.discretize(4).unwrap(),
        GridCopula::identity(4)
    );
    assert_eq!(
        Copula::Product.discretize(4).unwrap(),
        GridCopula::independence(4)
    );
    assert_eq!(
        Copula::Lower.discretize(4).unwrap(),
        GridCopula::countermonotone(4)
    );
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let ru = ranks(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let rv = ranks(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let d2: f64 = ru.iter().zip(&rv).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn sampled_rank_correlation_matches_the_copula() {
    let pi = sample(&Copula::Product, 20_000, 5).unwrap();
    assert!(spearman(&pi).abs() <= 0.02);
    let upper = sample(&Copula::Upper, 2_000, 5).unwrap();
    assert!((spearman(&upper) - 1.0).abs() <= 0.02);
    let lower = sample(&Copula::Lower, 2_000, 5).unwrap();
    assert!((spearman(&lower) + 1.0).abs() <= 0.02);
}

#[test]
fn sampled_grid_cells_follow_cell_masses() {
    let g = asymmetric_checkerboard();
    let pairs = sample(&Copula::Grid(g.clone()), 30_000, 9).unwrap();
    let mut counts = [[0usize; 3]; 3];
    for (u, v) in &pairs {
        counts[((u * 3.0) as usize).min(2)][((v * 3.0) as usize).min(2)] += 1;
    }
    for (k, row) in counts.iter().enumerate() {
        for (l, &count) in row.iter().enumerate() {
            let expected = g.matrix()[(k, l)] / 3.0;
            let observed = count as f64 / pairs.len() as f64;
            assert!((observed - expected).abs() <= 0.01, "cell ({k},{l})");
        }
    }
}

fn grid_strategy() -> impl Strategy<Value = GridCopula> {
    (2usize..9, any::<u64>()).prop_map(|(n, seed)| random_grid(n, &mut rng(seed)))
}

proptest! {
    #[test]
    fn grids_stay_within_frechet_bounds(g in grid_strategy(), u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let x = g.value(u, v);
        prop_assert!(x >= (u + v - 1.0).max(0.0) - 1e-12);
        prop_assert!(x <= u.min(v) + 1e-12);
    }

    #[test]
    fn refinement_preserves_values(g in grid_strategy(), f in 1usize..5, u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let r = g.refine(f);
        prop_assert!((r.value(u, v) - g.value(u, v)).abs() <= 1e-12);
    }

    #[test]
    fn matrix_csv_round_trips_exactly(g in grid_strategy()) {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, g.matrix()).unwrap();
        let back = read_matrix_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.matrix(), g.matrix());
    }

    #[test]
    fn json_round_trips_exactly(g in grid_strategy()) {
        let c = Copula::Grid(g);
        let text = serde_json::to_string(&c).unwrap();
        let back: Copula = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn conditional_quantile_inverts_the_derivative(g in grid_strategy(), u in 0.01..0.99f64, w in 0.01..0.99f64) {
        let c = Copula::Grid(g);
        let v = c.conditional_quantile(u, w);
        // ∂₁C(u, ·) is continuous on checkerboards, so the quantile is a root
        prop_assert!((c.partial_side(1, u, v, CellSide::Right) - w).abs() <= 1e-9);
    }
}
