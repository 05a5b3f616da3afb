#![allow(dead_code)]

use markov_copula::families::{ordinal_sum, ArchimedeanGenerator};
use markov_copula::grid::random_grid;
use markov_copula::{Copula, GridCopula, IntervalFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The 3 × 3 checkerboard that is SI in the first component only.
pub fn asymmetric_checkerboard() -> GridCopula {
    GridCopula::from_rows(&[
        vec![2.0 / 3.0, 0.0, 1.0 / 3.0],
        vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        vec![0.0, 2.0 / 3.0, 1.0 / 3.0],
    ])
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grids(n: usize, count: usize, seed: u64) -> Vec<GridCopula> {
    let mut r = rng(seed);
    (0..count).map(|_| random_grid(n, &mut r)).collect()
}

pub fn gumbel_grid(theta: f64, n: usize) -> GridCopula {
    Copula::Archimedean(ArchimedeanGenerator::gumbel(theta).unwrap())
        .discretize(n)
        .unwrap()
}

pub fn clayton_grid(theta: f64, n: usize) -> GridCopula {
    Copula::Archimedean(ArchimedeanGenerator::clayton(theta).unwrap())
        .discretize(n)
        .unwrap()
}

/// Three ordinal sums of `Π` used as idempotent examples.
pub fn example_families() -> Vec<IntervalFamily> {
    vec![
        IntervalFamily::new(vec![(0.0, 1.0 / 3.0), (5.0 / 6.0, 1.0)]).unwrap(),
        IntervalFamily::new(vec![(1.0 / 3.0, 1.0)]).unwrap(),
        IntervalFamily::new(
            (0..6)
                .map(|k| (k as f64 / 6.0, (k + 1) as f64 / 6.0))
                .collect(),
        )
        .unwrap(),
    ]
}

pub fn pi_ordinal_sum(family: &IntervalFamily) -> Copula {
    ordinal_sum(family.clone(), vec![Copula::Product; family.len()]).unwrap()
}

/// All set partitions of `0..n`, as lists of atoms.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, n: usize, current: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(current.clone());
            return;
        }
        for k in 0..current.len() {
            current[k].push(i);
            go(i + 1, n, current, out);
            current[k].pop();
        }
        current.push(vec![i]);
        go(i + 1, n, current, out);
        current.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

/// Largest entrywise difference.
pub fn max_abs_diff(a: &GridCopula, b: &GridCopula) -> f64 {
    (a.matrix() - b.matrix()).amax()
}
