//! Prints the empirical Hölder constant of y ↦ Φ^y for the perturbed family.

use cantor_scenery::scenery::{dyadic_grid, estimate_k2};
use cantor_scenery::SystemConfig;

fn main() {
    let sys = SystemConfig::perturbed(0.1, 0.1).build().unwrap();
    let grid = dyadic_grid(257).unwrap();
    let est = estimate_k2(&sys, 200, 12, 1e-7, &grid, 2024).unwrap();
    println!("k2 = {:.6} over {} pairs (seed {}), k1 = {:.6}", est.k2, est.pairs, est.seed, sys.k1());
}
