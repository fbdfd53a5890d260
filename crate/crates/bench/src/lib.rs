//! Shared fixtures for the criterion benches.

use cgl_core::{random_field, ComplexField, Domain, Space};

pub fn interval_space(n: usize) -> Space {
    Space::new(Domain::interval(std::f64::consts::PI, n).expect("valid interval"))
}

pub fn square_space(n: usize) -> Space {
    let l = std::f64::consts::PI;
    Space::new(Domain::rectangle(l, l, n, n).expect("valid rectangle"))
}

pub fn smooth_field(space: &Space, seed: u64) -> ComplexField {
    random_field(space, seed, 1.0).expect("nonnegative decay")
}
