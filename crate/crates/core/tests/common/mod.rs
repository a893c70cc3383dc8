#![allow(dead_code)]

pub mod oracle;

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}
