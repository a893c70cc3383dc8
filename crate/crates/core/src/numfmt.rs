//! Number formatting for text outputs.

/// Shortest round-trip representation; plain decimal for magnitudes in
/// [1e-4, 1e15), exponent form otherwise.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_and_exact() {
        assert_eq!(num(0.077), "0.077");
        assert_eq!(num(3.654e9), "3654000000");
        assert_eq!(num(3.9e-39), "3.9e-39");
        assert_eq!(num(-2.5e20), "-2.5e20");
        assert_eq!(num(0.0), "0");
        for x in [1.234_567_890_123_456_7e-300, 0.1 + 0.2, -7.5e-5, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
