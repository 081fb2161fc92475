//! Deterministic formatting helpers shared by the CSV and JSON writers.

/// Fixed six-decimal rendering with normalized negative zero, so identical
/// runs produce identical bytes.
pub fn fmt_money(v: f64) -> String {
    format!("{:.6}", round6(v))
}

/// Rounds to the same precision the writers print, mapping -0.0 to 0.0.
pub fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_negatives_print_as_zero() {
        assert_eq!(fmt_money(-0.0), "0.000000");
        assert_eq!(fmt_money(-0.0000001), "0.000000");
        assert_eq!(round6(-0.0), 0.0);
    }

    #[test]
    fn fixed_width() {
        assert_eq!(fmt_money(1.732), "1.732000");
        assert_eq!(fmt_money(-2.5), "-2.500000");
    }
}
