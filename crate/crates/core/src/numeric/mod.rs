pub mod quad;
pub mod roots;

pub use quad::{pieces, Quadrature};
pub use roots::{bisect, grow_bracket, smallest_integer, Root};

/// `e^z - 1 - z`, accurate for small `|z|`.
pub fn expm1_minus_z(z: f64) -> f64 {
    if z.abs() < 0.1 {
        // Taylor series through z^17.
        let mut term = z * z / 2.0;
        let mut sum = term;
        for k in 3..18 {
            term *= z / k as f64;
            sum += term;
        }
        sum
    } else {
        z.exp_m1() - z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_matches_series_and_direct() {
        for z in [-0.09f64, -1e-5, 0.0, 1e-8, 0.05, 0.0999] {
            let direct = z.exp_m1() - z;
            assert!((expm1_minus_z(z) - direct).abs() <= 1e-16 + 1e-12 * direct.abs());
        }
        let z: f64 = 1e-6;
        assert!((expm1_minus_z(z) / (z * z / 2.0) - 1.0 - z / 3.0).abs() < 1e-12);
        assert!((expm1_minus_z(2.0) - (2f64.exp() - 3.0)).abs() < 1e-14);
    }
}
