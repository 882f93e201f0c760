//! Small complex-arithmetic helpers shared by the analytic modules.

use num_complex::Complex64;

const SERIES_CUTOFF: f64 = 1e-2;

/// `(e^z - 1) / z`, accurate near `z = 0`.
pub fn expm1_over_z(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_CUTOFF {
        // 1 + z/2 + z^2/6 + ... + z^6/5040
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..=7 {
            term = term * z / n as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `e^z - 1` without cancellation for small `z`.
pub fn expm1(z: Complex64) -> Complex64 {
    z * expm1_over_z(z)
}

/// `tanh z` that stays finite for large `|Re z|`.
pub fn tanh(z: Complex64) -> Complex64 {
    if z.re > 0.0 {
        let e = (-2.0 * z).exp();
        (1.0 - e) / (1.0 + e)
    } else {
        let e = (2.0 * z).exp();
        (e - 1.0) / (e + 1.0)
    }
}

/// `tanh(z) / z` with the removable singularity at the origin filled in.
pub fn tanhc(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_CUTOFF {
        let z2 = z * z;
        // 1 - z^2/3 + 2z^4/15 - 17z^6/315
        1.0 - z2 / 3.0 + z2 * z2 * (2.0 / 15.0) - z2 * z2 * z2 * (17.0 / 315.0)
    } else {
        tanh(z) / z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_matches_direct_away_from_zero() {
        for &z in &[Complex64::new(0.3, -0.2), Complex64::new(-2.0, 1.0)] {
            let direct = z.exp() - 1.0;
            assert!((expm1(z) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn series_branches_are_continuous() {
        let a = Complex64::new(0.9999e-2, 0.0);
        let b = Complex64::new(1.0001e-2, 0.0);
        assert!((expm1_over_z(a) - expm1_over_z(b)).norm() < 1e-5);
        assert!((tanhc(a) - tanhc(b)).norm() < 1e-5);
        let z = Complex64::new(5e-3, 5e-3);
        assert!((tanhc(z) - tanh(z) / z).norm() < 1e-13);
    }

    #[test]
    fn tanh_survives_huge_arguments() {
        let z = Complex64::new(800.0, 3.0);
        assert!((tanh(z) - 1.0).norm() < 1e-15);
        assert!((tanh(-z) + 1.0).norm() < 1e-15);
    }
}
