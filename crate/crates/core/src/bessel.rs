//! Integer-order Bessel functions of the first kind and their positive zeros.

use std::f64::consts::PI;

/// `J_m(x)` from the integral `(1/2pi) * int_0^{2pi} cos(m tau - x sin tau) dtau`.
///
/// The integrand is periodic and entire, so the trapezoidal rule converges
/// geometrically once the node count exceeds `|x| + m` by a margin.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    let n = 64 + 2 * (x.abs().ceil() as usize + m as usize);
    let h = 2.0 * PI / n as f64;
    let mf = m as f64;
    let s: f64 = (0..n)
        .map(|k| {
            let tau = k as f64 * h;
            (mf * tau - x * tau.sin()).cos()
        })
        .sum();
    s / n as f64
}

/// The first `count` positive zeros of `J_m`, ascending.
pub fn bessel_zeros(m: u32, count: usize) -> Vec<f64> {
    let mut zeros = Vec::with_capacity(count);
    // j_{m,1} > m, and consecutive zeros are more than pi apart for m >= 1
    // (close to pi for m = 0), so a 0.05 scan cannot skip a sign change.
    let step = 0.05;
    let mut a = (m as f64).max(0.5);
    let mut fa = bessel_j(m, a);
    while zeros.len() < count {
        let b = a + step;
        let fb = bessel_j(m, b);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            zeros.push(bisect(|x| bessel_j(m, x), a, b, fa));
        }
        a = b;
        fa = fb;
    }
    zeros
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // Reference values from SciPy.
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 2.5) - 0.497_094_102_464_274_1).abs() < 1e-15);
        assert!((bessel_j(3, 10.0) - 0.058_379_379_305_186_67).abs() < 1e-14);
    }

    #[test]
    fn zeros_of_j0_and_j1() {
        let z0 = bessel_zeros(0, 3);
        assert!((z0[0] - 2.404_825_557_695_773).abs() < 1e-13);
        assert!((z0[1] - 5.520_078_110_286_311).abs() < 1e-13);
        assert!((z0[2] - 8.653_727_912_911_013).abs() < 1e-13);
        let z1 = bessel_zeros(1, 1);
        assert!((z1[0] - 3.831_705_970_207_512).abs() < 1e-13);
    }
}
