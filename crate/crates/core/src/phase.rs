//! Propagation phases `exp(i sqrt(lambda - threshold) * length / eps)`.
//!
//! For thin channels the argument reaches 1e6 and beyond, where a plain `f64`
//! product loses about ten digits before the trigonometric reduction. The
//! argument is carried in double-double arithmetic and reduced modulo `2 pi`
//! before exponentiation.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: e }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd {
        hi: p,
        lo: a.mul_add(b, -p),
    }
}

impl Dd {
    fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let s = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(s.hi, s.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        let lo = p.lo + (self.hi * o.lo + self.lo * o.hi);
        quick_two_sum(p.hi, lo)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::from_f64(q1)).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::from_f64(q2)).neg());
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2).add(Dd::from_f64(q3))
    }

    fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::from_f64(0.0);
        }
        let s = self.hi.sqrt();
        let r = self.add(two_prod(s, s).neg());
        quick_two_sum(s, r.hi / (2.0 * s))
    }
}

// 2 pi split into two doubles.
const TWO_PI: Dd = Dd {
    hi: std::f64::consts::TAU,
    lo: 2.449_293_598_294_706_4e-16,
};

/// Phase angle `sqrt(lambda - threshold) * length / eps`, reduced into `[-pi, pi]`.
pub fn reduced_phase(lambda: f64, threshold: f64, length: f64, eps: f64) -> f64 {
    let kappa = two_sum(lambda, -threshold).sqrt();
    let theta = kappa.mul(Dd::from_f64(length)).div(Dd::from_f64(eps));
    let k = (theta.hi / TWO_PI.hi).round();
    let r = theta.add(TWO_PI.mul(Dd::from_f64(k)).neg());
    r.hi + r.lo
}

/// `exp(i * sqrt(lambda - threshold) * length / eps)` for a propagating mode.
pub fn propagation_factor(lambda: f64, threshold: f64, length: f64, eps: f64) -> Complex64 {
    Complex64::from_polar(1.0, reduced_phase(lambda, threshold, length, eps))
}
