//! Double-double arithmetic and a brute-force R^6 series for the acceptance oracle.

use std::ops::{Add, Div, Mul, Sub};

#[derive(Clone, Copy, Debug)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = {
            let v = Dd::norm(s, e + t);
            (v.hi, v.lo)
        };
        Dd::norm(s, e + f)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + Dd { hi: -o.hi, lo: -o.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::norm(p, e + self.hi * o.lo + self.lo * o.hi)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        Dd::norm(q1, q2) + Dd::new(q3)
    }
}

/// B(a, u) summed literally over n ≤ n_max; factorials are rebuilt from scratch
/// and each hypergeometric polynomial is summed in its original, untransformed form.
pub fn six_dim_bracket(a: f64, u: f64, n_max: usize) -> f64 {
    let one = Dd::new(1.0);
    let fact = |n: usize| (1..=n).fold(one, |acc, i| acc * Dd::new(i as f64));
    let (ad, ud) = (Dd::new(a), Dd::new(u));
    let mut total = Dd::new(16.0) * ad * (one - Dd::new(5.0) * ud / Dd::new(6.0));
    for n in 2..=n_max {
        let a_pow = (0..n).fold(one, |acc, _| acc * ad);
        let mut inner = Dd::new(0.0);
        for k in 0..=n + 1 {
            let big_m = n + k - 2;
            // F(-M, k+3; 3; u) = Σ_j (-M)_j (k+3)_j / ((3)_j j!) u^j, untransformed
            let mut f = one;
            let mut term = one;
            for i in 0..big_m {
                term = term * Dd::new(i as f64 - big_m as f64) * Dd::new((k + 3 + i) as f64)
                    / Dd::new((3 + i) as f64)
                    / Dd::new((i + 1) as f64)
                    * ud;
                f = f + term;
            }
            let coef = Dd::new(((k + 1) * (k + 2) * (n + 2 * k + 1)) as f64)
                / (Dd::new(3f64.powi(k as i32)) * fact(n + 1 - k) * fact(n + k - 2));
            inner = inner + coef * f;
        }
        total = total + Dd::new(0.5) * a_pow * fact(n + 1) * inner;
    }
    total.to_f64()
}
