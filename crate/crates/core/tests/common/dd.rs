//! Double-double arithmetic (about 32 significant digits) and a reference
//! chi-square upper tail built on it. Only used as a test oracle.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };

    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Dd {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let mut y = Dd::new(self.hi.sqrt());
        for _ in 0..2 {
            y = (y + self / y) * Dd::new(0.5);
        }
        y
    }

    pub fn powi(self, n: u32) -> Dd {
        (0..n).fold(Dd::ONE, |acc, _| acc * self)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::norm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::norm(p, e + (self.hi * o.lo + self.lo * o.hi))
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
        let (s, e) = quick_two_sum(q1, q2);
        Dd::norm(s, e) + Dd::new(q3)
    }
}

/// e^(-m/4) by a Taylor series for e^(-1/4) and repeated multiplication.
fn exp_neg_quarters(m: u32) -> Dd {
    let x = Dd::new(-0.25);
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    for n in 1..40 {
        term = term * x / Dd::new(f64::from(n));
        sum = sum + term;
    }
    sum.powi(m)
}

/// Q(df/2, x/2) from the lower series P(a, t) = t^a e^-t / Γ(a+1) Σ t^n / (a+1)_n,
/// summed in double-double. `x` must be a positive multiple of 0.5.
pub fn chi_square_survival_dd(x: f64, df: u32) -> f64 {
    let quarters = x * 2.0;
    assert!(
        quarters.fract() == 0.0 && quarters > 0.0,
        "x must be a multiple of 0.5"
    );
    let t = Dd::new(x / 2.0);
    let k = df / 2;

    // t^a and Γ(a + 1), a = df / 2
    let (t_pow, gamma) = if df.is_multiple_of(2) {
        let fact = (1..=k).fold(Dd::ONE, |acc, j| acc * Dd::new(f64::from(j)));
        (t.powi(k), fact)
    } else {
        let half = (0..=k).fold(Dd::ONE, |acc, j| acc * Dd::new(f64::from(j) + 0.5));
        (t.powi(k) * t.sqrt(), half * Dd::PI.sqrt())
    };
    let a = f64::from(df) / 2.0;

    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut n = 1.0;
    loop {
        term = term * t / Dd::new(a + n);
        sum = sum + term;
        if term.abs().hi < 1e-34 * sum.hi {
            break;
        }
        n += 1.0;
    }
    let p = t_pow * exp_neg_quarters(quarters as u32) / gamma * sum;
    (Dd::ONE - p).to_f64()
}
