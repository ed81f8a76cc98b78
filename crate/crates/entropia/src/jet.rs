//! Truncated univariate Taylor arithmetic.
//!
//! A `Jet` holds the coefficients of a truncated expansion `sum c_k t^k`.
//! Pushing the jet `x + t v` through a map `n` times yields the directional
//! derivatives of `f^n` at `x` along `v`: the k-th derivative equals
//! `k! * c_k` of the output.

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Jet { c }
    }

    /// Seed jet `value + slope * t`.
    pub fn variable(value: f64, slope: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        if order >= 1 {
            c[1] = slope;
        }
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let c = self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect();
        Jet { c }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let c = self.c.iter().zip(&other.c).map(|(a, b)| a - b).collect();
        Jet { c }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut c = self.c.clone();
        c[0] += s;
        Jet { c }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for (k, out) in c.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += self.c[j] * other.c[k - j];
            }
            *out = acc;
        }
        Jet { c }
    }

    /// sin and cos of the jet by the standard coupled recurrence.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let n = self.c.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..n {
            let mut sa = 0.0;
            let mut ca = 0.0;
            for j in 1..=k {
                let ju = j as f64 * self.c[j];
                sa += ju * c[k - j];
                ca += ju * s[k - j];
            }
            s[k] = sa / k as f64;
            c[k] = -ca / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
