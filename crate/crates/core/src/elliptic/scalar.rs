//! Scalar abstraction so the discretization can be differentiated with respect
//! to the bottom profile.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + From<f64>
{
    fn value(self) -> f64;
}

impl Real for f64 {
    fn value(self) -> f64 {
        self
    }
}

/// Forward-mode dual number carrying one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Self { v, d: 0.0 }
    }
}

impl Real for Dual {
    fn value(self) -> f64 {
        self.v
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, o: Dual) {
        self.v += o.v;
        self.d += o.d;
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<T: Real>(x: T) -> T {
        let one = T::from(1.0);
        (x * x + one) / (x - T::from(3.0)) * -x
    }

    #[test]
    fn dual_matches_analytic_derivative() {
        let x = 1.7;
        let y = f(Dual::new(x, 1.0));
        // f = -(x^3 + x)/(x - 3)
        let df = -((3.0 * x * x + 1.0) * (x - 3.0) - (x * x * x + x)) / ((x - 3.0) * (x - 3.0));
        assert!((y.v - f(x)).abs() < 1e-14);
        assert!((y.d - df).abs() < 1e-12);
    }
}
