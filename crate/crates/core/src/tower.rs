//! Nonnegative reals far beyond `f64` range, stored as iterated exponentials.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

/// Largest `y` with `exp(y)` finite.
const LN_MAX: f64 = 709.782712893384;

/// `exp^height(top)`. Canonical form: `height > 0` implies `top > LN_MAX`,
/// so values order by height first and top second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tower {
    height: u32,
    top: f64,
}

impl Tower {
    pub const ZERO: Tower = Tower { height: 0, top: 0.0 };
    pub const ONE: Tower = Tower { height: 0, top: 1.0 };

    /// Panics on negative or NaN input.
    pub fn new(x: f64) -> Self {
        assert!(x >= 0.0, "towers hold nonnegative values, got {x}");
        if x.is_infinite() {
            // only reachable from overflowing callers; keep it ordered above everything finite
            return Tower { height: u32::MAX, top: f64::INFINITY };
        }
        Tower { height: 0, top: x }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    fn canonical(mut height: u32, mut top: f64) -> Self {
        while height > 0 && top <= LN_MAX {
            top = top.exp();
            height -= 1;
        }
        Tower { height, top }
    }

    /// The value as `f64`, `+∞` when out of range.
    pub fn to_f64(&self) -> f64 {
        if self.height == 0 {
            self.top
        } else {
            f64::INFINITY
        }
    }

    pub fn exp(self) -> Self {
        if self.height == u32::MAX {
            return self;
        }
        if self.height == 0 && self.top <= LN_MAX {
            Tower { height: 0, top: self.top.exp() }
        } else {
            Tower { height: self.height + 1, top: self.top }
        }
    }

    /// Natural logarithm; `None` below one, where it would be negative.
    pub fn ln(self) -> Option<Self> {
        if self.height == 0 {
            if self.top < 1.0 {
                None
            } else {
                Some(Tower::new(self.top.ln()))
            }
        } else if self.height == u32::MAX {
            Some(self)
        } else {
            Some(Tower::canonical(self.height - 1, self.top))
        }
    }

    /// `ln` as a float, which may be negative or `-∞` for small values.
    pub fn ln_f64(self) -> f64 {
        match self.height {
            0 => self.top.ln(),
            1 => self.top,
            _ => f64::INFINITY,
        }
    }

    /// `x · c` for `c > 0`.
    pub fn mul_const(self, c: f64) -> Self {
        assert!(c > 0.0, "multiplier must be positive");
        match self.height {
            0 => {
                let v = self.top * c;
                if v.is_finite() {
                    Tower::new(v)
                } else {
                    Tower::canonical(1, self.top.ln() + c.ln())
                }
            }
            1 => Tower::canonical(1, self.top + c.ln()),
            // a finite factor is invisible two exponentials up
            _ => self,
        }
    }

    /// `x^r` for `r > 0`.
    pub fn pow(self, r: f64) -> Self {
        assert!(r > 0.0, "exponent must be positive");
        if self.height == 0 {
            let v = self.top.powf(r);
            if v.is_finite() {
                return Tower::new(v);
            }
            return Tower::canonical(1, r * self.top.ln());
        }
        let ln = Tower::canonical(self.height - 1, self.top);
        ln.mul_const(r).exp()
    }

    pub fn add(self, other: Tower) -> Self {
        let (hi, lo) = if self >= other { (self, other) } else { (other, self) };
        match (hi.height, lo.height) {
            (0, 0) => {
                let v = hi.top + lo.top;
                if v.is_finite() {
                    Tower::new(v)
                } else {
                    Tower::canonical(1, hi.top.ln() + (lo.top / hi.top).ln_1p())
                }
            }
            (1, 1) => Tower::canonical(1, hi.top + (lo.top - hi.top).exp().ln_1p()),
            _ => hi,
        }
    }

    pub fn mul(self, other: Tower) -> Self {
        if self.height == 0 && other.height == 0 {
            let v = self.top * other.top;
            if v.is_finite() {
                return Tower::new(v);
            }
        }
        if self == Tower::ZERO || other == Tower::ZERO {
            return Tower::ZERO;
        }
        // both at least one here or the product overflowed
        let la = self.ln_tower_any();
        let lb = other.ln_tower_any();
        la.add_signed(lb).exp()
    }

    /// `ln` allowing values below one when the other factor dominates.
    fn ln_tower_any(self) -> Signed {
        if self.height == 0 {
            Signed::Small(self.top.ln())
        } else {
            Signed::Big(Tower::canonical(self.height - 1, self.top))
        }
    }

    /// `ln ln x`, `ln ln ln x`, … as floats (`+∞` when still out of range,
    /// NaN when the iterated logarithm leaves the positive reals).
    pub fn iterated_ln(self, times: u32) -> f64 {
        let mut v = self;
        for _ in 0..times - 1 {
            match v.ln() {
                Some(t) => v = t,
                None => return f64::NAN,
            }
        }
        v.ln_f64()
    }
}

enum Signed {
    Small(f64),
    Big(Tower),
}

impl Signed {
    fn add_signed(self, other: Signed) -> Tower {
        match (self, other) {
            (Signed::Small(a), Signed::Small(b)) => Tower::new((a + b).max(0.0)),
            (Signed::Big(t), Signed::Small(s)) | (Signed::Small(s), Signed::Big(t)) => {
                if s >= 0.0 {
                    t.add(Tower::new(s))
                } else if t.height == 0 {
                    Tower::new((t.top + s).max(0.0))
                } else {
                    t
                }
            }
            (Signed::Big(a), Signed::Big(b)) => a.add(b),
        }
    }
}

impl PartialOrd for Tower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.height.cmp(&other.height) {
            Ordering::Equal => self.top.partial_cmp(&other.top),
            o => Some(o),
        }
    }
}

impl fmt::Display for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.height == 0 {
            write!(f, "{:e}", self.top)
        } else {
            write!(f, "exp^{}({:e})", self.height, self.top)
        }
    }
}

impl From<f64> for Tower {
    fn from(x: f64) -> Self {
        Tower::new(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_ln_round_trip() {
        let x = Tower::new(3.0).exp().exp().exp();
        assert_eq!(x.height(), 1);
        let back = x.ln().unwrap().ln().unwrap().ln().unwrap();
        assert!((back.to_f64() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ordering_across_heights() {
        let a = Tower::new(800.0).exp();
        let b = Tower::new(1e300);
        assert!(a > b);
        assert!(a.exp() > a);
        assert!(Tower::new(2.0) < Tower::new(3.0));
    }

    #[test]
    fn arithmetic_in_range_is_exact() {
        let a = Tower::new(6.0);
        assert_eq!(a.mul_const(0.5).to_f64(), 3.0);
        assert_eq!(a.pow(2.0).to_f64(), 36.0);
        assert_eq!(a.add(Tower::new(1.0)).to_f64(), 7.0);
        assert_eq!(a.mul(Tower::new(2.0)).to_f64(), 12.0);
    }

    #[test]
    fn arithmetic_out_of_range() {
        let big = Tower::new(1000.0).exp(); // e^1000
        let sq = big.pow(2.0);
        assert!((sq.ln_f64() - 2000.0).abs() < 1e-9);
        let doubled = big.mul_const(2.0);
        assert!((doubled.ln_f64() - (1000.0 + 2f64.ln())).abs() < 1e-9);
        let sum = big.add(big);
        assert!((sum.ln_f64() - (1000.0 + 2f64.ln())).abs() < 1e-9);
        let prod = big.mul(Tower::new(0.5));
        assert!((prod.ln_f64() - (1000.0 - 2f64.ln())).abs() < 1e-9);
    }
}
