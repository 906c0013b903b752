//! Integral ideals g*[a, (b + sqrt D)/2] of a quadratic order of discriminant
//! D, with Gauss composition and reduction that records the element relating
//! an ideal to its reduced representative.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use super::element::QElement;
use crate::arith::isqrt;

/// g * (aZ + (b + sqrt D)/2 Z), with 4a | b^2 - D and b in (-a, a].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QIdeal {
    pub d: i64,
    pub g: i128,
    pub a: i128,
    pub b: i128,
}

/// I = content * prod (b_i + sqrt D)/(2 c_i) * J for the reduced J.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub content: i128,
    pub steps: Vec<(i128, i128)>,
}

impl Trace {
    pub fn element(&self, d: i64) -> QElement {
        let mut e = QElement::rational(d, BigInt::from(self.content));
        for &(b, c) in &self.steps {
            e = e.mul(&gamma_over_c(d, b, c));
        }
        e
    }
}

/// (b + sqrt D)/(2c).
pub fn gamma_over_c(d: i64, b: i128, c: i128) -> QElement {
    QElement::new(d, BigInt::from(b), BigInt::from(1), BigInt::from(2 * c))
}

pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    // returns (g, x, y) with a x + b y = g >= 0
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

fn sqrt_floor(d: i64) -> i128 {
    isqrt(d as u128) as i128
}

impl QIdeal {
    /// Primitive ideal [a, (b + sqrt D)/2]; b is normalized into (-a, a].
    pub fn new(d: i64, a: i128, b: i128) -> QIdeal {
        QIdeal::with_content(d, 1, a, b)
    }

    pub fn with_content(d: i64, g: i128, a: i128, b: i128) -> QIdeal {
        assert!(a > 0 && g > 0);
        debug_assert_eq!(
            (b * b - d as i128).rem_euclid(4 * a),
            0,
            "4a must divide b^2 - D"
        );
        let mut b = b.rem_euclid(2 * a);
        if b > a {
            b -= 2 * a;
        }
        QIdeal { d, g, a, b }
    }

    pub fn unit(d: i64) -> QIdeal {
        QIdeal::new(d, 1, d.rem_euclid(2) as i128)
    }

    pub fn is_unit(&self) -> bool {
        self.g == 1 && self.a == 1
    }

    pub fn norm(&self) -> i128 {
        self.g * self.g * self.a
    }

    /// c = (b^2 - D)/(4a).
    pub fn c(&self) -> i128 {
        (self.b * self.b - self.d as i128) / (4 * self.a)
    }

    pub fn primitive(&self) -> QIdeal {
        QIdeal { g: 1, ..*self }
    }

    pub fn conj(&self) -> QIdeal {
        QIdeal::with_content(self.d, self.g, self.a, -self.b)
    }

    pub fn scale(&self, n: i128) -> QIdeal {
        QIdeal {
            g: self.g * n.abs(),
            ..*self
        }
    }

    /// Hermite normal form in the basis {1, w}, w = (D + sqrt D)/2:
    /// rows (g a, 0) and (g (b - D)/2 mod g a, g).
    pub fn hnf(&self) -> [[i128; 2]; 2] {
        let ga = self.g * self.a;
        let off = (self.g * ((self.b - self.d as i128) / 2)).rem_euclid(ga);
        [[ga, 0], [off, self.g]]
    }

    /// Does the ideal contain the integral element (u + v sqrt D)/2?
    pub fn contains_half(&self, u: &BigInt, v: &BigInt) -> bool {
        let g = BigInt::from(self.g);
        let (vq, vr) = v.div_rem(&g);
        let (uq, ur) = u.div_rem(&g);
        if !vr.is_zero() || !ur.is_zero() {
            return false;
        }
        // (uq + vq sqrt D)/2 = m a + vq (b + sqrt D)/2
        let t: BigInt = uq - &vq * BigInt::from(self.b);
        (t % BigInt::from(2 * self.a)).is_zero()
    }

    pub fn contains(&self, x: &QElement) -> bool {
        // write x = (u + v sqrt D)/2
        let two = BigInt::from(2);
        let (ua, ra) = (&x.a * &two).div_rem(&x.den);
        let (vb, rb) = (&x.b * &two).div_rem(&x.den);
        if !ra.is_zero() || !rb.is_zero() {
            return false;
        }
        self.contains_half(&ua, &vb)
    }

    /// Product of ideals.
    pub fn mul(&self, o: &QIdeal) -> QIdeal {
        let (d1, a3, b3) = compose(self.d, (self.a, self.b), (o.a, o.b));
        QIdeal::with_content(self.d, self.g * o.g * d1, a3, b3)
    }

    // ---- imaginary reduction

    fn is_reduced_imag(&self) -> bool {
        let c = self.c();
        self.a < c || (self.a == c && self.b >= 0)
    }

    /// Reduce a (primitive part of an) ideal of an imaginary field.
    pub fn reduce_imag(&self) -> (QIdeal, Trace) {
        let mut tr = Trace {
            content: self.g,
            steps: Vec::new(),
        };
        let mut cur = self.primitive();
        while !cur.is_reduced_imag() {
            let c = cur.c();
            tr.steps.push((cur.b, c));
            cur = QIdeal::new(cur.d, c, -cur.b);
        }
        (cur, tr)
    }

    // ---- real reduction

    pub fn is_reduced_real(&self) -> bool {
        let d = self.d as i128;
        let (a, b) = (self.a, self.b);
        if b <= 0 || b * b >= d {
            return false;
        }
        let lo = 2 * a + b;
        if lo * lo <= d {
            return false;
        }
        let hi = 2 * a - b;
        hi <= 0 || hi * hi < d
    }

    /// Normalize b for a real field: into (-a, a] if a > sqrt D, otherwise
    /// the largest b < sqrt D in its class mod 2a.
    fn normalize_real(d: i64, a: i128, b: i128) -> QIdeal {
        let s = sqrt_floor(d);
        let two_a = 2 * a;
        if a * a > d as i128 {
            QIdeal::new(d, a, b)
        } else {
            let nb = s - (s - b).rem_euclid(two_a);
            QIdeal { d, g: 1, a, b: nb }
        }
    }

    /// One rho step on a primitive real ideal: self = (b + sqrt D)/(2c) * next.
    pub fn rho(&self) -> (QIdeal, (i128, i128)) {
        let c = self.c();
        let next = QIdeal::normalize_real(self.d, c.abs(), -self.b);
        (next, (self.b, c))
    }

    pub fn reduce_real(&self) -> (QIdeal, Trace) {
        let mut tr = Trace {
            content: self.g,
            steps: Vec::new(),
        };
        let mut cur = QIdeal::normalize_real(self.d, self.a, self.b);
        while !cur.is_reduced_real() {
            let (next, step) = cur.rho();
            tr.steps.push(step);
            cur = next;
        }
        (cur, tr)
    }

    pub fn reduce(&self) -> (QIdeal, Trace) {
        if self.d < 0 {
            self.reduce_imag()
        } else {
            self.reduce_real()
        }
    }
}

/// Gauss composition of primitive ideals [a1, b1] and [a2, b2]; returns
/// (d1, a3, b3) with the product equal to d1 * [a3, b3].
pub fn compose(d: i64, f1: (i128, i128), f2: (i128, i128)) -> (i128, i128, i128) {
    let (mut f1, mut f2) = (f1, f2);
    if f1.0 > f2.0 {
        std::mem::swap(&mut f1, &mut f2);
    }
    let (a1, b1) = f1;
    let (a2, b2) = f2;
    let c2 = (b2 * b2 - d as i128) / (4 * a2);
    let s = (b1 + b2) / 2;
    let n = b2 - s;
    let (y1, dd) = if a2 % a1 == 0 {
        (0, a1)
    } else {
        let (g, u, _) = ext_gcd(a2, a1);
        (u, g)
    };
    let (x2, y2, d1) = if s % dd == 0 {
        (0, -1, dd)
    } else {
        let (g, u, v) = ext_gcd(s, dd);
        (u, -v, g)
    };
    let v1 = a1 / d1;
    let v2 = a2 / d1;
    let r = (y1 * y2 % v1 * n % v1 - x2 * c2 % v1).rem_euclid(v1);
    let b3 = b2 + 2 * v2 * r;
    let a3 = v1 * v2;
    (d1, a3, b3)
}

/// A square root of D modulo 4p with the parity of D, for p prime with
/// kronecker(D, p) != -1; returned in (-p, p].
pub fn prime_ideal_b(d: i64, p: u64) -> Option<i128> {
    let p = p as i128;
    let di = d as i128;
    let m = 4 * p;
    // search b in [0, 2p) with b = D mod 2 and b^2 = D mod 4p
    let r = if p == 2 {
        (0..4).find(|&b: &i128| (b * b - di).rem_euclid(8) == 0 && (b - di).rem_euclid(2) == 0)
    } else {
        let t = sqrt_mod_prime(di.rem_euclid(p), p)?;
        // lift parity: b = t or t + p so that b = D mod 2
        let b = if (t - di).rem_euclid(2) == 0 {
            t
        } else {
            t + p
        };
        Some(b)
    }?;
    debug_assert_eq!((r * r - di).rem_euclid(m), 0);
    let mut b = r.rem_euclid(2 * p);
    if b > p {
        b -= 2 * p;
    }
    Some(b)
}

/// Tonelli-Shanks square root mod an odd prime (a must be a residue or 0).
pub fn sqrt_mod_prime(a: i128, p: i128) -> Option<i128> {
    let a = a.rem_euclid(p);
    if a == 0 {
        return Some(0);
    }
    let pw = |mut b: i128, mut e: i128| {
        let mut r = 1i128;
        b %= p;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        r
    };
    if pw(a, (p - 1) / 2) != 1 {
        return None;
    }
    let (mut q, mut s) = (p - 1, 0);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| pw(z, (p - 1) / 2) == p - 1).unwrap();
    let mut m = s;
    let mut c = pw(z, q);
    let mut t = pw(a, q);
    let mut r = pw(a, (q + 1) / 2);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = tt * tt % p;
            i += 1;
        }
        let b = pw(c, 1 << (m - i - 1));
        m = i;
        c = b * b % p;
        t = t * c % p;
        r = r * b % p;
    }
    Some(r.min(p - r))
}
