//! Local quadratic algebras over Q_p and their quadratic extensions.
//!
//! A quadratic algebra K_p is modelled as Z_p[w]/(w^2 - D w + n) with
//! n = (D^2 - D)/4 for a fundamental discriminant D in the right square
//! class. Square classes of K_p^x are encoded as small bit vectors:
//!
//! * Q_p: bit 0 is the valuation parity, the higher bits are the unit
//!   characters (for p = 2: u = 3 mod 4, then u = +-3 mod 8; for odd p: u a
//!   non-residue).
//! * K_p a field: bit 0 is the valuation parity in a fixed uniformizer, the
//!   higher bits are coordinates of the unit in a fixed basis of U/U^2.
//! * K_p split: two Q_p classes, the component where w -> r (r the root that
//!   is smallest mod p) in the low bits.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::is_fundamental_discriminant;
use crate::Error;

/// Largest p-power modulus used for root lifting and residues.
const MOD_BITS: u32 = 62;

// ---------------------------------------------------------------------------
// Q_p square classes

/// Number of bits in a Q_p square class.
pub fn qp_width(p: u64) -> u32 {
    if p == 2 {
        3
    } else {
        2
    }
}

fn vp_i128(mut n: i128, p: i128) -> u32 {
    debug_assert!(n != 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

fn legendre_i128(a: i128, p: i128) -> i32 {
    let a = a.rem_euclid(p);
    if a == 0 {
        return 0;
    }
    let r = pow_mod(a, (p - 1) / 2, p);
    if r == 1 {
        1
    } else {
        -1
    }
}

fn pow_mod(mut b: i128, mut e: i128, m: i128) -> i128 {
    let mut r = 1i128 % m;
    b = b.rem_euclid(m);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Unit-part bits of an odd p-adic unit u (given exactly or mod p^k, k >= 3
/// for p = 2).
fn qp_unit_bits(p: u64, u: i128) -> u8 {
    if p == 2 {
        let r = u.rem_euclid(8);
        let b1 = (r % 4 == 3) as u8;
        let b2 = (r == 3 || r == 5) as u8;
        (b1 << 1) | (b2 << 2)
    } else {
        ((legendre_i128(u, p as i128) == -1) as u8) << 1
    }
}

/// Square class of a nonzero integer in Q_p.
pub fn qp_class(p: u64, n: i128) -> u8 {
    assert!(n != 0, "zero has no square class");
    let pi = p as i128;
    let v = vp_i128(n, pi);
    let u = n / pi.pow(v);
    (v & 1) as u8 | qp_unit_bits(p, u)
}

pub fn qp_class_big(p: u64, n: &BigInt) -> u8 {
    assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut m = n.clone();
    let mut v = 0u32;
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            break;
        }
        m = q;
        v += 1;
    }
    let modulus = if p == 2 { BigInt::from(8) } else { pb };
    let u = m.mod_floor(&modulus).to_i128().unwrap();
    (v & 1) as u8 | qp_unit_bits(p, u)
}

/// Exponent of p in the discriminant of Q_p(sqrt c); 0 for the split class.
pub fn qp_disc_exp(p: u64, c: u8) -> u32 {
    if c & 1 == 1 {
        if p == 2 {
            3
        } else {
            1
        }
    } else if p == 2 && c & 2 != 0 {
        2
    } else {
        0
    }
}

/// A small integer in the given Q_p square class.
pub fn qp_class_rep(p: u64, c: u8) -> i64 {
    let unit = if p == 2 {
        match (c >> 1) & 3 {
            0 => 1,
            1 => -1,
            2 => 5,
            _ => -5,
        }
    } else if c & 2 != 0 {
        smallest_nonresidue(p) as i64
    } else {
        1
    };
    if c & 1 == 1 {
        unit * p as i64
    } else {
        unit
    }
}

fn smallest_nonresidue(p: u64) -> u64 {
    (2..p)
        .find(|&a| legendre_i128(a as i128, p as i128) == -1)
        .unwrap()
}

/// Conventional names: representatives for p = 2, symbolic for odd p.
pub fn qp_class_name(p: u64, c: u8) -> String {
    if p == 2 {
        qp_class_rep(2, c).to_string()
    } else {
        ["1", "p", "u", "pu"][c as usize].to_string()
    }
}

pub fn parse_qp_class(p: u64, name: &str) -> Option<u8> {
    (0..(1u8 << qp_width(p))).find(|&c| qp_class_name(p, c) == name)
}

/// A square class of Q_2^x together with the discriminant exponent of the
/// algebra Q_2(sqrt rep).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Local2Class {
    pub bits: u8,
    pub rep: i64,
    pub disc_exp: u32,
}

pub fn square_classes_q2() -> Vec<Local2Class> {
    (0..8u8)
        .map(|c| Local2Class {
            bits: c,
            rep: qp_class_rep(2, c),
            disc_exp: qp_disc_exp(2, c),
        })
        .collect()
}

/// Q_p square-class test for a nonzero integer.
pub fn is_square_qp(p: u64, n: i128) -> bool {
    qp_class(p, n) == 0
}

// ---------------------------------------------------------------------------
// Quadratic algebras over Q_p

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalKind {
    Split,
    Unramified,
    Ramified,
}

/// K_p = Q_p(sqrt D) with square-class machinery.
#[derive(Clone, Debug)]
pub struct LocalQuadratic {
    pub p: u64,
    pub d: i64,
    pub kind: LocalKind,
    n: i128,
    /// Exponent k with p^k O inside p^(2 e_2 + 1), e_2 = v_P(2).
    k: u32,
    modulus: i128,
    /// Largest usable exponent W with p^W < 2^MOD_BITS.
    w_max: u32,
    pmax: i128,
    // field data
    unit_width: u32,
    unit_bits: Vec<u8>,
    unit_basis: Vec<(i128, i128)>,
    pi: (i128, i128),
    pi_cofactor_inv: i128,
    class_p: u8,
    // split data: the two roots of w mod p^w_max
    roots: [i128; 2],
}

type UnitTable = (u32, Vec<u8>, Vec<(i128, i128)>);

fn unit_table_cache() -> &'static Mutex<HashMap<(u64, i128), UnitTable>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, i128), UnitTable>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn inv_mod(a: i128, m: i128) -> i128 {
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    assert_eq!(g, 1, "not invertible");
    x.rem_euclid(m)
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

impl LocalQuadratic {
    pub fn new(p: u64, d: i64) -> Result<LocalQuadratic, Error> {
        if !is_fundamental_discriminant(d) {
            return Err(Error::InvalidInput(format!(
                "{d} is not a fundamental discriminant"
            )));
        }
        let pi = p as i128;
        let di = d as i128;
        let n = (di * di - di) / 4;
        let dc = qp_class(p, di);
        let kind = if dc == 0 {
            LocalKind::Split
        } else if dc & 1 == 1 || (p == 2 && dc & 2 != 0) {
            LocalKind::Ramified
        } else {
            LocalKind::Unramified
        };
        let k = if p == 2 { 3 } else { 1 };
        let mut w_max = 0;
        let mut pmax: i128 = 1;
        while pmax
            .checked_mul(pi)
            .is_some_and(|v| v < (1i128 << MOD_BITS))
        {
            pmax *= pi;
            w_max += 1;
        }
        let mut lq = LocalQuadratic {
            p,
            d,
            kind,
            n,
            k,
            modulus: pi.pow(k),
            w_max,
            pmax,
            unit_width: 0,
            unit_bits: Vec::new(),
            unit_basis: Vec::new(),
            pi: (0, 0),
            pi_cofactor_inv: 1,
            class_p: 1,
            roots: [0, 0],
        };
        match kind {
            LocalKind::Split => lq.init_split(),
            _ => lq.init_field(),
        }
        Ok(lq)
    }

    /// e(P|p) for a field, 1 for split.
    pub fn e(&self) -> u32 {
        if self.kind == LocalKind::Ramified {
            2
        } else {
            1
        }
    }

    pub fn f(&self) -> u32 {
        if self.kind == LocalKind::Unramified {
            2
        } else {
            1
        }
    }

    fn e2(&self) -> u32 {
        if self.p == 2 {
            self.e()
        } else {
            0
        }
    }

    pub fn is_split(&self) -> bool {
        self.kind == LocalKind::Split
    }

    /// Q_p square class of D, naming K_p.
    pub fn k_class(&self) -> u8 {
        qp_class(self.p, self.d as i128)
    }

    pub fn width(&self) -> u32 {
        if self.is_split() {
            2 * qp_width(self.p)
        } else {
            self.unit_width + 1
        }
    }

    pub fn num_classes(&self) -> usize {
        1 << self.width()
    }

    fn mul(&self, a: (i128, i128), b: (i128, i128), m: i128) -> (i128, i128) {
        let d = self.d as i128;
        let x = (a.0 * b.0 % m - self.n % m * (a.1 * b.1 % m) % m).rem_euclid(m);
        let y = (a.0 * b.1 % m + a.1 * b.0 % m + d * (a.1 * b.1 % m) % m).rem_euclid(m);
        (x, y)
    }

    fn norm_exact(&self, x: i128, y: i128) -> Option<i128> {
        let d = self.d as i128;
        x.checked_mul(x)?
            .checked_add(d.checked_mul(x)?.checked_mul(y)?)?
            .checked_add(self.n.checked_mul(y)?.checked_mul(y)?)
    }

    fn init_split(&mut self) {
        let pi = self.p as i128;
        let d = self.d as i128;
        let f = |t: i128, m: i128| -> i128 {
            ((t * t % m - d.rem_euclid(m) * t % m + self.n.rem_euclid(m)) % m).rem_euclid(m)
        };
        let mut starts: Vec<i128> = (0..pi).filter(|&t| f(t, pi) == 0).collect();
        if starts.len() == 1 {
            // p odd with w = D/2 double root cannot happen for p not dividing D
            starts.push(starts[0]);
        }
        let m = self.pmax;
        for (i, &t0) in starts.iter().take(2).enumerate() {
            let mut t = t0;
            for _ in 0..8 {
                let ft = f(t, m);
                if ft == 0 {
                    break;
                }
                let dt = (2 * t - d).rem_euclid(m);
                t = (t - ft * inv_mod(dt, m) % m).rem_euclid(m);
            }
            debug_assert_eq!(f(t, m), 0);
            self.roots[i] = t;
        }
    }

    /// Is z (residue mod p^k) in P^j?
    fn in_p_power(&self, z: (i128, i128), j: u32) -> bool {
        let pi = self.p as i128;
        let e = self.e();
        let q = j / e;
        let r = j % e;
        let pq = pi.pow(q);
        let m = self.modulus;
        let (x, y) = (z.0.rem_euclid(m), z.1.rem_euclid(m));
        if x % pq != 0 || y % pq != 0 {
            return false;
        }
        if r == 0 {
            return true;
        }
        let (x, y) = (x / pq, y / pq);
        let nn = self.norm_exact(x, y).unwrap();
        nn % pi == 0
    }

    fn is_unit(&self, z: (i128, i128)) -> bool {
        self.norm_exact(z.0, z.1).unwrap() % self.p as i128 != 0
    }

    fn residue_index(&self, z: (i128, i128)) -> usize {
        let m = self.modulus;
        (z.0.rem_euclid(m) * m + z.1.rem_euclid(m)) as usize
    }

    /// u is a square modulo P^j (u a unit residue mod p^k).
    fn unit_square_mod(&self, u: (i128, i128), j: u32) -> bool {
        let m = self.modulus;
        for sx in 0..m {
            for sy in 0..m {
                let s2 = self.mul((sx, sy), (sx, sy), m);
                let diff = ((u.0 - s2.0).rem_euclid(m), (u.1 - s2.1).rem_euclid(m));
                if self.in_p_power(diff, j) {
                    return true;
                }
            }
        }
        false
    }

    fn init_field(&mut self) {
        let m = self.modulus;
        let pi = self.p as i128;
        // The unit tables only see D and (D^2 - D)/4 modulo m.
        let key = (self.p, (self.d as i128).rem_euclid(4 * m));
        let cached = unit_table_cache().lock().unwrap().get(&key).cloned();
        match cached {
            Some((width, bits, basis)) => {
                self.unit_width = width;
                self.unit_bits = bits;
                self.unit_basis = basis;
            }
            None => {
                self.init_unit_table();
                unit_table_cache().lock().unwrap().insert(
                    key,
                    (
                        self.unit_width,
                        self.unit_bits.clone(),
                        self.unit_basis.clone(),
                    ),
                );
            }
        }
        self.init_uniformizer(pi);
    }

    fn init_unit_table(&mut self) {
        let m = self.modulus;
        let top = 2 * self.e2() + 1;
        let units: Vec<(i128, i128)> = (0..m)
            .flat_map(|x| (0..m).map(move |y| (x, y)))
            .filter(|&z| self.is_unit(z))
            .collect();
        let is_sq = |z: (i128, i128)| self.unit_square_mod(z, top);
        // Greedy basis of U/U^2 with the span kept as explicit elements.
        let mut basis: Vec<(i128, i128)> = Vec::new();
        let mut span: Vec<(i128, i128)> = vec![(1, 0)];
        for &u in &units {
            let known = span.iter().any(|&s| is_sq(self.mul(u, s, m)));
            if !known {
                basis.push(u);
                let extra: Vec<_> = span.iter().map(|&s| self.mul(s, u, m)).collect();
                span.extend(extra);
            }
        }
        let mut table = vec![0u8; (m * m) as usize];
        for &u in &units {
            let idx = span
                .iter()
                .position(|&s| is_sq(self.mul(u, s, m)))
                .expect("unit lies in the span");
            table[self.residue_index(u)] = idx as u8;
        }
        self.unit_width = basis.len() as u32;
        self.unit_basis = basis;
        self.unit_bits = table;
    }

    fn init_uniformizer(&mut self, pi: i128) {
        if self.kind == LocalKind::Ramified {
            'search: for r in 1..6i128 {
                for x in -r..=r {
                    for y in -r..=r {
                        if let Some(nn) = self.norm_exact(x, y) {
                            if nn != 0 && vp_i128(nn, pi) == 1 {
                                self.pi = (x, y);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let npi = self.norm_exact(self.pi.0, self.pi.1).unwrap();
            self.pi_cofactor_inv = inv_mod(npi / pi, self.pmax);
            // p = pi^2 * (p / pi^2), p/pi^2 = conj(pi)^2 / (p m^2)
            let c = self.conj(self.pi);
            let c2 = (
                c.0 * c.0 - self.n * c.1 * c.1,
                2 * c.0 * c.1 + self.d as i128 * c.1 * c.1,
            );
            let u = (c2.0 / pi, c2.1 / pi);
            let minv = self.pi_cofactor_inv;
            let mm = self.modulus;
            let u = (
                (u.0 * minv % mm * minv).rem_euclid(mm),
                (u.1 * minv % mm * minv).rem_euclid(mm),
            );
            self.class_p = self.unit_class(u) << 1;
        } else {
            self.pi = (pi, 0);
            self.class_p = 1;
        }
    }

    fn conj(&self, z: (i128, i128)) -> (i128, i128) {
        (z.0 + self.d as i128 * z.1, -z.1)
    }

    fn unit_class(&self, u: (i128, i128)) -> u8 {
        self.unit_bits[self.residue_index(u)]
    }

    /// Square class of x + y w from residues mod p^W, W >= v + k + 1 where v
    /// is the exact p-valuation of the norm.
    fn classify_residue(&self, x: i128, y: i128, vn: u32, w: u32) -> Result<u8, Error> {
        if w < vn + self.k + 1 {
            return Err(Error::Precision(format!(
                "need p^{} at p = {}, have p^{}",
                vn + self.k + 1,
                self.p,
                w
            )));
        }
        let pi = self.p as i128;
        let mw = pi.pow(w);
        let (x, y) = (x.rem_euclid(mw), y.rem_euclid(mw));
        match self.kind {
            LocalKind::Split => {
                let mut out = 0u8;
                for (i, &r) in self.roots.iter().enumerate() {
                    let z = (x + y % mw * (r % mw)) % mw;
                    if z == 0 {
                        return Err(Error::Precision("component vanishes".into()));
                    }
                    let v = vp_i128(z, pi);
                    let u = z / pi.pow(v);
                    let c = (v & 1) as u8 | qp_unit_bits(self.p, u);
                    out |= c << (i as u32 * qp_width(self.p));
                }
                Ok(out)
            }
            LocalKind::Unramified => {
                let v = vn / 2;
                let pv = pi.pow(v);
                debug_assert!(x % pv == 0 && y % pv == 0);
                let u = (x / pv, y / pv);
                Ok((v & 1) as u8 ^ (self.unit_class(u) << 1))
            }
            LocalKind::Ramified => {
                let j = vn / 2;
                let pj = pi.pow(j);
                if x % pj != 0 || y % pj != 0 {
                    return Err(Error::Invariant("ramified content mismatch".into()));
                }
                let (x, y) = (x / pj, y / pj);
                let mut c = if j & 1 == 1 { self.class_p } else { 0 };
                if vn & 1 == 0 {
                    c ^= self.unit_class((x, y)) << 1;
                } else {
                    let mr = pi.pow(w - j);
                    let cb = self.conj(self.pi);
                    let t = self.mul((x, y), (cb.0.rem_euclid(mr), cb.1.rem_euclid(mr)), mr);
                    debug_assert!(t.0 % pi == 0 && t.1 % pi == 0);
                    let m = self.modulus;
                    let inv = self.pi_cofactor_inv % m;
                    let u = ((t.0 / pi) * inv % m, (t.1 / pi) * inv % m);
                    c ^= 1 ^ (self.unit_class(u) << 1);
                }
                Ok(c)
            }
        }
    }

    /// Square class of the integral element x + y w.
    pub fn classify(&self, x: i128, y: i128) -> Result<u8, Error> {
        match self.norm_exact(x, y) {
            Some(nn) if nn != 0 => {
                let vn = vp_i128(nn, self.p as i128);
                let w = self.w_max.min(vn + self.k + 8);
                if w < vn + self.k + 1 {
                    return self.classify_big(&BigInt::from(x), &BigInt::from(y));
                }
                let mw = (self.p as i128).pow(w);
                self.classify_residue(x % mw, y % mw, vn, w)
            }
            Some(_) => Err(Error::InvalidInput("zero element".into())),
            None => self.classify_big(&BigInt::from(x), &BigInt::from(y)),
        }
    }

    /// Square class of a big integral element x + y w.
    pub fn classify_big(&self, x: &BigInt, y: &BigInt) -> Result<u8, Error> {
        if x.is_zero() && y.is_zero() {
            return Err(Error::InvalidInput("zero element".into()));
        }
        let pb = BigInt::from(self.p);
        let (mut x, mut y) = (x.clone(), y.clone());
        let mut content = 0u32;
        while (&x % &pb).is_zero() && (&y % &pb).is_zero() {
            x /= &pb;
            y /= &pb;
            content += 1;
        }
        let d = BigInt::from(self.d);
        let nn = &x * &x + &d * &x * &y + BigInt::from(self.n) * &y * &y;
        let mut vn = 0u32;
        let mut t = nn.clone();
        while (&t % &pb).is_zero() {
            t /= &pb;
            vn += 1;
        }
        let w = self.w_max.min(vn + self.k + 8);
        let mw = BigInt::from((self.p as i128).pow(w));
        let xr = x.mod_floor(&mw).to_i128().unwrap();
        let yr = y.mod_floor(&mw).to_i128().unwrap();
        let c = self.classify_residue(xr, yr, vn, w)?;
        Ok(if content & 1 == 1 {
            c ^ self.class_p_full()
        } else {
            c
        })
    }

    /// Class of p itself.
    pub fn class_p_full(&self) -> u8 {
        match self.kind {
            LocalKind::Split => {
                let w = qp_width(self.p);
                1 | (1 << w)
            }
            _ => self.class_p,
        }
    }

    /// Class of a nonzero rational integer.
    pub fn classify_int(&self, n: i128) -> u8 {
        match self.kind {
            LocalKind::Split => {
                let c = qp_class(self.p, n);
                c | (c << qp_width(self.p))
            }
            _ => self.classify(n, 0).expect("integer classification"),
        }
    }

    pub fn classify_big_int(&self, n: &BigInt) -> u8 {
        match self.kind {
            LocalKind::Split => {
                let c = qp_class_big(self.p, n);
                c | (c << qp_width(self.p))
            }
            _ => self
                .classify_big(n, &BigInt::zero())
                .expect("integer classification"),
        }
    }

    pub fn is_square(&self, x: i128, y: i128) -> Result<bool, Error> {
        Ok(self.classify(x, y)? == 0)
    }

    /// Exponent of p in N(d_{L/K}) for L = K_p(sqrt alpha), alpha in class c.
    pub fn disc_exp(&self, c: u8) -> u32 {
        match self.kind {
            LocalKind::Split => {
                let w = qp_width(self.p);
                let mask = (1u8 << w) - 1;
                qp_disc_exp(self.p, c & mask) + qp_disc_exp(self.p, (c >> w) & mask)
            }
            _ => {
                let e2 = self.e2();
                let f = self.f();
                if c & 1 == 1 {
                    return f * (2 * e2 + 1);
                }
                let u = self.unit_rep(c >> 1);
                let m = (0..=e2)
                    .rev()
                    .find(|&kk| self.unit_square_mod(u, 2 * kk))
                    .unwrap_or(0);
                f * 2 * (e2 - m)
            }
        }
    }

    fn unit_rep(&self, bits: u8) -> (i128, i128) {
        let m = self.modulus;
        let mut u = (1i128, 0i128);
        for (i, &b) in self.unit_basis.iter().enumerate() {
            if bits >> i & 1 == 1 {
                u = self.mul(u, b, m);
            }
        }
        u
    }

    /// A small exact integral element in class c (field case).
    fn field_rep_exact(&self, c: u8) -> (i128, i128) {
        let mut u = self.unit_rep(c >> 1);
        if c & 1 == 1 {
            let (a, b) = (u, self.pi);
            u = (
                a.0 * b.0 - self.n * a.1 * b.1,
                a.0 * b.1 + a.1 * b.0 + self.d as i128 * a.1 * b.1,
            );
        }
        u
    }

    /// Class of the Galois conjugate.
    pub fn conj_class(&self, c: u8) -> u8 {
        match self.kind {
            LocalKind::Split => {
                let w = qp_width(self.p);
                let mask = (1u8 << w) - 1;
                ((c & mask) << w) | ((c >> w) & mask)
            }
            _ => {
                let z = self.conj(self.field_rep_exact(c));
                self.classify(z.0, z.1).expect("conjugate class")
            }
        }
    }

    /// Q_p class of the norm of any element of class c.
    pub fn norm_class(&self, c: u8) -> u8 {
        match self.kind {
            LocalKind::Split => {
                let w = qp_width(self.p);
                let mask = (1u8 << w) - 1;
                (c & mask) ^ ((c >> w) & mask)
            }
            _ => {
                let z = self.field_rep_exact(c);
                qp_class(self.p, self.norm_exact(z.0, z.1).unwrap())
            }
        }
    }

    /// Number of components of K_p.
    pub fn components(&self) -> u32 {
        if self.is_split() {
            2
        } else {
            1
        }
    }

    /// Split case: b in (-p, p] such that component i (bits i*width..) is
    /// the completion at the prime ideal [p, (b + sqrt D)/2].
    pub fn split_component_b(&self, i: usize) -> i128 {
        assert!(self.is_split());
        let p = self.p as i128;
        let r = self.roots[i].rem_euclid(p);
        // (b - D)/2 + w lies in the prime iff (b - D)/2 + r = 0 mod p
        let mut b = (self.d as i128 - 2 * r).rem_euclid(2 * p);
        if b > p {
            b -= 2 * p;
        }
        b
    }
}

// ---------------------------------------------------------------------------
// Local pairs and masses

/// One isomorphism class of pairs (L_p, K_p) with L_p quadratic over K_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalPair {
    pub p: u64,
    /// Q_p square class of D_K (0 = split).
    pub k_class: u8,
    /// Square class of alpha in K_p^x/K_p^x2 (orbit representative).
    pub l_class: u8,
    pub v_rel: u32,
    pub v_flip: u32,
    pub v_k: u32,
    /// Q_p square class of N(alpha), i.e. of the flipped D_K.
    pub flip_class: u8,
    pub aut: u32,
    pub weight: Rational64,
}

impl LocalPair {
    pub fn level(&self) -> u32 {
        (self.v_rel - self.v_flip) / 2
    }
}

/// A fundamental discriminant whose square class at p is c.
pub fn representative_discriminant(p: u64, c: u8) -> i64 {
    for m in 3i64.. {
        for d in [m, -m] {
            if is_fundamental_discriminant(d) && qp_class(p, d as i128) == c {
                return d;
            }
        }
    }
    unreachable!()
}

/// All pairs over K_p (one per orbit of Aut(K_p) on K_p^x/K_p^x2).
pub fn local_pairs(kp: &LocalQuadratic) -> Vec<LocalPair> {
    let p = kp.p;
    let v_k = qp_disc_exp(p, kp.k_class());
    let aut_k = 1u32 << kp.components();
    let mut out = Vec::new();
    for c in 0..kp.num_classes() as u8 {
        let s = kp.conj_class(c);
        if s < c {
            continue;
        }
        let stab = if s == c { 2 } else { 1 };
        let v_rel = kp.disc_exp(c);
        let flip_class = kp.norm_class(c);
        let v_flip = qp_disc_exp(p, flip_class);
        let aut = aut_k * stab;
        let cond = (p as i64).pow(v_k + v_rel);
        out.push(LocalPair {
            p,
            k_class: kp.k_class(),
            l_class: c,
            v_rel,
            v_flip,
            v_k,
            flip_class,
            aut,
            weight: Rational64::new(1, aut as i64 * cond),
        });
    }
    out
}

/// Pairs over every quadratic algebra of Q_p.
pub fn all_local_pairs(p: u64) -> Vec<LocalPair> {
    let mut out = Vec::new();
    for c in 0..(1u8 << qp_width(p)) {
        let d = representative_discriminant(p, c);
        let kp = LocalQuadratic::new(p, d).expect("representative is fundamental");
        out.extend(local_pairs(&kp));
    }
    out
}

/// Mass of pairs at 2 with (v_rel - v_flip)/2 = i.
pub fn mu_sigma_2i(i: u32) -> Rational64 {
    all_local_pairs(2)
        .iter()
        .filter(|x| x.level() == i)
        .map(|x| x.weight)
        .sum()
}

/// (mu(Sigma_p), mu(Sigma_{p^2})) for an odd prime p; the second is the mass
/// of pairs with K_p unramified and conductor exactly p^2 (central inertia).
pub fn odd_local_weights(p: u64) -> (Rational64, Rational64) {
    assert!(p % 2 == 1, "odd prime expected");
    let pairs = all_local_pairs(p);
    let total = pairs.iter().map(|x| x.weight).sum();
    let central = pairs
        .iter()
        .filter(|x| x.v_k == 0 && x.v_rel == 2)
        .map(|x| x.weight)
        .sum();
    (total, central)
}

/// Total local mass at p.
pub fn mu_sigma_p(p: u64) -> Rational64 {
    all_local_pairs(p).iter().map(|x| x.weight).sum()
}

/// Which of the four 2-adic tables a class of D_K belongs to (1..=4).
pub fn table_index(k_class: u8) -> usize {
    if k_class == 0 {
        1
    } else if k_class == 4 {
        2
    } else if k_class & 1 == 0 {
        3
    } else {
        4
    }
}

/// Cell weights (v_rel, v_flip) -> mass for each of the four tables.
pub fn tables2() -> [BTreeMap<(u32, u32), Rational64>; 4] {
    let mut t: [BTreeMap<(u32, u32), Rational64>; 4] = Default::default();
    for pair in all_local_pairs(2) {
        let idx = table_index(pair.k_class) - 1;
        *t[idx]
            .entry((pair.v_rel, pair.v_flip))
            .or_insert_with(Rational64::zero) += pair.weight;
    }
    t
}

// ---------------------------------------------------------------------------
// The infinite place

/// Pair types at infinity: real K with (number of negative embeddings of
/// alpha) 0, 1, 2, and imaginary K.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InfType {
    RealPP,
    RealPM,
    RealMM,
    Complex,
}

impl serde::Serialize for InfType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl InfType {
    pub const ALL: [InfType; 4] = [
        InfType::RealPP,
        InfType::RealPM,
        InfType::RealMM,
        InfType::Complex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InfType::RealPP => "R2/++",
            InfType::RealPM => "R2/+-",
            InfType::RealMM => "R2/--",
            InfType::Complex => "C",
        }
    }

    pub fn parse(s: &str) -> Option<InfType> {
        InfType::ALL.into_iter().find(|t| t.name() == s)
    }

    /// |Aut(L_inf, K_inf)|.
    pub fn aut(self) -> i64 {
        match self {
            InfType::RealPP | InfType::RealMM => 8,
            InfType::RealPM => 4,
            InfType::Complex => 4,
        }
    }

    pub fn weight(self) -> Rational64 {
        Rational64::new(1, self.aut())
    }

    /// The type of the flipped pair.
    pub fn flip(self) -> InfType {
        match self {
            InfType::RealPM => InfType::Complex,
            InfType::Complex => InfType::RealPM,
            t => t,
        }
    }

    pub fn from_signs(real: bool, negatives: u32) -> InfType {
        if !real {
            return InfType::Complex;
        }
        match negatives {
            0 => InfType::RealPP,
            1 => InfType::RealPM,
            _ => InfType::RealMM,
        }
    }
}

pub fn mu_infinity() -> Rational64 {
    InfType::ALL.iter().map(|t| t.weight()).sum()
}

/// Exact (1 - 1/p)^2 mu(Sigma_p) compared against 1 - 1/p^2 - 2/p^3 + 2/p^4.
pub fn completeness_defect(p: u64) -> Rational64 {
    let pr = Rational64::from_integer(p as i64);
    let one = Rational64::one();
    let lhs = (one - one / pr) * (one - one / pr) * mu_sigma_p(p);
    let rhs = one - one / (pr * pr) - Rational64::from_integer(2) / (pr * pr * pr)
        + Rational64::from_integer(2) / (pr * pr * pr * pr);
    lhs - rhs
}
