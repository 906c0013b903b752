//! Quadratic fields Q(sqrt D): ideals, class groups, units, Selmer groups.
//!
//! Classes are represented by reduced ideals. For a real field every class
//! is a rho-cycle of reduced ideals; each reduced ideal J is stored with the
//! element nu such that J = nu * R, R the first ideal of its cycle. Elements
//! are mostly handled through their signature: the 2-adic square class and,
//! for real fields, the signs at both embeddings. Exact big-integer elements
//! are only rebuilt on demand.

pub mod element;
pub mod ideal;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{factor, isqrt, kronecker};
use crate::localalg::LocalQuadratic;
use crate::Error;
pub use element::QElement;
pub use ideal::{QIdeal, Trace};

/// Bits 0..6 hold the 2-adic class; bits 6 and 7 the negativity of the
/// element at the embeddings sqrt D -> +sqrt D and sqrt D -> -sqrt D.
pub type Sig = u8;
pub const SIGN_SHIFT: u32 = 6;
pub const MAX_ABS_D: i64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Splitting {
    Split(QIdeal, QIdeal),
    Inert(QIdeal),
    Ramified(QIdeal),
}

#[derive(Clone, Debug)]
pub struct ClassInfo {
    pub rep: QIdeal,
    /// 2g and the signature of delta with R_g^2 = delta R_{2g}.
    pub double: usize,
    pub double_sig: Sig,
}

#[derive(Clone, Copy, Debug)]
struct ReducedEntry {
    class: u32,
    pos: u32,
    sig: Sig,
}

#[derive(Clone, Debug)]
pub struct SelmerGroup {
    /// Signatures of the basis elements.
    pub sigs: Vec<Sig>,
    /// What each basis element is: torsion, the fundamental unit, or the
    /// square root class of R_g^2 for g in a basis of Cl[2].
    pub kinds: Vec<SelmerGen>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelmerGen {
    Torsion,
    Unit,
    TwoTorsionClass(usize),
}

impl SelmerGroup {
    pub fn rank(&self) -> usize {
        self.sigs.len()
    }

    pub fn order(&self) -> usize {
        1 << self.rank()
    }

    /// Signature of the element with coordinate vector u.
    pub fn sig_of(&self, u: usize) -> Sig {
        let mut s = 0;
        for (i, &g) in self.sigs.iter().enumerate() {
            if u >> i & 1 == 1 {
                s ^= g;
            }
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct QuadraticField {
    pub d: i64,
    pub two: LocalQuadratic,
    pub h: usize,
    pub classes: Vec<ClassInfo>,
    reduced: HashMap<(i128, i128), ReducedEntry>,
    /// Real fields: the rho steps (b, c) around each cycle, from its base.
    cycles: Vec<Vec<(i128, i128)>>,
    pub regulator: f64,
    pub unit_sig: Sig,
    /// The cycle unit eta relates to the fundamental unit by
    /// eps = (-1)^neg * eta^(+-1).
    unit_orientation: (bool, bool),
    pub torsion_order: u32,
    pub torsion_sig: Sig,
    pub prime_discriminants: Vec<i64>,
    pub cl2: Vec<usize>,
    pub cl2_basis: Vec<usize>,
    /// For k in Cl^2, some g with 2g = k.
    pub root_of: Vec<Option<usize>>,
    pub selmer: SelmerGroup,
}

impl QuadraticField {
    pub fn new(d: i64) -> Result<QuadraticField, Error> {
        if !crate::arith::is_fundamental_discriminant(d) {
            return Err(Error::InvalidInput(format!(
                "{d} is not a fundamental discriminant"
            )));
        }
        if d.abs() > MAX_ABS_D {
            return Err(Error::ResourceCap(format!(
                "|D| = {} exceeds {MAX_ABS_D}",
                d.abs()
            )));
        }
        let two = LocalQuadratic::new(2, d)?;
        let mut f = QuadraticField {
            d,
            two,
            h: 0,
            classes: Vec::new(),
            reduced: HashMap::new(),
            cycles: Vec::new(),
            regulator: 0.0,
            unit_sig: 0,
            unit_orientation: (false, false),
            torsion_order: 2,
            torsion_sig: 0,
            prime_discriminants: prime_discriminants(d),
            cl2: Vec::new(),
            cl2_basis: Vec::new(),
            root_of: Vec::new(),
            selmer: SelmerGroup {
                sigs: Vec::new(),
                kinds: Vec::new(),
            },
        };
        if d < 0 {
            f.build_imaginary();
        } else {
            f.build_real()?;
        }
        f.build_group_data();
        Ok(f)
    }

    pub fn is_real(&self) -> bool {
        self.d > 0
    }

    // ---- signatures

    pub fn sig_int(&self, n: i128) -> Sig {
        let mut s = self.two.classify_int(n);
        if n < 0 && self.is_real() {
            s |= 3 << SIGN_SHIFT;
        }
        s
    }

    /// Signature of (b + sqrt D)/2.
    pub fn sig_gamma(&self, b: i128) -> Sig {
        let d = self.d as i128;
        let mut s = self
            .two
            .classify((b - d) / 2, 1)
            .expect("gamma has small norm");
        if self.is_real() {
            let neg1 = b < 0 && b * b > d;
            let neg2 = b < 0 || b * b < d;
            s |= (neg1 as u8) << SIGN_SHIFT | (neg2 as u8) << (SIGN_SHIFT + 1);
        }
        s
    }

    pub fn sig_trace(&self, tr: &Trace) -> Sig {
        let mut s = if tr.content == 1 {
            0
        } else {
            self.sig_int(tr.content)
        };
        for &(b, c) in &tr.steps {
            s ^= self.sig_gamma(b) ^ self.sig_int(c);
        }
        s
    }

    /// Signature of an exact nonzero element.
    pub fn sig_element(&self, x: &QElement) -> Result<Sig, Error> {
        let y = x.mul_int(&(&x.den * &x.den));
        let (u, v) = y
            .omega_coords()
            .ok_or_else(|| Error::Invariant("not integral".into()))?;
        let mut s = self.two.classify_big(&u, &v)?;
        if self.is_real() {
            s |= ((x.embedding_sign(0) < 0) as u8) << SIGN_SHIFT;
            s |= ((x.embedding_sign(1) < 0) as u8) << (SIGN_SHIFT + 1);
        }
        Ok(s)
    }

    pub fn sig_minus_one(&self) -> Sig {
        self.sig_int(-1)
    }

    // ---- construction

    fn build_imaginary(&mut self) {
        let d = self.d as i128;
        let mut reps = Vec::new();
        let mut a: i128 = 1;
        while 3 * a * a <= -d {
            for b in (-a + 1)..=a {
                if (b - d).rem_euclid(2) != 0 || (b * b - d) % (4 * a) != 0 {
                    continue;
                }
                let c = (b * b - d) / (4 * a);
                if c < a || (c == a && b < 0) {
                    continue;
                }
                if gcd3(a, b, c) != 1 {
                    continue;
                }
                reps.push(QIdeal::new(self.d, a, b));
            }
            a += 1;
        }
        for (i, r) in reps.iter().enumerate() {
            self.reduced.insert(
                (r.a, r.b),
                ReducedEntry {
                    class: i as u32,
                    pos: 0,
                    sig: 0,
                },
            );
        }
        self.h = reps.len();
        self.classes = reps
            .into_iter()
            .map(|rep| ClassInfo {
                rep,
                double: 0,
                double_sig: 0,
            })
            .collect();
        self.torsion_order = match self.d {
            -4 => 4,
            -3 => 6,
            _ => 2,
        };
        self.torsion_sig = if self.d == -4 {
            // i = sqrt(-4)/2 = w + 2
            self.two.classify(2, 1).expect("class of i")
        } else {
            self.sig_minus_one()
        };
        self.selmer.sigs.push(self.torsion_sig);
        self.selmer.kinds.push(SelmerGen::Torsion);
    }

    fn build_real(&mut self) -> Result<(), Error> {
        let d = self.d as i128;
        let s = isqrt(d as u128) as i128;
        let mut all = Vec::new();
        for a in 1..=s {
            // reduced needs b > |sqrt D - 2a| roughly and b < sqrt D
            let lo = (s + 1 - 2 * a).abs().saturating_sub(1).max(1);
            let mut b = lo;
            if (b - d).rem_euclid(2) != 0 {
                b += 1;
            }
            while b <= s {
                if (d - b * b) % (4 * a) == 0 {
                    let cand = QIdeal {
                        d: self.d,
                        g: 1,
                        a,
                        b,
                    };
                    if cand.is_reduced_real() && gcd3(a, b, cand.c()) == 1 {
                        all.push(cand);
                    }
                }
                b += 2;
            }
        }
        let b0 = s - (s - d).rem_euclid(2);
        let principal = QIdeal {
            d: self.d,
            g: 1,
            a: 1,
            b: b0,
        };
        debug_assert!(principal.is_reduced_real());
        let mut order = vec![principal];
        order.extend(all.into_iter().filter(|x| *x != principal));
        let mut reps = Vec::new();
        for start in order {
            if self.reduced.contains_key(&(start.a, start.b)) {
                continue;
            }
            let class = self.cycles.len() as u32;
            let mut cur = start;
            let mut sig: Sig = 0;
            let mut log1 = 0.0f64;
            let mut steps = Vec::new();
            let sd = (d as f64).sqrt();
            loop {
                if steps.len() > 1_000_000 {
                    return Err(Error::ResourceCap("cycle longer than 10^6 steps".into()));
                }
                self.reduced.insert(
                    (cur.a, cur.b),
                    ReducedEntry {
                        class,
                        pos: steps.len() as u32,
                        sig,
                    },
                );
                let (next, (b, c)) = cur.rho();
                sig ^= self.sig_gamma(b) ^ self.sig_int(c);
                log1 += (c.abs() as f64).ln() - ((b as f64 + sd) / 2.0).abs().ln();
                steps.push((b, c));
                cur = next;
                if cur == start {
                    break;
                }
            }
            if class == 0 {
                let mut s = sig;
                let invert = log1 < 0.0;
                let negate = s >> SIGN_SHIFT & 1 == 1;
                if negate {
                    s ^= self.sig_minus_one();
                }
                self.unit_sig = s;
                self.unit_orientation = (invert, negate);
                self.regulator = log1.abs();
            }
            self.cycles.push(steps);
            reps.push(start);
        }
        self.h = reps.len();
        self.classes = reps
            .into_iter()
            .map(|rep| ClassInfo {
                rep,
                double: 0,
                double_sig: 0,
            })
            .collect();
        self.torsion_order = 2;
        self.torsion_sig = self.sig_minus_one();
        self.selmer.sigs.extend([self.torsion_sig, self.unit_sig]);
        self.selmer
            .kinds
            .extend([SelmerGen::Torsion, SelmerGen::Unit]);
        Ok(())
    }

    fn build_group_data(&mut self) {
        for g in 0..self.h {
            let (k, s) = self.mul_classes(g, g);
            self.classes[g].double = k;
            self.classes[g].double_sig = s;
        }
        self.root_of = vec![None; self.h];
        for g in 0..self.h {
            let k = self.classes[g].double;
            if self.root_of[k].is_none() {
                self.root_of[k] = Some(g);
            }
        }
        self.cl2 = (0..self.h)
            .filter(|&g| self.classes[g].double == 0)
            .collect();
        let mut span = vec![0usize];
        for &g in &self.cl2.clone() {
            if span.contains(&g) {
                continue;
            }
            self.cl2_basis.push(g);
            let extra: Vec<usize> = span.iter().map(|&s| self.mul_classes(s, g).0).collect();
            span.extend(extra);
        }
        for &g in &self.cl2_basis.clone() {
            self.selmer.sigs.push(self.classes[g].double_sig);
            self.selmer.kinds.push(SelmerGen::TwoTorsionClass(g));
        }
    }

    // ---- class group

    fn lookup(&self, j: &QIdeal) -> ReducedEntry {
        *self
            .reduced
            .get(&(j.a, j.b))
            .unwrap_or_else(|| panic!("reduced ideal {j:?} missing from table of D = {}", self.d))
    }

    /// (class, sig of xi) with I = xi * R_class.
    pub fn locate(&self, i: &QIdeal) -> (usize, Sig) {
        let (j, tr) = i.reduce();
        let e = self.lookup(&j);
        (e.class as usize, self.sig_trace(&tr) ^ e.sig)
    }

    /// Exact xi with I = xi * R_class.
    pub fn locate_exact(&self, i: &QIdeal) -> (usize, QElement) {
        let (j, tr) = i.reduce();
        let e = self.lookup(&j);
        let xi = tr
            .element(self.d)
            .mul(&self.nu_exact(e.class as usize, e.pos as usize));
        (e.class as usize, xi)
    }

    /// nu with (pos-th ideal of the cycle) = nu * R_class.
    fn nu_exact(&self, class: usize, pos: usize) -> QElement {
        if !self.is_real() || pos == 0 {
            return QElement::one(self.d);
        }
        let mut prod = QElement::one(self.d);
        for &(b, c) in &self.cycles[class][..pos] {
            prod = prod.mul(&ideal::gamma_over_c(self.d, b, c));
        }
        prod.inv()
    }

    /// R_g R_k = delta R_m; returns (m, sig delta).
    pub fn mul_classes(&self, g: usize, k: usize) -> (usize, Sig) {
        let prod = self.classes[g].rep.mul(&self.classes[k].rep);
        self.locate(&prod)
    }

    pub fn mul_classes_exact(&self, g: usize, k: usize) -> (usize, QElement) {
        let prod = self.classes[g].rep.mul(&self.classes[k].rep);
        self.locate_exact(&prod)
    }

    pub fn is_square_in_class_group(&self, class: usize) -> bool {
        self.root_of[class].is_some()
    }

    pub fn class_of(&self, i: &QIdeal) -> usize {
        self.locate(i).0
    }

    /// Exact generator of R_k * conj(R_g)^2 for 2g = k, i.e. an element whose
    /// ideal is R_k times a square; used to close a square class.
    pub fn square_closer_exact(&self, k: usize) -> Option<QElement> {
        let g = self.root_of[k]?;
        let (_, delta) = self.mul_classes_exact(g, g);
        let n = BigInt::from(self.classes[g].rep.norm());
        Some(QElement::rational(self.d, &n * &n).div(&delta))
    }

    // ---- primes

    pub fn split_prime(&self, p: u64) -> Splitting {
        match kronecker(self.d, p) {
            -1 => Splitting::Inert(QIdeal::with_content(
                self.d,
                p as i128,
                1,
                self.d.rem_euclid(2) as i128,
            )),
            0 => {
                let b = ideal::prime_ideal_b(self.d, p).expect("ramified prime has an ideal");
                Splitting::Ramified(QIdeal::new(self.d, p as i128, b))
            }
            _ => {
                let b = ideal::prime_ideal_b(self.d, p).expect("split prime has an ideal");
                let (b1, b2) = if b >= 0 { (b, -b) } else { (-b, b) };
                Splitting::Split(
                    QIdeal::new(self.d, p as i128, b1),
                    QIdeal::new(self.d, p as i128, b2),
                )
            }
        }
    }

    // ---- units

    /// Fundamental unit (real fields): the unit > 1 generating the units
    /// modulo torsion.
    pub fn fundamental_unit(&self) -> Option<QElement> {
        if !self.is_real() {
            return None;
        }
        let mut prod = QElement::one(self.d);
        for &(b, c) in &self.cycles[0] {
            prod = prod.mul(&ideal::gamma_over_c(self.d, b, c));
        }
        // the cycle unit is prod^-1
        let (invert, negate) = self.unit_orientation;
        let mut eta = if invert { prod } else { prod.inv() };
        if negate {
            eta = eta.neg();
        }
        Some(eta)
    }

    pub fn torsion_generator(&self) -> QElement {
        match self.d {
            -4 => QElement::from_ints(-4, 0, 1, 2),
            -3 => QElement::from_ints(-3, 1, 1, 2),
            _ => QElement::from_ints(self.d, -1, 0, 1),
        }
    }

    fn roots_of_unity(&self) -> Vec<QElement> {
        let z = self.torsion_generator();
        (0..self.torsion_order).map(|k| z.pow(k)).collect()
    }

    /// Residue at s = 1 of the Dedekind zeta function.
    pub fn zeta_residue(&self) -> f64 {
        let sd = (self.d.abs() as f64).sqrt();
        if self.is_real() {
            4.0 * self.h as f64 * self.regulator / (2.0 * sd)
        } else {
            2.0 * std::f64::consts::PI * self.h as f64 / (self.torsion_order as f64 * sd)
        }
    }

    // ---- Selmer group

    pub fn selmer_group(&self) -> &SelmerGroup {
        &self.selmer
    }

    /// Exact Selmer basis elements.
    pub fn selmer_elements(&self) -> Vec<QElement> {
        self.selmer
            .kinds
            .iter()
            .map(|k| match *k {
                SelmerGen::Torsion => self.torsion_generator(),
                SelmerGen::Unit => self.fundamental_unit().expect("real field"),
                SelmerGen::TwoTorsionClass(g) => self.mul_classes_exact(g, g).1,
            })
            .collect()
    }

    /// Coordinates of a virtual unit in the Selmer basis, via quadratic
    /// characters at auxiliary split primes.
    pub fn selmer_coords(&self, x: &QElement) -> Option<usize> {
        self.selmer_coords_with(&self.selmer_elements(), x)
    }

    /// As `selmer_coords` with precomputed exact basis elements.
    pub fn selmer_coords_with(&self, basis: &[QElement], x: &QElement) -> Option<usize> {
        let r = basis.len();
        let nx = x.norm_num() * &x.den;
        let mut rows: Vec<(u64, bool)> = Vec::new(); // (bitmask over basis, value for x)
        let mut rank_rows: Vec<u64> = Vec::new();
        let bad: Vec<BigInt> = basis.iter().map(|b| b.norm_num() * &b.den).collect();
        let mut p = 101u64;
        let mut extra = 0;
        while rank_rows.len() < r || extra < 8 {
            p += 2;
            if p > 1_000_000 {
                return None;
            }
            if !crate::arith::is_prime(p) || kronecker(self.d, p) != 1 {
                continue;
            }
            let pb = BigInt::from(p);
            if (&nx % &pb).is_zero() || bad.iter().any(|b| (b % &pb).is_zero()) {
                continue;
            }
            let rt = ideal::prime_ideal_b(self.d, p).unwrap();
            let chi = |e: &QElement| -> bool { residue_symbol(e, rt, p) };
            let mut mask = 0u64;
            for (i, b) in basis.iter().enumerate() {
                if chi(b) {
                    mask |= 1 << i;
                }
            }
            rows.push((mask, chi(x)));
            if insert_row(&mut rank_rows, mask) {
                continue;
            }
            if rank_rows.len() >= r {
                extra += 1;
            }
        }
        // solve by brute force over the 2^r coordinate vectors
        (0..(1usize << r)).find(|&u| {
            rows.iter()
                .all(|&(m, v)| ((m & u as u64).count_ones() & 1 == 1) == v)
        })
    }

    // ---- genus theory

    /// Genus vector of an ideal: one bit per prime discriminant except the
    /// last, bit set where the character is -1.
    pub fn genus_vector(&self, i: &QIdeal) -> u32 {
        let t = self.prime_discriminants.len();
        let mut v = 0u32;
        let f = factor(i.norm() as u64);
        for &(p, e) in &f.factors {
            if e % 2 == 0 && self.d % p as i64 != 0 {
                continue;
            }
            let mut bits = 0u32;
            let ram = self
                .prime_discriminants
                .iter()
                .position(|&q| q % p as i64 == 0);
            for (j, &q) in self.prime_discriminants.iter().enumerate() {
                if Some(j) == ram {
                    continue;
                }
                if kronecker(q, p) == -1 {
                    bits |= 1 << j;
                }
            }
            if let Some(j) = ram {
                if bits.count_ones() % 2 == 1 {
                    bits |= 1 << j;
                }
            }
            if e % 2 == 1 {
                v ^= bits;
            }
        }
        v & ((1u32 << (t - 1)) - 1)
    }

    /// Genus vector of a principal ideal with a generator of negative norm.
    fn negative_norm_genus(&self) -> u32 {
        let t = self.prime_discriminants.len();
        let mut v = 0;
        for (j, &q) in self.prime_discriminants.iter().enumerate().take(t - 1) {
            if q < 0 {
                v |= 1 << j;
            }
        }
        v
    }

    pub fn is_square_class(&self, i: &QIdeal) -> bool {
        self.genus_is_square(self.genus_vector(i))
    }

    /// Is a class with this genus vector a square in Cl(K)?
    pub fn genus_is_square(&self, v: u32) -> bool {
        v == 0 || (self.is_real() && v == self.negative_norm_genus())
    }

    pub fn genus_character_count(&self) -> usize {
        self.prime_discriminants.len() - 1
    }

    // ---- principal generators

    pub fn principal_generator(&self, i: &QIdeal) -> Option<QElement> {
        let (class, xi) = self.locate_exact(i);
        if class != 0 {
            return None;
        }
        Some(self.canonical_generator(&xi))
    }

    /// Canonical representative of x times units: balanced against the
    /// fundamental unit and positive at the first embedding (real fields);
    /// smallest with positive coordinates among root-of-unity multiples
    /// (imaginary fields).
    pub fn canonical_generator(&self, x: &QElement) -> QElement {
        if self.is_real() {
            let eps = self.fundamental_unit().unwrap();
            let eps_inv = eps.inv();
            let mut y = x.clone();
            for _ in 0..64 {
                let t = y.log_abs_embedding(0) - y.log_abs_embedding(1);
                let k = (t / (2.0 * self.regulator)).round() as i64;
                if k == 0 {
                    break;
                }
                let m = if k > 0 { &eps_inv } else { &eps };
                y = y.mul(&m.pow(k.unsigned_abs() as u32));
            }
            if y.embedding_sign(0) < 0 {
                y = y.neg();
            }
            y
        } else {
            let key = |e: &QElement| {
                let a = BigRational::new(e.a.clone(), e.den.clone());
                let b = BigRational::new(e.b.clone(), e.den.clone());
                (!a.is_positive(), b.is_negative(), a.abs(), b.abs())
            };
            self.roots_of_unity()
                .iter()
                .map(|u| x.mul(u))
                .min_by(|p, q| key(p).cmp(&key(q)))
                .unwrap()
        }
    }
}

/// Is x a non-square modulo the degree-one prime [p, (b + sqrt D)/2]?
fn residue_symbol(x: &QElement, b: i128, p: u64) -> bool {
    // sqrt D = -b mod the prime
    let pb = BigInt::from(p);
    let num = (&x.a - &x.b * BigInt::from(b)) % &pb;
    let den = &x.den % &pb;
    let v = (num * den).mod_floor_u(p);
    crate::arith::kronecker(v as i64, p) == -1
}

trait ModU {
    fn mod_floor_u(&self, p: u64) -> u64;
}

impl ModU for BigInt {
    fn mod_floor_u(&self, p: u64) -> u64 {
        use num_integer::Integer;
        use num_traits::ToPrimitive;
        self.mod_floor(&BigInt::from(p)).to_u64().unwrap()
    }
}

fn insert_row(rows: &mut Vec<u64>, mut m: u64) -> bool {
    for &r in rows.iter() {
        let top = 63 - r.leading_zeros();
        if m >> top & 1 == 1 {
            m ^= r;
        }
    }
    if m == 0 {
        return false;
    }
    rows.push(m);
    rows.sort_by(|a, b| b.cmp(a));
    true
}

fn gcd3(a: i128, b: i128, c: i128) -> i128 {
    use num_integer::Integer;
    a.gcd(&b).gcd(&c)
}

/// Prime discriminants whose product is D: odd ones ascending, then the
/// 2-part (-4, 8 or -8) if present.
pub fn prime_discriminants(d: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut rest = d;
    let f = factor(d.unsigned_abs());
    for &(p, _) in &f.factors {
        if p == 2 {
            continue;
        }
        let ps = if p % 4 == 1 { p as i64 } else { -(p as i64) };
        out.push(ps);
        rest /= ps;
    }
    if rest != 1 {
        out.push(rest);
    }
    out
}

/// Memoizing registry of fields keyed by D.
#[derive(Default)]
pub struct FieldRegistry {
    map: RwLock<HashMap<i64, Arc<QuadraticField>>>,
}

impl FieldRegistry {
    pub fn get(&self, d: i64) -> Result<Arc<QuadraticField>, Error> {
        if let Some(f) = self.map.read().unwrap().get(&d) {
            return Ok(f.clone());
        }
        let f = Arc::new(QuadraticField::new(d)?);
        self.map
            .write()
            .unwrap()
            .entry(d)
            .or_insert_with(|| f.clone());
        Ok(f)
    }
}

pub fn make_field(d: i64) -> Result<QuadraticField, Error> {
    QuadraticField::new(d)
}

impl QuadraticField {
    /// Rank of the 2-torsion of the class group.
    pub fn cl2_rank(&self) -> usize {
        self.cl2_basis.len()
    }

    /// Expected Selmer rank r_u + 1 + rk Cl[2].
    pub fn selmer_rank_formula(&self) -> usize {
        (self.is_real() as usize) + 1 + self.cl2_rank()
    }

    pub fn one(&self) -> QElement {
        QElement::one(self.d)
    }

    pub fn is_one(x: &QElement) -> bool {
        x.b.is_zero() && x.a == x.den && x.den.is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_numbers() {
        let known = [
            (-3, 1),
            (-4, 1),
            (-20, 2),
            (-23, 3),
            (-84, 4),
            (-3299, 27),
            (5, 1),
            (8, 1),
            (40, 2),
            (229, 3),
            (4 * 79, 3),
        ];
        for (d, h) in known {
            assert_eq!(QuadraticField::new(d).unwrap().h, h, "D = {d}");
        }
    }

    #[test]
    fn fundamental_units() {
        let f = QuadraticField::new(8).unwrap();
        assert_eq!(
            f.fundamental_unit().unwrap(),
            QElement::from_ints(8, 2, 1, 2)
        );
        let f = QuadraticField::new(5).unwrap();
        assert_eq!(
            f.fundamental_unit().unwrap(),
            QElement::from_ints(5, 1, 1, 2)
        );
        let f = QuadraticField::new(12).unwrap();
        assert_eq!(
            f.fundamental_unit().unwrap(),
            QElement::from_ints(12, 4, 1, 2)
        );
        for d in [13i64, 17, 21, 24, 28, 29, 33, 40, 41, 44, 229, 940, 1365] {
            let f = QuadraticField::new(d).unwrap();
            let e = f.fundamental_unit().unwrap();
            assert!(e.is_integral());
            let n = e.norm();
            assert!(n == BigRational::one() || n == -BigRational::one(), "D={d}");
            assert!(e.log_abs_embedding(0) > 0.0);
            assert_eq!(f.sig_element(&e).unwrap(), f.unit_sig, "D={d}");
        }
    }

    #[test]
    fn selmer_orders() {
        assert_eq!(QuadraticField::new(-4).unwrap().selmer.order(), 2);
        assert_eq!(QuadraticField::new(8).unwrap().selmer.order(), 4);
        assert_eq!(QuadraticField::new(-20).unwrap().selmer.order(), 4);
        for d in [
            -84i64,
            -3299,
            40,
            229,
            1365,
            -4 * 5 * 13,
            3 * 4 * 5 * 7 * 11,
        ] {
            let f = QuadraticField::new(d).unwrap();
            assert_eq!(f.selmer.rank(), f.selmer_rank_formula());
            for (x, s) in f.selmer_elements().iter().zip(&f.selmer.sigs) {
                assert_eq!(f.sig_element(x).unwrap(), *s, "D={d}");
            }
        }
    }

    #[test]
    fn square_class_matches_class_table() {
        for d in [
            -20i64,
            -84,
            -3299,
            -4 * 5 * 13,
            40,
            229,
            1365,
            3 * 4 * 5 * 7 * 11,
            136,
            221,
        ] {
            let f = QuadraticField::new(d).unwrap();
            for p in crate::arith::primes_up_to(60) {
                let ids = match f.split_prime(p) {
                    Splitting::Split(a, b) => vec![a, b],
                    Splitting::Ramified(a) | Splitting::Inert(a) => vec![a],
                };
                for i in ids {
                    let k = f.class_of(&i);
                    assert_eq!(
                        f.is_square_class(&i),
                        f.is_square_in_class_group(k),
                        "D={d} p={p}"
                    );
                }
            }
        }
    }

    #[test]
    fn generators() {
        let f = QuadraticField::new(8).unwrap();
        let Splitting::Ramified(p2) = f.split_prime(2) else {
            panic!()
        };
        assert_eq!(
            f.principal_generator(&p2),
            Some(QElement::from_ints(8, 0, 1, 2))
        );
        assert_eq!(
            f.principal_generator(&QIdeal::unit(8)),
            Some(QElement::one(8))
        );
        let g = QuadraticField::new(-20).unwrap();
        let Splitting::Ramified(q2) = g.split_prime(2) else {
            panic!()
        };
        assert!(g.principal_generator(&q2).is_none());
        assert!(!g.is_square_class(&q2));
        assert!(g.is_square_class(&q2.mul(&q2)));
        let h = QuadraticField::new(-4).unwrap();
        assert!(matches!(h.split_prime(5), Splitting::Split(..)));
        assert!(matches!(h.split_prime(3), Splitting::Inert(..)));
        assert!(matches!(h.split_prime(2), Splitting::Ramified(..)));
    }

    #[test]
    fn located_elements_generate() {
        for d in [-84i64, 229, 1365, 40] {
            let f = QuadraticField::new(d).unwrap();
            for p in [3u64, 5, 7, 11, 13] {
                if let Splitting::Split(a, _) | Splitting::Ramified(a) = f.split_prime(p) {
                    let (k, xi) = f.locate_exact(&a);
                    assert_eq!(f.sig_element(&xi).unwrap(), f.locate(&a).1);
                    let r = f.classes[k].rep;
                    let n = xi.norm() * BigRational::from_integer(r.norm().into());
                    assert_eq!(n.abs(), BigRational::from_integer(a.norm().into()));
                }
            }
        }
    }

    #[test]
    fn selmer_coordinates() {
        for d in [-84i64, 229, 40] {
            let f = QuadraticField::new(d).unwrap();
            let els = f.selmer_elements();
            for u in 0..f.selmer.order() {
                let mut x = QElement::one(d);
                for (i, e) in els.iter().enumerate() {
                    if u >> i & 1 == 1 {
                        x = x.mul(e);
                    }
                }
                let x = x.mul(&QElement::from_ints(d, 3, 1, 1).pow(2));
                assert_eq!(f.selmer_coords(&x), Some(u));
            }
        }
    }
}
