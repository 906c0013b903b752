//! Quadratic extensions L = K(sqrt alpha) of a quadratic field K.
//!
//! Extensions are enumerated as pairs (a, u): a a squarefree ideal whose
//! class is a square, u an element of the Selmer group. For each a we fix
//! alpha_0 with alpha_0 O_K = a * (square ideal) and twist by u. Everything
//! the counts need (relative discriminant norm, flipped field, J, type at
//! infinity) is read off the signature of alpha = alpha_0 u and the norm of
//! a, so exact generators are only built when records are requested.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, fundamental_discriminant_of, is_squarefree, isqrt, valuation};
use crate::localalg::{qp_disc_exp, qp_width, InfType, LocalKind};
use crate::quadfield::{QElement, QIdeal, QuadraticField, Sig, Splitting, SIGN_SHIFT};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GaloisType {
    D4,
    C4,
    V4,
}

impl GaloisType {
    pub fn name(self) -> &'static str {
        match self {
            GaloisType::D4 => "D4",
            GaloisType::C4 => "C4",
            GaloisType::V4 => "V4",
        }
    }
}

/// J = q^2 with q = 2^i2 * d_odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JData {
    pub j: u64,
    pub q: u64,
    pub i2: u32,
    pub d_odd: u64,
}

pub fn j_invariant(n_rel: u64, d_flip: i64) -> Result<JData, Error> {
    let df = d_flip.unsigned_abs();
    if df == 0 || n_rel % df != 0 {
        return Err(Error::Invariant(format!(
            "N_rel = {n_rel} not divisible by |D_flip| = {df}"
        )));
    }
    let j = n_rel / df;
    let q = isqrt(j as u128) as u64;
    if q * q != j {
        return Err(Error::Invariant(format!(
            "J = {j} is not a square (N_rel = {n_rel}, D_flip = {d_flip})"
        )));
    }
    let i2 = q.trailing_zeros();
    let d_odd = q >> i2;
    if i2 > 3 || !is_squarefree(d_odd) {
        return Err(Error::Invariant(format!(
            "q = {q} outside 2^i * odd squarefree with i <= 3"
        )));
    }
    Ok(JData { j, q, i2, d_odd })
}

/// Fundamental discriminant of Q(sqrt m) for squarefree m != 1.
fn fund_of_squarefree(m: i64) -> i64 {
    if m.rem_euclid(4) == 1 {
        m
    } else {
        4 * m
    }
}

fn rational_square(x: &num_rational::BigRational) -> bool {
    let is_sq = |n: &BigInt| {
        !n.is_negative() && {
            let r = n.sqrt();
            &r * &r == *n
        }
    };
    is_sq(x.numer()) && is_sq(x.denom())
}

pub fn galois_type(f: &QuadraticField, alpha: &QElement) -> Result<GaloisType, Error> {
    if alpha.is_zero() || alpha.sqrt().is_some() {
        return Err(Error::Degenerate("alpha is a square in K".into()));
    }
    let n = alpha.norm();
    if rational_square(&n) {
        return Ok(GaloisType::V4);
    }
    let nd = n * num_rational::BigRational::from_integer(BigInt::from(f.d));
    Ok(if rational_square(&nd) {
        GaloisType::C4
    } else {
        GaloisType::D4
    })
}

/// Fundamental discriminant of Q(sqrt N(alpha)).
pub fn flipped_discriminant(f: &QuadraticField, alpha: &QElement) -> Result<i64, Error> {
    if galois_type(f, alpha)? == GaloisType::V4 {
        return Err(Error::Degenerate("norm of alpha is a square".into()));
    }
    let n = alpha.norm();
    let m = n.numer() * n.denom();
    let m = m
        .to_i64()
        .ok_or_else(|| Error::ResourceCap("norm too large".into()))?;
    fundamental_discriminant_of(m)
        .ok_or_else(|| Error::Degenerate("norm of alpha is a square".into()))
}

fn ideal_pow(i: &QIdeal, e: u32) -> QIdeal {
    let mut r = QIdeal::unit(i.d);
    for _ in 0..e {
        r = r.mul(i);
    }
    r
}

/// v_P(x) for integral nonzero x.
fn ideal_valuation(p: &QIdeal, x: &QElement) -> u32 {
    let mut v = 0;
    let mut pk = *p;
    while pk.contains(x) {
        v += 1;
        pk = pk.mul(p);
    }
    v
}

/// Relative discriminant of K(sqrt alpha)/K as an ideal of K: the odd part
/// is the odd squarefree part of alpha O_K, the part above 2 comes from the
/// 2-adic square class of alpha.
pub fn relative_discriminant(f: &QuadraticField, alpha: &QElement) -> Result<QIdeal, Error> {
    if alpha.is_zero() || alpha.sqrt().is_some() {
        return Err(Error::Degenerate("alpha is a square in K".into()));
    }
    let x = alpha.mul_int(&(&alpha.den * &alpha.den));
    let nn = x.norm_num().abs();
    let nn = nn
        .to_u64()
        .ok_or_else(|| Error::ResourceCap("norm of alpha exceeds 64 bits".into()))?;
    let mut out = QIdeal::unit(f.d);
    for (p, _) in factorize(nn)?.factors {
        if p == 2 {
            continue;
        }
        let ps = match f.split_prime(p) {
            Splitting::Split(a, b) => vec![a, b],
            Splitting::Inert(a) | Splitting::Ramified(a) => vec![a],
        };
        for pr in ps {
            if ideal_valuation(&pr, &x) % 2 == 1 {
                out = out.mul(&pr);
            }
        }
    }
    let (u, v) = x.omega_coords().expect("integral");
    let c = f.two.classify_big(&u, &v)?;
    let two_part = match f.two.kind {
        LocalKind::Split => {
            let w = qp_width(2);
            let mask = (1u8 << w) - 1;
            let mut t = QIdeal::unit(f.d);
            for i in 0..2 {
                let e = qp_disc_exp(2, c >> (w * i as u32) & mask);
                let pr = QIdeal::new(f.d, 2, f.two.split_component_b(i));
                t = t.mul(&ideal_pow(&pr, e));
            }
            t
        }
        LocalKind::Ramified => {
            let pr = QIdeal::new(
                f.d,
                2,
                crate::quadfield::ideal::prime_ideal_b(f.d, 2).unwrap(),
            );
            ideal_pow(&pr, f.two.disc_exp(c))
        }
        LocalKind::Unramified => QIdeal::unit(f.d).scale(1 << (f.two.disc_exp(c) / 2)),
    };
    Ok(out.mul(&two_part))
}

/// Allowed local cells for extensions of a fixed K: at each listed prime the
/// set of (v_p(N_rel), v_p(D_flip)); at infinity a set of pair types.
/// Unlisted places are unconstrained.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalSpecK {
    pub cells: BTreeMap<u64, BTreeSet<(u32, u32)>>,
    pub inf: Option<BTreeSet<InfType>>,
}

impl LocalSpecK {
    pub fn complete() -> LocalSpecK {
        LocalSpecK::default()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.is_empty() && self.inf.is_none()
    }

    pub fn allows(&self, h: &ExtensionHit) -> bool {
        if let Some(inf) = &self.inf {
            if !inf.contains(&h.inf) {
                return false;
            }
        }
        self.cells.iter().all(|(&p, set)| set.contains(&h.cell(p)))
    }
}

/// One extension found by the enumerator, without its exact generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtensionHit {
    pub d_k: i64,
    /// Squarefree part of alpha O_K.
    pub ideal: QIdeal,
    /// Selmer coordinates of alpha / alpha_0.
    pub twist: usize,
    pub sig: Sig,
    pub n_rel: u64,
    /// Squarefree m with N(alpha) in m Q^2.
    pub norm_class: i64,
    pub galois: GaloisType,
    /// Discriminant of Q(sqrt m); 0 for V4.
    pub d_flip: i64,
    pub inf: InfType,
    /// Zero unless D4.
    pub j: JData,
}

impl ExtensionHit {
    pub fn conductor(&self) -> u64 {
        self.d_k.unsigned_abs() * self.n_rel
    }

    /// (v_p(N_rel), v_p(D_flip)).
    pub fn cell(&self, p: u64) -> (u32, u32) {
        (
            valuation(self.n_rel as u128, p),
            valuation(self.d_flip.unsigned_abs() as u128, p),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct D4Record {
    pub d_k: i64,
    pub alpha: QElement,
    pub n_rel: u64,
    pub conductor: u64,
    pub d_flip: i64,
    pub j: u64,
    pub q: u64,
    pub i2: u32,
    pub d_odd: u64,
    pub galois_type: GaloisType,
    pub inf: InfType,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    #[serde(rename = "D_K")]
    d_k: i64,
    alpha: [String; 3],
    #[serde(rename = "N_rel")]
    n_rel: u64,
    conductor: u64,
    #[serde(rename = "D_flip")]
    d_flip: i64,
    #[serde(rename = "J")]
    j: u64,
    i2: u32,
    d_odd: u64,
    galois_type: GaloisType,
    inf: String,
}

impl D4Record {
    pub fn d_rel(&self, f: &QuadraticField) -> Result<QIdeal, Error> {
        relative_discriminant(f, &self.alpha)
    }

    pub fn to_jsonl(&self) -> String {
        let line = RecordLine {
            d_k: self.d_k,
            alpha: [
                self.alpha.a.to_string(),
                self.alpha.b.to_string(),
                self.alpha.den.to_string(),
            ],
            n_rel: self.n_rel,
            conductor: self.conductor,
            d_flip: self.d_flip,
            j: self.j,
            i2: self.i2,
            d_odd: self.d_odd,
            galois_type: self.galois_type,
            inf: self.inf.name().to_string(),
        };
        serde_json::to_string(&line).expect("record serializes")
    }

    pub fn from_jsonl(s: &str) -> Result<D4Record, Error> {
        let l: RecordLine = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        let big = |t: &str| {
            t.parse::<BigInt>()
                .map_err(|e| Error::Schema(format!("alpha: {e}")))
        };
        let den = big(&l.alpha[2])?;
        if den.is_zero() {
            return Err(Error::Schema("alpha: zero denominator".into()));
        }
        let inf = InfType::parse(&l.inf).ok_or_else(|| Error::Schema(format!("inf: {}", l.inf)))?;
        Ok(D4Record {
            d_k: l.d_k,
            alpha: QElement::new(l.d_k, big(&l.alpha[0])?, big(&l.alpha[1])?, den),
            n_rel: l.n_rel,
            conductor: l.conductor,
            d_flip: l.d_flip,
            j: l.j,
            q: isqrt(l.j as u128) as u64,
            i2: l.i2,
            d_odd: l.d_odd,
            galois_type: l.galois_type,
            inf,
        })
    }
}

#[derive(Clone, Debug)]
struct PrimeIdeal {
    ideal: QIdeal,
    norm: u64,
    p: u64,
    above_two: bool,
    /// Lower bound for the factor this prime contributes to N_rel.
    cost: u64,
    genus: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct EnumOptions {
    /// Keep one of each conjugate pair of D4 extensions.
    pub dedup: bool,
    pub include_non_d4: bool,
}

impl Default for EnumOptions {
    fn default() -> EnumOptions {
        EnumOptions {
            dedup: true,
            include_non_d4: false,
        }
    }
}

/// Enumeration context for one field and one bound Y on N(d_{L/K}).
pub struct ExtensionEnumerator<'a> {
    pub f: &'a QuadraticField,
    pub y: u64,
    primes: Vec<PrimeIdeal>,
    twist_sigs: Vec<Sig>,
    disc_exp2: Vec<u32>,
    basis: Option<Vec<QElement>>,
    w_cache: HashMap<i64, usize>,
}

impl<'a> ExtensionEnumerator<'a> {
    pub fn new(f: &'a QuadraticField, y: u64) -> ExtensionEnumerator<'a> {
        let mut primes = Vec::new();
        for p in crate::arith::primes_up_to(y) {
            let (ids, norm) = match f.split_prime(p) {
                Splitting::Split(a, b) => (vec![a, b], p),
                Splitting::Ramified(a) => (vec![a], p),
                Splitting::Inert(a) => (vec![a], p * p),
            };
            let cost = if p == 2 {
                // v(d) = 2 v_P(2) + 1 when P divides alpha to an odd power
                let e = if f.two.kind == LocalKind::Ramified {
                    2
                } else {
                    1
                };
                norm.pow(2 * e + 1)
            } else {
                norm
            };
            if cost > y {
                continue;
            }
            for ideal in ids {
                let genus = f.genus_vector(&ideal);
                primes.push(PrimeIdeal {
                    ideal,
                    norm,
                    p,
                    above_two: p == 2,
                    cost,
                    genus,
                });
            }
        }
        primes.sort_by_key(|q| (q.cost, q.ideal));
        let twist_sigs = (0..f.selmer.order()).map(|u| f.selmer.sig_of(u)).collect();
        let disc_exp2 = (0..f.two.num_classes() as u8)
            .map(|c| f.two.disc_exp(c))
            .collect();
        ExtensionEnumerator {
            f,
            y,
            primes,
            twist_sigs,
            disc_exp2,
            basis: None,
            w_cache: HashMap::new(),
        }
    }

    /// Visit every nontrivial extension with N(d_{L/K}) <= Y, each
    /// K-isomorphism class exactly once.
    pub fn for_each(&self, mut visit: impl FnMut(&ExtensionHit)) -> Result<(), Error> {
        let start = Node {
            ideal: QIdeal::unit(self.f.d),
            odd_norm: 1,
            cost: 1,
            kernel: 1,
            genus: 0,
        };
        self.dfs(0, start, &mut visit)
    }

    fn dfs(
        &self,
        from: usize,
        node: Node,
        visit: &mut impl FnMut(&ExtensionHit),
    ) -> Result<(), Error> {
        if self.f.genus_is_square(node.genus) {
            self.visit_ideal(&node, visit)?;
        }
        for i in from..self.primes.len() {
            let pr = &self.primes[i];
            let cost = node.cost * pr.cost;
            if cost > self.y {
                break;
            }
            let kernel = if node.kernel % pr.p == 0 {
                node.kernel / pr.p
            } else if pr.norm == pr.p {
                node.kernel * pr.p
            } else {
                node.kernel
            };
            let child = Node {
                ideal: node.ideal.mul(&pr.ideal),
                odd_norm: if pr.above_two {
                    node.odd_norm
                } else {
                    node.odd_norm * pr.norm
                },
                cost,
                kernel,
                genus: node.genus ^ pr.genus,
            };
            self.dfs(i + 1, child, visit)?;
        }
        Ok(())
    }

    fn visit_ideal(&self, node: &Node, visit: &mut impl FnMut(&ExtensionHit)) -> Result<(), Error> {
        let f = self.f;
        let (k, sig_xi) = f.locate(&node.ideal);
        let g = f.root_of[k].ok_or_else(|| {
            Error::Invariant(format!(
                "genus test and class group disagree for {:?}",
                node.ideal
            ))
        })?;
        let sig0 = sig_xi ^ f.classes[g].double_sig;
        let real = f.is_real();
        for (u, &ts) in self.twist_sigs.iter().enumerate() {
            if u == 0 && node.ideal.is_unit() {
                continue;
            }
            let sig = sig0 ^ ts;
            let n_rel = node.odd_norm << self.disc_exp2[(sig & 0x3f) as usize];
            if n_rel > self.y {
                continue;
            }
            let (neg_norm, negatives) = if real {
                let s1 = (sig >> SIGN_SHIFT) & 1;
                let s2 = (sig >> (SIGN_SHIFT + 1)) & 1;
                (s1 != s2, (s1 + s2) as u32)
            } else {
                (false, 0)
            };
            let m = if neg_norm {
                -(node.kernel as i64)
            } else {
                node.kernel as i64
            };
            let (galois, d_flip) = if m == 1 {
                (GaloisType::V4, 0)
            } else {
                let df = fund_of_squarefree(m);
                if df == f.d {
                    (GaloisType::C4, df)
                } else {
                    (GaloisType::D4, df)
                }
            };
            let j = if galois == GaloisType::D4 {
                j_invariant(n_rel, d_flip)?
            } else {
                JData {
                    j: 0,
                    q: 0,
                    i2: 0,
                    d_odd: 0,
                }
            };
            visit(&ExtensionHit {
                d_k: f.d,
                ideal: node.ideal,
                twist: u,
                sig,
                n_rel,
                norm_class: m,
                galois,
                d_flip,
                inf: InfType::from_signs(real, negatives),
                j,
            });
        }
        Ok(())
    }

    fn basis(&mut self) -> &[QElement] {
        if self.basis.is_none() {
            self.basis = Some(self.f.selmer_elements());
        }
        self.basis.as_ref().unwrap()
    }

    /// Is this hit the chosen representative of {K(sqrt alpha), K(sqrt
    /// conj alpha)}? Only meaningful for D4 hits.
    pub fn is_canonical(&mut self, h: &ExtensionHit) -> Result<bool, Error> {
        let c = h.ideal.conj();
        if c != h.ideal {
            return Ok(h.ideal < c);
        }
        // conj(alpha) = alpha * N(alpha) modulo squares
        let m = h.norm_class;
        let w = match self.w_cache.get(&m) {
            Some(&w) => w,
            None => {
                let x = QElement::rational(self.f.d, BigInt::from(m));
                let basis = self.basis().to_vec();
                let w = self
                    .f
                    .selmer_coords_with(&basis, &x)
                    .ok_or_else(|| Error::Invariant(format!("norm {m} is not a virtual unit")))?;
                self.w_cache.insert(m, w);
                w
            }
        };
        if w == 0 {
            return Err(Error::Invariant(
                "conjugate extensions coincide for a D4 hit".into(),
            ));
        }
        Ok(h.twist < h.twist ^ w)
    }

    /// Exact Kummer generator of the hit: deterministic in (ideal, twist),
    /// integral, without rational square factors, and balanced against the
    /// square of the fundamental unit.
    pub fn alpha(&mut self, h: &ExtensionHit) -> QElement {
        let f = self.f;
        let (k, xi) = f.locate_exact(&h.ideal);
        let mut a = xi.mul(&f.square_closer_exact(k).expect("class is a square"));
        let basis = self.basis().to_vec();
        for (i, b) in basis.iter().enumerate() {
            if h.twist >> i & 1 == 1 {
                a = a.mul(b);
            }
        }
        let mut a = a.square_class_integral();
        if f.is_real() && f.regulator > 0.0 {
            let eps2 = f.fundamental_unit().unwrap().pow(2);
            let eps2_inv = eps2.inv();
            for _ in 0..64 {
                let t = a.log_abs_embedding(0) - a.log_abs_embedding(1);
                let k = (t / (4.0 * f.regulator)).round() as i64;
                if k == 0 {
                    break;
                }
                let m = if k > 0 { &eps2_inv } else { &eps2 };
                a = a.mul(&m.pow(k.unsigned_abs() as u32));
            }
        }
        a
    }

    pub fn record(&mut self, h: &ExtensionHit) -> D4Record {
        let alpha = self.alpha(h);
        D4Record {
            d_k: h.d_k,
            alpha,
            n_rel: h.n_rel,
            conductor: h.conductor(),
            d_flip: h.d_flip,
            j: h.j.j,
            q: h.j.q,
            i2: h.j.i2,
            d_odd: h.j.d_odd,
            galois_type: h.galois,
            inf: h.inf,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    ideal: QIdeal,
    odd_norm: u64,
    cost: u64,
    /// Squarefree kernel of N(ideal).
    kernel: u64,
    genus: u32,
}

/// All extensions of K with N(d_{L/K}) <= Y satisfying the local spec, with exact
/// generators: D4 ones (one per quartic field when deduplicating), followed
/// by the others if requested. Sorted by (N_rel, D_flip, alpha).
pub fn enumerate_extensions(
    f: &QuadraticField,
    y: u64,
    spec: &LocalSpecK,
    opts: EnumOptions,
) -> Result<Vec<D4Record>, Error> {
    let mut en = ExtensionEnumerator::new(f, y);
    let mut hits = Vec::new();
    en.for_each(|h| {
        if (h.galois == GaloisType::D4 || opts.include_non_d4) && spec.allows(h) {
            hits.push(*h);
        }
    })?;
    let mut out = Vec::new();
    for h in hits {
        if opts.dedup && h.galois == GaloisType::D4 && !en.is_canonical(&h)? {
            continue;
        }
        out.push(en.record(&h));
    }
    out.sort_by(|a, b| {
        (
            a.galois_type,
            a.n_rel,
            a.d_flip,
            &a.alpha.a,
            &a.alpha.b,
            &a.alpha.den,
        )
            .cmp(&(
                b.galois_type,
                b.n_rel,
                b.d_flip,
                &b.alpha.a,
                &b.alpha.b,
                &b.alpha.den,
            ))
    });
    Ok(out)
}

/// Number of D4 quartic fields containing K with N(d_{L/K}) <= Y allowed by
/// the local spec: raw hits come in conjugate pairs with identical invariants.
pub fn count_d4(f: &QuadraticField, y: u64, spec: &LocalSpecK) -> Result<u64, Error> {
    let en = ExtensionEnumerator::new(f, y);
    let mut raw = 0u64;
    en.for_each(|h| {
        if h.galois == GaloisType::D4 && spec.allows(h) {
            raw += 1;
        }
    })?;
    if raw % 2 != 0 {
        return Err(Error::Invariant(format!(
            "odd number {raw} of raw D4 hits for D = {}",
            f.d
        )));
    }
    Ok(raw / 2)
}

pub fn is_one(x: &QElement) -> bool {
    x.b.is_zero() && x.a.is_one() && x.den.is_one()
}
