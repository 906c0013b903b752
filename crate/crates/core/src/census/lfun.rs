//! Dirichlet L-values of quadratic characters, the constants c+ and c-,
//! quadratic-extension counts with local conditions, and empirical checks
//! of the character-sum estimates.

use std::collections::{BTreeMap, BTreeSet};

use libm::erfc;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{
    euler_product, factor, fundamental_discriminants, fundamental_flags, is_square_u128, kronecker,
    primes_up_to, EulerProductSpec, Factorization, Sign,
};
use crate::localalg::{qp_class, qp_disc_exp, qp_width};
use crate::quadfield::QuadraticField;
use crate::relext::ExtensionEnumerator;
use crate::Error;

pub const ZETA2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E1(x) for x > 0.
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let t = term / k as f64;
            sum -= t;
            if t.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Values chi_D(n) for 1 <= n <= m (index 0 unused), built multiplicatively
/// from a smallest-prime-factor table.
pub struct CharTable {
    spf: Vec<u32>,
}

impl CharTable {
    pub fn new(m: usize) -> CharTable {
        let mut spf = vec![0u32; m + 1];
        for i in 2..=m {
            if spf[i] == 0 {
                let mut j = i;
                while j <= m {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        CharTable { spf }
    }

    pub fn len(&self) -> usize {
        self.spf.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self, d: i64, m: usize, out: &mut Vec<i8>) {
        assert!(m <= self.len(), "character table too short");
        out.clear();
        out.resize(m + 1, 0);
        if m >= 1 {
            out[1] = 1;
        }
        for n in 2..=m {
            let p = self.spf[n] as usize;
            out[n] = if p == n {
                kronecker(d, n as u64) as i8
            } else {
                out[p] * out[n / p]
            };
        }
    }
}

/// Number of terms needed by [`l_values`] for conductor q.
pub fn afe_length(q: u64) -> usize {
    (3.4 * (q as f64).sqrt()).ceil() as usize + 2
}

/// (L(1, chi_D), L(2, chi_D)) for a fundamental discriminant D, from the
/// approximate functional equation at the symmetric point. `chi` must
/// hold chi_D(n) for n <= afe_length(|D|). Truncation error is below
/// 1e-14 relative.
pub fn l_values_with(d: i64, chi: &[i8]) -> (f64, f64) {
    let q = d.unsigned_abs() as f64;
    let m = afe_length(d.unsigned_abs()).min(chi.len() - 1);
    let sq = q.sqrt();
    let pi = std::f64::consts::PI;
    let (mut l1, mut l2) = (0.0, 0.0);
    for (n, &c) in chi.iter().enumerate().take(m + 1).skip(1) {
        if c == 0 {
            continue;
        }
        let nf = n as f64;
        let x = pi * nf * nf / q;
        let ex = (-x).exp();
        let ec = erfc(x.sqrt());
        let (t1, t2) = if d > 0 {
            (
                ec / nf + e1(x) / sq,
                ex / (nf * nf) + (2.0 * pi / q) * (ex - (pi * x).sqrt() * ec),
            )
        } else {
            (
                ex / nf + pi * ec / sq,
                ec / (nf * nf) + 2.0 * ex / (nf * sq) + (2.0 * pi * nf / (q * sq)) * e1(x),
            )
        };
        let s = c as f64;
        l1 += s * t1;
        l2 += s * t2;
    }
    (l1, l2)
}

pub fn l_values(d: i64) -> (f64, f64) {
    let m = afe_length(d.unsigned_abs());
    let table = CharTable::new(m);
    let mut chi = Vec::new();
    table.values(d, m, &mut chi);
    l_values_with(d, &chi)
}

/// sum_n chi_D(n) e^{-n/N} / n, truncated once e^{-n/N} < 1e-18. The
/// character is read from one period, so memory is O(|D|) for any N.
pub fn smoothed_l(d: i64, n: f64) -> f64 {
    assert!(n >= 1.0, "smoothing length must be at least 1");
    let m = (n * 18.0 * std::f64::consts::LN_10).ceil() as u64;
    let q = d.unsigned_abs() as usize;
    let table = CharTable::new(q);
    let mut chi = Vec::new();
    table.values(d, q, &mut chi);
    // chi[q] = 0 holds the residue 0 class.
    chi[0] = chi[q];
    let mut s = 0.0;
    let mut c = 0.0;
    for k in 1..=m {
        let x = chi[(k % q as u64) as usize];
        if x == 0 {
            continue;
        }
        let kf = k as f64;
        let y = x as f64 * (-kf / n).exp() / kf - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

/// The smoothed L(1) divided by L(2); the latter from [`l_values`].
pub fn smoothed_ratio(d: i64, n: f64) -> f64 {
    smoothed_l(d, n) / l_values(d).1
}

/// kappa = prod_p (1 + 1/(p+1)^2) / (2 zeta(2)), the density of
/// sum_{0 < +-D < t} L(1)/L(2) per unit t; with its tail bound.
pub fn kappa(p_max: u64) -> (f64, f64) {
    let primes = primes_up_to(p_max);
    let f = |p: u64| {
        let q = (p + 1) as f64;
        1.0 / (q * q)
    };
    // log f = 1/p^2 - 2/p^3 + r(p), |r(p)| <= 4/p^4 once p >= 10.
    let spec = if p_max >= 10 {
        EulerProductSpec {
            local_excess: &f,
            p_max,
            log_series: &[(2, 1.0), (3, -2.0)],
            tail_coefficient: 4.0,
            tail_exponent: 4.0,
        }
    } else {
        EulerProductSpec {
            local_excess: &f,
            p_max,
            log_series: &[],
            tail_coefficient: 1.0,
            tail_exponent: 2.0,
        }
    };
    let (v, err) = euler_product(&spec, &primes).expect("convergent product");
    (v / (2.0 * ZETA2), err / (2.0 * ZETA2))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SignedConstant {
    pub value: f64,
    /// L-value truncation and kappa tail, propagated.
    pub quadrature_err: f64,
    /// Integral of the error term beyond T, assuming |E(t)| <= C t^{13/18}
    /// with C fitted on [T/100, T].
    pub tail_err: f64,
    pub fit_constant: f64,
    /// max |E(t)| / t^{13/18} over the whole computed range.
    pub shape_ratio_max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConstantEstimate {
    /// c+ + c-/2 (or the single sign requested).
    pub value: f64,
    pub uncertainty: f64,
    pub quadrature_err: f64,
    pub tail_err: f64,
    pub t: u64,
    pub plus: Option<SignedConstant>,
    pub minus: Option<SignedConstant>,
    pub kappa: f64,
}

impl ConstantEstimate {
    /// The coefficient of X this constant contributes to the D4 count:
    /// each K contributes Y L(1)/(2^{i(K)} zeta(2) L(2)) extensions.
    pub fn count_coefficient(&self) -> (f64, f64) {
        (self.value / ZETA2, self.uncertainty / ZETA2)
    }
}

/// L(1)/L(2) for all fundamental D with 0 < +-D < t, ordered by |D|.
pub fn ratio_table(t: u64, sign: Sign) -> Vec<(i64, f64)> {
    let ds = fundamental_discriminants(0, t.saturating_sub(1), sign, None, None);
    let table = CharTable::new(afe_length(t));
    let mut chi = Vec::new();
    ds.into_iter()
        .map(|d| {
            table.values(d, afe_length(d.unsigned_abs()), &mut chi);
            let (l1, l2) = l_values_with(d, &chi);
            (d, l1 / l2)
        })
        .collect()
}

fn signed_constant(rows: &[(i64, f64)], t: u64, kappa: (f64, f64)) -> SignedConstant {
    let tf = t as f64;
    let (k, kerr) = kappa;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut s = 0.0;
    let mut trunc = 0.0;
    let mut fit: f64 = 0.0;
    let mut shape: f64 = 0.0;
    let shape_exp = 13.0 / 18.0;
    for &(d, r) in rows {
        let a = d.unsigned_abs() as f64;
        let y = r * (1.0 / a - 1.0 / tf) - comp;
        let z = sum + y;
        comp = (z - sum) - y;
        sum = z;
        trunc += 1e-14 * r.abs() / a;
        // E just before and just after the jump at |D|
        let before = s - k * a;
        s += r;
        let after = s - k * a;
        let ratio = before.abs().max(after.abs()) / a.powf(shape_exp);
        shape = shape.max(ratio);
        if a >= tf / 100.0 {
            fit = fit.max(ratio);
        }
    }
    let end = (s - k * tf).abs() / tf.powf(shape_exp);
    fit = fit.max(end);
    let tail_exp = 1.0 - shape_exp;
    SignedConstant {
        value: sum - k * tf.ln(),
        quadrature_err: trunc + kerr * (tf.ln() + s / tf),
        tail_err: fit * tf.powf(-tail_exp) / tail_exp,
        fit_constant: fit,
        shape_ratio_max: shape.max(end),
        count: rows.len(),
    }
}

/// Estimate c = c+ + c-/2 from fundamental discriminants with |D| < T. The
/// estimate equals int_1^T E(t)/t^2 dt exactly (E is a step function minus
/// a line), so the only errors are L-value truncation, the kappa tail, and
/// the omitted integral beyond T.
pub fn estimate_c(t: u64, sign: Sign) -> Result<ConstantEstimate, Error> {
    if !(10..=10_000_000).contains(&t) {
        return Err(Error::InvalidInput(format!(
            "estimate_c: T = {t} outside [10, 1e7]"
        )));
    }
    let kap = kappa(1_000_000);
    let plus = match sign {
        Sign::Negative => None,
        _ => Some(signed_constant(&ratio_table(t, Sign::Positive), t, kap)),
    };
    let minus = match sign {
        Sign::Positive => None,
        _ => Some(signed_constant(&ratio_table(t, Sign::Negative), t, kap)),
    };
    let weight_minus = if plus.is_some() { 0.5 } else { 1.0 };
    let mut value = 0.0;
    let mut qerr = 0.0;
    let mut terr = 0.0;
    if let Some(p) = &plus {
        value += p.value;
        qerr += p.quadrature_err;
        terr += p.tail_err;
    }
    if let Some(m) = &minus {
        value += weight_minus * m.value;
        qerr += weight_minus * m.quadrature_err;
        terr += weight_minus * m.tail_err;
    }
    Ok(ConstantEstimate {
        value,
        uncertainty: qerr + terr,
        quadrature_err: qerr,
        tail_err: terr,
        t,
        plus,
        minus,
        kappa: kap.0,
    })
}

// ---------------------------------------------------------------------------
// Quadratic extensions with local conditions

/// Local conditions on quadratic fields Q(sqrt D): allowed Q_p square
/// classes of D at finitely many primes and allowed signs of D.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QuadSpec {
    pub primes: BTreeMap<u64, BTreeSet<u8>>,
    /// Subset of {1, -1}.
    pub signs: Option<BTreeSet<i8>>,
}

impl QuadSpec {
    /// JSON: {"<p>": [class names], "sign": ["+", "-"]}; omitted keys
    /// leave that place free.
    pub fn from_json(v: &serde_json::Value) -> Result<QuadSpec, Error> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Schema("quadratic spec: expected a JSON object".into()))?;
        let mut out = QuadSpec::default();
        for (key, val) in obj {
            let names: Vec<&str> = val
                .as_array()
                .and_then(|a| a.iter().map(|x| x.as_str()).collect::<Option<Vec<_>>>())
                .ok_or_else(|| Error::Schema(format!("{key}: expected a list of strings")))?;
            if key == "sign" {
                let mut s = BTreeSet::new();
                for n in names {
                    s.insert(match n {
                        "+" => 1,
                        "-" => -1,
                        _ => return Err(Error::Schema(format!("sign: unknown value {n:?}"))),
                    });
                }
                out.signs = Some(s);
                continue;
            }
            let p: u64 = key
                .parse()
                .ok()
                .filter(|&p| crate::arith::is_prime(p))
                .ok_or_else(|| {
                    Error::Schema(format!("key {key:?}: expected a prime or \"sign\""))
                })?;
            let mut set = BTreeSet::new();
            for n in names {
                set.insert(
                    crate::localalg::parse_qp_class(p, n)
                        .ok_or_else(|| Error::Schema(format!("prime {p}: unknown class {n:?}")))?,
                );
            }
            out.primes.insert(p, set);
        }
        Ok(out)
    }

    pub fn allows(&self, d: i64) -> bool {
        if let Some(s) = &self.signs {
            if !s.contains(&(d.signum() as i8)) {
                return false;
            }
        }
        self.primes
            .iter()
            .all(|(&p, set)| set.contains(&qp_class(p, d as i128)))
    }
}

/// (1 + 1/p)^{-1} sum_{c in set} 1/(|Aut| p^{v_p(disc c)}), with |Aut| = 2
/// for every quadratic etale algebra; equals 1 when the set is everything.
pub fn quad_local_factor(p: u64, set: Option<&BTreeSet<u8>>) -> Rational64 {
    let all: BTreeSet<u8> = (0..(1u8 << qp_width(p))).collect();
    let set = set.unwrap_or(&all);
    let mass: Rational64 = set
        .iter()
        .map(|&c| Rational64::new(1, 2 * (p as i64).pow(qp_disc_exp(p, c))))
        .sum();
    mass / (Rational64::one() + Rational64::new(1, p as i64))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct QuadCount {
    pub base: i64,
    pub x: u64,
    pub exact: u64,
    pub prediction: f64,
    pub prediction_err: f64,
    /// Exact local factors at the constrained primes (as strings p:r).
    pub local_factors: Vec<(u64, String)>,
    pub mu_inf: String,
}

impl QuadCount {
    pub fn ratio(&self) -> f64 {
        self.exact as f64 / self.prediction
    }
}

/// Quadratic fields with |D| <= X satisfying the local spec, against
/// X mu_inf prod_p factor_p / zeta(2).
pub fn quad_count_q(spec: &QuadSpec, x: u64) -> Result<QuadCount, Error> {
    if x > 100_000_000 {
        return Err(Error::ResourceCap(format!(
            "quad_count_q: X = {x} above 1e8"
        )));
    }
    let flags = fundamental_flags(x);
    let mut exact = 0u64;
    for a in 1..=x as usize {
        for (ok, s) in [(flags.pos[a], 1i64), (flags.neg[a], -1i64)] {
            if ok && spec.allows(s * a as i64) {
                exact += 1;
            }
        }
    }
    let mu_inf: Rational64 = [1i8, -1]
        .iter()
        .filter(|s| spec.signs.as_ref().is_none_or(|t| t.contains(s)))
        .map(|_| Rational64::new(1, 2))
        .sum();
    let mut prod = mu_inf;
    let mut factors = Vec::new();
    for (&p, set) in &spec.primes {
        let f = quad_local_factor(p, Some(set));
        prod *= f;
        factors.push((p, f.to_string()));
    }
    let prediction = x as f64 * prod.to_f64().unwrap() / ZETA2;
    Ok(QuadCount {
        base: 1,
        x,
        exact,
        prediction,
        prediction_err: prediction * 1e-15,
        local_factors: factors,
        mu_inf: mu_inf.to_string(),
    })
}

/// Quadratic extensions L/K with N(d_{L/K}) <= Y, against
/// Y mu_inf Res zeta_K / zeta_K(2), mu_inf = 1 (real) or 1/2 (imaginary).
pub fn quad_count_over(f: &QuadraticField, y: u64) -> Result<QuadCount, Error> {
    let en = ExtensionEnumerator::new(f, y);
    let mut exact = 0u64;
    en.for_each(|_| exact += 1)?;
    let (_, l2) = l_values(f.d);
    let mu_inf = if f.d > 0 {
        Rational64::one()
    } else {
        Rational64::new(1, 2)
    };
    let prediction = y as f64 * mu_inf.to_f64().unwrap() * f.zeta_residue() / (ZETA2 * l2);
    Ok(QuadCount {
        base: f.d,
        x: y,
        exact,
        prediction,
        prediction_err: prediction * 1e-12,
        local_factors: Vec::new(),
        mu_inf: mu_inf.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Character sums over fundamental discriminants

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CharSumReport {
    pub n: u64,
    pub d: u64,
    pub residue_mod8: Option<u8>,
    pub x: u64,
    pub terms: usize,
    pub observed: i64,
    pub main: f64,
    pub residual: f64,
    /// residual / (X^{1/2} (n d)^{1/4})
    pub normalized: f64,
}

/// Share of positive fundamental discriminants in a 2-adic class:
/// D = 1, 5 mod 8 one third each, D = 4 mod 8 (that is 4m, m = 3 mod 4) and
/// D = 0 mod 8 one sixth each.
fn share_mod8(a: u8) -> Option<Rational64> {
    match a {
        1 | 5 => Some(Rational64::new(1, 3)),
        0 | 4 => Some(Rational64::new(1, 6)),
        _ => None,
    }
}

fn psi(f: &Factorization, skip: &[u64]) -> Rational64 {
    f.primes()
        .filter(|p| !skip.contains(p))
        .map(|p| Rational64::new(p as i64, p as i64 + 1))
        .product()
}

/// sum of chi_D(n) over fundamental D in (X, 2X] with D = a mod 8 (if
/// given) and (D, d) = 1, against the main term: zero unless n is a
/// square, else the count of such D coprime to n.
pub fn verify_char_sum(n: u64, d: u64, a: Option<u8>, x: u64) -> Result<CharSumReport, Error> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput(
            "verify_char_sum: n and d must be positive".into(),
        ));
    }
    let share = match a {
        None => None,
        Some(a) => Some(share_mod8(a).ok_or_else(|| {
            Error::InvalidInput(format!("residue {a} mod 8 is not a discriminant class"))
        })?),
    };
    let filter: Option<Vec<i64>> = a.map(|a| vec![a as i64]);
    let ds = fundamental_discriminants(x, 2 * x, Sign::Positive, filter.as_deref(), Some(d));
    let observed: i64 = ds.iter().map(|&dk| kronecker(dk, n) as i64).sum();
    let main = if is_square_u128(n as u128) {
        let fnd = factor(n * d);
        let two_divides = (n * d) % 2 == 0;
        let w2 = match (share, two_divides) {
            (None, false) => Rational64::one(),
            (None, true) => Rational64::new(2, 3),
            (Some(s), false) => s,
            (Some(s), true) => {
                if a.unwrap() % 2 == 1 {
                    s
                } else {
                    Rational64::zero()
                }
            }
        };
        let odd = psi(&fnd, &[2]);
        x as f64 / (2.0 * ZETA2) * (w2 * odd).to_f64().unwrap()
    } else {
        0.0
    };
    let residual = observed as f64 - main;
    Ok(CharSumReport {
        n,
        d,
        residue_mod8: a,
        x,
        terms: ds.len(),
        observed,
        main,
        residual,
        normalized: residual / ((x as f64).sqrt() * ((n * d) as f64).powf(0.25)),
    })
}
