//! Integer arithmetic: factorization, multiplicative functions, Kronecker
//! symbols, fundamental discriminants and truncated Euler products with
//! explicit tail bounds.

use crate::Error;

/// Largest input accepted by [`factorize`].
pub const FACTOR_LIMIT: u64 = 1 << 63;

/// Prime factorization of a positive integer, primes strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub value: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Product of the primes dividing the value to an odd power.
    pub fn squarefree_kernel(&self) -> u64 {
        self.factors
            .iter()
            .filter(|f| f.1 % 2 == 1)
            .map(|f| f.0)
            .product()
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

// Brent's variant of Pollard rho; the increment is varied on failure so the
// search is deterministic but still terminates on every composite.
fn pollard_rho(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    for c in 1u64.. {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut q = 1u64;
        let mut ys = 2u64;
        let mut r = 1u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..r.min(128).min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd_u64(q, n);
                k += 128;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd_u64(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!()
}

fn push_factors(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_rho(n);
    push_factors(d, out);
    push_factors(n / d, out);
}

/// Exact factorization of `1 <= n < 2^63`.
pub fn factorize(n: u64) -> Result<Factorization, Error> {
    if n == 0 || n >= FACTOR_LIMIT {
        return Err(Error::InvalidInput(format!(
            "factorize: {n} outside [1, 2^63)"
        )));
    }
    let mut m = n;
    let mut raw = Vec::new();
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        while m % p == 0 {
            raw.push(p);
            m /= p;
        }
    }
    let mut p = 53;
    while p * p <= m && p < 1000 {
        while m % p == 0 {
            raw.push(p);
            m /= p;
        }
        p += 2;
    }
    push_factors(m, &mut raw);
    raw.sort_unstable();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for q in raw {
        match factors.last_mut() {
            Some((r, e)) if *r == q => *e += 1,
            _ => factors.push((q, 1)),
        }
    }
    Ok(Factorization { value: n, factors })
}

/// Factorization for inputs known to be in range.
pub fn factor(n: u64) -> Factorization {
    factorize(n).expect("input within the factorization bound")
}

pub fn mobius(n: u64) -> i32 {
    let f = factor(n);
    if !f.is_squarefree() {
        0
    } else if f.factors.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn is_squarefree(n: u64) -> bool {
    n > 0 && factor(n).is_squarefree()
}

/// Kronecker symbol (d/n) for any integer d and n >= 1.
pub fn kronecker(d: i64, n: u64) -> i32 {
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let mut n = n;
    let mut result = 1i32;
    let tz = n.trailing_zeros();
    if tz > 0 {
        if d % 2 == 0 {
            return 0;
        }
        if tz % 2 == 1 {
            let r = d.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        n >>= tz;
    }
    // Jacobi symbol (d mod n / n) for odd n.
    let mut a = d.rem_euclid(n as i64) as u64;
    while a != 0 {
        let t = a.trailing_zeros();
        a >>= t;
        if t % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    let m = d.rem_euclid(4);
    if m == 1 {
        return is_squarefree(d.unsigned_abs());
    }
    if m == 0 {
        let q = d / 4;
        let r = q.rem_euclid(4);
        return (r == 2 || r == 3) && is_squarefree(q.unsigned_abs());
    }
    false
}

/// Sign convention for [`fundamental_discriminants`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Both,
}

/// Fundamental discriminants with `lo < |D| <= hi`, ordered by |D| (negative
/// before positive on ties), optionally filtered by `D mod 8` and by
/// coprimality to a given integer.
pub fn fundamental_discriminants(
    lo: u64,
    hi: u64,
    sign: Sign,
    mod8_filter: Option<&[i64]>,
    coprime_to: Option<u64>,
) -> Vec<i64> {
    let flags = fundamental_flags(hi);
    let mut out = Vec::new();
    for a in (lo + 1)..=hi {
        for s in [-1i64, 1] {
            let want = match sign {
                Sign::Positive => s == 1,
                Sign::Negative => s == -1,
                Sign::Both => true,
            };
            if !want {
                continue;
            }
            let d = s * a as i64;
            let ok = if s == 1 {
                flags.pos[a as usize]
            } else {
                flags.neg[a as usize]
            };
            if !ok {
                continue;
            }
            if let Some(f) = mod8_filter {
                if !f.contains(&d.rem_euclid(8)) {
                    continue;
                }
            }
            if let Some(m) = coprime_to {
                if gcd_u64(a, m) != 1 {
                    continue;
                }
            }
            out.push(d);
        }
    }
    out
}

/// Sieved fundamental-discriminant flags for |D| <= n.
pub struct FundamentalFlags {
    pub pos: Vec<bool>,
    pub neg: Vec<bool>,
}

pub fn fundamental_flags(n: u64) -> FundamentalFlags {
    let n = n as usize;
    let mut sqfree = vec![true; n + 1];
    let mut p = 2usize;
    while p * p <= n {
        let q = p * p;
        let mut k = q;
        while k <= n {
            sqfree[k] = false;
            k += q;
        }
        p += 1;
    }
    let mut pos = vec![false; n + 1];
    let mut neg = vec![false; n + 1];
    for a in 2..=n {
        for (s, slot) in [(1i64, &mut pos), (-1i64, &mut neg)] {
            let d = s * a as i64;
            let ok = match d.rem_euclid(4) {
                1 => sqfree[a],
                0 => {
                    let q = d / 4;
                    let r = q.rem_euclid(4);
                    (r == 2 || r == 3) && sqfree[a / 4]
                }
                _ => false,
            };
            slot[a] = ok;
        }
    }
    FundamentalFlags { pos, neg }
}

/// Fundamental discriminant of Q(sqrt(n)) for a nonsquare nonzero integer n.
pub fn fundamental_discriminant_of(n: i64) -> Option<i64> {
    if n == 0 {
        return None;
    }
    let f = factor(n.unsigned_abs());
    let k = f.squarefree_kernel() as i64 * n.signum();
    if k == 1 {
        return None;
    }
    Some(if k.rem_euclid(4) == 1 { k } else { 4 * k })
}

pub fn isqrt(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square_u128(n: u128) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// Primes up to `n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut k = i * i;
            while k <= n {
                comp[k] = true;
                k += i;
            }
        }
    }
    out
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(mut n: u128, p: u64) -> u32 {
    let p = p as u128;
    let mut v = 0;
    while n != 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

// Rosser-Schoenfeld: pi(x) <= 1.25506 x / log x for x > 1.
const PI_UPPER: f64 = 1.25506;
// Chebyshev theta(x) <= 1.01624 x.
const THETA_UPPER: f64 = 1.01624;

/// A truncated Euler product of f(p) = 1 + local_excess(p) over p <= p_max
/// (the excess is passed so log f keeps full relative precision). Beyond
/// p_max, `log f(p) = sum_k a_k / p^k + r(p)` with `log_series`
/// listing the (k, a_k); those terms are summed exactly through prime zeta
/// tails, and `|r(p)| <= tail_coefficient / p^tail_exponent` for p > p_max.
/// An empty `log_series` makes the majorant cover the whole logarithm.
pub struct EulerProductSpec<'a> {
    pub local_excess: &'a dyn Fn(u64) -> f64,
    pub p_max: u64,
    pub log_series: &'a [(u32, f64)],
    pub tail_coefficient: f64,
    pub tail_exponent: f64,
}

// B_2, B_4, ..., B_14
const BERNOULLI_EVEN: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// zeta(s) - 1 for integer s >= 2, by Euler-Maclaurin at N = 10.
pub fn zeta_minus_one(s: u32) -> f64 {
    assert!(s >= 2, "zeta_minus_one needs s >= 2");
    let sf = s as f64;
    let n = 10.0f64;
    let mut sum = 0.0;
    for k in (2..10u32).rev() {
        sum += (k as f64).powf(-sf);
    }
    sum += n.powf(1.0 - sf) / (sf - 1.0) + 0.5 * n.powf(-sf);
    // rising factorial s(s+1)...(s+2j-2) / (2j)!
    let mut coef = sf / 2.0;
    let mut pow = n.powf(-sf - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        sum += b * coef * pow;
        let m = 2.0 * j as f64 + 2.0;
        coef *= (sf + m - 1.0) * (sf + m) / ((m + 1.0) * (m + 2.0));
        pow /= n * n;
    }
    sum
}

/// Prime zeta P(s) = sum_p p^{-s} for integer s >= 2, from
/// P(s) = sum_k mu(k)/k log zeta(ks).
pub fn prime_zeta(s: u32) -> f64 {
    assert!(s >= 2, "prime_zeta needs s >= 2");
    let mut total = 0.0;
    let mut k = 1u32;
    // log zeta(ks) ~ 2^{-ks}; stop once far below double precision.
    while (k * s) < 70 {
        let mu = mobius(k as u64);
        if mu != 0 {
            total += mu as f64 / k as f64 * zeta_minus_one(k * s).ln_1p();
        }
        k += 1;
    }
    total
}

/// sum_{p > x} p^{-s}, as P(s) minus the partial sum over `primes`.
pub fn prime_zeta_tail(s: u32, primes: &[u64], x: u64) -> Result<f64, Error> {
    if primes.last().copied().unwrap_or(0) < x.min(2) {
        return Err(Error::InvalidInput(
            "prime_zeta_tail: prime table too short".into(),
        ));
    }
    let sf = s as f64;
    let mut partial = 0.0f64;
    let mut comp = 0.0f64;
    for &p in primes
        .iter()
        .take_while(|&&p| p <= x)
        .collect::<Vec<_>>()
        .iter()
        .rev()
    {
        let y = (*p as f64).powf(-sf) - comp;
        let t = partial + y;
        comp = (t - partial) - y;
        partial = t;
    }
    Ok((prime_zeta(s) - partial).max(0.0))
}

/// Upper bound for sum_{p > x} c / p^s using the explicit bound on pi(x).
pub fn prime_power_tail(x: u64, c: f64, s: f64) -> f64 {
    let x = (x.max(3)) as f64;
    PI_UPPER * s * c / ((s - 1.0) * x.powf(s - 1.0) * x.ln())
}

/// Returns (value, tail_bound) with |value - true product| <= tail_bound.
pub fn euler_product(spec: &EulerProductSpec, primes: &[u64]) -> Result<(f64, f64), Error> {
    if spec.tail_exponent <= 1.0 {
        return Err(Error::InvalidInput(
            "euler_product: tail exponent must exceed 1".into(),
        ));
    }
    if primes.last().copied().unwrap_or(0) < spec.p_max.min(2) {
        return Err(Error::InvalidInput(
            "euler_product: prime table too short".into(),
        ));
    }
    // Sum logs in a fixed order so the result does not depend on the caller.
    let mut log_sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut abs_sum = 0.0f64;
    for &p in primes.iter().take_while(|&&p| p <= spec.p_max) {
        let e = (spec.local_excess)(p);
        if !(e > -1.0) {
            return Err(Error::InvalidInput(format!(
                "euler_product: factor at {p} not positive"
            )));
        }
        let l = e.ln_1p();
        abs_sum += l.abs();
        let y = l - comp;
        let t = log_sum + y;
        comp = (t - log_sum) - y;
        log_sum = t;
    }
    for &(k, a) in spec.log_series {
        log_sum += a * prime_zeta_tail(k, primes, spec.p_max)?;
    }
    let value = log_sum.exp();
    let tail = prime_power_tail(spec.p_max, spec.tail_coefficient, spec.tail_exponent);
    // Rounding: a few ulps per logarithm (including the excess itself),
    // compensated summation, and the final exp.
    let rounding = 8.0 * f64::EPSILON * (abs_sum + log_sum.abs() + 1.0);
    let bound = value * (tail.exp_m1()) + value * rounding;
    Ok((value, bound))
}

/// Local factor 1 - 1/p^2 - 2/p^3 + 2/p^4 of the leading constant.
pub fn leading_local_factor(p: u64) -> f64 {
    let x = 1.0 / p as f64;
    1.0 - x * x - 2.0 * x * x * x + 2.0 * x * x * x * x
}

/// Same factor as an exact rational (numerator, denominator).
pub fn leading_local_factor_exact(p: u64) -> (i128, i128) {
    let p = p as i128;
    let p4 = p * p * p * p;
    (p4 - p * p - 2 * p + 2, p4)
}

/// The product over all primes of 1 - 1/p^2 - 2/p^3 + 2/p^4.
pub fn leading_constant(primes: &[u64], p_max: u64) -> (f64, f64) {
    let f = |p: u64| {
        let x = 1.0 / p as f64;
        x * x * (-1.0 - 2.0 * x + 2.0 * x * x)
    };
    // log f = -1/p^2 - 2/p^3 + r(p), |r(p)| <= 3/p^4 once p >= 10.
    let spec = EulerProductSpec {
        local_excess: &f,
        p_max,
        log_series: if p_max >= 10 {
            &[(2, -1.0), (3, -2.0)]
        } else {
            &[]
        },
        tail_coefficient: if p_max >= 10 { 3.0 } else { 2.0 },
        tail_exponent: if p_max >= 10 { 4.0 } else { 2.0 },
    };
    euler_product(&spec, primes).expect("convergent product")
}

/// Term log p / (p^2 + 2p + 2) of the secondary constant.
pub fn prime_log_term(p: u64) -> f64 {
    let q = p as f64;
    q.ln() / (q * q + 2.0 * q + 2.0)
}

/// Truncated sum over p <= p_max of log p/(p^2+2p+2) with a tail bound.
pub fn prime_log_sum(primes: &[u64], p_max: u64) -> (f64, f64) {
    let mut s = 0.0;
    for &p in primes.iter().take_while(|&&p| p <= p_max) {
        s += prime_log_term(p);
    }
    // sum_{p > x} log p / p^2 <= 2 theta-bound / x by partial summation.
    let tail = 2.0 * THETA_UPPER / p_max.max(2) as f64;
    (s, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_factor(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut p = 2;
        while p * p <= n {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
            p += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    #[test]
    fn factorize_examples() {
        assert!(factor(1).factors.is_empty());
        assert_eq!(factor(12).factors, vec![(2, 2), (3, 1)]);
        assert_eq!(factor(2048).factors, naive_factor(2048));
        assert_eq!(factor(2048).factors, vec![(2, 11)]);
        assert!(factorize(0).is_err());
        assert!(factorize(1 << 63).is_err());
    }

    #[test]
    fn factorize_large_semiprime() {
        let p = 4_294_967_291u64; // largest prime below 2^32
        let q = 2_147_483_647u64;
        assert_eq!(factor(p * q).factors, vec![(q, 1), (p, 1)]);
        let n = (1u64 << 63) - 25; // prime
        assert!(is_prime(n));
        assert_eq!(factor(n).factors, vec![(n, 1)]);
    }

    #[test]
    fn mobius_examples() {
        assert_eq!(mobius(1), 1);
        assert_eq!(mobius(12), 0);
        assert_eq!(mobius(30), -1);
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(5, 4), 1);
        assert_eq!(kronecker(-4, 2), 0);
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(kronecker(-4, 5), 1);
        assert_eq!(kronecker(-4, 3), -1);
    }

    #[test]
    fn kronecker_matches_euler_criterion() {
        for p in primes_up_to(200).into_iter().filter(|&p| p > 2) {
            for d in -60i64..60 {
                let r = d.rem_euclid(p as i64) as u64;
                let e = if r == 0 {
                    0
                } else if pow_mod(r, (p - 1) / 2, p) == 1 {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(d, p), e, "d={d} p={p}");
            }
        }
    }

    #[test]
    fn fundamental_examples() {
        assert!(is_fundamental_discriminant(-3));
        assert!(!is_fundamental_discriminant(9));
        assert!(is_fundamental_discriminant(12));
        assert!(!is_fundamental_discriminant(1));
        let pos = fundamental_discriminants(0, 13, Sign::Positive, None, None);
        assert_eq!(pos, vec![5, 8, 12, 13]);
        let f5 = fundamental_discriminants(0, 13, Sign::Positive, Some(&[5]), None);
        assert_eq!(f5, vec![5, 13]);
        let c3 = fundamental_discriminants(0, 10, Sign::Positive, None, Some(3));
        assert_eq!(c3, vec![5, 8]);
    }

    #[test]
    fn sieve_matches_definition() {
        let flags = fundamental_flags(3000);
        for a in 1..=3000i64 {
            assert_eq!(flags.pos[a as usize], is_fundamental_discriminant(a));
            assert_eq!(flags.neg[a as usize], is_fundamental_discriminant(-a));
        }
    }

    #[test]
    fn euler_examples() {
        let (n, d) = leading_local_factor_exact(3);
        assert_eq!((n, d), (68, 81));
        let primes = primes_up_to(1_000_000);
        let f = |p: u64| -1.0 / (p * p) as f64;
        let spec = EulerProductSpec {
            local_excess: &f,
            p_max: 1_000_000,
            log_series: &[],
            tail_coefficient: 2.0,
            tail_exponent: 2.0,
        };
        let (v, tb) = euler_product(&spec, &primes).unwrap();
        let truth = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert!((v - truth).abs() <= tb, "{v} {truth} {tb}");
        let bad = EulerProductSpec {
            local_excess: &f,
            p_max: 10,
            log_series: &[],
            tail_coefficient: 1.0,
            tail_exponent: 1.0,
        };
        assert!(euler_product(&bad, &primes).is_err());
    }

    #[test]
    fn prime_zeta_values() {
        assert!((zeta_minus_one(2) - (std::f64::consts::PI.powi(2) / 6.0 - 1.0)).abs() < 1e-15);
        assert!((zeta_minus_one(3) - 0.202_056_903_159_594_3).abs() < 1e-15);
        assert!((prime_zeta(2) - 0.452_247_420_041_065_5).abs() < 1e-15);
        assert!((prime_zeta(3) - 0.174_762_639_299_443_5).abs() < 1e-15);
        let primes = primes_up_to(1000);
        let direct: f64 = primes
            .iter()
            .filter(|&&p| p > 100)
            .map(|&p| (p as f64).powi(-3))
            .sum();
        let t = prime_zeta_tail(3, &primes, 100).unwrap();
        assert!((t - direct).abs() < prime_power_tail(1000, 1.0, 3.0));
    }

    #[test]
    fn accelerated_product_matches_plain() {
        let primes = primes_up_to(100_000);
        let f = |p: u64| -1.0 / (p * p) as f64;
        // log(1 - x^2) = -x^2 - x^4/2 - ..., |r| <= 1/p^4 for p >= 2.
        let spec = EulerProductSpec {
            local_excess: &f,
            p_max: 1000,
            log_series: &[(2, -1.0)],
            tail_coefficient: 1.0,
            tail_exponent: 4.0,
        };
        let (v, tb) = euler_product(&spec, &primes).unwrap();
        let truth = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert!((v - truth).abs() <= tb, "{v} {truth} {tb}");
        assert!(tb < 1e-9);
    }

    #[test]
    fn prime_log_sum_examples() {
        assert!((prime_log_term(2) - 2f64.ln() / 10.0).abs() < 1e-16);
        assert!((prime_log_term(3) - 3f64.ln() / 17.0).abs() < 1e-16);
        let primes = primes_up_to(1_000_000);
        let (a, ta) = prime_log_sum(&primes, 1000);
        let (b, _) = prime_log_sum(&primes, 1_000_000);
        assert!((b - a).abs() < ta);
    }
}
