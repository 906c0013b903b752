//! Counting D4 quartic fields by conductor: a direct oracle over every
//! quadratic subfield, the hyperbola count that only enumerates small
//! subfields and reaches the rest through the flip, and the asymptotic
//! main and secondary terms.

pub mod cache;
pub mod lfun;
pub mod spec;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{
    fundamental_discriminants, isqrt, leading_constant, leading_local_factor, prime_log_sum,
    prime_log_term, primes_up_to, Sign,
};
use crate::localalg::InfType;
use crate::quadfield::QuadraticField;
use crate::relext::{j_invariant, ExtensionEnumerator, GaloisType};
use crate::Error;

pub use cache::HitCache;
pub use lfun::ConstantEstimate;
pub use spec::GlobalSpec;

/// Largest X accepted by the counting engines.
pub const MAX_X: u64 = 10_000_000;

/// Invariants of one raw D4 hit: an extension L/K, so every quartic field
/// appears twice (L and its conjugate over K, with equal invariants).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct FieldHit {
    pub d_k: i64,
    pub n_rel: u64,
    pub d_flip: i64,
    pub inf: InfType,
}

impl FieldHit {
    pub fn conductor(&self) -> u64 {
        self.d_k.unsigned_abs() * self.n_rel
    }
}

/// How the per-field enumeration runs: worker count and optional cache.
#[derive(Clone, Copy, Default)]
pub struct Runner<'a> {
    pub workers: usize,
    pub cache: Option<&'a HitCache>,
}

impl<'a> Runner<'a> {
    pub fn new(workers: usize) -> Runner<'a> {
        Runner {
            workers,
            cache: None,
        }
    }

    pub fn with_cache(mut self, cache: &'a HitCache) -> Runner<'a> {
        self.cache = Some(cache);
        self
    }

    /// Raw D4 hits of each field in `jobs` (D, Y), concatenated in job
    /// order, so the result does not depend on the worker count.
    pub fn hits(&self, jobs: &[(i64, u64)]) -> Result<Vec<FieldHit>, Error> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
        let key = GlobalSpec::complete().hash_hex();
        let per: Vec<Vec<FieldHit>> = pool.install(|| {
            jobs.par_iter()
                .map(|&(d, y)| {
                    if let Some(c) = self.cache {
                        if let Some(h) = c.get(d, &key, y) {
                            return Ok(h);
                        }
                    }
                    let h = field_hits(d, y)?;
                    if let Some(c) = self.cache {
                        c.put(d, &key, y, &h)?;
                    }
                    Ok(h)
                })
                .collect::<Result<_, Error>>()
        })?;
        Ok(per.into_iter().flatten().collect())
    }
}

/// Raw D4 hits over Q(sqrt d) with N_rel <= y, sorted.
pub fn field_hits(d: i64, y: u64) -> Result<Vec<FieldHit>, Error> {
    let f = QuadraticField::new(d)?;
    let en = ExtensionEnumerator::new(&f, y);
    let mut out = Vec::new();
    en.for_each(|h| {
        if h.galois == GaloisType::D4 {
            out.push(FieldHit {
                d_k: h.d_k,
                n_rel: h.n_rel,
                d_flip: h.d_flip,
                inf: h.inf,
            });
        }
    })?;
    out.sort();
    Ok(out)
}

fn check_x(x: u64) -> Result<(), Error> {
    if x > MAX_X {
        return Err(Error::ResourceCap(format!(
            "X = {x} exceeds the desk-scale cap {MAX_X}"
        )));
    }
    Ok(())
}

fn halve(raw: u64, what: &str) -> Result<u64, Error> {
    if raw % 2 != 0 {
        return Err(Error::Invariant(format!("{what}: odd raw count {raw}")));
    }
    Ok(raw / 2)
}

/// Every raw D4 hit over every quadratic field with |D| <= X and conductor
/// at most X. Counts for smaller X and any spec are read off without
/// enumerating again.
pub struct OracleData {
    pub x: u64,
    pub fields: usize,
    pub hits: Vec<FieldHit>,
}

impl OracleData {
    pub fn build(x: u64, runner: &Runner) -> Result<OracleData, Error> {
        check_x(x)?;
        let ds = fundamental_discriminants(0, x, Sign::Both, None, None);
        let jobs: Vec<(i64, u64)> = ds.iter().map(|&d| (d, x / d.unsigned_abs())).collect();
        let hits = runner.hits(&jobs)?;
        Ok(OracleData {
            x,
            fields: ds.len(),
            hits,
        })
    }

    pub fn count(&self, x: u64, spec: &GlobalSpec) -> Result<u64, Error> {
        if x > self.x {
            return Err(Error::InvalidInput(format!(
                "oracle data built for X = {}, asked for {x}",
                self.x
            )));
        }
        let raw = self
            .hits
            .iter()
            .filter(|h| h.conductor() <= x && spec.allows(h.d_k, h.n_rel, h.d_flip, h.inf))
            .count() as u64;
        halve(raw, "oracle")
    }
}

/// The pieces of the hyperbola count. Raw counts (each field twice).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HyperbolaPieces {
    /// Small K (D^2 <= X), field in the local spec.
    pub a_sigma: u64,
    /// Small K, flipped field in the local spec.
    pub a_flip: u64,
    /// Small K, small flip, flipped field in the local spec.
    pub b_flip: u64,
    /// Small K, small flip, field in the local spec; equals b_flip by symmetry.
    pub b_sigma: u64,
    /// Part of b_flip with D^2 q^4 < X.
    pub ii: u64,
    /// Small K with D^2 q^4 >= X and flipped field in the local spec; the flip is
    /// then small automatically, so ii + iii = b_flip.
    pub iii: u64,
}

impl HyperbolaPieces {
    pub fn total(&self) -> Result<u64, Error> {
        if self.ii + self.iii != self.b_flip {
            return Err(Error::Invariant(format!(
                "hyperbola: pieces (ii) {} + (iii) {} differ from the overlap {}",
                self.ii, self.iii, self.b_flip
            )));
        }
        if self.b_sigma != self.b_flip {
            return Err(Error::Invariant(format!(
                "hyperbola: overlap not flip-symmetric ({} vs {})",
                self.b_sigma, self.b_flip
            )));
        }
        halve(self.a_sigma + self.a_flip - self.b_flip, "hyperbola")
    }
}

/// Raw hits over the small fields D^2 <= X with N_rel <= X/|D|.
pub struct HyperbolaData {
    pub x: u64,
    pub fields: usize,
    pub hits: Vec<FieldHit>,
}

impl HyperbolaData {
    pub fn build(x: u64, runner: &Runner) -> Result<HyperbolaData, Error> {
        check_x(x)?;
        let r = isqrt(x as u128) as u64;
        let ds = fundamental_discriminants(0, r, Sign::Both, None, None);
        let jobs: Vec<(i64, u64)> = ds.iter().map(|&d| (d, x / d.unsigned_abs())).collect();
        let hits = runner.hits(&jobs)?;
        Ok(HyperbolaData {
            x,
            fields: ds.len(),
            hits,
        })
    }

    pub fn pieces(&self, spec: &GlobalSpec) -> Result<HyperbolaPieces, Error> {
        let x = self.x as u128;
        let mut p = HyperbolaPieces::default();
        for h in &self.hits {
            let d2 = (h.d_k as i128 * h.d_k as i128) as u128;
            let flip_small = (h.d_flip as i128 * h.d_flip as i128) as u128 <= x;
            let q = j_invariant(h.n_rel, h.d_flip)?.q as u128;
            let ins = spec.allows(h.d_k, h.n_rel, h.d_flip, h.inf);
            let inf = spec.allows_flipped(h.d_k, h.n_rel, h.d_flip, h.inf);
            if ins {
                p.a_sigma += 1;
                if flip_small {
                    p.b_sigma += 1;
                }
            }
            if inf {
                p.a_flip += 1;
                if d2 * q.pow(4) < x {
                    if flip_small {
                        p.b_flip += 1;
                        p.ii += 1;
                    }
                } else {
                    p.iii += 1;
                    if flip_small {
                        p.b_flip += 1;
                    }
                }
            }
        }
        Ok(p)
    }

    pub fn count(&self, spec: &GlobalSpec) -> Result<u64, Error> {
        self.pieces(spec)?.total()
    }
}

pub fn count_oracle(x: u64, spec: &GlobalSpec, runner: &Runner) -> Result<u64, Error> {
    OracleData::build(x, runner)?.count(x, spec)
}

pub fn count_hyperbola(x: u64, spec: &GlobalSpec, runner: &Runner) -> Result<u64, Error> {
    HyperbolaData::build(x, runner)?.count(spec)
}

// ---------------------------------------------------------------------------
// Asymptotic terms

/// Terms of N(Sigma; X) ~ main X log X + (secondary + c) X.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Asymptotic {
    /// prod_p (1 - 1/p)^2 mu(Sigma_p).
    pub euler: f64,
    pub euler_err: f64,
    pub mu_inf: f64,
    /// sum_p log p sum_i i mu(Sigma_{p^{2i}}) / mu(Sigma_p).
    pub log_sum: f64,
    pub log_sum_err: f64,
    /// Coefficients of X log X and of X (the latter without c).
    pub main_coeff: f64,
    pub secondary_coeff: f64,
    pub main_coeff_err: f64,
    pub secondary_coeff_err: f64,
}

impl Asymptotic {
    pub fn main(&self, x: f64) -> (f64, f64) {
        (
            self.main_coeff * x * x.ln(),
            self.main_coeff_err * x * x.ln(),
        )
    }

    pub fn secondary(&self, x: f64) -> (f64, f64) {
        (self.secondary_coeff * x, self.secondary_coeff_err * x)
    }
}

/// Default truncation point for the Euler products.
pub const P_MAX: u64 = 1_000_000;

pub fn asymptotic(spec: &GlobalSpec, p_max: u64) -> Asymptotic {
    let primes = primes_up_to(p_max.max(*spec.primes.keys().last().unwrap_or(&2)));
    let (a, a_err) = leading_constant(&primes, p_max);
    let (ls, ls_err) = prime_log_sum(&primes, p_max);
    let mut euler = a;
    let euler_rel = a_err / a;
    let mut log_sum = ls;
    let mut special: Vec<u64> = spec.primes.keys().copied().collect();
    if !special.contains(&2) {
        special.insert(0, 2);
    }
    for &p in &special {
        let mu = spec.mu_p(p);
        let pf = Rational64::new(p as i64 - 1, p as i64);
        let local = (pf * pf * mu).to_f64().unwrap();
        if p <= p_max {
            euler *= local / leading_local_factor(p);
            log_sum -= prime_log_term(p);
        } else {
            euler *= local;
        }
        if !mu.is_zero() {
            log_sum += (p as f64).ln() * (spec.mu_weighted_i(p) / mu).to_f64().unwrap();
        }
    }
    let mu_inf = spec.mu_inf().to_f64().unwrap();
    let main_coeff = 0.5 * mu_inf * euler;
    let secondary_coeff = main_coeff * (1.0 - 2.0 * log_sum);
    let euler_err = euler.abs() * euler_rel;
    let main_coeff_err = 0.5 * mu_inf * euler_err;
    Asymptotic {
        euler,
        euler_err,
        mu_inf,
        log_sum,
        log_sum_err: ls_err,
        main_coeff,
        secondary_coeff,
        main_coeff_err,
        secondary_coeff_err: main_coeff_err * (1.0 - 2.0 * log_sum).abs()
            + main_coeff * 2.0 * ls_err,
    }
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Term {
    pub value: f64,
    pub err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Oracle,
    Hyperbola,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CensusReport {
    pub x: u64,
    pub method: Method,
    pub spec_hash: String,
    pub n_exact: u64,
    pub main: Term,
    /// X coefficient including c X when a constant estimate was supplied.
    pub secondary: Term,
    pub c_included: bool,
    pub residual: f64,
    pub exponent_fit: Option<f64>,
    pub fields_enumerated: usize,
    pub raw_hits: usize,
    pub pieces: Option<HyperbolaPieces>,
}

impl CensusReport {
    pub fn new(
        x: u64,
        method: Method,
        spec: &GlobalSpec,
        n_exact: u64,
        asym: &Asymptotic,
        c: Option<&ConstantEstimate>,
    ) -> CensusReport {
        let xf = x as f64;
        let (m, me) = asym.main(xf);
        let (mut s, mut se) = asym.secondary(xf);
        if let Some(c) = c {
            let (cv, ce) = c.count_coefficient();
            s += cv * xf;
            se += ce * xf;
        }
        CensusReport {
            x,
            method,
            spec_hash: spec.hash_hex(),
            n_exact,
            main: Term { value: m, err: me },
            secondary: Term { value: s, err: se },
            c_included: c.is_some(),
            residual: n_exact as f64 - m - s,
            exponent_fit: None,
            fields_enumerated: 0,
            raw_hits: 0,
            pieces: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str =
        "x,method,n_exact,main,main_err,secondary,secondary_err,residual";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.3e},{:.6},{:.3e},{:.6}",
            self.x,
            match self.method {
                Method::Oracle => "oracle",
                Method::Hyperbola => "hyperbola",
            },
            self.n_exact,
            self.main.value,
            self.main.err,
            self.secondary.value,
            self.secondary.err,
            self.residual
        )
    }
}

pub fn report_oracle(
    x: u64,
    spec: &GlobalSpec,
    runner: &Runner,
    c: Option<&ConstantEstimate>,
) -> Result<CensusReport, Error> {
    let data = OracleData::build(x, runner)?;
    let n = data.count(x, spec)?;
    let mut r = CensusReport::new(x, Method::Oracle, spec, n, &asymptotic(spec, P_MAX), c);
    r.fields_enumerated = data.fields;
    r.raw_hits = data.hits.len();
    Ok(r)
}

pub fn report_hyperbola(
    x: u64,
    spec: &GlobalSpec,
    runner: &Runner,
    c: Option<&ConstantEstimate>,
) -> Result<CensusReport, Error> {
    let data = HyperbolaData::build(x, runner)?;
    let pieces = data.pieces(spec)?;
    let n = pieces.total()?;
    let mut r = CensusReport::new(x, Method::Hyperbola, spec, n, &asymptotic(spec, P_MAX), c);
    r.fields_enumerated = data.fields;
    r.raw_hits = data.hits.len();
    r.pieces = Some(pieces);
    Ok(r)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FitRow {
    pub x: u64,
    pub n_exact: u64,
    pub main: f64,
    pub secondary: f64,
    pub residual: f64,
    pub ratio_main: f64,
    pub ratio_full: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FitReport {
    pub rows: Vec<FitRow>,
    /// Slope of log|residual| against log X (least squares); None with
    /// fewer than two usable points.
    pub exponent: Option<f64>,
    pub c: Option<ConstantEstimate>,
}

/// Hyperbola counts on an ascending grid against the asymptotic terms.
pub fn fit_report(
    grid: &[u64],
    spec: &GlobalSpec,
    runner: &Runner,
    c: Option<ConstantEstimate>,
) -> Result<FitReport, Error> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "fit grid must be strictly ascending".into(),
        ));
    }
    let asym = asymptotic(spec, P_MAX);
    let mut rows = Vec::new();
    for &x in grid {
        let n = count_hyperbola(x, spec, runner)?;
        let r = CensusReport::new(x, Method::Hyperbola, spec, n, &asym, c.as_ref());
        rows.push(FitRow {
            x,
            n_exact: n,
            main: r.main.value,
            secondary: r.secondary.value,
            residual: r.residual,
            ratio_main: n as f64 / r.main.value,
            ratio_full: n as f64 / (r.main.value + r.secondary.value),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.residual != 0.0)
        .map(|r| ((r.x as f64).ln(), r.residual.abs().ln()))
        .collect();
    Ok(FitReport {
        exponent: slope(&pts),
        rows,
        c,
    })
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
