//! Local conditions on D4 fields: at each constrained prime a set of cells
//! (class of K_p in Q_p^x/squares, v_p(N_rel), v_p(D_flip)); at infinity a
//! set of pair types.
//!
//! File format (JSON): keys are primes or "inf". A prime maps to
//! {"K": [class names], "cells": [[v_rel, v_flip], ...]}; a missing key
//! means every value. "inf" maps to a list of "R2/++", "R2/+-", "R2/--",
//! "C". Class names are "1","5","-1","-5","2","-2","10","-10" at 2 and
//! "1","p","u","pu" at odd p (u a non-residue unit).

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::Zero;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::arith::{is_prime, valuation};
use crate::localalg::{
    all_local_pairs, parse_qp_class, qp_class, qp_class_name, InfType, LocalPair,
};
use crate::relext::LocalSpecK;
use crate::Error;

pub type Cell = (u8, u32, u32);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GlobalSpec {
    pub primes: BTreeMap<u64, BTreeSet<Cell>>,
    pub inf: Option<BTreeSet<InfType>>,
}

/// Local data of a D4 field at p, given its invariants.
pub fn cell_of(p: u64, d_k: i64, n_rel: u64, d_flip: i64) -> Cell {
    (
        qp_class(p, d_k as i128),
        valuation(n_rel as u128, p),
        valuation(d_flip.unsigned_abs() as u128, p),
    )
}

/// Local data at p of the flipped field.
pub fn flipped_cell_of(p: u64, d_k: i64, n_rel: u64, d_flip: i64) -> Cell {
    let vk = valuation(d_k.unsigned_abs() as u128, p);
    let (_, vr, vf) = cell_of(p, d_k, n_rel, d_flip);
    (qp_class(p, d_flip as i128), vk + vr - vf, vk)
}

impl GlobalSpec {
    pub fn complete() -> GlobalSpec {
        GlobalSpec::default()
    }

    pub fn is_complete(&self) -> bool {
        self.primes.is_empty() && self.inf.is_none()
    }

    /// Product of the constrained primes.
    pub fn modulus(&self) -> u64 {
        self.primes.keys().product()
    }

    fn all_cells(p: u64) -> BTreeSet<Cell> {
        all_local_pairs(p)
            .iter()
            .map(|q| (q.k_class, q.v_rel, q.v_flip))
            .collect()
    }

    /// Constrain p to the cells with K class in `k` and (v_rel, v_flip) in
    /// `cells`; `None` leaves that coordinate free.
    pub fn restrict(
        mut self,
        p: u64,
        k: Option<&[&str]>,
        cells: Option<&[(u32, u32)]>,
    ) -> Result<GlobalSpec, Error> {
        if !is_prime(p) {
            return Err(Error::Schema(format!("{p} is not prime")));
        }
        let ks: Option<BTreeSet<u8>> = match k {
            None => None,
            Some(names) => Some(
                names
                    .iter()
                    .map(|n| {
                        parse_qp_class(p, n)
                            .ok_or_else(|| Error::Schema(format!("prime {p}: unknown class {n:?}")))
                    })
                    .collect::<Result<_, _>>()?,
            ),
        };
        let set: BTreeSet<Cell> = GlobalSpec::all_cells(p)
            .into_iter()
            .filter(|c| ks.as_ref().is_none_or(|s| s.contains(&c.0)))
            .filter(|c| cells.is_none_or(|v| v.contains(&(c.1, c.2))))
            .collect();
        let e = self
            .primes
            .entry(p)
            .or_insert_with(|| GlobalSpec::all_cells(p));
        *e = e.intersection(&set).copied().collect();
        Ok(self)
    }

    pub fn restrict_inf(mut self, types: &[InfType]) -> GlobalSpec {
        let s: BTreeSet<InfType> = types.iter().copied().collect();
        self.inf = Some(match self.inf {
            Some(old) => old.intersection(&s).copied().collect(),
            None => s,
        });
        self
    }

    pub fn allows(&self, d_k: i64, n_rel: u64, d_flip: i64, inf: InfType) -> bool {
        if let Some(s) = &self.inf {
            if !s.contains(&inf) {
                return false;
            }
        }
        self.primes
            .iter()
            .all(|(&p, s)| s.contains(&cell_of(p, d_k, n_rel, d_flip)))
    }

    /// Does the flip of this field satisfy the local spec?
    pub fn allows_flipped(&self, d_k: i64, n_rel: u64, d_flip: i64, inf: InfType) -> bool {
        if let Some(s) = &self.inf {
            if !s.contains(&inf.flip()) {
                return false;
            }
        }
        self.primes
            .iter()
            .all(|(&p, s)| s.contains(&flipped_cell_of(p, d_k, n_rel, d_flip)))
    }

    /// The conditions seen by extensions of a fixed K.
    pub fn restrict_to(&self, d_k: i64) -> LocalSpecK {
        let mut out = LocalSpecK::default();
        for (&p, s) in &self.primes {
            let kc = qp_class(p, d_k as i128);
            out.cells.insert(
                p,
                s.iter().filter(|c| c.0 == kc).map(|c| (c.1, c.2)).collect(),
            );
        }
        out.inf = self.inf.clone();
        out
    }

    fn pairs_at(&self, p: u64) -> Vec<LocalPair> {
        let all = all_local_pairs(p);
        match self.primes.get(&p) {
            None => all,
            Some(s) => all
                .into_iter()
                .filter(|q| s.contains(&(q.k_class, q.v_rel, q.v_flip)))
                .collect(),
        }
    }

    /// mu(Sigma_p).
    pub fn mu_p(&self, p: u64) -> Rational64 {
        self.pairs_at(p).iter().map(|q| q.weight).sum()
    }

    /// mu(Sigma_{p^{2i}}): pairs with (v_rel - v_flip)/2 = i.
    pub fn mu_p2i(&self, p: u64, i: u32) -> Rational64 {
        self.pairs_at(p)
            .iter()
            .filter(|q| (q.v_rel - q.v_flip) / 2 == i)
            .map(|q| q.weight)
            .sum()
    }

    /// sum_i i mu(Sigma_{p^{2i}}).
    pub fn mu_weighted_i(&self, p: u64) -> Rational64 {
        self.pairs_at(p)
            .iter()
            .map(|q| Rational64::from_integer(((q.v_rel - q.v_flip) / 2) as i64) * q.weight)
            .sum()
    }

    pub fn mu_inf(&self) -> Rational64 {
        InfType::ALL
            .iter()
            .filter(|t| self.inf.as_ref().is_none_or(|s| s.contains(t)))
            .map(|t| t.weight())
            .sum()
    }

    pub fn is_empty_somewhere(&self) -> bool {
        self.mu_inf().is_zero() || self.primes.keys().any(|&p| self.mu_p(p).is_zero())
    }

    pub fn from_json(v: &Value) -> Result<GlobalSpec, Error> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Schema("spec: expected a JSON object".into()))?;
        let mut spec = GlobalSpec::complete();
        for (key, val) in obj {
            if key == "inf" {
                let arr = val
                    .as_array()
                    .ok_or_else(|| Error::Schema("inf: expected a list".into()))?;
                let mut types = Vec::new();
                for t in arr {
                    let name = t
                        .as_str()
                        .ok_or_else(|| Error::Schema("inf: expected strings".into()))?;
                    types.push(
                        InfType::parse(name)
                            .ok_or_else(|| Error::Schema(format!("inf: unknown type {name:?}")))?,
                    );
                }
                spec = spec.restrict_inf(&types);
                continue;
            }
            let p: u64 = key
                .parse()
                .map_err(|_| Error::Schema(format!("key {key:?}: expected a prime or \"inf\"")))?;
            let entry = val
                .as_object()
                .ok_or_else(|| Error::Schema(format!("prime {p}: expected an object")))?;
            for k in entry.keys() {
                if k != "K" && k != "cells" && k != "cells_full" {
                    return Err(Error::Schema(format!("prime {p}: unknown field {k:?}")));
                }
            }
            let names: Option<Vec<String>> = match entry.get("K") {
                None => None,
                Some(a) => Some(
                    a.as_array()
                        .ok_or_else(|| Error::Schema(format!("prime {p}.K: expected a list")))?
                        .iter()
                        .map(|x| {
                            x.as_str().map(str::to_string).ok_or_else(|| {
                                Error::Schema(format!("prime {p}.K: expected strings"))
                            })
                        })
                        .collect::<Result<_, _>>()?,
                ),
            };
            let cells: Option<Vec<(u32, u32)>> = match entry.get("cells") {
                None => None,
                Some(a) => Some(
                    a.as_array()
                        .ok_or_else(|| Error::Schema(format!("prime {p}.cells: expected a list")))?
                        .iter()
                        .map(|c| {
                            let pair = c
                                .as_array()
                                .filter(|x| x.len() == 2)
                                .and_then(|x| Some((x[0].as_u64()? as u32, x[1].as_u64()? as u32)));
                            pair.ok_or_else(|| {
                                Error::Schema(format!(
                                    "prime {p}.cells: expected [v_rel, v_flip] pairs"
                                ))
                            })
                        })
                        .collect::<Result<_, _>>()?,
                ),
            };
            let refs: Option<Vec<&str>> = names
                .as_ref()
                .map(|v| v.iter().map(|s| s.as_str()).collect());
            spec = spec.restrict(p, refs.as_deref(), cells.as_deref())?;
            if let Some(a) = entry.get("cells_full") {
                let bad = || {
                    Error::Schema(format!(
                        "prime {p}.cells_full: expected [class, v_rel, v_flip] triples"
                    ))
                };
                let mut full = BTreeSet::new();
                for c in a.as_array().ok_or_else(bad)? {
                    let x = c.as_array().filter(|x| x.len() == 3).ok_or_else(bad)?;
                    let k = x[0]
                        .as_str()
                        .and_then(|n| parse_qp_class(p, n))
                        .ok_or_else(bad)?;
                    let vr = x[1].as_u64().ok_or_else(bad)? as u32;
                    let vf = x[2].as_u64().ok_or_else(bad)? as u32;
                    full.insert((k, vr, vf));
                }
                let e = spec.primes.get_mut(&p).expect("restricted above");
                *e = e.intersection(&full).copied().collect();
            }
        }
        Ok(spec)
    }

    /// Canonical JSON: every constrained prime listed cell by cell. Parses
    /// back to the same spec.
    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        for (&p, s) in &self.primes {
            let cells: Vec<Value> = s
                .iter()
                .map(|&(k, a, b)| serde_json::json!([qp_class_name(p, k), a, b]))
                .collect();
            obj.insert(p.to_string(), serde_json::json!({ "cells_full": cells }));
        }
        if let Some(s) = &self.inf {
            obj.insert(
                "inf".into(),
                Value::from(s.iter().map(|t| t.name()).collect::<Vec<_>>()),
            );
        }
        Value::Object(obj)
    }

    /// Stable identifier used to key caches.
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.to_json().to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// mu(Sigma_p) = mu(phi Sigma_p) at every constrained prime, where
    /// phi Sigma_p is the set of pairs whose flip lies in Sigma_p.
    pub fn flipped_masses_agree(&self) -> bool {
        self.primes.iter().all(|(&p, s)| {
            let flipped: Rational64 = all_local_pairs(p)
                .iter()
                .filter(|q| s.contains(&flipped_local(q)))
                .map(|q| q.weight)
                .sum();
            flipped == self.mu_p(p)
        })
    }
}

/// Cell of the flip of a local pair: the flipped K_p is Q_p(sqrt N(alpha)).
fn flipped_local(q: &LocalPair) -> Cell {
    (q.flip_class, q.v_k + q.v_rel - q.v_flip, q.v_k)
}
