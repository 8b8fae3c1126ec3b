//! Regular Denjoy-Carleman weight sequences and their associated functions.
//!
//! A sequence M_k is regular when m_k = M_k/k! satisfies m_0 = m_1 = 1,
//! log-convexity, bounded ratio growth and m_k^{1/k} -> infinity.  Everything
//! is stored as ln(m_k): M_k for Gevrey exponents overflows f64 near k = 170.

use crate::error::{Error, Result};
use crate::numeric::ln_factorial;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::RwLock;

/// Safety margin applied on top of the finite-range suprema when fixing the
/// structural constant c (the paper requires strict inequality).
pub const C_MARGIN: f64 = 1.05;

/// Default tabulated range.
pub const DEFAULT_K_MAX: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SequenceKind {
    Gevrey { s: f64 },
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Certificate {
    Holds,
    Fails,
    Unchecked,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularSequence {
    pub kind: SequenceKind,
    /// ln(m_k) for 0 <= k <= k_max.
    log_m: Vec<f64>,
    pub k_max: usize,
    /// Structural constant, strictly above the finite-range suprema.
    c: f64,
    pub moderate_growth: Certificate,
}

impl RegularSequence {
    /// Gevrey class with exponent s > 1: M_k = (k!)^s, so ln m_k = (s-1) ln k!.
    ///
    /// Gevrey sequences have moderate growth, so c is fixed large enough to
    /// certify both the ratio bound and M_k <= c^{k+1} M_n M_{k-n}.
    pub fn gevrey(s: f64, k_max: usize) -> Result<Self> {
        if s <= 1.0 {
            return Err(Error::Domain(format!("Gevrey exponent must be > 1, got {s}")));
        }
        if k_max < 8 {
            return Err(Error::InsufficientRange { min: 8, got: k_max });
        }
        let log_m: Vec<f64> = (0..=k_max).map(|k| (s - 1.0) * ln_factorial(k)).collect();
        let mut seq = Self {
            kind: SequenceKind::Gevrey { s },
            log_m,
            k_max,
            c: 0.0,
            moderate_growth: Certificate::Unchecked,
        };
        seq.c = choose_c(&seq, k_max, true)?;
        seq.moderate_growth = if seq.check_moderate_growth(k_max) {
            Certificate::Holds
        } else {
            Certificate::Fails
        };
        Ok(seq)
    }

    /// Sequence from a table of ln(m_k); validation is reported, not enforced,
    /// so deliberately broken tables can be used for negative testing.
    pub fn from_log_table(log_m: Vec<f64>) -> Result<Self> {
        if log_m.len() < 9 {
            return Err(Error::InsufficientRange {
                min: 9,
                got: log_m.len(),
            });
        }
        let k_max = log_m.len() - 1;
        let mut seq = Self {
            kind: SequenceKind::Table,
            log_m,
            k_max,
            c: 0.0,
            moderate_growth: Certificate::Unchecked,
        };
        seq.c = choose_c(&seq, k_max, false).unwrap_or(C_MARGIN);
        Ok(seq)
    }

    pub fn ln_m(&self, k: usize) -> Result<f64> {
        self.log_m
            .get(k)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: k,
                k_max: self.k_max,
            })
    }

    /// m_k = M_k / k!
    pub fn m(&self, k: usize) -> Result<f64> {
        Ok(self.ln_m(k)?.exp())
    }

    /// ln(M_k) = ln(k!) + ln(m_k)
    pub fn ln_big_m(&self, k: usize) -> Result<f64> {
        Ok(self.ln_m(k)? + ln_factorial(k))
    }

    /// M_k = k! m_k (overflows for large k; prefer ln_big_m in estimates).
    pub fn big_m(&self, k: usize) -> Result<f64> {
        Ok(self.ln_big_m(k)?.exp())
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Check M_k <= c^{k+1} min_n M_n M_{k-n} over the tabulated range.
    fn check_moderate_growth(&self, k_limit: usize) -> bool {
        let ln_c = self.c.ln();
        for k in 0..=k_limit.min(self.k_max) {
            let lhs = self.ln_big_m(k).unwrap();
            let min_split = (0..=k)
                .map(|n| self.ln_big_m(n).unwrap() + self.ln_big_m(k - n).unwrap())
                .fold(f64::INFINITY, f64::min);
            if lhs > (k + 1) as f64 * ln_c + min_split + 1e-12 {
                return false;
            }
        }
        true
    }
}

/// Fix the structural constant c = margin * max(1, ratio-sup, [moderate-growth sup]).
///
/// The ratio sup is max_{1 <= k <= K-1} (m_{k+1}/m_k)^{1/k}; with
/// `include_moderate_growth` the sup of (M_k / min_n M_n M_{k-n})^{1/(k+1)} is
/// also taken into account, as the paper does for moderate-growth sequences.
pub fn choose_c(seq: &RegularSequence, k: usize, include_moderate_growth: bool) -> Result<f64> {
    if k < 2 {
        return Err(Error::InsufficientRange { min: 2, got: k });
    }
    let k = k.min(seq.k_max);
    let mut sup = 1.0_f64;
    for j in 1..k {
        let ratio = ((seq.ln_m(j + 1)? - seq.ln_m(j)?) / j as f64).exp();
        sup = sup.max(ratio);
    }
    if include_moderate_growth {
        for j in 0..=k {
            let lhs = seq.ln_big_m(j)?;
            let min_split = (0..=j)
                .map(|n| seq.ln_big_m(n).unwrap() + seq.ln_big_m(j - n).unwrap())
                .fold(f64::INFINITY, f64::min);
            sup = sup.max(((lhs - min_split) / (j + 1) as f64).exp());
        }
    }
    Ok(C_MARGIN * sup)
}

/// Pass/fail report for Definition 2.1-style conditions (a)-(e).
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub normalized: bool,
    pub log_convex: bool,
    pub ratio_bounded: bool,
    pub ratio_sup: f64,
    pub growth_unbounded: bool,
    pub moderate_growth: bool,
    pub moderate_growth_sup: f64,
    pub c_used: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.normalized
            && self.log_convex
            && self.ratio_bounded
            && self.growth_unbounded
            && self.moderate_growth
    }
}

/// Check (a) normalization, (b) log-convexity, (c) ratio boundedness,
/// (d) unbounded growth of m_k^{1/k} (monotone beyond a threshold index on a
/// finite range), (e) moderate growth with the c of `choose_c`.
pub fn validate(seq: &RegularSequence, k: usize) -> Result<ValidationReport> {
    let k = k.min(seq.k_max);
    if k < 4 {
        return Err(Error::InsufficientRange { min: 4, got: k });
    }
    let tol = 1e-10;
    let normalized = seq.ln_m(0)?.abs() < tol && seq.ln_m(1)?.abs() < tol;

    let mut log_convex = true;
    for j in 1..k {
        if seq.ln_m(j - 1)? + seq.ln_m(j + 1)? < 2.0 * seq.ln_m(j)? - tol {
            log_convex = false;
            break;
        }
    }

    let mut ratio_sup = 0.0_f64;
    for j in 1..k {
        ratio_sup = ratio_sup.max(((seq.ln_m(j + 1)? - seq.ln_m(j)?) / j as f64).exp());
    }
    let ratio_bounded = ratio_sup.is_finite();

    // (d) finite-range proxy: m_j^{1/j} strictly increasing beyond a threshold
    // index, and clearing 1 at the top of the range.
    let threshold = 4usize;
    let root = |j: usize| seq.ln_m(j).unwrap() / j as f64;
    let mut growth_unbounded = root(k) > 0.05;
    for j in threshold..k {
        if root(j + 1) <= root(j) + 1e-14 {
            growth_unbounded = false;
            break;
        }
    }

    let c_mod = choose_c(seq, k, true)?;
    let mut moderate_growth_sup = 0.0_f64;
    let mut moderate_growth = true;
    let ln_c = c_mod.ln();
    for j in 0..=k {
        let lhs = seq.ln_big_m(j)?;
        let min_split = (0..=j)
            .map(|n| seq.ln_big_m(n).unwrap() + seq.ln_big_m(j - n).unwrap())
            .fold(f64::INFINITY, f64::min);
        moderate_growth_sup = moderate_growth_sup.max(((lhs - min_split) / (j + 1) as f64).exp());
        if lhs > (j + 1) as f64 * ln_c + min_split + 1e-10 {
            moderate_growth = false;
        }
    }

    Ok(ValidationReport {
        normalized,
        log_convex,
        ratio_bounded,
        ratio_sup,
        growth_unbounded,
        moderate_growth,
        moderate_growth_sup,
        c_used: c_mod,
    })
}

#[derive(Debug, Clone, Copy)]
struct AssocValues {
    h: f64,
    h1: f64,
    big_n: usize,
}

/// Evaluator for the associated functions h, h_1 and N with a memo cache.
///
/// Log-convexity makes k |-> m_k r^k unimodal, so the infima are scanned only
/// up to the turning point k_stop(r) = first k with m_{k+1} r >= m_k, clamped
/// to k_max with a logged warning.
pub struct AssociatedEvaluator<'a> {
    pub seq: &'a RegularSequence,
    cache: RwLock<HashMap<u64, AssocValues>>,
}

/// One-shot computation of (h(r), h_1(r), N(r)); the evaluator memoizes it.
pub fn associated_values(seq: &RegularSequence, r: f64) -> Result<(f64, f64, usize)> {
    if r <= 0.0 {
        return Err(Error::Domain(format!("associated functions need r > 0, got {r}")));
    }
    let v = compute_assoc(seq, r);
    Ok((v.h, v.h1, v.big_n))
}

fn compute_assoc(seq: &RegularSequence, r: f64) -> AssocValues {
    let ln_r = r.ln();
    // turning point of m_k r^k (and of m_k r^{k-1}: same term ratio)
    let mut k_stop = seq.k_max;
    for k in 0..seq.k_max {
        if seq.ln_m(k + 1).unwrap() + ln_r >= seq.ln_m(k).unwrap() {
            k_stop = k;
            break;
        }
    }
    if k_stop == seq.k_max {
        log::warn!(
            "associated-function scan clamped at k_max = {} for r = {r:.3e}",
            seq.k_max
        );
    }
    let mut ln_h = f64::INFINITY;
    for k in 0..=k_stop {
        ln_h = ln_h.min(seq.ln_m(k).unwrap() + k as f64 * ln_r);
    }
    let mut ln_h1 = f64::INFINITY;
    let top = k_stop.max(1);
    for k in 1..=top {
        ln_h1 = ln_h1.min(seq.ln_m(k).unwrap() + (k - 1) as f64 * ln_r);
    }
    // smallest index attaining the h1 infimum, with a tolerance so exact
    // mathematical ties are broken downward despite roundoff
    let tie_tol = 1e-9 * (1.0 + ln_h1.abs());
    let mut big_n = 1;
    for k in 1..=top {
        if seq.ln_m(k).unwrap() + (k - 1) as f64 * ln_r <= ln_h1 + tie_tol {
            big_n = k;
            break;
        }
    }
    AssocValues {
        h: ln_h.exp().min(1.0),
        h1: ln_h1.exp().min(1.0),
        big_n,
    }
}

impl<'a> AssociatedEvaluator<'a> {
    pub fn new(seq: &'a RegularSequence) -> Self {
        Self {
            seq,
            cache: RwLock::new(HashMap::new()),
        }
    }

    fn lookup(&self, r: f64) -> AssocValues {
        let key = r.to_bits();
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return *v;
        }
        let v = compute_assoc(self.seq, r);
        self.cache.write().unwrap().insert(key, v);
        v
    }

    /// h(r) = inf_k m_k r^k, in (0, 1]; equals 1 for r >= 1.
    pub fn h_value(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::Domain(format!("h requires r > 0, got {r}")));
        }
        Ok(self.lookup(r).h)
    }

    /// h_1(r) = inf_{k >= 1} m_k r^{k-1}, in (0, 1]; equals 1 for r >= 1.
    pub fn h1_value(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::Domain(format!("h1 requires r > 0, got {r}")));
        }
        Ok(self.lookup(r).h1)
    }

    /// N(r): smallest n >= 1 with h_1(r) = m_n r^{n-1}.
    ///
    /// The defining min runs over n >= 1, which forces N(r) = 1 for r >= 1
    /// even though the paper's remark quotes N(r) = 0 there.
    pub fn big_n(&self, r: f64) -> Result<usize> {
        if r <= 0.0 {
            return Err(Error::Domain(format!("N requires r > 0, got {r}")));
        }
        Ok(self.lookup(r).big_n)
    }
}
