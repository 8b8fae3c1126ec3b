//! Shared numerical kernels: log-factorials, multi-index enumeration,
//! Gauss-Legendre rules, compensated summation, polynomial extrapolation
//! and small fitting helpers.

use num_complex::Complex64;
use std::sync::OnceLock;

const LN_FACT_CAP: usize = 512;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_CAP + 1);
        t.push(0.0);
        let mut acc = 0.0_f64;
        for k in 1..=LN_FACT_CAP {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// ln(k!)
pub fn ln_factorial(k: usize) -> f64 {
    ln_fact_table()[k]
}

/// ln(alpha!) for a multi-index.
pub fn ln_multi_factorial(alpha: &[usize]) -> f64 {
    alpha.iter().map(|&a| ln_factorial(a)).sum()
}

pub fn multi_order(alpha: &[usize]) -> usize {
    alpha.iter().sum()
}

/// All multi-indices of the given dimension with total order exactly `order`.
pub fn multi_indices_of_order(dim: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, order: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(order);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=order {
            prefix.push(first);
            rec(dim - 1, order - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, order, &mut Vec::new(), &mut out);
    out
}

/// All multi-indices with total order `<= order`, grouped by increasing order.
pub fn multi_indices_upto(dim: usize, order: usize) -> Vec<Vec<usize>> {
    (0..=order)
        .flat_map(|d| multi_indices_of_order(dim, d))
        .collect()
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let mut p0 = 1.0_f64;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped onto [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// Kahan compensated accumulator for f64.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated accumulator for complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSumC {
    re: KahanSum,
    im: KahanSum,
}

impl KahanSumC {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Neville polynomial extrapolation of (xs, ys) to x = 0.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mut t = ys.to_vec();
    for k in 1..n {
        for i in 0..n - k {
            let denom = xs[i] - xs[i + k];
            t[i] = ((0.0 - xs[i + k]) * t[i] + xs[i] * t[i + 1]) / denom;
        }
    }
    t[0]
}

/// Least-squares fit y = a + b t; returns (a, b, relative RMS residual).
pub fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for (ti, yi) in t.iter().zip(y) {
        stt += (ti - tm) * (ti - tm);
        sty += (ti - tm) * (yi - ym);
    }
    let b = if stt > 0.0 { sty / stt } else { 0.0 };
    let a = ym - b * tm;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (ti, yi) in t.iter().zip(y) {
        let r = yi - (a + b * ti);
        ss_res += r * r;
        ss_tot += (yi - ym) * (yi - ym);
    }
    let rel = if ss_tot > 0.0 {
        (ss_res / ss_tot).sqrt()
    } else if ss_res > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    (a, b, rel)
}

/// Slope of ln(y) against ln(x), ignoring non-positive ys.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi > 0.0)
        .map(|(&xi, &yi)| (xi.ln(), yi.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let t: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let v: Vec<f64> = pts.iter().map(|p| p.1).collect();
    Some(linear_fit(&t, &v).1)
}

/// Euclidean norm of a real vector.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean norm of a complex vector.
pub fn cnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Bilinear dot product z . w = sum z_j w_j (no conjugation).
pub fn cdot(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Smooth plateau cutoff: 1 for r <= r1, 0 for r >= r2, Gevrey transition between.
pub fn plateau(r: f64, r1: f64, r2: f64) -> f64 {
    debug_assert!(r2 > r1);
    let s = (r2 - r) / (r2 - r1);
    let b = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let num = b(s);
    let den = num + b(1.0 - s);
    if den == 0.0 {
        if r <= r1 {
            1.0
        } else {
            0.0
        }
    } else {
        num / den
    }
}
