//! FBI transforms: the Euclidean transform on R^N and the chart transform on
//! maximally real submanifolds, with the bracket <zeta>, the Jacobian factor
//! Delta, and windowed oscillatory quadrature sized to the phase.

pub mod decay;
pub mod inversion;
pub mod scan;
pub mod wedge;

use crate::error::{Error, Result};
use crate::jets::JetFunction;
use crate::manifold::MaximallyRealChart;
use crate::numeric::{cdot, gauss_legendre_on, norm, plateau, KahanSumC};
use num_complex::Complex64;

fn re_norm(zeta: &[Complex64]) -> f64 {
    zeta.iter().map(|z| z.re * z.re).sum::<f64>().sqrt()
}

fn im_norm(zeta: &[Complex64]) -> f64 {
    zeta.iter().map(|z| z.im * z.im).sum::<f64>().sqrt()
}

pub fn in_cone(zeta: &[Complex64]) -> bool {
    im_norm(zeta) < re_norm(zeta)
}

/// <zeta> = principal square root of zeta . zeta, defined on the cone
/// |Im zeta| < |Re zeta| where Re <zeta> > 0.
pub fn bracket(zeta: &[Complex64]) -> Result<Complex64> {
    if !in_cone(zeta) {
        return Err(Error::OutsideCone);
    }
    Ok(cdot(zeta, zeta).sqrt())
}

/// Delta(z, zeta) = det(Id + i z (x) zeta / <zeta>) = 1 + i z.zeta / <zeta>,
/// the Jacobian of zeta |-> zeta + i z <zeta> by the rank-one determinant
/// identity.
pub fn jacobian_delta(z: &[Complex64], zeta: &[Complex64]) -> Result<Complex64> {
    let br = bracket(zeta)?;
    Ok(Complex64::ONE + Complex64::i() * cdot(z, zeta) / br)
}

/// Numeric determinant of the Jacobian of zeta |-> zeta + i z <zeta>,
/// cross-checking the rank-one identity by central differences (the map is
/// holomorphic, so real-step differences converge to the complex derivative).
pub fn jacobian_delta_numeric(z: &[Complex64], zeta: &[Complex64]) -> Result<Complex64> {
    let m = zeta.len();
    let map = |w: &[Complex64]| -> Result<Vec<Complex64>> {
        let br = bracket(w)?;
        Ok(w.iter().zip(z).map(|(wj, zj)| wj + Complex64::i() * zj * br).collect())
    };
    let h = 1e-6 * norm(&zeta.iter().map(|w| w.norm()).collect::<Vec<_>>()).max(1e-6);
    let mut jac = vec![vec![Complex64::ZERO; m]; m];
    for k in 0..m {
        let mut wp = zeta.to_vec();
        let mut wm = zeta.to_vec();
        wp[k] += h;
        wm[k] -= h;
        let fp = map(&wp)?;
        let fm = map(&wm)?;
        for j in 0..m {
            jac[j][k] = (fp[j] - fm[j]) / (2.0 * h);
        }
    }
    Ok(match m {
        1 => jac[0][0],
        2 => jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0],
        _ => return Err(Error::Unsupported("Jacobian beyond m = 2".into())),
    })
}

/// Kernel of the lambda-FBI transform on a chart.
#[derive(Debug, Clone)]
pub struct FbiKernel {
    pub lambda: f64,
    pub chart: MaximallyRealChart,
}

impl FbiKernel {
    pub fn new(lambda: f64, chart: MaximallyRealChart) -> Self {
        Self { lambda, chart }
    }

    /// e^{i zeta.(z - z') - lambda <zeta><z - z'>^2} Delta(lambda(z - z'), zeta)
    pub fn eval(
        &self,
        z: &[Complex64],
        zp: &[Complex64],
        zeta: &[Complex64],
    ) -> Result<Complex64> {
        let d: Vec<Complex64> = z.iter().zip(zp).map(|(a, b)| a - b).collect();
        let br = bracket(zeta)?;
        let phase = Complex64::i() * cdot(zeta, &d) - self.lambda * br * cdot(&d, &d);
        let scaled: Vec<Complex64> = d.iter().map(|w| self.lambda * w).collect();
        Ok(phase.exp() * jacobian_delta(&scaled, zeta)?)
    }
}

/// Compactly supported distributions the transforms accept.
#[derive(Clone)]
pub enum Distribution {
    Smooth(JetFunction),
    Dirac { at: Vec<f64> },
    /// m = 1 step function jumping at 0 (H(0) taken as 1/2 for point probes).
    Heaviside,
    /// m = 1 boundary value 1/(x + i sign 0), computed on an eps-ladder and
    /// extrapolated (order 1).
    CauchyBoundary { sign: f64 },
}

impl Distribution {
    pub fn dim(&self) -> usize {
        match self {
            Distribution::Smooth(f) => f.dim,
            Distribution::Dirac { at } => at.len(),
            _ => 1,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Distribution::Smooth(f) => f.name.clone(),
            Distribution::Dirac { .. } => "dirac".into(),
            Distribution::Heaviside => "heaviside".into(),
            Distribution::CauchyBoundary { sign } => {
                if *sign >= 0.0 {
                    "cauchy_plus".into()
                } else {
                    "cauchy_minus".into()
                }
            }
        }
    }
}

/// Stable listing of pairing-only corpus members: (name, dim).
pub fn distribution_catalog() -> Vec<(&'static str, usize)> {
    vec![("cauchy_minus", 1), ("cauchy_plus", 1), ("dirac", 1), ("heaviside", 1)]
}

pub fn distribution_by_name(name: &str) -> Option<Distribution> {
    match name {
        "dirac" => Some(Distribution::Dirac { at: vec![0.0] }),
        "heaviside" => Some(Distribution::Heaviside),
        "cauchy_plus" => Some(Distribution::CauchyBoundary { sign: 1.0 }),
        "cauchy_minus" => Some(Distribution::CauchyBoundary { sign: -1.0 }),
        _ => crate::corpus::by_name(name).map(Distribution::Smooth),
    }
}

/// Radial plateau cutoff chi: identically 1 on |y| <= r1, 0 beyond r2.
#[derive(Debug, Clone, Copy)]
pub struct ChiCutoff {
    pub r1: f64,
    pub r2: f64,
}

impl ChiCutoff {
    pub fn value(&self, y: &[f64]) -> f64 {
        plateau(norm(y), self.r1, self.r2)
    }
}

/// Oscillatory-quadrature controls.
#[derive(Debug, Clone, Copy)]
pub struct FbiOptions {
    pub chi: ChiCutoff,
    /// Gauss-Legendre nodes per phase cycle.
    pub nodes_per_cycle: f64,
    pub min_nodes: usize,
    /// Half-width of the Gaussian window in units of 1/sqrt(lambda |zeta|).
    pub window_sigmas: f64,
}

impl Default for FbiOptions {
    fn default() -> Self {
        Self {
            chi: ChiCutoff { r1: 0.45, r2: 0.8 },
            nodes_per_cycle: 4.5,
            min_nodes: 48,
            window_sigmas: 8.0,
        }
    }
}

/// Geometric break points around the regularized Cauchy pole at 0.
fn cauchy_breaks(eps: f64) -> Vec<f64> {
    let mut b = vec![0.1, 0.03, 0.01, 0.003, 0.001];
    let mut t = eps;
    while t < 1e-3 {
        b.push(t);
        t *= 4.0;
    }
    let mut out: Vec<f64> = b.iter().flat_map(|&t| [t, -t]).collect();
    out.sort_by(|p, q| p.partial_cmp(q).unwrap());
    out
}

fn nodes_for(opts: &FbiOptions, freq: f64, len: f64) -> usize {
    let cycles = freq * len / (2.0 * std::f64::consts::PI);
    ((opts.nodes_per_cycle * cycles).ceil() as usize).max(opts.min_nodes)
}

/// 1-D panel integrator with optional interior break points (kinks, graded
/// panels around a near-singularity).
fn integrate_panels<F: Fn(f64) -> Complex64>(
    a: f64,
    b: f64,
    breaks: &[f64],
    nodes: usize,
    f: F,
) -> Complex64 {
    let mut edges: Vec<f64> = vec![a, b];
    edges.extend(breaks.iter().copied().filter(|t| a < *t && *t < b));
    edges.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut acc = KahanSumC::new();
    for w in edges.windows(2) {
        if w[1] - w[0] < 1e-300 {
            continue;
        }
        let frac = (w[1] - w[0]) / (b - a);
        let n = ((nodes as f64 * frac).ceil() as usize).max(32);
        let (xs, ws) = gauss_legendre_on(n, w[0], w[1]);
        for (x, wt) in xs.iter().zip(&ws) {
            acc.add(f(*x) * *wt);
        }
    }
    acc.value()
}

/// The chart FBI transform F^lambda[chi u](z, zeta) by windowed quadrature
/// over the chart parameter, with surface element det Z_x dx.
pub fn fbi_transform(
    u: &Distribution,
    kernel: &FbiKernel,
    z: &[Complex64],
    zeta: &[Complex64],
    opts: &FbiOptions,
) -> Result<Complex64> {
    let chart = &kernel.chart;
    let m = chart.m;
    if u.dim() != m {
        return Err(Error::Domain(format!(
            "distribution dim {} vs chart dim {m}",
            u.dim()
        )));
    }
    let zeta_abs = zeta.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    if zeta_abs == 0.0 {
        return Err(Error::Domain("fbi transform needs zeta != 0".into()));
    }
    match u {
        Distribution::Dirac { at } => {
            let zp = chart.z(at);
            Ok(kernel.eval(z, &zp, zeta)? * opts.chi.value(at))
        }
        Distribution::Smooth(f) => {
            integrate_chart(kernel, z, zeta, opts, &|x| f.eval(x), &[])
        }
        Distribution::Heaviside => {
            if m != 1 {
                return Err(Error::Unsupported("Heaviside is one-dimensional".into()));
            }
            integrate_chart(kernel, z, zeta, opts, &|x| {
                if x[0] >= 0.0 {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                }
            }, &[0.0])
        }
        Distribution::CauchyBoundary { sign } => {
            if m != 1 {
                return Err(Error::Unsupported("Cauchy boundary value is one-dimensional".into()));
            }
            // regularized at eps ~ 1/|zeta|, then linear eps -> 0 extrapolation
            let e1 = 0.1 / zeta_abs;
            let e2 = 0.05 / zeta_abs;
            let val = |eps: f64| -> Result<Complex64> {
                let breaks = cauchy_breaks(eps);
                integrate_chart(kernel, z, zeta, opts, &|x| {
                    Complex64::ONE / Complex64::new(x[0], sign * eps)
                }, &breaks)
            };
            let f1 = val(e1)?;
            let f2 = val(e2)?;
            Ok(f2 + (f2 - f1) * (0.0 - e2) / (e2 - e1))
        }
    }
}

fn integrate_chart(
    kernel: &FbiKernel,
    z: &[Complex64],
    zeta: &[Complex64],
    opts: &FbiOptions,
    eval: &dyn Fn(&[f64]) -> Complex64,
    breaks: &[f64],
) -> Result<Complex64> {
    let chart = &kernel.chart;
    let m = chart.m;
    let zeta_abs = zeta.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    let window = opts.window_sigmas / (kernel.lambda * zeta_abs).sqrt();
    let center: Vec<f64> = z.iter().map(|w| w.re).collect();
    let freq = re_norm(zeta);
    let mut boxes = Vec::with_capacity(m);
    for j in 0..m {
        let (lo, hi) = chart.u_box[j];
        let a = (center[j] - window).max(lo.max(-opts.chi.r2));
        let b = (center[j] + window).min(hi.min(opts.chi.r2));
        if a >= b {
            return Ok(Complex64::ZERO);
        }
        boxes.push((a, b));
    }
    match m {
        1 => {
            let n = nodes_for(opts, freq, boxes[0].1 - boxes[0].0);
            Ok(integrate_panels(boxes[0].0, boxes[0].1, breaks, n, |x| {
                let xv = [x];
                let chi = opts.chi.value(&xv);
                if chi == 0.0 {
                    return Complex64::ZERO;
                }
                let zp = chart.z(&xv);
                let k = kernel.eval(z, &zp, zeta).unwrap_or(Complex64::ZERO);
                chi * eval(&xv) * k * chart.det_zx(&xv)
            }))
        }
        2 => {
            let n0 = nodes_for(opts, freq, boxes[0].1 - boxes[0].0);
            let n1 = nodes_for(opts, freq, boxes[1].1 - boxes[1].0);
            let (xs, xw) = gauss_legendre_on(n0, boxes[0].0, boxes[0].1);
            let (ys, yw) = gauss_legendre_on(n1, boxes[1].0, boxes[1].1);
            let mut acc = KahanSumC::new();
            for (x, wx) in xs.iter().zip(&xw) {
                for (y, wy) in ys.iter().zip(&yw) {
                    let xv = [*x, *y];
                    let chi = opts.chi.value(&xv);
                    if chi == 0.0 {
                        continue;
                    }
                    let zp = chart.z(&xv);
                    let k = kernel.eval(z, &zp, zeta)?;
                    acc.add(chi * eval(&xv) * k * chart.det_zx(&xv) * wx * wy);
                }
            }
            Ok(acc.value())
        }
        _ => Err(Error::Unsupported("fbi transform beyond m = 2".into())),
    }
}

/// The classic Euclidean FBI transform F[chi u](x, xi) =
/// <u(y), e^{i (x-y).xi - |xi| (x-y)^2}> (no Delta factor, lambda = 1).
pub fn fbi_euclidean(
    u: &Distribution,
    x: &[f64],
    xi: &[f64],
    opts: &FbiOptions,
) -> Result<Complex64> {
    let m = u.dim();
    let xi_abs = norm(xi);
    if xi_abs == 0.0 {
        return Err(Error::Domain("fbi transform needs xi != 0".into()));
    }
    let kernel = move |y: &[f64]| -> Complex64 {
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let d2: f64 = d.iter().map(|t| t * t).sum();
        let phase = Complex64::new(
            -xi_abs * d2,
            d.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>(),
        );
        phase.exp()
    };
    match u {
        Distribution::Dirac { at } => Ok(kernel(at) * opts.chi.value(at)),
        Distribution::Smooth(f) => euclid_quad(m, x, xi_abs, opts, &|y| f.eval(y), &[], &kernel),
        Distribution::Heaviside => euclid_quad(
            1,
            x,
            xi_abs,
            opts,
            &|y| {
                if y[0] >= 0.0 {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                }
            },
            &[0.0],
            &kernel,
        ),
        Distribution::CauchyBoundary { sign } => {
            let e1 = 0.1 / xi_abs;
            let e2 = 0.05 / xi_abs;
            let val = |eps: f64| {
                let breaks = cauchy_breaks(eps);
                euclid_quad(
                    1,
                    x,
                    xi_abs,
                    opts,
                    &|y| Complex64::ONE / Complex64::new(y[0], sign * eps),
                    &breaks,
                    &kernel,
                )
            };
            let f1 = val(e1)?;
            let f2 = val(e2)?;
            Ok(f2 + (f2 - f1) * (0.0 - e2) / (e2 - e1))
        }
    }
}

fn euclid_quad(
    m: usize,
    x: &[f64],
    xi_abs: f64,
    opts: &FbiOptions,
    eval: &dyn Fn(&[f64]) -> Complex64,
    breaks: &[f64],
    kernel: &dyn Fn(&[f64]) -> Complex64,
) -> Result<Complex64> {
    let window = opts.window_sigmas / xi_abs.sqrt();
    let mut boxes = Vec::with_capacity(m);
    for j in 0..m {
        let a = (x[j] - window).max(-opts.chi.r2);
        let b = (x[j] + window).min(opts.chi.r2);
        if a >= b {
            return Ok(Complex64::ZERO);
        }
        boxes.push((a, b));
    }
    match m {
        1 => {
            let n = nodes_for(opts, xi_abs, boxes[0].1 - boxes[0].0);
            Ok(integrate_panels(boxes[0].0, boxes[0].1, breaks, n, |y| {
                let yv = [y];
                let chi = opts.chi.value(&yv);
                if chi == 0.0 {
                    return Complex64::ZERO;
                }
                chi * eval(&yv) * kernel(&yv)
            }))
        }
        2 => {
            let n0 = nodes_for(opts, xi_abs, boxes[0].1 - boxes[0].0);
            let n1 = nodes_for(opts, xi_abs, boxes[1].1 - boxes[1].0);
            let (us, uw) = gauss_legendre_on(n0, boxes[0].0, boxes[0].1);
            let (vs, vw) = gauss_legendre_on(n1, boxes[1].0, boxes[1].1);
            let mut acc = KahanSumC::new();
            for (u1, w1) in us.iter().zip(&uw) {
                for (v1, w2) in vs.iter().zip(&vw) {
                    let yv = [*u1, *v1];
                    let chi = opts.chi.value(&yv);
                    if chi == 0.0 {
                        continue;
                    }
                    acc.add(chi * eval(&yv) * kernel(&yv) * w1 * w2);
                }
            }
            Ok(acc.value())
        }
        _ => Err(Error::Unsupported("euclidean fbi beyond dimension 2".into())),
    }
}
