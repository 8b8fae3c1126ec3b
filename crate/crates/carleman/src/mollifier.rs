//! The radial cutoff psi on C^m (m = 1, 2), quadrature over the moving ball
//! |z - v| <= eps |v|, the polynomial-reproduction identity the extension
//! operator rests on, and v-derivatives of the scaled mollifier.

use crate::corpus::{bump_derivative, bump_value, sq_bump_derivative, sq_bump_value};
use crate::error::{Error, Result};
use crate::jets::Poly;
use crate::numeric::{gauss_legendre_on, multi_indices_of_order, norm, KahanSumC};
use num_complex::Complex64;

/// Normalized radial cutoff psi(z) = norm_const exp(-1/(1-(|z|/eps)^2)) on
/// |z| < eps, with total integral 1 over C^m.
#[derive(Debug, Clone)]
pub struct RadialCutoff {
    pub m: usize,
    pub eps: f64,
    norm_const: f64,
    pub quad_error: f64,
}

fn sphere_surface(m: usize) -> f64 {
    // surface of S^{2m-1}
    match m {
        1 => 2.0 * std::f64::consts::PI,
        2 => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
        _ => unreachable!("m is restricted to 1 or 2"),
    }
}

impl RadialCutoff {
    pub fn build(m: usize, eps: f64) -> Result<Self> {
        if !(m == 1 || m == 2) {
            return Err(Error::Unsupported(format!("cutoff dimension m = {m}")));
        }
        if !(0.0 < eps && eps < 1.0) {
            return Err(Error::Domain(format!("cutoff radius must be in (0,1), got {eps}")));
        }
        let radial = |n: usize| -> f64 {
            let (r, w) = gauss_legendre_on(n, 0.0, eps);
            r.iter()
                .zip(&w)
                .map(|(&ri, &wi)| wi * bump_value(ri / eps) * ri.powi(2 * m as i32 - 1))
                .sum()
        };
        let coarse = radial(80);
        let fine = radial(160);
        let total = sphere_surface(m) * fine;
        Ok(Self {
            m,
            eps,
            norm_const: 1.0 / total,
            quad_error: (fine - coarse).abs() / fine,
        })
    }

    /// psi as a function of |z| (dimensionless radius in [0, eps)).
    pub fn profile(&self, rho: f64) -> f64 {
        self.norm_const * bump_value(rho / self.eps)
    }

    /// d^order/drho^order of the profile, order <= 4.
    pub fn profile_derivative(&self, order: usize, rho: f64) -> f64 {
        assert!(order <= 4);
        self.norm_const * bump_derivative(order, rho / self.eps) / self.eps.powi(order as i32)
    }

    /// The profile as a function of the squared radius: G(y) = psi at |z|^2 = y.
    pub fn sq_profile(&self, y: f64) -> f64 {
        self.norm_const * sq_bump_value(y / (self.eps * self.eps))
    }

    /// d^order/dy^order of G, order <= 4.
    pub fn sq_profile_derivative(&self, order: usize, y: f64) -> f64 {
        assert!(order <= 4);
        self.norm_const * sq_bump_derivative(order, y / (self.eps * self.eps))
            / (self.eps * self.eps).powi(order as i32)
    }

    /// psi(z) for z in C^m.
    pub fn value(&self, z: &[Complex64]) -> f64 {
        let rho2: f64 = z.iter().map(|w| w.norm_sqr()).sum();
        self.sq_profile(rho2)
    }
}

/// Quadrature rule over the ball |z - v| <= radius in C^m, exact for real
/// polynomials of moderate total degree and spectrally accurate for products
/// of the radial cutoff with smooth factors.
#[derive(Debug, Clone)]
pub struct ShellQuadrature {
    pub nodes: Vec<Vec<Complex64>>,
    pub weights: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl ShellQuadrature {
    pub fn new(m: usize, center: &[f64], radius: f64) -> Result<Self> {
        match m {
            1 => Self::disc(center, radius, 32, 64),
            2 => Self::ball4(center, radius, 32, 10, 20),
            _ => Err(Error::Unsupported(format!("quadrature dimension m = {m}"))),
        }
    }

    pub fn with_resolution(m: usize, center: &[f64], radius: f64, nr: usize, nang: usize) -> Result<Self> {
        match m {
            1 => Self::disc(center, radius, nr, nang),
            2 => Self::ball4(center, radius, nr, nang / 2, nang),
            _ => Err(Error::Unsupported(format!("quadrature dimension m = {m}"))),
        }
    }

    fn disc(center: &[f64], radius: f64, nr: usize, nt: usize) -> Result<Self> {
        let (rs, rw) = gauss_legendre_on(nr, 0.0, radius);
        let dth = 2.0 * std::f64::consts::PI / nt as f64;
        let mut nodes = Vec::with_capacity(nr * nt);
        let mut weights = Vec::with_capacity(nr * nt);
        for (r, wr) in rs.iter().zip(&rw) {
            for k in 0..nt {
                let th = dth * k as f64;
                nodes.push(vec![Complex64::new(center[0] + r * th.cos(), r * th.sin())]);
                weights.push(wr * r * dth);
            }
        }
        Ok(Self {
            nodes,
            weights,
            center: center.to_vec(),
            radius,
        })
    }

    /// Ball in C^2 = R^4 via hyperspherical coordinates: one phase angle per
    /// complex coordinate plus a Gauss-Legendre rule in xi = cos(2 eta).
    fn ball4(center: &[f64], radius: f64, nr: usize, nxi: usize, nt: usize) -> Result<Self> {
        let (rs, rw) = gauss_legendre_on(nr, 0.0, radius);
        let (xis, xiw) = gauss_legendre_on(nxi, -1.0, 1.0);
        let dth = 2.0 * std::f64::consts::PI / nt as f64;
        let mut nodes = Vec::with_capacity(nr * nxi * nt * nt);
        let mut weights = Vec::with_capacity(nr * nxi * nt * nt);
        for (r, wr) in rs.iter().zip(&rw) {
            for (xi, wxi) in xis.iter().zip(&xiw) {
                let ce = ((1.0 + xi) / 2.0).sqrt();
                let se = ((1.0 - xi) / 2.0).sqrt();
                for k1 in 0..nt {
                    let t1 = dth * k1 as f64;
                    for k2 in 0..nt {
                        let t2 = dth * k2 as f64;
                        nodes.push(vec![
                            Complex64::new(center[0] + r * ce * t1.cos(), r * ce * t1.sin()),
                            Complex64::new(center[1] + r * se * t2.cos(), r * se * t2.sin()),
                        ]);
                        // dV = r^3 dr (1/4) dxi dth1 dth2
                        weights.push(wr * r.powi(3) * 0.25 * wxi * dth * dth);
                    }
                }
            }
        }
        Ok(Self {
            nodes,
            weights,
            center: center.to_vec(),
            radius,
        })
    }

    pub fn integrate<F: Fn(&[Complex64]) -> Complex64>(&self, f: F) -> Complex64 {
        let mut acc = KahanSumC::new();
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(f(z) * *w);
        }
        acc.value()
    }
}

/// |v|^{-2m} int psi((z-v)/|v|) P(z) dlambda(z); by radial symmetry this
/// equals P(v) for holomorphic polynomials up to quadrature tolerance.
pub fn reproduce_polynomial(cutoff: &RadialCutoff, p: &Poly, v: &[f64]) -> Result<Complex64> {
    let v_abs = norm(v);
    if v_abs == 0.0 {
        return Err(Error::Domain("reproduction point v must be nonzero".into()));
    }
    let quad = ShellQuadrature::new(cutoff.m, v, cutoff.eps * v_abs)?;
    let scale = v_abs.powi(-2 * cutoff.m as i32);
    let vc: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Ok(quad.integrate(|z| {
        let w: Vec<Complex64> = z
            .iter()
            .zip(&vc)
            .map(|(zi, vi)| (zi - vi) / v_abs)
            .collect();
        let rho2: f64 = w.iter().map(|x| x.norm_sqr()).sum();
        cutoff.sq_profile(rho2) * scale * p.eval(z)
    }))
}

/// Coefficients of a monomial sum grouped by total degree, with cumulative
/// evaluation of partial sums.
#[derive(Debug, Clone)]
pub struct MonomialSum {
    pub dim: usize,
    by_degree: Vec<Vec<(Vec<usize>, Complex64)>>,
}

impl MonomialSum {
    /// Build from a coefficient oracle alpha -> f_alpha, degrees 0..=max_degree.
    pub fn build<F: FnMut(&[usize]) -> Result<Complex64>>(
        dim: usize,
        max_degree: usize,
        mut coeff: F,
    ) -> Result<Self> {
        let mut by_degree = Vec::with_capacity(max_degree + 1);
        for d in 0..=max_degree {
            let mut row = Vec::new();
            for alpha in multi_indices_of_order(dim, d) {
                let c = coeff(&alpha)?;
                if c != Complex64::ZERO {
                    row.push((alpha, c));
                }
            }
            by_degree.push(row);
        }
        Ok(Self { dim, by_degree })
    }

    pub fn max_degree(&self) -> usize {
        self.by_degree.len() - 1
    }

    /// Sum of the terms with n_lo <= |alpha| <= n_hi at z.
    pub fn eval_between(&self, z: &[Complex64], n_lo: usize, n_hi: usize) -> Complex64 {
        let n_hi = n_hi.min(self.max_degree());
        if n_lo > n_hi {
            return Complex64::ZERO;
        }
        // power tables
        let mut pows: Vec<Vec<Complex64>> = Vec::with_capacity(self.dim);
        for zj in z.iter() {
            let mut col = Vec::with_capacity(n_hi + 1);
            let mut acc = Complex64::ONE;
            for _ in 0..=n_hi {
                col.push(acc);
                acc *= zj;
            }
            pows.push(col);
        }
        let mut total = Complex64::ZERO;
        for d in n_lo..=n_hi {
            for (alpha, coeff) in &self.by_degree[d] {
                let mut term = *coeff;
                for (j, &a) in alpha.iter().enumerate() {
                    term *= pows[j][a];
                }
                total += term;
            }
        }
        total
    }
}

/// Weight applied inside the moving-ball integral: the scaled mollifier
/// |v|^{-2m} psi((z-v)/|v|) or one of its v-derivatives.
#[derive(Debug, Clone, Copy)]
pub enum Weight {
    Psi,
    /// d/dv_j
    Grad(usize),
    /// d^2/dv_i dv_j
    Hess(usize, usize),
}

/// Value, gradient and Hessian in v of H(v) = |v|^{-2m} psi((z - v)/|v|).
///
/// With s = |v|^2, t = |z - v|^2 and G the squared-radius profile this is
/// H = s^{-m} G(t/s); the chain rule below keeps every factor explicit so the
/// tail integrals of the extension module stay cancellation-free.
pub fn scaled_mollifier_jet(
    cutoff: &RadialCutoff,
    z: &[Complex64],
    v: &[f64],
) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let m = cutoff.m;
    let mf = m as f64;
    let s: f64 = v.iter().map(|x| x * x).sum();
    let diffs: Vec<(f64, f64)> = z
        .iter()
        .zip(v)
        .map(|(zj, vj)| (zj.re - vj, zj.im))
        .collect();
    let t: f64 = diffs.iter().map(|(re, im)| re * re + im * im).sum();
    let y = t / s;
    let g0 = cutoff.sq_profile(y);
    let g1 = cutoff.sq_profile_derivative(1, y);
    let g2 = cutoff.sq_profile_derivative(2, y);

    let t_g: Vec<f64> = diffs.iter().map(|(re, _)| -2.0 * re).collect();
    let s_g: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();

    let y_g: Vec<f64> = (0..m)
        .map(|j| t_g[j] / s - t * s_g[j] / (s * s))
        .collect();

    let sm = s.powf(-mf);
    let value = sm * g0;
    let grad: Vec<f64> = (0..m)
        .map(|j| -mf * s.powf(-mf - 1.0) * s_g[j] * g0 + sm * g1 * y_g[j])
        .collect();

    let mut hess = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let t_ij = if i == j { 2.0 } else { 0.0 };
            let s_ij = if i == j { 2.0 } else { 0.0 };
            let y_ij = t_ij / s - t_g[j] * s_g[i] / (s * s) - t_g[i] * s_g[j] / (s * s)
                - t * s_ij / (s * s)
                + 2.0 * t * s_g[i] * s_g[j] / (s * s * s);
            hess[i][j] = mf * (mf + 1.0) * s.powf(-mf - 2.0) * s_g[i] * s_g[j] * g0
                - mf * s.powf(-mf - 1.0) * s_ij * g0
                - mf * s.powf(-mf - 1.0) * (s_g[j] * g1 * y_g[i] + s_g[i] * g1 * y_g[j])
                + sm * (g2 * y_g[i] * y_g[j] + g1 * y_ij);
        }
    }
    (value, grad, hess)
}

/// Integral of weight(z, v) * sum_{n_lo <= |alpha| <= trunc(|z|)} c_alpha z^alpha
/// over the moving ball; `Weight::Psi` with n_lo = 0 is the extension integral.
pub fn mollified_tail(
    cutoff: &RadialCutoff,
    sum: &MonomialSum,
    v: &[f64],
    n_lo: usize,
    trunc: &dyn Fn(f64) -> usize,
    weight: Weight,
) -> Result<Complex64> {
    let v_abs = norm(v);
    if v_abs == 0.0 {
        return Err(Error::Domain("mollified integral needs v != 0".into()));
    }
    let quad = ShellQuadrature::new(cutoff.m, v, cutoff.eps * v_abs)?;
    Ok(quad.integrate(|z| {
        let w = match weight {
            Weight::Psi => {
                // fast path: avoid the full jet
                let diffs2: f64 = z
                    .iter()
                    .zip(v)
                    .map(|(zj, vj)| {
                        let re = zj.re - vj;
                        re * re + zj.im * zj.im
                    })
                    .sum();
                cutoff.sq_profile(diffs2 / (v_abs * v_abs)) * v_abs.powi(-2 * cutoff.m as i32)
            }
            Weight::Grad(j) => scaled_mollifier_jet(cutoff, z, v).1[j],
            Weight::Hess(i, j) => scaled_mollifier_jet(cutoff, z, v).2[i][j],
        };
        if w == 0.0 {
            return Complex64::ZERO;
        }
        let z_abs = z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let n_hi = trunc(z_abs);
        sum.eval_between(z, n_lo, n_hi) * w
    }))
}

/// The mollified truncated series: |v|^{-2m} int psi((z-v)/|v|)
/// sum_{|alpha| <= trunc(|z|)} c_alpha z^alpha dlambda, truncation evaluated
/// per quadrature node.
pub fn mollified_series(
    cutoff: &RadialCutoff,
    sum: &MonomialSum,
    v: &[f64],
    trunc: &dyn Fn(f64) -> usize,
) -> Result<Complex64> {
    mollified_tail(cutoff, sum, v, 0, trunc, Weight::Psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{taylor_coefficient, VectorFrame};
    use crate::sequence::{AssociatedEvaluator, RegularSequence};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn cutoff_normalization_and_support() {
        for m in [1usize, 2] {
            let psi = RadialCutoff::build(m, 0.1).unwrap();
            assert!(psi.quad_error < 1e-8, "quad_error = {}", psi.quad_error);
            // integral of the returned profile over C^m is 1 by construction;
            // re-integrate on an independent rule
            let quad = ShellQuadrature::with_resolution(
                m,
                &vec![0.0; m],
                0.1,
                40,
                40,
            )
            .unwrap();
            let total = quad.integrate(|z| c(psi.value(z)));
            assert!((total.re - 1.0).abs() < 1e-8, "m={m}: {}", total.re);
            // support
            let outside = vec![Complex64::new(0.101, 0.0); 1];
            if m == 1 {
                assert_eq!(psi.value(&outside), 0.0);
            }
            // radiality
            if m == 1 {
                let a = psi.value(&[Complex64::new(0.05, 0.0)]);
                let b = psi.value(&[Complex64::new(0.03, 0.04)]);
                assert!((a - b).abs() < 1e-15 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn ball_quadrature_polynomial_exactness() {
        // m=2: integrate monomials over the ball and compare against the
        // closed form via the Dirichlet integral on the 4-ball
        let quad = ShellQuadrature::new(2, &[0.0, 0.0], 1.0).unwrap();
        // volume
        let vol = quad.integrate(|_| c(1.0)).re;
        let exact = std::f64::consts::PI.powi(2) / 2.0;
        assert!((vol - exact).abs() < 1e-10 * exact);
        // int |z1|^2 over unit ball in R^4: by symmetry = (2/4) * int |x|^2/2...
        // direct: int r^2 cos^2(eta) r^3 dr dsigma = 2 pi^2 * (1/6) * mean(cos^2) with
        // mean over S^3 of cos^2 eta = 1/2  =>  pi^2/6
        let v = quad
            .integrate(|z| c(z[0].norm_sqr()))
            .re;
        let exact2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((v - exact2).abs() < 1e-10 * exact2, "{v} vs {exact2}");
        // odd monomial integrates to zero
        let v3 = quad.integrate(|z| z[0] * z[1]).norm();
        assert!(v3 < 1e-12);
    }

    #[test]
    fn reproduces_monomials_m1() {
        let psi = RadialCutoff::build(1, 0.1).unwrap();
        let one = Poly::monomial(1, vec![0], c(1.0));
        let z1 = Poly::monomial(1, vec![1], c(1.0));
        let z1sq = Poly::monomial(1, vec![2], c(1.0));
        let v = [0.3];
        assert!((reproduce_polynomial(&psi, &one, &v).unwrap() - c(1.0)).norm() < 1e-7);
        assert!((reproduce_polynomial(&psi, &z1, &v).unwrap() - c(0.3)).norm() < 1e-7);
        assert!((reproduce_polynomial(&psi, &z1sq, &v).unwrap() - c(0.09)).norm() < 1e-7);
        assert!(reproduce_polynomial(&psi, &one, &[0.0]).is_err());
    }

    #[test]
    fn reproduces_monomials_all_degrees_both_dims() {
        for m in [1usize, 2] {
            let psi = RadialCutoff::build(m, 0.15).unwrap();
            let v = if m == 1 { vec![0.25] } else { vec![0.2, -0.15] };
            let vc: Vec<Complex64> = v.iter().map(|&x| c(x)).collect();
            for d in 0..=4usize {
                for alpha in multi_indices_of_order(m, d) {
                    let p = Poly::monomial(m, alpha.clone(), c(1.0));
                    let got = reproduce_polynomial(&psi, &p, &v).unwrap();
                    let expect = p.eval(&vc);
                    let tol = 1e-6 * expect.norm().max(1e-3);
                    assert!(
                        (got - expect).norm() < tol,
                        "m={m} alpha={alpha:?}: {got} vs {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn quadrature_refinement_stable() {
        let psi = RadialCutoff::build(1, 0.1).unwrap();
        let p = Poly::monomial(1, vec![4], c(1.0));
        let v = [0.3];
        let v_abs = 0.3;
        let coarse = ShellQuadrature::with_resolution(1, &v, psi.eps * v_abs, 32, 64).unwrap();
        let fine = ShellQuadrature::with_resolution(1, &v, psi.eps * v_abs, 64, 128).unwrap();
        let f = |quad: &ShellQuadrature| {
            quad.integrate(|z| {
                let w = (z[0] - c(0.3)) / v_abs;
                c(psi.sq_profile(w.norm_sqr()) / (v_abs * v_abs)) * p.eval(z)
            })
        };
        assert!((f(&coarse) - f(&fine)).norm() < 1e-8);
    }

    #[test]
    fn scaled_mollifier_jet_matches_fd() {
        for m in [1usize, 2] {
            let psi = RadialCutoff::build(m, 0.2).unwrap();
            let v = if m == 1 { vec![0.1] } else { vec![0.08, 0.05] };
            let z: Vec<Complex64> = if m == 1 {
                vec![Complex64::new(0.105, 0.004)]
            } else {
                vec![Complex64::new(0.085, 0.003), Complex64::new(0.048, -0.002)]
            };
            let (val, grad, hess) = scaled_mollifier_jet(&psi, &z, &v);
            assert!(val > 0.0);
            let h = 1e-6;
            let f = |vv: &[f64]| scaled_mollifier_jet(&psi, &z, vv).0;
            for j in 0..m {
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[j] += h;
                vm[j] -= h;
                let fd = (f(&vp) - f(&vm)) / (2.0 * h);
                assert!(
                    (fd - grad[j]).abs() / grad[j].abs().max(1.0) < 1e-5,
                    "m={m} grad[{j}]: {fd} vs {}",
                    grad[j]
                );
            }
            for i in 0..m {
                for j in 0..m {
                    let mut vp = v.clone();
                    let mut vm = v.clone();
                    vp[j] += h;
                    vm[j] -= h;
                    let gp = scaled_mollifier_jet(&psi, &z, &vp).1[i];
                    let gm = scaled_mollifier_jet(&psi, &z, &vm).1[i];
                    let fd = (gp - gm) / (2.0 * h);
                    assert!(
                        (fd - hess[i][j]).abs() / hess[i][j].abs().max(1.0) < 1e-4,
                        "m={m} hess[{i}][{j}]: {fd} vs {}",
                        hess[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn g_beta_scaling_bound() {
        // sup_z |g_beta| <= C_beta |v|^{-2m-|beta|}: the rescaled sup must be
        // bounded uniformly along a |v|-ladder
        let psi = RadialCutoff::build(1, 0.2).unwrap();
        for beta_len in 0..=2usize {
            let mut rescaled = Vec::new();
            for j in 0..4 {
                let v = [0.1 * 0.5f64.powi(j)];
                let quad = ShellQuadrature::new(1, &v, psi.eps * v[0]).unwrap();
                let mut sup: f64 = 0.0;
                for z in &quad.nodes {
                    let (val, grad, hess) = scaled_mollifier_jet(&psi, z, &v);
                    let g = match beta_len {
                        0 => val,
                        1 => grad[0],
                        _ => hess[0][0],
                    };
                    sup = sup.max(g.abs());
                }
                rescaled.push(sup * v[0].powi(2 + beta_len as i32));
            }
            let lo = rescaled.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = rescaled.iter().cloned().fold(0.0, f64::max);
            assert!(hi.is_finite() && hi > 0.0);
            assert!(hi / lo < 1.5, "|beta|={beta_len}: rescaled sups {rescaled:?}");
        }
    }

    #[test]
    fn mollified_series_reduces_to_reproduction() {
        // coefficients of P(z) = z^2 with trunc >= 2 everywhere
        let psi = RadialCutoff::build(1, 0.1).unwrap();
        let sum = MonomialSum::build(1, 4, |alpha| {
            Ok(if alpha[0] == 2 { c(1.0) } else { c(0.0) })
        })
        .unwrap();
        let got = mollified_series(&psi, &sum, &[0.05], &|_| 4).unwrap();
        assert!((got - c(0.0025)).norm() < 1e-9, "{got}");
        // all-zero coefficients
        let zero = MonomialSum::build(1, 4, |_| Ok(c(0.0))).unwrap();
        let got = mollified_series(&psi, &zero, &[0.05], &|_| 4).unwrap();
        assert!(got.norm() < 1e-15);
    }

    #[test]
    fn mollified_series_matches_partial_sum_oracle() {
        // runge coefficients at u = 0, trunc from bigN, against the plain
        // truncated Taylor sum at v with the outer-edge truncation
        let psi = RadialCutoff::build(1, 0.1).unwrap();
        let seq = RegularSequence::gevrey(2.0, 60).unwrap();
        let ev = AssociatedEvaluator::new(&seq);
        let f = crate::corpus::runge();
        let frame = VectorFrame::coordinate(1);
        let sum = MonomialSum::build(1, 30, |alpha| taylor_coefficient(&f, &frame, alpha, &[0.0]))
            .unwrap();
        let v = [0.1];
        let trunc = |r: f64| ev.big_n(r).unwrap().min(30);
        let got = mollified_series(&psi, &sum, &v, &trunc).unwrap();
        let n_oracle = trunc(1.1 * 0.1);
        let mut oracle = Complex64::ZERO;
        for k in 0..=n_oracle {
            oracle += taylor_coefficient(&f, &frame, &[k], &[0.0]).unwrap() * c(0.1).powu(k as u32);
        }
        assert!((got - oracle).norm() < 1e-6, "{got} vs {oracle}");
    }
}
