//! First-order nonlinear systems du/dt_j = f_j(x, t, u, u_x): linearization
//! along a solution, the theta-rotated systems and their Hamiltonian lifts,
//! characteristic sets, and the wave-front inclusion experiment.

use crate::error::{Error, Result};
use crate::fbi::decay::ClassifierParams;
use crate::fbi::scan::{default_ladder, wavefront_scan_field, ScanField};
use crate::fbi::FbiOptions;
use crate::jets::Poly;
use crate::numeric::norm;
use crate::sequence::RegularSequence;
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Jet-space point (x, t, zeta_0, zeta, tau).
#[derive(Debug, Clone)]
pub struct SysPoint {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub z0: Complex64,
    pub z: Vec<Complex64>,
    pub tau: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// f = i zeta
    IDx,
    /// f = -zeta
    Transport,
    /// f = zeta_0 zeta
    Burgers,
    /// f = i zeta + zeta_0^2
    Riccati,
    /// d = 1, n = 2: (i zeta, -zeta)
    Pair,
}

/// A corpus system with exact holomorphic partials in (zeta_0, zeta).
#[derive(Debug, Clone)]
pub struct NonlinearSystem {
    pub kind: SystemKind,
    pub name: String,
    pub d: usize,
    pub n: usize,
    pub regularity: String,
}

impl NonlinearSystem {
    pub fn by_name(name: &str) -> Option<Self> {
        let (kind, d, n) = match name {
            "sys_i_dx" => (SystemKind::IDx, 1, 1),
            "sys_transport" => (SystemKind::Transport, 1, 1),
            "sys_burgers" => (SystemKind::Burgers, 1, 1),
            "sys_riccati" => (SystemKind::Riccati, 1, 1),
            "sys_pair" => (SystemKind::Pair, 1, 2),
            _ => return None,
        };
        Some(Self {
            kind,
            name: name.into(),
            d,
            n,
            regularity: "entire in (x,t)".into(),
        })
    }

    pub fn f(&self, j: usize, p: &SysPoint) -> Complex64 {
        match (self.kind, j) {
            (SystemKind::IDx, 0) => Complex64::i() * p.z[0],
            (SystemKind::Transport, 0) => -p.z[0],
            (SystemKind::Burgers, 0) => p.z0 * p.z[0],
            (SystemKind::Riccati, 0) => Complex64::i() * p.z[0] + p.z0 * p.z0,
            (SystemKind::Pair, 0) => Complex64::i() * p.z[0],
            (SystemKind::Pair, 1) => -p.z[0],
            _ => panic!("field index {j} out of range for {}", self.name),
        }
    }

    pub fn df_dz0(&self, j: usize, p: &SysPoint) -> Complex64 {
        match (self.kind, j) {
            (SystemKind::Burgers, 0) => p.z[0],
            (SystemKind::Riccati, 0) => 2.0 * p.z0,
            _ => Complex64::ZERO,
        }
    }

    pub fn df_dz(&self, j: usize, _k: usize, p: &SysPoint) -> Complex64 {
        match (self.kind, j) {
            (SystemKind::IDx, 0) => Complex64::i(),
            (SystemKind::Transport, 0) => -Complex64::ONE,
            (SystemKind::Burgers, 0) => p.z0,
            (SystemKind::Riccati, 0) => Complex64::i(),
            (SystemKind::Pair, 0) => Complex64::i(),
            (SystemKind::Pair, 1) => -Complex64::ONE,
            _ => Complex64::ZERO,
        }
    }

    /// All corpus systems are translation invariant.
    pub fn df_dx(&self, _j: usize, _i: usize, _p: &SysPoint) -> Complex64 {
        Complex64::ZERO
    }

    pub fn df_dt(&self, _j: usize, _l: usize, _p: &SysPoint) -> Complex64 {
        Complex64::ZERO
    }

    /// Sampled Cauchy-Riemann residual of the claimed holomorphy in
    /// (zeta_0, zeta): max over probes and fields.
    pub fn holomorphy_residual(&self, p: &SysPoint) -> f64 {
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for j in 0..self.n {
            // zeta_0 direction
            let d_re = {
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp.z0 += h;
                pm.z0 -= h;
                (self.f(j, &pp) - self.f(j, &pm)) / (2.0 * h)
            };
            let d_im = {
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp.z0 += Complex64::new(0.0, h);
                pm.z0 -= Complex64::new(0.0, h);
                (self.f(j, &pp) - self.f(j, &pm)) / Complex64::new(0.0, 2.0 * h)
            };
            worst = worst.max((d_re - d_im).norm());
            for k in 0..self.d {
                let d_re = {
                    let mut pp = p.clone();
                    let mut pm = p.clone();
                    pp.z[k] += h;
                    pm.z[k] -= h;
                    (self.f(j, &pp) - self.f(j, &pm)) / (2.0 * h)
                };
                let d_im = {
                    let mut pp = p.clone();
                    let mut pm = p.clone();
                    pp.z[k] += Complex64::new(0.0, h);
                    pm.z[k] -= Complex64::new(0.0, h);
                    (self.f(j, &pp) - self.f(j, &pm)) / Complex64::new(0.0, 2.0 * h)
                };
                worst = worst.max((d_re - d_im).norm());
            }
        }
        worst
    }
}

pub fn system_catalog() -> Vec<(&'static str, usize, usize)> {
    vec![
        ("sys_burgers", 1, 1),
        ("sys_i_dx", 1, 1),
        ("sys_pair", 1, 2),
        ("sys_riccati", 1, 1),
        ("sys_transport", 1, 1),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    /// u = (x + i t)^2 for sys_i_dx
    SquareHolo,
    /// u = |x - t|^3 for sys_transport (C^2)
    TransportCubic,
    /// u = x/(2 - t) for sys_burgers
    BurgersRational,
    /// u = -1/(t + 2) for sys_riccati
    RiccatiConstant,
    /// u = exp(i(x + i t1 - t2)) for sys_pair
    PairExp,
}

/// A closed-form C^2 solution with exact derivatives to order 2.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub kind: SolutionKind,
    pub name: String,
    pub d: usize,
    pub n: usize,
    pub kink_normal: Option<[f64; 2]>,
}

impl ExactSolution {
    pub fn for_system(system: &NonlinearSystem) -> Self {
        let (kind, name, kink) = match system.kind {
            SystemKind::IDx => (SolutionKind::SquareHolo, "u = (x+it)^2", None),
            SystemKind::Transport => (
                SolutionKind::TransportCubic,
                "u = |x-t|^3",
                Some([std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2]),
            ),
            SystemKind::Burgers => (SolutionKind::BurgersRational, "u = x/(2-t)", None),
            SystemKind::Riccati => (SolutionKind::RiccatiConstant, "u = -1/(t+2)", None),
            SystemKind::Pair => (SolutionKind::PairExp, "u = exp(i(x + i t1 - t2))", None),
        };
        Self {
            kind,
            name: name.into(),
            d: system.d,
            n: system.n,
            kink_normal: kink,
        }
    }

    pub fn u(&self, x: &[f64], t: &[f64]) -> Complex64 {
        match self.kind {
            SolutionKind::SquareHolo => {
                let w = Complex64::new(x[0], t[0]);
                w * w
            }
            SolutionKind::TransportCubic => {
                let s = (x[0] - t[0]).abs();
                c(s * s * s)
            }
            SolutionKind::BurgersRational => c(x[0] / (2.0 - t[0])),
            SolutionKind::RiccatiConstant => c(-1.0 / (t[0] + 2.0)),
            SolutionKind::PairExp => (Complex64::i() * c(x[0]) - c(t[0]) - Complex64::i() * c(t[1])).exp(),
        }
    }

    pub fn u_x(&self, _k: usize, x: &[f64], t: &[f64]) -> Complex64 {
        match self.kind {
            SolutionKind::SquareHolo => 2.0 * Complex64::new(x[0], t[0]),
            SolutionKind::TransportCubic => {
                let s = x[0] - t[0];
                c(3.0 * s * s.abs())
            }
            SolutionKind::BurgersRational => c(1.0 / (2.0 - t[0])),
            SolutionKind::RiccatiConstant => Complex64::ZERO,
            SolutionKind::PairExp => Complex64::i() * self.u(x, t),
        }
    }

    pub fn u_t(&self, j: usize, x: &[f64], t: &[f64]) -> Complex64 {
        match (self.kind, j) {
            (SolutionKind::SquareHolo, 0) => Complex64::new(0.0, 2.0) * Complex64::new(x[0], t[0]),
            (SolutionKind::TransportCubic, 0) => {
                let s = x[0] - t[0];
                c(-3.0 * s * s.abs())
            }
            (SolutionKind::BurgersRational, 0) => c(x[0] / ((2.0 - t[0]) * (2.0 - t[0]))),
            (SolutionKind::RiccatiConstant, 0) => c(1.0 / ((t[0] + 2.0) * (t[0] + 2.0))),
            (SolutionKind::PairExp, 0) => -self.u(x, t),
            (SolutionKind::PairExp, 1) => -Complex64::i() * self.u(x, t),
            _ => panic!("t-index {j} out of range"),
        }
    }

    pub fn u_xx(&self, _i: usize, _k: usize, x: &[f64], t: &[f64]) -> Complex64 {
        match self.kind {
            SolutionKind::SquareHolo => c(2.0),
            SolutionKind::TransportCubic => c(6.0 * (x[0] - t[0]).abs()),
            SolutionKind::BurgersRational => Complex64::ZERO,
            SolutionKind::RiccatiConstant => Complex64::ZERO,
            SolutionKind::PairExp => -self.u(x, t),
        }
    }

    pub fn u_xt(&self, _k: usize, j: usize, x: &[f64], t: &[f64]) -> Complex64 {
        match (self.kind, j) {
            (SolutionKind::SquareHolo, 0) => Complex64::new(0.0, 2.0),
            (SolutionKind::TransportCubic, 0) => c(-6.0 * (x[0] - t[0]).abs()),
            (SolutionKind::BurgersRational, 0) => c(1.0 / ((2.0 - t[0]) * (2.0 - t[0]))),
            (SolutionKind::RiccatiConstant, 0) => Complex64::ZERO,
            (SolutionKind::PairExp, 0) => -Complex64::i() * self.u(x, t),
            (SolutionKind::PairExp, 1) => self.u(x, t),
            _ => panic!("t-index out of range"),
        }
    }

    pub fn u_tt(&self, j: usize, q: usize, x: &[f64], t: &[f64]) -> Complex64 {
        match (self.kind, j, q) {
            (SolutionKind::SquareHolo, 0, 0) => c(-2.0),
            (SolutionKind::TransportCubic, 0, 0) => c(6.0 * (x[0] - t[0]).abs()),
            (SolutionKind::BurgersRational, 0, 0) => {
                c(2.0 * x[0] / (2.0 - t[0]).powi(3))
            }
            (SolutionKind::RiccatiConstant, 0, 0) => c(-2.0 / (t[0] + 2.0).powi(3)),
            (SolutionKind::PairExp, 0, 0) => self.u(x, t),
            (SolutionKind::PairExp, 0, 1) | (SolutionKind::PairExp, 1, 0) => {
                Complex64::i() * self.u(x, t)
            }
            (SolutionKind::PairExp, 1, 1) => -self.u(x, t),
            _ => panic!("t-indices out of range"),
        }
    }

    fn jet_point(&self, x: &[f64], t: &[f64]) -> SysPoint {
        SysPoint {
            x: x.to_vec(),
            t: t.to_vec(),
            z0: self.u(x, t),
            z: (0..self.d).map(|k| self.u_x(k, x, t)).collect(),
            tau: (0..self.n).map(|j| self.u_t(j, x, t)).collect(),
        }
    }
}

/// A solution admitted against its system on a grid.
#[derive(Debug, Clone)]
pub struct SolutionSample {
    pub solution: ExactSolution,
    pub grid: Vec<(Vec<f64>, Vec<f64>)>,
    pub residual: f64,
    pub scale: f64,
}

/// Check sup_j |du/dt_j - f_j(x, t, u, u_x)| <= 1e-6 * scale on the grid.
pub fn admit(
    system: &NonlinearSystem,
    solution: &ExactSolution,
    grid: &[(Vec<f64>, Vec<f64>)],
) -> Result<SolutionSample> {
    if grid.is_empty() {
        return Err(Error::Empty("admission grid".into()));
    }
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (x, t) in grid {
        let p = solution.jet_point(x, t);
        scale = scale.max(p.z0.norm());
        for j in 0..system.n {
            residual = residual.max((solution.u_t(j, x, t) - system.f(j, &p)).norm());
        }
    }
    let limit = 1e-6 * scale.max(1e-12);
    if residual > limit {
        return Err(Error::InadmissibleSolution { residual, limit });
    }
    Ok(SolutionSample {
        solution: solution.clone(),
        grid: grid.to_vec(),
        residual,
        scale,
    })
}

/// Linearization row a_j = (df_j/dzeta_k) along the solution at a point.
pub fn linearize(
    system: &NonlinearSystem,
    sample: &SolutionSample,
    x: &[f64],
    t: &[f64],
) -> Vec<Vec<Complex64>> {
    let p = sample.solution.jet_point(x, t);
    (0..system.n)
        .map(|j| (0..system.d).map(|k| system.df_dz(j, k, &p)).collect())
        .collect()
}

/// The theta-criterion collapses to: Im a_j . xi = 0 and tau_j = Re a_j . xi
/// for all j. The margin sweeps a 64-point theta grid.
pub fn characteristic_test(
    a: &[Vec<Complex64>],
    xi: &[f64],
    tau: &[f64],
) -> Result<(bool, f64)> {
    let size = norm(xi) + norm(tau);
    if size == 0.0 {
        return Err(Error::Domain("characteristic test needs (xi, tau) != 0".into()));
    }
    let a_norm: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.norm_sqr()))
        .sum::<f64>()
        .sqrt();
    let mut margin: f64 = 0.0;
    let mut characteristic = true;
    let tol = 1e-8 * (1.0 + a_norm) * size;
    for (j, row) in a.iter().enumerate() {
        let dot: Complex64 = row.iter().zip(xi).map(|(aj, &x)| aj * x).sum();
        let im = dot.im;
        let diff = tau[j] - dot.re;
        if im.abs() > tol || diff.abs() > tol {
            characteristic = false;
        }
        for g in 0..64 {
            let th = 2.0 * std::f64::consts::PI * g as f64 / 64.0;
            margin = margin.max((th.cos() * im + th.sin() * diff).abs());
        }
    }
    Ok((characteristic, margin))
}

/// The rotated system f^theta_j = e^{-i theta} (tau_j - f_j) with exact
/// partials in (zeta_0, zeta, tau).
#[derive(Debug, Clone)]
pub struct ThetaSystem<'a> {
    pub base: &'a NonlinearSystem,
    pub theta: f64,
}

impl<'a> ThetaSystem<'a> {
    pub fn new(base: &'a NonlinearSystem, theta: f64) -> Self {
        Self { base, theta }
    }

    fn phase(&self) -> Complex64 {
        Complex64::new(0.0, -self.theta).exp()
    }

    pub fn f(&self, j: usize, p: &SysPoint) -> Complex64 {
        self.phase() * (p.tau[j] - self.base.f(j, p))
    }

    pub fn df_dz0(&self, j: usize, p: &SysPoint) -> Complex64 {
        -self.phase() * self.base.df_dz0(j, p)
    }

    pub fn df_dz(&self, j: usize, k: usize, p: &SysPoint) -> Complex64 {
        -self.phase() * self.base.df_dz(j, k, p)
    }

    pub fn df_dtau(&self, j: usize, l: usize, _p: &SysPoint) -> Complex64 {
        if j == l {
            self.phase()
        } else {
            Complex64::ZERO
        }
    }

    pub fn df_dx(&self, j: usize, i: usize, p: &SysPoint) -> Complex64 {
        -self.phase() * self.base.df_dx(j, i, p)
    }

    pub fn df_dt(&self, j: usize, l: usize, p: &SysPoint) -> Complex64 {
        -self.phase() * self.base.df_dt(j, l, p)
    }
}

/// Hamiltonian-lift coefficients (h_j0, h_j1..h_j(d+n)) of H_j^theta.
pub fn hamiltonian_coeffs(
    system: &NonlinearSystem,
    theta: f64,
    j: usize,
    p: &SysPoint,
) -> (Complex64, Vec<Complex64>) {
    let th = ThetaSystem::new(system, theta);
    let d = system.d;
    let n = system.n;
    let mut h0 = th.f(j, p);
    for k in 0..d {
        h0 -= p.z[k] * th.df_dz(j, k, p);
    }
    for l in 0..n {
        h0 -= p.tau[l] * th.df_dtau(j, l, p);
    }
    let mut h = Vec::with_capacity(d + n);
    for i in 0..d {
        h.push(th.df_dx(j, i, p) + p.z[i] * th.df_dz0(j, p));
    }
    for l in 0..n {
        h.push(th.df_dt(j, l, p) + p.tau[l] * th.df_dz0(j, p));
    }
    (h0, h)
}

/// A polynomial test function Phi(x, t, r, zeta_0, zeta, tau), holomorphic in
/// the jet variables; variable layout [x | t | r | zeta_0 | zeta | tau].
#[derive(Debug, Clone)]
pub struct PhiPoly {
    pub d: usize,
    pub n: usize,
    pub poly: Poly,
}

impl PhiPoly {
    pub fn var_count(d: usize, n: usize) -> usize {
        d + n + n + 1 + d + n
    }

    pub fn new(d: usize, n: usize, terms: Vec<(Vec<usize>, Complex64)>) -> Self {
        Self {
            d,
            n,
            poly: Poly::new(Self::var_count(d, n), terms),
        }
    }

    pub fn pack(&self, p: &SysPoint, r: &[f64]) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(Self::var_count(self.d, self.n));
        v.extend(p.x.iter().map(|&t| c(t)));
        v.extend(p.t.iter().map(|&t| c(t)));
        v.extend(r.iter().map(|&t| c(t)));
        v.push(p.z0);
        v.extend(p.z.iter().copied());
        v.extend(p.tau.iter().copied());
        v
    }

    pub fn eval(&self, vars: &[Complex64]) -> Complex64 {
        self.poly.eval(vars)
    }

    /// First partial in packed-variable index `idx` (exact).
    pub fn partial(&self, idx: usize, vars: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        'terms: for (beta, coeff) in &self.poly.terms {
            if beta[idx] == 0 {
                continue;
            }
            let mut term = *coeff * beta[idx] as f64;
            for (q, &b) in beta.iter().enumerate() {
                let pow = if q == idx { b - 1 } else { b };
                if pow > 0 {
                    if vars[q] == Complex64::ZERO && pow > 0 {
                        // 0^pow
                        continue 'terms;
                    }
                    term *= vars[q].powu(pow as u32);
                }
            }
            acc += term;
        }
        acc
    }
}

/// H_j^theta Phi evaluated at (p, r).
pub fn apply_hamiltonian(
    system: &NonlinearSystem,
    theta: f64,
    j: usize,
    phi: &PhiPoly,
    p: &SysPoint,
    r: &[f64],
) -> Complex64 {
    let th = ThetaSystem::new(system, theta);
    let d = system.d;
    let n = system.n;
    let vars = phi.pack(p, r);
    let ix = |k: usize| k; // x block
    let it = |l: usize| d + l; // t block
    let ir = |l: usize| d + n + l; // r block
    let iz0 = d + 2 * n;
    let iz = |k: usize| d + 2 * n + 1 + k;
    let itau = |l: usize| 2 * d + 2 * n + 1 + l;

    let (h0, h) = hamiltonian_coeffs(system, theta, j, p);
    let mut out = phi.partial(ir(j), &vars);
    for k in 0..d {
        out -= th.df_dz(j, k, p) * phi.partial(ix(k), &vars);
    }
    for l in 0..n {
        out -= th.df_dtau(j, l, p) * phi.partial(it(l), &vars);
    }
    out += h0 * phi.partial(iz0, &vars);
    for k in 0..d {
        out += h[k] * phi.partial(iz(k), &vars);
    }
    for l in 0..n {
        out += h[d + l] * phi.partial(itau(l), &vars);
    }
    out
}

/// (L_j^theta)^u Phi^u: the linearized field applied to the substituted test
/// function, with the substitution chain rule expanded through the exact
/// second derivatives of the solution.
pub fn apply_linearized_along(
    system: &NonlinearSystem,
    theta: f64,
    j: usize,
    phi: &PhiPoly,
    sol: &ExactSolution,
    x: &[f64],
    t: &[f64],
    r: &[f64],
) -> Complex64 {
    let th = ThetaSystem::new(system, theta);
    let d = system.d;
    let n = system.n;
    let p = sol.jet_point(x, t);
    let vars = phi.pack(&p, r);
    let ir = |l: usize| d + n + l;
    let iz0 = d + 2 * n;
    let iz = |k: usize| d + 2 * n + 1 + k;
    let itau = |l: usize| 2 * d + 2 * n + 1 + l;

    // d Phi^u/dx_k and /dt_l by the chain rule
    let dphi_dx = |k: usize| -> Complex64 {
        let mut v = phi.partial(k, &vars);
        v += phi.partial(iz0, &vars) * sol.u_x(k, x, t);
        for i in 0..d {
            v += phi.partial(iz(i), &vars) * sol.u_xx(i, k, x, t);
        }
        for l in 0..n {
            v += phi.partial(itau(l), &vars) * sol.u_xt(k, l, x, t);
        }
        v
    };
    let dphi_dt = |l: usize| -> Complex64 {
        let mut v = phi.partial(d + l, &vars);
        v += phi.partial(iz0, &vars) * sol.u_t(l, x, t);
        for i in 0..d {
            v += phi.partial(iz(i), &vars) * sol.u_xt(i, l, x, t);
        }
        for q in 0..n {
            v += phi.partial(itau(q), &vars) * sol.u_tt(q, l, x, t);
        }
        v
    };

    let mut out = phi.partial(ir(j), &vars);
    for k in 0..d {
        out -= th.df_dz(j, k, &p) * dphi_dx(k);
    }
    for l in 0..n {
        out -= th.df_dtau(j, l, &p) * dphi_dt(l);
    }
    out
}

/// Numeric H_i (H_j Phi) by central differences over the full variable set;
/// the jet variables are differentiated with real steps (holomorphic fields).
fn apply_h_numeric(
    system: &NonlinearSystem,
    theta: f64,
    i: usize,
    g: &dyn Fn(&SysPoint, &[f64]) -> Complex64,
    p: &SysPoint,
    r: &[f64],
) -> Complex64 {
    let th = ThetaSystem::new(system, theta);
    let d = system.d;
    let n = system.n;
    let h = 1e-5;
    let diff_r = |l: usize| -> Complex64 {
        let mut rp = r.to_vec();
        let mut rm = r.to_vec();
        rp[l] += h;
        rm[l] -= h;
        (g(p, &rp) - g(p, &rm)) / (2.0 * h)
    };
    let diff_x = |k: usize| -> Complex64 {
        let mut pp = p.clone();
        let mut pm = p.clone();
        pp.x[k] += h;
        pm.x[k] -= h;
        (g(&pp, r) - g(&pm, r)) / (2.0 * h)
    };
    let diff_t = |l: usize| -> Complex64 {
        let mut pp = p.clone();
        let mut pm = p.clone();
        pp.t[l] += h;
        pm.t[l] -= h;
        (g(&pp, r) - g(&pm, r)) / (2.0 * h)
    };
    let diff_z0 = || -> Complex64 {
        let mut pp = p.clone();
        let mut pm = p.clone();
        pp.z0 += h;
        pm.z0 -= h;
        (g(&pp, r) - g(&pm, r)) / (2.0 * h)
    };
    let diff_z = |k: usize| -> Complex64 {
        let mut pp = p.clone();
        let mut pm = p.clone();
        pp.z[k] += h;
        pm.z[k] -= h;
        (g(&pp, r) - g(&pm, r)) / (2.0 * h)
    };
    let diff_tau = |l: usize| -> Complex64 {
        let mut pp = p.clone();
        let mut pm = p.clone();
        pp.tau[l] += h;
        pm.tau[l] -= h;
        (g(&pp, r) - g(&pm, r)) / (2.0 * h)
    };

    let (h0, hv) = hamiltonian_coeffs(system, theta, i, p);
    let mut out = diff_r(i);
    for k in 0..d {
        out -= th.df_dz(i, k, p) * diff_x(k);
    }
    for l in 0..n {
        out -= th.df_dtau(i, l, p) * diff_t(l);
    }
    out += h0 * diff_z0();
    for k in 0..d {
        out += hv[k] * diff_z(k);
    }
    for l in 0..n {
        out += hv[d + l] * diff_tau(l);
    }
    out
}

/// Numeric commutator [H_i, H_j] Phi at a point.
pub fn hamiltonian_commutator(
    system: &NonlinearSystem,
    theta: f64,
    i: usize,
    j: usize,
    phi: &PhiPoly,
    p: &SysPoint,
    r: &[f64],
) -> Complex64 {
    let hj = |q: &SysPoint, rr: &[f64]| apply_hamiltonian(system, theta, j, phi, q, rr);
    let hi = |q: &SysPoint, rr: &[f64]| apply_hamiltonian(system, theta, i, phi, q, rr);
    let hij = apply_h_numeric(system, theta, i, &hj, p, r);
    let hji = apply_h_numeric(system, theta, j, &hi, p, r);
    hij - hji
}

#[derive(Debug, Clone, Serialize)]
pub struct FlaggedDirection {
    pub point: Vec<f64>,
    pub dir: Vec<f64>,
    pub characteristic: bool,
    /// normalized deviation from the characteristic equations
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub system: String,
    pub solution: String,
    pub admitted_residual: f64,
    pub scanned_points: usize,
    pub scanned_dirs: usize,
    pub flagged: Vec<FlaggedDirection>,
    /// true iff every flagged direction is characteristic within the margin
    pub pass: bool,
}

/// Scan the solution over (x, t)-directions and check that every direction
/// flagged as irregular lies in the characteristic set of the linearization.
pub fn wf_inclusion_experiment(
    system: &NonlinearSystem,
    sample: &SolutionSample,
    points: &[Vec<f64>],
    dirs: &[Vec<f64>],
    seq: &RegularSequence,
    opts: &FbiOptions,
    margin_tol: f64,
) -> Result<InclusionReport> {
    if system.d != 1 || system.n != 1 {
        return Err(Error::Unsupported(
            "the scan experiment runs on d = n = 1 systems".into(),
        ));
    }
    let sol = sample.solution.clone();
    let field = ScanField {
        eval: {
            let sol = sol.clone();
            Arc::new(move |y: &[f64]| sol.u(&y[..1], &y[1..]))
        },
        kink_normal: sol.kink_normal,
    };
    let report = wavefront_scan_field(
        &field,
        points,
        dirs,
        seq,
        &default_ladder(),
        opts,
        &ClassifierParams::default(),
    )?;
    let mut flagged = Vec::new();
    let mut pass = true;
    for (pi, di) in &report.flagged {
        let point = &points[*pi];
        let dir = &dirs[*di];
        let a = linearize(system, sample, &point[..1], &point[1..]);
        let xi = &dir[..1];
        let tau = &dir[1..];
        let (_, raw_margin) = characteristic_test(&a, xi, tau)?;
        let margin = raw_margin / (norm(xi) + norm(tau));
        let characteristic = margin <= margin_tol;
        if !characteristic {
            pass = false;
        }
        flagged.push(FlaggedDirection {
            point: point.clone(),
            dir: dir.clone(),
            characteristic,
            margin,
        });
    }
    Ok(InclusionReport {
        system: system.name.clone(),
        solution: sol.name,
        admitted_residual: sample.residual,
        scanned_points: points.len(),
        scanned_dirs: dirs.len(),
        flagged,
        pass,
    })
}
