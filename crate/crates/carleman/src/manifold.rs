//! Maximally real charts Sigma = { x + i phi(x) }: the dual frame, the real
//! structure bundle, Lipschitz and well-positioned certificates, and the
//! projection distance used by the manifold extension theorem.

use crate::error::{Error, Result};
use crate::fbi::bracket;
use crate::jets::{CoeffProvider, VectorFrame};
use crate::numeric::norm;
use crate::series::TruncatedSeries;
use num_complex::Complex64;
use rand::Rng;
use std::sync::Arc;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Flat,
    /// m = 1, phi(x) = x^2/4
    Quadratic,
    /// m = 2, phi(x) = (x1 x2 / 4, 0)
    Bilinear,
}

/// A chart Z(x) = x + i phi(x) over a box U, with phi(0) = 0, dphi(0) = 0.
#[derive(Debug, Clone)]
pub struct MaximallyRealChart {
    pub name: String,
    pub m: usize,
    pub kind: ChartKind,
    pub u_box: Vec<(f64, f64)>,
}

impl MaximallyRealChart {
    pub fn flat(m: usize, half_width: f64) -> Self {
        Self {
            name: format!("chart_flat{m}"),
            m,
            kind: ChartKind::Flat,
            u_box: vec![(-half_width, half_width); m],
        }
    }

    pub fn quadratic(half_width: f64) -> Self {
        Self {
            name: "chart_quadratic".into(),
            m: 1,
            kind: ChartKind::Quadratic,
            u_box: vec![(-half_width, half_width)],
        }
    }

    pub fn bilinear(half_width: f64) -> Self {
        Self {
            name: "chart_bilinear".into(),
            m: 2,
            kind: ChartKind::Bilinear,
            u_box: vec![(-half_width, half_width); 2],
        }
    }

    pub fn by_name(name: &str, half_width: f64) -> Option<Self> {
        match name {
            "chart_flat1" => Some(Self::flat(1, half_width)),
            "chart_flat2" => Some(Self::flat(2, half_width)),
            "chart_quadratic" => Some(Self::quadratic(half_width)),
            "chart_bilinear" => Some(Self::bilinear(half_width)),
            _ => None,
        }
    }

    pub fn phi(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            ChartKind::Flat => vec![0.0; self.m],
            ChartKind::Quadratic => vec![x[0] * x[0] / 4.0],
            ChartKind::Bilinear => vec![x[0] * x[1] / 4.0, 0.0],
        }
    }

    /// Jacobian dphi_j/dx_l.
    pub fn phi_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match self.kind {
            ChartKind::Flat => vec![vec![0.0; self.m]; self.m],
            ChartKind::Quadratic => vec![vec![x[0] / 2.0]],
            ChartKind::Bilinear => vec![vec![x[1] / 4.0, x[0] / 4.0], vec![0.0, 0.0]],
        }
    }

    pub fn z(&self, x: &[f64]) -> Vec<Complex64> {
        let phi = self.phi(x);
        x.iter()
            .zip(&phi)
            .map(|(&xr, &xi)| Complex64::new(xr, xi))
            .collect()
    }

    /// [Z_x]_{j l} = delta_{j l} + i dphi_j/dx_l.
    pub fn zx(&self, x: &[f64]) -> Vec<Vec<Complex64>> {
        let jac = self.phi_jacobian(x);
        (0..self.m)
            .map(|j| {
                (0..self.m)
                    .map(|l| {
                        let kron = if j == l { 1.0 } else { 0.0 };
                        Complex64::new(kron, jac[j][l])
                    })
                    .collect()
            })
            .collect()
    }

    pub fn det_zx(&self, x: &[f64]) -> Complex64 {
        let zx = self.zx(x);
        match self.m {
            1 => zx[0][0],
            _ => zx[0][0] * zx[1][1] - zx[0][1] * zx[1][0],
        }
    }

    /// Entries of Z_x as truncated series at the base point (the corpus charts
    /// have polynomial phi, so these are exact).
    fn zx_series(&self, x: &[f64], order: usize) -> Vec<Vec<TruncatedSeries>> {
        let m = self.m;
        let mut out =
            vec![vec![TruncatedSeries::zero(m, order); m]; m];
        let jac = self.phi_jacobian(x);
        for j in 0..m {
            for l in 0..m {
                let kron = if j == l { 1.0 } else { 0.0 };
                let mut s = TruncatedSeries::constant(m, order, Complex64::new(kron, jac[j][l]));
                // linear corrections of the Jacobian entries around x
                match self.kind {
                    ChartKind::Flat => {}
                    ChartKind::Quadratic => {
                        // d/dx of x/2 is 1/2
                        s = s.add(&TruncatedSeries::coordinate(m, order, 0).scale(Complex64::new(0.0, 0.5)));
                    }
                    ChartKind::Bilinear => {
                        if j == 0 {
                            // dphi_1/dx_1 = x2/4 varies in x2; dphi_1/dx_2 = x1/4 in x1
                            let axis = 1 - l;
                            s = s.add(
                                &TruncatedSeries::coordinate(m, order, axis)
                                    .scale(Complex64::new(0.0, 0.25)),
                            );
                        }
                    }
                }
                out[j][l] = s;
            }
        }
        out
    }

    /// The restricted dual frame X_k = sum_l a_kl(x) d/dx_l with
    /// t[a] = [Z_x]^{-1}; coefficients delivered as exact series.
    pub fn frame(&self) -> VectorFrame {
        if self.kind == ChartKind::Flat {
            return VectorFrame::coordinate(self.m);
        }
        let chart = self.clone();
        let provider: CoeffProvider = Arc::new(move |x: &[f64], order: usize| {
            let zx = chart.zx_series(x, order);
            let inv = invert_series_matrix(&zx);
            // a = transpose of inv(Zx)
            let m = chart.m;
            (0..m)
                .map(|k| (0..m).map(|l| inv[l][k].clone()).collect())
                .collect()
        });
        VectorFrame::chart(self.m, provider)
    }

    /// Largest sampled ratio |phi(x) - phi(x')|/|x - x'|.
    pub fn lipschitz_estimate(&self, samples: &[Vec<f64>]) -> f64 {
        let mut sup: f64 = 0.0;
        for (i, x) in samples.iter().enumerate() {
            for xp in &samples[i + 1..] {
                let dx: f64 = norm(
                    &x.iter().zip(xp).map(|(a, b)| a - b).collect::<Vec<_>>(),
                );
                if dx < 1e-14 {
                    continue;
                }
                let dphi: f64 = norm(
                    &self
                        .phi(x)
                        .iter()
                        .zip(&self.phi(xp))
                        .map(|(a, b)| a - b)
                        .collect::<Vec<_>>(),
                );
                sup = sup.max(dphi / dx);
            }
        }
        sup
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.u_box)
            .all(|(xi, (a, b))| *xi >= a - 1e-12 && *xi <= b + 1e-12)
    }
}

fn invert_series_matrix(m: &[Vec<TruncatedSeries>]) -> Vec<Vec<TruncatedSeries>> {
    match m.len() {
        1 => vec![vec![m[0][0].recip()]],
        2 => {
            let det = m[0][0].mul(&m[1][1]).add(&m[0][1].mul(&m[1][0]).scale(-Complex64::ONE));
            let det_inv = det.recip();
            vec![
                vec![m[1][1].mul(&det_inv), m[0][1].scale(-Complex64::ONE).mul(&det_inv)],
                vec![m[1][0].scale(-Complex64::ONE).mul(&det_inv), m[0][0].mul(&det_inv)],
            ]
        }
        _ => unreachable!("charts are restricted to m <= 2"),
    }
}

fn solve2(a: &[Vec<Complex64>], b: &[Complex64]) -> Result<Vec<Complex64>> {
    match a.len() {
        1 => {
            if a[0][0].norm() < 1e-14 {
                return Err(Error::SingularMatrix("1x1 chart matrix".into()));
            }
            Ok(vec![b[0] / a[0][0]])
        }
        _ => {
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            if det.norm() < 1e-14 {
                return Err(Error::SingularMatrix("2x2 chart matrix".into()));
            }
            Ok(vec![
                (b[0] * a[1][1] - b[1] * a[0][1]) / det,
                (a[0][0] * b[1] - a[1][0] * b[0]) / det,
            ])
        }
    }
}

/// A fiber direction of the real structure bundle: zeta = t(Z_x)^{-1} xi.
#[derive(Debug, Clone)]
pub struct StructureDirection {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub zeta: Vec<Complex64>,
    /// |Im zeta| / |Re zeta|
    pub ratio: f64,
}

pub fn structure_direction(
    chart: &MaximallyRealChart,
    x: &[f64],
    xi: &[f64],
) -> Result<StructureDirection> {
    if norm(xi) == 0.0 {
        return Err(Error::Domain("structure direction needs xi != 0".into()));
    }
    // solve t(Zx) zeta = xi
    let zx = chart.zx(x);
    let m = chart.m;
    let tzx: Vec<Vec<Complex64>> = (0..m)
        .map(|j| (0..m).map(|l| zx[l][j]).collect())
        .collect();
    let rhs: Vec<Complex64> = xi.iter().map(|&v| c(v)).collect();
    let zeta = solve2(&tzx, &rhs)?;
    let re: f64 = zeta.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    let im: f64 = zeta.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    Ok(StructureDirection {
        x: x.to_vec(),
        xi: xi.to_vec(),
        zeta,
        ratio: if re > 0.0 { im / re } else { f64::INFINITY },
    })
}

/// Sampled coercivity certificate for the FBI phase on Sigma x Sigma.
#[derive(Debug, Clone)]
pub struct WellPositionedCertificate {
    pub lambda: f64,
    /// max sampled |Im zeta| / |Re zeta|
    pub kappa: f64,
    /// min sampled -Re{ i zeta.(z-z') - lambda <zeta><z-z'>^2 } / (|zeta| |z-z'|^2)
    pub kappa_prime: f64,
    pub samples: usize,
    pub ok: bool,
    /// worst sample (x, x', xi) when the certificate fails
    pub worst: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

/// Sample pairs z = Z(x), z' = Z(x') and fiber directions at both points.
///
/// The fiber-intersection condition of the definition is approximated by
/// drawing zeta from the fibers at x and at x' separately.
pub fn check_well_positioned<R: Rng>(
    chart: &MaximallyRealChart,
    lambda: f64,
    sample_budget: usize,
    rng: &mut R,
) -> Result<WellPositionedCertificate> {
    if lambda <= 0.0 {
        return Err(Error::Domain("kernel scale lambda must be positive".into()));
    }
    let m = chart.m;
    let mut kappa: f64 = 0.0;
    let mut kappa_prime = f64::INFINITY;
    let mut worst = None;
    let mut taken = 0usize;
    while taken < sample_budget {
        let draw_point = |rng: &mut R| -> Vec<f64> {
            chart
                .u_box
                .iter()
                .map(|(a, b)| rng.gen_range(*a..*b))
                .collect()
        };
        let x = draw_point(rng);
        let xp = draw_point(rng);
        let mut xi: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if norm(&xi) < 1e-3 {
            continue;
        }
        let scale = rng.gen_range(0.5..2.0) / norm(&xi);
        xi.iter_mut().for_each(|v| *v *= scale);
        let base = if rng.gen_bool(0.5) { &x } else { &xp };
        let dir = structure_direction(chart, base, &xi)?;
        let z = chart.z(&x);
        let zp = chart.z(&xp);
        let d: Vec<Complex64> = z.iter().zip(&zp).map(|(a, b)| a - b).collect();
        let d_norm = d.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        if d_norm < 1e-10 {
            continue;
        }
        taken += 1;
        kappa = kappa.max(dir.ratio);
        // a fiber direction outside the cone is a failing sample, not an error
        let br = match bracket(&dir.zeta) {
            Ok(b) => b,
            Err(_) => {
                kappa_prime = f64::NEG_INFINITY;
                worst = Some((x.clone(), xp.clone(), xi.clone()));
                continue;
            }
        };
        let zeta_abs = dir.zeta.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        let izd: Complex64 = Complex64::i() * crate::numeric::cdot(&dir.zeta, &d);
        let d_sq = crate::numeric::cdot(&d, &d);
        let expr = izd - lambda * br * d_sq;
        let margin = -expr.re / (zeta_abs * d_norm * d_norm);
        if margin < kappa_prime {
            kappa_prime = margin;
            worst = Some((x.clone(), xp.clone(), xi.clone()));
        }
    }
    let ok = kappa < 1.0 && kappa_prime > 0.0;
    Ok(WellPositionedCertificate {
        lambda,
        kappa,
        kappa_prime,
        samples: taken,
        ok,
        worst: if ok { None } else { worst },
    })
}

/// Distance from z to the chart graph by damped Newton on |z - Z(x)|^2,
/// seeded at Re z; returns (distance, foot point x).
pub fn dist_to_chart(chart: &MaximallyRealChart, z: &[Complex64]) -> (f64, Vec<f64>) {
    let m = chart.m;
    let obj = |x: &[f64]| -> f64 {
        let zz = chart.z(x);
        z.iter().zip(&zz).map(|(a, b)| (a - b).norm_sqr()).sum()
    };
    let mut x: Vec<f64> = z.iter().map(|w| w.re).collect();
    let mut f = obj(&x);
    for _ in 0..60 {
        // gradient of |z - Z(x)|^2: -2 Re conj(z - Z) . dZ/dx
        let zz = chart.z(&x);
        let diff: Vec<Complex64> = z.iter().zip(&zz).map(|(a, b)| a - b).collect();
        let zx = chart.zx(&x);
        let grad: Vec<f64> = (0..m)
            .map(|l| {
                -2.0 * (0..m)
                    .map(|j| (diff[j].conj() * zx[j][l]).re)
                    .sum::<f64>()
            })
            .collect();
        let g = norm(&grad);
        if g < 1e-12 {
            break;
        }
        // damped step along -grad with simple backtracking
        let mut step = 0.5;
        let mut improved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
            let fc = obj(&cand);
            if fc < f {
                x = cand;
                f = fc;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved || f < 1e-24 {
            break;
        }
    }
    (f.sqrt(), x)
}

/// Stable listing of shipped charts: (name, m).
pub fn chart_catalog() -> Vec<(&'static str, usize)> {
    vec![
        ("chart_bilinear", 2),
        ("chart_flat1", 1),
        ("chart_flat2", 2),
        ("chart_quadratic", 1),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{frame_apply, Poly};
    use rand::SeedableRng;

    #[test]
    fn quadratic_chart_coefficient() {
        // a(1) = 1/(1 + i/2) = 0.8 - 0.4i
        let chart = MaximallyRealChart::quadratic(1.2);
        let frame = chart.frame();
        let a = frame.coeff(0, 0, &[1.0]);
        assert!((a - Complex64::new(0.8, -0.4)).norm() < 1e-12);
    }

    #[test]
    fn frame_is_dual_to_z() {
        // X_k Z_j = delta_jk at sampled points
        for chart in [
            MaximallyRealChart::quadratic(0.8),
            MaximallyRealChart::bilinear(0.5),
        ] {
            let m = chart.m;
            let frame = chart.frame();
            let pts: Vec<Vec<f64>> = if m == 1 {
                vec![vec![-0.5], vec![0.0], vec![0.6]]
            } else {
                vec![vec![0.2, -0.3], vec![0.0, 0.0], vec![-0.4, 0.1]]
            };
            for j in 0..m {
                // Z_j(x) = x_j + i phi_j(x) as a polynomial jet function
                let zj = match chart.kind {
                    ChartKind::Quadratic => Poly::new(
                        1,
                        vec![
                            (vec![1], Complex64::ONE),
                            (vec![2], Complex64::new(0.0, 0.25)),
                        ],
                    ),
                    ChartKind::Bilinear => {
                        if j == 0 {
                            Poly::new(
                                2,
                                vec![
                                    (vec![1, 0], Complex64::ONE),
                                    (vec![1, 1], Complex64::new(0.0, 0.25)),
                                ],
                            )
                        } else {
                            Poly::new(2, vec![(vec![0, 1], Complex64::ONE)])
                        }
                    }
                    ChartKind::Flat => unreachable!(),
                };
                let zj = zj.into_jet_function(format!("z{j}"), chart.u_box.clone());
                for x in &pts {
                    for k in 0..m {
                        let mut alpha = vec![0usize; m];
                        alpha[k] = 1;
                        let got = frame_apply(&frame, &zj, &alpha, x).unwrap();
                        let expect = if j == k { 1.0 } else { 0.0 };
                        assert!(
                            (got - Complex64::new(expect, 0.0)).norm() < 1e-9,
                            "chart {} X_{k} Z_{j} at {x:?} = {got}",
                            chart.name
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn frame_commutativity_bilinear() {
        use crate::jets::apply_fields;
        let chart = MaximallyRealChart::bilinear(0.5);
        let frame = chart.frame();
        let g = Poly::new(
            2,
            vec![
                (vec![2, 1], Complex64::new(1.0, 0.0)),
                (vec![0, 3], Complex64::new(0.5, 0.0)),
                (vec![1, 1], Complex64::new(-0.3, 0.2)),
            ],
        )
        .into_jet_function("probe", chart.u_box.clone());
        for x in [[0.1, -0.2], [0.3, 0.25], [0.0, 0.0]] {
            let a = apply_fields(&frame, &g, &[0, 1], &x).unwrap();
            let b = apply_fields(&frame, &g, &[1, 0], &x).unwrap();
            let scale = a.norm().max(1.0);
            assert!((a - b).norm() / scale < 1e-6, "commutator at {x:?}");
        }
    }

    #[test]
    fn structure_direction_values() {
        let flat = MaximallyRealChart::flat(1, 1.0);
        let d = structure_direction(&flat, &[0.3], &[1.0]).unwrap();
        assert!((d.zeta[0] - Complex64::ONE).norm() < 1e-14);
        assert_eq!(d.ratio, 0.0);

        let quad = MaximallyRealChart::quadratic(1.2);
        let d = structure_direction(&quad, &[1.0], &[1.0]).unwrap();
        assert!((d.zeta[0] - Complex64::new(0.8, -0.4)).norm() < 1e-12);
        assert!((d.ratio - 0.5).abs() < 1e-12);

        assert!(structure_direction(&quad, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn structure_direction_inverts() {
        let chart = MaximallyRealChart::bilinear(0.5);
        let x = [0.2, -0.3];
        let xi = [0.7, -1.3];
        let d = structure_direction(&chart, &x, &xi).unwrap();
        // t(Zx) zeta must recover xi
        let zx = chart.zx(&x);
        for j in 0..2 {
            let got: Complex64 = (0..2).map(|l| zx[l][j] * d.zeta[l]).sum();
            assert!((got - c(xi[j])).norm() < 1e-13);
        }
    }

    #[test]
    fn well_positioned_flat_and_quadratic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let flat = MaximallyRealChart::flat(1, 0.5);
        let cert = check_well_positioned(&flat, 1.0, 2000, &mut rng).unwrap();
        assert!(cert.ok);
        assert!((cert.kappa_prime - 1.0).abs() < 1e-9, "flat kappa' = {}", cert.kappa_prime);

        let quad = MaximallyRealChart::quadratic(0.2);
        let cert = check_well_positioned(&quad, 1.0, 10_000, &mut rng).unwrap();
        assert!(cert.ok);
        assert!(cert.kappa_prime >= 0.5, "kappa' = {}", cert.kappa_prime);
        assert!(cert.kappa < 1.0);
    }

    #[test]
    fn well_positioned_fails_on_steep_chart() {
        // C_phi ~ 1 on a large box: certificate fails (the cone condition
        // |Im zeta| < |Re zeta| is lost at the box edge); shrinking U restores it
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let steep = MaximallyRealChart::quadratic(2.1);
        let cert = check_well_positioned(&steep, 1.0, 20_000, &mut rng).unwrap();
        assert!(!cert.ok, "kappa'={} kappa={}", cert.kappa_prime, cert.kappa);
        assert!(cert.worst.is_some());
        let small = MaximallyRealChart::quadratic(0.2);
        let cert2 = check_well_positioned(&small, 1.0, 10_000, &mut rng).unwrap();
        assert!(cert2.ok);
    }

    #[test]
    fn lipschitz_estimates() {
        let flat = MaximallyRealChart::flat(1, 1.0);
        let grid: Vec<Vec<f64>> = (0..=20).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        assert_eq!(flat.lipschitz_estimate(&grid), 0.0);
        let quad = MaximallyRealChart::quadratic(1.0);
        let est = quad.lipschitz_estimate(&grid);
        assert!((est - 0.5).abs() < 0.03, "est = {est}");
        let quad_small = MaximallyRealChart::quadratic(0.2);
        let grid: Vec<Vec<f64>> = (0..=20).map(|i| vec![-0.2 + 0.02 * i as f64]).collect();
        let est = quad_small.lipschitz_estimate(&grid);
        assert!((est - 0.1).abs() < 0.01, "est = {est}");
    }

    #[test]
    fn distance_projection() {
        let chart = MaximallyRealChart::quadratic(1.0);
        // point on the graph
        let z = chart.z(&[0.4]);
        let (d, foot) = dist_to_chart(&chart, &z);
        assert!(d < 1e-10);
        assert!((foot[0] - 0.4).abs() < 1e-8);
        // point off the graph: distance below the vertical offset
        let z = vec![Complex64::new(0.4, 0.04 + 0.01)];
        let (d, _) = dist_to_chart(&chart, &z);
        assert!(d <= 0.0100001 && d > 0.008, "d = {d}");
    }
}
