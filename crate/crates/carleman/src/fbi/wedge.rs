//! Wedges with edge on a chart, slow-growth almost-analytic functions and
//! their distributional boundary values.

use crate::error::{Error, Result};
use crate::manifold::MaximallyRealChart;
use crate::numeric::{extrapolate_to_zero, gauss_legendre_on, KahanSumC};
use num_complex::Complex64;
use std::sync::Arc;

/// A function on the wedge W_delta(V, Gamma) = { Z(x) + iv : x in V, v in
/// Gamma, |v| < delta } with a slow-growth certificate |f| <= C/|v|^N and an
/// almost-analyticity constant for |dbar f|.
#[derive(Clone)]
pub struct WedgeFunction {
    pub name: String,
    /// edge parameter box V (m = 1 at desk scale)
    pub v_box: (f64, f64),
    /// directrix: fixed unit direction of the open cone Gamma
    pub gamma: f64,
    pub delta: f64,
    pub eval: Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>,
    /// slow growth |f(Z(x) + iv)| <= growth_c / |v|^growth_n
    pub growth_c: f64,
    pub growth_n: usize,
    /// |dbar f| <= aa_constant^{k+1} m_k |v|^k (0 for holomorphic members)
    pub aa_constant: f64,
}

impl WedgeFunction {
    /// Validate the slow-growth certificate on a (x, t)-sample grid.
    pub fn validate_growth(&self, chart: &MaximallyRealChart) -> Result<()> {
        let (a, b) = self.v_box;
        for i in 0..=12 {
            let x = a + (b - a) * i as f64 / 12.0;
            let z0 = chart.z(&[x])[0];
            for j in 1..=10 {
                let t = self.delta * 0.5f64.powi(j);
                let v = (self.eval)(z0 + Complex64::new(0.0, self.gamma * t)).norm();
                let bound = self.growth_c / t.powi(self.growth_n as i32);
                if v > bound * (1.0 + 1e-9) {
                    return Err(Error::GrowthViolation(format!(
                        "{}: |f| = {v:.3e} exceeds C/|v|^N = {bound:.3e} at x = {x}, t = {t:.3e}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// <b_Gamma(f), psi> = lim_{t -> 0+} int_V f(Z(x) + i t gamma) psi(Z(x)) dZ(x),
/// on a decreasing t-ladder with polynomial extrapolation of order
/// growth_n + 1.
pub fn boundary_value(
    f: &WedgeFunction,
    chart: &MaximallyRealChart,
    test: &dyn Fn(f64) -> Complex64,
) -> Result<Complex64> {
    f.validate_growth(chart)?;
    // order N+1 extrapolation needs N+2 points; entire members still see the
    // genuine t^2, t^3 terms of the edge limit, so never fewer than 5
    let n_extrap = (f.growth_n + 2).max(5);
    let t0 = f.delta / 8.0;
    let ladder: Vec<f64> = (0..n_extrap).map(|j| t0 * 0.5f64.powi(j as i32)).collect();
    let (a, b) = f.v_box;
    // graded panels near the edge point where f(Z(x) + it gamma) sharpens as t -> 0
    let scale = (b - a) / 2.0;
    let breaks: Vec<f64> = [-0.1, -0.01, -0.001, 0.001, 0.01, 0.1]
        .iter()
        .map(|t| t * scale)
        .collect();
    let (xs, ws) = panel_rule(a, b, &breaks, 900);
    let vals: Vec<Complex64> = ladder
        .iter()
        .map(|&t| {
            let mut acc = KahanSumC::new();
            for (x, w) in xs.iter().zip(&ws) {
                let z0 = chart.z(&[*x])[0];
                let fv = (f.eval)(z0 + Complex64::new(0.0, f.gamma * t));
                acc.add(fv * test(*x) * chart.det_zx(&[*x]) * *w);
            }
            acc.value()
        })
        .collect();
    Ok(extrapolate_to_zero(&ladder, &vals))
}

/// Gauss-Legendre nodes over [a, b] split at the interior break points, node
/// budget distributed by length with a per-panel floor.
fn panel_rule(a: f64, b: f64, breaks: &[f64], nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let mut edges: Vec<f64> = vec![a, b];
    edges.extend(breaks.iter().copied().filter(|t| a < *t && *t < b));
    edges.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for w in edges.windows(2) {
        let frac = (w[1] - w[0]) / (b - a);
        let n = ((nodes as f64 * frac).ceil() as usize).max(48);
        let (x1, w1) = gauss_legendre_on(n, w[0], w[1]);
        xs.extend(x1);
        ws.extend(w1);
    }
    (xs, ws)
}

/// Corpus wedge functions on the flat chart.
pub fn wedge_by_name(name: &str) -> Option<WedgeFunction> {
    match name {
        // entire: boundary value is the plain restriction
        "wedge_square" => Some(WedgeFunction {
            name: "wedge_square".into(),
            v_box: (-1.0, 1.0),
            gamma: 1.0,
            delta: 0.5,
            eval: Arc::new(|z| z * z),
            growth_c: 4.0,
            growth_n: 0,
            aa_constant: 0.0,
        }),
        // 1/z from the upper half plane: b(1/z) = p.v.(1/x) - i pi delta
        "wedge_cauchy" => Some(WedgeFunction {
            name: "wedge_cauchy".into(),
            v_box: (-1.0, 1.0),
            gamma: 1.0,
            delta: 0.5,
            eval: Arc::new(|z| z.finv()),
            growth_c: 1.0,
            growth_n: 1,
            aa_constant: 0.0,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bump_value;

    #[test]
    fn entire_function_restricts() {
        let chart = MaximallyRealChart::flat(1, 1.0);
        let f = wedge_by_name("wedge_square").unwrap();
        // test function: Gaussian bump scaled into (-1, 1)
        let test = |x: f64| Complex64::new(bump_value(x), 0.0);
        let got = boundary_value(&f, &chart, &test).unwrap();
        // oracle: int x^2 bump(x) dx by direct quadrature
        let (xs, ws) = gauss_legendre_on(400, -1.0, 1.0);
        let oracle: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x * x * bump_value(*x)).sum();
        assert!((got.re - oracle).abs() < 1e-9, "{} vs {oracle}", got.re);
        assert!(got.im.abs() < 1e-9);
    }

    #[test]
    fn cauchy_boundary_value_is_plemelj() {
        // pairing b(1/z) with an even bump: the principal value kills the even
        // part, leaving -i pi psi(0)
        let chart = MaximallyRealChart::flat(1, 1.0);
        let f = wedge_by_name("wedge_cauchy").unwrap();
        let test = |x: f64| Complex64::new(bump_value(x), 0.0);
        let got = boundary_value(&f, &chart, &test).unwrap();
        let expect = -std::f64::consts::PI * bump_value(0.0);
        assert!(got.re.abs() < 1e-6, "p.v. part {}", got.re);
        assert!((got.im - expect).abs() < 1e-6, "{} vs {expect}", got.im);
    }

    #[test]
    fn growth_violation_detected() {
        let chart = MaximallyRealChart::flat(1, 1.0);
        // declares N = 1 but grows like 1/|v|^3
        let f = WedgeFunction {
            name: "liar".into(),
            v_box: (-1.0, 1.0),
            gamma: 1.0,
            delta: 0.5,
            eval: Arc::new(|z| (z * z * z).finv()),
            growth_c: 1.0,
            growth_n: 1,
            aa_constant: 0.0,
        };
        let test = |x: f64| Complex64::new(bump_value(x), 0.0);
        assert!(matches!(
            boundary_value(&f, &chart, &test),
            Err(Error::GrowthViolation(_))
        ));
    }
}
