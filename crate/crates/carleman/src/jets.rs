//! Functions with iterated-derivative oracles X^alpha f, the commuting frames
//! X that differentiate them, and Denjoy-Carleman class-constant fitting.

use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, ln_multi_factorial, multi_indices_upto, multi_order};
use crate::sequence::RegularSequence;
use crate::series::TruncatedSeries;
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetKind {
    ExactClosedForm,
    FiniteDifference,
}

type EvalFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;
type JetFn = Arc<dyn Fn(&[usize], &[f64]) -> Complex64 + Send + Sync>;

/// A function together with an oracle for its iterated partial derivatives.
#[derive(Clone)]
pub struct JetFunction {
    pub name: String,
    pub dim: usize,
    pub domain: Vec<(f64, f64)>,
    pub max_order: usize,
    pub jet_kind: JetKind,
    eval: EvalFn,
    jet: JetFn,
}

impl std::fmt::Debug for JetFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JetFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("max_order", &self.max_order)
            .field("jet_kind", &self.jet_kind)
            .finish()
    }
}

impl JetFunction {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        domain: Vec<(f64, f64)>,
        max_order: usize,
        jet_kind: JetKind,
        eval: EvalFn,
        jet: JetFn,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            domain,
            max_order,
            jet_kind,
            eval,
            jet,
        }
    }

    /// Wrap a plain evaluator with Richardson-extrapolated central-difference
    /// jets. Beyond order 3 numeric jets are noise-dominated, so max_order = 3.
    ///
    /// The step balances truncation against the roundoff amplified by |alpha|
    /// nested differences: h = eps^{1/(|alpha|+2)} * scale.
    pub fn from_eval_fd(
        name: impl Into<String>,
        dim: usize,
        domain: Vec<(f64, f64)>,
        eval: EvalFn,
        scale: f64,
    ) -> Self {
        let eval2 = eval.clone();
        let jet = Arc::new(move |alpha: &[usize], x: &[f64]| {
            let order = multi_order(alpha).max(1);
            let h = f64::EPSILON.powf(1.0 / (order as f64 + 2.0)) * scale;
            fd_jet(&*eval2, alpha, x, h)
        });
        Self::new(name, dim, domain, 3, JetKind::FiniteDifference, eval, jet)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = 1e-12;
        x.iter()
            .zip(&self.domain)
            .all(|(xi, (a, b))| *xi >= a - tol && *xi <= b + tol)
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        (self.eval)(x)
    }

    /// d^alpha f(x); jet(0, x) must agree with eval(x).
    pub fn jet(&self, alpha: &[usize], x: &[f64]) -> Result<Complex64> {
        let order = multi_order(alpha);
        if order > self.max_order {
            return Err(Error::OrderOverflow {
                name: self.name.clone(),
                order,
                max_order: self.max_order,
            });
        }
        if !self.contains(x) {
            return Err(Error::OutsideDomain {
                name: self.name.clone(),
                point: x.to_vec(),
            });
        }
        Ok((self.jet)(alpha, x))
    }

    /// Taylor series of f at x, valid to the requested order.
    pub fn taylor_at(&self, x: &[f64], order: usize) -> Result<TruncatedSeries> {
        let mut s = TruncatedSeries::zero(self.dim, order);
        for alpha in multi_indices_upto(self.dim, order) {
            let d = self.jet(&alpha, x)?;
            let coeff = d * (-ln_multi_factorial(&alpha)).exp();
            s.set(&alpha, coeff);
        }
        Ok(s)
    }
}

fn fd_first(eval: &dyn Fn(&[f64]) -> Complex64, axis: usize, x: &[f64], h: f64) -> Complex64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    let central = |xp: &mut [f64], xm: &mut [f64], step: f64| {
        xp[axis] = x[axis] + step;
        xm[axis] = x[axis] - step;
        (eval(xp) - eval(xm)) / (2.0 * step)
    };
    let d1 = central(&mut xp, &mut xm, h);
    let d2 = central(&mut xp, &mut xm, 0.5 * h);
    // Richardson: central differences have an h^2 error term
    d2 + (d2 - d1) / 3.0
}

fn fd_jet(eval: &dyn Fn(&[f64]) -> Complex64, alpha: &[usize], x: &[f64], h: f64) -> Complex64 {
    match alpha.iter().position(|&a| a > 0) {
        None => eval(x),
        Some(axis) => {
            let mut inner_alpha = alpha.to_vec();
            inner_alpha[axis] -= 1;
            let inner = move |y: &[f64]| fd_jet(eval, &inner_alpha, y, h);
            fd_first(&inner, axis, x, h)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Coordinate,
    Chart,
}

/// Coefficient matrix a[k][l] of X_k = sum_l a_kl(x) d/dx_l as truncated
/// series at a base point, to a caller-chosen order.
pub type CoeffProvider = Arc<dyn Fn(&[f64], usize) -> Vec<Vec<TruncatedSeries>> + Send + Sync>;

/// An ordered set of commuting complex vector fields.
#[derive(Clone)]
pub struct VectorFrame {
    pub dim: usize,
    pub kind: FrameKind,
    provider: Option<CoeffProvider>,
}

impl std::fmt::Debug for VectorFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorFrame")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .finish()
    }
}

impl VectorFrame {
    pub fn coordinate(dim: usize) -> Self {
        Self {
            dim,
            kind: FrameKind::Coordinate,
            provider: None,
        }
    }

    pub fn chart(dim: usize, provider: CoeffProvider) -> Self {
        Self {
            dim,
            kind: FrameKind::Chart,
            provider: Some(provider),
        }
    }

    /// Pointwise coefficient a_kl(x).
    pub fn coeff(&self, k: usize, l: usize, x: &[f64]) -> Complex64 {
        match &self.provider {
            None => {
                if k == l {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                }
            }
            Some(p) => p(x, 0)[k][l].constant_term(),
        }
    }

    fn coeff_matrix(&self, x: &[f64], order: usize) -> Option<Vec<Vec<TruncatedSeries>>> {
        self.provider.as_ref().map(|p| p(x, order))
    }
}

/// Apply a single field X_k to a series representation of g at the base point.
fn apply_field_series(
    a: &[Vec<TruncatedSeries>],
    k: usize,
    g: &TruncatedSeries,
) -> TruncatedSeries {
    let dim = g.dim;
    let mut out = TruncatedSeries::zero(dim, g.order - 1);
    for l in 0..dim {
        out = out.add(&a[k][l].mul(&g.derivative(l)));
    }
    out
}

/// Apply the composition X_{seq[0]} X_{seq[1]} ... X_{seq.last} f at x
/// (seq.last acts first).
pub fn apply_fields(
    frame: &VectorFrame,
    f: &JetFunction,
    field_seq: &[usize],
    x: &[f64],
) -> Result<Complex64> {
    if frame.dim != f.dim {
        return Err(Error::Domain(format!(
            "frame dim {} does not match function dim {}",
            frame.dim, f.dim
        )));
    }
    match frame.kind {
        FrameKind::Coordinate => {
            let mut alpha = vec![0usize; f.dim];
            for &k in field_seq {
                alpha[k] += 1;
            }
            f.jet(&alpha, x)
        }
        FrameKind::Chart => {
            let order = field_seq.len();
            if order > f.max_order {
                return Err(Error::OrderOverflow {
                    name: f.name.clone(),
                    order,
                    max_order: f.max_order,
                });
            }
            let a = frame.coeff_matrix(x, order).expect("chart frame has provider");
            let mut g = f.taylor_at(x, order)?;
            for &k in field_seq.iter().rev() {
                g = apply_field_series(&a, k, &g);
            }
            Ok(g.constant_term())
        }
    }
}

/// X^alpha f(x) with the fixed composition X_1^{a_1} o ... o X_m^{a_m}.
pub fn frame_apply(
    frame: &VectorFrame,
    f: &JetFunction,
    alpha: &[usize],
    x: &[f64],
) -> Result<Complex64> {
    let mut seq = Vec::with_capacity(multi_order(alpha));
    for (k, &count) in alpha.iter().enumerate() {
        for _ in 0..count {
            seq.push(k);
        }
    }
    apply_fields(frame, f, &seq, x)
}

/// Frame Taylor coefficient f_alpha(u) = X^alpha f(u) / alpha!.
pub fn taylor_coefficient(
    f: &JetFunction,
    frame: &VectorFrame,
    alpha: &[usize],
    u: &[f64],
) -> Result<Complex64> {
    Ok(frame_apply(frame, f, alpha, u)? * (-ln_multi_factorial(alpha)).exp())
}

/// Fitted class constant: the smallest C with sup |X^alpha f| <= C^{|a|+1} M_{|a|}.
#[derive(Debug, Clone)]
pub struct ClassFit {
    pub c: f64,
    /// (order, sup over grid and alpha of |X^alpha f|, C required by that order)
    pub per_order: Vec<(usize, f64, f64)>,
    /// Running fit c(K') for K' = 0..=K; growth across K flags membership failure.
    pub history: Vec<f64>,
}

impl ClassFit {
    /// Relative change of the fit between orders k_lo and k_hi.
    pub fn drift(&self, k_lo: usize, k_hi: usize) -> f64 {
        let a = self.history[k_lo.min(self.history.len() - 1)];
        let b = self.history[k_hi.min(self.history.len() - 1)];
        if a == 0.0 {
            return if b == 0.0 { 0.0 } else { f64::INFINITY };
        }
        (b - a).abs() / a
    }
}

/// Fit the minimal class constant of f on a grid, orders |alpha| <= k_test.
pub fn class_constant_fit(
    f: &JetFunction,
    frame: &VectorFrame,
    seq: &RegularSequence,
    k_test: usize,
    grid: &[Vec<f64>],
) -> Result<ClassFit> {
    if grid.is_empty() {
        return Err(Error::Empty("class fit needs a nonempty grid".into()));
    }
    if k_test > f.max_order {
        return Err(Error::OrderOverflow {
            name: f.name.clone(),
            order: k_test,
            max_order: f.max_order,
        });
    }
    let mut sup_by_order = vec![0.0_f64; k_test + 1];
    for alpha in multi_indices_upto(f.dim, k_test) {
        let order = multi_order(&alpha);
        for x in grid {
            let v = frame_apply(frame, f, &alpha, x)?.norm();
            if v > sup_by_order[order] {
                sup_by_order[order] = v;
            }
        }
    }
    let mut per_order = Vec::with_capacity(k_test + 1);
    let mut history = Vec::with_capacity(k_test + 1);
    let mut c = 0.0_f64;
    for (order, &sup) in sup_by_order.iter().enumerate() {
        let required = if sup == 0.0 {
            0.0
        } else {
            ((sup.ln() - seq.ln_big_m(order)?) / (order as f64 + 1.0)).exp()
        };
        c = c.max(required);
        per_order.push((order, sup, required));
        history.push(c);
    }
    Ok(ClassFit { c, per_order, history })
}

/// Multivariate polynomial with complex coefficients, exact under
/// differentiation and evaluable at complex arguments.
#[derive(Debug, Clone)]
pub struct Poly {
    pub dim: usize,
    pub terms: Vec<(Vec<usize>, Complex64)>,
}

impl Poly {
    pub fn new(dim: usize, terms: Vec<(Vec<usize>, Complex64)>) -> Self {
        Self { dim, terms }
    }

    pub fn monomial(dim: usize, alpha: Vec<usize>, coeff: Complex64) -> Self {
        Self::new(dim, vec![(alpha, coeff)])
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(a, _)| multi_order(a)).max().unwrap_or(0)
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (alpha, coeff) in &self.terms {
            let mut term = *coeff;
            for (j, &p) in alpha.iter().enumerate() {
                term *= z[j].powu(p as u32);
            }
            acc += term;
        }
        acc
    }

    pub fn eval_real(&self, x: &[f64]) -> Complex64 {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.eval(&z)
    }

    /// d^alpha P, exact.
    pub fn jet(&self, alpha: &[usize], x: &[f64]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        'terms: for (beta, coeff) in &self.terms {
            let mut factor = 1.0_f64;
            let mut rest = *coeff;
            for j in 0..self.dim {
                if beta[j] < alpha[j] {
                    continue 'terms;
                }
                // beta_j (beta_j - 1) ... (beta_j - alpha_j + 1)
                factor *= (ln_factorial(beta[j]) - ln_factorial(beta[j] - alpha[j])).exp();
                rest *= Complex64::new(x[j], 0.0).powu((beta[j] - alpha[j]) as u32);
            }
            acc += factor * rest;
        }
        acc
    }

    pub fn into_jet_function(self, name: impl Into<String>, domain: Vec<(f64, f64)>) -> JetFunction {
        let dim = self.dim;
        let p1 = Arc::new(self);
        let p2 = p1.clone();
        JetFunction::new(
            name,
            dim,
            domain,
            usize::MAX / 2,
            JetKind::ExactClosedForm,
            Arc::new(move |x| p1.eval_real(x)),
            Arc::new(move |alpha, x| p2.jet(alpha, x)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn coordinate_frame_on_square() {
        let f = corpus::square();
        let frame = VectorFrame::coordinate(1);
        assert_eq!(frame_apply(&frame, &f, &[2], &[0.7]).unwrap(), c(2.0));
        assert_eq!(frame_apply(&frame, &f, &[1], &[0.0]).unwrap(), c(0.0));
    }

    #[test]
    fn taylor_coefficients_of_runge() {
        // 1/(1+x^2) = 1 - x^2 + x^4 - ... at 0
        let f = corpus::runge();
        let frame = VectorFrame::coordinate(1);
        assert!((taylor_coefficient(&f, &frame, &[2], &[0.0]).unwrap() - c(-1.0)).norm() < 1e-12);
        assert!((taylor_coefficient(&f, &frame, &[0], &[0.0]).unwrap() - c(1.0)).norm() < 1e-12);
        assert!((taylor_coefficient(&f, &frame, &[4], &[0.0]).unwrap() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn class_fit_square_gevrey2() {
        let f = corpus::square();
        let frame = VectorFrame::coordinate(1);
        let seq = RegularSequence::gevrey(2.0, 60).unwrap();
        let grid: Vec<Vec<f64>> = (0..=20).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        let fit = class_constant_fit(&f, &frame, &seq, 4, &grid).unwrap();
        // binding order |alpha| = 1: C^2 M_1 >= 2
        assert!((fit.c - 2.0_f64.sqrt()).abs() < 1e-12, "C = {}", fit.c);
    }

    #[test]
    fn class_fit_zero_function() {
        let f = Poly::new(1, vec![]).into_jet_function("zero", vec![(-1.0, 1.0)]);
        let frame = VectorFrame::coordinate(1);
        let seq = RegularSequence::gevrey(2.0, 60).unwrap();
        let fit = class_constant_fit(&f, &frame, &seq, 4, &[vec![0.0]]).unwrap();
        assert_eq!(fit.c, 0.0);
    }

    #[test]
    fn class_fit_runge_stable() {
        let f = corpus::runge();
        let frame = VectorFrame::coordinate(1);
        let seq = RegularSequence::gevrey(2.0, 60).unwrap();
        let grid: Vec<Vec<f64>> = (0..=20).map(|i| vec![-0.5 + 0.05 * i as f64]).collect();
        let fit = class_constant_fit(&f, &frame, &seq, 8, &grid).unwrap();
        assert!(fit.c.is_finite() && fit.c > 0.0);
        assert!(fit.drift(6, 8) < 0.10, "drift {}", fit.drift(6, 8));
    }

    #[test]
    fn fd_jets_match_exact_on_corpus() {
        for f in [corpus::runge(), corpus::gaussian(), corpus::gevrey_bump()] {
            let fd = JetFunction::from_eval_fd(
                format!("{}_fd", f.name),
                1,
                f.domain.clone(),
                Arc::new({
                    let f = f.clone();
                    move |x: &[f64]| f.eval(x)
                }),
                1.0,
            );
            for order in 1..=3usize {
                for &x in &[-0.4, 0.1, 0.55] {
                    let exact = f.jet(&[order], &[x]).unwrap();
                    let approx = fd.jet(&[order], &[x]).unwrap();
                    let scale = exact.norm().max(1.0);
                    assert!(
                        (exact - approx).norm() / scale < 1e-5,
                        "{} order {order} at {x}: {exact} vs {approx}",
                        f.name
                    );
                }
            }
        }
    }

    #[test]
    fn corollary_2_9_ingredient_estimate() {
        // |d^gamma f_alpha| <= C^{|g|+|a|+1} M_{|g|+|a|} / alpha! on the corpus
        let f = corpus::runge();
        let frame = VectorFrame::coordinate(1);
        let seq = RegularSequence::gevrey(2.0, 60).unwrap();
        let grid: Vec<Vec<f64>> = (0..=10).map(|i| vec![-0.5 + 0.1 * i as f64]).collect();
        let fit = class_constant_fit(&f, &frame, &seq, 8, &grid).unwrap();
        let c_ln = fit.c.ln();
        for g in 0..=4usize {
            for a in 0..=4usize {
                if g + a > 8 {
                    continue;
                }
                for x in &grid {
                    let value = f.jet(&[g + a], x).unwrap().norm() * (-ln_factorial(a)).exp();
                    let bound = ((g + a + 1) as f64 * c_ln + seq.ln_big_m(g + a).unwrap()
                        - ln_factorial(a))
                    .exp();
                    assert!(value <= bound * (1.0 + 1e-9), "g={g} a={a}");
                }
            }
        }
    }

    #[test]
    fn mixed_partials_symmetric_2d() {
        let f = corpus::gaussian2();
        let x = [0.3, -0.2];
        let d12 = f.jet(&[1, 1], &x).unwrap();
        let frame = VectorFrame::coordinate(2);
        let a = apply_fields(&frame, &f, &[0, 1], &x).unwrap();
        let b = apply_fields(&frame, &f, &[1, 0], &x).unwrap();
        assert!((a - b).norm() < 1e-12);
        assert!((a - d12).norm() < 1e-12);
    }
}
