//! The shipped function corpus: closed-form functions with exact jets to the
//! orders the extension and FBI machinery ask for.

use crate::jets::{JetFunction, JetKind, Poly};
use crate::numeric::ln_factorial;
use num_complex::Complex64;
use std::sync::{Arc, OnceLock};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Real polynomial in one variable, used by the bump derivative recurrences.
#[derive(Debug, Clone)]
struct RePoly(Vec<f64>);

impl RePoly {
    fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &a| acc * t + a)
    }
    fn derivative(&self) -> RePoly {
        if self.0.len() <= 1 {
            return RePoly(vec![0.0]);
        }
        RePoly(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(i, &a)| (i + 1) as f64 * a)
                .collect(),
        )
    }
    fn mul(&self, other: &RePoly) -> RePoly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RePoly(out)
    }
    fn add_scaled(&self, other: &RePoly, k: f64) -> RePoly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![0.0; n];
        for (i, &a) in self.0.iter().enumerate() {
            out[i] += a;
        }
        for (i, &b) in other.0.iter().enumerate() {
            out[i] += k * b;
        }
        RePoly(out)
    }
}

pub const BUMP_MAX_ORDER: usize = 48;

/// Numerator polynomials of b^(n)(t) = P_n(t) / (1 - t^2)^{2n} * b(t) for the
/// standard bump b(t) = exp(-1/(1-t^2)).
fn bump_polys() -> &'static Vec<RePoly> {
    static POLYS: OnceLock<Vec<RePoly>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys = Vec::with_capacity(BUMP_MAX_ORDER + 1);
        polys.push(RePoly(vec![1.0]));
        let one_minus_t2 = RePoly(vec![1.0, 0.0, -1.0]);
        let sq = one_minus_t2.mul(&one_minus_t2);
        for n in 0..BUMP_MAX_ORDER {
            let p: &RePoly = &polys[n];
            // P_{n+1} = P' (1-t^2)^2 + 4n t (1-t^2) P - 2t P
            let term1 = p.derivative().mul(&sq);
            let term2 = RePoly(vec![0.0, 4.0 * n as f64]).mul(&one_minus_t2).mul(p);
            let term3 = RePoly(vec![0.0, -2.0]).mul(p);
            polys.push(term1.add_scaled(&term2, 1.0).add_scaled(&term3, 1.0));
        }
        polys
    })
}

/// b(t) = exp(-1/(1-t^2)) extended by 0.
pub fn bump_value(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// n-th derivative of the bump, by the closed-form recurrence.
pub fn bump_derivative(n: usize, t: f64) -> f64 {
    assert!(n <= BUMP_MAX_ORDER, "bump jets tabulated to order {BUMP_MAX_ORDER}");
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let b = bump_value(t);
    if b == 0.0 {
        return 0.0; // underflow deep in the flat tails
    }
    let denom = (1.0 - t * t).powi(2 * n as i32);
    bump_polys()[n].eval(t) / denom * b
}

/// Numerator polynomials of G^(n)(u) = Q_n(u)/(1-u)^{2n} G(u) for the
/// squared-radius bump G(u) = exp(-1/(1-u)).
fn sq_bump_polys() -> &'static Vec<RePoly> {
    static POLYS: OnceLock<Vec<RePoly>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys: Vec<RePoly> = Vec::with_capacity(9);
        polys.push(RePoly(vec![1.0]));
        let one_minus_u = RePoly(vec![1.0, -1.0]);
        let sq = one_minus_u.mul(&one_minus_u);
        for n in 0..8 {
            let q: &RePoly = &polys[n];
            // Q_{n+1} = Q'(1-u)^2 + 2n(1-u)Q - Q
            let t1 = q.derivative().mul(&sq);
            let t2 = one_minus_u.mul(q);
            polys.push(t1.add_scaled(&t2, 2.0 * n as f64).add_scaled(q, -1.0));
        }
        polys
    })
}

/// G(u) = exp(-1/(1-u)) for u < 1, else 0 (bump as a function of |t|^2).
pub fn sq_bump_value(u: f64) -> f64 {
    if u < 1.0 {
        (-1.0 / (1.0 - u)).exp()
    } else {
        0.0
    }
}

/// n-th derivative of G in u, n <= 8.
pub fn sq_bump_derivative(n: usize, u: f64) -> f64 {
    assert!(n <= 8);
    if u >= 1.0 {
        return 0.0;
    }
    let g = sq_bump_value(u);
    if g == 0.0 {
        return 0.0;
    }
    sq_bump_polys()[n].eval(u) / (1.0 - u).powi(2 * n as i32) * g
}

/// f(x) = x^2 on [-1, 1].
pub fn square() -> JetFunction {
    Poly::monomial(1, vec![2], c(1.0)).into_jet_function("square", vec![(-1.0, 1.0)])
}

/// f(x) = 1/(1+x^2) on [-1, 1], jets to high order by partial fractions:
/// f^(k)(x) = (-1)^k k! sin((k+1) arg(x+i)) / |x+i|^{k+1}.
pub fn runge() -> JetFunction {
    let jet = Arc::new(|alpha: &[usize], x: &[f64]| {
        let k = alpha[0];
        let w = Complex64::new(x[0], 1.0);
        let (r, theta) = (w.norm(), w.arg());
        let magnitude = (ln_factorial(k) - (k as f64 + 1.0) * r.ln()).exp();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c(sign * magnitude * ((k as f64 + 1.0) * theta).sin())
    });
    JetFunction::new(
        "runge",
        1,
        vec![(-1.0, 1.0)],
        160,
        JetKind::ExactClosedForm,
        Arc::new(|x: &[f64]| c(1.0 / (1.0 + x[0] * x[0]))),
        jet,
    )
}

/// f(x) = exp(x) on [-1, 1].
pub fn exp_fn() -> JetFunction {
    JetFunction::new(
        "exp",
        1,
        vec![(-1.0, 1.0)],
        usize::MAX / 2,
        JetKind::ExactClosedForm,
        Arc::new(|x: &[f64]| c(x[0].exp())),
        Arc::new(|_alpha: &[usize], x: &[f64]| c(x[0].exp())),
    )
}

fn hermite_gaussian_derivative(n: usize, x: f64) -> f64 {
    // d^n/dx^n e^{-x^2} = (-1)^n H_n(x) e^{-x^2}
    let mut h0 = 1.0_f64;
    let mut h1 = 2.0 * x;
    let h = match n {
        0 => 1.0,
        1 => h1,
        _ => {
            for k in 1..n {
                let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    };
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * h * (-x * x).exp()
}

/// f(x) = exp(-x^2) on [-2, 2].
pub fn gaussian() -> JetFunction {
    JetFunction::new(
        "gaussian",
        1,
        vec![(-2.0, 2.0)],
        60,
        JetKind::ExactClosedForm,
        Arc::new(|x: &[f64]| c((-x[0] * x[0]).exp())),
        Arc::new(|alpha: &[usize], x: &[f64]| c(hermite_gaussian_derivative(alpha[0], x[0]))),
    )
}

/// f(x) = exp(-|x|^2) on [-2, 2]^2.
pub fn gaussian2() -> JetFunction {
    JetFunction::new(
        "gaussian2",
        2,
        vec![(-2.0, 2.0), (-2.0, 2.0)],
        60,
        JetKind::ExactClosedForm,
        Arc::new(|x: &[f64]| c((-x[0] * x[0] - x[1] * x[1]).exp())),
        Arc::new(|alpha: &[usize], x: &[f64]| {
            c(hermite_gaussian_derivative(alpha[0], x[0])
                * hermite_gaussian_derivative(alpha[1], x[1]))
        }),
    )
}

/// The standard Gevrey bump exp(-1/(1-x^2)) extended by 0, on [-1.5, 1.5].
pub fn gevrey_bump() -> JetFunction {
    JetFunction::new(
        "gevrey_bump",
        1,
        vec![(-1.5, 1.5)],
        BUMP_MAX_ORDER,
        JetKind::ExactClosedForm,
        Arc::new(|x: &[f64]| c(bump_value(x[0]))),
        Arc::new(|alpha: &[usize], x: &[f64]| c(bump_derivative(alpha[0], x[0]))),
    )
}

/// f(x) = x^2 exp(-1/(1-x^2)), jets by Leibniz from the bump recurrence.
pub fn bump_times_square() -> JetFunction {
    let jet = Arc::new(|alpha: &[usize], x: &[f64]| {
        let n = alpha[0];
        let t = x[0];
        let mut v = t * t * bump_derivative(n, t);
        if n >= 1 {
            v += 2.0 * n as f64 * t * bump_derivative(n - 1, t);
        }
        if n >= 2 {
            v += (n * (n - 1)) as f64 * bump_derivative(n - 2, t);
        }
        c(v)
    });
    JetFunction::new(
        "bump_times_square",
        1,
        vec![(-1.5, 1.5)],
        BUMP_MAX_ORDER - 2,
        JetKind::ExactClosedForm,
        Arc::new(|x: &[f64]| c(x[0] * x[0] * bump_value(x[0]))),
        jet,
    )
}

/// f(x) = |x|^3, a C^2 function with piecewise-exact jets to order 3.
pub fn abs_cubed() -> JetFunction {
    let jet = Arc::new(|alpha: &[usize], x: &[f64]| {
        let t = x[0];
        match alpha[0] {
            0 => c(t.abs().powi(3)),
            1 => c(3.0 * t * t.abs()),
            2 => c(6.0 * t.abs()),
            _ => c(6.0 * t.signum() * if t == 0.0 { 0.0 } else { 1.0 }),
        }
    });
    JetFunction::new(
        "abs_cubed",
        1,
        vec![(-2.0, 2.0)],
        3,
        JetKind::ExactClosedForm,
        Arc::new(|x: &[f64]| c(x[0].abs().powi(3))),
        jet,
    )
}

/// Look up a smooth corpus member by name.
pub fn by_name(name: &str) -> Option<JetFunction> {
    match name {
        "square" => Some(square()),
        "runge" => Some(runge()),
        "exp" => Some(exp_fn()),
        "gaussian" => Some(gaussian()),
        "gaussian2" => Some(gaussian2()),
        "gevrey_bump" => Some(gevrey_bump()),
        "bump_times_square" => Some(bump_times_square()),
        "abs_cubed" => Some(abs_cubed()),
        _ => None,
    }
}

/// Stable listing of smooth corpus members: (name, dim, max exact-jet order).
pub fn function_catalog() -> Vec<(&'static str, usize, usize)> {
    vec![
        ("abs_cubed", 1, 3),
        ("bump_times_square", 1, BUMP_MAX_ORDER - 2),
        ("exp", 1, usize::MAX / 2),
        ("gaussian", 1, 60),
        ("gaussian2", 2, 60),
        ("gevrey_bump", 1, BUMP_MAX_ORDER),
        ("runge", 1, 160),
        ("square", 1, usize::MAX / 2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_low_order_values() {
        // b(0) = e^{-1}, b'(0) = 0, b''(0) = -2 e^{-1}
        assert!((bump_value(0.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(bump_derivative(1, 0.0).abs() < 1e-15);
        assert!((bump_derivative(2, 0.0) + 2.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(bump_derivative(5, 1.01), 0.0);
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        for &t in &[-0.6, 0.0, 0.3, 0.8] {
            for n in 1..=4usize {
                // wider steps for the higher stencils: the 4th difference
                // amplifies roundoff by h^-4
                let h = match n {
                    1 | 2 => 1e-4,
                    3 => 5e-4,
                    _ => 1e-3,
                };
                let fd = {
                    // 5-point central stencils per order
                    match n {
                        1 => (bump_value(t + h) - bump_value(t - h)) / (2.0 * h),
                        2 => (bump_value(t + h) - 2.0 * bump_value(t) + bump_value(t - h)) / (h * h),
                        3 => (bump_value(t + 2.0 * h) - 2.0 * bump_value(t + h)
                            + 2.0 * bump_value(t - h)
                            - bump_value(t - 2.0 * h))
                            / (2.0 * h * h * h),
                        _ => (bump_value(t + 2.0 * h) - 4.0 * bump_value(t + h)
                            + 6.0 * bump_value(t)
                            - 4.0 * bump_value(t - h)
                            + bump_value(t - 2.0 * h))
                            / (h * h * h * h),
                    }
                };
                let exact = bump_derivative(n, t);
                let scale = exact.abs().max(1.0);
                assert!(
                    (fd - exact).abs() / scale < 1e-4,
                    "order {n} at {t}: fd {fd} vs exact {exact}"
                );
            }
        }
    }

    #[test]
    fn sq_bump_derivative_matches_fd() {
        let h = 1e-5;
        for &u in &[0.0, 0.3, 0.7] {
            let fd = (sq_bump_value(u + h) - sq_bump_value(u - h)) / (2.0 * h);
            let exact = sq_bump_derivative(1, u);
            assert!((fd - exact).abs() / exact.abs().max(1e-10) < 1e-6);
            let fd2 = (sq_bump_value(u + h) - 2.0 * sq_bump_value(u) + sq_bump_value(u - h)) / (h * h);
            let exact2 = sq_bump_derivative(2, u);
            assert!((fd2 - exact2).abs() / exact2.abs().max(1e-6) < 1e-4);
        }
    }

    #[test]
    fn runge_jet_high_order_finite() {
        let f = runge();
        let v = f.jet(&[41], &[0.2]).unwrap();
        assert!(v.norm().is_finite());
        // order-1 spot check: f'(x) = -2x/(1+x^2)^2
        let d = f.jet(&[1], &[0.3]).unwrap();
        let expect = -2.0 * 0.3 / (1.09_f64 * 1.09);
        assert!((d.re - expect).abs() < 1e-12);
    }

    #[test]
    fn gaussian_third_derivative() {
        // d^3/dx^3 e^{-x^2} = (12x - 8x^3) e^{-x^2}
        let f = gaussian();
        let x = 0.7_f64;
        let expect = (12.0 * x - 8.0 * x * x * x) * (-x * x).exp();
        let got = f.jet(&[3], &[x]).unwrap().re;
        assert!((got - expect).abs() < 1e-12);
    }
}
