//! Dense truncated Taylor series in one or two variables.
//!
//! Chart frames iterate X_k = sum_l a_kl(x) d/dx_l to high order; doing that
//! through truncated series keeps every step exact polynomial arithmetic, so
//! the only error in an iterated frame derivative is f64 roundoff.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct TruncatedSeries {
    pub dim: usize,
    /// Valid truncation order; coefficients of total degree > order are absent.
    pub order: usize,
    /// dim = 1: c[k].  dim = 2: triangular layout, degree d block at d(d+1)/2,
    /// entry (i, j) with i + j = d stored at block + j.
    c: Vec<Complex64>,
}

fn tri_len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

fn tri_idx(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

impl TruncatedSeries {
    pub fn zero(dim: usize, order: usize) -> Self {
        assert!(dim == 1 || dim == 2);
        let len = if dim == 1 { order + 1 } else { tri_len(order) };
        Self {
            dim,
            order,
            c: vec![Complex64::ZERO; len],
        }
    }

    pub fn constant(dim: usize, order: usize, value: Complex64) -> Self {
        let mut s = Self::zero(dim, order);
        s.c[0] = value;
        s
    }

    /// The coordinate x_axis as a series (constant term 0).
    pub fn coordinate(dim: usize, order: usize, axis: usize) -> Self {
        let mut s = Self::zero(dim, order);
        if order >= 1 {
            match (dim, axis) {
                (1, 0) => s.c[1] = Complex64::ONE,
                (2, 0) => s.c[tri_idx(1, 0)] = Complex64::ONE,
                (2, 1) => s.c[tri_idx(0, 1)] = Complex64::ONE,
                _ => panic!("axis {axis} out of range for dim {dim}"),
            }
        }
        s
    }

    pub fn from_coeffs_1d(coeffs: Vec<Complex64>) -> Self {
        Self {
            dim: 1,
            order: coeffs.len() - 1,
            c: coeffs,
        }
    }

    pub fn get(&self, alpha: &[usize]) -> Complex64 {
        match self.dim {
            1 => {
                if alpha[0] <= self.order {
                    self.c[alpha[0]]
                } else {
                    Complex64::ZERO
                }
            }
            _ => {
                if alpha[0] + alpha[1] <= self.order {
                    self.c[tri_idx(alpha[0], alpha[1])]
                } else {
                    Complex64::ZERO
                }
            }
        }
    }

    pub fn set(&mut self, alpha: &[usize], v: Complex64) {
        match self.dim {
            1 => self.c[alpha[0]] = v,
            _ => self.c[tri_idx(alpha[0], alpha[1])] = v,
        }
    }

    pub fn constant_term(&self) -> Complex64 {
        self.c[0]
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        let mut out = Self::zero(self.dim, order);
        match self.dim {
            1 => out.c.copy_from_slice(&self.c[..=order]),
            _ => {
                let n = tri_len(order);
                out.c.copy_from_slice(&self.c[..n]);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        let ot = other.truncate(order);
        for (a, b) in out.c.iter_mut().zip(&ot.c) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.c.iter_mut() {
            *a *= k;
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let a = self.truncate(order);
        let b = other.truncate(order);
        let mut out = Self::zero(self.dim, order);
        match self.dim {
            1 => {
                for i in 0..=order {
                    if a.c[i] == Complex64::ZERO {
                        continue;
                    }
                    for j in 0..=order - i {
                        out.c[i + j] += a.c[i] * b.c[j];
                    }
                }
            }
            _ => {
                for da in 0..=order {
                    for ia in 0..=da {
                        let va = a.c[tri_idx(da - ia, ia)];
                        if va == Complex64::ZERO {
                            continue;
                        }
                        for db in 0..=order - da {
                            for ib in 0..=db {
                                let vb = b.c[tri_idx(db - ib, ib)];
                                if vb == Complex64::ZERO {
                                    continue;
                                }
                                out.c[tri_idx(da - ia + db - ib, ia + ib)] += va * vb;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// d/dx_axis; the result is valid to order - 1.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 series");
        let order = self.order - 1;
        let mut out = Self::zero(self.dim, order);
        match self.dim {
            1 => {
                for k in 1..=self.order {
                    out.c[k - 1] = self.c[k] * k as f64;
                }
            }
            _ => {
                for d in 0..=self.order {
                    for j in 0..=d {
                        let i = d - j;
                        let v = self.c[tri_idx(i, j)];
                        if v == Complex64::ZERO {
                            continue;
                        }
                        match axis {
                            0 if i >= 1 => {
                                out.c[tri_idx(i - 1, j)] += v * i as f64;
                            }
                            1 if j >= 1 => {
                                out.c[tri_idx(i, j - 1)] += v * j as f64;
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        out
    }

    /// Multiplicative inverse by Newton iteration; requires a nonzero constant term.
    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        assert!(a0.norm() > 0.0, "series with zero constant term");
        let mut b = Self::constant(self.dim, self.order, a0.finv());
        // Newton doubles the number of correct orders each round.
        let rounds = (usize::BITS - self.order.leading_zeros()) as usize + 1;
        for _ in 0..rounds {
            // b <- b (2 - a b)
            let ab = self.mul(&b);
            let mut two_minus = ab.scale(-Complex64::ONE);
            two_minus.c[0] += 2.0;
            b = b.mul(&two_minus);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn mul_1d() {
        // (1 + x)^2 = 1 + 2x + x^2
        let s = TruncatedSeries::from_coeffs_1d(vec![c(1.0), c(1.0), c(0.0), c(0.0)]);
        let p = s.mul(&s);
        assert_eq!(p.get(&[0]), c(1.0));
        assert_eq!(p.get(&[1]), c(2.0));
        assert_eq!(p.get(&[2]), c(1.0));
    }

    #[test]
    fn recip_1d_geometric() {
        // 1/(1 - x) = 1 + x + x^2 + ...
        let s = TruncatedSeries::from_coeffs_1d(vec![c(1.0), c(-1.0), c(0.0), c(0.0), c(0.0)]);
        let r = s.recip();
        for k in 0..=4 {
            assert!((r.get(&[k]) - c(1.0)).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn derivative_2d() {
        // f = x^2 y: df/dx = 2xy, df/dy = x^2
        let mut f = TruncatedSeries::zero(2, 4);
        f.set(&[2, 1], c(1.0));
        let fx = f.derivative(0);
        assert_eq!(fx.get(&[1, 1]), c(2.0));
        let fy = f.derivative(1);
        assert_eq!(fy.get(&[2, 0]), c(1.0));
    }

    #[test]
    fn recip_2d() {
        // 1/(1 + x + y) coefficients: (-1)^d multinomials
        let mut s = TruncatedSeries::zero(2, 6);
        s.set(&[0, 0], c(1.0));
        s.set(&[1, 0], c(1.0));
        s.set(&[0, 1], c(1.0));
        let r = s.recip();
        let prod = s.mul(&r);
        assert!((prod.get(&[0, 0]) - c(1.0)).norm() < 1e-12);
        for d in 1..=6 {
            for j in 0..=d {
                assert!(prod.get(&[d - j, j]).norm() < 1e-10, "degree ({},{})", d - j, j);
            }
        }
    }
}
