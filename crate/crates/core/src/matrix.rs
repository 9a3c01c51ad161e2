//! Dense square complex matrices, sized for alphabets (n is small).
//!
//! The operator norm is the largest singular value. For 2x2 matrices it
//! is computed in closed form from the Gram matrix; larger sizes fall
//! back to power iteration on `M* M`.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        ComplexMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        ComplexMatrix { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.n + col] = v;
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(Complex64::new(0.0, 0.0));
    }

    #[inline]
    pub fn add_to(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.n + col] += v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn mul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect()
    }

    pub fn conjugate(&self) -> ComplexMatrix {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Determinant, 2x2 only.
    pub fn det2(&self) -> Complex64 {
        assert_eq!(self.n, 2, "det2 requires a 2x2 matrix");
        self.data[0] * self.data[3] - self.data[1] * self.data[2]
    }

    /// Inverse of a 2x2 matrix given its (nonzero) determinant.
    pub fn inverse2(&self, det: Complex64) -> ComplexMatrix {
        assert_eq!(self.n, 2);
        let inv = Complex64::new(1.0, 0.0) / det;
        ComplexMatrix {
            n: 2,
            data: vec![
                self.data[3] * inv,
                -self.data[1] * inv,
                -self.data[2] * inv,
                self.data[0] * inv,
            ],
        }
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        match self.n {
            0 => 0.0,
            1 => self.data[0].norm(),
            2 => {
                let (s1, _) = self.singular_values_2x2();
                s1
            }
            _ => self.operator_norm_power(),
        }
    }

    /// (largest, smallest) singular values of a 2x2 matrix, closed form.
    pub fn singular_values_2x2(&self) -> (f64, f64) {
        assert_eq!(self.n, 2);
        let a = self.data[0];
        let b = self.data[1];
        let c = self.data[2];
        let d = self.data[3];
        let g11 = a.norm_sqr() + c.norm_sqr();
        let g22 = b.norm_sqr() + d.norm_sqr();
        let g12 = a.conj() * b + c.conj() * d;
        let half_tr = 0.5 * (g11 + g22);
        let disc = (0.25 * (g11 - g22) * (g11 - g22) + g12.norm_sqr()).sqrt();
        let s1 = (half_tr + disc).max(0.0).sqrt();
        // sigma_min via |det| / sigma_max is better conditioned than the
        // direct eigenvalue difference.
        let det = (a * d - b * c).norm();
        let s2 = if s1 > 0.0 {
            det / s1
        } else {
            0.0
        };
        (s1, s2)
    }

    fn operator_norm_power(&self) -> f64 {
        let n = self.n;
        // Gram matrix G = M* M.
        let mut g = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += self.data[k * n + i].conj() * self.data[k * n + j];
                }
                g[i * n + j] = s;
            }
        }
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + (i as f64) * 0.37, 0.5 - (i as f64) * 0.21))
            .collect();
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = norm(&v);
        for z in &mut v {
            *z /= nv;
        }
        let mut lambda = 0.0_f64;
        for _ in 0..500 {
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    w[i] += g[i * n + j] * v[j];
                }
            }
            let nw = norm(&w);
            if nw == 0.0 {
                return 0.0;
            }
            let next = nw; // Rayleigh quotient for unit v equals |Gv| in the limit
            for z in &mut w {
                *z /= nw;
            }
            v = w;
            if (next - lambda).abs() <= 1e-15 * next.max(1.0) {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda.max(0.0).sqrt()
    }

    /// Rescales to unit operator norm, returning the stripped norm.
    /// `None` when the norm underflows and the rescale would be
    /// meaningless.
    pub fn normalize(&mut self) -> Option<f64> {
        let norm = self.operator_norm();
        if !(norm.is_finite()) || norm < 1e-300 {
            return None;
        }
        self.scale(1.0 / norm);
        Some(norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_of_rank_one_ones_matrix() {
        let m = ComplexMatrix::from_rows(&[&[c(1.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(1.0, 0.0)]]);
        assert!((m.operator_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = ComplexMatrix::from_rows(&[&[c(3.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(0.5, 0.0)]]);
        let (s1, s2) = m.singular_values_2x2();
        assert!((s1 - 3.0).abs() < 1e-14);
        assert!((s2 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn power_iteration_matches_closed_form() {
        // Embed a 2x2 in a 3x3 with a zero row/col and compare norms.
        let a = ComplexMatrix::from_rows(&[&[c(1.0, 0.5), c(-0.3, 0.2)], &[c(0.0, -1.1), c(0.7, 0.0)]]);
        let mut b = ComplexMatrix::zeros(3);
        for i in 0..2 {
            for j in 0..2 {
                b.set(i, j, a.get(i, j));
            }
        }
        assert!((a.operator_norm() - b.operator_norm()).abs() < 1e-10);
    }

    #[test]
    fn inverse2_roundtrip() {
        let m = ComplexMatrix::from_rows(&[&[c(1.0, 2.0), c(0.5, 0.0)], &[c(-1.0, 0.0), c(0.0, 1.0)]]);
        let det = m.det2();
        let inv = m.inverse2(det);
        let id = m.mul(&inv);
        assert!(id.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn normalize_strips_norm() {
        let mut m =
            ComplexMatrix::from_rows(&[&[c(4.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0)]]);
        let stripped = m.normalize().unwrap();
        assert!((stripped - 4.0).abs() < 1e-14);
        assert!((m.operator_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_refuses_underflow() {
        let mut zero = ComplexMatrix::zeros(2);
        assert!(zero.normalize().is_none());
        let mut tiny = ComplexMatrix::from_rows(&[
            &[c(1e-308, 0.0), c(0.0, 0.0)],
            &[c(0.0, 0.0), c(0.0, 0.0)],
        ]);
        assert!(tiny.normalize().is_none());
    }
}
