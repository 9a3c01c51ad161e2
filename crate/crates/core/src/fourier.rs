//! Fourier matrices of block substitutions and, for binary alphabets,
//! the torus matrices built from overlap polynomials.
//!
//! The Fourier matrix has entries `B[k][j](t) = sum over the digit set
//! T[k][j] of exp(2 pi i <s, t>)`. Since all digits are integral it is
//! 1-periodic in every coordinate of `t`, so it descends to a matrix
//! function `C(z)` on the torus, `z = exp(2 pi i t)` componentwise.
//! Torus points are always passed in additive coordinates `t` in
//! `[0,1)^d`; exponentials are computed on demand.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laurent::{LaurentPolynomial, TAU};
use crate::matrix::ComplexMatrix;
use crate::rng::Rng;
use crate::substitution::BlockSubstitution;

pub fn fourier_matrix(sub: &BlockSubstitution, t: &[f64]) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(sub.alphabet_size());
    fourier_matrix_into(sub, t, &mut out);
    out
}

/// Allocation-light variant for tight cocycle loops.
pub fn fourier_matrix_into(sub: &BlockSubstitution, t: &[f64], out: &mut ComplexMatrix) {
    let d = sub.dim();
    assert_eq!(t.len(), d);
    assert_eq!(out.size(), sub.alphabet_size());
    // per-axis tables exp(2 pi i x t_c) for x = 0..expansion[c]
    let powers: Vec<Vec<Complex64>> = sub
        .expansion()
        .iter()
        .zip(t)
        .map(|(&e, &tc)| {
            (0..e)
                .map(|x| Complex64::from_polar(1.0, TAU * (x as f64) * tc))
                .collect()
        })
        .collect();
    out.fill_zero();
    let n = sub.alphabet_size();
    for j in 0..n {
        let block = sub.block(j as u8 + 1);
        let mut coords = vec![0usize; d];
        for &letter in block {
            let mut phase = Complex64::new(1.0, 0.0);
            for c in 0..d {
                phase *= powers[c][coords[c]];
            }
            out.add_to(letter as usize - 1, j, phase);
            for c in (0..d).rev() {
                coords[c] += 1;
                if coords[c] < sub.expansion()[c] as usize {
                    break;
                }
                coords[c] = 0;
            }
        }
    }
}

/// For binary alphabets: the partition of the digit box by the letter
/// pair `(image of 1, image of 2)` seen at each offset.
#[derive(Debug, Clone)]
pub struct BinaryOverlapSets {
    dim: usize,
    sets: [Vec<Vec<i64>>; 4], // index (k-1)*2 + (l-1)
}

impl BinaryOverlapSets {
    /// Offsets where the image of letter 1 carries `k` and the image of
    /// letter 2 carries `l` (both 1-based).
    pub fn offsets(&self, k: u8, l: u8) -> &[Vec<i64>] {
        &self.sets[(k as usize - 1) * 2 + (l as usize - 1)]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn overlap_sets(sub: &BlockSubstitution) -> Result<BinaryOverlapSets> {
    if sub.alphabet_size() != 2 {
        return Err(Error::NonBinaryAlphabet(sub.alphabet_size()));
    }
    let d = sub.dim();
    let block1 = sub.block(1);
    let block2 = sub.block(2);
    let mut sets: [Vec<Vec<i64>>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut coords = vec![0i64; d];
    for (a, b) in block1.iter().zip(block2) {
        sets[(*a as usize - 1) * 2 + (*b as usize - 1)].push(coords.clone());
        for c in (0..d).rev() {
            coords[c] += 1;
            if coords[c] < sub.expansion()[c] {
                break;
            }
            coords[c] = 0;
        }
    }
    Ok(BinaryOverlapSets { dim: d, sets })
}

/// The four 0/1-coefficient polynomials supported on the overlap sets.
#[derive(Debug, Clone)]
pub struct QPolynomials {
    pub q11: LaurentPolynomial,
    pub q12: LaurentPolynomial,
    pub q21: LaurentPolynomial,
    pub q22: LaurentPolynomial,
}

impl QPolynomials {
    /// `q12 - q21`; its Mahler measure drives the cocycle exponents.
    pub fn difference(&self) -> LaurentPolynomial {
        self.q12.sub(&self.q21)
    }
}

pub fn q_polynomials(sub: &BlockSubstitution) -> Result<QPolynomials> {
    let overlaps = overlap_sets(sub)?;
    let d = overlaps.dim();
    let poly = |k: u8, l: u8| LaurentPolynomial::from_support(d, overlaps.offsets(k, l));
    Ok(QPolynomials {
        q11: poly(1, 1),
        q12: poly(1, 2),
        q21: poly(2, 1),
        q22: poly(2, 2),
    })
}

/// Indicator polynomial of the whole digit box, `sum over F of z^f`.
pub fn block_indicator(sub: &BlockSubstitution) -> LaurentPolynomial {
    let d = sub.dim();
    let mut p = LaurentPolynomial::zero(d);
    let mut coords = vec![0i64; d];
    let volume = sub.block_volume();
    for _ in 0..volume {
        p.add_term(&coords, 1);
        for c in (0..d).rev() {
            coords[c] += 1;
            if coords[c] < sub.expansion()[c] {
                break;
            }
            coords[c] = 0;
        }
    }
    p
}

/// Assembles the torus matrix from the overlap polynomials:
/// rows `(q11+q12, q11+q21; q21+q22, q12+q22)` evaluated at `z = e(t)`.
/// Agrees with [`fourier_matrix`] at `z = exp(2 pi i t)`.
pub fn c_matrix_from_q(q: &QPolynomials, t: &[f64]) -> ComplexMatrix {
    let q11 = q.q11.eval_torus(t);
    let q12 = q.q12.eval_torus(t);
    let q21 = q.q21.eval_torus(t);
    let q22 = q.q22.eval_torus(t);
    ComplexMatrix::from_rows(&[&[q11 + q12, q11 + q21], &[q21 + q22, q12 + q22]])
}

/// Residual of the closed forms `det C = (q12 - q21) * sum_F z^f` and
/// `C (1,-1)^T = (q12 - q21) (1,-1)^T`; zero in exact arithmetic.
pub fn det_identity_residual(sub: &BlockSubstitution, t: &[f64]) -> Result<f64> {
    let q = q_polynomials(sub)?;
    let c = c_matrix_from_q(&q, t);
    let diff = q.difference().eval_torus(t);
    let det_residual = (c.det2() - diff * block_indicator(sub).eval_torus(t)).norm();
    let v = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
    let cv = c.apply(&v);
    let eig_residual = ((cv[0] - diff * v[0]).norm_sqr() + (cv[1] - diff * v[1]).norm_sqr()).sqrt();
    Ok(det_residual.max(eig_residual))
}

/// Probabilistic check that `det B(t)` is not the zero function: a
/// random `t` is drawn and resampled up to 8 times until the
/// determinant clears 1e-8. For binary alphabets the q-difference
/// polynomial decides the question exactly, so that test is consulted
/// first.
pub fn nonsingular_somewhere(sub: &BlockSubstitution, seed: u64) -> bool {
    if sub.alphabet_size() == 2 {
        if let Ok(q) = q_polynomials(sub) {
            if q.difference().is_zero() {
                return false;
            }
        }
    }
    let mut rng = Rng::new(seed);
    for _ in 0..8 {
        let t = rng.unit_vector(sub.dim());
        let b = fourier_matrix(sub, &t);
        let det = if b.size() == 2 {
            b.det2().norm()
        } else {
            det_arbitrary(&b)
        };
        if det > 1e-8 {
            return true;
        }
    }
    false
}

/// |det| by Gaussian elimination with partial pivoting; matrices here
/// are tiny so numerical refinement is not needed.
fn det_arbitrary(m: &ComplexMatrix) -> f64 {
    let n = m.size();
    let mut a: Vec<Complex64> = m.entries().to_vec();
    let mut det: f64 = 1.0;
    for col in 0..n {
        let (pivot, pnorm) = (col..n)
            .map(|r| (r, a[r * n + col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pnorm == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
        }
        let diag = a[col * n + col];
        det *= diag.norm();
        for r in col + 1..n {
            let factor = a[r * n + col] / diag;
            for j in col..n {
                let sub = factor * a[col * n + j];
                a[r * n + j] -= sub;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn tm() -> BlockSubstitution {
        BlockSubstitution::thue_morse()
    }

    fn pd() -> BlockSubstitution {
        BlockSubstitution::period_doubling()
    }

    #[test]
    fn thue_morse_matrix_shape() {
        let t = [0.3217];
        let b = fourier_matrix(&tm(), &t);
        let z = Complex64::from_polar(1.0, TAU * t[0]);
        assert!((b.get(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((b.get(0, 1) - z).norm() < 1e-15);
        assert!((b.get(1, 0) - z).norm() < 1e-15);
        assert!((b.get(1, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn matrix_at_zero_counts_digits() {
        for sub in [tm(), pd(), BlockSubstitution::block_4x3()] {
            let b = fourier_matrix(&sub, &vec![0.0; sub.dim()]);
            let a = sub.substitution_matrix();
            for k in 0..sub.alphabet_size() {
                for j in 0..sub.alphabet_size() {
                    let expected = a.get(k as u8 + 1, j as u8 + 1) as f64;
                    assert!((b.get(k, j) - Complex64::new(expected, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn period_doubling_at_one_half() {
        let b = fourier_matrix(&pd(), &[0.5]);
        let expected = ComplexMatrix::from_rows(&[
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            &[Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)],
        ]);
        assert!(b.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn periodicity_in_each_axis() {
        let sub = BlockSubstitution::block_4x3();
        let mut rng = Rng::new(9);
        for _ in 0..50 {
            let t = rng.unit_vector(2);
            let b = fourier_matrix(&sub, &t);
            for axis in 0..2 {
                let mut shifted = t.clone();
                shifted[axis] += 1.0;
                let b2 = fourier_matrix(&sub, &shifted);
                assert!(b.max_abs_diff(&b2) < 1e-9);
            }
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let mut rng = Rng::new(10);
        for sub in [tm(), pd()] {
            for _ in 0..50 {
                let t = rng.unit_vector(1);
                let neg_t: Vec<f64> = t.iter().map(|x| -x).collect();
                let b = fourier_matrix(&sub, &t);
                let bneg = fourier_matrix(&sub, &neg_t);
                assert!(bneg.max_abs_diff(&b.conjugate()) < 1e-12);
            }
        }
    }

    #[test]
    fn thue_morse_overlaps() {
        let s = overlap_sets(&tm()).unwrap();
        assert!(s.offsets(1, 1).is_empty());
        assert_eq!(s.offsets(1, 2), &[vec![0]]);
        assert_eq!(s.offsets(2, 1), &[vec![1]]);
        assert!(s.offsets(2, 2).is_empty());
    }

    #[test]
    fn period_doubling_overlaps() {
        let s = overlap_sets(&pd()).unwrap();
        assert_eq!(s.offsets(1, 1), &[vec![0]]);
        assert!(s.offsets(1, 2).is_empty());
        assert_eq!(s.offsets(2, 1), &[vec![1]]);
        assert!(s.offsets(2, 2).is_empty());
    }

    #[test]
    fn constant_blocks_put_everything_in_one_overlap() {
        let sub = BlockSubstitution::new(
            "const",
            1,
            vec!["a".into(), "b".into()],
            vec![2],
            vec![vec![1, 1], vec![1, 1]],
        );
        let s = overlap_sets(&sub).unwrap();
        assert_eq!(s.offsets(1, 1).len(), 2);
        assert!(s.offsets(1, 2).is_empty());
        assert!(s.offsets(2, 1).is_empty());
        assert!(s.offsets(2, 2).is_empty());
    }

    #[test]
    fn overlaps_reject_non_binary() {
        let sub = BlockSubstitution::new("mono", 1, vec!["a".into()], vec![2], vec![vec![1, 1]]);
        assert!(matches!(
            overlap_sets(&sub),
            Err(Error::NonBinaryAlphabet(1))
        ));
    }

    #[test]
    fn q_polynomials_of_the_two_doubling_rules() {
        let q = q_polynomials(&tm()).unwrap();
        assert!(q.q11.is_zero());
        assert_eq!(q.q12, LaurentPolynomial::constant(1, 1));
        assert_eq!(q.q21, LaurentPolynomial::monomial(&[1], 1));
        assert!(q.q22.is_zero());
        let mut expected_diff = LaurentPolynomial::constant(1, 1);
        expected_diff.add_term(&[1], -1);
        assert_eq!(q.difference(), expected_diff);

        let q = q_polynomials(&pd()).unwrap();
        assert_eq!(q.q11, LaurentPolynomial::constant(1, 1));
        assert!(q.q12.is_zero());
        assert_eq!(q.q21, LaurentPolynomial::monomial(&[1], 1));
        assert!(q.q22.is_zero());
    }

    #[test]
    fn c_matrix_matches_fourier_matrix() {
        let mut rng = Rng::new(3);
        for sub in [tm(), pd(), BlockSubstitution::block_4x3()] {
            let q = q_polynomials(&sub).unwrap();
            for _ in 0..1000 {
                let t = rng.unit_vector(sub.dim());
                let c = c_matrix_from_q(&q, &t);
                let b = fourier_matrix(&sub, &t);
                assert!(c.max_abs_diff(&b) < 1e-12);
            }
        }
    }

    #[test]
    fn c_matrix_values_at_special_points() {
        let q = q_polynomials(&tm()).unwrap();
        let c = c_matrix_from_q(&q, &[0.0]);
        let ones = ComplexMatrix::from_rows(&[
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        ]);
        assert!(c.max_abs_diff(&ones) < 1e-15);

        let c = c_matrix_from_q(&q, &[0.3]);
        assert!(c.max_abs_diff(&fourier_matrix(&tm(), &[0.3])) < 1e-12);

        let q = q_polynomials(&pd()).unwrap();
        let c = c_matrix_from_q(&q, &[0.5]);
        assert!(c.max_abs_diff(&fourier_matrix(&pd(), &[0.5])) < 1e-12);
    }

    #[test]
    fn determinant_identity_residuals() {
        let mut rng = Rng::new(4);
        for _ in 0..100 {
            let t = rng.unit_vector(1);
            assert!(det_identity_residual(&tm(), &t).unwrap() < 1e-12);
        }
        // det at z = 1 is -1 * 2 = -2, matching the counting matrix
        assert!(det_identity_residual(&pd(), &[0.0]).unwrap() < 1e-12);
        let det = fourier_matrix(&pd(), &[0.0]).det2();
        assert!((det - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_at_zero_counts_overlaps() {
        for sub in [tm(), pd(), BlockSubstitution::block_4x3()] {
            let q = q_polynomials(&sub).unwrap();
            let s12 = q.q12.term_count() as f64;
            let s21 = q.q21.term_count() as f64;
            let volume = sub.block_volume() as f64;
            let det = fourier_matrix(&sub, &vec![0.0; sub.dim()]).det2();
            assert!((det.re - (s12 - s21) * volume).abs() < 1e-9);
            assert!(det.im.abs() < 1e-9);
        }
    }

    #[test]
    fn shipped_rules_are_nonsingular_somewhere() {
        for sub in [tm(), pd(), BlockSubstitution::block_4x3()] {
            assert!(nonsingular_somewhere(&sub, 11));
        }
    }

    #[test]
    fn identical_blocks_are_singular_everywhere() {
        let sub = BlockSubstitution::new(
            "twin",
            1,
            vec!["a".into(), "b".into()],
            vec![2],
            vec![vec![1, 2], vec![1, 2]],
        );
        assert!(q_polynomials(&sub).unwrap().difference().is_zero());
        assert!(!nonsingular_somewhere(&sub, 12));
    }
}
