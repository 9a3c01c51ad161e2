//! Logarithmic Mahler measures of integer Laurent polynomials.
//!
//! In one variable the measure is evaluated exactly through the root
//! factorization: `m(p) = log|lead| + sum over roots of log max(1,|r|)`,
//! with roots taken from the balanced companion matrix. Monomial factors
//! contribute nothing. In several variables the torus integral of
//! `log|p|` is averaged over a jittered uniform grid; the integrand has
//! integrable log singularities, so cells landing too close to the zero
//! set are re-jittered a few times and then excluded (and counted).
//!
//! All values are in nats.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laurent::LaurentPolynomial;
use crate::rng::{derive_seed, Rng};
use crate::substitution::BlockSubstitution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MahlerMethod {
    JensenRoots,
    TensorQuadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize)]
pub struct MahlerEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub method: MahlerMethod,
    pub samples: usize,
    pub excluded_cells: usize,
}

/// Roots with modulus within this band of 1 are snapped onto the unit
/// circle; cyclotomic factors are everywhere in this problem domain and
/// would otherwise leave 1e-12 sized residue.
const UNIT_CIRCLE_SNAP: f64 = 1e-10;

/// Evaluations smaller than this are treated as on the zero set.
const SINGULAR_EPS: f64 = 1e-13;

/// Exact (up to root finding) one-variable Mahler measure.
pub fn mahler_jensen_1d(p: &LaurentPolynomial) -> Result<MahlerEstimate> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let (_, coeffs) = p.univariate_coefficients()?;
    let degree = coeffs.len() - 1;
    let lead = *coeffs.last().unwrap() as f64;
    let mut value = lead.abs().ln();
    if degree > 0 {
        for root in companion_roots(&coeffs) {
            let modulus = root.norm();
            if (modulus - 1.0).abs() < UNIT_CIRCLE_SNAP {
                continue;
            }
            if modulus > 1.0 {
                value += modulus.ln();
            }
        }
    }
    Ok(MahlerEstimate {
        value,
        standard_error: 0.0,
        method: MahlerMethod::JensenRoots,
        samples: degree,
        excluded_cells: 0,
    })
}

/// Complex roots of `sum coeffs[k] z^k` (constant and leading
/// coefficients nonzero) via the balanced companion matrix.
fn companion_roots(coeffs: &[i64]) -> Vec<num_complex::Complex64> {
    let m = coeffs.len() - 1;
    let lead = *coeffs.last().unwrap() as f64;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        a[(i, i - 1)] = 1.0;
    }
    for i in 0..m {
        a[(i, m - 1)] = -(coeffs[i] as f64) / lead;
    }
    balance_in_place(&mut a);
    a.complex_eigenvalues()
        .iter()
        .map(|z| num_complex::Complex64::new(z.re, z.im))
        .collect()
}

/// Parlett-Reinsch balancing: diagonal similarity scaling by powers of
/// two until row and column norms agree. Eigenvalues are unchanged.
fn balance_in_place(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / radix;
                let mut f = 1.0;
                let s = c + r;
                let mut c_scaled = c;
                while c_scaled < g {
                    f *= radix;
                    c_scaled *= sqrdx;
                }
                g = r * radix;
                while c_scaled > g {
                    f /= radix;
                    c_scaled /= sqrdx;
                }
                if (c_scaled + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

/// Averages `log|p|` over a jittered uniform grid with `grid_per_axis`
/// cells per axis. The jitter of each cell depends only on the cell
/// index and `jitter_seed`, so results are independent of evaluation
/// order. More than 1% excluded cells is reported as an error.
pub fn mahler_quadrature(
    p: &LaurentPolynomial,
    grid_per_axis: usize,
    jitter_seed: u64,
) -> Result<MahlerEstimate> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if grid_per_axis < 16 {
        return Err(Error::BadParameter(format!(
            "grid_per_axis must be at least 16, got {grid_per_axis}"
        )));
    }
    let d = p.dim();
    let total = grid_per_axis.pow(d as u32);
    let h = 1.0 / grid_per_axis as f64;

    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut included = 0usize;
    let mut excluded = 0usize;

    let mut coords = vec![0usize; d];
    let mut t = vec![0.0f64; d];
    for cell in 0..total {
        let mut rng = Rng::new(derive_seed(jitter_seed, cell as u64));
        let mut accepted = None;
        for _attempt in 0..=8 {
            for c in 0..d {
                t[c] = (coords[c] as f64 + rng.next_f64()) * h;
            }
            let v = p.eval_torus(&t).norm();
            if v >= SINGULAR_EPS {
                accepted = Some(v.ln());
                break;
            }
        }
        match accepted {
            Some(x) => {
                included += 1;
                let delta = x - mean;
                mean += delta / included as f64;
                m2 += delta * (x - mean);
            }
            None => excluded += 1,
        }
        for c in (0..d).rev() {
            coords[c] += 1;
            if coords[c] < grid_per_axis {
                break;
            }
            coords[c] = 0;
        }
    }

    if excluded * 100 > total {
        return Err(Error::SingularSetTooDense { excluded, total });
    }
    let standard_error = if included > 1 {
        (m2 / (included as f64 - 1.0) / included as f64).sqrt()
    } else {
        0.0
    };
    Ok(MahlerEstimate {
        value: mean,
        standard_error,
        method: MahlerMethod::TensorQuadrature,
        samples: included,
        excluded_cells: excluded,
    })
}

/// Plain uniform sampling; mostly useful as a cross-check on the
/// stratified grid.
pub fn mahler_monte_carlo(
    p: &LaurentPolynomial,
    samples: usize,
    seed: u64,
) -> Result<MahlerEstimate> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if samples == 0 {
        return Err(Error::BadParameter("samples must be positive".into()));
    }
    let d = p.dim();
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut included = 0usize;
    let mut excluded = 0usize;
    for k in 0..samples {
        let mut rng = Rng::new(derive_seed(seed, k as u64));
        let mut accepted = None;
        for _ in 0..=8 {
            let t = rng.unit_vector(d);
            let v = p.eval_torus(&t).norm();
            if v >= SINGULAR_EPS {
                accepted = Some(v.ln());
                break;
            }
        }
        match accepted {
            Some(x) => {
                included += 1;
                let delta = x - mean;
                mean += delta / included as f64;
                m2 += delta * (x - mean);
            }
            None => excluded += 1,
        }
    }
    if excluded * 100 > samples {
        return Err(Error::SingularSetTooDense {
            excluded,
            total: samples,
        });
    }
    let standard_error = if included > 1 {
        (m2 / (included as f64 - 1.0) / included as f64).sqrt()
    } else {
        0.0
    };
    Ok(MahlerEstimate {
        value: mean,
        standard_error,
        method: MahlerMethod::MonteCarlo,
        samples: included,
        excluded_cells: excluded,
    })
}

/// Grid used when a multivariate measure is needed internally.
const INTERNAL_GRID: usize = 256;
const INTERNAL_SEED: u64 = 0x5AD1C;

/// Best available estimate: exact in one variable, quadrature otherwise.
pub fn mahler_best(p: &LaurentPolynomial) -> Result<MahlerEstimate> {
    if p.dim() == 1 {
        mahler_jensen_1d(p)
    } else {
        mahler_quadrature(p, INTERNAL_GRID, INTERNAL_SEED)
    }
}

/// The gap `log sqrt(det expansion) - m(q12 - q21)`, strictly positive
/// for every valid binary block substitution with distinct letter
/// images.
pub fn mahler_bound_margin(sub: &BlockSubstitution) -> Result<f64> {
    let q = crate::fourier::q_polynomials(sub)?;
    let diff = q.difference();
    if diff.is_zero() {
        return Err(Error::SingularFourierFamily);
    }
    let est = mahler_best(&diff)?;
    Ok(0.5 * sub.det_expansion().ln() - est.value)
}
