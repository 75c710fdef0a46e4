//! AR(q) error machinery: the banded whitening matrix A(phi), error
//! simulation, stationarity checking via characteristic-polynomial roots,
//! and the lagged-residual design matrix.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Root-modulus slack when deciding stationarity.
pub const STATIONARITY_TOL: f64 = 1e-8;

/// The phi vector of error-lag coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArCoefficients {
    pub phi: Vec<f64>,
}

impl ArCoefficients {
    pub fn new(phi: Vec<f64>) -> Self {
        Self { phi }
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn is_stationary(&self) -> bool {
        check_stationarity(&self.phi).stationary
    }
}

/// Outcome of the characteristic-root stationarity check.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub stationary: bool,
    /// Moduli of the roots of 1 - phi_1 z - ... - phi_q z^q.
    pub root_moduli: Vec<f64>,
}

/// Unit-lower-triangular banded matrix with -phi_{i-j} on the first q
/// subdiagonals; A(phi) eps = u maps AR errors to white shocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedLowerTriangular {
    pub n: usize,
    /// Subdiagonal values, band[l-1] on subdiagonal l.
    pub band: Vec<f64>,
}

/// Build A(phi) for dimension n.
pub fn build_a_matrix(phi: &ArCoefficients, n: usize) -> BandedLowerTriangular {
    BandedLowerTriangular {
        n,
        band: phi.phi.iter().map(|&p| -p).collect(),
    }
}

impl BandedLowerTriangular {
    /// Dense form; only tests and the shrinkage path need it.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::identity(self.n, self.n);
        for (l, &v) in self.band.iter().enumerate() {
            let lag = l + 1;
            for i in lag..self.n {
                a[(i, i - lag)] = v;
            }
        }
        a
    }

    /// A * v in O(nq).
    pub fn whiten(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut acc = v[i];
            for (l, &b) in self.band.iter().enumerate() {
                if i > l {
                    acc += b * v[i - l - 1];
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Solve A * x = u by forward substitution in O(nq).
    pub fn unwhiten(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        let mut x = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut acc = u[i];
            for (l, &b) in self.band.iter().enumerate() {
                if i > l {
                    acc -= b * x[i - l - 1];
                }
            }
            x.push(acc);
        }
        Ok(x)
    }

    /// Apply A to every column of a matrix.
    pub fn whiten_matrix(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            let col: Vec<f64> = (0..m.nrows()).map(|i| m[(i, j)]).collect();
            let w = self.whiten(&col)?;
            for i in 0..m.nrows() {
                out[(i, j)] = w[i];
            }
        }
        Ok(out)
    }

    /// Apply A' to a vector in O(nq).
    pub fn whiten_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut acc = v[i];
            for (l, &b) in self.band.iter().enumerate() {
                if i + l + 1 < self.n {
                    acc += b * v[i + l + 1];
                }
            }
            out.push(acc);
        }
        Ok(out)
    }
}

// Complex::norm is std-gated in num-complex; the modulus is trivial.
fn complex_abs(z: Complex<f64>) -> f64 {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Roots of a monic polynomial w^d + c[d-1] w^{d-1} + ... + c[0] by
/// Durand-Kerner iteration.
fn monic_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let d = coeffs.len();
    if d == 0 {
        return Vec::new();
    }
    let eval = |z: Complex<f64>| -> Complex<f64> {
        let mut acc = Complex::new(1.0, 0.0);
        for &c in coeffs.iter().rev() {
            acc = acc * z + Complex::new(c, 0.0);
        }
        acc
    };
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..d).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..200 {
        let mut shift = 0.0f64;
        let snapshot = roots.clone();
        for i in 0..d {
            let mut denom = Complex::new(1.0, 0.0);
            for k in 0..d {
                if k != i {
                    denom *= snapshot[i] - snapshot[k];
                }
            }
            let delta = eval(snapshot[i]) / denom;
            roots[i] = snapshot[i] - delta;
            shift = shift.max(complex_abs(delta));
        }
        if shift < 1e-14 {
            break;
        }
    }
    roots
}

/// Check whether all roots of 1 - phi_1 z - ... - phi_q z^q lie outside the
/// unit circle.
pub fn check_stationarity(phi: &[f64]) -> StationarityReport {
    // Trailing zero coefficients lower the effective order.
    let q = phi.iter().rposition(|&v| v != 0.0).map_or(0, |i| i + 1);
    if q == 0 {
        return StationarityReport {
            stationary: true,
            root_moduli: Vec::new(),
        };
    }
    // w = 1/z turns the characteristic polynomial into the monic
    // w^q - phi_1 w^{q-1} - ... - phi_q, whose roots must be inside the
    // unit circle.
    let coeffs: Vec<f64> = (0..q).map(|i| -phi[q - 1 - i] / 1.0).collect();
    let inv_roots = monic_roots(&coeffs);
    let mut root_moduli: Vec<f64> = inv_roots
        .iter()
        .map(|w| {
            let m = complex_abs(*w);
            if m == 0.0 {
                f64::INFINITY
            } else {
                1.0 / m
            }
        })
        .collect();
    root_moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let stationary = root_moduli
        .iter()
        .all(|&m| m > 1.0 + STATIONARITY_TOL);
    StationarityReport {
        stationary,
        root_moduli,
    }
}

/// Simulate AR(q) errors eps_t = sum_l phi_l eps_{t-l} + u_t with
/// u_t ~ N(0, sigma^2), zero pre-sample values, discarding the first
/// `burn_in` draws. Deterministic given the seed.
pub fn simulate_ar_errors(
    phi: &ArCoefficients,
    sigma: f64,
    n: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    simulate_ar_errors_with_rng(phi, sigma, n, burn_in, &mut rng)
}

/// Same as [`simulate_ar_errors`] but drawing shocks from a caller-supplied
/// generator (used for stream-split replicates).
pub fn simulate_ar_errors_with_rng<R: Rng + ?Sized>(
    phi: &ArCoefficients,
    sigma: f64,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let report = check_stationarity(&phi.phi);
    if !report.stationary {
        let modulus = report.root_moduli.first().copied().unwrap_or(0.0);
        return Err(Error::NonStationary { modulus });
    }
    let total = n + burn_in;
    let shocks: Vec<f64> = (0..total)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let eps = ar_recursion(&phi.phi, &shocks);
    Ok(eps[burn_in..].to_vec())
}

/// The zero-initialized AR recursion driven by explicit shocks; equals
/// `unwhiten(build_a_matrix(phi, n), shocks)` exactly.
pub fn ar_recursion(phi: &[f64], shocks: &[f64]) -> Vec<f64> {
    let mut eps = Vec::with_capacity(shocks.len());
    for (t, &u) in shocks.iter().enumerate() {
        let mut acc = u;
        for (l, &p) in phi.iter().enumerate() {
            if t > l {
                acc += p * eps[t - l - 1];
            }
        }
        eps.push(acc);
    }
    eps
}

/// Matrix E whose column l (1-based) is eps shifted down by l with l
/// leading zeros.
pub fn build_residual_lag_matrix(eps: &[f64], q: usize) -> Result<DMatrix<f64>> {
    let n = eps.len();
    if q >= n {
        return Err(Error::LagTooLarge { lag: q, n });
    }
    let mut e = DMatrix::zeros(n, q);
    for l in 1..=q {
        for i in l..n {
            e[(i, l - 1)] = eps[i - l];
        }
    }
    Ok(e)
}

/// E with its all-zero leading row dropped, paired with the aligned
/// response eps_2..eps_n.
pub fn build_residual_lag_regression(eps: &[f64], q: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let e = build_residual_lag_matrix(eps, q)?;
    let n = eps.len();
    let response = DVector::from_iterator(n - 1, eps[1..].iter().copied());
    let design = e.rows(1, n - 1).into_owned();
    Ok((response, design))
}
