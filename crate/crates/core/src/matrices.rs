//! Transfer matrices of one subdivision step and the algebraic identities
//! they satisfy.
//!
//! With proportions `xi`, the edge vector (one coordinate at a time) maps as
//! `x' = H x`, where `H[j][j] = 1 - xi_j` and `H[j][j+1] = xi_{j+1}`
//! cyclically. On the sum-zero hyperplane the last coordinate is implied by
//! the others, which gives the `(d-1) x (d-1)` matrix `T`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    H,
    T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub kind: MatrixKind,
    pub entries: DMatrix<f64>,
}

impl TransferMatrix {
    /// Determinant by partial-pivot LU.
    pub fn det_lu(&self) -> f64 {
        self.entries.clone().lu().determinant()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn to_csv(&self) -> String {
        matrix_to_csv(&self.entries)
    }
}

fn check_xi(xi: &[f64]) -> Result<()> {
    if xi.len() < 3 {
        return Err(Error::Dimension(format!("need d >= 3 proportions, got {}", xi.len())));
    }
    if let Some(bad) = xi.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::Domain(format!("proportion {bad} outside (0,1)")));
    }
    Ok(())
}

pub fn build_h(xi: &[f64]) -> Result<TransferMatrix> {
    check_xi(xi)?;
    let d = xi.len();
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        m[(j, j)] = 1.0 - xi[j];
        m[(j, (j + 1) % d)] = xi[(j + 1) % d];
    }
    Ok(TransferMatrix {
        kind: MatrixKind::H,
        entries: m,
    })
}

pub fn build_t(xi: &[f64]) -> Result<TransferMatrix> {
    check_xi(xi)?;
    Ok(TransferMatrix {
        kind: MatrixKind::T,
        entries: t_entries(xi),
    })
}

fn t_entries(xi: &[f64]) -> DMatrix<f64> {
    let d = xi.len();
    let n = d - 1;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n - 1 {
        m[(j, j)] = 1.0 - xi[j];
        m[(j, j + 1)] = xi[j + 1];
    }
    for k in 0..n - 1 {
        m[(n - 1, k)] = -xi[d - 1];
    }
    m[(n - 1, n - 1)] = 1.0 - xi[d - 2] - xi[d - 1];
    m
}

/// `prod(1 - xi_i) - (-1)^d prod(xi_i)`.
pub fn det_t_closed_form(xi: &[f64]) -> f64 {
    let tails: f64 = xi.iter().map(|v| 1.0 - v).product();
    let heads: f64 = xi.iter().product();
    if xi.len().is_multiple_of(2) {
        tails - heads
    } else {
        tails + heads
    }
}

/// `x <- H x` without forming `H`.
#[inline]
pub fn apply_h(xi: &[f64], x: &mut [f64]) {
    let d = xi.len();
    let first = x[0];
    for j in 0..d - 1 {
        x[j] = (1.0 - xi[j]) * x[j] + xi[j + 1] * x[j + 1];
    }
    x[d - 1] = (1.0 - xi[d - 1]) * x[d - 1] + xi[0] * first;
}

/// `x <- T x` for `x` of length `d - 1`, without forming `T`.
#[inline]
pub fn apply_t(xi: &[f64], x: &mut [f64]) {
    let n = x.len();
    let d = xi.len();
    debug_assert_eq!(n + 1, d);
    let implied = -x.iter().sum::<f64>();
    for j in 0..n - 1 {
        x[j] = (1.0 - xi[j]) * x[j] + xi[j + 1] * x[j + 1];
    }
    x[n - 1] = (1.0 - xi[n - 1]) * x[n - 1] + xi[d - 1] * implied;
}

/// `A B^{-1}` by solving `B^T X^T = A^T`.
fn right_divide(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let xt = b
        .transpose()
        .lu()
        .solve(&a.transpose())
        .ok_or_else(|| Error::Degenerate("singular factor in matrix product".into()))?;
    Ok(xt.transpose())
}

/// `P Q^{-1} R S^{-1}` for the four patterned factors.
fn four_factor(p: &[f64], q: &[f64], r: &[f64], s: &[f64], normalize: bool) -> Result<DMatrix<f64>> {
    let f = |xi: &[f64]| -> Result<DMatrix<f64>> {
        let m = build_t(xi)?.entries;
        if normalize {
            let det = det_t_closed_form(xi);
            if det <= 0.0 {
                return Err(Error::Degenerate(format!("cannot normalize factor with det {det}")));
            }
            Ok(m / det.sqrt())
        } else {
            Ok(m)
        }
    };
    let left = right_divide(&f(p)?, &f(q)?)?;
    let right = right_divide(&f(r)?, &f(s)?)?;
    Ok(left * right)
}

/// The unipotent commutator-like product for triangles.
#[derive(Clone, Debug)]
pub struct QMatrix {
    pub t: f64,
    /// `[[1, 0], [t, 1]]`.
    pub closed_form: DMatrix<f64>,
    /// `T(a,b,a) T(a,b,b)^{-1} T(b,a,b) T(b,a,a)^{-1}`.
    pub raw_product: DMatrix<f64>,
    /// Same product with each factor scaled to unit determinant.
    pub normalized_product: DMatrix<f64>,
}

pub fn build_q(a: f64, b: f64) -> Result<QMatrix> {
    check_xi(&[a, b, a])?;
    if a == b {
        return Err(Error::Domain("Q needs a != b".into()));
    }
    let t = -(a - b).powi(2) / (2.0 * a * b + b * b - a - 2.0 * b + 1.0);
    let closed_form = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, t, 1.0]);
    let (p, q, r, s) = ([a, b, a], [a, b, b], [b, a, b], [b, a, a]);
    Ok(QMatrix {
        t,
        closed_form,
        raw_product: four_factor(&p, &q, &r, &s, false)?,
        normalized_product: four_factor(&p, &q, &r, &s, true)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenCheck {
    pub passed: bool,
    pub max_residual: f64,
}

fn eigen_residual(a: f64, d: usize, lambda_shift: f64) -> f64 {
    let n = d - 1;
    let ta = t_entries(&vec![a; d]).map(|v| Complex::new(v, 0.0));
    let eps = Complex::from_polar(1.0, std::f64::consts::TAU / d as f64);
    let mut worst = 0.0f64;
    for l in 1..d {
        let el = eps.powu(l as u32);
        let v = DVector::from_iterator(n, (0..n).map(|k| el.powu(k as u32)));
        let lambda = Complex::new(1.0 - a + lambda_shift, 0.0) + el * a;
        let r = &ta * &v - &v * lambda;
        worst = worst.max(r.norm() / v.norm());
    }
    worst
}

/// Checks that `v_l = (1, e^l, ..., e^{(d-2)l})`, `e = exp(2 pi i / d)`, is an
/// eigenvector of `T(a, ..., a)` with eigenvalue `1 - a + a e^l`, `l = 1..d-1`.
pub fn verify_eigenstructure(a: f64, d: usize, tol: f64) -> Result<EigenCheck> {
    if d < 3 {
        return Err(Error::Dimension(format!("need d >= 3, got {d}")));
    }
    check_xi(&[a, a, a])?;
    let max_residual = eigen_residual(a, d, 0.0);
    Ok(EigenCheck {
        passed: max_residual <= tol,
        max_residual,
    })
}

/// Unipotent witness for odd `d = 2l + 1`.
#[derive(Clone, Debug)]
pub struct ContractionWitness {
    /// Identity except the last row `(phi_1, ..., phi_{2l-1}, 1)`.
    pub closed_form: DMatrix<f64>,
    /// `T(a,b,...,a,b,a) T(a,b,...,a,b,b)^{-1} T(b,a,...,b,a,b) T(b,a,...,b,a,a)^{-1}`.
    pub product: DMatrix<f64>,
}

pub fn build_contraction_witness_odd(d: usize, a: f64, b: f64) -> Result<ContractionWitness> {
    if d < 5 || d.is_multiple_of(2) {
        return Err(Error::Dimension(format!("witness needs odd d >= 5, got {d}")));
    }
    check_xi(&[a, b, a])?;
    if a == b {
        return Err(Error::Domain("witness needs a != b".into()));
    }
    let l = (d - 1) / 2;
    let li = l as i32;
    let den = (1.0 - a).powi(li) * (1.0 - b).powi(li + 1) + a.powi(li) * b.powi(li + 1);
    let n = d - 1;
    let mut m = DMatrix::identity(n, n);
    for j in 1..=l {
        let ji = j as i32;
        let phi = -(a - b).powi(2) * ((1.0 - a) * (1.0 - b)).powi(li - ji) * (a * b).powi(ji - 1)
            / den;
        m[(n - 1, 2 * j - 2)] = phi;
    }
    let alternating = |first: f64, second: f64, last: f64| -> Vec<f64> {
        let mut v: Vec<f64> = (0..d - 1).map(|k| if k % 2 == 0 { first } else { second }).collect();
        v.push(last);
        v
    };
    let product = four_factor(
        &alternating(a, b, a),
        &alternating(a, b, b),
        &alternating(b, a, b),
        &alternating(b, a, a),
        false,
    )?;
    Ok(ContractionWitness {
        closed_form: m,
        product,
    })
}

/// Row-major CSV, one matrix row per line.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
