use crate::{DenseMatrix, LinalgError, Result};

/// Eigendecomposition `S = U diag(λ) Uᵀ` with `λ` sorted descending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: DenseMatrix,
}

impl SymEig {
    /// Eigenvector `k` as an owned vector.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }
}

/// Cyclic Jacobi eigensolver for small symmetric matrices.
///
/// Each eigenvector's largest-magnitude component is made positive so the
/// output is fully determined by the input.
pub fn sym_eig(s: &DenseMatrix) -> Result<SymEig> {
    let n = s.rows();
    if s.cols() != n {
        return Err(LinalgError::Dimension { expected: n, got: s.cols() });
    }
    let scale = s.max_abs();
    let asym = s.asymmetry();
    if asym > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(LinalgError::NotSymmetric(asym));
    }
    let mut a = s.clone();
    // symmetrize exactly so rotations see one value per pair
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    let mut v = DenseMatrix::identity(n);
    let fro: f64 = a.data().iter().map(|x| x * x).sum::<f64>().sqrt();

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += 2.0 * a.get(i, j).powi(2);
            }
        }
        if off.sqrt() <= 1e-15 * fro || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a.get(y, y).total_cmp(&a.get(x, x)).then(x.cmp(&y)));
    let values: Vec<f64> = order.iter().map(|&k| a.get(k, k)).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column(src);
        let lead = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for (k, &x) in col.iter().enumerate() {
            vectors.set(k, dst, sign * x);
        }
    }
    Ok(SymEig { values, vectors })
}
