//! Dense rank-revealing helpers on top of nalgebra's SVD.

use nalgebra::DMatrix;

/// Singular values below `rel_tol * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-9;

/// Orthonormal basis of `{x : A x = 0}`, one basis vector per column.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to at least square so the SVD returns the full right basis.
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma = &svd.singular_values;
    let largest = sigma.iter().cloned().fold(0.0, f64::max);
    let threshold = rel_tol * largest;
    let null_rows: Vec<usize> = (0..sigma.len())
        .filter(|&k| largest == 0.0 || sigma[k] <= threshold)
        .collect();
    let mut basis = DMatrix::zeros(cols, null_rows.len());
    for (c, &k) in null_rows.iter().enumerate() {
        basis.set_column(c, &v_t.row(k).transpose());
    }
    basis
}

pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sigma = a.singular_values();
    let largest = sigma.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn column_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if cols == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let sigma = &svd.singular_values;
    let largest = sigma.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sigma.len())
        .filter(|&k| largest > 0.0 && sigma[k] > rel_tol * largest)
        .collect();
    let mut basis = DMatrix::zeros(rows, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        basis.set_column(c, &u.column(k));
    }
    basis
}

/// Reduced row echelon form with partial pivoting; rows that vanish below
/// `tol` are dropped. The result depends only on the row space.
pub fn rref(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let mut m = a.clone();
    let (rows, cols) = m.shape();
    let mut pivot_row = 0;
    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        let (best, value) =
            (pivot_row..rows)
                .map(|r| (r, m[(r, col)].abs()))
                .fold(
                    (pivot_row, -1.0),
                    |acc, x| if x.1 > acc.1 { x } else { acc },
                );
        if value <= tol {
            for r in pivot_row..rows {
                m[(r, col)] = 0.0;
            }
            continue;
        }
        m.swap_rows(pivot_row, best);
        let pivot = m[(pivot_row, col)];
        for c in 0..cols {
            m[(pivot_row, c)] /= pivot;
        }
        for r in 0..rows {
            if r != pivot_row {
                let factor = m[(r, col)];
                if factor != 0.0 {
                    for c in 0..cols {
                        m[(r, c)] -= factor * m[(pivot_row, c)];
                    }
                }
            }
        }
        pivot_row += 1;
    }
    m.rows(0, pivot_row).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let n = null_space(&a, RANK_TOL);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).amax() < 1e-14);
    }

    #[test]
    fn null_space_of_full_rank_is_empty() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(null_space(&a, RANK_TOL).ncols(), 0);
        assert_eq!(rank(&a, RANK_TOL), 2);
    }

    #[test]
    fn rref_is_basis_independent() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 0.0, 1.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 3, &[2.0, 5.0, 7.0, 1.0, 3.0, 4.0]);
        let (ra, rb) = (rref(&a, 1e-12), rref(&b, 1e-12));
        assert!((ra - rb).amax() < 1e-12);
    }

    #[test]
    fn column_space_drops_dependent_columns() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(column_space(&a, RANK_TOL).ncols(), 2);
    }
}
