//! Dense linear-algebra helpers shared by every module.
//!
//! All rank decisions go through [`Tolerances`]: a singular value `σ` is
//! treated as zero iff `σ <= rank_rel * σ_max`, and `v ∈ col M` iff
//! `‖M M⁺ v − v‖ <= feasibility_rel * ‖v‖`.
//!
//! The `_ref` variants take a reference scale and use
//! `max(σ_max, reference)` in place of `σ_max`. A matrix like `AΠ` that is
//! mathematically zero still carries round-off of order `1e-16 ‖A‖`, so its
//! rank must be judged against `‖A‖`, not against itself.

use nalgebra::{DMatrix, DVector};

/// Numerical thresholds used for rank and feasibility decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff.
    pub rank_rel: f64,
    /// Relative residual accepted for column-space membership.
    pub feasibility_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rel: 1e-10,
            feasibility_rel: 1e-8,
        }
    }
}

/// Thin SVD restricted to the numerically nonzero singular triplets.
#[derive(Debug, Clone)]
pub struct RankRevealingSvd {
    /// Left singular vectors spanning `col M` (rows × r).
    pub left: DMatrix<f64>,
    /// Nonzero singular values, descending.
    pub values: Vec<f64>,
    /// Right singular vectors spanning `row M` (cols × r).
    pub right: DMatrix<f64>,
}

impl RankRevealingSvd {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn sigma_max(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn sigma_min(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

pub fn svd(m: &DMatrix<f64>, tol: &Tolerances) -> RankRevealingSvd {
    svd_ref(m, tol, 0.0)
}

pub fn svd_ref(m: &DMatrix<f64>, tol: &Tolerances, reference: f64) -> RankRevealingSvd {
    let (values, left, right) = augmented_svd(m);
    let smax = values.first().copied().unwrap_or(0.0).max(reference);
    let r = values
        .iter()
        .take_while(|&&s| smax > 0.0 && s > tol.rank_rel * smax)
        .count();
    RankRevealingSvd {
        left: left.columns(0, r).into_owned(),
        values: values[..r].to_vec(),
        right: right.columns(0, r).into_owned(),
    }
}

/// SVD read off the symmetric eigendecomposition of `[[0, M], [Mᵀ, 0]]`,
/// whose eigenpairs are `±σ` with vectors `(u, ±v)/√2`.
///
/// Returns the `min(rows, cols)` singular values in descending order with
/// their left and right vectors.
fn augmented_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return (Vec::new(), DMatrix::zeros(rows, 0), DMatrix::zeros(cols, 0));
    }
    let mut aug = DMatrix::zeros(rows + cols, rows + cols);
    aug.view_mut((0, rows), (rows, cols)).copy_from(m);
    aug.view_mut((rows, 0), (cols, rows)).copy_from(&m.transpose());
    let eig = aug.symmetric_eigen();
    let mut order: Vec<usize> = (0..rows + cols).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut left = DMatrix::zeros(rows, k);
    let mut right = DMatrix::zeros(cols, k);
    let mut values = Vec::with_capacity(k);
    for (c, &i) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(i);
        left.set_column(c, &(v.rows(0, rows) * std::f64::consts::SQRT_2));
        right.set_column(c, &(v.rows(rows, cols) * std::f64::consts::SQRT_2));
        values.push(eig.eigenvalues[i].max(0.0));
    }
    (values, left, right)
}

/// All singular values (including zeros), descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    augmented_svd(m).0
}

pub fn pseudo_inverse(m: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    pseudo_inverse_ref(m, tol, 0.0)
}

pub fn pseudo_inverse_ref(m: &DMatrix<f64>, tol: &Tolerances, reference: f64) -> DMatrix<f64> {
    let d = svd_ref(m, tol, reference);
    let mut scaled = d.right.clone();
    for (k, s) in d.values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(1.0 / s);
    }
    scaled * d.left.transpose()
}

pub fn rank(m: &DMatrix<f64>, tol: &Tolerances) -> usize {
    svd(m, tol).rank()
}

/// Orthonormal basis of the column space.
pub fn column_basis(m: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    svd(m, tol).left
}

/// Orthonormal basis of the row space, as columns.
pub fn row_basis(m: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    svd(m, tol).right
}

/// Orthonormal basis (as columns) of the orthogonal complement of `col q`,
/// where `q` already has orthonormal columns.
pub fn complement_basis(q: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = q.nrows();
    if dim == 0 {
        return DMatrix::zeros(0, 0);
    }
    let comp = DMatrix::identity(dim, dim) - q * q.transpose();
    let eig = comp.symmetric_eigen();
    let keep: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let mut out = DMatrix::zeros(dim, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &eig.eigenvectors.column(i));
    }
    out
}

/// Orthonormal basis of `ker m`, as columns.
pub fn null_basis(m: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    null_basis_ref(m, tol, 0.0)
}

pub fn null_basis_ref(m: &DMatrix<f64>, tol: &Tolerances, reference: f64) -> DMatrix<f64> {
    complement_basis(&svd_ref(m, tol, reference).right)
}

/// Projector `Q Qᵀ` for a matrix with orthonormal columns.
pub fn projector_from_basis(q: &DMatrix<f64>) -> DMatrix<f64> {
    q * q.transpose()
}

/// Orthogonal projector onto `col m`.
pub fn column_projector(m: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    column_projector_ref(m, tol, 0.0)
}

pub fn column_projector_ref(m: &DMatrix<f64>, tol: &Tolerances, reference: f64) -> DMatrix<f64> {
    projector_from_basis(&svd_ref(m, tol, reference).left)
}

/// Orthogonal projector onto `ker m`.
pub fn kernel_projector(m: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    let r = row_basis(m, tol);
    DMatrix::identity(m.ncols(), m.ncols()) - projector_from_basis(&r)
}

/// Whether `v` lies in `col m` to the relative feasibility tolerance.
pub fn in_column_space(m: &DMatrix<f64>, v: &DVector<f64>, tol: &Tolerances) -> bool {
    in_column_space_ref(m, v, tol, 0.0)
}

pub fn in_column_space_ref(
    m: &DMatrix<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
    reference: f64,
) -> bool {
    let vn = v.norm();
    if vn == 0.0 {
        return true;
    }
    let q = svd_ref(m, tol, reference).left;
    let proj = &q * (q.transpose() * v);
    (proj - v).norm() <= tol.feasibility_rel * vn
}

/// `2Π − I`.
pub fn reflection(projector: &DMatrix<f64>) -> DMatrix<f64> {
    let n = projector.nrows();
    projector * 2.0 - DMatrix::identity(n, n)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Checks symmetry and idempotence to an absolute entrywise tolerance.
pub fn is_orthogonal_projector(p: &DMatrix<f64>, tol: f64) -> bool {
    p.is_square() && max_abs(&(p - p.transpose())) <= tol && max_abs(&(p * p - p)) <= tol
}

/// Stacks matrices with equal row counts side by side.
pub fn hstack(parts: &[&DMatrix<f64>], rows: usize) -> DMatrix<f64> {
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for p in parts {
        debug_assert_eq!(p.nrows(), rows);
        out.view_mut((0, c), (rows, p.ncols())).copy_from(*p);
        c += p.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pseudo_inverse_of_rank_deficient_matrix() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 0.0]);
        let tol = Tolerances::default();
        let p = pseudo_inverse(&m, &tol);
        assert_abs_diff_eq!(&m * &p * &m, m, epsilon = 1e-12);
        assert_eq!(rank(&m, &tol), 1);
    }

    #[test]
    fn null_and_row_spaces_are_complementary() {
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let tol = Tolerances::default();
        let k = null_basis(&m, &tol);
        assert_eq!(k.ncols(), 2);
        assert!(max_abs(&(&m * &k)) < 1e-12);
        let p = kernel_projector(&m, &tol);
        assert_abs_diff_eq!(p, projector_from_basis(&k), epsilon = 1e-12);
    }

    #[test]
    fn column_membership() {
        let m = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]);
        let tol = Tolerances::default();
        assert!(in_column_space(&m, &DVector::from_vec(vec![2.0, 2.0, 0.0]), &tol));
        assert!(!in_column_space(&m, &DVector::from_vec(vec![1.0, 0.0, 0.0]), &tol));
        assert!(in_column_space(&m, &DVector::zeros(3), &tol));
    }

    #[test]
    fn reference_scale_discards_round_off() {
        let tol = Tolerances::default();
        let noise = DMatrix::from_row_slice(2, 2, &[1e-17, 0.0, 0.0, 3e-18]);
        assert_eq!(rank(&noise, &tol), 2);
        assert_eq!(svd_ref(&noise, &tol, 1.0).rank(), 0);
        assert_eq!(null_basis_ref(&noise, &tol, 1.0).ncols(), 2);
    }

    #[test]
    fn empty_shapes_are_handled() {
        let tol = Tolerances::default();
        let m = DMatrix::<f64>::zeros(3, 0);
        assert_eq!(rank(&m, &tol), 0);
        assert_eq!(pseudo_inverse(&m, &tol).shape(), (0, 3));
        assert_eq!(null_basis(&DMatrix::<f64>::zeros(0, 3), &tol).ncols(), 3);
    }
}
