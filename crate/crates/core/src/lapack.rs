//! Minimal bindings to the system LAPACK symmetric eigensolvers.
//!
//! Two routines cover everything the crate needs: `dsyev` when
//! eigenvectors are required (the exact-solution oracle) and the much
//! faster two-stage `dsyev_2stage` for values-only spectra (stiffness
//! reports at thousands of blocks). Both are provided by the system
//! OpenBLAS, which bundles LAPACK.
//!
//! Inputs are symmetric, so the row-major/column-major mismatch between
//! `ndarray` and LAPACK is irrelevant on the way in. Eigenvector output is
//! column-major; [`symmetric_eigen`] reassembles it so that column `k` of
//! the returned matrix is the eigenvector of eigenvalue `k`.

use ndarray::{Array2, ShapeBuilder};

use crate::error::{Error, Result};

#[link(name = "openblas")]
extern "C" {
    fn dsyev_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        info: *mut i32,
    );
    fn dsyev_2stage_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        info: *mut i32,
    );
}

type Driver = unsafe extern "C" fn(
    *const u8,
    *const u8,
    *const i32,
    *mut f64,
    *const i32,
    *mut f64,
    *mut f64,
    *const i32,
    *mut i32,
);

fn drive(driver: Driver, jobz: u8, mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Linalg("empty matrix".into()));
    }
    let ni = i32::try_from(n).map_err(|_| Error::TooLarge { n, max: i32::MAX as usize })?;
    let uplo = b'L';
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;

    // Workspace query, then the actual factorization.
    let mut wkopt = 0.0f64;
    let query = -1i32;
    unsafe {
        driver(&jobz, &uplo, &ni, a.as_mut_ptr(), &ni, w.as_mut_ptr(), &mut wkopt, &query, &mut info)
    };
    if info != 0 {
        return Err(Error::Linalg(format!("workspace query failed (info = {info})")));
    }
    let lwork = wkopt as i32;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    unsafe {
        driver(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        )
    };
    if info != 0 {
        return Err(Error::Linalg(format!("eigensolver did not converge (info = {info})")));
    }
    Ok((w, a))
}

fn flatten(matrix: &Array2<f64>) -> Result<(Vec<f64>, usize)> {
    let (rows, cols) = matrix.dim();
    if rows != cols {
        return Err(Error::Linalg(format!("matrix is {rows}x{cols}, expected square")));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Linalg("matrix contains non-finite entries".into()));
    }
    Ok((matrix.iter().copied().collect(), rows))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub(crate) fn symmetric_eigenvalues(matrix: &Array2<f64>) -> Result<Vec<f64>> {
    let (a, n) = flatten(matrix)?;
    let (w, _) = drive(dsyev_2stage_, b'N', a, n)?;
    Ok(w)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric
/// matrix; column `k` of the returned matrix pairs with eigenvalue `k`.
pub(crate) fn symmetric_eigen(matrix: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let (a, n) = flatten(matrix)?;
    let (w, z) = drive(dsyev_, b'V', a, n)?;
    // LAPACK stored eigenvectors as columns of its column-major output.
    let vectors = Array2::from_shape_vec((n, n).f(), z)
        .map_err(|e| Error::Linalg(format!("bad eigenvector shape: {e}")))?;
    Ok((w, vectors))
}
