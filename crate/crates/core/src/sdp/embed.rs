use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RMatrix};
use crate::tolerances::TOL_HERM;

/// Real symmetric embedding `[[Re H, −Im H], [Im H, Re H]]` of a Hermitian matrix.
/// Its spectrum is that of `H` with every eigenvalue doubled.
pub fn hermitian_embed(h: &CMatrix) -> Result<RMatrix> {
    let dev = linalg::hermiticity_deviation(h);
    let scale = 1.0f64.max(linalg::max_abs(h));
    if dev > TOL_HERM * scale {
        return Err(Error::NotHermitian(dev));
    }
    Ok(hermitian_embed_unchecked(h))
}

pub fn hermitian_embed_unchecked(h: &CMatrix) -> RMatrix {
    let n = h.nrows();
    let mut out = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn real_input_is_block_diagonal() {
        let h = CMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -3.0].map(|x| Complex64::new(x, 0.0)));
        let e = hermitian_embed(&h).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(e[(i, j)], h[(i, j)].re);
                assert_eq!(e[(i + 2, j + 2)], h[(i, j)].re);
                assert_eq!(e[(i, j + 2)], 0.0);
                assert_eq!(e[(i + 2, j)], 0.0);
            }
        }
    }

    #[test]
    fn pauli_y_spectrum_doubles() {
        let h = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 0.0)],
        );
        let ev = linalg::symmetric_eigenvalues(&hermitian_embed(&h).unwrap());
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0].map(|x| Complex64::new(x, 0.0)));
        assert!(hermitian_embed(&h).is_err());
    }
}
