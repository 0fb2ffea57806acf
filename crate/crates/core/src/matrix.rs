//! Fixed-size dense matrices as nested arrays, row-major.

pub type Matrix<const R: usize, const C: usize> = [[f64; C]; R];

pub fn identity<const N: usize>() -> Matrix<N, N> {
    let mut m = [[0.0; N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mul<const R: usize, const K: usize, const C: usize>(
    a: &Matrix<R, K>,
    b: &Matrix<K, C>,
) -> Matrix<R, C> {
    let mut out = [[0.0; C]; R];
    for i in 0..R {
        for j in 0..C {
            let mut acc = 0.0;
            for k in 0..K {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn mul_vec<const R: usize, const C: usize>(a: &Matrix<R, C>, x: &[f64; C]) -> [f64; R] {
    let mut out = [0.0; R];
    for (o, row) in out.iter_mut().zip(a.iter()) {
        *o = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    }
    out
}

/// Largest absolute entrywise difference.
pub fn max_abs_diff<const R: usize, const C: usize>(a: &Matrix<R, C>, b: &Matrix<R, C>) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| libm::fabs(x - y))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_neutral() {
        let a = [[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(mul(&a, &identity()), a);
        assert_eq!(mul(&identity(), &a), a);
        assert_eq!(mul_vec(&a, &[1.0, 1.0]), [3.0, 7.0]);
    }
}
