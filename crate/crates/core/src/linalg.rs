//! Small fixed-size matrix helpers shared by the variational and stability code.

use nalgebra::{Matrix3, Matrix6};

/// The canonical symplectic form `[[0, I], [-I, 0]]` in (Q, P) ordering.
pub fn symplectic_j() -> Matrix6<f64> {
    let mut j = Matrix6::zeros();
    for i in 0..3 {
        j[(i, i + 3)] = 1.0;
        j[(i + 3, i)] = -1.0;
    }
    j
}

/// `max |Mᵀ J M − J|`.
pub fn symplectic_defect(m: &Matrix6<f64>) -> f64 {
    let j = symplectic_j();
    max_abs(&(m.transpose() * j * m - j))
}

pub fn max_abs<R, C, S>(m: &nalgebra::Matrix<f64, R, C, S>) -> f64
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<f64, R, C>,
{
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Splits a 6×6 matrix into its four 3×3 blocks `(top-left, top-right, bottom-left, bottom-right)`.
pub fn blocks(m: &Matrix6<f64>) -> [Matrix3<f64>; 4] {
    [
        m.fixed_view::<3, 3>(0, 0).into_owned(),
        m.fixed_view::<3, 3>(0, 3).into_owned(),
        m.fixed_view::<3, 3>(3, 0).into_owned(),
        m.fixed_view::<3, 3>(3, 3).into_owned(),
    ]
}

pub fn from_blocks(
    tl: &Matrix3<f64>,
    tr: &Matrix3<f64>,
    bl: &Matrix3<f64>,
    br: &Matrix3<f64>,
) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(tl);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(tr);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(bl);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(br);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_is_symplectic_and_squares_to_minus_identity() {
        let j = symplectic_j();
        assert_eq!(symplectic_defect(&j), 0.0);
        assert_eq!(j * j, -Matrix6::identity());
    }

    #[test]
    fn blocks_round_trip() {
        let m = Matrix6::from_fn(|i, j| (i * 6 + j) as f64);
        let [a, b, c, d] = blocks(&m);
        assert_eq!(from_blocks(&a, &b, &c, &d), m);
        assert_eq!(b[(0, 0)], 3.0);
        assert_eq!(c[(0, 0)], 18.0);
    }
}
