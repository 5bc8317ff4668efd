//! Dense rank-2..4 tensors of runtime dimension d <= 3.
//!
//! Charts here are two- or three-dimensional, so tensors live in fixed 3^k
//! backing arrays with the active dimension carried alongside. Entries with
//! an index >= d are kept at zero.

use std::ops::{Index, IndexMut};

pub const MAX_DIM: usize = 3;

pub type Vec3 = [f64; MAX_DIM];

pub fn dot(d: usize, a: &Vec3, b: &Vec3) -> f64 {
    (0..d).map(|i| a[i] * b[i]).sum()
}

pub fn sup3(d: usize, a: &Vec3) -> f64 {
    (0..d).fold(0.0, |m, i| f64::max(m, a[i].abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat {
    d: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl Mat {
    pub fn zeros(d: usize) -> Self {
        Mat { d, a: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Mat::zeros(d);
        for i in 0..d {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn diag(d: usize, entries: &[f64]) -> Self {
        let mut m = Mat::zeros(d);
        for i in 0..d {
            m.a[i][i] = entries[i];
        }
        m
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.a[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn det(&self) -> f64 {
        let a = &self.a;
        match self.d {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            3 => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
            _ => unreachable!("dimension {} unsupported", self.d),
        }
    }

    pub fn inverse(&self) -> Option<Mat> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let a = &self.a;
        let inv = match self.d {
            1 => Mat { d: 1, a: [[1.0 / det, 0.0, 0.0], [0.0; 3], [0.0; 3]] },
            2 => Mat::from_fn(2, |i, j| {
                let cof = [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]];
                cof[i][j] / det
            }),
            3 => Mat::from_fn(3, |i, j| {
                // adjugate: cofactor of (j, i)
                let r = [(j + 1) % 3, (j + 2) % 3];
                let c = [(i + 1) % 3, (i + 2) % 3];
                (a[r[0]][c[0]] * a[r[1]][c[1]] - a[r[0]][c[1]] * a[r[1]][c[0]]) / det
            }),
            _ => unreachable!(),
        };
        Some(inv)
    }

    /// Lower-triangular Cholesky factor; None when not positive-definite.
    pub fn cholesky(&self) -> Option<Mat> {
        let mut l = Mat::zeros(self.d);
        for i in 0..self.d {
            for j in 0..=i {
                let mut s = self.a[i][j];
                for k in 0..j {
                    s -= l.a[i][k] * l.a[j][k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l.a[i][i] = s.sqrt();
                } else {
                    l.a[i][j] = s / l.a[j][j];
                }
            }
        }
        Some(l)
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.d, |i, j| self.a[j][i])
    }

    pub fn mul(&self, rhs: &Mat) -> Mat {
        Mat::from_fn(self.d, |i, j| (0..self.d).map(|k| self.a[i][k] * rhs.a[k][j]).sum())
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        let mut out = [0.0; MAX_DIM];
        for i in 0..self.d {
            out[i] = (0..self.d).map(|k| self.a[i][k] * v[k]).sum();
        }
        out
    }

    pub fn add(&self, rhs: &Mat) -> Mat {
        Mat::from_fn(self.d, |i, j| self.a[i][j] + rhs.a[i][j])
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        Mat::from_fn(self.d, |i, j| self.a[i][j] - rhs.a[i][j])
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat::from_fn(self.d, |i, j| s * self.a[i][j])
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.d {
            for j in 0..self.d {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.d {
            for j in 0..self.d {
                m = m.max((self.a[i][j] - self.a[j][i]).abs());
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.a[i][i]).sum()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.a[i][j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ten3 {
    d: usize,
    a: [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl Ten3 {
    pub fn zeros(d: usize) -> Self {
        Ten3 { d, a: [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM] }
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Ten3::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    t.a[i][j][k] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.d {
            for j in 0..self.d {
                for k in 0..self.d {
                    m = m.max(self.a[i][j][k].abs());
                }
            }
        }
        m
    }

    pub fn add(&self, rhs: &Ten3) -> Ten3 {
        Ten3::from_fn(self.d, |i, j, k| self.a[i][j][k] + rhs.a[i][j][k])
    }

    pub fn sub(&self, rhs: &Ten3) -> Ten3 {
        Ten3::from_fn(self.d, |i, j, k| self.a[i][j][k] - rhs.a[i][j][k])
    }

    pub fn scale(&self, s: f64) -> Ten3 {
        Ten3::from_fn(self.d, |i, j, k| s * self.a[i][j][k])
    }
}

impl Index<(usize, usize, usize)> for Ten3 {
    type Output = f64;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.a[i][j][k]
    }
}

impl IndexMut<(usize, usize, usize)> for Ten3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.a[i][j][k]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ten4 {
    d: usize,
    a: [[[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl Ten4 {
    pub fn zeros(d: usize) -> Self {
        Ten4 { d, a: [[[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM] }
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Ten4::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        t.a[i][j][k][l] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.d {
            for j in 0..self.d {
                for k in 0..self.d {
                    for l in 0..self.d {
                        m = m.max(self.a[i][j][k][l].abs());
                    }
                }
            }
        }
        m
    }

    pub fn sub(&self, rhs: &Ten4) -> Ten4 {
        Ten4::from_fn(self.d, |i, j, k, l| self.a[i][j][k][l] - rhs.a[i][j][k][l])
    }
}

impl Index<(usize, usize, usize, usize)> for Ten4 {
    type Output = f64;
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &f64 {
        &self.a[i][j][k][l]
    }
}

impl IndexMut<(usize, usize, usize, usize)> for Ten4 {
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut f64 {
        &mut self.a[i][j][k][l]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_2d_and_3d() {
        let m = Mat::from_fn(2, |i, j| [[2.0, 1.0], [1.0, 3.0]][i][j]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).sub(&Mat::identity(2)).sup_norm() < 1e-14);

        let m = Mat::from_fn(3, |i, j| [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 5.0]][i][j]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).sub(&Mat::identity(3)).sup_norm() < 1e-14);
    }

    #[test]
    fn cholesky_requires_positive_definite() {
        let spd = Mat::from_fn(3, |i, j| if i == j { 2.0 } else { 0.5 });
        let l = spd.cholesky().unwrap();
        assert!(l.mul(&l.transpose()).sub(&spd).sup_norm() < 1e-14);

        let indef = Mat::diag(2, &[1.0, -1.0]);
        assert!(indef.cholesky().is_none());
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = Mat::from_fn(2, |i, _| if i == 0 { 1.0 } else { 2.0 });
        assert!(m.inverse().is_none());
    }

    #[test]
    fn sup_norm_ignores_inactive_entries() {
        let mut t = Ten3::zeros(2);
        t[(1, 0, 1)] = -4.0;
        assert_eq!(t.sup_norm(), 4.0);
    }
}
