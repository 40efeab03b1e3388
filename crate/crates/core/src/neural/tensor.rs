use crate::error::{Error, Result};

/// Row-major 2-D array of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} tensor needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows picked by index, in order.
    pub fn gather_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }

    /// `self · otherᵀ` where `self` is m×k and `other` is n×k.
    pub fn matmul_nt(&self, other: &Tensor2) -> Result<Tensor2> {
        check(self.cols == other.cols, "A·Bᵀ", self, other)?;
        let (m, k, n) = (self.rows, self.cols, other.rows);
        let mut out = Tensor2::zeros(m, n);
        gemm(m, k, n, &self.data, (k, 1), &other.data, (1, k), &mut out.data);
        Ok(out)
    }

    /// `self · other` where `self` is m×k and `other` is k×n.
    pub fn matmul_nn(&self, other: &Tensor2) -> Result<Tensor2> {
        check(self.cols == other.rows, "A·B", self, other)?;
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = Tensor2::zeros(m, n);
        gemm(m, k, n, &self.data, (k, 1), &other.data, (n, 1), &mut out.data);
        Ok(out)
    }

    /// `selfᵀ · other` where `self` is k×m and `other` is k×n.
    pub fn matmul_tn(&self, other: &Tensor2) -> Result<Tensor2> {
        check(self.rows == other.rows, "Aᵀ·B", self, other)?;
        let (m, k, n) = (self.cols, self.rows, other.cols);
        let mut out = Tensor2::zeros(m, n);
        gemm(m, k, n, &self.data, (1, m), &other.data, (n, 1), &mut out.data);
        Ok(out)
    }

    /// Column sums.
    pub fn sum_rows(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (a, b) in s.iter_mut().zip(self.row(r)) {
                *a += b;
            }
        }
        s
    }
}

fn check(ok: bool, op: &str, a: &Tensor2, b: &Tensor2) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "{op} with {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )))
    }
}

// C (m×n, row-major, overwritten) = A (m×k) · B (k×n) with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], sa: (usize, usize), b: &[f64], sb: (usize, usize), c: &mut [f64]) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    assert!(a.len() >= (m - 1) * sa.0 + (k - 1) * sa.1 + 1);
    assert!(b.len() >= (k - 1) * sb.0 + (n - 1) * sb.1 + 1);
    assert_eq!(c.len(), m * n);
    // SAFETY: the asserts above bound every index dgemm reads or writes.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            sa.0 as isize,
            sa.1 as isize,
            b.as_ptr(),
            sb.0 as isize,
            sb.1 as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
