use super::DiffError;

/// Dense row-major 64-bit float matrix. Immutable after construction in
/// normal use; the tape owns any intermediates it creates.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, DiffError> {
        if data.len() != rows * cols {
            return Err(DiffError::Dimension(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// 1xN row vector.
    pub fn row(data: Vec<f64>) -> Self {
        Matrix {
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    /// Nx1 column vector.
    pub fn col(data: Vec<f64>) -> Self {
        Matrix {
            rows: data.len(),
            cols: 1,
            data,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Matrix {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// self as a scalar; panics if not 1x1. Used for loss/grad-check outputs.
    pub fn as_scalar(&self) -> f64 {
        assert_eq!(self.shape(), (1, 1), "matrix is not 1x1");
        self.data[0]
    }
}

/// General matrix product with optional operand transposes.
pub(crate) fn matmul(a: &Matrix, trans_a: bool, b: &Matrix, trans_b: bool) -> Matrix {
    let (m, k1) = if trans_a {
        (a.cols, a.rows)
    } else {
        (a.rows, a.cols)
    };
    let (k2, n) = if trans_b {
        (b.cols, b.rows)
    } else {
        (b.rows, b.cols)
    };
    debug_assert_eq!(k1, k2);
    let k = k1;
    let mut out = Matrix::zeros(m, n);
    match (trans_a, trans_b) {
        (false, false) => {
            // ikj loop order keeps the inner accesses contiguous.
            for i in 0..m {
                for p in 0..k {
                    let av = a.data[i * a.cols + p];
                    if av == 0.0 {
                        continue;
                    }
                    let brow = &b.data[p * b.cols..(p + 1) * b.cols];
                    let orow = &mut out.data[i * n..(i + 1) * n];
                    for (o, &bv) in orow.iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
        }
        (false, true) => {
            for i in 0..m {
                let arow = &a.data[i * a.cols..(i + 1) * a.cols];
                for j in 0..n {
                    let brow = &b.data[j * b.cols..(j + 1) * b.cols];
                    let mut acc = 0.0;
                    for (&av, &bv) in arow.iter().zip(brow) {
                        acc += av * bv;
                    }
                    out.data[i * n + j] = acc;
                }
            }
        }
        (true, false) => {
            for p in 0..k {
                let arow = &a.data[p * a.cols..(p + 1) * a.cols];
                let brow = &b.data[p * b.cols..(p + 1) * b.cols];
                for (i, &av) in arow.iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    let orow = &mut out.data[i * n..(i + 1) * n];
                    for (o, &bv) in orow.iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
        }
        (true, true) => {
            for i in 0..m {
                for j in 0..n {
                    let mut acc = 0.0;
                    for p in 0..k {
                        acc += a.data[p * a.cols + i] * b.data[j * b.cols + p];
                    }
                    out.data[i * n + j] = acc;
                }
            }
        }
    }
    out
}
