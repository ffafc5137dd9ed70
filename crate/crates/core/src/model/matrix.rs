use std::sync::atomic::{AtomicU64, Ordering};

/// Row-major matrix of `f64` that tolerates unsynchronized concurrent updates.
///
/// Every element is an `AtomicU64` holding the bit pattern of an `f64` and is
/// accessed with relaxed ordering. Concurrent read-modify-write sequences on
/// the same row may interleave and lose updates, which is the usual lock-free
/// asynchronous SGD contract; single-threaded use is fully deterministic.
pub struct SharedMatrix {
    rows: usize,
    dim: usize,
    data: Vec<AtomicU64>,
}

impl SharedMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        let data = (0..rows * dim)
            .map(|_| AtomicU64::new(0f64.to_bits()))
            .collect();
        SharedMatrix { rows, dim, data }
    }

    pub fn from_vec(rows: usize, dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * dim, "matrix shape mismatch");
        let data = values
            .into_iter()
            .map(|v| AtomicU64::new(v.to_bits()))
            .collect();
        SharedMatrix { rows, dim, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn slot(&self, row: usize) -> &[AtomicU64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        f64::from_bits(self.data[row * self.dim + col].load(Ordering::Relaxed))
    }

    #[inline]
    pub fn set(&self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col].store(value.to_bits(), Ordering::Relaxed);
    }

    /// Copy a row into `out`.
    #[inline]
    pub fn read_row(&self, row: usize, out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(self.slot(row)) {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.read_row(row, &mut v);
        v
    }

    pub fn write_row(&self, row: usize, values: &[f64]) {
        for (a, &v) in self.slot(row).iter().zip(values) {
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    /// `out += row`
    #[inline]
    pub fn accumulate_row(&self, row: usize, out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(self.slot(row)) {
            *o += f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    #[inline]
    pub fn dot_row(&self, row: usize, v: &[f64]) -> f64 {
        self.slot(row)
            .iter()
            .zip(v)
            .map(|(a, &x)| f64::from_bits(a.load(Ordering::Relaxed)) * x)
            .sum()
    }

    /// `row += scale * v`
    #[inline]
    pub fn add_to_row(&self, row: usize, scale: f64, v: &[f64]) {
        for (a, &x) in self.slot(row).iter().zip(v) {
            let cur = f64::from_bits(a.load(Ordering::Relaxed));
            a.store((cur + scale * x).to_bits(), Ordering::Relaxed);
        }
    }

    /// `grad += g * row` followed by `row += step * h`, reading the row once so
    /// the gradient uses the value from before the update.
    #[inline]
    pub fn backprop_row(&self, row: usize, g: f64, step: f64, h: &[f64], grad: &mut [f64]) {
        for ((a, &x), gr) in self.slot(row).iter().zip(h).zip(grad.iter_mut()) {
            let cur = f64::from_bits(a.load(Ordering::Relaxed));
            *gr += g * cur;
            a.store((cur + step * x).to_bits(), Ordering::Relaxed);
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.data
            .iter()
            .map(|a| f64::from_bits(a.load(Ordering::Relaxed)))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }
}

impl Clone for SharedMatrix {
    fn clone(&self) -> Self {
        SharedMatrix::from_vec(self.rows, self.dim, self.to_vec())
    }
}

impl std::fmt::Debug for SharedMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SharedMatrix")
            .field("rows", &self.rows)
            .field("dim", &self.dim)
            .finish()
    }
}

impl PartialEq for SharedMatrix {
    /// Bitwise equality of every element.
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.dim == other.dim
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.load(Ordering::Relaxed) == b.load(Ordering::Relaxed))
    }
}
