//! Symmetric tridiagonal matrices: the only linear algebra a 1-D P1
//! discretization needs.

/// Symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal (`off[i]` couples rows `i` and `i + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        SymTridiag { diag: vec![0.0; n], off: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &SymTridiag) -> SymTridiag {
        SymTridiag {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + alpha * b).collect(),
            off: self.off.iter().zip(&other.off).map(|(a, b)| a + alpha * b).collect(),
        }
    }

    /// Principal submatrix on rows/columns `lo..hi`.
    pub fn block(&self, lo: usize, hi: usize) -> SymTridiag {
        SymTridiag {
            diag: self.diag[lo..hi].to_vec(),
            off: if hi > lo + 1 { self.off[lo..hi - 1].to_vec() } else { Vec::new() },
        }
    }

    /// Solves `A x = b` by an `LDL^T` sweep without pivoting. Returns `None`
    /// on a zero or non-finite pivot.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        if n == 0 {
            return Some(Vec::new());
        }
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n];
        let mut y = vec![0.0; n];
        d[0] = self.diag[0];
        y[0] = b[0];
        for i in 1..n {
            if d[i - 1] == 0.0 || !d[i - 1].is_finite() {
                return None;
            }
            l[i] = self.off[i - 1] / d[i - 1];
            d[i] = self.diag[i] - l[i] * self.off[i - 1];
            y[i] = b[i] - l[i] * y[i - 1];
        }
        if d[n - 1] == 0.0 || !d[n - 1].is_finite() {
            return None;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = y[n - 1] / d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = y[i] / d[i] - l[i + 1] * x[i + 1];
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }

    /// Number of negative pivots of `A - lambda M`; by Sylvester's law of
    /// inertia this is the number of generalized eigenvalues below `lambda`.
    pub fn count_below(&self, mass: &SymTridiag, lambda: f64) -> usize {
        let n = self.len();
        let mut count = 0;
        let mut d = 0.0f64;
        for i in 0..n {
            let a = self.diag[i] - lambda * mass.diag[i];
            d = if i == 0 {
                a
            } else {
                let o = self.off[i - 1] - lambda * mass.off[i - 1];
                let prev = if d == 0.0 { f64::MIN_POSITIVE * (1.0 + a.abs()) } else { d };
                a - o * o / prev
            };
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// True when every `LDL^T` pivot is positive.
    pub fn is_positive_definite(&self) -> bool {
        let mut d = 0.0;
        for i in 0..self.len() {
            d = if i == 0 { self.diag[0] } else { self.diag[i] - self.off[i - 1] * self.off[i - 1] / d };
            if !(d > 0.0) {
                return false;
            }
        }
        true
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag { diag: vec![2.0; n], off: vec![-1.0; n - 1] }
    }

    #[test]
    fn solve_roundtrip() {
        let a = laplacian(7);
        let x: Vec<f64> = (0..7).map(|i| (i as f64).sin() + 2.0).collect();
        let b = a.mul_vec(&x);
        let y = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(y) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_count_matches_known_spectrum() {
        // Eigenvalues of the Dirichlet Laplacian: 2 - 2 cos(k pi / (n + 1)).
        let n = 10;
        let a = laplacian(n);
        let mut id = SymTridiag::zeros(n);
        id.diag.iter_mut().for_each(|d| *d = 1.0);
        for k in 1..=n {
            let lam = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert_eq!(a.count_below(&id, lam - 1e-9), k - 1);
            assert_eq!(a.count_below(&id, lam + 1e-9), k);
        }
    }
}
