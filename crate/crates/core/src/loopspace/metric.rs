use serde::{Deserialize, Serialize};

/// Discrete Riemannian metric on loop tangent vectors.
///
/// Vertex components pair through `(1/N)(I + N^2 L)` with `L` the periodic
/// graph Laplacian (`H1`), or through `(1/N) I` (`L2`); the period component has weight 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopMetric {
    #[default]
    H1,
    L2,
}

impl LoopMetric {
    /// `(diagonal, off-diagonal)` of the constant-coefficient cyclic matrix for `n` vertices.
    pub fn coefficients(self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        match self {
            LoopMetric::H1 => ((1.0 + 2.0 * nf * nf) / nf, -nf),
            LoopMetric::L2 => (1.0 / nf, 0.0),
        }
    }

    /// Multiplies one coordinate column by the metric matrix.
    pub fn apply(self, values: &[f64]) -> Vec<f64> {
        let n = values.len();
        let (d, o) = self.coefficients(n);
        (0..n).map(|i| d * values[i] + o * (values[(i + 1) % n] + values[(i + n - 1) % n])).collect()
    }

    /// In-place solve of one coordinate column.
    pub fn solve(self, values: &mut [f64]) {
        let (d, o) = self.coefficients(values.len());
        if o == 0.0 {
            values.iter_mut().for_each(|v| *v /= d);
        } else {
            cyclic_tridiagonal_solve(d, o, values);
        }
    }
}

/// Solves `A y = rhs` in place for the symmetric cyclic tridiagonal matrix with
/// constant diagonal `d` and off-diagonal `o` (strictly diagonally dominant).
pub fn cyclic_tridiagonal_solve(d: f64, o: f64, rhs: &mut [f64]) {
    let n = rhs.len();
    assert!(n >= 3, "cyclic solve for n = {n}");
    // Sherman-Morrison: A = B + u v^T with u = (gamma, 0.., o), v = (1, 0.., o / gamma).
    let gamma = -d;
    let mut diag = vec![d; n];
    diag[0] = d - gamma;
    diag[n - 1] = d - o * o / gamma;

    let thomas = |rhs: &mut [f64]| {
        let mut c = vec![0.0; n];
        c[0] = o / diag[0];
        rhs[0] /= diag[0];
        for i in 1..n {
            let m = diag[i] - o * c[i - 1];
            c[i] = o / m;
            rhs[i] = (rhs[i] - o * rhs[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= c[i] * rhs[i + 1];
        }
    };
    thomas(rhs);
    let mut z = vec![0.0; n];
    z[0] = gamma;
    z[n - 1] = o;
    thomas(&mut z);
    let fact = (rhs[0] + o * rhs[n - 1] / gamma) / (1.0 + z[0] + o * z[n - 1] / gamma);
    for i in 0..n {
        rhs[i] -= fact * z[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_inverts_apply() {
        for metric in [LoopMetric::H1, LoopMetric::L2] {
            for n in [3usize, 4, 17, 256] {
                let x: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 4.5).collect();
                let mut y = metric.apply(&x);
                metric.solve(&mut y);
                let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-9, "{metric:?} n={n} err={err}");
            }
        }
    }
}
