//! High-order local polynomial stencils on arbitrary (typically log-spaced)
//! meshes: nodal differentiation and cumulative integration.

/// Number of nodes in a differentiation stencil (sixth-order accurate).
pub const DIFF_POINTS: usize = 7;
/// Number of nodes used to integrate one mesh interval (sixth-order accurate).
pub const QUAD_POINTS: usize = 6;

/// Fornberg's recursion for the weights of the `order`-th derivative at `x0`
/// from values at `nodes`.
pub fn fornberg(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Start index of a `width`-node stencil centred on `i` and clamped to
/// `[0, len)`.
pub fn stencil_start(i: usize, width: usize, len: usize) -> usize {
    let half = width / 2;
    i.saturating_sub(half).min(len.saturating_sub(width))
}

/// Weights `w` such that `∫_a^b p(x) dx = Σ w_k p(nodes_k)` for every
/// polynomial of degree `< nodes.len()`.
pub fn interval_weights(nodes: &[f64], a: f64, b: f64) -> Vec<f64> {
    let n = nodes.len();
    let center = 0.5 * (a + b);
    let scale = 0.5 * (b - a);
    let xs: Vec<f64> = nodes.iter().map(|x| (x - center) / scale).collect();
    // Moments of the monomials over [-1, 1].
    let moments: Vec<f64> = (0..n)
        .map(|k| if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 })
        .collect();
    // Solve V^T w = moments with V_{jk} = xs_j^k.
    let mut m = vec![vec![0.0; n + 1]; n];
    for k in 0..n {
        for j in 0..n {
            m[k][j] = xs[j].powi(k as i32);
        }
        m[k][n] = moments[k];
    }
    let w = solve_dense(m);
    w.into_iter().map(|v| v * scale).collect()
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("non-empty");
        m.swap(col, piv);
        let (upper, lower) = m.split_at_mut(col + 1);
        let pivot = &upper[col];
        for r in lower.iter_mut() {
            let f = r[col] / pivot[col];
            if f != 0.0 {
                for (a, b) in r[col..].iter_mut().zip(&pivot[col..]) {
                    *a -= f * b;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = m[row][n];
        for k in row + 1..n {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x
}

/// Precomputed differentiation and integration stencils for one mesh.
#[derive(Clone, Debug)]
pub struct MeshStencils {
    diff: Vec<(usize, [f64; DIFF_POINTS])>,
    quad: Vec<(usize, [f64; QUAD_POINTS])>,
}

impl MeshStencils {
    /// The mesh must be strictly increasing with at least [`DIFF_POINTS`] nodes.
    pub fn new(mesh: &[f64]) -> Self {
        let n = mesh.len();
        assert!(n >= DIFF_POINTS, "mesh too short for stencils");
        let diff = (0..n)
            .map(|i| {
                let s = stencil_start(i, DIFF_POINTS, n);
                let w = fornberg(mesh[i], &mesh[s..s + DIFF_POINTS], 1);
                let mut arr = [0.0; DIFF_POINTS];
                arr.copy_from_slice(&w);
                (s, arr)
            })
            .collect();
        let quad = (0..n - 1)
            .map(|i| {
                // Centre the stencil on the interval [i, i+1].
                let s = (i + 1).saturating_sub(QUAD_POINTS / 2).min(n - QUAD_POINTS);
                let w = interval_weights(&mesh[s..s + QUAD_POINTS], mesh[i], mesh[i + 1]);
                let mut arr = [0.0; QUAD_POINTS];
                arr.copy_from_slice(&w);
                (s, arr)
            })
            .collect();
        Self { diff, quad }
    }

    /// Nodal first derivative of sampled values.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        self.diff
            .iter()
            .map(|(s, w)| w.iter().zip(&values[*s..]).map(|(w, v)| w * v).sum())
            .collect()
    }

    /// Per-interval integrals `∫_{x_i}^{x_{i+1}} f`.
    pub fn interval_integrals(&self, values: &[f64]) -> Vec<f64> {
        self.quad
            .iter()
            .map(|(s, w)| w.iter().zip(&values[*s..]).map(|(w, v)| w * v).sum())
            .collect()
    }

    /// `out_i = ∫_{x_i}^{x_last} f`, accumulated from the right so small
    /// tail contributions are not swamped.
    pub fn cumulative_from_right(&self, values: &[f64]) -> Vec<f64> {
        let pieces = self.interval_integrals(values);
        let mut out = vec![0.0; values.len()];
        let mut acc = 0.0;
        for i in (0..pieces.len()).rev() {
            acc += pieces[i];
            out[i] = acc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_mesh(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn fornberg_reproduces_central_difference() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w2 = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w2[0] - 1.0).abs() < 1e-15 && (w2[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn six_point_interval_rule_matches_classical_weights() {
        let nodes = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let w = interval_weights(&nodes, 0.0, 1.0);
        let expect = [11.0, -93.0, 802.0, 802.0, -93.0, 11.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b / 1440.0).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_on_log_mesh_is_high_order() {
        let mesh = log_mesh(1.0, 100.0, 2 * 2048 + 1);
        let st = MeshStencils::new(&mesh);
        let f: Vec<f64> = mesh.iter().map(|r| r.ln().sin() / r).collect();
        let d = st.differentiate(&f);
        for (i, r) in mesh.iter().enumerate() {
            let exact = (r.ln().cos() - r.ln().sin()) / (r * r);
            assert!((d[i] - exact).abs() < 1e-11 * (1.0 / (r * r)), "at {r}");
        }
    }

    #[test]
    fn cumulative_integral_on_log_mesh() {
        let mesh = log_mesh(1.0, 1000.0, 3 * 2048 + 1);
        let st = MeshStencils::new(&mesh);
        let f: Vec<f64> = mesh.iter().map(|r| 1.0 / (r * r)).collect();
        let c = st.cumulative_from_right(&f);
        for (i, r) in mesh.iter().enumerate() {
            let exact = 1.0 / r - 1e-3;
            assert!((c[i] - exact).abs() < 1e-14 * (1.0 / r), "at {r}: {} vs {exact}", c[i]);
        }
    }
}
