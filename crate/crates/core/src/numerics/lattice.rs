//! Logarithmic mesh lattice anchored at `r = 1`.
//!
//! Every mesh built from the same density draws its interior nodes from the
//! single lattice `10^{k/n}`, so meshes over overlapping ranges share nodes.

pub const DEFAULT_PER_DECADE: usize = 2048;

/// Lattice node `10^{k/per_decade}`.
pub fn node(k: i64, per_decade: usize) -> f64 {
    10f64.powf(k as f64 / per_decade as f64)
}

/// Strictly increasing mesh on `[a, b]` (`0 < a < b`): the two endpoints
/// plus every lattice node strictly between them, dropping lattice nodes
/// closer than a quarter step to an endpoint.
pub fn log_mesh(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a, "log_mesh needs 0 < a < b, got [{a}, {b}]");
    let n = per_decade as f64;
    let ratio = 10f64.powf(1.0 / n);
    let k_lo = (a.log10() * n).floor() as i64;
    let k_hi = (b.log10() * n).ceil() as i64;
    let mut out = Vec::with_capacity((k_hi - k_lo + 2).max(2) as usize);
    out.push(a);
    for k in k_lo..=k_hi {
        let x = node(k, per_decade);
        let quarter = 0.25 * x * (ratio - 1.0);
        if x > a + quarter && x < b - quarter {
            out.push(x);
        }
    }
    out.push(b);
    out
}

/// Mesh on `[0, b]`: zero followed by a log mesh on `[b·floor_ratio, b]`.
pub fn origin_mesh(b: f64, floor_ratio: f64, per_decade: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(log_mesh(b * floor_ratio, b, per_decade));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_is_strictly_increasing_with_exact_endpoints() {
        let m = log_mesh(0.37, 123.4, 64);
        assert_eq!(m[0], 0.37);
        assert_eq!(*m.last().unwrap(), 123.4);
        assert!(m.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn overlapping_meshes_share_interior_nodes() {
        let a = log_mesh(1.0, 100.0, 128);
        let b = log_mesh(10.0, 1000.0, 128);
        let shared = a.iter().filter(|x| **x > 10.5 && **x < 99.0);
        for x in shared {
            assert!(b.contains(x), "{x} missing");
        }
    }

    #[test]
    fn lattice_contains_powers_of_ten_exactly() {
        assert_eq!(node(0, 2048), 1.0);
        assert_eq!(node(2048, 2048), 10.0);
        assert_eq!(node(2 * 2048, 2048), 100.0);
    }

    #[test]
    fn spacing_stays_geometric() {
        let m = log_mesh(2.0, 50.0, 256);
        let q = 10f64.powf(1.0 / 256.0);
        for w in m[1..m.len() - 1].windows(2) {
            assert!((w[1] / w[0] - q).abs() < 1e-12);
        }
    }
}
