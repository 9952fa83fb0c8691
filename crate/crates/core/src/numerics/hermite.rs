//! Piecewise Hermite interpolation kernels.

/// Value, first and second derivative of a scalar function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Quintic Hermite interpolant on `[x0, x1]` matching value, slope and
/// curvature at both ends.
#[allow(clippy::too_many_arguments)]
pub fn quintic(x0: f64, x1: f64, f0: f64, d0: f64, s0: f64, f1: f64, d1: f64, s1: f64, x: f64) -> Jet {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let df = f1 - f0;
    let (hd0, hd1) = (h * d0, h * d1);
    let (hs0, hs1) = (h * h * s0, h * h * s1);
    let c0 = f0;
    let c1 = hd0;
    let c2 = 0.5 * hs0;
    let c3 = 10.0 * df - 6.0 * hd0 - 4.0 * hd1 - 1.5 * hs0 + 0.5 * hs1;
    let c4 = -15.0 * df + 8.0 * hd0 + 7.0 * hd1 + 1.5 * hs0 - hs1;
    let c5 = 6.0 * df - 3.0 * hd0 - 3.0 * hd1 - 0.5 * hs0 + 0.5 * hs1;
    let value = c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))));
    let dt = c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)));
    let dtt = 2.0 * c2 + t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
    Jet {
        value,
        d1: dt / h,
        d2: dtt / (h * h),
    }
}

/// Cubic Hermite interpolant on `[x0, x1]` from values and slopes.
pub fn cubic(x0: f64, x1: f64, f0: f64, d0: f64, f1: f64, d1: f64, x: f64) -> Jet {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let df = f1 - f0;
    let c2 = 3.0 * df - h * (2.0 * d0 + d1);
    let c3 = -2.0 * df + h * (d0 + d1);
    let value = f0 + t * (h * d0 + t * (c2 + t * c3));
    let dt = h * d0 + t * (2.0 * c2 + 3.0 * t * c3);
    let dtt = 2.0 * c2 + 6.0 * t * c3;
    Jet {
        value,
        d1: dt / h,
        d2: dtt / (h * h),
    }
}

/// Fritsch–Carlson monotone slopes for data `(x, y)`.
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
