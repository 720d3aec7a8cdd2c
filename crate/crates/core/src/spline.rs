//! Cubic splines used for tabulated anisotropies and dual-norm tables.

/// Periodic interpolating cubic spline on nonuniform knots.
#[derive(Clone, Debug)]
pub(crate) struct PeriodicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    period: f64,
}

impl PeriodicSpline {
    /// `x` must be strictly increasing and lie in `[x[0], x[0] + period)`.
    pub(crate) fn new(x: Vec<f64>, y: Vec<f64>, period: f64) -> Self {
        let n = x.len();
        assert!(n >= 3 && n == y.len());
        let h: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { x[i + 1] - x[i] } else { x[0] + period - x[n - 1] })
            .collect();
        // Row i couples m[i-1], m[i], m[i+1] cyclically.
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let hp = h[(i + n - 1) % n];
            let hn = h[i];
            let yp = y[(i + n - 1) % n];
            let yn = y[(i + 1) % n];
            a[i] = hp / 6.0;
            b[i] = (hp + hn) / 3.0;
            c[i] = hn / 6.0;
            d[i] = (yn - y[i]) / hn - (y[i] - yp) / hp;
        }
        let m = solve_cyclic(&a, &b, &c, &d);
        Self { x, y, m, period }
    }

    /// Uniform knots `x0 + i * period / n`.
    pub(crate) fn uniform(x0: f64, period: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        let x = (0..n).map(|i| x0 + period * i as f64 / n as f64).collect();
        Self::new(x, y, period)
    }

    /// Value, first and second derivative at `t`.
    pub(crate) fn eval(&self, t: f64) -> (f64, f64, f64) {
        let n = self.x.len();
        let x0 = self.x[0];
        let mut s = (t - x0).rem_euclid(self.period) + x0;
        if s >= x0 + self.period {
            s = x0;
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let j = (i + 1) % n;
        let xr = if j == 0 { x0 + self.period } else { self.x[j] };
        let h = xr - self.x[i];
        let a = (xr - s) / h;
        let b = (s - self.x[i]) / h;
        let (mi, mj) = (self.m[i], self.m[j]);
        let (yi, yj) = (self.y[i], self.y[j]);
        let v = a * yi + b * yj + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let d1 = (yj - yi) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi + (3.0 * b * b - 1.0) / 6.0 * h * mj;
        let d2 = a * mi + b * mj;
        (v, d1, d2)
    }
}

/// Natural cubic spline on increasing knots.
#[derive(Clone, Debug)]
pub(crate) struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub(crate) fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && n == y.len());
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut a = vec![0.0; k];
            let mut b = vec![0.0; k];
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for r in 0..k {
                let i = r + 1;
                let hp = x[i] - x[i - 1];
                let hn = x[i + 1] - x[i];
                a[r] = hp / 6.0;
                b[r] = (hp + hn) / 3.0;
                c[r] = hn / 6.0;
                d[r] = (y[i + 1] - y[i]) / hn - (y[i] - y[i - 1]) / hp;
            }
            let inner = solve_tridiagonal(&a, &b, &c, &d);
            m[1..n - 1].copy_from_slice(&inner);
        }
        Self { x, y, m }
    }

    pub(crate) fn eval(&self, t: f64) -> (f64, f64, f64) {
        let n = self.x.len();
        let s = t.clamp(self.x[0], self.x[n - 1]);
        let i = match self.x.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => (i - 1).min(n - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - s) / h;
        let b = (s - self.x[i]) / h;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let (yi, yj) = (self.y[i], self.y[i + 1]);
        let v = a * yi + b * yj + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let d1 = (yj - yi) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi + (3.0 * b * b - 1.0) / 6.0 * h * mj;
        (v, d1, a * mi + b * mj)
    }
}

/// Thomas algorithm; `a[0]` and `c[n-1]` are ignored.
pub(crate) fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Cyclic tridiagonal solve (Sherman–Morrison); `a[0]` couples to `x[n-1]`
/// and `c[n-1]` couples to `x[0]`.
pub(crate) fn solve_cyclic(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(a, &bb, c, d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(a, &bb, c, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_spline_reproduces_trig() {
        let n = 64;
        let y: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
        let s = PeriodicSpline::uniform(0.0, 2.0 * PI, y);
        for k in 0..100 {
            let t = -3.0 + 0.137 * k as f64;
            let (v, d1, d2) = s.eval(t);
            assert!((v - t.sin()).abs() < 1e-5);
            assert!((d1 - t.cos()).abs() < 1e-3);
            assert!((d2 + t.sin()).abs() < 2e-2);
        }
    }

    #[test]
    fn natural_spline_is_exact_on_lines() {
        let x: Vec<f64> = vec![0.0, 0.3, 1.0, 1.5, 2.5];
        let y: Vec<f64> = x.iter().map(|t| 2.0 * t - 1.0).collect();
        let s = NaturalSpline::new(x, y);
        let (v, d1, d2) = s.eval(1.2);
        assert!((v - 1.4).abs() < 1e-12 && (d1 - 2.0).abs() < 1e-12 && d2.abs() < 1e-12);
    }
}
