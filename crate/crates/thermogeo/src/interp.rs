//! Monotone cubic interpolation (Fritsch-Carlson) on strictly monotone data;
//! used to invert temperature profiles.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` must be strictly increasing; `ys` strictly monotone (either way).
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidInput("need at least two samples".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("abscissae must be strictly increasing".into()));
        }
        let increasing = ys[n - 1] > ys[0];
        let ok = ys.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
        if !ok {
            return Err(Error::NonMonotoneTemperature { lo: xs[0], hi: xs[n - 1] });
        }

        let d: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            m[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { 0.5 * (d[i - 1] + d[i]) };
        }
        // Fritsch-Carlson limiter keeps the interpolant monotone.
        for i in 0..n - 1 {
            if d[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / d[i];
            let b = m[i + 1] / d[i];
            let s = (a * a + b * b).sqrt();
            if s > 3.0 {
                let t = 3.0 / s;
                m[i] = t * a * d[i];
                m[i + 1] = t * b * d[i];
            }
        }
        Ok(MonotoneCubic { xs, ys, slopes: m })
    }

    pub fn domain(&self) -> [f64; 2] {
        [self.xs[0], *self.xs.last().unwrap()]
    }

    /// Cubic Hermite evaluation; clamps to the data range outside it.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_monotone_function() {
        let xs: Vec<f64> = (0..=512).map(|i| 1.0 + i as f64 / 512.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let spline = MonotoneCubic::new(xs, ys).unwrap();
        for i in 0..200 {
            let x = 1.0 + 0.005 * i as f64;
            assert!((spline.eval(x) - x.ln()).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn rejects_non_monotone_data() {
        let xs = vec![0.0, 1.0, 2.0];
        let ys = vec![0.0, 2.0, 1.0];
        assert!(matches!(
            MonotoneCubic::new(xs, ys),
            Err(Error::NonMonotoneTemperature { .. })
        ));
    }

    #[test]
    fn decreasing_data_is_accepted() {
        let xs = vec![0.0, 0.5, 1.0, 1.5, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x| 5.0 - x * x).collect();
        let spline = MonotoneCubic::new(xs.clone(), ys).unwrap();
        assert!((spline.eval(0.5) - 4.75).abs() < 1e-12);
        assert!(spline.eval(0.7) < spline.eval(0.6));
    }
}
