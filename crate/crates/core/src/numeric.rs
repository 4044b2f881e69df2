//! Small numerical kernels shared by the estimators.

use std::f64::consts::TAU as TWO_PI;

use num_complex::Complex64;

/// Neumaier-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

fn two_sum(sum: &mut f64, carry: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *carry += (*sum - t) + x;
    } else {
        *carry += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn add(&mut self, x: Complex64) {
        two_sum(&mut self.sum.re, &mut self.carry.re, x.re);
        two_sum(&mut self.sum.im, &mut self.carry.im, x.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

/// `e^{−2πiθ}`, exact when `4θ` is an integer.
pub fn phasor(theta: f64) -> Complex64 {
    let t = theta - theta.floor();
    let q = 4.0 * t;
    if q == q.floor() {
        return match q as u8 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
    }
    let (s, c) = (TWO_PI * t).sin_cos();
    Complex64::new(c, -s)
}

/// Table of `e^{−2πi j/m}` for `j < m`, exact at quarter turns.
pub fn phasor_table(m: u64) -> Vec<Complex64> {
    (0..m).map(|j| phasor(j as f64 / m as f64)).collect()
}

/// Least-squares line `y = a + b x`; returns `(b, a, residual sum of squares)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, intercept, rss)
}

/// Renders `x` with 15 significant digits, `%.15g` style, `.` as decimal
/// separator.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 15;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-5..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        format!("{m}e{exp}")
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
