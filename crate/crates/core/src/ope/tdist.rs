//! Student-t distribution: CDF through the regularized incomplete beta
//! function, quantile through its inverse followed by Newton steps on the CDF.

use std::f64::consts::PI;

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + 7.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..100_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Inverse of I_x(a, b) in x: initial guess plus Halley iterations.
pub fn inv_inc_beta(p: f64, a: f64, b: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let mut x = if a >= 1.0 && b >= 1.0 {
        let pp = if p < 0.5 { p } else { 1.0 - p };
        let t = (-2.0 * pp.ln()).sqrt();
        let mut z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if p < 0.5 {
            z = -z;
        }
        let al = (z * z - 3.0) / 6.0;
        let h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
        let w = z * (al + h).sqrt() / h
            - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
        a / (a + b * (2.0 * w).exp())
    } else {
        let lna = (a / (a + b)).ln();
        let lnb = (b / (a + b)).ln();
        let t = (a * lna).exp() / a;
        let u = (b * lnb).exp() / b;
        let w = t + u;
        if p < t / w {
            (a * w * p).powf(1.0 / a)
        } else {
            1.0 - (b * w * (1.0 - p)).powf(1.0 / b)
        }
    };
    let afac = -ln_beta(a, b);
    let (a1, b1) = (a - 1.0, b - 1.0);
    for _ in 0..100 {
        if x <= 0.0 || x >= 1.0 {
            break;
        }
        let err = inc_beta(x, a, b) - p;
        let t = (a1 * x.ln() + b1 * (1.0 - x).ln() + afac).exp();
        if t == 0.0 {
            break;
        }
        let u = err / t;
        let step = u / (1.0 - 0.5 * (u * (a1 / x - b1 / (1.0 - x))).min(1.0));
        let next = x - step;
        x = if next <= 0.0 {
            0.5 * x
        } else if next >= 1.0 {
            0.5 * (x + 1.0)
        } else {
            next
        };
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

pub fn t_pdf(t: f64, nu: f64) -> f64 {
    let ln = ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (1.0 + t * t / nu).ln();
    ln.exp()
}

pub fn t_cdf(t: f64, nu: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    let tail = 0.5 * inc_beta(nu / (nu + t * t), 0.5 * nu, 0.5);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse CDF of Student's t with `nu` degrees of freedom.
pub fn t_quantile(p: f64, nu: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "t_quantile: p must lie in (0, 1), got {p}");
    assert!(nu > 0.0, "t_quantile: degrees of freedom must be positive, got {nu}");
    if p == 0.5 {
        return 0.0;
    }
    let upper = p > 0.5;
    let tail = if upper { 1.0 - p } else { p };
    // P(|T| > t) = I_{ν/(ν+t²)}(ν/2, 1/2) = 2·tail.
    let x = inv_inc_beta(2.0 * tail, 0.5 * nu, 0.5);
    let mut t = if x > 0.0 { (nu * (1.0 - x) / x).sqrt() } else { f64::MAX.sqrt() };
    // Newton refinement on the upper-tail CDF.
    let target = 1.0 - tail;
    for _ in 0..50 {
        let f = t_cdf(t, nu) - target;
        let d = t_pdf(t, nu);
        if d <= 0.0 || !d.is_finite() {
            break;
        }
        let step = f / d;
        t -= step;
        if step.abs() < 1e-14 * t.abs().max(1.0) {
            break;
        }
    }
    if upper {
        t
    } else {
        -t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_is_zero() {
        for nu in [1.0, 4.0, 30.0, 1e6] {
            assert_eq!(t_quantile(0.5, nu), 0.0);
        }
    }

    #[test]
    fn table_values() {
        assert!((t_quantile(0.95, 10.0) - 1.812461).abs() < 1e-6);
        assert!((t_quantile(0.95, 100.0) - 1.660234).abs() < 1e-6);
        assert!((t_quantile(0.95, 4.0) - 2.131847).abs() < 1e-6);
        assert!((t_quantile(0.975, 1.0) - 12.706205).abs() < 1e-5);
        assert!((t_quantile(0.975, 1e6) - 1.959966).abs() < 1e-6);
    }

    #[test]
    fn symmetric() {
        for nu in [2.0, 7.0, 999.0] {
            for p in [0.6, 0.9, 0.99] {
                assert!((t_quantile(p, nu) + t_quantile(1.0 - p, nu)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cdf_inverts_quantile() {
        for nu in [1.0, 3.0, 10.0, 99.0, 1999.0] {
            for p in [0.01, 0.2, 0.8, 0.95, 0.999] {
                assert!((t_cdf(t_quantile(p, nu), nu) - p).abs() < 1e-10, "nu {nu} p {p}");
            }
        }
    }

    #[test]
    fn incomplete_beta_edges() {
        assert_eq!(inc_beta(0.0, 2.0, 3.0), 0.0);
        assert_eq!(inc_beta(1.0, 2.0, 3.0), 1.0);
        // I_x(1, 1) = x
        assert!((inc_beta(0.3, 1.0, 1.0) - 0.3).abs() < 1e-14);
        assert!((inv_inc_beta(0.3, 1.0, 1.0) - 0.3).abs() < 1e-12);
    }
}
