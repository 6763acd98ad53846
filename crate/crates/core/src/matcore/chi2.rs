use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
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

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Upper regularized incomplete gamma function `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_continued_fraction(a, x)
    }
}

fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// `P(χ²_dof > x)`.
pub fn chi2_survival(x: f64, dof: usize) -> f64 {
    regularized_gamma_q(dof as f64 / 2.0, x / 2.0)
}

fn chi2_density(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = dof as f64 / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * 2f64.ln() - ln_gamma(k)).exp()
}

/// Upper-tail quantile: the `η` with `P(χ²_dof > η) = upper_tail_prob`.
///
/// Newton iterations on the survival function, kept inside a shrinking
/// bracket and falling back to bisection whenever a step leaves it.
pub fn chi2_quantile(dof: usize, upper_tail_prob: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::Argument("chi-square degrees of freedom must be at least 1".into()));
    }
    if !(upper_tail_prob > 0.0 && upper_tail_prob < 1.0) {
        return Err(Error::Argument(format!(
            "upper tail probability must lie in (0, 1), got {upper_tail_prob}"
        )));
    }
    let target = upper_tail_prob;
    let mut lo = 0.0;
    let mut hi = (dof as f64).max(1.0);
    while chi2_survival(hi, dof) > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Numeric("chi-square quantile bracket exploded".into()));
        }
    }
    // Safeguarded Newton: every evaluated point tightens the bracket, and a
    // step that would leave it is replaced by bisection.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let f = chi2_survival(x, dof) - target;
        if f == 0.0 {
            return Ok(x);
        }
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.max(f64::MIN_POSITIVE) {
            break;
        }
        let density = chi2_density(x, dof);
        let newton = if density > 0.0 { x + f / density } else { f64::NAN };
        if newton.is_finite() && (newton - x).abs() <= 2.0 * f64::EPSILON * x {
            return Ok(newton);
        }
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_dof_closed_form() {
        // survival of chi^2_2 is exp(-x/2)
        for x in [0.1, 1.0, 2.0, 7.5, 30.0] {
            assert!((chi2_survival(x, 2) - (-x / 2.0).exp()).abs() < 1e-15);
        }
        let eta = chi2_quantile(2, (-1f64).exp()).unwrap();
        assert!((eta - 2.0).abs() < 1e-10);
    }

    #[test]
    fn one_dof_table_values() {
        assert!((chi2_quantile(1, 0.05).unwrap() - 3.841_458_820_694_128_5).abs() < 1e-8);
        assert!((chi2_quantile(1, 0.01).unwrap() - 6.634_896_601_021_217).abs() < 1e-8);
        assert!((chi2_quantile(1, 0.5).unwrap() - 0.454_936_423_119_572_4).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(chi2_quantile(0, 0.1).is_err());
        assert!(chi2_quantile(1, 0.0).is_err());
        assert!(chi2_quantile(1, 1.0).is_err());
        assert!(chi2_quantile(1, f64::NAN).is_err());
    }
}
