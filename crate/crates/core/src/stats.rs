//! Special functions: the standard normal distribution, the regularized
//! incomplete beta function, and the Student t / Fisher F tails built on it.

use std::f64::consts::SQRT_2;

/// Φ⁻¹(0.75): the probit of a 75 % preference, i.e. the scale factor that maps
/// a 1-JOD gap onto a standard-normal argument.
pub const JOD_THETA: f64 = 0.674_489_750_196_081_7;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// Below this argument `erfc` is close to underflow and the asymptotic tail is used.
const TAIL_CUTOFF: f64 = -30.0;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Mills-ratio series 1 − 1/x² + 3/x⁴ − 15/x⁶ + 105/x⁸, valid for large |x|.
fn tail_series(x: f64) -> f64 {
    let r = 1.0 / (x * x);
    1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)))
}

/// ln Φ(x), accurate far into the lower tail.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x < TAIL_CUTOFF {
        -0.5 * x * x - LN_SQRT_2PI - (-x).ln() + tail_series(x).ln()
    } else if x > 5.0 {
        // Φ(x) = 1 − Φ(−x); ln1p keeps precision when Φ(−x) is tiny.
        (-norm_cdf(-x)).ln_1p()
    } else {
        norm_cdf(x).ln()
    }
}

/// The inverse Mills ratio φ(x)/Φ(x).
pub fn inverse_mills(x: f64) -> f64 {
    if x < TAIL_CUTOFF {
        -x / tail_series(x)
    } else {
        (-0.5 * x * x - LN_SQRT_2PI - log_norm_cdf(x)).exp()
    }
}

/// Φ⁻¹(p) by Acklam's rational approximation refined with one Newton step.
///
/// Returns ±∞ at the endpoints and NaN outside [0, 1].
pub fn norm_ppf(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }

    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Newton on the side with more resolution.
    if p < 0.5 {
        x - (norm_cdf(x) - p) / norm_pdf(x)
    } else {
        x + (norm_cdf(-x) - (1.0 - p)) / norm_pdf(x)
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_continued_fraction(a, b, x) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b).clamp(0.0, 1.0)
    }
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    const MAX_TERMS: usize = 20_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_TERMS {
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

/// Two-sided tail probability P(|T| ≥ |t|) of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t))
}

/// Upper tail P(F ≥ f) of the Fisher–Snedecor distribution.
pub fn f_survival(f: f64, df1: f64, df2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f))
}

/// Bernoulli entropy in nats.
pub fn bernoulli_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.ln() };
    term(p) + term(1.0 - p)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n − 1 denominator; 0 for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jod_constant_is_probit_of_three_quarters() {
        assert!((norm_ppf(0.75) - JOD_THETA).abs() < 1e-15);
        assert!((norm_cdf(JOD_THETA) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cdf_reference_values() {
        // Values from standard tables (20 significant digits).
        let cases = [
            (0.0, 0.5),
            (1.0, 0.841_344_746_068_542_9),
            (-1.96, 0.024_997_895_148_220_435),
            (-5.0, 2.866_515_718_791_939e-7),
        ];
        for (x, want) in cases {
            let got = norm_cdf(x);
            assert!((got - want).abs() < 1e-10 * want.max(1e-6), "Φ({x}) = {got}");
        }
    }

    #[test]
    fn ppf_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.75, 0.9, 0.99, 1.0 - 1e-9] {
            let x = norm_ppf(p);
            let back = norm_cdf(x);
            assert!((back - p).abs() <= 1e-10 * p.min(1.0 - p).max(1e-3), "p={p} x={x} back={back}");
        }
        assert_eq!(norm_ppf(0.0), f64::NEG_INFINITY);
        assert!(norm_ppf(1.5).is_nan());
    }

    #[test]
    fn log_cdf_is_continuous_across_branches() {
        for &x in &[TAIL_CUTOFF, 5.0] {
            let below = log_norm_cdf(x - 1e-9);
            let above = log_norm_cdf(x + 1e-9);
            assert!((below - above).abs() < 1e-6 * below.abs().max(1e-12), "x={x}: {below} vs {above}");
        }
        assert!(log_norm_cdf(-60.0).is_finite());
        assert!(inverse_mills(-60.0) > 59.0);
    }

    #[test]
    fn inverse_mills_matches_ratio() {
        for &x in &[-10.0, -2.0, 0.0, 1.5, 6.0] {
            let direct = norm_pdf(x) / norm_cdf(x);
            assert!((inverse_mills(x) - direct).abs() < 1e-10 * direct);
        }
    }

    #[test]
    fn incomplete_beta_edges_and_symmetry() {
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 0.0), 0.0);
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 1.0), 1.0);
        // I_x(1, 1) = x
        assert!((regularized_incomplete_beta(1.0, 1.0, 0.3) - 0.3).abs() < 1e-14);
        let (a, b, x) = (2.5, 7.0, 0.35);
        let lhs = regularized_incomplete_beta(a, b, x);
        let rhs = 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);
        assert!((lhs - rhs).abs() < 1e-13);
    }

    /// Γ(x) for x a positive multiple of 1/2, by exact recursion.
    fn half_integer_gamma(x: f64) -> f64 {
        let (mut g, mut y) = if x.fract() == 0.0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
        while y < x {
            g *= y;
            y += 1.0;
        }
        g
    }

    /// I_x(a, b) = xᵃ(1−x)ᵇ / (a·B(a, b)) · Σₙ (a+b)ₙ / (a+1)ₙ · xⁿ, folded to x ≤ 1/2.
    fn series_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
        if x > 0.5 {
            return 1.0 - series_incomplete_beta(b, a, 1.0 - x);
        }
        let beta = half_integer_gamma(a) * half_integer_gamma(b) / half_integer_gamma(a + b);
        let (mut term, mut sum) = (1.0, 1.0);
        for n in 0..5000 {
            let n = n as f64;
            term *= (a + b + n) / (a + 1.0 + n) * x;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        x.powf(a) * (1.0 - x).powf(b) / (a * beta) * sum
    }

    #[test]
    fn t_and_f_tails_match_series_evaluation() {
        for &(t, df) in &[(0.5, 3.0), (2.2, 5.0), (4.898_979_485_566_356, 3.0), (1.3, 12.0), (3.7, 99.0)] {
            let want = series_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
            let got = student_t_two_sided(t, df);
            assert!((got - want).abs() < 1e-8, "t={t} df={df}: {got} vs {want}");
        }
        for &(f, d1, d2) in &[(1.0, 2.0, 4.0), (168.8125, 2.0, 4.0), (3.1, 3.0, 27.0), (0.4, 5.0, 10.0), (2.5, 4.0, 198.0)] {
            let want = series_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
            let got = f_survival(f, d1, d2);
            assert!((got - want).abs() < 1e-8, "F={f} ({d1}, {d2}): {got} vs {want}");
        }
    }

    #[test]
    fn t_and_f_tails_at_zero() {
        assert!((student_t_two_sided(0.0, 5.0) - 1.0).abs() < 1e-14);
        assert_eq!(f_survival(0.0, 2.0, 4.0), 1.0);
    }

    #[test]
    fn entropy_peaks_at_half() {
        assert!((bernoulli_entropy(0.5) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(bernoulli_entropy(0.0), 0.0);
        assert_eq!(bernoulli_entropy(1.0), 0.0);
    }
}
