//! Special functions not covered by `statrs`: the Hurwitz zeta function
//! and a cancellation-free Poisson survival function.

use statrs::function::gamma::ln_gamma;

// B_{2j} / (2j)! for j = 1..=8
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
];

/// Hurwitz zeta `ζ(s, q) = Σ_{k≥0} (q + k)^-s` for `s > 1`, `q > 0`.
///
/// Euler–Maclaurin summation: the first terms are summed directly until
/// the shifted argument exceeds `s + 16`, after which eight Bernoulli
/// corrections keep the relative error near machine precision.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0, "hurwitz_zeta({s}, {q}) out of domain");
    let threshold = (s + 16.0).max(16.0);
    let direct = if q >= threshold {
        0
    } else {
        (threshold - q).ceil() as u64
    };

    let mut head = 0.0;
    for k in 0..direct {
        head += (q + k as f64).powf(-s);
    }
    let a = q + direct as f64;
    let a_pow = a.powf(-s);
    let mut tail = a * a_pow / (s - 1.0) + 0.5 * a_pow;

    // rising factorial s (s+1) ... (s + 2j - 2) times a^{-s-2j+1}
    let mut term = s * a_pow / a;
    for (j, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        tail += coef * term;
        let m = 2.0 * j as f64;
        term *= (s + m + 1.0) * (s + m + 2.0) / (a * a);
    }
    head + tail
}

/// `ln(x!)`
pub fn ln_factorial(x: u64) -> f64 {
    ln_gamma(x as f64 + 1.0)
}

/// `P(X >= k)` for `X ~ Poisson(lambda)`.
///
/// Sums whichever tail is smaller so the result keeps full relative
/// precision both for tiny `lambda` and for `lambda` well above `k`.
pub fn poisson_sf(k: u64, lambda: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda < k as f64 {
        // upper tail, starting at x = k
        let mut term = (-lambda + k as f64 * lambda.ln() - ln_factorial(k)).exp();
        let mut sum = 0.0;
        let mut x = k;
        while term > sum * 1e-17 && term > 0.0 {
            sum += term;
            x += 1;
            term *= lambda / x as f64;
        }
        sum
    } else {
        let mut term = (-lambda).exp();
        let mut cdf = 0.0;
        for x in 0..k {
            cdf += term;
            term *= lambda / (x + 1) as f64;
        }
        (1.0 - cdf).max(0.0)
    }
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}
