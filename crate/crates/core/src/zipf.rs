//! Zipf–Mandelbrot rank curve `C_r ≈ c / (b + r)^a` for the citation
//! counts of one paper's references.
//!
//! The fit minimises the squared error between `ln(C_r + 1)` and
//! `ln c − a ln(b + r)`. For a fixed `b` that is an ordinary linear
//! regression, so `b` is scanned on a grid of step 0.01 over `[0, 100]`
//! and the best grid point is polished by golden-section search inside
//! its neighbouring cells.

use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CitationGraph, NodeId};
use crate::error::{Error, Result};
use crate::fmt::{sig12, sig12_opt};
use crate::special::hurwitz_zeta;

pub const B_MAX: f64 = 100.0;
pub const B_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipfFit {
    #[serde(serialize_with = "sig12")]
    pub a: f64,
    #[serde(serialize_with = "sig12")]
    pub b: f64,
    #[serde(serialize_with = "sig12")]
    pub c: f64,
    pub n_refs: usize,
    #[serde(serialize_with = "sig12")]
    pub r2_log: f64,
    #[serde(serialize_with = "sig12")]
    pub ratio_empirical: f64,
    /// `(a − 1)/(1 + b)`, absent when `a ≤ 1`.
    #[serde(serialize_with = "sig12_opt")]
    pub ratio_theoretical: Option<f64>,
    /// `(b + 1)/(a − 1)`, absent when `a ≤ 1`.
    #[serde(serialize_with = "sig12_opt")]
    pub k_coefficient: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZipfOptions {
    /// Remove zero-count references before ranking.
    pub drop_zeros: bool,
}

struct Regression {
    sse: f64,
    slope: f64,
    intercept: f64,
}

fn regress(y: &[f64], b: f64) -> Regression {
    let n = y.len() as f64;
    let x = |i: usize| (b + (i + 1) as f64).ln();
    let (mut sx, mut sy) = (0.0, 0.0);
    for (i, &yi) in y.iter().enumerate() {
        sx += x(i);
        sy += yi;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (i, &yi) in y.iter().enumerate() {
        let dx = x(i) - mx;
        sxx += dx * dx;
        sxy += dx * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut sse = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let e = yi - intercept - slope * x(i);
        sse += e * e;
    }
    Regression { sse, slope, intercept }
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

pub fn fit_zipf(counts: &[f64]) -> Result<ZipfFit> {
    fit_zipf_with(counts, ZipfOptions::default())
}

/// Fits the rank curve to per-reference citation counts.
///
/// Counts are ranked in descending order (the input need not be sorted).
pub fn fit_zipf_with(counts: &[f64], options: ZipfOptions) -> Result<ZipfFit> {
    if counts.iter().any(|&c| !c.is_finite() || c < 0.0) {
        return Err(Error::InvalidInput("citation counts must be finite and non-negative".into()));
    }
    let mut sorted: Vec<f64> = counts
        .iter()
        .copied()
        .filter(|&c| !options.drop_zeros || c > 0.0)
        .collect();
    if sorted.len() < 3 {
        return Err(Error::TooFewReferences(sorted.len()));
    }
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut positive: Vec<f64> = sorted.iter().copied().filter(|&c| c > 0.0).collect();
    positive.dedup();
    if positive.len() < 2 {
        return Err(Error::DegenerateRankCurve("fewer than two distinct positive counts"));
    }

    let y: Vec<f64> = sorted.iter().map(|&c| c.ln_1p()).collect();
    let steps = (B_MAX / B_STEP).round() as usize;
    let mut best_i = 0;
    let mut best_sse = f64::INFINITY;
    for i in 0..=steps {
        let sse = regress(&y, i as f64 * B_STEP).sse;
        if sse < best_sse {
            best_sse = sse;
            best_i = i;
        }
    }
    let mut b = best_i as f64 * B_STEP;
    let lo = (b - B_STEP).max(0.0);
    let hi = (b + B_STEP).min(B_MAX);
    let (b_ref, sse_ref) = golden_min(|b| regress(&y, b).sse, lo, hi, 80);
    if sse_ref < best_sse {
        b = b_ref;
    }
    // the bracket ends are never evaluated by the search
    for edge in [lo, hi] {
        if regress(&y, edge).sse < regress(&y, b).sse {
            b = edge;
        }
    }

    let reg = regress(&y, b);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let a = -reg.slope;
    let total: f64 = sorted.iter().sum();
    let ratio_theoretical = ratio_theoretical(a, b).ok();
    Ok(ZipfFit {
        a,
        b,
        c: reg.intercept.exp(),
        n_refs: sorted.len(),
        r2_log: if sst > 0.0 { 1.0 - reg.sse / sst } else { 1.0 },
        ratio_empirical: sorted[0] / total,
        ratio_theoretical,
        k_coefficient: ratio_theoretical.map(|r| 1.0 / r),
    })
}

/// Continuum estimate of `C_max / C_total`: `(a − 1)/(1 + b)`.
pub fn ratio_theoretical(a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || a <= 1.0 {
        return Err(Error::HeavyTailDivergence(a));
    }
    if b.is_nan() || b < 0.0 {
        return Err(Error::InvalidInput(format!("offset b = {b} must be non-negative")));
    }
    Ok((a - 1.0) / (1.0 + b))
}

/// Limit of the exact-sum ratio as `N → ∞`: `(b + 1)^−a / ζ(a, b + 1)`.
pub fn ratio_limit(a: f64, b: f64) -> Result<f64> {
    ratio_theoretical(a, b)?;
    Ok((b + 1.0).powf(-a) / hurwitz_zeta(a, b + 1.0))
}

/// `C_max / Σ_{r ≤ N} (b + r)^−a` by direct summation for each `N`.
pub fn ratio_convergence_check(a: f64, b: f64, n_values: &[usize]) -> Result<Vec<(usize, f64)>> {
    ratio_theoretical(a, b)?;
    if n_values.contains(&0) {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..n_values.len()).collect();
    order.sort_by_key(|&i| n_values[i]);
    let head = (b + 1.0).powf(-a);
    let mut out = vec![(0, 0.0); n_values.len()];
    // Neumaier-compensated running sum
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut r = 0usize;
    for i in order {
        let n = n_values[i];
        while r < n {
            r += 1;
            let term = (b + r as f64).powf(-a);
            let t = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - t) + term
            } else {
                (term - t) + sum
            };
            sum = t;
        }
        out[i] = (n, head / (sum + comp));
    }
    Ok(out)
}

/// Lifetime citation counts of `focal`'s references, most cited first,
/// ties by ascending internal id.
pub fn reference_citation_counts(graph: &CitationGraph, focal: NodeId) -> Vec<(NodeId, u64)> {
    let mut v: Vec<(NodeId, u64)> = graph
        .references(focal)
        .iter()
        .map(|&r| (r, graph.citation_count(r) as u64))
        .collect();
    v.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    v
}

pub fn fit_paper(graph: &CitationGraph, focal: NodeId, options: ZipfOptions) -> Result<ZipfFit> {
    let counts: Vec<f64> = reference_citation_counts(graph, focal)
        .into_iter()
        .map(|(_, c)| c as f64)
        .collect();
    fit_zipf_with(&counts, options)
}

/// Up to `n` distinct papers with at least `min_refs` references, chosen
/// uniformly with a seeded generator and returned in ascending id.
pub fn sample_papers(graph: &CitationGraph, n: usize, min_refs: usize, seed: u64) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = graph
        .nodes()
        .filter(|&v| graph.reference_count(v) >= min_refs)
        .choose_multiple(&mut rng, n);
    picked.sort_unstable();
    picked
}

/// Population means over a set of fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipfSummary {
    pub n_fits: usize,
    #[serde(serialize_with = "sig12")]
    pub mean_a: f64,
    #[serde(serialize_with = "sig12")]
    pub mean_b: f64,
    #[serde(serialize_with = "sig12")]
    pub mean_n_refs: f64,
    #[serde(serialize_with = "sig12")]
    pub mean_ratio_empirical: f64,
    /// Mean over fits with `a > 1`.
    #[serde(serialize_with = "sig12_opt")]
    pub mean_ratio_theoretical: Option<f64>,
    /// `ratio_theoretical(mean_a, mean_b)`.
    #[serde(serialize_with = "sig12_opt")]
    pub ratio_at_mean_parameters: Option<f64>,
}

impl ZipfSummary {
    pub fn from_fits(fits: &[ZipfFit]) -> Option<Self> {
        if fits.is_empty() {
            return None;
        }
        let n = fits.len() as f64;
        let mean = |f: fn(&ZipfFit) -> f64| fits.iter().map(f).sum::<f64>() / n;
        let theo: Vec<f64> = fits.iter().filter_map(|f| f.ratio_theoretical).collect();
        let mean_a = mean(|f| f.a);
        let mean_b = mean(|f| f.b);
        Some(ZipfSummary {
            n_fits: fits.len(),
            mean_a,
            mean_b,
            mean_n_refs: mean(|f| f.n_refs as f64),
            mean_ratio_empirical: mean(|f| f.ratio_empirical),
            mean_ratio_theoretical: (!theo.is_empty()).then(|| theo.iter().sum::<f64>() / theo.len() as f64),
            ratio_at_mean_parameters: ratio_theoretical(mean_a, mean_b).ok(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // rounds half away from zero
    fn inverse_square(scale: f64) -> Vec<f64> {
        (1..=30).map(|r| (scale / ((1 + r) * (1 + r)) as f64).round()).collect()
    }

    // Reference values from an independent dense-scan (step 0.001) plus
    // bounded Brent least-squares fit in numpy/scipy.
    #[test]
    fn recovers_inverse_square_curve() {
        let f = fit_zipf(&inverse_square(1e5)).unwrap();
        assert!(close(f.a, 1.991_835_173_985_209_4, 1e-6), "a = {}", f.a);
        assert!(close(f.b, 0.983_131_104_005_703, 1e-5), "b = {}", f.b);
        assert!(close(f.r2_log, 0.999_999_216_278_230_4, 1e-9));
        assert!(close(f.ratio_empirical, 0.407_690_676_929_6, 1e-12));
        assert!((f.a - 2.0).abs() < 0.1 && (f.b - 1.0).abs() < 0.2);
    }

    #[test]
    fn rounding_to_small_counts_flattens_the_curve() {
        // counts 25, 11, 6, ... hit zero from rank 14 on; ln(C + 1) then
        // bends the curve and the fit collapses onto b = 0
        let f = fit_zipf(&inverse_square(100.0)).unwrap();
        assert!(close(f.a, 0.965_777_072_423_927_5, 1e-6), "a = {}", f.a);
        assert!(f.b < 1e-9, "b = {}", f.b);
        assert!(f.ratio_theoretical.is_none());
        assert!(f.k_coefficient.is_none());
    }

    #[test]
    fn other_reference_fits() {
        let exact: Vec<f64> = (1..30).map(|r| 1000.0 / (1.4 + r as f64).powi(2)).collect();
        let f = fit_zipf(&exact).unwrap();
        assert!(close(f.a, 1.500_611_851_987_818_7, 1e-6), "a = {}", f.a);
        assert!(close(f.b, 0.372_483_745_591_194_9, 1e-5), "b = {}", f.b);

        let f = fit_zipf(&[50.0, 20.0, 10.0, 7.0, 3.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(close(f.a, 7.444_484_770_845_056, 1e-4), "a = {}", f.a);
        assert!(close(f.b, 8.617_926_963_761_446, 1e-4), "b = {}", f.b);
        assert!(close(f.ratio_empirical, 50.0 / 91.0, 1e-15));
        let k = f.k_coefficient.unwrap();
        assert!(close(k * f.ratio_theoretical.unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn input_validation() {
        assert!(matches!(fit_zipf(&[8.0, 8.0, 8.0]), Err(Error::DegenerateRankCurve(_))));
        assert!(matches!(fit_zipf(&[5.0, 1.0]), Err(Error::TooFewReferences(2))));
        assert!(matches!(fit_zipf(&[5.0, 0.0, 0.0]), Err(Error::DegenerateRankCurve(_))));
        assert!(fit_zipf(&[5.0, -1.0, 0.0]).is_err());
        let opts = ZipfOptions { drop_zeros: true };
        assert!(matches!(fit_zipf_with(&[5.0, 2.0, 0.0], opts), Err(Error::TooFewReferences(2))));
    }

    #[test]
    fn unsorted_input_is_ranked() {
        let sorted = fit_zipf(&inverse_square(1e5)).unwrap();
        let mut shuffled = inverse_square(1e5);
        shuffled.reverse();
        assert_eq!(fit_zipf(&shuffled).unwrap(), sorted);
    }

    #[test]
    fn theoretical_ratio_examples() {
        assert!(close(ratio_theoretical(2.0, 1.4).unwrap(), 0.416_666_666_666_666_7, 1e-15));
        assert_eq!(ratio_theoretical(2.0, 0.0).unwrap(), 1.0);
        assert!(close(ratio_theoretical(1.89, 0.6).unwrap(), 0.556_25, 1e-15));
        assert!(matches!(ratio_theoretical(1.0, 0.5), Err(Error::HeavyTailDivergence(_))));
        assert!(matches!(ratio_theoretical(0.7, 0.5), Err(Error::HeavyTailDivergence(_))));
    }

    // mpmath at 30 digits
    #[test]
    #[allow(clippy::excessive_precision)]
    fn exact_sum_ratios() {
        let cases = [
            (2.0, 1.4, 29, 0.359_597_502_122_597_87),
            (2.0, 1.4, 30, 0.358_843_651_806_509_07),
            (2.0, 1.4, 10, 0.402_652_841_640_985_93),
            (2.0, 1.4, 1000, 0.337_663_373_678_438_19),
            (2.0, 0.0, 1, 1.0),
            (2.0, 0.0, 10, 0.645_257_982_786_414_26),
            (1.89, 0.6, 29, 0.442_798_814_704_658_27),
            (2.5, 3.0, 100, 0.312_727_028_822_209_96),
        ];
        for (a, b, n, want) in cases {
            let got = ratio_convergence_check(a, b, &[n]).unwrap()[0].1;
            assert!(close(got, want, 1e-13), "({a},{b},{n}) -> {got}, want {want}");
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn exact_sum_limit() {
        for (a, b, want) in [
            (2.0, 1.4, 0.337_009_153_819_033_04),
            (2.0, 0.0, 0.607_927_101_854_026_63),
            (1.89, 0.6, 0.418_353_860_678_833_17),
        ] {
            assert!(close(ratio_limit(a, b).unwrap(), want, 1e-13));
        }
        let big = ratio_convergence_check(2.0, 1.4, &[1_000_000]).unwrap()[0].1;
        assert!((big - ratio_limit(2.0, 1.4).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn exact_sum_is_below_continuum_estimate() {
        // the discrete sum converges to the Hurwitz limit, not (a-1)/(1+b)
        let limit = ratio_limit(2.0, 1.4).unwrap();
        let continuum = ratio_theoretical(2.0, 1.4).unwrap();
        assert!((limit - continuum) / continuum < -0.19);
    }

    #[test]
    fn convergence_keeps_input_order() {
        let out = ratio_convergence_check(2.0, 1.4, &[30, 10, 29]).unwrap();
        assert_eq!(out.iter().map(|p| p.0).collect::<Vec<_>>(), vec![30, 10, 29]);
        assert!(out[1].1 > out[2].1 && out[2].1 > out[0].1);
    }

    proptest! {
        #[test]
        fn theoretical_ratio_monotone(a in 1.01f64..5.0, b in 0.0f64..50.0, da in 0.001f64..1.0, db in 0.001f64..5.0) {
            let base = ratio_theoretical(a, b).unwrap();
            prop_assert!(ratio_theoretical(a + da, b).unwrap() > base);
            prop_assert!(ratio_theoretical(a, b + db).unwrap() < base);
        }

        #[test]
        fn exact_sum_non_increasing(a in 1.1f64..4.0, b in 0.0f64..20.0) {
            let ns: Vec<usize> = (1..=60).collect();
            let out = ratio_convergence_check(a, b, &ns).unwrap();
            for w in out.windows(2) {
                prop_assert!(w[1].1 <= w[0].1);
            }
        }

        #[test]
        fn empirical_ratio_at_least_mean_share(counts in prop::collection::vec(0u32..500, 3..40)) {
            let counts: Vec<f64> = counts.into_iter().map(f64::from).collect();
            if let Ok(f) = fit_zipf(&counts) {
                prop_assert!(f.ratio_empirical >= 1.0 / f.n_refs as f64);
                prop_assert!(f.ratio_empirical <= 1.0);
                prop_assert!(f.b >= 0.0 && f.b <= B_MAX);
            }
        }
    }
}
