//! Corpus-level summaries of a metrics run: sign fractions, burden-factor
//! shares, histograms and per-year displacing fractions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::displacement::{displacing_fraction_by_year, DisplacementReport, Weighting};
use crate::error::{Error, Result};
use crate::fmt::{real, sig12};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignFractions {
    #[serde(serialize_with = "sig12")]
    pub negative: f64,
    #[serde(serialize_with = "sig12")]
    pub zero: f64,
    #[serde(serialize_with = "sig12")]
    pub positive: f64,
}

impl SignFractions {
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut neg, mut zero, mut pos, mut n) = (0usize, 0usize, 0usize, 0usize);
        for v in values {
            n += 1;
            if v < 0.0 {
                neg += 1;
            } else if v > 0.0 {
                pos += 1;
            } else {
                zero += 1;
            }
        }
        let n = n.max(1) as f64;
        SignFractions {
            negative: neg as f64 / n,
            zero: zero as f64 / n,
            positive: pos as f64 / n,
        }
    }
}

/// Shares of `b_f` above, at and below 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurdenFractions {
    #[serde(serialize_with = "sig12")]
    pub above_one: f64,
    #[serde(serialize_with = "sig12")]
    pub equal_one: f64,
    #[serde(serialize_with = "sig12")]
    pub below_one: f64,
}

/// Equal-width bins over `[lo, hi]`; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Values outside `[lo, hi]` (or not finite).
    pub outside: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize, values: impl Iterator<Item = f64>) -> Self {
        assert!(hi > lo && bins > 0);
        let mut counts = vec![0u64; bins];
        let mut outside = 0;
        let width = (hi - lo) / bins as f64;
        for v in values {
            if !(lo..=hi).contains(&v) {
                outside += 1;
                continue;
            }
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Histogram { lo, hi, counts, outside }
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + w * i as f64, self.lo + w * (i + 1) as f64)
    }

    /// `bin_lo,bin_hi,count` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let (a, b) = self.bin_edges(i);
            let _ = writeln!(s, "{},{},{}", real(a), real(b), c);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_reports: usize,
    pub d_f_sign: SignFractions,
    pub d0_sign: SignFractions,
    pub b_f: BurdenFractions,
    /// Share of `D0 > 0` papers among those with `d_f > 0`.
    #[serde(serialize_with = "crate::fmt::sig12_opt")]
    pub d0_positive_given_d_f_positive: Option<f64>,
    pub displacing_fraction_by_year: BTreeMap<i32, f64>,
    pub displacing_fraction_by_year_weighted: BTreeMap<i32, f64>,
}

pub const SIGNED_BINS: usize = 40;
pub const LOG_BIN_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub summary: Summary,
    pub d_f_histogram: Histogram,
    pub d0_histogram: Histogram,
    /// Histogram of `log10 b_f` over papers with `b_f > 0`.
    pub log_b_f_histogram: Histogram,
}

pub fn summarize(reports: &[DisplacementReport]) -> Result<ReportBundle> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no reports to summarize".into()));
    }
    let n = reports.len() as f64;
    let count = |pred: &dyn Fn(&DisplacementReport) -> bool| reports.iter().filter(|r| pred(r)).count();
    let b_f = BurdenFractions {
        above_one: count(&|r| r.b_f > 1.0) as f64 / n,
        equal_one: count(&|r| r.b_f == 1.0) as f64 / n,
        below_one: count(&|r| r.b_f < 1.0) as f64 / n,
    };
    let pos_df = count(&|r| r.d_f > 0.0);
    let pos_both = count(&|r| r.d_f > 0.0 && r.d0 > 0.0);
    let summary = Summary {
        n_reports: reports.len(),
        d_f_sign: SignFractions::of(reports.iter().map(|r| r.d_f)),
        d0_sign: SignFractions::of(reports.iter().map(|r| r.d0)),
        b_f,
        d0_positive_given_d_f_positive: (pos_df > 0).then(|| pos_both as f64 / pos_df as f64),
        displacing_fraction_by_year: displacing_fraction_by_year(reports, Weighting::Unweighted),
        displacing_fraction_by_year_weighted: displacing_fraction_by_year(reports, Weighting::CitationWeighted),
    };

    // bins indexed by floor(log10 b_f / width) so edge values never fall outside
    let keys: Vec<i64> = reports
        .iter()
        .filter(|r| r.b_f > 0.0 && r.b_f.is_finite())
        .map(|r| (r.b_f.log10() / LOG_BIN_WIDTH).floor() as i64)
        .collect();
    let kmin = keys.iter().copied().min().unwrap_or(0);
    let kmax = keys.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0u64; (kmax - kmin + 1) as usize];
    for k in keys {
        counts[(k - kmin) as usize] += 1;
    }
    let log_b_f_histogram = Histogram {
        lo: kmin as f64 * LOG_BIN_WIDTH,
        hi: (kmax + 1) as f64 * LOG_BIN_WIDTH,
        counts,
        outside: 0,
    };
    Ok(ReportBundle {
        summary,
        d_f_histogram: Histogram::new(-1.0, 1.0, SIGNED_BINS, reports.iter().map(|r| r.d_f)),
        d0_histogram: Histogram::new(-1.0, 1.0, SIGNED_BINS, reports.iter().map(|r| r.d0)),
        log_b_f_histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::CitationTriple;

    fn rep(d_f: f64, d0: f64, b_f: f64, year: i32) -> DisplacementReport {
        DisplacementReport {
            focal: String::new(),
            year,
            triple: CitationTriple::default(),
            d0,
            d1: None,
            d2: None,
            d3: None,
            d4: None,
            d_f,
            r_k: 0.0,
            c_f: 1,
            c_max: 1,
            b_f,
            top_reference: String::new(),
            d1_degraded: false,
        }
    }

    #[test]
    fn sign_fractions() {
        let reports = vec![
            rep(-0.5, -0.1, 2.0, 2000),
            rep(-0.2, -0.1, 1.0, 2000),
            rep(0.4, 0.2, 0.5, 2001),
            rep(0.0, 0.0, 3.0, 2001),
        ];
        let b = summarize(&reports).unwrap();
        let s = b.summary.d_f_sign;
        assert_eq!((s.negative, s.positive, s.zero), (0.5, 0.25, 0.25));
        assert_eq!(b.summary.b_f.above_one, 0.5);
        assert_eq!(b.summary.b_f.equal_one, 0.25);
        assert_eq!(b.summary.d0_positive_given_d_f_positive, Some(1.0));
        assert_eq!(b.summary.displacing_fraction_by_year[&2001], 0.5);
        assert_eq!(b.d_f_histogram.counts.iter().sum::<u64>(), 4);
        assert_eq!(b.log_b_f_histogram.counts.iter().sum::<u64>(), 4);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn histogram_edges() {
        let h = Histogram::new(-1.0, 1.0, 4, [-1.0, -0.5, 0.0, 0.99, 1.0, 1.5].into_iter());
        assert_eq!(h.counts, vec![1, 1, 1, 2]);
        assert_eq!(h.outside, 1);
        assert!(h.to_csv().starts_with("bin_lo,bin_hi,count\n-1,-0.5,1\n"));
    }
}
