//! Field-label overlap between high-D papers and their top reference,
//! against a combinatorial null in which both papers draw `l` labels
//! uniformly from `f`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CitationGraph;
use crate::displacement::DisplacementReport;
use crate::error::{Error, Result};
use crate::fmt::sig12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldTaxonomy {
    pub f: u32,
    pub l: u32,
}

impl Default for FieldTaxonomy {
    fn default() -> Self {
        FieldTaxonomy { f: 292, l: 2 }
    }
}

fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `1 − C(f − l, l)/C(f, l)`: the chance that two independent uniform
/// `l`-subsets of `f` labels intersect. Exact rational arithmetic; when
/// `f − l < l` the subsets must intersect and the result is 1.
pub fn null_overlap_probability(f: u32, l: u32) -> Result<f64> {
    if l < 1 || l > f {
        return Err(Error::InvalidInput(format!("need 1 <= l <= f, got f = {f}, l = {l}")));
    }
    let miss = BigRational::new(binomial(f - l, l).into(), binomial(f, l).into());
    let p = BigRational::one() - miss;
    p.to_f64()
        .ok_or_else(|| Error::InvalidInput("probability not representable".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    #[serde(serialize_with = "sig12")]
    pub p_empirical: f64,
    #[serde(serialize_with = "sig12")]
    pub p_null: f64,
    #[serde(serialize_with = "sig12")]
    pub ratio: f64,
    pub n_pairs: usize,
    pub n_overlapping: usize,
    /// Pairs above the cutoff dropped because one side has no labels.
    pub n_unlabeled: usize,
    pub taxonomy: FieldTaxonomy,
}

/// True when two ascending label lists share an element.
pub fn labels_intersect(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Overlap over `(focal, top_reference)` pairs with `D0 > d_cutoff`.
pub fn empirical_overlap(
    graph: &CitationGraph,
    reports: &[DisplacementReport],
    d_cutoff: f64,
    taxonomy: FieldTaxonomy,
) -> Result<OverlapResult> {
    let p_null = null_overlap_probability(taxonomy.f, taxonomy.l)?;
    // (labelled, overlapping)
    let flags: Vec<(bool, bool)> = reports
        .par_iter()
        .filter(|r| r.d0 > d_cutoff)
        .map(|r| {
            let focal = graph.node(&r.focal).ok_or_else(|| Error::UnknownId(r.focal.clone()))?;
            let top = graph
                .node(&r.top_reference)
                .ok_or_else(|| Error::UnknownId(r.top_reference.clone()))?;
            let (a, b) = (&graph.paper(focal).fields, &graph.paper(top).fields);
            if a.is_empty() || b.is_empty() {
                return Ok((false, false));
            }
            Ok((true, labels_intersect(a, b)))
        })
        .collect::<Result<_>>()?;
    let n_pairs = flags.iter().filter(|f| f.0).count();
    let n_overlapping = flags.iter().filter(|f| f.1).count();
    if n_pairs == 0 {
        return Err(Error::NoEligiblePairs("no labelled pair above the D cutoff"));
    }
    let p_empirical = n_overlapping as f64 / n_pairs as f64;
    Ok(OverlapResult {
        p_empirical,
        p_null,
        ratio: p_empirical / p_null,
        n_pairs,
        n_overlapping,
        n_unlabeled: flags.len() - n_pairs,
        taxonomy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocType, GraphBuilder, PaperRecord};
    use crate::displacement::CitationTriple;
    use proptest::prelude::*;
    use rand::seq::index::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_probability_examples() {
        // 1 - (290·289/2)/(292·291/2) = 1 - 41905/42486 = 581/42486
        let p = null_overlap_probability(292, 2).unwrap();
        assert!((p - 581.0 / 42486.0).abs() < 1e-15);
        assert!((p - 0.013_675_092_971_802_477).abs() < 1e-10);
        assert_eq!(null_overlap_probability(2, 1).unwrap(), 0.5);
        for f in 1..6 {
            assert_eq!(null_overlap_probability(f, f).unwrap(), 1.0);
        }
        assert_eq!(null_overlap_probability(5, 3).unwrap(), 1.0);
        assert!(null_overlap_probability(3, 0).is_err());
        assert!(null_overlap_probability(3, 4).is_err());
    }

    #[test]
    fn monte_carlo_agrees() {
        let (f, l, n) = (292usize, 2usize, 1_000_000usize);
        let p = null_overlap_probability(f as u32, l as u32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let hits = (0..n)
            .filter(|_| {
                let a = sample(&mut rng, f, l);
                let b = sample(&mut rng, f, l);
                a.iter().any(|x| b.iter().any(|y| x == y))
            })
            .count();
        let freq = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "{freq} vs {p} (se {se})");
    }

    fn labelled(pairs: &[(&[u32], &[u32])]) -> (CitationGraph, Vec<DisplacementReport>) {
        let mut b = GraphBuilder::new();
        let mut reports = Vec::new();
        for (i, (fa, fb)) in pairs.iter().enumerate() {
            b.add_paper(PaperRecord::new(format!("f{i}"), 2000, DocType::JournalArticle).with_fields(fa.iter().copied()))
                .unwrap();
            b.add_paper(PaperRecord::new(format!("r{i}"), 1990, DocType::JournalArticle).with_fields(fb.iter().copied()))
                .unwrap();
            reports.push(DisplacementReport {
                focal: format!("f{i}"),
                year: 2000,
                triple: CitationTriple::default(),
                d0: 0.5,
                d1: None,
                d2: None,
                d3: None,
                d4: None,
                d_f: 0.5,
                r_k: 0.0,
                c_f: 1,
                c_max: 1,
                b_f: 1.0,
                top_reference: format!("r{i}"),
                d1_degraded: false,
            });
        }
        (b.build(), reports)
    }

    #[test]
    fn empirical_examples() {
        let (g, r) = labelled(&[(&[1, 2], &[2, 3]), (&[1], &[3])]);
        let res = empirical_overlap(&g, &r, 0.21, FieldTaxonomy::default()).unwrap();
        assert_eq!(res.p_empirical, 0.5);
        assert_eq!(res.n_pairs, 2);

        let (g, r) = labelled(&[(&[4, 5], &[4, 5]), (&[7], &[7])]);
        assert_eq!(empirical_overlap(&g, &r, 0.21, FieldTaxonomy::default()).unwrap().p_empirical, 1.0);
    }

    #[test]
    fn unlabeled_and_low_d_pairs_excluded() {
        let (g, mut r) = labelled(&[(&[1], &[1]), (&[], &[1]), (&[2], &[3])]);
        r[2].d0 = 0.1;
        let res = empirical_overlap(&g, &r, 0.21, FieldTaxonomy::default()).unwrap();
        assert_eq!((res.n_pairs, res.n_unlabeled, res.p_empirical), (1, 1, 1.0));

        r.truncate(2);
        r[0].d0 = 0.0;
        assert!(matches!(
            empirical_overlap(&g, &r, 0.21, FieldTaxonomy::default()),
            Err(Error::NoEligiblePairs(_))
        ));
    }

    proptest! {
        #[test]
        fn null_monotone(l in 1u32..6, f in 12u32..400) {
            let p = null_overlap_probability(f, l).unwrap();
            prop_assert!(null_overlap_probability(f + 1, l).unwrap() < p);
            prop_assert!(null_overlap_probability(f, l + 1).unwrap() > p);
        }

        #[test]
        fn empirical_invariant_under_label_permutation(
            sets in prop::collection::vec((prop::collection::vec(0u32..10, 0..4), prop::collection::vec(0u32..10, 0..4)), 1..20),
            perm_seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
            let perm: Vec<u32> = sample(&mut rng, 10, 10).into_iter().map(|x| x as u32).collect();
            let pairs: Vec<(&[u32], &[u32])> = sets.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect();
            let mapped: Vec<(Vec<u32>, Vec<u32>)> = sets
                .iter()
                .map(|(a, b)| (a.iter().map(|&x| perm[x as usize]).collect(), b.iter().map(|&x| perm[x as usize]).collect()))
                .collect();
            let mapped_pairs: Vec<(&[u32], &[u32])> = mapped.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect();
            let (g1, r1) = labelled(&pairs);
            let (g2, r2) = labelled(&mapped_pairs);
            let a = empirical_overlap(&g1, &r1, 0.0, FieldTaxonomy::default());
            let b = empirical_overlap(&g2, &r2, 0.0, FieldTaxonomy::default());
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a.p_empirical, b.p_empirical),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false),
            }
        }
    }
}
