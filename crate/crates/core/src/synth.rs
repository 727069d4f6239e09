//! Seeded generators: random citation graphs, corpora with planted
//! multiple-discovery pools, and samplers for the fitted distributions.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::corpus::{CitationGraph, DocType, GraphBuilder, NodeId, PaperRecord};
use crate::error::{Error, Result};
use crate::special::hurwitz_zeta;

/// One draw from the discrete power law `P(x) = x^−α / ζ(α, x_min)`, `x ≥ x_min`.
///
/// Exact inverse-CDF sampling: the smallest `x` with
/// `ζ(α, x + 1)/ζ(α, x_min) ≤ 1 − u`, bracketed by doubling and then bisected.
pub fn sample_discrete_powerlaw<R: Rng + ?Sized>(rng: &mut R, alpha: f64, x_min: u64) -> u64 {
    assert!(alpha > 1.0 && x_min >= 1, "power law needs alpha > 1 and x_min >= 1");
    let z = hurwitz_zeta(alpha, x_min as f64);
    // q in (0, 1]
    let q = 1.0 - rng.random::<f64>();
    let ccdf_after = |x: u64| hurwitz_zeta(alpha, x as f64 + 1.0) / z;
    if ccdf_after(x_min) <= q {
        return x_min;
    }
    const CAP: u64 = 1 << 53;
    let mut lo = x_min; // ccdf_after(lo) > q
    let mut step = 1u64;
    let mut hi = x_min + 1;
    while ccdf_after(hi) > q {
        lo = hi;
        step = step.saturating_mul(2);
        hi = hi.saturating_add(step);
        if hi >= CAP {
            return CAP;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ccdf_after(mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn powerlaw_samples(n: usize, alpha: f64, x_min: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_discrete_powerlaw(&mut rng, alpha, x_min)).collect()
}

/// Poisson(λ) draws conditioned on `x ≥ truncation`, by rejection.
pub fn truncated_poisson_samples(n: usize, lambda: f64, truncation: u64, seed: u64) -> Result<Vec<u64>> {
    let dist = Poisson::new(lambda).map_err(|e| Error::InvalidInput(format!("Poisson({lambda}): {e}")))?;
    if crate::special::poisson_sf(truncation, lambda) < 1e-6 {
        return Err(Error::InvalidInput(format!(
            "truncation {truncation} leaves almost no mass under Poisson({lambda})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = dist.sample(&mut rng) as u64;
        if x >= truncation {
            out.push(x);
        }
    }
    Ok(out)
}

/// Uniform random graph for property tests: `n` papers with years in
/// `years`, each citing up to `max_refs` distinct random other papers.
pub fn random_graph(n: usize, max_refs: usize, years: (i32, i32), seed: u64) -> CitationGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    for i in 0..n {
        let mut p = PaperRecord::new(format!("p{i}"), rng.random_range(years.0..=years.1), DocType::JournalArticle);
        if rng.random_bool(0.7) {
            let k = rng.random_range(1..=2);
            p.authors = Some((0..k).map(|_| format!("a{}", rng.random_range(0..6))).collect());
        }
        p = p.with_fields((0..rng.random_range(0..3)).map(|_| rng.random_range(0..8)));
        b.add_paper(p).expect("generated ids are unique");
    }
    if n >= 2 {
        for s in 0..n {
            let k = rng.random_range(0..=max_refs);
            for _ in 0..k {
                let t = rng.random_range(0..n);
                b.add_edge(s as NodeId, t as NodeId);
            }
        }
    }
    b.build()
}

/// Rank counts `c · (b + r)^−a · exp(σ ε)`, `ε ~ N(0, 1)`, sorted descending.
pub fn zipf_counts<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64, c: f64, n: usize, sigma: f64) -> Vec<f64> {
    let noise = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    let mut v: Vec<f64> = (1..=n)
        .map(|r| c * (b + r as f64).powf(-a) * noise.sample(rng).exp())
        .collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

/// Parameters for [`planted_pools_corpus`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPoolsConfig {
    pub n_papers: usize,
    pub n_pools: usize,
    pub pool_alpha: f64,
    pub pool_x_min: u64,
    pub max_pool_size: u64,
    /// Citations each pool member receives; must reach the pool criteria.
    pub member_citations: usize,
    /// Qualifying papers whose anchor no other qualifying paper shares.
    pub singletons: usize,
    pub seed: u64,
}

impl Default for PlantedPoolsConfig {
    fn default() -> Self {
        PlantedPoolsConfig {
            n_papers: 10_000,
            n_pools: 150,
            pool_alpha: 2.5,
            pool_x_min: 2,
            max_pool_size: 200,
            member_citations: 100,
            singletons: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub graph: CitationGraph,
    /// External id of each planted anchor and its member ids.
    pub pools: Vec<(String, Vec<String>)>,
    /// size → number of planted pools of that size.
    pub histogram: BTreeMap<u64, u64>,
}

/// A corpus with known multiple-discovery pools.
///
/// Each pool is an anchor paper and `size` members that cite only the
/// anchor. A shared set of later "citer" papers cites every member and
/// nothing else, so members have `d_f = 1` and `member_citations`
/// citations; later siblings citing the same anchor are type k, which keeps
/// `D0 ≥ member_citations / (member_citations + max_pool_size − 1)`. Singleton decoys are built the same way around their own
/// anchor. The remaining papers form a sparse random background that
/// cites only background papers, keeping every background paper below the
/// citation threshold.
pub fn planted_pools_corpus(cfg: &PlantedPoolsConfig) -> Result<PlantedCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sizes: Vec<u64> = (0..cfg.n_pools)
        .map(|_| loop {
            let s = sample_discrete_powerlaw(&mut rng, cfg.pool_alpha, cfg.pool_x_min);
            if s <= cfg.max_pool_size {
                break s;
            }
        })
        .collect();
    let members: u64 = sizes.iter().sum::<u64>() + cfg.singletons as u64;
    let anchors = cfg.n_pools + cfg.singletons;
    let fixed = anchors + members as usize + cfg.member_citations;
    if fixed > cfg.n_papers {
        return Err(Error::InvalidInput(format!(
            "{fixed} papers needed for the planted structure, only {} requested",
            cfg.n_papers
        )));
    }

    let mut b = GraphBuilder::new();
    let add = |b: &mut GraphBuilder, id: String, year: i32| {
        b.add_paper(PaperRecord::new(id, year, DocType::JournalArticle).with_fields([0]))
    };
    let mut groups: Vec<(NodeId, Vec<NodeId>)> = Vec::with_capacity(anchors);
    let group_sizes = sizes.iter().copied().chain(std::iter::repeat_n(1, cfg.singletons));
    for (g, size) in group_sizes.enumerate() {
        let anchor = add(&mut b, format!("anchor{g}"), 1950)?;
        let ms = (0..size)
            .map(|m| add(&mut b, format!("pool{g}_m{m}"), rng.random_range(1980..=1990)))
            .collect::<Result<Vec<_>>>()?;
        groups.push((anchor, ms));
    }
    let citers = (0..cfg.member_citations)
        .map(|c| add(&mut b, format!("citer{c}"), rng.random_range(1995..=2010)))
        .collect::<Result<Vec<_>>>()?;
    let n_background = cfg.n_papers - fixed;
    let background = (0..n_background)
        .map(|i| add(&mut b, format!("bg{i}"), rng.random_range(1960..=2015)))
        .collect::<Result<Vec<_>>>()?;

    for (anchor, ms) in &groups {
        for &m in ms {
            b.add_edge(m, *anchor);
            for &c in &citers {
                b.add_edge(c, m);
            }
        }
    }
    if n_background > 1 {
        for &s in &background {
            for _ in 0..rng.random_range(0..=4) {
                let t = background[rng.random_range(0..n_background)];
                b.add_edge(s, t);
            }
        }
    }
    let graph = b.build();

    let mut histogram = BTreeMap::new();
    for &s in &sizes {
        *histogram.entry(s).or_insert(0) += 1;
    }
    let pools = groups
        .iter()
        .take(cfg.n_pools)
        .map(|(a, ms)| {
            (
                graph.external_id(*a).to_string(),
                ms.iter().map(|&m| graph.external_id(m).to_string()).collect(),
            )
        })
        .collect();
    Ok(PlantedCorpus { graph, pools, histogram })
}
