//! Multiple-discovery pools: qualifying papers grouped by their shared
//! most-cited reference (the anchor).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CitationGraph, NodeId};
use crate::displacement::{DisplacementReport, Variant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolCriteria {
    pub min_citations: u64,
    /// Strict lower bound on the chosen variant.
    pub min_d: f64,
    pub variant: Variant,
    pub min_pool_size: usize,
}

impl Default for PoolCriteria {
    fn default() -> Self {
        PoolCriteria {
            min_citations: 100,
            min_d: 0.2,
            variant: Variant::D0,
            min_pool_size: 2,
        }
    }
}

impl PoolCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.min_d) {
            return Err(Error::InvalidInput(format!("min_d = {} outside [-1, 1]", self.min_d)));
        }
        if self.min_pool_size < 1 {
            return Err(Error::InvalidInput("min_pool_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn qualifies(&self, r: &DisplacementReport) -> bool {
        r.c_f >= self.min_citations && r.variant(self.variant).is_some_and(|d| d > self.min_d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplePool {
    pub anchor: String,
    /// Members in ascending internal id.
    pub members: Vec<String>,
    pub size: usize,
    pub span_years: (i32, i32),
}

/// Groups qualifying reports by `top_reference`.
///
/// Pools are ordered by size (largest first), then by the anchor's
/// internal id.
pub fn find_pools(
    graph: &CitationGraph,
    reports: &[DisplacementReport],
    criteria: &PoolCriteria,
) -> Result<Vec<MultiplePool>> {
    criteria.validate()?;
    let keyed: Vec<(NodeId, NodeId, i32)> = reports
        .par_iter()
        .filter(|r| criteria.qualifies(r))
        .map(|r| {
            let anchor = graph
                .node(&r.top_reference)
                .ok_or_else(|| Error::UnknownId(r.top_reference.clone()))?;
            let focal = graph.node(&r.focal).ok_or_else(|| Error::UnknownId(r.focal.clone()))?;
            Ok((anchor, focal, r.year))
        })
        .collect::<Result<_>>()?;

    let mut groups: BTreeMap<NodeId, Vec<(NodeId, i32)>> = BTreeMap::new();
    for (anchor, focal, year) in keyed {
        groups.entry(anchor).or_default().push((focal, year));
    }
    let mut pools: Vec<(NodeId, MultiplePool)> = groups
        .into_iter()
        .filter(|(_, m)| m.len() >= criteria.min_pool_size)
        .map(|(anchor, mut members)| {
            members.sort_unstable();
            members.dedup_by_key(|m| m.0);
            let lo = members.iter().map(|m| m.1).min().unwrap_or_default();
            let hi = members.iter().map(|m| m.1).max().unwrap_or_default();
            let pool = MultiplePool {
                anchor: graph.external_id(anchor).to_string(),
                size: members.len(),
                members: members.iter().map(|m| graph.external_id(m.0).to_string()).collect(),
                span_years: (lo, hi),
            };
            (anchor, pool)
        })
        .collect();
    pools.sort_by(|a, b| b.1.size.cmp(&a.1.size).then(a.0.cmp(&b.0)));
    Ok(pools.into_iter().map(|p| p.1).collect())
}

/// Number of qualifying reports, whether or not they end up in a retained pool.
pub fn qualifying_count(reports: &[DisplacementReport], criteria: &PoolCriteria) -> usize {
    reports.par_iter().filter(|r| criteria.qualifies(r)).count()
}

/// size → number of pools of that size.
pub fn pool_size_histogram(pools: &[MultiplePool]) -> BTreeMap<u64, u64> {
    let mut h = BTreeMap::new();
    for p in pools {
        *h.entry(p.size as u64).or_insert(0) += 1;
    }
    h
}

/// Pool sizes as samples for the distribution fits.
pub fn pool_sizes(pools: &[MultiplePool]) -> Vec<u64> {
    pools.iter().map(|p| p.size as u64).collect()
}
