//! Evaluation protocols: class-normalized accuracy, flat hit@K,
//! hierarchical precision@K and hop-distance test subsets.
//!
//! Hierarchy nodes share the [`ClassId`] space with class labels; callers
//! that load string ids are expected to intern both into one sorted
//! universe so that id order matches name order.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{ExemError, Result};
use crate::exemplar::ClassId;

pub fn top1_accuracy(preds: &[ClassId], truth: &[ClassId]) -> Result<f64> {
    check_lengths(preds.len(), truth.len())?;
    let correct = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truth.len() as f64)
}

/// Mean over classes of the within-class accuracy.
pub fn per_class_accuracy(preds: &[ClassId], truth: &[ClassId]) -> Result<f64> {
    check_lengths(preds.len(), truth.len())?;
    let mut per_class: BTreeMap<ClassId, (usize, usize)> = BTreeMap::new();
    for (p, t) in preds.iter().zip(truth) {
        let e = per_class.entry(*t).or_default();
        e.1 += 1;
        if p == t {
            e.0 += 1;
        }
    }
    let sum: f64 = per_class.values().map(|(c, n)| *c as f64 / *n as f64).sum();
    Ok(sum / per_class.len() as f64)
}

fn check_lengths(preds: usize, truth: usize) -> Result<()> {
    if preds != truth {
        return Err(ExemError::dim("predictions vs truth", truth, preds));
    }
    if truth == 0 {
        return Err(ExemError::domain("no test samples"));
    }
    Ok(())
}

fn check_ranked(ranked: &[Vec<ClassId>], truth: &[ClassId], k: usize) -> Result<()> {
    check_lengths(ranked.len(), truth.len())?;
    if k == 0 {
        return Err(ExemError::domain("k must be at least 1"));
    }
    if let Some(i) = ranked.iter().position(|r| r.len() < k) {
        return Err(ExemError::domain(format!(
            "ranked list of sample {i} has {} entries, fewer than k = {k}",
            ranked[i].len()
        )));
    }
    Ok(())
}

/// Fraction of samples whose true class is among the first `k` predictions.
pub fn flat_hit_at_k(ranked: &[Vec<ClassId>], truth: &[ClassId], k: usize) -> Result<f64> {
    check_ranked(ranked, truth, k)?;
    let hits = ranked
        .iter()
        .zip(truth)
        .filter(|(r, t)| r[..k].contains(t))
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Undirected class taxonomy. Edges are stored child → parent; a node may
/// have several parents.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyGraph {
    adjacency: Vec<Vec<ClassId>>,
    edges: Vec<(ClassId, ClassId)>,
}

impl HierarchyGraph {
    pub fn new(num_nodes: usize, edges: Vec<(ClassId, ClassId)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(child, parent) in &edges {
            if child == parent {
                return Err(ExemError::domain(format!("self-loop on node {child}")));
            }
            for node in [child, parent] {
                if node as usize >= num_nodes {
                    return Err(ExemError::domain(format!(
                        "edge endpoint {node} is not a declared node (have {num_nodes})"
                    )));
                }
            }
            adjacency[child as usize].push(parent);
            adjacency[parent as usize].push(child);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(HierarchyGraph { adjacency, edges })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[(ClassId, ClassId)] {
        &self.edges
    }

    fn check_node(&self, node: ClassId) -> Result<()> {
        if node as usize >= self.num_nodes() {
            return Err(ExemError::domain(format!("class {node} is not in the hierarchy")));
        }
        Ok(())
    }

    /// Hop distance from the nearest of `sources` to every node (multi-source BFS).
    pub fn hop_distances(&self, sources: &[ClassId]) -> Result<Vec<Option<u32>>> {
        let mut dist = vec![None; self.num_nodes()];
        let mut queue = VecDeque::new();
        for &s in sources {
            self.check_node(s)?;
            if dist[s as usize].is_none() {
                dist[s as usize] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize].unwrap();
            for &v in &self.adjacency[u as usize] {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }
}

/// The `k` candidates closest to `class` in hop distance (the class itself
/// at distance 0 when it is a candidate), ties by ascending id. Unreachable
/// candidates fill any remaining slots in id order.
pub fn ground_truth_list(
    h: &HierarchyGraph,
    class: ClassId,
    k: usize,
    candidates: &[ClassId],
) -> Result<Vec<ClassId>> {
    let dist = h.hop_distances(&[class])?;
    let mut ranked: Vec<(u32, ClassId)> = candidates
        .iter()
        .map(|&c| {
            h.check_node(c)?;
            Ok((dist[c as usize].unwrap_or(u32::MAX), c))
        })
        .collect::<Result<_>>()?;
    ranked.sort_unstable();
    ranked.dedup();
    Ok(ranked.into_iter().take(k).map(|(_, c)| c).collect())
}

/// Precomputed ground-truth lists keyed by `(class, k)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthLists {
    lists: HashMap<(ClassId, usize), Vec<ClassId>>,
}

impl GroundTruthLists {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, class: ClassId, k: usize, list: Vec<ClassId>) {
        self.lists.insert((class, k), list);
    }

    pub fn get(&self, class: ClassId, k: usize) -> Option<&[ClassId]> {
        self.lists.get(&(class, k)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(ClassId, usize), &Vec<ClassId>)> {
        self.lists.iter()
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }
}

/// Where hierarchical precision takes its ground-truth lists from.
#[derive(Debug, Clone, Copy)]
pub enum GroundTruth<'a> {
    Hierarchy {
        graph: &'a HierarchyGraph,
        candidates: &'a [ClassId],
    },
    Lists(&'a GroundTruthLists),
}

impl GroundTruth<'_> {
    pub fn list(&self, class: ClassId, k: usize) -> Result<Vec<ClassId>> {
        match self {
            GroundTruth::Hierarchy { graph, candidates } => ground_truth_list(graph, class, k, candidates),
            GroundTruth::Lists(lists) => lists.get(class, k).map(<[ClassId]>::to_vec).ok_or_else(|| {
                ExemError::domain(format!("no precomputed ground-truth list for class {class}, k = {k}"))
            }),
        }
    }
}

/// Mean over samples of `|top-k ∩ ground_truth(truth, k)| / k`.
pub fn hierarchical_precision_at_k(
    ranked: &[Vec<ClassId>],
    truth: &[ClassId],
    k: usize,
    gt: &GroundTruth<'_>,
) -> Result<f64> {
    check_ranked(ranked, truth, k)?;
    let mut cache: HashMap<ClassId, BTreeSet<ClassId>> = HashMap::new();
    let mut total = 0.0;
    for (r, &t) in ranked.iter().zip(truth) {
        let list = match cache.entry(t) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(gt.list(t, k)?.into_iter().collect()),
        };
        let mut top: Vec<ClassId> = r[..k].to_vec();
        top.sort_unstable();
        top.dedup();
        let overlap = top.iter().filter(|c| list.contains(c)).count();
        total += overlap as f64 / k as f64;
    }
    Ok(total / truth.len() as f64)
}

/// Candidates within `max_hops` of any seen class, ascending.
pub fn hop_subset(
    h: &HierarchyGraph,
    seen: &[ClassId],
    candidates: &[ClassId],
    max_hops: u32,
) -> Result<Vec<ClassId>> {
    let dist = h.hop_distances(seen)?;
    let mut out = BTreeSet::new();
    for &c in candidates {
        h.check_node(c)?;
        if matches!(dist[c as usize], Some(d) if d <= max_hops) {
            out.insert(c);
        }
    }
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class_accuracy: f64,
    /// Unnormalized per-sample top-1 accuracy; equals `flat_hit[1]`.
    pub top1_accuracy: f64,
    pub flat_hit: BTreeMap<usize, f64>,
    pub hier_precision: BTreeMap<usize, f64>,
    pub num_samples: usize,
    pub num_classes: usize,
}

impl EvalReport {
    /// Computes every metric from ranked predictions. `ks` values larger
    /// than the ranked list length are skipped.
    pub fn compute(ranked: &[Vec<ClassId>], truth: &[ClassId], ks: &[usize], gt: Option<&GroundTruth<'_>>) -> Result<Self> {
        let top1: Vec<ClassId> = ranked
            .iter()
            .map(|r| r.first().copied().ok_or_else(|| ExemError::domain("empty ranked list")))
            .collect::<Result<_>>()?;
        let width = ranked.iter().map(Vec::len).min().unwrap_or(0);
        let mut flat_hit = BTreeMap::new();
        let mut hier_precision = BTreeMap::new();
        for &k in ks.iter().filter(|k| **k >= 1 && **k <= width) {
            flat_hit.insert(k, flat_hit_at_k(ranked, truth, k)?);
            if let Some(gt) = gt {
                hier_precision.insert(k, hierarchical_precision_at_k(ranked, truth, k, gt)?);
            }
        }
        Ok(EvalReport {
            per_class_accuracy: per_class_accuracy(&top1, truth)?,
            top1_accuracy: top1_accuracy(&top1, truth)?,
            flat_hit,
            hier_precision,
            num_samples: truth.len(),
            num_classes: truth.iter().collect::<BTreeSet<_>>().len(),
        })
    }

    /// Copy with every metric rounded to 4 decimal places, for reporting.
    pub fn rounded(&self) -> EvalReport {
        let r = |x: f64| (x * 1e4).round() / 1e4;
        EvalReport {
            per_class_accuracy: r(self.per_class_accuracy),
            top1_accuracy: r(self.top1_accuracy),
            flat_hit: self.flat_hit.iter().map(|(k, v)| (*k, r(*v))).collect(),
            hier_precision: self.hier_precision.iter().map(|(k, v)| (*k, r(*v))).collect(),
            ..self.clone()
        }
    }
}
