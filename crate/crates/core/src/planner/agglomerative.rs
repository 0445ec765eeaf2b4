use super::{check_ids, ExecutionPlan, Linkage, NodeRef, PlanError, Strategy};
use crate::text::SimilarityMatrix;

struct Cluster {
    node: NodeRef,
    leaves: Vec<usize>,
    /// Smallest leaf id; names the cluster for tie-breaking.
    key: String,
}

fn linkage_distance(m: &SimilarityMatrix, a: &Cluster, b: &Cluster, linkage: Linkage) -> f64 {
    let cross = a.leaves.iter().flat_map(|&i| b.leaves.iter().map(move |&j| m.distance(i, j)));
    match linkage {
        Linkage::Single => cross.fold(f64::INFINITY, f64::min),
        Linkage::Complete => cross.fold(f64::NEG_INFINITY, f64::max),
        Linkage::Average => {
            let n = (a.leaves.len() * b.leaves.len()) as f64;
            cross.sum::<f64>() / n
        }
    }
}

/// Agglomerative clustering over leaf distances (1 - cosine); each merge in
/// the dendrogram becomes one task. Ties go to the pair with the
/// lexicographically smallest cluster names, a cluster being named after its
/// smallest source id.
pub fn plan_im_similarity(similarity: &SimilarityMatrix, linkage: Linkage) -> Result<ExecutionPlan, PlanError> {
    let ids = similarity.ids();
    check_ids(ids)?;
    let mut clusters: Vec<Cluster> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| Cluster { node: NodeRef::leaf(id), leaves: vec![i], key: id.clone() })
        .collect();
    let mut pairs = Vec::with_capacity(ids.len() - 1);
    while clusters.len() > 1 {
        let mut best: Option<(f64, &str, &str, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let (x, y) = if clusters[a].key < clusters[b].key { (a, b) } else { (b, a) };
                let d = linkage_distance(similarity, &clusters[x], &clusters[y], linkage);
                let candidate = (d, clusters[x].key.as_str(), clusters[y].key.as_str(), x, y);
                let better = match &best {
                    None => true,
                    Some(cur) => d.total_cmp(&cur.0).then_with(|| (candidate.1, candidate.2).cmp(&(cur.1, cur.2))).is_lt(),
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        let (_, _, _, x, y) = best.expect("at least two clusters");
        let task = pairs.len();
        let (hi, lo) = if x > y { (x, y) } else { (y, x) };
        let second = clusters.remove(hi);
        let first = clusters.remove(lo);
        let (source, target) = if x < y { (first, second) } else { (second, first) };
        pairs.push((source.node.clone(), target.node.clone()));
        let mut leaves = source.leaves;
        leaves.extend(target.leaves);
        clusters.push(Cluster { node: NodeRef::Union(task), leaves, key: source.key.min(target.key) });
    }
    Ok(ExecutionPlan::new(Strategy::ImSim, pairs))
}
