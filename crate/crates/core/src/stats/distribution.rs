//! Per-label instance and cardinality histograms over a query and a context.

use std::collections::BTreeMap;

use super::StatsError;
use crate::graph::{KnowledgeGraph, LabelId, NodeId};

/// Histogram over the terminal nodes of `l`-edges. The first support entry is
/// always `None`, counting set members without any `l`-edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceDistribution {
    pub support: Vec<Option<NodeId>>,
    pub query_counts: Vec<u64>,
    pub context_counts: Vec<u64>,
}

/// Histogram over how many `l`-edges each set member has; bucket `i` holds
/// the members with exactly `i` such edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardinalityDistribution {
    pub support: Vec<u64>,
    pub query_counts: Vec<u64>,
    pub context_counts: Vec<u64>,
}

fn check_incident(graph: &KnowledgeGraph, label: LabelId, query: &[NodeId], context: &[NodeId]) -> Result<(), StatsError> {
    let incident = query
        .iter()
        .chain(context)
        .any(|&n| graph.out_edges(n).iter().any(|e| e.label == label));
    if incident {
        Ok(())
    } else {
        Err(StatsError::LabelNotIncident(label))
    }
}

fn degree(graph: &KnowledgeGraph, node: NodeId, label: LabelId) -> u64 {
    graph.out_edges(node).iter().filter(|e| e.label == label).count() as u64
}

pub fn build_instance_distribution(
    graph: &KnowledgeGraph,
    label: LabelId,
    query: &[NodeId],
    context: &[NodeId],
) -> Result<InstanceDistribution, StatsError> {
    check_incident(graph, label, query, context)?;

    let tally = |nodes: &[NodeId]| -> (u64, BTreeMap<NodeId, u64>) {
        let mut none = 0;
        let mut targets = BTreeMap::new();
        for &n in nodes {
            let mut any = false;
            for e in graph.out_edges(n).iter().filter(|e| e.label == label) {
                *targets.entry(e.target).or_insert(0) += 1;
                any = true;
            }
            if !any {
                none += 1;
            }
        }
        (none, targets)
    };
    let (q_none, q_targets) = tally(query);
    let (c_none, c_targets) = tally(context);

    let mut support: Vec<Option<NodeId>> = vec![None];
    let mut keys: Vec<NodeId> = q_targets.keys().chain(c_targets.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    support.extend(keys.iter().map(|&k| Some(k)));

    let counts = |none: u64, targets: &BTreeMap<NodeId, u64>| -> Vec<u64> {
        std::iter::once(none)
            .chain(keys.iter().map(|k| targets.get(k).copied().unwrap_or(0)))
            .collect()
    };
    Ok(InstanceDistribution {
        query_counts: counts(q_none, &q_targets),
        context_counts: counts(c_none, &c_targets),
        support,
    })
}

pub fn build_cardinality_distribution(
    graph: &KnowledgeGraph,
    label: LabelId,
    query: &[NodeId],
    context: &[NodeId],
) -> Result<CardinalityDistribution, StatsError> {
    check_incident(graph, label, query, context)?;
    let q: Vec<u64> = query.iter().map(|&n| degree(graph, n, label)).collect();
    let c: Vec<u64> = context.iter().map(|&n| degree(graph, n, label)).collect();
    let max = q.iter().chain(&c).copied().max().unwrap_or(0);
    let histogram = |degrees: &[u64]| -> Vec<u64> {
        let mut h = vec![0u64; max as usize + 1];
        for &d in degrees {
            h[d as usize] += 1;
        }
        h
    };
    Ok(CardinalityDistribution {
        support: (0..=max).collect(),
        query_counts: histogram(&q),
        context_counts: histogram(&c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LoadOptions;

    fn figure_one() -> KnowledgeGraph {
        let tsv = "Merkel\tstudied\tPhysics\n\
                   Obama\tstudied\tLaw\n\
                   Putin\tstudied\tLaw\n\
                   Renzi\tstudied\tLaw\n\
                   Hollande\tstudied\tLaw\n\
                   Obama\tchild\tMalia\n\
                   Obama\tchild\tSasha\n\
                   Putin\tchild\tMaria\n\
                   Putin\tchild\tKaterina\n\
                   Renzi\tchild\tFrancesco\n\
                   Hollande\tchild\tThomas\n\
                   Hollande\tchild\tClemence\n\
                   Hollande\tchild\tJulien\n";
        KnowledgeGraph::load_tsv(tsv.as_bytes(), &LoadOptions::default()).unwrap()
    }

    fn ids(g: &KnowledgeGraph, names: &[&str]) -> Vec<NodeId> {
        names.iter().map(|n| g.node_by_name(n).unwrap()).collect()
    }

    #[test]
    fn studied_instance_distribution() {
        let g = figure_one();
        let q = ids(&g, &["Merkel", "Obama"]);
        let c = ids(&g, &["Putin", "Renzi", "Hollande"]);
        let d = build_instance_distribution(&g, g.label_by_name("studied").unwrap(), &q, &c).unwrap();
        let support: Vec<Option<&str>> = d.support.iter().map(|s| s.map(|n| g.node_name(n))).collect();
        assert_eq!(support, vec![None, Some("Physics"), Some("Law")]);
        assert_eq!(d.query_counts, vec![0, 1, 1]);
        assert_eq!(d.context_counts, vec![0, 0, 3]);
    }

    #[test]
    fn child_cardinality_has_zero_bucket() {
        let g = figure_one();
        let q = ids(&g, &["Merkel", "Obama"]);
        let c = ids(&g, &["Putin", "Renzi", "Hollande"]);
        let d = build_cardinality_distribution(&g, g.label_by_name("child").unwrap(), &q, &c).unwrap();
        assert_eq!(d.support, vec![0, 1, 2, 3]);
        assert_eq!(d.query_counts, vec![1, 0, 1, 0]);
        assert_eq!(d.context_counts, vec![0, 1, 1, 1]);
        assert_eq!(d.query_counts.iter().sum::<u64>(), 2);
        assert_eq!(d.context_counts.iter().sum::<u64>(), 3);
    }

    #[test]
    fn none_bucket_counts_missing_label() {
        // 100 context nodes, 43 without `created`.
        let mut tsv = String::new();
        for i in 0..57 {
            tsv.push_str(&format!("actor{i}\tcreated\twork{i}\n"));
        }
        for i in 57..100 {
            tsv.push_str(&format!("actor{i}\tactedIn\tmovie{i}\n"));
        }
        tsv.push_str("q\tcreated\tqwork\n");
        let g = KnowledgeGraph::load_tsv(tsv.as_bytes(), &LoadOptions::default()).unwrap();
        let c: Vec<NodeId> = (0..100).map(|i| g.node_by_name(&format!("actor{i}")).unwrap()).collect();
        let q = ids(&g, &["q"]);
        let d = build_instance_distribution(&g, g.label_by_name("created").unwrap(), &q, &c).unwrap();
        assert_eq!(d.support[0], None);
        assert_eq!(d.context_counts[0], 43);
        assert_eq!(d.query_counts[0], 0);
    }

    #[test]
    fn parallel_edges_land_in_higher_bucket() {
        let g = KnowledgeGraph::load_tsv(
            "a\tp\tx\na\tp\tx\na\tp\ty\nb\tp\tx\n".as_bytes(),
            &LoadOptions::default(),
        )
        .unwrap();
        let p = g.label_by_name("p").unwrap();
        let d = build_cardinality_distribution(&g, p, &ids(&g, &["a"]), &ids(&g, &["b"])).unwrap();
        assert_eq!(d.query_counts, vec![0, 0, 0, 1]);
        assert_eq!(d.context_counts, vec![0, 1, 0, 0]);
        let i = build_instance_distribution(&g, p, &ids(&g, &["a"]), &ids(&g, &["b"])).unwrap();
        assert_eq!(i.query_counts, vec![0, 2, 1]);
    }

    #[test]
    fn uniform_single_edges_concentrate_in_bucket_one() {
        let g = KnowledgeGraph::load_tsv("a\tp\tx\nb\tp\ty\nc\tp\tz\n".as_bytes(), &LoadOptions::default()).unwrap();
        let p = g.label_by_name("p").unwrap();
        let d = build_cardinality_distribution(&g, p, &ids(&g, &["a"]), &ids(&g, &["b", "c"])).unwrap();
        assert_eq!(d.query_counts, vec![0, 1]);
        assert_eq!(d.context_counts, vec![0, 2]);
    }

    #[test]
    fn absent_label_is_rejected() {
        let g = figure_one();
        let child = g.label_by_name("child").unwrap();
        let q = ids(&g, &["Physics"]);
        let c = ids(&g, &["Law"]);
        assert!(matches!(
            build_instance_distribution(&g, child, &q, &c),
            Err(StatsError::LabelNotIncident(_))
        ));
        assert!(build_cardinality_distribution(&g, child, &q, &c).is_err());
    }
}
