#![allow(dead_code)]

use kgnotable::graph::{KnowledgeGraph, LoadOptions};
use kgnotable::{NodeId, Query};

pub fn load(tsv: &str) -> KnowledgeGraph {
    KnowledgeGraph::load_tsv(tsv.as_bytes(), &LoadOptions::default()).expect("fixture loads")
}

pub fn query(g: &KnowledgeGraph, names: &[&str]) -> Query {
    Query::new(g, names.iter().map(|n| g.node_by_name(n).unwrap_or_else(|| panic!("no node {n}")))).unwrap()
}

pub fn ids(g: &KnowledgeGraph, names: &[&str]) -> Vec<NodeId> {
    names.iter().map(|n| g.node_by_name(n).unwrap()).collect()
}

pub fn names(g: &KnowledgeGraph, nodes: &[NodeId]) -> Vec<String> {
    nodes.iter().map(|&n| g.node_name(n).to_string()).collect()
}

pub const LEADERS: [&str; 5] = ["Angela Merkel", "Barack Obama", "Vladimir Putin", "Matteo Renzi", "François Hollande"];

/// Five heads of government with the countries they lead, what they studied
/// and their children. Merkel has no child and is the only physicist.
pub fn figure_one_tsv() -> String {
    let mut out = String::from("# heads of government\n");
    let countries = ["Germany", "United States", "Russia", "Italy", "France"];
    for (l, c) in LEADERS.iter().zip(countries) {
        out += &format!("{l}\tleaderOf\t{c}\n");
    }
    out += "Angela Merkel\tstudied\tPhysics\n";
    for l in &LEADERS[1..] {
        out += &format!("{l}\tstudied\tLaw\n");
    }
    for (p, c) in [
        ("Barack Obama", "Malia Obama"),
        ("Barack Obama", "Sasha Obama"),
        ("Vladimir Putin", "Maria Vorontsova"),
        ("Vladimir Putin", "Katerina Tikhonova"),
        ("Matteo Renzi", "Francesco Renzi"),
        ("François Hollande", "Thomas Hollande"),
    ] {
        out += &format!("{p}\tchild\t{c}\n");
    }
    out
}

/// Authors who share influences with a pair of humorous fantasy writers,
/// plus unrelated authors. Every author created distinct works.
pub fn authors_tsv() -> String {
    let mut out = String::new();
    let mut add = |s: &str, p: &str, o: &str| out += &format!("{s}\t{p}\t{o}\n");
    let q = ["Douglas Adams", "Terry Pratchett"];
    let humor = ["P. G. Wodehouse", "Kurt Vonnegut", "Lewis Carroll"];
    for a in q {
        for h in humor {
            add(a, "influences", h);
        }
        add(a, "genre", "Comic fantasy");
    }
    for i in 0..30 {
        let a = format!("Author {i}");
        add(&a, "influences", "Charles Dickens");
        if i % 3 == 0 {
            add(&a, "influences", "Leo Tolstoy");
        }
        add(&a, "genre", if i % 2 == 0 { "Comic fantasy" } else { "Satire" });
        for w in 0..(1 + i % 3) {
            add(&a, "created", &format!("Work {i}.{w}"));
        }
    }
    for w in 0..2 {
        add("Douglas Adams", "created", &format!("Adams work {w}"));
        add("Terry Pratchett", "created", &format!("Pratchett work {w}"));
    }
    out
}

/// Sum of Pr(y) over all outcomes with Pr(y) ≤ Pr(x), by plain enumeration
/// with linear-space probabilities.
pub fn brute_force_significance(pi: &[f64], x: &[u64]) -> f64 {
    let n: u64 = x.iter().sum();
    let target = point_probability(pi, x);
    let mut total = 0.0;
    let mut y = vec![0u64; pi.len()];
    enumerate(&mut y, 0, n, &mut |y| {
        let p = point_probability(pi, y);
        if p <= target * (1.0 + 1e-9) {
            total += p;
        }
    });
    total
}

pub fn point_probability(pi: &[f64], x: &[u64]) -> f64 {
    let n: u64 = x.iter().sum();
    let mut p = factorial(n);
    for (&q, &k) in pi.iter().zip(x) {
        if k > 0 {
            p *= q.powi(k as i32) / factorial(k);
        }
    }
    p
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn enumerate(y: &mut Vec<u64>, i: usize, left: u64, f: &mut dyn FnMut(&[u64])) {
    if i + 1 == y.len() {
        y[i] = left;
        f(y);
        return;
    }
    for v in 0..=left {
        y[i] = v;
        enumerate(y, i + 1, left - v, f);
    }
}

/// Personalized PageRank by dense matrix-vector products over a triple list
/// whose reverse edges the caller spells out.
pub fn dense_pagerank(triples: &[(&str, &str, &str)], seed: &str, c: f64, iterations: usize) -> Vec<(String, f64)> {
    let mut nodes: Vec<String> = Vec::new();
    let idx = |s: &str, nodes: &mut Vec<String>| match nodes.iter().position(|n| n == s) {
        Some(i) => i,
        None => {
            nodes.push(s.to_string());
            nodes.len() - 1
        }
    };
    let edges: Vec<(usize, usize, &str)> = triples
        .iter()
        .map(|&(s, p, o)| (idx(s, &mut nodes), idx(o, &mut nodes), p))
        .collect();
    let n = nodes.len();
    let total = edges.len() as f64;
    let weight = |label: &str| 1.0 - edges.iter().filter(|e| e.2 == label).count() as f64 / total;
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v, l) in &edges {
        a[u][v] += weight(l);
    }
    let s = nodes.iter().position(|x| x == seed).unwrap();
    let mut p = vec![0.0; n];
    p[s] = 1.0;
    for _ in 0..iterations {
        let mut next = vec![0.0; n];
        let mut dangling = 0.0;
        for u in 0..n {
            let row: f64 = a[u].iter().sum();
            if row == 0.0 {
                dangling += p[u];
                continue;
            }
            for v in 0..n {
                next[v] += c * a[u][v] / row * p[u];
            }
        }
        next[s] += 1.0 - c + c * dangling;
        p = next;
    }
    nodes.into_iter().zip(p).collect()
}

/// Standard error of a Monte Carlo p-value estimate.
pub fn mc_standard_error(p: f64, samples: u64) -> f64 {
    (p * (1.0 - p) / samples as f64).sqrt()
}
