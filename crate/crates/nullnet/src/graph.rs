//! Simple undirected graphs: edge-list parsing, degree and sparsity statistics.
//!
//! Graphs are immutable after construction. Node labels are arbitrary strings
//! mapped to dense indices in first-appearance order, so parsing the same file
//! twice yields identical index assignments. Degrees and the total degree are
//! kept in integer arithmetic; floating point enters only inside statistics.

use std::collections::HashMap;
use std::io::BufRead;

use crate::certificate::eps_bar0;
use crate::error::{Error, Result};

/// An immutable simple undirected graph.
///
/// Invariants: adjacency is symmetric, the diagonal is empty, neighbor lists
/// are sorted, `degrees[i] == adj[i].len()`, and `total_degree` is twice the
/// edge count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    labels: Vec<String>,
    adj: Vec<Vec<u32>>,
    degrees: Vec<u32>,
    total_degree: u64,
}

impl Graph {
    /// Build a graph from explicit labels and index pairs.
    ///
    /// Duplicate edges collapse to one; a pair `(i, i)` is a `SelfLoop` error
    /// (reported with a 1-based position in `edges`). Zero edges are allowed,
    /// so sampled graphs may carry isolated nodes.
    pub fn from_edges<S: Into<String>>(labels: Vec<S>, edges: &[(u32, u32)]) -> Result<Graph> {
        let n = labels.len();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (pos, &(a, b)) in edges.iter().enumerate() {
            if a == b {
                return Err(Error::SelfLoop { line: pos + 1 });
            }
            assert!((a as usize) < n && (b as usize) < n, "edge index out of range");
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let degrees: Vec<u32> = adj.iter().map(|l| l.len() as u32).collect();
        let total_degree = degrees.iter().map(|&d| d as u64).sum();
        Ok(Graph {
            labels: labels.into_iter().map(Into::into).collect(),
            adj,
            degrees,
            total_degree,
        })
    }

    /// Parse an edge-list text stream: one edge per line, two whitespace-separated
    /// node tokens; lines starting with `#` or `%` and blank lines are ignored.
    ///
    /// Node labels map to dense indices in first-appearance order. Duplicate
    /// edges collapse silently; self-loops and token counts other than two are
    /// hard errors carrying the 1-based line number. A stream with no edges is
    /// an `EmptyGraph` error.
    pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut edges: Vec<(u32, u32)> = Vec::new();
        let mut intern = |tok: &str, labels: &mut Vec<String>| -> u32 {
            if let Some(&i) = index.get(tok) {
                return i;
            }
            let i = labels.len() as u32;
            index.insert(tok.to_string(), i);
            labels.push(tok.to_string());
            i
        };
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
                continue;
            }
            let mut toks = trimmed.split_whitespace();
            let (a, b) = match (toks.next(), toks.next(), toks.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(Error::MalformedLine { line: lineno + 1 }),
            };
            if a == b {
                return Err(Error::SelfLoop { line: lineno + 1 });
            }
            let ia = intern(a, &mut labels);
            let ib = intern(b, &mut labels);
            edges.push((ia, ib));
        }
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Graph::from_edges(labels, &edges)
    }

    /// Parse an edge list held in a string.
    pub fn parse_edge_list_str(text: &str) -> Result<Graph> {
        Graph::parse_edge_list(text.as_bytes())
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Degree of node `i`.
    pub fn degree(&self, i: usize) -> u32 {
        self.degrees[i]
    }

    /// All node degrees, indexed by node.
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Sum of all degrees (twice the edge count).
    pub fn total_degree(&self) -> u64 {
        self.total_degree
    }

    /// Number of edges.
    pub fn edge_count(&self) -> u64 {
        self.total_degree / 2
    }

    pub fn min_degree(&self) -> u32 {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Sorted neighbor indices of node `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adj[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&(j as u32)).is_ok()
    }

    /// Original label of node `i`.
    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Edges as `(i, j)` with `i < j`, ascending lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, list)| {
            let i = i as u32;
            list.iter().copied().filter(move |&j| i < j).map(move |j| (i, j))
        })
    }

    /// Write the graph back out as an edge list (one `label label` line per
    /// edge, `i < j` order). Isolated nodes do not survive a round trip.
    pub fn write_edge_list<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (i, j) in self.edges() {
            writeln!(w, "{} {}", self.labels[i as usize], self.labels[j as usize])?;
        }
        Ok(())
    }

    /// Drop all degree-zero nodes, returning the induced subgraph and the
    /// removed labels. Identity (modulo clone) when no node is isolated;
    /// `EmptyGraph` if every node is isolated.
    pub fn strip_isolated(&self) -> Result<(Graph, Vec<String>)> {
        let keep: Vec<usize> = (0..self.n()).filter(|&i| self.degrees[i] > 0).collect();
        if keep.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let removed: Vec<String> = (0..self.n())
            .filter(|&i| self.degrees[i] == 0)
            .map(|i| self.labels[i].clone())
            .collect();
        let mut remap = vec![u32::MAX; self.n()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new as u32;
        }
        let labels: Vec<String> = keep.iter().map(|&i| self.labels[i].clone()).collect();
        let mut edges = Vec::with_capacity(self.edge_count() as usize);
        for (i, j) in self.edges() {
            edges.push((remap[i as usize], remap[j as usize]));
        }
        let g = Graph::from_edges(labels, &edges)?;
        Ok((g, removed))
    }

    /// Degree-based sparsity statistics. Requires at least one edge.
    pub fn sparsity_stats(&self) -> Result<SparsityStats> {
        if self.total_degree == 0 {
            return Err(Error::EmptyGraph);
        }
        let total = self.total_degree as f64;
        let per_node_eps: Vec<f64> = self
            .degrees
            .iter()
            .map(|&d| (d as u64 * d as u64) as f64 / total)
            .collect();
        let eps0 = per_node_eps.iter().copied().fold(0.0, f64::max);
        Ok(SparsityStats {
            eps0,
            per_node_eps,
            min_degree: self.min_degree(),
            degrees: self.degrees.clone(),
            total_degree: self.total_degree,
        })
    }
}

/// Per-node and worst-case sparsity statistics of a graph.
///
/// `eps0` is the largest squared degree divided by the total degree; each
/// `per_node_eps[i]` is the same ratio for node `i`. Numerators are formed in
/// integer arithmetic before the single division.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityStats {
    pub eps0: f64,
    pub per_node_eps: Vec<f64>,
    pub min_degree: u32,
    degrees: Vec<u32>,
    total_degree: u64,
}

impl SparsityStats {
    /// Fraction of nodes whose sparsity ratio is at or below the threshold
    /// for sub-exponential constant `c0`.
    ///
    /// The comparison multiplies through by the total degree so no rounding
    /// from the division can flip a borderline node.
    pub fn valid_fraction(&self, c0: f64) -> f64 {
        let bar = eps_bar0(c0);
        let total = self.total_degree as f64;
        let valid = self
            .degrees
            .iter()
            .filter(|&&d| (d as u64 * d as u64) as f64 <= bar * total)
            .count();
        valid as f64 / self.degrees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Graph {
        Graph::parse_edge_list_str("a b\nb c").unwrap()
    }

    #[test]
    fn parse_two_edge_path() {
        let g = p3();
        assert_eq!(g.n(), 3);
        assert_eq!(g.degrees(), &[1, 2, 1]);
        assert_eq!(g.total_degree(), 4);
        assert_eq!(g.label(0), "a");
        assert_eq!(g.label(1), "b");
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = Graph::parse_edge_list_str("a b\nb a\na b").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.degrees(), &[1, 1]);
        assert_eq!(g.total_degree(), 2);
    }

    #[test]
    fn self_loop_is_an_error() {
        match Graph::parse_edge_list_str("a a") {
            Err(Error::SelfLoop { line: 1 }) => {}
            other => panic!("expected SelfLoop on line 1, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_position() {
        match Graph::parse_edge_list_str("a b\nx y z") {
            Err(Error::MalformedLine { line: 2 }) => {}
            other => panic!("expected MalformedLine on line 2, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let g = Graph::parse_edge_list_str("# header\n% more\n\n  a b\nb c\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn empty_input_is_empty_graph() {
        assert!(matches!(Graph::parse_edge_list_str("# nothing"), Err(Error::EmptyGraph)));
    }

    #[test]
    fn sparsity_of_p3() {
        let stats = p3().sparsity_stats().unwrap();
        assert_eq!(stats.per_node_eps, vec![0.25, 1.0, 0.25]);
        assert_eq!(stats.eps0, 1.0);
        assert_eq!(stats.min_degree, 1);
    }

    #[test]
    fn strip_isolated_cases() {
        let g = Graph::from_edges(vec!["x", "y", "z"], &[(1, 2)]).unwrap();
        assert_eq!(g.degrees(), &[0, 1, 1]);
        let (stripped, removed) = g.strip_isolated().unwrap();
        assert_eq!(stripped.degrees(), &[1, 1]);
        assert_eq!(removed, vec!["x".to_string()]);

        let (same, removed) = p3().strip_isolated().unwrap();
        assert_eq!(same, p3());
        assert!(removed.is_empty());

        let all_isolated = Graph::from_edges(vec!["x", "y", "z"], &[]).unwrap();
        assert!(matches!(all_isolated.strip_isolated(), Err(Error::EmptyGraph)));
    }

    #[test]
    fn round_trip_preserves_structure() {
        let g = Graph::parse_edge_list_str("n1 n2\nn2 n3\nn3 n1\nn3 n4").unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = Graph::parse_edge_list(&buf[..]).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn total_degree_is_even_and_twice_edges() {
        let g = Graph::parse_edge_list_str("a b\nb c\nc d\nd a\na c").unwrap();
        assert_eq!(g.total_degree() % 2, 0);
        assert_eq!(g.total_degree(), 2 * g.edge_count());
        let sum: u64 = g.degrees().iter().map(|&d| d as u64).sum();
        assert_eq!(sum, g.total_degree());
    }

    #[test]
    fn per_node_eps_is_exact_ratio_of_integers() {
        // 49 edges, so the total degree is 98; 1/98 * 98 != 1 in floating
        // point, which is why the ratio itself is the contract, not the
        // multiplied-back product.
        let mut text = String::new();
        for k in 0..49 {
            text.push_str(&format!("h{k} t{k}\n"));
        }
        let g = Graph::parse_edge_list_str(&text).unwrap();
        let stats = g.sparsity_stats().unwrap();
        for (i, &e) in stats.per_node_eps.iter().enumerate() {
            let d = g.degree(i) as u64;
            assert_eq!(e, (d * d) as f64 / g.total_degree() as f64);
        }
    }
}
