//! Directed weighted interaction graphs and switching schedules.
//!
//! An edge `(j, i)` means agent `j` is a neighbor of agent `i`: agent `i`
//! can obtain information from agent `j`, so the adjacency entry `a_ij` is
//! the weight of `(j, i)`. Self-loops are rejected.

use crate::error::{Error, Result};

/// Lower and upper bounds on nonzero adjacency weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightBounds {
    lower: f64,
    upper: f64,
}

impl WeightBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower.is_finite() && upper.is_finite()) {
            return Err(Error::InvalidParameter(
                "weight bounds must be finite and positive".into(),
            ));
        }
        if lower > upper {
            return Err(Error::InvalidParameter(format!(
                "weight lower bound {lower} exceeds upper bound {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Unit-weight bounds [1, 1].
    pub fn unit() -> Self {
        Self {
            lower: 1.0,
            upper: 1.0,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }
}

/// A directed weighted graph on `n` agents, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    n: usize,
    // in_neighbors[i] = sorted list of (j, a_ij) with a_ij > 0
    in_neighbors: Vec<Vec<(usize, f64)>>,
}

impl DirectedGraph {
    /// Builds a graph from `(source j, sink i, weight)` edges.
    pub fn new(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("agent count must be positive".into()));
        }
        let mut in_neighbors = vec![Vec::new(); n];
        for &(j, i, w) in edges {
            if j >= n || i >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({j}, {i}) references an agent outside 0..{n}"
                )));
            }
            if j == i {
                return Err(Error::InvalidGraph(format!("self-loop on agent {i}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({j}, {i}) has non-positive weight {w}"
                )));
            }
            if in_neighbors[i].iter().any(|&(jj, _)| jj == j) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({j}, {i})")));
            }
            in_neighbors[i].push((j, w));
        }
        for nbrs in &mut in_neighbors {
            nbrs.sort_by_key(|&(j, _)| j);
        }
        Ok(Self { n, in_neighbors })
    }

    /// Unit-weight convenience constructor from `(source, sink)` pairs.
    pub fn from_unit_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(j, i)| (j, i, 1.0)).collect();
        Self::new(n, &weighted)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.in_neighbors.iter().map(Vec::len).sum()
    }

    /// Adjacency entry `a_ij`; zero when `(j, i)` is not an edge.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.in_neighbors[i]
            .iter()
            .find(|&&(jj, _)| jj == j)
            .map_or(0.0, |&(_, w)| w)
    }

    /// Neighbors agent `i` obtains information from, as `(j, a_ij)`.
    pub fn in_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.in_neighbors[i]
    }

    /// All edges as `(source j, sink i, weight)`, sink-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.in_neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().map(move |&(j, w)| (j, i, w)))
    }

    /// Smallest and largest nonzero weight, if any edge exists.
    pub fn weight_range(&self) -> Option<(f64, f64)> {
        let mut range: Option<(f64, f64)> = None;
        for (_, _, w) in self.edges() {
            range = Some(match range {
                None => (w, w),
                Some((lo, hi)) => (lo.min(w), hi.max(w)),
            });
        }
        range
    }

    /// Laplacian matrix: `l_ii = sum_j a_ij`, `l_ij = -a_ij` for `i != j`.
    /// Every row sums to zero.
    pub fn laplacian(&self) -> Vec<Vec<f64>> {
        let mut l = vec![vec![0.0; self.n]; self.n];
        for (i, row) in l.iter_mut().enumerate() {
            for &(j, w) in &self.in_neighbors[i] {
                row[j] = -w;
                row[i] += w;
            }
        }
        l
    }

    /// True iff some agent has directed paths to all other agents.
    ///
    /// Runs the mother-vertex scan: the start vertex of the last DFS tree in
    /// a full sweep is the only possible root, then one reachability pass
    /// verifies it.
    pub fn has_directed_spanning_tree(&self) -> bool {
        if self.n == 1 {
            return true;
        }
        let mut out = vec![Vec::new(); self.n];
        for (j, i, _) in self.edges() {
            out[j].push(i);
        }
        let mut visited = vec![false; self.n];
        let mut candidate = 0;
        for v in 0..self.n {
            if !visited[v] {
                Self::dfs(&out, v, &mut visited);
                candidate = v;
            }
        }
        let mut reach = vec![false; self.n];
        Self::dfs(&out, candidate, &mut reach);
        reach.iter().all(|&r| r)
    }

    fn dfs(out: &[Vec<usize>], start: usize, visited: &mut [bool]) {
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            for &w in &out[v] {
                if !visited[w] {
                    stack.push(w);
                }
            }
        }
    }

    /// Edge-union of several graphs on the same agent set. A repeated edge
    /// keeps its largest weight.
    pub fn union<'a>(graphs: impl IntoIterator<Item = &'a DirectedGraph>) -> Result<DirectedGraph> {
        let mut iter = graphs.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidGraph("union of zero graphs".into()))?;
        let n = first.n;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for g in std::iter::once(first).chain(iter) {
            if g.n != n {
                return Err(Error::InvalidGraph(
                    "union of graphs with different n".into(),
                ));
            }
            for (j, i, w) in g.edges() {
                match edges.iter_mut().find(|(jj, ii, _)| *jj == j && *ii == i) {
                    Some(e) => e.2 = e.2.max(w),
                    None => edges.push((j, i, w)),
                }
            }
        }
        DirectedGraph::new(n, &edges)
    }
}

/// One constant-topology interval of a switching schedule.
#[derive(Debug, Clone)]
pub struct Segment {
    pub duration: f64,
    pub graph: DirectedGraph,
}

/// A piecewise-constant sequence of graphs with a minimum dwell time.
///
/// At a switch instant the new segment's graph applies (the active graph is
/// right-continuous in time).
#[derive(Debug, Clone)]
pub struct SwitchingSchedule {
    segments: Vec<Segment>,
    repeat: bool,
    t_l: f64,
    bounds: WeightBounds,
    // cumulative end time of each segment
    ends: Vec<f64>,
}

impl SwitchingSchedule {
    pub fn new(
        segments: Vec<(f64, DirectedGraph)>,
        repeat: bool,
        t_l: f64,
        bounds: WeightBounds,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSchedule("schedule has no segments".into()));
        }
        if !(t_l > 0.0 && t_l.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "dwell time t_L must be positive, got {t_l}"
            )));
        }
        let n = segments[0].1.n();
        for (idx, (duration, graph)) in segments.iter().enumerate() {
            if !(duration.is_finite() && *duration > 0.0) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {idx} has non-positive duration {duration}"
                )));
            }
            if *duration < t_l {
                return Err(Error::InvalidSchedule(format!(
                    "segment {idx} duration {duration} is below the dwell time t_L = {t_l}"
                )));
            }
            if graph.n() != n {
                return Err(Error::InvalidSchedule(format!(
                    "segment {idx} has n = {} but segment 0 has n = {n}",
                    graph.n()
                )));
            }
            if let Some((lo, hi)) = graph.weight_range() {
                if lo < bounds.lower() || hi > bounds.upper() {
                    return Err(Error::InvalidSchedule(format!(
                        "segment {idx} weights [{lo}, {hi}] fall outside bounds [{}, {}]",
                        bounds.lower(),
                        bounds.upper()
                    )));
                }
            }
        }
        let mut ends = Vec::with_capacity(segments.len());
        let mut acc = 0.0;
        for (duration, _) in &segments {
            acc += duration;
            ends.push(acc);
        }
        let segments = segments
            .into_iter()
            .map(|(duration, graph)| Segment { duration, graph })
            .collect();
        Ok(Self {
            segments,
            repeat,
            t_l,
            bounds,
            ends,
        })
    }

    pub fn n(&self) -> usize {
        self.segments[0].graph.n()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn repeat(&self) -> bool {
        self.repeat
    }

    pub fn t_l(&self) -> f64 {
        self.t_l
    }

    pub fn bounds(&self) -> WeightBounds {
        self.bounds
    }

    /// Duration of one pass over the segment list.
    pub fn total_duration(&self) -> f64 {
        *self.ends.last().unwrap()
    }

    pub fn min_segment_duration(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.duration)
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the segment active at time `t` (right-continuous).
    pub fn segment_index_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative time {t}")));
        }
        let total = self.total_duration();
        let local = if self.repeat {
            let mut r = t % total;
            if r.is_nan() {
                return Err(Error::InvalidParameter(format!("bad time {t}")));
            }
            // the modulo can land a few ulps before a boundary that exact
            // arithmetic would hit; snap so switch instants stay
            // right-continuous
            let eps = t.abs().max(total) * f64::EPSILON * 4.0;
            if total - r <= eps {
                r = 0.0;
            } else if let Some(&end) = self.ends.iter().find(|&&end| (r - end).abs() <= eps) {
                r = end;
            }
            r
        } else {
            if t >= total {
                return Err(Error::OutOfHorizon { t, total });
            }
            t
        };
        let idx = self.ends.partition_point(|&end| end <= local);
        Ok(idx.min(self.segments.len() - 1))
    }

    /// The graph active at time `t`.
    pub fn graph_at(&self, t: f64) -> Result<&DirectedGraph> {
        Ok(&self.segments[self.segment_index_at(t)?].graph)
    }

    /// All switch instants strictly inside `(t0, t1)`, ascending.
    ///
    /// For repeating schedules the wrap from the last segment back to the
    /// first counts as a switch.
    pub fn switch_times_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        if !(t1 > t0) {
            return Vec::new();
        }
        let total = self.total_duration();
        let mut out = Vec::new();
        if self.repeat {
            let mut cycle = (t0 / total).floor().max(0.0) - 1.0;
            loop {
                let base = cycle * total;
                if base > t1 {
                    break;
                }
                for &end in &self.ends {
                    let s = base + end;
                    if s > t0 && s < t1 {
                        out.push(s);
                    }
                }
                cycle += 1.0;
            }
        } else {
            // no switch after the final segment
            for &end in &self.ends[..self.ends.len() - 1] {
                if end > t0 && end < t1 {
                    out.push(end);
                }
            }
        }
        out
    }
}
