//! Tree topology with matrix edge weights.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{lu_inverse, sym_eig, triangular_inverse, Matrix};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Max-abs asymmetry accepted for positive definite weights.
pub const TOL_SYM: f64 = 1e-10;
/// `|det W|` must exceed this for general nonsingular weights.
pub const TOL_SING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightClass {
    #[serde(rename = "pd")]
    PositiveDefinite,
    #[serde(rename = "lower")]
    LowerTriangular,
    #[serde(rename = "upper")]
    UpperTriangular,
    #[serde(rename = "nonsingular")]
    GeneralNonsingular,
}

impl WeightClass {
    pub fn is_triangular(self) -> bool {
        matches!(self, Self::LowerTriangular | Self::UpperTriangular)
    }

    /// Classes for which Perron values and characteristic-like objects exist.
    pub fn supports_perron(self) -> bool {
        !matches!(self, Self::GeneralNonsingular)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PositiveDefinite => "positive definite",
            Self::LowerTriangular => "lower triangular",
            Self::UpperTriangular => "upper triangular",
            Self::GeneralNonsingular => "general nonsingular",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::PositiveDefinite => "pd",
            Self::LowerTriangular => "lower",
            Self::UpperTriangular => "upper",
            Self::GeneralNonsingular => "nonsingular",
        }
    }

    /// Checks one weight against the class invariant. Returns a description
    /// of the violation on failure.
    pub fn check(self, w: &Matrix) -> std::result::Result<(), String> {
        let s = w.rows();
        match self {
            Self::PositiveDefinite => {
                let asym = w.asymmetry();
                if asym > TOL_SYM {
                    return Err(format!("not symmetric (max asymmetry {asym:e})"));
                }
                let min = sym_eig(w).map_err(|e| e.to_string())?.min();
                if min <= 0.0 {
                    return Err(format!(
                        "not positive definite (smallest eigenvalue {min:e})"
                    ));
                }
            }
            Self::LowerTriangular | Self::UpperTriangular => {
                let lower = self == Self::LowerTriangular;
                for i in 0..s {
                    for j in 0..s {
                        let off = if lower { j > i } else { i > j };
                        if off && w[(i, j)] != 0.0 {
                            return Err(format!(
                                "entry ({i}, {j}) = {} must be exactly zero",
                                w[(i, j)]
                            ));
                        }
                    }
                    if w[(i, i)] <= 0.0 {
                        return Err(format!(
                            "diagonal entry ({i}, {i}) = {} is not positive",
                            w[(i, i)]
                        ));
                    }
                }
            }
            Self::GeneralNonsingular => {
                let det = lu_inverse(w).map(|(_, d)| d).unwrap_or(0.0);
                if det.abs() <= TOL_SING {
                    return Err(format!("singular weight (det = {det:e})"));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for WeightClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: Matrix,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// A validated tree with `s x s` matrix weights of a single class.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    s: usize,
    class: WeightClass,
    labels: Vec<String>,
    edges: Vec<Edge>,
    inverses: Vec<Matrix>,
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
}

impl Tree {
    /// Builds and validates a tree on `n` vertices labelled `0..n`.
    pub fn new(
        class: WeightClass,
        n: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId, Matrix)>,
    ) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::with_labels(class, labels, edges)
    }

    pub fn with_labels(
        class: WeightClass,
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (VertexId, VertexId, Matrix)>,
    ) -> Result<Self> {
        let n = labels.len();
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|(u, v, weight)| Edge { u, v, weight })
            .collect();
        if n < 2 {
            return Err(Error::validation(
                "vertices",
                format!("need at least 2 vertices, got {n}"),
            ));
        }
        if edges.len() != n - 1 {
            return Err(Error::validation(
                "edges",
                format!(
                    "a tree on {n} vertices has {} edges, got {}",
                    n - 1,
                    edges.len()
                ),
            ));
        }
        let s = edges[0].weight.rows();
        if s == 0 {
            return Err(Error::validation(
                "edges[0].w",
                "block size must be at least 1",
            ));
        }

        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if let Some(prev) = seen.insert(l.as_str(), i) {
                return Err(Error::validation(
                    format!("vertices[{i}]"),
                    format!("duplicate label {l:?} (also at index {prev})"),
                ));
            }
        }

        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut inverses = Vec::with_capacity(edges.len());
        for (id, e) in edges.iter().enumerate() {
            let loc = format!("edges[{id}]");
            if e.u >= n || e.v >= n {
                return Err(Error::validation(loc, "endpoint is not a vertex"));
            }
            if e.u == e.v {
                return Err(Error::validation(loc, "self-loop"));
            }
            let (ru, rv) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if ru == rv {
                return Err(Error::validation(loc, "edge closes a cycle"));
            }
            parent[ru] = rv;
            if e.weight.rows() != s || e.weight.cols() != s {
                return Err(Error::validation(
                    format!("{loc}.w"),
                    format!(
                        "expected {s}x{s} weight, got {}x{}",
                        e.weight.rows(),
                        e.weight.cols()
                    ),
                ));
            }
            if !e.weight.all_finite() {
                return Err(Error::validation(format!("{loc}.w"), "non-finite entry"));
            }
            class.check(&e.weight).map_err(|msg| {
                Error::validation(format!("{loc}.w"), format!("{class} class: {msg}"))
            })?;
            inverses.push(
                invert_weight(class, &e.weight)
                    .map_err(|err| Error::validation(format!("{loc}.w"), err.to_string()))?,
            );
            adjacency[e.u].push((e.v, id));
            adjacency[e.v].push((e.u, id));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Self {
            s,
            class,
            labels,
            edges,
            inverses,
            adjacency,
        })
    }

    /// Vertex count `n`.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Block size `s`.
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn class(&self) -> WeightClass {
        self.class
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v]
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<VertexId> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn weight(&self, e: EdgeId) -> &Matrix {
        &self.edges[e].weight
    }

    /// Cached `W(e)⁻¹`.
    pub fn weight_inverse(&self, e: EdgeId) -> &Matrix {
        &self.inverses[e]
    }

    /// Neighbours of `v` with the connecting edge, ascending by neighbour id.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.adjacency
            .get(u)?
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// The branches at `v`, one per neighbour, ordered by ascending root id.
    pub fn branches_at(&self, v: VertexId) -> Result<Vec<Branch>> {
        self.check_vertex(v)?;
        Ok(self.adjacency[v]
            .iter()
            .map(|&(root, _)| Branch {
                base: v,
                root,
                members: self.component_from(root, v),
            })
            .collect())
    }

    /// The branch at `v` containing `w`.
    pub fn branch_containing(&self, v: VertexId, w: VertexId) -> Result<Branch> {
        self.check_vertex(v)?;
        self.check_vertex(w)?;
        if v == w {
            return Err(Error::Parameter(format!(
                "vertex {v} is not in any branch at itself"
            )));
        }
        let path = self.vertex_path(w, v)?;
        // The vertex just before v on the w→v path is the branch root.
        let root = path[path.len() - 2];
        Ok(Branch {
            base: v,
            root,
            members: self.component_from(root, v),
        })
    }

    /// BFS order of the component of `T - avoid` containing `start`.
    fn component_from(&self, start: VertexId, avoid: VertexId) -> Vec<VertexId> {
        let mut members = vec![start];
        let mut queue = VecDeque::from([(start, avoid)]);
        while let Some((x, from)) = queue.pop_front() {
            for &(y, _) in &self.adjacency[x] {
                if y != from {
                    members.push(y);
                    queue.push_back((y, x));
                }
            }
        }
        members
    }

    /// Edge sequence of the unique `u`–`w` path, starting at `u`.
    pub fn path_between(&self, u: VertexId, w: VertexId) -> Result<Vec<EdgeId>> {
        self.check_vertex(u)?;
        self.check_vertex(w)?;
        let rooted = self.rooted_at(w);
        let mut path = Vec::new();
        let mut x = u;
        while let Some((p, e)) = rooted.parent[x] {
            path.push(e);
            x = p;
        }
        Ok(path)
    }

    /// Vertex sequence of the `u`–`w` path, both endpoints included.
    pub fn vertex_path(&self, u: VertexId, w: VertexId) -> Result<Vec<VertexId>> {
        self.check_vertex(u)?;
        self.check_vertex(w)?;
        let rooted = self.rooted_at(w);
        let mut path = vec![u];
        let mut x = u;
        while let Some((p, _)) = rooted.parent[x] {
            path.push(p);
            x = p;
        }
        Ok(path)
    }

    pub(crate) fn rooted_at(&self, root: VertexId) -> Rooted {
        let n = self.n();
        let mut parent = vec![None; n];
        let mut depth = vec![0; n];
        let mut order = Vec::with_capacity(n);
        let mut visited = vec![false; n];
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            order.push(x);
            for &(y, e) in &self.adjacency[x] {
                if !visited[y] {
                    visited[y] = true;
                    parent[y] = Some((x, e));
                    depth[y] = depth[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        Rooted {
            parent,
            depth,
            order,
        }
    }

    /// Sum of `W(e)⁻¹` over the edges shared by the paths `x→base` and
    /// `y→base`, for all pairs drawn from `vertices`, assembled as a block
    /// matrix in the given order.
    pub(crate) fn path_inverse_sums(&self, base: VertexId, vertices: &[VertexId]) -> Matrix {
        let s = self.s;
        let rooted = self.rooted_at(base);
        // cumulative[z] = Σ_{e ∈ P(z, base)} W(e)⁻¹
        let mut cumulative: Vec<Option<Matrix>> = vec![None; self.n()];
        cumulative[base] = Some(Matrix::zeros(s, s));
        for &z in &rooted.order[1..] {
            let (p, e) = rooted.parent[z].expect("non-root vertex has a parent");
            let up = cumulative[p]
                .as_ref()
                .expect("BFS order visits parents first");
            cumulative[z] = Some(up + &self.inverses[e]);
        }
        let k = vertices.len();
        let mut out = Matrix::zeros(k * s, k * s);
        for (a, &x) in vertices.iter().enumerate() {
            for (b, &y) in vertices.iter().enumerate().skip(a) {
                let meet = rooted.meet(x, y);
                let block = cumulative[meet].as_ref().unwrap();
                out.set_submatrix(a * s, b * s, block);
                if a != b {
                    out.set_submatrix(b * s, a * s, block);
                }
            }
        }
        out
    }

    /// Parses a tree document (see [`TreeFile`]).
    pub fn from_json(text: &str) -> Result<Self> {
        parse_tree(text)
    }

    pub fn to_file(&self) -> TreeFile {
        TreeFile {
            s: self.s,
            weight_class: self.class,
            vertices: self.labels.iter().cloned().map(Label::Text).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeEntry {
                    u: Label::Text(self.labels[e.u].clone()),
                    v: Label::Text(self.labels[e.v].clone()),
                    w: e.weight.to_rows(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("tree serialization cannot fail")
    }
}

fn invert_weight(class: WeightClass, w: &Matrix) -> Result<Matrix> {
    if w.rows() == 1 {
        return Matrix::from_row_major(1, 1, vec![1.0 / w[(0, 0)]]);
    }
    match class {
        WeightClass::LowerTriangular => triangular_inverse(w, true),
        WeightClass::UpperTriangular => triangular_inverse(w, false),
        WeightClass::PositiveDefinite => {
            let (inv, _) = lu_inverse(w)?;
            Ok((&inv + &inv.transpose()).scale(0.5))
        }
        WeightClass::GeneralNonsingular => lu_inverse(w).map(|(inv, _)| inv),
    }
}

/// BFS view of a tree hung from a root vertex.
pub(crate) struct Rooted {
    pub parent: Vec<Option<(VertexId, EdgeId)>>,
    pub depth: Vec<usize>,
    pub order: Vec<VertexId>,
}

impl Rooted {
    /// Lowest common ancestor.
    pub fn meet(&self, mut x: VertexId, mut y: VertexId) -> VertexId {
        while self.depth[x] > self.depth[y] {
            x = self.parent[x].unwrap().0;
        }
        while self.depth[y] > self.depth[x] {
            y = self.parent[y].unwrap().0;
        }
        while x != y {
            x = self.parent[x].unwrap().0;
            y = self.parent[y].unwrap().0;
        }
        x
    }
}

/// A connected component of `T - base`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    /// The deleted vertex.
    pub base: VertexId,
    /// The neighbour of `base` inside the branch.
    pub root: VertexId,
    /// Members in BFS order from `root`.
    pub members: Vec<VertexId>,
}

impl Branch {
    pub fn contains(&self, v: VertexId) -> bool {
        self.members.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Vertex label in a tree file; numbers are accepted and kept as text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Text(String),
    Number(serde_json::Number),
}

impl Label {
    fn into_string(self) -> String {
        match self {
            Label::Text(s) => s,
            Label::Number(n) => n.to_string(),
        }
    }
}

/// On-disk tree document.
///
/// ```json
/// {"s": 2, "weight_class": "pd", "vertices": ["a", "b"],
///  "edges": [{"u": "a", "v": "b", "w": [[1, 0], [0, 1]]}]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub s: usize,
    pub weight_class: WeightClass,
    pub vertices: Vec<Label>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub u: Label,
    pub v: Label,
    /// Row-major weight matrix.
    pub w: Vec<Vec<f64>>,
}

impl TreeFile {
    pub fn into_tree(self) -> Result<Tree> {
        if self.s == 0 {
            return Err(Error::validation("s", "block size must be at least 1"));
        }
        let labels: Vec<String> = self.vertices.into_iter().map(Label::into_string).collect();
        let index: HashMap<&str, VertexId> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.into_iter().enumerate() {
            let lookup = |label: Label, field: &str| -> Result<VertexId> {
                let name = label.into_string();
                index.get(name.as_str()).copied().ok_or_else(|| {
                    Error::validation(
                        format!("edges[{i}].{field}"),
                        format!("unknown vertex {name:?}"),
                    )
                })
            };
            let u = lookup(e.u, "u")?;
            let v = lookup(e.v, "v")?;
            if e.w.len() != self.s || e.w.iter().any(|r| r.len() != self.s) {
                return Err(Error::validation(
                    format!("edges[{i}].w"),
                    format!("weight must be {0}x{0}", self.s),
                ));
            }
            let w = Matrix::from_rows(&e.w)
                .map_err(|err| Error::validation(format!("edges[{i}].w"), err.to_string()))?;
            edges.push((u, v, w));
        }
        Tree::with_labels(self.weight_class, labels, edges)
    }
}

/// Parses and validates a tree document.
pub fn parse_tree(text: &str) -> Result<Tree> {
    let file: TreeFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    file.into_tree()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2A: &str = include_str!("../../../fixtures/FIG2A.json");
    const PATH5: &str = include_str!("../../../fixtures/PATH5.json");
    const K2S: &str = include_str!("../../../fixtures/K2S.json");
    const FIGA1: &str = include_str!("../../../fixtures/FIGA1.json");

    #[test]
    fn parse_fixtures() {
        let k2 = parse_tree(K2S).unwrap();
        assert_eq!(
            (k2.n(), k2.s(), k2.class()),
            (2, 2, WeightClass::PositiveDefinite)
        );
        let a1 = parse_tree(FIGA1).unwrap();
        assert_eq!(
            (a1.n(), a1.s(), a1.class()),
            (7, 3, WeightClass::LowerTriangular)
        );
    }

    #[test]
    fn singular_weight_is_rejected() {
        let text = FIG2A.replace("[[10, 0], [0, 10]]", "[[10, 10], [10, 10]]");
        assert_ne!(text, FIG2A);
        match parse_tree(&text) {
            Err(Error::Validation { location, .. }) => assert_eq!(location, "edges[2].w"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn schema_and_topology_errors() {
        assert!(matches!(parse_tree("{\"s\": 1}"), Err(Error::Schema(_))));
        assert!(matches!(parse_tree("not json"), Err(Error::Schema(_))));
        let cyc = r#"{"s":1,"weight_class":"pd","vertices":["a","b","c"],
            "edges":[{"u":"a","v":"b","w":[[1]]},{"u":"b","v":"a","w":[[1]]}]}"#;
        assert!(matches!(parse_tree(cyc), Err(Error::Validation { .. })));
        let unknown = r#"{"s":1,"weight_class":"pd","vertices":["a","b"],
            "edges":[{"u":"a","v":"z","w":[[1]]}]}"#;
        assert!(matches!(parse_tree(unknown), Err(Error::Validation { .. })));
        let ragged = r#"{"s":2,"weight_class":"pd","vertices":["a","b"],
            "edges":[{"u":"a","v":"b","w":[[1,0],[0]]}]}"#;
        assert!(matches!(parse_tree(ragged), Err(Error::Validation { .. })));
    }

    #[test]
    fn triangular_class_needs_exact_zeros() {
        let w = Matrix::from_rows(&[vec![1.0, 1e-300], vec![0.0, 1.0]]).unwrap();
        assert!(Tree::new(WeightClass::LowerTriangular, 2, [(0, 1, w.clone())]).is_err());
        assert!(Tree::new(WeightClass::UpperTriangular, 2, [(0, 1, w)]).is_ok());
        let neg = Matrix::diag(&[1.0, -1.0]);
        assert!(Tree::new(WeightClass::LowerTriangular, 2, [(0, 1, neg)]).is_err());
    }

    #[test]
    fn pd_class_needs_symmetry() {
        let w = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.4, 2.0]]).unwrap();
        assert!(Tree::new(WeightClass::PositiveDefinite, 2, [(0, 1, w.clone())]).is_err());
        assert!(Tree::new(WeightClass::GeneralNonsingular, 2, [(0, 1, w)]).is_ok());
    }

    #[test]
    fn numeric_labels_are_accepted() {
        let text = r#"{"s":1,"weight_class":"pd","vertices":[10, 20],
            "edges":[{"u":10,"v":20,"w":[[2.5]]}]}"#;
        let t = parse_tree(text).unwrap();
        assert_eq!(t.labels(), &["10", "20"]);
    }

    #[test]
    fn branches_of_fixtures() {
        let p5 = parse_tree(PATH5).unwrap();
        let b = p5.branches_at(2).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].members, vec![1, 0]);
        assert_eq!(b[1].members, vec![3, 4]);

        let f = parse_tree(FIG2A).unwrap();
        let b = f.branches_at(2).unwrap();
        let sets: Vec<Vec<usize>> = b
            .iter()
            .map(|br| {
                let mut m = br.members.clone();
                m.sort();
                m
            })
            .collect();
        assert_eq!(sets, vec![vec![0], vec![1], vec![3, 4, 5]]);

        let k = parse_tree(K2S).unwrap();
        let b = k.branches_at(0).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].members, vec![1]);
        assert!(matches!(k.branches_at(5), Err(Error::UnknownVertex(5))));
    }

    #[test]
    fn paths_of_fixtures() {
        let p5 = parse_tree(PATH5).unwrap();
        assert_eq!(p5.path_between(0, 4).unwrap(), vec![0, 1, 2, 3]);
        let f = parse_tree(FIG2A).unwrap();
        assert_eq!(f.path_between(0, 1).unwrap(), vec![0, 1]);
        assert!(f.path_between(3, 3).unwrap().is_empty());
        assert_eq!(f.vertex_path(0, 5).unwrap(), vec![0, 2, 3, 5]);
        assert!(f.path_between(0, 9).is_err());
    }

    #[test]
    fn branch_containing_matches_branches_at() {
        let f = parse_tree(FIG2A).unwrap();
        let b = f.branch_containing(2, 5).unwrap();
        assert_eq!(b.root, 3);
        assert!(f.branches_at(2).unwrap().contains(&b));
    }
}
