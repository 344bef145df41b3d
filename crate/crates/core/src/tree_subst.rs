//! Colored oriented simplicial trees and edge-rewriting tree substitutions.
//!
//! A substitution replaces every edge `(u, v, c)` by a fixed pattern tree in
//! which the anchors `X`, `Y` are glued to `u`, `v` and every placeholder
//! `P_i` becomes a fresh vertex. Fresh ids come from a counter starting past
//! the largest id of the input, with input edges visited in sorted
//! `(src, dst, color)` order, so ids are stable across runs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_group::{p_star, Automorphism, GroupWord, PathWord, SignedLetter};
use crate::symbolic::IncidenceMatrix;

pub type VertexId = u32;
pub type Color = u8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub color: Color,
}

impl Edge {
    pub fn new(src: VertexId, dst: VertexId, color: Color) -> Self {
        Edge { src, dst, color }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredTree {
    vertices: BTreeSet<VertexId>,
    edges: Vec<Edge>,
    root: Option<VertexId>,
}

impl ColoredTree {
    /// Checks that the edges span a tree on `vertices` with no repeated
    /// colored edge.
    pub fn new(vertices: BTreeSet<VertexId>, edges: Vec<Edge>, root: Option<VertexId>) -> Result<Self> {
        let t = ColoredTree { vertices, edges, root };
        t.check()?;
        Ok(t)
    }

    pub fn from_edges(edges: Vec<Edge>, root: Option<VertexId>) -> Result<Self> {
        let mut vertices: BTreeSet<VertexId> = edges.iter().flat_map(|e| [e.src, e.dst]).collect();
        vertices.extend(root);
        ColoredTree::new(vertices, edges, root)
    }

    fn check(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::MalformedTree("no vertices".into()));
        }
        if let Some(r) = self.root {
            if !self.vertices.contains(&r) {
                return Err(Error::VertexAbsent(r));
            }
        }
        if self.edges.len() + 1 != self.vertices.len() {
            return Err(Error::MalformedTree(format!(
                "{} edges on {} vertices",
                self.edges.len(),
                self.vertices.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            if e.src == e.dst {
                return Err(Error::MalformedTree(format!("loop at {}", e.src)));
            }
            for v in [e.src, e.dst] {
                if !self.vertices.contains(&v) {
                    return Err(Error::VertexAbsent(v));
                }
            }
            if !seen.insert(*e) {
                return Err(Error::MalformedTree(format!("repeated edge {e:?}")));
            }
        }
        let adj = self.adjacency();
        let start = *self.vertices.iter().next().expect("nonempty");
        let mut reached = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                if reached.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        if reached.len() != self.vertices.len() {
            return Err(Error::MalformedTree("disconnected".into()));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &BTreeSet<VertexId> {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn root(&self) -> Option<VertexId> {
        self.root
    }

    pub fn max_id(&self) -> VertexId {
        *self.vertices.iter().next_back().expect("nonempty tree")
    }

    /// Neighbors with the signed color read when stepping to them.
    pub fn adjacency(&self) -> HashMap<VertexId, Vec<(VertexId, SignedLetter)>> {
        let mut adj: HashMap<VertexId, Vec<(VertexId, SignedLetter)>> = HashMap::new();
        for e in &self.edges {
            adj.entry(e.src).or_default().push((e.dst, SignedLetter::pos(e.color)));
            adj.entry(e.dst).or_default().push((e.src, SignedLetter::neg(e.color)));
        }
        adj
    }

    pub fn degrees(&self) -> BTreeMap<VertexId, usize> {
        let mut deg: BTreeMap<VertexId, usize> = self.vertices.iter().map(|&v| (v, 0)).collect();
        for e in &self.edges {
            *deg.entry(e.src).or_default() += 1;
            *deg.entry(e.dst).or_default() += 1;
        }
        deg
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.edges.iter().filter(|e| e.src == v || e.dst == v).count()
    }

    /// Colors along the path `x -> y`, barred where an edge is crossed
    /// against its orientation.
    pub fn path_word(&self, x: VertexId, y: VertexId) -> Result<PathWord> {
        Ok(self.path(x, y)?.1)
    }

    pub fn path_vertices(&self, x: VertexId, y: VertexId) -> Result<Vec<VertexId>> {
        Ok(self.path(x, y)?.0)
    }

    fn path(&self, x: VertexId, y: VertexId) -> Result<(Vec<VertexId>, PathWord)> {
        for v in [x, y] {
            if !self.vertices.contains(&v) {
                return Err(Error::VertexAbsent(v));
            }
        }
        let adj = self.adjacency();
        let mut prev: HashMap<VertexId, (VertexId, SignedLetter)> = HashMap::new();
        let mut queue = VecDeque::from([x]);
        while let Some(v) = queue.pop_front() {
            if v == y {
                break;
            }
            for &(w, l) in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                if w != x && !prev.contains_key(&w) {
                    prev.insert(w, (v, l));
                    queue.push_back(w);
                }
            }
        }
        let mut verts = vec![y];
        let mut word = Vec::new();
        let mut cur = y;
        while cur != x {
            let (p, l) = prev[&cur];
            word.push(l);
            verts.push(p);
            cur = p;
        }
        verts.reverse();
        word.reverse();
        Ok((verts, word))
    }

    /// No path word contains `c̄ c` or `c c̄`: locally, no vertex has two
    /// outgoing or two incoming edges of one color.
    pub fn is_discerned(&self) -> bool {
        let mut out: BTreeSet<(VertexId, Color)> = BTreeSet::new();
        let mut inc: BTreeSet<(VertexId, Color)> = BTreeSet::new();
        self.edges.iter().all(|e| out.insert((e.src, e.color)) && inc.insert((e.dst, e.color)))
    }

    /// Vertices of degree `d`.
    pub fn branch_points(&self, d: usize) -> BTreeSet<VertexId> {
        self.degrees().into_iter().filter(|&(_, k)| k == d).map(|(v, _)| v).collect()
    }

    /// Subtree of vertices within simplicial distance `r` of the root.
    pub fn ball(&self, r: usize) -> Result<ColoredTree> {
        let root = self.root.ok_or_else(|| Error::MalformedTree("ball needs a root".into()))?;
        let adj = self.adjacency();
        let mut dist = BTreeMap::from([(root, 0usize)]);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            let dv = dist[&v];
            if dv == r {
                continue;
            }
            for &(w, _) in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                if let std::collections::btree_map::Entry::Vacant(slot) = dist.entry(w) {
                    slot.insert(dv + 1);
                    queue.push_back(w);
                }
            }
        }
        let vertices: BTreeSet<VertexId> = dist.keys().copied().collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| vertices.contains(&e.src) && vertices.contains(&e.dst))
            .copied()
            .collect();
        ColoredTree::new(vertices, edges, Some(root))
    }

    /// Encoding of the tree rooted at `root` that is invariant under vertex
    /// renaming: children sorted by their own encodings, each prefixed by
    /// the signed color of the connecting edge.
    pub fn canonical_form(&self, root: VertexId) -> Result<String> {
        if !self.vertices.contains(&root) {
            return Err(Error::VertexAbsent(root));
        }
        let adj = self.adjacency();
        let mut order = vec![(root, None::<VertexId>)];
        let mut i = 0;
        while i < order.len() {
            let (v, parent) = order[i];
            for &(w, _) in &adj[&v] {
                if Some(w) != parent {
                    order.push((w, Some(v)));
                }
            }
            i += 1;
        }
        let mut enc: HashMap<VertexId, String> = HashMap::new();
        for &(v, parent) in order.iter().rev() {
            let mut kids: Vec<String> = adj
                .get(&v)
                .map(Vec::as_slice)
                .unwrap_or(&[])
                .iter()
                .filter(|(w, _)| Some(*w) != parent)
                .map(|(w, l)| format!("{}{}", l, enc[w]))
                .collect();
            kids.sort();
            enc.insert(v, format!("({})", kids.concat()));
        }
        Ok(enc.remove(&root).expect("root encoded"))
    }

    /// Sorted list of `(outgoing?, color)` over the edges at `v`.
    pub fn incident_signature(&self, v: VertexId) -> Vec<(bool, Color)> {
        let mut sig: Vec<(bool, Color)> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.src == v {
                    Some((true, e.color))
                } else if e.dst == v {
                    Some((false, e.color))
                } else {
                    None
                }
            })
            .collect();
        sig.sort();
        sig
    }

    pub fn to_json(&self, d: usize) -> TreeJson {
        TreeJson {
            d,
            root: self.root,
            vertices: self.vertices.iter().copied().collect(),
            edges: self.edges.iter().map(|e| (e.src, e.dst, e.color)).collect(),
        }
    }

    pub fn from_json(j: &TreeJson) -> Result<Self> {
        let edges = j.edges.iter().map(|&(s, t, c)| Edge::new(s, t, c)).collect();
        ColoredTree::new(j.vertices.iter().copied().collect(), edges, j.root)
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut out = format!("digraph {name} {{\n");
        for v in &self.vertices {
            let shape = if Some(*v) == self.root { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  {v} [shape={shape}];");
        }
        for e in &self.edges {
            let col = PALETTE[(e.color as usize - 1) % PALETTE.len()];
            let _ = writeln!(out, "  {} -> {} [label=\"{}\", color=\"{col}\", fontcolor=\"{col}\"];", e.src, e.dst, e.color);
        }
        out.push_str("}\n");
        out
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub d: usize,
    pub root: Option<VertexId>,
    pub vertices: Vec<VertexId>,
    pub edges: Vec<(VertexId, VertexId, Color)>,
}

/// Vertex of a rule pattern: the anchors or a placeholder for a fresh vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    X,
    Y,
    P(u32),
}

impl std::fmt::Display for Sym {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sym::X => f.write_str("X"),
            Sym::Y => f.write_str("Y"),
            Sym::P(i) => write!(f, "P{i}"),
        }
    }
}

impl std::str::FromStr for Sym {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" => Ok(Sym::X),
            "Y" => Ok(Sym::Y),
            _ => s
                .strip_prefix('P')
                .and_then(|i| i.parse().ok())
                .map(Sym::P)
                .ok_or_else(|| Error::Parse(format!("bad pattern vertex {s:?}"))),
        }
    }
}

impl Serialize for Sym {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Sym {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulePattern {
    pub color: Color,
    pub edges: Vec<(Sym, Sym, Color)>,
}

impl RulePattern {
    fn symbols(&self) -> BTreeSet<Sym> {
        self.edges.iter().flat_map(|&(a, b, _)| [a, b]).collect()
    }

    fn placeholders(&self) -> Vec<Sym> {
        self.symbols().into_iter().filter(|s| matches!(s, Sym::P(_))).collect()
    }

    fn degree(&self, s: Sym) -> usize {
        self.edges.iter().filter(|&&(a, b, _)| a == s || b == s).count()
    }

    /// Signed colors along the `X -> Y` path of the pattern.
    pub fn trunk(&self) -> Option<PathWord> {
        let mut prev: BTreeMap<Sym, (Sym, SignedLetter)> = BTreeMap::new();
        let mut queue = VecDeque::from([Sym::X]);
        while let Some(v) = queue.pop_front() {
            for &(a, b, c) in &self.edges {
                let step = if a == v {
                    Some((b, SignedLetter::pos(c)))
                } else if b == v {
                    Some((a, SignedLetter::neg(c)))
                } else {
                    None
                };
                if let Some((w, l)) = step {
                    if w != Sym::X && !prev.contains_key(&w) {
                        prev.insert(w, (v, l));
                        queue.push_back(w);
                    }
                }
            }
        }
        let mut word = Vec::new();
        let mut cur = Sym::Y;
        while cur != Sym::X {
            let &(p, l) = prev.get(&cur)?;
            word.push(l);
            cur = p;
        }
        word.reverse();
        Some(word)
    }

    /// Direct anchor edge `X -> Y` or `Y -> X`, when exactly one exists.
    fn direct_anchor_colors(&self) -> Vec<Color> {
        let fwd: BTreeSet<Color> =
            self.edges.iter().filter(|e| e.0 == Sym::X && e.1 == Sym::Y).map(|e| e.2).collect();
        let bwd: BTreeSet<Color> =
            self.edges.iter().filter(|e| e.0 == Sym::Y && e.1 == Sym::X).map(|e| e.2).collect();
        fwd.symmetric_difference(&bwd).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSubstitution {
    pub d: usize,
    /// Colors are `1..=colors`.
    pub colors: usize,
    pub rules: Vec<RulePattern>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionCheck {
    pub condition: u8,
    pub passed: bool,
    pub witnesses: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Checks the four conditions a tree substitution must satisfy:
/// 1. every pattern is a tree containing both anchors;
/// 2. exactly one pattern per color, using only known colors;
/// 3. instantiating two edges yields disjoint fresh vertices;
/// 4. along any cycle of colors `a_1 -> a_2 -> …` where the pattern of
///    `a_j` joins the anchors by a single edge of color `a_{j+1}`, both
///    anchors have degree 1 in each of those patterns.
pub fn validate(ts: &TreeSubstitution) -> ValidationReport {
    let mut c1 = Vec::new();
    for r in &ts.rules {
        let syms = r.symbols();
        for anchor in [Sym::X, Sym::Y] {
            if !syms.contains(&anchor) {
                c1.push(format!("pattern of color {} lacks anchor {anchor}", r.color));
            }
        }
        if r.edges.len() + 1 != syms.len() {
            c1.push(format!("pattern of color {} is not a tree", r.color));
        } else if syms.contains(&Sym::X) && syms.contains(&Sym::Y) && r.trunk().is_none() {
            c1.push(format!("pattern of color {} is disconnected", r.color));
        }
    }

    let mut c2 = Vec::new();
    let mut per_color: BTreeMap<Color, usize> = BTreeMap::new();
    for r in &ts.rules {
        *per_color.entry(r.color).or_default() += 1;
        for &(_, _, c) in &r.edges {
            if c == 0 || c as usize > ts.colors {
                c2.push(format!("pattern of color {} uses unknown color {c}", r.color));
            }
        }
    }
    for c in 1..=ts.colors as Color {
        match per_color.get(&c) {
            None => c2.push(format!("no pattern for color {c}")),
            Some(&k) if k > 1 => c2.push(format!("{k} patterns for color {c}")),
            _ => {}
        }
    }
    for &c in per_color.keys() {
        if c == 0 || c as usize > ts.colors {
            c2.push(format!("pattern for unknown color {c}"));
        }
    }

    let mut c3 = Vec::new();
    if c1.is_empty() && c2.is_empty() {
        for r in &ts.rules {
            let probe = vec![Edge::new(0, 1, r.color), Edge::new(2, 3, r.color)];
            let mut counter = 4;
            let mut fresh_sets = Vec::new();
            for e in &probe {
                let (inst, _) = instantiate(r, *e, &mut counter);
                let fresh: BTreeSet<VertexId> =
                    inst.iter().flat_map(|f| [f.src, f.dst]).filter(|&v| v != e.src && v != e.dst).collect();
                fresh_sets.push(fresh);
            }
            if !fresh_sets[0].is_disjoint(&fresh_sets[1]) || fresh_sets.iter().any(|s| s.iter().any(|&v| v < 4)) {
                c3.push(format!("pattern of color {} reuses fresh vertices", r.color));
            }
        }
    }

    let mut c4 = Vec::new();
    if c1.is_empty() && c2.is_empty() {
        let rule = |c: Color| ts.rules.iter().find(|r| r.color == c).expect("checked by condition 2");
        let succ: BTreeMap<Color, Vec<Color>> =
            (1..=ts.colors as Color).map(|c| (c, rule(c).direct_anchor_colors())).collect();
        for start in 1..=ts.colors as Color {
            if !on_cycle(start, &succ) {
                continue;
            }
            let r = rule(start);
            for anchor in [Sym::X, Sym::Y] {
                if r.degree(anchor) != 1 {
                    c4.push(format!(
                        "color {start} lies on a direct-anchor color cycle but anchor {anchor} has degree {}",
                        r.degree(anchor)
                    ));
                }
            }
        }
    }

    let mk = |condition, w: Vec<String>| ConditionCheck { condition, passed: w.is_empty(), witnesses: w };
    ValidationReport { checks: vec![mk(1, c1), mk(2, c2), mk(3, c3), mk(4, c4)] }
}

fn on_cycle(start: Color, succ: &BTreeMap<Color, Vec<Color>>) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = succ[&start].clone();
    while let Some(c) = stack.pop() {
        if c == start {
            return true;
        }
        if seen.insert(c) {
            stack.extend(succ.get(&c).cloned().unwrap_or_default());
        }
    }
    false
}

/// Pattern edges with anchors glued to `e` and placeholders numbered from
/// `counter` upward, in placeholder order. Also flags trunk edges.
fn instantiate(r: &RulePattern, e: Edge, counter: &mut VertexId) -> (Vec<Edge>, Vec<bool>) {
    let mut map: BTreeMap<Sym, VertexId> = BTreeMap::from([(Sym::X, e.src), (Sym::Y, e.dst)]);
    for p in r.placeholders() {
        map.insert(p, *counter);
        *counter += 1;
    }
    let trunk_syms = trunk_symbols(r);
    let edges = r.edges.iter().map(|&(a, b, c)| Edge::new(map[&a], map[&b], c)).collect();
    let on_trunk = r.edges.iter().map(|&(a, b, _)| trunk_syms.contains(&a) && trunk_syms.contains(&b)).collect();
    (edges, on_trunk)
}

fn trunk_symbols(r: &RulePattern) -> BTreeSet<Sym> {
    // Vertices on the X-Y path: prune leaves other than the anchors until
    // none remain.
    let mut edges = r.edges.clone();
    loop {
        let syms: BTreeSet<Sym> = edges.iter().flat_map(|&(a, b, _)| [a, b]).collect();
        let leaf = syms.into_iter().find(|&s| {
            s != Sym::X && s != Sym::Y && edges.iter().filter(|e| e.0 == s || e.1 == s).count() == 1
        });
        match leaf {
            Some(s) => edges.retain(|e| e.0 != s && e.1 != s),
            None => return edges.iter().flat_map(|&(a, b, _)| [a, b]).collect(),
        }
    }
}

/// Result of one substitution step with provenance.
#[derive(Clone, Debug)]
pub struct Traced {
    pub tree: ColoredTree,
    /// Index (in the input's edge list) of the edge each output edge came from.
    pub parent: Vec<usize>,
    /// Whether each output edge lies on the trunk of its parent's pattern.
    pub on_trunk: Vec<bool>,
}

impl TreeSubstitution {
    /// Validated construction; the first failing condition is the error.
    pub fn new(d: usize, colors: usize, rules: Vec<RulePattern>) -> Result<Self> {
        let ts = TreeSubstitution { d, colors, rules };
        if let Some(f) = validate(&ts).first_failure() {
            return Err(Error::InvalidRules { condition: f.condition, witness: f.witnesses.join("; ") });
        }
        Ok(ts)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: TreeSubstitution = serde_json::from_str(s)?;
        TreeSubstitution::new(raw.d, raw.colors, raw.rules)
    }

    pub fn rule(&self, c: Color) -> &RulePattern {
        self.rules.iter().find(|r| r.color == c).expect("validated: one rule per color")
    }

    pub fn apply(&self, t: &ColoredTree) -> ColoredTree {
        self.apply_traced(t).tree
    }

    pub fn apply_traced(&self, t: &ColoredTree) -> Traced {
        let mut order: Vec<usize> = (0..t.edges.len()).collect();
        order.sort_by_key(|&i| t.edges[i]);
        let mut counter = t.max_id() + 1;
        let mut edges = Vec::new();
        let mut parent = Vec::new();
        let mut on_trunk = Vec::new();
        for i in order {
            let (inst, trunk) = instantiate(self.rule(t.edges[i].color), t.edges[i], &mut counter);
            parent.extend(std::iter::repeat_n(i, inst.len()));
            edges.extend(inst);
            on_trunk.extend(trunk);
        }
        let mut vertices = t.vertices.clone();
        vertices.extend(edges.iter().flat_map(|e| [e.src, e.dst]));
        let tree = ColoredTree { vertices, edges, root: t.root };
        debug_assert!(tree.check().is_ok());
        Traced { tree, parent, on_trunk }
    }

    /// `M_t(i, j)`: occurrences of color `i` on the trunk of the pattern of `j`.
    pub fn trunk_matrix(&self) -> IncidenceMatrix {
        let mut m = IncidenceMatrix::zeros(self.colors);
        for r in &self.rules {
            for l in r.trunk().unwrap_or_default() {
                m.entries[l.base as usize - 1][r.color as usize - 1] += 1;
            }
        }
        m
    }

    /// `M_τ(i, j)`: occurrences of color `i` anywhere in the pattern of `j`.
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let mut m = IncidenceMatrix::zeros(self.colors);
        for r in &self.rules {
            for &(_, _, c) in &r.edges {
                m.entries[c as usize - 1][r.color as usize - 1] += 1;
            }
        }
        m
    }
}

pub fn incidence_matrix_tau(ts: &TreeSubstitution) -> IncidenceMatrix {
    ts.incidence_matrix()
}

pub fn trunk_matrix(ts: &TreeSubstitution) -> IncidenceMatrix {
    ts.trunk_matrix()
}

/// Rules on colors `1..=2d-2`:
/// `1 -> d`; `2 ->` star with center `P0` and edges `(P0, X, d)`,
/// `(P0, Y, 1)`, `(P0, P_h, d+h)` for `h = 1..=d-2`; `i -> i-1` for
/// `3 <= i <= d`; `d+1 -> 1`; `i -> i-1` for `d+2 <= i <= 2d-2`.
pub fn family_rules(d: usize) -> Result<TreeSubstitution> {
    if d < 3 {
        return Err(Error::Dimension(d));
    }
    let dc = d as Color;
    let rules = (1..=2 * dc - 2)
        .map(|c| {
            let edges = match c {
                1 => vec![(Sym::X, Sym::Y, dc)],
                2 => {
                    let mut e = vec![(Sym::P(0), Sym::X, dc), (Sym::P(0), Sym::Y, 1)];
                    e.extend((1..=dc - 2).map(|h| (Sym::P(0), Sym::P(h as u32), dc + h)));
                    e
                }
                c if c == dc + 1 => vec![(Sym::X, Sym::Y, 1)],
                c => vec![(Sym::X, Sym::Y, c - 1)],
            };
            RulePattern { color: c, edges }
        })
        .collect();
    TreeSubstitution::new(d, 2 * d - 2, rules)
}

/// The star `τ^{d-1}(X_2)` relabeled so the center is `0` and the endpoint
/// of its color-`j` edge is `j`.
pub fn initial_tree(ts: &TreeSubstitution) -> Result<ColoredTree> {
    let d = ts.d;
    let mut t = ColoredTree::from_edges(vec![Edge::new(0, 1, 2)], None)?;
    for _ in 0..d - 1 {
        t = ts.apply(&t);
    }
    let center = t
        .branch_points(d)
        .into_iter()
        .next()
        .ok_or_else(|| Error::MalformedTree("initial tree has no center".into()))?;
    let mut rename = BTreeMap::from([(center, 0)]);
    for e in &t.edges {
        if e.src != center {
            return Err(Error::MalformedTree(format!("edge {e:?} does not leave the center")));
        }
        rename.insert(e.dst, e.color as VertexId);
    }
    let mut edges: Vec<Edge> = t.edges.iter().map(|e| Edge::new(0, rename[&e.dst], e.color)).collect();
    edges.sort();
    let star = ColoredTree::from_edges(edges, Some(0))?;
    if star.vertices.len() != d + 1 || star.degree(0) != d {
        return Err(Error::MalformedTree("initial tree is not a d-star".into()));
    }
    Ok(star)
}

/// Stages `T_0, …, T_n` with edge provenance between consecutive stages.
#[derive(Clone, Debug)]
pub struct TreeTower {
    pub d: usize,
    pub trees: Vec<ColoredTree>,
    /// `parent[n][i]`: index in `T_{n-1}` of the edge that edge `i` of `T_n`
    /// came from. Empty for `n = 0`.
    pub parent: Vec<Vec<usize>>,
    pub on_trunk: Vec<Vec<bool>>,
}

impl TreeTower {
    pub fn build(ts: &TreeSubstitution, t0: ColoredTree, n: usize) -> Self {
        let mut trees = vec![t0];
        let mut parent = vec![Vec::new()];
        let mut on_trunk = vec![Vec::new()];
        for _ in 0..n {
            let step = ts.apply_traced(trees.last().expect("nonempty"));
            trees.push(step.tree);
            parent.push(step.parent);
            on_trunk.push(step.on_trunk);
        }
        TreeTower { d: ts.d, trees, parent, on_trunk }
    }

    pub fn family(d: usize, n: usize) -> Result<Self> {
        let ts = family_rules(d)?;
        let t0 = initial_tree(&ts)?;
        Ok(TreeTower::build(&ts, t0, n))
    }

    pub fn max_stage(&self) -> usize {
        self.trees.len() - 1
    }

    pub fn stage(&self, n: usize) -> &ColoredTree {
        &self.trees[n]
    }

    /// For each edge of `T_to`, the index of the edge of `T_from` it descends
    /// from (`from <= to`).
    pub fn ancestors(&self, from: usize, to: usize) -> Vec<usize> {
        let mut cur: Vec<usize> = (0..self.trees[to].edges.len()).collect();
        for n in (from + 1..=to).rev() {
            for c in cur.iter_mut() {
                *c = self.parent[n][*c];
            }
        }
        cur
    }

    /// For each edge of `T_to`, whether every step since `T_from` kept it on
    /// a trunk, i.e. whether its realization lies inside `T_from`'s.
    pub fn within(&self, from: usize, to: usize) -> Vec<bool> {
        let mut inside = vec![true; self.trees[from].edges.len()];
        for n in from + 1..=to {
            inside = (0..self.trees[n].edges.len())
                .map(|i| inside[self.parent[n][i]] && self.on_trunk[n][i])
                .collect();
        }
        inside
    }
}

/// `T_n` for the family, `n >= 0`.
pub fn iterate(d: usize, n: usize) -> Result<ColoredTree> {
    let tower = TreeTower::family(d, n)?;
    Ok(tower.trees.into_iter().next_back().expect("nonempty"))
}

/// `p_*` of the trunk of the pattern for color `i`.
pub fn trunk_image(ts: &TreeSubstitution, i: Color) -> Result<GroupWord> {
    let trunk = ts.rule(i).trunk().ok_or_else(|| Error::MalformedTree(format!("pattern {i} has no trunk")))?;
    p_star(ts.d, &trunk)
}

/// For colors `1..=d`, whether `p_*(trunk of i)` equals `σ^{-1}(i)`.
pub fn trunk_agrees_with_inverse(ts: &TreeSubstitution) -> Result<Vec<(Color, bool)>> {
    let inv = Automorphism::family_inverse(ts.d)?;
    (1..=ts.d as Color)
        .map(|i| Ok((i, trunk_image(ts, i)? == *inv.image(i))))
        .collect()
}
