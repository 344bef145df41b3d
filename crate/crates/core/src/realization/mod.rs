//! Realization of the iterated trees `T_n` in the free product of `d` real
//! lines, with exact `Z[η]` lengths.
//!
//! Stage 0 places the star at `x_0 -> O`, `x_1 -> 0^1`,
//! `x_j -> (j-1)^{η^{d-j+1}}`. At stage `n` every new center `y`, with edges
//! `(y, y_1, 1)` and `(y, y_2, d)` to old vertices, sits on the old segment
//! `[y_1, y_2] = y_1 · j^p` at `y_1 · j^{sign(p) η^{-n}}`; its leaf of color
//! `d+h` sits at `y · ((j+h) mod d)^{η^{-n-h}}`.

pub mod alg;
pub mod point;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

pub use alg::{eta, v_t, AlgLength};
pub use point::{point_distance, FreePoint};

use crate::error::{Error, Result};
use crate::par;
use crate::tree_subst::{ColoredTree, Edge, TreeTower, VertexId};

#[derive(Clone, Debug)]
pub struct Embedding {
    pub d: usize,
    pub stage: usize,
    pub points: BTreeMap<VertexId, FreePoint>,
}

impl Embedding {
    pub fn point(&self, v: VertexId) -> Result<&FreePoint> {
        self.points.get(&v).ok_or(Error::VertexAbsent(v))
    }

    /// `id,x,y,dist,writing` rows; `x, y` come from [`FreePoint::layout`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,x,y,dist,writing\n");
        for (v, p) in &self.points {
            let (x, y) = p.layout();
            let _ = writeln!(out, "{v},{x},{y},{},\"{p}\"", p.norm().value());
        }
        out
    }
}

/// The stage-0 placement of the star `(0, j, j)`.
pub fn nu0(d: usize, t0: &ColoredTree) -> Result<Embedding> {
    let mut points = BTreeMap::from([(0, FreePoint::origin(d))]);
    for e in t0.edges() {
        if e.src != 0 || e.dst != e.color as VertexId {
            return Err(Error::MalformedTree(format!("unexpected initial edge {e:?}")));
        }
        let j = e.color as i32;
        let len = if j == 1 { AlgLength::one(d) } else { AlgLength::eta_pow(d, d as i32 - j + 1) };
        let copy = (j - 1) as u8;
        points.insert(e.dst, FreePoint::single(copy, len));
    }
    Ok(Embedding { d, stage: 0, points })
}

/// Places the vertices that `T_n` adds to `T_{n-1}`.
pub fn extend(prev: &Embedding, t_n: &ColoredTree) -> Result<Embedding> {
    let d = prev.d;
    let n = prev.stage as i32 + 1;
    let mut points = prev.points.clone();
    let mut out_edges: BTreeMap<VertexId, Vec<Edge>> = BTreeMap::new();
    for e in t_n.edges() {
        out_edges.entry(e.src).or_default().push(*e);
    }
    for v in t_n.vertices() {
        if prev.points.contains_key(v) {
            continue;
        }
        let Some(outs) = out_edges.get(v) else { continue };
        let find = |c: u8| outs.iter().find(|e| e.color == c).map(|e| e.dst);
        let (Some(y1), Some(y2)) = (find(1), find(d as u8)) else {
            continue;
        };
        let p1 = prev.point(y1)?;
        let p2 = prev.point(y2)?;
        let diff = p1.inverse().mul(p2);
        let [syl] = diff.syllables() else {
            return Err(Error::NotSingleSyllable((y2, y1, 2)));
        };
        let j = syl.copy;
        let alpha = syl.len.signum();
        let step = AlgLength::eta_pow(d, -n);
        let step = if alpha < 0 { -step } else { step };
        let center = p1.mul(&FreePoint::single(j, step));
        for e in outs.iter().filter(|e| e.color as usize > d) {
            let h = e.color as i32 - d as i32;
            let k = ((j as i32 + h) % d as i32) as u8;
            let leaf = center.mul(&FreePoint::single(k, AlgLength::eta_pow(d, -n - h)));
            points.insert(e.dst, leaf);
        }
        points.insert(*v, center);
    }
    for v in t_n.vertices() {
        if !points.contains_key(v) {
            return Err(Error::VertexAbsent(*v));
        }
    }
    Ok(Embedding { d, stage: n as usize, points })
}

/// A tower of trees together with their embeddings.
#[derive(Clone, Debug)]
pub struct Realization {
    pub tower: TreeTower,
    pub embeddings: Vec<Embedding>,
}

impl Realization {
    pub fn family(d: usize, max_stage: usize) -> Result<Self> {
        Realization::from_tower(TreeTower::family(d, max_stage)?)
    }

    pub fn from_tower(tower: TreeTower) -> Result<Self> {
        let d = tower.d;
        let max_stage = tower.max_stage();
        let mut embeddings = vec![nu0(d, tower.stage(0))?];
        for n in 1..=max_stage {
            let next = extend(embeddings.last().expect("nonempty"), tower.stage(n))?;
            embeddings.push(next);
        }
        Ok(Realization { tower, embeddings })
    }

    pub fn d(&self) -> usize {
        self.tower.d
    }

    pub fn max_stage(&self) -> usize {
        self.tower.max_stage()
    }

    pub fn embedding(&self, n: usize) -> &Embedding {
        &self.embeddings[n]
    }

    pub fn distance(&self, n: usize, x: VertexId, y: VertexId) -> Result<AlgLength> {
        let e = self.embedding(n);
        Ok(point_distance(e.point(x)?, e.point(y)?))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeLengthViolation {
    pub edge: (VertexId, VertexId, u8),
    pub expected: String,
    pub found: String,
}

/// Edges of `T_n` whose realized difference is not one syllable of length
/// `V_t(color) · η^{-n}`.
pub fn edge_length_violations(r: &Realization, n: usize) -> Vec<EdgeLengthViolation> {
    let d = r.d();
    let emb = r.embedding(n);
    let edges = r.tower.stage(n).edges();
    par::map(edges, |e| {
        let expected = v_t(d, e.color).mul_eta_pow(-(n as i32));
        let diff = emb.points[&e.src].inverse().mul(&emb.points[&e.dst]);
        let ok = diff.syllables().len() == 1 && diff.norm() == expected;
        (!ok).then(|| EdgeLengthViolation {
            edge: (e.src, e.dst, e.color),
            expected: expected.to_string(),
            found: diff.to_string(),
        })
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Twice the distance from `p` to the segment `[a, b]`:
/// `d(p,a) + d(p,b) - d(a,b)`.
pub fn doubled_distance_to_segment(p: &FreePoint, a: &FreePoint, b: &FreePoint) -> AlgLength {
    &(&point_distance(p, a) + &point_distance(p, b)) - &point_distance(a, b)
}

#[derive(Clone, Debug, Serialize)]
pub struct Gap {
    pub stage: usize,
    pub value: f64,
    pub bound: f64,
    /// Vertex of `T_n` realizing the maximum.
    pub witness: Option<VertexId>,
}

/// Largest distance from a vertex new at stage `n` to the realized
/// `T_{n-1}`, with the bound `η^{-1-n}`.
pub fn hausdorff_gap(r: &Realization, n: usize) -> Gap {
    assert!(n >= 1 && n <= r.max_stage());
    let d = r.d();
    let prev = r.embedding(n - 1);
    let cur = r.embedding(n);
    let new: Vec<VertexId> = cur.points.keys().filter(|v| !prev.points.contains_key(v)).copied().collect();
    let segments: Vec<(&FreePoint, &FreePoint)> =
        r.tower.stage(n - 1).edges().iter().map(|e| (&prev.points[&e.src], &prev.points[&e.dst])).collect();
    let dists = par::map(&new, |v| {
        let p = &cur.points[v];
        let best = segments
            .iter()
            .map(|(a, b)| doubled_distance_to_segment(p, a, b).value() / 2.0)
            .fold(f64::INFINITY, f64::min);
        (best, *v)
    });
    let (value, witness) = dists
        .into_iter()
        .fold((0.0, None), |acc, (x, v)| if x > acc.0 { (x, Some(v)) } else { acc });
    Gap { stage: n, value, bound: eta(d).powi(-1 - n as i32), witness }
}

/// Vertices whose realized degree (number of distinct directions towards
/// their neighbors) differs from the simplicial degree, or is not 1 or `d`.
pub fn degree_violations(r: &Realization, n: usize) -> Vec<VertexId> {
    let emb = r.embedding(n);
    let t = r.tower.stage(n);
    let adj = t.adjacency();
    let verts: Vec<VertexId> = t.vertices().iter().copied().collect();
    par::map(&verts, |v| {
        let p = &emb.points[v];
        let nbrs = &adj[v];
        let dirs: BTreeSet<(u8, bool)> =
            nbrs.iter().filter_map(|(w, _)| p.inverse().mul(&emb.points[w]).first_direction()).collect();
        let ok = dirs.len() == nbrs.len() && (nbrs.len() == 1 || nbrs.len() == r.d());
        (!ok).then_some(*v)
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Twice the overlap length of the segments `[a, b]` and `[c, e]`:
/// `max(0, S_1 - min(S_2, S_3))` with `S_1 = d(a,b) + d(c,e)`,
/// `S_2 = d(a,c) + d(b,e)`, `S_3 = d(a,e) + d(b,c)`.
pub fn doubled_overlap(a: &FreePoint, b: &FreePoint, c: &FreePoint, e: &FreePoint) -> AlgLength {
    let s1 = &point_distance(a, b) + &point_distance(c, e);
    let s2 = &point_distance(a, c) + &point_distance(b, e);
    let s3 = &point_distance(a, e) + &point_distance(b, c);
    let x = &s1 - &s2;
    let y = &s1 - &s3;
    let m = if x > y { x } else { y };
    if m.signum() > 0 {
        m
    } else {
        AlgLength::zero(a.d())
    }
}

/// Pairs of distinct edges of `T_n` whose realized segments overlap in more
/// than a point.
pub fn overlapping_segments(r: &Realization, n: usize) -> Vec<(usize, usize)> {
    let emb = r.embedding(n);
    let edges = r.tower.stage(n).edges();
    let pts: Vec<(&FreePoint, &FreePoint)> = edges.iter().map(|e| (&emb.points[&e.src], &emb.points[&e.dst])).collect();
    par::map_range(edges.len(), |i| {
        ((i + 1)..edges.len())
            .filter(|&j| !doubled_overlap(pts[i].0, pts[i].1, pts[j].0, pts[j].1).is_zero())
            .map(|j| (i, j))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Pairs of distinct vertices of `T_n` realized at the same point.
pub fn collisions(r: &Realization, n: usize) -> Vec<(VertexId, VertexId)> {
    let mut seen: BTreeMap<Vec<(u8, Vec<i64>)>, VertexId> = BTreeMap::new();
    let mut out = Vec::new();
    for (v, p) in &r.embedding(n).points {
        if let Some(w) = seen.insert(p.key(), *v) {
            out.push((w, *v));
        }
    }
    out
}

/// Vertices of `T_{n-1}` whose point moved at stage `n`.
pub fn moved_vertices(r: &Realization, n: usize) -> Vec<VertexId> {
    let prev = r.embedding(n - 1);
    let cur = r.embedding(n);
    prev.points.iter().filter(|(v, p)| cur.points.get(v) != Some(p)).map(|(v, _)| *v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu0_table() {
        let r = Realization::family(3, 0).unwrap();
        let e = r.embedding(0);
        assert!(e.points[&0].is_origin());
        assert_eq!(e.points[&1], FreePoint::single(0, AlgLength::one(3)));
        assert_eq!(e.points[&2], FreePoint::single(1, AlgLength::eta_pow(3, 2)));
        assert_eq!(r.distance(0, 0, 1).unwrap(), AlgLength::one(3));
    }

    #[test]
    fn first_center_position() {
        let r = Realization::family(3, 1).unwrap();
        // Center 4 lies on [x_0, x_2] at η^{-1} from x_2.
        assert_eq!(r.distance(1, 4, 2).unwrap(), AlgLength::eta_pow(3, -1));
        assert_eq!(r.distance(1, 4, 0).unwrap(), AlgLength::one(3));
        assert_eq!(r.distance(1, 4, 5).unwrap(), AlgLength::eta_pow(3, -2));
    }

    #[test]
    fn edge_law_small() {
        for d in 3..=5 {
            let r = Realization::family(d, 5).unwrap();
            for n in 0..=5 {
                assert!(edge_length_violations(&r, n).is_empty(), "d={d} n={n}");
            }
        }
    }

    #[test]
    fn gap_small() {
        let r = Realization::family(3, 5).unwrap();
        for n in 1..=5 {
            let g = hausdorff_gap(&r, n);
            assert!(g.value <= g.bound + 1e-12, "{g:?}");
            assert!((g.value - g.bound).abs() < 1e-12, "{g:?}");
        }
    }

    #[test]
    fn degrees_and_overlaps_small() {
        let r = Realization::family(3, 4).unwrap();
        for n in 0..=4 {
            assert!(degree_violations(&r, n).is_empty());
            assert!(overlapping_segments(&r, n).is_empty());
            assert!(collisions(&r, n).is_empty());
        }
    }

    #[test]
    fn overlap_detects_shared_piece() {
        let d = 3;
        let o = FreePoint::origin(d);
        let a = FreePoint::single(0, AlgLength::from_int(d, 2));
        let b = FreePoint::single(0, AlgLength::one(d));
        let c = b.mul(&FreePoint::single(1, AlgLength::one(d)));
        assert_eq!(doubled_overlap(&o, &a, &o, &c), AlgLength::from_int(d, 2));
        assert!(doubled_overlap(&o, &b, &b, &c).is_zero());
    }
}
