//! Projection of inverse prefixes of `ω` to the contracting plane of the
//! incidence matrix (`d = 3` only), and plain SVG/CSV output.
//!
//! `π_*(u^{-1})` is the projection of `-[u]`, the negated letter counts of
//! `u`, along the expanding eigenvector. Coordinates are taken in the basis
//! `(Re v, Im v)` of a complex eigenvector `v` of the contracting pair.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Complex, Matrix3, Vector3};
use serde::Serialize;

use crate::core_map::{determined_partition, l_len, LabeledTower};
use crate::error::{Error, Result};
use crate::par;
use crate::symbolic::{family_lambda, word_to_string, IncidenceMatrix, Letter, Substitution};

pub const BOUNDARY_TAG: &str = "boundary";

/// Marker colors assigned to tags in sorted order, cycling; the boundary tag
/// is always black.
pub const PALETTE: [&str; 16] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173", "#3182bd",
];

fn require_d3(d: usize) -> Result<()> {
    if d != 3 {
        return Err(Error::RequiresDim3(d));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ContractingBasis {
    pub lambda: f64,
    /// One of the two conjugate contracting eigenvalues.
    pub contracting: Complex<f64>,
    pub expanding: Vector3<f64>,
    pub plane: [Vector3<f64>; 2],
    /// Inverse of `[expanding | plane_0 | plane_1]`.
    to_coords: Matrix3<f64>,
}

/// Kernel vector of a rank-2 complex `3x3` matrix: the largest cross product
/// of two of its rows.
fn kernel_vector(a: &Matrix3<Complex<f64>>) -> Vector3<Complex<f64>> {
    let rows: Vec<Vector3<Complex<f64>>> = (0..3).map(|i| a.row(i).transpose()).collect();
    let cross = |p: &Vector3<Complex<f64>>, q: &Vector3<Complex<f64>>| {
        Vector3::new(p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0])
    };
    [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| cross(&rows[i], &rows[j]))
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .expect("three pairs")
}

/// Plane basis of the contracting eigenspace and the expanding direction.
/// Rejects anything but a `3x3` matrix with one eigenvalue above 1 and a
/// conjugate pair inside the unit circle.
pub fn contracting_basis(m: &IncidenceMatrix) -> Result<ContractingBasis> {
    require_d3(m.size())?;
    let eig = m.eigenvalues();
    let (lr, li) = eig.iter().copied().max_by(|a, b| a.0.total_cmp(&b.0)).expect("nonempty");
    let others: Vec<(f64, f64)> = eig.iter().copied().filter(|&e| e != (lr, li)).collect();
    let pisot = li.abs() < 1e-12
        && lr > 1.0
        && others.len() == 2
        && others.iter().all(|&(re, im)| (re * re + im * im).sqrt() < 1.0 && im.abs() > 1e-12);
    if !pisot {
        return Err(Error::NonPisot(format!("{eig:?}")));
    }
    let (cr, ci) = others[0];
    let mu = Complex::new(cr, ci.abs());
    let real = m.to_dmatrix();
    let mc = Matrix3::from_fn(|i, j| Complex::new(real[(i, j)], 0.0));
    let shift = |z: Complex<f64>| mc - Matrix3::from_diagonal_element(z);
    let v = kernel_vector(&shift(mu));
    let e = kernel_vector(&shift(Complex::new(lr, 0.0))).map(|z| z.re);
    let plane = [v.map(|z| z.re), v.map(|z| z.im)];
    let basis = Matrix3::from_columns(&[e, plane[0], plane[1]]);
    let to_coords = basis.try_inverse().ok_or_else(|| Error::NonPisot("degenerate eigenbasis".into()))?;
    Ok(ContractingBasis { lambda: lr, contracting: mu, expanding: e, plane, to_coords })
}

pub fn family_basis(d: usize) -> Result<ContractingBasis> {
    require_d3(d)?;
    contracting_basis(&Substitution::family(d)?.incidence_matrix())
}

impl ContractingBasis {
    /// Plane coordinates of `v` with its expanding component removed.
    pub fn project(&self, v: &[f64; 3]) -> (f64, f64) {
        let c = self.to_coords * Vector3::new(v[0], v[1], v[2]);
        (c[1], c[2])
    }

    pub fn project_int(&self, v: &[i64]) -> (f64, f64) {
        self.project(&[v[0] as f64, v[1] as f64, v[2] as f64])
    }

    /// `π_*(u^{-1})` for the letter counts `[u]`.
    pub fn project_prefix_inverse(&self, counts: &[i64; 3]) -> (f64, f64) {
        self.project_int(&[-counts[0], -counts[1], -counts[2]])
    }
}

/// Letter counts of the prefixes of `ω` of lengths `0..=depth`.
pub fn prefix_counts(omega: &[Letter], depth: usize) -> Vec<[i64; 3]> {
    let mut out = Vec::with_capacity(depth + 1);
    let mut acc = [0i64; 3];
    out.push(acc);
    for &a in &omega[..depth] {
        acc[a as usize - 1] += 1;
        out.push(acc);
    }
    out
}

/// Norms of `π([σ^k(1)])`, `k = 0..=k_max`, and their successive ratios.
pub fn contraction_ratios(basis: &ContractingBasis, k_max: usize) -> Result<Vec<f64>> {
    let sub = Substitution::family(3)?;
    let mut counts = vec![1i64, 0, 0];
    let mut norms = Vec::with_capacity(k_max + 1);
    for _ in 0..=k_max {
        let (x, y) = basis.project_int(&counts);
        norms.push(x.hypot(y));
        let mut next = vec![0i64; 3];
        for (b, &c) in counts.iter().enumerate() {
            for &a in sub.image(b as Letter + 1) {
                next[a as usize - 1] += c;
            }
        }
        counts = next;
    }
    Ok(norms.windows(2).map(|w| w[1] / w[0]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coloring {
    None,
    /// Length-`m` past cylinder: the last `m` letters of `u`.
    Cylinder(usize),
    /// Simple arc of `T_n` holding the branch point labeled `u^{-1}`.
    Arc(usize),
}

impl FromStr for Coloring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "none" {
            return Ok(Coloring::None);
        }
        let (kind, num) = s
            .split_once([':', ' ', '='])
            .ok_or_else(|| Error::Parse(format!("coloring {s:?}: expected cylinder:M or arc:N")))?;
        let k: usize = num.trim().parse().map_err(|e| Error::Parse(format!("coloring {s:?}: {e}")))?;
        match kind {
            "cylinder" => Ok(Coloring::Cylinder(k)),
            "arc" => Ok(Coloring::Arc(k)),
            _ => Err(Error::Parse(format!("coloring {s:?}: expected cylinder:M or arc:N"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CloudPoint {
    pub x: f64,
    pub y: f64,
    pub tag: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
}

/// Smallest stage whose branch labels reach `depth`, and at least `n + 1`.
fn stage_covering(d: usize, depth: usize, n: usize) -> Result<usize> {
    let mut s = n + 1;
    while l_len(d, s)? < depth {
        s += 1;
    }
    Ok(s)
}

/// `π_*(u^{-1})` for every prefix `u` of `ω` with `|u| <= depth`, indexed by
/// `|u|`. Points that belong to several classes of the coloring (labels of
/// length `< m`, resp. branch points of `T_n`) are tagged `boundary`.
pub fn fractal_cloud(d: usize, depth: usize, coloring: Coloring) -> Result<PointCloud> {
    require_d3(d)?;
    let basis = family_basis(d)?;
    let sub = Substitution::family(d)?;
    let omega = sub.fixed_point_prefix(depth)?;
    let counts = prefix_counts(&omega, depth);
    let tags: Vec<String> = match coloring {
        Coloring::None => vec![String::new(); depth + 1],
        Coloring::Cylinder(m) => (0..=depth)
            .map(|k| if k < m { BOUNDARY_TAG.into() } else { format!("P{}", word_to_string(&omega[k - m..k])) })
            .collect(),
        Coloring::Arc(n) => {
            let lt = LabeledTower::family(d, stage_covering(d, depth, n)?)?;
            let arcs = lt.label_arcs(n);
            (0..=depth).map(|k| arcs.get(&k).map_or_else(|| BOUNDARY_TAG.into(), |a| format!("arc{a}"))).collect()
        }
    };
    let coords = par::map(&counts, |c| basis.project_prefix_inverse(c));
    let points = coords.into_iter().zip(tags).map(|((x, y), tag)| CloudPoint { x, y, tag }).collect();
    Ok(PointCloud { points })
}

#[derive(Clone, Debug, Serialize)]
pub struct ZetaCloud {
    pub stage: usize,
    /// Label length of each point.
    pub labels: Vec<usize>,
    pub cloud: PointCloud,
    /// Label pairs with distinct tree points but the same projection.
    pub collisions: Vec<(usize, usize)>,
}

/// Projections of the branch points with label length `<= depth` that lie
/// on the realized `T_n`, tagged by the arc of `T_n` containing them.
pub fn zeta_cloud(d: usize, n: usize, depth: usize) -> Result<ZetaCloud> {
    require_d3(d)?;
    let basis = family_basis(d)?;
    let big = stage_covering(d, depth, n)?;
    let lt = LabeledTower::family(d, big)?;
    let inside = lt.tower().within(n, big);
    let on_tree: BTreeSet<u32> = lt
        .tree(big)
        .edges()
        .iter()
        .zip(&inside)
        .filter(|(_, &ok)| ok)
        .flat_map(|(e, _)| [e.src, e.dst])
        .collect();
    let arcs = lt.label_arcs(n);
    let omega = lt.omega();
    let counts = prefix_counts(omega, depth.min(omega.len()));
    let mut labels = Vec::new();
    let mut points = Vec::new();
    for (&x, &len) in &lt.labels().by_vertex {
        if len > depth || !on_tree.contains(&x) {
            continue;
        }
        let (px, py) = basis.project_prefix_inverse(&counts[len]);
        let tag = arcs.get(&len).map_or_else(|| BOUNDARY_TAG.into(), |a| format!("arc{a}"));
        labels.push(len);
        points.push(CloudPoint { x: px, y: py, tag });
    }
    let cloud = PointCloud { points };
    let collisions = collisions(&cloud, 1e-9).into_iter().map(|(i, j)| (labels[i], labels[j])).collect();
    Ok(ZetaCloud { stage: n, labels, cloud, collisions })
}

/// Index pairs of points closer than `tol`.
pub fn collisions(cloud: &PointCloud, tol: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..cloud.points.len()).collect();
    order.sort_by(|&a, &b| cloud.points[a].x.total_cmp(&cloud.points[b].x));
    let mut out = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            let (p, q) = (&cloud.points[i], &cloud.points[j]);
            if q.x - p.x > tol {
                break;
            }
            if (q.y - p.y).abs() <= tol {
                out.push((i.min(j), i.max(j)));
            }
        }
    }
    out.sort();
    out
}

/// Whether two clouds over the same points induce the same partition: the
/// tags correspond one to one.
pub fn same_partition(a: &PointCloud, b: &PointCloud) -> bool {
    if a.points.len() != b.points.len() {
        return false;
    }
    let mut fwd: BTreeMap<&str, &str> = BTreeMap::new();
    let mut back: BTreeMap<&str, &str> = BTreeMap::new();
    a.points.iter().zip(&b.points).all(|(p, q)| {
        *fwd.entry(&p.tag).or_insert(&q.tag) == q.tag && *back.entry(&q.tag).or_insert(&p.tag) == p.tag
    })
}

pub fn sup_norm(cloud: &PointCloud) -> f64 {
    cloud.points.iter().map(|p| p.x.hypot(p.y)).fold(0.0, f64::max)
}

/// Largest distance between two points, over a strided sample of `stride`.
pub fn diameter(cloud: &PointCloud, stride: usize) -> f64 {
    let pts = &cloud.points;
    let sample: Vec<&CloudPoint> = pts.iter().step_by(stride.max(1)).collect();
    par::map(pts, |p| sample.iter().map(|q| (p.x - q.x).hypot(p.y - q.y)).fold(0.0, f64::max))
        .into_iter()
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct Congruence {
    /// Snapped measure exponent `j` of the class, measure `λ^-j`.
    pub exponent: i32,
    pub a: String,
    pub b: String,
    /// Symmetric nearest-neighbor RMS after aligning centroids, over the
    /// cloud diameter.
    pub rms_ratio: f64,
}

/// For each pair of cylinder tags with the same snapped frequency `λ^-j`,
/// how far their point sets are from translates of each other.
pub fn congruence(cloud: &PointCloud) -> Vec<Congruence> {
    let lambda = family_lambda(3);
    let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for p in cloud.points.iter().filter(|p| p.tag != BOUNDARY_TAG) {
        groups.entry(&p.tag).or_default().push((p.x, p.y));
    }
    let total: usize = groups.values().map(Vec::len).sum();
    let mut classes: BTreeMap<i32, Vec<&str>> = BTreeMap::new();
    for (tag, pts) in &groups {
        let f = pts.len() as f64 / total as f64;
        classes.entry((-f.ln() / lambda.ln()).round() as i32).or_default().push(tag);
    }
    let diam = diameter(cloud, 50);
    let centered = |pts: &[(f64, f64)]| -> Vec<(f64, f64)> {
        let n = pts.len() as f64;
        let (cx, cy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        pts.iter().map(|p| (p.0 - cx, p.1 - cy)).collect()
    };
    let nn_ms = |from: &[(f64, f64)], to: &[(f64, f64)]| -> f64 {
        let d = par::map(from, |p| to.iter().map(|q| (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).fold(f64::INFINITY, f64::min));
        d.iter().sum::<f64>() / d.len() as f64
    };
    let mut out = Vec::new();
    for (&j, tags) in &classes {
        for (i, a) in tags.iter().enumerate() {
            for b in &tags[i + 1..] {
                let pa = centered(&groups[a]);
                let pb = centered(&groups[b]);
                let rms = ((nn_ms(&pa, &pb) + nn_ms(&pb, &pa)) / 2.0).sqrt();
                out.push(Congruence { exponent: j, a: a.to_string(), b: b.to_string(), rms_ratio: rms / diam });
            }
        }
    }
    out
}

fn tag_colors(cloud: &PointCloud) -> BTreeMap<&str, &'static str> {
    let tags: BTreeSet<&str> = cloud.points.iter().map(|p| p.tag.as_str()).collect();
    let mut i = 0;
    tags.into_iter()
        .map(|t| {
            if t == BOUNDARY_TAG {
                (t, "#000000")
            } else {
                let c = PALETTE[i % PALETTE.len()];
                i += 1;
                (t, c)
            }
        })
        .collect()
}

const VIEW: f64 = 800.0;
const MARGIN: f64 = 20.0;

/// SVG 1.1 with a fixed `800x800` view box, a frame, and one circle per
/// point; the data bounding box is scaled uniformly into the frame.
pub fn render_svg(cloud: &PointCloud) -> String {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{VIEW}" height="{VIEW}" viewBox="0 0 {VIEW} {VIEW}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{VIEW}" height="{VIEW}" fill="white" stroke="black"/>"#);
    if !cloud.points.is_empty() {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &cloud.points {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-12);
        let scale = (VIEW - 2.0 * MARGIN) / span;
        let colors = tag_colors(cloud);
        for p in &cloud.points {
            let sx = MARGIN + (p.x - x0) * scale;
            let sy = VIEW - MARGIN - (p.y - y0) * scale;
            let _ = writeln!(out, r#"<circle cx="{sx:.3}" cy="{sy:.3}" r="1.2" fill="{}"/>"#, colors[p.tag.as_str()]);
        }
    }
    out.push_str("</svg>\n");
    out
}

/// `x,y,tag` rows with 12 significant decimals.
pub fn export_csv(cloud: &PointCloud) -> String {
    let mut out = String::from("x,y,tag\n");
    for p in &cloud.points {
        let _ = writeln!(out, "{:.12},{:.12},{}", p.x, p.y, p.tag);
    }
    out
}

pub fn write_svg(cloud: &PointCloud, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(cloud))?;
    Ok(())
}

pub fn write_csv(cloud: &PointCloud, path: &Path) -> Result<()> {
    std::fs::write(path, export_csv(cloud))?;
    Ok(())
}

/// Arc coloring at stage `n` and cylinder coloring at the length `T_n`
/// determines, over the same prefixes.
pub fn arc_and_cylinder_clouds(n: usize, depth: usize) -> Result<(PointCloud, PointCloud)> {
    let m = determined_partition(3, n)?;
    Ok((fractal_cloud(3, depth, Coloring::Arc(n))?, fractal_cloud(3, depth, Coloring::Cylinder(m))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::family_lambda;

    #[test]
    fn basis_d3() {
        let b = family_basis(3).unwrap();
        let lambda = family_lambda(3);
        assert!((b.lambda - lambda).abs() < 1e-9);
        assert!((b.contracting.norm() - lambda.powf(-0.5)).abs() < 1e-9);
        let (x, y) = b.project(&[b.expanding[0], b.expanding[1], b.expanding[2]]);
        assert!(x.abs() < 1e-12 && y.abs() < 1e-12);
        assert_eq!(b.project_int(&[0, 0, 0]), (0.0, 0.0));
        let (x1, y1) = b.project_int(&[1, 0, 0]);
        let (x2, y2) = b.project_prefix_inverse(&[1, 0, 0]);
        assert!((x1 + x2).abs() < 1e-15 && (y1 + y2).abs() < 1e-15);
    }

    #[test]
    fn other_dimensions_rejected() {
        assert!(matches!(family_basis(4), Err(Error::RequiresDim3(4))));
        assert!(matches!(fractal_cloud(5, 10, Coloring::None), Err(Error::RequiresDim3(5))));
        let not_pisot = IncidenceMatrix::from_rows(vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
        assert!(matches!(contracting_basis(&not_pisot), Err(Error::NonPisot(_))));
    }

    #[test]
    fn contraction_ratio_matches_modulus() {
        let b = family_basis(3).unwrap();
        let r = contraction_ratios(&b, 40).unwrap();
        let tail: f64 = r[20..].iter().product::<f64>().powf(1.0 / (r.len() - 20) as f64);
        assert!((tail - b.contracting.norm()).abs() < 0.02, "{tail}");
    }

    #[test]
    fn small_clouds() {
        let c = fractal_cloud(3, 0, Coloring::None).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!((c.points[0].x, c.points[0].y), (0.0, 0.0));
        let c = fractal_cloud(3, 2000, Coloring::Arc(0)).unwrap();
        let tags: BTreeSet<&str> = c.points.iter().map(|p| p.tag.as_str()).collect();
        assert_eq!(tags, BTreeSet::from(["arc0", "arc1", "arc2", BOUNDARY_TAG]));
    }

    #[test]
    fn arcs_match_cylinders() {
        for n in 0..=3 {
            let (a, c) = arc_and_cylinder_clouds(n, 3000).unwrap();
            assert!(same_partition(&a, &c), "n={n}");
        }
    }

    #[test]
    fn partition_comparison_detects_merges() {
        let p = |tag: &str| CloudPoint { x: 0.0, y: 0.0, tag: tag.into() };
        let a = PointCloud { points: vec![p("a"), p("b"), p("a")] };
        let b = PointCloud { points: vec![p("x"), p("y"), p("x")] };
        let c = PointCloud { points: vec![p("x"), p("x"), p("x")] };
        assert!(same_partition(&a, &b));
        assert!(!same_partition(&a, &c));
        assert!(!same_partition(&c, &a));
    }

    #[test]
    fn outputs() {
        let empty = render_svg(&PointCloud::default());
        assert!(empty.contains("<rect") && !empty.contains("<circle") && empty.ends_with("</svg>\n"));
        let c = fractal_cloud(3, 2, Coloring::Cylinder(1)).unwrap();
        assert_eq!(render_svg(&c).matches("<circle").count(), 3);
        assert_eq!(export_csv(&c).lines().count(), 4);
        assert_eq!(render_svg(&c), render_svg(&fractal_cloud(3, 2, Coloring::Cylinder(1)).unwrap()));
    }

    #[test]
    fn zeta_small() {
        let z = zeta_cloud(3, 0, 200).unwrap();
        assert_eq!(z.labels.len(), z.cloud.points.len());
        assert!(z.labels.contains(&0));
        let tags: BTreeSet<&str> = z.cloud.points.iter().map(|p| p.tag.as_str()).collect();
        assert!(tags.contains("arc0") && tags.contains(BOUNDARY_TAG));
    }

    #[test]
    fn coloring_parse() {
        assert_eq!("cylinder:7".parse::<Coloring>().unwrap(), Coloring::Cylinder(7));
        assert_eq!("arc 4".parse::<Coloring>().unwrap(), Coloring::Arc(4));
        assert!("disc:2".parse::<Coloring>().is_err());
    }
}
