//! Coding of the shift orbit of the fixed point `ω` by the branch points of
//! the iterated trees.
//!
//! A branch point `x` of `T_k` is labeled `f_0(x) = σ^k(p_*(γ_k(x_0, x)))`,
//! always the inverse `u^{-1}` of a prefix `u` of `ω`. Labels are therefore
//! stored as the integer `|u|`. The integer route is a recursion over the
//! tower: a center `y` created at stage `N` with color-`d` neighbor `a` gets
//! `|a| + |σ^{N-1}(1)|`. The group-word route evaluates `f_0` directly, and
//! the two are compared by [`LabeledTower::f0_mismatches`].

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_group::{p_star, Automorphism, GroupWord};
use crate::par;
use crate::prefix_suffix::{automatic_writing, word_of_writing};
use crate::realization::{doubled_overlap, AlgLength, FreePoint, Realization};
use crate::realization::alg::v_t;
use crate::symbolic::{
    bispecial_by_generation, expected_class_count, language, measure_spectrum, word_to_string, Letter, Substitution,
    Word,
};
use crate::tree_subst::{ColoredTree, TreeTower, VertexId};

fn ser_word<S: serde::Serializer>(w: &Word, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&word_to_string(w))
}

/// Exponents `α_0 < … < α_p` of `l_m = σ^{α_0}(1^{-1}) … σ^{α_p}(1^{-1})`:
/// none for `m = 0`, `[m-1]` for `m < d`, otherwise the progression of step
/// `d-1` from `(m-1) mod (d-1)` to `m-1`.
pub fn l_exponents(d: usize, m: usize) -> Vec<u32> {
    match m {
        0 => Vec::new(),
        m if m < d => vec![m as u32 - 1],
        m => ((m - 1) % (d - 1)..m).step_by(d - 1).map(|a| a as u32).collect(),
    }
}

pub fn l_word(d: usize, m: usize) -> Result<GroupWord> {
    let sigma = Automorphism::family(d)?;
    let one_inv = GroupWord::inverse_of_positive(&[1]);
    let mut out = GroupWord::identity();
    for a in l_exponents(d, m) {
        out = out.mul(&sigma.apply_n(&one_inv, a as usize)?);
    }
    Ok(out)
}

/// `|l_m|` from the lengths `|σ^k(1)|`.
pub fn l_len(d: usize, m: usize) -> Result<usize> {
    let exps = l_exponents(d, m);
    let top = exps.last().copied().unwrap_or(0) as usize;
    let lens = Substitution::family(d)?.power_lengths(top);
    Ok(exps.iter().map(|&a| lens[a as usize] as usize).sum())
}

/// Length `m` of the cylinders whose partition `T_n` determines: `1` at
/// `n = 0`, else `|l_n| + 1`.
pub fn determined_partition(d: usize, n: usize) -> Result<usize> {
    if n == 0 {
        Ok(1)
    } else {
        Ok(l_len(d, n)? + 1)
    }
}

/// `Σ V_{σ^{-1}}(|w_i|)` over the letters of a word on `1..=d`.
pub fn legal_path_distance(d: usize, w: &GroupWord) -> Result<AlgLength> {
    let mut acc = AlgLength::zero(d);
    for x in w.letters() {
        if x.base == 0 || x.base as usize > d {
            return Err(Error::LetterOutOfRange { letter: x.base as usize, size: d });
        }
        acc = &acc + &v_t(d, x.base);
    }
    Ok(acc)
}

/// Integer labels of a tower: branch vertex to `|u|` where `f_0 = u^{-1}`.
#[derive(Clone, Debug)]
pub struct BranchLabels {
    pub by_vertex: BTreeMap<VertexId, usize>,
    pub by_len: BTreeMap<usize, VertexId>,
    /// First stage containing each vertex.
    pub born: BTreeMap<VertexId, usize>,
    /// For vertices born at `N >= 1`: index of the `T_{N-1}` edge whose image
    /// created them.
    pub origin_edge: BTreeMap<VertexId, usize>,
}

impl BranchLabels {
    pub fn compute(tower: &TreeTower) -> Result<Self> {
        let d = tower.d;
        let lens = Substitution::family(d)?.power_lengths(tower.max_stage());
        let t0 = tower.stage(0);
        let root = t0.root().unwrap_or(0);
        let mut born: BTreeMap<VertexId, usize> = t0.vertices().iter().map(|&v| (v, 0)).collect();
        let mut origin_edge = BTreeMap::new();
        let mut by_vertex = BTreeMap::from([(root, 0usize)]);
        let mut by_len = BTreeMap::from([(0usize, root)]);
        for n in 1..=tower.max_stage() {
            let t = tower.stage(n);
            for (i, e) in t.edges().iter().enumerate() {
                for v in [e.src, e.dst] {
                    if let std::collections::btree_map::Entry::Vacant(slot) = born.entry(v) {
                        slot.insert(n);
                        origin_edge.insert(v, tower.parent[n][i]);
                    }
                }
            }
            for e in t.edges() {
                if born[&e.src] != n || e.color as usize != d {
                    continue;
                }
                let base = *by_vertex.get(&e.dst).ok_or(Error::NotBranchPoint(e.dst))?;
                let len = base + lens[n - 1] as usize;
                by_vertex.insert(e.src, len);
                if let Some(w) = by_len.insert(len, e.src) {
                    return Err(Error::MalformedTree(format!("vertices {w} and {} share label length {len}", e.src)));
                }
            }
        }
        Ok(BranchLabels { by_vertex, by_len, born, origin_edge })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchLabel {
    pub word: GroupWord,
    /// `-(d-2)` for the empty word.
    pub stage_first_seen: i64,
}

/// An edge `(s, t)` of `T_n` seen as a simple arc of the limit tree, with
/// the branch point `splitter` first cut into its interior `steps` stages
/// later and `u = u(s, t)`, where `f_0(splitter) = u^{-1}`.
#[derive(Clone, Debug, Serialize)]
pub struct Arc {
    pub stage: usize,
    pub index: usize,
    pub s: VertexId,
    pub t: VertexId,
    pub color: u8,
    pub steps: usize,
    pub splitter: VertexId,
    #[serde(serialize_with = "ser_word")]
    pub u: Word,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BijectionAudit {
    /// Branch points whose group-word label is not the inverse of a prefix.
    pub not_prefix_inverse: Vec<VertexId>,
    /// Pairs of branch points sharing a label.
    pub collisions: Vec<(VertexId, VertexId)>,
    /// Prefix lengths `<= |l_n|` with no branch point.
    pub missed: Vec<usize>,
}

impl BijectionAudit {
    pub fn passed(&self) -> bool {
        self.not_prefix_inverse.is_empty() && self.collisions.is_empty() && self.missed.is_empty()
    }
}

/// A tower of family trees with integer branch labels. Needs no
/// realization, so it stays cheap at high stages.
#[derive(Clone, Debug)]
pub struct LabeledTower {
    d: usize,
    sub: Substitution,
    sigma: Automorphism,
    tower: TreeTower,
    labels: BranchLabels,
    omega: Word,
}

impl LabeledTower {
    pub fn family(d: usize, max_stage: usize) -> Result<Self> {
        LabeledTower::from_tower(TreeTower::family(d, max_stage)?)
    }

    pub fn from_tower(tower: TreeTower) -> Result<Self> {
        let d = tower.d;
        let sub = Substitution::family(d)?;
        let labels = BranchLabels::compute(&tower)?;
        let top = labels.by_len.keys().next_back().copied().unwrap_or(0);
        let omega = sub.fixed_point_prefix(top + 2)?;
        Ok(LabeledTower { d, sigma: Automorphism::family(d)?, sub, tower, labels, omega })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_stage(&self) -> usize {
        self.tower.max_stage()
    }

    pub fn tower(&self) -> &TreeTower {
        &self.tower
    }

    pub fn labels(&self) -> &BranchLabels {
        &self.labels
    }

    /// Prefix of `ω` covering every label of the tower plus two letters.
    pub fn omega(&self) -> &[Letter] {
        &self.omega
    }

    pub fn tree(&self, n: usize) -> &ColoredTree {
        self.tower.stage(n)
    }

    pub fn root(&self) -> VertexId {
        self.tree(0).root().unwrap_or(0)
    }

    pub fn label(&self, x: VertexId) -> Option<usize> {
        self.labels.by_vertex.get(&x).copied()
    }

    pub fn vertex_of_len(&self, len: usize) -> Option<VertexId> {
        self.labels.by_len.get(&len).copied()
    }

    pub fn label_word(&self, len: usize) -> GroupWord {
        GroupWord::inverse_of_positive(&self.omega[..len])
    }

    fn check_stage(&self, n: usize) -> Result<()> {
        if n > self.max_stage() {
            return Err(Error::StageOutOfRange { need: n, have: self.max_stage() });
        }
        Ok(())
    }

    pub fn branch_points(&self, n: usize) -> BTreeSet<VertexId> {
        self.tree(n).branch_points(self.d)
    }

    /// `|l_n|`: the longest label among branch points of `T_n`.
    pub fn top_len(&self, n: usize) -> usize {
        self.branch_points(n).iter().filter_map(|&x| self.label(x)).max().unwrap_or(0)
    }

    /// `σ^k(p_*(γ_k(x_0, x)))` evaluated in the free group.
    pub fn f0(&self, k: usize, x: VertexId) -> Result<GroupWord> {
        self.check_stage(k)?;
        let t = self.tree(k);
        if !t.vertices().contains(&x) || t.degree(x) != self.d {
            return Err(Error::NotBranchPoint(x));
        }
        let path = t.path_word(self.root(), x)?;
        self.sigma.apply_n(&p_star(self.d, &path)?, k)
    }

    /// `σ(p_*(γ_{k+1}(x_0, x))) = p_*(γ_k(x_0, x))`.
    pub fn f0_increment_holds(&self, k: usize, x: VertexId) -> Result<bool> {
        self.check_stage(k + 1)?;
        let root = self.root();
        let lo = p_star(self.d, &self.tree(k).path_word(root, x)?)?;
        let hi = p_star(self.d, &self.tree(k + 1).path_word(root, x)?)?;
        Ok(self.sigma.apply(&hi)?.0 == lo)
    }

    /// Branch points of `T_k` whose group-word label differs from the
    /// integer label.
    pub fn f0_mismatches(&self, k: usize) -> Result<Vec<VertexId>> {
        let pts: Vec<VertexId> = self.branch_points(k).into_iter().collect();
        let checked = par::map(&pts, |&x| -> Result<Option<VertexId>> {
            let word = self.f0(k, x)?;
            let ok = self.label(x).is_some_and(|len| self.label_word(len) == word);
            Ok((!ok).then_some(x))
        });
        checked.into_iter().filter_map(|r| r.transpose()).collect()
    }

    /// Both directions of the correspondence between branch points of `T_n`
    /// and inverse prefixes of `ω` of length `<= |l_n|`, on group words.
    pub fn f0_bijection(&self, n: usize) -> Result<BijectionAudit> {
        let mut audit = BijectionAudit::default();
        let mut seen: BTreeMap<usize, VertexId> = BTreeMap::new();
        for x in self.branch_points(n) {
            let word = self.f0(n, x)?;
            let u = word.as_inverse_of_positive().unwrap_or_default();
            if self.sub.fixed_point_prefix(u.len())? != u {
                audit.not_prefix_inverse.push(x);
                continue;
            }
            if let Some(y) = seen.insert(u.len(), x) {
                audit.collisions.push((y, x));
            }
        }
        let top = seen.keys().next_back().copied().unwrap_or(0);
        audit.missed = (0..=top).filter(|l| !seen.contains_key(l)).collect();
        Ok(audit)
    }

    fn first_seen(&self, x: VertexId) -> i64 {
        if x == self.root() {
            -(self.d as i64 - 2)
        } else {
            self.labels.born[&x] as i64
        }
    }

    pub fn branch_labels(&self, n: usize) -> Vec<BranchLabel> {
        self.branch_points(n)
            .into_iter()
            .filter_map(|x| {
                let len = self.label(x)?;
                Some(BranchLabel { word: self.label_word(len), stage_first_seen: self.first_seen(x) })
            })
            .collect()
    }

    /// `f_0` images of the branch points of `T_m`.
    pub fn branch_inventory(&self, m: usize) -> BTreeSet<GroupWord> {
        self.branch_points(m).into_iter().filter_map(|x| self.label(x)).map(|l| self.label_word(l)).collect()
    }

    /// Stage at which `label` first labels a branch point; `-(d-2)` for `ε`.
    pub fn apparition_step(&self, label: &GroupWord) -> Result<i64> {
        let unknown = || Error::UnknownLabel(label.to_string(), self.max_stage());
        let u = label.as_inverse_of_positive().ok_or_else(unknown)?;
        if u.len() + 2 > self.omega.len() || self.omega[..u.len()] != u[..] {
            return Err(unknown());
        }
        let x = self.vertex_of_len(u.len()).ok_or_else(unknown)?;
        Ok(self.first_seen(x))
    }

    /// Integer labels of the branch points born at stage `n >= 1`.
    pub fn labels_born_at(&self, n: usize) -> Vec<usize> {
        self.labels
            .by_vertex
            .iter()
            .filter(|(x, _)| **x != self.root() && self.labels.born[x] == n)
            .map(|(_, &l)| l)
            .collect()
    }

    /// Simple arcs of `T_n`; needs the tower up to `n + 2d - 2`.
    pub fn simple_arcs(&self, n: usize) -> Result<Vec<Arc>> {
        self.check_stage(n + 2 * self.d - 2)?;
        let edges = self.tree(n).edges();
        let arcs = par::map_range(edges.len(), |i| -> Result<Arc> {
            let e = edges[i];
            for k in 1..=2 * self.d - 2 {
                let path = self.tree(n + k).path_vertices(e.src, e.dst)?;
                match path.len() {
                    2 => continue,
                    3 => {
                        let splitter = path[1];
                        let len = self.label(splitter).ok_or(Error::NotBranchPoint(splitter))?;
                        return Ok(Arc {
                            stage: n,
                            index: i,
                            s: e.src,
                            t: e.dst,
                            color: e.color,
                            steps: k,
                            splitter,
                            u: self.omega[..len].to_vec(),
                        });
                    }
                    _ => break,
                }
            }
            Err(Error::NoSplit(e.src, e.dst))
        });
        arcs.into_iter().collect()
    }

    /// `out[N][i]`: the edge of `T_n` that edge `i` of `T_N` descends from,
    /// for `n <= N <= max_stage`; empty below `n`.
    pub fn edge_arcs(&self, n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.max_stage() + 1];
        if n > self.max_stage() {
            return out;
        }
        out[n] = (0..self.tree(n).edges().len()).collect();
        for big in n + 1..=self.max_stage() {
            out[big] = self.tower.parent[big].iter().map(|&p| out[big - 1][p]).collect();
        }
        out
    }

    /// Arc of `T_n` containing each branch point born after stage `n`,
    /// keyed by label length, read from tree ancestry alone.
    pub fn label_arcs(&self, n: usize) -> BTreeMap<usize, usize> {
        let arcs = self.edge_arcs(n);
        self.labels
            .by_vertex
            .iter()
            .filter_map(|(x, &len)| {
                let born = *self.labels.born.get(x)?;
                (born > n).then(|| (len, arcs[born - 1][self.labels.origin_edge[x]]))
            })
            .collect()
    }

    /// Labels born at `n` in `1..=n_max` that are not `v^{-1} σ^n(d^{-1})`
    /// with `v^{-1}` born at a stage in `[n-(2d-2), n-(d-1)]`.
    pub fn apparition_chain_failures(&self, n_max: usize) -> Result<Vec<usize>> {
        self.check_stage(n_max)?;
        let d = self.d;
        let d_inv = GroupWord::inverse_of_positive(&[d as Letter]);
        let mut bad = Vec::new();
        for n in 1..=n_max {
            let tail = self.sigma.apply_n(&d_inv, n)?;
            for len in self.labels_born_at(n) {
                let v = self.label_word(len).mul(&tail.inverse());
                let ok = match self.apparition_step(&v) {
                    Ok(m) => (n as i64 - (2 * d as i64 - 2)..=n as i64 - (d as i64 - 1)).contains(&m),
                    Err(_) => false,
                };
                if !ok {
                    bad.push(len);
                }
            }
        }
        Ok(bad)
    }

    /// Labels born at `n` in `1..=n_max` whose automatic writing has
    /// largest exponent outside `{n-1, n}`.
    pub fn automatic_writing_failures(&self, n_max: usize) -> Result<Vec<usize>> {
        self.check_stage(n_max)?;
        let mut bad = Vec::new();
        for n in 1..=n_max {
            for len in self.labels_born_at(n) {
                let top = automatic_writing(&self.sub, &self.omega[..len])?.last().copied();
                if !matches!(top, Some(a) if a as usize + 1 == n || a as usize == n) {
                    bad.push(len);
                }
            }
        }
        Ok(bad)
    }

    /// For labels born at `n` whose automatic writing ends with exponent
    /// `n`: the color-1 neighbor must be a branch point labeled by the
    /// writing with its last term dropped.
    pub fn color_one_neighbor_failures(&self, n_max: usize) -> Result<Vec<usize>> {
        self.check_stage(n_max)?;
        let mut bad = Vec::new();
        for n in 1..=n_max {
            let t = self.tree(n);
            for len in self.labels_born_at(n) {
                let mut exps = automatic_writing(&self.sub, &self.omega[..len])?;
                if exps.last().copied() != Some(n as u32) {
                    continue;
                }
                exps.pop();
                let want = word_of_writing(&self.sub, &exps).len();
                let x = self.labels.by_len[&len];
                let y = t.edges().iter().find(|e| e.src == x && e.color == 1).map(|e| e.dst);
                let ok = y.is_some_and(|y| t.degree(y) == self.d && self.label(y) == Some(want));
                if !ok {
                    bad.push(len);
                }
            }
        }
        Ok(bad)
    }

    /// Arcs of `T_n` at the root whose label `u` is not some `σ^k(1)`.
    pub fn root_arc_failures(&self, n: usize) -> Result<Vec<usize>> {
        let root = self.root();
        let arcs = self.simple_arcs(n)?;
        let top = arcs.iter().map(|a| a.u.len()).max().unwrap_or(0);
        let mut powers = vec![vec![1 as Letter]];
        while powers.last().map_or(0, Vec::len) < top {
            let next = self.sub.apply(powers.last().expect("nonempty"))?;
            powers.push(next);
        }
        Ok(arcs
            .iter()
            .filter(|a| (a.s == root || a.t == root) && !powers.contains(&a.u))
            .map(|a| a.index)
            .collect())
    }

    /// Vertices of `T_{n+depth}` met by descendants of two distinct edges of
    /// `T_n` that are not labeled branch points of `T_n`.
    pub fn shared_point_failures(&self, n: usize, depth: usize) -> Result<Vec<VertexId>> {
        let big = n + depth;
        self.check_stage(big)?;
        let arcs = self.edge_arcs(n);
        let mut touching: BTreeMap<VertexId, BTreeSet<usize>> = BTreeMap::new();
        for (i, e) in self.tree(big).edges().iter().enumerate() {
            for v in [e.src, e.dst] {
                touching.entry(v).or_default().insert(arcs[big][i]);
            }
        }
        let base = self.branch_points(n);
        Ok(touching
            .into_iter()
            .filter(|(v, s)| s.len() >= 2 && !(base.contains(v) && self.label(*v).is_some()))
            .map(|(v, _)| v)
            .collect())
    }
}

/// Problems with the identification of the `l_m` and the bispecial factors
/// up to length `max_len`: `l_m^{-1}` must list the bispecials in order and
/// each `l_k` must be a proper suffix of `l_{k+1}`.
pub fn bispecial_agreement(d: usize, max_len: usize) -> Result<Vec<String>> {
    let sub = Substitution::family(d)?;
    let bisp = bispecial_by_generation(&sub, max_len)?;
    let mut problems = Vec::new();
    let mut prev = GroupWord::identity();
    for (i, b) in bisp.iter().enumerate() {
        let m = i + 1;
        let l = l_word(d, m)?;
        if l.as_inverse_of_positive().as_deref() != Some(&b[..]) {
            problems.push(format!("l_{m} = {l} but bispecial {} expected", word_to_string(b)));
        }
        if !(l.ends_with(&prev) && l.len() > prev.len()) {
            problems.push(format!("l_{} is not a proper suffix of l_{m}", m - 1));
        }
        prev = l;
    }
    Ok(problems)
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    pub m: usize,
    /// Length-`m` factors with their estimated measures.
    pub cylinders: Vec<(String, f64)>,
    pub class_count: usize,
    pub expected_class_count: usize,
    /// A stage `n` with `determined_partition(n) = m`, if any.
    pub determined_by: Option<usize>,
}

pub fn partition_report(d: usize, m: usize, prefix_len: usize, tol: f64) -> Result<PartitionReport> {
    let sub = Substitution::family(d)?;
    let spec = measure_spectrum(&sub, m, prefix_len, tol)?;
    let mut determined_by = None;
    for n in 0.. {
        let k = determined_partition(d, n)?;
        if k == m {
            determined_by = Some(n);
        }
        if k >= m {
            break;
        }
    }
    Ok(PartitionReport {
        m,
        cylinders: spec.cylinders.iter().map(|c| (word_to_string(&c.word), c.estimate)).collect(),
        class_count: spec.class_count,
        expected_class_count: expected_class_count(&sub, m)?,
        determined_by,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ArcCylinderReport {
    pub stage: usize,
    pub m: usize,
    pub arc_count: usize,
    pub factor_count: usize,
    /// Length-`m` suffixes of arc labels that repeat or are not factors.
    pub unexpected_suffixes: Vec<String>,
    /// Length-`m` factors no arc label ends with.
    pub missed_factors: Vec<String>,
    /// Later branch points checked against the arc containing them.
    pub later_checked: usize,
    /// Labels whose length-`m` suffix differs from that of their arc.
    pub sorting_failures: Vec<usize>,
    /// Pairs of arcs whose realized subtrees share more than a point.
    pub overlapping_arcs: Vec<(usize, usize)>,
}

impl ArcCylinderReport {
    pub fn passed(&self) -> bool {
        self.unexpected_suffixes.is_empty()
            && self.missed_factors.is_empty()
            && self.sorting_failures.is_empty()
            && self.overlapping_arcs.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometryAudit {
    pub letter: Letter,
    pub stage: usize,
    pub domain_size: usize,
    pub pairs: usize,
    pub distance_failures: Vec<(usize, usize)>,
    pub path_word_failures: Vec<(usize, usize)>,
    pub conjugacy_failures: Vec<usize>,
    /// Labels where the symbolic domain (next letter of `ω`) and the
    /// geometric one (stage-0 arc holding the image) disagree.
    pub domain_mismatches: Vec<usize>,
}

impl IsometryAudit {
    pub fn passed(&self) -> bool {
        self.distance_failures.is_empty()
            && self.path_word_failures.is_empty()
            && self.conjugacy_failures.is_empty()
            && self.domain_mismatches.is_empty()
    }
}

/// Labeled tower with its realization.
#[derive(Clone, Debug)]
pub struct CoreMap {
    lt: LabeledTower,
    real: Realization,
}

impl CoreMap {
    pub fn family(d: usize, max_stage: usize) -> Result<Self> {
        let tower = TreeTower::family(d, max_stage)?;
        let lt = LabeledTower::from_tower(tower.clone())?;
        let real = Realization::from_tower(tower)?;
        Ok(CoreMap { lt, real })
    }

    pub fn labeled(&self) -> &LabeledTower {
        &self.lt
    }

    pub fn realization(&self) -> &Realization {
        &self.real
    }

    pub fn d(&self) -> usize {
        self.lt.d
    }

    fn point_of_len(&self, len: usize) -> Result<&FreePoint> {
        let x = self
            .lt
            .vertex_of_len(len)
            .ok_or_else(|| Error::UnknownLabel(format!("length {len}"), self.lt.max_stage()))?;
        self.real.embedding(self.lt.max_stage()).point(x)
    }

    /// `f_Q(u^{-1} ω)`: the realized point of the branch point labeled
    /// `u^{-1}`.
    pub fn fq_branch(&self, label: &GroupWord) -> Result<FreePoint> {
        self.lt.apparition_step(label)?;
        let len = label.len();
        self.point_of_len(len).cloned()
    }

    /// Lengths `|σ^{α_p}(1) … σ^{α_0}(1)|` of the truncations of a writing,
    /// after checking the gaps and that each truncation is a prefix of `ω`.
    fn writing_lengths(&self, exponents: &[u32]) -> Result<Vec<usize>> {
        let d = self.d();
        if exponents.windows(2).any(|w| w[1] < w[0] + d as u32) {
            return Err(Error::ExponentGap { d, exponents: exponents.to_vec() });
        }
        let mut out = vec![0];
        for k in 1..=exponents.len() {
            let w = word_of_writing(&self.lt.sub, &exponents[..k]);
            if w.len() + 2 > self.lt.omega.len() {
                return Err(Error::UnknownLabel(word_to_string(&w), self.lt.max_stage()));
            }
            if self.lt.omega[..w.len()] != w[..] {
                return Err(Error::NotAPrefix);
            }
            out.push(w.len());
        }
        Ok(out)
    }

    /// Point of the writing truncated to its first `depth` exponents.
    pub fn fq_approx(&self, exponents: &[u32], depth: usize) -> Result<FreePoint> {
        let lens = self.writing_lengths(&exponents[..depth.min(exponents.len())])?;
        self.point_of_len(*lens.last().expect("nonempty")).cloned()
    }

    /// For each exponent `α` of the writing: the distance moved when it is
    /// appended, and the predicted `η^{-α}`.
    pub fn fq_steps(&self, exponents: &[u32]) -> Result<Vec<(AlgLength, AlgLength)>> {
        let lens = self.writing_lengths(exponents)?;
        let d = self.d();
        lens.windows(2)
            .zip(exponents)
            .map(|(w, &a)| {
                let moved = crate::realization::point_distance(self.point_of_len(w[0])?, self.point_of_len(w[1])?);
                Ok((moved, AlgLength::eta_pow(d, -(a as i32))))
            })
            .collect()
    }

    /// Finite-stage form of the arc/cylinder correspondence at stage `n`:
    /// arcs biject onto length-`m` factors through the suffixes of their
    /// labels, later branch points fall in the arc of matching suffix, and
    /// arcs realized at the last stage meet pairwise in at most one point.
    pub fn arc_cylinder_correspondence(&self, n: usize) -> Result<ArcCylinderReport> {
        let d = self.d();
        let m = determined_partition(d, n)?;
        let arcs = self.lt.simple_arcs(n)?;
        let sub = &self.lt.sub;
        let factors: BTreeSet<Word> = language(sub, m)?.factors.into_iter().collect();
        let suffix = |u: &[Letter]| u[u.len().saturating_sub(m)..].to_vec();
        let mut seen: BTreeMap<Word, usize> = BTreeMap::new();
        let mut unexpected_suffixes = Vec::new();
        for a in &arcs {
            let s = suffix(&a.u);
            if !factors.contains(&s) || seen.insert(s.clone(), a.index).is_some() {
                unexpected_suffixes.push(word_to_string(&s));
            }
        }
        let missed_factors =
            factors.iter().filter(|f| !seen.contains_key(*f)).map(|f| word_to_string(f)).collect();

        let by_arc = self.lt.label_arcs(n);
        let sorting_failures: Vec<usize> = by_arc
            .iter()
            .filter(|(&len, &arc)| suffix(&self.lt.omega[..len]) != suffix(&arcs[arc].u))
            .map(|(&len, _)| len)
            .collect();

        let big = self.lt.max_stage();
        let owner = &self.lt.edge_arcs(n)[big];
        let emb = self.real.embedding(big);
        let segs: Vec<(&FreePoint, &FreePoint)> =
            self.lt.tree(big).edges().iter().map(|e| (&emb.points[&e.src], &emb.points[&e.dst])).collect();
        let mut overlapping: BTreeSet<(usize, usize)> = BTreeSet::new();
        let hits = par::map_range(segs.len(), |i| {
            ((i + 1)..segs.len())
                .filter(|&j| owner[i] != owner[j])
                .filter(|&j| !doubled_overlap(segs[i].0, segs[i].1, segs[j].0, segs[j].1).is_zero())
                .map(|j| (owner[i].min(owner[j]), owner[i].max(owner[j])))
                .collect::<Vec<_>>()
        });
        overlapping.extend(hits.into_iter().flatten());

        Ok(ArcCylinderReport {
            stage: n,
            m,
            arc_count: arcs.len(),
            factor_count: factors.len(),
            unexpected_suffixes,
            missed_factors,
            later_checked: by_arc.len(),
            sorting_failures,
            overlapping_arcs: overlapping.into_iter().collect(),
        })
    }

    /// Labels `u^{-1}` at stage `n` with `ua` a prefix of `ω` of length at
    /// most `|l_n|`, i.e. `u^{-1}ω` starts with `a`.
    fn domain(&self, a: Letter, n: usize) -> Vec<usize> {
        let top = self.lt.top_len(n);
        (0..top).filter(|&l| self.lt.omega[l] == a).collect()
    }

    /// `φ_a` on branch points of `T_n`: the point labeled `u^{-1}` goes to
    /// the one labeled `a^{-1}u^{-1}`.
    pub fn phi(&self, a: Letter, n: usize) -> BTreeMap<VertexId, VertexId> {
        self.domain(a, n).into_iter().map(|l| (self.lt.labels.by_len[&l], self.lt.labels.by_len[&(l + 1)])).collect()
    }

    pub fn isometry_audit(&self, a: Letter, n: usize) -> Result<IsometryAudit> {
        let dom = self.domain(a, n);
        let phi = self.phi(a, n);
        let t = self.lt.tree(n);
        let v = |l: usize| self.lt.labels.by_len[&l];
        let a_inv = GroupWord::inverse_of_positive(&[a]);

        let mut conjugacy_failures = Vec::new();
        let mut domain_mismatches = Vec::new();
        let stage0 = self.lt.simple_arcs(0)?;
        let arc0 = self.lt.label_arcs(0);
        for &l in &dom {
            let shifted = a_inv.mul(&self.lt.label_word(l));
            let lhs = self.fq_branch(&shifted)?;
            let rhs = self.real.embedding(self.lt.max_stage()).point(phi[&v(l)])?;
            if &lhs != rhs {
                conjugacy_failures.push(l);
            }
            let geometric = arc0.get(&(l + 1)).and_then(|&i| stage0[i].u.last().copied());
            if geometric != Some(a) {
                domain_mismatches.push(l);
            }
        }

        let pairs: Vec<(usize, usize)> =
            dom.iter().enumerate().flat_map(|(i, &x)| dom[i + 1..].iter().map(move |&y| (x, y))).collect();
        let checks = par::map(&pairs, |&(x, y)| -> Result<(bool, bool)> {
            let before = self.real.distance(n, v(x), v(y))?;
            let after = self.real.distance(n, v(x + 1), v(y + 1))?;
            let w = t.path_word(v(x), v(y))?;
            let wa = t.path_word(v(x + 1), v(y + 1))?;
            Ok((before == after, w == wa))
        });
        let mut distance_failures = Vec::new();
        let mut path_word_failures = Vec::new();
        for (pair, r) in pairs.iter().zip(checks) {
            let (dist_ok, word_ok) = r?;
            if !dist_ok {
                distance_failures.push(*pair);
            }
            if !word_ok {
                path_word_failures.push(*pair);
            }
        }
        Ok(IsometryAudit {
            letter: a,
            stage: n,
            domain_size: dom.len(),
            pairs: pairs.len(),
            distance_failures,
            path_word_failures,
            conjugacy_failures,
            domain_mismatches,
        })
    }

    /// Pairs of distinct letters whose domains, realized at stage `n` as the
    /// hulls of their labeled branch points, share more than one point.
    pub fn domain_overlaps(&self, n: usize) -> Result<Vec<(Letter, Letter)>> {
        let d = self.d() as Letter;
        let top = self.lt.top_len(n);
        let hull = |a: Letter| -> Result<Vec<(FreePoint, FreePoint)>> {
            let pts: Vec<&FreePoint> = (0..=top)
                .filter(|&l| self.lt.omega[l] == a)
                .map(|l| self.point_of_len(l))
                .collect::<Result<_>>()?;
            Ok(pts.iter().skip(1).map(|p| (pts[0].clone(), (*p).clone())).collect())
        };
        let hulls: Vec<Vec<(FreePoint, FreePoint)>> = (1..=d).map(hull).collect::<Result<_>>()?;
        let mut out = Vec::new();
        for a in 0..hulls.len() {
            for b in a + 1..hulls.len() {
                let hit = hulls[a]
                    .iter()
                    .any(|(p, q)| hulls[b].iter().any(|(r, s)| !doubled_overlap(p, q, r, s).is_zero()));
                if hit {
                    out.push((a as Letter + 1, b as Letter + 1));
                }
            }
        }
        Ok(out)
    }

    /// Branch pairs of `T_n` whose realized distance is not
    /// `η^{-n} Σ V_{σ^{-1}}(w_i)` over the projected path word, or whose
    /// path word leaves `1..=d` or cancels under projection.
    pub fn bijiso_failures(&self, n: usize) -> Result<Vec<(VertexId, VertexId)>> {
        let d = self.d();
        let t = self.lt.tree(n);
        let pts: Vec<VertexId> = self.lt.branch_points(n).into_iter().collect();
        let pairs: Vec<(VertexId, VertexId)> =
            pts.iter().enumerate().flat_map(|(i, &x)| pts[i + 1..].iter().map(move |&y| (x, y))).collect();
        let checks = par::map(&pairs, |&(x, y)| -> Result<bool> {
            let w = t.path_word(x, y)?;
            if w.iter().any(|l| l.base as usize > d) {
                return Ok(false);
            }
            let g = p_star(d, &w)?;
            if g.len() != w.len() {
                return Ok(false);
            }
            let want = legal_path_distance(d, &g)?.mul_eta_pow(-(n as i32));
            Ok(self.real.distance(n, x, y)? == want)
        });
        let mut bad = Vec::new();
        for (pair, ok) in pairs.into_iter().zip(checks) {
            if !ok? {
                bad.push(pair);
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gw(s: &str) -> GroupWord {
        GroupWord::parse(s).unwrap()
    }

    #[test]
    fn l_words_d3() {
        assert_eq!(l_word(3, 0).unwrap(), GroupWord::identity());
        assert_eq!(l_word(3, 1).unwrap(), GroupWord::inverse_of_positive(&[1]));
        assert_eq!(l_word(3, 2).unwrap(), GroupWord::inverse_of_positive(&[1, 2]));
        assert_eq!(l_word(3, 3).unwrap(), GroupWord::inverse_of_positive(&[1, 2, 3, 1]));
        assert_eq!(l_word(3, 4).unwrap(), GroupWord::inverse_of_positive(&[1, 2, 3, 1, 1, 2]));
        let lens: Vec<usize> = (0..8).map(|m| l_len(3, m).unwrap()).collect();
        assert_eq!(lens, vec![0, 1, 2, 4, 6, 10, 15, 23]);
    }

    #[test]
    fn determined_lengths_d3() {
        let ms: Vec<usize> = (0..6).map(|n| determined_partition(3, n).unwrap()).collect();
        assert_eq!(ms, vec![1, 2, 3, 5, 7, 11]);
    }

    #[test]
    fn legal_distance_examples() {
        assert_eq!(legal_path_distance(3, &gw("1")).unwrap(), AlgLength::one(3));
        assert!(legal_path_distance(3, &GroupWord::identity()).unwrap().is_zero());
        assert_eq!(legal_path_distance(3, &gw("3-")).unwrap(), AlgLength::eta_pow(3, 1));
        assert!(legal_path_distance(3, &gw("4")).is_err());
    }

    #[test]
    fn f0_examples() {
        let lt = LabeledTower::family(3, 4).unwrap();
        assert_eq!(lt.f0(0, 0).unwrap(), GroupWord::identity());
        assert_eq!(lt.f0(3, 0).unwrap(), GroupWord::identity());
        assert_eq!(lt.f0(1, 4).unwrap(), gw("1-"));
        assert_eq!(lt.f0(2, 4).unwrap(), gw("1-"));
        assert!(lt.f0_increment_holds(1, 4).unwrap());
        assert!(matches!(lt.f0(1, 5), Err(Error::NotBranchPoint(5))));
        let new2: Vec<GroupWord> = lt.labels_born_at(2).into_iter().map(|l| lt.label_word(l)).collect();
        assert_eq!(new2, vec![gw("2-.1-")]);
        for k in 0..=4 {
            assert!(lt.f0_mismatches(k).unwrap().is_empty());
        }
    }

    #[test]
    fn inventory_d3() {
        let lt = LabeledTower::family(3, 5).unwrap();
        assert_eq!(lt.branch_inventory(0), BTreeSet::from([GroupWord::identity()]));
        assert_eq!(lt.branch_inventory(1), BTreeSet::from([GroupWord::identity(), gw("1-")]));
        let three = lt.branch_inventory(3);
        let want: BTreeSet<GroupWord> = l_word(3, 3).unwrap().suffixes().into_iter().collect();
        assert_eq!(three, want);
        assert_eq!(three.len(), 5);
        assert_eq!(lt.apparition_step(&GroupWord::identity()).unwrap(), -1);
        assert_eq!(lt.apparition_step(&gw("1-")).unwrap(), 1);
        assert!(lt.apparition_step(&gw("2-")).is_err());
    }

    #[test]
    fn stage_zero_arcs() {
        let lt = LabeledTower::family(3, 4).unwrap();
        let arcs = lt.simple_arcs(0).unwrap();
        let got: Vec<(u8, Word)> = arcs.iter().map(|a| (a.color, a.u.clone())).collect();
        assert_eq!(got, vec![(1, vec![1, 2, 3]), (2, vec![1]), (3, vec![1, 2])]);
        assert!(arcs.iter().all(|a| a.steps <= 4));
        assert!(lt.simple_arcs(1).is_err());
    }

    #[test]
    fn correspondence_small() {
        let cm = CoreMap::family(3, 6).unwrap();
        for (n, arcs) in [(1, 5), (2, 7)] {
            let r = cm.arc_cylinder_correspondence(n).unwrap();
            assert_eq!((r.arc_count, r.factor_count), (arcs, arcs));
            assert!(r.passed(), "{r:?}");
            assert!(r.later_checked > 0);
        }
    }

    #[test]
    fn isometries_small() {
        let cm = CoreMap::family(3, 6).unwrap();
        for a in 1..=3 {
            let audit = cm.isometry_audit(a, 6).unwrap();
            assert!(audit.passed(), "{audit:?}");
        }
        assert_eq!(cm.phi(1, 1).get(&0), Some(&4));
        assert!(cm.domain_overlaps(6).unwrap().is_empty());
        assert!(cm.bijiso_failures(6).unwrap().is_empty());
    }

    #[test]
    fn approximation_steps() {
        let cm = CoreMap::family(3, 10).unwrap();
        let steps = cm.fq_steps(&[0, 3, 6]).unwrap();
        assert_eq!(steps.len(), 3);
        for (moved, want) in steps {
            assert_eq!(moved, want);
        }
        assert!(cm.fq_branch(&GroupWord::identity()).unwrap().is_origin());
        assert!(matches!(cm.fq_steps(&[0, 1]), Err(Error::ExponentGap { .. })));
    }

    #[test]
    fn bispecials_are_l_words() {
        assert!(bispecial_agreement(3, 60).unwrap().is_empty());
        assert!(bispecial_agreement(4, 60).unwrap().is_empty());
    }

    #[test]
    fn partition_classes() {
        let r = partition_report(3, 2, 200_000, 1e-3).unwrap();
        assert_eq!((r.class_count, r.determined_by), (4, Some(1)));
        let r = partition_report(3, 4, 200_000, 1e-3).unwrap();
        assert_eq!((r.class_count, r.determined_by), (5, None));
    }
}
