//! Audit suites over the symbolic system, the trees, their realization and
//! the branch-point coding, collected into a versioned JSON report.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::core_map::{bispecial_agreement, determined_partition, l_len, l_word, partition_report, CoreMap};
use crate::error::{Error, Result};
use crate::free_group::{
    cancellation_report, family_eta, nielsen_example, tribonacci_inverse, Automorphism, GroupWord,
};
use crate::par;
use crate::prefix_suffix::{automatic_writing, shift_development, word_of_writing};
use crate::rauzy_viz::{
    arc_and_cylinder_clouds, congruence, export_csv, family_basis, fractal_cloud, render_svg, same_partition,
    sup_norm, Coloring,
};
use crate::realization::{
    collisions, degree_violations, edge_length_violations, hausdorff_gap, moved_vertices, overlapping_segments,
};
use crate::symbolic::{
    bispecial_by_generation, expected_class_count, family_lambda, language, measure_spectrum, perron,
    window_frequencies, word_to_string, Letter, Substitution,
};
use crate::tree_subst::{family_rules, trunk_agrees_with_inverse, validate, TreeTower};

pub const REPORT_VERSION: u32 = 1;
const MAX_WITNESSES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    /// The property checked, stated in words.
    pub property: String,
    pub stage: Option<usize>,
    pub status: Status,
    pub witnesses: Vec<String>,
}

impl Check {
    /// Passes iff there are no witnesses; keeps the first few.
    pub fn from_witnesses(property: &str, stage: Option<usize>, mut witnesses: Vec<String>) -> Self {
        let status = if witnesses.is_empty() { Status::Pass } else { Status::Fail };
        let extra = witnesses.len().saturating_sub(MAX_WITNESSES);
        witnesses.truncate(MAX_WITNESSES);
        if extra > 0 {
            witnesses.push(format!("... and {extra} more"));
        }
        Check { property: property.into(), stage, status, witnesses }
    }

    fn from_result(property: &str, stage: Option<usize>, r: Result<Vec<String>>) -> Self {
        match r {
            Ok(w) => Check::from_witnesses(property, stage, w),
            Err(e) => Check::from_witnesses(property, stage, vec![format!("error: {e}")]),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub report_version: u32,
    pub suite: String,
    pub d: usize,
    pub max_stage: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// One line per check: status, stage, property, first witness.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let stage = c.stage.map_or_else(|| "-".to_string(), |s| s.to_string());
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            let _ = write!(out, "{tag}  {stage:>3}  {}", c.property);
            if let Some(w) = c.witnesses.first() {
                let _ = write!(out, "  [{w}]");
            }
            out.push('\n');
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.checks.len());
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Words,
    Trees,
    Realization,
    Core,
    Rauzy,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Words => "words",
            Suite::Trees => "trees",
            Suite::Realization => "realization",
            Suite::Core => "core",
            Suite::Rauzy => "rauzy",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "words" => Suite::Words,
            "trees" => Suite::Trees,
            "realization" => Suite::Realization,
            "core" => Suite::Core,
            "rauzy" => Suite::Rauzy,
            "all" => Suite::All,
            _ => return Err(Error::Parse(format!("unknown suite {s:?}"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub d: usize,
    pub max_stage: usize,
    /// Length of the fixed-point prefix used for frequency estimates.
    pub prefix_len: usize,
    /// Snapping tolerance for measure estimates.
    pub tol: f64,
    /// Number of prefixes in Rauzy clouds.
    pub rauzy_depth: usize,
}

impl VerifyConfig {
    /// Stage limits `12` for `d = 3` and `10` otherwise.
    pub fn new(d: usize) -> Self {
        VerifyConfig {
            d,
            max_stage: if d == 3 { 12 } else { 10 },
            prefix_len: 1_000_000,
            tol: 1e-3,
            rauzy_depth: 20_000,
        }
    }
}

type Job<'a> = Box<dyn Fn() -> Vec<Check> + Send + Sync + 'a>;

pub fn run(suite: Suite, cfg: &VerifyConfig) -> Result<Report> {
    if cfg.d < 3 {
        return Err(Error::Dimension(cfg.d));
    }
    let needs_core = matches!(suite, Suite::Realization | Suite::Core | Suite::All);
    let core = if needs_core { Some(CoreMap::family(cfg.d, cfg.max_stage)?) } else { None };
    let mut jobs: Vec<Job> = Vec::new();
    let want = |s: Suite| suite == s || suite == Suite::All;
    if want(Suite::Words) {
        jobs.extend(word_jobs(cfg));
    }
    if want(Suite::Trees) {
        jobs.extend(tree_jobs(cfg));
    }
    if let Some(cm) = &core {
        if want(Suite::Realization) {
            jobs.extend(realization_jobs(cfg, cm));
        }
        if want(Suite::Core) {
            jobs.extend(core_jobs(cfg, cm));
        }
    }
    if suite == Suite::Rauzy || (suite == Suite::All && cfg.d == 3) {
        jobs.extend(rauzy_jobs(cfg));
    }
    let checks: Vec<Check> = par::map(&jobs, |job| job()).into_iter().flatten().collect();
    Ok(Report {
        report_version: REPORT_VERSION,
        suite: suite.name().into(),
        d: cfg.d,
        max_stage: cfg.max_stage,
        passed: checks.iter().all(Check::passed),
        checks,
    })
}

/// Pairs up `small` with entries of `big` within `tol` and returns what is
/// left of `big`, or `None` if some entry of `small` has no partner.
pub fn spectral_residue(big: &[(f64, f64)], small: &[(f64, f64)], tol: f64) -> Option<Vec<(f64, f64)>> {
    let mut rest = big.to_vec();
    for &(re, im) in small {
        let i = rest.iter().position(|&(a, b)| (a - re).hypot(b - im) < tol)?;
        rest.remove(i);
    }
    Some(rest)
}

fn word_jobs(cfg: &VerifyConfig) -> Vec<Job<'_>> {
    let d = cfg.d;
    let sub = move || Substitution::family(d);
    vec![
        Box::new(move || {
            let r = (|| {
                let s = sub()?;
                let mut bad = Vec::new();
                for n in 1..=30 {
                    let k = language(&s, n)?.factors.len();
                    if k != (d - 1) * n + 1 {
                        bad.push(format!("n={n}: {k} factors"));
                    }
                }
                Ok(bad)
            })();
            vec![Check::from_result("the number of factors of length n is (d-1)n+1 for n <= 30", None, r)]
        }),
        Box::new(move || {
            let r = (|| {
                let s = sub()?;
                let gen: BTreeSet<String> =
                    bispecial_by_generation(&s, 60)?.iter().map(|w| word_to_string(w)).collect();
                let mut brute = BTreeSet::new();
                for n in 1..=60 {
                    brute.extend(language(&s, n)?.bispecial.iter().map(|w| word_to_string(w)));
                }
                Ok(gen.symmetric_difference(&brute).cloned().collect())
            })();
            vec![Check::from_result(
                "bispecial factors built by the generation rule are exactly the enumerated ones up to length 60",
                None,
                r,
            )]
        }),
        Box::new(move || {
            let r = (|| {
                let s = sub()?;
                let m = s.incidence_matrix();
                let mut bad = Vec::new();
                if !m.is_primitive() {
                    bad.push("incidence matrix is not primitive".to_string());
                }
                let lambda = family_lambda(d);
                let p = perron(&m)?.eigenvalue;
                let di = d as i32;
                if (lambda.powi(di) - lambda.powi(di - 1) - 1.0).abs() >= 1e-12 || (p - lambda).abs() > 1e-9 {
                    bad.push(format!("lambda = {lambda}, Perron value {p}"));
                }
                let eta = family_eta(d);
                if (eta.powi(di) - eta - 1.0).abs() >= 1e-12 {
                    bad.push(format!("eta = {eta}"));
                }
                Ok(bad)
            })();
            vec![Check::from_result(
                "the incidence matrix is primitive with growth rate the root of x^d = x^(d-1) + 1, and the inverse grows like the root of x^d = x + 1",
                None,
                r,
            )]
        }),
        Box::new(move || {
            let r = (|| {
                let s = sub()?;
                let mut bad = Vec::new();
                for m in 1..=8 {
                    let spec = measure_spectrum(&s, m, cfg.prefix_len, cfg.tol)?;
                    let want = expected_class_count(&s, m)?;
                    if spec.class_count != want {
                        bad.push(format!("m={m}: {} classes, expected {want}", spec.class_count));
                    }
                }
                if d == 3 {
                    let e1 = measure_spectrum(&s, 1, cfg.prefix_len, cfg.tol)?.exponents;
                    if e1 != BTreeSet::from([2, 3, 4]) {
                        bad.push(format!("letter measures snap to exponents {e1:?}"));
                    }
                }
                Ok(bad)
            })();
            vec![Check::from_result(
                "cylinder measures are powers of 1/lambda, with d values for single letters, 2d-2 when a bispecial of length m-1 exists and 2d-1 otherwise",
                None,
                r,
            )]
        }),
        Box::new(move || {
            let r = (|| {
                let s = sub()?;
                let lambda = family_lambda(d);
                let prefix = s.fixed_point_prefix(cfg.prefix_len)?;
                let freqs: Vec<_> = (1..=2 * 4).map(|k| window_frequencies(&prefix, k)).collect();
                let mut bad = Vec::new();
                for k in 1..=4 {
                    for u in language(&s, k)?.factors {
                        if *u.last().expect("nonempty") as usize == d {
                            continue;
                        }
                        let su = s.apply(&u)?;
                        let lhs = freqs[k - 1].get(&u).copied().unwrap_or(0.0);
                        let rhs = lambda * freqs.get(su.len() - 1).and_then(|f| f.get(&su)).copied().unwrap_or(0.0);
                        if (lhs - rhs).abs() >= 2e-3 {
                            bad.push(format!("{}: {lhs} vs {rhs}", word_to_string(&u)));
                        }
                    }
                }
                Ok(bad)
            })();
            vec![Check::from_result(
                "a cylinder not ending in d has lambda times the measure of its image under the substitution",
                None,
                r,
            )]
        }),
        Box::new(move || {
            let r = (|| {
                let s = sub()?;
                let omega = s.fixed_point_prefix(3000)?;
                let mut bad = Vec::new();
                for k in 0..=omega.len() {
                    let w = automatic_writing(&s, &omega[..k])?;
                    if word_of_writing(&s, &w) != omega[..k] {
                        bad.push(format!("prefix of length {k}"));
                    }
                }
                for k in 0..=300 {
                    let dev = shift_development(&s, k, 16)?;
                    if let Err(e) = dev.check_admissible() {
                        bad.push(format!("shift {k}: {e}"));
                    }
                }
                Ok(bad)
            })();
            vec![Check::from_result(
                "every prefix of the fixed point has an automatic writing with gaps at least d, and the shifts have admissible developments",
                None,
                r,
            )]
        }),
        Box::new(move || {
            let r = (|| {
                let sigma = Automorphism::family(d)?;
                let inv = Automorphism::family_inverse(d)?;
                let mut bad = Vec::new();
                if !sigma.is_inverse_of(&inv) {
                    bad.push("the two maps are not mutually inverse".to_string());
                }
                let seeds: Vec<GroupWord> = (1..=d as Letter).map(|a| GroupWord::from_positive(&[a])).collect();
                for t in cancellation_report(&inv, &seeds, 12)? {
                    if !t.cancelled_at.is_empty() {
                        bad.push(format!("seed {} cancels at {:?}", t.seed, t.cancelled_at));
                    }
                }
                Ok(bad)
            })();
            vec![Check::from_result(
                "the inverse automorphism undoes the substitution and never cancels on single letters up to depth 12",
                None,
                r,
            )]
        }),
        Box::new(|| {
            let r = (|| {
                let mut bad = Vec::new();
                let trib = cancellation_report(&tribonacci_inverse(), &[GroupWord::parse("c")?], 12)?;
                if trib[0].cancelled_at.first() != Some(&2) {
                    bad.push(format!("Tribonacci inverse on c cancels at {:?}", trib[0].cancelled_at));
                }
                let niel = cancellation_report(&nielsen_example(), &[GroupWord::parse("a.c")?], 10)?;
                if niel[0].cancelled_at != (1..=10).collect::<Vec<_>>() {
                    bad.push(format!("Nielsen example on ac cancels at {:?}", niel[0].cancelled_at));
                }
                Ok(bad)
            })();
            vec![Check::from_result(
                "cancellation probes: the Tribonacci inverse first cancels on c at step 2, the Nielsen example cancels on ac at every step",
                None,
                r,
            )]
        }),
    ]
}

fn tree_jobs(cfg: &VerifyConfig) -> Vec<Job<'_>> {
    let d = cfg.d;
    let n_max = cfg.max_stage;
    vec![
        Box::new(move || {
            let r = family_rules(d).map(|ts| {
                validate(&ts)
                    .checks
                    .into_iter()
                    .filter(|c| !c.passed)
                    .map(|c| format!("condition {}: {:?}", c.condition, c.witnesses))
                    .collect()
            });
            vec![Check::from_result("the family rules satisfy the four validity conditions", None, r)]
        }),
        Box::new(move || {
            let r = (|| {
                let ts = family_rules(d)?;
                let mut bad: Vec<String> = trunk_agrees_with_inverse(&ts)?
                    .into_iter()
                    .filter(|(_, ok)| !ok)
                    .map(|(c, _)| format!("color {c}"))
                    .collect();
                let sig = Substitution::family(d)?.incidence_matrix().eigenvalues();
                let inv = Automorphism::family_inverse(d)?.matrix().eigenvalues();
                match spectral_residue(&ts.trunk_matrix().eigenvalues(), &inv, 1e-6) {
                    Some(rest) if rest.len() == d - 2 && rest.iter().all(|z| z.0.hypot(z.1) < 1e-6) => {}
                    other => bad.push(format!("trunk matrix spectrum leftover {other:?}")),
                }
                match spectral_residue(&ts.incidence_matrix().eigenvalues(), &sig, 1e-6) {
                    Some(rest) if rest.len() == d - 2 && rest.iter().all(|z| (z.0.hypot(z.1) - 1.0).abs() < 1e-6) => {}
                    other => bad.push(format!("rule matrix spectrum leftover {other:?}")),
                }
                Ok(bad)
            })();
            vec![Check::from_result(
                "trunks project to the inverse automorphism; the trunk matrix has its spectrum plus d-2 zeros, the rule matrix the substitution's plus d-2 unit values",
                None,
                r,
            )]
        }),
        Box::new(move || {
            let tower = match TreeTower::family(d, n_max) {
                Ok(t) => t,
                Err(e) => {
                    return vec![Check::from_witnesses("the iterated trees can be built", None, vec![e.to_string()])]
                }
            };
            let stages: Vec<usize> = (0..=n_max).collect();
            par::map(&stages, |&n| {
                let t = tower.stage(n);
                let mut bad = Vec::new();
                if !t.is_discerned() {
                    bad.push("two edges of one color leave or enter a vertex".to_string());
                }
                match determined_partition(d, n) {
                    Ok(m) if t.edges().len() == (d - 1) * m + 1 => {}
                    Ok(m) => bad.push(format!("{} edges, expected {}", t.edges().len(), (d - 1) * m + 1)),
                    Err(e) => bad.push(e.to_string()),
                }
                Check::from_witnesses(
                    "the tree is discerned and has (d-1)m+1 edges, m the cylinder length it determines",
                    Some(n),
                    bad,
                )
            })
        }),
    ]
}

fn realization_jobs<'a>(cfg: &'a VerifyConfig, cm: &'a CoreMap) -> Vec<Job<'a>> {
    let r = cm.realization();
    let n_max = cfg.max_stage;
    let mut jobs: Vec<Job<'a>> = Vec::new();
    for n in 0..=n_max {
        jobs.push(Box::new(move || {
            let edge: Vec<String> =
                edge_length_violations(r, n).iter().map(|v| format!("{:?}: {} vs {}", v.edge, v.found, v.expected)).collect();
            let mut checks =
                vec![Check::from_witnesses("every edge of color k is one syllable of length V_t(k) eta^-n", Some(n), edge)];
            let deg: Vec<String> = degree_violations(r, n).iter().map(|v| format!("vertex {v}")).collect();
            checks.push(Check::from_witnesses(
                "realized vertices have degree 1 or d, matching the tree",
                Some(n),
                deg,
            ));
            let mut inj: Vec<String> = collisions(r, n).iter().map(|p| format!("{p:?}")).collect();
            if n > 0 {
                inj.extend(moved_vertices(r, n).iter().map(|v| format!("vertex {v} moved")));
            }
            checks.push(Check::from_witnesses(
                "vertices are realized injectively and never move at later stages",
                Some(n),
                inj,
            ));
            if n > 0 {
                let g = hausdorff_gap(r, n);
                let bad = if g.value <= g.bound + 1e-12 {
                    Vec::new()
                } else {
                    vec![format!("gap {} above {} at vertex {:?}", g.value, g.bound, g.witness)]
                };
                checks.push(Check::from_witnesses(
                    "new points lie within eta^(-1-n) of the previous realized tree",
                    Some(n),
                    bad,
                ));
            }
            checks
        }));
    }
    jobs.push(Box::new(move || {
        let bad: Vec<String> = overlapping_segments(r, n_max).iter().map(|p| format!("edges {p:?}")).collect();
        vec![Check::from_witnesses("distinct realized edges meet in at most one point", Some(n_max), bad)]
    }));
    jobs
}

fn core_jobs<'a>(cfg: &'a VerifyConfig, cm: &'a CoreMap) -> Vec<Job<'a>> {
    let d = cfg.d;
    let n_max = cfg.max_stage;
    let lt = cm.labeled();
    let fmt_all = |v: Vec<usize>| v.into_iter().map(|l| format!("label length {l}")).collect::<Vec<_>>();
    let mut jobs: Vec<Job<'a>> = Vec::new();
    for n in 0..=n_max {
        jobs.push(Box::new(move || {
            let mut checks = Vec::new();
            let r = lt.f0_mismatches(n).map(|v| v.iter().map(|x| format!("vertex {x}")).collect());
            checks.push(Check::from_result(
                "branch labels computed in the free group agree with the prefix-length recursion",
                Some(n),
                r,
            ));
            if n < n_max {
                let r = (|| {
                    let mut bad = Vec::new();
                    for x in lt.branch_points(n) {
                        if !lt.f0_increment_holds(n, x)? {
                            bad.push(format!("vertex {x}"));
                        }
                    }
                    Ok(bad)
                })();
                checks.push(Check::from_result("branch labels do not depend on the stage used", Some(n), r));
            }
            let r = (|| {
                let inv = lt.branch_inventory(n);
                let l = l_word(d, n)?;
                let want: BTreeSet<GroupWord> = l.suffixes().into_iter().collect();
                let mut bad = Vec::new();
                if inv != want {
                    bad.push(format!("{} labels, {} suffixes of {l}", inv.len(), want.len()));
                }
                if inv.len() != l_len(d, n)? + 1 {
                    bad.push(format!("{} labels", inv.len()));
                }
                if (1..d).contains(&n) {
                    let new: Vec<GroupWord> = lt.labels_born_at(n).into_iter().map(|k| lt.label_word(k)).collect();
                    if new != vec![l.clone()] {
                        bad.push(format!("new labels {new:?}"));
                    }
                }
                Ok(bad)
            })();
            checks.push(Check::from_result(
                "the labels of the branch points are the suffixes of l_n, and l_n is the only new label for n < d",
                Some(n),
                r,
            ));
            let r = lt.f0_bijection(n).map(|a| {
                if a.passed() {
                    Vec::new()
                } else {
                    vec![format!("{a:?}")]
                }
            });
            checks.push(Check::from_result(
                "branch points correspond one to one with inverse prefixes of the fixed point up to the longest label",
                Some(n),
                r,
            ));
            let r = cm.bijiso_failures(n).map(|v| v.iter().map(|p| format!("{p:?}")).collect());
            checks.push(Check::from_result(
                "distances between branch points are eta^-n times the V-weighted length of the connecting path word",
                Some(n),
                r,
            ));
            checks
        }));
    }
    jobs.push(Box::new(move || {
        vec![
            Check::from_result(
                "each new label extends a label born d-1 to 2d-2 stages earlier by sigma^n(d^-1)",
                None,
                lt.apparition_chain_failures(n_max).map(fmt_all),
            ),
            Check::from_result(
                "labels born at stage n have automatic writings of top exponent n-1 or n",
                None,
                lt.automatic_writing_failures(n_max).map(fmt_all),
            ),
            Check::from_result(
                "when the top exponent is n, the color-1 neighbor is the branch point of the shortened writing",
                None,
                lt.color_one_neighbor_failures(n_max).map(fmt_all),
            ),
            Check::from_result(
                "the inverses of the l_m are the bispecial factors, each a proper suffix of the next",
                None,
                bispecial_agreement(d, 60),
            ),
        ]
    }));
    let arc_top = n_max.saturating_sub(2 * d - 2);
    for n in 0..=arc_top.min(n_max) {
        if n + 2 * d - 2 > n_max {
            break;
        }
        jobs.push(Box::new(move || {
            let r = cm.arc_cylinder_correspondence(n).map(|rep| if rep.passed() { Vec::new() } else { vec![format!("{rep:?}")] });
            let mut checks = vec![Check::from_result(
                "simple arcs match the cylinders of the determined length, later branch points sort into them, and arcs meet in at most a point",
                Some(n),
                r,
            )];
            let r = lt.root_arc_failures(n).map(|v| v.iter().map(|i| format!("arc {i}")).collect());
            checks.push(Check::from_result("arcs at the root are labeled by some sigma^k(1)", Some(n), r));
            let r = lt
                .shared_point_failures(n, (n_max - n).min(4))
                .map(|v| v.iter().map(|x| format!("vertex {x}")).collect());
            checks.push(Check::from_result(
                "points shared by two arcs are labeled branch points of the arc's stage",
                Some(n),
                r,
            ));
            checks
        }));
    }
    jobs.push(Box::new(move || {
        let r = (|| {
            let mut bad = Vec::new();
            let mut n = 0;
            loop {
                let m = determined_partition(d, n)?;
                if m > 11 {
                    break;
                }
                let rep = partition_report(d, m, cfg.prefix_len, cfg.tol)?;
                let want = if m == 1 { d } else { 2 * d - 2 };
                if rep.class_count != want {
                    bad.push(format!("m={m}: {} classes", rep.class_count));
                }
                n += 1;
            }
            Ok(bad)
        })();
        vec![Check::from_result(
            "partitions determined by a tree have d classes for m = 1 and 2d-2 otherwise",
            None,
            r,
        )]
    }));
    let iso_stage = n_max.min(8);
    for a in 1..=d as Letter {
        jobs.push(Box::new(move || {
            let r = cm.isometry_audit(a, iso_stage).map(|au| if au.passed() { Vec::new() } else { vec![format!("{au:?}")] });
            vec![Check::from_result(
                &format!("the partial map for letter {a} preserves distances and path words, and conjugates the shift"),
                Some(iso_stage),
                r,
            )]
        }));
    }
    jobs.push(Box::new(move || {
        let r = cm.domain_overlaps(iso_stage).map(|v| v.iter().map(|p| format!("letters {p:?}")).collect());
        let mut checks =
            vec![Check::from_result("domains of distinct partial maps share at most one point", Some(iso_stage), r)];
        let r = (|| {
            let mut bad = Vec::new();
            for exps in [vec![0u32], vec![0, d as u32], vec![1, d as u32 + 2, 2 * d as u32 + 3], vec![2, d as u32 + 3]] {
                match cm.fq_steps(&exps) {
                    Ok(steps) => {
                        for (i, (moved, want)) in steps.iter().enumerate() {
                            if moved != want {
                                bad.push(format!("{exps:?} step {i}: {moved} vs {want}"));
                            }
                        }
                    }
                    Err(Error::UnknownLabel(..)) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(bad)
        })();
        checks.push(Check::from_result(
            "appending sigma^a(1^-1) to an automatic writing moves the point by exactly eta^-a",
            None,
            r,
        ));
        checks
    }));
    jobs
}

fn rauzy_jobs(cfg: &VerifyConfig) -> Vec<Job<'_>> {
    let d = cfg.d;
    let depth = cfg.rauzy_depth;
    vec![
        Box::new(move || {
            let r = (|| {
                family_basis(d)?;
                let half = sup_norm(&fractal_cloud(d, 50_000, Coloring::None)?);
                let full = sup_norm(&fractal_cloud(d, 100_000, Coloring::None)?);
                Ok(if (full - half).abs() <= 0.01 * full { Vec::new() } else { vec![format!("{half} vs {full}")] })
            })();
            vec![Check::from_result(
                "the projected prefix orbit is bounded: its sup norm moves less than 1% from 50000 to 100000 prefixes",
                None,
                r,
            )]
        }),
        Box::new(move || {
            let r = (|| {
                let (arcs, cyl) = arc_and_cylinder_clouds(4, depth)?;
                let mut bad = Vec::new();
                if !same_partition(&arcs, &cyl) {
                    bad.push("colorings differ".to_string());
                }
                for c in congruence(&cyl) {
                    if c.rms_ratio >= 0.02 {
                        bad.push(format!("{} vs {}: {}", c.a, c.b, c.rms_ratio));
                    }
                }
                let again = fractal_cloud(d, depth, Coloring::Cylinder(7))?;
                if render_svg(&cyl) != render_svg(&again) || export_csv(&cyl) != export_csv(&again) {
                    bad.push("outputs differ between runs".to_string());
                }
                Ok(bad)
            })();
            vec![Check::from_result(
                "coloring by arcs of T_4 and by cylinders of length 7 give the same partition, equal-measure pieces are translates, and outputs are deterministic",
                Some(4),
                r,
            )]
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_matching() {
        let big = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)];
        assert_eq!(spectral_residue(&big, &[(1.0, 0.0)], 1e-9), Some(vec![(0.0, 0.0), (2.0, 0.0)]));
        assert_eq!(spectral_residue(&big, &[(3.0, 0.0)], 1e-9), None);
    }

    #[test]
    fn witnesses_are_capped() {
        let c = Check::from_witnesses("p", None, (0..25).map(|i| i.to_string()).collect());
        assert_eq!(c.status, Status::Fail);
        assert_eq!(c.witnesses.len(), MAX_WITNESSES + 1);
        assert!(Check::from_witnesses("p", Some(1), Vec::new()).passed());
    }

    #[test]
    fn small_suites_pass() {
        let mut cfg = VerifyConfig::new(3);
        cfg.max_stage = 6;
        cfg.prefix_len = 200_000;
        for suite in [Suite::Trees, Suite::Realization, Suite::Core] {
            let rep = run(suite, &cfg).unwrap();
            assert!(rep.passed, "{}", rep.summary_table());
            assert_eq!(rep.report_version, 1);
        }
    }
}
