//! Acceptance run: one line per criterion, nonzero exit if any fails.
//! Tolerances are the contractual ones; do not loosen them here.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use arbre_subst::core_map::{determined_partition, l_len, l_word, partition_report, CoreMap, LabeledTower};
use arbre_subst::free_group::{
    cancellation_report, family_eta, nielsen_example, tribonacci_inverse, Automorphism, GroupWord,
};
use arbre_subst::rauzy_viz::{
    arc_and_cylinder_clouds, export_csv, fractal_cloud, render_svg, same_partition, sup_norm, Coloring,
};
use arbre_subst::realization::{edge_length_violations, hausdorff_gap, Realization};
use arbre_subst::symbolic::{
    bispecial_by_generation, family_lambda, language, measure_spectrum, window_frequencies, Letter, Substitution,
};
use arbre_subst::tree_subst::{family_rules, trunk_agrees_with_inverse, TreeTower};
use arbre_subst::verify::spectral_residue;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn stage_limit(d: usize) -> usize {
    if d == 3 {
        12
    } else {
        10
    }
}

fn factor_complexity() -> Outcome {
    let start = Instant::now();
    for d in 3..=5 {
        let sub = Substitution::family(d).map_err(e)?;
        for n in 1..=30 {
            let k = language(&sub, n).map_err(e)?.factors.len();
            ensure(k == (d - 1) * n + 1, || format!("d={d} n={n}: {k} factors"))?;
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(5), || format!("took {t:?}"))?;
    Ok(format!("d=3..5, n<=30 in {:.2}s", t.as_secs_f64()))
}

fn bispecial_oracle() -> Outcome {
    for d in 3..=4 {
        let sub = Substitution::family(d).map_err(e)?;
        let gen: BTreeSet<_> = bispecial_by_generation(&sub, 60).map_err(e)?.into_iter().collect();
        let mut brute = BTreeSet::new();
        for n in 1..=60 {
            brute.extend(language(&sub, n).map_err(e)?.bispecial);
        }
        ensure(gen == brute, || format!("d={d}: {} generated, {} enumerated", gen.len(), brute.len()))?;
        if d == 3 {
            let lens: Vec<usize> = gen.iter().map(Vec::len).collect::<BTreeSet<_>>().into_iter().take(5).collect();
            ensure(lens == [1, 2, 4, 6, 10], || format!("lengths begin {lens:?}"))?;
        }
    }
    Ok("d=3,4 up to length 60".into())
}

fn discernment() -> Outcome {
    for d in 3..=5 {
        let tower = TreeTower::family(d, stage_limit(d)).map_err(e)?;
        for n in 0..=stage_limit(d) {
            ensure(tower.stage(n).is_discerned(), || format!("d={d} stage {n}"))?;
        }
    }
    Ok("n<=12 (d=3), n<=10 (d=4,5)".into())
}

fn trunk_determinism() -> Outcome {
    for d in 3..=6 {
        let ts = family_rules(d).map_err(e)?;
        let bad: Vec<_> = trunk_agrees_with_inverse(&ts).map_err(e)?.into_iter().filter(|(_, ok)| !ok).collect();
        ensure(bad.is_empty(), || format!("d={d}: colors {bad:?}"))?;
    }
    Ok("d=3..6, every color".into())
}

fn edge_length_law() -> Outcome {
    for d in 3..=4 {
        let r = Realization::family(d, 10).map_err(e)?;
        for n in 0..=10 {
            let bad = edge_length_violations(&r, n);
            ensure(bad.is_empty(), || format!("d={d} stage {n}: {} edges, first {:?}", bad.len(), bad[0]))?;
        }
    }
    Ok("exact in Z[eta], d=3,4, n<=10".into())
}

fn hausdorff_gaps() -> Outcome {
    let r = Realization::family(3, 10).map_err(e)?;
    let mut worst: f64 = 0.0;
    for n in 1..=10 {
        let g = hausdorff_gap(&r, n);
        ensure(g.value <= g.bound + 1e-12, || format!("stage {n}: {} > {}", g.value, g.bound))?;
        worst = worst.max(g.value / g.bound);
    }
    Ok(format!("n<=10, max gap/bound = {worst:.6}"))
}

fn branch_inventory() -> Outcome {
    for d in 3..=5 {
        let lt = LabeledTower::family(d, stage_limit(d)).map_err(e)?;
        for m in 0..=stage_limit(d) {
            let l = l_word(d, m).map_err(e)?;
            let inv = lt.branch_inventory(m);
            let want: BTreeSet<GroupWord> = l.suffixes().into_iter().collect();
            ensure(inv == want, || format!("d={d} m={m}: labels differ from suffixes of {l}"))?;
            ensure(inv.len() == l_len(d, m).map_err(e)? + 1, || format!("d={d} m={m}: count"))?;
            if (1..d).contains(&m) {
                let new: Vec<GroupWord> = lt.labels_born_at(m).into_iter().map(|k| lt.label_word(k)).collect();
                ensure(new == [l.clone()], || format!("d={d} m={m}: new labels {new:?}"))?;
            }
        }
    }
    let lt = LabeledTower::family(3, 5).map_err(e)?;
    let counts: Vec<usize> = (1..=5).map(|m| lt.branch_inventory(m).len()).collect();
    ensure(counts == [2, 3, 5, 7, 11], || format!("d=3 counts {counts:?}"))?;
    Ok("d=3..5; d=3 counts 2,3,5,7,11".into())
}

fn automatic_writing_lemma() -> Outcome {
    for d in 3..=5 {
        let lt = LabeledTower::family(d, stage_limit(d)).map_err(e)?;
        let bad = lt.automatic_writing_failures(stage_limit(d)).map_err(e)?;
        ensure(bad.is_empty(), || format!("d={d}: label lengths {bad:?}"))?;
    }
    Ok("n<=12 (d=3), n<=10 (d=4,5)".into())
}

fn partition_determination() -> Outcome {
    let d = 3;
    let seq: Vec<usize> = (0..6).map(|n| determined_partition(d, n)).collect::<Result<_, _>>().map_err(e)?;
    ensure(seq == [1, 2, 3, 5, 7, 11], || format!("sequence {seq:?}"))?;
    for (n, &m) in seq.iter().enumerate().skip(1) {
        ensure(m == l_len(d, n).map_err(e)? + 1, || format!("n={n}: not |l_n|+1"))?;
    }
    for m in 1..=11 {
        let rep = partition_report(d, m, 1_000_000, 1e-3).map_err(e)?;
        let want = match (m, rep.determined_by) {
            (1, _) => d,
            (_, Some(_)) => 2 * d - 2,
            (_, None) => 2 * d - 1,
        };
        ensure(rep.class_count == want, || format!("m={m}: {} classes, want {want}", rep.class_count))?;
    }
    let sub = Substitution::family(d).map_err(e)?;
    let e1 = measure_spectrum(&sub, 1, 1_000_000, 1e-3).map_err(e)?;
    ensure(e1.exponents == BTreeSet::from([2, 3, 4]), || format!("letter exponents {:?}", e1.exponents))?;
    Ok("m=1..11 at prefix 10^6, tol 1e-3; letters at lambda^-2,-3,-4".into())
}

fn measure_recursion() -> Outcome {
    let d = 3;
    let sub = Substitution::family(d).map_err(e)?;
    let lambda = family_lambda(d);
    let prefix = sub.fixed_point_prefix(1_000_000).map_err(e)?;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in 1..=4 {
        for u in language(&sub, k).map_err(e)?.factors {
            if *u.last().expect("nonempty") as usize == d {
                continue;
            }
            let su = sub.apply(&u).map_err(e)?;
            let lhs = window_frequencies(&prefix, k).get(&u).copied().unwrap_or(0.0);
            let rhs = lambda * window_frequencies(&prefix, su.len()).get(&su).copied().unwrap_or(0.0);
            worst = worst.max((lhs - rhs).abs());
            count += 1;
        }
    }
    ensure(worst < 2e-3, || format!("max deviation {worst}"))?;
    Ok(format!("{count} cylinders, max deviation {worst:.2e}"))
}

fn isometry_system() -> Outcome {
    let d = 3;
    let cm = CoreMap::family(d, 10).map_err(e)?;
    let mut pairs = 0;
    for a in 1..=d as Letter {
        let au = cm.isometry_audit(a, 8).map_err(e)?;
        ensure(au.passed(), || format!("letter {a}: {au:?}"))?;
        pairs += au.pairs;
    }
    let overlaps = cm.domain_overlaps(8).map_err(e)?;
    ensure(overlaps.is_empty(), || format!("overlapping domains {overlaps:?}"))?;
    Ok(format!("stage 8, {pairs} pairs exact, shift conjugacy holds"))
}

fn distance_cross_check() -> Outcome {
    let cm = CoreMap::family(3, 8).map_err(e)?;
    for n in 0..=8 {
        let bad = cm.bijiso_failures(n).map_err(e)?;
        ensure(bad.is_empty(), || format!("stage {n}: {} pairs, first {:?}", bad.len(), bad[0]))?;
    }
    Ok("all branch pairs, n<=8, exact".into())
}

fn spectral() -> Outcome {
    for d in 3..=5 {
        let di = d as i32;
        let lambda = family_lambda(d);
        let eta = family_eta(d);
        ensure((lambda.powi(di) - lambda.powi(di - 1) - 1.0).abs() < 1e-12, || format!("d={d}: lambda {lambda}"))?;
        ensure((eta.powi(di) - eta - 1.0).abs() < 1e-12, || format!("d={d}: eta {eta}"))?;
        let ts = family_rules(d).map_err(e)?;
        let inv = Automorphism::family_inverse(d).map_err(e)?.matrix().eigenvalues();
        let trunk = spectral_residue(&ts.trunk_matrix().eigenvalues(), &inv, 1e-6)
            .ok_or_else(|| format!("d={d}: trunk spectrum misses the inverse's"))?;
        ensure(trunk.len() == d - 2 && trunk.iter().all(|z| z.0.hypot(z.1) < 1e-6), || {
            format!("d={d}: trunk leftover {trunk:?}")
        })?;
        let sig = Substitution::family(d).map_err(e)?.incidence_matrix().eigenvalues();
        let rule = spectral_residue(&ts.incidence_matrix().eigenvalues(), &sig, 1e-6)
            .ok_or_else(|| format!("d={d}: rule spectrum misses the substitution's"))?;
        ensure(rule.len() == d - 2 && rule.iter().all(|z| (z.0.hypot(z.1) - 1.0).abs() < 1e-6), || {
            format!("d={d}: rule leftover {rule:?}")
        })?;
    }
    Ok("d=3..5".into())
}

fn cancellation_probes() -> Outcome {
    let gw = |s: &str| GroupWord::parse(s).map_err(e);
    let trib = cancellation_report(&tribonacci_inverse(), &[gw("c")?], 12).map_err(e)?;
    ensure(trib[0].cancelled_at.first() == Some(&2), || format!("Tribonacci: {:?}", trib[0].cancelled_at))?;
    let niel = cancellation_report(&nielsen_example(), &[gw("a.c")?], 10).map_err(e)?;
    ensure(niel[0].cancelled_at == (1..=10).collect::<Vec<_>>(), || format!("Nielsen: {:?}", niel[0].cancelled_at))?;
    for d in 3..=5 {
        let inv = Automorphism::family_inverse(d).map_err(e)?;
        let seeds: Vec<GroupWord> = (1..=d as Letter).map(|a| GroupWord::from_positive(&[a])).collect();
        for t in cancellation_report(&inv, &seeds, 12).map_err(e)? {
            ensure(t.cancelled_at.is_empty(), || format!("d={d} seed {}: {:?}", t.seed, t.cancelled_at))?;
        }
    }
    Ok("Tribonacci at 2, Nielsen at 1..10, family clean to 12".into())
}

fn rauzy() -> Outcome {
    let half = sup_norm(&fractal_cloud(3, 50_000, Coloring::None).map_err(e)?);
    let full = sup_norm(&fractal_cloud(3, 100_000, Coloring::None).map_err(e)?);
    let drift = (full - half).abs() / full;
    ensure(drift <= 0.01, || format!("sup norm {half} -> {full}"))?;
    let (arcs, cyl) = arc_and_cylinder_clouds(4, 20_000).map_err(e)?;
    ensure(same_partition(&arcs, &cyl), || "arc 4 and cylinder 7 partitions differ".into())?;
    let again = fractal_cloud(3, 20_000, Coloring::Cylinder(7)).map_err(e)?;
    ensure(render_svg(&cyl) == render_svg(&again), || "SVG differs between runs".into())?;
    ensure(export_csv(&cyl) == export_csv(&again), || "CSV differs between runs".into())?;
    Ok(format!("sup norm drift {:.4}%, partitions equal, outputs byte-identical", 100.0 * drift))
}

fn main() {
    let criteria: [Criterion; 15] = [
        ("factor complexity", factor_complexity),
        ("bispecial oracle", bispecial_oracle),
        ("discernment", discernment),
        ("trunk determinism", trunk_determinism),
        ("edge-length law", edge_length_law),
        ("Hausdorff gap", hausdorff_gaps),
        ("branch inventory", branch_inventory),
        ("automatic-writing lemma", automatic_writing_lemma),
        ("partition determination", partition_determination),
        ("measure recursion", measure_recursion),
        ("isometry system", isometry_system),
        ("distance cross-check", distance_cross_check),
        ("spectral relations", spectral),
        ("cancellation probes", cancellation_probes),
        ("Rauzy cloud", rauzy),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
