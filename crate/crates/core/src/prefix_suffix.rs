//! Prefix-suffix automaton, finite developments and the greedy writing of
//! prefix inverses of the fixed point as products of `σ^α(1^{-1})`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbolic::{word_to_string, Letter, Substitution, Word};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PSLabel {
    pub p: Word,
    pub a: Letter,
    pub s: Word,
}

impl std::fmt::Display for PSLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", word_to_string(&self.p), self.a, word_to_string(&self.s))
    }
}

/// Edge `from -> to` with `σ(to) = p·a·s` and `a = from`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PSTransition {
    pub from: Letter,
    pub to: Letter,
    pub label: PSLabel,
}

impl PSTransition {
    pub fn new(sub: &Substitution, to: Letter, p: Word, a: Letter, s: Word) -> Result<Self> {
        if to == 0 || to as usize > sub.d() {
            return Err(Error::LetterOutOfRange { letter: to as usize, size: sub.d() });
        }
        let mut pas = p.clone();
        pas.push(a);
        pas.extend_from_slice(&s);
        if pas != sub.image(to) {
            let label = PSLabel { p, a, s };
            return Err(Error::InvalidTransition(format!("σ({to}) != {label}")));
        }
        Ok(PSTransition { from: a, to, label: PSLabel { p, a, s } })
    }

    /// Transition into `to` whose prefix has length `plen`.
    fn split(sub: &Substitution, to: Letter, plen: usize) -> Option<Self> {
        let img = sub.image(to);
        (plen < img.len()).then(|| PSTransition {
            from: img[plen],
            to,
            label: PSLabel { p: img[..plen].to_vec(), a: img[plen], s: img[plen + 1..].to_vec() },
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Automaton {
    pub d: usize,
    pub transitions: Vec<PSTransition>,
}

impl Automaton {
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph prefix_suffix {\n  rankdir=LR;\n");
        for a in 1..=self.d {
            let _ = writeln!(out, "  {a} [shape=circle];");
        }
        for t in &self.transitions {
            let _ = writeln!(out, "  {} -> {} [label=\"{}\"];", t.from, t.to, t.label);
        }
        out.push_str("}\n");
        out
    }
}

/// One transition per decomposition `σ(b) = p·a·s`, ordered by `b` then by
/// the length of `p`.
pub fn build_automaton(sub: &Substitution) -> Automaton {
    let transitions = (1..=sub.d() as Letter)
        .flat_map(|b| (0..sub.image(b).len()).filter_map(move |i| PSTransition::split(sub, b, i)))
        .collect();
    Automaton { d: sub.d(), transitions }
}

/// Path `a_0 -> a_1 -> ...` in the automaton, lowest level first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Development {
    pub path: Vec<PSTransition>,
}

impl Development {
    /// Builds a development from bare labels; each label `(p,a,s)` determines
    /// its target letter through `σ(to) = p·a·s`.
    pub fn from_labels(sub: &Substitution, labels: &[(Word, Letter, Word)]) -> Result<Self> {
        let path = labels
            .iter()
            .map(|(p, a, s)| {
                let mut pas = p.clone();
                pas.push(*a);
                pas.extend_from_slice(s);
                let to = (1..=sub.d() as Letter)
                    .find(|&b| sub.image(b) == pas.as_slice())
                    .ok_or_else(|| Error::InvalidTransition(format!("no letter maps to {}", word_to_string(&pas))))?;
                PSTransition::new(sub, to, p.clone(), *a, s.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        let dev = Development { path };
        dev.check_admissible()?;
        Ok(dev)
    }

    pub fn check_admissible(&self) -> Result<()> {
        for (i, pair) in self.path.windows(2).enumerate() {
            if pair[0].to != pair[1].from {
                return Err(Error::Inadmissible(i + 1));
            }
        }
        Ok(())
    }

    pub fn prefixes(&self) -> Vec<&Word> {
        self.path.iter().map(|t| &t.label.p).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reconstruction {
    /// `σ^{k}(p_k) … σ(p_1) p_0`
    pub prefix_part: Word,
    pub letter: Letter,
    /// `s_0 σ(s_1) … σ^{k}(s_k)`
    pub suffix_part: Word,
    /// `σ^{k+1}(a_{k+1})` where `a_{k+1}` is the target of the last edge.
    pub word: Word,
}

/// Expands a development of `k+1` edges into the factorization of
/// `σ^{k+1}(a_{k+1})` around its letter `a_0`.
pub fn reconstruct(sub: &Substitution, dev: &Development) -> Result<Reconstruction> {
    dev.check_admissible()?;
    let first = dev.path.first().ok_or(Error::Inadmissible(0))?;
    let mut prefix_part = Word::new();
    let mut suffix_part = Word::new();
    for (i, t) in dev.path.iter().enumerate() {
        let mut p = sub.iterate(&t.label.p, i)?;
        p.extend_from_slice(&prefix_part);
        prefix_part = p;
        suffix_part.extend(sub.iterate(&t.label.s, i)?);
    }
    let last = dev.path.last().map(|t| t.to).unwrap_or(first.to);
    let word = sub.iterate(&[last], dev.path.len())?;
    let mut joined = prefix_part.clone();
    joined.push(first.from);
    joined.extend_from_slice(&suffix_part);
    if joined != word {
        return Err(Error::InvalidTransition(format!(
            "expansion {} differs from {}",
            word_to_string(&joined),
            word_to_string(&word)
        )));
    }
    Ok(Reconstruction { prefix_part, letter: first.from, suffix_part, word })
}

/// Exponents `α_0 < α_1 < … < α_p` with `u = σ^{α_p}(1) … σ^{α_0}(1)`, i.e.
/// `u^{-1} = σ^{α_0}(1^{-1}) … σ^{α_p}(1^{-1})`. Requires `u` to be a prefix
/// of the fixed point; the gaps are at least `d`.
pub fn automatic_writing(sub: &Substitution, u: &[Letter]) -> Result<Vec<u32>> {
    if sub.fixed_point_prefix(u.len())? != u {
        return Err(Error::NotAPrefix);
    }
    let mut powers = vec![vec![1 as Letter]];
    while powers.last().map_or(0, Vec::len) < u.len() {
        let next = sub.apply_valid(powers.last().expect("nonempty"));
        powers.push(next);
    }
    // Greedy by length from the top, like a Zeckendorf expansion.
    let mut rem = u.len();
    let mut out = Vec::new();
    while rem > 0 {
        let alpha = (0..powers.len()).rev().find(|&a| powers[a].len() <= rem).ok_or(Error::NotAPrefix)?;
        out.push(alpha as u32);
        rem -= powers[alpha].len();
    }
    out.reverse();
    if word_of_writing(sub, &out) != u {
        return Err(Error::NotAPrefix);
    }
    if out.windows(2).any(|w| w[1] < w[0] + sub.d() as u32) {
        return Err(Error::ExponentGap { d: sub.d(), exponents: out });
    }
    Ok(out)
}

/// `σ^{α_p}(1) … σ^{α_0}(1)` for exponents listed from `α_0`.
pub fn word_of_writing(sub: &Substitution, exponents: &[u32]) -> Word {
    exponents.iter().rev().flat_map(|&a| sub.power_of_one(a as usize)).collect()
}

/// First `depth` edges of the development of the `k`-th shift of the
/// two-sided periodic point: prefixes are `1` exactly at the indices of the
/// automatic writing of the length-`k` prefix, and the letters are forced by
/// admissibility down from the constant tail `(ε, 1, σ(1) minus 1)`.
pub fn shift_development(sub: &Substitution, k: usize, depth: usize) -> Result<Development> {
    let u = sub.fixed_point_prefix(k)?;
    let marks: BTreeSet<usize> = automatic_writing(sub, &u)?.into_iter().map(|a| a as usize).collect();
    let top = depth.max(marks.last().map_or(0, |m| m + 1));
    let mut path = Vec::with_capacity(top);
    let mut next_letter: Letter = 1;
    for i in (0..top).rev() {
        let plen = usize::from(marks.contains(&i));
        let t = PSTransition::split(sub, next_letter, plen).ok_or(Error::Inadmissible(i))?;
        next_letter = t.from;
        path.push(t);
    }
    path.reverse();
    path.truncate(depth);
    Ok(Development { path })
}
