//! Machine checks of the metastable region, hypotheses H1–H3 and the
//! consequences drawn from them, each failure backed by a rechecked witness.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::landscape::{
    escape_height, extensions, minimax_from, Analysis, GateReport, Landscape, Level, Partition, StateSpace,
    INFINITE,
};
use crate::lattice::{
    checkerboard, communicate, droplets, energy_level, for_each_move, hamiltonian, Configuration, Geometry, ModelParams,
    MoveKind, Rational, MAX_SITES,
};

/// How the ground states are compared with ⊞.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum H1Mode {
    /// `X_stab = {⊞}` exactly.
    Strict,
    /// Every ground state agrees with ⊞ on Λ⁻.
    #[default]
    ModuloBoundary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Counterexample {
    pub kind: String,
    pub states: Vec<u32>,
    /// Rows of site values, bottom row first, separated by `/`.
    pub configurations: Vec<String>,
    pub detail: String,
    /// The failure reproduced by an independent recomputation.
    pub confirmed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
}

impl Check {
    fn ok() -> Self {
        Self { pass: true, counterexample: None }
    }

    fn fail(c: Counterexample) -> Self {
        Self { pass: false, counterexample: Some(c) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LemmaCheck {
    pub premises: Vec<String>,
    pub premises_pass: bool,
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
}

impl LemmaCheck {
    /// A conclusion failing under passing premises.
    pub fn contradicts(&self) -> bool {
        self.premises_pass && !self.pass
    }
}

/// Whether "H2 and the region condition give H1" held on this instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Implication {
    /// The box admits a configuration below H(□).
    pub negative_ground: bool,
    pub applies: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HypothesisVerdict {
    pub region_ok: bool,
    pub proper_region_ok: bool,
    pub h1_mode: H1Mode,
    pub h1: Check,
    pub h2: Check,
    pub h3a: Check,
    pub h3b: Check,
    pub h3c: Check,
    pub v_star: f64,
    pub gamma_star: f64,
    pub gamma_star_exact: String,
    /// Largest bounding-box side over the interior part of P.
    pub l_star: Option<usize>,
    pub implication: Implication,
    pub lemma_checks: BTreeMap<String, LemmaCheck>,
}

impl HypothesisVerdict {
    pub fn hypotheses_pass(&self) -> bool {
        self.h1.pass && self.h2.pass && self.h3a.pass && self.h3b.pass && self.h3c.pass
    }

    pub fn failures(&self) -> impl Iterator<Item = &Counterexample> {
        [&self.h1, &self.h2, &self.h3a, &self.h3b, &self.h3c]
            .into_iter()
            .filter_map(|c| c.counterexample.as_ref())
            .chain(self.lemma_checks.values().filter_map(|l| l.counterexample.as_ref()))
    }

    /// All failures confirmed, and no lemma fails under passing premises.
    pub fn consistent(&self) -> bool {
        self.failures().all(|c| c.confirmed)
            && !self.lemma_checks.values().any(LemmaCheck::contradicts)
            && (!self.implication.applies || self.implication.holds)
    }
}

/// `(Δ1 + Δ2 < 4U, additionally not both Δ below U)`.
pub fn check_metastable_region(params: &ModelParams) -> (bool, bool) {
    (params.in_metastable_region(), params.in_proper_region())
}

/// A checkerboard on the interior of some box whose energy is below H(□) = 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NegativeCheckerboard {
    pub width: usize,
    pub height: usize,
    pub parity: i32,
    #[serde(with = "crate::lattice::rational_text")]
    pub energy: Rational,
    pub configuration: String,
}

/// Smallest box (by sites, then width) carrying an interior checkerboard with `H < 0`.
pub fn find_negative_checkerboard(params: &ModelParams) -> Option<NegativeCheckerboard> {
    let mut boxes: Vec<(usize, usize)> = (3..=MAX_SITES)
        .flat_map(|w| (3..=MAX_SITES / w).map(move |h| (w, h)))
        .collect();
    boxes.sort_by_key(|&(w, h)| (w * h, w));
    for (w, h) in boxes {
        let g = Geometry::new(w, h).ok()?;
        for parity in [0, 1] {
            let c = checkerboard(&g, g.interior(), parity);
            let energy = hamiltonian(&g, params, c).ok()?;
            if energy < Rational::from_integer(0) {
                let configuration = (0..h)
                    .map(|y| (0..w).map(|x| char::from(b'0' + c.get(y * w + x))).collect::<String>())
                    .collect::<Vec<_>>()
                    .join("/");
                return Some(NegativeCheckerboard { width: w, height: h, parity, energy, configuration });
            }
        }
    }
    None
}

/// Renders a configuration as rows of site values, bottom row first.
pub fn render(space: &StateSpace, s: u32) -> String {
    let g = space.geometry();
    let c = space.config(s);
    (0..g.height())
        .map(|y| (0..g.width()).map(|x| char::from(b'0' + c.get(y * g.width() + x))).collect::<String>())
        .collect::<Vec<_>>()
        .join("/")
}

struct Ctx<'a> {
    space: &'a StateSpace,
    analysis: &'a Analysis,
    part: &'a Partition,
    gate: &'a GateReport,
    to_plus: std::sync::OnceLock<Vec<Level>>,
}

impl Ctx<'_> {
    fn witness(&self, kind: &str, states: Vec<u32>, detail: String, confirmed: bool) -> Counterexample {
        Counterexample {
            kind: kind.into(),
            configurations: states.iter().map(|&s| render(self.space, s)).collect(),
            states,
            detail,
            confirmed,
        }
    }

    /// Energy recomputed from the configuration, bypassing the table.
    fn direct(&self, s: u32) -> i64 {
        energy_level(self.space.geometry(), self.space.scale(), self.space.config(s))
    }

    /// No configuration has lower energy, checked state by state from the configurations.
    fn is_ground(&self, s: u32) -> bool {
        use rayon::prelude::*;
        let space = self.space;
        let h = self.direct(s);
        (0..space.num_states() as u32)
            .into_par_iter()
            .all(|t| energy_level(space.geometry(), space.scale(), space.config(t)) >= h)
    }

    fn oracle_to_plus(&self) -> &[Level] {
        self.to_plus.get_or_init(|| minimax_from(self.space, &[self.analysis.plus]))
    }

    fn energy(&self, level: i64) -> String {
        self.space.scale().to_rational(level).to_string()
    }

    /// A path of single moves whose energies stay `≤ cap` and that avoids `avoid`.
    fn valid_path(&self, path: &[u32], cap: Level, avoid: &BTreeSet<u32>) -> bool {
        let g = self.space.geometry();
        path.iter().all(|&s| self.direct(s) <= cap as i64 && !avoid.contains(&s))
            && path
                .windows(2)
                .all(|w| communicate(g, self.space.config(w[0]), self.space.config(w[1])))
    }
}

/// Hypotheses H1–H3 and the consequences drawn from them.
pub fn check_hypotheses(
    space: &StateSpace,
    analysis: &Analysis,
    part: &Partition,
    gate: &GateReport,
    mode: H1Mode,
) -> HypothesisVerdict {
    let cx = Ctx { space, analysis, part, gate, to_plus: Default::default() };
    let (region_ok, proper_region_ok) = check_metastable_region(space.params());
    let scale = space.scale();
    let gamma_star = analysis.gamma_star(space);
    let v_star = analysis.v_star.map_or(Level::MIN, |(v, _)| v);

    let h1 = check_h1(&cx, mode);
    let h2 = check_h2(&cx, gamma_star);
    let (h3a, l_star) = check_h3a(&cx);
    let h3b = check_h3b(&cx);
    let h3c = check_h3c(&cx);

    let negative_ground = analysis.ground < space.level(analysis.empty);
    let applies = h2.pass && region_ok && negative_ground;
    let implication = Implication { negative_ground, applies, holds: !applies || h1.pass };

    let mut verdict = HypothesisVerdict {
        region_ok,
        proper_region_ok,
        h1_mode: mode,
        h1,
        h2,
        h3a,
        h3b,
        h3c,
        v_star: if v_star == INFINITE { f64::INFINITY } else { scale.to_f64(v_star as i64) },
        gamma_star: scale.to_f64(gamma_star as i64),
        gamma_star_exact: cx.energy(gamma_star as i64),
        l_star,
        implication,
        lemma_checks: BTreeMap::new(),
    };
    verdict.lemma_checks = lemmas(&cx, &verdict);
    verdict
}

fn check_h1(cx: &Ctx, mode: H1Mode) -> Check {
    let (space, a) = (cx.space, cx.analysis);
    let g = space.geometry();
    let plus = space.config(a.plus);
    let same = |s: u32| match mode {
        H1Mode::Strict => s == a.plus,
        H1Mode::ModuloBoundary => {
            let c = space.config(s);
            g.interior().iter().all(|&i| c.get(i) == plus.get(i))
        }
    };
    let Some(&other) = a.stable.iter().find(|&&s| !same(s)) else {
        return Check::ok();
    };
    let confirmed = cx.direct(other) <= cx.direct(a.plus) && !same(other);
    Check::fail(cx.witness(
        "groundStateOtherThanPlus",
        vec![other, a.plus],
        format!(
            "H = {} at the first state, H(⊞) = {}",
            cx.energy(cx.direct(other)),
            cx.energy(cx.direct(a.plus))
        ),
        confirmed,
    ))
}

fn check_h2(cx: &Ctx, gamma_star: Level) -> Check {
    match cx.analysis.v_star {
        Some((v, s)) if v >= gamma_star => {
            let h = cx.space.level(s);
            let confirmed = if v == INFINITE {
                cx.is_ground(s)
            } else {
                escape_height(cx.space, s).is_some_and(|e| e - h >= gamma_star)
            };
            let shown = if v == INFINITE { "∞".to_string() } else { cx.energy(v as i64) };
            Check::fail(cx.witness(
                "stabilityLevelAtLeastGammaStar",
                vec![s],
                format!("V = {shown}, Γ* = {}", cx.energy(gamma_star as i64)),
                confirmed,
            ))
        }
        _ => Check::ok(),
    }
}

/// Interior particle sites of `c`.
fn interior_particles(space: &StateSpace, c: Configuration) -> Vec<usize> {
    let g = space.geometry();
    g.interior().iter().copied().filter(|&i| c.get(i) != 0).collect()
}

fn single_droplet(space: &StateSpace, s: u32) -> bool {
    let g = space.geometry();
    let c = space.config(s);
    let inner = interior_particles(space, c);
    let count = droplets(g, c).iter().filter(|d| g.is_interior(d[0])).count();
    !inner.is_empty() && count == 1
}

/// `ζ` is a member of P plus a free type-2 particle at an inner-boundary site.
fn is_boundary_extension(space: &StateSpace, protocritical: &BTreeSet<u32>, z: u32) -> bool {
    let c = space.config(z);
    space
        .geometry()
        .inner_boundary()
        .iter()
        .any(|&x| c.get(x) == 2 && protocritical.contains(&space.state(c.with(x, 0))))
}

fn check_h3a(cx: &Ctx) -> (Check, Option<usize>) {
    let (space, gate) = (cx.space, cx.gate);
    let g = space.geometry();
    let l_star = gate
        .protocritical
        .iter()
        .map(|&p| {
            let sites = interior_particles(space, space.config(p));
            let side = |f: fn((i32, i32)) -> i32| {
                let v: Vec<i32> = sites.iter().map(|&i| f(g.site(i))).collect();
                match (v.iter().min(), v.iter().max()) {
                    (Some(lo), Some(hi)) => (hi - lo + 1) as usize,
                    _ => 0,
                }
            };
            side(|s| s.0).max(side(|s| s.1))
        })
        .max();
    if let Some(&p) = gate.protocritical.iter().find(|&&p| !single_droplet(space, p)) {
        let c = space.config(p);
        let n = droplets(g, c).iter().filter(|d| g.is_interior(d[0])).count();
        let confirmed = n != 1;
        return (
            Check::fail(cx.witness(
                "protocriticalNotSingleDroplet",
                vec![p],
                format!("{n} droplets in the interior"),
                confirmed,
            )),
            l_star,
        );
    }
    let set: BTreeSet<u32> = gate.protocritical.iter().copied().collect();
    if let Some(&z) = gate.entrance.iter().find(|&&z| !is_boundary_extension(space, &set, z)) {
        // recheck by scanning every boundary removal against P
        let c = space.config(z);
        let confirmed = !g.inner_boundary().iter().any(|&x| {
            c.get(x) == 2 && gate.protocritical.binary_search(&space.state(c.with(x, 0))).is_ok()
        });
        return (
            Check::fail(cx.witness(
                "entranceNotDropletPlusFreeType2",
                vec![z],
                "no type-2 particle in the inner boundary whose removal gives a protocritical state".into(),
                confirmed,
            )),
            l_star,
        );
    }
    if gate.protocritical.is_empty() {
        return (Check::fail(cx.witness("emptyProtocriticalSet", vec![], String::new(), true)), l_star);
    }
    (Check::ok(), l_star)
}

fn check_h3b(cx: &Ctx) -> Check {
    let space = cx.space;
    let g = space.geometry();
    let cap = cx.part.saddle;
    for &z in &cx.gate.critical {
        let c = space.config(z);
        let before = droplets(g, c).len();
        let mut bad = None;
        for_each_move(g, c, |d, m| {
            if bad.is_some() {
                return;
            }
            let adds = matches!(m, MoveKind::Create { .. });
            let splits = droplets(g, d).len() > before;
            if (adds || splits) && space.level(space.state(d)) <= cap {
                bad = Some((d, adds));
            }
        });
        if let Some((d, adds)) = bad {
            let t = space.state(d);
            let confirmed = communicate(g, c, d)
                && cx.direct(t) <= cap as i64
                && ((adds && d.count(g.len(), 0) < c.count(g.len(), 0)) || droplets(g, d).len() > before);
            return Check::fail(cx.witness(
                if adds { "creationAtOrBelowGammaStar" } else { "splitAtOrBelowGammaStar" },
                vec![z, t],
                format!("H after the move = {}", cx.energy(cx.direct(t))),
                confirmed,
            ));
        }
    }
    Check::ok()
}

/// Breadth-first search in X* from `from` avoiding `avoid`; path to the first `goal` hit.
fn search(part: &Partition, from: &[u32], avoid: &BTreeSet<u32>, goal: &BTreeSet<u32>) -> Option<Vec<u32>> {
    let g = &part.graph;
    let mut prev = vec![u32::MAX; g.len()];
    let mut queue = VecDeque::new();
    for &s in from {
        if let Some(l) = g.local(s) {
            if !avoid.contains(&s) && prev[l as usize] == u32::MAX {
                prev[l as usize] = l;
                queue.push_back(l);
            }
        }
    }
    while let Some(v) = queue.pop_front() {
        if goal.contains(&g.global(v)) {
            let mut path = vec![g.global(v)];
            let mut x = v;
            while prev[x as usize] != x {
                x = prev[x as usize];
                path.push(g.global(x));
            }
            path.reverse();
            return Some(path);
        }
        for &u in g.adjacent(v) {
            if prev[u as usize] == u32::MAX && !avoid.contains(&g.global(u)) {
                prev[u as usize] = v;
                queue.push_back(u);
            }
        }
    }
    None
}

fn check_h3c(cx: &Ctx) -> Check {
    let (space, gate, part) = (cx.space, cx.gate, cx.part);
    let attached: BTreeSet<u32> = gate.attached.iter().copied().collect();
    let plus = BTreeSet::from([cx.analysis.plus]);
    if let Some(path) = search(part, &gate.entrance, &attached, &plus) {
        let confirmed = cx.valid_path(&path, part.saddle, &attached)
            && gate.entrance.binary_search(&path[0]).is_ok()
            && path.last() == Some(&cx.analysis.plus);
        let (first, last) = (path[0], *path.last().unwrap());
        return Check::fail(cx.witness(
            "optimalPathAvoidsAttachedSet",
            vec![first, last],
            format!("path of {} states at most Γ* from the entrance set to ⊞ avoiding C*_att", path.len()),
            confirmed,
        ));
    }
    for &p in &gate.protocritical {
        let (_, att) = extensions(space, p);
        if att.iter().any(|&z| cx.analysis.height_to_plus[z as usize] < part.saddle) {
            continue;
        }
        let oracle = cx.oracle_to_plus();
        let confirmed = att.iter().all(|&z| oracle[z as usize] >= part.saddle);
        let mut states = vec![p];
        states.extend(&att);
        return Check::fail(cx.witness(
            "noAttachmentBelowGammaStar",
            states,
            format!("{} attachments, none reaching ⊞ below Γ*", att.len()),
            confirmed,
        ));
    }
    Check::ok()
}

fn lemmas(cx: &Ctx, v: &HypothesisVerdict) -> BTreeMap<String, LemmaCheck> {
    let (space, a, part, gate) = (cx.space, cx.analysis, cx.part, cx.gate);
    let n = space.num_states() as u32;
    let gamma_star = a.gamma_star(space);
    let v_star = a.v_star.map_or(Level::MIN, |(x, _)| x);
    let h0 = space.level(a.empty);
    let mut out = BTreeMap::new();
    let mut put = |id: &str, premises: &[(&str, bool)], result: Option<Counterexample>| {
        out.insert(
            id.to_string(),
            LemmaCheck {
                premises: premises.iter().map(|p| p.0.to_string()).collect(),
                premises_pass: premises.iter().all(|p| p.1),
                pass: result.is_none(),
                counterexample: result,
            },
        );
    };

    // V_□ = Γ*
    let v_box = a.stability[a.empty as usize];
    let r = (v_box != gamma_star).then(|| {
        let e = if cx.is_ground(a.empty) { None } else { escape_height(space, a.empty).map(|e| e - h0) };
        cx.witness(
            "emptyStabilityDiffers",
            vec![a.empty],
            format!(
                "V_□ = {}, Γ* = {}",
                e.map_or("∞".into(), |x| cx.energy(x as i64)),
                cx.energy(gamma_star as i64)
            ),
            e != Some(gamma_star),
        )
    });
    put("emptyStability", &[("h1", v.h1.pass), ("h2", v.h2.pass)], r);

    // Φ(η, {□, ⊞}) − H(η) ≤ V*
    let r = (0..n)
        .filter(|&s| s != a.empty && s != a.plus)
        .find(|&s| a.height_to_pair(s) - space.level(s) > v_star)
        .map(|s| {
            let pair = minimax_from(space, &[s]);
            let direct = pair[a.empty as usize].min(pair[a.plus as usize]);
            cx.witness(
                "returnAbovePairBound",
                vec![s],
                format!("Φ(η, {{□, ⊞}}) − H(η) = {}", cx.energy((direct - space.level(s)) as i64)),
                direct - space.level(s) > v_star,
            )
        });
    put("pairReturnBound", &[("h2", v.h2.pass)], r);

    // H(η) > H(□) whenever Φ(η, □) ≤ Φ(η, ⊞)
    let r = (0..n)
        .filter(|&s| s != a.empty)
        .find(|&s| a.height_to_empty[s as usize] <= a.height_to_plus[s as usize] && space.level(s) <= h0)
        .map(|s| {
            let d = minimax_from(space, &[s]);
            let confirmed =
                d[a.empty as usize] <= d[a.plus as usize] && cx.direct(s) <= cx.direct(a.empty);
            cx.witness("lowStateOnEmptySide", vec![s], format!("H(η) = {}", cx.energy(cx.direct(s))), confirmed)
        });
    put("emptySideAboveEmpty", &[("h1", v.h1.pass), ("h2", v.h2.pass)], r);

    // every optimal path from C*_att to □ meets C*_bd
    let entrance: BTreeSet<u32> = gate.entrance.iter().copied().collect();
    let attached: BTreeSet<u32> = gate.attached.iter().copied().collect();
    let r = search(part, &[a.empty], &entrance, &attached).map(|path| {
        let confirmed = cx.valid_path(&path, part.saddle, &entrance) && attached.contains(path.last().unwrap());
        cx.witness(
            "attachedReachesEmptyAvoidingEntrance",
            vec![*path.last().unwrap()],
            format!("path of {} states at most Γ* to □ avoiding C*_bd", path.len()),
            confirmed,
        )
    });
    put("entranceSeparatesAttached", &[("h3a", v.h3a.pass), ("h3c", v.h3c.pass)], r);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_checkerboard_needs_a_larger_box() {
        let p = ModelParams::parse("1", "0.9", "1.5").unwrap();
        let found = find_negative_checkerboard(&p).unwrap();
        assert_eq!((found.width, found.height, found.parity), (4, 6, 0));
        assert_eq!(found.energy, Rational::new(-2, 5));
        assert!(find_negative_checkerboard(&ModelParams::parse("1", "2.5", "2.5").unwrap()).is_none());
    }
    use crate::landscape::{analyze, gate_analysis, LevelOrder, PlusMode};
    use crate::lattice::Geometry;

    #[test]
    fn region_examples() {
        let p = |a: &str, b: &str, c: &str| ModelParams::parse(a, b, c).unwrap();
        assert_eq!(check_metastable_region(&p("1", "0.9", "1.5")), (true, true));
        assert!(!check_metastable_region(&p("1", "2.5", "2.5")).0);
        assert_eq!(check_metastable_region(&p("1", "0.5", "0.8")), (true, false));
    }

    #[test]
    fn small_box_verdict_is_consistent() {
        let space = StateSpace::new(Geometry::new(4, 3).unwrap(), ModelParams::preset()).unwrap();
        let a = analyze(&space, &LevelOrder::new(&space), space.empty(), space.plus(PlusMode::Interior)).unwrap();
        let part = Partition::build(&space, &a).unwrap();
        let gate = gate_analysis(&space, &a, &part).unwrap();
        let v = check_hypotheses(&space, &a, &part, &gate, H1Mode::ModuloBoundary);
        // two interior sites: ⊞ costs Δ1 + Δ2 − U > 0, so □ is the only ground state
        assert!(!v.h1.pass);
        assert!(v.consistent());
        assert_eq!(v.h1.counterexample.as_ref().unwrap().states[0], space.empty());
        assert_eq!(render(&space, space.plus(PlusMode::Interior)), "0000/0120/0000");
    }
}
