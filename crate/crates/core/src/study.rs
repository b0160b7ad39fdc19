//! Everything derived from one box and parameter set, built once and summarised
//! for the command line and the acceptance checks.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::landscape::{
    analyze, gate_analysis, Analysis, DropletShape, Essential, GateReport, Landscape, Level, LevelOrder, LocalGraph,
    Partition, PlusMode, StateSpace, INFINITE,
};
use crate::lattice::{Geometry, ModelParams};
use crate::potential::{
    apriori, capacity_bracket, decay_rate, mean_hitting_time, metastable_pair_ratio, theta_quotient,
    triviality_profile, Apriori, PairRatio, Sandwich, SolveInfo, SolverOptions, ThetaReport, TrivialityRow,
};
use crate::verify::{check_hypotheses, render, H1Mode, HypothesisVerdict};

/// Capacities are solved on the whole space up to this many states.
pub const WHOLE_SPACE_LIMIT: usize = 1 << 20;
/// States of X* tried in the numerator of the metastable-pair ratio.
pub const PAIR_CANDIDATES: usize = 8;

pub struct Study {
    pub space: StateSpace,
    pub analysis: Analysis,
    pub partition: Partition,
    pub gate: GateReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GateSummary {
    pub level_set: usize,
    pub on_path_saddles: usize,
    pub entrance: Vec<u32>,
    pub protocritical: usize,
    pub critical: usize,
    pub attached: usize,
    pub n_star: usize,
    pub shapes: Vec<DropletShape>,
    /// Level-set states lying on some minimal gate, when decided.
    pub essential: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LandscapeSummary {
    pub width: usize,
    pub height: usize,
    pub states: u64,
    pub params: ModelParams,
    pub denom: i64,
    pub empty: u32,
    pub plus: u32,
    pub plus_configuration: String,
    pub gamma_star: f64,
    pub gamma_star_exact: String,
    pub ground_exact: String,
    pub ground_states: usize,
    pub gamma_exact: Option<String>,
    pub metastable_states: usize,
    pub v_star_exact: Option<String>,
    pub v_star_state: Option<u32>,
    pub x_star: usize,
    pub x_star_star: usize,
    /// States in the X*-component of □.
    pub component: usize,
    pub wells: usize,
    pub saddle_states: usize,
    pub detached_components: usize,
    pub gate: GateSummary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DomainInfo {
    pub whole: bool,
    pub states: usize,
    pub edges: usize,
    /// Largest energy kept when the domain is a sublevel set.
    pub level_cap: Option<String>,
}

/// Capacity of (□, ⊞) and what is derived from it at one β.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CapacityRow {
    pub beta: f64,
    /// `ln(Z·CAP)` on the domain, by the Dirichlet form and by escape probabilities.
    pub ln_cap: f64,
    pub ln_cap_escape: f64,
    pub relative_gap: f64,
    /// `ln` of the glued upper bound on the full-space `Z·CAP`.
    pub ln_cap_upper: f64,
    pub sandwich: Sandwich,
    /// `e^{βΓ*}·Z·CAP / Θ`.
    pub theta_ratio: f64,
    /// `E_□ τ_⊞` on the domain.
    pub mean_time: f64,
    /// `e^{−βΓ*}·E_□ τ_⊞·Θ`.
    pub arrhenius_ratio: f64,
    pub solver: SolveInfo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrivialityDecay {
    pub empty_gap: Option<f64>,
    pub plus_max: Option<f64>,
    pub well_oscillation: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CapacityReport {
    pub domain: DomainInfo,
    pub apriori: Apriori,
    pub theta: ThetaReport,
    pub rows: Vec<CapacityRow>,
    /// Global codes; `worst` in `pair_ratio` is global too.
    pub pair_candidates: Vec<u32>,
    pub pair_ratio: Vec<PairRatio>,
    pub pair_decay: Option<f64>,
    pub triviality: Vec<TrivialityRow>,
    pub triviality_decay: TrivialityDecay,
}

impl Study {
    pub fn build(geom: Geometry, params: ModelParams) -> Result<Self> {
        let space = StateSpace::new(geom, params)?;
        let analysis = {
            let order = LevelOrder::new(&space);
            analyze(&space, &order, space.empty(), space.plus(PlusMode::Interior))?
        };
        let partition = Partition::build(&space, &analysis)?;
        let gate = gate_analysis(&space, &analysis, &partition)?;
        Ok(Self { space, analysis, partition, gate })
    }

    pub fn empty(&self) -> u32 {
        self.analysis.empty
    }

    pub fn plus(&self) -> u32 {
        self.analysis.plus
    }

    pub fn gamma_star(&self) -> f64 {
        self.space.scale().to_f64(self.analysis.gamma_star(&self.space) as i64)
    }

    pub fn verdict(&self, mode: H1Mode) -> HypothesisVerdict {
        check_hypotheses(&self.space, &self.analysis, &self.partition, &self.gate, mode)
    }

    pub fn theta(&self) -> Result<ThetaReport> {
        theta_quotient(&self.partition)
    }

    fn exact(&self, level: Level) -> String {
        self.space.scale().to_rational(level as i64).to_string()
    }

    pub fn summary(&self) -> LandscapeSummary {
        let (sp, a, p, g) = (&self.space, &self.analysis, &self.partition, &self.gate);
        let geom = sp.geometry();
        LandscapeSummary {
            width: geom.width(),
            height: geom.height(),
            states: sp.num_states() as u64,
            params: *sp.params(),
            denom: sp.denom(),
            empty: a.empty,
            plus: a.plus,
            plus_configuration: render(sp, a.plus),
            gamma_star: self.gamma_star(),
            gamma_star_exact: self.exact(a.gamma_star(sp)),
            ground_exact: self.exact(a.ground),
            ground_states: a.stable.len(),
            gamma_exact: a.gamma.map(|l| self.exact(l)),
            metastable_states: a.metastable.len(),
            v_star_exact: a.v_star.filter(|v| v.0 != INFINITE).map(|v| self.exact(v.0)),
            v_star_state: a.v_star.map(|v| v.1),
            x_star: p.x_star_size,
            x_star_star: p.x_star_star_size,
            component: p.graph.len(),
            wells: p.wells.len(),
            saddle_states: p.saddles().len(),
            detached_components: p.detached_components,
            gate: GateSummary {
                level_set: g.level_set.len(),
                on_path_saddles: g.on_path_saddles.len(),
                entrance: g.entrance.clone(),
                protocritical: g.protocritical.len(),
                critical: g.critical.len(),
                attached: g.attached.len(),
                n_star: g.n_star,
                shapes: g.shapes.clone(),
                essential: match &g.essential {
                    Essential::Decided { flags } => Some(flags.iter().filter(|&&f| f).count()),
                    Essential::Undecided { .. } => None,
                },
            },
        }
    }

    /// The whole space when small, otherwise the sublevel component of □ at `Φ(□, ⊞)`.
    pub fn capacity_domain(&self) -> (LocalGraph, DomainInfo) {
        let whole = self.space.num_states() <= WHOLE_SPACE_LIMIT;
        let d = if whole {
            LocalGraph::whole(&self.space)
        } else {
            LocalGraph::sublevel_component(&self.space, &[self.empty()], self.analysis.saddle)
        };
        let info = DomainInfo {
            whole,
            states: d.len(),
            edges: d.edge_count(),
            level_cap: (!whole).then(|| self.exact(self.analysis.saddle)),
        };
        (d, info)
    }

    /// States of the X*-component outside {□, ⊞} with the deepest own valleys.
    pub fn pair_candidates(&self) -> Vec<u32> {
        let (a, g) = (&self.analysis, &self.partition.graph);
        let mut c: Vec<(Level, u32)> = g
            .globals()
            .iter()
            .filter(|&&s| s != a.empty && s != a.plus)
            .map(|&s| (a.height_to_pair(s) - self.space.level(s), s))
            .collect();
        c.sort_by_key(|&(depth, s)| (std::cmp::Reverse(depth), s));
        c.into_iter().take(PAIR_CANDIDATES).map(|x| x.1).collect()
    }

    pub fn capacity_report(&self, betas: &[f64], opts: &SolverOptions) -> Result<CapacityReport> {
        let (sp, a) = (&self.space, &self.analysis);
        let (domain, info) = self.capacity_domain();
        let ap = apriori(sp, &[a.empty], &[a.plus], &a.height_to_empty, &a.height_to_plus)?;
        let theta = self.theta()?;
        let gs = self.gamma_star();
        let denom = sp.denom();
        let plus_local = domain.local(a.plus).expect("⊞ lies in the domain");
        let empty_local = domain.local(a.empty).expect("□ lies in the domain");
        let mut rows = Vec::with_capacity(betas.len());
        for &beta in betas {
            let (cap, high) =
                capacity_bracket(sp, &domain, &[a.empty], &[a.plus], &a.height_to_empty, &a.height_to_plus, beta, opts)?;
            let times = mean_hitting_time(&domain, &[plus_local], beta, opts)?;
            let mean = times.values[empty_local as usize];
            let ln_cap = cap.dirichlet.ln();
            rows.push(CapacityRow {
                beta,
                ln_cap,
                ln_cap_escape: cap.escape.ln(),
                relative_gap: cap.relative_gap(),
                ln_cap_upper: high.ln(),
                sandwich: ap.sandwich(beta, &cap.dirichlet, &high, denom),
                theta_ratio: (ln_cap + beta * a.saddle as f64 / denom as f64 - theta.theta.ln()).exp(),
                mean_time: mean,
                arrhenius_ratio: (mean.ln() - beta * gs + theta.theta.ln()).exp(),
                solver: cap.info,
            });
        }

        let g = &self.partition.graph;
        let candidates = self.pair_candidates();
        let local: Vec<u32> = candidates.iter().map(|&s| g.local(s).unwrap()).collect();
        let (e, p) = (g.local(a.empty).unwrap(), g.local(a.plus).unwrap());
        let pair_ratio = betas
            .iter()
            .map(|&beta| {
                let mut r = metastable_pair_ratio(g, e, p, &local, beta, opts)?;
                if r.worst != u32::MAX {
                    r.worst = g.global(r.worst);
                }
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        let pair_decay = decay_rate(&pair_ratio.iter().map(|r| (r.beta, r.ratio())).collect::<Vec<_>>());
        let triviality = triviality_profile(&self.partition, a.empty, a.plus, betas, opts)?;
        let series = |f: fn(&TrivialityRow) -> f64| decay_rate(&triviality.iter().map(|t| (t.beta, f(t))).collect::<Vec<_>>());
        let triviality_decay = TrivialityDecay {
            empty_gap: series(|t| t.empty_gap),
            plus_max: series(|t| t.plus_max),
            well_oscillation: series(|t| t.well_oscillation),
        };
        Ok(CapacityReport {
            domain: info,
            apriori: ap,
            theta,
            rows,
            pair_candidates: candidates,
            pair_ratio,
            pair_decay,
            triviality,
            triviality_decay,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_by_three_is_degenerate() {
        assert!(Study::build(Geometry::new(3, 3).unwrap(), ModelParams::preset()).is_err());
    }

    #[test]
    fn four_by_three_report() {
        let s = Study::build(Geometry::new(4, 3).unwrap(), ModelParams::preset()).unwrap();
        let sum = s.summary();
        assert_eq!(sum.states, 531_441);
        assert_eq!(sum.plus_configuration, "0000/0120/0000");
        assert!(sum.component <= sum.x_star);
        let r = s.capacity_report(&[2.0], &SolverOptions::default()).unwrap();
        assert!(r.domain.whole);
        for row in &r.rows {
            assert!(row.relative_gap < 1e-10);
            assert!((row.ln_cap - row.ln_cap_upper).abs() < 1e-10);
            assert!(row.sandwich.holds);
        }
    }
}
