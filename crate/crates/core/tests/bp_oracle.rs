//! Checks of the sampled message passing against a dense exhaustive
//! posterior computed by an independent oracle.
//!
//! The oracle enumerates
//!   p(X_i | R) ~ p(X_i) * prod_j sum_{X_j} exp(-((r_j - ||C_i - C_j||) / h_j)^2) p(X_j)
//! over every cell of a small bounded grid. It shares no code with the
//! engine's sampling path.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use gridbp_core::belief::Belief;
use gridbp_core::bp::{BpParams, Kernel};
use gridbp_core::grid::{euclid, GridId, GridSpec, Point};
use gridbp_core::rng::stream;
use gridbp_core::sim::{
    init_beliefs, run_time_slot, NodeState, Role, RunStats, ScenarioConfig,
};
use rand::Rng;

/// Exhaustive single-node posterior over the support of `prior`.
fn dense_posterior(
    prior: &Belief,
    factors: &[(&Belief, f64, f64)], // (neighbor belief, measured range, kernel width)
    spec: &GridSpec,
) -> BTreeMap<GridId, f64> {
    let mut out = BTreeMap::new();
    let mut total = 0.0;
    for (xi, pv) in prior.iter() {
        let ci = spec.center_of(xi).unwrap().0;
        let mut w = pv;
        for (bj, r, h) in factors {
            let mut marg = 0.0;
            for (xj, pj) in bj.iter() {
                let cj = spec.center_of(xj).unwrap().0;
                let z = (r - euclid(ci, cj)) / h;
                marg += (-z * z).exp() * pj;
            }
            w *= marg;
        }
        total += w;
        out.insert(*xi, w);
    }
    for v in out.values_mut() {
        *v /= total;
    }
    out
}

fn dense_mode(posterior: &BTreeMap<GridId, f64>) -> GridId {
    let mut best: Option<(&GridId, f64)> = None;
    for (id, &v) in posterior {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((id, v)),
        }
    }
    *best.unwrap().0
}

fn bp_mode(b: &Belief, spec: &GridSpec) -> Point {
    gridbp_core::belief::point_estimate(b, spec).unwrap().0
}

/// Hand-assembled star scenario: one agent, delta-belief anchors, exact or
/// noisy ranges. Runs one full time slot and returns the agent belief.
struct Star {
    cfg: ScenarioConfig,
    spec: GridSpec,
    nodes: Vec<NodeState>,
}

fn build_star(
    arena: (f64, f64),
    anchor_positions: &[Point],
    agent_position: Point,
    bp: BpParams,
    seed: u64,
) -> Star {
    let cfg = ScenarioConfig {
        agents: 1,
        anchors: anchor_positions.len(),
        arena,
        max_range: arena.0 + arena.1, // fully connected
        noise_factor: 0.0,
        anchor_sigma: 0.0,
        seed,
        bp,
        ..ScenarioConfig::default()
    };
    let spec = cfg.grid_spec();
    let mut positions: Vec<Point> = anchor_positions.to_vec();
    positions.push(agent_position);
    let n = positions.len();
    let mut nodes: Vec<NodeState> = positions
        .iter()
        .enumerate()
        .map(|(id, &p)| NodeState {
            id,
            role: if id < anchor_positions.len() {
                Role::Anchor
            } else {
                Role::Agent
            },
            true_position: p,
            belief: Belief::delta(spec.id_of(p).unwrap()),
            neighbors: (0..n).filter(|&j| j != id).collect::<BTreeSet<_>>(),
        })
        .collect();
    init_beliefs(&mut nodes, &cfg, &spec, &mut stream(&[cfg.seed, 0x02])).unwrap();
    Star { cfg, spec, nodes }
}

impl Star {
    fn run(&mut self) -> &Belief {
        let mut stats = RunStats::default();
        run_time_slot(&mut self.nodes, &self.cfg, &self.spec, 0, &mut stats).unwrap();
        &self.nodes.last().unwrap().belief
    }

    fn dense(&self, h: f64) -> BTreeMap<GridId, f64> {
        let agent = self.nodes.last().unwrap();
        let prior = gridbp_core::sim::uniform_agent_belief(&self.cfg, &self.spec).unwrap();
        let factors: Vec<(&Belief, f64, f64)> = self
            .nodes
            .iter()
            .filter(|n| !n.is_agent())
            .map(|a| {
                (
                    &a.belief,
                    euclid(a.true_position, agent.true_position),
                    h,
                )
            })
            .collect();
        dense_posterior(&prior, &factors, &self.spec)
    }
}

/// A single anchor at exact range: the posterior concentrates on the
/// annulus of that radius around the anchor.
#[test]
fn single_anchor_concentrates_on_annulus() {
    let bp = BpParams {
        particles: 5000,
        kernel: Kernel::Fixed(0.25),
        filter_energy: 1.0,
        ..BpParams::default()
    };
    let anchor = [2.5, 2.5];
    let agent = [7.5, 2.5]; // range 5 exactly
    let mut star = build_star((20.0, 20.0), &[anchor], agent, bp, 401);
    let belief = star.run().clone();

    let r = 5.0;
    let mut annulus_mass = 0.0;
    for (id, v) in belief.iter() {
        let c = star.spec.center_of(id).unwrap().0;
        if (euclid(c, anchor) - r).abs() <= 2.0 {
            annulus_mass += v;
        }
    }
    assert!(
        annulus_mass >= 0.9,
        "annulus mass {annulus_mass} below 0.9"
    );

    // and the dense oracle agrees that the mode sits on the annulus
    let dense = star.dense(0.25);
    let mode_c = star.spec.center_of(&dense_mode(&dense)).unwrap().0;
    assert!((euclid(mode_c, anchor) - r).abs() <= 1.0);
}

/// Two anchors whose range circles intersect at exactly one in-arena cell:
/// both the sampled posterior and the dense posterior pick that cell.
#[test]
fn two_anchor_intersection_matches_dense_mode() {
    let bp = BpParams {
        particles: 5000,
        kernel: Kernel::Fixed(1.0),
        filter_energy: 1.0,
        ..BpParams::default()
    };
    let anchors = [[2.5, 0.5], [14.5, 0.5]];
    let agent = [8.5, 5.5]; // the mirror intersection lies below the arena
    let mut star = build_star((20.0, 20.0), &anchors, agent, bp, 402);
    let belief = star.run().clone();

    let dense = star.dense(1.0);
    let dense_c = star.spec.center_of(&dense_mode(&dense)).unwrap().0;
    assert!(euclid(dense_c, agent) <= 2.0f64.sqrt() + 1e-9, "oracle sanity");

    let got = bp_mode(&belief, &star.spec);
    assert!(
        euclid(got, dense_c) <= 2.0f64.sqrt() + 1e-9,
        "sampled mode {got:?} not within one cell of dense mode {dense_c:?}"
    );
}

/// Randomized three-anchor stars at exact ranges: the converged sampled MAP
/// must sit within one cell of the dense mode, and match it exactly in most
/// trials. A smaller-budget version of the full acceptance run.
#[test]
fn three_anchor_modes_match_dense() {
    let trials = 10;
    let mut exact = 0;
    for t in 0..trials {
        let mut rng = stream(&[500, t]);
        let side = 15.0;
        let mut place = || -> Point {
            [
                rng.random_range(0.0..side),
                rng.random_range(0.0..side),
            ]
        };
        let anchors = [place(), place(), place()];
        let agent = place();
        let bp = BpParams {
            particles: 5000,
            filter_energy: 1.0,
            ..BpParams::default()
        };
        let mut star = build_star((side, side), &anchors, agent, bp, 600 + t);
        let belief = star.run().clone();
        let dense = star.dense(1.0); // K_e = 0: kernel width floors at D
        let dense_c = star.spec.center_of(&dense_mode(&dense)).unwrap().0;
        let got = bp_mode(&belief, &star.spec);
        let dist = euclid(got, dense_c);
        assert!(
            dist <= 2.0f64.sqrt() + 1e-9,
            "trial {t}: mode {got:?} vs dense {dense_c:?}"
        );
        if dist < 1e-9 {
            exact += 1;
        }
    }
    assert!(exact * 10 >= trials * 7, "only {exact}/{trials} exact");
}
