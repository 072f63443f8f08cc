// dissect failing trials: is the dense mode missing from some sampled message support?
use std::collections::{BTreeMap, BTreeSet};
use gridbp_core::belief::{point_estimate, Belief};
use gridbp_core::bp::{gibbs_message, map_estimate, BpParams};
use gridbp_core::grid::{euclid, GridId, GridSpec, Point};
use gridbp_core::rng::stream;
use gridbp_core::sim::{init_beliefs, run_time_slot, NodeState, Role, RunStats, ScenarioConfig};
use rand::Rng;

fn dense_posterior(prior: &Belief, factors: &[(&Belief, f64, f64)], spec: &GridSpec) -> BTreeMap<GridId, f64> {
    let mut out = BTreeMap::new();
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
        out.insert(*xi, w);
    }
    out
}
fn dense_mode(p: &BTreeMap<GridId, f64>) -> GridId {
    let mut best: Option<(&GridId, f64)> = None;
    for (id, &v) in p { match best { Some((_, bv)) if v <= bv => {}, _ => best = Some((id, v)) } }
    *best.unwrap().0
}

fn main() {
    for t in [19u64, 44, 62, 80] {
        let side = 15.0;
        let mut rng = stream(&[7000, t]);
        let agent: Point = [rng.random_range(3.0..side-3.0), rng.random_range(3.0..side-3.0)];
        let anchors: Vec<Point> = (0..3).map(|_| [rng.random_range(0.0..side), rng.random_range(0.0..side)]).collect();
        let cfg = ScenarioConfig {
            agents: 1, anchors: 3, arena: (side, side), max_range: 1e3,
            noise_factor: 0.0, anchor_sigma: 0.0, seed: 9000 + t,
            bp: BpParams { particles: 10000, filter_energy: 1.0, ..BpParams::default() },
            ..ScenarioConfig::default()
        };
        let spec = cfg.grid_spec();
        let n = 4;
        let mut nodes: Vec<NodeState> = anchors.iter().chain([&agent]).enumerate().map(|(id, &p)| NodeState {
            id, role: if id < 3 { Role::Anchor } else { Role::Agent },
            true_position: p, belief: Belief::delta(spec.id_of(p).unwrap()),
            neighbors: (0..n).filter(|&j| j != id).collect::<BTreeSet<_>>(),
        }).collect();
        init_beliefs(&mut nodes, &cfg, &spec, &mut stream(&[cfg.seed, 0x02])).unwrap();
        let prior = gridbp_core::sim::uniform_agent_belief(&cfg, &spec).unwrap();
        let factors: Vec<(&Belief, f64, f64)> = nodes[..3].iter()
            .map(|a| (&a.belief, euclid(a.true_position, agent), 1.0)).collect();
        let dense = dense_posterior(&prior, &factors, &spec);
        let dm = dense_mode(&dense);
        let mut stats = RunStats::default();
        run_time_slot(&mut nodes, &cfg, &spec, 0, &mut stats).unwrap();
        let got = point_estimate(&nodes[3].belief, &spec).unwrap().0;
        println!("trial {t}: agent {agent:?} dense_mode {dm} bp_got {got:?}");
        println!("  bp theta@dense_mode {:?} bp theta@got {:?}",
            nodes[3].belief.get(&dm),
            nodes[3].belief.get(&spec.id_of(got).unwrap()));
        // one fresh sampled message per anchor: is the dense mode in support?
        for (k, a) in nodes[..3].iter().enumerate() {
            let r = euclid(a.true_position, agent);
            let s = gibbs_message(&a.belief, r, 1.0, 10000, &spec, &mut stream(&[123, t, k as u64]));
            let m = map_estimate(&s, 3, 1.0).unwrap();
            println!("  msg{k}: support {} theta@dense_mode {:?}", m.len(), m.get(&dm));
        }
    }
}
