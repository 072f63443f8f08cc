//! Grid-BP message passing: pairwise ranging likelihood, Gibbs-sampled
//! marginalization, Dirichlet-multinomial MAP parametrization, and the
//! per-node round that combines incoming messages into an updated belief.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Uniform;
use rand::Rng;
use rand_distr::Normal;

use crate::belief::{belief_product, damped_update, filter_belief, Belief, OpCounters};
use crate::error::{Error, Result};
use crate::grid::{GridId, GridSpec};

/// Attempt budget multiplier when displacement samples land off-grid.
const REJECT_BUDGET: usize = 16;

/// Kernel width used for both the ranging likelihood and the Gibbs range
/// draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// Per-measurement width `max(D, sqrt(noise_factor) * r)`, tying the
    /// kernel to the distance-proportional ranging noise.
    Scaled { noise_factor: f64 },
    /// Fixed width in meters.
    Fixed(f64),
}

impl Kernel {
    pub fn width(&self, range_m: f64, cell_size: f64) -> f64 {
        match *self {
            Kernel::Scaled { noise_factor } => {
                cell_size.max(noise_factor.max(0.0).sqrt() * range_m)
            }
            Kernel::Fixed(h) => h,
        }
    }
}

/// Tunables of the message-passing engine.
#[derive(Debug, Clone, PartialEq)]
pub struct BpParams {
    /// Particles drawn per incoming message (L).
    pub particles: usize,
    pub kernel: Kernel,
    /// Damping factor in [0, 1]; 1 disables damping.
    pub damping: f64,
    /// Dirichlet concentration per id for the MAP parameter estimate, also
    /// the neutral factor for disjoint-support products.
    pub alpha: f64,
    /// Maximum BP iterations per time slot (I_max).
    pub max_iterations: usize,
    /// Convergence threshold on total variation between successive beliefs.
    pub convergence_tol: f64,
    /// Retained pmf mass when filtering beliefs before broadcast.
    pub filter_energy: f64,
    /// Candidate window radius in meters (R_grid).
    pub grid_window: f64,
    /// Send cavity messages (belief divided by the message formed from the
    /// recipient). When false, nodes broadcast their belief unmodified.
    pub cavity: bool,
}

impl Default for BpParams {
    fn default() -> Self {
        Self {
            particles: 200,
            kernel: Kernel::Scaled { noise_factor: 0.0 },
            damping: 0.5,
            alpha: 1.0,
            max_iterations: 15,
            convergence_tol: 1e-3,
            filter_energy: 0.8,
            grid_window: 100.0,
            cavity: true,
        }
    }
}

impl BpParams {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::Config("particles must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.damping) {
            return Err(Error::Config("damping must be in [0, 1]".into()));
        }
        if self.alpha <= 0.0 {
            return Err(Error::Config("alpha must be > 0".into()));
        }
        if !(self.filter_energy > 0.0 && self.filter_energy <= 1.0) {
            return Err(Error::Config("filter_energy must be in (0, 1]".into()));
        }
        if self.grid_window < 0.0 {
            return Err(Error::Config("grid_window must be >= 0".into()));
        }
        if let Kernel::Fixed(h) = self.kernel {
            if h <= 0.0 {
                return Err(Error::Config("kernel width must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// A noisy ToA range between a node pair at one time slot; symmetric by
/// assumption, so one value serves both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeMeasurement {
    pub a: usize,
    pub b: usize,
    pub range_m: f64,
    pub time_slot: usize,
}

/// A belief about the recipient's cell, exchanged between neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub iteration: usize,
    pub belief: Belief,
}

/// Displacement samples accumulated for one target variable: per-id sample
/// mass M_k plus the number of draws it came from. Mass is fractional
/// because polar draws carry an importance weight (see [`gibbs_message`]);
/// plain [`add`](SampleSet::add) contributes unit mass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    counts: BTreeMap<GridId, f64>,
    mass: f64,
    draws: u64,
}

impl SampleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, id: GridId) {
        self.add_weighted(id, 1.0);
    }

    pub fn add_weighted(&mut self, id: GridId, weight: f64) {
        *self.counts.entry(id).or_insert(0.0) += weight;
        self.mass += weight;
        self.draws += 1;
    }

    pub fn merge(&mut self, other: &SampleSet) {
        for (id, w) in &other.counts {
            *self.counts.entry(*id).or_insert(0.0) += w;
        }
        self.mass += other.mass;
        self.draws += other.draws;
    }

    /// Sample mass per id (M_k).
    pub fn counts(&self) -> &BTreeMap<GridId, f64> {
        &self.counts
    }

    /// Total accumulated mass.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Number of draws that produced this set.
    pub fn total(&self) -> u64 {
        self.draws
    }

    pub fn is_empty(&self) -> bool {
        self.draws == 0
    }
}

/// Unnormalized ranging likelihood `exp(-((r - ||C_i - C_j||) / h)^2)`:
/// maximal when the measured range equals the inter-center distance.
pub fn pairwise_likelihood(
    x_i: &GridId,
    x_j: &GridId,
    range_m: f64,
    h: f64,
    spec: &GridSpec,
) -> Result<f64> {
    debug_assert!(h > 0.0);
    let ci = spec.center_of(x_i)?;
    let cj = spec.center_of(x_j)?;
    let z = (range_m - ci.dist(&cj)) / h;
    Ok((-z * z).exp())
}

/// Cell steps east and north for a polar displacement, truncated toward
/// zero: `int((r_hat / D) * (cos phi, sin phi))`.
pub fn displacement_steps(r_hat: f64, phi: f64, cell_size: f64) -> (i64, i64) {
    let scale = r_hat / cell_size;
    ((scale * phi.cos()).trunc() as i64, (scale * phi.sin()).trunc() as i64)
}

/// Map a sampled source cell plus a polar range draw to the target cell.
pub fn map_dm_to_id(x_j: &GridId, r_hat: f64, phi: f64, spec: &GridSpec) -> Result<GridId> {
    debug_assert!(r_hat >= 0.0);
    let (d_h, d_v) = displacement_steps(r_hat, phi, spec.cell_size());
    spec.offset_id(x_j, d_h, d_v)
}

/// One polar displacement draw: an angle uniform on [0, 2pi) and a range
/// from Normal(r, h), negative draws clamped to zero.
pub fn draw_polar(range_m: f64, h: f64, rng: &mut impl Rng) -> (f64, f64) {
    let angle = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
    let range = Normal::new(range_m, h).expect("kernel width is finite");
    let phi = rng.sample(angle);
    let r_hat = rng.sample(range).max(0.0);
    (r_hat, phi)
}

/// Draw `particles` displacement samples for one incoming message: source
/// cells from the sender's belief, angles uniform on [0, 2pi), ranges from
/// Normal(r, h) clamped at zero. Draws that leave the grid extent are
/// rejected and redrawn within a fixed attempt budget, so the result may
/// hold fewer than `particles` samples on a bounded grid (possibly none).
///
/// A cell-valued pmf pins the source down to a cell, not a point, so each
/// draw also picks a sub-cell source position. Folding that jitter through
/// the truncation makes the displacement `floor(u + U[0,1))` per axis,
/// whose expectation is exactly `u`; displacing from cell centers alone
/// would bias every sample about half a cell toward the source.
///
/// Each accepted sample carries importance weight `r_hat`: uniform-angle
/// polar draws put mass per unit area proportional to `1/r_hat`, while the
/// ranging factor it must approximate has no such falloff, and without the
/// correction the product's mode drifts toward the sender.
pub fn gibbs_message(
    parent: &Belief,
    range_m: f64,
    h: f64,
    particles: usize,
    spec: &GridSpec,
    rng: &mut impl Rng,
) -> SampleSet {
    debug_assert!(range_m >= 0.0);
    let ids: Vec<&GridId> = parent.support().collect();
    let weights: Vec<f64> = parent.iter().map(|(_, v)| v).collect();
    let source = WeightedIndex::new(&weights).expect("belief weights are positive");
    let cell = spec.cell_size();

    let mut out = SampleSet::new();
    let budget = particles.saturating_mul(REJECT_BUDGET);
    let mut attempts = 0;
    while out.total() < particles as u64 && attempts < budget {
        attempts += 1;
        let x_j = ids[rng.sample(&source)];
        let (r_hat, phi) = draw_polar(range_m, h, rng);
        let scale = r_hat / cell;
        let d_h = (scale * phi.cos() + rng.random::<f64>()).floor() as i64;
        let d_v = (scale * phi.sin() + rng.random::<f64>()).floor() as i64;
        if let Ok(id) = spec.offset_id(x_j, d_h, d_v) {
            let z = (range_m - r_hat) / h;
            let w = r_hat.max(f64::MIN_POSITIVE) * (-0.5 * z * z).exp();
            out.add_weighted(id, w.max(f64::MIN_POSITIVE));
        }
    }
    out
}

/// Dirichlet-multinomial MAP estimate over the sampled ids:
/// `(M_k + n * alpha) / (n * sum_k (M_k + alpha))`, renormalized exactly so
/// the result is a pmf.
pub fn map_estimate(samples: &SampleSet, neighbor_count: usize, alpha: f64) -> Result<Belief> {
    if samples.is_empty() {
        return Err(Error::Degenerate("empty sample set".into()));
    }
    debug_assert!(neighbor_count >= 1);
    let n = neighbor_count.max(1) as f64;
    let k = samples.counts().len() as f64;
    let denom = n * (samples.mass() + k * alpha);
    Belief::from_weights(
        samples
            .counts()
            .iter()
            .map(|(id, &m)| (*id, (m + n * alpha) / denom)),
    )
}

/// One synchronous BP round for an agent: form a message estimate per
/// inbox entry, combine them with the slot prior, damp against the current
/// belief, filter, and address one outgoing message per sender.
///
/// An empty inbox returns the current belief unchanged and sends nothing.
#[allow(clippy::too_many_arguments)]
pub fn bp_round(
    node_id: usize,
    belief: &Belief,
    slot_prior: &Belief,
    inbox: &[(&Message, &RangeMeasurement)],
    params: &BpParams,
    spec: &GridSpec,
    rng: &mut impl Rng,
    ops: &mut OpCounters,
) -> (Belief, Vec<Message>) {
    if inbox.is_empty() {
        return (belief.clone(), Vec::new());
    }
    let iteration = inbox[0].0.iteration + 1;
    let neighbor_count = inbox.len();

    let mut estimates: BTreeMap<usize, Belief> = BTreeMap::new();
    for (msg, meas) in inbox {
        let h = params.kernel.width(meas.range_m, spec.cell_size());
        let samples = gibbs_message(&msg.belief, meas.range_m, h, params.particles, spec, rng);
        if samples.is_empty() {
            continue;
        }
        let mu = map_estimate(&samples, neighbor_count, params.alpha)
            .expect("non-empty sample set");
        estimates.insert(msg.from, mu);
    }

    // stand-in mass for ids absent from an operand when supports end up
    // disjoint: the alpha-pseudocount value of an unsampled id
    let smoothing = params.alpha / (params.particles as f64 + params.alpha);
    let messages: Vec<&Belief> = estimates.values().collect();
    let product = belief_product(slot_prior, &messages, smoothing, ops);
    let updated = damped_update(belief, &product, params.damping, ops);
    let filtered = filter_belief(&updated, params.filter_energy);

    let outgoing = inbox
        .iter()
        .map(|(msg, _)| {
            let content = match estimates.get(&msg.from) {
                Some(mu) if params.cavity => filtered.cavity_divide(mu),
                _ => filtered.clone(),
            };
            Message {
                from: node_id,
                to: msg.from,
                iteration,
                belief: content,
            }
        })
        .collect();

    (filtered, outgoing)
}
