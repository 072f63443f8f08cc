//! Sparse multinomial beliefs over grid cells and the algebra Grid-BP
//! performs on them: products, damped mixtures, energy filtering,
//! convergence distances, and point estimates.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::grid::{CellCenter, GridId, GridSpec};

/// Normalization tolerance for a valid pmf.
pub const NORM_TOL: f64 = 1e-9;

/// Multiply-accumulate counters for the operations whose cost bounds the
/// algorithm. Product cost is the quantity compared against K(|N|+1).
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounters {
    pub product_ops: u64,
    pub damp_ops: u64,
}

/// A sparse multinomial pmf over grid-cell ids: every entry is strictly
/// positive and the entries sum to one within [`NORM_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    entries: BTreeMap<GridId, f64>,
}

impl Belief {
    /// Build a belief from unnormalized weights. Non-positive and non-finite
    /// weights are dropped; the rest are normalized.
    pub fn from_weights<I>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GridId, f64)>,
    {
        let mut entries = BTreeMap::new();
        for (id, w) in weights {
            if w.is_finite() && w > 0.0 {
                *entries.entry(id).or_insert(0.0) += w;
            }
        }
        if entries.is_empty() {
            return Err(Error::Degenerate("no positive mass".into()));
        }
        let mut b = Self { entries };
        b.normalize();
        Ok(b)
    }

    /// Point mass on a single cell.
    pub fn delta(id: GridId) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(id, 1.0);
        Self { entries }
    }

    /// Uniform pmf over the given cells.
    pub fn uniform<I>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = GridId>,
    {
        Self::from_weights(ids.into_iter().map(|id| (id, 1.0)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &GridId) -> Option<f64> {
        self.entries.get(id).copied()
    }

    /// Entries in canonical id order.
    pub fn iter(&self) -> impl Iterator<Item = (&GridId, f64)> {
        self.entries.iter().map(|(id, &v)| (id, v))
    }

    pub fn support(&self) -> impl Iterator<Item = &GridId> {
        self.entries.keys()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    fn min_value(&self) -> f64 {
        self.entries.values().copied().fold(f64::INFINITY, f64::min)
    }

    fn normalize(&mut self) {
        let total = self.total();
        debug_assert!(total > 0.0);
        for v in self.entries.values_mut() {
            *v /= total;
        }
    }

    /// Pointwise quotient against `divisor`, renormalized. Entries missing
    /// from the divisor are divided by its smallest present value. Falls
    /// back to `self` unchanged when the quotient carries no mass.
    pub fn cavity_divide(&self, divisor: &Belief) -> Belief {
        let floor = divisor.min_value();
        let weights = self
            .iter()
            .map(|(id, v)| (*id, v / divisor.get(id).unwrap_or(floor)));
        Belief::from_weights(weights).unwrap_or_else(|_| self.clone())
    }
}

/// Pointwise product of the prior and all messages over the intersection of
/// their supports, renormalized. When the intersection is empty the product
/// is taken over the union instead, with `smoothing` standing in for the
/// entries an operand lacks; it should sit at or below the smallest
/// probabilities the operands carry (the pseudocount mass of an unsampled
/// id), or absent entries would outweigh observed ones.
/// An empty message list returns the normalized prior unchanged.
pub fn belief_product(
    prior: &Belief,
    messages: &[&Belief],
    smoothing: f64,
    ops: &mut OpCounters,
) -> Belief {
    if messages.is_empty() {
        ops.product_ops += prior.len() as u64;
        let mut out = prior.clone();
        out.normalize();
        return out;
    }

    let mut weights: BTreeMap<GridId, f64> = BTreeMap::new();
    'outer: for (id, v) in prior.iter() {
        let mut w = v;
        for m in messages {
            match m.get(id) {
                Some(mv) => {
                    w *= mv;
                    ops.product_ops += 1;
                }
                None => continue 'outer,
            }
        }
        weights.insert(*id, w);
    }

    if let Ok(out) = Belief::from_weights(weights) {
        ops.product_ops += out.len() as u64;
        return out;
    }

    // Degenerate intersection: finite sampling can leave the operands with
    // disjoint supports. Fall back to the union, with absent entries
    // contributing a neutral factor.
    let mut union: BTreeSet<GridId> = prior.support().copied().collect();
    for m in messages {
        union.extend(m.support().copied());
    }
    let weights = union.into_iter().map(|id| {
        let mut w = prior.get(&id).unwrap_or(smoothing);
        for m in messages {
            w *= m.get(&id).unwrap_or(smoothing);
            ops.product_ops += 1;
        }
        (id, w)
    });
    let out = Belief::from_weights(weights.collect::<Vec<_>>())
        .expect("union product retains mass");
    ops.product_ops += out.len() as u64;
    out
}

/// Convex mixture `lambda * product + (1 - lambda) * old` over the union
/// support. The endpoints are exact: 0 returns `old`, 1 returns `product`.
pub fn damped_update(old: &Belief, product: &Belief, lambda: f64, ops: &mut OpCounters) -> Belief {
    debug_assert!((0.0..=1.0).contains(&lambda));
    if lambda == 0.0 {
        return old.clone();
    }
    if lambda == 1.0 {
        return product.clone();
    }
    let mut union: BTreeSet<GridId> = old.support().copied().collect();
    union.extend(product.support().copied());
    let weights: Vec<(GridId, f64)> = union
        .into_iter()
        .map(|id| {
            ops.damp_ops += 2;
            let w = lambda * product.get(&id).unwrap_or(0.0)
                + (1.0 - lambda) * old.get(&id).unwrap_or(0.0);
            (id, w)
        })
        .collect();
    let out = Belief::from_weights(weights).expect("mixture of pmfs retains mass");
    ops.damp_ops += out.len() as u64;
    out
}

/// Keep the most probable entries whose cumulative mass reaches `energy`,
/// then renormalize. Ties sort by canonical id order. `energy >= 1` is the
/// identity.
pub fn filter_belief(b: &Belief, energy: f64) -> Belief {
    debug_assert!(energy > 0.0);
    if energy >= 1.0 || b.len() <= 1 {
        return b.clone();
    }
    let mut entries: Vec<(GridId, f64)> = b.iter().map(|(id, v)| (*id, v)).collect();
    entries.sort_by(|(ida, va), (idb, vb)| {
        vb.partial_cmp(va).unwrap().then_with(|| ida.cmp(idb))
    });
    let mut kept = Vec::with_capacity(entries.len());
    let mut cum = 0.0;
    for (id, v) in entries {
        kept.push((id, v));
        cum += v;
        if cum >= energy - 1e-12 {
            break;
        }
    }
    Belief::from_weights(kept).expect("retained mass is positive")
}

/// Total variation distance over the union support, absent entries read
/// as zero.
pub fn total_variation(a: &Belief, b: &Belief) -> f64 {
    let mut union: BTreeSet<&GridId> = a.support().collect();
    union.extend(b.support());
    0.5 * union
        .into_iter()
        .map(|id| (a.get(id).unwrap_or(0.0) - b.get(id).unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Convergence test: total variation below `eps`.
pub fn has_converged(prev: &Belief, next: &Belief, eps: f64) -> bool {
    total_variation(prev, next) < eps
}

/// Center of the maximum-probability cell; ties resolve to the canonically
/// smaller id.
pub fn point_estimate(b: &Belief, spec: &GridSpec) -> Result<CellCenter> {
    let mut best: Option<(&GridId, f64)> = None;
    for (id, v) in b.iter() {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((id, v)),
        }
    }
    let (id, _) = best.ok_or_else(|| Error::Degenerate("empty belief".into()))?;
    spec.center_of(id)
}

/// All in-extent cells whose centers lie within `r_grid` of any support
/// center of `b`.
pub fn candidate_window(b: &Belief, r_grid: f64, spec: &GridSpec) -> Result<BTreeSet<GridId>> {
    debug_assert!(r_grid >= 0.0);
    let d = spec.cell_size();
    let rc = (r_grid / d).floor() as i64;
    let mut out = BTreeSet::new();
    for id in b.support() {
        let (h_bounds, v_bounds) = spec.offset_bounds(id)?;
        let clamp = |bounds: Option<(i64, i64)>| match bounds {
            Some((lo, hi)) => (lo.max(-rc), hi.min(rc)),
            None => (-rc, rc),
        };
        let (h_lo, h_hi) = clamp(h_bounds);
        let (v_lo, v_hi) = clamp(v_bounds);
        for dh in h_lo..=h_hi {
            for dv in v_lo..=v_hi {
                // centers of offset cells sit exactly (dh*D, dv*D) apart
                if d * ((dh * dh + dv * dv) as f64).sqrt() <= r_grid {
                    if let Ok(cand) = spec.offset_id(id, dh, dv) {
                        out.insert(cand);
                    }
                }
            }
        }
    }
    Ok(out)
}
