//! Circular order of the critical orbit versus the rotation orbit.
//!
//! The semi-conjugacy to the rigid rotation preserves the cyclic order of
//! orbits, so sorting `f^i(c)` and `iρ mod 1` (both measured from their
//! base point) must give the same permutation.

use serde::Serialize;

use super::Lift;
use crate::cf::RotationTarget;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitCombinatorics {
    pub n: usize,
    /// Orbit indices `0..=n` sorted by position of `f^i(c)` counterclockwise
    /// from `c`.
    pub map_order: Vec<usize>,
    /// Orbit indices sorted by `iρ mod 1`.
    pub rotation_order: Vec<usize>,
}

impl OrbitCombinatorics {
    pub fn orders_match(&self) -> bool {
        self.map_order == self.rotation_order
    }
}

/// Sorts `keys` and returns the index permutation; two keys within `guard`
/// of each other make the order untrustworthy.
pub(crate) fn order_of<R: Real>(keys: &[R], guard: &R) -> Result<Vec<usize>> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]));
    for w in idx.windows(2) {
        if (keys[w[1]].clone() - &keys[w[0]]) <= *guard {
            return Err(Error::PrecisionInsufficient {
                prec: guard.prec(),
                detail: format!("orbit points {} and {} are not separated", w[0], w[1]),
            });
        }
    }
    Ok(idx)
}

pub fn orbit_combinatorics<R: Real>(lift: &Lift<R>, rho: &RotationTarget<R>, n: usize) -> Result<OrbitCombinatorics> {
    let guard = lift.guard();
    let (x0, _) = lift.reduce(lift.c());
    let mut keys = Vec::with_capacity(n + 1);
    keys.push(R::zero(lift.prec()));
    let mut y = x0;
    for _ in 1..=n {
        y = lift.step(&y).0;
        keys.push(lift.offset_from_crit(&y));
    }
    let map_order = order_of(&keys, &guard)?;
    let rot_keys: Vec<R> = (0..=n).map(|i| rho.orbit_point(i as i64)).collect();
    let rot_guard = R::pow2(16 - rho.prec() as i64, rho.prec());
    let rotation_order = order_of(&rot_keys, &rot_guard)?;
    Ok(OrbitCombinatorics {
        n,
        map_order,
        rotation_order,
    })
}
