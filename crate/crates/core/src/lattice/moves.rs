use serde::{Deserialize, Serialize};

use super::config::{energy_level, Configuration};
use super::geometry::Geometry;
use super::params::{ModelParams, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Hop { from: usize, to: usize },
    Create { site: usize, kind: u8 },
    Annihilate { site: usize },
}

/// Calls `f` for every configuration one move away, in a fixed order:
/// hops over `geom.hop_pairs()`, then boundary creations and annihilations.
#[inline]
pub fn for_each_move(geom: &Geometry, c: Configuration, mut f: impl FnMut(Configuration, MoveKind)) {
    for &(a, b) in geom.hop_pairs() {
        let (va, vb) = (c.get(a), c.get(b));
        if va == 0 && vb != 0 {
            f(c.with(a, vb).with(b, 0), MoveKind::Hop { from: b, to: a });
        } else if vb == 0 && va != 0 {
            f(c.with(b, va).with(a, 0), MoveKind::Hop { from: a, to: b });
        }
    }
    for &i in geom.inner_boundary() {
        if c.get(i) == 0 {
            f(c.with(i, 1), MoveKind::Create { site: i, kind: 1 });
            f(c.with(i, 2), MoveKind::Create { site: i, kind: 2 });
        } else {
            f(c.with(i, 0), MoveKind::Annihilate { site: i });
        }
    }
}

pub fn neighbors(geom: &Geometry, c: Configuration) -> Result<Vec<(Configuration, MoveKind)>> {
    c.validate(geom.len())?;
    let mut out = Vec::new();
    for_each_move(geom, c, |d, m| out.push((d, m)));
    Ok(out)
}

/// A Metropolis rate together with its exponent `[ΔH]₊`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rate {
    pub value: f64,
    pub exponent: Rational,
}

pub fn communicate(geom: &Geometry, a: Configuration, b: Configuration) -> bool {
    let mut found = false;
    for_each_move(geom, a, |d, _| found |= d == b);
    found
}

pub fn rate(
    geom: &Geometry,
    params: &ModelParams,
    beta: f64,
    from: Configuration,
    to: Configuration,
) -> Result<Rate> {
    from.validate(geom.len())?;
    to.validate(geom.len())?;
    if !communicate(geom, from, to) {
        return Err(Error::NotNeighbors);
    }
    let s = params.scale();
    let dh = energy_level(geom, &s, to) - energy_level(geom, &s, from);
    let exponent = s.to_rational(dh.max(0));
    Ok(Rate {
        value: (-beta * s.to_f64(dh.max(0))).exp(),
        exponent,
    })
}

pub fn swap_types(c: Configuration) -> Configuration {
    c.swap_types()
}
