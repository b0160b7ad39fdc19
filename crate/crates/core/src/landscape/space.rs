use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Landscape, Level};
use crate::error::{Error, Result};
use crate::lattice::{checkerboard, Configuration, EnergyScale, Geometry, ModelParams, MAX_SITES};

/// Which configuration plays the role of ⊞.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlusMode {
    /// Checkerboard on all of Λ.
    Strict,
    /// Checkerboard on Λ⁻ with ∂⁻Λ empty.
    #[default]
    Interior,
}

/// Every configuration of a box, indexed by its base-3 code, with its energy.
pub struct StateSpace {
    geom: Geometry,
    params: ModelParams,
    scale: EnergyScale,
    energy: Vec<Level>,
    pow3: [u32; MAX_SITES],
    boundary: Vec<(u32, usize)>,
    hops: Vec<(usize, usize)>,
}

impl StateSpace {
    /// Enumeration is refused above 2^32 states.
    pub const LIMIT: u128 = 1 << 32;

    pub fn new(geom: Geometry, params: ModelParams) -> Result<Self> {
        let states = geom.state_count();
        if states > Self::LIMIT {
            return Err(Error::TooLarge { sites: geom.len(), states, limit: Self::LIMIT });
        }
        let scale = params.scale();
        let n = geom.len();
        let worst = n as i64 * scale.delta2.max(scale.u) * 4;
        if worst > Level::MAX as i64 / 2 {
            return Err(Error::InvalidParams(
                "common denominator too large for 32-bit energy levels".into(),
            ));
        }
        let mut pow3 = [0u32; MAX_SITES];
        let mut p = 1u64;
        for slot in pow3.iter_mut().take(n) {
            *slot = p as u32;
            p *= 3;
        }
        let boundary = geom.inner_boundary().iter().map(|&i| (pow3[i], i)).collect();
        let hops = geom.hop_pairs().to_vec();

        let bonds = geom.interior_bonds().to_vec();
        let mut energy = vec![0 as Level; states as usize];
        const CHUNK: usize = 1 << 15;
        energy.par_chunks_mut(CHUNK).enumerate().for_each(|(k, chunk)| {
            let mut digits = [0u8; MAX_SITES];
            let mut code = k * CHUNK;
            for d in digits.iter_mut().take(n) {
                *d = (code % 3) as u8;
                code /= 3;
            }
            for e in chunk.iter_mut() {
                let (mut n1, mut n2) = (0i64, 0i64);
                for &d in &digits[..n] {
                    n1 += (d == 1) as i64;
                    n2 += (d == 2) as i64;
                }
                let b = bonds
                    .iter()
                    .filter(|&&(a, c)| digits[a] * digits[c] == 2)
                    .count() as i64;
                *e = scale.level(n1, n2, b) as Level;
                for d in digits.iter_mut().take(n) {
                    if *d == 2 {
                        *d = 0;
                    } else {
                        *d += 1;
                        break;
                    }
                }
            }
        });

        Ok(Self { geom, params, scale, energy, pow3, boundary, hops })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn scale(&self) -> &EnergyScale {
        &self.scale
    }

    pub fn levels(&self) -> &[Level] {
        &self.energy
    }

    pub fn config(&self, s: u32) -> Configuration {
        Configuration::from_code(s as u64, self.geom.len())
    }

    pub fn state(&self, c: Configuration) -> u32 {
        c.code(self.geom.len()) as u32
    }

    pub fn empty(&self) -> u32 {
        0
    }

    /// The checkerboard ⊞; type 1 takes the parity class with more sites,
    /// `(x + y)` even on ties.
    pub fn plus(&self, mode: PlusMode) -> u32 {
        let sites: Vec<usize> = match mode {
            PlusMode::Strict => (0..self.geom.len()).collect(),
            PlusMode::Interior => self.geom.interior().to_vec(),
        };
        let even = sites
            .iter()
            .filter(|&&i| {
                let (x, y) = self.geom.site(i);
                (x + y) % 2 == 0
            })
            .count();
        let parity = if even * 2 >= sites.len() { 0 } else { 1 };
        self.state(checkerboard(&self.geom, &sites, parity))
    }

    #[inline]
    fn digits(&self, mut s: u32) -> [u8; MAX_SITES] {
        let mut d = [0u8; MAX_SITES];
        for slot in d.iter_mut().take(self.geom.len()) {
            *slot = (s % 3) as u8;
            s /= 3;
        }
        d
    }
}

impl Landscape for StateSpace {
    fn num_states(&self) -> usize {
        self.energy.len()
    }

    #[inline]
    fn level(&self, s: u32) -> Level {
        self.energy[s as usize]
    }

    fn denom(&self) -> i64 {
        self.scale.denom
    }

    /// Same move order as [`crate::lattice::for_each_move`].
    #[inline]
    fn for_each_neighbor(&self, s: u32, mut f: impl FnMut(u32)) {
        let d = self.digits(s);
        for &(a, b) in &self.hops {
            let (va, vb) = (d[a] as u32, d[b] as u32);
            if va == 0 && vb != 0 {
                f(s + vb * self.pow3[a] - vb * self.pow3[b]);
            } else if vb == 0 && va != 0 {
                f(s + va * self.pow3[b] - va * self.pow3[a]);
            }
        }
        for &(p, i) in &self.boundary {
            match d[i] {
                0 => {
                    f(s + p);
                    f(s + 2 * p);
                }
                v => f(s - v as u32 * p),
            }
        }
    }
}
