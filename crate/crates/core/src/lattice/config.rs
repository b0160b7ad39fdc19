use serde::{Deserialize, Serialize};

use super::geometry::Geometry;
use super::params::{EnergyScale, ModelParams, Rational};
use crate::error::{Error, Result};

/// Occupancy of every site, two bits per site in row-major order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub u64);

impl Configuration {
    pub const EMPTY: Configuration = Configuration(0);

    #[inline]
    pub fn get(self, site: usize) -> u8 {
        ((self.0 >> (2 * site)) & 3) as u8
    }

    #[inline]
    pub fn with(self, site: usize, value: u8) -> Self {
        debug_assert!(value <= 2);
        let shift = 2 * site;
        Configuration((self.0 & !(3u64 << shift)) | ((value as u64) << shift))
    }

    pub fn from_values(values: &[u8]) -> Self {
        values
            .iter()
            .enumerate()
            .fold(Self::EMPTY, |c, (i, &v)| c.with(i, v))
    }

    pub fn values(self, sites: usize) -> Vec<u8> {
        (0..sites).map(|i| self.get(i)).collect()
    }

    /// Checks that every cell is 0, 1 or 2 and nothing lies beyond `sites`.
    pub fn validate(self, sites: usize) -> Result<()> {
        if sites < 32 && self.0 >> (2 * sites) != 0 {
            return Err(Error::SizeMismatch { sites });
        }
        if (0..sites).any(|i| self.get(i) == 3) {
            return Err(Error::SizeMismatch { sites });
        }
        Ok(())
    }

    /// Base-3 code `Σ η(i)·3^i`.
    pub fn code(self, sites: usize) -> u64 {
        (0..sites).rev().fold(0u64, |acc, i| acc * 3 + self.get(i) as u64)
    }

    pub fn from_code(mut code: u64, sites: usize) -> Self {
        let mut c = Self::EMPTY;
        for i in 0..sites {
            c = c.with(i, (code % 3) as u8);
            code /= 3;
        }
        c
    }

    /// Interchanges the particle types.
    pub fn swap_types(self) -> Self {
        let ones = self.0 & 0x5555_5555_5555_5555;
        let twos = self.0 & 0xAAAA_AAAA_AAAA_AAAA;
        Configuration((ones << 1) | (twos >> 1))
    }

    pub fn count(self, sites: usize, kind: u8) -> usize {
        (0..sites).filter(|&i| self.get(i) == kind).count()
    }
}

/// Particle counts, active bonds, droplets and energy of one configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observables {
    pub n1: usize,
    pub n2: usize,
    pub active_bonds: usize,
    pub droplets: Vec<Vec<usize>>,
    #[serde(with = "super::params::rational_text")]
    pub energy: Rational,
}

/// Number of interior bonds joining a type-1 and a type-2 particle.
pub fn active_bonds(geom: &Geometry, c: Configuration) -> usize {
    geom.interior_bonds()
        .iter()
        .filter(|&&(a, b)| c.get(a) * c.get(b) == 2)
        .count()
}

/// Energy in units of `1/scale.denom`.
pub fn energy_level(geom: &Geometry, scale: &EnergyScale, c: Configuration) -> i64 {
    let n = geom.len();
    scale.level(
        c.count(n, 1) as i64,
        c.count(n, 2) as i64,
        active_bonds(geom, c) as i64,
    )
}

pub fn hamiltonian(geom: &Geometry, params: &ModelParams, c: Configuration) -> Result<Rational> {
    c.validate(geom.len())?;
    let s = params.scale();
    Ok(s.to_rational(energy_level(geom, &s, c)))
}

/// Maximal sets of particles joined by active bonds, each sorted, ordered by smallest site.
pub fn droplets(geom: &Geometry, c: Configuration) -> Vec<Vec<usize>> {
    let n = geom.len();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if c.get(start) == 0 || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        label[start] = id;
        let mut k = 0;
        while k < members.len() {
            let a = members[k];
            k += 1;
            if !geom.is_interior(a) {
                continue;
            }
            for b in geom.site_neighbors(a) {
                if geom.is_interior(b) && label[b] == usize::MAX && c.get(a) * c.get(b) == 2 {
                    label[b] = id;
                    members.push(b);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

pub fn observables(geom: &Geometry, params: &ModelParams, c: Configuration) -> Result<Observables> {
    c.validate(geom.len())?;
    let n = geom.len();
    Ok(Observables {
        n1: c.count(n, 1),
        n2: c.count(n, 2),
        active_bonds: active_bonds(geom, c),
        droplets: droplets(geom, c),
        energy: hamiltonian(geom, params, c)?,
    })
}

/// Checkerboard on the given sites; type 1 where `(x + y) % 2 == parity`.
pub fn checkerboard(geom: &Geometry, sites: &[usize], parity: i32) -> Configuration {
    sites.iter().fold(Configuration::EMPTY, |c, &i| {
        let (x, y) = geom.site(i);
        c.with(i, if (x + y).rem_euclid(2) == parity { 1 } else { 2 })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_round_trip() {
        let g = Geometry::new(4, 3).unwrap();
        for code in [0u64, 1, 2, 3, 12345, 531_440] {
            let c = Configuration::from_code(code, g.len());
            assert_eq!(c.code(g.len()), code);
            c.validate(g.len()).unwrap();
        }
    }

    #[test]
    fn swap_is_involution() {
        let c = Configuration::from_values(&[0, 1, 2, 2, 1, 0]);
        assert_eq!(c.swap_types().values(6), vec![0, 2, 1, 1, 2, 0]);
        assert_eq!(c.swap_types().swap_types(), c);
    }

    #[test]
    fn validation() {
        assert!(Configuration(3).validate(4).is_err());
        assert!(Configuration(1 << 8).validate(4).is_err());
        assert!(Configuration(1 << 6).validate(4).is_ok());
    }

    #[test]
    fn empty_box_has_zero_energy() {
        let g = Geometry::new(4, 3).unwrap();
        let p = ModelParams::preset();
        assert_eq!(hamiltonian(&g, &p, Configuration::EMPTY).unwrap(), Rational::from_integer(0));
    }

    #[test]
    fn single_particle_costs_activation_energy() {
        let g = Geometry::new(4, 4).unwrap();
        let p = ModelParams::preset();
        for i in 0..g.len() {
            let c = Configuration::EMPTY.with(i, 1);
            assert_eq!(hamiltonian(&g, &p, c).unwrap(), p.delta1);
            let c = Configuration::EMPTY.with(i, 2);
            assert_eq!(hamiltonian(&g, &p, c).unwrap(), p.delta2);
        }
    }

    #[test]
    fn boundary_particles_do_not_bind() {
        let g = Geometry::new(4, 3).unwrap();
        let p = ModelParams::preset();
        // site 4 = (0,1) on the boundary, site 5 = (1,1) interior
        let c = Configuration::EMPTY.with(4, 1).with(5, 2);
        assert_eq!(hamiltonian(&g, &p, c).unwrap(), p.delta1 + p.delta2);
        assert_eq!(droplets(&g, c), vec![vec![4], vec![5]]);
    }

    #[test]
    fn interior_checkerboard_2x2() {
        let g = Geometry::new(4, 4).unwrap();
        let p = ModelParams::parse("1", "1/2", "1").unwrap();
        let c = checkerboard(&g, g.interior(), 0);
        let obs = observables(&g, &p, c).unwrap();
        assert_eq!((obs.n1, obs.n2, obs.active_bonds), (2, 2, 4));
        assert_eq!(obs.energy, Rational::from_integer(-1));
        assert_eq!(obs.droplets.len(), 1);
    }
}
