use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer lattice coordinate.
pub type Site = (i32, i32);

/// Largest box that still packs into one `u64` at two bits per site.
pub const MAX_SITES: usize = 32;

/// Rectangular box Λ with its boundary strata and bond sets.
///
/// Sites are numbered row-major: index `y * width + x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    width: usize,
    height: usize,
    sites: Vec<Site>,
    inner_boundary: Vec<usize>,
    interior: Vec<usize>,
    outer_boundary: Vec<Site>,
    interior_bonds: Vec<(usize, usize)>,
    hop_pairs: Vec<(usize, usize)>,
    entry_edges: Vec<(usize, Site)>,
    in_interior: Vec<bool>,
}

const DIRS: [(i32, i32); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

impl Geometry {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGeometry("box sides must be positive".into()));
        }
        if width * height > MAX_SITES {
            return Err(Error::InvalidGeometry(format!(
                "{width}x{height} has more than {MAX_SITES} sites"
            )));
        }
        let n = width * height;
        let sites: Vec<Site> = (0..n)
            .map(|i| ((i % width) as i32, (i / width) as i32))
            .collect();
        let contains = |(x, y): Site| x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height;
        let index = |(x, y): Site| y as usize * width + x as usize;

        let mut inner_boundary = Vec::new();
        let mut interior = Vec::new();
        let mut in_interior = vec![false; n];
        let mut entry_edges = Vec::new();
        for (i, &(x, y)) in sites.iter().enumerate() {
            let outside = DIRS
                .iter()
                .map(|&(dx, dy)| (x + dx, y + dy))
                .find(|&s| !contains(s));
            match outside {
                Some(o) => {
                    inner_boundary.push(i);
                    entry_edges.push((i, o));
                }
                None => {
                    interior.push(i);
                    in_interior[i] = true;
                }
            }
        }

        let mut outer_boundary = Vec::new();
        for y in -1..=height as i32 {
            for x in -1..=width as i32 {
                let s = (x, y);
                if contains(s) {
                    continue;
                }
                if DIRS.iter().any(|&(dx, dy)| contains((x + dx, y + dy))) {
                    outer_boundary.push(s);
                }
            }
        }

        let mut hop_pairs = Vec::new();
        for (i, &(x, y)) in sites.iter().enumerate() {
            for s in [(x + 1, y), (x, y + 1)] {
                if contains(s) {
                    hop_pairs.push((i, index(s)));
                }
            }
        }
        let interior_bonds = hop_pairs
            .iter()
            .copied()
            .filter(|&(a, b)| in_interior[a] && in_interior[b])
            .collect();

        Ok(Self {
            width,
            height,
            sites,
            inner_boundary,
            interior,
            outer_boundary,
            interior_bonds,
            hop_pairs,
            entry_edges,
            in_interior,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Site {
        self.sites[i]
    }

    pub fn index_of(&self, (x, y): Site) -> Option<usize> {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            Some(y as usize * self.width + x as usize)
        } else {
            None
        }
    }

    /// ∂⁻Λ as site indices.
    pub fn inner_boundary(&self) -> &[usize] {
        &self.inner_boundary
    }

    /// Λ⁻ as site indices.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// ∂⁺Λ as coordinates outside the box.
    pub fn outer_boundary(&self) -> &[Site] {
        &self.outer_boundary
    }

    /// Nearest-neighbour pairs with both ends in Λ⁻.
    pub fn interior_bonds(&self) -> &[(usize, usize)] {
        &self.interior_bonds
    }

    /// All nearest-neighbour pairs in Λ, `a < b`.
    pub fn hop_pairs(&self) -> &[(usize, usize)] {
        &self.hop_pairs
    }

    /// One edge per ∂⁻Λ site toward ∂⁺Λ.
    pub fn entry_edges(&self) -> &[(usize, Site)] {
        &self.entry_edges
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.in_interior[i]
    }

    pub fn is_inner_boundary(&self, i: usize) -> bool {
        !self.in_interior[i]
    }

    /// Nearest neighbours of site `i` inside Λ.
    pub fn site_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.sites[i];
        DIRS.iter()
            .filter_map(move |&(dx, dy)| self.index_of((x + dx, y + dy)))
    }

    /// Number of configurations, 3^|Λ|.
    pub fn state_count(&self) -> u128 {
        3u128.pow(self.len() as u32)
    }
}

/// Nearest neighbours of a coordinate in ℤ².
pub fn lattice_neighbors((x, y): Site) -> [Site; 4] {
    DIRS.map(|(dx, dy)| (x + dx, y + dy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strata_of_4x3() {
        let g = Geometry::new(4, 3).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.interior(), &[5, 6]);
        assert_eq!(g.inner_boundary().len(), 10);
        assert_eq!(g.interior_bonds(), &[(5, 6)]);
        assert_eq!(g.outer_boundary().len(), 2 * 4 + 2 * 3);
        assert_eq!(g.hop_pairs().len(), 3 * 3 + 4 * 2);
    }

    #[test]
    fn one_entry_edge_per_boundary_site() {
        let g = Geometry::new(4, 4).unwrap();
        assert_eq!(g.entry_edges().len(), g.inner_boundary().len());
        for &(i, o) in g.entry_edges() {
            assert!(g.is_inner_boundary(i));
            assert!(g.index_of(o).is_none());
            let (x, y) = g.site(i);
            assert_eq!((x - o.0).abs() + (y - o.1).abs(), 1);
        }
    }

    #[test]
    fn strata_recomputable_from_sites() {
        for (w, h) in [(1, 1), (3, 3), (4, 3), (5, 2), (4, 4)] {
            let g = Geometry::new(w, h).unwrap();
            for i in 0..g.len() {
                let outside = lattice_neighbors(g.site(i))
                    .iter()
                    .any(|&s| g.index_of(s).is_none());
                assert_eq!(outside, g.is_inner_boundary(i));
            }
            for &s in g.outer_boundary() {
                assert!(g.index_of(s).is_none());
                assert!(lattice_neighbors(s).iter().any(|&t| g.index_of(t).is_some()));
            }
        }
    }

    #[test]
    fn rejects_oversized_box() {
        assert!(Geometry::new(6, 6).is_err());
        assert!(Geometry::new(0, 3).is_err());
    }
}
