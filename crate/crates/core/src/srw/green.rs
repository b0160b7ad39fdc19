use std::collections::BTreeSet;
use std::f64::consts::PI;

use faer::Mat;
use rustc_hash::FxHashMap;

use crate::lattice::Site;

/// Green's function of the unit-conductance Laplacian on `B_M = [−M, M]²`
/// with zero data on `∂⁺B_M`, diagonalised in the first coordinate.
#[derive(Clone, Debug)]
pub struct BoxGreen {
    m: i32,
    n: usize,
    /// `φ_j(i)` for `j, i ∈ 1..=n`, stored at `[j−1][i−1]`.
    modes: Vec<Vec<f64>>,
    alpha: Vec<f64>,
}

impl BoxGreen {
    pub fn new(m: i32) -> Self {
        assert!(m >= 0);
        let n = (2 * m + 1) as usize;
        let big = (n + 1) as f64;
        let norm = (2.0 / big).sqrt();
        let modes = (1..=n)
            .map(|j| (1..=n).map(|i| norm * (PI * (j * i) as f64 / big).sin()).collect())
            .collect();
        let alpha = (1..=n)
            .map(|j| (2.0 - (PI * j as f64 / big).cos()).acosh())
            .collect();
        Self { m, n, modes, alpha }
    }

    pub fn half_side(&self) -> i32 {
        self.m
    }

    fn index(&self, c: i32) -> Option<usize> {
        let i = c + self.m + 1;
        (i >= 1 && i <= self.n as i32).then_some(i as usize)
    }

    /// Inverse of the tridiagonal `2cosh α − shift` on `1..=n` at `(a, b)`.
    fn line(&self, alpha: f64, a: usize, b: usize) -> f64 {
        let (a, b) = (a.min(b) as f64, a.max(b) as f64);
        let big = (self.n + 1) as f64;
        let num = (-(b - a) * alpha).exp() * (-(-2.0 * a * alpha).exp_m1()) * (-(-2.0 * (big - b) * alpha).exp_m1());
        num / (2.0 * alpha.sinh() * -(-2.0 * big * alpha).exp_m1())
    }

    /// `G(x, y)`; zero when either site is outside `B_M`.
    pub fn value(&self, x: Site, y: Site) -> f64 {
        let (Some(x1), Some(x2), Some(y1), Some(y2)) = (self.index(x.0), self.index(x.1), self.index(y.0), self.index(y.1)) else {
            return 0.0;
        };
        (0..self.n)
            .map(|j| self.modes[j][x1 - 1] * self.modes[j][y1 - 1] * self.line(self.alpha[j], x2, y2))
            .sum()
    }

    /// `G(x, x + d)` for every `x ∈ B_M`, row-major in `(x1, x2)`.
    fn offset_table(&self, d: Site) -> Vec<f64> {
        let n = self.n;
        let a = Mat::<f64>::from_fn(n, n, |i, j| {
            let k = i as i32 + 1 + d.0;
            if k < 1 || k > n as i32 {
                0.0
            } else {
                self.modes[j][i] * self.modes[j][k as usize - 1]
            }
        });
        let b = Mat::<f64>::from_fn(n, n, |j, i| {
            let k = i as i32 + 1 + d.1;
            if k < 1 || k > n as i32 {
                0.0
            } else {
                self.line(self.alpha[j], i + 1, k as usize)
            }
        });
        let t = &a * &b;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                out.push(t[(i, k)]);
            }
        }
        out
    }
}

/// `G(x, y)` for all pairs at the given offsets, up to the symmetry `G(x, y) = G(y, x)`.
#[derive(Clone, Debug)]
pub struct GreenTable {
    m: i32,
    n: usize,
    tables: FxHashMap<Site, Vec<f64>>,
}

fn canonical(d: Site) -> (Site, bool) {
    if d.0 > 0 || (d.0 == 0 && d.1 >= 0) {
        (d, false)
    } else {
        ((-d.0, -d.1), true)
    }
}

impl GreenTable {
    pub fn new(green: &BoxGreen, offsets: impl IntoIterator<Item = Site>) -> Self {
        let wanted: BTreeSet<Site> = offsets.into_iter().map(|d| canonical(d).0).collect();
        let tables = wanted.into_iter().map(|d| (d, green.offset_table(d))).collect();
        Self { m: green.m, n: green.n, tables }
    }

    /// Panics when `y − x` was not tabulated.
    pub fn get(&self, x: Site, y: Site) -> f64 {
        let (d, flip) = canonical((y.0 - x.0, y.1 - x.1));
        let base = if flip { y } else { x };
        let (i, k) = (base.0 + self.m, base.1 + self.m);
        if i < 0 || k < 0 || i >= self.n as i32 || k >= self.n as i32 {
            return 0.0;
        }
        self.tables[&d][i as usize * self.n + k as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_by_three_origin() {
        // 8 unknowns around the origin: edge sites 2/3, corners 5/6, so CAP = 8/3
        let g = BoxGreen::new(1);
        assert!((g.value((0, 0), (0, 0)) - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn single_site_box() {
        let g = BoxGreen::new(0);
        assert!((g.value((0, 0), (0, 0)) - 0.25).abs() < 1e-15);
        assert_eq!(g.value((0, 0), (1, 0)), 0.0);
    }

    #[test]
    fn harmonic_off_diagonal() {
        let g = BoxGreen::new(4);
        let y = (1, -2);
        for x in [(0, 0), (3, 4), (-4, 1), (1, -2)] {
            let lap = 4.0 * g.value(x, y)
                - [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .map(|d| g.value((x.0 + d.0, x.1 + d.1), y))
                    .sum::<f64>();
            let delta = if x == y { 1.0 } else { 0.0 };
            assert!((lap - delta).abs() < 1e-13, "{x:?} {lap}");
        }
    }

    #[test]
    fn table_matches_direct_sum() {
        let g = BoxGreen::new(5);
        let t = GreenTable::new(&g, [(0, 0), (1, 2), (-2, 1)]);
        for x in [(0, 0), (-5, 5), (4, -3), (5, 5)] {
            for d in [(0, 0), (1, 2), (-1, -2), (-2, 1), (2, -1)] {
                let y = (x.0 + d.0, x.1 + d.1);
                assert!((t.get(x, y) - g.value(x, y)).abs() < 1e-14);
            }
        }
    }
}
